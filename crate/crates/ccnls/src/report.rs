//! Report containers shared by the estimate experiments and studies, plus
//! their CSV emission.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Least-squares line in log-log coordinates.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RateFit {
    /// The fitted `(log x, log y)` points.
    pub points: Vec<(f64, f64)>,
    pub slope: f64,
    pub intercept: f64,
    /// Root-mean-square residual of the fit.
    pub residual: f64,
    /// Half-width of the two-sigma confidence band on the slope.
    pub ci: f64,
}

/// Least-squares fit of `log y` against `log x`; needs at least 4 points.
pub fn rate_fit(xs: &[f64], ys: &[f64]) -> Result<RateFit> {
    if xs.len() != ys.len() || xs.len() < 4 {
        return Err(Error::Parameter(format!(
            "rate fit needs at least 4 matched points, got {}",
            xs.len().min(ys.len())
        )));
    }
    let points: Vec<(f64, f64)> = xs
        .iter()
        .zip(ys)
        .map(|(&x, &y)| {
            if !(x > 0.0) || !(y >= 0.0) {
                return Err(Error::Parameter(
                    "rate fit needs positive abscissae and nonnegative values".into(),
                ));
            }
            Ok((x.ln(), y.max(1e-300).ln()))
        })
        .collect::<Result<_>>()?;
    let n = points.len() as f64;
    let mx = points.iter().map(|p| p.0).sum::<f64>() / n;
    let my = points.iter().map(|p| p.1).sum::<f64>() / n;
    let sxx: f64 = points.iter().map(|p| (p.0 - mx).powi(2)).sum();
    if sxx < 1e-24 {
        return Err(Error::Parameter("degenerate abscissae in rate fit".into()));
    }
    let sxy: f64 = points.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let ss_res: f64 = points
        .iter()
        .map(|p| (p.1 - (intercept + slope * p.0)).powi(2))
        .sum();
    let residual = (ss_res / n).sqrt();
    let dof = (points.len() as f64 - 2.0).max(1.0);
    let ci = 2.0 * (ss_res / dof / sxx).sqrt();
    Ok(RateFit {
        points,
        slope,
        intercept,
        residual,
        ci,
    })
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SampleRow {
    pub scale: f64,
    pub sample: usize,
    pub ratio: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ScaleRow {
    pub scale: f64,
    pub sup_ratio: f64,
    pub n_samples: usize,
}

/// Output of a ratio experiment: the raw ensemble, the per-scale suprema,
/// and the fitted slope when at least five scales are available.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct EstimateReport {
    pub label: String,
    pub meta: serde_json::Value,
    pub samples: Vec<SampleRow>,
    pub per_scale: Vec<ScaleRow>,
    pub slope: Option<RateFit>,
    pub flags: Vec<String>,
}

impl EstimateReport {
    pub fn new(label: impl Into<String>, meta: serde_json::Value) -> Self {
        EstimateReport {
            label: label.into(),
            meta,
            samples: vec![],
            per_scale: vec![],
            slope: None,
            flags: vec![],
        }
    }

    pub fn push_scale(&mut self, scale: f64, ratios: &[f64]) {
        for (i, &r) in ratios.iter().enumerate() {
            self.samples.push(SampleRow {
                scale,
                sample: i,
                ratio: r,
            });
        }
        self.per_scale.push(ScaleRow {
            scale,
            sup_ratio: ratios.iter().copied().fold(0.0, f64::max),
            n_samples: ratios.len(),
        });
    }

    /// Fits the per-scale suprema; slopes are only reported with at least
    /// five scale points.
    pub fn fit_slope(&mut self) {
        if self.per_scale.len() >= 5 {
            let xs: Vec<f64> = self.per_scale.iter().map(|r| r.scale).collect();
            let ys: Vec<f64> = self.per_scale.iter().map(|r| r.sup_ratio).collect();
            if let Ok(fit) = rate_fit(&xs, &ys) {
                self.slope = Some(fit);
            }
        }
    }

    pub fn sup_ratio(&self) -> f64 {
        self.per_scale.iter().map(|r| r.sup_ratio).fold(0.0, f64::max)
    }

    /// CSV with one row per sample.
    pub fn samples_csv(&self) -> String {
        let mut out = String::from("scale,sample,ratio\n");
        for row in &self.samples {
            out.push_str(&format!("{},{},{:.17e}\n", row.scale, row.sample, row.ratio));
        }
        out
    }

    /// JSON summary `{slope, ci, n_points}` plus flags.
    pub fn summary_json(&self) -> serde_json::Value {
        serde_json::json!({
            "label": self.label,
            "slope": self.slope.as_ref().map(|f| f.slope),
            "ci": self.slope.as_ref().map(|f| f.ci),
            "n_points": self.per_scale.len(),
            "sup_ratio": self.sup_ratio(),
            "flags": self.flags,
        })
    }
}

/// CSV table of a solver trajectory's diagnostics.
pub fn trajectory_csv(rows: &[crate::solver::DiagnosticsRow]) -> String {
    let mut out = String::from("t,Q1,Q2,Hs_u,Hs_v,Hs_w,drift1,drift2\n");
    for r in rows {
        out.push_str(&format!(
            "{:.17e},{:.17e},{:.17e},{:.17e},{:.17e},{:.17e},{:.17e},{:.17e}\n",
            r.t, r.q1, r.q2, r.hs_u, r.hs_v, r.hs_w, r.drift1, r.drift2
        ));
    }
    out
}

/// CSV table of per-shell masses along a trajectory.
pub fn dyadic_mass_csv(rows: &[crate::solver::DyadicMassRow]) -> String {
    let mut out = String::from("t,N,mass_u,mass_v,mass_w\n");
    for r in rows {
        out.push_str(&format!(
            "{:.17e},{},{:.17e},{:.17e},{:.17e}\n",
            r.t, r.n, r.mass_u, r.mass_v, r.mass_w
        ));
    }
    out
}

/// One `(t, N)` row of an energy scan.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct EnergyRow {
    pub t: f64,
    pub n: u64,
    pub m_n: f64,
    pub e_n: f64,
    pub coercivity_ratio: f64,
}

pub fn energy_csv(rows: &[EnergyRow]) -> String {
    let mut out = String::from("t,N,M_N,E_N,coercivity_ratio\n");
    for r in rows {
        out.push_str(&format!(
            "{:.17e},{},{:.17e},{:.17e},{:.17e}\n",
            r.t, r.n, r.m_n, r.e_n, r.coercivity_ratio
        ));
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn exact_power_law() {
        let xs: Vec<f64> = (1..=8).map(|k| 2f64.powi(k)).collect();
        let ys: Vec<f64> = xs.iter().map(|x| x.powi(-2)).collect();
        let fit = rate_fit(&xs, &ys).unwrap();
        assert_relative_eq!(fit.slope, -2.0, epsilon = 1e-12);
        assert!(fit.residual < 1e-12);
    }

    #[test]
    fn constant_input_has_zero_slope() {
        let xs: Vec<f64> = (1..=6).map(|k| 2f64.powi(k)).collect();
        let ys = vec![3.5; 6];
        let fit = rate_fit(&xs, &ys).unwrap();
        assert_relative_eq!(fit.slope, 0.0, epsilon = 1e-12);
    }

    #[test]
    fn noisy_power_law_recovers_slope() {
        // 10% multiplicative noise, 8 points, 100 seeded trials
        use rand::prelude::*;
        use rand_chacha::ChaCha8Rng;
        let xs: Vec<f64> = (1..=8).map(|k| 2f64.powi(k)).collect();
        for seed in 0..100u64 {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let ys: Vec<f64> = xs
                .iter()
                .map(|x| x.powf(-1.5) * (1.0 + 0.1 * rng.gen_range(-1.0..1.0f64)))
                .collect();
            let fit = rate_fit(&xs, &ys).unwrap();
            assert!((fit.slope + 1.5).abs() <= 0.15, "seed {seed}: slope {}", fit.slope);
        }
    }

    #[test]
    fn degenerate_inputs_rejected() {
        assert!(rate_fit(&[1.0, 2.0, 4.0], &[1.0, 1.0, 1.0]).is_err()); // too few
        assert!(rate_fit(&[1.0; 5], &[1.0; 5]).is_err()); // degenerate abscissae
    }

    #[test]
    fn slope_needs_five_scales() {
        let mut rep = EstimateReport::new("x", serde_json::json!({}));
        for k in 1..=4 {
            rep.push_scale(2f64.powi(k), &[1.0, 2.0]);
        }
        rep.fit_slope();
        assert!(rep.slope.is_none());
        rep.push_scale(32.0, &[1.5]);
        rep.fit_slope();
        assert!(rep.slope.is_some());
    }

    #[test]
    fn csv_headers() {
        let rep = EstimateReport::new("x", serde_json::json!({}));
        assert!(rep.samples_csv().starts_with("scale,sample,ratio\n"));
        assert!(trajectory_csv(&[]).starts_with("t,Q1,Q2,Hs_u,Hs_v,Hs_w,drift1,drift2\n"));
        assert!(dyadic_mass_csv(&[]).starts_with("t,N,mass_u,mass_v,mass_w\n"));
    }
}
