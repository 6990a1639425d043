//! System coefficients, resonance classification, and the scaling transform.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grid::{Grid, StateBundle};

/// Dispersion coefficients and the sharp truncation radius of the
/// approximation system.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SystemParams {
    pub alpha: f64,
    pub beta: f64,
    pub gamma: f64,
    /// Truncation radius; `inf` recovers the untruncated system.
    #[serde(
        serialize_with = "serialize_k",
        deserialize_with = "deserialize_k",
        rename = "K"
    )]
    pub k: f64,
    pub d: usize,
}

fn serialize_k<S: serde::Serializer>(k: &f64, s: S) -> std::result::Result<S::Ok, S::Error> {
    if k.is_infinite() {
        s.serialize_str("inf")
    } else {
        s.serialize_f64(*k)
    }
}

fn deserialize_k<'de, D: serde::Deserializer<'de>>(d: D) -> std::result::Result<f64, D::Error> {
    #[derive(Deserialize)]
    #[serde(untagged)]
    enum KVal {
        Num(f64),
        Str(String),
    }
    match KVal::deserialize(d)? {
        KVal::Num(x) => Ok(x),
        KVal::Str(s) if s == "inf" => Ok(f64::INFINITY),
        KVal::Str(s) => s.parse().map_err(serde::de::Error::custom),
    }
}

impl SystemParams {
    pub fn new(alpha: f64, beta: f64, gamma: f64, k: f64, d: usize) -> Result<Self> {
        let p = SystemParams { alpha, beta, gamma, k, d };
        p.validate()?;
        Ok(p)
    }

    pub fn validate(&self) -> Result<()> {
        if self.alpha == 0.0 || self.beta == 0.0 || self.gamma == 0.0 {
            return Err(Error::Parameter(
                "dispersion coefficients must all be nonzero".into(),
            ));
        }
        if !(self.alpha.is_finite() && self.beta.is_finite() && self.gamma.is_finite()) {
            return Err(Error::Parameter("dispersion coefficients must be finite".into()));
        }
        if !(self.k > 0.0) {
            return Err(Error::Parameter(format!("truncation K must be positive, got {}", self.k)));
        }
        if !(self.d == 1 || self.d == 2) {
            return Err(Error::Parameter(format!("dimension must be 1 or 2, got {}", self.d)));
        }
        Ok(())
    }

    /// `b` with `beta = gamma (b + 1)`.
    pub fn b(&self) -> f64 {
        self.beta / self.gamma - 1.0
    }

    pub fn is_short_time_regime(&self) -> bool {
        self.alpha == self.gamma && self.beta + self.gamma != 0.0
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Regime {
    /// `kappa_tilde != 0`: direct iteration applies.
    Iteration,
    /// `alpha = gamma`, `beta + gamma != 0`: the short-time regime.
    ShortTime,
    /// `beta + gamma = 0`: ill-posed line (takes precedence when it overlaps
    /// with `alpha = gamma`).
    IllPosedLine,
    /// Unreachable under the nonzero-coefficient hypothesis; kept so the
    /// classification is total.
    Degenerate,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ResonanceReport {
    pub kappa_tilde: f64,
    pub kappa: f64,
    pub mu: f64,
    pub b: f64,
    pub regime: Regime,
}

impl ResonanceReport {
    /// True when `alpha = gamma` and `beta + gamma = 0` hold simultaneously;
    /// the regime field then reports `IllPosedLine`.
    pub fn is_degenerate_overlap(&self) -> bool {
        self.regime == Regime::IllPosedLine && self.b == -2.0 && self.kappa_tilde == 0.0
    }
}

/// The structure constants `kappa_tilde = (a-c)(b+c)`,
/// `kappa = (a-b)(a-c)(b+c)`, `mu = abc (1/a - 1/b - 1/c)` and the regime.
pub fn resonance_quantities(p: &SystemParams) -> Result<ResonanceReport> {
    p.validate()?;
    let (a, b, c) = (p.alpha, p.beta, p.gamma);
    let kappa_tilde = (a - c) * (b + c);
    let kappa = (a - b) * (a - c) * (b + c);
    let mu = a * b * c * (1.0 / a - 1.0 / b - 1.0 / c);
    let regime = if b + c == 0.0 {
        Regime::IllPosedLine
    } else if kappa_tilde != 0.0 {
        Regime::Iteration
    } else {
        // kappa_tilde = 0 with beta + gamma != 0 forces alpha = gamma
        Regime::ShortTime
    };
    Ok(ResonanceReport {
        kappa_tilde,
        kappa,
        mu,
        b: p.b(),
        regime,
    })
}

/// The scale transform `u^lambda(t, x) = lambda^{-1} u(lambda^{-2} t, lambda^{-1} x)`.
///
/// The frequency lattice rescales with the period, so the transform is exact
/// for every `lambda > 0`: mode `k` of the input becomes mode `k` of the
/// output on the grid with period `lambda L`, scaled by `1/lambda`, and the
/// snapshot time moves to `lambda^2 t`.
pub fn scaling_transform(state: &StateBundle, lambda: f64) -> Result<StateBundle> {
    if !(lambda > 0.0 && lambda.is_finite()) {
        return Err(Error::Parameter(format!("scaling parameter must be positive, got {lambda}")));
    }
    let old = state.grid();
    let grid = Grid::new(old.d, lambda * old.len, old.m)?;
    let amp = num_complex::Complex64::new(1.0 / lambda, 0.0);
    let rescale = |f: &crate::grid::Field| {
        let s = f.to_spectral();
        crate::grid::Field::from_components(
            grid,
            crate::grid::Representation::Spectral,
            s.components().iter().map(|c| c.iter().map(|v| v * amp).collect()).collect(),
        )
        .expect("same layout")
    };
    Ok(StateBundle {
        u: rescale(&state.u),
        v: rescale(&state.v),
        w: rescale(&state.w),
        time: lambda * lambda * state.time,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::{Field, Representation};
    use crate::norms::homogeneous_seminorm;
    use approx::assert_relative_eq;
    use num_complex::Complex64;
    use rand::prelude::*;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn classify_examples() {
        let r = resonance_quantities(&SystemParams::new(1.0, 1.0, 1.0, f64::INFINITY, 1).unwrap()).unwrap();
        assert_eq!(r.kappa_tilde, 0.0);
        assert_eq!(r.b, 0.0);
        assert_eq!(r.regime, Regime::ShortTime);

        let r = resonance_quantities(&SystemParams::new(2.0, 1.0, 1.0, f64::INFINITY, 1).unwrap()).unwrap();
        assert_eq!(r.kappa_tilde, 2.0);
        assert_eq!(r.regime, Regime::Iteration);

        let r = resonance_quantities(&SystemParams::new(1.0, -1.0, 1.0, f64::INFINITY, 1).unwrap()).unwrap();
        assert_eq!(r.regime, Regime::IllPosedLine);
        assert!(r.is_degenerate_overlap());

        assert!(SystemParams::new(0.0, 1.0, 1.0, 16.0, 1).is_err());
    }

    #[test]
    fn regime_invariants() {
        let mut rng = ChaCha8Rng::seed_from_u64(42);
        for _ in 0..200 {
            let p = SystemParams::new(
                rng.gen_range(-2.0..2.0f64).signum() * rng.gen_range(0.1..2.0),
                rng.gen_range(-2.0..2.0f64).signum() * rng.gen_range(0.1..2.0),
                rng.gen_range(-2.0..2.0f64).signum() * rng.gen_range(0.1..2.0),
                16.0,
                1,
            )
            .unwrap();
            let r = resonance_quantities(&p).unwrap();
            match r.regime {
                Regime::Iteration => assert!(r.kappa_tilde != 0.0),
                Regime::ShortTime => {
                    assert_eq!(r.kappa_tilde, 0.0);
                    assert!(r.b != -2.0);
                }
                Regime::IllPosedLine => assert_eq!(p.beta + p.gamma, 0.0),
                Regime::Degenerate => panic!("degenerate regime should be unreachable"),
            }
        }
    }

    #[test]
    fn json_field_names() {
        let p = SystemParams::new(1.0, 2.0, 1.0, f64::INFINITY, 2).unwrap();
        let js = serde_json::to_value(&p).unwrap();
        assert_eq!(js["alpha"], 1.0);
        assert_eq!(js["K"], "inf");
        let back: SystemParams = serde_json::from_value(js).unwrap();
        assert!(back.k.is_infinite());
        let r = resonance_quantities(&p).unwrap();
        let js = serde_json::to_value(r).unwrap();
        for key in ["kappa_tilde", "kappa", "mu", "b", "regime"] {
            assert!(js.get(key).is_some(), "missing {key}");
        }
    }

    fn random_bundle(grid: Grid, seed: u64) -> StateBundle {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut mk = || {
            let comps = (0..grid.d)
                .map(|_| {
                    (0..grid.points())
                        .map(|_| Complex64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)))
                        .collect()
                })
                .collect();
            Field::from_components(grid, Representation::Spectral, comps).unwrap()
        };
        StateBundle::new(mk(), mk(), mk(), 0.25).unwrap()
    }

    #[test]
    fn scaling_identity_and_composition() {
        let grid = Grid::new(1, 2.0 * std::f64::consts::PI, 64).unwrap();
        let b = random_bundle(grid, 5);
        let id = scaling_transform(&b, 1.0).unwrap();
        assert_eq!(id.grid(), grid);
        assert_relative_eq!(id.u.l2_norm(), b.u.l2_norm(), max_relative = 1e-14);

        let two_then_three = scaling_transform(&scaling_transform(&b, 2.0).unwrap(), 3.0).unwrap();
        let six = scaling_transform(&b, 6.0).unwrap();
        assert_eq!(two_then_three.grid(), six.grid());
        assert_relative_eq!(two_then_three.time, six.time, max_relative = 1e-14);
        let d: f64 = two_then_three
            .u
            .to_spectral()
            .component(0)
            .iter()
            .zip(six.u.to_spectral().component(0))
            .map(|(a, b)| (a - b).norm())
            .fold(0.0, f64::max);
        assert!(d < 1e-14);
    }

    #[test]
    fn critical_seminorm_invariance() {
        for d in [1usize, 2] {
            let grid = Grid::new(d, 4.0 * std::f64::consts::PI, if d == 1 { 128 } else { 32 }).unwrap();
            let b = random_bundle(grid, 17);
            let sc = d as f64 / 2.0 - 1.0;
            let before = homogeneous_seminorm(&b.u, sc);
            for lambda in [2.0, 4.0, 0.5] {
                let after = homogeneous_seminorm(&scaling_transform(&b, lambda).unwrap().u, sc);
                assert_relative_eq!(before, after, max_relative = 1e-10);
            }
        }
    }
}
