//! Axis-aligned frequency boxes and exact piecewise-polynomial arithmetic
//! for their indicator convolutions; evaluation backend of the appendix
//! counterexample constructions (no quadrature error).

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Closed axis-aligned box `[lo_1, hi_1] x ... x [lo_d, hi_d]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BoxRegion {
    pub lo: Vec<f64>,
    pub hi: Vec<f64>,
}

impl BoxRegion {
    pub fn new(lo: Vec<f64>, hi: Vec<f64>) -> Result<Self> {
        if lo.len() != hi.len() || lo.is_empty() {
            return Err(Error::Parameter("box needs matching lo/hi of positive dimension".into()));
        }
        for (a, b) in lo.iter().zip(&hi) {
            if !(a <= b) {
                return Err(Error::Parameter(format!("box interval [{a}, {b}] is empty")));
            }
        }
        Ok(BoxRegion { lo, hi })
    }

    pub fn interval(a: f64, b: f64) -> Result<Self> {
        BoxRegion::new(vec![a], vec![b])
    }

    pub fn dim(&self) -> usize {
        self.lo.len()
    }

    pub fn volume(&self) -> f64 {
        self.lo.iter().zip(&self.hi).map(|(a, b)| b - a).product()
    }

    pub fn contains(&self, xi: &[f64]) -> bool {
        self.lo
            .iter()
            .zip(&self.hi)
            .zip(xi)
            .all(|((a, b), x)| *x >= *a && *x <= *b)
    }

    /// The reflected box `-B` (the spectrum of a conjugated indicator datum).
    pub fn reflect(&self) -> BoxRegion {
        BoxRegion {
            lo: self.hi.iter().map(|x| -x).collect(),
            hi: self.lo.iter().map(|x| -x).collect(),
        }
    }
}

/// Piecewise polynomial on consecutive intervals `[b_i, b_{i+1}]`, each piece
/// stored in the local coordinate `x - b_i` with ascending coefficients;
/// zero outside the breakpoint range.
#[derive(Debug, Clone, PartialEq)]
pub struct PiecewisePoly1D {
    pub breakpoints: Vec<f64>,
    pub coeffs: Vec<Vec<f64>>,
}

impl PiecewisePoly1D {
    pub fn support(&self) -> (f64, f64) {
        (self.breakpoints[0], *self.breakpoints.last().unwrap())
    }

    pub fn eval(&self, x: f64) -> f64 {
        let n = self.breakpoints.len();
        if x < self.breakpoints[0] || x > self.breakpoints[n - 1] {
            return 0.0;
        }
        // last piece is closed on the right
        let mut i = match self
            .breakpoints
            .binary_search_by(|b| b.partial_cmp(&x).unwrap())
        {
            Ok(idx) => idx,
            Err(idx) => idx - 1,
        };
        if i >= self.coeffs.len() {
            i = self.coeffs.len() - 1;
        }
        horner(&self.coeffs[i], x - self.breakpoints[i])
    }

    /// Exact minimum over `[a, b]` (counting the zero extension outside the
    /// support when the interval sticks out).
    pub fn min_on(&self, a: f64, b: f64) -> f64 {
        assert!(a <= b);
        let (lo, hi) = self.support();
        let mut best = if a < lo || b > hi { 0.0 } else { f64::INFINITY };
        for i in 0..self.coeffs.len() {
            let (pa, pb) = (self.breakpoints[i], self.breakpoints[i + 1]);
            let la = pa.max(a);
            let lb = pb.min(b);
            if la > lb {
                continue;
            }
            best = best.min(poly_min(&self.coeffs[i], la - pa, lb - pa));
        }
        if best == f64::INFINITY {
            0.0
        } else {
            best
        }
    }

    /// Exact integral over `[a, b]`.
    pub fn integral_on(&self, a: f64, b: f64) -> f64 {
        assert!(a <= b);
        let mut total = 0.0;
        for i in 0..self.coeffs.len() {
            let (pa, pb) = (self.breakpoints[i], self.breakpoints[i + 1]);
            let la = pa.max(a);
            let lb = pb.min(b);
            if la >= lb {
                continue;
            }
            total += poly_integral(&self.coeffs[i], la - pa, lb - pa);
        }
        total
    }
}

fn horner(c: &[f64], x: f64) -> f64 {
    c.iter().rev().fold(0.0, |acc, &ck| acc * x + ck)
}

/// Exact minimum of a polynomial of degree <= 2 on `[a, b]` (local coords).
fn poly_min(c: &[f64], a: f64, b: f64) -> f64 {
    let mut m = horner(c, a).min(horner(c, b));
    if c.len() >= 3 && c[2] != 0.0 {
        let crit = -c[1] / (2.0 * c[2]);
        if crit > a && crit < b {
            m = m.min(horner(c, crit));
        }
    }
    debug_assert!(c.len() <= 3, "degree > 2 pieces need root finding");
    m
}

fn poly_integral(c: &[f64], a: f64, b: f64) -> f64 {
    let anti = |x: f64| -> f64 {
        c.iter()
            .enumerate()
            .map(|(k, &ck)| ck * x.powi(k as i32 + 1) / (k as f64 + 1.0))
            .sum()
    };
    anti(b) - anti(a)
}

/// Exact convolution of two interval indicators: the trapezoid with plateau
/// height `min(len1, len2)`.
pub fn interval_convolution(a1: f64, b1: f64, a2: f64, b2: f64) -> PiecewisePoly1D {
    let l1 = b1 - a1;
    let l2 = b2 - a2;
    let start = a1 + a2;
    let end = b1 + b2;
    let m = l1.min(l2);
    if m == 0.0 {
        return PiecewisePoly1D {
            breakpoints: vec![start, end],
            coeffs: vec![vec![0.0]],
        };
    }
    if (l1 - l2).abs() < f64::EPSILON * (l1 + l2) {
        // triangle
        PiecewisePoly1D {
            breakpoints: vec![start, start + m, end],
            coeffs: vec![vec![0.0, 1.0], vec![m, -1.0]],
        }
    } else {
        PiecewisePoly1D {
            breakpoints: vec![start, start + m, end - m, end],
            coeffs: vec![vec![0.0, 1.0], vec![m], vec![m, -1.0]],
        }
    }
}

/// Convolution of two box indicators as a product of per-axis trapezoids.
#[derive(Debug, Clone)]
pub struct BoxConvolution {
    pub axes: Vec<PiecewisePoly1D>,
}

impl BoxConvolution {
    pub fn eval(&self, xi: &[f64]) -> f64 {
        self.axes.iter().zip(xi).map(|(p, x)| p.eval(*x)).product()
    }

    /// Exact minimum over a box (all axis profiles are nonnegative).
    pub fn min_on(&self, region: &BoxRegion) -> f64 {
        self.axes
            .iter()
            .enumerate()
            .map(|(ax, p)| p.min_on(region.lo[ax], region.hi[ax]))
            .product()
    }

    /// Exact integral over a box.
    pub fn integral_on(&self, region: &BoxRegion) -> f64 {
        self.axes
            .iter()
            .enumerate()
            .map(|(ax, p)| p.integral_on(region.lo[ax], region.hi[ax]))
            .product()
    }
}

/// `1_A * 1_B` evaluated exactly.
pub fn box_convolution(a: &BoxRegion, b: &BoxRegion) -> Result<BoxConvolution> {
    if a.dim() != b.dim() {
        return Err(Error::Parameter("box dimensions differ".into()));
    }
    Ok(BoxConvolution {
        axes: (0..a.dim())
            .map(|ax| interval_convolution(a.lo[ax], a.hi[ax], b.lo[ax], b.hi[ax]))
            .collect(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use rand::prelude::*;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn unit_interval_self_convolution_peaks_at_one() {
        let p = interval_convolution(0.0, 1.0, 0.0, 1.0);
        assert_relative_eq!(p.eval(1.0), 1.0, epsilon = 1e-15);
        assert_eq!(p.eval(-0.5), 0.0);
        assert_eq!(p.eval(2.5), 0.0);
        assert_relative_eq!(p.eval(0.5), 0.5, epsilon = 1e-15);
        assert_relative_eq!(p.eval(1.5), 0.5, epsilon = 1e-15);
        // total mass = product of lengths
        assert_relative_eq!(p.integral_on(0.0, 2.0), 1.0, epsilon = 1e-14);
    }

    #[test]
    fn trapezoid_plateau_and_min() {
        // lengths 3 and 1: plateau height 1 on [s+1, e-1]
        let p = interval_convolution(0.0, 3.0, 0.0, 1.0);
        assert_relative_eq!(p.eval(1.0), 1.0, epsilon = 1e-15);
        assert_relative_eq!(p.eval(3.0), 1.0, epsilon = 1e-15);
        assert_relative_eq!(p.min_on(1.0, 3.0), 1.0, epsilon = 1e-15);
        assert_eq!(p.min_on(0.0, 4.0), 0.0);
        assert_relative_eq!(p.min_on(0.5, 3.0), 0.5, epsilon = 1e-15);
    }

    #[test]
    fn convolution_matches_monte_carlo() {
        let mut rng = ChaCha8Rng::seed_from_u64(17);
        for trial in 0..10 {
            let d = 1 + (trial % 2);
            let mut lo1 = vec![];
            let mut hi1 = vec![];
            let mut lo2 = vec![];
            let mut hi2 = vec![];
            for _ in 0..d {
                let a: f64 = rng.gen_range(-2.0..2.0);
                lo1.push(a);
                hi1.push(a + rng.gen_range(0.2..2.0));
                let b: f64 = rng.gen_range(-2.0..2.0);
                lo2.push(b);
                hi2.push(b + rng.gen_range(0.2..2.0));
            }
            let ba = BoxRegion::new(lo1, hi1).unwrap();
            let bb = BoxRegion::new(lo2, hi2).unwrap();
            let conv = box_convolution(&ba, &bb).unwrap();
            // MC estimate of (1_A * 1_B)(xi) = vol(A) E_eta[1_B(xi - eta)]
            let xi: Vec<f64> = (0..d)
                .map(|ax| rng.gen_range(ba.lo[ax] + bb.lo[ax]..ba.hi[ax] + bb.hi[ax]))
                .collect();
            let n = 60_000;
            let mut hits = 0u32;
            for _ in 0..n {
                let eta: Vec<f64> = (0..d)
                    .map(|ax| rng.gen_range(ba.lo[ax]..ba.hi[ax]))
                    .collect();
                let shifted: Vec<f64> = xi.iter().zip(&eta).map(|(x, e)| x - e).collect();
                if bb.contains(&shifted) {
                    hits += 1;
                }
            }
            let phat = hits as f64 / n as f64;
            let mc = ba.volume() * phat;
            let sigma = ba.volume() * (phat * (1.0 - phat) / n as f64).sqrt();
            let exact = conv.eval(&xi);
            assert!(
                (exact - mc).abs() <= 3.0 * sigma + 1e-9,
                "trial {trial}: exact {exact}, mc {mc}, sigma {sigma}"
            );
        }
    }

    #[test]
    fn appendix_first_construction_lower_bound() {
        // boxes of the window-scaling counterexample at K = 2^8, a = 1/2:
        // conv(1_D1, 1_(-D2)) >= 2^{-(d-1)} K^{-delta} on D, exactly
        for d in [1usize, 2] {
            let k = 256.0f64;
            let a = 0.5;
            let delta = 3.0 * (1.0 - a) / 2.0;
            let h = k.powf(-delta);
            let mut lo1 = vec![k];
            let mut hi1 = vec![k + 3.0 * h];
            let mut lo2 = vec![h];
            let mut hi2 = vec![2.0 * h];
            let mut lod = vec![k - h];
            let mut hid = vec![k + h];
            for _ in 1..d {
                lo1.push(0.0);
                hi1.push(1.0);
                lo2.push(0.0);
                hi2.push(0.5);
                lod.push(0.0);
                hid.push(0.5);
            }
            let d1 = BoxRegion::new(lo1, hi1).unwrap();
            let d2 = BoxRegion::new(lo2, hi2).unwrap();
            let dd = BoxRegion::new(lod, hid).unwrap();
            let conv = box_convolution(&d1, &d2.reflect()).unwrap();
            let min = conv.min_on(&dd);
            let bound = 2f64.powi(-(d as i32 - 1)) * h;
            assert!(min >= bound * (1.0 - 1e-12), "d={d}: min {min} < bound {bound}");
        }
    }

    #[test]
    fn appendix_second_construction_lower_bound() {
        // d = 2 resonant boxes: 1_D2 * 1_D3 >= (K/2)^{d-1}/C on D1, exactly
        let k = 32.0f64;
        let ktil = k.powi(3);
        let c = 32.0f64;
        let d1 = BoxRegion::new(vec![ktil + 1.0 / c, 1.5 * k], vec![ktil + 2.0 / c, 2.0 * k]).unwrap();
        let d2 = BoxRegion::new(vec![0.0, 0.5 * k], vec![1.0 / c, k]).unwrap();
        let d3 = BoxRegion::new(vec![ktil, 0.5 * k], vec![ktil + 2.0 / c, 1.5 * k]).unwrap();
        let conv = box_convolution(&d2, &d3).unwrap();
        let min = conv.min_on(&d1);
        let bound = (1.0 / c) * (k / 2.0);
        assert!(min >= bound * (1.0 - 1e-12), "min {min} < bound {bound}");
    }
}
