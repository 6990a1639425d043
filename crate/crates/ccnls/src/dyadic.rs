//! Littlewood-Paley multipliers and sharp frequency cutoffs.
//!
//! The bump `eta` is fixed once for the whole crate: even, non-increasing on
//! `[0, inf)`, equal to 1 on `[-4/3, 4/3]`, vanishing outside `[-5/3, 5/3]`,
//! with a quintic smoothstep on the transition band (C^2).

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grid::{Field, Grid};
use num_complex::Complex64;

/// The fixed bump profile.
pub fn eta(x: f64) -> f64 {
    let a = x.abs();
    if a <= 4.0 / 3.0 {
        1.0
    } else if a >= 5.0 / 3.0 {
        0.0
    } else {
        // ramp coordinate on (0,1); smoothstep of order 5
        let s = 3.0 * a - 4.0;
        1.0 - s * s * s * (10.0 + s * (-15.0 + 6.0 * s))
    }
}

/// Dyadic annular difference: `eta_0 = eta`, `eta_j = eta(x/2^j) - eta(x/2^(j-1))`.
pub fn eta_j(x: f64, j: u32) -> f64 {
    if j == 0 {
        eta(x)
    } else {
        eta(x / 2f64.powi(j as i32)) - eta(x / 2f64.powi(j as i32 - 1))
    }
}

/// A dyadic frequency scale `N in 2^{N_0}`, carrying the shell
/// `I_N = {|xi| <= 2}` for `N = 1` and `{N/2 <= |xi| <= 2N}` for `N >= 2`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
pub struct DyadicScale(u64);

impl DyadicScale {
    pub fn new(n: u64) -> Result<Self> {
        if n == 0 || !n.is_power_of_two() {
            return Err(Error::Parameter(format!("dyadic scale must be a power of two, got {n}")));
        }
        Ok(DyadicScale(n))
    }

    pub fn value(&self) -> f64 {
        self.0 as f64
    }

    pub fn integer(&self) -> u64 {
        self.0
    }

    pub fn log2(&self) -> u32 {
        self.0.trailing_zeros()
    }

    /// Closed shell bounds `[lo, hi]` of `I_N`.
    pub fn shell(&self) -> (f64, f64) {
        if self.0 == 1 {
            (0.0, 2.0)
        } else {
            (self.value() / 2.0, 2.0 * self.value())
        }
    }

    pub fn shell_contains(&self, xi_abs: f64) -> bool {
        let (lo, hi) = self.shell();
        xi_abs >= lo && xi_abs <= hi
    }

    /// Whether two shells intersect.
    pub fn shell_intersects(&self, other: &DyadicScale) -> bool {
        let (a, b) = self.shell();
        let (c, d) = other.shell();
        a <= d && c <= b
    }
}

/// `psi_1(xi) = eta(|xi|)`, `psi_N(xi) = eta(|xi|/N) - eta(2|xi|/N)` for `N >= 2`.
pub fn psi_n(xi_abs: f64, n: DyadicScale) -> f64 {
    if n.integer() == 1 {
        eta(xi_abs)
    } else {
        eta(xi_abs / n.value()) - eta(2.0 * xi_abs / n.value())
    }
}

/// All dyadic scales needed to resolve the grid: the partition
/// `sum_N psi_N` equals 1 exactly on every lattice frequency.
pub fn dyadic_scales(grid: &Grid) -> Vec<DyadicScale> {
    let target = 0.75 * grid.xi_max();
    let mut n = 1u64;
    let mut out = vec![DyadicScale(1)];
    while (n as f64) < target {
        n *= 2;
        out.push(DyadicScale(n));
    }
    out
}

/// Smooth dyadic projector `P_N`: spectral multiplier by `psi_N`.
pub fn project_dyadic(f: &Field, n: DyadicScale) -> Field {
    f.spectral_multiply(|xi| {
        let r = (xi[0] * xi[0] + xi[1] * xi[1]).sqrt();
        Complex64::new(psi_n(r, n), 0.0)
    })
}

/// `P_{<=N}`: by telescoping this is the single multiplier `eta(|xi|/N)`.
pub fn project_leq(f: &Field, n: DyadicScale) -> Field {
    f.spectral_multiply(|xi| {
        let r = (xi[0] * xi[0] + xi[1] * xi[1]).sqrt();
        Complex64::new(eta(r / n.value()), 0.0)
    })
}

/// Sharp Fourier truncation `J_{<=K}`: indicator of the closed ball `|xi| <= K`.
/// `K = inf` is the identity.
pub fn sharp_truncate(f: &Field, k: f64) -> Field {
    if k.is_infinite() {
        return f.to_spectral();
    }
    f.spectral_multiply(|xi| {
        let r2 = xi[0] * xi[0] + xi[1] * xi[1];
        if r2.sqrt() <= k {
            Complex64::new(1.0, 0.0)
        } else {
            Complex64::new(0.0, 0.0)
        }
    })
}

/// Band cutoff `J_{(K1, K2]} = J_{<=K2} - J_{<=K1}`.
pub fn sharp_band(f: &Field, k1: f64, k2: f64) -> Field {
    if k2.is_infinite() {
        if k1.is_infinite() {
            return Field::zeros(f.grid, crate::grid::Representation::Spectral);
        }
        let s = f.to_spectral();
        return s
            .sub(&sharp_truncate(&s, k1))
            .expect("same grid by construction");
    }
    f.spectral_multiply(|xi| {
        let r = (xi[0] * xi[0] + xi[1] * xi[1]).sqrt();
        if r <= k2 && r > k1 {
            Complex64::new(1.0, 0.0)
        } else {
            Complex64::new(0.0, 0.0)
        }
    })
}

/// Mass fraction of `f` outside the shell `I_N` (spectral, relative).
pub fn off_shell_fraction(f: &Field, n: DyadicScale) -> f64 {
    let s = f.to_spectral();
    let mut inside = 0.0;
    let mut total = 0.0;
    for comp in s.components() {
        for (k, v) in comp.iter().enumerate() {
            let m = v.norm_sqr();
            total += m;
            if n.shell_contains(s.grid.xi_norm_sq(k).sqrt()) {
                inside += m;
            }
        }
    }
    if total == 0.0 {
        0.0
    } else {
        ((total - inside) / total).max(0.0)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::Representation;
    use approx::assert_relative_eq;
    use num_complex::Complex64;
    use rand::prelude::*;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn eta_plateau_support_evenness() {
        assert_eq!(eta(0.0), 1.0);
        assert_eq!(eta(2.0), 0.0);
        let v = eta(1.5);
        assert!(v > 0.0 && v < 1.0);
        assert_eq!(eta(1.5), eta(-1.5));
        // non-increasing on [0, inf)
        let mut prev = eta(0.0);
        for i in 1..=200 {
            let x = i as f64 * 0.01;
            let cur = eta(x);
            assert!(cur <= prev + 1e-15);
            prev = cur;
        }
    }

    #[test]
    fn eta_is_c2_at_band_edges() {
        // the second derivative vanishes from both sides of each join, so the
        // straddling second difference must decay linearly in h
        let d2 = |x: f64, h: f64| (eta(x + h) - 2.0 * eta(x) + eta(x - h)) / (h * h);
        for &x in &[4.0 / 3.0, 5.0 / 3.0] {
            for &h in &[1e-3, 1e-4, 1e-5] {
                assert!(d2(x, h).abs() < 300.0 * h, "at {x}, h={h}: {}", d2(x, h));
            }
        }
    }

    #[test]
    fn eta_j_telescopes() {
        let x = 10.0;
        let total: f64 = (0..=4).map(|j| eta_j(x, j)).sum();
        assert_relative_eq!(total, eta(x / 16.0), epsilon = 1e-14);
        assert_eq!(eta_j(0.0, 0), 1.0);
    }

    #[test]
    fn eta_j_support() {
        // eta_j vanishes below (4/3) 2^(j-1)
        for x in [0.0, 1.0, 2.0, 16.0 / 3.0] {
            assert_eq!(eta_j(x, 3), 0.0, "x={x}");
        }
        assert!(eta_j(8.0, 3) > 0.0);
    }

    #[test]
    fn psi_partition_of_unity() {
        let n12 = DyadicScale::new(1 << 12).unwrap();
        let scales: Vec<_> = (0..=12).map(|k| DyadicScale::new(1 << k).unwrap()).collect();
        assert!(scales.contains(&n12));
        let total: f64 = scales.iter().map(|n| psi_n(100.0, *n)).sum();
        assert!((total - 1.0).abs() < 1e-12);
        assert_eq!(psi_n(0.0, DyadicScale::new(1).unwrap()), 1.0);
        assert_eq!(psi_n(1.0, DyadicScale::new(4).unwrap()), 0.0);
    }

    #[test]
    fn partition_on_grid_lattice() {
        let grid = Grid::new(1, 64.0 * std::f64::consts::PI, 512).unwrap();
        let scales = dyadic_scales(&grid);
        for k in 0..grid.points() {
            let r = grid.xi_norm_sq(k).sqrt();
            let total: f64 = scales.iter().map(|n| psi_n(r, *n)).sum();
            assert!((total - 1.0).abs() <= 1e-12, "xi={r}");
        }
    }

    fn random_spectral(grid: Grid, seed: u64) -> Field {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let comps = (0..grid.d)
            .map(|_| {
                (0..grid.points())
                    .map(|_| Complex64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)))
                    .collect()
            })
            .collect();
        Field::from_components(grid, Representation::Spectral, comps).unwrap()
    }

    #[test]
    fn projectors_sum_to_identity() {
        let grid = Grid::new(1, 2.0 * std::f64::consts::PI, 128).unwrap();
        let f = random_spectral(grid, 7);
        let mut acc = Field::zeros(grid, Representation::Spectral);
        for n in dyadic_scales(&grid) {
            acc = acc.add(&project_dyadic(&f, n)).unwrap();
        }
        let err = acc.sub(&f).unwrap().l2_norm() / f.l2_norm();
        assert!(err <= 1e-12, "err={err}");
    }

    #[test]
    fn projector_mode_action_and_support() {
        let grid = Grid::new(1, 2.0 * std::f64::consts::PI, 128).unwrap();
        let n = DyadicScale::new(4).unwrap();
        // mode with |xi| = 4 sits in I_4
        let f = Field::single_mode(grid, 0, 4, Complex64::new(1.0, 0.0));
        let p = project_dyadic(&f, n);
        assert_relative_eq!(p.component(0)[4].re, psi_n(4.0, n), epsilon = 1e-14);
        // P_4 leaves no mass outside 2 <= |xi| <= 8
        let g = random_spectral(grid, 8);
        let pg = project_dyadic(&g, n);
        for k in 0..grid.points() {
            let r = grid.xi_norm_sq(k).sqrt();
            if !(2.0..=8.0).contains(&r) {
                assert!(pg.component(0)[k].norm() < 1e-15);
            }
        }
        assert!(off_shell_fraction(&pg, n) < 1e-15);
    }

    #[test]
    fn disjoint_shells_annihilate() {
        let grid = Grid::new(1, 2.0 * std::f64::consts::PI, 256).unwrap();
        let f = random_spectral(grid, 9);
        let n2 = DyadicScale::new(2).unwrap();
        let n32 = DyadicScale::new(32).unwrap();
        assert!(!n2.shell_intersects(&n32));
        let p = project_dyadic(&project_dyadic(&f, n32), n2);
        assert!(p.l2_norm() < 1e-14);
    }

    #[test]
    fn sharp_truncation_algebra() {
        let grid = Grid::new(1, 2.0 * std::f64::consts::PI, 128).unwrap();
        let f = random_spectral(grid, 10);
        // idempotence, exactly
        let a = sharp_truncate(&f, 7.0);
        let b = sharp_truncate(&a, 7.0);
        for (x, y) in a.component(0).iter().zip(b.component(0)) {
            assert_eq!(x, y);
        }
        // band equals difference, exactly
        let band = sharp_band(&f, 3.0, 9.0);
        let diff = sharp_truncate(&f, 9.0).sub(&sharp_truncate(&f, 3.0)).unwrap();
        for (x, y) in band.component(0).iter().zip(diff.component(0)) {
            assert!((x - y).norm() < 1e-16);
        }
        // J_{<=inf} is the identity
        let id = sharp_truncate(&f, f64::INFINITY);
        for (x, y) in id.component(0).iter().zip(f.component(0)) {
            assert_eq!(x, y);
        }
        // J commutes with P_N
        let n = DyadicScale::new(8).unwrap();
        let jp = sharp_truncate(&project_dyadic(&f, n), 5.0);
        let pj = project_dyadic(&sharp_truncate(&f, 5.0), n);
        for (x, y) in jp.component(0).iter().zip(pj.component(0)) {
            assert!((x - y).norm() < 1e-16);
        }
    }
}
