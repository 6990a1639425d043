//! Sobolev and dyadic energy norms on sampled data.

use crate::dyadic::{dyadic_scales, project_dyadic};
use crate::grid::{Field, StateBundle};

/// `H^s` norm: `(L^d sum_xi <xi>^{2s} |c_xi|^2)^{1/2}` with `<xi>^2 = 1 + |xi|^2`.
/// At `s = 0` this is the physical-space L2 quadrature (Parseval).
pub fn sobolev_norm(f: &Field, s: f64) -> f64 {
    let sp = f.to_spectral();
    let w = sp.grid.len.powi(sp.grid.d as i32);
    let mut acc = 0.0;
    for comp in sp.components() {
        for (k, v) in comp.iter().enumerate() {
            let jb = 1.0 + sp.grid.xi_norm_sq(k);
            acc += jb.powf(s) * v.norm_sqr();
        }
    }
    (w * acc).sqrt()
}

/// Homogeneous `H^s` seminorm (the `xi = 0` mode carries no weight).
pub fn homogeneous_seminorm(f: &Field, s: f64) -> f64 {
    let sp = f.to_spectral();
    let w = sp.grid.len.powi(sp.grid.d as i32);
    let mut acc = 0.0;
    for comp in sp.components() {
        for (k, v) in comp.iter().enumerate() {
            let r2 = sp.grid.xi_norm_sq(k);
            if r2 > 0.0 {
                acc += r2.powf(s) * v.norm_sqr();
            }
        }
    }
    (w * acc).sqrt()
}

/// Bundle `H^s` norm with the square-sum convention over u, v, w.
pub fn bundle_sobolev_norm(b: &StateBundle, s: f64) -> f64 {
    b.fields()
        .iter()
        .map(|f| sobolev_norm(f, s).powi(2))
        .sum::<f64>()
        .sqrt()
}

/// Energy-space norm of a trajectory of bundles:
/// `l2` over dyadic `N` of `N^s sup_t ||P_N . ||_{L2}`, square-summed over
/// the three fields.
pub fn dyadic_energy_norm(traj: &[StateBundle], s: f64) -> f64 {
    assert!(!traj.is_empty(), "dyadic energy norm needs a nonempty trajectory");
    let grid = traj[0].grid();
    let mut total = 0.0;
    for n in dyadic_scales(&grid) {
        let mut sup = [0.0f64; 3];
        for snap in traj {
            for (i, f) in snap.fields().iter().enumerate() {
                sup[i] = sup[i].max(project_dyadic(f, n).l2_norm());
            }
        }
        let weight = n.value().powf(2.0 * s);
        total += weight * sup.iter().map(|x| x * x).sum::<f64>();
    }
    total.sqrt()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::{Grid, Representation};
    use approx::assert_relative_eq;
    use num_complex::Complex64;
    use rand::prelude::*;
    use rand_chacha::ChaCha8Rng;

    fn grid() -> Grid {
        Grid::new(1, 2.0 * std::f64::consts::PI, 128).unwrap()
    }

    fn random_field(grid: Grid, seed: u64) -> Field {
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
    fn normalized_mode_has_weight_jb_s() {
        let g = grid();
        let l = g.len;
        let amp = Complex64::new(1.0 / l.powf(0.5 * g.d as f64), 0.0);
        let f = Field::single_mode(g, 0, 5, amp); // xi = 5
        for s in [0.0, 0.5, 1.6, -1.0] {
            assert_relative_eq!(
                sobolev_norm(&f, s),
                (1.0 + 25.0f64).powf(0.5 * s),
                max_relative = 1e-12
            );
        }
    }

    #[test]
    fn s_zero_matches_physical_quadrature() {
        let f = random_field(grid(), 11);
        let phys = f.to_physical();
        assert_relative_eq!(sobolev_norm(&f, 0.0), phys.l2_norm(), max_relative = 1e-12);
    }

    #[test]
    fn triangle_inequality_on_random_pairs() {
        let g = grid();
        for seed in 0..10u64 {
            let a = random_field(g, 100 + seed);
            let b = random_field(g, 200 + seed);
            let sum = a.add(&b).unwrap();
            for s in [0.0, 1.0, 1.6] {
                assert!(sobolev_norm(&sum, s) <= sobolev_norm(&a, s) + sobolev_norm(&b, s) + 1e-12);
            }
        }
    }

    #[test]
    fn energy_norm_zero_trajectory() {
        let g = grid();
        let traj = vec![StateBundle::zeros(g, 0.0)];
        assert_eq!(dyadic_energy_norm(&traj, 1.6), 0.0);
    }

    #[test]
    fn energy_norm_single_mode_in_shell() {
        // a time-constant mode at |xi| = 8 is seen by at most the two shells
        // N = 4 and N = 8 whose psi values sum to 1
        let g = grid();
        let f = Field::single_mode(g, 0, 8, Complex64::new(1.0, 0.0));
        let b = StateBundle::new(
            f.clone(),
            Field::zeros(g, Representation::Spectral),
            Field::zeros(g, Representation::Spectral),
            0.0,
        )
        .unwrap();
        let s = 1.25;
        let e = dyadic_energy_norm(&[b], s);
        let l2 = f.l2_norm();
        // bound from the two adjacent shells: between psi-weighted values
        let lo = 4.0f64.powf(s) * l2 * 0.5;
        let hi = 8.0f64.powf(s) * l2 * 2.0f64.sqrt();
        assert!(e >= lo && e <= hi, "e={e}, window [{lo}, {hi}]");
    }

    #[test]
    fn energy_norm_equivalent_to_sobolev_for_constant_trajectories() {
        let g = grid();
        let mut c1: f64 = f64::INFINITY;
        let mut c2: f64 = 0.0;
        let s = 1.6;
        for seed in 0..20u64 {
            let b = StateBundle::new(
                random_field(g, 300 + seed),
                random_field(g, 400 + seed),
                random_field(g, 500 + seed),
                0.0,
            )
            .unwrap();
            let ratio = dyadic_energy_norm(&[b.clone()], s) / bundle_sobolev_norm(&b, s);
            c1 = c1.min(ratio);
            c2 = c2.max(ratio);
        }
        // report-style sanity band for the empirical equivalence constants
        assert!(c1 > 0.1 && c2 < 10.0, "c1={c1} c2={c2}");
    }
}
