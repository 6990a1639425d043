//! Space-time samples and the modulation-weighted norms.
//!
//! A sample holds one scalar component on a uniform `(t, x)` lattice. Its
//! space-time coefficients `c_{m,k}` are defined through
//! `f(t, x) = sum c_{m,k} exp(i (tau_m t + xi_k . x))` with the rectangular
//! window of the sample as the fundamental time period, so `tau` resolution
//! is `2 pi / (Q dt)`. Modulation shells finer than that resolution cannot be
//! distinguished; the norm decomposition merges them into its bottom shell.

use num_complex::Complex64;
use rustfft::FftPlanner;

use crate::dyadic::{eta, eta_j, DyadicScale};
use crate::error::{Error, Result};
use crate::grid::{Field, Grid, Representation};

#[derive(Debug, Clone, Copy)]
pub struct WindowDescriptor {
    pub center: f64,
    pub width_parameter: f64,
}

/// A scalar field trajectory on a uniform `(t, x)` lattice.
#[derive(Debug, Clone)]
pub struct SpaceTimeSample {
    pub grid: Grid,
    pub t0: f64,
    pub dt: f64,
    pub q: usize,
    /// Row-major `(t, x)`: `values[qt * grid.points() + x]`.
    pub values: Vec<Complex64>,
    pub window: Option<WindowDescriptor>,
}

impl SpaceTimeSample {
    pub fn new(grid: Grid, t0: f64, dt: f64, q: usize, values: Vec<Complex64>) -> Result<Self> {
        if q < 2 {
            return Err(Error::Parameter("need at least two time samples".into()));
        }
        if !(dt > 0.0) {
            return Err(Error::Parameter("time step must be positive".into()));
        }
        if values.len() != q * grid.points() {
            return Err(Error::Parameter("value count does not match the (t, x) lattice".into()));
        }
        Ok(SpaceTimeSample {
            grid,
            t0,
            dt,
            q,
            values,
            window: None,
        })
    }

    pub fn from_fn(
        grid: Grid,
        t0: f64,
        dt: f64,
        q: usize,
        f: impl Fn(f64, [f64; 2]) -> Complex64,
    ) -> Result<Self> {
        let mut values = Vec::with_capacity(q * grid.points());
        for qt in 0..q {
            let t = t0 + qt as f64 * dt;
            for i in 0..grid.points() {
                values.push(f(t, grid.x(i)));
            }
        }
        SpaceTimeSample::new(grid, t0, dt, q, values)
    }

    /// Samples the free evolution `exp(i t sigma Laplace)` of scalar spatial
    /// data given by spectral coefficients.
    pub fn free_solution(data: &Field, sigma: f64, t0: f64, dt: f64, q: usize) -> Result<Self> {
        if data.n_components() != 1 {
            return Err(Error::Parameter("free solution sampling takes scalar data".into()));
        }
        let grid = data.grid;
        let spec = data.to_spectral();
        let mut values = Vec::with_capacity(q * grid.points());
        for qt in 0..q {
            let t = t0 + qt as f64 * dt;
            let slab = Field::from_components(
                grid,
                Representation::Spectral,
                vec![spec
                    .component(0)
                    .iter()
                    .enumerate()
                    .map(|(k, c)| c * Complex64::new(0.0, -sigma * grid.xi_norm_sq(k) * t).exp())
                    .collect()],
            )?
            .to_physical();
            values.extend_from_slice(slab.component(0));
        }
        SpaceTimeSample::new(grid, t0, dt, q, values)
    }

    pub fn duration(&self) -> f64 {
        self.q as f64 * self.dt
    }

    /// `tau` lattice spacing.
    pub fn dtau(&self) -> f64 {
        2.0 * std::f64::consts::PI / self.duration()
    }

    pub fn tau(&self, m: usize) -> f64 {
        let signed = if m < self.q / 2 {
            m as i64
        } else {
            m as i64 - self.q as i64
        };
        signed as f64 * self.dtau()
    }

    pub fn times(&self) -> Vec<f64> {
        (0..self.q).map(|qt| self.t0 + qt as f64 * self.dt).collect()
    }

    /// Quadrature L2 norm over the sampled window.
    pub fn l2_norm(&self) -> f64 {
        let w = self.dt * self.grid.dx();
        (self.values.iter().map(|v| v.norm_sqr()).sum::<f64>() * w).sqrt()
    }

    /// Space-time coefficients, row-major `(m, k)`.
    pub fn coefficients(&self) -> Vec<Complex64> {
        let p = self.grid.points();
        // spatial transform per slab
        let mut spatial: Vec<Complex64> = Vec::with_capacity(self.q * p);
        for qt in 0..self.q {
            let slab = Field::from_components(
                self.grid,
                Representation::Physical,
                vec![self.values[qt * p..(qt + 1) * p].to_vec()],
            )
            .expect("layout")
            .to_spectral();
            spatial.extend_from_slice(slab.component(0));
        }
        // time transform per spatial mode, with the t0 phase so that tau is
        // the true frequency of the sampled function
        let mut planner = FftPlanner::new();
        let fft = planner.plan_fft_forward(self.q);
        let mut out = vec![Complex64::new(0.0, 0.0); self.q * p];
        let mut buf = vec![Complex64::new(0.0, 0.0); self.q];
        for k in 0..p {
            for qt in 0..self.q {
                buf[qt] = spatial[qt * p + k];
            }
            fft.process(&mut buf);
            for m in 0..self.q {
                let phase = Complex64::new(0.0, -self.tau(m) * self.t0).exp();
                out[m * p + k] = buf[m] / self.q as f64 * phase;
            }
        }
        out
    }

    /// Rebuilds sample values from coefficients (inverse of `coefficients`).
    pub fn from_coefficients(
        grid: Grid,
        t0: f64,
        dt: f64,
        q: usize,
        coeffs: &[Complex64],
    ) -> Result<Self> {
        let p = grid.points();
        if coeffs.len() != q * p {
            return Err(Error::Parameter("coefficient count mismatch".into()));
        }
        let probe = SpaceTimeSample::new(grid, t0, dt, q, vec![Complex64::default(); q * p])?;
        let mut planner = FftPlanner::new();
        let ifft = planner.plan_fft_inverse(q);
        // undo the t0 phase, inverse FFT in time, then spatial inversion
        let mut spatial = vec![Complex64::new(0.0, 0.0); q * p];
        let mut buf = vec![Complex64::new(0.0, 0.0); q];
        for k in 0..p {
            for m in 0..q {
                let phase = Complex64::new(0.0, probe.tau(m) * t0).exp();
                buf[m] = coeffs[m * p + k] * phase;
            }
            ifft.process(&mut buf);
            for qt in 0..q {
                spatial[qt * p + k] = buf[qt];
            }
        }
        let mut values = Vec::with_capacity(q * p);
        for qt in 0..q {
            let slab = Field::from_components(
                grid,
                Representation::Spectral,
                vec![spatial[qt * p..(qt + 1) * p].to_vec()],
            )?
            .to_physical();
            values.extend_from_slice(slab.component(0));
        }
        SpaceTimeSample::new(grid, t0, dt, q, values)
    }

    /// Pointwise multiplication by a time window.
    pub fn windowed(&self, g: impl Fn(f64) -> f64) -> SpaceTimeSample {
        let p = self.grid.points();
        let mut out = self.clone();
        for qt in 0..self.q {
            let w = g(self.t0 + qt as f64 * self.dt);
            for v in &mut out.values[qt * p..(qt + 1) * p] {
                *v *= w;
            }
        }
        out
    }

    /// Largest modulation magnitude on the resolved lattice.
    fn y_max(&self, sigma: f64) -> f64 {
        let tau_max = std::f64::consts::PI / self.dt;
        tau_max + sigma.abs() * self.grid.xi_max().powi(2)
    }
}

/// The dyadic modulation decomposition adapted to the sample resolution:
/// shells `j_lo ..= j_max`, the bottom shell being the ball `eta(y / 2^j_lo)`
/// (shells finer than the `tau` resolution merged together).
#[derive(Debug, Clone, Copy)]
pub struct ModulationShells {
    pub j_lo: u32,
    pub j_max: u32,
}

impl ModulationShells {
    pub fn for_sample(sample: &SpaceTimeSample, sigma: f64) -> Self {
        let dtau = sample.dtau();
        let j_lo = if dtau <= 1.0 { 0 } else { dtau.log2().floor() as u32 };
        let y_max = sample.y_max(sigma);
        let mut j_max = j_lo;
        while (4.0 / 3.0) * 2f64.powi(j_max as i32) < y_max {
            j_max += 1;
        }
        ModulationShells { j_lo, j_max }
    }

    pub fn indices(&self) -> impl Iterator<Item = u32> {
        self.j_lo..=self.j_max
    }

    /// Shell profile at modulation `y`; partition of unity over the indices.
    pub fn value(&self, j: u32, y: f64) -> f64 {
        if j == self.j_lo {
            eta(y / 2f64.powi(self.j_lo as i32))
        } else {
            eta_j(y, j)
        }
    }

    pub fn weight(&self, j: u32) -> f64 {
        2f64.powf(0.5 * j as f64)
    }
}

/// Modulation projection: multiplies the space-time coefficients by
/// `eta_j(tau + sigma |xi|^2)` and inverts. Needs at least 4 time samples.
pub fn modulation_project(sample: &SpaceTimeSample, j: u32, sigma: f64) -> Result<SpaceTimeSample> {
    if sigma == 0.0 {
        return Err(Error::Parameter("modulation projection needs sigma != 0".into()));
    }
    if sample.q < 4 {
        return Err(Error::Parameter("modulation projection needs at least 4 time samples".into()));
    }
    let p = sample.grid.points();
    let mut coeffs = sample.coefficients();
    for m in 0..sample.q {
        let tau = sample.tau(m);
        for k in 0..p {
            let y = tau + sigma * sample.grid.xi_norm_sq(k);
            coeffs[m * p + k] *= eta_j(y, j);
        }
    }
    SpaceTimeSample::from_coefficients(sample.grid, sample.t0, sample.dt, sample.q, &coeffs)
}

fn check_shell_support(coeffs: &[Complex64], sample: &SpaceTimeSample, n: DyadicScale) -> Result<()> {
    let p = sample.grid.points();
    let mut inside = 0.0;
    let mut total = 0.0;
    for (idx, c) in coeffs.iter().enumerate() {
        let k = idx % p;
        let mass = c.norm_sqr();
        total += mass;
        if n.shell_contains(sample.grid.xi_norm_sq(k).sqrt()) {
            inside += mass;
        }
    }
    if total == 0.0 {
        return Ok(());
    }
    let frac = ((total - inside) / total).max(0.0);
    if frac > 1e-8 {
        return Err(Error::SupportViolation {
            mass_fraction: frac,
            tolerance: 1e-8,
        });
    }
    Ok(())
}

fn xns_of_coefficients(
    coeffs: &[Complex64],
    sample: &SpaceTimeSample,
    shells: &ModulationShells,
    sigma: f64,
) -> f64 {
    let p = sample.grid.points();
    let measure = sample.duration() * sample.grid.len.powi(sample.grid.d as i32);
    let mut total = 0.0;
    for j in shells.indices() {
        let mut mass = 0.0;
        for m in 0..sample.q {
            let tau = sample.tau(m);
            for k in 0..p {
                let y = tau + sigma * sample.grid.xi_norm_sq(k);
                let s = shells.value(j, y);
                if s != 0.0 {
                    mass += (s * s) * coeffs[m * p + k].norm_sqr();
                }
            }
        }
        total += shells.weight(j) * (measure * mass).sqrt();
    }
    total
}

/// The modulation-weighted norm `sum_j 2^{j/2} || eta_j(tau + sigma |xi|^2) c ||`
/// on the discrete lattice. The sample must be spatially supported in the
/// shell `I_N` (relative tolerance `1e-8`).
pub fn xns_norm(sample: &SpaceTimeSample, n: DyadicScale, sigma: f64) -> Result<f64> {
    if sigma == 0.0 {
        return Err(Error::Parameter("xns norm needs sigma != 0".into()));
    }
    let coeffs = sample.coefficients();
    check_shell_support(&coeffs, sample, n)?;
    let shells = ModulationShells::for_sample(sample, sigma);
    Ok(xns_of_coefficients(&coeffs, sample, &shells, sigma))
}

fn window_centers(sample: &SpaceTimeSample, n: DyadicScale, t_win: f64) -> Vec<f64> {
    let spacing = t_win / (4.0 * n.value());
    let start = sample.t0;
    let end = sample.t0 + sample.duration();
    let count = ((end - start) / spacing).ceil() as usize + 1;
    (0..count).map(|i| start + i as f64 * spacing).collect()
}

/// Short-time restriction norm proxy: the supremum over a lattice of window
/// centers (spacing `T / 4N`) of the `X_{N, sigma}` norm of the windowed
/// sample. This is a computable upper-structure proxy; no infimum over
/// extensions is attempted.
pub fn f_norm_proxy(sample: &SpaceTimeSample, n: DyadicScale, sigma: f64, t_win: f64) -> Result<f64> {
    proxy_impl(sample, n, sigma, t_win, false)
}

/// As `f_norm_proxy` with the Duhamel resolvent weight
/// `(tau + sigma |xi|^2 + i N / T)^{-1}` applied before the norm.
pub fn g_norm_proxy(sample: &SpaceTimeSample, n: DyadicScale, sigma: f64, t_win: f64) -> Result<f64> {
    proxy_impl(sample, n, sigma, t_win, true)
}

fn proxy_impl(
    sample: &SpaceTimeSample,
    n: DyadicScale,
    sigma: f64,
    t_win: f64,
    resolvent: bool,
) -> Result<f64> {
    if sigma == 0.0 {
        return Err(Error::Parameter("norm proxy needs sigma != 0".into()));
    }
    if !(t_win > 0.0 && t_win <= 1.0) {
        return Err(Error::Parameter(format!(
            "window parameter T must lie in (0, 1], got {t_win}"
        )));
    }
    check_shell_support(&sample.coefficients(), sample, n)?;
    let centers = window_centers(sample, n, t_win);
    if centers.is_empty() {
        return Err(Error::Parameter("window-center lattice is empty".into()));
    }
    let shells = ModulationShells::for_sample(sample, sigma);
    let p = sample.grid.points();
    let rate = n.value() / t_win;
    let mut best: f64 = 0.0;
    for c in centers {
        let windowed = sample.windowed(|t| eta(rate * (t - c)));
        let mut coeffs = windowed.coefficients();
        if resolvent {
            for m in 0..sample.q {
                let tau = windowed.tau(m);
                for k in 0..p {
                    let y = tau + sigma * sample.grid.xi_norm_sq(k);
                    coeffs[m * p + k] *= 1.0 / Complex64::new(y, rate);
                }
            }
        }
        best = best.max(xns_of_coefficients(&coeffs, &windowed, &shells, sigma));
    }
    Ok(best)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use rand::prelude::*;
    use rand_chacha::ChaCha8Rng;

    fn grid() -> Grid {
        Grid::new(1, 2.0 * std::f64::consts::PI, 32).unwrap()
    }

    #[test]
    fn coefficients_roundtrip_and_parseval() {
        let g = grid();
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let q = 16;
        let values: Vec<Complex64> = (0..q * g.points())
            .map(|_| Complex64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)))
            .collect();
        let s = SpaceTimeSample::new(g, -0.3, 0.125, q, values).unwrap();
        let c = s.coefficients();
        let back = SpaceTimeSample::from_coefficients(g, s.t0, s.dt, q, &c).unwrap();
        let err: f64 = s
            .values
            .iter()
            .zip(&back.values)
            .map(|(a, b)| (a - b).norm())
            .fold(0.0, f64::max);
        assert!(err < 1e-12, "roundtrip error {err}");
        let coeff_norm = (s.duration() * g.len * c.iter().map(|v| v.norm_sqr()).sum::<f64>()).sqrt();
        assert_relative_eq!(coeff_norm, s.l2_norm(), max_relative = 1e-12);
    }

    #[test]
    fn coefficients_match_naive_dft() {
        // independent oracle: direct O(Q^2 P^2) space-time DFT
        let g = Grid::new(1, 2.0 * std::f64::consts::PI, 8).unwrap();
        let q = 8;
        let dt = 0.5;
        let t0 = 0.7;
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let values: Vec<Complex64> = (0..q * g.points())
            .map(|_| Complex64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)))
            .collect();
        let s = SpaceTimeSample::new(g, t0, dt, q, values.clone()).unwrap();
        let c = s.coefficients();
        let p = g.points();
        for m in 0..q {
            for k in 0..p {
                let mut acc = Complex64::new(0.0, 0.0);
                for qt in 0..q {
                    let t = t0 + qt as f64 * dt;
                    for x in 0..p {
                        let phase = s.tau(m) * t + g.xi(k)[0] * g.x(x)[0];
                        acc += values[qt * p + x] * Complex64::new(0.0, -phase).exp();
                    }
                }
                acc /= (q * p) as f64;
                assert!((acc - c[m * p + k]).norm() < 1e-12, "m={m} k={k}");
            }
        }
    }

    #[test]
    fn free_mode_concentrates_in_bottom_shell() {
        let g = grid();
        let sigma = 1.0;
        // mode with xi = 3: the carrier sigma |xi|^2 = 9 must sit on the tau
        // lattice, dtau = 2 pi / duration
        let duration = 2.0 * std::f64::consts::PI * 9.0 / 9.0; // m = 9 on the lattice
        let q = 64;
        let dt = duration / q as f64;
        let data = Field::scalar_single_mode(g, 3, Complex64::new(1.0, 0.0));
        let s = SpaceTimeSample::free_solution(&data, sigma, 0.0, dt, q).unwrap();

        let p0 = modulation_project(&s, 0, sigma).unwrap();
        let diff: f64 = p0
            .values
            .iter()
            .zip(&s.values)
            .map(|(a, b)| (a - b).norm_sqr())
            .sum::<f64>()
            .sqrt()
            / s.values.iter().map(|v| v.norm_sqr()).sum::<f64>().sqrt();
        assert!(diff <= 1e-2, "Q_0 should retain the free mode, diff {diff}");
        let p5 = modulation_project(&s, 5, sigma).unwrap();
        let high = p5.l2_norm() / s.l2_norm();
        assert!(high <= 1e-2, "high shells should be empty, got {high}");
    }

    #[test]
    fn modulation_telescoping_is_identity() {
        let g = grid();
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let q = 16;
        let values: Vec<Complex64> = (0..q * g.points())
            .map(|_| Complex64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)))
            .collect();
        let s = SpaceTimeSample::new(g, 0.0, 0.25, q, values).unwrap();
        let sigma = 0.7;
        let shells = ModulationShells::for_sample(&s, sigma);
        let mut acc = vec![Complex64::new(0.0, 0.0); s.values.len()];
        for j in 0..=shells.j_max {
            let pj = modulation_project(&s, j, sigma).unwrap();
            for (a, b) in acc.iter_mut().zip(&pj.values) {
                *a += b;
            }
        }
        let err = s
            .values
            .iter()
            .zip(&acc)
            .map(|(a, b)| (a - b).norm())
            .fold(0.0, f64::max);
        assert!(err < 1e-12, "telescoping error {err}");
    }

    #[test]
    fn modulation_commutes_with_spatial_projector() {
        let g = grid();
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let q = 8;
        let values: Vec<Complex64> = (0..q * g.points())
            .map(|_| Complex64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)))
            .collect();
        let s = SpaceTimeSample::new(g, 0.0, 0.5, q, values).unwrap();
        let n = DyadicScale::new(4).unwrap();
        let project_spatial = |s: &SpaceTimeSample| {
            let p = s.grid.points();
            let mut out = s.clone();
            for qt in 0..s.q {
                let slab = Field::from_components(
                    s.grid,
                    Representation::Physical,
                    vec![s.values[qt * p..(qt + 1) * p].to_vec()],
                )
                .unwrap();
                let pn = crate::dyadic::project_dyadic(&slab, n).to_physical();
                out.values[qt * p..(qt + 1) * p].copy_from_slice(pn.component(0));
            }
            out
        };
        let a = modulation_project(&project_spatial(&s), 2, 1.0).unwrap();
        let b = project_spatial(&modulation_project(&s, 2, 1.0).unwrap());
        let err = a
            .values
            .iter()
            .zip(&b.values)
            .map(|(x, y)| (x - y).norm())
            .fold(0.0, f64::max);
        assert!(err < 1e-12);
    }

    #[test]
    fn modulation_rejects_short_samples() {
        let g = grid();
        // the constructor allows q >= 2 but the projector requires q >= 4
        let s = SpaceTimeSample::new(g, 0.0, 0.5, 3, vec![Complex64::default(); 3 * g.points()]).unwrap();
        assert!(modulation_project(&s, 0, 1.0).is_err());
    }

    #[test]
    fn xns_single_shell_formula() {
        let g = grid();
        let q = 32;
        let duration = 8.0;
        let dt = duration / q as f64;
        let n = DyadicScale::new(4).unwrap();
        let sigma = 1.0;
        let probe =
            SpaceTimeSample::new(g, 0.0, dt, q, vec![Complex64::default(); q * g.points()]).unwrap();
        let shells = ModulationShells::for_sample(&probe, sigma);
        // choose a target shell above the merged bottom and fill lattice
        // points whose modulation lies in its flat region
        let j0 = shells.j_lo + 3;
        let flat_lo = (5.0 / 3.0) * 2f64.powi(j0 as i32 - 1);
        let flat_hi = (4.0 / 3.0) * 2f64.powi(j0 as i32);
        let p = g.points();
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let mut coeffs = vec![Complex64::new(0.0, 0.0); q * p];
        let mut placed = 0;
        for m in 0..q {
            for k in 0..p {
                let r = g.xi_norm_sq(k).sqrt();
                if !n.shell_contains(r) {
                    continue;
                }
                let y = probe.tau(m) + sigma * g.xi_norm_sq(k);
                if y >= flat_lo && y <= flat_hi {
                    coeffs[m * p + k] =
                        Complex64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0));
                    placed += 1;
                }
            }
        }
        assert!(placed > 3, "test setup produced too few lattice points");
        let s = SpaceTimeSample::from_coefficients(g, 0.0, dt, q, &coeffs).unwrap();
        let got = xns_norm(&s, n, sigma).unwrap();
        let expect = 2f64.powf(0.5 * j0 as f64) * s.l2_norm();
        assert_relative_eq!(got, expect, max_relative = 1e-10);
        // absolute homogeneity
        let scaled = SpaceTimeSample::from_coefficients(
            g,
            0.0,
            dt,
            q,
            &coeffs.iter().map(|c| c * 2.5).collect::<Vec<_>>(),
        )
        .unwrap();
        assert_relative_eq!(xns_norm(&scaled, n, sigma).unwrap(), 2.5 * got, max_relative = 1e-12);
    }

    #[test]
    fn xns_rejects_off_shell_support() {
        let g = grid();
        let q = 8;
        // constant in space: all mass at xi = 0, far outside I_8
        let values = vec![Complex64::new(1.0, 0.0); q * g.points()];
        let s = SpaceTimeSample::new(g, 0.0, 0.5, q, values).unwrap();
        let n = DyadicScale::new(8).unwrap();
        match xns_norm(&s, n, 1.0) {
            Err(Error::SupportViolation { mass_fraction, .. }) => assert!(mass_fraction > 0.9),
            other => panic!("expected support violation, got {other:?}"),
        }
    }

    #[test]
    fn zero_sample_proxies_vanish() {
        let g = grid();
        let s = SpaceTimeSample::new(g, 0.0, 0.25, 8, vec![Complex64::default(); 8 * g.points()]).unwrap();
        let n = DyadicScale::new(4).unwrap();
        assert_eq!(f_norm_proxy(&s, n, 1.0, 1.0).unwrap(), 0.0);
        assert_eq!(g_norm_proxy(&s, n, 1.0, 1.0).unwrap(), 0.0);
    }

    #[test]
    fn g_proxy_bounded_by_weighted_f_proxy() {
        // resolvent magnitude never exceeds T/N
        let g = grid();
        let n = DyadicScale::new(4).unwrap();
        let sigma = 1.0;
        let t_win = 1.0;
        let q = 48;
        let dt = 8.0 / q as f64;
        let mut rng = ChaCha8Rng::seed_from_u64(6);
        let p = g.points();
        let mut coeffs = vec![Complex64::new(0.0, 0.0); q * p];
        for m in 0..q {
            for k in 0..p {
                if n.shell_contains(g.xi_norm_sq(k).sqrt()) {
                    coeffs[m * p + k] =
                        Complex64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0));
                }
            }
        }
        let s = SpaceTimeSample::from_coefficients(g, 0.0, dt, q, &coeffs).unwrap();
        let f = f_norm_proxy(&s, n, sigma, t_win).unwrap();
        let gp = g_norm_proxy(&s, n, sigma, t_win).unwrap();
        let max_weight = t_win / n.value();
        assert!(gp <= f * max_weight * 1.0001, "g = {gp}, bound = {}", f * max_weight);
    }

    #[test]
    fn f_proxy_uniform_over_shells_for_free_solutions() {
        // desk analogue of the F-norm boundedness of free solutions:
        // unit-L2 data at shell N, window width T/N; the proxy should stay
        // inside a fixed band as N doubles
        let sigma = 1.0;
        let t_win = 1.0;
        let mut values = vec![];
        for log_n in 1..=5 {
            let nval = 1u64 << log_n;
            let n = DyadicScale::new(nval).unwrap();
            let m = (8 * nval as usize).max(32);
            let g = Grid::new(1, 2.0 * std::f64::consts::PI, m).unwrap();
            let mut data = vec![Complex64::new(0.0, 0.0); g.points()];
            let mut count = 0;
            for k in 0..g.points() {
                let r = g.xi_norm_sq(k).sqrt();
                if r >= 0.75 * nval as f64 && r <= 1.5 * nval as f64 {
                    data[k] = Complex64::new(1.0, 0.0);
                    count += 1;
                }
            }
            assert!(count > 0);
            let norm = (g.len * count as f64).sqrt();
            for v in data.iter_mut() {
                *v /= norm;
            }
            let field = Field::from_components(g, Representation::Spectral, vec![data]).unwrap();
            // short sample around t = 0 resolving the carrier
            let carrier = sigma * (2.0 * nval as f64).powi(2);
            let dt = std::f64::consts::PI / (1.3 * carrier + 40.0);
            let duration = 4.0 * t_win / nval as f64;
            let q = ((duration / dt).ceil() as usize).next_power_of_two().max(16);
            let dt = duration / q as f64;
            let s = SpaceTimeSample::free_solution(&field, sigma, -duration / 2.0, dt, q).unwrap();
            let f = f_norm_proxy(&s, n, sigma, t_win).unwrap();
            values.push(f);
        }
        let lo = values.iter().copied().fold(f64::INFINITY, f64::min);
        let hi = values.iter().copied().fold(0.0f64, f64::max);
        assert!(hi / lo < 4.0, "free-solution proxy should be N-uniform, got {values:?}");
    }
}
