//! Periodic spatial grid, complex vector fields, and the forward/inverse
//! transform contract.
//!
//! Fields live on the torus `[-L/2, L/2)^d` sampled at `M` points per axis.
//! The spectral representation stores the coefficients `c_k` of
//! `f(x) = sum_k c_k exp(i xi_k . x)` with `xi_k = 2 pi k / L` and
//! `k in {-M/2, ..., M/2 - 1}` per axis.

use std::sync::Arc;

use num_complex::Complex64;
use rustfft::{Fft, FftPlanner};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Grid {
    /// Spatial dimension, 1 or 2.
    pub d: usize,
    /// Period per axis.
    pub len: f64,
    /// Sample points per axis, a power of two.
    pub m: usize,
}

impl Grid {
    pub fn new(d: usize, len: f64, m: usize) -> Result<Self> {
        if !(d == 1 || d == 2) {
            return Err(Error::Parameter(format!("grid dimension must be 1 or 2, got {d}")));
        }
        if !(len > 0.0) {
            return Err(Error::Parameter(format!("grid period must be positive, got {len}")));
        }
        if m < 2 || !m.is_power_of_two() {
            return Err(Error::Parameter(format!(
                "samples per axis must be a power of two >= 2, got {m}"
            )));
        }
        Ok(Grid { d, len, m })
    }

    /// Total number of sample points.
    pub fn points(&self) -> usize {
        self.m.pow(self.d as u32)
    }

    /// Quadrature weight of one sample, `(L/M)^d`.
    pub fn dx(&self) -> f64 {
        (self.len / self.m as f64).powi(self.d as i32)
    }

    /// Signed lattice integer for an unsigned FFT index.
    pub fn signed_index(&self, k: usize) -> i64 {
        if k < self.m / 2 {
            k as i64
        } else {
            k as i64 - self.m as i64
        }
    }

    /// Frequency along one axis for an unsigned FFT index.
    pub fn xi_axis(&self, k: usize) -> f64 {
        2.0 * std::f64::consts::PI * self.signed_index(k) as f64 / self.len
    }

    /// Frequency vector at a flat index, row-major over axes.
    pub fn xi(&self, flat: usize) -> [f64; 2] {
        match self.d {
            1 => [self.xi_axis(flat), 0.0],
            _ => [self.xi_axis(flat / self.m), self.xi_axis(flat % self.m)],
        }
    }

    /// |xi|^2 at a flat index.
    pub fn xi_norm_sq(&self, flat: usize) -> f64 {
        let v = self.xi(flat);
        v[0] * v[0] + v[1] * v[1]
    }

    /// Spatial coordinate along one axis, `x_n = -L/2 + n L / M`.
    pub fn x_axis(&self, n: usize) -> f64 {
        -0.5 * self.len + n as f64 * self.len / self.m as f64
    }

    /// Coordinate vector at a flat index.
    pub fn x(&self, flat: usize) -> [f64; 2] {
        match self.d {
            1 => [self.x_axis(flat), 0.0],
            _ => [self.x_axis(flat / self.m), self.x_axis(flat % self.m)],
        }
    }

    /// Largest frequency magnitude present on the lattice.
    pub fn xi_max(&self) -> f64 {
        let per_axis = std::f64::consts::PI * self.m as f64 / self.len;
        (self.d as f64).sqrt() * per_axis
    }

    /// 2/3-rule dealiasing cutoff for quadratic products.
    pub fn dealias_cutoff(&self) -> f64 {
        2.0 * std::f64::consts::PI * self.m as f64 / (3.0 * self.len)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Representation {
    Physical,
    Spectral,
}

/// A `C^d`-valued function sampled on the grid, one complex array per
/// vector component.
#[derive(Debug, Clone)]
pub struct Field {
    pub grid: Grid,
    pub repr: Representation,
    comps: Vec<Vec<Complex64>>,
}

impl Field {
    /// A zero vector field with `grid.d` components.
    pub fn zeros(grid: Grid, repr: Representation) -> Self {
        Field::zeros_with(grid, repr, grid.d)
    }

    /// A zero field with an explicit component count (1 for scalars such as
    /// a divergence).
    pub fn zeros_with(grid: Grid, repr: Representation, ncomp: usize) -> Self {
        let comps = vec![vec![Complex64::new(0.0, 0.0); grid.points()]; ncomp];
        Field { grid, repr, comps }
    }

    pub fn scalar_zeros(grid: Grid, repr: Representation) -> Self {
        Field::zeros_with(grid, repr, 1)
    }

    pub fn from_components(grid: Grid, repr: Representation, comps: Vec<Vec<Complex64>>) -> Result<Self> {
        if comps.is_empty() {
            return Err(Error::Parameter("field needs at least one component".into()));
        }
        for c in &comps {
            if c.len() != grid.points() {
                return Err(Error::Parameter("component length does not match grid".into()));
            }
        }
        Ok(Field { grid, repr, comps })
    }

    /// Builds a field in physical representation by evaluating closures at
    /// the grid points, one closure result per component.
    pub fn from_fn(grid: Grid, f: impl Fn(usize, [f64; 2]) -> Complex64) -> Self {
        let comps = (0..grid.d)
            .map(|c| (0..grid.points()).map(|i| f(c, grid.x(i))).collect())
            .collect();
        Field {
            grid,
            repr: Representation::Physical,
            comps,
        }
    }

    /// A single spectral mode `exp(i xi_k . x)` placed in component `comp`
    /// of a `grid.d`-component field.
    pub fn single_mode(grid: Grid, comp: usize, flat_index: usize, amplitude: Complex64) -> Self {
        let mut f = Field::zeros(grid, Representation::Spectral);
        f.comps[comp][flat_index] = amplitude;
        f
    }

    /// A one-component field carrying a single spectral mode.
    pub fn scalar_single_mode(grid: Grid, flat_index: usize, amplitude: Complex64) -> Self {
        let mut f = Field::scalar_zeros(grid, Representation::Spectral);
        f.comps[0][flat_index] = amplitude;
        f
    }

    pub fn n_components(&self) -> usize {
        self.comps.len()
    }

    pub fn component(&self, c: usize) -> &[Complex64] {
        &self.comps[c]
    }

    pub fn component_mut(&mut self, c: usize) -> &mut [Complex64] {
        &mut self.comps[c]
    }

    pub fn components(&self) -> &[Vec<Complex64>] {
        &self.comps
    }

    pub fn same_grid(&self, other: &Field) -> Result<()> {
        if self.grid != other.grid {
            return Err(Error::GridMismatch(format!(
                "{:?} vs {:?}",
                self.grid, other.grid
            )));
        }
        Ok(())
    }

    pub fn to_spectral(&self) -> Field {
        match self.repr {
            Representation::Spectral => self.clone(),
            Representation::Physical => {
                let mut out = self.clone();
                let plan = plan(self.grid.m, true);
                for comp in &mut out.comps {
                    transform_axes(comp, self.grid, &plan);
                    let scale = 1.0 / self.grid.points() as f64;
                    for (k, v) in comp.iter_mut().enumerate() {
                        *v *= scale * parity_sign(self.grid, k);
                    }
                }
                out.repr = Representation::Spectral;
                out
            }
        }
    }

    pub fn to_physical(&self) -> Field {
        match self.repr {
            Representation::Physical => self.clone(),
            Representation::Spectral => {
                let mut out = self.clone();
                let plan = plan(self.grid.m, false);
                for comp in &mut out.comps {
                    for (k, v) in comp.iter_mut().enumerate() {
                        *v *= parity_sign(self.grid, k);
                    }
                    transform_axes(comp, self.grid, &plan);
                }
                out.repr = Representation::Physical;
                out
            }
        }
    }

    /// Applies a spectral multiplier `m(xi)`; accepts either representation.
    pub fn spectral_multiply(&self, mult: impl Fn([f64; 2]) -> Complex64) -> Field {
        let mut f = self.to_spectral();
        for comp in &mut f.comps {
            for (k, v) in comp.iter_mut().enumerate() {
                *v *= mult(f.grid.xi(k));
            }
        }
        f
    }

    /// Pointwise complex conjugate (in whichever representation; conjugating
    /// spectral coefficients additionally reflects the lattice).
    pub fn conj_physical(&self) -> Field {
        let mut f = self.to_physical();
        for comp in &mut f.comps {
            for v in comp.iter_mut() {
                *v = v.conj();
            }
        }
        f
    }

    pub fn scale(&self, a: Complex64) -> Field {
        let mut f = self.clone();
        for comp in &mut f.comps {
            for v in comp.iter_mut() {
                *v *= a;
            }
        }
        f
    }

    pub fn add(&self, other: &Field) -> Result<Field> {
        self.same_grid(other)?;
        let (a, b) = align(self, other);
        let mut f = a.clone();
        for (ca, cb) in f.comps.iter_mut().zip(b.comps.iter()) {
            for (va, vb) in ca.iter_mut().zip(cb.iter()) {
                *va += vb;
            }
        }
        Ok(f)
    }

    pub fn sub(&self, other: &Field) -> Result<Field> {
        self.same_grid(other)?;
        let (a, b) = align(self, other);
        let mut f = a.clone();
        for (ca, cb) in f.comps.iter_mut().zip(b.comps.iter()) {
            for (va, vb) in ca.iter_mut().zip(cb.iter()) {
                *va -= vb;
            }
        }
        Ok(f)
    }

    /// L2 norm via quadrature, equal in both representations by Parseval.
    pub fn l2_norm(&self) -> f64 {
        match self.repr {
            Representation::Physical => {
                let w = self.grid.dx();
                self.comps
                    .iter()
                    .flat_map(|c| c.iter())
                    .map(|v| v.norm_sqr())
                    .sum::<f64>()
                    .mul_w(w)
            }
            Representation::Spectral => {
                let w = self.grid.len.powi(self.grid.d as i32);
                self.comps
                    .iter()
                    .flat_map(|c| c.iter())
                    .map(|v| v.norm_sqr())
                    .sum::<f64>()
                    .mul_w(w)
            }
        }
    }

    pub fn sup_norm(&self) -> f64 {
        self.to_physical()
            .comps
            .iter()
            .flat_map(|c| c.iter())
            .map(|v| v.norm())
            .fold(0.0, f64::max)
    }
}

trait SqrtW {
    fn mul_w(self, w: f64) -> f64;
}

impl SqrtW for f64 {
    fn mul_w(self, w: f64) -> f64 {
        (self * w).sqrt()
    }
}

/// Brings two fields to a common representation (spectral wins on mismatch).
fn align(a: &Field, b: &Field) -> (Field, Field) {
    if a.repr == b.repr {
        (a.clone(), b.clone())
    } else {
        (a.to_spectral(), b.to_spectral())
    }
}

/// `(-1)^(k1 + ... + kd)` phase tying the FFT index convention to the
/// `[-L/2, L/2)` coordinate chart.
fn parity_sign(grid: Grid, flat: usize) -> f64 {
    let s = match grid.d {
        1 => flat,
        _ => flat / grid.m + flat % grid.m,
    };
    if s % 2 == 0 {
        1.0
    } else {
        -1.0
    }
}

fn plan(m: usize, forward: bool) -> Arc<dyn Fft<f64>> {
    let mut planner = FftPlanner::new();
    if forward {
        planner.plan_fft_forward(m)
    } else {
        planner.plan_fft_inverse(m)
    }
}

/// In-place FFT along every axis of a row-major array.
fn transform_axes(data: &mut [Complex64], grid: Grid, plan: &Arc<dyn Fft<f64>>) {
    let m = grid.m;
    match grid.d {
        1 => plan.process(data),
        _ => {
            // axis 1 (contiguous rows)
            for row in data.chunks_exact_mut(m) {
                plan.process(row);
            }
            // axis 0 (strided columns)
            let mut col = vec![Complex64::new(0.0, 0.0); m];
            for j in 0..m {
                for i in 0..m {
                    col[i] = data[i * m + j];
                }
                plan.process(&mut col);
                for i in 0..m {
                    data[i * m + j] = col[i];
                }
            }
        }
    }
}

/// The three unknown fields of the system at one instant.
#[derive(Debug, Clone)]
pub struct StateBundle {
    pub u: Field,
    pub v: Field,
    pub w: Field,
    pub time: f64,
}

impl StateBundle {
    pub fn new(u: Field, v: Field, w: Field, time: f64) -> Result<Self> {
        u.same_grid(&v)?;
        u.same_grid(&w)?;
        for f in [&u, &v, &w] {
            if f.n_components() != f.grid.d {
                return Err(Error::Parameter(format!(
                    "bundle fields must have {} components, got {}",
                    f.grid.d,
                    f.n_components()
                )));
            }
        }
        Ok(StateBundle { u, v, w, time })
    }

    pub fn zeros(grid: Grid, time: f64) -> Self {
        StateBundle {
            u: Field::zeros(grid, Representation::Spectral),
            v: Field::zeros(grid, Representation::Spectral),
            w: Field::zeros(grid, Representation::Spectral),
            time,
        }
    }

    pub fn grid(&self) -> Grid {
        self.u.grid
    }

    pub fn fields(&self) -> [&Field; 3] {
        [&self.u, &self.v, &self.w]
    }

    pub fn map(&self, f: impl Fn(&Field) -> Field) -> StateBundle {
        StateBundle {
            u: f(&self.u),
            v: f(&self.v),
            w: f(&self.w),
            time: self.time,
        }
    }

    pub fn sub(&self, other: &StateBundle) -> Result<StateBundle> {
        Ok(StateBundle {
            u: self.u.sub(&other.u)?,
            v: self.v.sub(&other.v)?,
            w: self.w.sub(&other.w)?,
            time: self.time,
        })
    }

    /// Square-sum convention over the three fields.
    pub fn l2_norm(&self) -> f64 {
        self.fields()
            .iter()
            .map(|f| f.l2_norm().powi(2))
            .sum::<f64>()
            .sqrt()
    }

    pub fn sup_norm(&self) -> f64 {
        self.fields().iter().map(|f| f.sup_norm()).fold(0.0, f64::max)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use rand::prelude::*;
    use rand_chacha::ChaCha8Rng;

    fn random_field(grid: Grid, seed: u64) -> Field {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let comps = (0..grid.d)
            .map(|_| {
                (0..grid.points())
                    .map(|_| Complex64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)))
                    .collect()
            })
            .collect();
        Field::from_components(grid, Representation::Physical, comps).unwrap()
    }

    #[test]
    fn roundtrip_1d() {
        let grid = Grid::new(1, 64.0 * std::f64::consts::PI, 256).unwrap();
        let f = random_field(grid, 1);
        let back = f.to_spectral().to_physical();
        let num: f64 = f
            .component(0)
            .iter()
            .zip(back.component(0))
            .map(|(a, b)| (a - b).norm_sqr())
            .sum();
        let den: f64 = f.component(0).iter().map(|a| a.norm_sqr()).sum();
        assert!((num / den).sqrt() < 1e-12);
    }

    #[test]
    fn roundtrip_2d() {
        let grid = Grid::new(2, 16.0 * std::f64::consts::PI, 32).unwrap();
        let f = random_field(grid, 2);
        let back = f.to_spectral().to_physical();
        for c in 0..2 {
            let num: f64 = f
                .component(c)
                .iter()
                .zip(back.component(c))
                .map(|(a, b)| (a - b).norm_sqr())
                .sum();
            let den: f64 = f.component(c).iter().map(|a| a.norm_sqr()).sum();
            assert!((num / den).sqrt() < 1e-12);
        }
    }

    #[test]
    fn single_mode_is_clean_in_spectrum() {
        let grid = Grid::new(1, 2.0 * std::f64::consts::PI, 64).unwrap();
        // exp(i 3 x) on the lattice
        let f = Field::from_fn(grid, |_, x| Complex64::new(0.0, 3.0 * x[0]).exp());
        let s = f.to_spectral();
        for k in 0..grid.points() {
            let c = s.component(0)[k];
            if grid.signed_index(k) == 3 {
                assert_relative_eq!(c.re, 1.0, epsilon = 1e-12);
                assert_relative_eq!(c.im, 0.0, epsilon = 1e-12);
            } else {
                assert!(c.norm() < 1e-12, "leak at k={k}: {c}");
            }
        }
    }

    #[test]
    fn parseval_both_representations() {
        let grid = Grid::new(1, 10.0, 128).unwrap();
        let f = random_field(grid, 3);
        assert_relative_eq!(f.l2_norm(), f.to_spectral().l2_norm(), max_relative = 1e-12);
        let grid2 = Grid::new(2, 8.0, 16).unwrap();
        let g = random_field(grid2, 4);
        assert_relative_eq!(g.l2_norm(), g.to_spectral().l2_norm(), max_relative = 1e-12);
    }

    #[test]
    fn grid_validation() {
        assert!(Grid::new(3, 1.0, 8).is_err());
        assert!(Grid::new(1, -1.0, 8).is_err());
        assert!(Grid::new(1, 1.0, 9).is_err());
    }
}
