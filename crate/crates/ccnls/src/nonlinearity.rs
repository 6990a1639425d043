//! The truncated quadratic nonlinearity and the commutator operators used by
//! the energy identities.
//!
//! Products are evaluated in physical space (transform, multiply, transform
//! back); derivatives are applied spectrally. Every product is followed by
//! the 2/3-rule dealiasing mask, so the effective truncation radius is
//! `min(K, 2 pi M / (3 L))`.

use num_complex::Complex64;

use crate::dyadic::{project_dyadic, sharp_truncate, DyadicScale};
use crate::error::{Error, Result};
use crate::grid::{Field, Representation, StateBundle};
use crate::system::SystemParams;

/// Divergence of a vector field, computed spectrally; one-component output.
pub fn divergence(f: &Field) -> Field {
    let s = f.to_spectral();
    let grid = s.grid;
    let mut out = vec![Complex64::new(0.0, 0.0); grid.points()];
    for (j, comp) in s.components().iter().enumerate() {
        for (k, v) in comp.iter().enumerate() {
            let xi = grid.xi(k);
            out[k] += Complex64::new(0.0, xi[j]) * v;
        }
    }
    Field::from_components(grid, Representation::Spectral, vec![out]).expect("grid layout")
}

/// Gradient of a scalar field; `grid.d` components.
pub fn gradient(f: &Field) -> Field {
    assert_eq!(f.n_components(), 1, "gradient takes a scalar field");
    let s = f.to_spectral();
    let grid = s.grid;
    let comps = (0..grid.d)
        .map(|j| {
            s.component(0)
                .iter()
                .enumerate()
                .map(|(k, v)| Complex64::new(0.0, grid.xi(k)[j]) * v)
                .collect()
        })
        .collect();
    Field::from_components(grid, Representation::Spectral, comps).expect("grid layout")
}

/// Componentwise partial derivative along one axis.
pub fn partial(f: &Field, axis: usize) -> Field {
    let s = f.to_spectral();
    let grid = s.grid;
    let comps = s
        .components()
        .iter()
        .map(|c| {
            c.iter()
                .enumerate()
                .map(|(k, v)| Complex64::new(0.0, grid.xi(k)[axis]) * v)
                .collect()
        })
        .collect();
    Field::from_components(grid, Representation::Spectral, comps).expect("grid layout")
}

/// Pointwise product of a field with a scalar field, in physical space.
pub fn mul_scalar(a: &Field, s: &Field) -> Result<Field> {
    a.same_grid(s)?;
    if s.n_components() != 1 {
        return Err(Error::Parameter("scalar factor must have one component".into()));
    }
    let ap = a.to_physical();
    let sp = s.to_physical();
    let comps = ap
        .components()
        .iter()
        .map(|c| c.iter().zip(sp.component(0)).map(|(x, y)| x * y).collect())
        .collect();
    Field::from_components(ap.grid, Representation::Physical, comps)
}

/// Pointwise contraction `a . b = sum_j a_j b_j` (no conjugation); scalar output.
pub fn dot(a: &Field, b: &Field) -> Result<Field> {
    a.same_grid(b)?;
    if a.n_components() != b.n_components() {
        return Err(Error::Parameter("component counts differ in contraction".into()));
    }
    let ap = a.to_physical();
    let bp = b.to_physical();
    let mut out = vec![Complex64::new(0.0, 0.0); ap.grid.points()];
    for (ca, cb) in ap.components().iter().zip(bp.components()) {
        for ((o, x), y) in out.iter_mut().zip(ca).zip(cb) {
            *o += x * y;
        }
    }
    Field::from_components(ap.grid, Representation::Physical, vec![out])
}

/// Grid quadrature of `a . conj(b)` summed over components.
pub fn inner(a: &Field, b: &Field) -> Result<Complex64> {
    a.same_grid(b)?;
    if a.n_components() != b.n_components() {
        return Err(Error::Parameter("component counts differ in pairing".into()));
    }
    let ap = a.to_physical();
    let bp = b.to_physical();
    let mut acc = Complex64::new(0.0, 0.0);
    for (ca, cb) in ap.components().iter().zip(bp.components()) {
        for (x, y) in ca.iter().zip(cb) {
            acc += x * y.conj();
        }
    }
    Ok(acc * ap.grid.dx())
}

/// The effective sharp cutoff applied after every product.
pub fn effective_cutoff(p: &SystemParams, grid: &crate::grid::Grid, dealias: bool) -> f64 {
    if dealias {
        p.k.min(grid.dealias_cutoff())
    } else {
        p.k
    }
}

/// The three truncated quadratic terms plus the pre-gradient scalar of the
/// third one, which the energy identities need on its own.
pub struct NonlinearTerms {
    /// `J((div w) v)`
    pub n1: Field,
    /// `J((conj div w) u)`
    pub n2: Field,
    /// `grad J(u . conj v)`
    pub n3: Field,
    /// `J(u . conj v)`
    pub q3: Field,
}

/// The three nonlinear outputs of the truncated system, as the triple
/// `(J((div w) v), J((conj div w) u), grad J(u . conj v))` with the inner
/// truncations applied to `w`, `v`, `u` first.
pub fn nonlinearity(state: &StateBundle, p: &SystemParams) -> Result<(Field, Field, Field)> {
    nonlinearity_with(state, p, true)
}

pub fn nonlinearity_with(
    state: &StateBundle,
    p: &SystemParams,
    dealias: bool,
) -> Result<(Field, Field, Field)> {
    let t = nonlinearity_terms(state, p, dealias)?;
    Ok((t.n1, t.n2, t.n3))
}

pub fn nonlinearity_terms(state: &StateBundle, p: &SystemParams, dealias: bool) -> Result<NonlinearTerms> {
    p.validate()?;
    state.u.same_grid(&state.v)?;
    state.u.same_grid(&state.w)?;
    let grid = state.grid();
    if grid.d != p.d {
        return Err(Error::GridMismatch(format!(
            "grid dimension {} vs system dimension {}",
            grid.d, p.d
        )));
    }
    let cutoff = effective_cutoff(p, &grid, dealias);

    let ut = sharp_truncate(&state.u, p.k).to_physical();
    let vt = sharp_truncate(&state.v, p.k).to_physical();
    let wt = sharp_truncate(&state.w, p.k);

    let div_w = divergence(&wt).to_physical();
    let div_w_conj = div_w.conj_physical();

    let n1 = sharp_truncate(&mul_scalar(&vt, &div_w)?, cutoff);
    let n2 = sharp_truncate(&mul_scalar(&ut, &div_w_conj)?, cutoff);
    let q3 = sharp_truncate(&dot(&ut, &vt.conj_physical())?, cutoff);
    let n3 = gradient(&q3);
    Ok(NonlinearTerms { n1, n2, n3, q3 })
}

/// Spectral Laplacian (multiplier `-|xi|^2`), componentwise.
pub fn laplacian(f: &Field) -> Field {
    f.spectral_multiply(|xi| Complex64::new(-(xi[0] * xi[0] + xi[1] * xi[1]), 0.0))
}

/// `[P_N, f] g = P_N(f g) - f P_N g`, with `f` a (possibly vector-valued)
/// multiplier and `g` scalar; output matches the components of `f`.
pub fn commutator_pn(f: &Field, g: &Field, n: DyadicScale) -> Result<Field> {
    f.same_grid(g)?;
    if g.n_components() != 1 {
        return Err(Error::Parameter("commutator argument must be scalar".into()));
    }
    let fg = mul_scalar(f, g)?;
    let f_png = mul_scalar(f, &project_dyadic(g, n))?;
    project_dyadic(&fg, n).sub(&f_png)
}

/// `com(P_N, f, g) = P_N(f . g) - P_N f . g - f . P_N g`; scalar output.
pub fn double_commutator(f: &Field, g: &Field, n: DyadicScale) -> Result<Field> {
    f.same_grid(g)?;
    let a = project_dyadic(&dot(f, g)?, n);
    let b = dot(&project_dyadic(f, n), g)?;
    let c = dot(f, &project_dyadic(g, n))?;
    a.sub(&b)?.sub(&c)
}
