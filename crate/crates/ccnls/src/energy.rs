//! Modified energies with frequency-dependent correction terms, their
//! coercivity, and the numerical verification of the energy-derivative
//! identity.
//!
//! The shell `N = 1` is excluded wherever the inverse Laplacian appears; the
//! `N = 1` energy is the plain L2 mass.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::dyadic::{project_dyadic, DyadicScale};
use crate::error::{Error, Result};
use crate::grid::StateBundle;
use crate::nonlinearity::{
    commutator_pn, divergence, dot, double_commutator, inner, laplacian, nonlinearity_terms,
    partial,
};
use crate::norms::bundle_sobolev_norm;
use crate::solver::Trajectory;
use crate::system::SystemParams;

#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct EnergyConfig {
    /// Base Sobolev index (paper-faithful runs use `s > (d+1)/2`).
    pub s: f64,
    /// Energy index, at least `s`.
    pub s_tilde: f64,
    /// Coercivity constant; measured by `coercivity_search` when not known.
    pub c_tilde: f64,
}

impl EnergyConfig {
    pub fn new(s: f64, s_tilde: f64, c_tilde: f64) -> Result<Self> {
        if s_tilde < s {
            return Err(Error::Parameter(format!("need s_tilde >= s, got {s_tilde} < {s}")));
        }
        if !(c_tilde > 0.0) {
            return Err(Error::Parameter("coercivity constant must be positive".into()));
        }
        Ok(EnergyConfig { s, s_tilde, c_tilde })
    }

    /// `s0 = d/2 + (s - (d+1)/2) / 2`; always derived, never set.
    pub fn s0(&self, d: usize) -> f64 {
        d as f64 / 2.0 + 0.5 * (self.s - 0.5 * (d as f64 + 1.0))
    }
}

/// The scalar field `div . invLaplace P_N h`, well defined for `N >= 2`
/// because the shell excludes the origin.
pub fn grad_div_inv_laplacian_pn(
    h: &crate::grid::Field,
    n: DyadicScale,
) -> Result<crate::grid::Field> {
    if n.integer() < 2 {
        return Err(Error::Domain(
            "inverse Laplacian is undefined on the N = 1 shell".into(),
        ));
    }
    let s = h.to_spectral();
    let grid = s.grid;
    let mut out = vec![Complex64::new(0.0, 0.0); grid.points()];
    for (j, comp) in s.components().iter().enumerate() {
        for (k, v) in comp.iter().enumerate() {
            let r2 = grid.xi_norm_sq(k);
            let psi = crate::dyadic::psi_n(r2.sqrt(), n);
            if psi != 0.0 && r2 > 0.0 {
                // (i xi_j) * (-1/|xi|^2) * psi_N
                out[k] += Complex64::new(0.0, -grid.xi(k)[j] / r2 * psi) * v;
            }
        }
    }
    crate::grid::Field::from_components(grid, crate::grid::Representation::Spectral, vec![out])
}

/// The correction term
/// `M_N(f, g, h) = Re int (f . conj(P_N g)) conj(div invLaplace P_N h) dx`.
pub fn correction_m_n(
    f: &crate::grid::Field,
    g: &crate::grid::Field,
    h: &crate::grid::Field,
    n: DyadicScale,
) -> Result<f64> {
    f.same_grid(g)?;
    f.same_grid(h)?;
    let x = grad_div_inv_laplacian_pn(h, n)?;
    let a = dot(f, &project_dyadic(g, n).conj_physical())?;
    Ok(inner(&a, &x)?.re)
}

/// `||P_N state||^2` in the square-sum convention.
pub fn shell_mass(state: &StateBundle, n: DyadicScale) -> f64 {
    state
        .fields()
        .iter()
        .map(|f| project_dyadic(f, n).l2_norm().powi(2))
        .sum()
}

/// Shell energy
/// `E_N = N^{2st} (1 + N^{-1} Ct ||state||_{H^{s0}}^2) ||P_N state||^2
///        + 4/(beta+gamma) N^{2st} M_N(u, v, w)`.
pub fn modified_energy(
    state: &StateBundle,
    n: DyadicScale,
    cfg: &EnergyConfig,
    p: &SystemParams,
) -> Result<f64> {
    if p.beta + p.gamma == 0.0 {
        return Err(Error::Parameter("modified energy needs beta + gamma != 0".into()));
    }
    if n.integer() < 2 {
        return Err(Error::Domain("modified energy is defined for N >= 2".into()));
    }
    let nv = n.value();
    let s0 = cfg.s0(state.grid().d);
    let h_s0_sq = bundle_sobolev_norm(state, s0).powi(2);
    let mass = shell_mass(state, n);
    let m_n = correction_m_n(&state.u, &state.v, &state.w, n)?;
    let weight = nv.powf(2.0 * cfg.s_tilde);
    Ok(weight * (1.0 + cfg.c_tilde / nv * h_s0_sq) * mass + 4.0 / (p.beta + p.gamma) * weight * m_n)
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct CoercivityReport {
    /// Smallest constant on the geometric grid `2^k` making the coercivity
    /// inequality hold across the whole ensemble.
    pub c_tilde: f64,
    /// Set when the capped search (up to `2^30`) failed.
    pub capped: bool,
    /// Measured `sup |M_N| N / (||.||_{H^{s0}} ||P_N .||^2)`, the empirical
    /// constant of the key coercivity inequality.
    pub empirical_constant: f64,
}

const C_TILDE_MIN_EXP: i32 = -20;
const C_TILDE_MAX_EXP: i32 = 30;

fn grid_search(mut holds: impl FnMut(f64) -> bool) -> (f64, bool) {
    for k in C_TILDE_MIN_EXP..=C_TILDE_MAX_EXP {
        let c = 2f64.powi(k);
        if holds(c) {
            return (c, false);
        }
    }
    (2f64.powi(C_TILDE_MAX_EXP), true)
}

/// Searches the geometric grid for the smallest constant such that
/// `E_N >= 1/2 N^{2st} ||P_N .||^2` over every ensemble member and shell.
pub fn coercivity_search(
    ensemble: &[StateBundle],
    shells: &[DyadicScale],
    cfg: &EnergyConfig,
    p: &SystemParams,
) -> Result<CoercivityReport> {
    if ensemble.is_empty() {
        return Err(Error::Parameter("coercivity search needs a nonempty ensemble".into()));
    }
    if p.beta + p.gamma == 0.0 {
        return Err(Error::Parameter("coercivity needs beta + gamma != 0".into()));
    }
    let mut rows = vec![];
    let mut empirical: f64 = 0.0;
    for state in ensemble {
        let s0 = cfg.s0(state.grid().d);
        let h2 = bundle_sobolev_norm(state, s0).powi(2);
        for &n in shells {
            let mass = shell_mass(state, n);
            let m_n = correction_m_n(&state.u, &state.v, &state.w, n)?;
            if mass > 0.0 && h2 > 0.0 {
                empirical = empirical.max(m_n.abs() * n.value() / (h2.sqrt() * mass));
            }
            rows.push((n.value(), mass, m_n, h2));
        }
    }
    let coef = 4.0 / (p.beta + p.gamma);
    let (c_tilde, capped) = grid_search(|c| {
        rows.iter().all(|&(nv, mass, m_n, h2)| {
            (0.5 + c / nv * h2) * mass + coef * m_n >= -1e-15 * mass.max(1.0)
        })
    });
    Ok(CoercivityReport {
        c_tilde,
        capped,
        empirical_constant: empirical,
    })
}

/// Difference energy
/// `Et_N^r = N^{2r} (1 + Ct N^{-1} (||b1||^2 + ||b2||^2)_{H^{s0}}) ||P_N diff||^2
///          - 4/(beta+gamma) N^{2r} (M_N(du, dv, dw) - M_N(u1, dv, dw))`.
pub fn difference_energy(
    s1: &StateBundle,
    s2: &StateBundle,
    n: DyadicScale,
    r: f64,
    cfg: &EnergyConfig,
    p: &SystemParams,
) -> Result<f64> {
    if p.beta + p.gamma == 0.0 {
        return Err(Error::Parameter("difference energy needs beta + gamma != 0".into()));
    }
    if n.integer() < 2 {
        return Err(Error::Domain("difference energy is defined for N >= 2".into()));
    }
    let diff = s1.sub(s2)?;
    let nv = n.value();
    let s0 = cfg.s0(s1.grid().d);
    let h2 = bundle_sobolev_norm(s1, s0).powi(2) + bundle_sobolev_norm(s2, s0).powi(2);
    let mass = shell_mass(&diff, n);
    let m_diff = correction_m_n(&diff.u, &diff.v, &diff.w, n)?;
    let m_mixed = correction_m_n(&s1.u, &diff.v, &diff.w, n)?;
    let weight = nv.powf(2.0 * r);
    Ok(weight * (1.0 + cfg.c_tilde / nv * h2) * mass
        - 4.0 / (p.beta + p.gamma) * weight * (m_diff - m_mixed))
}

/// Coercivity search for the difference energy over an ensemble of pairs.
pub fn difference_coercivity_search(
    pairs: &[(StateBundle, StateBundle)],
    shells: &[DyadicScale],
    cfg: &EnergyConfig,
    p: &SystemParams,
) -> Result<CoercivityReport> {
    if pairs.is_empty() {
        return Err(Error::Parameter("coercivity search needs a nonempty ensemble".into()));
    }
    if p.beta + p.gamma == 0.0 {
        return Err(Error::Parameter("coercivity needs beta + gamma != 0".into()));
    }
    let mut rows = vec![];
    let mut empirical: f64 = 0.0;
    for (s1, s2) in pairs {
        let s0 = cfg.s0(s1.grid().d);
        let h2 = bundle_sobolev_norm(s1, s0).powi(2) + bundle_sobolev_norm(s2, s0).powi(2);
        let diff = s1.sub(s2)?;
        for &n in shells {
            let mass = shell_mass(&diff, n);
            let m = correction_m_n(&diff.u, &diff.v, &diff.w, n)?
                - correction_m_n(&s1.u, &diff.v, &diff.w, n)?;
            if mass > 0.0 && h2 > 0.0 {
                empirical = empirical.max(m.abs() * n.value() / (h2.sqrt() * mass));
            }
            rows.push((n.value(), mass, m, h2));
        }
    }
    let coef = 4.0 / (p.beta + p.gamma);
    let (c_tilde, capped) = grid_search(|c| {
        rows.iter()
            .all(|&(nv, mass, m, h2)| (0.5 + c / nv * h2) * mass - coef * m >= -1e-15 * mass.max(1.0))
    });
    Ok(CoercivityReport {
        c_tilde,
        capped,
        empirical_constant: empirical,
    })
}

/// Core shell energy whose time derivative the identity controls:
/// `1/2 (||P_N state||^2 + 4/(beta+gamma) M_N(u, v, w))`.
pub fn core_energy(state: &StateBundle, n: DyadicScale, p: &SystemParams) -> Result<f64> {
    let m_n = correction_m_n(&state.u, &state.v, &state.w, n)?;
    Ok(0.5 * (shell_mass(state, n) + 4.0 / (p.beta + p.gamma) * m_n))
}

/// The assembled right side of the energy-derivative identity: the three
/// commutator integrals plus `2/(beta+gamma)` times the correction-term
/// derivatives.
///
/// The printed identity carries `4/(beta+gamma)` on this group, which is
/// inconsistent with its own left side by a factor two; re-deriving the
/// cancellation gives `2/(beta+gamma)`, and the residual test confirms it.
///
/// With `negative_control` set, the Laplacian term of the first
/// correction-derivative uses the short-time-regime coefficient `gamma` in
/// place of `alpha`; for `alpha != gamma` data this leaves an O(1) defect
/// unless the `(alpha - gamma)` Laplacian integral is added back.
fn identity_rhs(
    state: &StateBundle,
    n: DyadicScale,
    p: &SystemParams,
    dealias: bool,
    negative_control: bool,
) -> Result<f64> {
    let u = &state.u;
    let v = &state.v;
    let w = &state.w;
    let pn_u = project_dyadic(u, n);
    let pn_v = project_dyadic(v, n);
    let pn_w = project_dyadic(w, n);
    let div_w = divergence(w);
    let terms = nonlinearity_terms(state, p, dealias)?;

    // commutator integrals
    let r1 = -inner(&commutator_pn(v, &div_w, n)?, &pn_u)?.im;
    let r2 = -inner(&commutator_pn(u, &div_w.conj_physical(), n)?, &pn_v)?.im;
    let r3 = -inner(&double_commutator(u, &v.conj_physical(), n)?, &divergence(&pn_w))?.im;

    // correction-term derivatives
    let x = grad_div_inv_laplacian_pn(w, n)?;
    let lap_u = laplacian(u);
    let lap_coeff = if negative_control { p.gamma } else { p.alpha };
    let lap_pair = inner(&dot(&lap_u, &pn_v.conj_physical())?, &x)?.im;
    let r5 = -lap_coeff * lap_pair - inner(&dot(&terms.n1, &pn_v.conj_physical())?, &x)?.im;

    let r6 = -inner(&dot(u, &pn_v.conj_physical())?, &project_dyadic(&terms.q3, n))?.im;

    let mut r7 = p.beta * lap_pair;
    for j in 0..state.grid().d {
        r7 += 2.0
            * p.beta
            * inner(&dot(&partial(u, j), &pn_v.conj_physical())?, &partial(&x, j))?.im;
    }
    r7 += inner(&dot(u, &project_dyadic(&terms.n2, n).conj_physical())?, &x)?.im;

    Ok((r1 + r2 + r3) + 2.0 / (p.beta + p.gamma) * (r5 + r6 + r7))
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct IdentityResidual {
    pub times: Vec<f64>,
    /// Centered finite difference of the core energy at interior snapshots.
    pub lhs: Vec<f64>,
    /// Assembled right side at the same snapshots.
    pub rhs: Vec<f64>,
    pub residuals: Vec<f64>,
}

impl IdentityResidual {
    pub fn max_residual(&self) -> f64 {
        self.residuals.iter().copied().fold(0.0, f64::max)
    }
}

/// Compares the centered time difference of the core shell energy against
/// the assembled identity right side at every interior snapshot.
pub fn energy_identity_residual(
    traj: &Trajectory,
    n: DyadicScale,
    p: &SystemParams,
    dealias: bool,
    negative_control: bool,
) -> Result<IdentityResidual> {
    if p.beta + p.gamma == 0.0 {
        return Err(Error::Parameter("identity needs beta + gamma != 0".into()));
    }
    if n.integer() < 2 {
        return Err(Error::Domain("identity shells start at N = 2".into()));
    }
    let snaps = &traj.snapshots;
    if snaps.len() < 5 {
        return Err(Error::Parameter(
            "cadence too coarse: need at least 5 snapshots for the centered difference".into(),
        ));
    }
    let dt0 = snaps[1].time - snaps[0].time;
    for w in snaps.windows(2) {
        if ((w[1].time - w[0].time) - dt0).abs() > 1e-12 * dt0.max(1.0) {
            return Err(Error::Parameter("snapshots are not uniformly spaced".into()));
        }
    }
    let energies: Result<Vec<f64>> = snaps.iter().map(|s| core_energy(s, n, p)).collect();
    let energies = energies?;

    let mut out = IdentityResidual {
        times: vec![],
        lhs: vec![],
        rhs: vec![],
        residuals: vec![],
    };
    for i in 1..snaps.len() - 1 {
        let lhs = (energies[i + 1] - energies[i - 1]) / (2.0 * dt0);
        let rhs = identity_rhs(&snaps[i], n, p, dealias, negative_control)?;
        out.times.push(snaps[i].time);
        out.lhs.push(lhs);
        out.rhs.push(rhs);
        out.residuals.push((lhs - rhs).abs());
    }
    Ok(out)
}

/// Single-mode closed form of the correction term, used as an independent
/// oracle in tests: with `f = A e^{iax}`, `g = B e^{ibx}`, `h = C e^{icx}` in
/// one dimension,
/// `M_N = Re[ A conj(B) conj(i c (-1/c^2) C) psi_N(b) psi_N(c) ] L`
/// when `a - b - c = 0` on the lattice, and zero otherwise.
#[cfg(test)]
pub(crate) fn m_n_single_mode_oracle(
    amps: [Complex64; 3],
    modes: [f64; 3],
    n: DyadicScale,
    len: f64,
) -> f64 {
    let [a, b, c] = modes;
    if (a - b - c).abs() > 1e-12 || c == 0.0 {
        return 0.0;
    }
    let [fa, gb, hc] = amps;
    let psi_b = crate::dyadic::psi_n(b.abs(), n);
    let psi_c = crate::dyadic::psi_n(c.abs(), n);
    let weight = Complex64::new(0.0, -1.0 / c); // i c * (-1/c^2)
    (fa * gb.conj() * (hc * weight).conj() * psi_b * psi_c * len).re
}
