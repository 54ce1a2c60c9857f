//! Eigenpairs of `−Δ_p u − Δ_q u = λ|u|^{q−2}u` by four variational routes:
//!
//! * [`solve_first_global`]: minimization of `E_λ` for `p > q`;
//! * [`solve_first_nehari`]: minimization of `E_λ` on the Nehari set for `p < q`;
//! * [`solve_fixed_rho`]: minimization of `I` on `{∫|u|^q = ρ}` (levels `c_k`);
//! * [`solve_w_equation`]: the same for the transformed operator
//!   `−‖w‖_{1,q}^{2(q−p)}Δ_p w − Δ_q w` (levels `d_k`), `p < q`.
//!
//! Higher modes (`k ≥ 2`) use a nodal surrogate for the genus minimax
//! levels: the interval is split into `k` panels separated by pinned zeros
//! with alternating signs, each panel carries its own share of the mass, and
//! the shares and panel lengths are adjusted until all panels report the
//! same eigenvalue and the weak form holds at the pinned zeros. In one
//! dimension this reproduces the `k`-th eigenfunction exactly as `ρ → 0`;
//! for `ρ > 0` the levels are upper bounds of the genus levels. Only `k = 1`
//! is exact.

mod engine;
mod first;
mod nodal;
mod objectives;

use std::sync::Arc;

use crate::error::{Error, Result};
use crate::fem::{
    grad_energy_unchecked, grad_residual_unchecked, mass_residual_unchecked, Mesh1D, NodalFunction,
};
use crate::functionals::{apply_t_unchecked, transformed_factor, PQParams, MASS_FLOOR};
use engine::{dual_norm, Panels};

pub use first::{solve_first_global, solve_first_nehari, FirstOutcome};

#[derive(Debug, Clone, PartialEq)]
pub struct SolverConfig {
    /// Armijo sufficient-decrease constant.
    pub armijo_c1: f64,
    /// Step reduction factor during backtracking.
    pub armijo_shrink: f64,
    pub max_backtracks: usize,
    /// Relative weak-residual tolerance `‖r‖_* / ‖λ m(u)‖_*`.
    pub residual_tol: f64,
    pub max_iterations: usize,
    /// Per unit length; see [`MASS_FLOOR`].
    pub mass_floor: f64,
    /// `‖u‖_{1,p}` below which a decaying iterate is declared zero.
    pub zero_tol: f64,
    /// Adjust nodal break points and mass shares for `k ≥ 2`; when false the
    /// panels are kept equal.
    pub nodal_constraint: bool,
    pub seed: u64,
    /// Amplitude of the seeded random perturbation of the initial guess.
    pub perturbation: f64,
}

impl Default for SolverConfig {
    fn default() -> Self {
        Self {
            armijo_c1: 1e-4,
            armijo_shrink: 0.5,
            max_backtracks: 50,
            residual_tol: 1e-9,
            max_iterations: 5000,
            mass_floor: MASS_FLOOR,
            zero_tol: 1e-8,
            nodal_constraint: true,
            seed: 0,
            perturbation: 0.0,
        }
    }
}

impl SolverConfig {
    pub fn validate(&self) -> Result<()> {
        let positive = |name: &str, v: f64| {
            if v.is_finite() && v > 0.0 {
                Ok(())
            } else {
                Err(Error::InvalidArgument(format!(
                    "{name} must be positive, got {v}"
                )))
            }
        };
        positive("residual_tol", self.residual_tol)?;
        positive("mass_floor", self.mass_floor)?;
        positive("zero_tol", self.zero_tol)?;
        if !(self.armijo_c1 > 0.0 && self.armijo_c1 < 1.0) {
            return Err(Error::InvalidArgument(
                "armijo_c1 must lie in (0, 1)".into(),
            ));
        }
        if !(self.armijo_shrink > 0.0 && self.armijo_shrink < 1.0) {
            return Err(Error::InvalidArgument(
                "armijo_shrink must lie in (0, 1)".into(),
            ));
        }
        if self.max_iterations == 0 || self.max_backtracks == 0 {
            return Err(Error::InvalidArgument(
                "iteration limits must be at least 1".into(),
            ));
        }
        if !(self.perturbation.is_finite() && self.perturbation >= 0.0) {
            return Err(Error::InvalidArgument(
                "perturbation must be nonnegative".into(),
            ));
        }
        Ok(())
    }
}

/// Variable the stored function lives in.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Formulation {
    /// `u` solves the original equation.
    Direct,
    /// `u` holds `w = u/‖u‖²_{1,q}` solving the transformed equation.
    Transformed,
}

#[derive(Debug, Clone)]
pub struct EigenPair {
    pub lambda: f64,
    pub u: NodalFunction,
    /// `∫|u|^q`.
    pub rho: f64,
    pub mode: usize,
    /// `c_k` for fixed-mass solves, `d_k` (the transformed functional) for
    /// the transformed equation, `E_λ(u)` for the first-eigenvalue solvers.
    pub level: f64,
    /// Relative weak-form residual over all interior nodes.
    pub residual: f64,
    pub iterations: usize,
    pub sign_changes: usize,
    /// Interior panel boundaries of the nodal surrogate (empty for `k = 1`).
    pub break_points: Vec<f64>,
    pub formulation: Formulation,
}

impl EigenPair {
    /// The solution in the original variable: `u` itself, or `w/‖w‖²_{1,q}`.
    pub fn original_function(&self, pq: PQParams) -> NodalFunction {
        match self.formulation {
            Formulation::Direct => self.u.clone(),
            Formulation::Transformed => {
                let gq = grad_energy_unchecked(&self.u, pq.q());
                self.u.scaled(gq.powf(-2.0 / pq.q()))
            }
        }
    }

    /// `(‖u‖_{1,p}, ‖u‖_{1,q})` in the original variable.
    pub fn original_norms(&self, pq: PQParams) -> (f64, f64) {
        let (p, q) = (pq.p(), pq.q());
        let np = grad_energy_unchecked(&self.u, p).powf(1.0 / p);
        let nq = grad_energy_unchecked(&self.u, q).powf(1.0 / q);
        match self.formulation {
            Formulation::Direct => (np, nq),
            Formulation::Transformed => (np / (nq * nq), 1.0 / nq),
        }
    }
}

/// Strict sign alternations of the nodal values, ignoring values within
/// `1e−10·‖u‖_∞` of zero.
pub fn sign_changes(u: &NodalFunction) -> usize {
    let band = 1e-10 * u.max_abs();
    let mut last = 0.0f64;
    let mut count = 0;
    for &c in u.coeffs() {
        if c.abs() <= band {
            continue;
        }
        let s = c.signum();
        if last != 0.0 && s != last {
            count += 1;
        }
        last = s;
    }
    count
}

fn relative_residual(
    u: &NodalFunction,
    t: &crate::fem::DualVector,
    m: &crate::fem::DualVector,
    lambda: f64,
) -> f64 {
    let panels = Panels::single(u.mesh().n_elements());
    let lm = m.scaled(lambda);
    let den = dual_norm(u, &panels, &lm.0);
    if den == 0.0 {
        return f64::INFINITY;
    }
    dual_norm(u, &panels, &(t - &lm).0) / den
}

/// `‖A_p(u) + A_q(u) − λ m(u)‖_* / ‖λ m(u)‖_*` over all interior nodes, where
/// `A_s(u) = ∫|u'|^{s−2}u'·'`, `m(u) = ∫|u|^{q−2}u·` and `‖·‖_*` is the
/// discrete `H^{-1}` norm `sqrt(r·K₀⁻¹r)` of the unweighted stiffness `K₀`.
pub fn weak_residual(u: &NodalFunction, lambda: f64, pq: PQParams) -> f64 {
    let ap = grad_residual_unchecked(u, pq.p());
    let aq = grad_residual_unchecked(u, pq.q());
    relative_residual(u, &(&ap + &aq), &mass_residual_unchecked(u, pq.q()), lambda)
}

/// Relative residual of `‖w‖^{2(q−p)}_{1,q}A_p(w) + A_q(w) = λ m(w)`, in the
/// same norm as [`weak_residual`].
pub fn transformed_residual(w: &NodalFunction, lambda: f64, pq: PQParams) -> f64 {
    relative_residual(
        w,
        &apply_t_unchecked(w, pq),
        &mass_residual_unchecked(w, pq.q()),
        lambda,
    )
}

/// `λ` and level of a fixed-mass solution from the energy identity.
pub(crate) fn assemble(
    formulation: Formulation,
    mode: usize,
    u: NodalFunction,
    pq: PQParams,
    iterations: usize,
    break_points: Vec<f64>,
) -> EigenPair {
    let (p, q) = (pq.p(), pq.q());
    let gp = grad_energy_unchecked(&u, p);
    let gq = grad_energy_unchecked(&u, q);
    let rho = crate::fem::mass_q_unchecked(&u, q);
    let (lambda, level, residual) = match formulation {
        Formulation::Direct => {
            let lambda = (gp + gq) / rho;
            (lambda, gp / p + gq / q, weak_residual(&u, lambda, pq))
        }
        Formulation::Transformed => {
            let factor = transformed_factor(gq, pq);
            let lambda = (factor * gp + gq) / rho;
            (
                lambda,
                q / p * factor * gp + gq,
                transformed_residual(&u, lambda, pq),
            )
        }
    };
    EigenPair {
        lambda,
        sign_changes: sign_changes(&u),
        u,
        rho,
        mode,
        level,
        residual,
        iterations,
        break_points,
        formulation,
    }
}

fn check_mass(rho: f64) -> Result<()> {
    if rho.is_finite() && rho > 0.0 {
        Ok(())
    } else {
        Err(Error::InvalidArgument(format!(
            "mass ρ must be positive, got {rho}"
        )))
    }
}

/// Mode-`k` minimizer of `I` on `{∫|u|^q = ρ}` (nodal surrogate for `k ≥ 2`).
///
/// `λ = (∫|u'|^p + ∫|u'|^q)/ρ`; the level is `c_k = I(u)`. For `k ≥ 2` the
/// returned function lives on a mesh with the same element count whose
/// nodes are redistributed panel by panel.
pub fn solve_fixed_rho(
    k: usize,
    rho: f64,
    pq: PQParams,
    mesh: &Arc<Mesh1D>,
    cfg: &SolverConfig,
) -> Result<EigenPair> {
    solve_fixed_rho_from(k, rho, pq, mesh, cfg, None)
}

/// [`solve_fixed_rho`] starting from a previous solution of the same mode.
pub fn solve_fixed_rho_from(
    k: usize,
    rho: f64,
    pq: PQParams,
    mesh: &Arc<Mesh1D>,
    cfg: &SolverConfig,
    warm: Option<&EigenPair>,
) -> Result<EigenPair> {
    check_mass(rho)?;
    nodal::solve_mode(Formulation::Direct, k, rho, pq, mesh, cfg, warm)
}

/// Mode-`k` solution of the transformed equation at `∫|w|^q = ρ`, `p < q`.
///
/// `λ̃ = (‖w‖^{2(q−p)}_{1,q}∫|w'|^p + ∫|w'|^q)/ρ`; the level is
/// `q/p‖w‖^{2(q−p)}_{1,q}∫|w'|^p + ∫|w'|^q` at the solution. The stored
/// function is `w`; see [`EigenPair::original_function`].
pub fn solve_w_equation(
    k: usize,
    rho: f64,
    pq: PQParams,
    mesh: &Arc<Mesh1D>,
    cfg: &SolverConfig,
) -> Result<EigenPair> {
    solve_w_equation_from(k, rho, pq, mesh, cfg, None)
}

pub fn solve_w_equation_from(
    k: usize,
    rho: f64,
    pq: PQParams,
    mesh: &Arc<Mesh1D>,
    cfg: &SolverConfig,
    warm: Option<&EigenPair>,
) -> Result<EigenPair> {
    if pq.p() >= pq.q() {
        return Err(Error::WrongRegime("the transformed equation needs p < q"));
    }
    check_mass(rho)?;
    nodal::solve_mode(Formulation::Transformed, k, rho, pq, mesh, cfg, warm)
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    #[test]
    fn sign_change_counting() {
        let mesh = Arc::new(Mesh1D::uniform(0.0, 1.0, 64).unwrap());
        let e1 = NodalFunction::interpolate(&mesh, |x| (PI * x).sin());
        let e3 = NodalFunction::interpolate(&mesh, |x| (3.0 * PI * x).sin());
        assert_eq!(sign_changes(&e1), 0);
        assert_eq!(sign_changes(&e3), 2);
        let tiny = NodalFunction::interpolate(&mesh, |x| {
            (PI * x).sin() + if (x - 0.5).abs() < 0.01 { -2.0 } else { 0.0 }
        });
        assert_eq!(sign_changes(&tiny), 2);
    }

    #[test]
    fn config_validation() {
        assert!(SolverConfig::default().validate().is_ok());
        let bad = SolverConfig {
            residual_tol: 0.0,
            ..SolverConfig::default()
        };
        assert!(bad.validate().is_err());
        let bad = SolverConfig {
            max_iterations: 0,
            ..SolverConfig::default()
        };
        assert!(bad.validate().is_err());
    }
}
