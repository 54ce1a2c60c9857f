//! First eigenpairs at prescribed `λ` by minimizing `E_λ`.

use std::sync::Arc;

use crate::error::{Error, Result};
use crate::fem::{dot, grad_energy_unchecked, mass_q_unchecked, Mesh1D, NodalFunction};
use crate::functionals::{energy_e, nehari_scale, PQParams, Regime};

use super::engine::{descend, solve_stiffness, Panels};
use super::nodal::initial_guess;
use super::objectives::{Energy, NehariReduced};
use super::{sign_changes, weak_residual, EigenPair, Formulation, SolverConfig};

const MAX_SHRINKS: i32 = 30;

#[derive(Debug, Clone)]
pub enum FirstOutcome {
    Eigen(EigenPair),
    /// Descent on `E_λ` collapsed to the zero function: no nontrivial
    /// critical point was found, as expected for `λ ≤ λ_1(q)`.
    ConvergedToZero {
        norm_1p: f64,
        iterations: usize,
    },
}

impl FirstOutcome {
    pub fn eigenpair(&self) -> Option<&EigenPair> {
        match self {
            FirstOutcome::Eigen(pair) => Some(pair),
            FirstOutcome::ConvergedToZero { .. } => None,
        }
    }
}

fn check_lambda(lambda: f64) -> Result<()> {
    if lambda.is_finite() && lambda > 0.0 {
        Ok(())
    } else {
        Err(Error::InvalidArgument(format!(
            "λ must be positive, got {lambda}"
        )))
    }
}

/// `λ∫|v|^q − ∫|v'|^q`; rays through `v` reach the Nehari set iff positive.
fn ray_denominator(v: &NodalFunction, lambda: f64, pq: PQParams) -> f64 {
    lambda * mass_q_unchecked(v, pq.q()) - grad_energy_unchecked(v, pq.q())
}

/// Minimizes the Nehari-reduced energy over directions of unit mass and
/// returns the eigenfunction on the ray.
fn minimize_on_rays(
    v: NodalFunction,
    lambda: f64,
    pq: PQParams,
    cfg: &SolverConfig,
    iterations_so_far: usize,
) -> Result<EigenPair> {
    let panels = Panels::single(v.mesh().n_elements());
    let obj = NehariReduced { pq, lambda };
    let r = descend(&obj, v, &panels, &[1.0], cfg.residual_tol, cfg)?;
    let u = r.u.scaled(nehari_scale(&r.u, lambda, pq)?);
    let residual = weak_residual(&u, lambda, pq);
    let iterations = iterations_so_far + r.iterations;
    if residual >= cfg.residual_tol {
        return Err(Error::MaxIterations {
            iterations,
            residual,
        });
    }
    Ok(EigenPair {
        lambda,
        rho: mass_q_unchecked(&u, pq.q()),
        mode: 1,
        level: energy_e(&u, lambda, pq),
        residual,
        iterations,
        sign_changes: sign_changes(&u),
        break_points: Vec::new(),
        formulation: Formulation::Direct,
        u,
    })
}

/// Global minimizer of `E_λ` for `p > q`.
///
/// Directions from which the ray `t ↦ E_λ(tv)` dips below zero are optimized
/// through the Nehari-reduced energy. When the start admits no such ray, a
/// preconditioned descent on `E_λ` itself is run: it either reaches an
/// admissible direction or decays to zero, in which case
/// [`FirstOutcome::ConvergedToZero`] is returned.
pub fn solve_first_global(
    lambda: f64,
    pq: PQParams,
    mesh: &Arc<Mesh1D>,
    cfg: &SolverConfig,
) -> Result<FirstOutcome> {
    if pq.regime() != Regime::FromZero {
        return Err(Error::WrongRegime("global minimization of E_λ needs p > q"));
    }
    check_lambda(lambda)?;
    cfg.validate()?;
    let bounds = [0, mesh.n_elements()];
    let mut u = initial_guess(mesh, &bounds, pq.q(), cfg.perturbation, cfg.seed);
    let obj = Energy { pq, lambda };
    let panels = Panels::single(mesh.n_elements());
    let mut f = obj.value(&u);
    for it in 0..cfg.max_iterations {
        if ray_denominator(&u, lambda, pq) > 0.0 {
            return minimize_on_rays(u, lambda, pq, cfg, it).map(FirstOutcome::Eigen);
        }
        let norm_1p = grad_energy_unchecked(&u, pq.p()).powf(1.0 / pq.p());
        if norm_1p < cfg.zero_tol {
            return Ok(FirstOutcome::ConvergedToZero {
                norm_1p,
                iterations: it,
            });
        }
        let g = obj.gradient(&u);
        let w = obj.weights(&u);
        let d: Vec<f64> = solve_stiffness(&u, &w, &panels, &g.0)
            .into_iter()
            .map(|x| -x)
            .collect();
        let slope = dot(&g.0, &d);
        let mut alpha = 1.0;
        let mut accepted = false;
        for _ in 0..cfg.max_backtracks {
            let trial = u.axpy(alpha, &d);
            let ft = obj.value(&trial);
            if ft <= f + cfg.armijo_c1 * alpha * slope {
                u = trial;
                f = ft;
                accepted = true;
                break;
            }
            alpha *= cfg.armijo_shrink;
        }
        if !accepted {
            return Err(Error::MaxIterations {
                iterations: it,
                residual: g.norm(),
            });
        }
    }
    Err(Error::MaxIterations {
        iterations: cfg.max_iterations,
        residual: obj.gradient(&u).norm(),
    })
}

/// Minimizer of `E_λ` on the Nehari set for `p < q`; the level
/// `m = E_λ(u) = (1/p − 1/q)∫|u'|^p` is positive.
///
/// The seeded perturbation of the start is halved until the start admits a
/// Nehari projection. Fails with [`Error::NotProjectable`] when even the
/// unperturbed lowest generalized sine does not, which for `λ ≤ λ_1(q)` is
/// forced by the Poincaré inequality.
pub fn solve_first_nehari(
    lambda: f64,
    pq: PQParams,
    mesh: &Arc<Mesh1D>,
    cfg: &SolverConfig,
) -> Result<EigenPair> {
    if pq.regime() != Regime::FromInfinity {
        return Err(Error::WrongRegime("the Nehari route needs p < q"));
    }
    check_lambda(lambda)?;
    cfg.validate()?;
    let bounds = [0, mesh.n_elements()];
    // Halve the random perturbation until the start admits a projection.
    let mut amplitudes: Vec<f64> = (0..MAX_SHRINKS)
        .map(|j| cfg.perturbation * 0.5f64.powi(j))
        .take_while(|&a| a > 0.0)
        .collect();
    amplitudes.push(0.0);
    let mut denominator = f64::NEG_INFINITY;
    for amplitude in amplitudes {
        let v = initial_guess(mesh, &bounds, pq.q(), amplitude, cfg.seed);
        let d = ray_denominator(&v, lambda, pq);
        if d > 0.0 {
            return minimize_on_rays(v, lambda, pq, cfg, 0);
        }
        denominator = denominator.max(d);
    }
    Err(Error::NotProjectable { denominator })
}
