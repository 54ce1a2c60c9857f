//! Branches of eigenpairs parametrized by the mass `ρ = ∫|u|^q`, their
//! limits as `ρ → 0`, and the inversion `λ_i(ρ_i) = λ` behind the
//! multiplicity count.

use std::sync::Arc;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::fem::Mesh1D;
use crate::functionals::{PQParams, Regime};
use crate::reference::modes_below;
use crate::solvers::{
    solve_fixed_rho_from, solve_w_equation_from, EigenPair, Formulation, SolverConfig,
};

/// Number of smallest-mass points used by the asymptotic fits.
pub const ASYMPTOTIC_WINDOW: usize = 6;
pub const DEFAULT_RHO_MAX: f64 = 1e-1;
pub const DEFAULT_RHO_MIN: f64 = 1e-6;
pub const DEFAULT_RHO_POINTS: usize = 12;

const BOOTSTRAP_SAMPLES: usize = 200;
const POOR_FIT_RMS: f64 = 1e-3;
const MULTIPLICITY_RTOL: f64 = 1e-6;
const MAX_BISECTIONS: usize = 60;

#[derive(Debug, Clone, PartialEq)]
pub struct BranchPoint {
    pub rho: f64,
    pub lambda: f64,
    pub level: f64,
    /// `‖u‖_{1,p}` in the original variable.
    pub norm1p: f64,
    /// `‖u‖_{1,q}` in the original variable.
    pub norm1q: f64,
    /// `‖w‖_{1,q}` for branches of the transformed equation.
    pub transformed_norm1q: Option<f64>,
    pub sign_changes: usize,
    pub iterations: usize,
    pub residual: f64,
}

impl BranchPoint {
    pub fn from_pair(pair: &EigenPair, pq: PQParams) -> Self {
        let (norm1p, norm1q) = pair.original_norms(pq);
        let transformed_norm1q = match pair.formulation {
            Formulation::Direct => None,
            Formulation::Transformed => Some(1.0 / norm1q),
        };
        Self {
            rho: pair.rho,
            lambda: pair.lambda,
            level: pair.level,
            norm1p,
            norm1q,
            transformed_norm1q,
            sign_changes: pair.sign_changes,
            iterations: pair.iterations,
            residual: pair.residual,
        }
    }

    /// `‖u‖_{1,max(p,q)}`, the norm in which bifurcation is measured.
    pub fn bifurcation_norm(&self, pq: PQParams) -> f64 {
        if pq.p() > pq.q() {
            self.norm1p
        } else {
            self.norm1q
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum WarmStart {
    /// Each point starts from the previous solution rescaled to the new mass.
    PreviousPoint,
}

#[derive(Debug, Clone)]
pub struct Branch {
    pub mode: usize,
    pub pq: PQParams,
    pub formulation: Formulation,
    /// Ordered by strictly decreasing `ρ`.
    pub points: Vec<BranchPoint>,
    pub warm_start: WarmStart,
}

impl Branch {
    /// The `n` smallest-mass points (all of them if fewer).
    pub fn tail(&self, n: usize) -> &[BranchPoint] {
        &self.points[self.points.len().saturating_sub(n)..]
    }
}

/// `n` log-spaced masses from `rho_max` down to `rho_min`.
pub fn log_grid(rho_max: f64, rho_min: f64, n: usize) -> Result<Vec<f64>> {
    if !(rho_min > 0.0 && rho_max.is_finite() && rho_max >= rho_min) || n == 0 {
        return Err(Error::InvalidArgument(format!(
            "bad mass grid: {n} points from {rho_max} to {rho_min}"
        )));
    }
    if n == 1 {
        return Ok(vec![rho_max]);
    }
    if rho_max == rho_min {
        return Err(Error::InvalidArgument("grid endpoints coincide".into()));
    }
    let (hi, lo) = (rho_max.ln(), rho_min.ln());
    let mut grid: Vec<f64> = (0..n)
        .map(|i| (hi + (lo - hi) * i as f64 / (n - 1) as f64).exp())
        .collect();
    grid[0] = rho_max;
    grid[n - 1] = rho_min;
    Ok(grid)
}

pub fn default_grid() -> Vec<f64> {
    log_grid(DEFAULT_RHO_MAX, DEFAULT_RHO_MIN, DEFAULT_RHO_POINTS).expect("valid defaults")
}

fn solve_on_branch(
    formulation: Formulation,
    k: usize,
    rho: f64,
    pq: PQParams,
    mesh: &Arc<Mesh1D>,
    cfg: &SolverConfig,
    warm: Option<&EigenPair>,
) -> Result<EigenPair> {
    match formulation {
        Formulation::Direct => solve_fixed_rho_from(k, rho, pq, mesh, cfg, warm),
        Formulation::Transformed => solve_w_equation_from(k, rho, pq, mesh, cfg, warm),
    }
}

fn formulation_for(pq: PQParams) -> Formulation {
    match pq.regime() {
        Regime::FromZero => Formulation::Direct,
        Regime::FromInfinity => Formulation::Transformed,
    }
}

/// Mode-`k` branch over `grid` (strictly decreasing). For `p > q` each point
/// is a fixed-mass solve of the original problem; for `p < q` of the
/// transformed equation, with norms also reported in the original variable.
pub fn trace_branch(
    k: usize,
    pq: PQParams,
    grid: &[f64],
    mesh: &Arc<Mesh1D>,
    cfg: &SolverConfig,
) -> Result<Branch> {
    if grid.is_empty() {
        return Err(Error::InvalidArgument("empty mass grid".into()));
    }
    if grid.windows(2).any(|w| w[1] >= w[0]) {
        return Err(Error::InvalidArgument(
            "mass grid must be strictly decreasing".into(),
        ));
    }
    let formulation = formulation_for(pq);
    let mut branch = Branch {
        mode: k,
        pq,
        formulation,
        points: Vec::with_capacity(grid.len()),
        warm_start: WarmStart::PreviousPoint,
    };
    let mut previous: Option<EigenPair> = None;
    for (index, &rho) in grid.iter().enumerate() {
        match solve_on_branch(formulation, k, rho, pq, mesh, cfg, previous.as_ref()) {
            Ok(pair) => {
                branch.points.push(BranchPoint::from_pair(&pair, pq));
                previous = Some(pair);
            }
            Err(source) => {
                return Err(Error::BranchBroken {
                    index,
                    rho,
                    partial: Box::new(branch),
                    source: Box::new(source),
                })
            }
        }
    }
    Ok(branch)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LimitEstimate {
    pub limit: f64,
    /// Bootstrap standard deviation of `limit`.
    pub uncertainty: f64,
    /// Fitted `β` of `λ(ρ) = λ* + Aρ^β`.
    pub exponent: f64,
    pub amplitude: f64,
    /// Root-mean-square residual of the fit.
    pub rms: f64,
}

/// `λ*` of the branch from its [`ASYMPTOTIC_WINDOW`] smallest-mass points.
pub fn estimate_limit(branch: &Branch) -> Result<LimitEstimate> {
    let tail = branch.tail(ASYMPTOTIC_WINDOW);
    let rho: Vec<f64> = tail.iter().map(|p| p.rho).collect();
    let lambda: Vec<f64> = tail.iter().map(|p| p.lambda).collect();
    let guess = match branch.pq.regime() {
        Regime::FromZero => branch.pq.p() / branch.pq.q() - 1.0,
        Regime::FromInfinity => 1.0 - branch.pq.p() / branch.pq.q(),
    };
    fit_limit(&rho, &lambda, guess)
}

/// Least-squares fit of `y = a + b·x` with a centred mean that is exact
/// for constant data.
fn linear_fit(x: &[f64], y: &[f64]) -> (f64, f64, f64) {
    let n = x.len() as f64;
    let mean = |v: &[f64]| v[0] + v.iter().map(|t| t - v[0]).sum::<f64>() / n;
    let (mx, my) = (mean(x), mean(y));
    let sxx: f64 = x.iter().map(|t| (t - mx) * (t - mx)).sum();
    let sxy: f64 = x.iter().zip(y).map(|(a, b)| (a - mx) * (b - my)).sum();
    let slope = if sxx > 0.0 { sxy / sxx } else { 0.0 };
    let intercept = my - slope * mx;
    let ss = x
        .iter()
        .zip(y)
        .map(|(a, b)| (b - intercept - slope * a).powi(2))
        .sum();
    (intercept, slope, ss)
}

fn fit_at(rho: &[f64], y: &[f64], beta: f64) -> (f64, f64, f64) {
    let x: Vec<f64> = rho.iter().map(|r| r.powf(beta)).collect();
    linear_fit(&x, y)
}

/// Minimizes the residual over `β` with `(λ*, A)` eliminated: a log scan on
/// `[0.02, 4]` (plus `guess`), then golden-section refinement.
fn best_exponent(rho: &[f64], y: &[f64], guess: f64) -> f64 {
    let ss = |b: f64| fit_at(rho, y, b).2;
    let (lo, hi) = (0.02f64, 4.0f64);
    let n = 240;
    let mut betas: Vec<f64> = (0..=n)
        .map(|i| (lo.ln() + (hi.ln() - lo.ln()) * i as f64 / n as f64).exp())
        .collect();
    if guess > lo && guess < hi {
        betas.push(guess);
        betas.sort_by(f64::total_cmp);
    }
    let values: Vec<f64> = betas.iter().map(|&b| ss(b)).collect();
    let best = (0..betas.len())
        .min_by(|&i, &j| values[i].total_cmp(&values[j]))
        .expect("nonempty scan");
    let mut a = betas[best.saturating_sub(1)];
    let mut b = betas[(best + 1).min(betas.len() - 1)];
    let g = (5f64.sqrt() - 1.0) / 2.0;
    let mut c = b - g * (b - a);
    let mut d = a + g * (b - a);
    let (mut fc, mut fd) = (ss(c), ss(d));
    for _ in 0..200 {
        if (b - a).abs() < 1e-13 * b.abs().max(1.0) {
            break;
        }
        if fc < fd {
            b = d;
            d = c;
            fd = fc;
            c = b - g * (b - a);
            fc = ss(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + g * (b - a);
            fd = ss(d);
        }
    }
    let refined = 0.5 * (a + b);
    if ss(refined) <= values[best] {
        refined
    } else {
        betas[best]
    }
}

/// Fits `λ(ρ) = λ* + A·ρ^β` and returns `λ*` with a residual-bootstrap
/// uncertainty. `guess` is an expected `β`, added to the scan.
pub fn fit_limit(rho: &[f64], lambda: &[f64], guess: f64) -> Result<LimitEstimate> {
    if rho.len() != lambda.len() {
        return Err(Error::InvalidArgument("mismatched data lengths".into()));
    }
    if rho.len() < 4 {
        return Err(Error::InsufficientData(format!(
            "need at least 4 points for the limit fit, got {}",
            rho.len()
        )));
    }
    if rho.iter().any(|r| !(*r > 0.0)) || lambda.iter().any(|l| !l.is_finite()) {
        return Err(Error::InvalidArgument(
            "masses must be positive, values finite".into(),
        ));
    }
    let beta = best_exponent(rho, lambda, guess);
    let (limit, amplitude, ss) = fit_at(rho, lambda, beta);
    let n = rho.len() as f64;
    let rms = (ss / n).sqrt();
    if rms / limit.abs().max(1.0) > POOR_FIT_RMS {
        return Err(Error::PoorFit {
            rms: rms / limit.abs().max(1.0),
        });
    }
    let fitted: Vec<f64> = rho
        .iter()
        .map(|r| limit + amplitude * r.powf(beta))
        .collect();
    let residuals: Vec<f64> = lambda.iter().zip(&fitted).map(|(y, f)| y - f).collect();
    let uncertainty = if residuals.iter().all(|r| *r == 0.0) {
        0.0
    } else {
        let mut rng = ChaCha8Rng::seed_from_u64(0x5eed);
        let mut limits = Vec::with_capacity(BOOTSTRAP_SAMPLES);
        for _ in 0..BOOTSTRAP_SAMPLES {
            let y: Vec<f64> = fitted
                .iter()
                .map(|f| f + residuals[rng.gen_range(0..residuals.len())])
                .collect();
            let b = best_exponent(rho, &y, beta);
            limits.push(fit_at(rho, &y, b).0);
        }
        let m = limits.iter().sum::<f64>() / limits.len() as f64;
        (limits.iter().map(|l| (l - m).powi(2)).sum::<f64>() / (limits.len() - 1) as f64).sqrt()
    };
    Ok(LimitEstimate {
        limit,
        uncertainty,
        exponent: beta,
        amplitude,
        rms,
    })
}

/// Least-squares slope of `ln y` against `ln x`.
pub fn log_log_slope(x: &[f64], y: &[f64]) -> Result<f64> {
    if x.len() != y.len() || x.len() < 2 {
        return Err(Error::InsufficientData(
            "need at least 2 points for a slope".into(),
        ));
    }
    let lx: Vec<f64> = x.iter().map(|v| v.ln()).collect();
    let ly: Vec<f64> = y.iter().map(|v| v.ln()).collect();
    Ok(linear_fit(&lx, &ly).1)
}

/// Slope of `ln(gap)` against `ln ρ` over the asymptotic window, with
/// `gap = q·c_k(ρ) − λ_ref·ρ` on direct branches and `gap = d_k(ρ) − λ_ref·ρ`
/// on transformed ones.
pub fn fit_scaling_exponent(branch: &Branch, lambda_ref: f64) -> Result<f64> {
    let q = branch.pq.q();
    let tail = branch.tail(ASYMPTOTIC_WINDOW);
    let mut rho = Vec::with_capacity(tail.len());
    let mut gap = Vec::with_capacity(tail.len());
    for p in tail {
        let scaled = match branch.formulation {
            Formulation::Direct => q * p.level,
            Formulation::Transformed => p.level,
        };
        let g = scaled - lambda_ref * p.rho;
        let floor = 64.0 * f64::EPSILON * (scaled.abs() + (lambda_ref * p.rho).abs());
        if !(g > floor) {
            return Err(Error::NonPositiveGap { rho: p.rho, gap: g });
        }
        rho.push(p.rho);
        gap.push(g);
    }
    log_log_slope(&rho, &gap)
}

/// Masses scanned for a sign change of `λ_i(ρ) − λ`.
fn scan_grid() -> Vec<f64> {
    (0..=24)
        .map(|i| 10f64.powf(-6.0 + 0.5 * i as f64))
        .collect()
}

fn solve_mode_at(
    i: usize,
    lambda: f64,
    pq: PQParams,
    mesh: &Arc<Mesh1D>,
    cfg: &SolverConfig,
) -> Result<EigenPair> {
    let formulation = formulation_for(pq);
    let grid = scan_grid();
    let mut prev: Option<(f64, EigenPair)> = None;
    for &rho in &grid {
        let warm = prev.as_ref().map(|(_, p)| p);
        let pair = match solve_on_branch(formulation, i, rho, pq, mesh, cfg, warm) {
            Ok(p) => p,
            Err(_) => break,
        };
        let f = pair.lambda - lambda;
        if f.abs() < MULTIPLICITY_RTOL * lambda {
            return Ok(pair);
        }
        if let Some((f_prev, p_prev)) = &prev {
            if f_prev.signum() != f.signum() {
                return bisect(
                    i,
                    lambda,
                    pq,
                    mesh,
                    cfg,
                    formulation,
                    (p_prev.clone(), *f_prev),
                    (pair, f),
                );
            }
        }
        prev = Some((f, pair));
    }
    Err(Error::BracketNotFound { mode: i })
}

#[allow(clippy::too_many_arguments)]
fn bisect(
    i: usize,
    lambda: f64,
    pq: PQParams,
    mesh: &Arc<Mesh1D>,
    cfg: &SolverConfig,
    formulation: Formulation,
    mut lo: (EigenPair, f64),
    mut hi: (EigenPair, f64),
) -> Result<EigenPair> {
    for _ in 0..MAX_BISECTIONS {
        let rho = (lo.0.rho.ln() * 0.5 + hi.0.rho.ln() * 0.5).exp();
        let pair = solve_on_branch(formulation, i, rho, pq, mesh, cfg, Some(&lo.0))?;
        let f = pair.lambda - lambda;
        if f.abs() < MULTIPLICITY_RTOL * lambda {
            return Ok(pair);
        }
        if f.signum() == lo.1.signum() {
            lo = (pair, f);
        } else {
            hi = (pair, f);
        }
    }
    Ok(if lo.1.abs() < hi.1.abs() { lo.0 } else { hi.0 })
}

/// For `λ` between `λ_k(q)` and `λ_{k+1}(q)`, one eigenpair per mode
/// `i = 1..=k` with `λ_i(ρ_i) = λ` (relative `1e−6`), found by scanning the
/// mode-`i` branch for a sign change and bisecting in `ln ρ`. The sign
/// flipped functions are solutions as well. Modes whose branch does not
/// cross `λ` on the scanned range report [`Error::BracketNotFound`].
pub fn multiplicity_solve(
    lambda: f64,
    pq: PQParams,
    mesh: &Arc<Mesh1D>,
    cfg: &SolverConfig,
) -> Result<Vec<Result<EigenPair>>> {
    if !(lambda.is_finite() && lambda > 0.0) {
        return Err(Error::InvalidArgument(format!(
            "λ must be positive, got {lambda}"
        )));
    }
    cfg.validate()?;
    let k = modes_below(lambda, pq.q(), mesh.length())?;
    Ok((1..=k)
        .map(|i| solve_mode_at(i, lambda, pq, mesh, cfg))
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn grid_shape() {
        let g = default_grid();
        assert_eq!(g.len(), 12);
        assert_eq!(g[0], 1e-1);
        assert_eq!(g[11], 1e-6);
        assert!(g.windows(2).all(|w| w[1] < w[0]));
        assert_eq!(log_grid(0.5, 0.1, 1).unwrap(), vec![0.5]);
        assert!(log_grid(1.0, 0.0, 5).is_err());
    }

    #[test]
    fn constant_data_limit_is_exact() {
        let rho = [1e-3, 5e-4, 1e-4, 5e-5, 1e-5];
        let lambda = [9.123456789; 5];
        let est = fit_limit(&rho, &lambda, 0.5).unwrap();
        assert_eq!(est.limit, 9.123456789);
        assert_eq!(est.uncertainty, 0.0);
    }

    #[test]
    fn power_law_limit() {
        let rho: Vec<f64> = (0..6).map(|i| 10f64.powf(-3.0 - 0.5 * i as f64)).collect();
        let lambda: Vec<f64> = rho.iter().map(|r| 10.0 + r.sqrt()).collect();
        let est = fit_limit(&rho, &lambda, 0.4).unwrap();
        assert!((est.limit - 10.0).abs() < 1e-6, "{est:?}");
        assert!((est.exponent - 0.5).abs() < 1e-4);
    }

    #[test]
    fn too_few_points() {
        assert!(matches!(
            fit_limit(&[1.0, 0.5, 0.1], &[1.0, 1.0, 1.0], 0.5),
            Err(Error::InsufficientData(_))
        ));
    }

    #[test]
    fn noisy_data_is_a_poor_fit() {
        let rho = [1e-1, 1e-2, 1e-3, 1e-4, 1e-5, 1e-6];
        let lambda = [10.0, 11.0, 9.0, 12.0, 8.0, 10.5];
        assert!(matches!(
            fit_limit(&rho, &lambda, 0.5),
            Err(Error::PoorFit { .. })
        ));
    }

    #[test]
    fn exact_slope() {
        let x: Vec<f64> = (0..6).map(|i| 10f64.powf(-1.0 - i as f64)).collect();
        let y: Vec<f64> = x.iter().map(|v| v.powf(1.3)).collect();
        assert!((log_log_slope(&x, &y).unwrap() - 1.3).abs() < 1e-8);
    }
}
