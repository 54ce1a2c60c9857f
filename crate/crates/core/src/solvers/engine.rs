//! Preconditioned descent on products of mass spheres.
//!
//! The unknowns are split into panels separated by pinned zero nodes. Each
//! panel carries its own `∫|u|^q` constraint. Directions come from the lagged
//! weighted stiffness matrix `K(u)` with element weights like
//! `|u'|^{p−2} + |u'|^{q−2}`, for which `K(u)u` reproduces the operator; a
//! unit step is then one step of nonlinear inverse iteration.

use std::ops::Range;

use crate::error::{Error, Result};
use crate::fem::{dot, element_mass_q, mass_residual_unchecked, DualVector, NodalFunction};

use super::SolverConfig;

/// Relative size of the smallest objective change the line search trusts.
const RESOLUTION: f64 = 1e-13;

/// Panel layout by global node indices `0 = n_0 < n_1 < … < n_k = n_elements`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub(crate) struct Panels {
    bounds: Vec<usize>,
}

impl Panels {
    pub fn single(n_elements: usize) -> Self {
        Self {
            bounds: vec![0, n_elements],
        }
    }

    pub fn from_bounds(bounds: Vec<usize>) -> Self {
        debug_assert!(bounds.windows(2).all(|w| w[1] >= w[0] + 2));
        Self { bounds }
    }

    pub fn count(&self) -> usize {
        self.bounds.len() - 1
    }

    pub fn elements(&self, i: usize) -> Range<usize> {
        self.bounds[i]..self.bounds[i + 1]
    }

    /// Free coefficient indices of panel `i`.
    pub fn coeffs(&self, i: usize) -> Range<usize> {
        self.bounds[i]..self.bounds[i + 1] - 1
    }

    /// Coefficient indices held at zero.
    pub fn pinned(&self) -> impl Iterator<Item = usize> + '_ {
        self.bounds[1..self.bounds.len() - 1].iter().map(|n| n - 1)
    }

    pub fn masses(&self, u: &NodalFunction, q: f64) -> Vec<f64> {
        (0..self.count())
            .map(|i| self.elements(i).map(|e| element_mass_q(u, q, e)).sum())
            .collect()
    }
}

/// A functional minimized under the panel mass constraints.
pub(crate) trait Objective {
    /// `+∞` outside the admissible set.
    fn value(&self, u: &NodalFunction) -> f64;
    fn gradient(&self, u: &NodalFunction) -> DualVector;
    /// Element weights of the lagged stiffness preconditioner.
    fn weights(&self, u: &NodalFunction) -> Vec<f64>;
    /// Operator `T` with `T(u) = λ·m(u)` at a solution.
    fn operator(&self, u: &NodalFunction) -> DualVector;
    fn q(&self) -> f64;
}

#[derive(Debug, Clone)]
pub(crate) struct DescentResult {
    pub u: NodalFunction,
    pub iterations: usize,
}

/// Relative panelwise eigen-residual `‖T − λ_i m‖_* / ‖λ_i m‖_*` over the free
/// nodes, with `λ_i = ⟨T,u⟩_i / ⟨m,u⟩_i` and `‖·‖_*` the discrete `H^{-1}`
/// norm.
pub(crate) fn panel_residual(
    t: &DualVector,
    m: &DualVector,
    u: &NodalFunction,
    panels: &Panels,
) -> f64 {
    let n = m.0.len();
    let (mut r, mut lm) = (vec![0.0; n], vec![0.0; n]);
    for i in 0..panels.count() {
        let range = panels.coeffs(i);
        let lambda = dot(&t.0[range.clone()], &u.coeffs()[range.clone()])
            / dot(&m.0[range.clone()], &u.coeffs()[range.clone()]);
        for j in range {
            lm[j] = lambda * m.0[j];
            r[j] = t.0[j] - lm[j];
        }
    }
    let den = dual_norm(u, panels, &lm);
    if den > 0.0 {
        dual_norm(u, panels, &r) / den
    } else {
        f64::INFINITY
    }
}

/// `sqrt(r·K₀⁻¹r)` with `K₀` the unweighted stiffness matrix on `u`'s mesh.
pub(crate) fn dual_norm(u: &NodalFunction, panels: &Panels, r: &[f64]) -> f64 {
    let ones = vec![1.0; u.mesh().n_elements()];
    let y = solve_stiffness(u, &ones, panels, r);
    dot(r, &y).max(0.0).sqrt()
}

/// Rescales every panel of `u` to its target mass.
pub(crate) fn rescale(
    u: &mut NodalFunction,
    panels: &Panels,
    masses: &[f64],
    q: f64,
    mass_floor: f64,
) -> Result<()> {
    let current = panels.masses(u, q);
    let floor = mass_floor * u.mesh().length();
    for i in 0..panels.count() {
        if !(current[i] > floor) {
            return Err(Error::ZeroFunction {
                mass: current[i],
                floor,
            });
        }
        let factor = (masses[i] / current[i]).powf(1.0 / q);
        for j in panels.coeffs(i) {
            u.coeffs_mut()[j] *= factor;
        }
    }
    for j in panels.pinned() {
        u.coeffs_mut()[j] = 0.0;
    }
    Ok(())
}

/// Smallest slope magnitude entering the preconditioner weights.
pub(crate) fn slope_floor(u: &NodalFunction) -> f64 {
    let max = (0..u.mesh().n_elements())
        .map(|e| u.slope(e).abs())
        .fold(0.0, f64::max);
    if max > 0.0 {
        1e-8 * max
    } else {
        1.0
    }
}

#[inline]
pub(crate) fn weight(slope: f64, s: f64, floor: f64) -> f64 {
    if s == 2.0 {
        1.0
    } else {
        slope.abs().max(floor).powf(s - 2.0)
    }
}

/// Solves `K y = rhs` for the weighted stiffness matrix with element weights
/// `w`, pinned coefficients held at zero.
pub(crate) fn solve_stiffness(
    u: &NodalFunction,
    w: &[f64],
    panels: &Panels,
    rhs: &[f64],
) -> Vec<f64> {
    let mesh = u.mesh();
    let n = mesh.n_interior();
    let c: Vec<f64> = (0..mesh.n_elements())
        .map(|e| w[e] / mesh.element_length(e))
        .collect();
    let mut diag: Vec<f64> = (0..n).map(|j| c[j] + c[j + 1]).collect();
    // off[j] couples coefficients j and j + 1
    let mut off: Vec<f64> = (0..n.saturating_sub(1)).map(|j| -c[j + 1]).collect();
    let mut b = rhs.to_vec();
    for j in panels.pinned() {
        diag[j] = 1.0;
        b[j] = 0.0;
        if j > 0 {
            off[j - 1] = 0.0;
        }
        if j + 1 < n {
            off[j] = 0.0;
        }
    }
    thomas(&diag, &off, &mut b);
    b
}

/// Symmetric tridiagonal solve, overwriting `b`.
fn thomas(diag: &[f64], off: &[f64], b: &mut [f64]) {
    let n = diag.len();
    if n == 0 {
        return;
    }
    let mut cp = vec![0.0; n];
    let mut denom = diag[0];
    if n > 1 {
        cp[0] = off[0] / denom;
    }
    b[0] /= denom;
    for i in 1..n {
        denom = diag[i] - off[i - 1] * cp[i - 1];
        if i < n - 1 {
            cp[i] = off[i] / denom;
        }
        b[i] = (b[i] - off[i - 1] * b[i - 1]) / denom;
    }
    for i in (0..n - 1).rev() {
        b[i] -= cp[i] * b[i + 1];
    }
}

/// Minimizes `obj` over `{∫_{panel i}|u|^q = masses[i]}` starting from `u0`.
pub(crate) fn descend<O: Objective>(
    obj: &O,
    u0: NodalFunction,
    panels: &Panels,
    masses: &[f64],
    tol: f64,
    cfg: &SolverConfig,
) -> Result<DescentResult> {
    let q = obj.q();
    let mut u = u0;
    rescale(&mut u, panels, masses, q, cfg.mass_floor)?;
    let mut f = obj.value(&u);
    if !f.is_finite() {
        return Err(Error::InvalidArgument(
            "descent started outside the admissible set".into(),
        ));
    }
    let mut residual = f64::INFINITY;
    for it in 0..cfg.max_iterations {
        let m = mass_residual_unchecked(&u, q);
        residual = panel_residual(&obj.operator(&u), &m, &u, panels);
        if residual < tol {
            return Ok(DescentResult { u, iterations: it });
        }
        let g = obj.gradient(&u);
        let w = obj.weights(&u);
        let yg = solve_stiffness(&u, &w, panels, &g.0);
        let ym = solve_stiffness(&u, &w, panels, &m.0);
        let mut d = vec![0.0; yg.len()];
        for i in 0..panels.count() {
            let r = panels.coeffs(i);
            let nu = dot(&m.0[r.clone()], &yg[r.clone()]) / dot(&m.0[r.clone()], &ym[r.clone()]);
            for j in r {
                d[j] = -(yg[j] - nu * ym[j]);
            }
        }
        let slope = dot(&g.0, &d);
        let noise = 8.0 * f64::EPSILON * f.abs();
        // Below RESOLUTION the objective cannot rank steps; those steps, and
        // steps whose decrease is lost in rounding, must reduce the residual.
        let resolved = slope.abs() > RESOLUTION * f.abs();
        let mut alpha = 1.0;
        let mut accepted = None;
        for _ in 0..cfg.max_backtracks {
            let mut trial = u.axpy(alpha, &d);
            if rescale(&mut trial, panels, masses, q, cfg.mass_floor).is_ok() {
                let ft = obj.value(&trial);
                let decrease = cfg.armijo_c1 * alpha * slope.min(0.0);
                let ok = ft.is_finite()
                    && if resolved && ft <= f + decrease {
                        true
                    } else if !resolved || ft <= f + decrease + noise {
                        let mt = mass_residual_unchecked(&trial, q);
                        panel_residual(&obj.operator(&trial), &mt, &trial, panels) < residual
                    } else {
                        false
                    };
                if ok {
                    accepted = Some((trial, ft));
                    break;
                }
            }
            alpha *= cfg.armijo_shrink;
        }
        match accepted {
            Some((trial, ft)) => {
                u = trial;
                f = ft;
            }
            None => {
                return Err(Error::MaxIterations {
                    iterations: it,
                    residual,
                })
            }
        }
    }
    Err(Error::MaxIterations {
        iterations: cfg.max_iterations,
        residual,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn thomas_solves_tridiagonal() {
        let diag = [4.0, 5.0, 6.0, 7.0];
        let off = [-1.0, -2.0, -1.5];
        let x = [1.0, -2.0, 0.5, 3.0];
        let mut b = vec![0.0; 4];
        for i in 0..4 {
            b[i] = diag[i] * x[i];
            if i > 0 {
                b[i] += off[i - 1] * x[i - 1];
            }
            if i < 3 {
                b[i] += off[i] * x[i + 1];
            }
        }
        thomas(&diag, &off, &mut b);
        for i in 0..4 {
            assert!((b[i] - x[i]).abs() < 1e-14);
        }
    }

    #[test]
    fn panel_ranges() {
        let p = Panels::from_bounds(vec![0, 4, 8, 12]);
        assert_eq!(p.count(), 3);
        assert_eq!(p.coeffs(0), 0..3);
        assert_eq!(p.coeffs(1), 4..7);
        assert_eq!(p.pinned().collect::<Vec<_>>(), vec![3, 7]);
        assert_eq!(p.elements(2), 8..12);
    }
}
