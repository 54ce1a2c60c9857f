//! Fixed-mass solves on panel meshes, with the outer adjustment of panel
//! lengths and mass shares for the nodal surrogate.

use std::sync::Arc;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::fem::{dot, mass_residual_unchecked, Mesh1D, NodalFunction};
use crate::functionals::PQParams;
use crate::reference::lobe_profile;

use super::engine::{descend, Objective, Panels};
use super::objectives::{FixedMass, Transformed};
use super::{assemble, EigenPair, Formulation, SolverConfig};

const MAX_OUTER: usize = 20;
const FD_STEP: f64 = 1e-5;

/// Element counts per panel, as even as possible.
fn panel_bounds(n_elements: usize, k: usize) -> Vec<usize> {
    let (base, rem) = (n_elements / k, n_elements % k);
    let mut bounds = vec![0];
    for i in 0..k {
        let n = base + usize::from(i < rem);
        bounds.push(bounds[i] + n);
    }
    bounds
}

fn softmax(z: &[f64]) -> Vec<f64> {
    let max = z.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let e: Vec<f64> = z.iter().map(|x| (x - max).exp()).collect();
    let s: f64 = e.iter().sum();
    e.into_iter().map(|x| x / s).collect()
}

/// `k − 1` free logits followed by an implicit zero.
fn shares(logits: &[f64]) -> Vec<f64> {
    let mut z = logits.to_vec();
    z.push(0.0);
    softmax(&z)
}

fn logits(shares: &[f64]) -> Vec<f64> {
    let last = shares[shares.len() - 1];
    shares[..shares.len() - 1]
        .iter()
        .map(|s| (s / last).ln())
        .collect()
}

fn panel_mesh(base: &Mesh1D, bounds: &[usize], lengths: &[f64]) -> Result<Arc<Mesh1D>> {
    let mut nodes = vec![base.a()];
    let mut x0 = base.a();
    for (i, len) in lengths.iter().enumerate() {
        let n = bounds[i + 1] - bounds[i];
        for j in 1..=n {
            nodes.push(x0 + len * j as f64 / n as f64);
        }
        x0 += len;
    }
    *nodes.last_mut().expect("nonempty") = base.b();
    Ok(Arc::new(
        Mesh1D::from_nodes(nodes)?.with_quadrature_order(base.quadrature().order())?,
    ))
}

/// Alternating generalized-sine lobes, one per panel, plus an optional
/// seeded combination of higher sine modes.
pub(crate) fn initial_guess(
    mesh: &Arc<Mesh1D>,
    bounds: &[usize],
    q: f64,
    amplitude: f64,
    seed: u64,
) -> NodalFunction {
    let nodes = mesh.nodes();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut coeffs = vec![0.0; mesh.n_interior()];
    for i in 0..bounds.len() - 1 {
        let (x0, x1) = (nodes[bounds[i]], nodes[bounds[i + 1]]);
        let c: Vec<f64> = (0..5)
            .map(|_| amplitude * rng.gen_range(-1.0..=1.0))
            .collect();
        let sign = if i % 2 == 0 { 1.0 } else { -1.0 };
        for node in bounds[i] + 1..bounds[i + 1] {
            let t = (nodes[node] - x0) / (x1 - x0);
            let extra: f64 = c
                .iter()
                .enumerate()
                .map(|(j, cj)| cj * ((j as f64 + 2.0) * std::f64::consts::PI * t).sin())
                .sum();
            coeffs[node - 1] = sign * (lobe_profile(q, t) + extra);
        }
    }
    NodalFunction::from_coeffs(mesh, coeffs).expect("sized to mesh")
}

struct Setup<'a> {
    formulation: Formulation,
    k: usize,
    rho: f64,
    pq: PQParams,
    base: &'a Mesh1D,
    bounds: Vec<usize>,
    cfg: &'a SolverConfig,
    inner_tol: f64,
}

struct Evaluation {
    pair: EigenPair,
    /// Eigenvalue mismatches between neighbouring panels, then the weak
    /// residual at the pinned nodes, both relative.
    mismatch: Vec<f64>,
}

impl Setup<'_> {
    fn evaluate(&self, theta: &[f64], start: &[f64]) -> Result<Evaluation> {
        let k = self.k;
        let (mass_shares, length_shares) = if k == 1 {
            (vec![1.0], vec![1.0])
        } else {
            (shares(&theta[..k - 1]), shares(&theta[k - 1..]))
        };
        let lengths: Vec<f64> = length_shares
            .iter()
            .map(|s| s * self.base.length())
            .collect();
        let mesh = panel_mesh(self.base, &self.bounds, &lengths)?;
        let panels = Panels::from_bounds(self.bounds.clone());
        let masses: Vec<f64> = mass_shares.iter().map(|s| s * self.rho).collect();
        let u0 = NodalFunction::from_coeffs(&mesh, start.to_vec())?;
        let result = match self.formulation {
            Formulation::Direct => self.run(&FixedMass { pq: self.pq }, u0, &panels, &masses)?,
            Formulation::Transformed => {
                self.run(&Transformed { pq: self.pq }, u0, &panels, &masses)?
            }
        };
        let breaks = self.bounds[1..k].iter().map(|&n| mesh.nodes()[n]).collect();
        let pair = assemble(self.formulation, k, result.0, self.pq, result.1, breaks);
        let mismatch = if k == 1 {
            Vec::new()
        } else {
            self.mismatch(&pair, &panels)
        };
        Ok(Evaluation { pair, mismatch })
    }

    fn run<O: Objective>(
        &self,
        obj: &O,
        u0: NodalFunction,
        panels: &Panels,
        masses: &[f64],
    ) -> Result<(NodalFunction, usize)> {
        let r = descend(obj, u0, panels, masses, self.inner_tol, self.cfg)?;
        Ok((r.u, r.iterations))
    }

    fn mismatch(&self, pair: &EigenPair, panels: &Panels) -> Vec<f64> {
        let u = &pair.u;
        let t = match self.formulation {
            Formulation::Direct => FixedMass { pq: self.pq }.operator(u),
            Formulation::Transformed => Transformed { pq: self.pq }.operator(u),
        };
        let m = mass_residual_unchecked(u, self.pq.q());
        let lambdas: Vec<f64> = (0..panels.count())
            .map(|i| {
                let r = panels.coeffs(i);
                dot(&t.0[r.clone()], &u.coeffs()[r.clone()]) / dot(&m.0[r.clone()], &u.coeffs()[r])
            })
            .collect();
        let scale = m.norm() * pair.lambda;
        let mut out: Vec<f64> = lambdas
            .windows(2)
            .map(|w| (w[0] - w[1]) / pair.lambda)
            .collect();
        out.extend(
            panels
                .pinned()
                .map(|j| (t.0[j] - pair.lambda * m.0[j]) / scale),
        );
        out
    }
}

fn max_abs(v: &[f64]) -> f64 {
    v.iter().fold(0.0, |m, x| m.max(x.abs()))
}

fn norm(v: &[f64]) -> f64 {
    v.iter().map(|x| x * x).sum::<f64>().sqrt()
}

/// Gaussian elimination with partial pivoting on a small dense system.
fn dense_solve(mut a: Vec<Vec<f64>>, mut b: Vec<f64>) -> Option<Vec<f64>> {
    let n = b.len();
    for col in 0..n {
        let piv = (col..n).max_by(|&i, &j| a[i][col].abs().total_cmp(&a[j][col].abs()))?;
        if a[piv][col].abs() < 1e-300 {
            return None;
        }
        a.swap(col, piv);
        b.swap(col, piv);
        for row in col + 1..n {
            let f = a[row][col] / a[col][col];
            for c in col..n {
                a[row][c] -= f * a[col][c];
            }
            b[row] -= f * b[col];
        }
    }
    let mut x = vec![0.0; n];
    for row in (0..n).rev() {
        let s: f64 = (row + 1..n).map(|c| a[row][c] * x[c]).sum();
        x[row] = (b[row] - s) / a[row][row];
    }
    Some(x)
}

pub(crate) fn solve_mode(
    formulation: Formulation,
    k: usize,
    rho: f64,
    pq: PQParams,
    mesh: &Arc<Mesh1D>,
    cfg: &SolverConfig,
    warm: Option<&EigenPair>,
) -> Result<EigenPair> {
    cfg.validate()?;
    if k == 0 {
        return Err(Error::InvalidArgument("mode index starts at 1".into()));
    }
    let n = mesh.n_elements();
    if n < 2 * k {
        return Err(Error::InfeasibleNodalPattern {
            k,
            needed: 2 * k,
            available: n,
        });
    }
    let bounds = panel_bounds(n, k);
    let setup = Setup {
        formulation,
        k,
        rho,
        pq,
        base: mesh,
        inner_tol: if k == 1 {
            cfg.residual_tol
        } else {
            0.1 * cfg.residual_tol
        },
        bounds: bounds.clone(),
        cfg,
    };

    let compatible = warm.filter(|w| {
        w.mode == k
            && w.formulation == formulation
            && w.u.coeffs().len() == mesh.n_interior()
            && w.break_points.len() == k - 1
    });
    let (theta, start) = match compatible {
        Some(w) if k == 1 => (Vec::new(), w.u.coeffs().to_vec()),
        Some(w) => {
            let panels = Panels::from_bounds(bounds.clone());
            let masses = panels.masses(&w.u, pq.q());
            let total: f64 = masses.iter().sum();
            let mass_shares: Vec<f64> = masses.iter().map(|m| m / total).collect();
            let mut edges = vec![mesh.a()];
            edges.extend(&w.break_points);
            edges.push(mesh.b());
            let length_shares: Vec<f64> = edges
                .windows(2)
                .map(|e| (e[1] - e[0]) / mesh.length())
                .collect();
            let mut theta = logits(&mass_shares);
            theta.extend(logits(&length_shares));
            (theta, w.u.coeffs().to_vec())
        }
        None => {
            let theta = vec![0.0; 2 * (k - 1)];
            let lengths = vec![mesh.length() / k as f64; k];
            let guess_mesh = if k == 1 {
                Arc::clone(mesh)
            } else {
                panel_mesh(mesh, &bounds, &lengths)?
            };
            let u = initial_guess(&guess_mesh, &bounds, pq.q(), cfg.perturbation, cfg.seed);
            (theta, u.into_coeffs())
        }
    };

    if k == 1 || !cfg.nodal_constraint {
        let eval = setup.evaluate(&theta, &start)?;
        let iterations = eval.pair.iterations;
        return finish(eval.pair, iterations, cfg);
    }
    refine(&setup, theta, &start)
}

/// Newton iteration on the panel logits until neighbouring panels agree on
/// `λ` and the weak form holds at the pinned zeros.
fn refine(setup: &Setup, mut theta: Vec<f64>, start: &[f64]) -> Result<EigenPair> {
    let cfg = setup.cfg;
    let mut eval = setup.evaluate(&theta, start)?;
    let mut iterations = eval.pair.iterations;
    for _ in 0..MAX_OUTER {
        if eval.pair.residual < cfg.residual_tol && max_abs(&eval.mismatch) < cfg.residual_tol {
            break;
        }
        let dim = theta.len();
        let base = eval.mismatch.clone();
        let coeffs = eval.pair.u.coeffs().to_vec();
        let mut jac = vec![vec![0.0; dim]; dim];
        for j in 0..dim {
            let mut th = theta.clone();
            th[j] += FD_STEP;
            let e = setup.evaluate(&th, &coeffs)?;
            iterations += e.pair.iterations;
            for i in 0..dim {
                jac[i][j] = (e.mismatch[i] - base[i]) / FD_STEP;
            }
        }
        let step =
            dense_solve(jac, base.iter().map(|r| -r).collect()).ok_or(Error::MaxIterations {
                iterations,
                residual: eval.pair.residual,
            })?;
        let mut alpha = 1.0;
        let mut improved = None;
        for _ in 0..8 {
            let th: Vec<f64> = theta
                .iter()
                .zip(&step)
                .map(|(t, s)| t + alpha * s)
                .collect();
            if let Ok(e) = setup.evaluate(&th, &coeffs) {
                iterations += e.pair.iterations;
                if norm(&e.mismatch) < norm(&base) {
                    improved = Some((th, e));
                    break;
                }
            }
            alpha *= 0.5;
        }
        match improved {
            Some((th, e)) => {
                theta = th;
                eval = e;
            }
            None => break,
        }
    }
    finish(eval.pair, iterations, cfg)
}

fn finish(mut pair: EigenPair, iterations: usize, cfg: &SolverConfig) -> Result<EigenPair> {
    pair.iterations = iterations;
    if pair.residual < cfg.residual_tol {
        Ok(pair)
    } else {
        Err(Error::MaxIterations {
            iterations,
            residual: pair.residual,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn bounds_split_evenly() {
        assert_eq!(panel_bounds(10, 3), vec![0, 4, 7, 10]);
        assert_eq!(panel_bounds(8, 1), vec![0, 8]);
    }

    #[test]
    fn share_round_trip() {
        let s = vec![0.2, 0.5, 0.3];
        let back = shares(&logits(&s));
        for (a, b) in s.iter().zip(&back) {
            assert!((a - b).abs() < 1e-15);
        }
    }

    #[test]
    fn dense_solver() {
        let a = vec![vec![0.0, 2.0], vec![3.0, 1.0]];
        let x = dense_solve(a, vec![4.0, 5.0]).unwrap();
        assert!((x[0] - 1.0).abs() < 1e-15 && (x[1] - 2.0).abs() < 1e-15);
    }

    #[test]
    fn unequal_start_is_pulled_to_balance() {
        let pq = PQParams::new(3.0, 2.0).unwrap();
        let mesh = Arc::new(Mesh1D::uniform(0.0, 1.0, 128).unwrap());
        let cfg = SolverConfig::default();
        let bounds = panel_bounds(128, 2);
        let setup = Setup {
            formulation: Formulation::Direct,
            k: 2,
            rho: 0.01,
            pq,
            base: &mesh,
            bounds: bounds.clone(),
            cfg: &cfg,
            inner_tol: 1e-10,
        };
        let start = initial_guess(&mesh, &bounds, 2.0, 0.0, 0).into_coeffs();
        let skewed = setup.evaluate(&[0.3, 0.2], &start).unwrap();
        assert!(max_abs(&skewed.mismatch) > 1e-3);
        // Equal shares balance by symmetry; Newton must return there.
        let pair = refine(&setup, vec![0.3, 0.2], &start).unwrap();
        assert!(
            (pair.break_points[0] - 0.5).abs() < 1e-7,
            "{:?}",
            pair.break_points
        );
        assert!(pair.residual < 1e-9);
    }
}
