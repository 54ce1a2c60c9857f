use std::f64::consts::PI;
use std::sync::Arc;

use pqlap::continuation::{
    default_grid, estimate_limit, fit_scaling_exponent, log_grid, multiplicity_solve, trace_branch,
    WarmStart,
};
use pqlap::fem::{grad_energy, Mesh1D};
use pqlap::functionals::PQParams;
use pqlap::reference::qlap_eigenvalue;
use pqlap::solvers::{solve_fixed_rho, Formulation, SolverConfig};
use pqlap::Error;

const PI2: f64 = PI * PI;

fn mesh(n: usize) -> Arc<Mesh1D> {
    Arc::new(Mesh1D::uniform(0.0, 1.0, n).unwrap())
}

fn pq(p: f64, q: f64) -> PQParams {
    PQParams::new(p, q).unwrap()
}

#[test]
fn branch_from_zero_descends_to_laplacian_eigenvalue() {
    let b = trace_branch(
        1,
        pq(3.0, 2.0),
        &default_grid(),
        &mesh(512),
        &SolverConfig::default(),
    )
    .unwrap();
    assert_eq!(b.points.len(), 12);
    assert_eq!(b.formulation, Formulation::Direct);
    assert_eq!(b.warm_start, WarmStart::PreviousPoint);
    assert!(b.points.windows(2).all(|w| w[1].rho < w[0].rho));
    assert!(b.points.windows(2).all(|w| w[1].lambda < w[0].lambda));
    assert!(b
        .points
        .iter()
        .all(|pt| pt.lambda > PI2 && pt.sign_changes == 0));
    assert!(b.points.windows(2).all(|w| w[1].norm1p < w[0].norm1p));
    let (first, last) = (&b.points[0], b.points.last().unwrap());
    assert!(last.norm1p < 0.1 * first.norm1p);
    let est = estimate_limit(&b).unwrap();
    assert!((est.limit - PI2).abs() < 0.01 * PI2);
    assert!(est.uncertainty < 1e-2);
}

#[test]
fn branch_points_satisfy_energy_identity() {
    let b = trace_branch(
        2,
        pq(3.0, 2.0),
        &log_grid(1e-1, 1e-3, 5).unwrap(),
        &mesh(256),
        &SolverConfig::default(),
    )
    .unwrap();
    for pt in &b.points {
        assert_eq!(pt.sign_changes, 1);
        assert!(pt.residual < 1e-9);
        let identity = pt.norm1p.powi(3) + pt.norm1q.powi(2);
        assert!((pt.lambda * pt.rho - identity).abs() < 1e-9 * identity);
    }
}

#[test]
fn branch_from_infinity_diverges_in_original_variables() {
    let p = pq(1.5, 2.0);
    let b = trace_branch(1, p, &default_grid(), &mesh(512), &SolverConfig::default()).unwrap();
    assert_eq!(b.formulation, Formulation::Transformed);
    let w: Vec<f64> = b
        .points
        .iter()
        .map(|pt| pt.transformed_norm1q.unwrap())
        .collect();
    assert!(w.windows(2).all(|x| x[1] < x[0]));
    assert!(w.last().unwrap() < &(0.1 * w[0]));
    assert!(b.points.windows(2).all(|x| x[1].norm1q > x[0].norm1q));
    for (pt, wn) in b.points.iter().zip(&w) {
        assert!((pt.norm1q * wn - 1.0).abs() < 1e-12);
        assert!(pt.lambda > PI2);
    }
    let est = estimate_limit(&b).unwrap();
    assert!((est.limit - PI2).abs() < 0.01 * PI2);
}

#[test]
fn single_point_grid_is_one_solve() {
    let m = mesh(128);
    let cfg = SolverConfig::default();
    let b = trace_branch(1, pq(3.0, 2.0), &[0.01], &m, &cfg).unwrap();
    assert_eq!(b.points.len(), 1);
    let direct = solve_fixed_rho(1, 0.01, pq(3.0, 2.0), &m, &cfg).unwrap();
    assert!((b.points[0].lambda - direct.lambda).abs() < 1e-8 * direct.lambda);
}

#[test]
fn broken_branch_returns_partial_result() {
    let cfg = SolverConfig {
        max_iterations: 1,
        ..SolverConfig::default()
    };
    let err = trace_branch(1, pq(3.0, 2.0), &default_grid(), &mesh(128), &cfg).unwrap_err();
    match err {
        Error::BranchBroken {
            index,
            rho,
            partial,
            ..
        } => {
            assert_eq!(partial.points.len(), index);
            assert!(rho <= 1e-1);
        }
        other => panic!("unexpected {other}"),
    }
}

#[test]
fn grid_must_decrease() {
    let cfg = SolverConfig::default();
    assert!(trace_branch(1, pq(3.0, 2.0), &[1e-3, 1e-2], &mesh(32), &cfg).is_err());
    assert!(trace_branch(1, pq(3.0, 2.0), &[], &mesh(32), &cfg).is_err());
}

#[test]
fn level_gap_exponent_from_zero() {
    let b = trace_branch(
        1,
        pq(3.0, 2.0),
        &default_grid(),
        &mesh(2048),
        &SolverConfig::default(),
    )
    .unwrap();
    let slope = fit_scaling_exponent(&b, PI2).unwrap();
    assert!((slope - 1.5).abs() < 0.15 * 1.5, "{slope}");
}

#[test]
fn level_gap_exponent_from_infinity() {
    // d_1 − λ_1(2)ρ scales like ρ^{(2q−p)/q}.
    let b = trace_branch(
        1,
        pq(1.5, 2.0),
        &default_grid(),
        &mesh(512),
        &SolverConfig::default(),
    )
    .unwrap();
    let slope = fit_scaling_exponent(&b, PI2).unwrap();
    assert!((slope - 1.25).abs() < 0.15 * 1.25, "{slope}");
}

#[test]
fn multiplicity_counts_modes_below_lambda() {
    let m = mesh(256);
    let cfg = SolverConfig::default();
    let p = pq(3.0, 2.0);
    assert!(multiplicity_solve(0.5 * PI2, p, &m, &cfg)
        .unwrap()
        .is_empty());
    for lambda in [2.0 * PI2, 45.0, 10.0 * PI2] {
        let k = (1..10)
            .take_while(|&k| qlap_eigenvalue(k, 2.0, 1.0).unwrap() < lambda)
            .count();
        let modes = multiplicity_solve(lambda, p, &m, &cfg).unwrap();
        assert_eq!(modes.len(), k);
        for (i, r) in modes.iter().enumerate() {
            let e = r.as_ref().unwrap();
            assert_eq!(e.sign_changes, i);
            assert!((e.lambda - lambda).abs() < 1e-6 * lambda);
            assert!(e.residual < 1e-7);
            let rhs = grad_energy(&e.u, 3.0).unwrap() + grad_energy(&e.u, 2.0).unwrap();
            assert!((e.lambda * e.rho - rhs).abs() < 1e-10 * rhs);
        }
    }
}
