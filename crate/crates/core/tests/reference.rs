use std::f64::consts::PI;
use std::sync::Arc;

use pqlap::fem::{grad_energy, mass_q, Mesh1D};
use pqlap::reference::{
    golden_file_contents, golden_spectrum, lobe_profile, qlap_eigenvalue, reference_eigenfunction,
    shooting_eigenvalue, shooting_oracle, GOLDEN_EXPONENTS, GOLDEN_MAX_MODE, GOLDEN_SPECTRUM_CSV,
};
use pqlap::solvers::sign_changes;

fn mesh(n: usize) -> Arc<Mesh1D> {
    Arc::new(Mesh1D::uniform(0.0, 1.0, n).unwrap())
}

#[test]
fn closed_form_agrees_with_shooting() {
    for &q in &GOLDEN_EXPONENTS {
        for k in 1..=GOLDEN_MAX_MODE {
            let closed = qlap_eigenvalue(k, q, 1.0).unwrap();
            let shot = shooting_eigenvalue(k, q, 1.0).unwrap();
            assert!(
                (closed - shot).abs() < 1e-8 * closed,
                "q={q} k={k}: {closed} vs {shot}"
            );
        }
    }
}

#[test]
fn laplacian_values() {
    assert!((qlap_eigenvalue(1, 2.0, 1.0).unwrap() - 9.8696044).abs() < 1e-7);
    assert!((qlap_eigenvalue(3, 2.0, 1.0).unwrap() - 88.826440).abs() < 1e-6);
}

#[test]
fn scaling_in_length() {
    for &q in &GOLDEN_EXPONENTS {
        let one = qlap_eigenvalue(2, q, 1.0).unwrap();
        let l = 2.7;
        let scaled = qlap_eigenvalue(2, q, l).unwrap();
        assert!((scaled - one / l.powf(q)).abs() <= 1e-14 * one);
    }
}

#[test]
fn shooting_brackets_first_laplacian_eigenvalue() {
    let below = shooting_oracle(2.0, PI * PI - 1e-6, 1.0).unwrap();
    let above = shooting_oracle(2.0, PI * PI + 1e-6, 1.0).unwrap();
    assert!(below.end_value > 0.0 && above.end_value < 0.0);
    let between = shooting_oracle(2.0, 2.0 * PI * PI, 1.0).unwrap();
    assert_eq!(between.zero_count, 1);
    assert!(between.end_value != 0.0);
}

#[test]
fn shooting_converges_for_small_exponent() {
    let lambda = shooting_eigenvalue(1, 1.5, 1.0).unwrap();
    let r = shooting_oracle(1.5, lambda, 1.0).unwrap();
    assert_eq!(r.zero_count, 0);
    assert!(r.end_value.abs() < 1e-10);
}

#[test]
fn golden_file_is_reproduced_bit_for_bit() {
    assert_eq!(golden_file_contents(), GOLDEN_SPECTRUM_CSV);
    let rows = golden_spectrum();
    assert_eq!(rows.len(), GOLDEN_EXPONENTS.len() * GOLDEN_MAX_MODE);
    for (q, k, lambda) in rows {
        assert_eq!(lambda, qlap_eigenvalue(k, q, 1.0).unwrap());
    }
}

#[test]
fn eigenvalues_increase_with_mode() {
    for &q in &GOLDEN_EXPONENTS {
        for k in 1..GOLDEN_MAX_MODE {
            assert!(qlap_eigenvalue(k, q, 1.0).unwrap() < qlap_eigenvalue(k + 1, q, 1.0).unwrap());
        }
    }
}

#[test]
fn rayleigh_quotient_on_fine_mesh() {
    let m = mesh(1024);
    for &q in &GOLDEN_EXPONENTS {
        for k in 1..=4 {
            let e = reference_eigenfunction(k, q, &m).unwrap();
            assert!((mass_q(&e, q).unwrap() - 1.0).abs() < 1e-10);
            let rq = grad_energy(&e, q).unwrap() / mass_q(&e, q).unwrap();
            let exact = qlap_eigenvalue(k, q, 1.0).unwrap();
            assert!(
                (rq - exact).abs() < 1e-3 * exact,
                "q={q} k={k}: {rq} vs {exact}"
            );
            assert_eq!(sign_changes(&e), k - 1);
        }
    }
}

#[test]
fn first_mode_is_normalized_sine_for_laplacian() {
    let m = mesh(64);
    let e = reference_eigenfunction(1, 2.0, &m).unwrap();
    let c = e.node_value(32);
    for (i, &x) in m.nodes().iter().enumerate() {
        assert!((e.node_value(i) - c * (PI * x).sin()).abs() < 1e-12);
    }
    assert!(e.coeffs().iter().all(|&v| v > 0.0));
}

#[test]
fn second_mode_is_antisymmetric() {
    let m = mesh(64);
    let e = reference_eigenfunction(2, 2.0, &m).unwrap();
    assert!(e.node_value(32).abs() < 1e-12);
    for i in 0..=64 {
        assert!((e.node_value(i) + e.node_value(64 - i)).abs() < 1e-12);
    }
    assert!(e.node_value(16) > 0.0);
}

/// Fixed-step RK4 for `u' = |v|^{q'-2}v, v' = -λ|u|^{q-2}u`, `u(0) = 0`,
/// `v(0) = 1`; returns `u` sampled every `stride` steps.
fn rk4_trajectory(q: f64, lambda: f64, steps: usize, stride: usize) -> Vec<(f64, f64)> {
    let qc = q / (q - 1.0);
    let f = |u: f64, v: f64| {
        (
            v.abs().powf(qc - 2.0) * v,
            -lambda * u.abs().powf(q - 2.0) * u,
        )
    };
    let h = 0.5 / steps as f64;
    let (mut u, mut v) = (0.0f64, 1.0f64);
    let mut out = vec![(0.0, 0.0)];
    for i in 0..steps {
        let k1 = f(u, v);
        let k2 = f(u + 0.5 * h * k1.0, v + 0.5 * h * k1.1);
        let k3 = f(u + 0.5 * h * k2.0, v + 0.5 * h * k2.1);
        let k4 = f(u + h * k3.0, v + h * k3.1);
        u += h / 6.0 * (k1.0 + 2.0 * k2.0 + 2.0 * k3.0 + k4.0);
        v += h / 6.0 * (k1.1 + 2.0 * k2.1 + 2.0 * k3.1 + k4.1);
        if (i + 1) % stride == 0 {
            out.push(((i + 1) as f64 * h, u));
        }
    }
    out
}

#[test]
fn cubic_profile_follows_shooting_trajectory() {
    let q = 3.0;
    let lambda = qlap_eigenvalue(1, q, 1.0).unwrap();
    let traj = rk4_trajectory(q, lambda, 200_000, 10_000);
    let peak = traj.last().unwrap().1;
    for &(t, u) in &traj {
        assert!(
            (u / peak - lobe_profile(q, t)).abs() < 1e-6,
            "t={t}: {} vs {}",
            u / peak,
            lobe_profile(q, t)
        );
    }
    let m = mesh(200);
    let e = reference_eigenfunction(1, q, &m).unwrap();
    for i in 0..=100 {
        assert!((e.node_value(i) - e.node_value(200 - i)).abs() < 1e-12);
        assert!(
            (e.node_value(i) - e.node_value(100) * lobe_profile(q, m.nodes()[i])).abs() < 1e-12
        );
    }
}
