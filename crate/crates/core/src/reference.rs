//! Dirichlet spectrum of the pure q-Laplacian on an interval.
//!
//! In one dimension the eigenpairs of `−(|u'|^{q−2}u')' = λ|u|^{q−2}u`,
//! `u(0) = u(L) = 0`, are known in closed form:
//!
//! ```text
//! λ_k(q) = (q − 1) (k π̂_q / L)^q,    π̂_q = 2π / (q sin(π/q)),
//! ```
//!
//! with eigenfunctions made of `k` alternating copies of the generalized
//! sine lobe. The closed form is cross-checked by an independent shooting
//! oracle which integrates the first-order system for `(u, |u'|^{q−2}u')`.

use std::f64::consts::PI;
use std::sync::Arc;

use statrs::function::beta::{beta, beta_reg, inv_beta_reg};

use crate::error::{check_exponent, Error, Result};
use crate::fem::{mass_q_unchecked, Mesh1D, NodalFunction};
use crate::ode::{integrate, Tolerances};
use crate::table::{format_f64, SCHEMA_VERSION};

/// Golden reference values `q,k,lambda` on the unit interval, produced by
/// [`qlap_eigenvalue`] after agreement with [`shooting_eigenvalue`].
pub const GOLDEN_SPECTRUM_CSV: &str = include_str!("../data/v1/reference_spectrum.csv");

/// Exponents covered by the golden file.
pub const GOLDEN_EXPONENTS: [f64; 5] = [1.5, 2.0, 2.5, 3.0, 4.0];
pub const GOLDEN_MAX_MODE: usize = 6;

const SHOOTING_TOL: Tolerances = Tolerances {
    rtol: 1e-11,
    atol: 1e-14,
};

/// `π̂_q = 2∫_0^1 (1 − s^q)^{−1/q} ds = 2π / (q sin(π/q))`.
pub fn generalized_pi(q: f64) -> f64 {
    2.0 * PI / (q * (PI / q).sin())
}

pub fn qlap_eigenvalue(k: usize, q: f64, length: f64) -> Result<f64> {
    check_exponent(q)?;
    check_length(length)?;
    check_mode(k)?;
    Ok((q - 1.0) * (k as f64 * generalized_pi(q) / length).powf(q))
}

fn check_length(length: f64) -> Result<()> {
    if length.is_finite() && length > 0.0 {
        Ok(())
    } else {
        Err(Error::InvalidLength(length))
    }
}

fn check_mode(k: usize) -> Result<()> {
    if k == 0 {
        Err(Error::InvalidArgument("mode index starts at 1".into()))
    } else {
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ShootingResult {
    /// Sign changes of `u` strictly inside `(0, L)`.
    pub zero_count: usize,
    /// `u(L)`.
    pub end_value: f64,
}

/// Integrates `u' = |v|^{q'−2}v`, `v' = −λ|u|^{q−2}u` from `u(0) = 0`,
/// `v(0) = 1` across `[0, L]`.
pub fn shooting_oracle(q: f64, lambda: f64, length: f64) -> Result<ShootingResult> {
    check_exponent(q)?;
    check_length(length)?;
    if !(lambda.is_finite() && lambda > 0.0) {
        return Err(Error::InvalidArgument(format!(
            "shooting needs λ > 0, got {lambda}"
        )));
    }
    let conj = q / (q - 1.0);
    let rhs = |y: &[f64; 2]| {
        [
            signed_pow(y[1], conj - 1.0),
            -lambda * signed_pow(y[0], q - 1.0),
        ]
    };
    let mut zero_count = 0usize;
    let mut last_sign = 0.0f64;
    let end = integrate(rhs, 0.0, length, [0.0, 1.0], SHOOTING_TOL, |x, y| {
        let s = if y[0] > 0.0 {
            1.0
        } else if y[0] < 0.0 {
            -1.0
        } else {
            0.0
        };
        if s != 0.0 {
            if last_sign != 0.0 && s != last_sign && x < length {
                zero_count += 1;
            }
            if x < length {
                last_sign = s;
            }
        }
    })?;
    // A sign flip inside the final step still places the zero inside (0, L).
    if end[0] != 0.0 && last_sign != 0.0 && end[0].signum() != last_sign {
        zero_count += 1;
    }
    Ok(ShootingResult {
        zero_count,
        end_value: end[0],
    })
}

#[inline]
fn signed_pow(x: f64, r: f64) -> f64 {
    if r == 1.0 {
        x
    } else if x == 0.0 {
        0.0
    } else {
        x.signum() * x.abs().powf(r)
    }
}

/// `λ_k` from the shooting oracle alone: bisection on the predicate
/// "`u` has at least `k` zeros in `(0, L)`", which switches on at `λ_k`.
pub fn shooting_eigenvalue(k: usize, q: f64, length: f64) -> Result<f64> {
    check_mode(k)?;
    check_exponent(q)?;
    check_length(length)?;
    let has_k_zeros =
        |lambda: f64| -> Result<bool> { Ok(shooting_oracle(q, lambda, length)?.zero_count >= k) };
    let mut lo = 0.0;
    let mut hi = 1.0 / length.powf(q);
    while !has_k_zeros(hi)? {
        lo = hi;
        hi *= 2.0;
        if hi > 1e300 {
            return Err(Error::InvalidArgument("no eigenvalue bracket".into()));
        }
    }
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi || hi - lo <= 1e-15 * hi {
            break;
        }
        if has_k_zeros(mid)? {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    Ok(0.5 * (lo + hi))
}

/// Unit-amplitude generalized sine lobe on `[0, 1]`, vanishing at both ends.
pub fn lobe_profile(q: f64, t: f64) -> f64 {
    if t <= 0.0 || t >= 1.0 {
        return 0.0;
    }
    let s = t.min(1.0 - t);
    let target = 2.0 * s;
    if target >= 1.0 {
        return 1.0;
    }
    let (a, b) = (1.0 / q, 1.0 - 1.0 / q);
    // u^q = I^{-1}_{a,b}(2s); polish with Newton on the regularized beta.
    let mut x = inv_beta_reg(a, b, target).clamp(0.0, 1.0);
    let norm = beta(a, b);
    for _ in 0..4 {
        if x <= 0.0 || x >= 1.0 {
            break;
        }
        let f = beta_reg(a, b, x) - target;
        let df = x.powf(a - 1.0) * (1.0 - x).powf(b - 1.0) / norm;
        let next = x - f / df;
        if !next.is_finite() || next <= 0.0 || next >= 1.0 {
            break;
        }
        x = next;
    }
    x.powf(1.0 / q)
}

/// Eigenfunction of mode `k` interpolated on `mesh`, first lobe positive,
/// scaled so that the discrete `∫|u|^q = 1`.
pub fn reference_eigenfunction(k: usize, q: f64, mesh: &Arc<Mesh1D>) -> Result<NodalFunction> {
    check_mode(k)?;
    check_exponent(q)?;
    let (a, length) = (mesh.a(), mesh.length());
    let mut u = NodalFunction::interpolate(mesh, |x| {
        let y = (x - a) / length * k as f64;
        let lobe = (y.floor() as usize).min(k - 1);
        let sign = if lobe.is_multiple_of(2) { 1.0 } else { -1.0 };
        sign * lobe_profile(q, y - lobe as f64)
    });
    let mass = mass_q_unchecked(&u, q);
    if mass <= 0.0 {
        return Err(Error::InfeasibleNodalPattern {
            k,
            needed: 2 * k,
            available: mesh.n_elements(),
        });
    }
    let scale = mass.powf(-1.0 / q);
    u.coeffs_mut().iter_mut().for_each(|c| *c *= scale);
    if let Some(&first) = u.coeffs().iter().find(|c| c.abs() > 0.0) {
        if first < 0.0 {
            u = u.scaled(-1.0);
        }
    }
    Ok(u)
}

#[derive(Debug, Clone)]
pub struct ReferenceEigenpair {
    pub k: usize,
    pub q: f64,
    pub lambda: f64,
    pub eigenfunction: NodalFunction,
}

pub fn reference_eigenpair(k: usize, q: f64, mesh: &Arc<Mesh1D>) -> Result<ReferenceEigenpair> {
    Ok(ReferenceEigenpair {
        k,
        q,
        lambda: qlap_eigenvalue(k, q, mesh.length())?,
        eigenfunction: reference_eigenfunction(k, q, mesh)?,
    })
}

/// Largest `k` with `λ_k(q) < lambda` (0 when `lambda ≤ λ_1`).
pub fn modes_below(lambda: f64, q: f64, length: f64) -> Result<usize> {
    let first = qlap_eigenvalue(1, q, length)?;
    if lambda <= first {
        return Ok(0);
    }
    // λ_k = λ_1 k^q
    let k = (lambda / first).powf(1.0 / q).floor() as usize;
    let mut k = k.max(1);
    while qlap_eigenvalue(k + 1, q, length)? < lambda {
        k += 1;
    }
    while k > 0 && qlap_eigenvalue(k, q, length)? >= lambda {
        k -= 1;
    }
    Ok(k)
}

/// `schema_version` row, header and `q,k,lambda` rows for modes `1..=k_max`.
pub fn spectrum_csv(q: f64, k_max: usize, length: f64) -> Result<String> {
    let mut out = format!("schema_version,{SCHEMA_VERSION}\nq,k,lambda\n");
    for k in 1..=k_max {
        let lambda = qlap_eigenvalue(k, q, length)?;
        out.push_str(&format!("{q},{k},{}\n", format_f64(lambda)));
    }
    Ok(out)
}

/// Parsed golden rows `(q, k, lambda)`.
pub fn golden_spectrum() -> Vec<(f64, usize, f64)> {
    GOLDEN_SPECTRUM_CSV
        .lines()
        .skip(2)
        .filter(|l| !l.trim().is_empty())
        .map(|l| {
            let mut it = l.split(',');
            let q = it.next().and_then(|s| s.parse().ok()).expect("golden q");
            let k = it.next().and_then(|s| s.parse().ok()).expect("golden k");
            let lambda = it
                .next()
                .and_then(|s| s.parse().ok())
                .expect("golden lambda");
            (q, k, lambda)
        })
        .collect()
}

/// Full golden-file contents regenerated from the closed form.
pub fn golden_file_contents() -> String {
    let mut out = format!("schema_version,{SCHEMA_VERSION}\nq,k,lambda\n");
    for &q in &GOLDEN_EXPONENTS {
        for k in 1..=GOLDEN_MAX_MODE {
            let lambda = qlap_eigenvalue(k, q, 1.0).expect("valid golden parameters");
            out.push_str(&format!("{q},{k},{}\n", format_f64(lambda)));
        }
    }
    out
}
