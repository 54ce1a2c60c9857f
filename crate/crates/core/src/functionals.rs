//! Energy functionals of the (p,q)-Laplacian eigenvalue problem
//! `−Δ_p u − Δ_q u = λ|u|^{q−2}u` and the transformed operator used for
//! bifurcation from infinity.

use crate::error::{check_exponent, Error, Result};
use crate::fem::{
    grad_energy_unchecked, grad_residual_unchecked, mass_q_unchecked, DualVector, NodalFunction,
};

/// Relative floor (per unit interval length) below which `∫|u|^q` counts as zero.
pub const MASS_FLOOR: f64 = 1e-14;

/// Which exponent dominates; decides where the eigenvalue branches bifurcate.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Regime {
    /// `p > q`: branches leave `(λ_k^D(q), 0)`.
    FromZero,
    /// `p < q`: branches come in from `(λ_k^D(q), ∞)`.
    FromInfinity,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PQParams {
    p: f64,
    q: f64,
}

impl PQParams {
    pub fn new(p: f64, q: f64) -> Result<Self> {
        check_exponent(p)?;
        check_exponent(q)?;
        if p == q {
            return Err(Error::EqualExponents(p));
        }
        Ok(Self { p, q })
    }

    pub fn p(&self) -> f64 {
        self.p
    }

    pub fn q(&self) -> f64 {
        self.q
    }

    pub fn regime(&self) -> Regime {
        if self.p > self.q {
            Regime::FromZero
        } else {
            Regime::FromInfinity
        }
    }

    /// Exponent `s` of the norm `‖·‖_{1,s}` in which bifurcation is measured.
    pub fn bifurcation_norm_exponent(&self) -> f64 {
        self.p.max(self.q)
    }
}

/// The three integrals every functional is built from.
#[derive(Debug, Clone, Copy, PartialEq)]
pub(crate) struct Integrals {
    /// `∫|u'|^p`
    pub grad_p: f64,
    /// `∫|u'|^q`
    pub grad_q: f64,
    /// `∫|u|^q`
    pub mass: f64,
}

impl Integrals {
    pub fn of(u: &NodalFunction, pq: PQParams) -> Self {
        Self {
            grad_p: grad_energy_unchecked(u, pq.p),
            grad_q: grad_energy_unchecked(u, pq.q),
            mass: mass_q_unchecked(u, pq.q),
        }
    }
}

/// `E_λ(u) = 1/p∫|u'|^p + 1/q∫|u'|^q − λ/q∫|u|^q`.
pub fn energy_e(u: &NodalFunction, lambda: f64, pq: PQParams) -> f64 {
    let i = Integrals::of(u, pq);
    i.grad_p / pq.p + (i.grad_q - lambda * i.mass) / pq.q
}

/// `I(u) = 1/p∫|u'|^p + 1/q∫|u'|^q`, the fixed-mass objective.
pub fn energy_i(u: &NodalFunction, pq: PQParams) -> f64 {
    let i = Integrals::of(u, pq);
    i.grad_p / pq.p + i.grad_q / pq.q
}

/// `F(u) = q·I(u) / ∫|u|^q`.
pub fn rayleigh_f(u: &NodalFunction, pq: PQParams) -> Result<f64> {
    let i = Integrals::of(u, pq);
    let floor = MASS_FLOOR * u.mesh().length();
    if i.mass < floor {
        return Err(Error::ZeroFunction {
            mass: i.mass,
            floor,
        });
    }
    Ok((pq.q / pq.p * i.grad_p + i.grad_q) / i.mass)
}

/// `⟨E'_λ(u), u⟩ = ∫|u'|^p + ∫|u'|^q − λ∫|u|^q`; zero exactly on the Nehari set.
pub fn nehari_residual(u: &NodalFunction, lambda: f64, pq: PQParams) -> f64 {
    let i = Integrals::of(u, pq);
    i.grad_p + i.grad_q - lambda * i.mass
}

/// Scalar `t > 0` with `t·u` on the Nehari set:
/// `t = (∫|u'|^p / (λ∫|u|^q − ∫|u'|^q))^{1/(q−p)}`.
///
/// For `p < q` this is the maximum of `E_λ` along the ray through `u`; for
/// `p > q` the same formula gives the minimum along the ray.
pub fn nehari_scale(u: &NodalFunction, lambda: f64, pq: PQParams) -> Result<f64> {
    nehari_scale_from(&Integrals::of(u, pq), lambda, pq, u.mesh().length())
}

pub(crate) fn nehari_scale_from(
    i: &Integrals,
    lambda: f64,
    pq: PQParams,
    length: f64,
) -> Result<f64> {
    if i.mass < MASS_FLOOR * length || i.grad_p == 0.0 {
        return Err(Error::ZeroFunction {
            mass: i.mass,
            floor: MASS_FLOOR * length,
        });
    }
    let denominator = lambda * i.mass - i.grad_q;
    if denominator.is_nan() || denominator <= 0.0 {
        return Err(Error::NotProjectable { denominator });
    }
    Ok((i.grad_p / denominator).powf(1.0 / (pq.q - pq.p)))
}

pub fn nehari_project(u: &NodalFunction, lambda: f64, pq: PQParams) -> Result<NodalFunction> {
    Ok(u.scaled(nehari_scale(u, lambda, pq)?))
}

/// `T(w) = −‖w‖_{1,q}^{2(q−p)} Δ_p w − Δ_q w` as a functional on test functions.
pub fn apply_t(w: &NodalFunction, pq: PQParams) -> Result<DualVector> {
    if pq.regime() != Regime::FromInfinity {
        return Err(Error::WrongRegime("the transformed operator needs p < q"));
    }
    Ok(apply_t_unchecked(w, pq))
}

pub(crate) fn apply_t_unchecked(w: &NodalFunction, pq: PQParams) -> DualVector {
    let gq = grad_energy_unchecked(w, pq.q);
    let factor = transformed_factor(gq, pq);
    let ap = grad_residual_unchecked(w, pq.p);
    let aq = grad_residual_unchecked(w, pq.q);
    aq.axpy(factor, &ap)
}

/// `‖w‖_{1,q}^{2(q−p)}` from `∫|w'|^q`.
#[inline]
pub(crate) fn transformed_factor(grad_q: f64, pq: PQParams) -> f64 {
    if grad_q == 0.0 {
        0.0
    } else {
        grad_q.powf(2.0 * (pq.q - pq.p) / pq.q)
    }
}

/// `q/p ‖w‖_{1,q}^{2(q−p)} ∫|w'|^p + ∫|w'|^q`.
pub fn energy_f_w(w: &NodalFunction, pq: PQParams) -> Result<f64> {
    if pq.regime() != Regime::FromInfinity {
        return Err(Error::WrongRegime("the transformed functional needs p < q"));
    }
    let gp = grad_energy_unchecked(w, pq.p);
    let gq = grad_energy_unchecked(w, pq.q);
    Ok(pq.q / pq.p * transformed_factor(gq, pq) * gp + gq)
}

/// `(|x2|^{s−2}x2 − |x1|^{s−2}x1)·(x2 − x1)` for vectors, with `|0|^{s−2}·0 = 0`.
pub fn monotonicity_gap(x1: &[f64], x2: &[f64], s: f64) -> f64 {
    assert_eq!(x1.len(), x2.len(), "vectors must have equal dimension");
    let n1 = x1.iter().map(|x| x * x).sum::<f64>().sqrt();
    let n2 = x2.iter().map(|x| x * x).sum::<f64>().sqrt();
    let w1 = if n1 == 0.0 { 0.0 } else { n1.powf(s - 2.0) };
    let w2 = if n2 == 0.0 { 0.0 } else { n2.powf(s - 2.0) };
    x1.iter()
        .zip(x2)
        .map(|(a, b)| (w2 * b - w1 * a) * (b - a))
        .sum()
}
