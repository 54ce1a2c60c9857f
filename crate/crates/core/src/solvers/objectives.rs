use crate::fem::{
    grad_energy_unchecked, grad_residual_unchecked, mass_q_unchecked, mass_residual_unchecked,
    DualVector, NodalFunction,
};
use crate::functionals::{transformed_factor, PQParams};

use super::engine::{slope_floor, weight, Objective};

fn element_weights(u: &NodalFunction, mut f: impl FnMut(f64) -> f64) -> Vec<f64> {
    let floor = slope_floor(u);
    (0..u.mesh().n_elements())
        .map(|e| f(u.slope(e).abs().max(floor)))
        .collect()
}

/// `I(u) = 1/p∫|u'|^p + 1/q∫|u'|^q`.
pub(crate) struct FixedMass {
    pub pq: PQParams,
}

impl Objective for FixedMass {
    fn value(&self, u: &NodalFunction) -> f64 {
        let (p, q) = (self.pq.p(), self.pq.q());
        grad_energy_unchecked(u, p) / p + grad_energy_unchecked(u, q) / q
    }

    fn gradient(&self, u: &NodalFunction) -> DualVector {
        self.operator(u)
    }

    fn weights(&self, u: &NodalFunction) -> Vec<f64> {
        let (p, q) = (self.pq.p(), self.pq.q());
        element_weights(u, |s| weight(s, p, 0.0) + weight(s, q, 0.0))
    }

    fn operator(&self, u: &NodalFunction) -> DualVector {
        let ap = grad_residual_unchecked(u, self.pq.p());
        let aq = grad_residual_unchecked(u, self.pq.q());
        &ap + &aq
    }

    fn q(&self) -> f64 {
        self.pq.q()
    }
}

/// Variational potential of the transformed operator
/// `T(w) = G^γ A_p(w) + A_q(w)`, `G = ∫|w'|^q`, `γ = 2(q−p)/q`:
///
/// `Φ(w) = ∫|w'|^p + p/(2p−q)·G^{(2p−q)/q}` (with `p/q·ln G` when `2p = q`),
/// whose gradient is `p·G^{κ−1}·T(w)`, `κ = (2p−q)/q`. Constrained critical
/// points therefore solve `T(w) = λ̃ |w|^{q−2}w` exactly.
pub(crate) struct Transformed {
    pub pq: PQParams,
}

impl Transformed {
    fn kappa(&self) -> f64 {
        (2.0 * self.pq.p() - self.pq.q()) / self.pq.q()
    }
}

impl Objective for Transformed {
    fn value(&self, w: &NodalFunction) -> f64 {
        let (p, q) = (self.pq.p(), self.pq.q());
        let gp = grad_energy_unchecked(w, p);
        let gq = grad_energy_unchecked(w, q);
        let kappa = self.kappa();
        if kappa.abs() < 1e-14 {
            gp + p / q * gq.ln()
        } else {
            gp + p / (2.0 * p - q) * gq.powf(kappa)
        }
    }

    fn gradient(&self, w: &NodalFunction) -> DualVector {
        let gq = grad_energy_unchecked(w, self.pq.q());
        self.operator(w)
            .scaled(self.pq.p() * gq.powf(self.kappa() - 1.0))
    }

    fn weights(&self, w: &NodalFunction) -> Vec<f64> {
        let (p, q) = (self.pq.p(), self.pq.q());
        let gq = grad_energy_unchecked(w, q);
        let factor = transformed_factor(gq, self.pq);
        let scale = p * gq.powf(self.kappa() - 1.0);
        element_weights(w, |s| {
            scale * (factor * weight(s, p, 0.0) + weight(s, q, 0.0))
        })
    }

    fn operator(&self, w: &NodalFunction) -> DualVector {
        crate::functionals::apply_t_unchecked(w, self.pq)
    }

    fn q(&self) -> f64 {
        self.pq.q()
    }
}

/// Nehari-reduced energy on directions: for `v` with `D = λ∫|v|^q − ∫|v'|^q > 0`
/// the ray `t ↦ E_λ(tv)` has its critical point at `t^{q−p} = ∫|v'|^p / D`,
/// where `E_λ = (1/p − 1/q)∫|v'|^p t^p`. Minimizing that value over
/// directions is equivalent, in both regimes, to minimizing
/// `ψ(v) = q ln∫|v'|^p − p ln D`.
pub(crate) struct NehariReduced {
    pub pq: PQParams,
    pub lambda: f64,
}

impl NehariReduced {
    fn parts(&self, v: &NodalFunction) -> (f64, f64) {
        let gp = grad_energy_unchecked(v, self.pq.p());
        let d =
            self.lambda * mass_q_unchecked(v, self.pq.q()) - grad_energy_unchecked(v, self.pq.q());
        (gp, d)
    }
}

impl Objective for NehariReduced {
    fn value(&self, v: &NodalFunction) -> f64 {
        let (gp, d) = self.parts(v);
        if !(d > 0.0 && gp > 0.0) {
            return f64::INFINITY;
        }
        self.pq.q() * gp.ln() - self.pq.p() * d.ln()
    }

    fn gradient(&self, v: &NodalFunction) -> DualVector {
        let (p, q) = (self.pq.p(), self.pq.q());
        let (gp, d) = self.parts(v);
        let ap = grad_residual_unchecked(v, p);
        let aq = grad_residual_unchecked(v, q);
        let m = mass_residual_unchecked(v, q);
        let inner = aq.axpy(-self.lambda, &m).scaled(1.0 / d);
        inner.axpy(1.0 / gp, &ap).scaled(p * q)
    }

    fn weights(&self, v: &NodalFunction) -> Vec<f64> {
        let (p, q) = (self.pq.p(), self.pq.q());
        let (gp, d) = self.parts(v);
        element_weights(v, |s| {
            p * q * (weight(s, p, 0.0) / gp + weight(s, q, 0.0) / d)
        })
    }

    fn operator(&self, v: &NodalFunction) -> DualVector {
        let (p, q) = (self.pq.p(), self.pq.q());
        let (gp, d) = self.parts(v);
        let ap = grad_residual_unchecked(v, p);
        let aq = grad_residual_unchecked(v, q);
        ap.axpy(gp / d, &aq)
    }

    fn q(&self) -> f64 {
        self.pq.q()
    }
}

/// `E_λ` itself, used to follow decay towards zero when no ray reaches the
/// Nehari set.
pub(crate) struct Energy {
    pub pq: PQParams,
    pub lambda: f64,
}

impl Energy {
    pub fn value(&self, u: &NodalFunction) -> f64 {
        crate::functionals::energy_e(u, self.lambda, self.pq)
    }

    pub fn gradient(&self, u: &NodalFunction) -> DualVector {
        let (p, q) = (self.pq.p(), self.pq.q());
        let ap = grad_residual_unchecked(u, p);
        let aq = grad_residual_unchecked(u, q);
        let m = mass_residual_unchecked(u, q);
        (&ap + &aq).axpy(-self.lambda, &m)
    }

    pub fn weights(&self, u: &NodalFunction) -> Vec<f64> {
        let (p, q) = (self.pq.p(), self.pq.q());
        element_weights(u, |s| weight(s, p, 0.0) + weight(s, q, 0.0))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fem::Mesh1D;
    use std::sync::Arc;

    fn sample(n: usize) -> NodalFunction {
        let mesh = Arc::new(Mesh1D::uniform(0.0, 1.0, n).unwrap());
        NodalFunction::interpolate(&mesh, |x| {
            (std::f64::consts::PI * x).sin() + 0.2 * (3.0 * std::f64::consts::PI * x).sin()
        })
    }

    fn check_gradient<O: Objective>(obj: &O, u: &NodalFunction) {
        let g = obj.gradient(u);
        for j in [1, u.coeffs().len() / 2, u.coeffs().len() - 2] {
            let h = 1e-6;
            let mut up = u.clone();
            up.coeffs_mut()[j] += h;
            let mut dn = u.clone();
            dn.coeffs_mut()[j] -= h;
            let fd = (obj.value(&up) - obj.value(&dn)) / (2.0 * h);
            assert!(
                (fd - g.0[j]).abs() < 1e-6 * g.0.iter().fold(0.0f64, |m, x| m.max(x.abs())),
                "coefficient {j}: fd {fd} vs {}",
                g.0[j]
            );
        }
    }

    #[test]
    fn gradients_match_finite_differences() {
        let u = sample(16);
        for (p, q) in [(3.0, 2.0), (1.5, 2.0), (1.5, 4.0), (2.0, 3.0)] {
            let pq = PQParams::new(p, q).unwrap();
            check_gradient(&FixedMass { pq }, &u);
            check_gradient(&NehariReduced { pq, lambda: 400.0 }, &u);
            if p < q {
                check_gradient(&Transformed { pq }, &u);
            }
        }
    }
}
