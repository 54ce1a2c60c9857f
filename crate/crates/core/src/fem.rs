//! One-dimensional P1 finite elements with homogeneous Dirichlet conditions.
//!
//! Functions are stored by their interior nodal values; the two boundary
//! values are zero by construction. On each element the gradient is the
//! difference quotient of the endpoint values, so every gradient energy
//! `∫|u'|^s` is evaluated exactly. Only the `|u|^q` terms need quadrature.

use std::f64::consts::PI;
use std::ops::{Add, Mul, Sub};
use std::sync::Arc;

use crate::error::{check_exponent, Error, Result};

pub const DEFAULT_QUADRATURE_ORDER: usize = 8;

/// Clamp for `|u'|` inside the weight `|u'|^{s-2}` of the residual assembly.
pub const GRADIENT_REGULARIZATION: f64 = 1e-12;

/// Gauss–Legendre rule on the reference element `[0, 1]`.
#[derive(Debug, Clone, PartialEq)]
pub struct Quadrature {
    points: Vec<f64>,
    weights: Vec<f64>,
}

impl Quadrature {
    pub fn gauss_legendre(order: usize) -> Result<Self> {
        if order == 0 || order > 64 {
            return Err(Error::InvalidArgument(format!(
                "quadrature order {order} outside 1..=64"
            )));
        }
        let n = order;
        let mut points = vec![0.0; n];
        let mut weights = vec![0.0; n];
        for i in 0..n.div_ceil(2) {
            // Tricomi initial guess, then Newton on P_n.
            let mut x = (PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
            let mut dp = 1.0;
            for _ in 0..100 {
                let (p, d) = legendre(n, x);
                dp = d;
                let dx = p / d;
                x -= dx;
                if dx.abs() < 1e-16 {
                    break;
                }
            }
            let (_, d) = legendre(n, x);
            if d.is_finite() {
                dp = d;
            }
            let w = 2.0 / ((1.0 - x * x) * dp * dp);
            points[i] = 0.5 * (1.0 - x);
            points[n - 1 - i] = 0.5 * (1.0 + x);
            weights[i] = 0.5 * w;
            weights[n - 1 - i] = 0.5 * w;
        }
        Ok(Self { points, weights })
    }

    pub fn order(&self) -> usize {
        self.points.len()
    }

    /// Points in `[0, 1]`.
    pub fn points(&self) -> &[f64] {
        &self.points
    }

    /// Weights summing to one.
    pub fn weights(&self) -> &[f64] {
        &self.weights
    }
}

fn legendre(n: usize, x: f64) -> (f64, f64) {
    let mut p0 = 1.0;
    let mut p1 = x;
    for k in 2..=n {
        let k = k as f64;
        let p2 = ((2.0 * k - 1.0) * x * p1 - (k - 1.0) * p0) / k;
        p0 = p1;
        p1 = p2;
    }
    let nf = n as f64;
    let d = nf * (x * p1 - p0) / (x * x - 1.0);
    (p1, d)
}

/// Mesh of the interval `(a, b)`.
#[derive(Debug, Clone, PartialEq)]
pub struct Mesh1D {
    nodes: Vec<f64>,
    quadrature: Quadrature,
}

impl Mesh1D {
    pub fn uniform(a: f64, b: f64, n_elements: usize) -> Result<Self> {
        if n_elements < 2 {
            return Err(Error::InvalidMesh(format!(
                "need at least 2 elements, got {n_elements}"
            )));
        }
        let h = (b - a) / n_elements as f64;
        let mut nodes: Vec<f64> = (0..=n_elements).map(|i| a + h * i as f64).collect();
        nodes[n_elements] = b;
        Self::from_nodes(nodes)
    }

    pub fn from_nodes(nodes: Vec<f64>) -> Result<Self> {
        if nodes.len() < 3 {
            return Err(Error::InvalidMesh(format!(
                "need at least 3 nodes, got {}",
                nodes.len()
            )));
        }
        if nodes.iter().any(|x| !x.is_finite()) {
            return Err(Error::InvalidMesh("non-finite node coordinate".into()));
        }
        if nodes.windows(2).any(|w| w[1] <= w[0]) {
            return Err(Error::InvalidMesh(
                "node coordinates must be strictly increasing".into(),
            ));
        }
        Ok(Self {
            nodes,
            quadrature: Quadrature::gauss_legendre(DEFAULT_QUADRATURE_ORDER)?,
        })
    }

    pub fn with_quadrature_order(mut self, order: usize) -> Result<Self> {
        self.quadrature = Quadrature::gauss_legendre(order)?;
        Ok(self)
    }

    pub fn a(&self) -> f64 {
        self.nodes[0]
    }

    pub fn b(&self) -> f64 {
        self.nodes[self.nodes.len() - 1]
    }

    pub fn length(&self) -> f64 {
        self.b() - self.a()
    }

    pub fn n_elements(&self) -> usize {
        self.nodes.len() - 1
    }

    pub fn n_interior(&self) -> usize {
        self.nodes.len() - 2
    }

    pub fn nodes(&self) -> &[f64] {
        &self.nodes
    }

    pub fn element_length(&self, e: usize) -> f64 {
        self.nodes[e + 1] - self.nodes[e]
    }

    pub fn max_element_length(&self) -> f64 {
        (0..self.n_elements())
            .map(|e| self.element_length(e))
            .fold(0.0, f64::max)
    }

    pub fn quadrature(&self) -> &Quadrature {
        &self.quadrature
    }

    /// Physical quadrature points and weights on element `e`.
    pub fn element_rule(&self, e: usize) -> impl Iterator<Item = (f64, f64)> + '_ {
        let x0 = self.nodes[e];
        let h = self.element_length(e);
        self.quadrature
            .points
            .iter()
            .zip(&self.quadrature.weights)
            .map(move |(t, w)| (x0 + h * t, h * w))
    }
}

/// Dirichlet P1 function given by its interior nodal values.
#[derive(Debug, Clone, PartialEq)]
pub struct NodalFunction {
    mesh: Arc<Mesh1D>,
    coeffs: Vec<f64>,
}

impl NodalFunction {
    pub fn zeros(mesh: &Arc<Mesh1D>) -> Self {
        Self {
            mesh: Arc::clone(mesh),
            coeffs: vec![0.0; mesh.n_interior()],
        }
    }

    pub fn from_coeffs(mesh: &Arc<Mesh1D>, coeffs: Vec<f64>) -> Result<Self> {
        if coeffs.len() != mesh.n_interior() {
            return Err(Error::InvalidArgument(format!(
                "expected {} interior coefficients, got {}",
                mesh.n_interior(),
                coeffs.len()
            )));
        }
        Ok(Self {
            mesh: Arc::clone(mesh),
            coeffs,
        })
    }

    /// Nodal interpolant of `f` (boundary values are dropped).
    pub fn interpolate(mesh: &Arc<Mesh1D>, f: impl Fn(f64) -> f64) -> Self {
        let nodes = mesh.nodes();
        let coeffs = nodes[1..nodes.len() - 1].iter().map(|&x| f(x)).collect();
        Self {
            mesh: Arc::clone(mesh),
            coeffs,
        }
    }

    pub fn mesh(&self) -> &Arc<Mesh1D> {
        &self.mesh
    }

    pub fn coeffs(&self) -> &[f64] {
        &self.coeffs
    }

    pub fn coeffs_mut(&mut self) -> &mut [f64] {
        &mut self.coeffs
    }

    pub fn into_coeffs(self) -> Vec<f64> {
        self.coeffs
    }

    /// Value at global node `i` (0 and `n_elements` are the boundary).
    #[inline]
    pub fn node_value(&self, i: usize) -> f64 {
        if i == 0 || i > self.coeffs.len() {
            0.0
        } else {
            self.coeffs[i - 1]
        }
    }

    /// All nodal values including the two zero boundary values.
    pub fn node_values(&self) -> Vec<f64> {
        let mut v = Vec::with_capacity(self.coeffs.len() + 2);
        v.push(0.0);
        v.extend_from_slice(&self.coeffs);
        v.push(0.0);
        v
    }

    /// Constant gradient on element `e`.
    #[inline]
    pub fn slope(&self, e: usize) -> f64 {
        (self.node_value(e + 1) - self.node_value(e)) / self.mesh.element_length(e)
    }

    pub fn eval(&self, x: f64) -> f64 {
        let nodes = self.mesh.nodes();
        if x <= nodes[0] || x >= nodes[nodes.len() - 1] {
            return 0.0;
        }
        let e = nodes.partition_point(|&n| n <= x) - 1;
        let t = (x - nodes[e]) / self.mesh.element_length(e);
        self.node_value(e) * (1.0 - t) + self.node_value(e + 1) * t
    }

    pub fn scaled(&self, t: f64) -> Self {
        Self {
            mesh: Arc::clone(&self.mesh),
            coeffs: self.coeffs.iter().map(|c| t * c).collect(),
        }
    }

    pub fn max_abs(&self) -> f64 {
        self.coeffs.iter().fold(0.0, |m, c| m.max(c.abs()))
    }

    pub fn is_zero(&self) -> bool {
        self.coeffs.iter().all(|&c| c == 0.0)
    }

    /// `‖u‖_{1,s} = (∫|u'|^s)^{1/s}`.
    pub fn norm_1s(&self, s: f64) -> Result<f64> {
        Ok(grad_energy(self, s)?.powf(1.0 / s))
    }

    /// `self + alpha * dir`, coefficientwise.
    pub fn axpy(&self, alpha: f64, dir: &[f64]) -> Self {
        Self {
            mesh: Arc::clone(&self.mesh),
            coeffs: self
                .coeffs
                .iter()
                .zip(dir)
                .map(|(c, d)| c + alpha * d)
                .collect(),
        }
    }
}

impl Add for &NodalFunction {
    type Output = NodalFunction;
    fn add(self, rhs: &NodalFunction) -> NodalFunction {
        self.axpy(1.0, &rhs.coeffs)
    }
}

impl Sub for &NodalFunction {
    type Output = NodalFunction;
    fn sub(self, rhs: &NodalFunction) -> NodalFunction {
        self.axpy(-1.0, &rhs.coeffs)
    }
}

impl Mul<&NodalFunction> for f64 {
    type Output = NodalFunction;
    fn mul(self, rhs: &NodalFunction) -> NodalFunction {
        rhs.scaled(self)
    }
}

/// Linear functional on the interior-node space.
#[derive(Debug, Clone, PartialEq)]
pub struct DualVector(pub Vec<f64>);

impl DualVector {
    pub fn zeros(n: usize) -> Self {
        Self(vec![0.0; n])
    }

    pub fn entries(&self) -> &[f64] {
        &self.0
    }

    pub fn pair(&self, v: &NodalFunction) -> f64 {
        dot(&self.0, v.coeffs())
    }

    /// Euclidean norm of the nodal entries.
    pub fn norm(&self) -> f64 {
        dot(&self.0, &self.0).sqrt()
    }

    pub fn scaled(&self, t: f64) -> Self {
        Self(self.0.iter().map(|x| t * x).collect())
    }

    pub fn axpy(&self, alpha: f64, other: &DualVector) -> Self {
        Self(
            self.0
                .iter()
                .zip(&other.0)
                .map(|(a, b)| a + alpha * b)
                .collect(),
        )
    }
}

impl Add for &DualVector {
    type Output = DualVector;
    fn add(self, rhs: &DualVector) -> DualVector {
        self.axpy(1.0, rhs)
    }
}

impl Sub for &DualVector {
    type Output = DualVector;
    fn sub(self, rhs: &DualVector) -> DualVector {
        self.axpy(-1.0, rhs)
    }
}

#[inline]
pub(crate) fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// `|x|^s` with exact fast paths for the common integer exponents.
#[inline]
pub(crate) fn abs_pow(x: f64, s: f64) -> f64 {
    let a = x.abs();
    if s == 2.0 {
        a * a
    } else if s == 3.0 {
        a * a * a
    } else if s == 4.0 {
        let b = a * a;
        b * b
    } else if a == 0.0 {
        0.0
    } else {
        a.powf(s)
    }
}

/// `|x|^{s-2} x`, with the weight clamped below by `eps`.
#[inline]
pub(crate) fn flux(x: f64, s: f64, eps: f64) -> f64 {
    if s == 2.0 {
        return x;
    }
    let a = x.abs().max(eps);
    if s == 3.0 {
        a * x
    } else if s == 4.0 {
        a * a * x
    } else {
        a.powf(s - 2.0) * x
    }
}

/// `∫|u'|^s` (no `1/s` factor). Exact for P1 functions.
pub fn grad_energy(u: &NodalFunction, s: f64) -> Result<f64> {
    check_exponent(s)?;
    Ok(grad_energy_unchecked(u, s))
}

pub(crate) fn grad_energy_unchecked(u: &NodalFunction, s: f64) -> f64 {
    let mesh = u.mesh();
    (0..mesh.n_elements())
        .map(|e| mesh.element_length(e) * abs_pow(u.slope(e), s))
        .sum()
}

/// `∫|u|^q`, by Gauss–Legendre quadrature on each element.
pub fn mass_q(u: &NodalFunction, q: f64) -> Result<f64> {
    check_exponent(q)?;
    Ok(mass_q_unchecked(u, q))
}

pub(crate) fn mass_q_unchecked(u: &NodalFunction, q: f64) -> f64 {
    (0..u.mesh().n_elements())
        .map(|e| element_mass_q(u, q, e))
        .sum()
}

/// `∫|u|^q` over element `e`.
pub(crate) fn element_mass_q(u: &NodalFunction, q: f64, e: usize) -> f64 {
    let mesh = u.mesh();
    let (ul, ur) = (u.node_value(e), u.node_value(e + 1));
    if ul == 0.0 && ur == 0.0 {
        return 0.0;
    }
    let quad = mesh.quadrature();
    let local: f64 = quad
        .points()
        .iter()
        .zip(quad.weights())
        .map(|(t, w)| w * abs_pow(ul + (ur - ul) * t, q))
        .sum();
    mesh.element_length(e) * local
}

/// The functional `v ↦ ∫|u'|^{s-2} u' v'`.
pub fn grad_residual(u: &NodalFunction, s: f64) -> Result<DualVector> {
    check_exponent(s)?;
    Ok(grad_residual_unchecked(u, s))
}

pub(crate) fn grad_residual_unchecked(u: &NodalFunction, s: f64) -> DualVector {
    let mesh = u.mesh();
    let fluxes: Vec<f64> = (0..mesh.n_elements())
        .map(|e| flux(u.slope(e), s, GRADIENT_REGULARIZATION))
        .collect();
    DualVector(fluxes.windows(2).map(|w| w[0] - w[1]).collect())
}

/// The functional `v ↦ ∫|u|^{q-2} u v`.
pub fn mass_residual(u: &NodalFunction, q: f64) -> Result<DualVector> {
    check_exponent(q)?;
    Ok(mass_residual_unchecked(u, q))
}

pub(crate) fn mass_residual_unchecked(u: &NodalFunction, q: f64) -> DualVector {
    let mesh = u.mesh();
    let quad = mesh.quadrature();
    let mut out = vec![0.0; mesh.n_interior()];
    for e in 0..mesh.n_elements() {
        let (ul, ur) = (u.node_value(e), u.node_value(e + 1));
        if ul == 0.0 && ur == 0.0 {
            continue;
        }
        let h = mesh.element_length(e);
        let (mut left, mut right) = (0.0, 0.0);
        for (t, w) in quad.points().iter().zip(quad.weights()) {
            let f = w * flux(ul + (ur - ul) * t, q, 0.0);
            left += f * (1.0 - t);
            right += f * t;
        }
        if e > 0 {
            out[e - 1] += h * left;
        }
        if e < mesh.n_interior() {
            out[e] += h * right;
        }
    }
    DualVector(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn unit_mesh(n: usize) -> Arc<Mesh1D> {
        Arc::new(Mesh1D::uniform(0.0, 1.0, n).unwrap())
    }

    fn hat(mesh: &Arc<Mesh1D>) -> NodalFunction {
        NodalFunction::interpolate(mesh, |x| 1.0 - (2.0 * x - 1.0).abs())
    }

    #[test]
    fn gauss_rule_integrates_polynomials() {
        for order in 1..=12 {
            let rule = Quadrature::gauss_legendre(order).unwrap();
            assert!(rule.weights().iter().all(|&w| w > 0.0));
            assert!((rule.weights().iter().sum::<f64>() - 1.0).abs() < 1e-14);
            for deg in 0..2 * order {
                let approx: f64 = rule
                    .points()
                    .iter()
                    .zip(rule.weights())
                    .map(|(x, w)| w * x.powi(deg as i32))
                    .sum();
                let exact = 1.0 / (deg as f64 + 1.0);
                assert!((approx - exact).abs() < 1e-13, "order {order} deg {deg}");
            }
        }
    }

    #[test]
    fn element_weights_sum_to_length() {
        let mesh = Mesh1D::from_nodes(vec![0.0, 0.1, 0.35, 1.0]).unwrap();
        for e in 0..mesh.n_elements() {
            let total: f64 = mesh.element_rule(e).map(|(_, w)| w).sum();
            assert!((total - mesh.element_length(e)).abs() < 1e-15);
        }
    }

    #[test]
    fn mesh_validation() {
        assert!(Mesh1D::uniform(0.0, 1.0, 1).is_err());
        assert!(Mesh1D::from_nodes(vec![0.0, 0.5, 0.5, 1.0]).is_err());
        let m = Mesh1D::uniform(-1.0, 2.0, 6).unwrap();
        assert_eq!(m.n_interior(), 5);
        assert_eq!(m.a(), -1.0);
        assert_eq!(m.b(), 2.0);
    }

    #[test]
    fn hat_function_closed_forms() {
        let mesh = unit_mesh(2);
        let u = hat(&mesh);
        assert!((grad_energy(&u, 3.0).unwrap() - 8.0).abs() < 1e-14);
        assert!((grad_energy(&u, 2.0).unwrap() - 4.0).abs() < 1e-14);
        assert!((mass_q(&u, 2.0).unwrap() - 1.0 / 3.0).abs() < 1e-14);
    }

    #[test]
    fn exponent_validation() {
        let mesh = unit_mesh(4);
        let u = hat(&mesh);
        assert!(matches!(
            grad_energy(&u, 1.0),
            Err(Error::InvalidExponent(_))
        ));
        assert!(matches!(mass_q(&u, 0.5), Err(Error::InvalidExponent(_))));
        assert!(grad_residual(&u, f64::NAN).is_err());
        assert!(mass_residual(&u, 1.0).is_err());
    }

    #[test]
    fn residuals_of_zero_vanish() {
        let mesh = unit_mesh(8);
        let z = NodalFunction::zeros(&mesh);
        for s in [1.5, 2.0, 3.0] {
            assert!(grad_residual(&z, s).unwrap().0.iter().all(|&x| x == 0.0));
            assert!(mass_residual(&z, s).unwrap().0.iter().all(|&x| x == 0.0));
        }
    }

    #[test]
    fn eval_interpolates_linearly() {
        let mesh = unit_mesh(4);
        let u = hat(&mesh);
        assert!((u.eval(0.5) - 1.0).abs() < 1e-15);
        assert!((u.eval(0.375) - 0.75).abs() < 1e-15);
        assert_eq!(u.eval(0.0), 0.0);
        assert_eq!(u.eval(1.5), 0.0);
    }

    #[test]
    fn discrete_poincare_bound() {
        // P1 with exact mass is a Ritz method: the discrete first eigenvalue
        // is an upper bound of π², so no mesh-dependent slack is needed.
        let mesh = unit_mesh(32);
        for j in 1..6 {
            let u = NodalFunction::interpolate(&mesh, |x| {
                (PI * x).sin() + 0.3 * (j as f64 * PI * x).sin() + 0.1 * x * (1.0 - x)
            });
            let m = mass_q(&u, 2.0).unwrap();
            let g = grad_energy(&u, 2.0).unwrap();
            assert!(m <= g / (PI * PI) * (1.0 + 1e-12));
        }
    }

    #[test]
    fn grad_energy_is_invariant_under_refinement() {
        let coarse = unit_mesh(4);
        let fine = unit_mesh(16);
        let u = NodalFunction::from_coeffs(&coarse, vec![0.3, -0.2, 0.7]).unwrap();
        let v = NodalFunction::interpolate(&fine, |x| u.eval(x));
        for s in [1.5, 2.0, 3.7] {
            let a = grad_energy(&u, s).unwrap();
            let b = grad_energy(&v, s).unwrap();
            assert!((a - b).abs() < 1e-13 * a);
        }
    }
}
