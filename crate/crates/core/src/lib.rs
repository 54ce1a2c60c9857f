//! Finite element solvers for the one-dimensional Dirichlet eigenvalue
//! problem of the (p,q)-Laplacian,
//!
//! ```text
//! −(|u'|^{p−2}u')' − (|u'|^{q−2}u')' = λ|u|^{q−2}u  on (a, b),   u(a) = u(b) = 0,
//! ```
//!
//! together with the tools to follow its eigenvalue branches in the mass
//! `ρ = ∫|u|^q` and locate where they bifurcate from the spectrum of the
//! pure q-Laplacian.

pub mod continuation;
pub mod error;
pub mod fem;
pub mod functionals;
mod ode;
pub mod reference;
pub mod solvers;
pub mod table;
pub mod verify;

pub use continuation::{Branch, BranchPoint, LimitEstimate};
pub use error::{Error, Result};
pub use fem::{DualVector, Mesh1D, NodalFunction, Quadrature};
pub use functionals::{PQParams, Regime};
pub use solvers::{EigenPair, FirstOutcome, Formulation, SolverConfig};
