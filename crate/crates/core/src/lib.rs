//! Numerical laboratory for the forced nonlinear Schrödinger equation with a
//! potential on the half-line,
//!
//! ```text
//! i u_t = -u_xx + V(x) u + F(x, t, u),   u(0, t) = f(t),   u(x, 0) = φ(x),
//! ```
//!
//! solved through a boundary lift, the Duhamel integral equation and Picard
//! iteration on adaptive time windows. Around the solver sit the monitors
//! that check what the theory predicts: boundary-flux identities for mass,
//! energy and momentum, relative-bound and Gagliardo–Nirenberg inequalities,
//! continuous dependence on data and blow-up of the 𝓗₁ norm.
//!
//! The half-line is truncated to `[0, L]` with a homogeneous Dirichlet
//! condition at `x = L`.

pub mod cli;
pub mod error;
pub mod field;
pub mod hamiltonian;
pub mod identities;
pub mod inequalities;
pub mod jet;
pub mod lift;
pub mod nonlinearity;
pub mod potential;
pub mod quadrature;
pub mod solver;

pub use error::{Error, Result};
pub use field::{ComplexField, Grid};
pub use hamiltonian::Hamiltonian;
pub use identities::IdentityReport;
pub use lift::{BoundaryForce, LiftContext};
pub use nonlinearity::NonlinearitySpec;
pub use potential::PotentialSpec;
pub use solver::{Problem, SolverConfig, Status, Trajectory};

pub use num_complex::Complex64;
