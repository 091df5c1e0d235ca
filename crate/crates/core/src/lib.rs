//! Exact calculus on finite time scales and the delta-nabla isoperimetric
//! calculus of variations.
//!
//! * [`timescale`]: jump operators, graininess, delta/nabla derivatives and
//!   integrals, and the `‖·‖₁,∞` norm.
//! * [`lagrangian`]: a small expression language for `L(t, u, v)` with
//!   symbolic partials.
//! * [`functional`]: product functionals and Euler–Lagrange residuals.
//! * [`solver`]: Newton solves for normal and abnormal extremals.
//! * [`oracle`]: slow finite-difference and KKT checks.
//! * [`identities`]: randomized checks of the time-scale calculus identities.
//! * [`sample`]: random expressions and problems for property tests.

pub mod error;
pub mod functional;
pub mod identities;
pub mod lagrangian;
pub mod oracle;
pub mod sample;
pub mod solver;
pub mod timescale;

pub use error::{Error, Result};
pub use functional::{DeltaNablaFunctional, ElForm, EvaluationBreakdown, ResidualReport};
pub use lagrangian::{Expr, Lagrangian};
pub use solver::{IsoperimetricProblem, SolveOptions, SolveResult};
pub use timescale::{GridFunction, KappaFunction, Shift, TimeScale};
