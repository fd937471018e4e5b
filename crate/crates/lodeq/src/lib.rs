//! Symbolic-numeric toolkit for point equivalence of linear ordinary
//! differential equations.
//!
//! The crate represents monic linear ODEs of order `r >= 2` with smooth
//! coefficients of a single variable `t`, applies and verifies point
//! transformations `t~ = T(t)`, `x~ = X1(t) x + X0(t)` between them, reduces
//! equations to the rational, Laguerre-Forsyth and Arnold canonical forms,
//! classifies the dimension of their Lie symmetry algebra, and recovers
//! equations from fundamental solution systems via Wronskian determinants.
//!
//! Modules mirror those layers:
//!
//! * [`expr`] - immutable symbolic expressions over `t`, with exact rational
//!   constants and numeric-backed leaves for functions known only as solver
//!   output;
//! * [`parse`] - the textual grammar for expressions and the line-oriented
//!   document formats for equations, transformations and solution systems;
//! * [`numeric`] - high-order adaptive integration, quadrature and the
//!   construction of dense interpolants;
//! * [`ode`] - the `LinearOde` value, residuals and canonical-form predicates;
//! * [`transform`] - point transformations acting on equations and solutions;
//! * [`gauge`] - constructive reductions to each canonical form;
//! * [`symmetry`] - prolongation, Lie brackets, the sl(2) realization and the
//!   symmetry-dimension classifier;
//! * [`groupoid`] - admissible-transformation triples and the membership
//!   predicates of the equivalence groups of each class;
//! * [`reparam`] - fundamental systems, Wronskians and the gauge action on
//!   them;
//! * [`cli`] - the command-line entry point.

pub mod cli;
pub mod error;
pub mod expr;
pub mod gauge;
pub mod groupoid;
pub mod interval;
pub mod numeric;
pub mod ode;
pub mod parse;
pub mod reparam;
pub mod symmetry;
pub mod taylor;
pub mod transform;

pub use error::{Error, ErrorCode, Result};
pub use expr::{Expression, NumericLeaf};
pub use interval::Interval;
pub use ode::{ClassTag, LinearOde};
pub use transform::PointTransformation;
