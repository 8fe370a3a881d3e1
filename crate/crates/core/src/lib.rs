//! Simulation and numerical verification of multivalued McKean-Vlasov SDEs
//!
//! ```text
//! dX_t ∈ -A(X_t) dt + b(X_t, L(X_t)) dt + σ(X_t, L(X_t)) dW_t
//! ```
//!
//! `A` is a maximal monotone operator handled exclusively through its
//! resolvent `J_λ = (I + λA)^{-1}`. The law `L(X_t)` is approximated by the
//! empirical measure of an interacting particle ensemble, or kept external
//! and iterated to a fixed point ([`solver::picard`]).
//!
//! Module map:
//!
//! - [`operators`]: resolvents, Yosida approximations and a catalog of
//!   concrete operators, plus discrete checks on `(X, K)` path pairs.
//! - [`measures`]: empirical measures, measure flows and computable upper
//!   bounds for the dual metric on `M_2`.
//! - [`noise`]: counter-based Gaussian noise shared across solves.
//! - [`solver`]: the resolvent-splitting particle scheme, frozen-flow solves,
//!   Picard iteration and contraction measurement.
//! - [`calculus`]: test functions with Lions derivatives, the mean-field
//!   generator and the Itô formula residual.
//! - [`stability`]: Lyapunov hypothesis checks and empirical stability
//!   estimates.
//! - [`scenario`] and [`cli`]: presets, configuration and the batch front end.

pub mod calculus;
pub mod cli;
pub mod measures;
pub mod noise;
pub mod operators;
pub mod output;
pub mod scenario;
pub mod solver;
pub mod stability;
pub mod stats;

pub use calculus::TestFunction;
pub use measures::{EmpiricalMeasure, MeasureFlow};
pub use operators::{CatalogOperator, MonotoneOperator, OperatorKind};
pub use solver::{Coefficients, SchemeConfig, TrajectoryRecord};
