//! Numerical solver and wellposedness laboratory for generalized neural field
//! equations with space- and time-dependent delay.
//!
//! The crate is organised in three layers:
//!
//! * [`volterra`] grows a solution to `y = Ψy` window by window with Picard
//!   iteration, choosing each window length from a contraction estimate and
//!   classifying the run as global, maximally extended (blow-up) or stalled.
//! * [`field`] assembles the concrete neural field operator
//!   `u(t,x) = φ(a,x) + ∫ₐᵗ ∫_Ω W(t,s,x,y) f(u(s − τ(s,x,y), y)) dy ds`
//!   together with the kernel, firing-rate, delay and prehistory zoo.
//! * [`lab`] runs continuous-dependence sweeps, blow-up comparisons and
//!   closed-form scenario checks on top of the two layers above.

// `!(x > 0.0)` rejects NaN along with the out-of-range values
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod field;
pub mod lab;
pub mod volterra;

pub use field::{FieldModel, FieldOperator, ModelError};
pub use volterra::{
    extend_solution, OutcomeKind, SolutionOutcome, SolverConfig, SolverError, VolterraOperator,
};
