//! Exact arithmetic on finitely supported integer distributions, plus the
//! learning machinery built on top of it: ground-truth oracles for sums of
//! independent integer random variables, kernel hypotheses with exact
//! evaluation, Scheffé-style hypothesis selection, the learners themselves,
//! and number-theoretic hard-instance families.
//!
//! The universal currency is [`IntDist`]: a dense pmf with an integer offset.
//! Everything downstream (oracles, hypotheses, diagnostics) reduces to exact
//! operations on that type.

pub mod asum;
pub mod dist;
pub mod eval;
pub mod hard;
pub mod kernel;
pub mod learn;
pub mod rng;
pub mod select;

/// Concrete distribution type used by all learners and oracles.
pub type IntDist = dist::Dist<f64>;
/// Single-precision alias; convenience only, no acceptance path uses it.
pub type IntDist32 = dist::Dist<f32>;

pub use dist::{Dist, DistError, KlDivergence, PbdSpec};
