//! Exact Stieltjes calculus for monotone càdlàg functions, simulation of
//! driftless subordinators, and numerical checks of the pure-jump change of
//! variables formula and of the extended generator of a subordinator.

// NaN-rejecting guards are written as negated comparisons on purpose
#![allow(clippy::neg_cmp_op_on_partial_ord, clippy::excessive_precision, clippy::large_enum_variant)]

pub mod accessibility;
pub mod error;
pub mod experiment;
pub mod generator;
pub mod interval;
pub mod levy;
pub mod monotone;
pub mod quadrature;
pub mod special;
pub mod staircase;
pub mod stats;
pub mod stochcalc;

pub use error::{Error, Result};
pub use interval::Enclosure;

pub use monotone::{compose, cov_residual, FiniteVariationFn, Jump, Knot, MonotoneFn};
pub use levy::{JumpLaw, LevyModel, PathRealization};
pub use staircase::StaircaseSpec;

