//! Pricing skips in wait-timer games.
//!
//! The crate models players who either wait out a timed task or pay a posted
//! price to skip it. It covers:
//!
//! * [`dists`]: type, impatience, retention and marginal-value distributions,
//!   including monotone-hazard-rate checks.
//! * [`valuefn`]: price-sensitive, insensitive and c-linear value functions.
//! * [`single_task`]: utility- and revenue-optimal prices for one task.
//! * [`repeat_pricing`] and [`multi_block`]: retention-aware pricing over
//!   repeated tasks, Myerson Threshold (MT) pricing, and the two-block example.
//! * [`simulator`] and [`experiments`]: the agent-based Monte-Carlo engine and
//!   the grid study built on top of it.
//!
//! The analytic modules are generic over the scalar type through [`Real`];
//! the aliases below fix them to `f64`, which is what the simulator and the
//! command-line tool use.

// `!(x > 0)` is used on purpose so NaN fails validation.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod config;
pub mod dists;
pub mod error;
pub mod experiments;
pub mod multi_block;
pub mod numeric;
pub mod repeat_pricing;
pub mod scalar;
pub mod simulator;
pub mod single_task;
pub mod stream;
pub mod valuefn;

pub use error::{Error, Result};
pub use scalar::Real;

/// Probability law over `f64`.
pub type Distribution = dists::ScalarDistribution<f64>;
/// Value function over `f64` prices.
pub type ValueFn = valuefn::ValueFunction<f64>;
/// Retention distribution plus designer discount, over `f64`.
pub type Retention = repeat_pricing::RetentionModel<f64>;
/// Pricing policy over `f64` prices.
pub type Scheme = repeat_pricing::PricingScheme<f64>;
/// Single-task optimization summary over `f64`.
pub type Report = single_task::SingleTaskReport<f64>;
/// Two-block example over exact rationals.
pub type RationalTypes = multi_block::DiscreteTypes<num_rational::Ratio<i64>>;
