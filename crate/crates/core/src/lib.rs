//! Non-adaptive 20-questions tracking of a moving target on the unit torus
//! under measurement-dependent noise.
//!
//! * [`channel`]: measurement-dependent BSC and its continuity diagnostics.
//! * [`motion`]: reflecting-torus location law and unwrapped positions.
//! * [`info`]: information density, capacity, dispersion, third moment.
//! * [`limits`]: second-order resolution approximation and phase transition.
//! * [`scheme`]: hypothesis grid, random query codebook and decoder.
//! * [`harness`]: seeded Monte Carlo estimation of the excess-resolution
//!   probability.
//! * [`cli`]: the `qtrack` command-line front end.

// `!(x >= 0.0)` style checks are used on purpose: they also reject NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord, clippy::excessive_precision, clippy::too_many_arguments)]

pub mod channel;
pub mod cli;
pub mod error;
pub mod harness;
pub mod info;
pub mod limits;
pub mod motion;
pub mod normal;
pub mod scheme;

pub use channel::{state_of_measure, ChannelSpec, SizeMap, TransitionMatrix};
pub use error::{Error, Result};
pub use harness::{estimate_excess_prob, ExperimentPlan, Prior, SummaryRow};
pub use info::{CapacityOptions, ChannelStats};
pub use motion::{locate_scalar, locate_vector, unwrapped_position, TargetState};
pub use normal::{gaussian_icdf, norm_cdf};
pub use scheme::{Codebook, HypothesisGrid, Scheme};

/// Crate version recorded in run manifests.
pub const VERSION: &str = env!("CARGO_PKG_VERSION");
