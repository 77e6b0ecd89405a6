//! Synthesis of clustered linear phased arrays by power-pattern matching.
//!
//! Each element's share of the reference power pattern (its elementary
//! power pattern) is sampled across visible space; elements are grouped by
//! k-means on those complex values, sub-array weights are refined by
//! iterative projection, and the clustering with the lowest normalised
//! power mismatch wins. An excitation-matching k-means baseline and an
//! exhaustive partition search are included for comparison.

// `!(x > 0.0)` style checks deliberately reject NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod baselines;
pub mod config;
pub mod driver;
pub mod ep;
pub mod error;
pub mod excitation;
pub mod geometry;
pub mod ipm;
pub mod kmeans;
pub mod metrics;
pub mod partitions;
pub mod pattern;
pub mod refgen;
pub mod report;

pub use driver::{pmm_synthesize, PmmConfig, SynthesisResult};
pub use error::{Error, Result};
pub use excitation::{ClusteringVector, ExcitationVector};
pub use geometry::{AngularGrid, ArrayGeometry};
pub use pattern::{
    cpa_power_pattern, fpa_power_pattern, matching_improvement, pm_metric, PowerPattern,
};
