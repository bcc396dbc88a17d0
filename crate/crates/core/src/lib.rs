//! Traffic-volume modelling for link provisioning and percentile billing.
//!
//! The pipeline bins packet captures into per-interval byte volumes, fits
//! candidate distributions, scores them with goodness-of-fit tests, and feeds
//! the winner into capacity planning and 95th-percentile billing estimates.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod billing;
pub mod cli;
pub mod distributions;
pub mod error;
pub mod gof;
pub mod ingest;
pub mod output;
pub mod provisioning;
pub mod rng;
pub mod synthgen;
pub mod trace;

pub use error::{Result, VolumaError};
