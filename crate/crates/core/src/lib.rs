// `!(x > 0.0)` is used on purpose so that NaN lands in the error branch.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod bench;
pub mod circular;
pub mod cli;
pub mod engine;
pub mod error;
pub mod freq;
pub mod hyperparams;
pub mod support;

mod bessel;

pub use error::{Result, ValseError};
pub use freq::{FreqPosterior, MeasurementSet};
