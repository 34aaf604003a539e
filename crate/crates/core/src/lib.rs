//! Exact error probabilities for a weight-stationary systolic-array
//! accelerator carrying one permanent stuck-at fault.

pub mod dtmc;
pub mod error;
pub mod experiment;
pub mod faultmodel;
pub mod fixedpoint;
pub mod network;
pub mod systolic;

pub use error::{Error, Result};
