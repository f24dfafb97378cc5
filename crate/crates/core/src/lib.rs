//! Survey weight calibration under SRSWOR.
//!
//! The crate covers Horvitz-Thompson estimation under SRSWOR, chi-square
//! calibration with one constraint (GREG) or two (the linear regression
//! estimator), Sen-Yates-Grundy type variance estimators and their calibrated
//! forms, stratified analogues, and experiments that compare the two
//! calibrated estimators by exact enumeration or Monte Carlo.

pub mod calibrate;
pub mod cli;
pub mod design;
pub mod error;
pub mod experiment;
pub mod io;
pub mod par;
pub mod rng;
pub mod stratified;
pub mod variance;

pub use error::{Error, Result};
