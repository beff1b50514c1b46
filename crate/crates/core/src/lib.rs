pub mod adelic;
pub mod arith;
pub mod cli;
pub mod config;
pub mod constants;
pub mod cyclotomic;
pub mod error;
pub mod experiment;
pub mod heights;
pub mod measures;
pub mod metrics;
pub mod points;
pub mod quadrature;
pub mod report;
pub mod selftest;

pub use error::{Error, Result};
