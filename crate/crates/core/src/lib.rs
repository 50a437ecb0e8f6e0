#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod agents;
pub mod ddf;
pub mod domain;
pub mod envs;
pub mod error;
pub mod goalgen;
pub mod harness;
pub mod nn;
pub mod replay;
pub mod rng;
pub mod stats;

pub use error::{Error, Result};
