#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod adder;
pub mod config;
pub mod context;
pub mod cost;
pub mod distance;
pub mod error;
pub mod error_model;
pub mod factory;
pub mod layout;
pub mod lookup;
pub mod optimizer;
pub mod physical;
pub mod report;
pub mod shor;

pub use distance::CodeDistance;
pub use error::{Error, Result};
