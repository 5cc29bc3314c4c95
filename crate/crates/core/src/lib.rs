// Validators use `!(x > 0.0)` so that NaN is rejected too.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod analysis;
pub mod engine;
pub mod harness;
pub mod learners;
pub mod scenarios;
pub mod stats;
