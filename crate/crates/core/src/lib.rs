// Negated comparisons reject NaN along with out-of-order values.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod error;
pub mod family;
pub mod integration;
pub mod models;
pub mod operator;
pub mod stone;

pub use error::{Error, Result};
pub use operator::{commutator_norm, is_projection, operator_norm, NormSpec, Operator, Vector, C64};
