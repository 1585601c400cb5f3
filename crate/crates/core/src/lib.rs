// `!(x > bound)` is used on purpose so NaN fails domain checks.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod cfderiv;
pub mod check;
pub mod cli;
pub mod matcore;
pub mod moments;
pub mod riesz;
pub mod specialfn;
pub mod verify;
