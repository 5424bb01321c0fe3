//! Dense math, the recurrent cell, and the update rule.

mod cell;
mod ops;
mod params;
mod tensor;

pub(crate) use cell::cell_step_unchecked;
pub use cell::{cell_backward, cell_step, CellCache, CellParams, CELL_TENSORS};
pub use ops::{kl_categorical, log_softmax, log_sum_exp, softmax, softmax_xent};
pub use params::{ascent_step, GradientSet, Parameters};
pub use tensor::{dot, sigmoid, Tensor};
