//! Dense 64-bit tensors with reverse-mode automatic differentiation.
//!
//! The tape is define-by-run: it is rebuilt on every forward pass and records
//! one node per operation. Calling [`Tensor::backward`] on a tracked scalar
//! walks the tape in reverse and returns the gradient of that scalar with
//! respect to every tracked ancestor. Gradient accumulation for trainable
//! parameters lives in [`Parameter`], which keeps an explicit gradient buffer
//! that grows across backward passes until [`Parameter::zero_grad`].

mod ops;
mod param;
pub(crate) mod pool;
pub(crate) mod tape;
mod tensor;

pub use param::Parameter;
pub use tape::{Gradients, Tape};
pub use tensor::Tensor;
