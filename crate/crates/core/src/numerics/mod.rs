//! Dense `f64` tensors, reverse-mode gradients and the Adam optimizer.

mod adam;
pub mod gradcheck;
mod init;
mod params;
mod tape;
mod tensor;

pub use adam::{Adam, AdamConfig};
pub use init::glorot_uniform;
pub use params::{BoundParams, ParamSet};
pub use tape::{Segments, Tape, Var};
pub use tensor::Tensor;
