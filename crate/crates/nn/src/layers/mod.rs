//! Layer primitives with hand-derived backward passes.
//!
//! Each layer owns its configuration and refers to its parameters by name in
//! a [`crate::ParamStore`]. `forward` is pure; `backward` takes whatever the
//! forward cached (usually the layer input), accumulates parameter gradients
//! into the store and returns the input gradient.

mod conv;
mod dense;
mod lstm;

pub use conv::{Conv2d, Workspace};
pub use dense::{Linear, Relu};
pub use lstm::{LstmCell, LstmState, LstmStepCache};
