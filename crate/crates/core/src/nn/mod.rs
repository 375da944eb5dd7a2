//! Dense layers and the two surrogate architectures with explicit
//! reverse-mode gradients.
//!
//! Parameters live in one flat vector laid out in stack order; each linear
//! layer contributes its row-major `[out][in]` weights followed by its bias.

pub mod layers;
pub mod model;

pub use layers::{activation, linear_forward, Activation, LinearLayer};
pub use model::{
    forward_backward, init_params, model_backward, model_forward, param_count, Model, ModelKind, ModelSpec, Stage,
};
