//! Minimal dense neural engine: layers with hand-written backward passes,
//! Adam, finite-difference checks and the message-passing filter library.

pub mod filters;
pub mod gradcheck;
pub mod layers;
pub mod optim;

pub use filters::{filter_forward, stacked_linear_gcn, FilterKind, FilterSpec, Propagation};
pub use gradcheck::{check_input_gradient, check_param_gradients, jitter_params, GradCheckReport};
pub use layers::{
    accuracy, dropout_mask, relu, relu_backward, softmax_cross_entropy, BatchNorm1d,
    BatchNormCache, Linear, Param, Parameterized,
};
pub use optim::Adam;
