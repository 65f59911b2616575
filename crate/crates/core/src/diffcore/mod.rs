//! Minimal reverse-mode differentiable compute core.
//!
//! Everything runs in `f64` on a per-call [`Graph`]. Value-level kernels in
//! [`kernels`] are shared with the graph forward passes so results agree
//! bit for bit whether or not a gradient is requested.

mod adam;
mod gradcheck;
mod graph;
pub mod kernels;
mod layers;
mod tensor;

pub use adam::{AdamConfig, AdamState};
pub use gradcheck::{check_gradients, relative_error, GradCheckReport, FD_STEP};
pub use graph::{Graph, NodeId};
pub use kernels::{cross_entropy, kl_divergence, matmul, softmax_with_temperature};
pub use layers::{conv1d_multi, lstm_step, FilterBank, LstmCell};
pub use tensor::Tensor;
