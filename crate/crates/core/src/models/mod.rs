//! Word-level and document-level text classifiers over prediction windows.

mod checkpoint;
mod forward;
mod params;

pub use checkpoint::{load_checkpoint, read_checkpoint, save_checkpoint, write_checkpoint};
pub use forward::{forward, forward_doc, forward_word, predict_logits, Mode};
pub use params::{init_bound, init_model, parameter_shapes, Architecture, Bound, ModelConfig, ModelParams};
