//! Baseline, LuPIET, transfer and mixed training over prediction windows.

mod config;
mod fit;
mod loss;
mod record;
mod seed;
mod strategies;

pub use config::{SelectionMetric, TrainConfig};
pub use fit::{evaluate, Dataset, Evaluation};
pub use loss::{combined_loss, combined_loss_node, distill_loss, distill_loss_node, DistillConfig, KlDirection};
pub use record::{EpochLog, RunRecord, Strategy};
pub use seed::{derive_seed, params_digest};
pub use strategies::{
    distill_from_teacher, teacher_seed, train_lupiet, train_mixed, train_standard, train_transfer,
};
