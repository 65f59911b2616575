pub mod cli;
pub mod corpus;
pub mod diffcore;
pub mod error;
pub mod metrics;
pub mod models;
pub mod training;

pub use error::{Error, Result};
