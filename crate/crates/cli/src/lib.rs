//! The `refwhy` pipeline: configuration, stage commands and the review
//! service.

pub mod config;
pub mod error;
pub mod review;
pub mod stages;

pub use config::PipelineConfig;
pub use error::CliError;
