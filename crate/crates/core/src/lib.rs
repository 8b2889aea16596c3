//! Mining and analysis toolkit for studies of refactoring motivations.
//!
//! The crate covers the primary pipeline: commit-history mining and
//! just-in-time process metrics, RefactoringMiner ingestion, stratified
//! sampling, the four-role LLM consensus protocol, and the statistics used to
//! relate metrics to motivation categories.

pub mod exec;
pub mod history;
pub mod llm;
pub mod metrics;
pub mod reference;
pub mod refactoring;
pub mod report;
pub mod sampler;
pub mod stats;
#[cfg(feature = "testkit")]
pub mod testkit;

pub use exec::Execution;
