//! Human-validation service: serves the exported batch, records verdicts in
//! an append-only log and reports live agreement.

#[cfg(feature = "review")]
mod http;
mod state;

use std::fs::File;
use std::io::BufReader;
use std::path::PathBuf;

use anyhow::Context;
use refwhy_core::llm::read_validation_batch;

#[cfg(feature = "review")]
pub use http::{router, ReviewApp};
pub use state::{
    replay, AgreementReport, LlmAgreement, MajorityCounts, PairAgreement, Progress, ReviewState, ReviewVerdict,
    VerdictError, VerdictLog, QUORUM,
};

use crate::config::PipelineConfig;
use crate::error::CliError;
use crate::stages::{classify, require};

pub const DIR: &str = "review";
pub const LOG: &str = "verdicts.ndjson";

pub fn log_path(cfg: &PipelineConfig) -> PathBuf {
    cfg.stage_dir(DIR).join(LOG)
}

fn load_batch(cfg: &PipelineConfig) -> Result<ReviewState, CliError> {
    let batch = require(cfg.stage_dir(classify::DIR).join(classify::BATCH))?;
    let cases = read_validation_batch(BufReader::new(File::open(&batch)?))
        .with_context(|| format!("reading {}", batch.display()))?;
    Ok(ReviewState::new(cases, cfg.review.reviewers.clone()))
}

/// Loads the batch and replays the verdict log into it, repairing a torn
/// final record.
pub fn load_state(cfg: &PipelineConfig) -> Result<(ReviewState, VerdictLog), CliError> {
    let mut state = load_batch(cfg)?;
    let (log, verdicts) = VerdictLog::open(&log_path(cfg)).context("opening the verdict log")?;
    let n = verdicts.len();
    let skipped = replay(&mut state, verdicts);
    log::info!("review: {} cases, {} logged verdicts replayed ({skipped} skipped)", state.cases().len(), n);
    Ok((state, log))
}

/// Current review state without writing to the log, for reporting while
/// the service may still be running.
pub fn snapshot(cfg: &PipelineConfig) -> Result<ReviewState, CliError> {
    let mut state = load_batch(cfg)?;
    let verdicts = VerdictLog::read(&log_path(cfg)).context("reading the verdict log")?;
    replay(&mut state, verdicts);
    Ok(state)
}

#[cfg(feature = "review")]
pub fn open_app(cfg: &PipelineConfig) -> Result<std::sync::Arc<ReviewApp>, CliError> {
    let (state, log) = load_state(cfg)?;
    Ok(std::sync::Arc::new(ReviewApp::new(state, log, cfg.review.reveal_others)))
}

#[cfg(feature = "review")]
pub fn serve(cfg: &PipelineConfig) -> Result<(), CliError> {
    let app = open_app(cfg)?;
    let addr: std::net::SocketAddr = format!("{}:{}", cfg.review.bind, cfg.review.port)
        .parse()
        .map_err(|e| CliError::Config(format!("review: bad bind address: {e}")))?;
    let rt = tokio::runtime::Runtime::new()?;
    rt.block_on(async move {
        let listener = tokio::net::TcpListener::bind(addr).await.with_context(|| format!("binding {addr}"))?;
        log::info!("review service listening on http://{addr}/");
        axum::serve(listener, router(app, cfg.review.static_dir.clone()))
            .with_graceful_shutdown(async {
                let _ = tokio::signal::ctrl_c().await;
            })
            .await
            .context("serving")?;
        Ok::<_, anyhow::Error>(())
    })?;
    Ok(())
}

#[cfg(not(feature = "review"))]
pub fn serve(cfg: &PipelineConfig) -> Result<(), CliError> {
    load_batch(cfg)?;
    Err(CliError::Config("this build does not include the review service".into()))
}
