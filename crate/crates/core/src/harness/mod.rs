//! The end-to-end experiment: pretrain a base model, run every
//! post-training stage from it, evaluate, measure drift, write the table.
//!
//! A working directory holds every artifact. Stages whose checkpoint exists
//! are skipped, so an interrupted pipeline resumes where it stopped and a
//! finished one reruns without training.

pub mod cli;
mod config;
mod pipeline;
mod report;

pub use config::{DriftSampling, EvalConfig, PretrainConfig, RunConfig, StageSpec, BASE};
pub use pipeline::{
    collect_run_states, collect_states, drift_prompts, ensure_base, evaluate, pretrain_data,
    run_pretrain, stage_seed, target_spec, target_train_data, task_spec, train_all, train_stage,
    PipelineOutcome, PretrainSummary, Workdir, WorkdirLock,
};
pub use report::{build_report, Report, ReportRow, CSV_HEADER};

use crate::error::Result;

/// Trains whatever is missing, then evaluates and writes `report.csv` and
/// `report.json`. Holds the workdir lock throughout.
pub fn replicate_pipeline(config: &RunConfig, workdir: &Workdir) -> Result<(PipelineOutcome, Report)> {
    config.validate()?;
    let _lock = workdir.lock()?;
    let outcome = train_all(config, workdir)?;
    let report = build_report(config, workdir, &outcome.failures)?;
    report.write(workdir)?;
    Ok((outcome, report))
}
