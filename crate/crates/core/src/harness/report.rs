//! The results table: one row per model, CSV and JSON.

use std::collections::BTreeMap;
use std::fs;

use serde::{Deserialize, Serialize};

use super::config::{RunConfig, BASE};
use super::pipeline::{collect_run_states, evaluate, Workdir};
use crate::drift::{
    drift_report, read_states, retention_stats, sample_from_records, write_states, Bandwidth, DriftConfig,
    DriftReport, StateSample,
};
use crate::error::{Error, Result};
use crate::policy::load_checkpoint;
use crate::tasks::TaskKind;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReportRow {
    pub run: String,
    pub checkpoint: String,
    pub log: String,
    pub states: String,
    pub target: Option<f64>,
    /// Retention-task scores keyed by task name.
    pub retention_scores: BTreeMap<String, f64>,
    pub mmd: Option<f64>,
    pub forgetting: Option<f64>,
    pub retention: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Report {
    pub seed: u64,
    pub config: RunConfig,
    pub rows: Vec<ReportRow>,
    /// Full drift metrics of every run against the base model.
    pub drift: Vec<DriftReport>,
}

pub const CSV_HEADER: &str = "run,target,copy,reverse,count,mmd,forgetting,retention";

fn cell(x: Option<f64>) -> String {
    x.map_or(String::new(), |v| format!("{v:.6}"))
}

impl Report {
    pub fn row(&self, run: &str) -> Option<&ReportRow> {
        self.rows.iter().find(|r| r.run == run)
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::from(CSV_HEADER);
        out.push('\n');
        for r in &self.rows {
            let score = |k: TaskKind| cell(r.retention_scores.get(k.name()).copied());
            out.push_str(&format!(
                "{},{},{},{},{},{},{},{}\n",
                r.run,
                cell(r.target),
                score(TaskKind::Copy),
                score(TaskKind::Reverse),
                score(TaskKind::Count),
                cell(r.mmd),
                cell(r.forgetting),
                cell(r.retention),
            ));
        }
        out
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serializes")
    }

    pub fn write(&self, workdir: &Workdir) -> Result<()> {
        let csv = workdir.report_csv();
        fs::write(&csv, self.to_csv()).map_err(|e| Error::io(csv, e))?;
        let json = workdir.report_json();
        fs::write(&json, self.to_json()).map_err(|e| Error::io(json, e))
    }

    pub fn read_json(workdir: &Workdir) -> Result<Self> {
        let path = workdir.report_json();
        let text = fs::read_to_string(&path).map_err(|e| Error::io(&path, e))?;
        serde_json::from_str(&text).map_err(|e| Error::json(path.display().to_string(), e))
    }
}

/// Loads the run's state file, collecting and writing it first if absent.
fn run_sample(run: &str, config: &RunConfig, workdir: &Workdir) -> Result<StateSample> {
    let path = workdir.states(run);
    if !path.exists() {
        let params = load_checkpoint(&workdir.checkpoint(run))?.0;
        write_states(&path, &collect_run_states(&params, run, config)?)?;
    }
    let d = &config.drift;
    sample_from_records(&read_states(&path)?, d.feature_dim, d.hash_seed, "target_eval", config.seed)
}

fn rel(workdir: &Workdir, p: std::path::PathBuf) -> String {
    p.strip_prefix(workdir.root()).unwrap_or(&p).display().to_string()
}

/// Evaluates every available checkpoint, measures drift against the base
/// model, and assembles the table. Needs only the workdir's artifacts.
pub fn build_report(config: &RunConfig, workdir: &Workdir, failures: &[(String, String)]) -> Result<Report> {
    let base_params = load_checkpoint(&workdir.checkpoint(BASE))?.0;
    let base_scores = evaluate(&base_params, config)?;
    let base_sample = run_sample(BASE, config, workdir)?;
    let retention_of = |s: &BTreeMap<String, f64>| -> BTreeMap<String, f64> {
        TaskKind::RETENTION.iter().map(|k| (k.name().to_string(), s[k.name()])).collect()
    };
    let base_ret = retention_of(&base_scores);
    let dcfg = DriftConfig {
        bandwidth: Bandwidth::Auto,
        projections: config.drift.projections,
        projection_seed: config.drift.projection_seed,
    };
    let blank = |run: &str| ReportRow {
        run: run.to_string(),
        checkpoint: rel(workdir, workdir.checkpoint(run)),
        log: rel(workdir, workdir.log(run)),
        states: rel(workdir, workdir.states(run)),
        target: None,
        retention_scores: BTreeMap::new(),
        mmd: None,
        forgetting: None,
        retention: None,
        error: None,
    };
    let mut rows = vec![ReportRow {
        target: Some(base_scores[TaskKind::ChainArith.name()]),
        retention_scores: base_ret.clone(),
        ..blank(BASE)
    }];
    let mut drift = Vec::new();
    for stage in &config.stages {
        let run = stage.name.as_str();
        let mut row = blank(run);
        if let Some((_, e)) = failures.iter().find(|(n, _)| n == run) {
            row.error = Some(e.clone());
            rows.push(row);
            continue;
        }
        if !workdir.checkpoint(run).exists() {
            row.error = Some("checkpoint missing".into());
            rows.push(row);
            continue;
        }
        let params = load_checkpoint(&workdir.checkpoint(run))?.0;
        let scores = evaluate(&params, config)?;
        let post_ret = retention_of(&scores);
        let stats = retention_stats(&base_ret, &post_ret)?;
        let d = drift_report(&base_sample, &run_sample(run, config, workdir)?, &dcfg)?;
        row.target = Some(scores[TaskKind::ChainArith.name()]);
        row.retention_scores = post_ret;
        row.mmd = Some(d.mmd);
        row.forgetting = Some(stats.mean_forgetting);
        row.retention = Some(stats.mean_retention);
        drift.push(d);
        rows.push(row);
    }
    Ok(Report {
        seed: config.seed,
        config: config.clone(),
        rows,
        drift,
    })
}
