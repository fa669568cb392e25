//! Command-line front end. Exit codes: 0 success, 1 usage or configuration
//! error, 2 runtime failure.

use std::ffi::OsString;
use std::path::{Path, PathBuf};

use clap::{Parser, Subcommand};

use super::config::{RunConfig, StageSpec, BASE};
use super::pipeline::{ensure_base, evaluate, target_train_data, train_stage, Workdir};
use super::report::{build_report, Report};
use super::replicate_pipeline;
use crate::drift::{drift_report, read_states, sample_from_records, Bandwidth, DriftConfig};
use crate::error::{Error, Result};
use crate::policy::{load_checkpoint, save_checkpoint};
use crate::trainers::{Preset, TrainerConfig};

#[derive(Debug, Parser)]
#[command(name = "statelab", version, about = "State-distribution post-training laboratory")]
struct Cli {
    /// Run configuration (JSON); built-in defaults when omitted.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Overrides the configuration's seed.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Directory that receives every output file.
    #[arg(long, global = true, default_value = "statelab-work")]
    workdir: PathBuf,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Build the base model (skipped if its checkpoint exists).
    Pretrain,
    /// Train one preset from the base model.
    Train {
        #[arg(long)]
        preset: String,
        /// Pipeline stage whose settings to use; defaults to the first stage
        /// with this preset.
        #[arg(long)]
        stage: Option<String>,
        /// Teacher checkpoint; defaults to the stage's named teacher.
        #[arg(long)]
        teacher: Option<PathBuf>,
    },
    /// Score a checkpoint on every task.
    Eval {
        #[arg(long)]
        ckpt: PathBuf,
    },
    /// Drift metrics between two state-sample files.
    Drift {
        #[arg(long)]
        a: PathBuf,
        #[arg(long)]
        b: PathBuf,
    },
    /// Rebuild the report from the workdir's artifacts.
    Report,
    /// Run the whole pipeline and write the report.
    Replicate,
}

fn load_config(cli: &Cli) -> Result<RunConfig> {
    let mut config = match &cli.config {
        // an unreadable --config is a usage error, not a runtime failure
        Some(p) => RunConfig::load(p).map_err(|e| match e {
            Error::Io { .. } => Error::Misconfiguration(e.to_string()),
            other => other,
        })?,
        None => RunConfig::default(),
    };
    if let Some(s) = cli.seed {
        config.seed = s;
    }
    Ok(config)
}

fn resolve_stage(config: &RunConfig, preset: Preset, stage: Option<&str>) -> Result<StageSpec> {
    if let Some(name) = stage {
        let s = config
            .stage(name)
            .ok_or_else(|| Error::Misconfiguration(format!("no stage named `{name}`")))?;
        if s.trainer.preset != preset {
            return Err(Error::Misconfiguration(format!(
                "stage `{name}` is a `{}` stage, not `{preset}`",
                s.trainer.preset
            )));
        }
        return Ok(s.clone());
    }
    Ok(config
        .stages
        .iter()
        .find(|s| s.trainer.preset == preset)
        .cloned()
        .unwrap_or_else(|| StageSpec {
            name: preset.name().to_string(),
            trainer: TrainerConfig::preset(preset),
        }))
}

fn cmd_train(config: &RunConfig, wd: &Workdir, preset: &str, stage: Option<&str>, teacher: Option<&Path>) -> Result<String> {
    let preset: Preset = preset.parse()?;
    let mut spec = resolve_stage(config, preset, stage)?;
    let _lock = wd.lock()?;
    wd.create_dirs()?;
    ensure_base(config, wd)?;
    let base = load_checkpoint(&wd.checkpoint(BASE))?.0;
    let data = target_train_data(config)?;
    if let Some(path) = teacher {
        // stage teachers are resolved by name inside the workdir
        let name = format!("{}_teacher", spec.name);
        let (p, o) = load_checkpoint(path)?;
        save_checkpoint(&p, &o, &wd.checkpoint(&name))?;
        spec.trainer.teacher = Some(name);
    }
    let (params, opt, log) = train_stage(&spec, config, &base, &data, wd)?;
    log.write(&wd.log(&spec.name))?;
    let ckpt = wd.checkpoint(&spec.name);
    save_checkpoint(&params, &opt, &ckpt)?;
    let last = log.records.last().map_or(f64::NAN, |r| r.loss);
    Ok(format!(
        "trained `{}` ({preset}) for {} steps, final loss {last:.6}\ncheckpoint: {}",
        spec.name,
        log.records.len(),
        ckpt.display()
    ))
}

fn cmd_drift(config: &RunConfig, a: &Path, b: &Path) -> Result<String> {
    let d = &config.drift;
    let sa = sample_from_records(&read_states(a)?, d.feature_dim, d.hash_seed, "file", config.seed)?;
    let sb = sample_from_records(&read_states(b)?, d.feature_dim, d.hash_seed, "file", config.seed)?;
    let cfg = DriftConfig {
        bandwidth: Bandwidth::Auto,
        projections: d.projections,
        projection_seed: d.projection_seed,
    };
    let r = drift_report(&sa, &sb, &cfg)?;
    Ok(serde_json::to_string_pretty(&r).expect("report serializes"))
}

fn execute(cli: &Cli) -> Result<String> {
    let config = load_config(cli)?;
    config.validate()?;
    let wd = Workdir::new(&cli.workdir);
    match &cli.command {
        Command::Pretrain => {
            let _lock = wd.lock()?;
            let steps = ensure_base(&config, &wd)?;
            Ok(format!(
                "base checkpoint: {} ({steps} steps trained)",
                wd.checkpoint(BASE).display()
            ))
        }
        Command::Train { preset, stage, teacher } => {
            cmd_train(&config, &wd, preset, stage.as_deref(), teacher.as_deref())
        }
        Command::Eval { ckpt } => {
            let params = load_checkpoint(ckpt)?.0;
            if params.shape.vocab != config.model.vocab {
                return Err(Error::Misconfiguration("checkpoint vocabulary differs from the task vocabulary".into()));
            }
            let scores = evaluate(&params, &config)?;
            Ok(serde_json::to_string_pretty(&scores).expect("scores serialize"))
        }
        Command::Drift { a, b } => cmd_drift(&config, a, b),
        Command::Report => {
            let _lock = wd.lock()?;
            let report: Report = build_report(&config, &wd, &[])?;
            report.write(&wd)?;
            Ok(report.to_csv().trim_end().to_string())
        }
        Command::Replicate => {
            let (outcome, report) = replicate_pipeline(&config, &wd)?;
            let mut out = report.to_csv().trim_end().to_string();
            out.push_str(&format!(
                "\n# trained {} runs ({} steps); report in {}",
                outcome.trained.len(),
                outcome.training_steps,
                wd.root().display()
            ));
            if !outcome.failures.is_empty() {
                return Err(Error::NumericFault(format!(
                    "{out}\nfailed stages: {}",
                    outcome
                        .failures
                        .iter()
                        .map(|(n, e)| format!("{n}: {e}"))
                        .collect::<Vec<_>>()
                        .join("; ")
                )));
            }
            Ok(out)
        }
    }
}

/// Runs the CLI on `argv` (including the program name), printing results
/// to stdout and errors to stderr. Returns the process exit code.
pub fn run<I, T>(argv: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return code;
        }
    };
    match execute(&cli) {
        Ok(out) => {
            println!("{out}");
            0
        }
        Err(e) => {
            eprintln!("error: {e}");
            if e.is_config_error() {
                1
            } else {
                2
            }
        }
    }
}
