//! Pretraining, the post-training stages, state collection and evaluation.

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::config::{RunConfig, StageSpec, BASE};
use crate::drift::StateRecord;
use crate::error::{Error, Result};
use crate::policy::{
    load_checkpoint, rollout, save_checkpoint, Decode, OptimizerState, Policy, PolicyParams,
};
use crate::tasks::{
    gen_examples, gen_pretrain_mixture, io::write_dataset, mix_seed, score_exact_match, Example,
    Split, TaskKind, TaskSpec,
};
use crate::trainers::{subsample, train_preset, Preset, Schedule, TrainLog, Trainer, TrainerConfig};

/// File layout of a pipeline working directory.
#[derive(Debug, Clone)]
pub struct Workdir {
    root: PathBuf,
}

impl Workdir {
    pub fn new(root: impl Into<PathBuf>) -> Self {
        Self { root: root.into() }
    }

    pub fn root(&self) -> &Path {
        &self.root
    }

    pub fn checkpoint(&self, run: &str) -> PathBuf {
        self.root.join("checkpoints").join(format!("{run}.ckpt"))
    }

    pub fn log(&self, run: &str) -> PathBuf {
        self.root.join("logs").join(format!("{run}.jsonl"))
    }

    pub fn states(&self, run: &str) -> PathBuf {
        self.root.join("states").join(format!("{run}.jsonl"))
    }

    pub fn dataset(&self, name: &str) -> PathBuf {
        self.root.join("data").join(format!("{name}.jsonl"))
    }

    pub fn report_csv(&self) -> PathBuf {
        self.root.join("report.csv")
    }

    pub fn report_json(&self) -> PathBuf {
        self.root.join("report.json")
    }

    pub fn lockfile(&self) -> PathBuf {
        self.root.join(".lock")
    }

    pub fn create_dirs(&self) -> Result<()> {
        for sub in ["checkpoints", "logs", "states", "data"] {
            let p = self.root.join(sub);
            fs::create_dir_all(&p).map_err(|e| Error::io(p, e))?;
        }
        Ok(())
    }

    /// Takes the workdir lock; released on drop.
    pub fn lock(&self) -> Result<WorkdirLock> {
        fs::create_dir_all(&self.root).map_err(|e| Error::io(&self.root, e))?;
        let path = self.lockfile();
        match fs::OpenOptions::new().write(true).create_new(true).open(&path) {
            Ok(_) => Ok(WorkdirLock { path }),
            Err(e) if e.kind() == std::io::ErrorKind::AlreadyExists => Err(Error::Locked(self.root.clone())),
            Err(e) => Err(Error::io(path, e)),
        }
    }
}

#[derive(Debug)]
pub struct WorkdirLock {
    path: PathBuf,
}

impl Drop for WorkdirLock {
    fn drop(&mut self) {
        let _ = fs::remove_file(&self.path);
    }
}

/// Per-stage seeds derived from the run seed.
pub fn stage_seed(run_seed: u64, stage: &str) -> u64 {
    mix_seed(run_seed, crate::drift::fnv1a64(stage.as_bytes()))
}

pub fn target_spec(config: &RunConfig) -> TaskSpec {
    TaskSpec::new(TaskKind::ChainArith).with_difficulty(config.difficulty)
}

pub fn task_spec(config: &RunConfig, kind: TaskKind) -> TaskSpec {
    TaskSpec::new(kind).with_difficulty(config.difficulty)
}

pub fn pretrain_data(config: &RunConfig) -> Result<Vec<Example>> {
    gen_pretrain_mixture(
        &config.pretrain.mixture,
        &config.difficulty,
        config.pretrain.n_examples,
        stage_seed(config.seed, "pretrain_data"),
    )
}

pub fn target_train_data(config: &RunConfig) -> Result<Vec<Example>> {
    gen_examples(
        &target_spec(config),
        Split::Train,
        config.target_train_size,
        stage_seed(config.seed, "target_data"),
    )
}

/// The fixed prompt set every model is rolled out on for drift.
pub fn drift_prompts(config: &RunConfig) -> Result<Vec<Example>> {
    gen_examples(
        &target_spec(config),
        Split::Eval,
        config.drift.n_prompts,
        config.drift.prompt_seed,
    )
}

/// Greedy exact-match scores of one model on every task, keyed by task name.
pub fn evaluate<P: Policy + ?Sized>(policy: &P, config: &RunConfig) -> Result<BTreeMap<String, f64>> {
    TaskKind::ALL
        .iter()
        .map(|&k| {
            let s = score_exact_match(policy, &task_spec(config, k), config.eval.n, config.eval.seed)?;
            Ok((k.name().to_string(), s.score))
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PretrainSummary {
    pub steps: usize,
    pub copy_score: f64,
}

/// SFT on the pretraining mixture, checking the held-out copy score every
/// `eval_every` steps and stopping once it reaches the threshold.
pub fn run_pretrain(config: &RunConfig) -> Result<(PolicyParams, OptimizerState, TrainLog, PretrainSummary)> {
    let p = &config.pretrain;
    let data = pretrain_data(config)?;
    let mut tc = TrainerConfig::preset(Preset::Sft);
    tc.optimizer = p.optimizer;
    tc.state_source.prompts_per_step = p.batch_size;
    tc.schedule = Schedule::Steps(p.max_steps);
    tc.seed = stage_seed(config.seed, BASE);
    let init = PolicyParams::init(config.model, stage_seed(config.seed, "init"));
    let mut trainer = Trainer::new(tc, init, None, &data)?;
    let copy_spec = task_spec(config, TaskKind::Copy);
    let mut copy = 0.0;
    for step in 1..=p.max_steps {
        trainer.step()?;
        if step % p.eval_every == 0 || step == p.max_steps {
            copy = score_exact_match(trainer.params(), &copy_spec, p.eval_n, config.eval.seed)?.score;
            if step >= p.min_steps && copy >= p.copy_threshold {
                let out = trainer.finish();
                let summary = PretrainSummary { steps: step, copy_score: copy };
                return Ok((out.params, out.optimizer, out.log, summary));
            }
        }
    }
    let out = trainer.finish();
    let scores = serde_json::to_string(&evaluate(&out.params, config)?).expect("scores serialize");
    Err(Error::PretrainFailure { copy, scores })
}

/// Rolls `policy` out once per prompt, pools every prefix state and keeps a
/// deterministic uniform subsample of `n_states`.
pub fn collect_states<P: Policy + ?Sized>(
    policy: &P,
    model_id: &str,
    prompts: &[Example],
    n_states: usize,
    temperature: f64,
    max_len: usize,
    seed: u64,
) -> Result<Vec<StateRecord>> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mode = Decode::from_temperature(temperature);
    let mut all = Vec::new();
    for (i, ex) in prompts.iter().enumerate() {
        let traj = rollout(policy, &ex.prompt, max_len, mode, &mut rng)?;
        for s in traj.states()? {
            all.push(StateRecord {
                model_id: model_id.to_string(),
                prompt_id: i,
                step: s.prefix().len(),
                state_tokens: s.tokens().collect(),
            });
        }
    }
    Ok(subsample(all, n_states, &mut rng))
}

/// Collects the drift states of `run` under the config's sampling spec.
pub fn collect_run_states<P: Policy + ?Sized>(policy: &P, run: &str, config: &RunConfig) -> Result<Vec<StateRecord>> {
    let d = &config.drift;
    collect_states(
        policy,
        run,
        &drift_prompts(config)?,
        d.n_states,
        d.temperature,
        crate::tasks::MAX_GEN_LEN,
        mix_seed(config.seed, d.prompt_seed),
    )
}

/// Trains one stage from the base model. Teachers are loaded from the
/// workdir by stage name.
pub fn train_stage(
    stage: &StageSpec,
    config: &RunConfig,
    base: &PolicyParams,
    data: &[Example],
    workdir: &Workdir,
) -> Result<(PolicyParams, OptimizerState, TrainLog)> {
    let teacher = match &stage.trainer.teacher {
        Some(name) => {
            let path = workdir.checkpoint(name);
            if !path.exists() {
                return Err(Error::Misconfiguration(format!(
                    "stage `{}`: teacher checkpoint `{name}` is unavailable",
                    stage.name
                )));
            }
            Some(load_checkpoint(&path)?.0)
        }
        None => None,
    };
    let mut tc = stage.trainer.clone();
    tc.seed = stage_seed(config.seed, &stage.name);
    let out = train_preset(&tc, base.clone(), teacher.as_ref().map(|t| t as &dyn Policy), data)?;
    Ok((out.params, out.optimizer, out.log))
}

/// What a pipeline invocation did.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct PipelineOutcome {
    /// Runs trained in this invocation (in order); empty when resuming a
    /// complete workdir.
    pub trained: Vec<String>,
    pub training_steps: usize,
    /// `(run, error)` for every stage that failed.
    pub failures: Vec<(String, String)>,
}

fn write_run(workdir: &Workdir, run: &str, params: &PolicyParams, opt: &OptimizerState, log: &TrainLog) -> Result<()> {
    // the checkpoint is written last: its presence marks the stage complete
    log.write(&workdir.log(run))?;
    save_checkpoint(params, opt, &workdir.checkpoint(run))
}

/// Builds the base model if it is missing. Returns the steps trained.
pub fn ensure_base(config: &RunConfig, workdir: &Workdir) -> Result<usize> {
    if workdir.checkpoint(BASE).exists() {
        return Ok(0);
    }
    workdir.create_dirs()?;
    write_dataset(&workdir.dataset("pretrain"), &pretrain_data(config)?)?;
    let (params, opt, log, summary) = run_pretrain(config)?;
    write_run(workdir, BASE, &params, &opt, &log)?;
    Ok(summary.steps)
}

/// Trains every missing stage. Failed stages are recorded and later stages
/// that do not depend on them still run.
pub fn train_all(config: &RunConfig, workdir: &Workdir) -> Result<PipelineOutcome> {
    workdir.create_dirs()?;
    let mut outcome = PipelineOutcome::default();
    let steps = ensure_base(config, workdir)?;
    if steps > 0 {
        outcome.trained.push(BASE.to_string());
        outcome.training_steps += steps;
    }
    let base = load_checkpoint(&workdir.checkpoint(BASE))?.0;
    let data = target_train_data(config)?;
    write_dataset(&workdir.dataset("target_train"), &data)?;
    for stage in &config.stages {
        if workdir.checkpoint(&stage.name).exists() {
            continue;
        }
        match train_stage(stage, config, &base, &data, workdir) {
            Ok((params, opt, log)) => {
                write_run(workdir, &stage.name, &params, &opt, &log)?;
                outcome.training_steps += log.records.len();
                outcome.trained.push(stage.name.clone());
            }
            Err(e) => outcome.failures.push((stage.name.clone(), e.to_string())),
        }
    }
    Ok(outcome)
}
