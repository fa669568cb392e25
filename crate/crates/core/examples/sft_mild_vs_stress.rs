//! Mild and stress SFT on the target task from the same base model. The
//! stress run trains on a small batch at a high learning rate and pays for
//! it on the retention tasks.
//!
//!     cargo run --release --example sft_mild_vs_stress -- [workdir]

use std::collections::BTreeMap;

use statelab::drift::retention_stats;
use statelab::harness::{ensure_base, evaluate, target_train_data, train_stage, RunConfig, Workdir, BASE};
use statelab::policy::load_checkpoint;
use statelab::tasks::TaskKind;

fn retention_tasks(scores: &BTreeMap<String, f64>) -> BTreeMap<String, f64> {
    scores.iter().filter(|(k, _)| *k != TaskKind::ChainArith.name()).map(|(k, &v)| (k.clone(), v)).collect()
}

fn main() -> statelab::Result<()> {
    let wd = Workdir::new(std::env::args().nth(1).unwrap_or_else(|| "statelab-work".into()));
    let config = RunConfig::default();
    wd.create_dirs()?;
    ensure_base(&config, &wd)?;
    let base = load_checkpoint(&wd.checkpoint(BASE))?.0;
    let data = target_train_data(&config)?;
    let base_scores = evaluate(&base, &config)?;
    println!("{:<12} target {:.3}", BASE, base_scores[TaskKind::ChainArith.name()]);

    for name in ["sft_mild", "sft_stress"] {
        let stage = config.stage(name).expect("default stage");
        let (params, _, log) = train_stage(stage, &config, &base, &data, &wd)?;
        let scores = evaluate(&params, &config)?;
        let r = retention_stats(&retention_tasks(&base_scores), &retention_tasks(&scores))?;
        println!(
            "{name:<12} target {:.3}  retention {:.3}  forgetting {:+.3}  ({} steps, lr {})",
            scores[TaskKind::ChainArith.name()],
            r.mean_retention,
            r.mean_forgetting,
            log.records.len(),
            stage.trainer.optimizer.lr
        );
    }
    Ok(())
}
