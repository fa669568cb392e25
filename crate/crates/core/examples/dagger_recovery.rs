//! DAgger: the expert labels the states the student actually reaches,
//! including broken ones, with a recovery continuation.
//!
//!     cargo run --release --example dagger_recovery -- [workdir]

use statelab::harness::{ensure_base, target_spec, target_train_data, train_stage, RunConfig, Workdir, BASE};
use statelab::policy::load_checkpoint;
use statelab::tasks::{expert_continuation, score_exact_match, vocab};

fn main() -> statelab::Result<()> {
    let v = vocab();
    let prompt = v.encode("A3+5+2=")?;
    for prefix in ["", "3+5=8;", "3+5=9;", "9+"] {
        let fix = expert_continuation(&prompt, &v.encode(prefix)?);
        println!("{:<10} -> {}", format!("{prefix:?}"), v.decode(&fix));
    }

    let wd = Workdir::new(std::env::args().nth(1).unwrap_or_else(|| "statelab-work".into()));
    let config = RunConfig::default();
    wd.create_dirs()?;
    ensure_base(&config, &wd)?;
    let base = load_checkpoint(&wd.checkpoint(BASE))?.0;
    let data = target_train_data(&config)?;
    let spec = target_spec(&config);
    let before = score_exact_match(&base, &spec, config.eval.n, config.eval.seed)?.score;
    let (params, _, log) = train_stage(config.stage("dagger").unwrap(), &config, &base, &data, &wd)?;
    let after = score_exact_match(&params, &spec, config.eval.n, config.eval.seed)?.score;
    let origin = &log.records[0].state_source;
    println!("target {before:.3} -> {after:.3} after {} steps on {origin}", log.records.len());
    Ok(())
}
