//! Builds (or reuses) the base model and prints its scores on every task.
//!
//!     cargo run --release --example pretrain_base -- [workdir]

use statelab::harness::{ensure_base, evaluate, RunConfig, Workdir, BASE};
use statelab::policy::load_checkpoint;

fn main() -> statelab::Result<()> {
    let wd = Workdir::new(std::env::args().nth(1).unwrap_or_else(|| "statelab-work".into()));
    let config = RunConfig::default();
    wd.create_dirs()?;
    let steps = ensure_base(&config, &wd)?;
    println!("base checkpoint: {} ({steps} new steps)", wd.checkpoint(BASE).display());
    let base = load_checkpoint(&wd.checkpoint(BASE))?.0;
    for (task, score) in evaluate(&base, &config)? {
        println!("{task:>12}  {score:.3}");
    }
    Ok(())
}
