//! The whole experiment for one seed: base model, seven post-training runs,
//! evaluation, drift, and the report. Resumes from whatever the workdir
//! already holds.
//!
//!     cargo run --release --example replicate -- [workdir] [seed]

use statelab::harness::{replicate_pipeline, RunConfig, Workdir};

fn main() -> statelab::Result<()> {
    let mut args = std::env::args().skip(1);
    let wd = Workdir::new(args.next().unwrap_or_else(|| "statelab-work".into()));
    let seed = args.next().map_or(0, |s| s.parse().expect("seed is an integer"));
    let config = RunConfig { seed, ..RunConfig::default() };
    let (outcome, report) = replicate_pipeline(&config, &wd)?;
    print!("{}", report.to_csv());
    println!("trained {:?} ({} steps)", outcome.trained, outcome.training_steps);
    for (run, err) in &outcome.failures {
        println!("failed: {run}: {err}");
    }
    Ok(())
}
