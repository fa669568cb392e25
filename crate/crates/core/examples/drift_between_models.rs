//! Rollout-state drift of each SFT model away from the base model on the
//! fixed drift prompt set.
//!
//!     cargo run --release --example drift_between_models -- [workdir]

use statelab::drift::{drift_report, sample_from_records, Bandwidth, DriftConfig, DriftReport};
use statelab::harness::{collect_run_states, ensure_base, target_train_data, train_stage, RunConfig, Workdir, BASE};
use statelab::policy::{load_checkpoint, PolicyParams};

fn main() -> statelab::Result<()> {
    let wd = Workdir::new(std::env::args().nth(1).unwrap_or_else(|| "statelab-work".into()));
    let config = RunConfig::default();
    wd.create_dirs()?;
    ensure_base(&config, &wd)?;
    let base = load_checkpoint(&wd.checkpoint(BASE))?.0;
    let data = target_train_data(&config)?;
    let d = &config.drift;
    let sample = |p: &PolicyParams, run: &str| {
        sample_from_records(&collect_run_states(p, run, &config)?, d.feature_dim, d.hash_seed, "drift", config.seed)
    };
    let cfg = DriftConfig { bandwidth: Bandwidth::Auto, projections: d.projections, projection_seed: d.projection_seed };

    let base_states = sample(&base, BASE)?;
    println!("{}", DriftReport::CSV_HEADER);
    println!("{}", drift_report(&base_states, &base_states, &cfg)?.csv_row());
    for name in ["sft_mild", "sft_stress"] {
        let (params, _, _) = train_stage(config.stage(name).unwrap(), &config, &base, &data, &wd)?;
        println!("{}", drift_report(&base_states, &sample(&params, name)?, &cfg)?.csv_row());
    }
    Ok(())
}
