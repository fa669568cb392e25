//! On-policy distillation from a degraded teacher. The student visits its
//! own states and asks the teacher for short greedy continuations there; the
//! one-step variant matches the teacher's next-token distribution instead.
//!
//!     cargo run --release --example opd_surpasses_teacher -- [workdir]

use statelab::harness::{ensure_base, target_spec, target_train_data, train_stage, RunConfig, Workdir, BASE};
use statelab::policy::{load_checkpoint, save_checkpoint};
use statelab::tasks::score_exact_match;

fn main() -> statelab::Result<()> {
    let wd = Workdir::new(std::env::args().nth(1).unwrap_or_else(|| "statelab-work".into()));
    let config = RunConfig::default();
    wd.create_dirs()?;
    ensure_base(&config, &wd)?;
    let base = load_checkpoint(&wd.checkpoint(BASE))?.0;
    let data = target_train_data(&config)?;
    let score = |p: &statelab::policy::PolicyParams| {
        score_exact_match(p, &target_spec(&config), config.eval.n, config.eval.seed).map(|s| s.score)
    };

    // the OPD stages load their teacher from the workdir by name
    if !wd.checkpoint("sft_stress").exists() {
        let (teacher, opt, _) = train_stage(config.stage("sft_stress").unwrap(), &config, &base, &data, &wd)?;
        save_checkpoint(&teacher, &opt, &wd.checkpoint("sft_stress"))?;
    }
    let teacher = load_checkpoint(&wd.checkpoint("sft_stress"))?.0;
    println!("base        {:.3}", score(&base)?);
    println!("teacher     {:.3}  (stress SFT)", score(&teacher)?);
    for name in ["opd_cont_stress", "opd_onestep_stress"] {
        let (student, _, _) = train_stage(config.stage(name).unwrap(), &config, &base, &data, &wd)?;
        println!("{name:<19} {:.3}", score(&student)?);
    }
    Ok(())
}
