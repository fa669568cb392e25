//! Group-relative policy gradient on a one-step bandit: a three-token
//! vocabulary where only EOS earns reward. Prints the learning curve.
//!
//!     cargo run --release --example grpo_bandit

use statelab::trainers::{bandit_probe, BANDIT_LR};

fn main() -> statelab::Result<()> {
    let probe = bandit_probe(BANDIT_LR, 300, 0)?;
    for (step, (p, r)) in probe.reward_prob.iter().zip(&probe.mean_rewards).enumerate() {
        if step % 25 == 0 || step + 1 == probe.reward_prob.len() {
            let bar = "#".repeat((p * 40.0).round() as usize);
            println!("step {step:>3}  pi(reward) {p:.3}  batch reward {r:.2}  {bar}");
        }
    }
    match probe.first_above(0.9) {
        Some(s) => println!("pi(reward) > 0.9 from step {s}"),
        None => println!("pi(reward) stayed below 0.9"),
    }
    Ok(())
}
