//! Finite-difference check of the analytic gradients of all three losses on
//! a small model.
//!
//!     cargo run --example grad_check

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use statelab::policy::{grad_check, rollout, softmax, Decode, LossBatch, ModelShape, PolicyParams, State};

fn state(rng: &mut impl Rng, v: usize) -> State {
    let prompt = (0..rng.random_range(1..=6)).map(|_| rng.random_range(1..v)).collect();
    let prefix = (0..rng.random_range(0..=5)).map(|_| rng.random_range(1..v)).collect();
    State::new(prompt, prefix).expect("non-empty prompt")
}

fn main() -> statelab::Result<()> {
    let shape = ModelShape::small();
    let v = shape.vocab;
    for seed in 0..5 {
        let p = PolicyParams::init(shape, seed);
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let ce = LossBatch::Ce((0..6).map(|_| (state(&mut rng, v), rng.random_range(1..v))).collect());
        let kl = LossBatch::Kl(
            (0..6)
                .map(|_| {
                    let logits: Vec<f64> = (0..v).map(|_| rng.random_range(-2.0..2.0)).collect();
                    (state(&mut rng, v), softmax(&logits))
                })
                .collect(),
        );
        let mut trajectories = Vec::new();
        for _ in 0..4 {
            trajectories.push(rollout(&p, &[1, 5, 6], 5, Decode::Sample { temperature: 1.0 }, &mut rng)?);
        }
        let pg = LossBatch::Pg { trajectories, advantages: vec![1.0, -0.5, 0.25, -0.75] };
        for batch in [ce, kl, pg] {
            println!("seed {seed} {:<3} max relative error {:.2e}", batch.kind(), grad_check(&p, &batch, 1e-4)?);
        }
    }
    Ok(())
}
