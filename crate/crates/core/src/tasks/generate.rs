use std::collections::BTreeMap;

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::spec::*;
use super::verify::solve;
use crate::error::{Error, Result};
use crate::policy::vocab::{TokenId, EOS};

/// splitmix64 finalizer; used to derive independent seed streams.
pub fn mix_seed(a: u64, b: u64) -> u64 {
    let mut z = a ^ b.wrapping_mul(0x9E37_79B9_7F4A_7C15).wrapping_add(0x632B_E59B_D9B9_B3B3);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Which split a prompt belongs to. One prompt in five is held out for
/// evaluation, decided by a hash of the prompt itself, so train and eval
/// never share a prompt whatever the seeds.
pub fn split_of(prompt: &[TokenId]) -> Split {
    let h = prompt
        .iter()
        .fold(0xcbf2_9ce4_8422_2325u64, |h, &t| {
            (h ^ t as u64).wrapping_mul(0x0000_0100_0000_01B3)
        });
    if mix_seed(h, 17).is_multiple_of(5) {
        Split::Eval
    } else {
        Split::Train
    }
}

pub(crate) fn number_tokens(n: usize) -> Vec<TokenId> {
    n.to_string()
        .bytes()
        .map(|b| DIGIT0 + (b - b'0') as usize)
        .collect()
}

fn draw_prompt(kind: TaskKind, d: &Difficulty, rng: &mut ChaCha8Rng) -> Vec<TokenId> {
    let mut prompt = vec![kind.tag()];
    match kind {
        TaskKind::ChainArith => {
            let m = rng.random_range(d.min_operands..=d.max_operands);
            for i in 0..m {
                if i > 0 {
                    prompt.push(PLUS);
                }
                prompt.push(DIGIT0 + rng.random_range(0..=d.max_digit));
            }
            prompt.push(EQUALS);
        }
        TaskKind::Copy | TaskKind::Reverse | TaskKind::Count => {
            let len = rng.random_range(d.min_len..=d.max_len);
            for _ in 0..len {
                prompt.push(LETTER0 + rng.random_range(0..LETTERS));
            }
            prompt.push(ARROW);
        }
    }
    prompt
}

fn example_for(kind: TaskKind, prompt: Vec<TokenId>) -> Example {
    let mut gold = solve(&prompt)
        .expect("generated prompts are well formed")
        .derivation;
    gold.push(EOS);
    Example { kind, prompt, gold }
}

fn draw_example(spec: &TaskSpec, split: Split, rng: &mut ChaCha8Rng) -> Example {
    loop {
        let prompt = draw_prompt(spec.kind, &spec.difficulty, rng);
        if split_of(&prompt) == split {
            return example_for(spec.kind, prompt);
        }
    }
}

fn stream(spec: &TaskSpec, split: Split, seed: u64) -> ChaCha8Rng {
    let split_id = match split {
        Split::Train => 1,
        Split::Eval => 2,
    };
    let s = mix_seed(mix_seed(mix_seed(spec.seed, spec.kind as u64), split_id), seed);
    ChaCha8Rng::seed_from_u64(s)
}

/// `n` examples of one task, deterministic in `(spec, split, n, seed)`.
/// Sampling is with replacement.
pub fn gen_examples(spec: &TaskSpec, split: Split, n: usize, seed: u64) -> Result<Vec<Example>> {
    if n == 0 {
        return Err(Error::InvalidArgument("gen_examples needs n ≥ 1".into()));
    }
    spec.difficulty.validate()?;
    let mut rng = stream(spec, split, seed);
    Ok((0..n).map(|_| draw_example(spec, split, &mut rng)).collect())
}

pub type MixtureWeights = BTreeMap<TaskKind, f64>;

pub fn default_mixture() -> MixtureWeights {
    [
        (TaskKind::Copy, 0.3),
        (TaskKind::Reverse, 0.3),
        (TaskKind::Count, 0.3),
        (TaskKind::ChainArith, 0.1),
    ]
    .into_iter()
    .collect()
}

/// Pretraining corpus: each example's task is drawn from the categorical
/// distribution given by `weights` (a multinomial allocation of `n_total`).
pub fn gen_pretrain_mixture(
    weights: &MixtureWeights,
    difficulty: &Difficulty,
    n_total: usize,
    seed: u64,
) -> Result<Vec<Example>> {
    if weights.values().any(|&w| !(w >= 0.0) || !w.is_finite()) {
        return Err(Error::InvalidArgument("mixture weights must be finite and ≥ 0".into()));
    }
    let total: f64 = weights.values().sum();
    if !(total > 0.0) {
        return Err(Error::InvalidArgument("mixture weights sum to zero".into()));
    }
    difficulty.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(mix_seed(seed, 0x6d69_7874));
    let kinds: Vec<(TaskKind, f64)> = weights.iter().map(|(&k, &w)| (k, w)).collect();
    let mut out = Vec::with_capacity(n_total);
    for _ in 0..n_total {
        let mut u = rng.random::<f64>() * total;
        let mut kind = kinds.last().unwrap().0;
        for &(k, w) in &kinds {
            if w > 0.0 && u < w {
                kind = k;
                break;
            }
            u -= w;
        }
        let spec = TaskSpec {
            kind,
            difficulty: *difficulty,
            seed: 0,
        };
        out.push(draw_example(&spec, Split::Train, &mut rng));
    }
    Ok(out)
}
