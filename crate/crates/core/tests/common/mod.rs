//! Fixtures and independent reference implementations shared by the
//! integration tests. Nothing here calls the code under test for the value
//! it is checking.
#![allow(dead_code)]

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use statelab::policy::{
    rollout, softmax, Decode, LossBatch, ModelShape, PolicyParams, State, TokenId, PAD,
};

pub const FD_EPSILON: f64 = 1e-4;
pub const FD_TOLERANCE: f64 = 1e-4;

/// Small-shape parameters with non-zero biases so every path carries
/// gradient.
pub fn small_params(seed: u64) -> PolicyParams {
    let mut p = PolicyParams::init(ModelShape::small(), seed);
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0xb1a5);
    p.b1.iter_mut().for_each(|b| *b = rng.random_range(-0.5..0.5));
    p.b2.iter_mut().for_each(|b| *b = rng.random_range(-0.5..0.5));
    p
}

pub fn random_tokens(rng: &mut impl Rng, vocab: usize, len: usize) -> Vec<TokenId> {
    (0..len).map(|_| rng.random_range(1..vocab)).collect()
}

/// Prompt of 1..=6 tokens and prefix of 0..=5 tokens, none PAD.
pub fn random_state(rng: &mut impl Rng, vocab: usize) -> State {
    let pl = rng.random_range(1..=6);
    let xl = rng.random_range(0..=5);
    State::new(random_tokens(rng, vocab, pl), random_tokens(rng, vocab, xl)).unwrap()
}

pub fn random_distribution(rng: &mut impl Rng, vocab: usize) -> Vec<f64> {
    let logits: Vec<f64> = (0..vocab).map(|_| rng.random_range(-2.0..2.0)).collect();
    softmax(&logits)
}

pub fn ce_batch(seed: u64) -> LossBatch {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let v = ModelShape::small().vocab;
    LossBatch::Ce((0..6).map(|_| (random_state(&mut rng, v), rng.random_range(1..v))).collect())
}

pub fn kl_batch(seed: u64) -> LossBatch {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let v = ModelShape::small().vocab;
    LossBatch::Kl((0..6).map(|_| (random_state(&mut rng, v), random_distribution(&mut rng, v))).collect())
}

pub fn pg_batch(params: &PolicyParams, seed: u64) -> LossBatch {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let v = params.shape.vocab;
    let mut trajectories = Vec::new();
    let mut advantages = Vec::new();
    for _ in 0..4 {
        let prompt = random_tokens(&mut rng, v, 3);
        trajectories.push(rollout(params, &prompt, 5, Decode::Sample { temperature: 1.0 }, &mut rng).unwrap());
        advantages.push(rng.random_range(-1.5..1.5));
    }
    LossBatch::Pg { trajectories, advantages }
}

/// Straight-line forward pass, written without the library's helpers.
pub fn reference_logits(p: &PolicyParams, state: &State) -> Vec<f64> {
    let ModelShape { vocab, context, embed_dim, hidden } = p.shape;
    let seq: Vec<TokenId> = state.prompt().iter().chain(state.prefix()).copied().collect();
    let mut window = vec![PAD; context];
    for i in 0..context.min(seq.len()) {
        window[context - 1 - i] = seq[seq.len() - 1 - i];
    }
    let mut x = vec![0.0; context * embed_dim];
    for (pos, &tok) in window.iter().enumerate() {
        for d in 0..embed_dim {
            x[pos * embed_dim + d] = p.embed[tok * embed_dim + d];
        }
    }
    let mut h = vec![0.0; hidden];
    for j in 0..hidden {
        let mut acc = p.b1[j];
        for i in 0..x.len() {
            acc += p.w1[j * x.len() + i] * x[i];
        }
        h[j] = acc.tanh();
    }
    let mut out = vec![0.0; vocab];
    for v in 0..vocab {
        let mut acc = p.b2[v];
        for j in 0..hidden {
            acc += p.w2[v * hidden + j] * h[j];
        }
        out[v] = acc;
    }
    out
}

/// Biased MMD² V-statistic as an explicit triple of double sums, returned
/// as √max(0, ·).
pub fn brute_mmd(a: &[Vec<f64>], b: &[Vec<f64>], sigma: f64) -> f64 {
    let k = |x: &[f64], y: &[f64]| {
        let mut d2 = 0.0;
        for i in 0..x.len() {
            d2 += (x[i] - y[i]) * (x[i] - y[i]);
        }
        (-d2 / (2.0 * sigma * sigma)).exp()
    };
    let (m, n) = (a.len() as f64, b.len() as f64);
    let mut xx = 0.0;
    for i in a {
        for j in a {
            xx += k(i, j);
        }
    }
    let mut yy = 0.0;
    for i in b {
        for j in b {
            yy += k(i, j);
        }
    }
    let mut xy = 0.0;
    for i in a {
        for j in b {
            xy += k(i, j);
        }
    }
    (xx / (m * m) + yy / (n * n) - 2.0 * xy / (m * n)).max(0.0).sqrt()
}

/// Median of all pairwise Euclidean distances in the pooled sample.
pub fn brute_median_distance(a: &[Vec<f64>], b: &[Vec<f64>]) -> f64 {
    let pooled: Vec<&Vec<f64>> = a.iter().chain(b).collect();
    let mut d = Vec::new();
    for i in 0..pooled.len() {
        for j in 0..i {
            d.push(pooled[i].iter().zip(pooled[j]).map(|(x, y)| (x - y) * (x - y)).sum::<f64>().sqrt());
        }
    }
    d.sort_by(|x, y| x.partial_cmp(y).unwrap());
    let n = d.len();
    if n % 2 == 1 {
        d[n / 2]
    } else {
        (d[n / 2 - 1] + d[n / 2]) / 2.0
    }
}

/// W1 between two empirical 1-D samples as ∫|F_a − F_b|, integrated exactly
/// over the merged breakpoints.
pub fn cdf_w1(a: &[f64], b: &[f64]) -> f64 {
    let mut pts: Vec<f64> = a.iter().chain(b).copied().collect();
    pts.sort_by(|x, y| x.partial_cmp(y).unwrap());
    let cdf = |s: &[f64], t: f64| s.iter().filter(|&&x| x <= t).count() as f64 / s.len() as f64;
    pts.windows(2).map(|w| (cdf(a, w[0]) - cdf(b, w[0])).abs() * (w[1] - w[0])).sum()
}

pub fn random_vectors(rng: &mut impl Rng, n: usize, dim: usize) -> Vec<Vec<f64>> {
    (0..n).map(|_| (0..dim).map(|_| rng.random_range(-1.0..1.0)).collect()).collect()
}

/// Reference base/post retention scores: (row, [(task, base, post)]).
pub const REFERENCE_RETENTION: [(&str, [(&str, f64, f64); 2]); 5] = [
    ("mild_sft", [("truthfulqa", 0.300, 0.295), ("mmlu", 0.436, 0.444)]),
    ("stress_sft", [("truthfulqa", 0.300, 0.245), ("mmlu", 0.436, 0.364)]),
    ("opd_mild", [("truthfulqa", 0.300, 0.290), ("mmlu", 0.436, 0.434)]),
    ("opd_stress", [("truthfulqa", 0.300, 0.275), ("mmlu", 0.436, 0.430)]),
    ("rl", [("truthfulqa", 0.300, 0.290), ("mmlu", 0.436, 0.442)]),
];

/// Reference (mean forgetting, mean retention) for the same rows.
pub const REFERENCE_SUMMARY: [(&str, f64, f64); 5] = [
    ("mild_sft", -0.0015, 1.0008),
    ("stress_sft", 0.0635, 0.8258),
    ("opd_mild", 0.0060, 0.9810),
    ("opd_stress", 0.0155, 0.9515),
    ("rl", 0.0020, 0.9902),
];
