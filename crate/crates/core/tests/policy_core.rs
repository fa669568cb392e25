mod common;

use common::*;
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use statelab::policy::sampling::sample_from_logits;
use statelab::policy::*;

#[test]
fn forward_matches_straight_line_reference() {
    let p = PolicyParams::init(ModelShape::default(), 7);
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    for len in [1, 5, 16, 30] {
        let s = State::new(random_tokens(&mut rng, 40, len), random_tokens(&mut rng, 40, 3)).unwrap();
        let got = forward_logits(&p, &s).unwrap();
        let want = reference_logits(&p, &s);
        for (g, w) in got.iter().zip(&want) {
            assert!((g - w).abs() < 1e-12, "{g} vs {w}");
        }
    }
}

#[test]
fn zero_params_log_prob_is_minus_ln_v() {
    let p = PolicyParams::zeros(ModelShape::default());
    let s = State::from_prompt(vec![5, 6]).unwrap();
    for t in 1..40 {
        assert!((log_prob(&p, &s, t).unwrap() + 40f64.ln()).abs() < 1e-12);
    }
    assert!((-40f64.ln() - -3.68888).abs() < 1e-5);
}

#[test]
fn huge_logit_matches_exact_three_token_arithmetic() {
    let lp = statelab::policy::model::log_softmax(&[1000.0, 0.0, 0.0]);
    // log(1 / (1 + 2e−1000)) ≈ −2e−1000, which is 0 in f64
    assert_eq!(lp[0], 0.0);
    assert!((lp[1] + 1000.0).abs() < 1e-9);
}

#[test]
fn sampling_frequencies_within_three_sigma() {
    // PAD slot first; the remaining three tokens carry the distribution
    let logits = [5.0, 0.3, -0.4, 1.1];
    let z: f64 = logits[1..].iter().map(|l: &f64| l.exp()).sum();
    let probs: Vec<f64> = logits[1..].iter().map(|l| l.exp() / z).collect();
    let n = 10_000;
    let mut counts = [0usize; 4];
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    for _ in 0..n {
        counts[sample_from_logits(&logits, 1.0, &mut rng).unwrap()] += 1;
    }
    assert_eq!(counts[PAD], 0);
    for (i, &p) in probs.iter().enumerate() {
        let mean = n as f64 * p;
        let sd = (n as f64 * p * (1.0 - p)).sqrt();
        assert!((counts[i + 1] as f64 - mean).abs() <= 3.0 * sd, "token {}: {} vs {mean}", i + 1, counts[i + 1]);
    }
}

#[test]
fn recorded_log_probs_match_rescoring() {
    let p = PolicyParams::init(ModelShape::default(), 3);
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    for _ in 0..20 {
        let prompt = random_tokens(&mut rng, 40, 4);
        let t = rollout(&p, &prompt, 20, Decode::Sample { temperature: 1.3 }, &mut rng).unwrap();
        let rescored = score_sequence(&p, &prompt, &t.actions).unwrap();
        assert!((t.total_log_prob() - rescored).abs() < 1e-9);
    }
}

#[test]
fn always_eos_policy_terminates_immediately() {
    let mut p = PolicyParams::zeros(ModelShape::default());
    p.b2[EOS] = 50.0;
    let mut rng = ChaCha8Rng::seed_from_u64(0);
    for mode in [Decode::Greedy, Decode::Sample { temperature: 1.0 }] {
        let t = rollout(&p, &[7, 8], 10, mode, &mut rng).unwrap();
        assert_eq!((t.horizon(), t.terminated, t.actions[0]), (1, true, EOS));
    }
}

#[test]
fn greedy_rollouts_repeat() {
    let p = PolicyParams::init(ModelShape::default(), 9);
    let mut r1 = ChaCha8Rng::seed_from_u64(1);
    let mut r2 = ChaCha8Rng::seed_from_u64(99);
    let a = rollout(&p, &[6, 7, 8], 32, Decode::Greedy, &mut r1).unwrap();
    let b = rollout(&p, &[6, 7, 8], 32, Decode::Greedy, &mut r2).unwrap();
    assert_eq!(a, b);
}

#[test]
fn gradients_match_finite_differences_on_twenty_seeds() {
    for seed in 0..20 {
        let p = small_params(seed);
        for batch in [ce_batch(seed), kl_batch(seed), pg_batch(&p, seed)] {
            let err = grad_check(&p, &batch, FD_EPSILON).unwrap();
            assert!(err <= FD_TOLERANCE, "seed {seed} {}: {err}", batch.kind());
        }
    }
}

#[test]
fn named_grad_check_cases() {
    assert!(grad_check(&small_params(3), &ce_batch(3), FD_EPSILON).unwrap() <= FD_TOLERANCE);
    let p = small_params(5);
    assert!(grad_check(&p, &pg_batch(&p, 5), FD_EPSILON).unwrap() <= FD_TOLERANCE);
    // teacher = student: both derivatives vanish and the floor applies
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    let items: Vec<_> = (0..4)
        .map(|_| {
            let s = random_state(&mut rng, 12);
            let t = softmax(&forward_logits(&p, &s).unwrap());
            (s, t)
        })
        .collect();
    assert!(grad_check(&p, &LossBatch::Kl(items), FD_EPSILON).unwrap() <= FD_TOLERANCE);
}

#[test]
fn one_hot_kl_equals_ce() {
    let mut rng = ChaCha8Rng::seed_from_u64(50);
    let p = PolicyParams::init(ModelShape::default(), 50);
    for _ in 0..50 {
        let s = random_state(&mut rng, 40);
        let t = rng.random_range(1..40);
        let mut onehot = vec![0.0; 40];
        onehot[t] = 1.0;
        let kl = kl_loss_and_grad(&p, &[(s.clone(), onehot)]).unwrap();
        let ce = ce_loss_and_grad(&p, &[(s, t)]).unwrap();
        assert!((kl.loss - ce.loss).abs() < 1e-9);
        for (a, b) in kl.grad.iter().zip(ce.grad.iter()) {
            assert!((a - b).abs() < 1e-9);
        }
    }
}

#[test]
fn adam_first_step_is_minus_lr() {
    let mut p = PolicyParams::zeros(ModelShape { vocab: 3, context: 1, embed_dim: 1, hidden: 1 });
    let mut opt = OptimizerState::new(&p, AdamConfig::with_lr(0.01));
    let mut g = p.zeros_like();
    g.b2[1] = 1.0;
    opt.apply(&mut p, &GradBundle { loss: 0.0, grad: g }).unwrap();
    assert!((p.b2[1] + 0.01 / (1.0 + 1e-8)).abs() < 1e-15);
}

fn arb_state() -> impl Strategy<Value = State> {
    (prop::collection::vec(1usize..40, 1..10), prop::collection::vec(1usize..40, 0..10))
        .prop_map(|(p, x)| State::new(p, x).unwrap())
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn softmax_is_normalized(seed in 0u64..1000, s in arb_state()) {
        let p = PolicyParams::init(ModelShape::default(), seed);
        let pi = softmax(&forward_logits(&p, &s).unwrap());
        prop_assert!((pi.iter().sum::<f64>() - 1.0).abs() < 1e-9);
        prop_assert!(pi.iter().all(|&x| x >= 0.0));
    }

    #[test]
    fn trajectory_invariants(seed in 0u64..1000, prompt in prop::collection::vec(1usize..40, 1..8), max_len in 1usize..32, temp in 0.0f64..2.0) {
        let p = PolicyParams::init(ModelShape::default(), seed);
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let t = rollout(&p, &prompt, max_len, Decode::from_temperature(temp), &mut rng).unwrap();
        prop_assert_eq!(t.actions.len(), t.log_probs.len());
        prop_assert!(t.horizon() <= max_len);
        prop_assert!(t.log_probs.iter().all(|&l| l <= 0.0));
        prop_assert!(!t.actions.contains(&PAD));
        if t.terminated {
            prop_assert_eq!(*t.actions.last().unwrap(), EOS);
        }
        prop_assert_eq!(t.states().unwrap().len(), t.horizon());
    }

    #[test]
    fn pg_is_linear_in_advantages(seed in 0u64..200) {
        let p = small_params(seed);
        let LossBatch::Pg { trajectories, advantages } = pg_batch(&p, seed) else { unreachable!() };
        let g = pg_loss_and_grad(&p, &trajectories, &advantages).unwrap();
        let neg: Vec<f64> = advantages.iter().map(|a| -a).collect();
        let gn = pg_loss_and_grad(&p, &trajectories, &neg).unwrap();
        prop_assert!(g.grad.iter().zip(gn.grad.iter()).all(|(a, b)| a == -b));
        let zero = pg_loss_and_grad(&p, &trajectories, &vec![0.0; advantages.len()]).unwrap();
        prop_assert_eq!(zero.max_abs(), 0.0);
    }

    #[test]
    fn checkpoint_round_trip_is_bit_exact(seed in 0u64..1000, steps in 0usize..3) {
        let mut p = small_params(seed);
        let mut opt = OptimizerState::new(&p, AdamConfig::with_lr(1e-2));
        for i in 0..steps {
            let g = ce_batch(seed + i as u64).evaluate(&p).unwrap();
            opt.apply(&mut p, &g).unwrap();
        }
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("c.ckpt");
        save_checkpoint(&p, &opt, &path).unwrap();
        let (p2, o2) = load_checkpoint(&path).unwrap();
        prop_assert!(p.iter().zip(p2.iter()).all(|(a, b)| a.to_bits() == b.to_bits()));
        // hyperparameters are not part of the format
        let bits = |x: &PolicyParams| x.iter().map(f64::to_bits).collect::<Vec<_>>();
        prop_assert_eq!(opt.t, o2.t);
        prop_assert_eq!(bits(&opt.m), bits(&o2.m));
        prop_assert_eq!(bits(&opt.v), bits(&o2.v));
    }
}
