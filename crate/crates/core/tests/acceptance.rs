//! One pass/fail line per acceptance criterion. Runs the full five-seed
//! pipeline, so expect several minutes.

mod common;

use std::collections::BTreeMap;
use std::time::Instant;

use common::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use statelab::drift::{mmd_rbf_vectors, retention_stats, sliced_wasserstein_along, Bandwidth};
use statelab::harness::{replicate_pipeline, target_train_data, Report, RunConfig, Workdir, BASE};
use statelab::policy::*;
use statelab::trainers::{bandit_probe, train_preset, Preset, TrainerConfig, BANDIT_LR};

const SEEDS: u64 = 5;

struct Line {
    id: usize,
    pass: bool,
    detail: String,
    secs: f64,
}

fn check(id: usize, f: impl FnOnce() -> (bool, String)) -> Line {
    let t = Instant::now();
    let (pass, detail) = f();
    let line = Line { id, pass, detail, secs: t.elapsed().as_secs_f64() };
    println!(
        "criterion {:>2}: {} ({:.1}s) {}",
        line.id,
        if line.pass { "PASS" } else { "FAIL" },
        line.secs,
        line.detail
    );
    line
}

fn gradients() -> (bool, String) {
    let mut worst = 0.0f64;
    for seed in 0..20 {
        let p = small_params(seed);
        for batch in [ce_batch(seed), kl_batch(seed), pg_batch(&p, seed)] {
            worst = worst.max(grad_check(&p, &batch, FD_EPSILON).unwrap());
        }
    }
    (worst <= FD_TOLERANCE, format!("max relative FD error {worst:.2e} over 20 seeds x CE/KL/PG"))
}

fn mmd_oracle() -> (bool, String) {
    let mut rng = ChaCha8Rng::seed_from_u64(100);
    let (mut worst, mut self_worst) = (0.0f64, 0.0f64);
    for _ in 0..100 {
        let dim = rng.random_range(1..=8);
        let (m, n) = (rng.random_range(2..=10), rng.random_range(2..=10));
        let a = random_vectors(&mut rng, m, dim);
        let b = random_vectors(&mut rng, n, dim);
        let (got, sigma) = mmd_rbf_vectors(&a, &b, Bandwidth::Auto).unwrap();
        worst = worst.max((got - brute_mmd(&a, &b, sigma)).abs());
        worst = worst.max((sigma - brute_median_distance(&a, &b)).abs());
        self_worst = self_worst.max(mmd_rbf_vectors(&a, &a, Bandwidth::Auto).unwrap().0);
    }
    (worst <= 1e-12 && self_worst <= 1e-9, format!("max |diff| {worst:.1e}, max MMD(A,A) {self_worst:.1e}"))
}

fn sliced_oracle() -> (bool, String) {
    let mut rng = ChaCha8Rng::seed_from_u64(200);
    let mut worst = 0.0f64;
    for _ in 0..100 {
        let dim = rng.random_range(1..=6);
        let n = rng.random_range(1..=12);
        let a = random_vectors(&mut rng, n, dim);
        let b = random_vectors(&mut rng, n, dim);
        let axis = rng.random_range(0..dim);
        let mut e = vec![0.0; dim];
        e[axis] = 1.0;
        let pa: Vec<f64> = a.iter().map(|v| v[axis]).collect();
        let pb: Vec<f64> = b.iter().map(|v| v[axis]).collect();
        worst = worst.max((sliced_wasserstein_along(&a, &b, &[e]).unwrap() - cdf_w1(&pa, &pb)).abs());
    }
    (worst <= 1e-9, format!("max |diff| {worst:.1e}"))
}

fn retention_arithmetic() -> (bool, String) {
    let mut ok = true;
    let mut parts = Vec::new();
    for ((row, tasks), (_, forgetting, retention)) in REFERENCE_RETENTION.iter().zip(REFERENCE_SUMMARY) {
        let base: BTreeMap<String, f64> = tasks.iter().map(|t| (t.0.to_string(), t.1)).collect();
        let post: BTreeMap<String, f64> = tasks.iter().map(|t| (t.0.to_string(), t.2)).collect();
        let r = retention_stats(&base, &post).unwrap();
        ok &= (r.mean_forgetting - forgetting).abs() <= 5e-4 && (r.mean_retention - retention).abs() <= 5e-4;
        if matches!(*row, "mild_sft" | "stress_sft") {
            parts.push(format!("{row} {:.4}/{:.4}", r.mean_forgetting, r.mean_retention));
        }
    }
    (ok, parts.join(", "))
}

fn one_hot_kl() -> (bool, String) {
    let mut rng = ChaCha8Rng::seed_from_u64(50);
    let p = PolicyParams::init(ModelShape::default(), 50);
    let mut worst = 0.0f64;
    for _ in 0..50 {
        let s = random_state(&mut rng, 40);
        let t = rng.random_range(1..40);
        let mut onehot = vec![0.0; 40];
        onehot[t] = 1.0;
        let kl = kl_loss_and_grad(&p, &[(s.clone(), onehot)]).unwrap();
        let ce = ce_loss_and_grad(&p, &[(s, t)]).unwrap();
        worst = worst.max((kl.loss - ce.loss).abs());
        worst = kl.grad.iter().zip(ce.grad.iter()).fold(worst, |w, (a, b)| w.max((a - b).abs()));
    }
    (worst <= 1e-9, format!("max |diff| {worst:.1e} over 50 items"))
}

/// Mean of the first and last 50 objective values (the windows overlap when
/// a run is shorter than 100 steps).
fn first_last(obj: &[f64]) -> (f64, f64) {
    let w = 50.min(obj.len());
    let mean = |v: &[f64]| v.iter().sum::<f64>() / v.len() as f64;
    (mean(&obj[..w]), mean(&obj[obj.len() - w..]))
}

fn trainer_mechanics(wd: &Workdir) -> (bool, String) {
    let config = RunConfig::default();
    let base = load_checkpoint(&wd.checkpoint(BASE)).unwrap().0;
    let teacher = load_checkpoint(&wd.checkpoint("sft_mild")).unwrap().0;
    let data = target_train_data(&config).unwrap();
    let mut ok = true;
    let mut parts = Vec::new();
    for preset in Preset::ALL {
        let out = train_preset(&TrainerConfig::preset(preset), base.clone(), Some(&teacher), &data).unwrap();
        let (first, last) = first_last(&out.log.objective());
        ok &= last < first;
        parts.push(format!("{preset} {first:.3}->{last:.3}"));
    }
    let probe = bandit_probe(BANDIT_LR, 300, 0).unwrap();
    let hit = probe.first_above(0.9);
    ok &= hit.is_some();
    parts.push(format!("bandit pi>0.9 at step {}", hit.map_or("never".into(), |s| s.to_string())));
    (ok, parts.join("; "))
}

fn target(r: &Report, run: &str) -> f64 {
    r.row(run).and_then(|x| x.target).unwrap_or(f64::NAN)
}

fn retention(r: &Report, run: &str) -> f64 {
    r.row(run).and_then(|x| x.retention).unwrap_or(f64::NAN)
}

fn directional(reports: &[Report], holds: impl Fn(&Report) -> bool) -> (bool, String) {
    let flags: Vec<bool> = reports.iter().map(holds).collect();
    let n = flags.iter().filter(|&&f| f).count();
    let per_seed: String = flags.iter().map(|&f| if f { '+' } else { '-' }).collect();
    (n >= 4, format!("{n}/{} seeds [{per_seed}]", reports.len()))
}

fn main() {
    let root = tempfile::tempdir().unwrap();
    let mut lines = vec![
        check(1, gradients),
        check(2, mmd_oracle),
        check(3, sliced_oracle),
        check(4, retention_arithmetic),
        check(5, one_hot_kl),
    ];

    let t = Instant::now();
    let mut reports = Vec::new();
    for seed in 0..SEEDS {
        let config = RunConfig { seed, ..RunConfig::default() };
        let (outcome, report) = replicate_pipeline(&config, &Workdir::new(root.path().join(format!("seed{seed}")))).unwrap();
        assert!(outcome.failures.is_empty(), "seed {seed}: {:?}", outcome.failures);
        reports.push(report);
    }
    println!("pipeline: {SEEDS} seeds in {:.0}s", t.elapsed().as_secs_f64());

    lines.push(check(6, || trainer_mechanics(&Workdir::new(root.path().join("seed0")))));
    lines.push(check(7, || directional(&reports, |r| retention(r, "sft_stress") < retention(r, "sft_mild"))));
    lines.push(check(8, || directional(&reports, |r| target(r, "opd_cont_stress") >= target(r, "sft_stress"))));
    lines.push(check(9, || {
        directional(&reports, |r| target(r, "opd_onestep_stress") <= target(r, "opd_cont_stress"))
    }));
    lines.push(check(10, || {
        directional(&reports, |r| target(r, "rl_grpo") > target(r, BASE) && retention(r, "rl_grpo") >= 0.95)
    }));
    lines.push(check(11, || {
        let fresh = Workdir::new(root.path().join("seed0-again"));
        replicate_pipeline(&RunConfig::default(), &fresh).unwrap();
        let a = std::fs::read(Workdir::new(root.path().join("seed0")).report_csv()).unwrap();
        let b = std::fs::read(fresh.report_csv()).unwrap();
        (a == b, format!("report.csv {} bytes, identical: {}", a.len(), a == b))
    }));

    let failed: Vec<usize> = lines.iter().filter(|l| !l.pass).map(|l| l.id).collect();
    println!("acceptance: {}/{} criteria pass", lines.len() - failed.len(), lines.len());
    if !failed.is_empty() {
        eprintln!("failed criteria: {failed:?}");
        std::process::exit(1);
    }
}
