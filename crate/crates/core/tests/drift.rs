mod common;

use std::collections::{BTreeMap, BTreeSet};

use common::*;
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use statelab::drift::*;

#[test]
fn mmd_matches_brute_force_on_random_instances() {
    let mut rng = ChaCha8Rng::seed_from_u64(100);
    for _ in 0..100 {
        let dim = rng.random_range(1..=8);
        let (m, n) = (rng.random_range(2..=10), rng.random_range(2..=10));
        let a = random_vectors(&mut rng, m, dim);
        let b = random_vectors(&mut rng, n, dim);
        let sigma = brute_median_distance(&a, &b);
        let (got, used) = mmd_rbf_vectors(&a, &b, Bandwidth::Auto).unwrap();
        assert!((used - sigma).abs() < 1e-12);
        assert!((got - brute_mmd(&a, &b, sigma)).abs() < 1e-12);
        let fixed = rng.random_range(0.1..3.0);
        let (got, _) = mmd_rbf_vectors(&a, &b, Bandwidth::Fixed(fixed)).unwrap();
        assert!((got - brute_mmd(&a, &b, fixed)).abs() < 1e-12);
        assert!(mmd_rbf_vectors(&a, &a, Bandwidth::Auto).unwrap().0 <= 1e-9);
    }
}

#[test]
fn axis_sliced_w1_matches_cdf_integral() {
    let mut rng = ChaCha8Rng::seed_from_u64(200);
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
        let got = sliced_wasserstein_along(&a, &b, &[e]).unwrap();
        assert!((got - cdf_w1(&pa, &pb)).abs() < 1e-9);
    }
}

#[test]
fn two_point_w1() {
    assert!((wasserstein_1d(&[0.0, 1.0], &[0.5, 2.0]) - 0.75).abs() < 1e-15);
}

fn fnv_by_hand(bytes: &[u8]) -> u64 {
    let mut h: u64 = 14695981039346656037;
    for &b in bytes {
        h ^= b as u64;
        h = h.wrapping_mul(1099511628211);
    }
    h
}

#[test]
fn hashed_features_follow_fnv_buckets() {
    assert_eq!(fnv1a64(b"a"), 0xaf63dc4c8601ec8c);
    let tokens = [24, 25, 24, 5];
    for seed in [0u64, 3, 0xdead] {
        let mut want = [0.0f64; 8];
        let mut bump = |bytes: Vec<u8>| want[((fnv_by_hand(&bytes) ^ seed) % 8) as usize] += 1.0;
        for &t in &tokens {
            bump((t as u64).to_le_bytes().to_vec());
        }
        for w in tokens.windows(2) {
            let mut b = (w[0] as u64).to_le_bytes().to_vec();
            b.extend((w[1] as u64).to_le_bytes());
            bump(b);
        }
        let norm = want.iter().map(|x| x * x).sum::<f64>().sqrt();
        let got = featurize_tokens(&tokens, 8, seed).unwrap();
        for (g, w) in got.iter().zip(want) {
            assert!((g - w / norm).abs() < 1e-15);
        }
    }
}

#[test]
fn jaccard_hand_case() {
    let a: BTreeSet<char> = "abc".chars().collect();
    let b: BTreeSet<char> = "bcd".chars().collect();
    assert_eq!(jaccard_sets(&a, &b), 0.5);
    assert_eq!(jaccard_sets(&a, &a), 0.0);
    assert_eq!(jaccard_sets(&BTreeSet::<char>::new(), &BTreeSet::new()), 0.0);
}

#[test]
fn retention_matches_reference_rows() {
    for ((row, tasks), (row2, forgetting, retention)) in REFERENCE_RETENTION.iter().zip(REFERENCE_SUMMARY) {
        assert_eq!(*row, row2);
        let base: BTreeMap<String, f64> = tasks.iter().map(|t| (t.0.to_string(), t.1)).collect();
        let post: BTreeMap<String, f64> = tasks.iter().map(|t| (t.0.to_string(), t.2)).collect();
        let r = retention_stats(&base, &post).unwrap();
        assert!((r.mean_forgetting - forgetting).abs() < 5e-4, "{row}: {}", r.mean_forgetting);
        assert!((r.mean_retention - retention).abs() < 5e-4, "{row}: {}", r.mean_retention);
    }
}

#[test]
fn zero_base_score_is_flagged() {
    assert!(retention_ratio("copy", 0.0, 0.4).is_err());
    let base: BTreeMap<String, f64> = [("a".into(), 0.0), ("b".into(), 0.5)].into();
    let post: BTreeMap<String, f64> = [("a".into(), 0.1), ("b".into(), 0.25)].into();
    let r = retention_stats(&base, &post).unwrap();
    assert!(r.undefined_ratio);
    assert_eq!(r.mean_retention, 0.5);
}

#[test]
fn identical_samples_have_zero_drift() {
    let toks: Vec<Vec<usize>> = (0..6).map(|i| vec![21, 24 + i, 25, 19]).collect();
    let s = StateSample::from_tokens("m", toks.iter().map(Vec::as_slice), 64, 0, Provenance::default()).unwrap();
    let r = drift_report(&s, &s, &DriftConfig::default()).unwrap();
    assert!(r.mmd <= 1e-9);
    assert_eq!((r.sliced_wasserstein, r.centroid, r.jaccard), (0.0, 0.0, 0.0));
}

proptest! {
    #[test]
    fn features_are_unit_norm(tokens in prop::collection::vec(0usize..40, 1..30), dim in 2usize..300, seed in any::<u64>()) {
        let v = featurize_tokens(&tokens, dim, seed).unwrap();
        prop_assert!((v.iter().map(|x| x * x).sum::<f64>() - 1.0).abs() < 1e-12);
        prop_assert!(v.iter().all(|&x| x >= 0.0));
    }

    #[test]
    fn metrics_are_non_negative_and_symmetric(seed in 0u64..500, n in 2usize..8, dim in 1usize..6) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let a = random_vectors(&mut rng, n, dim);
        let b = random_vectors(&mut rng, n, dim);
        let ab = mmd_rbf_vectors(&a, &b, Bandwidth::Auto).unwrap().0;
        let ba = mmd_rbf_vectors(&b, &a, Bandwidth::Auto).unwrap().0;
        prop_assert!(ab >= 0.0 && (ab - ba).abs() < 1e-12);
        let sw = sliced_wasserstein_vectors(&a, &b, 8, seed).unwrap();
        prop_assert!(sw >= 0.0);
        prop_assert!(centroid_distance_vectors(&a, &b).unwrap() >= 0.0);
    }
}
