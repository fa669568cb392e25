//! Two-sample distances between state samples.

use rand::seq::IndexedRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use super::features::StateSample;
use crate::error::{Error, Result};

const SIGMA_FLOOR: f64 = 1e-6;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Bandwidth {
    /// Median pairwise distance of the pooled sample.
    Auto,
    Fixed(f64),
}

fn sq_dist(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum()
}

fn check_dims(a: &[Vec<f64>], b: &[Vec<f64>]) -> Result<()> {
    let d = a.first().or(b.first()).map_or(0, Vec::len);
    if a.iter().chain(b).any(|v| v.len() != d) {
        return Err(Error::InvalidArgument("feature vectors differ in dimension".into()));
    }
    Ok(())
}

/// Median of all pairwise Euclidean distances over `a ∪ b`, floored.
pub fn median_bandwidth(a: &[Vec<f64>], b: &[Vec<f64>]) -> f64 {
    let pooled: Vec<&Vec<f64>> = a.iter().chain(b).collect();
    let mut d = Vec::with_capacity(pooled.len() * pooled.len().saturating_sub(1) / 2);
    for i in 0..pooled.len() {
        for j in i + 1..pooled.len() {
            d.push(sq_dist(pooled[i], pooled[j]).sqrt());
        }
    }
    if d.is_empty() {
        return SIGMA_FLOOR;
    }
    d.sort_by(f64::total_cmp);
    let n = d.len();
    let med = if n % 2 == 1 {
        d[n / 2]
    } else {
        0.5 * (d[n / 2 - 1] + d[n / 2])
    };
    med.max(SIGMA_FLOOR)
}

fn resolve_sigma(a: &[Vec<f64>], b: &[Vec<f64>], bw: Bandwidth) -> Result<f64> {
    match bw {
        Bandwidth::Auto => Ok(median_bandwidth(a, b)),
        Bandwidth::Fixed(s) if s > 0.0 && s.is_finite() => Ok(s),
        Bandwidth::Fixed(s) => Err(Error::InvalidArgument(format!("bandwidth must be > 0, got {s}"))),
    }
}

fn mean_kernel(x: &[Vec<f64>], y: &[Vec<f64>], gamma: f64) -> f64 {
    let mut s = 0.0;
    for u in x {
        for v in y {
            s += (-sq_dist(u, v) * gamma).exp();
        }
    }
    s / (x.len() * y.len()) as f64
}

/// RBF-kernel MMD (biased V-statistic), returned as `√max(0, MMD²)`, and the
/// bandwidth used.
pub fn mmd_rbf_vectors(a: &[Vec<f64>], b: &[Vec<f64>], bw: Bandwidth) -> Result<(f64, f64)> {
    if a.len() < 2 || b.len() < 2 {
        return Err(Error::InvalidArgument(format!(
            "MMD needs at least 2 vectors per sample, got {} and {}",
            a.len(),
            b.len()
        )));
    }
    check_dims(a, b)?;
    let sigma = resolve_sigma(a, b, bw)?;
    let gamma = 1.0 / (2.0 * sigma * sigma);
    let m2 = mean_kernel(a, a, gamma) + mean_kernel(b, b, gamma) - 2.0 * mean_kernel(a, b, gamma);
    Ok((m2.max(0.0).sqrt(), sigma))
}

pub fn mmd_rbf(a: &StateSample, b: &StateSample, bw: Bandwidth) -> Result<f64> {
    Ok(mmd_rbf_vectors(&a.vectors, &b.vectors, bw)?.0)
}

/// `P` unit directions from normalized standard Gaussians.
pub fn random_directions(dim: usize, p: usize, seed: u64) -> Vec<Vec<f64>> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut out = Vec::with_capacity(p);
    while out.len() < p {
        let v: Vec<f64> = (0..dim).map(|_| StandardNormal.sample(&mut rng)).collect();
        let n = v.iter().map(|x| x * x).sum::<f64>().sqrt();
        if n > 0.0 {
            out.push(v.into_iter().map(|x| x / n).collect());
        }
    }
    out
}

/// Exact 1-D Wasserstein-1 between equal-size empirical samples.
pub fn wasserstein_1d(a: &[f64], b: &[f64]) -> f64 {
    let mut a = a.to_vec();
    let mut b = b.to_vec();
    a.sort_by(f64::total_cmp);
    b.sort_by(f64::total_cmp);
    a.iter().zip(&b).map(|(x, y)| (x - y).abs()).sum::<f64>() / a.len() as f64
}

/// Sliced W1 along explicit directions. Samples must have equal size.
pub fn sliced_wasserstein_along(a: &[Vec<f64>], b: &[Vec<f64>], dirs: &[Vec<f64>]) -> Result<f64> {
    if a.is_empty() || b.is_empty() {
        return Err(Error::InvalidArgument("sliced Wasserstein of an empty sample".into()));
    }
    if a.len() != b.len() {
        return Err(Error::InvalidArgument("sliced Wasserstein needs equal sizes".into()));
    }
    if dirs.is_empty() {
        return Err(Error::InvalidArgument("need at least one projection".into()));
    }
    check_dims(a, b)?;
    let dot = |u: &[f64], d: &[f64]| u.iter().zip(d).map(|(x, y)| x * y).sum::<f64>();
    let total: f64 = dirs
        .iter()
        .map(|d| {
            let pa: Vec<f64> = a.iter().map(|u| dot(u, d)).collect();
            let pb: Vec<f64> = b.iter().map(|u| dot(u, d)).collect();
            wasserstein_1d(&pa, &pb)
        })
        .sum();
    Ok(total / dirs.len() as f64)
}

/// Sliced W1 over `p` seeded random directions. The smaller sample is padded
/// to the larger's size by uniform resampling with the same seed.
pub fn sliced_wasserstein_vectors(a: &[Vec<f64>], b: &[Vec<f64>], p: usize, seed: u64) -> Result<f64> {
    if a.is_empty() || b.is_empty() {
        return Err(Error::InvalidArgument("sliced Wasserstein of an empty sample".into()));
    }
    if p == 0 {
        return Err(Error::InvalidArgument("need at least one projection".into()));
    }
    check_dims(a, b)?;
    let pad = |small: &[Vec<f64>], n: usize| -> Vec<Vec<f64>> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0x5041_4400);
        let mut v = small.to_vec();
        while v.len() < n {
            v.push(small.choose(&mut rng).expect("non-empty").clone());
        }
        v
    };
    let (a, b) = match a.len().cmp(&b.len()) {
        std::cmp::Ordering::Less => (pad(a, b.len()), b.to_vec()),
        std::cmp::Ordering::Greater => (a.to_vec(), pad(b, a.len())),
        std::cmp::Ordering::Equal => (a.to_vec(), b.to_vec()),
    };
    let dirs = random_directions(a[0].len(), p, seed);
    sliced_wasserstein_along(&a, &b, &dirs)
}

pub fn sliced_wasserstein(a: &StateSample, b: &StateSample, p: usize, seed: u64) -> Result<f64> {
    sliced_wasserstein_vectors(&a.vectors, &b.vectors, p, seed)
}

fn mean_vector(x: &[Vec<f64>]) -> Vec<f64> {
    let mut m = vec![0.0; x[0].len()];
    for v in x {
        m.iter_mut().zip(v).for_each(|(a, b)| *a += b);
    }
    m.iter_mut().for_each(|a| *a /= x.len() as f64);
    m
}

pub fn centroid_distance_vectors(a: &[Vec<f64>], b: &[Vec<f64>]) -> Result<f64> {
    if a.is_empty() || b.is_empty() {
        return Err(Error::InvalidArgument("centroid of an empty sample".into()));
    }
    check_dims(a, b)?;
    Ok(sq_dist(&mean_vector(a), &mean_vector(b)).sqrt())
}

pub fn centroid_distance(a: &StateSample, b: &StateSample) -> Result<f64> {
    centroid_distance_vectors(&a.vectors, &b.vectors)
}

/// `1 − |A ∩ B| / |A ∪ B|` over n-gram type sets; two empty sets are at
/// distance 0.
pub fn jaccard_distance(a: &StateSample, b: &StateSample) -> f64 {
    jaccard_sets(&a.ngram_types, &b.ngram_types)
}

pub fn jaccard_sets<T: Ord>(a: &std::collections::BTreeSet<T>, b: &std::collections::BTreeSet<T>) -> f64 {
    let inter = a.intersection(b).count();
    let union = a.len() + b.len() - inter;
    if union == 0 {
        0.0
    } else {
        1.0 - inter as f64 / union as f64
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DriftConfig {
    pub bandwidth: Bandwidth,
    pub projections: usize,
    pub projection_seed: u64,
}

impl Default for DriftConfig {
    fn default() -> Self {
        Self {
            bandwidth: Bandwidth::Auto,
            projections: 64,
            projection_seed: 0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DriftReport {
    pub a: String,
    pub b: String,
    pub mmd: f64,
    pub sliced_wasserstein: f64,
    pub centroid: f64,
    pub jaccard: f64,
    pub bandwidth: f64,
    pub projection_seed: u64,
}

impl DriftReport {
    pub const CSV_HEADER: &'static str = "a,b,mmd,sliced_wasserstein,centroid,jaccard,bandwidth,projection_seed";

    pub fn csv_row(&self) -> String {
        format!(
            "{},{},{},{},{},{},{},{}",
            self.a,
            self.b,
            self.mmd,
            self.sliced_wasserstein,
            self.centroid,
            self.jaccard,
            self.bandwidth,
            self.projection_seed
        )
    }
}

/// All four distances between two samples.
pub fn drift_report(a: &StateSample, b: &StateSample, cfg: &DriftConfig) -> Result<DriftReport> {
    let (mmd, bandwidth) = mmd_rbf_vectors(&a.vectors, &b.vectors, cfg.bandwidth)?;
    let report = DriftReport {
        a: a.model_id.clone(),
        b: b.model_id.clone(),
        mmd,
        sliced_wasserstein: sliced_wasserstein(a, b, cfg.projections, cfg.projection_seed)?,
        centroid: centroid_distance(a, b)?,
        jaccard: jaccard_distance(a, b),
        bandwidth,
        projection_seed: cfg.projection_seed,
    };
    let finite = [report.mmd, report.sliced_wasserstein, report.centroid, report.jaccard]
        .iter()
        .all(|x| x.is_finite());
    if !finite {
        return Err(Error::NumericFault("non-finite drift metric".into()));
    }
    Ok(report)
}
