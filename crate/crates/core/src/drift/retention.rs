//! Forgetting and retention ratios.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TaskRetention {
    pub task: String,
    pub base: f64,
    pub post: f64,
    /// `base − post`.
    pub forgetting: f64,
    /// `post / base`; absent when the base score is 0.
    pub retention: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RetentionReport {
    pub tasks: Vec<TaskRetention>,
    pub mean_forgetting: f64,
    /// Mean over the tasks whose ratio is defined.
    pub mean_retention: f64,
    /// Set when at least one task had base score 0 and was left out of the
    /// mean retention.
    pub undefined_ratio: bool,
}

impl RetentionReport {
    pub const CSV_HEADER: &'static str = "task,base,post,forgetting,retention";

    /// One CSV row per task, then a `mean` row.
    pub fn csv(&self) -> String {
        let mut out = String::from(Self::CSV_HEADER);
        out.push('\n');
        for t in &self.tasks {
            let r = t.retention.map_or(String::new(), |r| r.to_string());
            out.push_str(&format!("{},{},{},{},{}\n", t.task, t.base, t.post, t.forgetting, r));
        }
        out.push_str(&format!("mean,,,{},{}\n", self.mean_forgetting, self.mean_retention));
        out
    }
}

/// Per-task forgetting and retention over the retention tasks, keyed by
/// name. Keys of `base` and `post` must match.
pub fn retention_stats(
    base: &BTreeMap<String, f64>,
    post: &BTreeMap<String, f64>,
) -> Result<RetentionReport> {
    if base.is_empty() {
        return Err(Error::InvalidArgument("no retention tasks".into()));
    }
    if base.keys().ne(post.keys()) {
        return Err(Error::InvalidArgument("base and post scores cover different tasks".into()));
    }
    let tasks: Vec<TaskRetention> = base
        .iter()
        .map(|(task, &b)| {
            let p = post[task];
            TaskRetention {
                task: task.clone(),
                base: b,
                post: p,
                forgetting: b - p,
                retention: (b > 0.0).then(|| p / b),
            }
        })
        .collect();
    let mean_forgetting = tasks.iter().map(|t| t.forgetting).sum::<f64>() / tasks.len() as f64;
    let defined: Vec<f64> = tasks.iter().filter_map(|t| t.retention).collect();
    if defined.is_empty() {
        let task = tasks[0].task.clone();
        return Err(Error::UndefinedRatio(task));
    }
    Ok(RetentionReport {
        mean_retention: defined.iter().sum::<f64>() / defined.len() as f64,
        undefined_ratio: defined.len() < tasks.len(),
        tasks,
        mean_forgetting,
    })
}

/// Ratio for a single task; errors when the base score is 0.
pub fn retention_ratio(task: &str, base: f64, post: f64) -> Result<f64> {
    if base > 0.0 {
        Ok(post / base)
    } else {
        Err(Error::UndefinedRatio(task.to_string()))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn map(pairs: &[(&str, f64)]) -> BTreeMap<String, f64> {
        pairs.iter().map(|&(k, v)| (k.to_string(), v)).collect()
    }

    #[test]
    fn identity() {
        let b = map(&[("x", 0.4), ("y", 0.9)]);
        let r = retention_stats(&b, &b).unwrap();
        assert_eq!(r.mean_forgetting, 0.0);
        assert_eq!(r.mean_retention, 1.0);
    }

    #[test]
    fn zero_base_flags() {
        let r = retention_stats(&map(&[("x", 0.0), ("y", 0.5)]), &map(&[("x", 0.1), ("y", 0.25)])).unwrap();
        assert!(r.undefined_ratio);
        assert_eq!(r.mean_retention, 0.5);
        assert!(retention_stats(&map(&[("x", 0.0)]), &map(&[("x", 0.0)])).is_err());
        assert!(retention_ratio("x", 0.0, 1.0).is_err());
    }

    #[test]
    fn csv_has_mean_row() {
        let b = map(&[("x", 0.5)]);
        let csv = retention_stats(&b, &b).unwrap().csv();
        assert!(csv.lines().last().unwrap().starts_with("mean,"));
    }
}
