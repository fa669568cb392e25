//! Forgetting and retention from reference base/post scores on two
//! retention benchmarks.
//!
//!     cargo run --example retention_table

use std::collections::BTreeMap;

use statelab::drift::retention_stats;

const BASE: [(&str, f64); 2] = [("truthfulqa", 0.300), ("mmlu", 0.436)];
const POST: [(&str, [f64; 2]); 5] = [
    ("mild_sft", [0.295, 0.444]),
    ("stress_sft", [0.245, 0.364]),
    ("opd_mild", [0.290, 0.434]),
    ("opd_stress", [0.275, 0.430]),
    ("rl", [0.290, 0.442]),
];

fn main() -> statelab::Result<()> {
    let base: BTreeMap<String, f64> = BASE.iter().map(|&(k, v)| (k.to_string(), v)).collect();
    println!("{:<12} {:>10} {:>10}", "run", "forgetting", "retention");
    for (run, scores) in POST {
        let post = BASE.iter().zip(scores).map(|(&(k, _), v)| (k.to_string(), v)).collect();
        let r = retention_stats(&base, &post)?;
        println!("{run:<12} {:>10.4} {:>10.4}", r.mean_forgetting, r.mean_retention);
    }
    Ok(())
}
