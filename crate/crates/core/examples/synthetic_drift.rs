//! The synthetic drift experiment at a reduced size: every learner is scored
//! against an exact batch refit after each streamed example.
//!
//! cargo run --release --example synthetic_drift

use ocboost::experiment::{run_synthetic, ExperimentConfig, SyntheticConfig};

fn main() -> ocboost::Result<()> {
    let cfg = ExperimentConfig {
        seeds: vec![0, 1, 2],
        synthetic: SyntheticConfig {
            segments: 3,
            rows_per_segment: 400,
            ..SyntheticConfig::default()
        },
        ..ExperimentConfig::default()
    };
    let report = run_synthetic(&cfg)?;
    for &learner in &report.learners {
        let per_seed: Vec<String> = report
            .seed_means(learner)
            .iter()
            .map(|e| format!("{e:.4}"))
            .collect();
        println!(
            "{:<30} mean {:.4}  per seed [{}]",
            learner.to_string(),
            report.mean_error(learner).unwrap_or(f64::NAN),
            per_seed.join(", ")
        );
    }
    Ok(())
}
