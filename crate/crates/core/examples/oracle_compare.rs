//! Both readings of the negative-sum correction, side by side, for a range of orders.
//!
//! cargo run --release --example oracle_compare

use ocboost::experiment::{run_oracle_compare, ExperimentConfig, LearnerSet};

fn main() -> ocboost::Result<()> {
    let cfg = ExperimentConfig {
        seeds: vec![0, 1],
        learners: LearnerSet {
            orders: vec![0, 2, 5, 10, 20],
            ..LearnerSet::default()
        },
        ..ExperimentConfig::default()
    };
    let report = run_oracle_compare(&cfg)?;
    report.write_convention_table(std::io::stdout().lock())
}
