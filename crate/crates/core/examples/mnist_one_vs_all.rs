//! One-vs-all MNIST with prototype hypotheses on a small slice of the data.
//!
//! cargo run --release --example mnist_one_vs_all -- path/to/mnist
//!
//! The directory must hold the four uncompressed IDX files.

use std::path::PathBuf;

use ocboost::experiment::{run_mnist, ExperimentConfig, MnistConfig};

fn main() -> ocboost::Result<()> {
    let dir = std::env::args()
        .nth(1)
        .map(PathBuf::from)
        .unwrap_or_else(|| "data/mnist".into());
    let cfg = ExperimentConfig {
        mnist: MnistConfig {
            dir,
            n_hypotheses: 20,
            train_size: 3000,
            test_size: 2000,
            preselect_size: 1000,
            warm_start: 300,
            eval_period: 500,
            orders: vec![20],
            ..MnistConfig::default()
        },
        ..ExperimentConfig::default()
    };
    let report = run_mnist(&cfg)?;
    println!("checkpoints: {:?}", report.checkpoints);
    for &l in &report.learners {
        let digits: Vec<String> = report
            .digit_approx_errors(l)
            .iter()
            .map(|e| format!("{e:.3}"))
            .collect();
        println!(
            "{:<30} one-vs-all error {:.4}  approx error by digit [{}]",
            l.to_string(),
            report.final_ova_error(l).unwrap_or(f64::NAN),
            digits.join(" ")
        );
    }
    Ok(())
}
