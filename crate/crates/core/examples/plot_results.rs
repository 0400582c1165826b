//! Runs a small drift experiment and renders its CSV as an SVG chart.
//!
//! cargo run --release --example plot_results -- out/drift.svg

use std::path::PathBuf;

use ocboost::experiment::{
    run_synthetic, write_synthetic_outputs, ExperimentConfig, SyntheticConfig,
};
use ocboost::plot::{emit_plot, PlotSpec};

fn main() -> ocboost::Result<()> {
    let svg = std::env::args()
        .nth(1)
        .map(PathBuf::from)
        .unwrap_or_else(|| "out/drift.svg".into());
    let cfg = ExperimentConfig {
        out_dir: svg.parent().map(PathBuf::from).unwrap_or_default(),
        seeds: vec![0, 1],
        synthetic: SyntheticConfig {
            rows_per_segment: 300,
            ..SyntheticConfig::default()
        },
        ..ExperimentConfig::default()
    };
    let report = run_synthetic(&cfg)?;
    write_synthetic_outputs(&cfg, &report, "drift")?;
    let spec = PlotSpec {
        title: Some("approximation error under drift".into()),
        ..PlotSpec::default()
    };
    emit_plot(&cfg.out_dir.join("drift.csv"), &svg, &spec)?;
    println!("wrote {}", svg.display());
    Ok(())
}
