//! Streams a drifting margin matrix through OCB at several orders and through
//! Oza, printing each learner's distance from a batch refit every 250 examples.
//!
//! cargo run --release --example batch_vs_online

use ocboost::batch::fit_weights;
use ocboost::eval::approx_error;
use ocboost::synthetic::{gen_drift_stream, DriftSpec};
use ocboost::{OcbConfig, OcbState, OzaMode, OzaState};

fn main() -> ocboost::Result<()> {
    let stream = gen_drift_stream(&DriftSpec::new(2, 500, 10, 42))?;
    let m = &stream.margins;
    let warm = m.prefix(50)?;

    let mut ocbs: Vec<(usize, OcbState)> = [0, 3, 10]
        .into_iter()
        .map(|k| Ok((k, OcbState::init_warm(&warm, OcbConfig::new(k))?)))
        .collect::<ocboost::Result<_>>()?;
    let mut oza = OzaState::init_warm(&warm, ocboost::ocb::DEFAULT_SMOOTHING, OzaMode::Averaged)?;

    println!(
        "{:>6} {:>9} {:>9} {:>9} {:>9}",
        "n", "ocb K=0", "ocb K=3", "ocb K=10", "oza"
    );
    for i in 50..m.n_examples() {
        let row = m.row(i);
        for (_, s) in &mut ocbs {
            s.process_example(row)?;
        }
        oza.process_example(row)?;
        let n = i + 1;
        if n % 250 == 0 {
            let batch = fit_weights(&m.prefix(n)?, ocboost::ocb::DEFAULT_SMOOTHING)?.alphas;
            print!("{n:>6}");
            for (_, s) in &ocbs {
                print!(" {:>9.4}", approx_error(&batch, s.alphas())?);
            }
            println!(" {:>9.4}", approx_error(&batch, oza.alphas())?);
        }
    }
    println!("drift at rows {:?}", stream.boundaries);
    Ok(())
}
