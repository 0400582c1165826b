//! Preselects decision stumps offline on a labelled sample, then adapts only
//! their weights online as the rest of the data arrives.
//!
//! cargo run --release --example stumps_then_stream

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use ocboost::batch::{preselect_hypotheses, PreselectConfig};
use ocboost::eval::{auc, test_error};
use ocboost::margin::build_margin_matrix;
use ocboost::weak::StumpLearner;
use ocboost::{LabeledExample, OcbConfig, OcbState, Sign, StrongClassifier};

/// Two noisy features; the label is the sign of their sum.
fn sample(n: usize, rng: &mut ChaCha8Rng) -> Vec<LabeledExample> {
    (0..n)
        .map(|_| {
            let x: Vec<f64> = (0..2).map(|_| rng.random_range(-1.0..1.0)).collect();
            let noisy = x[0] + x[1] + rng.random_range(-0.3..0.3);
            LabeledExample::new(x, Sign::of(noisy)).unwrap()
        })
        .collect()
}

fn main() -> ocboost::Result<()> {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let (train, stream, test) = (
        sample(300, &mut rng),
        sample(2000, &mut rng),
        sample(1000, &mut rng),
    );

    let cfg = PreselectConfig {
        rounds: 15,
        sample_size: 200,
        seed: 1,
        smoothing: 0.01,
    };
    let offline = preselect_hypotheses(&train, &StumpLearner, &cfg)?;
    println!("offline test error {:.3}", test_error(&offline, &test)?);

    let margins = build_margin_matrix(offline.hypotheses(), &train)?;
    let mut state = OcbState::init_warm(&margins, OcbConfig::new(15))?;
    state.run_stream(&build_margin_matrix(offline.hypotheses(), &stream)?)?;

    let online = StrongClassifier::new(offline.hypotheses().to_vec(), state.alphas().to_vec())?;
    let scores: Vec<f64> = test
        .iter()
        .map(|e| online.raw_score(e.features()))
        .collect();
    let labels: Vec<Sign> = test.iter().map(|e| e.label()).collect();
    println!(
        "after {} streamed examples: test error {:.3}, AUC {:.3}",
        stream.len(),
        test_error(&online, &test)?,
        auc(&scores, &labels)?
    );
    Ok(())
}
