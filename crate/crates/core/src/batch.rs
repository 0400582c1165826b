//! Batch AdaBoost over a fixed hypothesis order.
//!
//! Weights are never normalized: every example enters coordinate 1 with
//! weight one and `d_i <- d_i * exp(-alpha_j * m_ij)` after each coordinate.
//! Sums run in ascending example order so refits are bit-reproducible.

use rand::distr::weighted::WeightedIndex;
use rand::distr::Distribution;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::classifier::StrongClassifier;
use crate::error::{Error, Result};
use crate::margin::{compute_margin, LabeledExample, MarginMatrix, Sign, WeakHypothesis};
use crate::trajectory::AlphaTrajectory;

/// Correct/incorrect weight sums `(W+, W-)` seen by one coordinate.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct CoordinateSums {
    pub plus: f64,
    pub minus: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct BatchFitResult {
    pub alphas: Vec<f64>,
    /// Example weights after the last coordinate.
    pub final_weights: Vec<f64>,
    pub sums: Vec<CoordinateSums>,
}

/// `alpha = 1/2 log((W+ + eps) / (W- + eps))`.
#[inline]
pub fn smoothed_alpha(coordinate: usize, plus: f64, minus: f64, smoothing: f64) -> Result<f64> {
    if smoothing == 0.0 && (plus == 0.0 || minus == 0.0) {
        return Err(Error::UnboundedAlpha {
            coordinate,
            w_plus: plus,
            w_minus: minus,
        });
    }
    Ok(0.5 * ((plus + smoothing) / (minus + smoothing)).ln())
}

/// The exponential reweighting step `d * exp(-alpha * m)`.
#[inline]
pub fn reweight(d: f64, alpha: f64, margin: Sign) -> f64 {
    d * (-alpha * margin.as_f64()).exp()
}

fn check_smoothing(smoothing: f64) -> Result<()> {
    if !(smoothing >= 0.0 && smoothing.is_finite()) {
        return Err(Error::InvalidConfig(format!(
            "smoothing must be finite and non-negative, got {smoothing}"
        )));
    }
    Ok(())
}

/// Fits all alphas on the first `n` rows, calling `visit(j, weights)` with the
/// weights entering coordinate `j` before they are updated.
pub(crate) fn fit_prefix_with<F>(
    m: &MarginMatrix,
    n: usize,
    smoothing: f64,
    mut visit: F,
) -> Result<BatchFitResult>
where
    F: FnMut(usize, &[f64]),
{
    check_smoothing(smoothing)?;
    let n_hyp = m.n_hypotheses();
    let mut d = vec![1.0; n];
    let mut alphas = Vec::with_capacity(n_hyp);
    let mut sums = Vec::with_capacity(n_hyp);
    for j in 0..n_hyp {
        visit(j, &d);
        let (mut plus, mut minus) = (0.0, 0.0);
        for (i, w) in d.iter().enumerate() {
            if m.get(i, j).is_plus() {
                plus += w;
            } else {
                minus += w;
            }
        }
        let alpha = smoothed_alpha(j + 1, plus, minus, smoothing)?;
        for (i, w) in d.iter_mut().enumerate() {
            *w = reweight(*w, alpha, m.get(i, j));
        }
        alphas.push(alpha);
        sums.push(CoordinateSums { plus, minus });
    }
    Ok(BatchFitResult {
        alphas,
        final_weights: d,
        sums,
    })
}

/// Stagewise AdaBoost over the fixed column order of `m`.
pub fn fit_weights(m: &MarginMatrix, smoothing: f64) -> Result<BatchFitResult> {
    fit_prefix_with(m, m.n_examples(), smoothing, |_, _| {})
}

/// `sum_i exp(-sum_{j < upto} alpha_j m_ij)`.
pub fn exp_loss(m: &MarginMatrix, alphas: &[f64], upto: usize) -> Result<f64> {
    if upto > m.n_hypotheses() || upto > alphas.len() {
        return Err(Error::InvalidInput(format!(
            "loss prefix {upto} exceeds {} coordinates",
            m.n_hypotheses().min(alphas.len())
        )));
    }
    Ok(m.rows()
        .map(|row| {
            let margin: f64 = row[..upto]
                .iter()
                .zip(alphas)
                .map(|(s, a)| a * s.as_f64())
                .sum();
            (-margin).exp()
        })
        .sum())
}

/// Exact incremental retraining: step `n` is a full batch refit on rows `1..=n`.
///
/// Costs `O(N^2 J)`. This is the ground truth the online learners approximate.
pub fn incremental_oracle(m: &MarginMatrix, smoothing: f64) -> Result<AlphaTrajectory> {
    incremental_oracle_from(m, 1, smoothing)
}

/// Like [`incremental_oracle`] but only records steps `first..=N`.
pub fn incremental_oracle_from(
    m: &MarginMatrix,
    first: usize,
    smoothing: f64,
) -> Result<AlphaTrajectory> {
    let first = first.max(1);
    let mut traj = AlphaTrajectory::with_offset(m.n_hypotheses(), first - 1);
    for n in first..=m.n_examples() {
        let fit = fit_prefix_with(m, n, smoothing, |_, _| {}).map_err(|e| Error::AtExample {
            index: n,
            source: Box::new(e),
        })?;
        traj.push(fit.alphas)?;
    }
    Ok(traj)
}

/// Finds a weighted-error-minimizing hypothesis on a (sampled) training set.
pub trait WeakLearner {
    type Hypothesis: WeakHypothesis;

    /// Returns the best hypothesis and its normalized weighted error, or `None`
    /// when no hypothesis can be produced.
    fn fit(&self, data: &[LabeledExample], weights: &[f64]) -> Option<(Self::Hypothesis, f64)>;
}

#[derive(Clone, Debug, PartialEq)]
pub struct PreselectConfig {
    pub rounds: usize,
    /// Examples drawn (with replacement, by weight) per round.
    pub sample_size: usize,
    pub seed: u64,
    /// Added to both sums when computing alpha on the full weighted set.
    pub smoothing: f64,
}

/// Offline AdaBoost with resampling, used to choose the fixed hypothesis pool.
///
/// Each round samples `sample_size` examples in proportion to the current
/// weights, lets `learner` pick a hypothesis on that sample, then computes its
/// alpha on the full weighted training set and reweights.
pub fn preselect_hypotheses<L: WeakLearner>(
    data: &[LabeledExample],
    learner: &L,
    cfg: &PreselectConfig,
) -> Result<StrongClassifier<L::Hypothesis>> {
    if cfg.rounds == 0 {
        return Err(Error::InvalidConfig("rounds must be at least 1".into()));
    }
    if data.is_empty() || cfg.sample_size == 0 || cfg.sample_size > data.len() {
        return Err(Error::InvalidConfig(format!(
            "sample size {} must be in 1..={}",
            cfg.sample_size,
            data.len()
        )));
    }
    check_smoothing(cfg.smoothing)?;

    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let mut d = vec![1.0; data.len()];
    let mut hypotheses = Vec::with_capacity(cfg.rounds);
    let mut alphas = Vec::with_capacity(cfg.rounds);
    let uniform = vec![1.0; cfg.sample_size];

    for round in 0..cfg.rounds {
        let dist = WeightedIndex::new(&d)
            .map_err(|e| Error::InvalidInput(format!("round {round}: bad weights: {e}")))?;
        let sample: Vec<LabeledExample> = (0..cfg.sample_size)
            .map(|_| data[dist.sample(&mut rng)].clone())
            .collect();
        let (h, _) = learner
            .fit(&sample, &uniform)
            .ok_or(Error::SelectionFailure { round })?;

        let margins: Vec<Sign> = data.iter().map(|ex| compute_margin(&h, ex)).collect();
        let (mut plus, mut minus) = (0.0, 0.0);
        for (w, s) in d.iter().zip(&margins) {
            if s.is_plus() {
                plus += w;
            } else {
                minus += w;
            }
        }
        let alpha = smoothed_alpha(round + 1, plus, minus, cfg.smoothing)?;
        for (w, &s) in d.iter_mut().zip(&margins) {
            *w = reweight(*w, alpha, s);
        }
        hypotheses.push(h);
        alphas.push(alpha);
    }
    StrongClassifier::new(hypotheses, alphas)
}
