//! Metrics and the one-vs-all combination rule.

use crate::classifier::StrongClassifier;
use crate::error::{Error, Result};
use crate::margin::{LabeledExample, Sign, WeakHypothesis};

/// Half the L1 distance between the L1-normalized weight vectors, in `[0, 1]`.
///
/// Norms use absolute values, so negative alphas are allowed.
pub fn approx_error(alpha_ref: &[f64], alpha: &[f64]) -> Result<f64> {
    if alpha_ref.len() != alpha.len() {
        return Err(Error::InvalidInput(format!(
            "weight vectors differ in length ({} vs {})",
            alpha_ref.len(),
            alpha.len()
        )));
    }
    let l1 = |v: &[f64]| v.iter().map(|x| x.abs()).sum::<f64>();
    let (na, nb) = (l1(alpha_ref), l1(alpha));
    if na == 0.0 {
        return Err(Error::UndefinedNormalization("reference weights"));
    }
    if nb == 0.0 {
        return Err(Error::UndefinedNormalization("weights"));
    }
    let dist: f64 = alpha_ref
        .iter()
        .zip(alpha)
        .map(|(a, b)| (a / na - b / nb).abs())
        .sum();
    Ok((0.5 * dist).min(1.0))
}

/// Fraction of misclassified examples (zero votes predict `+1`).
pub fn test_error<H: WeakHypothesis>(
    c: &StrongClassifier<H>,
    data: &[LabeledExample],
) -> Result<f64> {
    if data.is_empty() {
        return Err(Error::InvalidInput("test set is empty".into()));
    }
    let wrong = data
        .iter()
        .filter(|e| c.predict(e.features()) != e.label())
        .count();
    Ok(wrong as f64 / data.len() as f64)
}

/// Area under the ROC curve via the rank-sum statistic, ties counted as one half.
pub fn auc(scores: &[f64], labels: &[Sign]) -> Result<f64> {
    if scores.len() != labels.len() {
        return Err(Error::InvalidInput(
            "scores and labels differ in length".into(),
        ));
    }
    if scores.iter().any(|s| s.is_nan()) {
        return Err(Error::InvalidInput("scores contain NaN".into()));
    }
    let n_pos = labels.iter().filter(|l| l.is_plus()).count();
    let n_neg = labels.len() - n_pos;
    if n_pos == 0 || n_neg == 0 {
        return Err(Error::UndefinedAuc);
    }
    let mut order: Vec<usize> = (0..scores.len()).collect();
    order.sort_by(|&a, &b| scores[a].total_cmp(&scores[b]));

    // average 1-based ranks over tie groups
    let mut pos_rank_sum = 0.0;
    let mut i = 0;
    while i < order.len() {
        let mut end = i;
        while end + 1 < order.len() && scores[order[end + 1]] == scores[order[i]] {
            end += 1;
        }
        let avg_rank = (i + end) as f64 / 2.0 + 1.0;
        for &k in &order[i..=end] {
            if labels[k].is_plus() {
                pos_rank_sum += avg_rank;
            }
        }
        i = end + 1;
    }
    let (p, n) = (n_pos as f64, n_neg as f64);
    Ok((pos_rank_sum - p * (p + 1.0) / 2.0) / (p * n))
}

/// One binary classifier per digit, `+1` meaning "is this digit".
#[derive(Clone, Debug)]
pub struct OvaEnsemble<H> {
    classifiers: Vec<StrongClassifier<H>>,
}

pub const N_CLASSES: usize = 10;

impl<H: WeakHypothesis> OvaEnsemble<H> {
    pub fn new(classifiers: Vec<StrongClassifier<H>>) -> Result<Self> {
        if classifiers.len() != N_CLASSES {
            return Err(Error::InvalidInput(format!(
                "one-vs-all ensemble needs {N_CLASSES} classifiers, got {}",
                classifiers.len()
            )));
        }
        Ok(OvaEnsemble { classifiers })
    }

    pub fn classifiers(&self) -> &[StrongClassifier<H>] {
        &self.classifiers
    }

    pub fn classifiers_mut(&mut self) -> &mut [StrongClassifier<H>] {
        &mut self.classifiers
    }

    /// Digit with the highest raw vote; ties go to the lowest digit.
    pub fn predict(&self, x: &[f64]) -> usize {
        argmax(self.classifiers.iter().map(|c| c.raw_score(x)))
    }

    /// Fraction of `(features, digit)` pairs predicted wrongly.
    pub fn error(&self, data: &[(Vec<f64>, u8)]) -> Result<f64> {
        if data.is_empty() {
            return Err(Error::InvalidInput("test set is empty".into()));
        }
        let wrong = data
            .iter()
            .filter(|(x, d)| self.predict(x) != *d as usize)
            .count();
        Ok(wrong as f64 / data.len() as f64)
    }
}

/// Index of the first maximum.
pub fn argmax<I: IntoIterator<Item = f64>>(scores: I) -> usize {
    let mut best = (0, f64::NEG_INFINITY);
    for (i, s) in scores.into_iter().enumerate() {
        if s > best.1 {
            best = (i, s);
        }
    }
    best.0
}
