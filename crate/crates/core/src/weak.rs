//! Concrete weak hypotheses and exhaustive weighted-error trainers.

use std::collections::HashSet;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::batch::WeakLearner;
use crate::error::{Error, Result};
use crate::margin::{LabeledExample, Sign, WeakHypothesis};

/// `polarity * sign(x[feature] - threshold)`, with `sign(0) = +1`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DecisionStump {
    pub feature: usize,
    pub threshold: f64,
    pub polarity: Sign,
}

impl WeakHypothesis for DecisionStump {
    fn predict(&self, x: &[f64]) -> Sign {
        self.polarity * Sign::of(x[self.feature] - self.threshold)
    }
}

/// `polarity * sign(||prototype - x||_2 - theta)`: with polarity `+1`, points
/// farther than `theta` from the prototype are positive.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PrototypeHypothesis {
    pub prototype: Vec<f64>,
    pub theta: f64,
    pub polarity: Sign,
}

impl WeakHypothesis for PrototypeHypothesis {
    fn predict(&self, x: &[f64]) -> Sign {
        self.polarity * Sign::of(euclidean(&self.prototype, x) - self.theta)
    }
}

/// Either hypothesis family; this is what classifier files store.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Hypothesis {
    Stump(DecisionStump),
    Prototype(PrototypeHypothesis),
}

impl WeakHypothesis for Hypothesis {
    fn predict(&self, x: &[f64]) -> Sign {
        match self {
            Hypothesis::Stump(h) => h.predict(x),
            Hypothesis::Prototype(h) => h.predict(x),
        }
    }
}

impl From<DecisionStump> for Hypothesis {
    fn from(h: DecisionStump) -> Self {
        Hypothesis::Stump(h)
    }
}

impl From<PrototypeHypothesis> for Hypothesis {
    fn from(h: PrototypeHypothesis) -> Self {
        Hypothesis::Prototype(h)
    }
}

pub fn euclidean(a: &[f64], b: &[f64]) -> f64 {
    a.iter()
        .zip(b)
        .map(|(p, q)| (p - q) * (p - q))
        .sum::<f64>()
        .sqrt()
}

fn check_weights(data: &[LabeledExample], weights: &[f64]) -> Result<f64> {
    if data.is_empty() || data.len() != weights.len() {
        return Err(Error::InvalidInput(format!(
            "{} examples with {} weights",
            data.len(),
            weights.len()
        )));
    }
    if weights.iter().any(|w| !(*w >= 0.0 && w.is_finite())) {
        return Err(Error::InvalidInput(
            "weights must be finite and non-negative".into(),
        ));
    }
    let total: f64 = weights.iter().sum();
    if total <= 0.0 {
        return Err(Error::InvalidInput("weights sum to zero".into()));
    }
    Ok(total)
}

/// One candidate split found while scanning sorted values.
#[derive(Clone, Copy, Debug)]
struct Split {
    threshold: f64,
    polarity: Sign,
    error: f64,
}

/// Scans thresholds over `(value, label, weight)` triples sorted by value.
///
/// Thresholds are `lowest`, every midpoint between consecutive distinct values,
/// and `+inf`. Prediction is `polarity * sign(value - threshold)`. Ties keep
/// the smaller threshold, then polarity `+1`.
fn scan_sorted(sorted: &[(f64, Sign, f64)], total: f64, lowest: f64) -> Split {
    // threshold `lowest`: every value predicts +polarity
    let mut err_plus: f64 = sorted
        .iter()
        .filter(|(_, y, _)| !y.is_plus())
        .map(|(_, _, w)| w)
        .sum();
    let mut best = Split {
        threshold: lowest,
        polarity: Sign::Plus,
        error: err_plus,
    };
    let mut consider = |threshold: f64, err_plus: f64| {
        let err_minus = total - err_plus;
        if err_plus < best.error {
            best = Split {
                threshold,
                polarity: Sign::Plus,
                error: err_plus,
            };
        }
        if err_minus < best.error {
            best = Split {
                threshold,
                polarity: Sign::Minus,
                error: err_minus,
            };
        }
    };
    consider(lowest, err_plus);
    let mut i = 0;
    while i < sorted.len() {
        let v = sorted[i].0;
        // everything equal to v moves below the next threshold
        while i < sorted.len() && sorted[i].0 == v {
            let (_, y, w) = sorted[i];
            if y.is_plus() {
                err_plus += w;
            } else {
                err_plus -= w;
            }
            i += 1;
        }
        let threshold = match sorted.get(i) {
            Some(&(next, _, _)) => v + (next - v) / 2.0,
            None => f64::INFINITY,
        };
        consider(threshold, err_plus.max(0.0));
    }
    best
}

/// Exhaustive stump search: every feature, every midpoint between consecutive
/// distinct values plus `±inf`, both polarities. Returns the normalized
/// weighted error. Ties go to the lowest feature, then lowest threshold, then
/// polarity `+1`.
pub fn best_stump(data: &[LabeledExample], weights: &[f64]) -> Result<(DecisionStump, f64)> {
    let total = check_weights(data, weights)?;
    let dim = data[0].features().len();
    if dim == 0 || data.iter().any(|e| e.features().len() != dim) {
        return Err(Error::InvalidInput(
            "examples need equal, non-zero dimension".into(),
        ));
    }
    let mut best: Option<(usize, Split)> = None;
    let mut sorted = Vec::with_capacity(data.len());
    for f in 0..dim {
        sorted.clear();
        sorted.extend(
            data.iter()
                .zip(weights)
                .map(|(e, &w)| (e.features()[f], e.label(), w)),
        );
        sorted.sort_by(|a, b| a.0.total_cmp(&b.0));
        let split = scan_sorted(&sorted, total, f64::NEG_INFINITY);
        if best.is_none_or(|(_, b)| split.error < b.error) {
            best = Some((f, split));
        }
    }
    let (feature, split) = best.expect("dimension is non-zero");
    Ok((
        DecisionStump {
            feature,
            threshold: split.threshold,
            polarity: split.polarity,
        },
        split.error / total,
    ))
}

/// Best prototype hypothesis over `candidates`: for each candidate the data
/// are sorted by distance and every midpoint radius (plus `0` and `+inf`) is
/// tried with both polarities. Ties go to the earlier candidate, then the
/// smaller radius, then polarity `+1`.
pub fn best_prototype(
    data: &[LabeledExample],
    weights: &[f64],
    candidates: &[Vec<f64>],
) -> Result<(PrototypeHypothesis, f64)> {
    let total = check_weights(data, weights)?;
    if candidates.is_empty() {
        return Err(Error::InvalidInput("no prototype candidates".into()));
    }
    let splits: Vec<Split> = candidates
        .par_iter()
        .map(|c| {
            let mut sorted: Vec<(f64, Sign, f64)> = data
                .iter()
                .zip(weights)
                .map(|(e, &w)| (euclidean(c, e.features()), e.label(), w))
                .collect();
            sorted.sort_by(|a, b| a.0.total_cmp(&b.0));
            scan_sorted(&sorted, total, 0.0)
        })
        .collect();
    // sequential reduction keeps the tie-break independent of scheduling
    let mut best = 0;
    for (i, s) in splits.iter().enumerate() {
        if s.error < splits[best].error {
            best = i;
        }
    }
    let split = splits[best];
    Ok((
        PrototypeHypothesis {
            prototype: candidates[best].clone(),
            theta: split.threshold,
            polarity: split.polarity,
        },
        split.error / total,
    ))
}

/// Stump search as a [`WeakLearner`].
#[derive(Clone, Copy, Debug, Default)]
pub struct StumpLearner;

impl WeakLearner for StumpLearner {
    type Hypothesis = Hypothesis;

    fn fit(&self, data: &[LabeledExample], weights: &[f64]) -> Option<(Hypothesis, f64)> {
        best_stump(data, weights).ok().map(|(h, e)| (h.into(), e))
    }
}

/// Prototype search where the candidates are the (distinct) training examples themselves.
#[derive(Clone, Copy, Debug, Default)]
pub struct PrototypeLearner;

impl WeakLearner for PrototypeLearner {
    type Hypothesis = Hypothesis;

    fn fit(&self, data: &[LabeledExample], weights: &[f64]) -> Option<(Hypothesis, f64)> {
        let mut seen = HashSet::new();
        let candidates: Vec<Vec<f64>> = data
            .iter()
            .filter(|e| seen.insert(e.features().iter().map(|v| v.to_bits()).collect::<Vec<_>>()))
            .map(|e| e.features().to_vec())
            .collect();
        best_prototype(data, weights, &candidates)
            .ok()
            .map(|(h, e)| (h.into(), e))
    }
}

/// Standardizes each image to zero mean and unit population variance.
/// Constant images become all zeros.
pub fn normalize_images(images: &[Vec<f64>]) -> Vec<Vec<f64>> {
    images.iter().map(|img| normalize_image(img)).collect()
}

pub fn normalize_image(img: &[f64]) -> Vec<f64> {
    if img.is_empty() {
        return Vec::new();
    }
    let n = img.len() as f64;
    let mean = img.iter().sum::<f64>() / n;
    let var = img.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / n;
    let sd = var.sqrt();
    img.iter()
        .map(|v| if sd > 0.0 { (v - mean) / sd } else { 0.0 })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn data_1d(xs: &[f64], ys: &[i8]) -> Vec<LabeledExample> {
        xs.iter()
            .zip(ys)
            .map(|(&x, &y)| LabeledExample::new(vec![x], Sign::try_from(y).unwrap()).unwrap())
            .collect()
    }

    fn weighted_error<H: WeakHypothesis>(h: &H, data: &[LabeledExample], w: &[f64]) -> f64 {
        let total: f64 = w.iter().sum();
        data.iter()
            .zip(w)
            .filter(|(e, _)| h.predict(e.features()) != e.label())
            .map(|(_, w)| w)
            .sum::<f64>()
            / total
    }

    /// Every stump the exhaustive search is allowed to return.
    fn stump_grid(data: &[LabeledExample]) -> Vec<DecisionStump> {
        let dim = data[0].features().len();
        let mut out = Vec::new();
        for f in 0..dim {
            let mut vals: Vec<f64> = data.iter().map(|e| e.features()[f]).collect();
            vals.sort_by(f64::total_cmp);
            vals.dedup();
            let mut ts = vec![f64::NEG_INFINITY, f64::INFINITY];
            ts.extend(vals.windows(2).map(|w| w[0] + (w[1] - w[0]) / 2.0));
            for t in ts {
                for polarity in [Sign::Plus, Sign::Minus] {
                    out.push(DecisionStump {
                        feature: f,
                        threshold: t,
                        polarity,
                    });
                }
            }
        }
        out
    }

    #[test]
    fn stump_on_separable_line() {
        let data = data_1d(&[1.0, 2.0, 3.0], &[-1, -1, 1]);
        let (s, e) = best_stump(&data, &[1.0; 3]).unwrap();
        assert_eq!(
            s,
            DecisionStump {
                feature: 0,
                threshold: 2.5,
                polarity: Sign::Plus
            }
        );
        assert_eq!(e, 0.0);
    }

    #[test]
    fn stump_all_positive() {
        let data = data_1d(&[3.0, 1.0, 2.0], &[1, 1, 1]);
        let (s, e) = best_stump(&data, &[1.0; 3]).unwrap();
        assert_eq!(s.polarity, Sign::Plus);
        assert_eq!(s.threshold, f64::NEG_INFINITY);
        assert_eq!(e, 0.0);
    }

    #[test]
    fn stump_concentrated_weight() {
        let data = data_1d(&[1.0, 2.0, 3.0, 4.0], &[1, -1, 1, -1]);
        let (s, e) = best_stump(&data, &[0.0, 0.0, 5.0, 0.0]).unwrap();
        assert_eq!(e, 0.0);
        assert_eq!(s.predict(&[3.0]), Sign::Plus);
    }

    #[test]
    fn stump_constant_features() {
        let data = data_1d(&[1.0, 1.0, 1.0], &[1, -1, -1]);
        let (s, e) = best_stump(&data, &[1.0, 1.0, 2.0]).unwrap();
        assert_eq!(e, 0.25);
        assert!(data.iter().all(|x| s.predict(x.features()) == Sign::Minus));
    }

    #[test]
    fn stump_bad_weights() {
        let data = data_1d(&[1.0], &[1]);
        assert!(best_stump(&data, &[0.0]).is_err());
        assert!(best_stump(&data, &[1.0, 1.0]).is_err());
    }

    #[test]
    fn prototype_separates_clusters() {
        let mut data = Vec::new();
        for i in 0..5 {
            let t = i as f64 * 0.1;
            data.push(LabeledExample::new(vec![t, -t], Sign::Plus).unwrap());
            data.push(LabeledExample::new(vec![10.0 + t, 10.0 - t], Sign::Minus).unwrap());
        }
        let cands: Vec<Vec<f64>> = data.iter().map(|e| e.features().to_vec()).collect();
        let (h, e) = best_prototype(&data, &[1.0; 10], &cands).unwrap();
        assert_eq!(e, 0.0);
        assert!(data.iter().all(|x| h.predict(x.features()) == x.label()));
    }

    #[test]
    fn prototype_zero_distance_boundary() {
        let data = vec![
            LabeledExample::new(vec![0.0], Sign::Minus).unwrap(),
            LabeledExample::new(vec![5.0], Sign::Plus).unwrap(),
        ];
        let (h, e) = best_prototype(&data, &[1.0, 1.0], &[vec![0.0]]).unwrap();
        assert_eq!(e, 0.0);
        assert_eq!(h.theta, 2.5);
        // distance 0 falls inside the radius: sign(0 - theta) = -1
        assert_eq!(h.predict(&[0.0]), Sign::Minus);
    }

    #[test]
    fn duplicate_candidates_do_not_change_result() {
        let data = data_1d(&[0.0, 1.0, 2.0, 7.0, 8.0], &[1, 1, -1, -1, 1]);
        let w = [1.0, 2.0, 1.0, 1.0, 0.5];
        let c = vec![vec![1.0], vec![7.0], vec![0.0]];
        let dup = vec![vec![1.0], vec![1.0], vec![7.0], vec![7.0], vec![0.0]];
        assert_eq!(
            best_prototype(&data, &w, &c).unwrap(),
            best_prototype(&data, &w, &dup).unwrap()
        );
    }

    #[test]
    fn normalize_examples() {
        assert_eq!(normalize_image(&[3.0, 3.0, 3.0]), vec![0.0; 3]);
        assert_eq!(normalize_image(&[0.0, 2.0]), vec![-1.0, 1.0]);
        let out = normalize_image(&[0.1, 0.5, 0.9, 0.0, 0.3]);
        let mean = out.iter().sum::<f64>() / 5.0;
        let var = out.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / 5.0;
        assert!(mean.abs() < 1e-10);
        assert!((var - 1.0).abs() < 1e-10);
    }

    #[test]
    fn hypothesis_serializes_with_kind_tag() {
        let h: Hypothesis = DecisionStump {
            feature: 2,
            threshold: 0.5,
            polarity: Sign::Minus,
        }
        .into();
        let text = toml::to_string(&h).unwrap();
        assert!(text.contains("kind = \"stump\""));
        assert_eq!(toml::from_str::<Hypothesis>(&text).unwrap(), h);
    }

    fn small_instance() -> impl Strategy<Value = (Vec<LabeledExample>, Vec<f64>)> {
        (1usize..=30, 1usize..=5).prop_flat_map(|(n, dim)| {
            (
                prop::collection::vec((prop::collection::vec(-3i32..3, dim), any::<bool>()), n),
                prop::collection::vec(0.0..1.0f64, n),
            )
                .prop_filter_map("zero weight", |(rows, mut w)| {
                    if w.iter().sum::<f64>() <= 0.0 {
                        w[0] = 1.0;
                    }
                    let data = rows
                        .into_iter()
                        .map(|(x, y)| {
                            LabeledExample::new(
                                x.into_iter().map(f64::from).collect(),
                                Sign::from_bool(y),
                            )
                            .unwrap()
                        })
                        .collect();
                    Some((data, w))
                })
        })
    }

    proptest! {
        #[test]
        fn stump_beats_every_grid_stump((data, w) in small_instance()) {
            let (s, e) = best_stump(&data, &w).unwrap();
            prop_assert!((weighted_error(&s, &data, &w) - e).abs() < 1e-12);
            prop_assert!(e <= 0.5 + 1e-12);
            for g in stump_grid(&data) {
                prop_assert!(e <= weighted_error(&g, &data, &w) + 1e-12);
            }
        }

        #[test]
        fn prototype_beats_every_scanned_pair((data, w) in small_instance()) {
            let cands: Vec<Vec<f64>> = data.iter().take(6).map(|e| e.features().to_vec()).collect();
            let (h, e) = best_prototype(&data, &w, &cands).unwrap();
            prop_assert!((weighted_error(&h, &data, &w) - e).abs() < 1e-12);
            prop_assert!(e <= 0.5 + 1e-12);
            for c in &cands {
                let mut ds: Vec<f64> = data.iter().map(|x| euclidean(c, x.features())).collect();
                ds.sort_by(f64::total_cmp);
                ds.dedup();
                let mut thetas = vec![0.0, f64::INFINITY];
                thetas.extend(ds.windows(2).map(|p| p[0] + (p[1] - p[0]) / 2.0));
                for theta in thetas {
                    for polarity in [Sign::Plus, Sign::Minus] {
                        let g = PrototypeHypothesis { prototype: c.clone(), theta, polarity };
                        prop_assert!(e <= weighted_error(&g, &data, &w) + 1e-12);
                    }
                }
            }
        }
    }
}
