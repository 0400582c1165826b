use std::path::Path;

use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::margin::{Sign, WeakHypothesis};

/// Version line of the classifier file format.
pub const CLASSIFIER_FORMAT: &str = "ocboost-classifier v1";

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct ClassifierFile<V> {
    format: String,
    alphas: Vec<f64>,
    hypotheses: V,
}

/// Weighted vote `H(x) = sign(sum_j alpha_j h_j(x))` over an ordered hypothesis pool.
#[derive(Clone, Debug, PartialEq)]
pub struct StrongClassifier<H> {
    hypotheses: Vec<H>,
    alphas: Vec<f64>,
}

impl<H: WeakHypothesis> StrongClassifier<H> {
    pub fn new(hypotheses: Vec<H>, alphas: Vec<f64>) -> Result<Self> {
        if hypotheses.len() != alphas.len() {
            return Err(Error::InvalidInput(format!(
                "{} hypotheses but {} alphas",
                hypotheses.len(),
                alphas.len()
            )));
        }
        if alphas.iter().any(|a| !a.is_finite()) {
            return Err(Error::InvalidInput("alphas must be finite".into()));
        }
        Ok(StrongClassifier { hypotheses, alphas })
    }

    pub fn hypotheses(&self) -> &[H] {
        &self.hypotheses
    }

    pub fn alphas(&self) -> &[f64] {
        &self.alphas
    }

    pub fn len(&self) -> usize {
        self.alphas.len()
    }

    pub fn is_empty(&self) -> bool {
        self.alphas.is_empty()
    }

    /// Replaces the weights, keeping the hypotheses.
    pub fn set_alphas(&mut self, alphas: &[f64]) -> Result<()> {
        if alphas.len() != self.alphas.len() || alphas.iter().any(|a| !a.is_finite()) {
            return Err(Error::InvalidInput(format!(
                "expected {} finite alphas",
                self.alphas.len()
            )));
        }
        self.alphas.copy_from_slice(alphas);
        Ok(())
    }

    /// Raw weighted vote and its sign. A vote of exactly zero predicts `+1`.
    pub fn score(&self, x: &[f64]) -> (f64, Sign) {
        let s = self.raw_score(x);
        (s, Sign::of(s))
    }

    pub fn raw_score(&self, x: &[f64]) -> f64 {
        self.hypotheses
            .iter()
            .zip(&self.alphas)
            .map(|(h, a)| a * h.predict(x).as_f64())
            .sum()
    }

    pub fn predict(&self, x: &[f64]) -> Sign {
        self.score(x).1
    }
}

impl<H: WeakHypothesis + Clone> StrongClassifier<H> {
    /// Same hypotheses under different weights.
    pub fn with_alphas(&self, alphas: &[f64]) -> Result<Self> {
        StrongClassifier::new(self.hypotheses.clone(), alphas.to_vec())
    }
}

/// Classifier files are TOML: a `format` line, the `alphas` array, then one
/// `[[hypotheses]]` table per hypothesis in pool order.
impl<H: WeakHypothesis + Serialize> StrongClassifier<H> {
    pub fn to_toml(&self) -> Result<String> {
        let file = ClassifierFile {
            format: CLASSIFIER_FORMAT.to_string(),
            alphas: self.alphas.clone(),
            hypotheses: self.hypotheses.as_slice(),
        };
        toml::to_string(&file)
            .map_err(|e| Error::InvalidInput(format!("cannot serialize classifier: {e}")))
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        std::fs::write(path, self.to_toml()?).map_err(|e| Error::io(path, e))
    }
}

impl<H: WeakHypothesis + DeserializeOwned> StrongClassifier<H> {
    pub fn from_toml(text: &str) -> Result<Self> {
        let file: ClassifierFile<Vec<H>> = toml::from_str(text).map_err(|e| Error::Format {
            offset: e.span().map_or(0, |s| s.start as u64),
            message: e.message().to_string(),
        })?;
        if file.format != CLASSIFIER_FORMAT {
            return Err(Error::Format {
                offset: 0,
                message: format!("unsupported classifier format {:?}", file.format),
            });
        }
        StrongClassifier::new(file.hypotheses, file.alphas)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_toml(&text).map_err(|e| e.context(format!("classifier {}", path.display())))
    }
}
