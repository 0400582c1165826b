//! Oza–Russell online boosting over a fixed, ordered hypothesis pool.
//!
//! Each coordinate keeps one pair of running sums. An example adds its
//! current weight to the sum matching its margin and is then reweighted
//! before moving to the next coordinate. No correction of previously
//! accumulated mass is ever applied.

use serde::{Deserialize, Serialize};

use crate::batch::{fit_weights, reweight};
use crate::error::{Error, Result};
use crate::margin::{MarginMatrix, Sign};
use crate::trajectory::AlphaTrajectory;

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum OzaMode {
    /// The original two-case rule: `d (W+ + W-) / (2 W±)`.
    #[default]
    Averaged,
    /// AdaBoost reweighting `d exp(-alpha m)`; equals OCB with order 0.
    Exponential,
}

impl OzaMode {
    pub fn name(self) -> &'static str {
        match self {
            OzaMode::Averaged => "averaged",
            OzaMode::Exponential => "exponential",
        }
    }
}

impl std::str::FromStr for OzaMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "averaged" => Ok(OzaMode::Averaged),
            "exponential" => Ok(OzaMode::Exponential),
            other => Err(Error::InvalidConfig(format!("unknown Oza mode {other:?}"))),
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct OzaState {
    mode: OzaMode,
    smoothing: f64,
    w_plus: Vec<f64>,
    w_minus: Vec<f64>,
    alphas: Vec<f64>,
    examples_seen: usize,
}

/// Two-case rule: `d (W+ + W-) / (2 W+)` when correct, `d (W+ + W-) / (2 W-)` when wrong.
pub fn two_case_reweight(d: f64, w_plus: f64, w_minus: f64, margin: Sign) -> f64 {
    let denom = match margin {
        Sign::Plus => w_plus,
        Sign::Minus => w_minus,
    };
    d * ((w_plus + w_minus) / (2.0 * denom))
}

/// `(d + d exp(-2 alpha m)) / 2`: the average of the old weight and its AdaBoost update.
pub fn consolidated_reweight(d: f64, alpha: f64, margin: Sign) -> f64 {
    (d + d * (-2.0 * alpha * margin.as_f64()).exp()) / 2.0
}

impl OzaState {
    pub fn init_cold(n_hypotheses: usize, smoothing: f64, mode: OzaMode) -> Result<Self> {
        if !(smoothing > 0.0 && smoothing.is_finite()) {
            return Err(Error::InvalidConfig(
                "cold start needs finite positive smoothing".into(),
            ));
        }
        if n_hypotheses == 0 {
            return Err(Error::InvalidInput("need at least one hypothesis".into()));
        }
        Ok(OzaState {
            mode,
            smoothing,
            w_plus: vec![smoothing; n_hypotheses],
            w_minus: vec![smoothing; n_hypotheses],
            alphas: vec![0.0; n_hypotheses],
            examples_seen: 0,
        })
    }

    /// Seeds the sums with `smoothing` plus the batch AdaBoost sums on `prefix`.
    pub fn init_warm(prefix: &MarginMatrix, smoothing: f64, mode: OzaMode) -> Result<Self> {
        let fit = fit_weights(prefix, smoothing)?;
        Ok(OzaState {
            mode,
            smoothing,
            w_plus: fit.sums.iter().map(|s| s.plus + smoothing).collect(),
            w_minus: fit.sums.iter().map(|s| s.minus + smoothing).collect(),
            alphas: fit.alphas,
            examples_seen: prefix.n_examples(),
        })
    }

    pub fn mode(&self) -> OzaMode {
        self.mode
    }

    pub fn smoothing(&self) -> f64 {
        self.smoothing
    }

    pub fn alphas(&self) -> &[f64] {
        &self.alphas
    }

    pub fn sums(&self) -> (&[f64], &[f64]) {
        (&self.w_plus, &self.w_minus)
    }

    pub fn examples_seen(&self) -> usize {
        self.examples_seen
    }

    pub fn process_example(&mut self, row: &[Sign]) -> Result<&[f64]> {
        if row.len() != self.alphas.len() {
            return Err(Error::InvalidInput(format!(
                "row has {} margins, expected {}",
                row.len(),
                self.alphas.len()
            )));
        }
        let mut d = 1.0;
        for (j, &m) in row.iter().enumerate() {
            if m.is_plus() {
                self.w_plus[j] += d;
            } else {
                self.w_minus[j] += d;
            }
            let (wp, wm) = (self.w_plus[j], self.w_minus[j]);
            if wp == 0.0 || wm == 0.0 {
                return Err(Error::DivisionByZero { coordinate: j + 1 });
            }
            let alpha = 0.5 * (wp / wm).ln();
            self.alphas[j] = alpha;
            d = match self.mode {
                OzaMode::Averaged => two_case_reweight(d, wp, wm, m),
                OzaMode::Exponential => reweight(d, alpha, m),
            };
            if !d.is_finite() {
                return Err(Error::NumericOverflow {
                    coordinate: j + 1,
                    value: d,
                });
            }
        }
        self.examples_seen += 1;
        Ok(&self.alphas)
    }

    pub fn run_stream(&mut self, m: &MarginMatrix) -> Result<AlphaTrajectory> {
        let mut traj = AlphaTrajectory::with_offset(self.alphas.len(), self.examples_seen);
        let base = self.examples_seen;
        for (i, row) in m.rows().enumerate() {
            let alphas = self.process_example(row).map_err(|e| Error::AtExample {
                index: base + i + 1,
                source: Box::new(e),
            })?;
            traj.push(alphas.to_vec())?;
        }
        Ok(traj)
    }
}
