//! K-order Online Coordinate Boosting.
//!
//! The learner keeps, for every pair of coordinates `k <= j`, running
//! approximations of
//!
//! ```text
//! W+_jk ~ sum { d_ij : m_ij = +1 and m_ik = +1 }
//! W-_jk ~ sum { d_ij : m_ij = -1 and m_ik = -1 }
//! ```
//!
//! where `d_ij` is the weight example `i` carries into coordinate `j` under the
//! *current* alphas. When a new example shifts the earlier alphas by `dα_k`,
//! every stored weight would need to be multiplied by `exp(-dα_k m_ik)`. That
//! depends on margins that are no longer stored, so each factor is replaced
//! by its weighted average over the stored sums,
//!
//! ```text
//! q exp(-dα_k) + (1 - q) exp(dα_k),   q = fraction of the row's mass with m_k = +1
//! ```
//!
//! and only the `K` most recent coordinates contribute (`O(JK)` per example).
//! The diagonal cells give the alphas, `alpha_j = 1/2 log(W+_jj / W-_jj)`.

use std::fmt;
use std::io::{BufRead, Write};
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::batch::{fit_prefix_with, reweight};
use crate::error::{Error, Result};
use crate::margin::{MarginMatrix, Sign};
use crate::trajectory::AlphaTrajectory;

/// How the correction for the negative-margin sums estimates `q`.
///
/// The positive-margin correction weights `exp(-dα_k)` by the fraction of
/// `W+_j` mass where coordinate `k` is also correct. For the negative sums
/// `W-_jk` stores the mass where `k` is *also wrong*, so there are two
/// readings of the coefficient on `exp(-dα_k)`:
///
/// * [`AsWritten`](Self::AsWritten): `W-_jk / W-_jj` (the fraction where `k` is wrong).
/// * [`PositiveFraction`](Self::PositiveFraction): `1 - W-_jk / W-_jj`, the
///   fraction where `k` is correct, which is the weighted-least-squares
///   minimizer for a factor `exp(-dα_k m_ik)`.
///
/// `PositiveFraction` is the default. With `AsWritten` the approximation
/// error grows with the order.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum NegativeSumConvention {
    AsWritten,
    #[default]
    #[serde(rename = "theorem_consistent")]
    PositiveFraction,
}

impl NegativeSumConvention {
    pub const ALL: [NegativeSumConvention; 2] = [
        NegativeSumConvention::AsWritten,
        NegativeSumConvention::PositiveFraction,
    ];

    pub fn name(self) -> &'static str {
        match self {
            NegativeSumConvention::AsWritten => "as_written",
            NegativeSumConvention::PositiveFraction => "theorem_consistent",
        }
    }
}

impl fmt::Display for NegativeSumConvention {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for NegativeSumConvention {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "as_written" => Ok(NegativeSumConvention::AsWritten),
            "theorem_consistent" => Ok(NegativeSumConvention::PositiveFraction),
            other => Err(Error::InvalidConfig(format!(
                "unknown convention {other:?} (expected as_written or theorem_consistent)"
            ))),
        }
    }
}

pub const DEFAULT_SMOOTHING: f64 = 0.01;
pub const DEFAULT_OVERFLOW_THRESHOLD: f64 = 1e100;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct OcbConfig {
    /// Number of preceding coordinates in each correction product. Clamped to `J`.
    pub order: usize,
    /// Seed value for every weight sum.
    pub smoothing: f64,
    pub convention: NegativeSumConvention,
    /// Any diagonal sum or example weight above this raises [`Error::NumericOverflow`].
    pub overflow_threshold: f64,
    /// Instead of failing on overflow, divide both sums of the offending row by
    /// a common factor. This keeps `alpha_j` and the row's ratios but is not
    /// part of the reference algorithm: later additions get relatively more weight.
    pub rescale_rows: bool,
}

impl OcbConfig {
    pub fn new(order: usize) -> Self {
        OcbConfig {
            order,
            ..OcbConfig::default()
        }
    }

    pub fn smoothing(mut self, smoothing: f64) -> Self {
        self.smoothing = smoothing;
        self
    }

    pub fn convention(mut self, convention: NegativeSumConvention) -> Self {
        self.convention = convention;
        self
    }

    fn validate(&self) -> Result<()> {
        if !(self.smoothing >= 0.0 && self.smoothing.is_finite()) {
            return Err(Error::InvalidConfig(format!(
                "smoothing must be finite and non-negative, got {}",
                self.smoothing
            )));
        }
        if self.overflow_threshold.is_nan() || self.overflow_threshold <= 0.0 {
            return Err(Error::InvalidConfig(
                "overflow threshold must be positive".into(),
            ));
        }
        Ok(())
    }
}

impl Default for OcbConfig {
    fn default() -> Self {
        OcbConfig {
            order: 0,
            smoothing: DEFAULT_SMOOTHING,
            convention: NegativeSumConvention::default(),
            overflow_threshold: DEFAULT_OVERFLOW_THRESHOLD,
            rescale_rows: false,
        }
    }
}

/// Packed lower-triangular `(J+1) x (J+1)` matrix; index 0 is the sentinel coordinate.
#[derive(Clone, Debug, PartialEq)]
pub struct TriangularSums {
    dim: usize,
    cells: Vec<f64>,
}

impl TriangularSums {
    fn filled(dim: usize, value: f64) -> Self {
        TriangularSums {
            dim,
            cells: vec![value; dim * (dim + 1) / 2],
        }
    }

    #[inline]
    fn idx(j: usize, k: usize) -> usize {
        debug_assert!(k <= j);
        j * (j + 1) / 2 + k
    }

    #[inline]
    pub fn get(&self, j: usize, k: usize) -> f64 {
        self.cells[Self::idx(j, k)]
    }

    #[inline]
    fn get_mut(&mut self, j: usize, k: usize) -> &mut f64 {
        &mut self.cells[Self::idx(j, k)]
    }

    /// Cells `(j, 0..=j)`.
    pub fn row(&self, j: usize) -> &[f64] {
        let start = Self::idx(j, 0);
        &self.cells[start..=start + j]
    }

    fn row_mut(&mut self, j: usize) -> &mut [f64] {
        let start = Self::idx(j, 0);
        &mut self.cells[start..=start + j]
    }

    pub fn dim(&self) -> usize {
        self.dim
    }
}

/// Entire memory of the online learner.
#[derive(Clone, Debug, PartialEq)]
pub struct OcbState {
    config: OcbConfig,
    n_hypotheses: usize,
    w_plus: TriangularSums,
    w_minus: TriangularSums,
    alphas: Vec<f64>,
    /// `delta_alphas[0]` is the sentinel and stays 0.
    delta_alphas: Vec<f64>,
    examples_seen: usize,
}

impl OcbState {
    /// Option 1: all alphas zero, every sum seeded with `smoothing`.
    pub fn init_cold(n_hypotheses: usize, config: OcbConfig) -> Result<Self> {
        config.validate()?;
        if config.smoothing == 0.0 {
            return Err(Error::InvalidConfig(
                "cold start needs positive smoothing (first alpha would be log(0/0))".into(),
            ));
        }
        if n_hypotheses == 0 {
            return Err(Error::InvalidInput("need at least one hypothesis".into()));
        }
        let dim = n_hypotheses + 1;
        Ok(OcbState {
            config: OcbConfig {
                order: config.order.min(n_hypotheses),
                ..config
            },
            n_hypotheses,
            w_plus: TriangularSums::filled(dim, config.smoothing),
            w_minus: TriangularSums::filled(dim, config.smoothing),
            alphas: vec![0.0; n_hypotheses],
            delta_alphas: vec![0.0; dim],
            examples_seen: 0,
        })
    }

    /// Option 2: seed the sums from a batch AdaBoost fit on `prefix`.
    ///
    /// `W±_jk = smoothing + sum { d_ij : m_ij = m_ik = ± }` with the batch
    /// weights `d_ij`, and the alphas equal the batch alphas (fitted with the
    /// same smoothing inside the log ratio).
    pub fn init_warm(prefix: &MarginMatrix, config: OcbConfig) -> Result<Self> {
        config.validate()?;
        let n_hyp = prefix.n_hypotheses();
        let dim = n_hyp + 1;
        let eps = config.smoothing;
        let mut w_plus = TriangularSums::filled(dim, 0.0);
        let mut w_minus = TriangularSums::filled(dim, 0.0);

        let fit = fit_prefix_with(prefix, prefix.n_examples(), eps, |j, d| {
            let jj = j + 1;
            for (i, &w) in d.iter().enumerate() {
                let row = prefix.row(i);
                let sums = if row[j].is_plus() {
                    &mut w_plus
                } else {
                    &mut w_minus
                };
                // sentinel column: every example counts
                *sums.get_mut(jj, 0) += w;
                for k in 1..=jj {
                    if row[k - 1] == row[j] {
                        *sums.get_mut(jj, k) += w;
                    }
                }
            }
        })?;
        for cell in w_plus.cells.iter_mut().chain(w_minus.cells.iter_mut()) {
            *cell += eps;
        }

        Ok(OcbState {
            config: OcbConfig {
                order: config.order.min(n_hyp),
                ..config
            },
            n_hypotheses: n_hyp,
            w_plus,
            w_minus,
            alphas: fit.alphas,
            delta_alphas: vec![0.0; dim],
            examples_seen: prefix.n_examples(),
        })
    }

    pub fn config(&self) -> &OcbConfig {
        &self.config
    }

    pub fn n_hypotheses(&self) -> usize {
        self.n_hypotheses
    }

    /// Effective order after clamping.
    pub fn order(&self) -> usize {
        self.config.order
    }

    pub fn alphas(&self) -> &[f64] {
        &self.alphas
    }

    /// Index 0 is the sentinel; `delta_alphas()[j]` is the last change of `alpha_j`.
    pub fn delta_alphas(&self) -> &[f64] {
        &self.delta_alphas
    }

    pub fn examples_seen(&self) -> usize {
        self.examples_seen
    }

    pub fn sums(&self, sign: Sign) -> &TriangularSums {
        match sign {
            Sign::Plus => &self.w_plus,
            Sign::Minus => &self.w_minus,
        }
    }

    /// Estimated fraction of row `j`'s `sign` mass on which coordinate `k` is correct.
    pub fn q_estimate(&self, j: usize, k: usize, sign: Sign) -> Result<f64> {
        let sums = self.sums(sign);
        let diag = sums.get(j, j);
        if diag == 0.0 {
            return Err(Error::DivisionByZero { coordinate: j });
        }
        let ratio = sums.get(j, k) / diag;
        Ok(match (sign, self.config.convention) {
            (Sign::Plus, _) | (Sign::Minus, NegativeSumConvention::AsWritten) => ratio,
            (Sign::Minus, NegativeSumConvention::PositiveFraction) => 1.0 - ratio,
        })
    }

    /// Correction factor for row `j` (1-based) and the given sign, over the
    /// `K` coordinates preceding `j`.
    ///
    /// The sentinel coordinate 0 is skipped: its change is identically zero, so
    /// its factor is exactly one.
    pub fn pi_product(&self, j: usize, sign: Sign) -> Result<f64> {
        if j == 0 || j > self.n_hypotheses {
            return Err(Error::InvalidInput(format!(
                "coordinate {j} outside 1..={}",
                self.n_hypotheses
            )));
        }
        let first = j.saturating_sub(self.config.order).max(1);
        let mut pi = 1.0;
        for k in first..j {
            let q = self.q_estimate(j, k, sign)?;
            let da = self.delta_alphas[k];
            pi *= q * (-da).exp() + (1.0 - q) * da.exp();
        }
        Ok(pi)
    }

    /// Processes one example's margin row and returns the updated alphas.
    pub fn process_example(&mut self, row: &[Sign]) -> Result<&[f64]> {
        if row.len() != self.n_hypotheses {
            return Err(Error::InvalidInput(format!(
                "row has {} margins, expected {}",
                row.len(),
                self.n_hypotheses
            )));
        }
        let threshold = self.config.overflow_threshold;
        let mut d = 1.0;
        for j in 1..=self.n_hypotheses {
            let pi_plus = self.pi_product(j, Sign::Plus)?;
            let pi_minus = self.pi_product(j, Sign::Minus)?;
            let mj = row[j - 1];
            let add_plus = if mj.is_plus() { d } else { 0.0 };
            let add_minus = if mj.is_plus() { 0.0 } else { d };
            {
                let plus = self.w_plus.row_mut(j);
                for k in 1..=j {
                    let same = row[k - 1] == mj;
                    plus[k] = plus[k] * pi_plus + if same { add_plus } else { 0.0 };
                }
            }
            {
                let minus = self.w_minus.row_mut(j);
                for k in 1..=j {
                    let same = row[k - 1] == mj;
                    minus[k] = minus[k] * pi_minus + if same { add_minus } else { 0.0 };
                }
            }

            let (mut wp, mut wm) = (self.w_plus.get(j, j), self.w_minus.get(j, j));
            let worst = wp.max(wm);
            if worst.is_nan() || worst > threshold {
                if self.config.rescale_rows && worst.is_finite() {
                    for cell in self.w_plus.row_mut(j).iter_mut().skip(1) {
                        *cell /= worst;
                    }
                    for cell in self.w_minus.row_mut(j).iter_mut().skip(1) {
                        *cell /= worst;
                    }
                    wp = self.w_plus.get(j, j);
                    wm = self.w_minus.get(j, j);
                } else {
                    return Err(Error::NumericOverflow {
                        coordinate: j,
                        value: worst,
                    });
                }
            }

            let alpha = 0.5 * (wp / wm).ln();
            if !alpha.is_finite() {
                return Err(Error::NumericOverflow {
                    coordinate: j,
                    value: alpha,
                });
            }
            self.delta_alphas[j] = alpha - self.alphas[j - 1];
            self.alphas[j - 1] = alpha;
            d = reweight(d, alpha, mj);
            if d.is_nan() || d > threshold {
                return Err(Error::NumericOverflow {
                    coordinate: j,
                    value: d,
                });
            }
        }
        self.examples_seen += 1;
        Ok(&self.alphas)
    }

    /// Streams every row of `m`; step `n` of the result is the alphas after row `n`.
    pub fn run_stream(&mut self, m: &MarginMatrix) -> Result<AlphaTrajectory> {
        let mut traj = AlphaTrajectory::with_offset(self.n_hypotheses, self.examples_seen);
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

    const MAGIC: &'static str = "ocboost-ocb-state v1";

    /// Writes a versioned plain-text checkpoint that restores bit-identically.
    pub fn write_checkpoint<W: Write>(&self, mut w: W) -> Result<()> {
        let io = |e| Error::io("<checkpoint>", e);
        let c = &self.config;
        writeln!(w, "{}", Self::MAGIC).map_err(io)?;
        writeln!(w, "J {}", self.n_hypotheses).map_err(io)?;
        writeln!(w, "K {}", c.order).map_err(io)?;
        writeln!(w, "epsilon {:e}", c.smoothing).map_err(io)?;
        writeln!(w, "convention {}", c.convention).map_err(io)?;
        writeln!(w, "examples_seen {}", self.examples_seen).map_err(io)?;
        writeln!(w, "overflow_threshold {:e}", c.overflow_threshold).map_err(io)?;
        writeln!(w, "rescale_rows {}", c.rescale_rows).map_err(io)?;
        let line = |w: &mut W, values: &[f64]| -> Result<()> {
            let text: Vec<String> = values.iter().map(|v| format!("{v:e}")).collect();
            writeln!(w, "{}", text.join(" ")).map_err(io)
        };
        for (name, sums) in [("wplus", &self.w_plus), ("wminus", &self.w_minus)] {
            writeln!(w, "{name}").map_err(io)?;
            for j in 0..sums.dim() {
                line(&mut w, sums.row(j))?;
            }
        }
        writeln!(w, "alphas").map_err(io)?;
        line(&mut w, &self.alphas)?;
        writeln!(w, "delta_alphas").map_err(io)?;
        line(&mut w, &self.delta_alphas)?;
        Ok(())
    }

    pub fn read_checkpoint<R: BufRead>(r: R) -> Result<Self> {
        let lines = r
            .lines()
            .collect::<std::io::Result<Vec<String>>>()
            .map_err(|e| Error::io("<checkpoint>", e))?;
        let mut cur = Cursor { lines, pos: 0 };

        cur.section(Self::MAGIC)?;
        let n_hyp: usize = cur.field("J")?;
        let order: usize = cur.field("K")?;
        let smoothing: f64 = cur.field("epsilon")?;
        let convention: NegativeSumConvention = cur.field("convention")?;
        let examples_seen: usize = cur.field("examples_seen")?;
        let overflow_threshold: f64 = cur.field("overflow_threshold")?;
        let rescale_rows: bool = cur.field("rescale_rows")?;
        if n_hyp == 0 || order > n_hyp {
            return Err(Cursor::bad(3, format!("invalid J={n_hyp}, K={order}")));
        }

        let dim = n_hyp + 1;
        let mut sums = |name: &str| -> Result<TriangularSums> {
            cur.section(name)?;
            let mut s = TriangularSums::filled(dim, 0.0);
            for j in 0..dim {
                let row = cur.values(j + 1)?;
                s.row_mut(j).copy_from_slice(&row);
            }
            Ok(s)
        };
        let w_plus = sums("wplus")?;
        let w_minus = sums("wminus")?;
        cur.section("alphas")?;
        let alphas = cur.values(n_hyp)?;
        cur.section("delta_alphas")?;
        let delta_alphas = cur.values(dim)?;
        let config = OcbConfig {
            order,
            smoothing,
            convention,
            overflow_threshold,
            rescale_rows,
        };
        config.validate()?;
        Ok(OcbState {
            config,
            n_hypotheses: n_hyp,
            w_plus,
            w_minus,
            alphas,
            delta_alphas,
            examples_seen,
        })
    }
}

/// Line-by-line reader for the checkpoint text format.
struct Cursor {
    lines: Vec<String>,
    pos: usize,
}

impl Cursor {
    fn bad(line: usize, message: String) -> Error {
        Error::Format {
            offset: line as u64,
            message: format!("checkpoint line {line}: {message}"),
        }
    }

    fn next(&mut self, what: &str) -> Result<(usize, &str)> {
        let line = self.lines.get(self.pos).ok_or_else(|| Error::Format {
            offset: self.pos as u64,
            message: format!("checkpoint ends before {what}"),
        })?;
        self.pos += 1;
        Ok((self.pos, line.as_str()))
    }

    fn section(&mut self, name: &str) -> Result<()> {
        let (n, line) = self.next(name)?;
        if line != name {
            return Err(Self::bad(n, format!("expected {name:?}")));
        }
        Ok(())
    }

    fn field<T: FromStr>(&mut self, key: &str) -> Result<T> {
        let (n, line) = self.next(key)?;
        match line.split_once(' ') {
            Some((k, v)) if k == key => v
                .parse()
                .map_err(|_| Self::bad(n, format!("bad {key} value {v:?}"))),
            _ => Err(Self::bad(n, format!("expected `{key} <value>`"))),
        }
    }

    fn values(&mut self, expected: usize) -> Result<Vec<f64>> {
        let (n, line) = self.next("values")?;
        let parsed = line
            .split_ascii_whitespace()
            .map(|v| {
                v.parse::<f64>()
                    .map_err(|_| Self::bad(n, format!("bad number {v:?}")))
            })
            .collect::<Result<Vec<f64>>>()?;
        if parsed.len() != expected {
            return Err(Self::bad(
                n,
                format!("expected {expected} values, got {}", parsed.len()),
            ));
        }
        Ok(parsed)
    }
}

/// Closed-form minimizer of [`q_error`]: the weighted fraction of the
/// `sigma`-subset (rows where `margins_big_j == sigma`) with `margins_j = +1`.
/// `None` when the subset carries no weight.
pub fn optimal_q(
    weights: &[f64],
    margins_j: &[Sign],
    margins_big_j: &[Sign],
    sigma: Sign,
) -> Option<f64> {
    let (mut pos, mut total) = (0.0, 0.0);
    for ((&w, &mj), &mbig) in weights.iter().zip(margins_j).zip(margins_big_j) {
        if mbig == sigma {
            total += w;
            if mj.is_plus() {
                pos += w;
            }
        }
    }
    (total > 0.0).then(|| pos / total)
}

/// Weighted squared approximation error of replacing `exp(-dα m_ij)` by the
/// `q`-mixture over the `sigma`-subset:
/// `sum d_i ( [m_ij=-1] q² δ² + [m_ij=+1] (1-q)² δ² )`, `δ = exp(-dα) - exp(dα)`.
pub fn q_error(
    weights: &[f64],
    margins_j: &[Sign],
    margins_big_j: &[Sign],
    sigma: Sign,
    delta_alpha: f64,
    q: f64,
) -> Result<f64> {
    if weights.len() != margins_j.len() || weights.len() != margins_big_j.len() {
        return Err(Error::InvalidInput(
            "weight and margin vectors differ in length".into(),
        ));
    }
    let delta = (-delta_alpha).exp() - delta_alpha.exp();
    let d2 = delta * delta;
    Ok(weights
        .iter()
        .zip(margins_j)
        .zip(margins_big_j)
        .filter(|(_, &mbig)| mbig == sigma)
        .map(|((&w, &mj), _)| {
            if mj.is_plus() {
                w * (1.0 - q) * (1.0 - q) * d2
            } else {
                w * q * q * d2
            }
        })
        .sum())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::batch::{fit_weights, incremental_oracle_from};
    use approx::assert_relative_eq;
    use proptest::prelude::*;

    fn signs(v: &[i8]) -> Vec<Sign> {
        v.iter().map(|&x| Sign::try_from(x).unwrap()).collect()
    }

    fn random_matrix(n: usize, j: usize) -> impl Strategy<Value = MarginMatrix> {
        prop::collection::vec(prop::bool::weighted(0.65), n * j).prop_map(move |cells| {
            MarginMatrix::new(n, j, cells.into_iter().map(Sign::from_bool).collect()).unwrap()
        })
    }

    #[test]
    fn cold_start_layout() {
        let s = OcbState::init_cold(3, OcbConfig::new(2).smoothing(0.5)).unwrap();
        assert_eq!(s.alphas(), &[0.0; 3]);
        assert_eq!(s.delta_alphas(), &[0.0; 4]);
        for sign in [Sign::Plus, Sign::Minus] {
            assert_eq!(s.sums(sign).cells, vec![0.5; 10]);
        }
        assert_eq!(s.examples_seen(), 0);
    }

    #[test]
    fn cold_start_needs_smoothing() {
        assert!(matches!(
            OcbState::init_cold(3, OcbConfig::new(1).smoothing(0.0)),
            Err(Error::InvalidConfig(_))
        ));
    }

    #[test]
    fn order_is_clamped() {
        let s = OcbState::init_cold(3, OcbConfig::new(50)).unwrap();
        assert_eq!(s.order(), 3);
    }

    #[test]
    fn warm_start_hand_values() {
        let m = MarginMatrix::from_rows(&[[1i8, 1], [1, -1], [-1, 1]]).unwrap();
        let s = OcbState::init_warm(&m, OcbConfig::new(2).smoothing(0.0)).unwrap();
        let r2 = std::f64::consts::FRAC_1_SQRT_2;
        let (p, q) = (s.sums(Sign::Plus), s.sums(Sign::Minus));
        assert_eq!(p.get(1, 1), 2.0);
        assert_eq!(q.get(1, 1), 1.0);
        assert_relative_eq!(p.get(2, 2), 3.0 * r2, max_relative = 1e-12);
        assert_relative_eq!(q.get(2, 2), r2, max_relative = 1e-12);
        assert_relative_eq!(p.get(2, 1), r2, max_relative = 1e-12);
        assert_eq!(q.get(2, 1), 0.0);
        assert_eq!(s.alphas(), fit_weights(&m, 0.0).unwrap().alphas.as_slice());
        for j in 1..=2 {
            assert_eq!(s.alphas()[j - 1], 0.5 * (p.get(j, j) / q.get(j, j)).ln());
        }
        assert_eq!(s.examples_seen(), 3);
    }

    #[test]
    fn pi_is_one_without_changes() {
        let m = MarginMatrix::from_rows(&[[1i8, 1, -1], [1, -1, 1], [-1, 1, 1]]).unwrap();
        let s = OcbState::init_warm(&m, OcbConfig::new(3).smoothing(0.1)).unwrap();
        for j in 1..=3 {
            for sign in [Sign::Plus, Sign::Minus] {
                assert_eq!(s.pi_product(j, sign).unwrap(), 1.0);
            }
        }
        let s0 = OcbState::init_warm(&m, OcbConfig::new(0).smoothing(0.1)).unwrap();
        let mut moved = s0.clone();
        moved.delta_alphas = vec![0.0, 0.3, -0.7, 0.2];
        assert_eq!(moved.pi_product(3, Sign::Minus).unwrap(), 1.0);
    }

    #[test]
    fn pi_single_factor_conventions() {
        // one factor: q = 1/3 on W-_21 / W-_22, dα_1 = ln 2
        let cfg = OcbConfig::new(1)
            .smoothing(1.0)
            .convention(NegativeSumConvention::AsWritten);
        let mut s = OcbState::init_cold(2, cfg).unwrap();
        *s.w_minus.get_mut(2, 1) = 1.0;
        *s.w_minus.get_mut(2, 2) = 3.0;
        s.delta_alphas[1] = 2f64.ln();
        assert_relative_eq!(
            s.pi_product(2, Sign::Minus).unwrap(),
            1.5,
            max_relative = 1e-12
        );
        s.config.convention = NegativeSumConvention::PositiveFraction;
        assert_relative_eq!(
            s.pi_product(2, Sign::Minus).unwrap(),
            1.0,
            max_relative = 1e-12
        );
    }

    #[test]
    fn single_step_traces() {
        let mut s = OcbState::init_cold(1, OcbConfig::new(1).smoothing(0.5)).unwrap();
        s.process_example(&signs(&[1])).unwrap();
        assert_eq!(s.sums(Sign::Plus).get(1, 1), 1.5);
        assert_eq!(s.sums(Sign::Minus).get(1, 1), 0.5);
        assert_relative_eq!(s.alphas()[0], 0.5 * 3f64.ln(), max_relative = 1e-12);

        s.process_example(&signs(&[-1])).unwrap();
        assert_eq!(s.sums(Sign::Plus).get(1, 1), 1.5);
        assert_eq!(s.sums(Sign::Minus).get(1, 1), 1.5);
        assert_eq!(s.alphas()[0], 0.0);
        assert_eq!(s.examples_seen(), 2);
    }

    #[test]
    fn wrong_row_length_rejected() {
        let mut s = OcbState::init_cold(2, OcbConfig::new(1)).unwrap();
        assert!(s.process_example(&signs(&[1])).is_err());
    }

    #[test]
    fn overflow_is_reported_or_rescaled() {
        let mut cfg = OcbConfig::new(0).smoothing(1.0);
        cfg.overflow_threshold = 5.0;
        let mut s = OcbState::init_cold(1, cfg).unwrap();
        let row = signs(&[1]);
        let err = (0..10).find_map(|_| s.process_example(&row).err()).unwrap();
        assert!(matches!(err, Error::NumericOverflow { coordinate: 1, .. }));

        cfg.rescale_rows = true;
        let mut s = OcbState::init_cold(1, cfg).unwrap();
        for _ in 0..10 {
            s.process_example(&row).unwrap();
            assert!(s.sums(Sign::Plus).get(1, 1) <= 5.0);
        }
        assert!(s.alphas()[0] > 0.0);
    }

    #[test]
    fn checkpoint_round_trip_mid_stream() {
        let rows: Vec<[i8; 3]> = (0..40)
            .map(|i| {
                [
                    if i % 3 == 0 { -1 } else { 1 },
                    if i % 5 == 1 { -1 } else { 1 },
                    if i % 2 == 0 { 1 } else { -1 },
                ]
            })
            .collect();
        let m = MarginMatrix::from_rows(&rows).unwrap();
        let mut s = OcbState::init_warm(&m.prefix(5).unwrap(), OcbConfig::new(2)).unwrap();
        s.run_stream(&m.slice_rows(5, 20).unwrap()).unwrap();
        let mut buf = Vec::new();
        s.write_checkpoint(&mut buf).unwrap();
        let restored = OcbState::read_checkpoint(buf.as_slice()).unwrap();
        assert_eq!(restored, s);
        assert!(OcbState::read_checkpoint(&buf[..buf.len() / 2]).is_err());
        assert!(OcbState::read_checkpoint("garbage\n".as_bytes()).is_err());
    }

    #[test]
    fn q_error_examples() {
        let d = [1.0, 1.0, 2.0];
        let mj = signs(&[1, 1, -1]);
        let mbig = signs(&[1, -1, 1]);
        assert_eq!(q_error(&d, &mj, &mbig, Sign::Plus, 0.0, 0.42).unwrap(), 0.0);
        // |δ| = 1 when sinh(dα) = 1/2
        let da = 0.5f64.asinh();
        let e = |q: f64| q_error(&d, &mj, &mbig, Sign::Plus, da, q).unwrap();
        assert_relative_eq!(e(0.25), 0.75 * 0.75 + 2.0 * 0.0625, max_relative = 1e-12);
        let q = optimal_q(&d, &mj, &mbig, Sign::Plus).unwrap();
        assert_relative_eq!(q, 1.0 / 3.0, max_relative = 1e-15);
        let grid_min = (0..=10_000)
            .map(|k| e(k as f64 / 10_000.0))
            .fold(f64::INFINITY, f64::min);
        assert!(e(q) <= grid_min + 1e-12);

        let all_pos = signs(&[1, 1, 1]);
        assert_eq!(optimal_q(&d, &all_pos, &mbig, Sign::Plus), Some(1.0));
        assert_eq!(
            q_error(&d, &all_pos, &mbig, Sign::Plus, da, 1.0).unwrap(),
            0.0
        );
        assert_eq!(
            optimal_q(&d, &all_pos, &signs(&[1, 1, 1]), Sign::Minus),
            None
        );
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(64))]

        #[test]
        fn coordinate_one_is_exact(m in random_matrix(60, 4), k in 0usize..=4) {
            let prefix = m.prefix(10).unwrap();
            prop_assume!(fit_weights(&prefix, 0.0).is_ok());
            for conv in NegativeSumConvention::ALL {
                let cfg = OcbConfig::new(k).smoothing(0.0).convention(conv);
                let mut s = OcbState::init_warm(&prefix, cfg).unwrap();
                let traj = s.run_stream(&m.slice_rows(10, 60).unwrap()).unwrap();
                let oracle = incremental_oracle_from(&m, 11, 0.0).unwrap();
                for n in 11..=60 {
                    let a = traj.after(n).unwrap()[0];
                    let b = oracle.after(n).unwrap()[0];
                    prop_assert!((a - b).abs() <= 1e-10 * b.abs().max(1e-300) || a == b);
                }
            }
        }

        #[test]
        fn state_invariants_hold(m in random_matrix(40, 5), k in 0usize..=6, eps in 0.01..1.0f64, warm in any::<bool>()) {
            for conv in NegativeSumConvention::ALL {
                let cfg = OcbConfig::new(k).smoothing(eps).convention(conv);
                let (mut s, start) = if warm {
                    (OcbState::init_warm(&m.prefix(5).unwrap(), cfg).unwrap(), 5)
                } else {
                    (OcbState::init_cold(5, cfg).unwrap(), 0)
                };
                for i in start..m.n_examples() {
                    s.process_example(m.row(i)).unwrap();
                    prop_assert_eq!(s.delta_alphas()[0], 0.0);
                    for j in 1..=5 {
                        for sign in [Sign::Plus, Sign::Minus] {
                            let sums = s.sums(sign);
                            let diag = sums.get(j, j);
                            prop_assert!(diag > 0.0);
                            for kk in 1..=j {
                                let r = sums.get(j, kk) / diag;
                                prop_assert!(sums.get(j, kk) >= 0.0);
                                prop_assert!((0.0..=1.0 + 1e-12).contains(&r), "ratio {} at ({}, {})", r, j, kk);
                            }
                            prop_assert!(s.pi_product(j, sign).unwrap() > 0.0);
                        }
                        let expect = 0.5 * (s.sums(Sign::Plus).get(j, j) / s.sums(Sign::Minus).get(j, j)).ln();
                        prop_assert_eq!(s.alphas()[j - 1], expect);
                    }
                }
            }
        }

        #[test]
        fn all_correct_row_never_lowers_alpha_at_order_zero(m in random_matrix(20, 4)) {
            let mut s = OcbState::init_warm(&m.prefix(20).unwrap(), OcbConfig::new(0)).unwrap();
            let before = s.alphas().to_vec();
            let after = s.process_example(&[Sign::Plus; 4]).unwrap();
            for (a, b) in after.iter().zip(&before) {
                prop_assert!(a >= b);
            }
        }

        #[test]
        fn stream_equals_stepwise(m in random_matrix(30, 4), k in 0usize..=4) {
            let cfg = OcbConfig::new(k);
            let mut a = OcbState::init_cold(4, cfg).unwrap();
            let traj = a.run_stream(&m).unwrap();
            let mut b = OcbState::init_cold(4, cfg).unwrap();
            for i in 0..m.n_examples() {
                prop_assert_eq!(b.process_example(m.row(i)).unwrap(), traj.steps()[i].as_slice());
            }
            prop_assert_eq!(a, b);
        }

        #[test]
        fn order_above_j_equals_j(m in random_matrix(20, 5)) {
            let mut a = OcbState::init_cold(5, OcbConfig::new(5)).unwrap();
            let mut b = OcbState::init_cold(5, OcbConfig::new(15)).unwrap();
            prop_assert_eq!(a.run_stream(&m).unwrap(), b.run_stream(&m).unwrap());
            prop_assert_eq!(a, b);
        }

        #[test]
        fn closed_form_q_beats_grid(
            cells in prop::collection::vec((0.01..5.0f64, any::<bool>(), any::<bool>()), 1..20),
            da in -2.0..2.0f64,
            sigma in any::<bool>(),
        ) {
            let d: Vec<f64> = cells.iter().map(|c| c.0).collect();
            let mj: Vec<Sign> = cells.iter().map(|c| Sign::from_bool(c.1)).collect();
            let mbig: Vec<Sign> = cells.iter().map(|c| Sign::from_bool(c.2)).collect();
            let sigma = Sign::from_bool(sigma);
            if let Some(q) = optimal_q(&d, &mj, &mbig, sigma) {
                let at_q = q_error(&d, &mj, &mbig, sigma, da, q).unwrap();
                for k in 0..=1000 {
                    let g = q_error(&d, &mj, &mbig, sigma, da, k as f64 / 1000.0).unwrap();
                    prop_assert!(at_q <= g + 1e-12 * g.max(1.0));
                }
            }
        }
    }
}
