//! Labels, weak hypotheses and the margin matrix every learner consumes.
//!
//! A margin `m_ij = y_i * h_j(x_i)` is `+1` when hypothesis `j` classifies
//! example `i` correctly and `-1` otherwise. Once the hypothesis pool is
//! fixed, the boosting routines only ever look at margins, so the
//! [`MarginMatrix`] is the common currency between data, learners and the
//! synthetic generator.

use std::fmt;
use std::io::{Read, Write};
use std::ops::{Mul, Neg};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// A binary value in `{-1, +1}`: a class label, a hypothesis output or a margin.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(into = "i8", try_from = "i8")]
#[repr(i8)]
pub enum Sign {
    Minus = -1,
    Plus = 1,
}

impl Sign {
    /// `+1` for non-negative values, `-1` otherwise. `sign(0)` is `+1`.
    #[inline]
    pub fn of(value: f64) -> Sign {
        if value >= 0.0 {
            Sign::Plus
        } else {
            Sign::Minus
        }
    }

    #[inline]
    pub fn from_bool(positive: bool) -> Sign {
        if positive {
            Sign::Plus
        } else {
            Sign::Minus
        }
    }

    #[inline]
    pub fn is_plus(self) -> bool {
        self == Sign::Plus
    }

    #[inline]
    pub fn as_f64(self) -> f64 {
        self as i8 as f64
    }
}

impl Mul for Sign {
    type Output = Sign;

    #[inline]
    fn mul(self, rhs: Sign) -> Sign {
        Sign::from_bool(self == rhs)
    }
}

impl Neg for Sign {
    type Output = Sign;

    #[inline]
    fn neg(self) -> Sign {
        match self {
            Sign::Plus => Sign::Minus,
            Sign::Minus => Sign::Plus,
        }
    }
}

impl From<Sign> for i8 {
    fn from(s: Sign) -> i8 {
        s as i8
    }
}

impl TryFrom<i8> for Sign {
    type Error = Error;

    fn try_from(v: i8) -> Result<Sign> {
        match v {
            1 => Ok(Sign::Plus),
            -1 => Ok(Sign::Minus),
            other => Err(Error::InvalidInput(format!(
                "expected 1 or -1, got {other}"
            ))),
        }
    }
}

impl fmt::Display for Sign {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", *self as i8)
    }
}

/// A feature vector with a binary label.
#[derive(Clone, Debug, PartialEq)]
pub struct LabeledExample {
    features: Vec<f64>,
    label: Sign,
}

impl LabeledExample {
    pub fn new(features: Vec<f64>, label: Sign) -> Result<Self> {
        if let Some(pos) = features.iter().position(|v| !v.is_finite()) {
            return Err(Error::InvalidInput(format!(
                "feature {pos} is not finite ({})",
                features[pos]
            )));
        }
        Ok(LabeledExample { features, label })
    }

    pub fn features(&self) -> &[f64] {
        &self.features
    }

    pub fn label(&self) -> Sign {
        self.label
    }

    /// The same features with the opposite label.
    pub fn flipped(&self) -> Self {
        LabeledExample {
            features: self.features.clone(),
            label: -self.label,
        }
    }
}

/// A fixed binary classifier. Evaluation must be deterministic.
pub trait WeakHypothesis {
    fn predict(&self, x: &[f64]) -> Sign;
}

impl<H: WeakHypothesis + ?Sized> WeakHypothesis for &H {
    fn predict(&self, x: &[f64]) -> Sign {
        (**self).predict(x)
    }
}

impl<H: WeakHypothesis + ?Sized> WeakHypothesis for Box<H> {
    fn predict(&self, x: &[f64]) -> Sign {
        (**self).predict(x)
    }
}

/// Wraps a closure as a hypothesis.
#[derive(Clone, Copy, Debug)]
pub struct FnHypothesis<F>(pub F);

impl<F: Fn(&[f64]) -> Sign> WeakHypothesis for FnHypothesis<F> {
    fn predict(&self, x: &[f64]) -> Sign {
        (self.0)(x)
    }
}

pub fn compute_margin<H: WeakHypothesis + ?Sized>(h: &H, ex: &LabeledExample) -> Sign {
    ex.label * h.predict(&ex.features)
}

/// Dense `N x J` matrix of margins, row-major (one row per example).
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct MarginMatrix {
    rows: usize,
    cols: usize,
    data: Vec<Sign>,
}

impl MarginMatrix {
    pub fn new(rows: usize, cols: usize, data: Vec<Sign>) -> Result<Self> {
        if rows == 0 || cols == 0 {
            return Err(Error::InvalidInput(format!(
                "margin matrix must be non-empty, got {rows}x{cols}"
            )));
        }
        if data.len() != rows * cols {
            return Err(Error::InvalidInput(format!(
                "{} cells given for a {rows}x{cols} matrix",
                data.len()
            )));
        }
        Ok(MarginMatrix { rows, cols, data })
    }

    /// Builds a matrix from `±1` integer rows.
    pub fn from_rows<R: AsRef<[i8]>>(rows: &[R]) -> Result<Self> {
        let cols = rows.first().map_or(0, |r| r.as_ref().len());
        let mut data = Vec::with_capacity(rows.len() * cols);
        for (i, row) in rows.iter().enumerate() {
            let row = row.as_ref();
            if row.len() != cols {
                return Err(Error::InvalidInput(format!(
                    "row {i} has {} entries, expected {cols}",
                    row.len()
                )));
            }
            for &v in row {
                data.push(Sign::try_from(v)?);
            }
        }
        MarginMatrix::new(rows.len(), cols, data)
    }

    pub fn n_examples(&self) -> usize {
        self.rows
    }

    pub fn n_hypotheses(&self) -> usize {
        self.cols
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> Sign {
        self.data[i * self.cols + j]
    }

    #[inline]
    pub fn row(&self, i: usize) -> &[Sign] {
        &self.data[i * self.cols..(i + 1) * self.cols]
    }

    pub fn rows(&self) -> impl Iterator<Item = &[Sign]> {
        self.data.chunks_exact(self.cols)
    }

    /// The first `n` rows.
    pub fn prefix(&self, n: usize) -> Result<MarginMatrix> {
        self.slice_rows(0, n)
    }

    /// Rows `start..end`.
    pub fn slice_rows(&self, start: usize, end: usize) -> Result<MarginMatrix> {
        if start >= end || end > self.rows {
            return Err(Error::InvalidInput(format!(
                "row range {start}..{end} invalid for {} rows",
                self.rows
            )));
        }
        MarginMatrix::new(
            end - start,
            self.cols,
            self.data[start * self.cols..end * self.cols].to_vec(),
        )
    }

    /// Writes the matrix as CSV with header `m_1..m_J` and `1`/`-1` cells.
    pub fn write_csv<W: Write>(&self, w: W) -> Result<()> {
        let mut out = csv::Writer::from_writer(w);
        out.write_record((1..=self.cols).map(|j| format!("m_{j}")))?;
        for row in self.rows() {
            out.write_record(row.iter().map(|s| s.to_string()))?;
        }
        out.flush().map_err(csv::Error::from)?;
        Ok(())
    }

    pub fn read_csv<R: Read>(r: R) -> Result<MarginMatrix> {
        let mut reader = csv::Reader::from_reader(r);
        let headers = reader.headers()?.clone();
        let expected: Vec<String> = (1..=headers.len()).map(|j| format!("m_{j}")).collect();
        if headers.iter().ne(expected.iter().map(String::as_str)) {
            return Err(Error::UnknownSchema {
                expected: "m_1..m_J".into(),
            });
        }
        let mut rows = Vec::new();
        for record in reader.records() {
            let record = record?;
            let row = record
                .iter()
                .map(|cell| {
                    cell.trim()
                        .parse::<i8>()
                        .map_err(|e| Error::InvalidInput(format!("bad margin {cell:?}: {e}")))
                })
                .collect::<Result<Vec<i8>>>()?;
            rows.push(row);
        }
        MarginMatrix::from_rows(&rows)
    }
}

/// Evaluates every hypothesis on every example.
pub fn build_margin_matrix<H: WeakHypothesis>(
    hypotheses: &[H],
    data: &[LabeledExample],
) -> Result<MarginMatrix> {
    if hypotheses.is_empty() || data.is_empty() {
        return Err(Error::InvalidInput(
            "need at least one hypothesis and one example".into(),
        ));
    }
    let cells = data
        .iter()
        .flat_map(|ex| hypotheses.iter().map(move |h| compute_margin(h, ex)))
        .collect();
    MarginMatrix::new(data.len(), hypotheses.len(), cells)
}
