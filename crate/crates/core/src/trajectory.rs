use std::io::{Read, Write};

use crate::error::{Error, Result};

/// Sequence of alpha vectors, one per processed example.
///
/// `offset` is the number of examples that had already been seen before the
/// first recorded step (for example a warm-start prefix), so step `k`
/// (zero-based) holds the weights after example `offset + k + 1`.
#[derive(Clone, Debug, PartialEq)]
pub struct AlphaTrajectory {
    n_hypotheses: usize,
    offset: usize,
    steps: Vec<Vec<f64>>,
}

impl AlphaTrajectory {
    pub fn new(n_hypotheses: usize) -> Self {
        Self::with_offset(n_hypotheses, 0)
    }

    pub fn with_offset(n_hypotheses: usize, offset: usize) -> Self {
        AlphaTrajectory {
            n_hypotheses,
            offset,
            steps: Vec::new(),
        }
    }

    pub fn push(&mut self, alphas: Vec<f64>) -> Result<()> {
        if alphas.len() != self.n_hypotheses {
            return Err(Error::InvalidInput(format!(
                "trajectory step has {} alphas, expected {}",
                alphas.len(),
                self.n_hypotheses
            )));
        }
        self.steps.push(alphas);
        Ok(())
    }

    pub fn n_hypotheses(&self) -> usize {
        self.n_hypotheses
    }

    pub fn offset(&self) -> usize {
        self.offset
    }

    pub fn len(&self) -> usize {
        self.steps.len()
    }

    pub fn is_empty(&self) -> bool {
        self.steps.is_empty()
    }

    pub fn steps(&self) -> &[Vec<f64>] {
        &self.steps
    }

    /// Alphas after `n` total examples, if recorded.
    pub fn after(&self, n: usize) -> Option<&[f64]> {
        n.checked_sub(self.offset + 1)
            .and_then(|k| self.steps.get(k))
            .map(Vec::as_slice)
    }

    pub fn last(&self) -> Option<&[f64]> {
        self.steps.last().map(Vec::as_slice)
    }

    /// Appends another trajectory that continues where this one stops.
    pub fn extend(&mut self, other: AlphaTrajectory) -> Result<()> {
        if other.n_hypotheses != self.n_hypotheses || other.offset != self.offset + self.len() {
            return Err(Error::InvalidInput(
                "trajectory does not continue this one".into(),
            ));
        }
        self.steps.extend(other.steps);
        Ok(())
    }

    /// CSV with columns `n, alpha_1..alpha_J`; `n` counts all examples seen.
    pub fn write_csv<W: Write>(&self, w: W) -> Result<()> {
        let mut out = csv::Writer::from_writer(w);
        let mut header = vec!["n".to_string()];
        header.extend((1..=self.n_hypotheses).map(|j| format!("alpha_{j}")));
        out.write_record(&header)?;
        for (k, step) in self.steps.iter().enumerate() {
            let mut record = vec![(self.offset + k + 1).to_string()];
            record.extend(step.iter().map(|a| format!("{a:e}")));
            out.write_record(&record)?;
        }
        out.flush().map_err(csv::Error::from)?;
        Ok(())
    }

    pub fn read_csv<R: Read>(r: R) -> Result<AlphaTrajectory> {
        let mut reader = csv::Reader::from_reader(r);
        let headers = reader.headers()?.clone();
        let n_hypotheses = headers.len().saturating_sub(1);
        let schema_ok = headers.get(0) == Some("n")
            && headers
                .iter()
                .skip(1)
                .enumerate()
                .all(|(j, h)| h == format!("alpha_{}", j + 1));
        if !schema_ok || n_hypotheses == 0 {
            return Err(Error::UnknownSchema {
                expected: "n, alpha_1..alpha_J".into(),
            });
        }
        let parse = |s: &str| {
            s.trim()
                .parse::<f64>()
                .map_err(|e| Error::InvalidInput(format!("bad number {s:?}: {e}")))
        };
        let mut traj: Option<AlphaTrajectory> = None;
        for record in reader.records() {
            let record = record?;
            let n = parse(&record[0])? as usize;
            let t = traj.get_or_insert_with(|| {
                AlphaTrajectory::with_offset(n_hypotheses, n.saturating_sub(1))
            });
            if n != t.offset + t.len() + 1 {
                return Err(Error::InvalidInput(format!(
                    "non-contiguous step index {n}"
                )));
            }
            let alphas = record
                .iter()
                .skip(1)
                .map(parse)
                .collect::<Result<Vec<_>>>()?;
            t.push(alphas)?;
        }
        Ok(traj.unwrap_or_else(|| AlphaTrajectory::new(n_hypotheses)))
    }
}
