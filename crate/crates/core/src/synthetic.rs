//! Seeded random margin matrices with piecewise concept drift.
//!
//! Every column `j` of a segment has a probability `p_j` of a `+1` margin.
//! Drift perturbs the previous segment's probabilities with clamped
//! Gaussian noise. All randomness comes from ChaCha8 (`rand_chacha`), a
//! portable generator, so a seed fixes every output bit on every platform.

use std::io::Write;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::margin::{MarginMatrix, Sign};

pub const DEFAULT_PERTURB_SCALE: f64 = 0.1;

/// Per-hypothesis probability of a correct classification.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ColumnProbs(Vec<f64>);

impl ColumnProbs {
    pub fn new(probs: Vec<f64>) -> Result<Self> {
        if probs.iter().any(|p| !(0.0..=1.0).contains(p)) {
            return Err(Error::InvalidInput(
                "column probabilities must lie in [0, 1]".into(),
            ));
        }
        Ok(ColumnProbs(probs))
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DriftSpec {
    pub segments: usize,
    pub rows_per_segment: usize,
    pub n_hypotheses: usize,
    pub perturb_scale: f64,
    pub seed: u64,
}

impl DriftSpec {
    pub fn new(segments: usize, rows_per_segment: usize, n_hypotheses: usize, seed: u64) -> Self {
        DriftSpec {
            segments,
            rows_per_segment,
            n_hypotheses,
            perturb_scale: DEFAULT_PERTURB_SCALE,
            seed,
        }
    }

    fn validate(&self) -> Result<()> {
        if self.segments == 0 || self.rows_per_segment == 0 || self.n_hypotheses == 0 {
            return Err(Error::InvalidConfig(
                "segments, rows per segment and J must all be at least 1".into(),
            ));
        }
        if !(self.perturb_scale >= 0.0 && self.perturb_scale.is_finite()) {
            return Err(Error::InvalidConfig(
                "perturb scale must be finite and >= 0".into(),
            ));
        }
        Ok(())
    }
}

/// A generated stream and how it was produced.
#[derive(Clone, Debug, PartialEq)]
pub struct DriftStream {
    pub margins: MarginMatrix,
    /// Row index where each segment after the first begins.
    pub boundaries: Vec<usize>,
    pub probs: Vec<ColumnProbs>,
    pub spec: DriftSpec,
}

impl DriftStream {
    /// Plain-text sidecar: seed, drift parameters, boundaries and per-segment probabilities.
    pub fn write_metadata<W: Write>(&self, mut w: W) -> Result<()> {
        let io = |e| Error::io("<metadata>", e);
        writeln!(w, "seed = {}", self.spec.seed).map_err(io)?;
        writeln!(w, "segments = {}", self.spec.segments).map_err(io)?;
        writeln!(w, "rows_per_segment = {}", self.spec.rows_per_segment).map_err(io)?;
        writeln!(w, "n_hypotheses = {}", self.spec.n_hypotheses).map_err(io)?;
        writeln!(w, "perturb_scale = {:?}", self.spec.perturb_scale).map_err(io)?;
        writeln!(w, "perturbation = \"gaussian, clamped to [0, 1]\"").map_err(io)?;
        writeln!(w, "generator = \"ChaCha8\"").map_err(io)?;
        writeln!(w, "boundaries = {:?}", self.boundaries).map_err(io)?;
        writeln!(w, "probs = [").map_err(io)?;
        for p in &self.probs {
            writeln!(w, "  {:?},", p.as_slice()).map_err(io)?;
        }
        writeln!(w, "]").map_err(io)?;
        Ok(())
    }
}

pub fn gen_probs(n_hypotheses: usize, seed: u64) -> Result<ColumnProbs> {
    if n_hypotheses == 0 {
        return Err(Error::InvalidInput("J must be at least 1".into()));
    }
    gen_probs_with(n_hypotheses, &mut ChaCha8Rng::seed_from_u64(seed))
}

fn gen_probs_with<R: Rng>(n: usize, rng: &mut R) -> Result<ColumnProbs> {
    ColumnProbs::new((0..n).map(|_| rng.random::<f64>()).collect())
}

/// `clamp(p + scale * g, 0, 1)` with independent standard normal `g` per column.
pub fn drift_probs(p: &ColumnProbs, perturb_scale: f64, seed: u64) -> Result<ColumnProbs> {
    drift_probs_with(p, perturb_scale, &mut ChaCha8Rng::seed_from_u64(seed))
}

fn drift_probs_with<R: Rng>(p: &ColumnProbs, scale: f64, rng: &mut R) -> Result<ColumnProbs> {
    if !(scale >= 0.0 && scale.is_finite()) {
        return Err(Error::InvalidInput(
            "perturb scale must be finite and >= 0".into(),
        ));
    }
    ColumnProbs::new(
        p.0.iter()
            .map(|&v| {
                let g: f64 = rng.sample(StandardNormal);
                (v + scale * g).clamp(0.0, 1.0)
            })
            .collect(),
    )
}

fn sample_segment<R: Rng>(p: &ColumnProbs, rows: usize, rng: &mut R, out: &mut Vec<Sign>) {
    for _ in 0..rows {
        for &pj in p.as_slice() {
            out.push(Sign::from_bool(rng.random::<f64>() < pj));
        }
    }
}

/// Generates `segments` blocks of `rows_per_segment` rows; each block's column
/// probabilities drift from the previous block's.
pub fn gen_drift_stream(spec: &DriftSpec) -> Result<DriftStream> {
    spec.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let n_rows = spec.segments * spec.rows_per_segment;
    let mut cells = Vec::with_capacity(n_rows * spec.n_hypotheses);
    let mut probs = Vec::with_capacity(spec.segments);
    let mut current = gen_probs_with(spec.n_hypotheses, &mut rng)?;
    for s in 0..spec.segments {
        if s > 0 {
            current = drift_probs_with(&current, spec.perturb_scale, &mut rng)?;
        }
        sample_segment(&current, spec.rows_per_segment, &mut rng, &mut cells);
        probs.push(current.clone());
    }
    Ok(DriftStream {
        margins: MarginMatrix::new(n_rows, spec.n_hypotheses, cells)?,
        boundaries: (1..spec.segments)
            .map(|s| s * spec.rows_per_segment)
            .collect(),
        probs,
        spec: spec.clone(),
    })
}

/// Uniformly random margins with a common `+1` probability; handy for tests.
pub fn random_margins(rows: usize, cols: usize, p_plus: f64, seed: u64) -> Result<MarginMatrix> {
    let p = ColumnProbs::new(vec![p_plus; cols])?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut cells = Vec::with_capacity(rows * cols);
    sample_segment(&p, rows, &mut rng, &mut cells);
    MarginMatrix::new(rows, cols, cells)
}
