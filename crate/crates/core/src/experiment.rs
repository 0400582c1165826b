//! Seeded experiment runs: synthetic drift, convention comparison and MNIST one-vs-all.
//!
//! Runs fan out over seeds (or digits) with rayon and are collected in input
//! order, so every output byte is a function of the configuration alone.

use std::fmt;
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::batch::{fit_weights, incremental_oracle_from, preselect_hypotheses, PreselectConfig};
use crate::classifier::StrongClassifier;
use crate::error::{Error, Result};
use crate::eval::{approx_error, argmax, N_CLASSES};
use crate::margin::{build_margin_matrix, MarginMatrix, Sign, WeakHypothesis};
use crate::mnist::{load_mnist_idx, Digits};
use crate::ocb::{NegativeSumConvention, OcbConfig, OcbState, DEFAULT_SMOOTHING};
use crate::oza::{OzaMode, OzaState};
use crate::synthetic::{gen_drift_stream, DriftSpec, DEFAULT_PERTURB_SCALE};
use crate::trajectory::AlphaTrajectory;
use crate::weak::{Hypothesis, PrototypeLearner};

/// Environment variable that overrides the configured output directory.
pub const OUT_DIR_ENV: &str = "OCBOOST_OUT_DIR";

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct LearnerSet {
    /// OCB orders; an empty list disables OCB.
    pub orders: Vec<usize>,
    pub conventions: Vec<NegativeSumConvention>,
    pub oza_modes: Vec<OzaMode>,
}

impl Default for LearnerSet {
    fn default() -> Self {
        LearnerSet {
            orders: vec![0, 5, 20],
            conventions: vec![NegativeSumConvention::default()],
            oza_modes: vec![OzaMode::Averaged],
        }
    }
}

impl LearnerSet {
    pub fn learners(&self) -> Vec<LearnerId> {
        let mut out = Vec::new();
        for &order in &self.orders {
            for &convention in &self.conventions {
                out.push(LearnerId::Ocb { order, convention });
            }
        }
        out.extend(self.oza_modes.iter().map(|&m| LearnerId::Oza(m)));
        out
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SyntheticConfig {
    pub segments: usize,
    pub rows_per_segment: usize,
    pub n_hypotheses: usize,
    pub perturb_scale: f64,
    /// Rows used to warm-start the online learners; 0 means cold start.
    pub warm_start: usize,
}

impl Default for SyntheticConfig {
    fn default() -> Self {
        SyntheticConfig {
            segments: 3,
            rows_per_segment: 1000,
            n_hypotheses: 20,
            perturb_scale: DEFAULT_PERTURB_SCALE,
            warm_start: 100,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct MnistConfig {
    pub dir: PathBuf,
    /// Hypotheses per digit.
    pub n_hypotheses: usize,
    /// Length of the training stream (prefix of the training file).
    pub train_size: usize,
    /// Test examples used (prefix of the test file).
    pub test_size: usize,
    /// Training examples offered to the offline hypothesis search.
    pub preselect_size: usize,
    /// Examples drawn per preselection round; also the prototype candidates.
    pub sample_size: usize,
    pub warm_start: usize,
    /// Batch refit and evaluation cadence, in examples seen.
    pub eval_period: usize,
    pub orders: Vec<usize>,
}

impl Default for MnistConfig {
    fn default() -> Self {
        MnistConfig {
            dir: PathBuf::from("data/mnist"),
            n_hypotheses: 50,
            train_size: 10_000,
            test_size: 10_000,
            preselect_size: 2_000,
            sample_size: 200,
            warm_start: 500,
            eval_period: 1_000,
            orders: vec![50],
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExperimentConfig {
    /// Readable from a config file but never written back, so saved configs
    /// are identical wherever a run's outputs land.
    #[serde(skip_serializing)]
    pub out_dir: PathBuf,
    pub seeds: Vec<u64>,
    /// Seed value of the online learners' weight sums.
    pub smoothing: f64,
    /// Smoothing inside the batch reference's log ratio.
    pub batch_smoothing: f64,
    pub learners: LearnerSet,
    pub synthetic: SyntheticConfig,
    pub mnist: MnistConfig,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        ExperimentConfig {
            out_dir: PathBuf::from("out"),
            seeds: vec![0, 1, 2, 3, 4],
            smoothing: DEFAULT_SMOOTHING,
            batch_smoothing: DEFAULT_SMOOTHING,
            learners: LearnerSet::default(),
            synthetic: SyntheticConfig::default(),
            mnist: MnistConfig::default(),
        }
    }
}

impl ExperimentConfig {
    pub fn from_toml(text: &str) -> Result<Self> {
        toml::from_str(text).map_err(|e| Error::InvalidConfig(e.to_string()))
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_toml(&text).map_err(|e| e.context(format!("config {}", path.display())))
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("config serializes")
    }

    fn validate(&self) -> Result<()> {
        if self.seeds.is_empty() {
            return Err(Error::InvalidConfig("at least one seed is required".into()));
        }
        if self.learners.learners().is_empty() {
            return Err(Error::InvalidConfig(
                "at least one learner is required".into(),
            ));
        }
        if !self.learners.orders.is_empty() && self.learners.conventions.is_empty() {
            return Err(Error::InvalidConfig(
                "OCB orders given without a convention".into(),
            ));
        }
        Ok(())
    }
}

/// Which learner produced a result row.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum LearnerId {
    Batch,
    Ocb {
        order: usize,
        convention: NegativeSumConvention,
    },
    Oza(OzaMode),
}

impl PartialOrd for NegativeSumConvention {
    fn partial_cmp(&self, other: &Self) -> Option<std::cmp::Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for NegativeSumConvention {
    fn cmp(&self, other: &Self) -> std::cmp::Ordering {
        self.name().cmp(other.name())
    }
}

impl PartialOrd for OzaMode {
    fn partial_cmp(&self, other: &Self) -> Option<std::cmp::Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for OzaMode {
    fn cmp(&self, other: &Self) -> std::cmp::Ordering {
        self.name().cmp(other.name())
    }
}

impl LearnerId {
    pub fn name(&self) -> String {
        match self {
            LearnerId::Batch => "adaboost".into(),
            LearnerId::Ocb { .. } => "ocb".into(),
            LearnerId::Oza(mode) => format!("oza_{}", mode.name()),
        }
    }

    /// Filesystem-safe identifier, e.g. `ocb_K20_theorem_consistent`.
    pub fn file_stem(&self) -> String {
        match self {
            LearnerId::Ocb { order, convention } => format!("ocb_K{order}_{convention}"),
            other => other.name(),
        }
    }

    fn order_field(&self) -> String {
        match self {
            LearnerId::Ocb { order, .. } => order.to_string(),
            _ => String::new(),
        }
    }

    fn convention_field(&self) -> &'static str {
        match self {
            LearnerId::Ocb { convention, .. } => convention.name(),
            _ => "",
        }
    }
}

impl fmt::Display for LearnerId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            LearnerId::Ocb { order, convention } => write!(f, "ocb(K={order}, {convention})"),
            other => f.write_str(&other.name()),
        }
    }
}

/// An online learner behind a common interface.
enum Online {
    Ocb(OcbState),
    Oza(OzaState),
}

impl Online {
    fn start(
        id: LearnerId,
        n_hyp: usize,
        prefix: Option<&MarginMatrix>,
        smoothing: f64,
    ) -> Result<Online> {
        Ok(match (id, prefix) {
            (LearnerId::Ocb { order, convention }, p) => {
                let cfg = OcbConfig::new(order)
                    .smoothing(smoothing)
                    .convention(convention);
                Online::Ocb(match p {
                    Some(p) => OcbState::init_warm(p, cfg)?,
                    None => OcbState::init_cold(n_hyp, cfg)?,
                })
            }
            (LearnerId::Oza(mode), Some(p)) => {
                Online::Oza(OzaState::init_warm(p, smoothing, mode)?)
            }
            (LearnerId::Oza(mode), None) => {
                Online::Oza(OzaState::init_cold(n_hyp, smoothing, mode)?)
            }
            (LearnerId::Batch, _) => {
                return Err(Error::InvalidConfig(
                    "batch AdaBoost is not an online learner".into(),
                ))
            }
        })
    }

    fn process(&mut self, row: &[Sign]) -> Result<&[f64]> {
        match self {
            Online::Ocb(s) => s.process_example(row),
            Online::Oza(s) => s.process_example(row),
        }
    }

    fn run(&mut self, m: &MarginMatrix) -> Result<AlphaTrajectory> {
        match self {
            Online::Ocb(s) => s.run_stream(m),
            Online::Oza(s) => s.run_stream(m),
        }
    }
}

/// One row of the synthetic CSV.
#[derive(Clone, Debug, PartialEq)]
pub struct SyntheticRecord {
    pub example_index: usize,
    pub learner: LearnerId,
    pub seed: u64,
    pub approx_error: f64,
}

pub const SYNTHETIC_COLUMNS: [&str; 6] = [
    "example_index",
    "learner",
    "K",
    "convention",
    "seed",
    "approx_error",
];
pub const MNIST_COLUMNS: [&str; 6] = [
    "examples_seen",
    "learner",
    "digit",
    "test_error",
    "approx_error",
    "ova_error",
];

#[derive(Clone, Debug, PartialEq)]
pub struct SyntheticReport {
    pub learners: Vec<LearnerId>,
    pub seeds: Vec<u64>,
    pub records: Vec<SyntheticRecord>,
}

impl SyntheticReport {
    /// Mean approximation error over all seeds and examples.
    pub fn mean_error(&self, learner: LearnerId) -> Option<f64> {
        let errs: Vec<f64> = self
            .records
            .iter()
            .filter(|r| r.learner == learner)
            .map(|r| r.approx_error)
            .collect();
        (!errs.is_empty()).then(|| errs.iter().sum::<f64>() / errs.len() as f64)
    }

    /// Per-seed means, in seed order.
    pub fn seed_means(&self, learner: LearnerId) -> Vec<f64> {
        self.seeds
            .iter()
            .map(|&s| {
                let errs: Vec<f64> = self
                    .records
                    .iter()
                    .filter(|r| r.learner == learner && r.seed == s)
                    .map(|r| r.approx_error)
                    .collect();
                errs.iter().sum::<f64>() / errs.len().max(1) as f64
            })
            .collect()
    }

    pub fn write_csv<W: Write>(&self, w: W) -> Result<()> {
        let mut out = csv::Writer::from_writer(w);
        out.write_record(SYNTHETIC_COLUMNS)?;
        for r in &self.records {
            out.write_record([
                r.example_index.to_string(),
                r.learner.name(),
                r.learner.order_field(),
                r.learner.convention_field().to_string(),
                r.seed.to_string(),
                r.approx_error.to_string(),
            ])?;
        }
        out.flush().map_err(csv::Error::from)?;
        Ok(())
    }

    /// `learner, K, convention, mean_approx_error, std_over_seeds`.
    pub fn write_summary<W: Write>(&self, w: W) -> Result<()> {
        let mut out = csv::Writer::from_writer(w);
        out.write_record([
            "learner",
            "K",
            "convention",
            "mean_approx_error",
            "std_over_seeds",
        ])?;
        for &l in &self.learners {
            let means = self.seed_means(l);
            let mu = means.iter().sum::<f64>() / means.len() as f64;
            let sd =
                (means.iter().map(|m| (m - mu).powi(2)).sum::<f64>() / means.len() as f64).sqrt();
            out.write_record([
                l.name(),
                l.order_field(),
                l.convention_field().to_string(),
                self.mean_error(l).unwrap_or(f64::NAN).to_string(),
                sd.to_string(),
            ])?;
        }
        out.flush().map_err(csv::Error::from)?;
        Ok(())
    }

    /// Side-by-side `K, as_written, theorem_consistent` table of mean errors.
    pub fn write_convention_table<W: Write>(&self, w: W) -> Result<()> {
        let mut orders: Vec<usize> = self
            .learners
            .iter()
            .filter_map(|l| match l {
                LearnerId::Ocb { order, .. } => Some(*order),
                _ => None,
            })
            .collect();
        orders.sort_unstable();
        orders.dedup();
        let mut out = csv::Writer::from_writer(w);
        let mut header = vec!["K".to_string()];
        header.extend(
            NegativeSumConvention::ALL
                .iter()
                .map(|c| c.name().to_string()),
        );
        out.write_record(&header)?;
        for order in orders {
            let mut row = vec![order.to_string()];
            for convention in NegativeSumConvention::ALL {
                row.push(
                    self.mean_error(LearnerId::Ocb { order, convention })
                        .map_or(String::new(), |e| e.to_string()),
                );
            }
            out.write_record(&row)?;
        }
        out.flush().map_err(csv::Error::from)?;
        Ok(())
    }
}

fn drift_spec(cfg: &ExperimentConfig, seed: u64) -> DriftSpec {
    let s = &cfg.synthetic;
    DriftSpec {
        segments: s.segments,
        rows_per_segment: s.rows_per_segment,
        n_hypotheses: s.n_hypotheses,
        perturb_scale: s.perturb_scale,
        seed,
    }
}

/// Runs the learners over `m`, warm-started on its first `warm_start` rows,
/// and scores every step against the exact incremental oracle.
pub fn approx_errors_vs_oracle(
    m: &MarginMatrix,
    learners: &[LearnerId],
    warm_start: usize,
    smoothing: f64,
    batch_smoothing: f64,
) -> Result<Vec<(LearnerId, Vec<f64>)>> {
    if warm_start >= m.n_examples() {
        return Err(Error::InvalidConfig(format!(
            "warm start {warm_start} leaves no rows to stream out of {}",
            m.n_examples()
        )));
    }
    let oracle = incremental_oracle_from(m, warm_start + 1, batch_smoothing)
        .map_err(|e| e.context("batch oracle"))?;
    let (prefix, rest) = if warm_start > 0 {
        (
            Some(m.prefix(warm_start)?),
            m.slice_rows(warm_start, m.n_examples())?,
        )
    } else {
        (None, m.clone())
    };
    learners
        .iter()
        .map(|&id| {
            let ctx = |e: Error| e.context(format!("learner {id}"));
            let mut learner =
                Online::start(id, m.n_hypotheses(), prefix.as_ref(), smoothing).map_err(ctx)?;
            let traj = learner.run(&rest).map_err(ctx)?;
            let errs = traj
                .steps()
                .iter()
                .zip(oracle.steps())
                .map(|(a, b)| approx_error(b, a))
                .collect::<Result<Vec<f64>>>()
                .map_err(ctx)?;
            Ok((id, errs))
        })
        .collect()
}

fn run_synthetic_with(cfg: &ExperimentConfig, learners: Vec<LearnerId>) -> Result<SyntheticReport> {
    cfg.validate()?;
    let per_seed: Vec<Vec<SyntheticRecord>> = cfg
        .seeds
        .par_iter()
        .map(|&seed| {
            let stream = gen_drift_stream(&drift_spec(cfg, seed))?;
            let results = approx_errors_vs_oracle(
                &stream.margins,
                &learners,
                cfg.synthetic.warm_start,
                cfg.smoothing,
                cfg.batch_smoothing,
            )
            .map_err(|e| e.context(format!("seed {seed}")))?;
            let mut rows = Vec::new();
            for (learner, errs) in results {
                rows.extend(errs.into_iter().enumerate().map(|(k, e)| SyntheticRecord {
                    example_index: cfg.synthetic.warm_start + k + 1,
                    learner,
                    seed,
                    approx_error: e,
                }));
            }
            Ok(rows)
        })
        .collect::<Result<_>>()?;
    Ok(SyntheticReport {
        learners,
        seeds: cfg.seeds.clone(),
        records: per_seed.into_iter().flatten().collect(),
    })
}

/// Synthetic drift experiment over the configured learners.
pub fn run_synthetic(cfg: &ExperimentConfig) -> Result<SyntheticReport> {
    run_synthetic_with(cfg, cfg.learners.learners())
}

/// Synthetic protocol with every OCB order under both negative-sum conventions.
pub fn run_oracle_compare(cfg: &ExperimentConfig) -> Result<SyntheticReport> {
    let learners = LearnerSet {
        orders: cfg.learners.orders.clone(),
        conventions: NegativeSumConvention::ALL.to_vec(),
        oza_modes: vec![],
    }
    .learners();
    if learners.is_empty() {
        return Err(Error::InvalidConfig(
            "oracle-compare needs at least one OCB order".into(),
        ));
    }
    run_synthetic_with(cfg, learners)
}

fn create_dir(dir: &Path) -> Result<()> {
    fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))
}

fn write_file(path: &Path, f: impl FnOnce(&mut Vec<u8>) -> Result<()>) -> Result<()> {
    let mut buf = Vec::new();
    f(&mut buf)?;
    fs::write(path, buf).map_err(|e| Error::io(path, e))
}

/// Writes `synthetic.csv`, `synthetic_summary.csv` and the per-seed stream
/// metadata sidecars; returns the paths written.
pub fn write_synthetic_outputs(
    cfg: &ExperimentConfig,
    report: &SyntheticReport,
    name: &str,
) -> Result<Vec<PathBuf>> {
    create_dir(&cfg.out_dir)?;
    let main = cfg.out_dir.join(format!("{name}.csv"));
    write_file(&main, |b| report.write_csv(b))?;
    let summary = cfg.out_dir.join(format!("{name}_summary.csv"));
    write_file(&summary, |b| report.write_summary(b))?;
    let mut paths = vec![main, summary];
    if report
        .learners
        .iter()
        .any(|l| matches!(l, LearnerId::Ocb { .. }))
    {
        let table = cfg.out_dir.join(format!("{name}_conventions.csv"));
        write_file(&table, |b| report.write_convention_table(b))?;
        paths.push(table);
    }
    for &seed in &cfg.seeds {
        let stream = gen_drift_stream(&drift_spec(cfg, seed))?;
        let meta = cfg.out_dir.join(format!("{name}_stream_seed{seed}.meta"));
        write_file(&meta, |b| stream.write_metadata(b))?;
        paths.push(meta);
    }
    let config = cfg.out_dir.join(format!("{name}_config.toml"));
    fs::write(&config, cfg.to_toml()).map_err(|e| Error::io(&config, e))?;
    paths.push(config);
    Ok(paths)
}

/// One row of the MNIST CSV.
#[derive(Clone, Debug, PartialEq)]
pub struct MnistRecord {
    pub examples_seen: usize,
    pub learner: LearnerId,
    pub digit: u8,
    pub test_error: f64,
    pub approx_error: f64,
    pub ova_error: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct MnistReport {
    pub learners: Vec<LearnerId>,
    pub checkpoints: Vec<usize>,
    pub records: Vec<MnistRecord>,
    /// Preselected pool per digit.
    pub hypotheses: Vec<Vec<Hypothesis>>,
    /// Weights at the last checkpoint, indexed `[learner][digit]`.
    pub final_alphas: Vec<Vec<Vec<f64>>>,
}

impl MnistReport {
    fn rows(&self, learner: LearnerId) -> impl Iterator<Item = &MnistRecord> {
        self.records.iter().filter(move |r| r.learner == learner)
    }

    /// The digit's binary classifier as `learner` left it at the last checkpoint.
    pub fn final_classifier(
        &self,
        learner: LearnerId,
        digit: u8,
    ) -> Option<StrongClassifier<Hypothesis>> {
        let li = self.learners.iter().position(|&l| l == learner)?;
        let d = usize::from(digit);
        StrongClassifier::new(
            self.hypotheses.get(d)?.clone(),
            self.final_alphas[li].get(d)?.clone(),
        )
        .ok()
    }

    /// Mean approximation error over digits and checkpoints.
    pub fn mean_approx_error(&self, learner: LearnerId) -> f64 {
        let v: Vec<f64> = self.rows(learner).map(|r| r.approx_error).collect();
        v.iter().sum::<f64>() / v.len().max(1) as f64
    }

    /// Mean approximation error for each digit, averaged over checkpoints.
    pub fn digit_approx_errors(&self, learner: LearnerId) -> Vec<f64> {
        (0..N_CLASSES as u8)
            .map(|d| {
                let v: Vec<f64> = self
                    .rows(learner)
                    .filter(|r| r.digit == d)
                    .map(|r| r.approx_error)
                    .collect();
                v.iter().sum::<f64>() / v.len().max(1) as f64
            })
            .collect()
    }

    /// Combined one-vs-all error at the last checkpoint.
    pub fn final_ova_error(&self, learner: LearnerId) -> Option<f64> {
        let last = *self.checkpoints.last()?;
        self.rows(learner)
            .find(|r| r.examples_seen == last)
            .map(|r| r.ova_error)
    }

    /// Per-digit test errors at the last checkpoint.
    pub fn final_test_errors(&self, learner: LearnerId) -> Vec<f64> {
        let last = self.checkpoints.last().copied().unwrap_or(0);
        self.rows(learner)
            .filter(|r| r.examples_seen == last)
            .map(|r| r.test_error)
            .collect()
    }

    pub fn write_csv<W: Write>(&self, w: W) -> Result<()> {
        let mut out = csv::Writer::from_writer(w);
        out.write_record(MNIST_COLUMNS)?;
        for r in &self.records {
            out.write_record([
                r.examples_seen.to_string(),
                r.learner.to_string(),
                r.digit.to_string(),
                r.test_error.to_string(),
                r.approx_error.to_string(),
                r.ova_error.to_string(),
            ])?;
        }
        out.flush().map_err(csv::Error::from)?;
        Ok(())
    }
}

/// Everything one digit's binary problem contributes to the report.
struct DigitRun {
    hypotheses: Vec<Hypothesis>,
    /// `learner -> per-checkpoint (alphas, approx_error)`.
    alphas: Vec<Vec<(Vec<f64>, f64)>>,
    /// Hypothesis outputs on the test set, row-major `n_test x J`.
    test_outputs: Vec<Sign>,
}

fn mnist_checkpoints(m: &MnistConfig, n_train: usize) -> Vec<usize> {
    let mut cps: Vec<usize> = (1..)
        .map(|k| k * m.eval_period)
        .take_while(|&n| n <= n_train)
        .filter(|&n| n > m.warm_start)
        .collect();
    if cps.last() != Some(&n_train) {
        cps.push(n_train);
    }
    cps
}

fn run_digit(
    cfg: &ExperimentConfig,
    learners: &[LearnerId],
    train: &Digits,
    test: &Digits,
    digit: u8,
    checkpoints: &[usize],
) -> Result<DigitRun> {
    let m = &cfg.mnist;
    let data = train.one_vs_all(digit);
    let seed = cfg.seeds.first().copied().unwrap_or(0);
    let pre = PreselectConfig {
        rounds: m.n_hypotheses,
        sample_size: m.sample_size.min(m.preselect_size),
        seed: seed.wrapping_mul(1000).wrapping_add(u64::from(digit)),
        smoothing: cfg.batch_smoothing,
    };
    let classifier = preselect_hypotheses(
        &data[..m.preselect_size.min(data.len())],
        &PrototypeLearner,
        &pre,
    )?;
    let margins = build_margin_matrix(classifier.hypotheses(), &data)?;
    let test_outputs: Vec<Sign> = test
        .images
        .iter()
        .flat_map(|x| classifier.hypotheses().iter().map(move |h| h.predict(x)))
        .collect();

    let prefix = margins.prefix(m.warm_start)?;
    let mut alphas = Vec::with_capacity(learners.len());
    for &id in learners {
        let mut per_cp = Vec::with_capacity(checkpoints.len());
        if id == LearnerId::Batch {
            for &n in checkpoints {
                per_cp.push((
                    fit_weights(&margins.prefix(n)?, cfg.batch_smoothing)?.alphas,
                    0.0,
                ));
            }
        } else {
            let mut learner =
                Online::start(id, margins.n_hypotheses(), Some(&prefix), cfg.smoothing)?;
            let mut next = 0;
            for i in m.warm_start..margins.n_examples() {
                let a = learner
                    .process(margins.row(i))
                    .map_err(|e| e.context(format!("learner {id}, example {}", i + 1)))?;
                if next < checkpoints.len() && checkpoints[next] == i + 1 {
                    let reference =
                        fit_weights(&margins.prefix(i + 1)?, cfg.batch_smoothing)?.alphas;
                    per_cp.push((a.to_vec(), approx_error(&reference, a)?));
                    next += 1;
                }
            }
        }
        alphas.push(per_cp);
    }
    Ok(DigitRun {
        hypotheses: classifier.hypotheses().to_vec(),
        alphas,
        test_outputs,
    })
}

/// MNIST one-vs-all protocol at desk scale.
///
/// Per digit: prototype hypotheses are preselected offline on a training
/// prefix, the online learners are warm-started on the first `warm_start`
/// stream examples, and at every checkpoint each learner's weights are
/// compared with a batch refit on all examples seen so far.
pub fn run_mnist_on(cfg: &ExperimentConfig, train: &Digits, test: &Digits) -> Result<MnistReport> {
    cfg.validate()?;
    let m = &cfg.mnist;
    let train = train.take(m.train_size);
    let test = test.take(m.test_size);
    if m.warm_start == 0
        || m.warm_start >= train.len()
        || m.preselect_size == 0
        || m.eval_period == 0
    {
        return Err(Error::InvalidConfig(
            "need 0 < warm_start < train_size, preselect_size > 0 and eval_period > 0".into(),
        ));
    }
    let mut learners = vec![LearnerId::Batch];
    for &order in &m.orders {
        for &convention in &cfg.learners.conventions {
            learners.push(LearnerId::Ocb { order, convention });
        }
    }
    learners.extend(cfg.learners.oza_modes.iter().map(|&o| LearnerId::Oza(o)));
    let checkpoints = mnist_checkpoints(m, train.len());

    let runs: Vec<DigitRun> = (0..N_CLASSES as u8)
        .into_par_iter()
        .map(|d| {
            run_digit(cfg, &learners, &train, &test, d, &checkpoints)
                .map_err(|e| e.context(format!("digit {d}")))
        })
        .collect::<Result<_>>()?;

    let n_hyp = m.n_hypotheses;
    let mut records = Vec::new();
    for (li, &learner) in learners.iter().enumerate() {
        for (ci, &n) in checkpoints.iter().enumerate() {
            // raw votes of every digit's classifier on every test image
            let scores: Vec<Vec<f64>> = runs
                .iter()
                .map(|run| {
                    let a = &run.alphas[li][ci].0;
                    run.test_outputs
                        .chunks_exact(n_hyp)
                        .map(|h| h.iter().zip(a).map(|(s, w)| w * s.as_f64()).sum())
                        .collect()
                })
                .collect();
            let wrong = (0..test.len())
                .filter(|&t| argmax(scores.iter().map(|s| s[t])) != test.labels[t] as usize)
                .count();
            let ova_error = wrong as f64 / test.len() as f64;
            for (d, run) in runs.iter().enumerate() {
                let wrong = scores[d]
                    .iter()
                    .zip(&test.labels)
                    .filter(|(s, &y)| Sign::of(**s) != Sign::from_bool(y as usize == d))
                    .count();
                records.push(MnistRecord {
                    examples_seen: n,
                    learner,
                    digit: d as u8,
                    test_error: wrong as f64 / test.len() as f64,
                    approx_error: run.alphas[li][ci].1,
                    ova_error,
                });
            }
        }
    }
    let final_alphas = (0..learners.len())
        .map(|li| {
            runs.iter()
                .map(|r| {
                    r.alphas[li]
                        .last()
                        .expect("at least one checkpoint")
                        .0
                        .clone()
                })
                .collect()
        })
        .collect();
    Ok(MnistReport {
        learners,
        checkpoints,
        records,
        hypotheses: runs.into_iter().map(|r| r.hypotheses).collect(),
        final_alphas,
    })
}

pub fn run_mnist(cfg: &ExperimentConfig) -> Result<MnistReport> {
    let dir = &cfg.mnist.dir;
    let train = load_mnist_idx(
        &dir.join("train-images-idx3-ubyte"),
        &dir.join("train-labels-idx1-ubyte"),
    )?;
    let test = load_mnist_idx(
        &dir.join("t10k-images-idx3-ubyte"),
        &dir.join("t10k-labels-idx1-ubyte"),
    )?;
    run_mnist_on(cfg, &train, &test)
}

pub fn write_mnist_outputs(cfg: &ExperimentConfig, report: &MnistReport) -> Result<Vec<PathBuf>> {
    create_dir(&cfg.out_dir)?;
    let main = cfg.out_dir.join("mnist.csv");
    write_file(&main, |b| report.write_csv(b))?;
    let config = cfg.out_dir.join("mnist_config.toml");
    fs::write(&config, cfg.to_toml()).map_err(|e| Error::io(&config, e))?;
    let mut paths = vec![main, config];
    let dir = cfg.out_dir.join("classifiers");
    create_dir(&dir)?;
    for &learner in &report.learners {
        for d in 0..N_CLASSES as u8 {
            if let Some(c) = report.final_classifier(learner, d) {
                let path = dir.join(format!("{}_digit{d}.toml", learner.file_stem()));
                c.save(&path)?;
                paths.push(path);
            }
        }
    }
    Ok(paths)
}
