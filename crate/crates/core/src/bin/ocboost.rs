use std::fs::File;
use std::io::BufReader;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use ocboost::experiment::{self, ExperimentConfig, OUT_DIR_ENV};
use ocboost::plot::{emit_plot, PlotSpec};
use ocboost::synthetic::{gen_drift_stream, DriftSpec};
use ocboost::{Error, MarginMatrix, NegativeSumConvention, OcbConfig, OcbState, OzaMode, Result};

#[derive(Parser)]
#[command(
    name = "ocboost",
    version,
    about = "Online coordinate boosting experiments"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Synthetic drift experiment against the exact incremental oracle.
    Synth {
        #[command(flatten)]
        common: Common,
        #[command(flatten)]
        synth: SynthArgs,
        /// Also write each seed's margin matrix as CSV.
        #[arg(long)]
        emit_margins: bool,
    },
    /// Compare both negative-sum conventions on the synthetic suite.
    OracleCompare {
        #[command(flatten)]
        common: Common,
        #[command(flatten)]
        synth: SynthArgs,
    },
    /// One-vs-all MNIST experiment at desk scale.
    Mnist {
        #[command(flatten)]
        common: Common,
        /// Directory holding the four IDX files.
        #[arg(long)]
        mnist_dir: Option<PathBuf>,
        /// Hypotheses kept per digit.
        #[arg(long)]
        n_hypotheses: Option<usize>,
        /// Training images streamed per digit.
        #[arg(long)]
        train_size: Option<usize>,
        #[arg(long)]
        test_size: Option<usize>,
        /// Training images used to choose the hypotheses.
        #[arg(long)]
        preselect_size: Option<usize>,
        /// Random sample the prototype candidates are drawn from.
        #[arg(long)]
        sample_size: Option<usize>,
        /// Leading training rows fitted in batch before streaming.
        #[arg(long)]
        warm_start: Option<usize>,
        /// Examples between test-set evaluations.
        #[arg(long)]
        eval_period: Option<usize>,
    },
    /// Render an experiment CSV as an SVG line chart.
    Plot {
        /// Experiment CSV to read.
        csv: PathBuf,
        /// SVG file to write.
        #[arg(short, long)]
        output: PathBuf,
        /// Column to plot (default depends on the CSV schema).
        #[arg(long)]
        metric: Option<String>,
        /// Chart title (defaults to "<metric> vs <x column>").
        #[arg(long)]
        title: Option<String>,
    },
    /// Run OCB over a margin-matrix CSV, optionally resuming from a checkpoint.
    Stream {
        /// Margin matrix CSV with one `m_<j>` column per hypothesis.
        margins: PathBuf,
        /// Trajectory CSV to write.
        #[arg(short, long)]
        output: PathBuf,
        /// Correction order K.
        #[arg(long, default_value_t = 0)]
        order: usize,
        /// Negative-sum convention: as_written or theorem_consistent.
        #[arg(long, default_value_t = NegativeSumConvention::default())]
        convention: NegativeSumConvention,
        /// Additive smoothing on every running sum.
        #[arg(long, default_value_t = ocboost::ocb::DEFAULT_SMOOTHING)]
        smoothing: f64,
        /// Warm-start on this many leading rows.
        #[arg(long, default_value_t = 0)]
        warm_start: usize,
        /// Resume from a checkpoint; rows already seen by it are skipped.
        #[arg(long, conflicts_with = "warm_start")]
        resume: Option<PathBuf>,
        /// Write the final state here.
        #[arg(long)]
        save_state: Option<PathBuf>,
    },
}

#[derive(Args)]
struct Common {
    /// TOML file overriding the built-in defaults; flags override the file.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Output directory.
    #[arg(long, env = OUT_DIR_ENV)]
    out_dir: Option<PathBuf>,
    /// Comma-separated RNG seeds.
    #[arg(long, value_delimiter = ',')]
    seeds: Option<Vec<u64>>,
    /// Comma-separated OCB orders K.
    #[arg(long, value_delimiter = ',')]
    orders: Option<Vec<usize>>,
    /// Comma-separated negative-sum conventions.
    #[arg(long, value_delimiter = ',')]
    conventions: Option<Vec<NegativeSumConvention>>,
    /// Oza modes; pass an empty string to disable Oza.
    #[arg(long, value_delimiter = ',')]
    oza_modes: Option<Vec<String>>,
    /// Smoothing for the online learners.
    #[arg(long)]
    smoothing: Option<f64>,
    /// Smoothing for the batch oracle.
    #[arg(long)]
    batch_smoothing: Option<f64>,
}

#[derive(Args)]
struct SynthArgs {
    /// Number of drift segments.
    #[arg(long)]
    segments: Option<usize>,
    /// Examples per segment.
    #[arg(long)]
    rows_per_segment: Option<usize>,
    /// Number of hypotheses.
    #[arg(long)]
    n_hypotheses: Option<usize>,
    /// Standard deviation of the per-segment drift noise.
    #[arg(long)]
    perturb_scale: Option<f64>,
    /// Leading examples fitted in batch before streaming.
    #[arg(long)]
    warm_start: Option<usize>,
}

fn set<T>(slot: &mut T, value: Option<T>) {
    if let Some(v) = value {
        *slot = v;
    }
}

impl Common {
    fn resolve(self) -> Result<ExperimentConfig> {
        let mut cfg = match &self.config {
            Some(p) => ExperimentConfig::load(p)?,
            None => ExperimentConfig::default(),
        };
        set(&mut cfg.out_dir, self.out_dir);
        set(&mut cfg.seeds, self.seeds);
        set(&mut cfg.learners.orders, self.orders.clone());
        set(&mut cfg.mnist.orders, self.orders);
        set(&mut cfg.learners.conventions, self.conventions);
        if let Some(modes) = self.oza_modes {
            cfg.learners.oza_modes = modes
                .iter()
                .filter(|m| !m.is_empty())
                .map(|m| m.parse::<OzaMode>())
                .collect::<Result<_>>()?;
        }
        set(&mut cfg.smoothing, self.smoothing);
        set(&mut cfg.batch_smoothing, self.batch_smoothing);
        Ok(cfg)
    }
}

impl SynthArgs {
    fn apply(self, cfg: &mut ExperimentConfig) {
        let s = &mut cfg.synthetic;
        set(&mut s.segments, self.segments);
        set(&mut s.rows_per_segment, self.rows_per_segment);
        set(&mut s.n_hypotheses, self.n_hypotheses);
        set(&mut s.perturb_scale, self.perturb_scale);
        set(&mut s.warm_start, self.warm_start);
    }
}

fn print_paths(paths: &[PathBuf]) {
    for p in paths {
        println!("wrote {}", p.display());
    }
}

fn run_stream(
    margins: &Path,
    output: &Path,
    cfg: OcbConfig,
    warm_start: usize,
    resume: Option<&Path>,
    save_state: Option<&Path>,
) -> Result<()> {
    let file = File::open(margins).map_err(|e| Error::io(margins, e))?;
    let m = MarginMatrix::read_csv(BufReader::new(file))?;
    let (mut state, start) = match resume {
        Some(p) => {
            let f = File::open(p).map_err(|e| Error::io(p, e))?;
            let s = OcbState::read_checkpoint(BufReader::new(f))?;
            let seen = s.examples_seen();
            (s, seen)
        }
        None if warm_start > 0 => (
            OcbState::init_warm(&m.prefix(warm_start)?, cfg)?,
            warm_start,
        ),
        None => (OcbState::init_cold(m.n_hypotheses(), cfg)?, 0),
    };
    if state.n_hypotheses() != m.n_hypotheses() || start > m.n_examples() {
        return Err(Error::InvalidInput(format!(
            "state (J={}, {start} seen) does not fit a {}x{} margin matrix",
            state.n_hypotheses(),
            m.n_examples(),
            m.n_hypotheses()
        )));
    }
    let traj = state.run_stream(&m.slice_rows(start, m.n_examples())?)?;
    let out = File::create(output).map_err(|e| Error::io(output, e))?;
    traj.write_csv(out)?;
    println!("wrote {}", output.display());
    if let Some(p) = save_state {
        let f = File::create(p).map_err(|e| Error::io(p, e))?;
        state.write_checkpoint(std::io::BufWriter::new(f))?;
        println!("wrote {}", p.display());
    }
    Ok(())
}

fn run(command: Command) -> Result<()> {
    match command {
        Command::Synth {
            common,
            synth,
            emit_margins,
        } => {
            let mut cfg = common.resolve()?;
            synth.apply(&mut cfg);
            let report = experiment::run_synthetic(&cfg)?;
            let mut paths = experiment::write_synthetic_outputs(&cfg, &report, "synthetic")?;
            if emit_margins {
                for &seed in &cfg.seeds {
                    let s = &cfg.synthetic;
                    let mut spec =
                        DriftSpec::new(s.segments, s.rows_per_segment, s.n_hypotheses, seed);
                    spec.perturb_scale = s.perturb_scale;
                    let path = cfg
                        .out_dir
                        .join(format!("synthetic_margins_seed{seed}.csv"));
                    let f = File::create(&path).map_err(|e| Error::io(&path, e))?;
                    gen_drift_stream(&spec)?.margins.write_csv(f)?;
                    paths.push(path);
                }
            }
            report_summary(&report);
            print_paths(&paths);
        }
        Command::OracleCompare { common, synth } => {
            let mut cfg = common.resolve()?;
            synth.apply(&mut cfg);
            let report = experiment::run_oracle_compare(&cfg)?;
            let paths = experiment::write_synthetic_outputs(&cfg, &report, "oracle_compare")?;
            report_summary(&report);
            print_paths(&paths);
        }
        Command::Mnist {
            common,
            mnist_dir,
            n_hypotheses,
            train_size,
            test_size,
            preselect_size,
            sample_size,
            warm_start,
            eval_period,
        } => {
            let mut cfg = common.resolve()?;
            let m = &mut cfg.mnist;
            set(&mut m.dir, mnist_dir);
            set(&mut m.n_hypotheses, n_hypotheses);
            set(&mut m.train_size, train_size);
            set(&mut m.test_size, test_size);
            set(&mut m.preselect_size, preselect_size);
            set(&mut m.sample_size, sample_size);
            set(&mut m.warm_start, warm_start);
            set(&mut m.eval_period, eval_period);
            let report = experiment::run_mnist(&cfg)?;
            for &l in &report.learners {
                println!(
                    "{:<30} mean approx_error {:.4}  final one-vs-all error {:.4}",
                    l.to_string(),
                    report.mean_approx_error(l),
                    report.final_ova_error(l).unwrap_or(f64::NAN)
                );
            }
            print_paths(&experiment::write_mnist_outputs(&cfg, &report)?);
        }
        Command::Plot {
            csv,
            output,
            metric,
            title,
        } => {
            emit_plot(&csv, &output, &PlotSpec { metric, title })?;
            println!("wrote {}", output.display());
        }
        Command::Stream {
            margins,
            output,
            order,
            convention,
            smoothing,
            warm_start,
            resume,
            save_state,
        } => {
            let cfg = OcbConfig::new(order)
                .smoothing(smoothing)
                .convention(convention);
            run_stream(
                &margins,
                &output,
                cfg,
                warm_start,
                resume.as_deref(),
                save_state.as_deref(),
            )?;
        }
    }
    Ok(())
}

fn report_summary(report: &experiment::SyntheticReport) {
    for &l in &report.learners {
        println!(
            "{:<30} mean approx_error {:.5}",
            l.to_string(),
            report.mean_error(l).unwrap_or(f64::NAN)
        );
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 1 } else { 0 });
        }
    };
    match run(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
