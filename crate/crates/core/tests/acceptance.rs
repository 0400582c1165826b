//! Acceptance suite: one PASS/FAIL line per criterion.
//!
//! Runs without the libtest harness so the verdict lines are always visible.
//! MNIST files are read from `$OCBOOST_MNIST_DIR` (default `<workspace>/data/mnist`);
//! set `OCBOOST_SKIP_MNIST=1` to report criterion 8 as skipped instead of failed
//! when the data is unavailable.

use std::path::PathBuf;
use std::process::ExitCode;
use std::time::{Duration, Instant};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use ocboost::batch::{fit_weights, incremental_oracle, incremental_oracle_from};
use ocboost::experiment::{
    run_mnist, run_synthetic, write_synthetic_outputs, ExperimentConfig, LearnerId, LearnerSet,
    SyntheticReport,
};
use ocboost::ocb::{optimal_q, q_error};
use ocboost::oza::{consolidated_reweight, two_case_reweight};
use ocboost::synthetic::{gen_drift_stream, random_margins, DriftSpec};
use ocboost::{MarginMatrix, NegativeSumConvention, OcbConfig, OcbState, OzaMode, OzaState, Sign};

type Outcome = Result<String, String>;

fn check(cond: bool, msg: impl Into<String>) -> Result<(), String> {
    if cond {
        Ok(())
    } else {
        Err(msg.into())
    }
}

fn within(limit: Duration, took: Duration) -> Result<(), String> {
    check(took < limit, format!("took {took:.2?}, limit {limit:?}"))
}

fn rand_matrix(rng: &mut ChaCha8Rng, n: usize, j: usize) -> MarginMatrix {
    let cells = (0..n * j)
        .map(|_| Sign::from_bool(rng.random::<bool>()))
        .collect();
    MarginMatrix::new(n, j, cells).unwrap()
}

fn c1_batch_correctness() -> Outcome {
    let t = Instant::now();
    let fixture = MarginMatrix::from_rows(&[[1i8, 1], [1, -1], [-1, 1]]).unwrap();
    let fit = fit_weights(&fixture, 0.0).map_err(|e| e.to_string())?;
    let expect = [0.5 * 2f64.ln(), 0.5 * 3f64.ln()];
    for (a, b) in fit.alphas.iter().zip(expect) {
        check((a - b).abs() <= 1e-12, format!("fixture alpha {a} vs {b}"))?;
    }

    // independent reweighting loop; after each coordinate both sides of the
    // split must carry sqrt(W+ W-)
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let mut tested = 0;
    while tested < 100 {
        let (n, j) = (rng.random_range(1..=50), rng.random_range(1..=8));
        let m = rand_matrix(&mut rng, n, j);
        let Ok(fit) = fit_weights(&m, 0.0) else {
            continue;
        };
        tested += 1;
        let mut d = vec![1.0; n];
        for (c, &alpha) in fit.alphas.iter().enumerate() {
            let (wp, wm): (f64, f64) = (0..n).fold((0.0, 0.0), |(p, q), i| {
                if m.get(i, c).is_plus() {
                    (p + d[i], q)
                } else {
                    (p, q + d[i])
                }
            });
            for (i, w) in d.iter_mut().enumerate() {
                *w *= (-alpha * m.get(i, c).as_f64()).exp();
            }
            let (np, nm): (f64, f64) = (0..n).fold((0.0, 0.0), |(p, q), i| {
                if m.get(i, c).is_plus() {
                    (p + d[i], q)
                } else {
                    (p, q + d[i])
                }
            });
            let g = (wp * wm).sqrt();
            check(
                (np - g).abs() <= 1e-9 * g && (nm - g).abs() <= 1e-9 * g,
                format!("balance broken at coordinate {}: {np} / {nm} vs {g}", c + 1),
            )?;
        }
    }
    within(Duration::from_secs(1), t.elapsed())?;
    Ok(format!(
        "fixture exact, balance on {tested} matrices, {:.2?}",
        t.elapsed()
    ))
}

fn c2_oracle_equivalence() -> Outcome {
    let t = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    for case in 0..20 {
        let (n, j) = (rng.random_range(1..=200), rng.random_range(1..=10));
        let m = rand_matrix(&mut rng, n, j);
        let oracle = incremental_oracle(&m, 0.01).map_err(|e| e.to_string())?;
        for k in 1..=n {
            let refit = fit_weights(&m.prefix(k).unwrap(), 0.01).unwrap().alphas;
            check(
                oracle.after(k) == Some(refit.as_slice()),
                format!("case {case}: oracle step {k} differs from refit"),
            )?;
        }
    }
    within(Duration::from_secs(30), t.elapsed())?;
    Ok(format!("20 matrices bit-identical, {:.2?}", t.elapsed()))
}

fn c3_coordinate_one() -> Outcome {
    let t = Instant::now();
    let m = random_margins(1050, 20, 0.6, 3).map_err(|e| e.to_string())?;
    let prefix = m.prefix(50).unwrap();
    let rest = m.slice_rows(50, 1050).unwrap();
    let oracle = incremental_oracle_from(&m, 51, 0.0).map_err(|e| e.to_string())?;
    let mut worst = 0f64;
    for conv in NegativeSumConvention::ALL {
        for k in [0, 5, 20] {
            let cfg = OcbConfig::new(k).smoothing(0.0).convention(conv);
            let mut s = OcbState::init_warm(&prefix, cfg).map_err(|e| e.to_string())?;
            let traj = s.run_stream(&rest).map_err(|e| e.to_string())?;
            for n in 51..=1050 {
                let (a, b) = (traj.after(n).unwrap()[0], oracle.after(n).unwrap()[0]);
                let rel = if a == b { 0.0 } else { (a - b).abs() / b.abs() };
                worst = worst.max(rel);
                check(rel <= 1e-10, format!("{conv} K={k} n={n}: {a} vs {b}"))?;
            }
        }
    }
    within(Duration::from_secs(30), t.elapsed())?;
    Ok(format!(
        "max relative deviation {worst:.1e}, {:.2?}",
        t.elapsed()
    ))
}

fn c4_q_minimizer() -> Outcome {
    let t = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    let steps = 10_000;
    let mut done = 0;
    while done < 500 {
        let n = rng.random_range(1..=20);
        let w: Vec<f64> = (0..n).map(|_| rng.random_range(0.01..5.0)).collect();
        let mj: Vec<Sign> = (0..n).map(|_| Sign::from_bool(rng.random())).collect();
        let mbig: Vec<Sign> = (0..n).map(|_| Sign::from_bool(rng.random())).collect();
        let sigma = Sign::from_bool(rng.random());
        let da = rng.random_range(-2.0..2.0);
        let Some(q) = optimal_q(&w, &mj, &mbig, sigma) else {
            continue;
        };
        done += 1;
        let (mut best_q, mut best) = (0.0, f64::INFINITY);
        for g in 0..=steps {
            let qg = g as f64 / steps as f64;
            let e = q_error(&w, &mj, &mbig, sigma, da, qg).unwrap();
            if e < best {
                (best_q, best) = (qg, e);
            }
        }
        check(
            (q - best_q).abs() <= 1.0 / steps as f64 + 1e-12,
            format!("closed form {q} vs grid minimum at {best_q}"),
        )?;
        check(
            q_error(&w, &mj, &mbig, sigma, da, q).unwrap() <= best + 1e-12,
            "closed form above grid minimum",
        )?;
    }
    within(Duration::from_secs(10), t.elapsed())?;
    Ok(format!("500 instances, {:.2?}", t.elapsed()))
}

fn c5_oza_identities() -> Outcome {
    let t = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let mut worst = 0f64;
    for _ in 0..100_000 {
        let d = rng.random_range(1e-3..10.0);
        let (wp, wm) = (rng.random_range(1e-3..100.0), rng.random_range(1e-3..100.0));
        let m = Sign::from_bool(rng.random());
        let a = two_case_reweight(d, wp, wm, m);
        let b = consolidated_reweight(d, 0.5 * (wp / wm).ln(), m);
        let rel = (a - b).abs() / a.abs();
        worst = worst.max(rel);
        check(rel <= 1e-12, format!("two-case {a} vs consolidated {b}"))?;
    }
    for seed in 0..20 {
        let m = random_margins(100, 5, 0.55, 500 + seed).unwrap();
        let mut ocb = OcbState::init_cold(5, OcbConfig::new(0)).unwrap();
        let mut oza =
            OzaState::init_cold(5, ocboost::ocb::DEFAULT_SMOOTHING, OzaMode::Exponential).unwrap();
        let a = ocb.run_stream(&m).map_err(|e| e.to_string())?;
        let b = oza.run_stream(&m).map_err(|e| e.to_string())?;
        check(
            a.steps() == b.steps(),
            format!("stream {seed}: OCB(K=0) and exponential Oza differ"),
        )?;
    }
    Ok(format!(
        "max relative deviation {worst:.1e}; 20 streams identical, {:.2?}",
        t.elapsed()
    ))
}

fn drift_suite() -> (Result<SyntheticReport, String>, Duration) {
    let cfg = ExperimentConfig {
        learners: LearnerSet {
            orders: vec![0, 5, 20],
            conventions: NegativeSumConvention::ALL.to_vec(),
            oza_modes: vec![OzaMode::Averaged],
        },
        ..ExperimentConfig::default()
    };
    let t = Instant::now();
    let r = run_synthetic(&cfg).map_err(|e| e.to_string());
    (r, t.elapsed())
}

fn ocb(order: usize, convention: NegativeSumConvention) -> LearnerId {
    LearnerId::Ocb { order, convention }
}

fn c6_order_trend(suite: &(Result<SyntheticReport, String>, Duration)) -> Outcome {
    let report = suite.0.as_ref().map_err(Clone::clone)?;
    let conv = NegativeSumConvention::default();
    let e = |l| report.mean_error(l).unwrap();
    let (k0, k5, k20) = (e(ocb(0, conv)), e(ocb(5, conv)), e(ocb(20, conv)));
    let oza = e(LearnerId::Oza(OzaMode::Averaged));
    let line = format!(
        "K=0 {k0:.4}, K=5 {k5:.4}, K=20 {k20:.4}, oza {oza:.4} ({conv}), {:.2?}",
        suite.1
    );
    check(
        k20 < k5 && k5 < k0 && k20 < oza,
        format!("ordering violated: {line}"),
    )?;
    within(Duration::from_secs(300), suite.1)?;
    Ok(line)
}

fn c7_convention(suite: &(Result<SyntheticReport, String>, Duration)) -> Outcome {
    let report = suite.0.as_ref().map_err(Clone::clone)?;
    let mean = |c: NegativeSumConvention| {
        [0, 5, 20]
            .iter()
            .map(|&k| report.mean_error(ocb(k, c)).unwrap())
            .sum::<f64>()
            / 3.0
    };
    let default = NegativeSumConvention::default();
    let other = NegativeSumConvention::ALL
        .into_iter()
        .find(|&c| c != default)
        .unwrap();
    let (d, o) = (mean(default), mean(other));
    let line = format!("default {default} {d:.4} vs {other} {o:.4}");
    check(d <= o + 0.01, format!("default convention worse: {line}"))?;
    Ok(line)
}

fn mnist_dir() -> PathBuf {
    std::env::var_os("OCBOOST_MNIST_DIR")
        .map(PathBuf::from)
        .unwrap_or_else(|| PathBuf::from(concat!(env!("CARGO_MANIFEST_DIR"), "/../../data/mnist")))
}

fn c8_mnist() -> Option<Outcome> {
    let dir = mnist_dir();
    if !dir.join("train-images-idx3-ubyte").exists()
        && std::env::var_os("OCBOOST_SKIP_MNIST").is_some()
    {
        return None;
    }
    let t = Instant::now();
    let mut cfg = ExperimentConfig::default();
    cfg.mnist.dir = dir;
    let outcome = (|| {
        let r = run_mnist(&cfg)
            .map_err(|e| format!("{e} (set OCBOOST_MNIST_DIR to the IDX directory)"))?;
        let conv = NegativeSumConvention::default();
        let o = ocb(cfg.mnist.n_hypotheses, conv);
        let z = LearnerId::Oza(OzaMode::Averaged);
        let (ao, az) = (r.mean_approx_error(o), r.mean_approx_error(z));
        let (eo, ez, eb) = (
            r.final_ova_error(o).unwrap(),
            r.final_ova_error(z).unwrap(),
            r.final_ova_error(LearnerId::Batch).unwrap(),
        );
        let line = format!(
            "approx ocb {ao:.4} vs oza {az:.4}; one-vs-all error ocb {:.2}% batch {:.2}% oza {:.2}%, {:.2?}",
            100.0 * eo,
            100.0 * eb,
            100.0 * ez,
            t.elapsed()
        );
        check(ao < az, format!("(a) failed: {line}"))?;
        check(
            (eo - eb).abs() <= 0.02 && eo <= ez,
            format!("(b) failed: {line}"),
        )?;
        within(Duration::from_secs(900), t.elapsed())?;
        Ok(line)
    })();
    Some(outcome)
}

fn c9_determinism() -> Outcome {
    let cfg = |dir: PathBuf| ExperimentConfig {
        out_dir: dir,
        seeds: vec![7, 8],
        ..ExperimentConfig::default()
    };
    let tmp = tempfile::tempdir().map_err(|e| e.to_string())?;
    let mut files = Vec::new();
    for run in ["a", "b"] {
        let c = cfg(tmp.path().join(run));
        let report = run_synthetic(&c).map_err(|e| e.to_string())?;
        let paths = write_synthetic_outputs(&c, &report, "synthetic").map_err(|e| e.to_string())?;
        files.push(
            paths
                .iter()
                .map(|p| (p.file_name().unwrap().to_owned(), std::fs::read(p).unwrap()))
                .collect::<Vec<_>>(),
        );
    }
    check(files[0] == files[1], "rerun produced different bytes")?;

    let stream = gen_drift_stream(&DriftSpec::new(1, 1000, 20, 9))
        .unwrap()
        .margins;
    let cfg = OcbConfig::new(5);
    let mut whole = OcbState::init_warm(&stream.prefix(50).unwrap(), cfg).unwrap();
    let full = whole
        .run_stream(&stream.slice_rows(50, 1000).unwrap())
        .map_err(|e| e.to_string())?;

    let mut first = OcbState::init_warm(&stream.prefix(50).unwrap(), cfg).unwrap();
    let mut traj = first
        .run_stream(&stream.slice_rows(50, 400).unwrap())
        .unwrap();
    let mut buf = Vec::new();
    first.write_checkpoint(&mut buf).unwrap();
    let mut resumed = OcbState::read_checkpoint(buf.as_slice()).map_err(|e| e.to_string())?;
    check(resumed == first, "restored state differs")?;
    traj.extend(
        resumed
            .run_stream(&stream.slice_rows(400, 1000).unwrap())
            .unwrap(),
    )
    .unwrap();
    check(
        traj == full,
        "resumed trajectory differs from uninterrupted run",
    )?;
    check(resumed == whole, "final states differ")?;
    Ok(format!(
        "{} output files identical; resume at 400/1000 exact",
        files[0].len()
    ))
}

fn main() -> ExitCode {
    let mut failed = 0;
    let mut report = |n: usize, name: &str, outcome: Option<Outcome>| {
        let (verdict, detail) = match outcome {
            Some(Ok(d)) => ("PASS", d),
            Some(Err(d)) => {
                failed += 1;
                ("FAIL", d)
            }
            None => (
                "SKIP",
                "MNIST data not found and OCBOOST_SKIP_MNIST is set".into(),
            ),
        };
        println!("criterion {n} [{verdict}] {name}: {detail}");
    };
    report(1, "batch correctness", Some(c1_batch_correctness()));
    report(2, "oracle equivalence", Some(c2_oracle_equivalence()));
    report(3, "coordinate-1 exactness", Some(c3_coordinate_one()));
    report(4, "q minimizer", Some(c4_q_minimizer()));
    report(5, "Oza identities", Some(c5_oza_identities()));
    let suite = drift_suite();
    report(6, "order trend on drift", Some(c6_order_trend(&suite)));
    report(7, "negative-sum convention", Some(c7_convention(&suite)));
    report(8, "MNIST one-vs-all", c8_mnist());
    report(9, "determinism and checkpointing", Some(c9_determinism()));
    if failed > 0 {
        println!("{failed} criteria failed");
        ExitCode::FAILURE
    } else {
        ExitCode::SUCCESS
    }
}
