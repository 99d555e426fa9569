//! Harness behavior: report files, stream files, online ordering,
//! aggregation and the command-line interface.

mod common;

use std::cell::RefCell;
use std::fs;
use std::path::{Path, PathBuf};
use std::process::Command;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use common::gaussian_vector;
use streampca::harness::experiment::{play, run_experiment_on, OnlineLearner};
use streampca::harness::report::{render_report, CURVE_HEADER, MERGED_HEADER, SUMMARY_HEADER};
use streampca::harness::stream_io::read_stream;
use streampca::harness::{load_stream, run_experiment, save_stream, write_report, ExperimentConfig};
use streampca::stream_model::StreamRecord;
use streampca::symmat::Vector;
use streampca::{Error, Result};

const SMALL: &str = "
model.d = 4
model.eigenvalues = 4, 1, 0.5, 0.25
model.kind = bounded_uniform_mixture
adversary.kind = fixed_vector
adversary.direction = e2
adversary.radius = 0.2
stream.n = 30
warm_start.samples = 10
experiment.seed = 7
report.timing = false
learner.oga.kind = nonconvex_oga
learner.oga.block = 10
learner.oga.eta = 0.01
learner.conv.kind = convex_oga
learner.conv.block = 10
learner.conv.eta = 0.01
";

fn small(extra: &str) -> ExperimentConfig {
    format!("{SMALL}{extra}").parse().unwrap()
}

fn lines(s: &str) -> Vec<&str> {
    s.lines().collect()
}

#[test]
fn report_layout_for_two_learners_and_three_boundaries() {
    let result = run_experiment(&small("")).unwrap();
    assert_eq!(result.grid, vec![10, 20, 30]);
    let dir = tempfile::tempdir().unwrap();
    let paths = write_report(&result, dir.path()).unwrap();
    assert_eq!(paths.len(), 3);
    for name in ["curve_oga.csv", "curve_conv.csv"] {
        let text = fs::read_to_string(dir.path().join(name)).unwrap();
        let rows = lines(&text);
        assert_eq!(rows.len(), 4);
        assert_eq!(rows[0], CURVE_HEADER);
        assert!(!text.contains('\r'));
        // Neither learner carries a certificate, and one replicate has no
        // standard error.
        for row in &rows[1..] {
            let fields: Vec<&str> = row.split(',').collect();
            assert_eq!(fields.len(), 5);
            assert_eq!(fields[2], "");
            assert_eq!(fields[4], "");
        }
    }
    let summary = fs::read_to_string(dir.path().join("summary.csv")).unwrap();
    let rows = lines(&summary);
    assert_eq!(rows.len(), 3);
    assert_eq!(rows[0], SUMMARY_HEADER);
    assert!(rows[2].starts_with("conv,"));
    assert!(rows[2].ends_with(",,"), "empty rank_one_error_rate and steps_per_sec: {}", rows[2]);
}

#[test]
fn non_finite_values_are_refused_with_the_field_name() {
    let mut result = run_experiment(&small("")).unwrap();
    result.learners[1].curve[1].avg_regret = f64::NAN;
    match render_report(&result) {
        Err(Error::Diagnostics { field }) => assert_eq!(field, "conv.avg_regret at n=20"),
        other => panic!("expected a diagnostics error, got {other:?}"),
    }
    let dir = tempfile::tempdir().unwrap();
    assert!(write_report(&result, dir.path()).is_err());
    assert_eq!(fs::read_dir(dir.path()).unwrap().count(), 0);
}

#[test]
fn rank_one_learner_fills_the_certificate_columns() {
    let cfg = small("learner.r1.kind = rank_one_oga\nlearner.r1.block = 10\nlearner.r1.eta = 0.01\n");
    let result = run_experiment(&cfg).unwrap();
    let files = render_report(&result).unwrap();
    let curve = &files.iter().find(|(n, _)| n == "curve_r1.csv").unwrap().1;
    for row in curve.lines().skip(1) {
        let rate: f64 = row.split(',').nth(4).unwrap().parse().unwrap();
        assert!((0.0..=1.0).contains(&rate));
    }
    let summary = &files.iter().find(|(n, _)| n == "summary.csv").unwrap().1;
    let r1 = summary.lines().find(|l| l.starts_with("r1,")).unwrap();
    assert_ne!(r1.split(',').nth(3).unwrap(), "");
}

#[test]
fn runs_are_deterministic_without_timing() {
    let cfg = small("experiment.replicates = 2\n");
    let a = render_report(&run_experiment(&cfg).unwrap()).unwrap();
    let b = render_report(&run_experiment(&cfg).unwrap()).unwrap();
    assert_eq!(a, b);
    let reseeded: ExperimentConfig =
        format!("{}experiment.replicates = 2\n", SMALL.replace("seed = 7", "seed = 8")).parse().unwrap();
    let other = render_report(&run_experiment(&reseeded).unwrap()).unwrap();
    assert_ne!(a, other);
}

#[test]
fn replicate_means_are_arithmetic_means() {
    let result = run_experiment(&small("experiment.replicates = 3\n")).unwrap();
    for (i, learner) in result.learners.iter().enumerate() {
        for (k, point) in learner.curve.iter().enumerate() {
            let values: Vec<f64> = result.replicates.iter().map(|r| r.learners[i].avg_regret[k]).collect();
            let mean = values.iter().sum::<f64>() / values.len() as f64;
            assert!((point.avg_regret - mean).abs() <= 1e-12);
            assert!(point.avg_regret_stderr.is_some());
        }
        let finals: Vec<f64> = result.replicates.iter().map(|r| r.learners[i].final_avg_regret).collect();
        assert!((learner.final_avg_regret - finals.iter().sum::<f64>() / 3.0).abs() <= 1e-12);
    }
}

#[test]
fn stream_file_round_trip() {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let d = 5;
    let records: Vec<StreamRecord> = (0..100)
        .map(|_| StreamRecord::from_parts(gaussian_vector(d, &mut rng), gaussian_vector(d, &mut rng) * 0.1))
        .collect();
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("s.txt");
    save_stream(&path, d, &records).unwrap();
    assert_eq!(load_stream(&path).unwrap(), (d, records.clone()));

    let observed: Vec<StreamRecord> = records.iter().map(|r| StreamRecord::observed(r.x().clone())).collect();
    save_stream(&path, d, &observed).unwrap();
    assert_eq!(load_stream(&path).unwrap(), (d, observed));

    let bad = "#streampca-v1 d=2 n=1 split=0\n1,2,3,4\n";
    assert!(matches!(read_stream(bad.as_bytes()), Err(Error::Parse { line: 2, .. })));
    assert_eq!(read_stream("#streampca-v1 d=3 n=0 split=0\n".as_bytes()).unwrap(), (3, vec![]));
    assert!(matches!(load_stream(&dir.path().join("missing")), Err(Error::Io { .. })));
}

/// Predicts the normalized sum of everything it has seen, and logs how many
/// blocks it had seen whenever its prediction is read.
struct Spy {
    w: Vector,
    seen: usize,
    reads: RefCell<Vec<usize>>,
    updates: Vec<Vector>,
}

impl OnlineLearner for Spy {
    fn predict(&self) -> &Vector {
        self.reads.borrow_mut().push(self.seen);
        &self.w
    }

    fn update(&mut self, block: &[Vector]) -> Result<Option<bool>> {
        self.updates.push(self.w.clone());
        let mut acc = self.w.clone();
        for x in block {
            acc += x;
        }
        self.w = acc.normalize();
        self.seen += 1;
        Ok(None)
    }
}

#[test]
fn predictions_are_taken_before_blocks_are_revealed() {
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    let stream: Vec<Vector> = (0..12).map(|_| gaussian_vector(3, &mut rng)).collect();
    let mut spy = Spy {
        w: Vector::from_column_slice(&[1.0, 0.0, 0.0]),
        seen: 0,
        reads: RefCell::new(Vec::new()),
        updates: Vec::new(),
    };
    let (ledger, _) = play(&mut spy, &stream, 4, None, false).unwrap();
    // The prediction scored on block t is the one held before block t arrived.
    for (t, block) in stream.chunks(4).enumerate() {
        let expected: f64 = block.iter().map(|x| x.dot(&spy.updates[t]).powi(2)).sum();
        assert!((ledger.per_block()[t].block_payoff - expected).abs() < 1e-12);
    }
    let reads = spy.reads.borrow();
    for t in 0..3 {
        assert!(reads.contains(&t), "no read before block {t}: {reads:?}");
    }
    assert!(reads.windows(2).all(|w| w[0] <= w[1]));
}

#[test]
fn loaded_stream_reproduces_the_generated_run() {
    let cfg = small("");
    let generated = streampca::harness::experiment::generate_replicate(&cfg, 0).unwrap();
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("s.txt");
    save_stream(&path, 4, &generated.all_records()).unwrap();
    let (d, records) = load_stream(&path).unwrap();
    let loaded = streampca::harness::experiment::replicate_from_records(&cfg, d, records).unwrap();
    let from_file = render_report(&run_experiment_on(&cfg, Some(loaded)).unwrap()).unwrap();
    let in_memory = render_report(&run_experiment(&cfg).unwrap()).unwrap();
    assert_eq!(from_file, in_memory);
}

fn cli(args: &[&str]) -> (i32, String, String) {
    let out = Command::new(env!("CARGO_BIN_EXE_streampca")).args(args).output().unwrap();
    (
        out.status.code().unwrap_or(-1),
        String::from_utf8_lossy(&out.stdout).into_owned(),
        String::from_utf8_lossy(&out.stderr).into_owned(),
    )
}

fn write_config(dir: &Path, name: &str, text: &str) -> PathBuf {
    let path = dir.join(name);
    fs::write(&path, text).unwrap();
    path
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

#[test]
fn cli_pipeline_and_exit_codes() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "ok.conf", SMALL);

    let (code, out, _) = cli(&["validate", "--config", s(&cfg)]);
    assert_eq!(code, 0);
    assert!(out.contains("gap_condition_ok = true"));

    let stream = dir.path().join("stream.txt");
    assert_eq!(cli(&["generate", "--config", s(&cfg), "--out", s(&stream)]).0, 0);
    let run_a = dir.path().join("a");
    let run_b = dir.path().join("b");
    assert_eq!(cli(&["run", "--config", s(&cfg), "--out", s(&run_a)]).0, 0);
    assert_eq!(cli(&["run", "--config", s(&cfg), "--stream", s(&stream), "--out", s(&run_b)]).0, 0);
    for name in ["curve_oga.csv", "curve_conv.csv", "summary.csv"] {
        assert_eq!(
            fs::read(run_a.join(name)).unwrap(),
            fs::read(run_b.join(name)).unwrap(),
            "{name}"
        );
    }
    let merged = dir.path().join("merged.csv");
    assert_eq!(cli(&["report", "--in", s(&run_a), "--out", s(&merged)]).0, 0);
    let text = fs::read_to_string(&merged).unwrap();
    assert_eq!(text.lines().next(), Some(MERGED_HEADER));
    assert_eq!(text.lines().count(), 1 + 2 * 3);

    // Configuration problems exit with 2, I/O problems with 3.
    let unknown = write_config(dir.path(), "unknown.conf", &format!("{SMALL}model.colour = blue\n"));
    assert_eq!(cli(&["run", "--config", s(&unknown), "--out", s(&run_a)]).0, 2);
    assert_eq!(cli(&["validate", "--config", s(&dir.path().join("nope.conf"))]).0, 3);
    assert_eq!(cli(&["report", "--in", s(&dir.path().join("nope")), "--out", s(&merged)]).0, 3);
    let truncated = dir.path().join("short.txt");
    fs::write(&truncated, "#streampca-v1 d=4 n=2 split=0\n1,2,3,4\n").unwrap();
    assert_eq!(cli(&["run", "--config", s(&cfg), "--stream", s(&truncated), "--out", s(&run_b)]).0, 3);

    let violating = SMALL
        .replace("model.eigenvalues = 4, 1, 0.5, 0.25", "model.eigenvalues = 1, 0.99, 0.5, 0.25")
        .replace("adversary.radius = 0.2", "adversary.radius = 1");
    let violating = write_config(dir.path(), "gap.conf", &violating);
    let (code, out, _) = cli(&["validate", "--config", s(&violating)]);
    assert_eq!(code, 2);
    assert!(out.contains("gap_condition_ok = false"));
    let theorem = write_config(
        dir.path(),
        "theorem.conf",
        &format!("{}learner.t1.kind = nonconvex_oga\nlearner.t1.mode = theorem1\n", fs::read_to_string(&violating).unwrap()),
    );
    let (code, _, err) = cli(&["run", "--config", s(&theorem), "--out", s(&run_b)]);
    assert_eq!(code, 2, "{err}");
}
