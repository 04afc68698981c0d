use halfspace_airy::harness::{Command as HsaCommand, ExperimentConfig, ResultTable};
use std::path::Path;
use std::process::{Command, Output};

const BIN: &str = env!("CARGO_BIN_EXE_halfspace-airy");
const F2_AT_ZERO: f64 = 0.969_372_828_355_262;

fn write_config(dir: &Path, name: &str, text: &str) -> std::path::PathBuf {
    let path = dir.join(name);
    std::fs::write(&path, text).unwrap();
    path
}

fn run(args: &[&str], envs: &[(&str, &str)]) -> Output {
    let mut cmd = Command::new(BIN);
    cmd.args(args).env_remove("HSA_THREADS");
    for (k, v) in envs {
        cmd.env(k, v);
    }
    cmd.output().unwrap()
}

fn column(t: &ResultTable, name: &str) -> Vec<f64> {
    let j = t.column(name).unwrap();
    t.rows.iter().map(|r| r[j]).collect()
}

fn code(out: &Output) -> i32 {
    out.status.code().expect("process terminated by a signal")
}

fn table(out: &Output) -> ResultTable {
    ResultTable::from_csv(std::str::from_utf8(&out.stdout).unwrap()).unwrap()
}

#[test]
fn kernel_eval_prints_a_csv_row() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "k.cfg", "# crossover kernel\nkernel = cross\ns = 0.5\nt = 1.0\nx = 0.2\ny = -0.3\nvarpi = 0.5\n");
    let out = run(&["kernel-eval", "--config", cfg.to_str().unwrap()], &[]);
    assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));
    let text = String::from_utf8(out.stdout.clone()).unwrap();
    assert!(text.lines().next().unwrap().starts_with('#'));
    let t = table(&out);
    assert_eq!(t.header[0], "s");
    assert_eq!(t.rows.len(), 1);
    assert!(t.rows[0].iter().all(|v| v.is_finite()));
    assert_eq!(&t.rows[0][..4], &[0.5, 0.2, 1.0, -0.3]);
}

#[test]
fn gap_probability_of_the_airy_limit_kernel_is_close_to_f2() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "g.cfg", "kernel = airy-limit\ns = 0\n");
    let out = run(&["gap-prob", "--config", cfg.to_str().unwrap()], &[]);
    assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));
    let value = column(&table(&out), "value")[0];
    assert!((value - F2_AT_ZERO).abs() <= 5e-3, "{value}");
}

#[test]
fn exit_codes_follow_the_error_class() {
    let dir = tempfile::tempdir().unwrap();
    // usage: unknown key, unknown command, missing --config
    let bad_key = write_config(dir.path(), "bad.cfg", "kernel = cross\nbogus = 1\n");
    assert_eq!(code(&run(&["kernel-eval", "--config", bad_key.to_str().unwrap()], &[])), 2);
    assert_eq!(code(&run(&["frobnicate", "--config", bad_key.to_str().unwrap()], &[])), 2);
    assert_eq!(code(&run(&["kernel-eval"], &[])), 2);
    let dup = write_config(dir.path(), "dup.cfg", "kernel = cross\nkernel = limit\n");
    assert_eq!(code(&run(&["kernel-eval", "--config", dup.to_str().unwrap()], &[])), 2);
    // I/O: missing config, unwritable output
    assert_eq!(code(&run(&["validate", "--config", dir.path().join("missing.cfg").to_str().unwrap()], &[])), 4);
    let ok = write_config(dir.path(), "ok.cfg", "suite = contour\n");
    let unwritable = dir.path().join("no/such/dir/out.csv");
    assert_eq!(code(&run(&["validate", "--config", ok.to_str().unwrap(), "--out", unwritable.to_str().unwrap()], &[])), 4);
    // numerical: the rejection budget is exhausted
    let hard = write_config(dir.path(), "hard.cfg", "ensemble = rejection\nT = 40\ny = 0, -1, -2, -3\nq = 0.9\nfloor = -3\nmax_attempts = 3\n");
    let out = run(&["sample", "--config", hard.to_str().unwrap()], &[]);
    assert_eq!(code(&out), 3, "{}", String::from_utf8_lossy(&out.stderr));
    // success
    assert_eq!(code(&run(&["validate", "--config", ok.to_str().unwrap()], &[])), 0);
}

#[test]
fn validate_suites_pass() {
    let dir = tempfile::tempdir().unwrap();
    for suite in ["pfaffian", "skew", "geo-oracle"] {
        let cfg = write_config(dir.path(), "v.cfg", &format!("suite = {suite}\n"));
        let out = run(&["validate", "--config", cfg.to_str().unwrap()], &[]);
        assert_eq!(code(&out), 0, "suite {suite}: {}", String::from_utf8_lossy(&out.stderr));
        assert!(column(&table(&out), "pass").iter().all(|&p| p == 1.0));
    }
}

#[test]
fn sampling_is_deterministic_across_runs_and_thread_counts() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "s.cfg", "ensemble = glauber\nT = 6\ny = 0, -1, -2\nq = 0.4\nn_steps = 5000\nn_samples = 8\n");
    let args = ["sample", "--config", cfg.to_str().unwrap(), "--seed", "17"];
    let a = run(&args, &[("HSA_THREADS", "1")]);
    let b = run(&args, &[("HSA_THREADS", "4")]);
    let c = run(&args, &[]);
    assert_eq!(code(&a), 0, "{}", String::from_utf8_lossy(&a.stderr));
    assert_eq!(a.stdout, b.stdout);
    assert_eq!(a.stdout, c.stdout);
    let other = run(&["sample", "--config", cfg.to_str().unwrap(), "--seed", "18"], &[]);
    assert_ne!(a.stdout, other.stdout);
    let t = table(&a);
    assert_eq!(t.header, vec!["sample_id", "curve_index", "time", "value"]);
    assert_eq!(t.rows.len(), 8 * 3 * 7);
    assert!(t.metadata.iter().any(|(k, v)| k == "seed" && v == "17"));
}

#[test]
fn invalid_thread_count_is_a_usage_error() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "ok.cfg", "suite = contour\n");
    assert_eq!(code(&run(&["validate", "--config", cfg.to_str().unwrap()], &[("HSA_THREADS", "zero")])), 2);
}

#[test]
fn svg_output_has_one_polyline_per_curve() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "s.cfg", "ensemble = glauber\nT = 10\ny = 0, -1, -2\nq = 0.5\nn_steps = 2000\n");
    let svg = dir.path().join("paths.svg");
    let out = run(&["sample", "--config", cfg.to_str().unwrap(), "--out", svg.to_str().unwrap()], &[]);
    assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));
    let text = std::fs::read_to_string(&svg).unwrap();
    assert!(text.starts_with("<svg") || text.starts_with("<?xml"));
    assert_eq!(text.matches("<polyline").count(), 3);
}

#[test]
fn csv_file_round_trips_exactly() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "k.cfg", "kernel = limit\nq = 0.5\ns = 0.2\nt = 0.9\nx = -0.5, 0.25\ny = 0.1\n");
    let csv = dir.path().join("k.csv");
    let out = run(&["kernel-eval", "--config", cfg.to_str().unwrap(), "--out", csv.to_str().unwrap()], &[]);
    assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));
    let text = std::fs::read_to_string(&csv).unwrap();
    let parsed = ResultTable::from_csv(&text).unwrap();
    assert_eq!(parsed.rows.len(), 2);
    assert_eq!(parsed.to_csv(), text);
}

#[test]
fn empty_tables_still_carry_metadata_and_header() {
    let cfg = ExperimentConfig::parse(HsaCommand::Sample, "ensemble = walk\nT = 3\nq = 0.5\nn_samples = 0\n").unwrap();
    let t = halfspace_airy::harness::run_experiment(&cfg).unwrap();
    assert!(t.rows.is_empty());
    let text = t.to_csv();
    let lines: Vec<&str> = text.lines().collect();
    assert!(lines.iter().any(|l| l.starts_with('#')));
    assert_eq!(*lines.last().unwrap(), "sample_id,curve_index,time,value");
}

#[test]
fn config_parsing_rejects_malformed_lines() {
    assert!(ExperimentConfig::parse(HsaCommand::Validate, "suite contour\n").is_err());
    assert!(ExperimentConfig::parse(HsaCommand::Validate, "suite = \n").is_err());
    let cfg = ExperimentConfig::parse(HsaCommand::Validate, "  # comment\n\nsuite = skew # trailing\n").unwrap();
    assert_eq!(cfg.params().find(|(k, _)| *k == "suite").map(|(_, v)| v), Some("skew"));
}
