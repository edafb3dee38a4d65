use std::fs;
use std::path::Path;
use std::process::{Command, Output};

fn cvqkd(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_cvqkd"))
        .args(args)
        .output()
        .expect("spawn cvqkd")
}

fn run_to(dir: &Path, name: &str, args: &[&str]) -> String {
    let out = dir.join(name);
    let mut all: Vec<&str> = args.to_vec();
    let out_str = out.to_str().unwrap().to_string();
    all.extend(["--out", &out_str]);
    let res = cvqkd(&all);
    assert!(
        res.status.success(),
        "cvqkd {args:?} failed: {}",
        String::from_utf8_lossy(&res.stderr)
    );
    fs::read_to_string(out).unwrap()
}

fn rows(csv: &str) -> Vec<Vec<&str>> {
    csv.lines()
        .skip(1)
        .map(|l| l.split(',').collect())
        .collect()
}

#[test]
fn default_sweep_has_one_row_per_db() {
    let dir = tempfile::tempdir().unwrap();
    let csv = run_to(dir.path(), "sweep.csv", &["sweep-loss"]);
    let header = csv.lines().next().unwrap();
    assert_eq!(
        header,
        "loss_db,T,skr_a,skr_b,skr_c,skr_d,skr_e,v_a1_opt,v_a2_opt"
    );
    let body = rows(&csv);
    assert_eq!(body.len(), 36);
    assert_eq!(body[0][0], "0");
    assert_eq!(body[35][0], "35");
    for r in &body {
        assert_eq!(r.len(), 9);
        for skr in &r[2..7] {
            assert!(skr.parse::<f64>().unwrap() >= 0.0);
        }
    }
}

#[test]
fn region_scan_is_square_and_consistent() {
    let dir = tempfile::tempdir().unwrap();
    let csv = run_to(
        dir.path(),
        "region.csv",
        &[
            "xi-region",
            "--T",
            "0.1",
            "--grid",
            "41",
            "--opt-grid",
            "16",
            "--min-step",
            "1e-3",
        ],
    );
    assert!(csv.starts_with("xi_re,xi_im,admissible,skr\n"));
    let body = rows(&csv);
    assert_eq!(body.len(), 41 * 41);
    for r in &body {
        assert_eq!(r.len(), 4);
        match r[2] {
            "true" => assert!(r[3].parse::<f64>().unwrap() >= 0.0),
            "false" => assert_eq!(r[3], ""),
            other => panic!("bad admissible flag {other}"),
        }
    }
}

#[test]
fn reruns_are_byte_identical() {
    let dir = tempfile::tempdir().unwrap();
    let args = [
        "sweep-loss",
        "--loss-max",
        "20",
        "--loss-step",
        "5",
        "--opt-grid",
        "16",
    ];
    let a = run_to(dir.path(), "a.csv", &args);
    let b = run_to(dir.path(), "b.csv", &args);
    assert_eq!(a, b);
    assert_eq!(rows(&a).len(), 5);
}

#[test]
fn flags_override_config_file() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("run.cfg");
    fs::write(
        &cfg,
        "command = optimize-power\nbeta = 0.95\nT = 0.5\nopt_grid = 16\n",
    )
    .unwrap();
    let cfg = cfg.to_str().unwrap();
    let from_file = run_to(dir.path(), "f.csv", &["--config", cfg]);
    let overridden = run_to(dir.path(), "o.csv", &["--config", cfg, "--beta", "0.9"]);
    let direct = run_to(
        dir.path(),
        "d.csv",
        &[
            "optimize-power",
            "--beta",
            "0.9",
            "--T",
            "0.5",
            "--opt-grid",
            "16",
        ],
    );
    assert_ne!(from_file, overridden);
    assert_eq!(overridden, direct);
}

#[test]
fn single_point_reports_rates() {
    let dir = tempfile::tempdir().unwrap();
    let csv = run_to(dir.path(), "p.csv", &["single-point", "--T", "0.1"]);
    let body = rows(&csv);
    assert_eq!(body.len(), 1);
    assert_eq!(body[0][5], "true");
    let full: f64 = body[0][8].parse().unwrap();
    let sel: f64 = body[0][6].parse().unwrap();
    assert!(full > sel && sel >= 0.0);

    let outside = run_to(
        dir.path(),
        "q.csv",
        &["single-point", "--xi-b1b2-re", "0.002"],
    );
    assert!(outside.lines().nth(1).unwrap().ends_with("false,,,,,"));
}

#[test]
fn usage_errors_exit_with_one() {
    for args in [
        vec!["sweep-loss", "--beta", "1.2"],
        vec!["sweep-loss", "--bogus"],
        vec!["--beta", "0.9"],
        vec!["xi-region", "--T", "abc"],
    ] {
        let res = cvqkd(&args);
        assert_eq!(res.status.code(), Some(1), "{args:?}");
        assert!(!res.stderr.is_empty());
    }
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("bad.cfg");
    fs::write(&cfg, "command = sweep-loss\ncolour = blue\n").unwrap();
    assert_eq!(
        cvqkd(&["--config", cfg.to_str().unwrap()]).status.code(),
        Some(1)
    );
}

#[test]
fn help_exits_cleanly() {
    assert_eq!(cvqkd(&["--help"]).status.code(), Some(0));
    assert_eq!(cvqkd(&["--version"]).status.code(), Some(0));
}

#[test]
fn io_errors_exit_with_two() {
    let dir = tempfile::tempdir().unwrap();
    let missing = dir.path().join("nope").join("out.csv");
    let res = cvqkd(&["single-point", "--out", missing.to_str().unwrap()]);
    assert_eq!(res.status.code(), Some(2));
    let res = cvqkd(&["--config", dir.path().join("absent.cfg").to_str().unwrap()]);
    assert_eq!(res.status.code(), Some(2));
}

#[test]
fn numeric_failures_exit_with_three() {
    // a strongly correlated noise term makes the state unphysical at the
    // requested variances
    let res = cvqkd(&[
        "optimize-power",
        "--T",
        "0.5",
        "--xi-b1b2-re",
        "0.5",
        "--opt-grid",
        "4",
    ]);
    assert_eq!(
        res.status.code(),
        Some(3),
        "{}",
        String::from_utf8_lossy(&res.stderr)
    );
    let err = String::from_utf8_lossy(&res.stderr);
    assert!(err.contains("T=0.5"), "{err}");
}
