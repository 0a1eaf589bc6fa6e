use std::fs;
use std::path::Path;
use std::process::{Command, Output};

fn pcs(args: &[&str], dir: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_pcs"))
        .args(args)
        .current_dir(dir)
        .output()
        .expect("binary runs")
}

fn code(out: &Output) -> i32 {
    out.status.code().expect("exited normally")
}

#[test]
fn simulate_and_reconstruct_pipeline() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    let out = pcs(&["gen-matrix", "--rows", "64", "--cols", "128", "--row-weight", "16", "--seed", "3", "--out", "A.txt"], d);
    assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));
    let header = fs::read_to_string(d.join("A.txt")).unwrap();
    assert!(header.starts_with("pcs-matrix v1 64 128 0.875 row-weight:16 3\n"));

    assert_eq!(code(&pcs(&["gen-signal", "--length", "128", "--intensity", "4e4", "--out", "f.txt"], d)), 0);
    assert_eq!(code(&pcs(&["simulate", "--matrix", "A.txt", "--signal", "f.txt", "--seed", "5", "--out", "y.txt"], d)), 0);
    let counts = fs::read_to_string(d.join("y.txt")).unwrap();
    assert_eq!(counts.lines().count(), 64);

    for penalty in ["rdp", "rdp-ti", "l1", "l1-haar"] {
        let out = pcs(
            &[
                "reconstruct", "--matrix", "A.txt", "--counts", "y.txt", "--penalty", penalty, "--tau", "0.05",
                "--max-iters", "30", "--trace", "trace.csv", "--out", "fhat.txt",
            ],
            d,
        );
        assert_eq!(code(&out), 0, "{penalty}: {}", String::from_utf8_lossy(&out.stderr));
        let est: Vec<f64> = fs::read_to_string(d.join("fhat.txt"))
            .unwrap()
            .lines()
            .map(|l| l.parse().unwrap())
            .collect();
        assert_eq!(est.len(), 128);
        assert!(est.iter().all(|&x| x >= 0.0));
        let trace = fs::read_to_string(d.join("trace.csv")).unwrap();
        assert!(trace.starts_with("iter,eta,objective,phi,backtracks,elapsed_s\n"));
    }
}

#[test]
fn sweep_output_is_byte_identical() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    fs::write(
        d.join("exp.cfg"),
        "[signal]\nlength = 64\nintensity = 1e4\nsegments = 3\n\n[matrix]\nrows = 32\nrow_weight = 8\n\n\
         [solver.rdp]\nmax_iters = 15\n\n[sweep]\nreplicates = 2\ntau = 0.1, 1\naxis = N\nvalues = 16, 32\n",
    )
    .unwrap();
    assert_eq!(code(&pcs(&["sweep", "--config", "exp.cfg", "--out", "a.csv", "--runs", "runs.csv"], d)), 0);
    assert_eq!(code(&pcs(&["sweep", "--config", "exp.cfg", "--out", "b.csv"], d)), 0);
    let a = fs::read(d.join("a.csv")).unwrap();
    assert_eq!(a, fs::read(d.join("b.csv")).unwrap());
    let text = String::from_utf8(a).unwrap();
    assert_eq!(text.lines().count(), 3);
    assert_eq!(fs::read_to_string(d.join("runs.csv")).unwrap().lines().count(), 1 + 2 * 2 * 2);
}

#[test]
fn bound_and_verify_theory() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    let out = pcs(&["bound", "--m", "1024", "--n", "512"], d);
    assert_eq!(code(&out), 0);
    let csv = String::from_utf8(out.stdout).unwrap();
    assert!(csv.starts_with("k,approximation,quantization,coding,bracket\n"));
    assert_eq!(csv.lines().count(), 1 + 25);

    assert_eq!(code(&pcs(&["gen-matrix", "--rows", "256", "--cols", "64", "--p", "0.5", "--seed", "1", "--out", "B.txt"], d)), 0);
    let out = pcs(&["verify-theory", "--matrix", "B.txt", "--vectors", "200", "--seed", "4"], d);
    assert_eq!(code(&out), 0);
    let text = String::from_utf8(out.stdout).unwrap();
    let frac: f64 = text
        .lines()
        .find_map(|l| l.strip_prefix("isometry_fraction,"))
        .unwrap()
        .parse()
        .unwrap();
    assert!((0.0..=1.0).contains(&frac));
}

#[test]
fn exit_codes() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    // validation failures
    assert_eq!(code(&pcs(&["gen-matrix", "--rows", "4", "--cols", "8", "--row-weight", "9", "--out", "x"], d)), 2);
    assert_eq!(code(&pcs(&["bound", "--p", "1.5"], d)), 2);
    fs::write(d.join("bad.cfg"), "[signal]\nlength = 100\n").unwrap();
    assert_eq!(code(&pcs(&["sweep", "--config", "bad.cfg", "--out", "o.csv"], d)), 2);
    fs::write(d.join("bad.txt"), "pcs-matrix v2 1 1 0.5 bernoulli 0\n0\n").unwrap();
    assert_eq!(code(&pcs(&["verify-theory", "--matrix", "bad.txt"], d)), 2);

    // an infinite objective aborts the solver
    assert_eq!(code(&pcs(&["gen-matrix", "--rows", "8", "--cols", "16", "--row-weight", "4", "--out", "A.txt"], d)), 0);
    fs::write(d.join("y.txt"), "3\n1\n4\n1\n5\n9\n2\n6\n").unwrap();
    let out = pcs(
        &["reconstruct", "--matrix", "A.txt", "--counts", "y.txt", "--tau", "1e308", "--out", "f.txt"],
        d,
    );
    assert_eq!(code(&out), 3, "{}", String::from_utf8_lossy(&out.stderr));

    // missing input file
    assert_eq!(code(&pcs(&["verify-theory", "--matrix", "nope.txt"], d)), 1);
}
