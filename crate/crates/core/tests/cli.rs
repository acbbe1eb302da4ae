use std::fs;
use std::path::Path;
use std::process::{Command, Output};

fn aggdiff(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_aggdiff")).args(args).output().expect("binary runs")
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

fn out_dir(dir: &Path) -> String {
    dir.to_str().unwrap().to_owned()
}

#[test]
fn classify_keller_segel_from_config_file() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = tmp.path().join("run.cfg");
    let out = tmp.path().join("out");
    fs::write(
        &cfg,
        format!("# critical mass\ncommand = classify\nd = 2\nepsilon = 0.25\nkernel.variant = log\noutput = {}\n", out.display()),
    )
    .unwrap();
    let o = aggdiff(&["--config", cfg.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    assert!(String::from_utf8_lossy(&o.stdout).starts_with("Critical"));
    let text = fs::read_to_string(out.join("classify.txt")).unwrap();
    let lines: Vec<&str> = text.lines().collect();
    assert!(lines[0].starts_with("Critical"));
    assert!(lines[1].starts_with("trace: "));
    assert!(lines[2].starts_with("# "));
}

#[test]
fn flags_override_the_config_file() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = tmp.path().join("run.cfg");
    fs::write(&cfg, "command = classify\nd = 2\nepsilon = 0.25\nkernel.variant = log\n").unwrap();
    let out = out_dir(tmp.path());
    let o = aggdiff(&["--config", cfg.to_str().unwrap(), "--epsilon", "1", "--output", &out]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    assert!(String::from_utf8_lossy(&o.stdout).contains("UnboundedBelowAtInfinity"));
}

#[test]
fn validation_errors_exit_two_with_line_numbers() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = tmp.path().join("bad.cfg");
    fs::write(&cfg, "command = classify\nd = 2\nepsilon = 1\nkernel.variant = power\nkernel.beta = -3\n").unwrap();
    let o = aggdiff(&["--config", cfg.to_str().unwrap(), "--output", &out_dir(tmp.path())]);
    assert_eq!(o.status.code(), Some(2));
    let err = stderr(&o);
    assert!(err.starts_with("2,"), "{err}");
    assert!(err.contains("line 5"), "{err}");
    assert!(err.contains("beta must exceed -d"), "{err}");

    let missing = aggdiff(&["classify", "--kernel.variant", "log", "--output", &out_dir(tmp.path())]);
    assert_eq!(missing.status.code(), Some(2));
    assert!(stderr(&missing).contains("missing required key `d`"));

    let unknown = aggdiff(&["classify", "--no-such-key", "1"]);
    assert_eq!(unknown.status.code(), Some(2));
}

#[test]
fn overflow_exits_three() {
    let tmp = tempfile::tempdir().unwrap();
    let o = aggdiff(&[
        "steady", "--d", "1", "--epsilon", "0.01", "--kernel.variant", "power", "--kernel.beta", "2",
        "--steady.radius", "8", "--grid.cells", "256", "--output", &out_dir(tmp.path()),
    ]);
    assert_eq!(o.status.code(), Some(3), "{}", stderr(&o));
    assert!(stderr(&o).starts_with("3,"));
}

#[test]
fn scan_output_is_reproducible() {
    let tmp = tempfile::tempdir().unwrap();
    let run = |name: &str| {
        let out = tmp.path().join(name);
        let o = aggdiff(&[
            "scan", "--d", "2", "--epsilon", "1", "--kernel.variant", "power", "--kernel.beta", "-0.5",
            "--entropy.variant", "power", "--entropy.m", "1.2", "--scan.points", "11", "--output", out.to_str().unwrap(),
        ]);
        assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
        fs::read(out.join("scan.csv")).unwrap()
    };
    let a = run("a");
    assert_eq!(a, run("b"));
    let text = String::from_utf8(a).unwrap();
    let lines: Vec<&str> = text.lines().collect();
    assert_eq!(lines[0], "r,energy,derivative");
    assert_eq!(lines.len(), 13);
    assert!(lines[12].starts_with("# "));
    for row in &lines[1..12] {
        let fields: Vec<f64> = row.split(',').map(|f| f.parse().unwrap()).collect();
        assert_eq!(fields.len(), 3);
        assert!(fields.iter().all(|v| v.is_finite()));
    }
}

#[test]
fn particle_runs_are_seeded() {
    let tmp = tempfile::tempdir().unwrap();
    let run = |name: &str, seed: &str| {
        let out = tmp.path().join(name);
        let o = aggdiff(&[
            "particles", "--d", "2", "--epsilon", "0.5", "--kernel.variant", "power", "--kernel.beta", "2",
            "--particles.n", "20", "--particles.horizon", "0.5", "--particles.stride", "10", "--seed", seed,
            "--output", out.to_str().unwrap(),
        ]);
        assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
        fs::read(out.join("particles_snapshots.csv")).unwrap()
    };
    let a = run("a", "3");
    assert_eq!(a, run("b", "3"));
    assert_ne!(a, run("c", "4"));
    let text = String::from_utf8(a).unwrap();
    assert_eq!(text.lines().next(), Some("t,particle_id,x_1,x_2"));
}

#[test]
fn counterexample_is_certified() {
    let tmp = tempfile::tempdir().unwrap();
    let o = aggdiff(&[
        "counterexample", "--d", "2", "--epsilon", "1", "--kernel.variant", "power", "--kernel.beta", "1",
        "--entropy.variant", "power", "--entropy.m", "0.5", "--dyadic.gamma", "1.5", "--output", &out_dir(tmp.path()),
    ]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let stdout = String::from_utf8_lossy(&o.stdout);
    assert!(stdout.contains("certified at K = 32"), "{stdout}");
    let csv = fs::read_to_string(tmp.path().join("counterexample.csv")).unwrap();
    assert!(csv.starts_with("K,moment_sum,entropy_sum,energy\n8,"));
}

#[test]
fn properties_all_pass() {
    let tmp = tempfile::tempdir().unwrap();
    let o = aggdiff(&["properties", "--d", "1", "--output", &out_dir(tmp.path())]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let report = fs::read_to_string(tmp.path().join("properties.txt")).unwrap();
    assert!(report.lines().filter(|l| l.starts_with("PASS")).count() >= 10, "{report}");
    assert!(!report.contains("FAIL"));
}
