use std::path::Path;
use std::process::{Command, Output};

use monitored_fermions::io::{read_manifest, verify_manifest};
use monitored_fermions::theory::cumulant_scaling_c2;

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_monitored-fermions"))
}

fn run(args: &[&str], workers: Option<&str>) -> Output {
    let mut cmd = bin();
    cmd.args(args);
    if let Some(w) = workers {
        cmd.env("WORKERS", w);
    }
    cmd.output().unwrap()
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

fn value(text: &str, key: &str) -> f64 {
    text.lines()
        .find_map(|l| l.strip_prefix(&format!("{key}=")))
        .unwrap_or_else(|| panic!("no {key} in {text}"))
        .trim()
        .parse()
        .unwrap()
}

#[test]
fn scales_prints_derived_scales() {
    let o = run(&["scales", "--gamma", "0.1", "--J", "1", "--n", "0.5"], None);
    assert!(o.status.success());
    let s = stdout(&o);
    assert!((value(&s, "tau0") - 5.0).abs() < 1e-12);
    assert!((value(&s, "l0") - 7.0711).abs() < 1e-4);
    assert!((value(&s, "D") - 10.0).abs() < 1e-12);
    assert!((value(&s, "g0") - 3.5355).abs() < 1e-4);
}

#[test]
fn theory_point_matches_library() {
    let o = run(&["theory", "--curve", "c2", "--y", "0.1"], None);
    assert!(o.status.success());
    let v: f64 = stdout(&o).trim().parse().unwrap();
    assert_eq!(v, cumulant_scaling_c2(0.1).unwrap().value);
    // small-y asymptote c2 ~ y, approached slowly
    assert!((v / 0.1 - 1.0).abs() < 0.1);
}

fn simulate(dir: &Path, workers: &str) -> Output {
    run(
        &[
            "simulate", "--gamma", "0.5", "--L", "24", "--seed", "9", "--trajectories", "5", "--samples", "3",
            "--profile", "--out", dir.to_str().unwrap(),
        ],
        Some(workers),
    )
}

#[test]
fn simulate_is_reproducible_across_runs_and_workers() {
    let tmp = tempfile::tempdir().unwrap();
    let (a, b) = (tmp.path().join("a"), tmp.path().join("b"));
    let o = simulate(&a, "1");
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    assert!(simulate(&b, "4").status.success());
    let (ma, mb) = (read_manifest(&a).unwrap(), read_manifest(&b).unwrap());
    assert_eq!(ma.files, mb.files);
    for name in ["cq.csv", "cumulant.csv", "entropy.csv", "profile.csv"] {
        assert!(ma.files.contains_key(name), "{name} missing");
        assert_eq!(std::fs::read(a.join(name)).unwrap(), std::fs::read(b.join(name)).unwrap());
    }
    assert!(verify_manifest(&a).unwrap().is_empty());
    let cq = std::fs::read_to_string(a.join("cq.csv")).unwrap();
    assert_eq!(cq.lines().next().unwrap(), "q_index,q,q_tilde,C_mean,C_stderr,n_samples");
    assert!(!cq.contains('\r'));

    // compare consumes the run
    let c = tmp.path().join("c");
    let o = run(&["compare", "--sim", a.to_str().unwrap(), "--out", c.to_str().unwrap()], None);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    assert!(c.join("collapse.csv").exists());
}

#[test]
fn invalid_input_exits_nonzero_without_output() {
    let tmp = tempfile::tempdir().unwrap();
    let out = tmp.path().join("out");
    let out = out.to_str().unwrap();
    for args in [
        vec!["scales"],
        vec!["scales", "--gamma", "-1"],
        vec!["simulate", "--gamma", "0.5", "--L", "1", "--out", out],
        vec!["simulate", "--gamma", "0.5", "--trajectories", "many", "--out", out],
        vec!["theory", "--curve", "c2", "--y", "-3", "--out", out],
        vec!["no-such-command"],
    ] {
        let o = run(&args, None);
        assert!(!o.status.success(), "{args:?} succeeded");
        assert!(!o.stderr.is_empty());
    }
    assert!(!Path::new(out).exists() || std::fs::read_dir(out).unwrap().count() == 0);
}

#[test]
fn failed_compare_leaves_no_partial_files() {
    let tmp = tempfile::tempdir().unwrap();
    let sim = tmp.path().join("sim");
    assert!(simulate(&sim, "1").status.success());
    // corrupt the table so the join fails after the output directory exists
    std::fs::write(sim.join("cq.csv"), "q_index,q\n1,not-a-number\n").unwrap();
    let out = tmp.path().join("cmp");
    std::fs::create_dir_all(&out).unwrap();
    let o = run(&["compare", "--sim", sim.to_str().unwrap(), "--out", out.to_str().unwrap()], None);
    assert!(!o.status.success());
    assert!(String::from_utf8_lossy(&o.stderr).starts_with("error:"));
    assert_eq!(std::fs::read_dir(&out).unwrap().count(), 0);
}

#[test]
fn corrupted_output_fails_verification() {
    let tmp = tempfile::tempdir().unwrap();
    let dir = tmp.path().join("run");
    assert!(simulate(&dir, "1").status.success());
    let path = dir.join("cumulant.csv");
    let mut bytes = std::fs::read(&path).unwrap();
    let last = bytes.len() - 2;
    bytes[last] ^= 1;
    std::fs::write(&path, bytes).unwrap();
    assert_eq!(verify_manifest(&dir).unwrap(), vec!["cumulant.csv".to_string()]);
}
