//! The `dynamo` binary: exit codes, output layout, determinism and resume.

use std::fs;
use std::path::Path;
use std::process::{Command, Output};

const SMALL: &[&str] = &[
    "preset=solar_interface",
    "resolution.max_degree=4",
    "resolution.radial_degree=6",
    "resolution.n_theta=10",
    "resolution.n_phi=10",
    "time.tau=2.5e-4",
    "output.energy_every=5",
    "output.butterfly_every=5",
    "output.slice_every=10",
    "output.snapshot_every=10",
    "output.slice_resolution=[12, 12]",
    "output.butterfly_points=16",
];

fn dynamo(cwd: &Path, args: &[&str], sets: &[&str]) -> Output {
    let mut cmd = Command::new(env!("CARGO_BIN_EXE_dynamo"));
    cmd.current_dir(cwd).env("RUST_LOG", "warn").args(args);
    for s in sets {
        cmd.arg("--set").arg(s);
    }
    cmd.output().unwrap()
}

fn small(steps: u64) -> Vec<String> {
    let mut v: Vec<String> = SMALL.iter().map(|s| s.to_string()).collect();
    v.push(format!("time.steps={steps}"));
    v
}

fn refs(v: &[String]) -> Vec<&str> {
    v.iter().map(String::as_str).collect()
}

fn listing(dir: &Path) -> Vec<String> {
    let mut names: Vec<String> = fs::read_dir(dir)
        .unwrap()
        .map(|e| e.unwrap().file_name().into_string().unwrap())
        .collect();
    names.sort();
    names
}

#[test]
fn dry_run_writes_only_the_manifest() {
    let tmp = tempfile::tempdir().unwrap();
    let out = dynamo(tmp.path(), &["--dry-run", "-o", "run"], &["preset=solar_interface"]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    assert_eq!(listing(&tmp.path().join("run")), vec!["manifest.toml"]);
    let manifest = fs::read_to_string(tmp.path().join("run/manifest.toml")).unwrap();
    assert!(manifest.contains("radii = [1.5, 2.5, 7.5]"));
    assert!(manifest.contains("beta = [1.0, 1.0, 150.0]"));
}

#[test]
fn invalid_flag_is_a_usage_error() {
    let tmp = tempfile::tempdir().unwrap();
    let out = dynamo(tmp.path(), &["--no-such-flag"], &[]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("Usage"));
}

#[test]
fn configuration_errors_exit_with_config_code() {
    let tmp = tempfile::tempdir().unwrap();
    fs::write(tmp.path().join("empty.toml"), "").unwrap();
    assert_eq!(dynamo(tmp.path(), &["empty.toml"], &[]).status.code(), Some(3));
    let neg = dynamo(tmp.path(), &["--dry-run"], &["preset=solar_interface", "time.tau=-1"]);
    assert_eq!(neg.status.code(), Some(3));
    assert!(String::from_utf8_lossy(&neg.stderr).contains("time.tau"));
    fs::write(tmp.path().join("bad.toml"), "preset = \"solar_interface\"\n[physics\n").unwrap();
    let bad = dynamo(tmp.path(), &["bad.toml"], &[]);
    assert_eq!(bad.status.code(), Some(3));
    assert!(String::from_utf8_lossy(&bad.stderr).contains("line 2"));
}

#[test]
fn missing_files_exit_with_io_code() {
    let tmp = tempfile::tempdir().unwrap();
    assert_eq!(dynamo(tmp.path(), &["nope.toml"], &[]).status.code(), Some(4));
    let sets = small(10);
    let out = dynamo(tmp.path(), &["-o", "run", "--resume", "missing.bin"], &refs(&sets));
    assert_eq!(out.status.code(), Some(4));
}

#[test]
fn corrupted_snapshot_exits_with_io_code() {
    let tmp = tempfile::tempdir().unwrap();
    let sets = small(10);
    assert_eq!(dynamo(tmp.path(), &["-o", "run"], &refs(&sets)).status.code(), Some(0));
    let snap = tmp.path().join("run/snapshot_10.bin");
    let mut bytes = fs::read(&snap).unwrap();
    let k = bytes.len() / 3;
    bytes[k] ^= 1;
    fs::write(&snap, bytes).unwrap();
    let sets = small(20);
    let out = dynamo(tmp.path(), &["-o", "run", "--resume", "run/snapshot_10.bin"], &refs(&sets));
    assert_eq!(out.status.code(), Some(4));
}

#[test]
fn divergence_exits_with_divergence_code() {
    let tmp = tempfile::tempdir().unwrap();
    let mut sets = small(10);
    sets.push("limits.divergence_threshold=1e-6".into());
    assert_eq!(dynamo(tmp.path(), &["-o", "run"], &refs(&sets)).status.code(), Some(5));
}

#[test]
fn run_writes_the_documented_layout() {
    let tmp = tempfile::tempdir().unwrap();
    let sets = small(20);
    let out = dynamo(tmp.path(), &["-o", "run"], &refs(&sets));
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let dir = tmp.path().join("run");
    assert_eq!(
        listing(&dir),
        vec![
            "butterfly.tsv",
            "energy.tsv",
            "manifest.toml",
            "slice_0.tsv",
            "slice_10.tsv",
            "slice_20.tsv",
            "snapshot_0.bin",
            "snapshot_10.bin",
            "snapshot_20.bin",
        ]
    );
    let energy = fs::read_to_string(dir.join("energy.tsv")).unwrap();
    let lines: Vec<&str> = energy.lines().collect();
    assert_eq!(lines[0], "step\ttime\tenergy\tdiv_residual\tmax_b");
    let steps: Vec<&str> = lines[1..].iter().map(|l| l.split('\t').next().unwrap()).collect();
    assert_eq!(steps, vec!["0", "5", "10", "15", "20"]);
    let butterfly = fs::read_to_string(dir.join("butterfly.tsv")).unwrap();
    let first = butterfly.lines().next().unwrap();
    assert_eq!(first.split('\t').count(), 2 + 16);
    let slice = fs::read_to_string(dir.join("slice_10.tsv")).unwrap();
    assert_eq!(slice.lines().count(), 2 + 12 * 12);
}

#[test]
fn identical_runs_give_identical_bytes() {
    let (a, b) = (tempfile::tempdir().unwrap(), tempfile::tempdir().unwrap());
    let sets = small(10);
    for t in [&a, &b] {
        assert_eq!(dynamo(t.path(), &["-o", "run"], &refs(&sets)).status.code(), Some(0));
    }
    let names = listing(&a.path().join("run"));
    assert_eq!(names, listing(&b.path().join("run")));
    for n in names {
        let x = fs::read(a.path().join("run").join(&n)).unwrap();
        let y = fs::read(b.path().join("run").join(&n)).unwrap();
        assert!(x == y, "{n} differs");
    }
}

#[test]
fn resumed_run_matches_single_run() {
    let (single, split) = (tempfile::tempdir().unwrap(), tempfile::tempdir().unwrap());
    let full = small(20);
    assert_eq!(dynamo(single.path(), &["-o", "run"], &refs(&full)).status.code(), Some(0));
    let half = small(10);
    assert_eq!(dynamo(split.path(), &["-o", "run"], &refs(&half)).status.code(), Some(0));
    let out = dynamo(split.path(), &["-o", "run", "--resume", "run/snapshot_10.bin"], &refs(&full));
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    for n in ["energy.tsv", "butterfly.tsv", "slice_20.tsv", "snapshot_20.bin", "manifest.toml"] {
        let x = fs::read(single.path().join("run").join(n)).unwrap();
        let y = fs::read(split.path().join("run").join(n)).unwrap();
        assert!(x == y, "{n} differs");
    }
}

#[test]
fn snapshot_from_a_different_resolution_is_rejected() {
    let tmp = tempfile::tempdir().unwrap();
    let sets = small(10);
    assert_eq!(dynamo(tmp.path(), &["-o", "run"], &refs(&sets)).status.code(), Some(0));
    let mut other = small(20);
    other.push("resolution.radial_degree=7".into());
    let out = dynamo(tmp.path(), &["-o", "other", "--resume", "run/snapshot_10.bin"], &refs(&other));
    assert_eq!(out.status.code(), Some(3));
}
