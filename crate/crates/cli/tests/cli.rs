//! End-to-end harness tests: determinism of report bodies, error records,
//! and the binary surface.

use std::path::Path;
use std::process::Command;

use fracfill_cli::{run, Config, ExperimentKind};

const BASE_CONFIG: &str = r#"
[experiment]
seed = 42

[space]
fixture = "cycle(8)"

[params]
alpha = 2.0
tau = 1.5
depth = 3
p = 2.0
theta = 0.5

[solver]
tolerance = 1e-10
max_iterations = 2000

[stability]
scales = [1e-2, 1e-1, 1e0]
base = "zero"

[sphericalize]
y_min = 0.5
y_max = 100.0
levels = 60
a = 0.0
beta = 2.0
neighbor_radius = 0.5
radii = [0.25]
"#;

fn run_into(kind: ExperimentKind, dir: &Path, seed: Option<u64>) -> Result<(), String> {
    let config: Config = toml::from_str(BASE_CONFIG).unwrap();
    run(kind, &config, BASE_CONFIG, dir, seed)
}

fn read(dir: &Path, name: &str) -> String {
    std::fs::read_to_string(dir.join(name)).unwrap_or_else(|_| panic!("missing {name}"))
}

#[test]
fn reports_are_byte_identical_across_reruns() {
    let kinds = [
        (ExperimentKind::Build, vec!["report.txt", "graph.txt"]),
        (ExperimentKind::SolveNeumann, vec!["report.txt", "solution.csv", "flux.csv"]),
        (ExperimentKind::SolveFractional, vec!["report.txt", "solution.csv", "pairs.csv"]),
        (ExperimentKind::Verify, vec!["report.txt"]),
        (ExperimentKind::Stability, vec!["report.txt", "stability.csv"]),
        (ExperimentKind::Sphericalize, vec!["report.txt", "levels.csv", "graph.txt"]),
    ];
    for (kind, files) in kinds {
        let d1 = tempfile::tempdir().unwrap();
        let d2 = tempfile::tempdir().unwrap();
        run_into(kind, d1.path(), None).unwrap();
        run_into(kind, d2.path(), None).unwrap();
        for f in files {
            assert_eq!(
                read(d1.path(), f),
                read(d2.path(), f),
                "{} differs between reruns for {}",
                f,
                kind.as_str()
            );
        }
    }
}

#[test]
fn seed_override_changes_random_data() {
    let d1 = tempfile::tempdir().unwrap();
    let d2 = tempfile::tempdir().unwrap();
    run_into(ExperimentKind::SolveFractional, d1.path(), Some(1)).unwrap();
    run_into(ExperimentKind::SolveFractional, d2.path(), Some(2)).unwrap();
    assert_ne!(read(d1.path(), "solution.csv"), read(d2.path(), "solution.csv"));
}

#[test]
fn verify_two_point_fixture_passes() {
    let config_text = BASE_CONFIG.replace("cycle(8)", "two_point");
    let config: Config = toml::from_str(&config_text).unwrap();
    let dir = tempfile::tempdir().unwrap();
    run(ExperimentKind::Verify, &config, &config_text, dir.path(), None).unwrap();
    let report = read(dir.path(), "report.txt");
    assert!(report.contains("checks_failed: 0"));
    assert!(!report.contains("FAIL"));
}

#[test]
fn incompatible_data_leaves_error_record() {
    let config_text = format!(
        "{BASE_CONFIG}\n[data]\nsource = \"values\"\nvalues = [1.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 1.0]\n"
    );
    let config: Config = toml::from_str(&config_text).unwrap();
    let dir = tempfile::tempdir().unwrap();
    let err = run(
        ExperimentKind::SolveNeumann,
        &config,
        &config_text,
        dir.path(),
        None,
    )
    .unwrap_err();
    assert!(err.contains("incompatible"));
    let record = read(dir.path(), "error.txt");
    assert!(record.contains("experiment: solve-neumann"));
    assert!(record.contains("incompatible"));
}

#[test]
fn stability_rows_monotone_in_data_distance() {
    let dir = tempfile::tempdir().unwrap();
    run_into(ExperimentKind::Stability, dir.path(), None).unwrap();
    let csv = read(dir.path(), "stability.csv");
    let distances: Vec<f64> = csv
        .lines()
        .skip(1)
        .map(|l| l.split(',').nth(1).unwrap().parse().unwrap())
        .collect();
    assert_eq!(distances.len(), 3);
    assert!(distances.windows(2).all(|w| w[0] < w[1]));
}

#[test]
fn manifest_records_seed_and_hash() {
    let dir = tempfile::tempdir().unwrap();
    run_into(ExperimentKind::Build, dir.path(), Some(99)).unwrap();
    let manifest = read(dir.path(), "manifest.txt");
    assert!(manifest.contains("seed: 99"));
    assert!(manifest.contains("fixture_hash: "));
    assert!(manifest.contains("rng: chacha8 v1"));
}

#[test]
fn binary_runs_verify() {
    let dir = tempfile::tempdir().unwrap();
    let config_path = dir.path().join("cfg.toml");
    std::fs::write(&config_path, BASE_CONFIG).unwrap();
    let out = dir.path().join("out");
    let status = Command::new(env!("CARGO_BIN_EXE_fracfill"))
        .args(["verify", "--config"])
        .arg(&config_path)
        .arg("--out")
        .arg(&out)
        .status()
        .expect("binary should run");
    assert!(status.success());
    assert!(out.join("report.txt").exists());
}

#[test]
fn binary_fails_on_unknown_fixture() {
    let dir = tempfile::tempdir().unwrap();
    let config_path = dir.path().join("cfg.toml");
    std::fs::write(&config_path, BASE_CONFIG.replace("cycle(8)", "nope(1)")).unwrap();
    let status = Command::new(env!("CARGO_BIN_EXE_fracfill"))
        .args(["build", "--config"])
        .arg(&config_path)
        .arg("--out")
        .arg(dir.path().join("out"))
        .status()
        .expect("binary should run");
    assert!(!status.success());
}
