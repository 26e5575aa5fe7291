use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

const BIN: &str = env!("CARGO_BIN_EXE_mestim");

fn configs() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("configs")
}

fn mestim(root: &Path, args: &[&str]) -> Output {
    Command::new(BIN).args(args).env("MESTIM_RUN_ROOT", root).output().expect("binary runs")
}

fn write_config(dir: &Path, text: &str) -> PathBuf {
    let path = dir.join("config.toml");
    fs::write(&path, text).unwrap();
    path
}

/// The run directory is the first line of stdout.
fn run_dir(out: &Output) -> PathBuf {
    PathBuf::from(String::from_utf8_lossy(&out.stdout).lines().next().expect("run directory printed"))
}

const SMALL_COMPARE: &str = r#"
[criterion]
kind = "cube_root"

[grid]
lo = 0.0
hi = 1.0
points = 11

[data]
n_ladder = [50, 200]
law = { kind = "uniform", lo = -1.5, hi = 2.5 }

[run]
replications = 400
seed = 5
model = "quadrature"
"#;

#[test]
fn reruns_are_byte_identical() {
    let a = tempfile::tempdir().unwrap();
    let b = tempfile::tempdir().unwrap();
    let cfg = write_config(a.path(), SMALL_COMPARE);
    let cfg = cfg.to_str().unwrap();
    let ra = mestim(a.path(), &["compare", "-c", cfg]);
    let rb = mestim(b.path(), &["compare", "-c", cfg]);
    assert!(ra.status.success() && rb.status.success());
    let (da, db) = (run_dir(&ra), run_dir(&rb));
    assert_eq!(da.file_name(), db.file_name());
    for name in ["compare.csv", "summary.json"] {
        assert_eq!(fs::read(da.join(name)).unwrap(), fs::read(db.join(name)).unwrap(), "{name}");
    }
}

#[test]
fn outputs_carry_the_config_hash_and_seed() {
    let root = tempfile::tempdir().unwrap();
    let cfg = write_config(root.path(), SMALL_COMPARE);
    let out = mestim(root.path(), &["compare", "-c", cfg.to_str().unwrap(), "--seed", "99"]);
    assert!(out.status.success());
    let dir = run_dir(&out);
    assert!(dir.starts_with(root.path()), "MESTIM_RUN_ROOT honoured");
    let csv = fs::read_to_string(dir.join("compare.csv")).unwrap();
    let first = csv.lines().next().unwrap();
    assert!(first.starts_with("# config_hash=") && first.ends_with("seed=99"), "{first}");
    let hash = first.trim_start_matches("# config_hash=").split(',').next().unwrap();
    assert!(dir.file_name().unwrap().to_str().unwrap().ends_with(hash));

    let json: serde_json::Value = serde_json::from_str(&fs::read_to_string(dir.join("summary.json")).unwrap()).unwrap();
    assert_eq!(json["seed"], 99);
    assert_eq!(json["config_hash"], hash);
    assert_eq!(json["command"], "compare");
}

#[test]
fn seed_and_overrides_change_the_hash() {
    let root = tempfile::tempdir().unwrap();
    let cfg = write_config(root.path(), SMALL_COMPARE);
    let cfg = cfg.to_str().unwrap();
    let base = run_dir(&mestim(root.path(), &["compare", "-c", cfg]));
    let seeded = run_dir(&mestim(root.path(), &["compare", "-c", cfg, "--seed", "6"]));
    let overridden = run_dir(&mestim(root.path(), &["compare", "-c", cfg, "--set", "run.replications=300"]));
    assert_ne!(base, seeded);
    assert_ne!(base, overridden);
    let csv = fs::read_to_string(overridden.join("compare.csv")).unwrap();
    assert!(csv.lines().nth(2).unwrap().starts_with("50,300,"));
}

#[test]
fn single_sample_size_gives_one_row() {
    let root = tempfile::tempdir().unwrap();
    let cfg = write_config(root.path(), &SMALL_COMPARE.replace("n_ladder = [50, 200]", "n = 100"));
    let out = mestim(root.path(), &["compare", "-c", cfg.to_str().unwrap()]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let csv = fs::read_to_string(run_dir(&out).join("compare.csv")).unwrap();
    assert_eq!(csv.lines().count(), 3);
}

#[test]
fn one_dataset_bootstrap_has_no_spread_column() {
    let root = tempfile::tempdir().unwrap();
    let cfg = configs().join("lad_bootstrap.toml");
    let out = mestim(
        root.path(),
        &["bootstrap", "-c", cfg.to_str().unwrap(), "--set", "bootstrap.datasets=1", "--set", "run.replications=300"],
    );
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let csv = fs::read_to_string(run_dir(&out).join("bootstrap.csv")).unwrap();
    let header = csv.lines().nth(1).unwrap();
    assert!(header.contains("mean_TV") && !header.contains("sd_TV"), "{header}");
}

#[test]
fn zero_variance_table_gives_zero_distance() {
    let root = tempfile::tempdir().unwrap();
    let cfg = write_config(
        root.path(),
        r#"
[criterion]
kind = "tabulated"
table = [[0.1, 0.1, 0.1], [0.4, 0.4, 0.4], [0.2, 0.2, 0.2]]

[grid]
lo = 0.0
hi = 1.0
points = 3

[data]
n = 20
law = { kind = "table_columns" }

[run]
replications = 200
model = "quadrature"
"#,
    );
    let out = mestim(root.path(), &["compare", "-c", cfg.to_str().unwrap()]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let csv = fs::read_to_string(run_dir(&out).join("compare.csv")).unwrap();
    let row: Vec<&str> = csv.lines().nth(2).unwrap().split(',').collect();
    assert_eq!(row[2], "0");
}

#[test]
fn config_errors_exit_with_one() {
    let root = tempfile::tempdir().unwrap();
    let unknown = write_config(root.path(), "[run]\nreplications = 10\nbogus = 1\n");
    assert_eq!(mestim(root.path(), &["compare", "-c", unknown.to_str().unwrap()]).status.code(), Some(1));
    assert_eq!(mestim(root.path(), &["compare", "-c", "/nonexistent/config.toml"]).status.code(), Some(1));
    assert_eq!(mestim(root.path(), &["compare"]).status.code(), Some(1), "compare needs a criterion");
    assert_eq!(mestim(root.path(), &["frobnicate"]).status.code(), Some(1));
    let bad_override = configs().join("rates.toml");
    assert_eq!(
        mestim(root.path(), &["rates", "-c", bad_override.to_str().unwrap(), "--set", "rates.alpha=3.0"]).status.code(),
        Some(1)
    );
}

#[test]
fn failed_assertions_exit_with_two() {
    let root = tempfile::tempdir().unwrap();
    let cfg = configs().join("toeplitz_coherence.toml");
    let cfg = cfg.to_str().unwrap();
    let pass = mestim(root.path(), &["coherence", "-c", cfg, "--assert"]);
    assert_eq!(pass.status.code(), Some(0), "{}", String::from_utf8_lossy(&pass.stdout));
    let fail = mestim(root.path(), &["coherence", "-c", cfg, "--set", "coherence.sigma_lower_sq=5.0", "--assert"]);
    assert_eq!(fail.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&fail.stdout).contains("FAIL"));
    // Without --assert a failed check is still a successful run.
    let report = mestim(root.path(), &["coherence", "-c", cfg, "--set", "coherence.sigma_lower_sq=5.0"]);
    assert_eq!(report.status.code(), Some(0));
}

#[test]
fn run_root_flag_beats_the_environment() {
    let env_root = tempfile::tempdir().unwrap();
    let flag_root = tempfile::tempdir().unwrap();
    let cfg = configs().join("rates.toml");
    let out = mestim(env_root.path(), &["rates", "-c", cfg.to_str().unwrap(), "--run-root", flag_root.path().to_str().unwrap()]);
    assert!(out.status.success());
    assert!(run_dir(&out).starts_with(flag_root.path()));
    assert!(run_dir(&out).join("rates.csv").exists());
}
