use std::path::Path;
use std::process::{Command, Output};

use rfi_cli::config::load_config;
use rfi_cli::runner::{run_experiment, CHART_FILE, DELTA_FILE, MANIFEST_FILE, MODEL_FILE, RESULTS_FILE};
use rfi_cli::JobSpec;

fn rfi(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_rfi")).args(args).output().unwrap()
}

fn lines(path: &Path) -> Vec<String> {
    std::fs::read_to_string(path).unwrap().lines().map(str::to_string).collect()
}

const HEADER: &str = "feature,G,estimate,se,t,p,ci_lower,ci_upper,replications,seed";

#[test]
fn bundled_runs_write_one_row_per_job() {
    for (name, rows) in [("experiment_a", 16), ("experiment_b", 6)] {
        let dir = tempfile::tempdir().unwrap();
        let mut cfg = load_config(name).unwrap().0;
        cfg.output_dir = dir.path().to_path_buf();
        cfg.replications = 5;
        let out = run_experiment(&cfg, Path::new("."), 2).unwrap();
        let csv = lines(&dir.path().join(RESULTS_FILE));
        assert_eq!(csv[0], HEADER);
        assert_eq!(csv.len(), rows + 1, "{name}");
        assert_eq!(out.records.len(), rows);
        for f in [CHART_FILE, MODEL_FILE, MANIFEST_FILE] {
            assert!(dir.path().join(f).exists(), "{f}");
        }
        assert!(!dir.path().join(DELTA_FILE).exists());
        let manifest: serde_json::Value =
            serde_json::from_str(&std::fs::read_to_string(dir.path().join(MANIFEST_FILE)).unwrap()).unwrap();
        assert_eq!(manifest["config_hash"], cfg.hash());
        assert_eq!(manifest["seed"], 0);
        assert!(manifest["wall_time_seconds"].as_f64().unwrap() > 0.0);
    }
}

#[test]
fn empty_job_list_writes_header_only() {
    let dir = tempfile::tempdir().unwrap();
    let mut cfg = load_config("experiment_b").unwrap().0;
    cfg.output_dir = dir.path().to_path_buf();
    cfg.jobs.clear();
    run_experiment(&cfg, Path::new("."), 1).unwrap();
    assert_eq!(lines(&dir.path().join(RESULTS_FILE)), vec![HEADER.to_string()]);
}

#[test]
fn extension_jobs_write_delta_table() {
    let dir = tempfile::tempdir().unwrap();
    let mut cfg = load_config("experiment_b").unwrap().0;
    cfg.output_dir = dir.path().to_path_buf();
    cfg.jobs = vec![JobSpec {
        feature: "X2".into(),
        given: vec![],
        extend: Some(vec!["C".into()]),
    }];
    let out = run_experiment(&cfg, Path::new("."), 1).unwrap();
    let delta = lines(&dir.path().join(DELTA_FILE));
    assert_eq!(delta.len(), 2);
    assert!(delta[1].starts_with("X2,,C,"));
    let d = &out.deltas[0];
    assert!((d.delta - (d.estimate_given - d.estimate_extended)).abs() < 1e-15);
    assert!(d.delta > 0.0);
}

#[test]
fn validate_exit_codes() {
    let ok = rfi(&["validate", "experiment_a"]);
    assert_eq!(ok.status.code(), Some(0));

    let dir = tempfile::tempdir().unwrap();
    let bad = dir.path().join("bad.toml");
    let text = load_config("experiment_b").unwrap().0.to_toml_string().replacen("\"C\"", "\"Y\"", 1);
    std::fs::write(&bad, text).unwrap();
    let out = rfi(&["validate", bad.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(2));
    let err = String::from_utf8_lossy(&out.stderr);
    assert!(err.contains("jobs[1]") && err.contains("target `Y`"), "{err}");

    let missing = rfi(&["validate", "/nonexistent/config.toml"]);
    assert_eq!(missing.status.code(), Some(2));
}

#[test]
fn simulate_fit_and_run_from_csv() {
    let dir = tempfile::tempdir().unwrap();
    let csv = dir.path().join("data.csv");
    let out = rfi(&["simulate", "experiment_b", "--n", "5000", "--seed", "3", "--out", csv.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    assert_eq!(lines(&csv)[0], "X1,X2,X3,C,Y");
    assert_eq!(lines(&csv).len(), 5001);

    let model = dir.path().join("model.toml");
    let out = rfi(&["fit", csv.to_str().unwrap(), "--target", "Y", "--features", "X1,X2,X3", "--out", model.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let m = rfi_core::LinearModel::load(&model).unwrap();
    assert_eq!(m.feature_order, ["X1", "X2", "X3"]);
    assert!((m.coefficient("X1").unwrap() - 1.0).abs() < 0.1);

    let config = dir.path().join("run.toml");
    std::fs::write(
        &config,
        r#"
name = "from-csv"
target = "Y"
features = ["X1", "X2", "X3"]
replications = 4
output_dir = "out"
jobs = [{ feature = "X3", given = ["C"] }, { feature = "X1" }]

[data]
source = "csv"
path = "data.csv"

[model]
kind = "file"
path = "model.toml"
"#,
    )
    .unwrap();
    let out = rfi(&["run", config.to_str().unwrap(), "--jobs", "2"]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let results = lines(&dir.path().join("out").join(RESULTS_FILE));
    assert_eq!(results.len(), 3);
    assert!(results[1].starts_with("X3,C,") && results[1].ends_with(",4,0"));
}

#[test]
fn run_overrides_seed() {
    let dir = tempfile::tempdir().unwrap();
    let out_dir = dir.path().join("b");
    let out = rfi(&["run", "experiment_b", "--n", "2000", "--replications", "3", "--seed", "9", "--out", out_dir.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let rows = lines(&out_dir.join(RESULTS_FILE));
    assert_eq!(rows.len(), 7);
    assert!(rows[1..].iter().all(|r| r.ends_with(",3,9")));
}

#[test]
fn runtime_failure_exits_three() {
    // a constant, fully collinear feature makes the OLS fit fail at run time
    let dir = tempfile::tempdir().unwrap();
    std::fs::write(dir.path().join("d.csv"), "a,b,y\n1,0,1\n1,1,2\n1,2,2\n1,3,4\n1,4,5\n").unwrap();
    let config = dir.path().join("c.toml");
    std::fs::write(
        &config,
        "name = 'x'\ntarget = 'y'\nfeatures = ['a', 'b']\ntest_fraction = 0.4\njobs = [{ feature = 'b' }]\n[data]\nsource = 'csv'\npath = 'd.csv'\n",
    )
    .unwrap();
    let out = rfi(&["run", config.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(3), "{}", String::from_utf8_lossy(&out.stderr));
}
