use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use skewstable::golden::GoldenStore;
use skewstable_cli::experiments::{correlation, extrapolate_to_zero, gaps_decrease};
use skewstable_cli::manifest::RunManifest;
use skewstable_cli::ExperimentConfig;

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_skewstable"))
}

fn store_path() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../core/golden/values.json")
}

fn write_config(dir: &Path, name: &str, json: &str) -> PathBuf {
    let p = dir.join(name);
    fs::write(&p, json).unwrap();
    p
}

fn run_config(config: &Path, out: &Path, workers: usize) -> Output {
    bin()
        .args(["run", config.to_str().unwrap(), "--workers", &workers.to_string(), "--out", out.to_str().unwrap()])
        .output()
        .unwrap()
}

fn csv_files(dir: &Path) -> Vec<(String, Vec<u8>)> {
    let mut v: Vec<_> = fs::read_dir(dir)
        .unwrap()
        .flatten()
        .filter(|e| e.path().extension().is_some_and(|x| x == "csv"))
        .map(|e| (e.file_name().to_string_lossy().into_owned(), fs::read(e.path()).unwrap()))
        .collect();
    v.sort();
    v
}

#[test]
fn config_parsing() {
    let c = ExperimentConfig::parse(r#"{"kind":"constants","master_seed":7}"#).unwrap();
    assert_eq!(c.params.alpha, 1.5);
    assert!(!c.gates);
    assert!(ExperimentConfig::parse(r#"{"kind":"constants","master_seed":7,"bogus":1}"#).is_err());
    assert!(ExperimentConfig::parse(r#"{"kind":"constants","master_seed":7,"params":{"alpah":1.2}}"#).is_err());
    assert!(ExperimentConfig::parse(r#"{"kind":"nope","master_seed":7}"#).is_err());
    let d = ExperimentConfig::parse(r#"{"kind":"constants","master_seed":8}"#).unwrap();
    assert_eq!(c.hash(), c.clone().hash());
    assert_ne!(c.hash(), d.hash());
    assert_eq!(ExperimentConfig::parse(&c.to_json()).unwrap(), c);
}

#[test]
fn regime_a_precondition_is_a_validation_error() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write_config(
        tmp.path(),
        "bad.json",
        r#"{"kind":"resolvent-converge","master_seed":1,"params":{"beta":0.75,"m_rule":"a"}}"#,
    );
    let out = run_config(&cfg, &tmp.path().join("run"), 1);
    assert_eq!(out.status.code(), Some(2));
    let err = String::from_utf8_lossy(&out.stderr);
    assert!(err.contains("regime a requires a jump tail index beta < alpha - 1"), "{err}");
    assert!(!tmp.path().join("run").exists());
}

#[test]
fn unreadable_or_malformed_config_exits_2() {
    let tmp = tempfile::tempdir().unwrap();
    let out = run_config(&tmp.path().join("missing.json"), tmp.path(), 1);
    assert_eq!(out.status.code(), Some(2));
    let cfg = write_config(tmp.path(), "bad.json", "{not json");
    assert_eq!(run_config(&cfg, tmp.path(), 1).status.code(), Some(2));
}

#[test]
fn quadrature_check_run() {
    let tmp = tempfile::tempdir().unwrap();
    let raw = r#"{"kind":"quadrature-check","master_seed":3,"gates":true}"#;
    let cfg = write_config(tmp.path(), "q.json", raw);
    let dir = tmp.path().join("run");
    let out = run_config(&cfg, &dir, 1);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    assert!(String::from_utf8_lossy(&out.stdout).contains("PASS closed vs quadrature"));
    let m = RunManifest::read(&dir.join("manifest.json")).unwrap();
    assert_eq!(m.status, "ok");
    assert!(m.missing_files(&dir).is_empty());
    assert!(m.files.contains(&"lattice.csv".to_string()));
    assert_eq!(fs::read_to_string(dir.join("config.json")).unwrap(), raw);
    assert_eq!(m.config_hash, m.effective_config.hash());
    assert_eq!(m.config, serde_json::from_str::<serde_json::Value>(raw).unwrap());
    let lattice = fs::read_to_string(dir.join("lattice.csv")).unwrap();
    assert_eq!(lattice.lines().count(), 1 + 3 * (12 + 3));
}

#[test]
fn constants_table() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write_config(tmp.path(), "c.json", r#"{"kind":"constants","master_seed":3,"gates":true}"#);
    let dir = tmp.path().join("run");
    let out = run_config(&cfg, &dir, 1);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stdout));
    let text: String = csv_files(&dir).into_iter().map(|(_, b)| String::from_utf8(b).unwrap()).collect();
    assert!(text.contains("0.1274912"));
    assert!(text.contains("0.2978360"));
    assert!(text.contains("1.036482"));
}

#[test]
fn gate_failure_sets_exit_code_only_when_requested() {
    let tmp = tempfile::tempdir().unwrap();
    let base = r#""kind":"reg-variation","master_seed":5,"params":{"scales":[10],"paths":2000}"#;
    let strict = write_config(tmp.path(), "s.json", &format!("{{{base},\"gates\":true}}"));
    let lax = write_config(tmp.path(), "l.json", &format!("{{{base}}}"));
    let out = run_config(&strict, &tmp.path().join("s"), 1);
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&out.stdout).contains("FAIL"));
    assert_eq!(run_config(&lax, &tmp.path().join("l"), 1).status.code(), Some(0));
    let m = RunManifest::read(&tmp.path().join("l/manifest.json")).unwrap();
    assert_eq!(m.status, "gate-failure");
}

#[test]
fn seed_override_changes_cells() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write_config(tmp.path(), "r.json", r#"{"kind":"reg-variation","master_seed":5,"params":{"scales":[100],"paths":1000}}"#);
    let a = tmp.path().join("a");
    let b = tmp.path().join("b");
    run_config(&cfg, &a, 1);
    let out = bin()
        .args(["run", cfg.to_str().unwrap(), "--seed", "6", "--out", b.to_str().unwrap()])
        .output()
        .unwrap();
    assert!(out.status.success());
    let ma = RunManifest::read(&a.join("manifest.json")).unwrap();
    let mb = RunManifest::read(&b.join("manifest.json")).unwrap();
    assert_ne!(ma.cells, mb.cells);
    assert_ne!(ma.config_hash, mb.config_hash);
}

fn assert_deterministic(raw: &str) {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write_config(tmp.path(), "d.json", raw);
    let one = tmp.path().join("w1");
    let many = tmp.path().join("w8");
    assert!(run_config(&cfg, &one, 1).status.success());
    assert!(run_config(&cfg, &many, 8).status.success());
    let a = csv_files(&one);
    assert!(!a.is_empty());
    assert_eq!(a, csv_files(&many));
}

#[test]
fn hitting_tables_independent_of_workers() {
    assert_deterministic(r#"{"kind":"hitting-calibration","master_seed":11,"params":{"paths":400,"dt_list":[0.02,0.01]}}"#);
}

#[test]
fn excursion_tables_independent_of_workers() {
    assert_deterministic(
        r#"{"kind":"excursion-synthesize","master_seed":12,"params":{"paths":40,"dt":0.002,"export_paths":2}}"#,
    );
}

#[test]
fn convergence_tables_independent_of_workers() {
    assert_deterministic(
        r#"{"kind":"resolvent-converge","master_seed":13,"params":{"m_rule":"a","n_list":[10,100],"paths":256,"nested":true,"dt":0.05}}"#,
    );
}

#[test]
fn oracle_requires_high_budget_flag() {
    let out = bin().args(["oracle", "u_lambda_zero"]).output().unwrap();
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("--high-budget"));
}

#[test]
fn oracle_refuses_drift_without_force() {
    let tmp = tempfile::tempdir().unwrap();
    let store = tmp.path().join("values.json");
    let mut g = GoldenStore::load(&store_path()).unwrap();
    let key = "u_lambda_zero(alpha=1.5,lambda=1)";
    let good = g.get(key).unwrap().value;
    g.entries.get_mut(key).unwrap().value = good + 1e-3;
    g.save(&store).unwrap();
    let before = fs::read(&store).unwrap();
    let args = ["oracle", "u_lambda_zero", "--high-budget", "--store", store.to_str().unwrap()];
    let out = bin().args(args).output().unwrap();
    assert_eq!(out.status.code(), Some(1));
    let err = String::from_utf8_lossy(&out.stderr);
    assert!(err.contains("drift") && err.contains("sigma"), "{err}");
    assert_eq!(fs::read(&store).unwrap(), before);
    let out = bin().args(args).arg("--force").output().unwrap();
    assert!(out.status.success());
    let fixed = GoldenStore::load(&store).unwrap();
    assert!((fixed.get(key).unwrap().value - good).abs() < 1e-8);
}

#[test]
fn oracle_identities_are_exact() {
    let tmp = tempfile::tempdir().unwrap();
    let store = tmp.path().join("values.json");
    fs::copy(store_path(), &store).unwrap();
    let out = bin()
        .args(["oracle", "identity_limit_resolvent", "identity_resolvent_zero_formula", "identity_excursion_formula"])
        .args(["--high-budget", "--store", store.to_str().unwrap()])
        .output()
        .unwrap();
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let g = GoldenStore::load(&store).unwrap();
    let ids: Vec<_> = g.entries.iter().filter(|(k, _)| k.starts_with("identity")).collect();
    assert_eq!(ids.len(), 3);
    assert!(ids.iter().all(|(_, e)| e.value == 1.0 && e.tolerance == 0.0));
}

#[test]
fn report_merges_runs() {
    let tmp = tempfile::tempdir().unwrap();
    let runs = tmp.path().join("runs");
    let q = write_config(tmp.path(), "q.json", r#"{"kind":"quadrature-check","master_seed":1}"#);
    let r = write_config(tmp.path(), "r.json", r#"{"kind":"reg-variation","master_seed":2,"params":{"scales":[100],"paths":500}}"#);
    assert!(run_config(&q, &runs.join("q"), 1).status.success());
    assert!(run_config(&r, &runs.join("r"), 1).status.success());
    let copy = tmp.path().join("copy");
    let out = bin()
        .args(["report", runs.to_str().unwrap(), "--out", copy.to_str().unwrap()])
        .output()
        .unwrap();
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let md = fs::read_to_string(runs.join("report.md")).unwrap();
    assert!(md.contains("quadrature-check") && md.contains("reg-variation"));
    assert!(md.contains("closed vs quadrature"));
    let gates = fs::read_to_string(runs.join("gates.csv")).unwrap();
    assert!(gates.lines().count() >= 3);
    assert_eq!(fs::read(copy.join("report.md")).unwrap(), md.as_bytes());
}

#[test]
fn report_config_kind() {
    let tmp = tempfile::tempdir().unwrap();
    let runs = tmp.path().join("runs");
    let q = write_config(tmp.path(), "q.json", r#"{"kind":"quadrature-check","master_seed":1}"#);
    assert!(run_config(&q, &runs.join("q"), 1).status.success());
    let missing = write_config(tmp.path(), "m.json", r#"{"kind":"report","master_seed":1}"#);
    assert_eq!(run_config(&missing, &tmp.path().join("x"), 1).status.code(), Some(2));
    let raw = format!(r#"{{"kind":"report","master_seed":1,"params":{{"run_dir":"{}"}}}}"#, runs.display());
    let cfg = write_config(tmp.path(), "rep.json", &raw);
    assert!(run_config(&cfg, &tmp.path().join("rep"), 1).status.success());
    assert!(runs.join("report.md").is_file());
}

#[test]
fn gate_helpers() {
    assert!(gaps_decrease(&[0.3, 0.1, 0.01], &[0.01, 0.01, 0.01]));
    assert!(gaps_decrease(&[0.1, 0.12], &[0.01, 0.01]));
    assert!(!gaps_decrease(&[0.1, 0.3], &[0.01, 0.01]));
    let (v, se) = extrapolate_to_zero(&[1.0, 2.0, 3.0], &[3.0, 5.0, 7.0], &[0.1, 0.1, 0.1]);
    assert!((v - 1.0).abs() < 1e-12 && se > 0.0);
    assert!((correlation(&[1.0, 2.0, 3.0], &[2.0, 4.0, 6.0]) - 1.0).abs() < 1e-12);
    assert!((correlation(&[1.0, 2.0, 3.0], &[3.0, 2.0, 1.0]) + 1.0).abs() < 1e-12);
}
