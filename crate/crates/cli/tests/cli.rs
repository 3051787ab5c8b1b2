use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use nullsim::evolution::read_checkpoint;
use nullsim_cli::run::execute;
use nullsim_cli::{presets, CheckStatus, RunConfig, RunSummary};
use serde_json::Value;

fn nullsim(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_nullsim")).args(args).env_remove("NULLSIM_OUT").output().expect("binary runs")
}

fn write_config(dir: &Path, name: &str, config: &RunConfig) -> PathBuf {
    let path = dir.join(name);
    std::fs::write(&path, config.to_toml()).unwrap();
    path
}

fn schema() -> jsonschema::Validator {
    let text = std::fs::read_to_string(concat!(env!("CARGO_MANIFEST_DIR"), "/schema/run_summary.schema.json")).unwrap();
    jsonschema::validator_for(&serde_json::from_str(&text).unwrap()).expect("schema compiles")
}

fn assert_valid(validator: &jsonschema::Validator, summary: &RunSummary) {
    let value: Value = serde_json::from_str(&summary.to_json()).unwrap();
    let errors: Vec<String> = validator.iter_errors(&value).map(|e| format!("{} at {}", e, e.instance_path)).collect();
    assert!(errors.is_empty(), "{errors:#?}");
}

/// Pulse run coarse enough in u that log Ω overflows the blow-up limit.
fn blowup_config() -> RunConfig {
    let mut c = presets::pulse_collapse(10_000.0);
    c.grid.n_u = 11;
    c.scheme.r_floor = 1e-12;
    c
}

#[test]
fn summaries_validate_against_shipped_schema() {
    let validator = schema();
    let mut with_rays = presets::schwarzschild_reference(41);
    with_rays.diagnostics.rays = vec![nullsim::diagnostics::RaySelector::ConstU(3)];
    with_rays.diagnostics.fit_window = Some((0.1, 0.5));
    for config in [presets::minkowski(21), with_rays, presets::pulse_collapse(2000.0), presets::near_singularity(120, 0.1), blowup_config()] {
        let (summary, _) = execute(&config).unwrap();
        assert_valid(&validator, &summary);
        let back: RunSummary = serde_json::from_str(&summary.to_json()).unwrap();
        assert_eq!(back.checks, summary.checks);
    }
}

#[test]
fn schema_rejects_incomplete_summaries() {
    let validator = schema();
    let (summary, _) = execute(&presets::minkowski(11)).unwrap();
    let mut value: Value = serde_json::from_str(&summary.to_json()).unwrap();
    value.as_object_mut().unwrap().remove("checks");
    assert!(!validator.is_valid(&value));
    let mut value: Value = serde_json::from_str(&summary.to_json()).unwrap();
    value["checks"][0]["status"] = Value::from("skipped");
    assert!(!validator.is_valid(&value));
}

#[test]
fn minkowski_run_passes_every_check() {
    let tmp = tempfile::tempdir().unwrap();
    let config = write_config(tmp.path(), "flat.toml", &presets::minkowski(31));
    let out = tmp.path().join("out");
    let o = nullsim(&["run", "--config", config.to_str().unwrap(), "--out", out.to_str().unwrap()]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let summary: RunSummary = serde_json::from_str(&std::fs::read_to_string(out.join("summary.json")).unwrap()).unwrap();
    assert!(summary.checks.iter().all(|c| c.status != CheckStatus::Fail));
    assert!(summary.constants.n_hat.is_none());
    assert_eq!(summary.check("blowup_exponent").unwrap().status, CheckStatus::NotApplicable);
    let table = std::fs::read_to_string(out.join("ray_v00015.csv")).unwrap();
    assert_eq!(table.lines().next().unwrap(), "r,m,mu,K,r_nu,r_lambda,r2_z,r2_w");
    assert_eq!(table.lines().count(), 32);
}

#[test]
fn malformed_config_exits_2_without_output() {
    let tmp = tempfile::tempdir().unwrap();
    let path = tmp.path().join("bad.toml");
    std::fs::write(&path, "[grid]\nu_min = \"zero\"\n").unwrap();
    let out = tmp.path().join("out");
    let o = nullsim(&["run", "--config", path.to_str().unwrap(), "--out", out.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(2));
    assert!(!String::from_utf8_lossy(&o.stderr).is_empty());
    assert!(!out.exists());

    let mut flipped = presets::minkowski(11);
    flipped.grid.u_max = flipped.grid.u_min - 1.0;
    let path = write_config(tmp.path(), "flipped.toml", &flipped);
    let o = nullsim(&["run", "--config", path.to_str().unwrap(), "--out", out.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(2));
    assert!(!out.exists());
}

#[test]
fn numerical_failure_exits_3_with_partial_artifacts() {
    let tmp = tempfile::tempdir().unwrap();
    let config = write_config(tmp.path(), "blow.toml", &blowup_config());
    let out = tmp.path().join("out");
    let o = nullsim(&["run", "--config", config.to_str().unwrap(), "--out", out.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(3), "{}", String::from_utf8_lossy(&o.stderr));
    let summary: RunSummary = serde_json::from_str(&std::fs::read_to_string(out.join("summary.json")).unwrap()).unwrap();
    assert_eq!(summary.outcome, nullsim_cli::summary::RunOutcome::NumericalFailure);
    let (partial, diagonal) = read_checkpoint(std::fs::File::open(out.join("checkpoint.dnck")).unwrap()).unwrap();
    assert_eq!(diagonal, summary.evolution.diagonals_completed);
    assert!(partial.count(nullsim::PointStatus::Unset) > 0);
}

#[test]
fn identical_configs_give_identical_csv_bytes() {
    let tmp = tempfile::tempdir().unwrap();
    let config = write_config(tmp.path(), "pulse.toml", &presets::pulse_collapse(2000.0));
    let mut outputs = Vec::new();
    for name in ["a", "b"] {
        let out = tmp.path().join(name);
        let o = nullsim(&["run", "--config", config.to_str().unwrap(), "--out", out.to_str().unwrap(), "--dump-grid"]);
        assert!(o.status.success());
        outputs.push(out);
    }
    let mut compared = 0;
    for entry in std::fs::read_dir(&outputs[0]).unwrap() {
        let name = entry.unwrap().file_name();
        if Path::new(&name).extension().is_some_and(|e| e == "csv") {
            assert_eq!(std::fs::read(outputs[0].join(&name)).unwrap(), std::fs::read(outputs[1].join(&name)).unwrap(), "{name:?}");
            compared += 1;
        }
    }
    assert_eq!(compared, 2);
}

#[test]
fn checkpoints_hold_the_final_state() {
    let tmp = tempfile::tempdir().unwrap();
    let mut c = presets::schwarzschild_reference(31);
    c.output.checkpoint_every = 7;
    let out = tmp.path().join("out");
    nullsim_cli::run::run(&c, &out).unwrap();
    let (saved, diagonal) = read_checkpoint(std::fs::File::open(out.join("checkpoint.dnck")).unwrap()).unwrap();
    assert_eq!(diagonal, 60);
    assert_eq!(saved, execute(&c).unwrap().1);
}

#[test]
fn report_rerenders_the_text_summary() {
    let tmp = tempfile::tempdir().unwrap();
    let out = tmp.path().join("out");
    let summary = nullsim_cli::run::run(&presets::minkowski(11), &out).unwrap();
    std::fs::remove_file(out.join("summary.txt")).unwrap();
    let o = nullsim(&["report", "--out", out.to_str().unwrap()]);
    assert!(o.status.success());
    assert_eq!(String::from_utf8(o.stdout).unwrap(), summary.render_text());
    assert_eq!(std::fs::read_to_string(out.join("summary.txt")).unwrap(), summary.render_text());
    let missing = nullsim(&["report", "--out", tmp.path().join("nowhere").to_str().unwrap()]);
    assert_eq!(missing.status.code(), Some(2));
}

#[test]
fn json_configs_are_accepted() {
    let tmp = tempfile::tempdir().unwrap();
    let path = tmp.path().join("flat.json");
    std::fs::write(&path, presets::minkowski(11).to_json()).unwrap();
    assert_eq!(RunConfig::from_path(&path).unwrap(), presets::minkowski(11));
}

#[test]
fn output_root_comes_from_the_environment() {
    let tmp = tempfile::tempdir().unwrap();
    let config = write_config(tmp.path(), "flat.toml", &presets::minkowski(11));
    let root = tmp.path().join("root");
    let o = Command::new(env!("CARGO_BIN_EXE_nullsim"))
        .args(["run", "--config", config.to_str().unwrap()])
        .env("NULLSIM_OUT", &root)
        .output()
        .unwrap();
    assert!(o.status.success());
    assert!(root.join("flat").join("summary.json").exists());
}

#[test]
fn verify_schwarzschild_reports_second_order() {
    let tmp = tempfile::tempdir().unwrap();
    let base = write_config(tmp.path(), "s.toml", &presets::schwarzschild_reference(101));
    let out = tmp.path().join("out");
    let o = nullsim(&["verify-schwarzschild", "--config", base.to_str().unwrap(), "--levels", "3", "--out", out.to_str().unwrap()]);
    let table = std::fs::read_to_string(out.join("convergence.csv")).unwrap();
    assert_eq!(table.lines().count(), 4, "{table}");
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));

    let o = nullsim(&["verify-schwarzschild", "--config", base.to_str().unwrap(), "--levels", "2", "--out", out.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn criterion_sweep_rejects_a_single_point_and_tabulates_rows() {
    let tmp = tempfile::tempdir().unwrap();
    let out = tmp.path().join("out");
    let o = nullsim(&["criterion-sweep", "--amplitudes", "100", "--out", out.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(2));

    let o = nullsim(&["criterion-sweep", "--amplitudes", "0,2000", "--out", out.to_str().unwrap()]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let table = std::fs::read_to_string(out.join("criterion_sweep.csv")).unwrap();
    let rows: Vec<&str> = table.lines().collect();
    assert_eq!(rows.len(), 3);
    assert!(rows[1].starts_with("0.0000000000000000e0,") && rows[1].contains(",false,false,"));
    assert!(rows[2].contains(",true,true,"));
}

#[test]
fn exponent_sweep_rejects_out_of_range_epsilons() {
    let o = nullsim(&["exponent-sweep", "--epsilons", "0.5"]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn shipped_configs_parse() {
    let dir = Path::new(env!("CARGO_MANIFEST_DIR")).join("../../configs");
    let mut seen = 0;
    for entry in std::fs::read_dir(dir).unwrap() {
        let path = entry.unwrap().path();
        RunConfig::from_path(&path).unwrap_or_else(|e| panic!("{}: {e}", path.display()));
        seen += 1;
    }
    assert!(seen >= 4);
}
