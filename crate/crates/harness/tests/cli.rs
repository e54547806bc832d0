use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use serde_json::Value;

fn scenario(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../../scenarios").join(name)
}

fn torsionlab(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_torsionlab")).args(args).output().expect("binary runs")
}

fn run(mode: &str, config: &Path, out: &Path, extra: &[&str]) -> Output {
    let mut args = vec![mode, config.to_str().unwrap(), "--out", out.to_str().unwrap()];
    args.extend_from_slice(extra);
    torsionlab(&args)
}

fn report(out: &Path) -> Value {
    serde_json::from_str(&std::fs::read_to_string(out.join("report.json")).unwrap()).unwrap()
}

/// Column `name` of `tables/<table>.csv`, parsed as floats; empty cells become `None`.
fn column(out: &Path, table: &str, name: &str) -> Vec<Option<f64>> {
    let mut reader = csv::Reader::from_path(out.join("tables").join(format!("{table}.csv"))).unwrap();
    let index = reader.headers().unwrap().iter().position(|h| h == name).unwrap_or_else(|| panic!("no column {name}"));
    reader
        .records()
        .map(|r| {
            let cell = r.unwrap()[index].to_string();
            (!cell.is_empty()).then(|| cell.parse().unwrap())
        })
        .collect()
}

fn write_config(dir: &Path, text: &str) -> PathBuf {
    let path = dir.join("scenario.toml");
    std::fs::write(&path, text).unwrap();
    path
}

#[test]
fn radial_annulus_identities_are_exact() {
    let dir = tempfile::tempdir().unwrap();
    let out = run("sweep", &scenario("radial_identities.toml"), dir.path(), &[]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let rel = column(dir.path(), "identities", "rel_residual");
    assert_eq!(rel.len(), 3 * 5);
    assert!(rel.iter().all(|r| r.unwrap() <= 1e-8));
    let report = report(dir.path());
    assert_eq!(report["passed"], Value::Bool(true));
    assert_eq!(report["summary"]["overdetermined_instances"], 3);
    assert_eq!(report["schema_version"], "1.0");
}

#[test]
fn hole_crossing_the_outer_curve_is_a_config_error() {
    let dir = tempfile::tempdir().unwrap();
    let config = write_config(
        dir.path(),
        "experiment = \"identities\"\n[domain]\nouter_radius_du = 1.0\n[[holes]]\ncenter_du = [0.95, 0.0]\nradius_du = 0.1\nboundary_value_du2 = -0.1\n",
    );
    let out = run("run", &config, &dir.path().join("out"), &[]);
    assert_eq!(out.status.code(), Some(2));
    let stderr = String::from_utf8_lossy(&out.stderr);
    assert!(stderr.contains("holes[0]") && stderr.contains("hole lies strictly inside the outer curve"), "{stderr}");
    assert!(!dir.path().join("out").exists());
}

#[test]
fn unknown_key_names_its_path() {
    let dir = tempfile::tempdir().unwrap();
    let config = write_config(
        dir.path(),
        "experiment = \"shapeflow\"\n[domain]\nouter_radius_du = 1.0\n[solver]\nn_sources = 64\n",
    );
    let out = torsionlab(&["validate", config.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("solver"));
}

#[test]
fn empty_sweep_is_a_config_error() {
    let dir = tempfile::tempdir().unwrap();
    let text = std::fs::read_to_string(scenario("radial_identities.toml")).unwrap().replace("[0.1, 0.2, 0.4]", "[]");
    let out = run("sweep", &write_config(dir.path(), &text), &dir.path().join("out"), &[]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("sweep.values"));
}

#[test]
fn sweep_without_axis_is_a_config_error() {
    let dir = tempfile::tempdir().unwrap();
    let out = run("sweep", &scenario("generic_identities.toml"), dir.path(), &[]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn shapeflow_trajectory_has_monotone_flux_spread() {
    let dir = tempfile::tempdir().unwrap();
    let out = run("run", &scenario("shapeflow.toml"), dir.path(), &[]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let std: Vec<f64> = column(dir.path(), "trajectory", "flux_std_du").into_iter().map(Option::unwrap).collect();
    assert!(std.len() >= 2);
    assert!(std.windows(2).all(|w| w[1] <= w[0]), "{std:?}");
    let energy: Vec<f64> = column(dir.path(), "trajectory", "energy_du4").into_iter().map(Option::unwrap).collect();
    assert!(energy.windows(2).all(|w| w[1] >= w[0]));
    let ratio = column(dir.path(), "trajectory", "flux_ratio").last().unwrap().unwrap();
    assert!(ratio <= 1e-3);
}

#[test]
fn radial_stability_sweep_has_vanishing_left_sides() {
    let dir = tempfile::tempdir().unwrap();
    let out = run("sweep", &scenario("radial_stability.toml"), dir.path(), &[]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    for (name, tolerance) in [("pseudo_distance_du3", 1e-10), ("asymmetry", 1e-6), ("radii_gap_du", 1e-8)] {
        let values = column(dir.path(), "stability", name);
        assert_eq!(values.len(), 3);
        assert!(values.iter().all(|v| v.unwrap().abs() <= tolerance), "{name}: {values:?}");
    }
    let constants = column(dir.path(), "constants", "constant");
    assert!(constants.iter().all(|c| c.unwrap() <= 1e-6));
}

#[test]
fn every_column_is_documented() {
    let dir = tempfile::tempdir().unwrap();
    let out = run("sweep", &scenario("radial_stability.toml"), dir.path(), &[]);
    assert_eq!(out.status.code(), Some(0));
    let schema: Value =
        serde_json::from_str(&std::fs::read_to_string(dir.path().join("schema.json")).unwrap()).unwrap();
    for table in ["stability", "constants"] {
        let mut reader = csv::Reader::from_path(dir.path().join("tables").join(format!("{table}.csv"))).unwrap();
        let documented: Vec<&str> = schema["tables"][format!("tables/{table}.csv")]
            .as_array()
            .unwrap()
            .iter()
            .map(|c| {
                assert!(!c["unit"].as_str().unwrap().is_empty());
                c["name"].as_str().unwrap()
            })
            .collect();
        let header: Vec<String> = reader.headers().unwrap().iter().map(String::from).collect();
        assert_eq!(header, documented);
    }
}

#[test]
fn outputs_do_not_depend_on_thread_count() {
    let dir = tempfile::tempdir().unwrap();
    let config = scenario("poincare.toml");
    let (a, b) = (dir.path().join("a"), dir.path().join("b"));
    assert_eq!(run("sweep", &config, &a, &["--threads", "1"]).status.code(), Some(0));
    assert_eq!(run("sweep", &config, &b, &["--threads", "4"]).status.code(), Some(0));
    for table in ["poincare", "oscillation"] {
        let path = |d: &Path| d.join("tables").join(format!("{table}.csv"));
        assert_eq!(std::fs::read(path(&a)).unwrap(), std::fs::read(path(&b)).unwrap(), "{table}");
    }
    assert_eq!(std::fs::read(a.join("schema.json")).unwrap(), std::fs::read(b.join("schema.json")).unwrap());
}

#[test]
fn seed_override_is_recorded_and_changes_samples() {
    let dir = tempfile::tempdir().unwrap();
    let config = scenario("poincare.toml");
    let (a, b) = (dir.path().join("a"), dir.path().join("b"));
    assert_eq!(run("run", &config, &a, &["--seed", "5"]).status.code(), Some(0));
    assert_eq!(run("run", &config, &b, &["--seed", "6"]).status.code(), Some(0));
    assert_eq!(report(&a)["config"]["seed"], 5);
    let read = |d: &Path| std::fs::read(d.join("tables/poincare.csv")).unwrap();
    assert_ne!(read(&a), read(&b));
}
