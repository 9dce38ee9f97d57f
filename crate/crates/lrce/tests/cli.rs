use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use lrce::bundle::CommandResult;
use lrce::{load_config, ResultBundle};

fn fixture(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../../fixtures").join(name)
}

fn lrce(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_lrce")).args(args).env("RUST_LOG", "error").output().unwrap()
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

fn bundle(o: &Output) -> ResultBundle {
    assert!(o.status.success(), "{}", stderr(o));
    ResultBundle::from_json(std::str::from_utf8(&o.stdout).unwrap()).unwrap()
}

#[test]
fn zero_exit_probability_names_assumption_four() {
    let o = lrce(&["validate", fixture("badrho.json").to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("A4"), "{}", stderr(&o));
}

#[test]
fn surrogate_supply_is_flat_at_the_oracle_price() {
    let o = lrce(&["supply", fixture("fixtureA-surrogate.json").to_str().unwrap(), "--q", "0.5,5,50"]);
    assert!(stderr(&o).contains("WARNING: assumption checks bypassed"));
    let CommandResult::Supply(table) = bundle(&o).result else { panic!("wrong result kind") };
    assert_eq!(table.rows.len(), 3);
    for (row, q) in table.rows.iter().zip([0.5, 5.0, 50.0]) {
        assert_eq!(row.quantity, q);
        assert_eq!(format!("{:.6}", row.price), "1.849150");
        assert_eq!(row.price.to_bits(), table.rows[0].price.to_bits());
    }
}

#[test]
fn solve_fixture_c_reports_small_residuals_and_writes_csv() {
    let dir = tempfile::tempdir().unwrap();
    let csv = dir.path().join("csv");
    let out = dir.path().join("solve.json");
    let o = lrce(&[
        "--csv-dir",
        csv.to_str().unwrap(),
        "--out",
        out.to_str().unwrap(),
        "solve",
        fixture("fixtureC.json").to_str().unwrap(),
    ]);
    assert!(o.status.success(), "{}", stderr(&o));
    let text = fs::read_to_string(&out).unwrap();
    let b = ResultBundle::from_json(&text).unwrap();
    let CommandResult::Solve(s) = &b.result else { panic!("wrong result kind") };
    let d = &s.diagnostics;
    assert!(d.entry_residual.abs() <= 1e-8);
    assert!(d.exit_residual.abs() <= 1e-6);
    assert!(d.market_clearing_gap <= 1e-8);
    assert!(s.entrant_mass > 0.0 && s.quantity > 0.0);
    assert!(s.threshold.lower <= s.threshold.point && s.threshold.point <= s.threshold.upper);

    assert_eq!(b.to_json().unwrap() + "\n", text);
    assert_eq!(ResultBundle::from_json(&b.to_json().unwrap()).unwrap(), b);

    for name in [
        "fig2_ac_curves.csv",
        "fig3_schedules.csv",
        "measure_lambda_entry.csv",
        "measure_lambda_exit.csv",
        "measure_physical.csv",
    ] {
        assert!(csv.join(name).exists(), "{name}");
    }
    let schedules = fs::read_to_string(csv.join("fig3_schedules.csv")).unwrap();
    assert_eq!(schedules.lines().count(), 1 + 202);
    let row: Vec<&str> = schedules.lines().nth(1 + s.threshold.lower_index).unwrap().split(',').collect();
    assert_eq!(row[2].parse::<f64>().unwrap(), s.schedules.entry_price[s.threshold.lower_index]);
}

#[test]
fn misspelled_field_is_rejected_by_name() {
    let dir = tempfile::tempdir().unwrap();
    let text = fs::read_to_string(fixture("fixtureC.json")).unwrap().replace("\"discount\"", "\"dicount\"");
    let path = dir.path().join("typo.json");
    fs::write(&path, text).unwrap();
    let o = lrce(&["solve", path.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("dicount"), "{}", stderr(&o));
}

#[test]
fn minimal_config_gets_defaults() {
    let dir = tempfile::tempdir().unwrap();
    let full: serde_json::Value = serde_json::from_str(&fs::read_to_string(fixture("fixtureC.json")).unwrap()).unwrap();
    let minimal = serde_json::json!({ "primitives": full["primitives"] });
    let path = dir.path().join("minimal.json");
    fs::write(&path, minimal.to_string()).unwrap();
    let cfg = load_config(&path).unwrap();
    assert_eq!(cfg.cells, 201);
    assert_eq!(cfg.tolerance, 1e-10);
    assert!(!cfg.bypass_validation);
    assert!(cfg.simulation.is_none());
}

#[test]
fn surrogate_fixture_is_a_two_cell_identity_model() {
    let cfg = load_config(&fixture("fixtureA-surrogate.json")).unwrap();
    assert!(cfg.bypass_validation);
    assert_eq!(cfg.cells, 2);
    let model = lrce::commands::build_model(&cfg).unwrap();
    assert_eq!(model.grid.kernel(), &[1.0, 0.0, 0.0, 1.0]);
    assert_eq!(model.grid.midpoints(), &[1.0, 3.0]);
}

#[test]
fn config_hash_is_stable() {
    let dir = tempfile::tempdir().unwrap();
    let value: serde_json::Value = serde_json::from_str(&fs::read_to_string(fixture("fixtureC.json")).unwrap()).unwrap();
    let path = dir.path().join("compact.json");
    fs::write(&path, value.to_string()).unwrap();
    let a = load_config(&fixture("fixtureC.json")).unwrap().hash();
    assert_eq!(a, load_config(&path).unwrap().hash());
    assert_eq!(a, "46263648921307e967112f4db685c903cd01f6f82ea3d9b4f8e0aa06111d0ceb");
}

#[test]
fn oracle_table_and_bundle() {
    let cfg = fixture("fixtureA-surrogate.json");
    let o = lrce(&["oracle-twotype", cfg.to_str().unwrap(), "--table"]);
    assert!(o.status.success());
    let table = String::from_utf8(o.stdout).unwrap();
    assert!(table.lines().any(|l| l.starts_with("price") && l.contains("1.849149761027937")), "{table}");
    let CommandResult::OracleTwotype(s) = bundle(&lrce(&["oracle-twotype", cfg.to_str().unwrap()])).result else {
        panic!("wrong result kind")
    };
    assert!((s.planner_price - 1.8257418583505538).abs() < 1e-15);

    let o = lrce(&["oracle-twotype", fixture("fixtureC.json").to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn zero_demand_at_the_supply_price_exits_3() {
    let dir = tempfile::tempdir().unwrap();
    let mut v: serde_json::Value = serde_json::from_str(&fs::read_to_string(fixture("fixtureC.json")).unwrap()).unwrap();
    v["primitives"]["demand"]["intercept"] = serde_json::json!(1.5);
    v["cells"] = serde_json::json!(41);
    let path = dir.path().join("choked.json");
    fs::write(&path, v.to_string()).unwrap();
    assert_eq!(lrce(&["solve", path.to_str().unwrap()]).status.code(), Some(2));
    v["bypass_validation"] = serde_json::json!(true);
    fs::write(&path, v.to_string()).unwrap();
    let o = lrce(&["solve", path.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(3), "{}", stderr(&o));
    assert!(stderr(&o).contains("no_active_equilibrium"));
}

#[test]
fn simulation_is_reproducible_and_writes_histogram() {
    let dir = tempfile::tempdir().unwrap();
    let mut v: serde_json::Value = serde_json::from_str(&fs::read_to_string(fixture("fixtureC.json")).unwrap()).unwrap();
    v["cells"] = serde_json::json!(41);
    let path = dir.path().join("small.json");
    fs::write(&path, v.to_string()).unwrap();
    let args = ["simulate", path.to_str().unwrap(), "--entrants", "40", "--periods", "120", "--burn-in", "66", "--seed", "5"];
    let a = bundle(&lrce(&args));
    let b = bundle(&lrce(&args));
    let (CommandResult::Simulate(x), CommandResult::Simulate(y)) = (&a.result, &b.result) else { panic!() };
    assert_eq!(x.stats, y.stats);
    assert_eq!(x.stats.config.entrants, 40);
    assert_eq!(a.config_hash, b.config_hash);

    let csv = dir.path().join("csv");
    let mut with_csv = vec!["--csv-dir", csv.to_str().unwrap()];
    with_csv.extend_from_slice(&args);
    assert!(lrce(&with_csv).status.success());
    let hist = fs::read_to_string(csv.join("histogram.csv")).unwrap();
    assert_eq!(hist.lines().count(), 1 + 41);
}

#[test]
fn compare_writes_both_schedules() {
    let dir = tempfile::tempdir().unwrap();
    let mut v: serde_json::Value = serde_json::from_str(&fs::read_to_string(fixture("fixtureC.json")).unwrap()).unwrap();
    v["cells"] = serde_json::json!(61);
    let path = dir.path().join("c61.json");
    fs::write(&path, v.to_string()).unwrap();
    let csv = dir.path().join("csv");
    let o = lrce(&["--csv-dir", csv.to_str().unwrap(), "compare", path.to_str().unwrap()]);
    let CommandResult::Compare(r) = bundle(&o).result else { panic!("wrong result kind") };
    assert!(r.prediction_holds);
    let text = fs::read_to_string(csv.join("fig4_delta_comparison.csv")).unwrap();
    assert_eq!(text.lines().filter(|l| l.starts_with("0.9,")).count(), 62);
    assert_eq!(text.lines().filter(|l| l.starts_with("1.0,")).count(), 62);
}

#[test]
fn single_type_planner_matches_textbook() {
    let o = lrce(&["planner", fixture("single-type.json").to_str().unwrap()]);
    let CommandResult::Planner(p) = bundle(&o).result else { panic!("wrong result kind") };
    assert!((p.price - 2.0).abs() < 1e-8);
    assert!((p.quantity - 8.0).abs() < 1e-8);
}
