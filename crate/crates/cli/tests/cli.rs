mod common;

use std::f64::consts::SQRT_2;

use common::{assert_valid, bin, run, run_json, run_ok, violations};
use serde_json::Value;

fn f(v: &Value, key: &str) -> f64 {
    v[key].as_f64().unwrap_or_else(|| panic!("{key} is not a number"))
}

#[test]
fn solve2_million_payoff_in_window() {
    let doc = run_json(&["solve2", "--grover-N", "1000000", "--format", "json"]);
    assert_valid("solve2", &doc);
    let ell = f(&doc["density"], "ell");
    let k = doc["density"]["k"].as_u64().unwrap() as f64;
    let tau = 50.0 * SQRT_2 * ell / k;
    let r = SQRT_2 - 1.0;
    let payoff = f(&doc, "payoffRow");
    assert!(payoff > r - tau * r * r && payoff <= r);
    assert_eq!(doc["Tstar"], doc["startT"]);
    assert_eq!(doc["bounds"]["verdict"], "pass");
}

#[test]
fn verify_equilibrium_file_against_tie_splitting() {
    let dir = tempfile::tempdir().unwrap();
    let eq = dir.path().join("eq.json");
    let eq_s = eq.to_str().unwrap();
    run_ok(&["solve2", "--grover-N", "10000", "-o", eq_s]);
    let doc = run_json(&[
        "verify", "--game", "stingy", "--grover-N", "10000", "--profile", eq_s, "--against", "quantum",
    ]);
    assert_valid("verify", &doc);
    let sched = run_json(&["solve2", "--grover-N", "10000"]);
    let ell = f(&sched["density"], "ell");
    let k = sched["density"]["k"].as_f64().unwrap();
    assert!(f(&doc, "epsilonWellSupported") <= 7.0 * (SQRT_2 - 1.0) * ell / k);
    let ws = doc["bounds"]["checks"]
        .as_array()
        .unwrap()
        .iter()
        .find(|c| c["name"] == "well_supported_two_player")
        .unwrap();
    assert_eq!(ws["status"], "holds");
}

#[test]
fn bitcoin_report() {
    let doc = run_json(&["bitcoin", "--difficulty", "7e12"]);
    assert_valid("bitcoin", &doc);
    let k = f(&doc, "K");
    assert!(k > 0.5e11 && k < 2e11, "K = {k}");
    assert!(f(&doc, "multiplayerEps") < 3e-10);
    assert_eq!(doc["epsilonWithinScale"], true);
    assert_eq!(doc["materializable"], false);
}

#[test]
fn every_subcommand_matches_its_schema() {
    let sched = run_json(&["schedule", "--grover-N", "1000"]);
    assert_valid("schedule", &sched);
    assert_valid("solven", &run_json(&["solven", "--grover-N", "10000", "-n", "3"]));
    assert_valid("alternating", &run_json(&["alternating", "--grover-N", "1000"]));
    assert_valid("alternating", &run_json(&["alternating", "--probs", "0.5,0.5833333333333334,1"]));
    assert_valid("altcoinc", &run_json(&["altcoinc", "--grover-N", "10000"]));
    assert_valid("altcoinc", &run_json(&["altcoinc", "--probs", "0.1,0.2,0.3,0.5,0.6", "--start", "1", "--change", "3"]));
    assert_valid("verify", &run_json(&["verify", "--grover-N", "1000", "-n", "3", "--against", "quantum"]));
    assert_valid("bound", &run_json(&["bound", "--grover-N", "10000", "-n", "2,3", "--grid", "10"]));
    assert_valid("simulate", &run_json(&["simulate", "--grover-N", "1000", "--trials", "2000", "--seed", "5"]));
    assert_valid(
        "sweep",
        &run_json(&["simulate", "--sweep-N", "1e3,1e30", "-n", "2", "--trials", "1000", "--seed", "1"]),
    );
    assert_valid("analytic", &run_json(&["solven", "--grover-N", "1e30", "--analytic-only"]));
    assert_valid("solve2", &run_json(&["solve2", "--probs", "0.1,0.3,0.6", "--col-probs", "0.1,0.3,0.6"]));
}

#[test]
fn schedule_round_trips_byte_identically() {
    let dir = tempfile::tempdir().unwrap();
    for format in ["json", "csv"] {
        let path = dir.path().join(format!("s.{format}"));
        let p = path.to_str().unwrap();
        run_ok(&["schedule", "--grover-N", "12345", "--format", format, "-o", p]);
        let first = std::fs::read_to_string(&path).unwrap();
        let again = run_ok(&["schedule", "--schedule-file", p, "--format", format]);
        assert_eq!(first, again);
        for cmd in ["solve2", "solven", "alternating", "altcoinc", "bound"] {
            let direct = run_ok(&[cmd, "--grover-N", "12345"]);
            let via_file = run_ok(&[cmd, "--schedule-file", p]);
            assert_eq!(direct, via_file, "{cmd} via {format}");
        }
    }
}

#[test]
fn seeded_simulation_is_reproducible() {
    let args = ["simulate", "--grover-N", "10000", "-n", "3", "--trials", "50000", "--seed", "99"];
    assert_eq!(run_ok(&args), run_ok(&args));
    let other = run_ok(&["simulate", "--grover-N", "10000", "-n", "3", "--trials", "50000", "--seed", "98"]);
    assert_ne!(run_ok(&args), other);
}

#[test]
fn sweep_csv_header_and_analytic_rows() {
    let out = run_ok(&[
        "simulate", "--sweep-N", "1e4,7e40", "-n", "2,3", "--trials", "1000", "--seed", "4", "--format", "csv",
    ]);
    let mut lines = out.lines();
    assert_eq!(
        lines.next().unwrap(),
        "N,K,n,ell,Tstar,analytic_payoff,analytic_tie,empirical_tie,bound_8enl_over_K,trials,seed"
    );
    let rows: Vec<Vec<&str>> = lines.map(|l| l.split(',').collect()).collect();
    assert_eq!(rows.len(), 4);
    assert!(rows[0][7].parse::<f64>().is_ok());
    assert_eq!(rows[3][4], "");
    assert_eq!(rows[3][7], "");
    assert_eq!(rows[3][9], "0");
}

#[test]
fn numbers_carry_seventeen_significant_digits() {
    let out = run_ok(&["schedule", "--probs", "0.1,0.5"]);
    assert_eq!(out, "{\"probs\":[1.0000000000000001e-1,5.0000000000000000e-1]}\n");
}

#[test]
fn usage_errors_exit_two() {
    assert_eq!(run(&["frobnicate"]).status.code(), Some(2));
    assert_eq!(run(&["solve2", "--probs", "0.3,0.6", "--grover-N", "100"]).status.code(), Some(2));
    assert_eq!(run(&["solve2"]).status.code(), Some(2));
    assert_eq!(run(&["solven", "--grover-N", "1000", "-n", "2,3"]).status.code(), Some(2));
    assert_eq!(run(&["verify", "--grover-N", "1000", "--game", "quantum"]).status.code(), Some(2));
    assert_eq!(run(&["bitcoin", "--difficulty", "7e12", "--format", "csv"]).status.code(), Some(2));
    assert_eq!(run(&["solve2", "--grover-N", "1000.5"]).status.code(), Some(2));
}

#[test]
fn domain_errors_exit_one() {
    let dir = tempfile::tempdir().unwrap();
    let bad = dir.path().join("bad.json");
    std::fs::write(&bad, "{\"probs\": [0.5, 0.4]}").unwrap();
    assert_eq!(run(&["solve2", "--schedule-file", bad.to_str().unwrap()]).status.code(), Some(1));
    std::fs::write(&bad, "{\"probs\": [0.5, ").unwrap();
    assert_eq!(run(&["solve2", "--schedule-file", bad.to_str().unwrap()]).status.code(), Some(1));
    assert_eq!(run(&["solve2", "--probs", "0.3,1.2"]).status.code(), Some(1));
    let capped = bin()
        .args(["solve2", "--grover-N", "100000"])
        .env("QRACE_K_CAP", "50")
        .output()
        .unwrap();
    assert_eq!(capped.status.code(), Some(1));
    let analytic = bin()
        .args(["solve2", "--grover-N", "100000", "--analytic-only"])
        .env("QRACE_K_CAP", "50")
        .output()
        .unwrap();
    assert_eq!(analytic.status.code(), Some(0));
}

#[test]
fn strict_turns_inapplicable_into_failure() {
    let args = ["bound", "--probs", "0.3,0.6"];
    let loose = run(&args);
    assert_eq!(loose.status.code(), Some(0));
    let doc: Value = serde_json::from_slice(&loose.stdout).unwrap();
    assert_eq!(doc["verdict"], "inapplicable");
    let strict = run(&["bound", "--probs", "0.3,0.6", "--strict"]);
    assert_eq!(strict.status.code(), Some(1));
    assert_eq!(run(&["bound", "--grover-N", "100000", "--strict", "--grid", "5"]).status.code(), Some(0));
}

#[test]
fn bimatrix_verification_from_csv() {
    let dir = tempfile::tempdir().unwrap();
    let a = dir.path().join("a.csv");
    let b = dir.path().join("b.csv");
    let prof = dir.path().join("p.json");
    std::fs::write(&a, "1,-1\n-1,1\n").unwrap();
    std::fs::write(&b, "-1,1\n1,-1\n").unwrap();
    std::fs::write(&prof, r#"{"players":[{"weights":[0.5,0.5]},{"weights":[0.5,0.5]}]}"#).unwrap();
    let doc = run_json(&[
        "verify",
        "--row-matrix",
        a.to_str().unwrap(),
        "--col-matrix",
        b.to_str().unwrap(),
        "--profile",
        prof.to_str().unwrap(),
    ]);
    assert_valid("verify", &doc);
    assert_eq!(doc["isExact"], true);
}

#[test]
fn validator_rejects_malformed_documents() {
    let bad = serde_json::json!({"probs": [0.5, 1.5], "extra": 1});
    assert_eq!(violations("schedule", &bad).len(), 2);
    let mut sol = run_json(&["solve2", "--probs", "0.3,0.6"]);
    sol.as_object_mut().unwrap().remove("payoffRow");
    sol["kind"] = Value::from("mystery");
    assert_eq!(violations("solve2", &sol).len(), 2);
    let mut alt = run_json(&["alternating", "--grover-N", "1000"]);
    alt.as_object_mut().unwrap().remove("row");
    assert!(!violations("alternating", &alt).is_empty());
}
