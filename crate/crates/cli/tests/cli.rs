use std::path::PathBuf;
use std::process::{Command, Output};

use serde_json::Value;

fn fixture(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR"))
        .join("fixtures")
        .join(name)
}

fn carpool(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_carpool"))
        .args(args)
        .env_remove("CARPOOL_MAX_ROUTES")
        .output()
        .expect("binary runs")
}

fn json(out: &Output) -> Value {
    serde_json::from_slice(&out.stdout).unwrap_or_else(|e| {
        panic!(
            "stdout is not JSON ({e}): {}",
            String::from_utf8_lossy(&out.stdout)
        )
    })
}

fn stderr(out: &Output) -> String {
    String::from_utf8_lossy(&out.stderr).into_owned()
}

fn solve(name: &str, extra: &[&str]) -> (Output, Value) {
    let path = fixture(name);
    let mut args = vec!["solve", path.to_str().unwrap()];
    args.extend_from_slice(extra);
    let out = carpool(&args);
    let value = json(&out);
    (out, value)
}

#[test]
fn wheatstone_has_no_equilibrium() {
    let (out, v) = solve("wheatstone.json", &[]);
    assert_eq!(out.status.code(), Some(2), "{}", stderr(&out));
    assert_eq!(v["status"], "no_equilibrium");
    assert_eq!(v["diagnostics"]["lp_optimum"], "11/1");
    assert_eq!(v["diagnostics"]["ip_optimum"], "10/1");
    assert_eq!(v["diagnostics"]["series_parallel"], false);
    assert!(v.get("trips").is_none());
}

#[test]
fn single_rider_pays_nothing() {
    let (out, v) = solve("single_rider.json", &[]);
    assert_eq!(out.status.code(), Some(0));
    assert_eq!(v["status"], "equilibrium");
    assert_eq!(v["payments"]["ann"], "0/1");
    assert_eq!(v["utilities"]["ann"], "8/1");
    assert_eq!(v["tolls"]["e1"], "0/1");
    assert_eq!(v["trips"][0]["route"], "e1");
}

#[test]
fn random_instance_with_vcg_satisfies_every_condition() {
    let (out, v) = solve("random_sp.json", &["--vcg", "--seed", "3"]);
    assert_eq!(out.status.code(), Some(0), "{}", stderr(&out));
    assert_eq!(v["mechanism"], "vcg");
    assert_eq!(v["seed"], 3);
    let report = v["report"].as_object().unwrap();
    for (name, value) in report {
        if name != "violations" {
            assert_eq!(value, &Value::Bool(true), "{name}");
        }
    }
    assert_eq!(report["violations"], Value::Array(vec![]));
    assert!(v["counterfactual_welfare"].is_object());
}

#[test]
fn vcg_refuses_heterogeneous_disutility() {
    let path = fixture("hetero.json");
    let out = carpool(&["solve", "--vcg", path.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(1));
    assert!(stderr(&out).contains("error"));
}

#[test]
fn verify_accepts_solved_outcome_and_rejects_tampering() {
    let dir = tempfile::tempdir().unwrap();
    for name in [
        "parallel.json",
        "random_sp.json",
        "idle_route.json",
        "single_rider.json",
    ] {
        let instance = fixture(name);
        let result = dir.path().join(format!("result-{name}"));
        let out = carpool(&[
            "solve",
            instance.to_str().unwrap(),
            "-o",
            result.to_str().unwrap(),
        ]);
        assert_eq!(out.status.code(), Some(0), "{name}: {}", stderr(&out));
        assert!(out.stdout.is_empty());

        let out = carpool(&[
            "verify",
            instance.to_str().unwrap(),
            result.to_str().unwrap(),
        ]);
        assert_eq!(out.status.code(), Some(0), "{name}: {}", stderr(&out));
        assert_eq!(json(&out)["violations"], Value::Array(vec![]));

        let original: Value =
            serde_json::from_str(&std::fs::read_to_string(&result).unwrap()).unwrap();
        let tampered_path = dir.path().join(format!("tampered-{name}"));

        let mut tampered = original.clone();
        let rider = tampered["payments"]
            .as_object()
            .unwrap()
            .keys()
            .next()
            .unwrap()
            .clone();
        tampered["payments"][&rider] = Value::String("1000".into());
        std::fs::write(&tampered_path, tampered.to_string()).unwrap();
        let out = carpool(&[
            "verify",
            instance.to_str().unwrap(),
            tampered_path.to_str().unwrap(),
        ]);
        assert_eq!(
            out.status.code(),
            Some(1),
            "{name}: raised payment accepted"
        );
        assert!(stderr(&out).contains("FAILED"));

        let mut tampered = original.clone();
        let edge = tampered["tolls"]
            .as_object()
            .unwrap()
            .keys()
            .next()
            .unwrap()
            .clone();
        tampered["tolls"][&edge] = Value::String("-1".into());
        std::fs::write(&tampered_path, tampered.to_string()).unwrap();
        let out = carpool(&[
            "verify",
            instance.to_str().unwrap(),
            tampered_path.to_str().unwrap(),
        ]);
        assert_eq!(out.status.code(), Some(1), "{name}: negative toll accepted");
    }
}

#[test]
fn verify_rejects_unknown_ids() {
    let dir = tempfile::tempdir().unwrap();
    let outcome = dir.path().join("outcome.json");
    std::fs::write(
        &outcome,
        r#"{"trips": [], "payments": {"ghost": "0"}, "tolls": {"e1": "0"}}"#,
    )
    .unwrap();
    let instance = fixture("single_rider.json");
    let out = carpool(&[
        "verify",
        instance.to_str().unwrap(),
        outcome.to_str().unwrap(),
    ]);
    assert_eq!(out.status.code(), Some(1));
    assert!(stderr(&out).contains("ghost"));
}

fn inspect(name: &str, flag: Option<&str>) -> (Value, String) {
    let path = fixture(name);
    let mut args = vec!["inspect", path.to_str().unwrap()];
    args.extend(flag);
    let out = carpool(&args);
    assert_eq!(out.status.code(), Some(0), "{}", stderr(&out));
    (json(&out), stderr(&out))
}

#[test]
fn inspect_sections() {
    let (v, text) = inspect("wheatstone.json", Some("--sp"));
    assert_eq!(v["series_parallel"]["series_parallel"], false);
    assert!(v["series_parallel"]["irreducible_edges"]
        .as_array()
        .unwrap()
        .contains(&Value::from("e5")));
    assert!(v.get("routes").is_none());
    assert!(text.contains("not series-parallel"));

    let (v, text) = inspect("wheatstone.json", Some("--greedy"));
    assert_eq!(
        v["greedy"]["routes"],
        serde_json::json!([{"route": "e1-e5-e4", "capacity": 1}])
    );
    assert_eq!(v["greedy"]["total"], 1);
    assert_eq!(v["greedy"]["network_capacity"], 2);
    assert!(text.contains("total 1 of network capacity 2"), "{text}");

    let (v, _) = inspect("wheatstone.json", Some("--routes"));
    assert_eq!(v["routes"].as_array().unwrap().len(), 3);
    assert_eq!(v["routes"][1]["travel_time"], "2/1");

    let (v, text) = inspect("hetero.json", Some("--gs-check"));
    let check = &v["gross_substitutes"][0];
    assert_eq!(check["holds"], false);
    assert!(check["exchange"].is_string());
    assert!(text.contains("exchange fails"), "{text}");

    let (v, _) = inspect("parallel.json", None);
    for section in ["routes", "series_parallel", "greedy", "gross_substitutes"] {
        assert!(v.get(section).is_some(), "{section} missing");
    }
    assert_eq!(v["series_parallel"]["series_parallel"], true);
    assert!(v["gross_substitutes"]
        .as_array()
        .unwrap()
        .iter()
        .all(|c| c["holds"] == true));
}

#[test]
fn oracle_reports_the_gap() {
    let path = fixture("wheatstone.json");
    let out = carpool(&["oracle", path.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(0));
    let v = json(&out);
    assert_eq!(v["lp_optimum"], "11/1");
    assert_eq!(v["ip_optimum"], "10/1");
    assert_eq!(v["gap"], "1/1");
    assert_eq!(v["equilibrium_exists"], false);
    assert_eq!(v["lp_integral"], false);
}

#[test]
fn output_is_deterministic() {
    for name in ["parallel.json", "random_sp.json", "wheatstone.json"] {
        let a = solve(name, &[]).0.stdout;
        let b = solve(name, &[]).0.stdout;
        assert_eq!(a, b, "{name}");
    }
}

#[test]
fn float_only_changes_the_summary() {
    let (exact, a) = solve("random_sp.json", &[]);
    let (float, b) = solve("random_sp.json", &["--float"]);
    assert_eq!(a, b);
    assert!(stderr(&exact).contains("85/12"));
    assert!(stderr(&float).contains("7.0833"), "{}", stderr(&float));
}

#[test]
fn reads_stdin() {
    use std::io::Write;
    use std::process::Stdio;
    let mut child = Command::new(env!("CARGO_BIN_EXE_carpool"))
        .args(["solve", "-"])
        .stdin(Stdio::piped())
        .stdout(Stdio::piped())
        .stderr(Stdio::piped())
        .spawn()
        .unwrap();
    let text = std::fs::read_to_string(fixture("single_rider.json")).unwrap();
    child
        .stdin
        .take()
        .unwrap()
        .write_all(text.as_bytes())
        .unwrap();
    let out = child.wait_with_output().unwrap();
    assert_eq!(out.status.code(), Some(0));
    assert_eq!(json(&out)["welfare"], "8/1");
}

#[test]
fn schema_errors_name_the_field() {
    let dir = tempfile::tempdir().unwrap();
    let bad = dir.path().join("bad.json");
    let mut doc: Value =
        serde_json::from_str(&std::fs::read_to_string(fixture("parallel.json")).unwrap()).unwrap();
    doc["riders"][1]["alpha"] = Value::String("seven".into());
    std::fs::write(&bad, doc.to_string()).unwrap();
    let out = carpool(&["solve", bad.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(1));
    assert!(stderr(&out).contains("riders[1].alpha"), "{}", stderr(&out));

    doc["riders"][1]["alpha"] = Value::String("20".into());
    doc["riders"][0]["gamma"] = serde_json::json!(["0", "1"]);
    std::fs::write(&bad, doc.to_string()).unwrap();
    let out = carpool(&["solve", bad.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(1));
    assert!(stderr(&out).contains("gamma"), "{}", stderr(&out));

    let out = carpool(&["solve", "--bogus", bad.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(1));
}

#[test]
fn route_cap_comes_from_the_environment() {
    let path = fixture("wheatstone.json");
    let out = Command::new(env!("CARGO_BIN_EXE_carpool"))
        .args(["solve", path.to_str().unwrap()])
        .env("CARPOOL_MAX_ROUTES", "2")
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(1));
    let out = carpool(&["solve", path.to_str().unwrap(), "--max-routes", "3"]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn generate_round_trips() {
    let out = carpool(&["generate", "--seed", "3"]);
    assert_eq!(out.status.code(), Some(0));
    let stored: Value =
        serde_json::from_str(&std::fs::read_to_string(fixture("random_sp.json")).unwrap()).unwrap();
    assert_eq!(json(&out), stored);
}
