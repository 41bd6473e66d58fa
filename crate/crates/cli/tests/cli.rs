use std::path::Path;

use serde_json::Value;
use tempfile::TempDir;

fn run(args: &[&str]) -> (i32, String, String) {
    let mut out = Vec::new();
    let mut err = Vec::new();
    let argv = std::iter::once("qwitness").chain(args.iter().copied());
    let code = qwitness_cli::run(argv, &mut out, &mut err);
    (code, String::from_utf8(out).unwrap(), String::from_utf8(err).unwrap())
}

fn run_json(args: &[&str]) -> Value {
    let (code, out, err) = run(args);
    assert_eq!(code, 0, "stderr: {err}");
    serde_json::from_str(&out).unwrap()
}

fn csv_rows(out: &str) -> Vec<Vec<String>> {
    out.lines()
        .filter(|l| !l.starts_with('#'))
        .skip(1)
        .map(|l| l.split(',').map(String::from).collect())
        .collect()
}

fn path_str(p: &Path) -> &str {
    p.to_str().unwrap()
}

#[test]
fn bound_for_three_sits_at_zero_angle() {
    let v = run_json(&["bound", "--d", "3", "--format", "json"]);
    assert_eq!(v["schema"], "qwitness/1");
    assert_eq!(v["d"], 3);
    assert!((v["m_value"].as_f64().unwrap() - 1.0).abs() < 1e-9);
    assert_eq!(v["theta_star"].as_f64().unwrap(), 0.0);
    assert_eq!(v["config"]["subcommand"], "bound");
    assert_eq!(v["config"]["d"], 3);
}

#[test]
fn bound_csv_has_config_header() {
    let (code, out, _) = run(&["bound", "--d", "5", "--weight", "0.5", "--format", "csv"]);
    assert_eq!(code, 0);
    let mut lines = out.lines();
    assert_eq!(lines.next(), Some("# schema=qwitness/1"));
    assert!(lines.next().unwrap().starts_with("# config={"));
    assert!(lines.next().unwrap().starts_with("d,weight,m_value,theta_star"));
    let rows = csv_rows(&out);
    assert_eq!(rows[0][0], "5");
    assert_eq!(rows[0][1], "0.5");
}

#[test]
fn witness_on_mes_file() {
    let dir = TempDir::new().unwrap();
    let file = dir.path().join("mes3.json");
    let (code, _, err) = run(&["make-state", "--mes", "3", "--out", path_str(&file)]);
    assert_eq!(code, 0, "{err}");
    let v = run_json(&["witness", "--state", path_str(&file)]);
    assert!((v["c_value"].as_f64().unwrap() - 2.0).abs() < 1e-10);
    assert!((v["r_value"].as_f64().unwrap() - 2.0).abs() < 1e-10);
    assert_eq!(v["schmidt_lb"], 3);
    assert_eq!(v["c_violated"], true);
}

#[test]
fn state_file_round_trip_preserves_witness_values() {
    let dir = TempDir::new().unwrap();
    for (i, source) in [
        vec!["--noisy", "psi,0.7", "--d", "4"],
        vec!["--noisy", "iso,0.35", "--d", "3"],
        vec!["--bell", "1,2", "--d", "5"],
        vec!["--mes", "6"],
    ]
    .into_iter()
    .enumerate()
    {
        let file = dir.path().join(format!("s{i}.json"));
        let mut make = vec!["make-state"];
        make.extend(&source);
        make.extend(["--out", path_str(&file)]);
        assert_eq!(run(&make).0, 0);

        let mut direct = vec!["witness"];
        direct.extend(&source);
        let a = run_json(&direct);
        let b = run_json(&["witness", "--state", path_str(&file)]);
        for key in ["c_value", "r_value"] {
            let (x, y) = (a[key].as_f64().unwrap(), b[key].as_f64().unwrap());
            assert!((x - y).abs() <= 1e-12, "{key}: {x} vs {y}");
        }
    }
}

#[test]
fn threshold_for_two_level_psi() {
    for witness in ["c", "r"] {
        let v = run_json(&["threshold", "--d", "2", "--family", "psi", "--witness", witness]);
        assert!((v["p_star"].as_f64().unwrap() - 0.75).abs() < 1e-10);
        assert!((v["p_check"].as_f64().unwrap() - 0.75).abs() < 1e-8);
    }
}

#[test]
fn figure_one_rows_carry_distributions() {
    let (code, out, _) = run(&["figure", "--which", "1", "--dmin", "2", "--dmax", "6"]);
    assert_eq!(code, 0);
    let rows = csv_rows(&out);
    assert_eq!(rows.len(), 5);
    let three = rows.iter().find(|r| r[0] == "3").unwrap();
    assert_eq!(three[1], "1");
    let p: Vec<f64> = three[3].split(';').map(|x| x.parse().unwrap()).collect();
    let p_bar: Vec<f64> = three[4].split(';').map(|x| x.parse().unwrap()).collect();
    assert_eq!((p.len(), p_bar.len()), (3, 3));
    assert!((p.iter().sum::<f64>() - 1.0).abs() < 1e-9);
    assert!((p_bar.iter().sum::<f64>() - 1.0).abs() < 1e-9);
}

#[test]
fn figure_two_table() {
    let (code, out, _) = run(&["figure", "--which", "2", "--dmin", "2", "--dmax", "5"]);
    assert_eq!(code, 0);
    assert!(out.contains("\nd,family,witness,p_star,method,x_lo,x_hi,y_lo,y_hi\n"));
    let rows = csv_rows(&out);
    assert_eq!(rows.len(), 4 * 6);
    for r in rows.iter().filter(|r| r[0] == "2" && r[1] == "psi") {
        assert_eq!(r[3], "0.75");
    }
    // no exclusive regions below four levels, both present from four on
    for r in &rows {
        let has_regions = r[5..].iter().all(|f| !f.is_empty());
        let none = r[5..].iter().all(|f| f.is_empty());
        if r[0] == "2" || r[0] == "3" {
            assert!(none, "{r:?}");
        } else {
            assert!(has_regions, "{r:?}");
        }
    }
}

#[test]
fn multipartite_canonical_states_violate() {
    for kind in ["ghz", "cluster"] {
        let v = run_json(&["multipartite", "--kind", kind, "--d", "3", "--n", "4", "--canonical"]);
        let tests = v["tests"].as_array().unwrap();
        assert_eq!(tests.len(), 3);
        for t in tests {
            assert!((t["value"].as_f64().unwrap() - 2.0).abs() < 1e-10);
            assert_eq!(t["violated"], true);
        }
    }
}

#[test]
fn multipartite_reads_state_files() {
    let dir = TempDir::new().unwrap();
    let file = dir.path().join("prod.json");
    // |0>|0> on two qubits: not entangled, and the product bound holds
    let text = r#"{"schema":"qwitness/1","d":2,"parties":2,"kind":"pure","re":[1,0,0,0],"im":[0,0,0,0]}"#;
    std::fs::write(&file, text).unwrap();
    let v = run_json(&["multipartite", "--kind", "ghz", "--d", "2", "--n", "2", "--state", path_str(&file), "--site", "2"]);
    assert_eq!(v["tests"][0]["site"], 2);
    assert!((v["tests"][0]["value"].as_f64().unwrap() - 1.0).abs() < 1e-12);
    assert_eq!(v["entangled"], false);
}

#[test]
fn simulate_is_deterministic_and_counts_are_row_major() {
    let args = ["simulate", "--noisy", "psi,0.9", "--d", "3", "--shots", "2001", "--seed", "17"];
    let (c1, a, _) = run(&args);
    let (c2, b, _) = run(&args);
    assert_eq!((c1, c2), (0, 0));
    assert_eq!(a, b);
    let v: Value = serde_json::from_str(&a).unwrap();
    let z = &v["z_record"];
    assert_eq!(z["shots"], 1001);
    assert_eq!(v["x_record"]["shots"], 1000);
    let counts: Vec<u64> = z["counts"].as_array().unwrap().iter().map(|c| c.as_u64().unwrap()).collect();
    assert_eq!(counts.len(), 9);
    assert_eq!(counts.iter().sum::<u64>(), 1001);
    assert_eq!(v["report"]["sigmas"], 5.0);

    let (_, other, _) = run(&["simulate", "--noisy", "psi,0.9", "--d", "3", "--shots", "2001", "--seed", "18"]);
    assert_ne!(a, other);
}

#[test]
fn simulate_certifies_mes() {
    let v = run_json(&["simulate", "--mes", "4", "--shots", "20000", "--seed", "3"]);
    assert_eq!(v["report"]["c_certified"], true);
    assert_eq!(v["report"]["r_certified"], true);
    assert_eq!(v["report"]["schmidt_lb"], 4);
}

#[test]
fn usage_errors_exit_two() {
    let cases: &[&[&str]] = &[
        &["bound"],
        &["bound", "--d", "3", "--bogus"],
        &["bound", "--d", "1"],
        &["bound", "--d", "4", "--weight", "1.5"],
        &["threshold", "--d", "3", "--family", "nope", "--witness", "c"],
        &["witness", "--bell", "1,0"],
        &["witness", "--mes", "3", "--d", "4"],
        &["witness"],
        &["figure", "--which", "3"],
        &["figure", "--which", "2", "--dmin", "5", "--dmax", "3"],
        &["multipartite", "--kind", "cluster", "--d", "3", "--n", "3", "--canonical", "--site", "1"],
        &["simulate", "--mes", "3", "--shots", "1", "--seed", "0"],
        &["frobnicate"],
    ];
    for args in cases {
        let (code, out, err) = run(args);
        assert_eq!(code, 2, "{args:?}: {err}");
        assert!(out.is_empty(), "{args:?}");
        assert_eq!(err.trim_end().lines().count(), 1, "{args:?}: {err}");
    }
}

#[test]
fn malformed_state_files_exit_two() {
    let dir = TempDir::new().unwrap();
    let bad = [
        ("garbage.json", "not json"),
        ("unnormalized.json", r#"{"d":2,"parties":2,"kind":"pure","re":[1,1,0,0],"im":[0,0,0,0]}"#),
        ("wrong_len.json", r#"{"d":2,"parties":2,"kind":"pure","re":[1,0,0],"im":[0,0,0]}"#),
        ("schema.json", r#"{"schema":"other/9","d":2,"parties":2,"kind":"pure","re":[1,0,0,0],"im":[0,0,0,0]}"#),
    ];
    for (name, text) in bad {
        let file = dir.path().join(name);
        std::fs::write(&file, text).unwrap();
        let (code, _, err) = run(&["witness", "--state", path_str(&file)]);
        assert_eq!(code, 2, "{name}: {err}");
    }
    let (code, _, _) = run(&["witness", "--state", "/nonexistent/state.json"]);
    assert_eq!(code, 2);
}

#[test]
fn size_cap_is_a_usage_error() {
    let (code, _, err) = run(&["multipartite", "--kind", "ghz", "--d", "5", "--n", "7", "--canonical"]);
    assert_eq!(code, 2, "{err}");
}

#[test]
fn help_exits_zero() {
    let (code, out, _) = run(&["--help"]);
    assert_eq!(code, 0);
    assert!(out.contains("threshold"));
}
