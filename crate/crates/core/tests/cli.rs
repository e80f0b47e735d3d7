use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use serde_json::Value;

const BIN: &str = env!("CARGO_BIN_EXE_iwasawa");

fn fixture(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("fixtures").join(name)
}

fn run(args: &[&str]) -> Output {
    Command::new(BIN).args(args).output().expect("binary runs")
}

fn scratch(name: &str, body: &str) -> PathBuf {
    let dir = std::env::temp_dir().join(format!("iwasawa-cli-{}", std::process::id()));
    std::fs::create_dir_all(&dir).unwrap();
    let p = dir.join(name);
    std::fs::write(&p, body).unwrap();
    p
}

fn json_of(out: &Output) -> Value {
    serde_json::from_slice(&out.stdout).expect("stdout is JSON")
}

fn orders(v: &Value) -> Vec<u64> {
    v["components"][0]["levels"].as_array().unwrap().iter().map(|l| l["x"].as_u64().unwrap()).collect()
}

#[test]
fn order_reports_documented_sequences() {
    let quad = fixture("quadratic_module.json");
    let out = run(&["order", "--input", quad.to_str().unwrap(), "--n-max", "3"]);
    assert_eq!(out.status.code(), Some(0));
    let v = json_of(&out);
    assert_eq!(orders(&v), [1, 4, 6, 8]);
    assert_eq!(v["schema"], "iwasawa-params/order/v1");
    assert_eq!(v["input_digest"].as_str().unwrap().len(), 64);

    let free = fixture("free_module.json");
    let v = json_of(&run(&["order", "--input", free.to_str().unwrap(), "--n-max", "3"]));
    assert_eq!(orders(&v), [1, 6, 27, 108]);
}

#[test]
fn output_is_deterministic() {
    for (cmd, file, extra) in [
        ("order", "mixed_module.json", vec!["--n-max", "4"]),
        ("fit", "mixed_module.json", vec!["--window", "2"]),
        ("arith", "c4_l5_tower_tame.json", vec!["--assume-leopoldt"]),
    ] {
        let path = fixture(file);
        let mut args = vec![cmd, "--input", path.to_str().unwrap()];
        args.extend(extra);
        let a = run(&args);
        let b = run(&args);
        assert_eq!(a.status.code(), Some(0), "{cmd}: {}", String::from_utf8_lossy(&a.stderr));
        assert_eq!(a.stdout, b.stdout, "{cmd}");
    }
}

#[test]
fn output_file_matches_stdout() {
    let quad = fixture("quadratic_module.json");
    let target = std::env::temp_dir().join(format!("iwasawa-out-{}.json", std::process::id()));
    let to_file = run(&["order", "--input", quad.to_str().unwrap(), "--output", target.to_str().unwrap()]);
    assert_eq!(to_file.status.code(), Some(0));
    assert!(to_file.stdout.is_empty());
    let stdout = run(&["order", "--input", quad.to_str().unwrap()]);
    assert_eq!(std::fs::read(&target).unwrap(), stdout.stdout);
    let _ = std::fs::remove_file(target);
}

#[test]
fn fit_reads_modules_and_order_reports() {
    let mixed = fixture("mixed_module.json");
    let v = json_of(&run(&["fit", "--input", mixed.to_str().unwrap(), "--window", "2"]));
    let fit = &v["components"]["unit"];
    assert_eq!((fit["rho"].as_i64(), fit["mu"].as_i64(), fit["lambda"].as_i64()), (Some(1), Some(2), Some(2)));
    assert_eq!(v["window"], 2);

    let free = fixture("free_module.json");
    let report = run(&["order", "--input", free.to_str().unwrap(), "--n-max", "6"]);
    let saved = scratch("free_orders.json", std::str::from_utf8(&report.stdout).unwrap());
    let v = json_of(&run(&["fit", "--input", saved.to_str().unwrap()]));
    let fit = &v["components"]["unit"];
    assert_eq!((fit["rho"].as_i64(), fit["mu"].as_i64(), fit["lambda"].as_i64(), fit["nu"].as_i64()), (Some(1), Some(0), Some(0), Some(0)));
}

#[test]
fn table_format() {
    let free = fixture("free_module.json");
    let out = run(&["order", "--input", free.to_str().unwrap(), "--n-max", "2", "--format", "table"]);
    let text = String::from_utf8(out.stdout).unwrap();
    let lines: Vec<&str> = text.lines().collect();
    assert_eq!(lines[0], "ell = 3, k = 1");
    assert!(lines[1].starts_with("component"));
    assert!(lines[3].contains("6") && lines[3].contains("[2x3]"));
    let last = lines[1].find("elementary").unwrap();
    assert!(lines[2..].iter().all(|l| l.find('[') == Some(last)), "{text}");
}

#[test]
fn exit_codes() {
    let bad = scratch("bad.json", "{\"ell\": 3");
    let out = run(&["order", "--input", bad.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("malformed"));

    let missing = run(&["order", "--input", "/nonexistent/iwasawa.json"]);
    assert_eq!(missing.status.code(), Some(2));

    let big = scratch("big.json", r#"{"ell":3,"components":[{"phi_label":"unit","f_list":[[3,0,0,0,1]]}]}"#);
    assert_eq!(run(&["order", "--input", big.to_str().unwrap(), "--n-max", "0"]).status.code(), Some(3));

    let mixed = fixture("mixed_module.json");
    assert_eq!(run(&["fit", "--input", mixed.to_str().unwrap()]).status.code(), Some(4));
    assert_eq!(run(&["fit", "--input", mixed.to_str().unwrap(), "--n-max", "2"]).status.code(), Some(2));

    let tower = fixture("c4_l5_tower.json");
    assert_eq!(run(&["arith", "--input", tower.to_str().unwrap()]).status.code(), Some(5));

    let text = std::fs::read_to_string(&tower).unwrap().replace("\"membership\": \"T\"", "\"membership\": [\"S\", \"T\"]");
    let both = scratch("both.json", &text);
    let out = run(&["arith", "--input", both.to_str().unwrap(), "--assume-leopoldt"]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("disjointness violated"));
}

#[test]
fn arith_fixture_values() {
    let tower = fixture("c4_l5_tower.json");
    let v = json_of(&run(&["arith", "--input", tower.to_str().unwrap(), "--assume-leopoldt"]));
    assert_eq!(v["special_case"], true);
    assert_eq!(v["rho"], serde_json::json!({"chi(1)": 1, "chi(3)": 1}));
    assert_eq!(v["mu"], serde_json::json!({}));
    assert_eq!(v["lambda"], serde_json::json!({"chi(0)": 1, "chi(1)": -1}));
}

#[test]
fn selfcheck_passes_and_detects_the_injected_fault() {
    let ok = run(&["selfcheck"]);
    assert_eq!(ok.status.code(), Some(0));
    let broken = run(&["selfcheck", "--inject-fault", "--format", "json"]);
    assert_eq!(broken.status.code(), Some(1));
    let v = json_of(&broken);
    let failed: Vec<&str> = v["suites"]
        .as_array()
        .unwrap()
        .iter()
        .filter(|s| s["status"] == "fail")
        .map(|s| s["name"].as_str().unwrap())
        .collect();
    assert_eq!(failed, ["elementary consistency"]);
}
