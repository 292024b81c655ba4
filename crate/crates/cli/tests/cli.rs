use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use tempfile::TempDir;

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_limhodge"))
}

fn run(dir: &Path, args: &[&str]) -> Output {
    bin().current_dir(dir).args(args).output().expect("binary runs")
}

fn code(o: &Output) -> i32 {
    o.status.code().expect("exit status")
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).expect("utf-8")
}

fn cycle_fixture(dir: &TempDir) -> PathBuf {
    let o = run(dir.path(), &["fixture", "cycle", "--components", "3", "-o", "cycle3.json"]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    dir.path().join("cycle3.json")
}

/// Negates every trace in a fixture file.
fn corrupt(path: &Path, out: &Path) {
    let mut v: serde_json::Value = serde_json::from_str(&std::fs::read_to_string(path).unwrap()).unwrap();
    for (_, st) in v["strata"].as_object_mut().unwrap() {
        for t in st["trace"].as_array_mut().unwrap() {
            let s = t.as_str().unwrap();
            *t = serde_json::Value::String(match s.strip_prefix('-') {
                Some(x) => x.to_string(),
                None => format!("-{s}"),
            });
        }
    }
    std::fs::write(out, serde_json::to_string_pretty(&v).unwrap()).unwrap();
}

#[test]
fn fixture_round_trip_validates() {
    let dir = TempDir::new().unwrap();
    cycle_fixture(&dir);
    let o = run(dir.path(), &["validate", "cycle3.json"]);
    assert_eq!(code(&o), 0);
    assert!(stdout(&o).contains("pass  triple point formula"));
}

#[test]
fn polarize_cycle_passes() {
    let dir = TempDir::new().unwrap();
    cycle_fixture(&dir);
    let o = run(dir.path(), &["polarize", "--strict", "cycle3.json"]);
    assert_eq!(code(&o), 0);
    let out = stdout(&o);
    assert!(out.contains("pass  HL-positivity P_1 at q=1"), "{out}");
    assert!(out.ends_with("verdict: pass\n"));
}

#[test]
fn strict_polarize_on_negated_trace_fails_with_witness() {
    let dir = TempDir::new().unwrap();
    let p = cycle_fixture(&dir);
    corrupt(&p, &dir.path().join("corrupted.json"));
    let o = run(dir.path(), &["polarize", "--strict", "corrupted.json"]);
    assert_eq!(code(&o), 2);
    let err = String::from_utf8_lossy(&o.stderr);
    assert!(err.contains("failed: HL-positivity P_1 at q=1: P_1 at q=1"), "{err}");
    let lenient = run(dir.path(), &["polarize", "corrupted.json"]);
    assert_eq!(code(&lenient), 0);
    assert!(stdout(&lenient).contains("FAIL  HL-positivity P_1 at q=1"));
    assert_eq!(code(&run(dir.path(), &["validate", "corrupted.json"])), 1);
}

#[test]
fn mhs_table_and_json() {
    let dir = TempDir::new().unwrap();
    cycle_fixture(&dir);
    let o = run(dir.path(), &["mhs", "cycle3.json"]);
    assert_eq!(code(&o), 0);
    let row = stdout(&o).lines().find(|l| l.starts_with("H^1 ")).map(str::to_string).unwrap();
    assert!(row.contains("w0:1 w2:1"), "{row}");
    let o = run(dir.path(), &["mhs", "--format", "json", "cycle3.json"]);
    let v: serde_json::Value = serde_json::from_str(&stdout(&o)).unwrap();
    assert_eq!(v["degrees"][1]["weights"], serde_json::json!({"0": 1, "2": 1}));
    assert_eq!(v["trace"], serde_json::json!(["1"]));
}

#[test]
fn pages_and_compare() {
    let dir = TempDir::new().unwrap();
    cycle_fixture(&dir);
    let o = run(dir.path(), &["e1", "--page", "both", "--format", "json", "--dump", "cycle3.json"]);
    assert_eq!(code(&o), 0);
    let v: serde_json::Value = serde_json::from_str(&stdout(&o)).unwrap();
    assert_eq!(v.as_array().unwrap().len(), 2);
    assert_eq!(v[0]["variant"], "A");
    assert!(v[1]["dump"].as_array().unwrap().iter().any(|c| !c["d1"].as_array().unwrap().is_empty()));
    let o = run(dir.path(), &["e2", "--page", "K", "cycle3.json"]);
    assert!(stdout(&o).starts_with("page K"));
    let o = run(dir.path(), &["compare", "--strict", "cycle3.json"]);
    assert_eq!(code(&o), 0);
    assert!(stdout(&o).contains("pass  E2(A) ≅ E2(K)"));
}

#[test]
fn output_is_deterministic_across_thread_counts() {
    let dir = TempDir::new().unwrap();
    let o = run(dir.path(), &["fixture", "product", "-o", "prod.json"]);
    assert_eq!(code(&o), 0);
    let with = |n: &str| {
        let o = bin().current_dir(dir.path()).env("LIMHODGE_THREADS", n).args(["polarize", "--format", "json", "prod.json"]).output().unwrap();
        assert_eq!(code(&o), 0);
        o.stdout
    };
    assert_eq!(with("1"), with("8"));
}

#[test]
fn exit_codes_for_bad_input() {
    let dir = TempDir::new().unwrap();
    assert_eq!(code(&run(dir.path(), &["mhs", "missing.json"])), 3);
    std::fs::write(dir.path().join("bad.json"), "{\"n\": 1}").unwrap();
    let o = run(dir.path(), &["validate", "bad.json"]);
    assert_eq!(code(&o), 1);
    assert!(!o.stderr.is_empty());
    assert_eq!(code(&run(dir.path(), &["frobnicate"])), 1);
    assert_eq!(code(&run(dir.path(), &["fixture", "cycle", "--components", "2"])), 1);
    let o = bin().current_dir(dir.path()).env("LIMHODGE_THREADS", "0").args(["fixture", "cycle"]).output().unwrap();
    assert_eq!(code(&o), 1);
    let o = run(dir.path(), &["fixture", "cycle", "-o", "no/such/dir/x.json"]);
    assert_eq!(code(&o), 3);
}
