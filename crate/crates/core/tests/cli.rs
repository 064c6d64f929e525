use std::fs;
use std::process::{Command, Output};

fn bctk(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_bctk")).args(args).output().unwrap()
}

fn json(out: &Output) -> serde_json::Value {
    serde_json::from_slice(&out.stdout).unwrap()
}

#[test]
fn verify_writes_reproducible_reports() {
    let dir = tempfile::tempdir().unwrap();
    let (a, b) = (dir.path().join("a.json"), dir.path().join("b.json"));
    for path in [&a, &b] {
        let out = bctk(&["verify", "--suite", "probability", "--seed", "7", "--trials", "30", "--report", path.to_str().unwrap()]);
        assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
        assert_eq!(fs::read(path).unwrap(), out.stdout);
    }
    assert_eq!(fs::read(&a).unwrap(), fs::read(&b).unwrap());
    let report: serde_json::Value = serde_json::from_slice(&fs::read(&a).unwrap()).unwrap();
    assert_eq!(report["suite"], "probability");
    assert_eq!(report["seed"], 7);
    assert_eq!(report["failure_count"], 0);
}

#[test]
fn float_backend_passes_at_tolerance() {
    let out = bctk(&["verify", "--suite", "diagram", "--backend", "float", "--trials", "20", "--tol", "1e-12"]);
    assert_eq!(out.status.code(), Some(0));
    assert!(json(&out)["max_abs_dev"].as_f64().unwrap() <= 1e-12);
}

#[test]
fn injected_fault_is_caught() {
    let out = bctk(&["verify", "--suite", "swap", "--inject-fault", "corrupt-swap"]);
    assert_eq!(out.status.code(), Some(3));
    assert!(json(&out)["failure_count"].as_u64().unwrap() > 0);
    assert!(String::from_utf8_lossy(&out.stderr).contains("checks failed"));
}

#[test]
fn usage_errors_exit_one() {
    assert_eq!(bctk(&["verify", "--suite", "bogus"]).status.code(), Some(1));
    assert_eq!(bctk(&["frobnicate"]).status.code(), Some(1));
    assert_eq!(bctk(&["lct", "demo", "--d1", "1"]).status.code(), Some(1));
    let unwritable = bctk(&["verify", "--suite", "swap", "--trials", "1", "--report", "/nonexistent/dir/r.json"]);
    assert_eq!(unwritable.status.code(), Some(1));
}

#[test]
fn lct_commands() {
    let demo = bctk(&["lct", "demo"]);
    assert_eq!(demo.status.code(), Some(0));
    let v = json(&demo);
    assert_eq!(v["pairing"], serde_json::json!([1, 1]));

    let refute = bctk(&["lct", "refute"]);
    assert_eq!(refute.status.code(), Some(0));
    assert!(!json(&refute)["certificate"]["violations"].as_array().unwrap().is_empty());

    let sweep = bctk(&["lct", "refute", "--random", "50", "--seed", "3"]);
    assert_eq!(sweep.status.code(), Some(0));
    let s = json(&sweep);
    assert_eq!(s["refuted"], 50);
    assert_eq!(s["trace_identity_failures"], 0);

    let dir = tempfile::tempdir().unwrap();
    let model = dir.path().join("m.json");
    fs::write(&model, "not json").unwrap();
    assert_eq!(bctk(&["lct", "refute", "--model", model.to_str().unwrap()]).status.code(), Some(1));
}
