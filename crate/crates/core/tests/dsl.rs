use std::fs;
use std::path::PathBuf;
use std::process::Command;

use bctk::bct::process::Process;
use bctk::dsl::{compile, parse, pretty};
use bctk::Rational;

fn golden() -> Vec<(String, String)> {
    let dir = PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("tests/golden");
    let mut files: Vec<_> = fs::read_dir(&dir)
        .unwrap()
        .map(|e| e.unwrap().path())
        .filter(|p| p.extension().is_some_and(|x| x == "bct"))
        .collect();
    files.sort();
    files
        .into_iter()
        .map(|p| (p.file_name().unwrap().to_string_lossy().into_owned(), fs::read_to_string(&p).unwrap()))
        .collect()
}

fn normalise(text: &str) -> String {
    text.lines()
        .map(|l| l.split_whitespace().collect::<Vec<_>>().join(" "))
        .filter(|l| !l.is_empty())
        .collect::<Vec<_>>()
        .join("\n")
}

#[test]
fn golden_files_round_trip() {
    let files = golden();
    assert!(files.len() >= 5);
    for (name, text) in files {
        let ast = parse(&text).unwrap_or_else(|e| panic!("{name}: {e}"));
        assert_eq!(normalise(&pretty(&ast)), normalise(&text), "{name}");
    }
}

fn scalar(text: &str, name: &str) -> Rational {
    let prog = compile(text).unwrap();
    let ev = prog.evaluate(name).unwrap();
    assert!(ev.agree(), "{name}: backends differ by {}", ev.max_abs_dev);
    match ev.bct {
        Process::Scalar(p) => p,
        other => panic!("{name} is open: {}", other.kind()),
    }
}

#[test]
fn golden_values() {
    let files: std::collections::HashMap<_, _> = golden().into_iter().collect();
    assert_eq!(scalar(&files["pairing.bct"], "p"), Rational::new(1, 2));
    assert_eq!(scalar(&files["single.bct"], "c"), Rational::from(1));
    // The swapped product meets a bipartite effect: one half.
    assert_eq!(scalar(&files["swap.bct"], "p"), Rational::new(1, 2));
    assert_eq!(scalar(&files["merge.bct"], "merged"), Rational::from(1));
    assert_eq!(scalar(&files["merge.bct"], "round"), Rational::from(1));
    assert_eq!(scalar(&files["reversible.bct"], "p"), Rational::from(1));
}

#[test]
fn every_golden_evaluation_agrees() {
    for (name, text) in golden() {
        let prog = compile(&text).unwrap();
        for n in prog.evals() {
            let ev = prog.evaluate(n).unwrap();
            assert!(ev.agree(), "{name}/{n}");
        }
    }
}

fn bctk() -> Command {
    Command::new(env!("CARGO_BIN_EXE_bctk"))
}

#[test]
fn eval_command_prints_values() {
    let path = PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("tests/golden/pairing.bct");
    let out = bctk().arg("eval").arg(&path).args(["--name", "p"]).output().unwrap();
    assert_eq!(out.status.code(), Some(0));
    let v: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(v["name"], "p");
    assert_eq!(v["value"], serde_json::json!([1, 2]));
    assert_eq!(v["diff"], serde_json::json!(0.0));
}

#[test]
fn eval_command_rejects_bad_input() {
    let dir = tempfile::tempdir().unwrap();
    let empty = dir.path().join("empty.bct");
    fs::write(&empty, "").unwrap();
    assert_eq!(bctk().arg("eval").arg(&empty).output().unwrap().status.code(), Some(1));
    let broken = dir.path().join("broken.bct");
    fs::write(&broken, "system a = elem 2\nstate r : a = pure 1\ngate t : a -> a = id\ncircuit c = t ; r\n").unwrap();
    let out = bctk().arg("eval").arg(&broken).args(["--name", "c"]).output().unwrap();
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&out.stderr).contains("stage 2"));
    let missing = dir.path().join("missing.bct");
    assert_eq!(bctk().arg("eval").arg(&missing).output().unwrap().status.code(), Some(1));
}

#[test]
fn embed_command_dumps_images() {
    let dir = tempfile::tempdir().unwrap();
    let f = dir.path().join("g.bct");
    fs::write(
        &f,
        "system a = elem 2\nsystem aa = a * a\ngate i : a -> a = id\ngate s : aa -> aa = swap a a\ngate t : a -> a = atomic 1 -> 2 tau 1 w 1\n",
    )
    .unwrap();
    let dump = |g: &str| {
        let out = bctk().arg("embed").arg(&f).args(["--gate", g]).output().unwrap();
        assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
        serde_json::from_slice::<serde_json::Value>(&out.stdout).unwrap()
    };
    let id = dump("i");
    assert_eq!(id["image"]["map"]["in"], 4);
    let sw = dump("s");
    assert_eq!(sw["image"]["map"]["in"], 16);
    assert_eq!(sw["image"]["in_labels"].as_array().unwrap().len(), 16);
    // One atomic term 1 -> 2 with shift 1 moves (1, b) to (2, 1 - b).
    let t = dump("t");
    let entries = t["image"]["map"]["entries"].as_array().unwrap();
    let nonzero = entries.iter().filter(|e| **e != serde_json::json!([0, 1])).count();
    assert_eq!(nonzero, 2);
    assert_eq!(bctk().arg("embed").arg(&f).args(["--gate", "zz"]).output().unwrap().status.code(), Some(1));
}
