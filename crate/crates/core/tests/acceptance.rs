//! End-to-end acceptance criteria. Each prints one line and the test fails
//! if any criterion is red.

use std::process::Command;
use std::time::{Duration, Instant};

use rayon::prelude::*;

use bctk::bct::tensor::{decompose, recompose, ReversibleSpec};
use bctk::dsl::{compile, random_corpus};
use bctk::lct::{annihilation_table, builtin_candidate, falsify, pairing_value, random_sweep, LctInstance};
use bctk::random::{self, trial_rng};
use bctk::systems::{dimension_rule, SystemShape};
use bctk::verify::{self, Checker, Faults, RunConfig, Suite};
use bctk::Rational;

struct Outcome {
    ok: bool,
    detail: String,
}

fn pass(detail: impl Into<String>) -> Outcome {
    Outcome { ok: true, detail: detail.into() }
}

fn verdict(ok: bool, detail: impl Into<String>) -> Outcome {
    Outcome { ok, detail: detail.into() }
}

fn checker_outcome(ck: &Checker<Rational>) -> Outcome {
    verdict(ck.failure_count() == 0, format!("{} checks, {} failures", ck.checks(), ck.failure_count()))
}

fn criterion_1() -> Outcome {
    // Independent oracle: count ontic states as 2^(p-1) * prod n and compare
    // with the rule folded over the factors.
    let mut cases = 0;
    for n in 1..=6usize {
        for m in 1..=6usize {
            let expect = if n == 1 { m } else if m == 1 { n } else { 2 * n * m };
            if dimension_rule(n, m) != expect {
                return verdict(false, format!("rule({n},{m}) = {}", dimension_rule(n, m)));
            }
            cases += 1;
            if n >= 2 && m >= 2 {
                let s = SystemShape::new(vec![n, m]).unwrap();
                if s.bct_dim() != 2 * n * m || s.bct_dim() != dimension_rule(n, m) {
                    return verdict(false, format!("shape ({n},{m}) dim {}", s.bct_dim()));
                }
                for k in 2..=4usize {
                    let t = SystemShape::new(vec![n, m, k]).unwrap();
                    if t.bct_dim() != 4 * n * m * k || t.bct_dim() != dimension_rule(s.bct_dim(), k) {
                        return verdict(false, format!("shape ({n},{m},{k}) dim {}", t.bct_dim()));
                    }
                    cases += 1;
                }
            }
        }
    }
    pass(format!("{cases} cases"))
}

fn criterion_2() -> Outcome {
    let mut ck = Checker::<Rational>::new(0.0);
    verify::pairing_tables(3, &mut ck);
    checker_outcome(&ck)
}

fn criterion_3() -> Outcome {
    for k in 0..500u64 {
        let mut rng = trial_rng(3, k);
        let a = random::shape(&mut rng, 4, 2, 256);
        let b = random::shape(&mut rng, 4, 2, 256);
        let flag = k % 2 == 0;
        let t = random::tensor(&mut rng, &a, &b, flag);
        if recompose(&a, &b, &decompose(&t)).ok().as_ref() != Some(&t) {
            return verdict(false, format!("tensor {k} does not recompose"));
        }
    }
    let shapes: Vec<SystemShape> = [vec![2], vec![3], vec![2, 2]].into_iter().map(|d| SystemShape::new(d).unwrap()).collect();
    match verify::collision_search(&shapes, 2) {
        Ok(s) => verdict(s.collisions.is_empty(), format!("500 tensors, {} probe cases, {} collisions", s.cases, s.collisions.len())),
        Err(e) => verdict(false, e.to_string()),
    }
}

fn criterion_4() -> Outcome {
    let cfg = RunConfig { trials: 200, max_dim: 4, ..RunConfig::default() };
    let report = verify::run(Suite::All, &cfg);
    verdict(report.passed(), format!("{} checks, {} failures", report.checks, report.failure_count))
}

fn criterion_5() -> Outcome {
    let mut ck = Checker::<Rational>::new(0.0);
    verify::nu_pinning(3, &mut ck);
    verify::composite_atomicity(2, 3, &mut ck);
    checker_outcome(&ck)
}

fn permutations(n: usize) -> Vec<Vec<usize>> {
    if n == 0 {
        return vec![vec![]];
    }
    let mut out = Vec::new();
    for p in permutations(n - 1) {
        for pos in 0..n {
            let mut q = p.clone();
            q.insert(pos, n);
            out.push(q);
        }
    }
    out
}

fn criterion_6() -> Outcome {
    let specs: Vec<ReversibleSpec> = (2..=6usize)
        .flat_map(|n| {
            permutations(n).into_iter().flat_map(move |p| {
                (0..1u32 << n).map(move |mask| {
                    let bits = (0..n).map(|i| ((mask >> i) & 1) as u8).collect();
                    ReversibleSpec::new(p.clone(), bits).unwrap()
                })
            })
        })
        .collect();
    let count = specs.len();
    let (checks, failures) = specs
        .par_chunks(512)
        .map(|chunk| {
            let mut ck = Checker::<Rational>::new(0.0);
            for s in chunk {
                verify::check_reversible(s, &mut ck);
            }
            (ck.checks(), ck.failure_count())
        })
        .reduce(|| (0, 0), |a, b| (a.0 + b.0, a.1 + b.1));
    verdict(failures == 0, format!("{count} specs, {checks} checks, {failures} failures"))
}

fn criterion_7() -> Outcome {
    let mut ck = Checker::<Rational>::new(0.0);
    verify::swap_relation(3, Faults::default(), &mut ck);
    checker_outcome(&ck)
}

fn criterion_8() -> Outcome {
    let inst = LctInstance::default();
    let table = annihilation_table(&inst);
    if table.iter().any(|(_, _, v)| *v != Rational::from(0)) {
        return verdict(false, "annihilation table has a nonzero entry");
    }
    let v = pairing_value(&inst, &inst.default_beta()).unwrap();
    if v != Rational::from(1) {
        return verdict(false, format!("pairing value {v}"));
    }
    let cert = falsify(&builtin_candidate(&inst), &inst).unwrap();
    if cert.is_empty() || !cert.trace_identity_holds {
        return verdict(false, "builtin candidate not refuted");
    }
    let sweep = random_sweep(&inst, 8, 1000).unwrap();
    verdict(
        sweep.refuted == sweep.candidates && sweep.trace_identity_failures == 0,
        format!("{}/{} refuted, {} trace failures", sweep.refuted, sweep.candidates, sweep.trace_identity_failures),
    )
}

fn criterion_9() -> Outcome {
    let corpus = random_corpus(9, 100, 3);
    let mut worst = 0.0f64;
    for (k, text) in corpus.iter().enumerate() {
        let ev = match compile(text).map_err(bctk::Error::from).and_then(|p| p.evaluate("main")) {
            Ok(ev) => ev,
            Err(e) => return verdict(false, format!("circuit {k}: {e}")),
        };
        worst = worst.max(ev.max_abs_dev);
        if !ev.agree() {
            return verdict(false, format!("circuit {k} differs by {}", ev.max_abs_dev));
        }
    }
    pass(format!("100 circuits, max deviation {worst:e}"))
}

fn criterion_10() -> Outcome {
    let bin = env!("CARGO_BIN_EXE_bctk");
    let out = Command::new(bin)
        .args(["verify", "--suite", "diagram", "--inject-fault", "corrupt-swap", "--trials", "20"])
        .output()
        .unwrap();
    let report: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap_or_default();
    let witnesses = report["failures"].as_array().map_or(0, Vec::len);
    if out.status.code() != Some(3) || witnesses == 0 {
        return verdict(false, format!("corrupted swap: exit {:?}, {witnesses} witnesses", out.status.code()));
    }
    let dir = tempfile::tempdir().unwrap();
    let model = dir.path().join("fabricated.json");
    let fabricated = serde_json::json!({
        "L1": 1, "L2": 2,
        "xi_beta": [[1, 2], [1, 2]],
        "xi_b": [[0, 1], [0, 1]],
        "theory_pairing": [0, 1],
    });
    std::fs::write(&model, fabricated.to_string()).unwrap();
    let out = Command::new(bin).args(["lct", "refute", "--model"]).arg(&model).output().unwrap();
    verdict(
        out.status.code() == Some(4),
        format!("corrupted swap exit 3 with {witnesses} witnesses, fabricated model exit {:?}", out.status.code()),
    )
}

#[test]
fn acceptance_criteria() {
    let criteria: [(fn() -> Outcome, u64); 10] = [
        (criterion_1, 1),
        (criterion_2, 5),
        (criterion_3, 30),
        (criterion_4, 60),
        (criterion_5, 30),
        (criterion_6, 5),
        (criterion_7, 10),
        (criterion_8, 30),
        (criterion_9, 30),
        (criterion_10, 30),
    ];
    let mut red = Vec::new();
    for (k, (run, budget)) in criteria.iter().enumerate() {
        let start = Instant::now();
        let out = run();
        let took = start.elapsed();
        let in_time = took <= Duration::from_secs(*budget);
        let ok = out.ok && in_time;
        println!(
            "criterion {}: {} ({}; {:.2}s of {}s)",
            k + 1,
            if ok { "PASS" } else { "FAIL" },
            out.detail,
            took.as_secs_f64(),
            budget
        );
        if !ok {
            red.push(k + 1);
        }
    }
    assert!(red.is_empty(), "failing criteria: {red:?}");
}
