//! Consistency suites for the ontological model.
//!
//! Each suite combines an exhaustive part at small dimensions with seeded
//! random trials. Trials run in parallel, each on its own generator stream,
//! and are merged in trial order, so a report depends only on the config.
//! Mathematical failures are recorded with witnesses rather than raised.

use std::fmt;
use std::marker::PhantomData;
use std::path::PathBuf;
use std::str::FromStr;

use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

use crate::bct::process::Process;
use crate::bct::state::{
    deterministic_effect, pair, par_effects, par_states, point_effect, point_state, BctEffect, BctState,
};
use crate::bct::tensor::{
    compose_par, decompose, identity, identity_par, nu, par_with_identity, recompose, reversible, swap, AtomicTerm,
    Instrument, ReversibleSpec, TransformationTensor,
};
use crate::classical::{permutation_map, ClassicalMap};
use crate::error::{Error, Result};
use crate::ontic::{block_swap, mu, recover_coefficients, xi_effect, xi_process, xi_state, xi_system, xi_transformation};
use crate::random;
use crate::scalar::{Backend, Rational, Scalar, DEFAULT_TOLERANCE};
use crate::systems::{
    all_labels, flatten_label, join_label, q_decode, q_encode, reassoc_label, unflatten_label, unreassoc_label,
    LeftNested, PureLabel, SystemShape,
};

const MAX_ONTIC: usize = 64;
const MAX_RECORDED_FAILURES: usize = 20;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Suite {
    Linearity,
    Diagram,
    Probability,
    Determinacy,
    Atomicity,
    Swap,
    Codec,
    All,
}

impl Suite {
    pub const EACH: [Suite; 7] = [
        Suite::Linearity,
        Suite::Diagram,
        Suite::Probability,
        Suite::Determinacy,
        Suite::Atomicity,
        Suite::Swap,
        Suite::Codec,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Suite::Linearity => "linearity",
            Suite::Diagram => "diagram",
            Suite::Probability => "probability",
            Suite::Determinacy => "determinacy",
            Suite::Atomicity => "atomicity",
            Suite::Swap => "swap",
            Suite::Codec => "codec",
            Suite::All => "all",
        }
    }

    fn stream_base(self) -> u64 {
        (Suite::EACH.iter().position(|&s| s == self).unwrap_or(7) as u64 + 1) << 32
    }
}

impl fmt::Display for Suite {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Suite {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Suite::EACH
            .into_iter()
            .chain([Suite::All])
            .find(|x| x.name() == s)
            .ok_or_else(|| Error::InvalidSystem(format!("unknown suite `{s}`")))
    }
}

/// Deliberate corruptions, for negative controls.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct Faults {
    /// Replace the swap under test by one whose shift is always zero.
    pub corrupt_swap: bool,
}

#[derive(Clone, Debug, PartialEq)]
pub struct RunConfig {
    pub seed: u64,
    pub trials: usize,
    pub max_dim: usize,
    pub backend: Backend,
    /// Only used by the float backend.
    pub tol: f64,
    pub report_path: Option<PathBuf>,
    pub faults: Faults,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            seed: 0,
            trials: 200,
            max_dim: 4,
            backend: Backend::Rational,
            tol: DEFAULT_TOLERANCE,
            report_path: None,
            faults: Faults::default(),
        }
    }
}

impl RunConfig {
    fn tolerance(&self) -> f64 {
        match self.backend {
            Backend::Rational => 0.0,
            Backend::Float => self.tol,
        }
    }

    /// Factor dimension bound for the exhaustive parts.
    fn small_dim(&self) -> usize {
        self.max_dim.clamp(2, 3)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Failure {
    pub witness: Value,
    pub lhs: Value,
    pub rhs: Value,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SuiteSummary {
    pub suite: String,
    pub checks: usize,
    pub failure_count: usize,
    pub max_abs_dev: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Report {
    pub suite: String,
    pub seed: u64,
    pub trials: usize,
    pub backend: Backend,
    pub checks: usize,
    pub failure_count: usize,
    pub failures: Vec<Failure>,
    pub max_abs_dev: f64,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub suites: Vec<SuiteSummary>,
}

impl Report {
    pub fn passed(&self) -> bool {
        self.failure_count == 0
    }

    pub fn to_json_string(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serialises")
    }
}

/// Accumulates comparisons for one trial or one exhaustive sweep.
pub struct Checker<S> {
    tol: f64,
    trial: Option<usize>,
    checks: usize,
    failure_count: usize,
    failures: Vec<Failure>,
    max_dev: f64,
    _scalar: PhantomData<S>,
}

impl<S: Scalar> Checker<S> {
    pub fn new(tol: f64) -> Self {
        Self { tol, trial: None, checks: 0, failure_count: 0, failures: Vec::new(), max_dev: 0.0, _scalar: PhantomData }
    }

    fn for_trial(tol: f64, trial: usize) -> Self {
        Self { trial: Some(trial), ..Self::new(tol) }
    }

    pub fn checks(&self) -> usize {
        self.checks
    }

    pub fn failure_count(&self) -> usize {
        self.failure_count
    }

    pub fn failures(&self) -> &[Failure] {
        &self.failures
    }

    pub fn max_abs_dev(&self) -> f64 {
        self.max_dev
    }

    pub fn passed(&self) -> bool {
        self.failure_count == 0
    }

    fn fail(&mut self, mut witness: Value, lhs: Value, rhs: Value) {
        self.failure_count += 1;
        if self.failures.len() < MAX_RECORDED_FAILURES {
            if let (Some(k), Some(obj)) = (self.trial, witness.as_object_mut()) {
                obj.insert("trial".into(), json!(k));
            }
            self.failures.push(Failure { witness, lhs, rhs });
        }
    }

    pub fn maps(&mut self, witness: impl FnOnce() -> Value, lhs: &ClassicalMap<S>, rhs: &ClassicalMap<S>) {
        self.checks += 1;
        match lhs.max_abs_dev(rhs) {
            None => self.fail(
                witness(),
                json!({ "shape": [lhs.out_dim(), lhs.in_dim()] }),
                json!({ "shape": [rhs.out_dim(), rhs.in_dim()] }),
            ),
            Some(dev) => {
                self.max_dev = self.max_dev.max(dev);
                if let Some((o, i)) = lhs.first_difference(rhs, self.tol) {
                    self.fail(
                        witness(),
                        json!({ "entry": [o, i], "value": lhs.get(o, i).to_json() }),
                        json!({ "entry": [o, i], "value": rhs.get(o, i).to_json() }),
                    );
                }
            }
        }
    }

    pub fn scalars(&mut self, witness: impl FnOnce() -> Value, lhs: &S, rhs: &S) {
        self.checks += 1;
        self.max_dev = self.max_dev.max(lhs.abs_dev(rhs));
        if !lhs.close(rhs, self.tol) {
            self.fail(witness(), lhs.to_json(), rhs.to_json());
        }
    }

    pub fn holds(&mut self, witness: impl FnOnce() -> Value, ok: bool, detail: impl FnOnce() -> (Value, Value)) {
        self.checks += 1;
        if !ok {
            let (lhs, rhs) = detail();
            self.fail(witness(), lhs, rhs);
        }
    }

    pub fn equal<T: PartialEq + fmt::Debug>(&mut self, witness: impl FnOnce() -> Value, lhs: &T, rhs: &T) {
        self.holds(witness, lhs == rhs, || (json!(format!("{lhs:?}")), json!(format!("{rhs:?}"))));
    }

    /// Unwraps a result, recording an error as a failure.
    pub fn ok<T>(&mut self, witness: impl FnOnce() -> Value, r: Result<T>) -> Option<T> {
        match r {
            Ok(v) => Some(v),
            Err(e) => {
                self.checks += 1;
                self.fail(witness(), json!({ "error": e.to_string() }), Value::Null);
                None
            }
        }
    }

    pub fn merge(&mut self, other: Checker<S>) {
        self.checks += other.checks;
        self.failure_count += other.failure_count;
        self.max_dev = self.max_dev.max(other.max_dev);
        let room = MAX_RECORDED_FAILURES.saturating_sub(self.failures.len());
        self.failures.extend(other.failures.into_iter().take(room));
    }

    fn into_report(self, suite: &str, seed: u64, trials: usize) -> Report {
        Report {
            suite: suite.to_string(),
            seed,
            trials,
            backend: S::BACKEND,
            checks: self.checks,
            failure_count: self.failure_count,
            failures: self.failures,
            max_abs_dev: self.max_dev,
            suites: Vec::new(),
        }
    }
}

/// Runs a suite under the configured backend.
pub fn run(suite: Suite, cfg: &RunConfig) -> Report {
    match cfg.backend {
        Backend::Rational => run_with::<Rational>(suite, cfg),
        Backend::Float => run_with::<f64>(suite, cfg),
    }
}

pub fn run_with<S: Scalar>(suite: Suite, cfg: &RunConfig) -> Report {
    if suite == Suite::All {
        let reports: Vec<Report> = Suite::EACH.iter().map(|&s| run_with::<S>(s, cfg)).collect();
        let mut failures = Vec::new();
        for r in &reports {
            for f in &r.failures {
                if failures.len() < MAX_RECORDED_FAILURES {
                    let mut f = f.clone();
                    if let Some(obj) = f.witness.as_object_mut() {
                        obj.insert("suite".into(), json!(r.suite));
                    }
                    failures.push(f);
                }
            }
        }
        return Report {
            suite: "all".into(),
            seed: cfg.seed,
            trials: cfg.trials,
            backend: S::BACKEND,
            checks: reports.iter().map(|r| r.checks).sum(),
            failure_count: reports.iter().map(|r| r.failure_count).sum(),
            failures,
            max_abs_dev: reports.iter().map(|r| r.max_abs_dev).fold(0.0, f64::max),
            suites: reports
                .iter()
                .map(|r| SuiteSummary {
                    suite: r.suite.clone(),
                    checks: r.checks,
                    failure_count: r.failure_count,
                    max_abs_dev: r.max_abs_dev,
                })
                .collect(),
        };
    }
    let tol = cfg.tolerance();
    let mut acc = Checker::<S>::new(tol);
    exhaustive(suite, cfg, &mut acc);
    let per_trial: Vec<Checker<S>> = (0..cfg.trials)
        .into_par_iter()
        .map(|k| {
            let mut rng = random::trial_rng(cfg.seed, suite.stream_base() | k as u64);
            let mut ck = Checker::for_trial(tol, k);
            trial(suite, cfg, &mut rng, &mut ck);
            ck
        })
        .collect();
    for ck in per_trial {
        acc.merge(ck);
    }
    acc.into_report(suite.name(), cfg.seed, cfg.trials)
}

fn exhaustive<S: Scalar>(suite: Suite, cfg: &RunConfig, ck: &mut Checker<S>) {
    let d = cfg.small_dim();
    match suite {
        Suite::Probability => pairing_tables(d, ck),
        Suite::Atomicity => {
            nu_pinning(d, ck);
            composite_atomicity(2, d, ck);
        }
        Suite::Swap => swap_relation(d, cfg.faults, ck),
        Suite::Codec => codec_bijectivity(4, d, ck),
        Suite::Diagram => {
            for n in 2..=d {
                for m in 2..=d {
                    let (a, b) = (elem(n), elem(m));
                    check_swap_image(&a, &b, cfg.faults, ck);
                    check_identity_image(&a.compose(&b), ck);
                }
            }
        }
        Suite::Determinacy => {
            for n in 2..=d.max(3) {
                let z = TransformationTensor::<S>::zero(elem(n), elem(n)).expect("non-trivial");
                if let Some(img) = ck.ok(|| json!({ "case": "null" }), xi_transformation(&z)) {
                    ck.holds(|| json!({ "case": "null", "n": n }), img.map.is_zero(), || (json!("nonzero"), json!("zero")));
                }
            }
        }
        Suite::Linearity | Suite::All => {}
    }
}

fn trial<S: Scalar>(suite: Suite, cfg: &RunConfig, rng: &mut impl Rng, ck: &mut Checker<S>) {
    match suite {
        Suite::Linearity => linearity_trial(cfg, rng, ck),
        Suite::Diagram => diagram_trial(cfg, rng, ck),
        Suite::Probability => probability_trial(cfg, rng, ck),
        Suite::Determinacy => determinacy_trial(cfg, rng, ck),
        Suite::Atomicity => atomicity_trial(cfg, rng, ck),
        Suite::Swap => swap_trial(cfg, rng, ck),
        Suite::Codec => codec_trial(cfg, rng, ck),
        Suite::All => {}
    }
}

fn elem(n: usize) -> SystemShape {
    SystemShape::elementary(n).expect("n >= 2")
}

fn shape_json(s: &SystemShape) -> Value {
    json!(s.elems())
}

fn pick(rng: &mut impl Rng, cfg: &RunConfig, cap: usize) -> SystemShape {
    random::shape(rng, cfg.max_dim, 3, cap.max(4))
}

/// A pair of shapes whose composite stays within the ontic budget.
fn pick_pair(rng: &mut impl Rng, cfg: &RunConfig) -> (SystemShape, SystemShape) {
    let a = pick(rng, cfg, 16);
    let b = pick(rng, cfg, MAX_ONTIC / a.ontic_dim());
    (a, b)
}

fn xi_map<S: Scalar>(t: &TransformationTensor<S>) -> Result<ClassicalMap<S>> {
    Ok(xi_transformation(t)?.map)
}

fn xi_st<S: Scalar>(r: &BctState<S>) -> Result<ClassicalMap<S>> {
    Ok(xi_state(r)?.map)
}

fn xi_ef<S: Scalar>(e: &BctEffect<S>) -> Result<ClassicalMap<S>> {
    Ok(xi_effect(e)?.map)
}

/// The swap whose image is checked; a fault replaces every shift by zero.
pub fn swap_under_test<S: Scalar>(a: &SystemShape, b: &SystemShape, faults: Faults) -> Result<TransformationTensor<S>> {
    let good = swap::<S>(a, b)?;
    if !faults.corrupt_swap {
        return Ok(good);
    }
    TransformationTensor::new(
        good.in_shape().clone(),
        good.out_shape().clone(),
        good.terms().map(|t| AtomicTerm::new(t.input, t.output, 0, t.weight)),
    )
}

// ---- linearity -------------------------------------------------------------

fn linearity_trial<S: Scalar>(cfg: &RunConfig, rng: &mut impl Rng, ck: &mut Checker<S>) {
    let (a, b) = (pick(rng, cfg, MAX_ONTIC), pick(rng, cfg, MAX_ONTIC));
    let w = || json!({ "case": "linearity" });
    let t1: TransformationTensor<S> = { let flag = rng.gen_bool(0.5); random::tensor(rng, &a, &b, flag) }.convert();
    let t2: TransformationTensor<S> = { let flag = rng.gen_bool(0.5); random::tensor(rng, &a, &b, flag) }.convert();
    let d: i64 = rng.gen_range(2..=12);
    let k = rng.gen_range(0..=d);
    let (p, q) = (S::from_ratio(k, d), S::from_ratio(rng.gen_range(0..=d - k), d));
    let wit = || json!({ "case": "linear combination", "in": shape_json(&a), "out": shape_json(&b) });
    let Some(mix) = ck.ok(w, t1.scale(&p).add(&t2.scale(&q))) else { return };
    if let (Some(lhs), Some(x1), Some(x2)) = (ck.ok(w, xi_map(&mix)), ck.ok(w, xi_map(&t1)), ck.ok(w, xi_map(&t2))) {
        if let Some(rhs) = ck.ok(w, x1.scale(&p).add(&x2.scale(&q))) {
            ck.maps(wit, &lhs, &rhs);
        }
        // Coefficients are read back from the fused column (i, 0).
        if let Some(img) = ck.ok(w, xi_transformation(&t1)) {
            if let Some(rec) = ck.ok(w, recover_coefficients(&img, &a, &b)) {
                let direct: Vec<_> = decompose(&t1).into_iter().map(|t| (t.input, t.output, t.tau, t.weight)).collect();
                ck.equal(|| json!({ "case": "coefficient recovery" }), &rec, &direct);
            }
            // Column sums of the image are the row sums of the coefficients.
            let sums = x1.column_sums();
            let rows = t1.row_sums();
            let space = xi_system(&a);
            for (col, s) in sums.iter().enumerate() {
                if let Some((qq, _)) = ck.ok(w, space.fuse(col)) {
                    ck.scalars(|| json!({ "case": "column sum", "column": col }), s, &rows[qq - 1]);
                }
            }
        }
    }
    if let Some(back) = ck.ok(w, recompose(&a, &b, &decompose(&t1))) {
        ck.equal(|| json!({ "case": "recompose" }), &back, &t1);
    }

    let (r1, r2): (BctState<S>, BctState<S>) =
        (random::state(rng, &a, false).convert(), random::state(rng, &a, false).convert());
    let half = S::half();
    let mix_state = BctState::from_raw(
        a.clone(),
        r1.weights().iter().zip(r2.weights()).map(|(x, y)| half.clone() * x.clone() + half.clone() * y.clone()).collect(),
    );
    if let (Some(l), Some(x1), Some(x2)) = (ck.ok(w, xi_st(&mix_state)), ck.ok(w, xi_st(&r1)), ck.ok(w, xi_st(&r2))) {
        if let Some(r) = ck.ok(w, x1.scale(&half).add(&x2.scale(&half))) {
            ck.maps(|| json!({ "case": "state mixture", "shape": shape_json(&a) }), &l, &r);
        }
    }
    let (e1, e2): (BctEffect<S>, BctEffect<S>) = (random::effect(rng, &b).convert(), random::effect(rng, &b).convert());
    let mix_eff = BctEffect::from_raw(
        b.clone(),
        e1.weights().iter().zip(e2.weights()).map(|(x, y)| half.clone() * x.clone() + half.clone() * y.clone()).collect(),
    );
    if let (Some(l), Some(x1), Some(x2)) = (ck.ok(w, xi_ef(&mix_eff)), ck.ok(w, xi_ef(&e1)), ck.ok(w, xi_ef(&e2))) {
        if let Some(r) = ck.ok(w, x1.scale(&half).add(&x2.scale(&half))) {
            ck.maps(|| json!({ "case": "effect mixture", "shape": shape_json(&b) }), &l, &r);
        }
    }
}

// ---- diagram preservation --------------------------------------------------

/// `xi(t2 . t1) = xi(t2) xi(t1)`.
pub fn check_diagram_seq<S: Scalar>(t1: &TransformationTensor<S>, t2: &TransformationTensor<S>, ck: &mut Checker<S>) {
    let w = || json!({ "case": "sequential", "in": shape_json(t1.in_shape()), "mid": shape_json(t1.out_shape()), "out": shape_json(t2.out_shape()) });
    let (Some(c), Some(x1), Some(x2)) = (ck.ok(w, t1.then(t2)), ck.ok(w, xi_map(t1)), ck.ok(w, xi_map(t2))) else {
        return;
    };
    if let (Some(lhs), Some(rhs)) = (ck.ok(w, xi_map(&c)), ck.ok(w, x1.then(&x2))) {
        ck.maps(w, &lhs, &rhs);
    }
}

/// `xi(t1 (x) t2) = xi(t1) (x) xi(t2)`.
pub fn check_diagram_par<S: Scalar>(t1: &TransformationTensor<S>, t2: &TransformationTensor<S>, ck: &mut Checker<S>) {
    let w = || json!({ "case": "parallel", "left": shape_json(t1.in_shape()), "right": shape_json(t2.in_shape()) });
    let (Some(c), Some(x1), Some(x2)) = (ck.ok(w, compose_par(t1, t2)), ck.ok(w, xi_map(t1)), ck.ok(w, xi_map(t2))) else {
        return;
    };
    if let Some(lhs) = ck.ok(w, xi_map(&c)) {
        ck.maps(w, &lhs, &x1.kron(&x2));
    }
    // The other interleaving, computed independently.
    if let (Some(first), Some(second)) = (ck.ok(w, par_with_identity(t1, t2.in_shape())), ck.ok(w, identity_par(t1.out_shape(), t2))) {
        if let Some(other) = ck.ok(w, first.then(&second)) {
            ck.equal(|| json!({ "case": "interchange", "left": shape_json(t1.in_shape()), "right": shape_json(t2.in_shape()) }), &other, &c);
        }
    }
}

pub fn check_identity_image<S: Scalar>(s: &SystemShape, ck: &mut Checker<S>) {
    let w = || json!({ "case": "identity", "shape": shape_json(s) });
    if let Some(id) = ck.ok(w, identity::<S>(s)) {
        if let Some(img) = ck.ok(w, xi_map(&id)) {
            ck.maps(w, &img, &ClassicalMap::identity(s.ontic_dim()));
        }
    }
}

pub fn check_swap_image<S: Scalar>(a: &SystemShape, b: &SystemShape, faults: Faults, ck: &mut Checker<S>) {
    let w = || json!({ "case": "swap image", "left": shape_json(a), "right": shape_json(b) });
    let (Some(sw), Some(expected)) = (ck.ok(w, swap_under_test::<S>(a, b, faults)), ck.ok(w, block_swap::<S>(a, b))) else {
        return;
    };
    if let Some(img) = ck.ok(w, xi_map(&sw)) {
        ck.maps(w, &img, &expected);
    }
}

/// Both compositions of two processes against the classical ones.
pub fn check_process_pair<S: Scalar>(p: &Process<S>, q: &Process<S>, ck: &mut Checker<S>) {
    let w = || json!({ "case": "process", "left": p.kind(), "right": q.kind(), "left_in": shape_json(&p.input()), "right_in": shape_json(&q.input()) });
    let (Some(xp), Some(xq)) = (ck.ok(w, xi_process(p)), ck.ok(w, xi_process(q))) else { return };
    if let Some(par) = ck.ok(w, p.beside(q)) {
        if let Some(img) = ck.ok(w, xi_process(&par)) {
            ck.maps(w, &img, &xp.kron(&xq));
        }
    }
    if p.output() == q.input() {
        if let Some(seq) = ck.ok(w, p.then(q)) {
            if let (Some(img), Some(rhs)) = (ck.ok(w, xi_process(&seq)), ck.ok(w, xp.then(&xq))) {
                ck.maps(w, &img, &rhs);
            }
        }
    }
}

fn random_process<S: Scalar>(rng: &mut impl Rng, input: &SystemShape, output: &SystemShape) -> Process<S> {
    match (input.is_trivial(), output.is_trivial()) {
        (true, true) => Process::Scalar(S::from_ratio(rng.gen_range(0..=4), 4)),
        (true, false) => Process::State({ let flag = rng.gen_bool(0.5); random::state(rng, output, flag) }.convert()),
        (false, true) => Process::Effect(random::effect(rng, input).convert()),
        (false, false) => Process::Map({ let flag = rng.gen_bool(0.5); random::tensor(rng, input, output, flag) }.convert()),
    }
}

fn maybe_trivial(rng: &mut impl Rng, s: SystemShape) -> SystemShape {
    if rng.gen_bool(0.3) {
        SystemShape::trivial()
    } else {
        s
    }
}

fn diagram_trial<S: Scalar>(cfg: &RunConfig, rng: &mut impl Rng, ck: &mut Checker<S>) {
    let (a, b, c) = (pick(rng, cfg, MAX_ONTIC), pick(rng, cfg, MAX_ONTIC), pick(rng, cfg, MAX_ONTIC));
    let t1: TransformationTensor<S> = { let flag = rng.gen_bool(0.5); random::tensor(rng, &a, &b, flag) }.convert();
    let t2: TransformationTensor<S> = { let flag = rng.gen_bool(0.5); random::tensor(rng, &b, &c, flag) }.convert();
    check_diagram_seq(&t1, &t2, ck);

    let (a1, c1) = pick_pair(rng, cfg);
    let (b1, d1) = pick_pair(rng, cfg);
    let u1: TransformationTensor<S> = { let flag = rng.gen_bool(0.5); random::tensor(rng, &a1, &b1, flag) }.convert();
    let u2: TransformationTensor<S> = { let flag = rng.gen_bool(0.5); random::tensor(rng, &c1, &d1, flag) }.convert();
    check_diagram_par(&u1, &u2, ck);
    check_identity_image(&a, ck);
    check_swap_image(&a1, &c1, cfg.faults, ck);

    // Mixed processes: any of the four kinds on either side.
    let (x_in, x_out) = (maybe_trivial(rng, a1.clone()), maybe_trivial(rng, b1.clone()));
    let (y_in, y_out) = (maybe_trivial(rng, c1.clone()), maybe_trivial(rng, d1.clone()));
    let p = random_process::<S>(rng, &x_in, &x_out);
    let q = random_process::<S>(rng, &y_in, &y_out);
    check_process_pair(&p, &q, ck);
    let q2 = random_process::<S>(rng, &x_out, &y_out);
    check_process_pair(&p, &q2, ck);
}

// ---- probability -----------------------------------------------------------

/// The pure pairing tables on every `(n) (x) (m)` with `n, m <= max`, in both
/// theories: the delta table, local effects on bipartite states, and local
/// states on bipartite effects (which carry a factor one half).
pub fn pairing_tables<S: Scalar>(max: usize, ck: &mut Checker<S>) {
    let zero = S::zero();
    for n in 2..=max {
        for m in 2..=max {
            let (a, b) = (elem(n), elem(m));
            let ab = a.compose(&b);
            let id_b = ClassicalMap::<S>::identity(b.ontic_dim());
            let w = || json!({ "case": "pairing tables", "n": n, "m": m });
            let states: Vec<BctState<S>> = (1..=ab.bct_dim()).map(|q| point_state(&ab, q)).collect();
            let effects: Vec<BctEffect<S>> = (1..=ab.bct_dim()).map(|q| point_effect(&ab, q)).collect();
            let (Some(xs), Some(xe)) = (
                ck.ok(w, states.iter().map(xi_st).collect::<Result<Vec<_>>>()),
                ck.ok(w, effects.iter().map(xi_ef).collect::<Result<Vec<_>>>()),
            ) else {
                continue;
            };
            for (qs, (st, xst)) in states.iter().zip(&xs).enumerate() {
                for (qe, (ef, xef)) in effects.iter().zip(&xe).enumerate() {
                    let expected = if qs == qe { S::one() } else { zero.clone() };
                    let wd = || json!({ "case": "delta", "n": n, "m": m, "effect": qe + 1, "state": qs + 1 });
                    if let Some(v) = ck.ok(wd, pair(ef, st)) {
                        ck.scalars(wd, &v, &expected);
                    }
                    if let Some(v) = ck.ok(wd, xst.then(xef)) {
                        ck.scalars(wd, v.as_scalar().unwrap_or(&zero), &expected);
                    }
                }
            }
            for i2 in 1..=n {
                let local = Process::Effect(point_effect::<S>(&a, i2));
                let local_state = Process::State(point_state::<S>(&a, i2));
                let Some(id_proc) = ck.ok(w, identity::<S>(&b)).map(Process::Map) else { continue };
                let (Some(lift_e), Some(lift_s)) = (ck.ok(w, local.beside(&id_proc)), ck.ok(w, local_state.beside(&id_proc))) else {
                    continue;
                };
                let (Some(xe_loc), Some(xs_loc)) = (ck.ok(w, xi_process(&local)), ck.ok(w, xi_process(&local_state))) else {
                    continue;
                };
                for i in 1..=n {
                    for j in 1..=m {
                        for s in 0..2u8 {
                            let Some(q) = ck.ok(w, join_label(&a, &b, i, j, s)) else { continue };
                            let wl = || json!({ "case": "local effect", "n": n, "m": m, "effect": i2, "state": [i, j, s] });
                            // (i'| (x) id on |(i,j)_s) = delta |j)
                            let expected_state = if i == i2 {
                                Process::State(point_state::<S>(&b, j))
                            } else {
                                Process::State(point_state::<S>(&b, j).scale(&zero))
                            };
                            let st = Process::State(states[q - 1].clone());
                            if let Some(out) = ck.ok(wl, st.then(&lift_e)) {
                                ck.equal(wl, &out, &expected_state);
                            }
                            if let (Some(lhs), Some(rhs)) =
                                (ck.ok(wl, xs[q - 1].then(&xe_loc.kron(&id_b))), ck.ok(wl, xi_process(&expected_state)))
                            {
                                ck.maps(wl, &lhs, &rhs);
                            }
                            // |i') (x) id then ((i,j)_s| = delta/2 (j|
                            let ws = || json!({ "case": "local state", "n": n, "m": m, "state": i2, "effect": [i, j, s] });
                            let factor = if i == i2 { S::half() } else { zero.clone() };
                            let expected_eff = Process::Effect(point_effect::<S>(&b, j).scale(&factor));
                            let ef = Process::Effect(effects[q - 1].clone());
                            if let Some(out) = ck.ok(ws, lift_s.then(&ef)) {
                                ck.equal(ws, &out, &expected_eff);
                            }
                            if let (Some(lhs), Some(rhs)) =
                                (ck.ok(ws, xs_loc.kron(&id_b).then(&xe[q - 1])), ck.ok(ws, xi_process(&expected_eff)))
                            {
                                ck.maps(ws, &lhs, &rhs);
                            }
                        }
                    }
                }
            }
        }
    }
}

/// `(e | t rho)` against the pairing of the images, with `t` padded by an
/// ancilla on the right (`left = false`) or the left.
pub fn check_probability<S: Scalar>(
    e: &BctEffect<S>,
    t: &TransformationTensor<S>,
    rho: &BctState<S>,
    ancilla: &SystemShape,
    left: bool,
    ck: &mut Checker<S>,
) {
    let w = || {
        json!({ "case": "probability", "in": shape_json(t.in_shape()), "out": shape_json(t.out_shape()), "ancilla": shape_json(ancilla), "ancilla_left": left })
    };
    let lifted = if ancilla.is_trivial() {
        Ok(t.clone())
    } else if left {
        identity_par(ancilla, t)
    } else {
        par_with_identity(t, ancilla)
    };
    let Some(lifted) = ck.ok(w, lifted) else { return };
    let Some(theory) = ck.ok(w, lifted.apply(rho).and_then(|out| pair(e, &out))) else { return };
    let (Some(xr), Some(xt), Some(xe)) = (ck.ok(w, xi_st(rho)), ck.ok(w, xi_map(t)), ck.ok(w, xi_ef(e))) else {
        return;
    };
    let id = ClassicalMap::identity(ancilla.ontic_dim());
    let padded = if left { id.kron(&xt) } else { xt.kron(&id) };
    if let Some(model) = ck.ok(w, xr.then(&padded).and_then(|m| m.then(&xe))) {
        ck.scalars(w, &theory, model.as_scalar().unwrap_or(&S::zero()));
    }
}

fn probability_trial<S: Scalar>(cfg: &RunConfig, rng: &mut impl Rng, ck: &mut Checker<S>) {
    let anc_dim = rng.gen_range(2..=cfg.small_dim());
    let anc = elem(anc_dim);
    let cap = MAX_ONTIC / anc.ontic_dim();
    let (a, b) = (pick(rng, cfg, cap), pick(rng, cfg, cap));
    let t: TransformationTensor<S> = { let flag = rng.gen_bool(0.5); random::tensor(rng, &a, &b, flag) }.convert();
    let left = rng.gen_bool(0.5);
    let (ia, ib) = if left { (anc.compose(&a), anc.compose(&b)) } else { (a.compose(&anc), b.compose(&anc)) };
    let rho: BctState<S> = { let flag = rng.gen_bool(0.5); random::state(rng, &ia, flag) }.convert();
    let e: BctEffect<S> = random::effect(rng, &ib).convert();
    check_probability(&e, &t, &rho, &anc, left, ck);
    // Without ancilla, including pure probes.
    let rho0: BctState<S> = point_state(&a, rng.gen_range(1..=a.bct_dim()));
    let e0: BctEffect<S> = random::effect(rng, &b).convert();
    check_probability(&e0, &t, &rho0, &SystemShape::trivial(), false, ck);
    // Scalars map to themselves.
    let p = S::from_ratio(rng.gen_range(0..=6), 6);
    if let Some(img) = ck.ok(|| json!({ "case": "scalar" }), xi_process(&Process::Scalar(p.clone()))) {
        ck.scalars(|| json!({ "case": "scalar" }), img.as_scalar().unwrap_or(&S::zero()), &p);
    }
}

// ---- determinacy -----------------------------------------------------------

/// A reversible transformation is a channel with a two-sided inverse, and its
/// image is the permutation `(i, b) -> (pi(i), b ^ sigma_i)`.
pub fn check_reversible<S: Scalar>(spec: &ReversibleSpec, ck: &mut Checker<S>) {
    let w = || json!({ "case": "reversible", "perm": spec.perm(), "bits": spec.bits() });
    let (Some(r), Some(r_inv)) = (ck.ok(w, reversible::<S>(spec)), ck.ok(w, reversible::<S>(&spec.inverse()))) else {
        return;
    };
    let n = spec.len();
    ck.holds(w, r.is_channel(0.0), || (json!("not a channel"), json!("channel")));
    let Some(id) = ck.ok(w, identity::<S>(&elem(n))) else { return };
    if let (Some(left), Some(right)) = (ck.ok(w, r.then(&r_inv)), ck.ok(w, r_inv.then(&r))) {
        ck.equal(w, &left, &id);
        ck.equal(w, &right, &id);
    }
    let perm: Vec<usize> = (0..2 * n)
        .map(|col| {
            let (i, b) = (col / 2, (col % 2) as u8);
            2 * (spec.perm()[i] - 1) + (b ^ spec.bits()[i]) as usize + 1
        })
        .collect();
    if let (Some(img), Some(expected)) = (ck.ok(w, xi_map(&r)), ck.ok(w, permutation_map::<S>(&perm))) {
        ck.holds(w, img.is_permutation(), || (json!("not a permutation"), json!("permutation")));
        ck.maps(w, &img, &expected);
    }
}

/// `is_channel(t)` iff the image is stochastic iff the deterministic effect
/// pulls back to the deterministic effect; the image is always substochastic.
pub fn check_determinacy<S: Scalar>(t: &TransformationTensor<S>, tol: f64, ck: &mut Checker<S>) {
    let w = || json!({ "case": "determinacy", "in": shape_json(t.in_shape()), "out": shape_json(t.out_shape()) });
    let Some(img) = ck.ok(w, xi_map(t)) else { return };
    let channel = t.is_channel(tol);
    ck.holds(w, img.is_substochastic(tol), || (json!("image not substochastic"), json!("substochastic")));
    ck.holds(w, img.is_stochastic(tol) == channel, || (json!({ "image_stochastic": !channel }), json!({ "channel": channel })));
    let det_in = deterministic_effect::<S>(t.in_shape());
    if let Some(pulled) = ck.ok(w, t.pull(&deterministic_effect(t.out_shape()))) {
        let same = pulled.weights().iter().zip(det_in.weights()).all(|(x, y)| x.close(y, tol));
        ck.holds(w, same == channel, || (json!({ "causal": same }), json!({ "channel": channel })));
    }
}

pub fn check_instrument<S: Scalar>(instr: &Instrument<S>, tol: f64, ck: &mut Checker<S>) {
    let w = || json!({ "case": "instrument", "outcomes": instr.members().len() });
    let Some(images) = ck.ok(w, instr.members().iter().map(xi_map).collect::<Result<Vec<_>>>()) else { return };
    for img in &images {
        ck.holds(w, img.is_substochastic(tol), || (json!("member not substochastic"), json!("substochastic")));
    }
    let mut total = images[0].clone();
    for img in &images[1..] {
        let Some(sum) = ck.ok(w, total.add(img)) else { return };
        total = sum;
    }
    ck.holds(w, total.is_stochastic(tol), || (json!("sum not stochastic"), json!("stochastic")));
}

fn determinacy_trial<S: Scalar>(cfg: &RunConfig, rng: &mut impl Rng, ck: &mut Checker<S>) {
    let tol = cfg.tolerance();
    let (a, b) = (pick(rng, cfg, MAX_ONTIC), pick(rng, cfg, MAX_ONTIC));
    let t: TransformationTensor<S> = { let flag = rng.gen_bool(0.5); random::tensor(rng, &a, &b, flag) }.convert();
    check_determinacy(&t, tol, ck);
    let n = rng.gen_range(2..=6);
    let spec = random::reversible_spec(rng, n);
    check_reversible(&spec, ck);
    let instr = random::instrument(rng, &a, &b, 3);
    let members = instr.members().iter().map(|m| m.convert()).collect();
    if let Some(instr) = ck.ok(|| json!({ "case": "instrument" }), Instrument::<S>::new(instr.outcomes().to_vec(), members)) {
        check_instrument(&instr, tol, ck);
    }
}

// ---- atomicity -------------------------------------------------------------

/// The ancilla law for one atomic term `i0 -> l` with shift `tau`:
/// `(i, j)_s -> lambda [i = i0] (l, j)_{s ^ tau}` for an ancilla on the right,
/// and `(j, i)_s -> lambda [i = i0] (j, l)_{s ^ tau}` for one on the left. The
/// right-ancilla labels are plain `Q` codes; the left ones go through the join.
pub fn check_atomic_law<S: Scalar>(
    input: &SystemShape,
    output: &SystemShape,
    term: &AtomicTerm<S>,
    ancilla: usize,
    ck: &mut Checker<S>,
) {
    let w = || {
        json!({ "case": "atomic law", "in": shape_json(input), "out": shape_json(output), "term": [term.input, term.output, term.tau], "ancilla": ancilla })
    };
    let Some(t) = ck.ok(w, TransformationTensor::new(input.clone(), output.clone(), [term.clone()])) else { return };
    let e = elem(ancilla);
    let (Some(right), Some(left)) = (ck.ok(w, par_with_identity(&t, &e)), ck.ok(w, identity_par(&e, &t))) else {
        return;
    };
    let (n_in, n_out) = (input.bct_dim(), output.bct_dim());
    let zero = S::zero();
    for i in 1..=n_in {
        // Ancilla-free action.
        if let Some(out) = ck.ok(w, t.apply(&point_state(input, i))) {
            let expected = if i == term.input { point_state(output, term.output).scale(&term.weight) } else { point_state(output, 1).scale(&zero) };
            ck.equal(w, &out, &expected);
        }
        for j in 1..=ancilla {
            for s in 0..2u8 {
                let hit = i == term.input;
                let (Some(from_r), Some(to_r), Some(from_l), Some(to_l)) = (
                    ck.ok(w, q_encode(n_in, ancilla, i, j, s)),
                    ck.ok(w, q_encode(n_out, ancilla, term.output, j, s ^ term.tau)),
                    ck.ok(w, join_label(&e, input, j, i, s)),
                    ck.ok(w, join_label(&e, output, j, term.output, s ^ term.tau)),
                ) else {
                    continue;
                };
                let factor = if hit { term.weight.clone() } else { zero.clone() };
                let wr = || json!({ "case": "atomic law", "side": "right", "in": shape_json(input), "term": [term.input, term.output, term.tau], "state": [i, j, s] });
                if let Some(out) = ck.ok(wr, right.apply(&point_state(right.in_shape(), from_r))) {
                    ck.equal(wr, &out, &point_state(right.out_shape(), to_r).scale(&factor));
                }
                let wl = || json!({ "case": "atomic law", "side": "left", "in": shape_json(input), "term": [term.input, term.output, term.tau], "state": [j, i, s] });
                if let Some(out) = ck.ok(wl, left.apply(&point_state(left.in_shape(), from_l))) {
                    ck.equal(wl, &out, &point_state(left.out_shape(), to_l).scale(&factor));
                }
            }
        }
    }
}

/// Every atomic term between bipartite systems with factors up to `max_dim`,
/// against every elementary ancilla up to `max_ancilla`.
pub fn composite_atomicity<S: Scalar>(max_dim: usize, max_ancilla: usize, ck: &mut Checker<S>) {
    let shapes: Vec<SystemShape> = (2..=max_dim)
        .flat_map(|n| (2..=max_dim).map(move |m| SystemShape::new(vec![n, m]).expect("dims >= 2")))
        .collect();
    for input in &shapes {
        for output in &shapes {
            for i0 in 1..=input.bct_dim() {
                for l in 1..=output.bct_dim() {
                    for tau in 0..2u8 {
                        for anc in 2..=max_ancilla {
                            let term = AtomicTerm::new(i0, l, tau, S::half());
                            check_atomic_law(input, output, &term, anc, ck);
                        }
                    }
                }
            }
        }
    }
}

/// The merging map against the closed form
/// `(x, b1, y, b2) -> (Q(x, y, b1 ^ b2), b1)`, and on every pure bipartite state.
pub fn nu_pinning<S: Scalar>(max: usize, ck: &mut Checker<S>) {
    for n1 in 2..=max {
        for n2 in 2..=max {
            let (a, b) = (elem(n1), elem(n2));
            let w = || json!({ "case": "nu image", "n1": n1, "n2": n2 });
            let mut perm = vec![0; 4 * n1 * n2];
            for x in 1..=n1 {
                for b1 in 0..2u8 {
                    for y in 1..=n2 {
                        for b2 in 0..2u8 {
                            let col = ((x - 1) * 2 + b1 as usize) * 2 * n2 + (y - 1) * 2 + b2 as usize;
                            let q = q_encode(n1, n2, x, y, b1 ^ b2).expect("in range");
                            perm[col] = (q - 1) * 2 + b1 as usize + 1;
                        }
                    }
                }
            }
            let (Some(closed), Some(m), Some(merge)) =
                (ck.ok(w, permutation_map::<S>(&perm)), ck.ok(w, mu::<S>(&a, &b)), ck.ok(w, nu::<S>(&a, &b)))
            else {
                continue;
            };
            ck.maps(w, &m, &closed);
            if let Some(img) = ck.ok(w, xi_map(&merge)) {
                ck.maps(w, &img, &closed);
            }
            let ab = a.compose(&b);
            for q in 1..=ab.bct_dim() {
                let wq = || json!({ "case": "nu on pure state", "n1": n1, "n2": n2, "label": q });
                let rho = point_state::<S>(&ab, q);
                let (Some(merged), Some(xr)) = (ck.ok(wq, merge.apply(&rho)), ck.ok(wq, xi_st(&rho))) else { continue };
                if let (Some(lhs), Some(rhs)) = (ck.ok(wq, xi_st(&merged)), ck.ok(wq, xr.then(&closed))) {
                    ck.maps(wq, &lhs, &rhs);
                }
            }
        }
    }
}

fn atomicity_trial<S: Scalar>(cfg: &RunConfig, rng: &mut impl Rng, ck: &mut Checker<S>) {
    let (a, b) = (random::shape(rng, cfg.max_dim, 2, 16), random::shape(rng, cfg.max_dim, 2, 16));
    let term = random::atomic(rng, &a, &b);
    let term = AtomicTerm::new(term.input, term.output, term.tau, term.weight.convert::<S>());
    check_atomic_law(&a, &b, &term, rng.gen_range(2..=cfg.small_dim()), ck);
}

// ---- swap ------------------------------------------------------------------

/// `(swap (x) I) ((x, y)_s, k)_t = ((y, x)_s, k)_{t ^ s}` on every pure
/// tripartite label.
pub fn check_swap_relation<S: Scalar>(a: &SystemShape, b: &SystemShape, ancilla: &SystemShape, faults: Faults, ck: &mut Checker<S>) {
    let w = || json!({ "case": "swap relation", "left": shape_json(a), "right": shape_json(b), "ancilla": shape_json(ancilla) });
    let Some(sw) = ck.ok(w, swap_under_test::<S>(a, b, faults)) else { return };
    let Some(lifted) = ck.ok(w, par_with_identity(&sw, ancilla)) else { return };
    let (ab, ba) = (a.compose(b), b.compose(a));
    for x in 1..=a.bct_dim() {
        for y in 1..=b.bct_dim() {
            for s in 0..2u8 {
                for k in 1..=ancilla.bct_dim() {
                    for t in 0..2u8 {
                        let wl = || json!({ "case": "swap relation", "left": shape_json(a), "right": shape_json(b), "ancilla": shape_json(ancilla), "label": [x, y, s, k, t] });
                        let from = join_label(a, b, x, y, s).and_then(|q| join_label(&ab, ancilla, q, k, t));
                        let to = join_label(b, a, y, x, s).and_then(|q| join_label(&ba, ancilla, q, k, t ^ s));
                        let (Some(from), Some(to)) = (ck.ok(wl, from), ck.ok(wl, to)) else { continue };
                        if let Some(out) = ck.ok(wl, lifted.apply(&point_state(lifted.in_shape(), from))) {
                            ck.equal(wl, &out, &point_state(lifted.out_shape(), to));
                        }
                    }
                }
            }
        }
    }
}

/// Exhaustive defining relation for elementary factors and ancillas up to `max`.
pub fn swap_relation<S: Scalar>(max: usize, faults: Faults, ck: &mut Checker<S>) {
    for n in 2..=max {
        for m in 2..=max {
            for k in 2..=max {
                check_swap_relation(&elem(n), &elem(m), &elem(k), faults, ck);
            }
        }
    }
}

fn swap_trial<S: Scalar>(cfg: &RunConfig, rng: &mut impl Rng, ck: &mut Checker<S>) {
    let (a, b) = (random::shape(rng, cfg.max_dim, 2, 16), random::shape(rng, cfg.max_dim, 2, 16));
    let anc = elem(rng.gen_range(2..=cfg.small_dim()));
    check_swap_relation(&a, &b, &anc, cfg.faults, ck);
    let w = || json!({ "case": "swap", "left": shape_json(&a), "right": shape_json(&b) });
    let (Some(ab), Some(ba)) = (ck.ok(w, swap_under_test::<S>(&a, &b, cfg.faults)), ck.ok(w, swap_under_test::<S>(&b, &a, cfg.faults))) else {
        return;
    };
    if let (Some(round), Some(id)) = (ck.ok(w, ab.then(&ba)), ck.ok(w, identity::<S>(&a.compose(&b)))) {
        ck.equal(|| json!({ "case": "swap involution", "left": shape_json(&a), "right": shape_json(&b) }), &round, &id);
    }
    // Naturality: swap . (t1 (x) t2) = (t2 (x) t1) . swap.
    let (c, d) = (random::shape(rng, cfg.max_dim, 2, 16), random::shape(rng, cfg.max_dim, 2, 16));
    let t1: TransformationTensor<S> = random::tensor(rng, &a, &c, true).convert();
    let t2: TransformationTensor<S> = random::tensor(rng, &b, &d, true).convert();
    let wn = || json!({ "case": "swap naturality", "left": shape_json(&a), "right": shape_json(&b) });
    let (Some(p12), Some(p21), Some(cd)) = (ck.ok(wn, compose_par(&t1, &t2)), ck.ok(wn, compose_par(&t2, &t1)), ck.ok(wn, swap_under_test::<S>(&c, &d, cfg.faults))) else {
        return;
    };
    if let (Some(lhs), Some(rhs)) = (ck.ok(wn, p12.then(&cd)), ck.ok(wn, ab.then(&p21))) {
        ck.equal(wn, &lhs, &rhs);
    }
    // Product states are exchanged.
    let (r, s): (BctState<S>, BctState<S>) = (random::state(rng, &a, true).convert(), random::state(rng, &b, true).convert());
    if let Some(out) = ck.ok(w, ab.apply(&par_states(&r, &s))) {
        ck.equal(|| json!({ "case": "swap on product" }), &out, &par_states(&s, &r));
    }
    let (e, f): (BctEffect<S>, BctEffect<S>) = (random::effect(rng, &a).convert(), random::effect(rng, &b).convert());
    if let Some(out) = ck.ok(w, ba.pull(&par_effects(&e, &f))) {
        ck.equal(|| json!({ "case": "swap on product effect" }), &out, &par_effects(&f, &e));
    }
}

// ---- codec -----------------------------------------------------------------

/// Flattening is a bijection onto `[1..N]` for every shape with at most
/// `max_parts` factors of dimension at most `max_dim`.
pub fn codec_bijectivity<S: Scalar>(max_parts: usize, max_dim: usize, ck: &mut Checker<S>) {
    let mut shapes: Vec<Vec<usize>> = vec![vec![]];
    for _ in 0..max_parts {
        let next: Vec<Vec<usize>> =
            shapes.iter().flat_map(|s| (2..=max_dim).map(move |n| [s.clone(), vec![n]].concat())).collect();
        for s in &next {
            let shape = SystemShape::new(s.clone()).expect("dims >= 2");
            let w = || json!({ "case": "flatten bijection", "shape": s });
            let n = shape.bct_dim();
            let mut seen = vec![false; n + 1];
            let mut ok = true;
            for label in all_labels(&shape) {
                match flatten_label(&shape, &label) {
                    Ok(q) if q >= 1 && q <= n && !seen[q] => seen[q] = true,
                    _ => ok = false,
                }
            }
            ck.holds(w, ok && seen[1..].iter().all(|&x| x), || (json!("not a bijection"), json!(n)));
        }
        shapes = next;
    }
    for n1 in 1..=8 {
        for n2 in 1..=8 {
            let w = || json!({ "case": "codec round trip", "n1": n1, "n2": n2 });
            let mut ok = true;
            for q in 1..=2 * n1 * n2 {
                ok &= matches!(q_decode(n1, n2, q).and_then(|(i, j, s)| q_encode(n1, n2, i, j, s)), Ok(x) if x == q);
            }
            ck.holds(w, ok, || (json!("round trip failed"), Value::Null));
        }
    }
}

fn codec_trial<S: Scalar>(cfg: &RunConfig, rng: &mut impl Rng, ck: &mut Checker<S>) {
    let (n1, n2) = (rng.gen_range(1..=64), rng.gen_range(1..=64));
    let (i, j, s) = (rng.gen_range(1..=n1), rng.gen_range(1..=n2), rng.gen_range(0..2u8));
    let w = || json!({ "case": "codec", "n1": n1, "n2": n2, "label": [i, j, s] });
    if let Some(q) = ck.ok(w, q_encode(n1, n2, i, j, s)) {
        ck.holds(w, q >= 1 && q <= 2 * n1 * n2, || (json!(q), json!([1, 2 * n1 * n2])));
        if let Some(back) = ck.ok(w, q_decode(n1, n2, q)) {
            ck.equal(w, &back, &(i, j, s));
        }
    }
    let shape = random::shape(rng, cfg.max_dim.max(2), 4, usize::MAX);
    let q = rng.gen_range(1..=shape.bct_dim());
    let wf = || json!({ "case": "flatten", "shape": shape_json(&shape), "label": q });
    if let Some(label) = ck.ok(wf, unflatten_label(&shape, q)) {
        if let Some(back) = ck.ok(wf, flatten_label(&shape, &label)) {
            ck.equal(wf, &back, &q);
        }
        let text = label.to_string();
        if let Some(parsed) = ck.ok(wf, text.parse::<PureLabel>()) {
            ck.equal(wf, &parsed, &label);
        }
    }
    // Reassociation against the right-nested join.
    let d = cfg.small_dim();
    let (m1, m2, m3) = (rng.gen_range(2..=d), rng.gen_range(2..=d), rng.gen_range(2..=d));
    let ln = LeftNested {
        i: rng.gen_range(1..=m1),
        j: rng.gen_range(1..=m2),
        s: rng.gen_range(0..2),
        k: rng.gen_range(1..=m3),
        t: rng.gen_range(0..2),
    };
    let wr = || json!({ "case": "reassociation", "dims": [m1, m2, m3], "label": [ln.i, ln.j, ln.s, ln.k, ln.t] });
    if let Some(rn) = ck.ok(wr, reassoc_label(m1, m2, m3, ln)) {
        if let Some(back) = ck.ok(wr, unreassoc_label(m1, m2, m3, rn)) {
            ck.equal(wr, &back, &ln);
        }
        let whole = SystemShape::new(vec![m1, m2, m3]).expect("dims >= 2");
        let left = flatten_label(&whole, &PureLabel::new(vec![ln.i, ln.j, ln.k], vec![ln.s, ln.t]).expect("valid"));
        let right = q_encode(m2, m3, rn.j, rn.k, rn.inner)
            .and_then(|jk| join_label(&elem(m1), &SystemShape::new(vec![m2, m3]).expect("dims >= 2"), rn.i, jk, rn.outer));
        if let (Some(l), Some(r)) = (ck.ok(wr, left), ck.ok(wr, right)) {
            ck.equal(wr, &l, &r);
        }
    }
}

// ---- uniqueness -------------------------------------------------------------

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct CollisionSearch {
    pub cases: usize,
    /// Shape pairs whose probe map has a kernel, with the rank deficiency.
    pub collisions: Vec<Value>,
}

/// Looks for two distinct coefficient maps that agree on every probe
/// `(e | (t (x) I) rho)` with pure `rho`, pure `e` and an ancilla that is absent
/// or elementary up to `max_ancilla` on either side. Probe values are linear in
/// the coefficients, so such a pair exists iff the probe map loses rank.
pub fn collision_search(shapes: &[SystemShape], max_ancilla: usize) -> Result<CollisionSearch> {
    let mut out = CollisionSearch { cases: 0, collisions: Vec::new() };
    for a in shapes {
        for b in shapes {
            let mut columns: Vec<Vec<Rational>> = Vec::new();
            for i in 1..=a.bct_dim() {
                for l in 1..=b.bct_dim() {
                    for tau in 0..2u8 {
                        let t = TransformationTensor::new(a.clone(), b.clone(), [AtomicTerm::new(i, l, tau, Rational::from(1))])?;
                        columns.push(probe_values(&t, max_ancilla)?);
                    }
                }
            }
            out.cases += 1;
            let r = crate::linalg::rank(&columns, 0.0);
            if r < columns.len() {
                out.collisions.push(json!({ "in": shape_json(a), "out": shape_json(b), "deficiency": columns.len() - r }));
            }
        }
    }
    Ok(out)
}

fn probe_values(t: &TransformationTensor<Rational>, max_ancilla: usize) -> Result<Vec<Rational>> {
    let mut lifted = vec![t.clone()];
    for k in 2..=max_ancilla {
        lifted.push(par_with_identity(t, &elem(k))?);
        lifted.push(identity_par(&elem(k), t)?);
    }
    let mut values = Vec::new();
    for u in &lifted {
        for q in 1..=u.in_shape().bct_dim() {
            values.extend(u.apply(&point_state(u.in_shape(), q))?.weights().iter().cloned());
        }
    }
    Ok(values)
}

// ---- single-shot wrappers ----------------------------------------------------

fn single<S: Scalar>(name: &str, tol: f64, f: impl FnOnce(&mut Checker<S>)) -> Report {
    let mut ck = Checker::new(tol);
    f(&mut ck);
    ck.into_report(name, 0, 1)
}

pub fn verify_diagram_seq<S: Scalar>(t1: &TransformationTensor<S>, t2: &TransformationTensor<S>, tol: f64) -> Report {
    single("diagram-seq", tol, |ck| check_diagram_seq(t1, t2, ck))
}

pub fn verify_diagram_par<S: Scalar>(t1: &TransformationTensor<S>, t2: &TransformationTensor<S>, tol: f64) -> Report {
    single("diagram-par", tol, |ck| check_diagram_par(t1, t2, ck))
}

pub fn verify_probability<S: Scalar>(
    e: &BctEffect<S>,
    t: &TransformationTensor<S>,
    rho: &BctState<S>,
    ancilla: &SystemShape,
    tol: f64,
) -> Report {
    single("probability", tol, |ck| check_probability(e, t, rho, ancilla, false, ck))
}

pub fn verify_determinacy<S: Scalar>(t: &TransformationTensor<S>, tol: f64) -> Report {
    single("determinacy", tol, |ck| check_determinacy(t, tol, ck))
}

pub fn verify_instrument<S: Scalar>(instr: &Instrument<S>, tol: f64) -> Report {
    single("instrument", tol, |ck| check_instrument(instr, tol, ck))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn cfg(trials: usize) -> RunConfig {
        RunConfig { seed: 11, trials, max_dim: 3, ..RunConfig::default() }
    }

    #[test]
    fn every_suite_passes_briefly() {
        for suite in Suite::EACH {
            let r = run(suite, &cfg(8));
            assert!(r.passed(), "{suite}: {}", r.to_json_string());
            assert!(r.checks > 0, "{suite} ran no checks");
        }
    }

    #[test]
    fn float_backend_agrees() {
        let c = RunConfig { backend: Backend::Float, ..cfg(8) };
        for suite in [Suite::Diagram, Suite::Probability, Suite::Determinacy] {
            let r = run(suite, &c);
            assert!(r.passed(), "{suite}: {}", r.to_json_string());
            assert!(r.max_abs_dev < 1e-12);
        }
    }

    #[test]
    fn reports_are_reproducible() {
        let a = run(Suite::Diagram, &cfg(6)).to_json_string();
        let b = run(Suite::Diagram, &cfg(6)).to_json_string();
        assert_eq!(a, b);
    }

    #[test]
    fn corrupted_swap_is_caught() {
        let c = RunConfig { faults: Faults { corrupt_swap: true }, ..cfg(4) };
        for suite in [Suite::Diagram, Suite::Swap] {
            let r = run(suite, &c);
            assert!(!r.passed(), "{suite} missed the corrupted swap");
            assert!(!r.failures.is_empty());
        }
    }

    #[test]
    fn no_collisions_on_small_systems() {
        let shapes = [elem(2), elem(3)];
        let found = collision_search(&shapes, 2).unwrap();
        assert_eq!(found.cases, 4);
        assert!(found.collisions.is_empty(), "{:?}", found.collisions);
        // Without an ancilla the shift is invisible, so the search must fail.
        let blind = collision_search(&shapes, 1).unwrap();
        assert_eq!(blind.collisions.len(), 4);
    }

    #[test]
    fn suite_names_parse() {
        for s in Suite::EACH {
            assert_eq!(s.name().parse::<Suite>().unwrap(), s);
        }
        assert_eq!("all".parse::<Suite>().unwrap(), Suite::All);
        assert!("nope".parse::<Suite>().is_err());
    }
}
