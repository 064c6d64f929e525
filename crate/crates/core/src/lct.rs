//! Bipartite latent classical theories and a refuter for candidate
//! ontological models of them.
//!
//! A composite of two elementary latent classical systems carries an extra
//! latent factor `L`, and products of states are `kappa (x) sigma (x) tau`.
//! When `kappa` has a zero entry, the effect `kappa_perp (x) Tr (x) Tr` kills
//! every product state but not the composite state `beta = kappa_bar (x) ...`.
//! A candidate model only has to supply the images of `beta` and of that
//! effect; the refuter then shows that at least one axiom fails.
//!
//! Everything here is exact.

use num_traits::{One, Zero};
use rand::Rng;
use rayon::prelude::*;
use serde::Serialize;
use serde_json::{json, Value};

use crate::classical::ClassicalMap;
use crate::error::{Error, Result};
use crate::random::trial_rng;
use crate::scalar::{Rational, Scalar};

#[derive(Clone, Debug, PartialEq)]
pub struct LctInstance {
    pub d1: usize,
    pub d2: usize,
    pub dl: usize,
    pub kappa: Vec<Rational>,
    pub kappa_perp: Vec<Rational>,
    pub kappa_bar: Vec<Rational>,
}

impl Default for LctInstance {
    fn default() -> Self {
        make_instance(2, 2, 2, &[Rational::one(), Rational::zero()]).expect("default instance is valid")
    }
}

/// Builds an instance. `kappa_perp` is the indicator of the first zero entry of
/// `kappa`, and `kappa_bar` the point state on that entry.
pub fn make_instance(d1: usize, d2: usize, dl: usize, kappa: &[Rational]) -> Result<LctInstance> {
    if d1 < 2 || d2 < 2 || dl < 2 {
        return Err(Error::InvalidInstance(format!("dimensions must be at least 2, got ({d1}, {d2}, {dl})")));
    }
    if kappa.len() != dl {
        return Err(Error::DimensionMismatch { expected: dl, found: kappa.len() });
    }
    if let Some(k) = kappa.iter().position(|x| *x < Rational::zero()) {
        return Err(Error::Negative { position: format!("kappa[{}]", k + 1), value: kappa[k].to_string() });
    }
    let total: Rational = kappa.iter().cloned().sum();
    if !total.is_one() {
        return Err(Error::InvalidInstance(format!("latent state sums to {total}, not 1")));
    }
    let zero_at = kappa
        .iter()
        .position(Zero::is_zero)
        .ok_or_else(|| Error::InvalidInstance("latent state is full rank".into()))?;
    let indicator: Vec<Rational> =
        (0..dl).map(|k| if k == zero_at { Rational::one() } else { Rational::zero() }).collect();
    Ok(LctInstance { d1, d2, dl, kappa: kappa.to_vec(), kappa_perp: indicator.clone(), kappa_bar: indicator })
}

fn kron3(a: &[Rational], b: &[Rational], c: &[Rational]) -> Vec<Rational> {
    let mut out = Vec::with_capacity(a.len() * b.len() * c.len());
    for x in a {
        for y in b {
            for z in c {
                out.push(x * y * z);
            }
        }
    }
    out
}

fn dot(a: &[Rational], b: &[Rational]) -> Rational {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn uniform(d: usize) -> Vec<Rational> {
    vec![Rational::new(1, d as i128); d]
}

fn point(d: usize, k: usize) -> Vec<Rational> {
    (0..d).map(|i| if i == k { Rational::one() } else { Rational::zero() }).collect()
}

impl LctInstance {
    /// `dl * d1 * d2`; vectors on the composite are indexed latent-major.
    pub fn composite_dim(&self) -> usize {
        self.dl * self.d1 * self.d2
    }

    /// The product rule `sigma (x) tau = kappa (x) sigma (x) tau`.
    pub fn product_state(&self, sigma: &[Rational], tau: &[Rational]) -> Result<Vec<Rational>> {
        if sigma.len() != self.d1 {
            return Err(Error::DimensionMismatch { expected: self.d1, found: sigma.len() });
        }
        if tau.len() != self.d2 {
            return Err(Error::DimensionMismatch { expected: self.d2, found: tau.len() });
        }
        Ok(kron3(&self.kappa, sigma, tau))
    }

    /// `kappa_bar (x) uniform (x) uniform`.
    pub fn default_beta(&self) -> Vec<Rational> {
        kron3(&self.kappa_bar, &uniform(self.d1), &uniform(self.d2))
    }
}

/// `b = kappa_perp (x) Tr (x) Tr`.
pub fn annihilator(inst: &LctInstance) -> Vec<Rational> {
    kron3(&inst.kappa_perp, &vec![Rational::one(); inst.d1], &vec![Rational::one(); inst.d2])
}

/// `(b | beta)`.
pub fn pairing_value(inst: &LctInstance, beta: &[Rational]) -> Result<Rational> {
    if beta.len() != inst.composite_dim() {
        return Err(Error::DimensionMismatch { expected: inst.composite_dim(), found: beta.len() });
    }
    Ok(dot(&annihilator(inst), beta))
}

/// `b` on every product of point states, as `(sigma, tau, value)` with 1-based
/// indices.
pub fn annihilation_table(inst: &LctInstance) -> Vec<(usize, usize, Rational)> {
    let b = annihilator(inst);
    let mut rows = Vec::with_capacity(inst.d1 * inst.d2);
    for i in 0..inst.d1 {
        for j in 0..inst.d2 {
            let prod = kron3(&inst.kappa, &point(inst.d1, i), &point(inst.d2, j));
            rows.push((i + 1, j + 1, dot(&b, &prod)));
        }
    }
    rows
}

/// Images a candidate model assigns to `beta`, to `b` and optionally to two
/// local states. Vectors on the composite are indexed `a * L2 + y`.
#[derive(Clone, Debug, PartialEq)]
pub struct CandidateModel {
    pub l1: usize,
    pub l2: usize,
    pub xi_beta: Vec<Rational>,
    pub xi_b: Vec<Rational>,
    pub xi_sigma: Option<Vec<Rational>>,
    pub xi_tau: Option<Vec<Rational>>,
    /// The theory-side `(b | beta)` the candidate claims to reproduce.
    pub theory_pairing: Rational,
}

impl CandidateModel {
    pub fn validate(&self) -> Result<()> {
        if self.l1 == 0 || self.l2 == 0 {
            return Err(Error::InvalidInstance("ontic dimensions must be positive".into()));
        }
        let n = self.l1 * self.l2;
        for (name, v) in [("xi_beta", &self.xi_beta), ("xi_b", &self.xi_b)] {
            if v.len() != n {
                return Err(Error::DimensionMismatch { expected: n, found: v.len() });
            }
            if let Some(k) = v.iter().position(|x| *x < Rational::zero()) {
                return Err(Error::Negative { position: format!("{name}[{k}]"), value: v[k].to_string() });
            }
        }
        let total: Rational = self.xi_beta.iter().cloned().sum();
        if total > Rational::one() {
            return Err(Error::ExceedsOne { what: "state mass", position: "xi_beta".into(), value: total.to_string() });
        }
        if let Some(k) = self.xi_b.iter().position(|x| *x > Rational::one()) {
            return Err(Error::ExceedsOne { what: "effect entry", position: format!("xi_b[{k}]"), value: self.xi_b[k].to_string() });
        }
        for (name, v, d) in [("xi_sigma", &self.xi_sigma, self.l1), ("xi_tau", &self.xi_tau, self.l2)] {
            if let Some(v) = v {
                if v.len() != d {
                    return Err(Error::DimensionMismatch { expected: d, found: v.len() });
                }
                if let Some(k) = v.iter().position(|x| *x < Rational::zero()) {
                    return Err(Error::Negative { position: format!("{name}[{k}]"), value: v[k].to_string() });
                }
            }
        }
        Ok(())
    }

    pub fn to_json(&self) -> Value {
        let vec = |v: &[Rational]| v.iter().map(Scalar::to_json).collect::<Vec<_>>();
        let mut out = json!({
            "L1": self.l1,
            "L2": self.l2,
            "xi_beta": vec(&self.xi_beta),
            "xi_b": vec(&self.xi_b),
            "theory_pairing": self.theory_pairing.to_json(),
        });
        if let Some(s) = &self.xi_sigma {
            out["xi_sigma"] = json!(vec(s));
        }
        if let Some(t) = &self.xi_tau {
            out["xi_tau"] = json!(vec(t));
        }
        out
    }

    pub fn from_json(value: &Value) -> Result<Self> {
        let dim = |key: &str| {
            value.get(key).and_then(Value::as_u64).map(|x| x as usize).ok_or_else(|| Error::Json(format!("missing `{key}`")))
        };
        let vec = |key: &str| -> Result<Option<Vec<Rational>>> {
            match value.get(key) {
                None | Some(Value::Null) => Ok(None),
                Some(Value::Array(items)) => items
                    .iter()
                    .map(|x| Rational::from_json(x).ok_or_else(|| Error::Json(format!("bad number in `{key}`"))))
                    .collect::<Result<Vec<_>>>()
                    .map(Some),
                Some(_) => Err(Error::Json(format!("`{key}` must be an array"))),
            }
        };
        let need = |key: &str| vec(key)?.ok_or_else(|| Error::Json(format!("missing `{key}`")));
        let theory_pairing = value
            .get("theory_pairing")
            .and_then(Rational::from_json)
            .ok_or_else(|| Error::Json("missing or bad `theory_pairing`".into()))?;
        let cand = CandidateModel {
            l1: dim("L1")?,
            l2: dim("L2")?,
            xi_beta: need("xi_beta")?,
            xi_b: need("xi_b")?,
            xi_sigma: vec("xi_sigma")?,
            xi_tau: vec("xi_tau")?,
            theory_pairing,
        };
        cand.validate()?;
        Ok(cand)
    }
}

/// The parity-bit construction that works for bilocal classical systems,
/// transplanted: each factor gets an extra bit, `beta` is spread over
/// anti-correlated bits and `b` tests for them. It reproduces the pairing, so
/// it must break the jellyfish relation instead.
pub fn builtin_candidate(inst: &LctInstance) -> CandidateModel {
    let (l1, l2) = (2 * inst.d1, 2 * inst.d2);
    let mut xi_beta = vec![Rational::zero(); l1 * l2];
    let mut xi_b = vec![Rational::zero(); l1 * l2];
    let w = Rational::new(1, 2 * (inst.d1 * inst.d2) as i128);
    for i in 0..inst.d1 {
        for j in 0..inst.d2 {
            for bit in 0..2 {
                let k = (2 * i + bit) * l2 + 2 * j + (1 - bit);
                xi_beta[k] = w;
                xi_b[k] = Rational::one();
            }
        }
    }
    CandidateModel {
        l1,
        l2,
        xi_beta,
        xi_b,
        xi_sigma: None,
        xi_tau: None,
        theory_pairing: pairing_value(inst, &inst.default_beta()).expect("dims match"),
    }
}

/// A random candidate claiming the instance's pairing value.
pub fn random_candidate(rng: &mut impl Rng, inst: &LctInstance) -> CandidateModel {
    let (l1, l2) = (rng.gen_range(1..=4), rng.gen_range(1..=4));
    let n = l1 * l2;
    let den = *[2i128, 3, 4, 6, 12].get(rng.gen_range(0..5)).expect("in range");
    let mut xi_beta = vec![Rational::zero(); n];
    let mut left = den;
    for k in 0..n {
        let u = if k + 1 == n { left } else { rng.gen_range(0..=left) };
        xi_beta[k] = Rational::new(u, den);
        left -= u;
    }
    if rng.gen_bool(0.2) {
        // Sparse supports make a vanishing jellyfish matrix reachable.
        let keep = rng.gen_range(0..n);
        for (k, x) in xi_beta.iter_mut().enumerate() {
            if k != keep {
                *x = Rational::zero();
            }
        }
        xi_beta[keep] = Rational::one();
    }
    let xi_b = (0..n).map(|_| Rational::new(rng.gen_range(0..=den), den)).collect();
    let local = |rng: &mut dyn rand::RngCore, d: usize| {
        let k = rng.gen_range(0..d);
        point(d, k)
    };
    let (xi_sigma, xi_tau) = if rng.gen_bool(0.5) { (Some(local(rng, l1)), Some(local(rng, l2))) } else { (None, None) };
    CandidateModel {
        l1,
        l2,
        xi_beta,
        xi_b,
        xi_sigma,
        xi_tau,
        theory_pairing: pairing_value(inst, &inst.default_beta()).expect("dims match"),
    }
}

/// `M[y, x] = sum_a xi_beta[a, y] xi_b[a, x]`: the image of the map obtained by
/// feeding the first factor of `beta` into `b`, leaving `b`'s second factor as
/// the input and `beta`'s second factor as the output.
pub fn jellyfish_matrix(cand: &CandidateModel) -> Result<ClassicalMap<Rational>> {
    cand.validate()?;
    let l2 = cand.l2;
    let mut m = vec![Rational::zero(); l2 * l2];
    for a in 0..cand.l1 {
        for y in 0..l2 {
            let beta = &cand.xi_beta[a * l2 + y];
            if beta.is_zero() {
                continue;
            }
            for x in 0..l2 {
                m[y * l2 + x] += beta * cand.xi_b[a * l2 + x];
            }
        }
    }
    ClassicalMap::new(l2, l2, m)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Axiom {
    JellyfishNullity,
    ProbabilityPreservation,
    ProductAnnihilation,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Violation {
    pub axiom: Axiom,
    pub witness: Value,
    pub lhs: Value,
    pub rhs: Value,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ViolationCertificate {
    pub violations: Vec<Violation>,
    /// `Tr M`, which always equals `xi_b . xi_beta`.
    pub trace: Value,
    pub model_pairing: Value,
    pub theory_pairing: Value,
    pub trace_identity_holds: bool,
}

impl ViolationCertificate {
    pub fn is_empty(&self) -> bool {
        self.violations.is_empty()
    }

    pub fn cites(&self, axiom: Axiom) -> bool {
        self.violations.iter().any(|v| v.axiom == axiom)
    }

    pub fn to_json(&self) -> Value {
        serde_json::to_value(self).expect("certificate serialises")
    }
}

/// Checks a candidate against the three axioms the no-go argument uses. The
/// theory value is the one the candidate declares.
pub fn falsify(cand: &CandidateModel, inst: &LctInstance) -> Result<ViolationCertificate> {
    let m = jellyfish_matrix(cand)?;
    let s = dot(&cand.xi_b, &cand.xi_beta);
    let trace = m.choi_close()?;
    let v = cand.theory_pairing;
    let mut violations = Vec::new();
    let l2 = cand.l2;
    if let Some(k) = m.entries().iter().position(|x| !x.is_zero()) {
        violations.push(Violation {
            axiom: Axiom::JellyfishNullity,
            witness: json!({ "entry": [k / l2 + 1, k % l2 + 1] }),
            lhs: m.entries()[k].to_json(),
            rhs: Rational::zero().to_json(),
        });
    }
    if s != v {
        violations.push(Violation {
            axiom: Axiom::ProbabilityPreservation,
            witness: json!({ "state": "beta", "effect": "b" }),
            lhs: s.to_json(),
            rhs: v.to_json(),
        });
    }
    if let (Some(sigma), Some(tau)) = (&cand.xi_sigma, &cand.xi_tau) {
        // Strict parallel composition sends the product to xi_sigma (x) xi_tau,
        // on which b must vanish like its theory counterpart.
        let prod: Vec<Rational> = sigma.iter().flat_map(|a| tau.iter().map(move |b| a * b)).collect();
        let value = dot(&cand.xi_b, &prod);
        let expected = annihilation_table(inst).first().map(|r| r.2).unwrap_or_else(Rational::zero);
        if value != expected {
            violations.push(Violation {
                axiom: Axiom::ProductAnnihilation,
                witness: json!({ "state": "sigma (x) tau" }),
                lhs: value.to_json(),
                rhs: expected.to_json(),
            });
        }
    }
    Ok(ViolationCertificate {
        violations,
        trace: trace.to_json(),
        model_pairing: s.to_json(),
        theory_pairing: v.to_json(),
        trace_identity_holds: trace == s,
    })
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SweepSummary {
    pub candidates: usize,
    pub refuted: usize,
    pub trace_identity_failures: usize,
    pub by_axiom: Value,
    /// Candidates that escaped, as JSON; empty if the no-go result held.
    pub survivors: Vec<Value>,
}

/// Refutes `count` seeded random candidates.
pub fn random_sweep(inst: &LctInstance, seed: u64, count: usize) -> Result<SweepSummary> {
    let certs: Vec<(CandidateModel, ViolationCertificate)> = (0..count)
        .into_par_iter()
        .map(|k| {
            let mut rng = trial_rng(seed, k as u64);
            let cand = random_candidate(&mut rng, inst);
            let cert = falsify(&cand, inst)?;
            Ok((cand, cert))
        })
        .collect::<Result<_>>()?;
    let tally = |a: Axiom| certs.iter().filter(|(_, c)| c.cites(a)).count();
    Ok(SweepSummary {
        candidates: count,
        refuted: certs.iter().filter(|(_, c)| !c.is_empty()).count(),
        trace_identity_failures: certs.iter().filter(|(_, c)| !c.trace_identity_holds).count(),
        by_axiom: json!({
            "jellyfish-nullity": tally(Axiom::JellyfishNullity),
            "probability-preservation": tally(Axiom::ProbabilityPreservation),
            "product-annihilation": tally(Axiom::ProductAnnihilation),
        }),
        survivors: certs.iter().filter(|(_, c)| c.is_empty()).map(|(m, _)| m.to_json()).collect(),
    })
}
