//! Transformations as conical combinations of normalised atomic transformations.
//!
//! A transformation `A -> B` between non-trivial systems is a coefficient map
//! `C(i0, l, tau)`: the weight of the atomic term sending pure label `i0` to
//! `l` while flipping the section bit towards any ancilla by `tau`. The
//! decomposition is unique, so two transformations are equal exactly when their
//! coefficient maps are.

use std::collections::BTreeMap;

use serde_json::{json, Value};

use crate::bct::state::{BctEffect, BctState};
use crate::classical::{check_permutation, invert_permutation};
use crate::error::{Error, Result};
use crate::scalar::{Rational, Scalar, DEFAULT_TOLERANCE};
use crate::systems::{join_label, split_label, SystemShape};

#[derive(Clone, Debug, PartialEq)]
pub struct AtomicTerm<S = Rational> {
    pub input: usize,
    pub output: usize,
    pub tau: u8,
    pub weight: S,
}

impl<S: Scalar> AtomicTerm<S> {
    pub fn new(input: usize, output: usize, tau: u8, weight: S) -> Self {
        Self { input, output, tau, weight }
    }

    /// Normalised atomic term (weight one).
    pub fn normalised(input: usize, output: usize, tau: u8) -> Self {
        Self::new(input, output, tau, S::one())
    }
}

type Key = (usize, usize, u8);

#[derive(Clone, Debug, PartialEq)]
pub struct TransformationTensor<S = Rational> {
    in_shape: SystemShape,
    out_shape: SystemShape,
    coeffs: BTreeMap<Key, S>,
}

impl<S: Scalar> TransformationTensor<S> {
    /// Builds a valid transformation: nonnegative weights and, for every input
    /// label, total outgoing weight at most one. Repeated terms accumulate.
    pub fn new(
        in_shape: SystemShape,
        out_shape: SystemShape,
        terms: impl IntoIterator<Item = AtomicTerm<S>>,
    ) -> Result<Self> {
        let t = Self::from_terms_unchecked(in_shape, out_shape, terms)?;
        t.check_valid(DEFAULT_TOLERANCE)?;
        Ok(t)
    }

    /// Like [`new`](Self::new) but without the row-sum bound. Used for linear
    /// combinations that are only meaningful inside the real span.
    pub fn from_terms_unchecked(
        in_shape: SystemShape,
        out_shape: SystemShape,
        terms: impl IntoIterator<Item = AtomicTerm<S>>,
    ) -> Result<Self> {
        if in_shape.is_trivial() || out_shape.is_trivial() {
            return Err(Error::InvalidSystem(format!(
                "transformations need non-trivial systems, got {in_shape} -> {out_shape}"
            )));
        }
        let (n_in, n_out) = (in_shape.bct_dim(), out_shape.bct_dim());
        let mut t = Self { in_shape, out_shape, coeffs: BTreeMap::new() };
        for term in terms {
            if term.input == 0 || term.input > n_in || term.output == 0 || term.output > n_out || term.tau > 1 {
                return Err(Error::OutOfRange(format!(
                    "term ({} -> {}, tau {}) for {} -> {}",
                    term.input, term.output, term.tau, t.in_shape, t.out_shape
                )));
            }
            if !term.weight.is_nonneg() {
                return Err(Error::Negative {
                    position: format!("({}, {}, {})", term.input, term.output, term.tau),
                    value: format!("{:?}", term.weight),
                });
            }
            t.add_term(term.input, term.output, term.tau, term.weight);
        }
        Ok(t)
    }

    /// The null transformation.
    pub fn zero(in_shape: SystemShape, out_shape: SystemShape) -> Result<Self> {
        Self::from_terms_unchecked(in_shape, out_shape, std::iter::empty())
    }

    fn raw(in_shape: SystemShape, out_shape: SystemShape) -> Self {
        Self { in_shape, out_shape, coeffs: BTreeMap::new() }
    }

    fn add_term(&mut self, input: usize, output: usize, tau: u8, w: S) {
        if w.is_zero() {
            return;
        }
        let entry = self.coeffs.entry((input, output, tau)).or_insert_with(S::zero);
        *entry = entry.clone() + w;
        if entry.is_zero() {
            self.coeffs.remove(&(input, output, tau));
        }
    }

    pub fn in_shape(&self) -> &SystemShape {
        &self.in_shape
    }

    pub fn out_shape(&self) -> &SystemShape {
        &self.out_shape
    }

    pub fn coeff(&self, input: usize, output: usize, tau: u8) -> S {
        self.coeffs.get(&(input, output, tau)).cloned().unwrap_or_else(S::zero)
    }

    pub fn terms(&self) -> impl Iterator<Item = AtomicTerm<S>> + '_ {
        self.coeffs.iter().map(|(&(i, l, tau), w)| AtomicTerm::new(i, l, tau, w.clone()))
    }

    pub fn num_terms(&self) -> usize {
        self.coeffs.len()
    }

    pub fn is_zero(&self) -> bool {
        self.coeffs.is_empty()
    }

    /// `sum_{l, tau} C(i0, l, tau)` for every input label `i0`.
    pub fn row_sums(&self) -> Vec<S> {
        let mut sums = vec![S::zero(); self.in_shape.bct_dim()];
        for (&(i, _, _), w) in &self.coeffs {
            sums[i - 1] = sums[i - 1].clone() + w.clone();
        }
        sums
    }

    pub fn check_valid(&self, tol: f64) -> Result<()> {
        for (i, s) in self.row_sums().iter().enumerate() {
            if !s.at_most_one(tol) {
                return Err(Error::ExceedsOne {
                    what: "row sum",
                    position: format!("input label {}", i + 1),
                    value: format!("{s:?}"),
                });
            }
        }
        Ok(())
    }

    pub fn is_valid(&self, tol: f64) -> bool {
        self.check_valid(tol).is_ok()
    }

    /// Deterministic: every row sums to one.
    pub fn is_channel(&self, tol: f64) -> bool {
        self.row_sums().iter().all(|s| s.close(&S::one(), tol))
    }

    pub fn scale(&self, p: &S) -> Self {
        let mut t = Self::raw(self.in_shape.clone(), self.out_shape.clone());
        for (&(i, l, tau), w) in &self.coeffs {
            t.add_term(i, l, tau, w.clone() * p.clone());
        }
        t
    }

    /// Coefficientwise sum (no validity check).
    pub fn add(&self, other: &Self) -> Result<Self> {
        self.check_same_shapes(other)?;
        let mut t = self.clone();
        for (&(i, l, tau), w) in &other.coeffs {
            t.add_term(i, l, tau, w.clone());
        }
        Ok(t)
    }

    fn check_same_shapes(&self, other: &Self) -> Result<()> {
        if self.in_shape != other.in_shape || self.out_shape != other.out_shape {
            return Err(Error::ShapeMismatch {
                left: format!("{} -> {}", self.in_shape, self.out_shape),
                right: format!("{} -> {}", other.in_shape, other.out_shape),
            });
        }
        Ok(())
    }

    /// `out[l] = sum_{i0, tau} C(i0, l, tau) rho[i0]`.
    pub fn apply(&self, state: &BctState<S>) -> Result<BctState<S>> {
        if state.shape() != &self.in_shape {
            return Err(Error::ShapeMismatch { left: self.in_shape.to_string(), right: state.shape().to_string() });
        }
        let mut out = vec![S::zero(); self.out_shape.bct_dim()];
        for (&(i, l, _), w) in &self.coeffs {
            let r = state.weight(i);
            if !r.is_zero() {
                out[l - 1] = out[l - 1].clone() + w.clone() * r.clone();
            }
        }
        Ok(BctState::from_raw(self.out_shape.clone(), out))
    }

    /// `out[i0] = sum_{l, tau} C(i0, l, tau) e[l]`.
    pub fn pull(&self, effect: &BctEffect<S>) -> Result<BctEffect<S>> {
        if effect.shape() != &self.out_shape {
            return Err(Error::ShapeMismatch { left: self.out_shape.to_string(), right: effect.shape().to_string() });
        }
        let mut out = vec![S::zero(); self.in_shape.bct_dim()];
        for (&(i, l, _), w) in &self.coeffs {
            out[i - 1] = out[i - 1].clone() + w.clone() * effect.weight(l).clone();
        }
        Ok(BctEffect::from_raw(self.in_shape.clone(), out))
    }

    /// Sequential composition: `self` first, then `next`. Section-bit shifts
    /// add modulo two and weights multiply when the labels meet.
    pub fn then(&self, next: &Self) -> Result<Self> {
        if self.out_shape != next.in_shape {
            return Err(Error::ShapeMismatch { left: self.out_shape.to_string(), right: next.in_shape.to_string() });
        }
        let mut by_input: BTreeMap<usize, Vec<(usize, u8, &S)>> = BTreeMap::new();
        for (&(i, l, tau), w) in &next.coeffs {
            by_input.entry(i).or_default().push((l, tau, w));
        }
        let mut t = Self::raw(self.in_shape.clone(), next.out_shape.clone());
        for (&(i0, l, tau), w) in &self.coeffs {
            if let Some(nexts) = by_input.get(&l) {
                for &(l2, tau2, w2) in nexts {
                    t.add_term(i0, l2, tau ^ tau2, w.clone() * w2.clone());
                }
            }
        }
        Ok(t)
    }

    /// Re-expresses the coefficients in another scalar backend.
    pub fn convert<T: Scalar>(&self) -> TransformationTensor<T> {
        TransformationTensor {
            in_shape: self.in_shape.clone(),
            out_shape: self.out_shape.clone(),
            coeffs: self.coeffs.iter().map(|(&k, w)| (k, w.convert())).collect(),
        }
    }

    pub fn to_json(&self) -> Value {
        json!({
            "in": self.in_shape.elems(),
            "out": self.out_shape.elems(),
            "terms": self.coeffs.iter().map(|(&(i, l, tau), w)| json!({
                "i0": i, "l": l, "tau": tau, "w": w.to_json(),
            })).collect::<Vec<_>>(),
        })
    }

    pub fn from_json(value: &Value) -> Result<Self> {
        let shape = |k: &str| -> Result<SystemShape> {
            let v = value.get(k).ok_or_else(|| Error::Json(format!("missing field `{k}`")))?;
            let dims: Vec<usize> = serde_json::from_value(v.clone()).map_err(|e| Error::Json(format!("`{k}`: {e}")))?;
            SystemShape::new(dims)
        };
        let (in_shape, out_shape) = (shape("in")?, shape("out")?);
        let terms = value
            .get("terms")
            .and_then(Value::as_array)
            .ok_or_else(|| Error::Json("`terms` must be an array".into()))?;
        let mut parsed = Vec::with_capacity(terms.len());
        for t in terms {
            let int = |k: &str| {
                t.get(k).and_then(Value::as_u64).ok_or_else(|| Error::Json(format!("term field `{k}` missing")))
            };
            let w = t.get("w").and_then(S::from_json).ok_or_else(|| Error::Json(format!("bad weight in {t}")))?;
            let tau = int("tau")?;
            if tau > 1 {
                return Err(Error::Json(format!("tau must be 0 or 1, got {tau}")));
            }
            parsed.push(AtomicTerm::new(int("i0")? as usize, int("l")? as usize, tau as u8, w));
        }
        Self::new(in_shape, out_shape, parsed)
    }
}

pub fn compose_seq<S: Scalar>(
    first: &TransformationTensor<S>,
    second: &TransformationTensor<S>,
) -> Result<TransformationTensor<S>> {
    first.then(second)
}

/// `C(i, l, tau) = [i = l][tau = 0]`.
pub fn identity<S: Scalar>(shape: &SystemShape) -> Result<TransformationTensor<S>> {
    let n = shape.bct_dim();
    TransformationTensor::from_terms_unchecked(
        shape.clone(),
        shape.clone(),
        (1..=n).map(|i| AtomicTerm::normalised(i, i, 0)),
    )
}

/// `t (x) I_right`: every term `i0 -> l` with shift `sigma` acts on
/// `(i0, y)_s` as `(l, y)_{s ^ sigma}` and keeps `sigma` towards further ancillas.
pub fn par_with_identity<S: Scalar>(t: &TransformationTensor<S>, right: &SystemShape) -> Result<TransformationTensor<S>> {
    if right.is_trivial() {
        return Ok(t.clone());
    }
    let mut out = TransformationTensor::raw(t.in_shape.compose(right), t.out_shape.compose(right));
    for (&(i0, l, sigma), w) in &t.coeffs {
        for y in 1..=right.bct_dim() {
            for s in 0..2u8 {
                let from = join_label(&t.in_shape, right, i0, y, s)?;
                let to = join_label(&t.out_shape, right, l, y, s ^ sigma)?;
                out.add_term(from, to, sigma, w.clone());
            }
        }
    }
    Ok(out)
}

/// The swap `left (x) right -> right (x) left`: `(i, j)_s -> (j, i)_s` with
/// shift `s`.
pub fn swap<S: Scalar>(left: &SystemShape, right: &SystemShape) -> Result<TransformationTensor<S>> {
    let mut out = TransformationTensor::raw(left.compose(right), right.compose(left));
    if left.is_trivial() || right.is_trivial() {
        return Err(Error::InvalidSystem("swap needs non-trivial systems".into()));
    }
    for i in 1..=left.bct_dim() {
        for j in 1..=right.bct_dim() {
            for s in 0..2u8 {
                out.add_term(join_label(left, right, i, j, s)?, join_label(right, left, j, i, s)?, s, S::one());
            }
        }
    }
    Ok(out)
}

/// `I_left (x) t`, conjugating `t (x) I_left` with swaps.
pub fn identity_par<S: Scalar>(left: &SystemShape, t: &TransformationTensor<S>) -> Result<TransformationTensor<S>> {
    if left.is_trivial() {
        return Ok(t.clone());
    }
    swap(left, &t.in_shape)?.then(&par_with_identity(t, left)?)?.then(&swap(&t.out_shape, left)?)
}

/// `t1 (x) t2 := (t1 (x) I) . (I (x) t2)`.
pub fn compose_par<S: Scalar>(
    t1: &TransformationTensor<S>,
    t2: &TransformationTensor<S>,
) -> Result<TransformationTensor<S>> {
    identity_par(&t1.in_shape, t2)?.then(&par_with_identity(t1, &t2.out_shape)?)
}

/// Lifts `t` into `I_left (x) t (x) I_right`.
pub fn lift<S: Scalar>(
    left: &SystemShape,
    t: &TransformationTensor<S>,
    right: &SystemShape,
) -> Result<TransformationTensor<S>> {
    identity_par(left, &par_with_identity(t, right)?)
}

fn fused(shape: &SystemShape) -> Result<SystemShape> {
    SystemShape::elementary(shape.bct_dim())
}

/// Merging map from `left (x) right` to the single system of the same global
/// dimension. Labels are kept; only the shape changes.
pub fn nu<S: Scalar>(left: &SystemShape, right: &SystemShape) -> Result<TransformationTensor<S>> {
    if left.is_trivial() || right.is_trivial() {
        return Err(Error::InvalidSystem("merging needs non-trivial systems".into()));
    }
    let whole = left.compose(right);
    let target = fused(&whole)?;
    TransformationTensor::from_terms_unchecked(
        whole.clone(),
        target,
        (1..=whole.bct_dim()).map(|q| AtomicTerm::normalised(q, q, 0)),
    )
}

/// Splitting map, the inverse of [`nu`].
pub fn nu_inv<S: Scalar>(left: &SystemShape, right: &SystemShape) -> Result<TransformationTensor<S>> {
    if left.is_trivial() || right.is_trivial() {
        return Err(Error::InvalidSystem("splitting needs non-trivial systems".into()));
    }
    let whole = left.compose(right);
    let source = fused(&whole)?;
    TransformationTensor::from_terms_unchecked(
        source,
        whole.clone(),
        (1..=whole.bct_dim()).map(|q| AtomicTerm::normalised(q, q, 0)),
    )
}

/// A reversible transformation: a permutation `pi` of the pure labels and a
/// section-bit shift `sigma_i` per label.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ReversibleSpec {
    perm: Vec<usize>,
    bits: Vec<u8>,
}

impl ReversibleSpec {
    /// `perm[i-1] = pi(i)`, `bits[i-1] = sigma_i`.
    pub fn new(perm: Vec<usize>, bits: Vec<u8>) -> Result<Self> {
        check_permutation(&perm)?;
        if bits.len() != perm.len() {
            return Err(Error::DimensionMismatch { expected: perm.len(), found: bits.len() });
        }
        if bits.iter().any(|&b| b > 1) {
            return Err(Error::InvalidLabel(format!("shift bits must be 0/1: {bits:?}")));
        }
        Ok(Self { perm, bits })
    }

    pub fn perm(&self) -> &[usize] {
        &self.perm
    }

    pub fn bits(&self) -> &[u8] {
        &self.bits
    }

    pub fn len(&self) -> usize {
        self.perm.len()
    }

    pub fn is_empty(&self) -> bool {
        self.perm.is_empty()
    }

    /// `pi^-1` with `sigma'_{pi(i)} = sigma_i`.
    pub fn inverse(&self) -> Self {
        let perm = invert_permutation(&self.perm).expect("validated permutation");
        let mut bits = vec![0; self.bits.len()];
        for (i, &p) in self.perm.iter().enumerate() {
            bits[p - 1] = self.bits[i];
        }
        Self { perm, bits }
    }
}

/// Reversible transformation on the elementary system of dimension `spec.len()`.
pub fn reversible<S: Scalar>(spec: &ReversibleSpec) -> Result<TransformationTensor<S>> {
    reversible_on(&SystemShape::elementary(spec.len())?, spec)
}

/// `C(i, l, tau) = [pi(i) = l][sigma_i = tau]` on any system whose global
/// dimension matches the permutation.
pub fn reversible_on<S: Scalar>(shape: &SystemShape, spec: &ReversibleSpec) -> Result<TransformationTensor<S>> {
    if shape.bct_dim() != spec.len() {
        return Err(Error::DimensionMismatch { expected: shape.bct_dim(), found: spec.len() });
    }
    TransformationTensor::new(
        shape.clone(),
        shape.clone(),
        (0..spec.len()).map(|i| AtomicTerm::normalised(i + 1, spec.perm[i], spec.bits[i])),
    )
}

/// Recovers the permutation and shifts of a reversible transformation.
pub fn reversible_spec_of<S: Scalar>(t: &TransformationTensor<S>) -> Result<ReversibleSpec> {
    let n = t.in_shape.bct_dim();
    if t.out_shape.bct_dim() != n || t.num_terms() != n {
        return Err(Error::NotBijective("not a reversible transformation".into()));
    }
    let mut perm = vec![0; n];
    let mut bits = vec![0; n];
    for (&(i, l, tau), w) in &t.coeffs {
        if *w != S::one() || perm[i - 1] != 0 {
            return Err(Error::NotBijective("not a reversible transformation".into()));
        }
        perm[i - 1] = l;
        bits[i - 1] = tau;
    }
    ReversibleSpec::new(perm, bits)
}

/// Component functions of a reversible transformation on `n (x) m`:
/// A bipartite pure label `(i, j, s)`.
pub type BipartiteLabel = (usize, usize, u8);

/// `(i, j, s) -> (i', j', s')` together with the shift `sigma_{i,j,s}`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct BipartiteReversibleView {
    pub left: SystemShape,
    pub right: SystemShape,
    /// `((i, j, s), (i', j', s'), sigma)` for every bipartite pure label.
    pub table: Vec<(BipartiteLabel, BipartiteLabel, u8)>,
}

impl BipartiteReversibleView {
    pub fn pi_left(&self, i: usize, j: usize, s: u8) -> Option<usize> {
        self.lookup(i, j, s).map(|(to, _)| to.0)
    }

    pub fn pi_right(&self, i: usize, j: usize, s: u8) -> Option<usize> {
        self.lookup(i, j, s).map(|(to, _)| to.1)
    }

    pub fn pi_bit(&self, i: usize, j: usize, s: u8) -> Option<u8> {
        self.lookup(i, j, s).map(|(to, _)| to.2)
    }

    pub fn sigma(&self, i: usize, j: usize, s: u8) -> Option<u8> {
        self.lookup(i, j, s).map(|(_, sigma)| sigma)
    }

    fn lookup(&self, i: usize, j: usize, s: u8) -> Option<((usize, usize, u8), u8)> {
        self.table.iter().find(|(from, _, _)| *from == (i, j, s)).map(|&(_, to, sigma)| (to, sigma))
    }
}

pub fn reversible_bipartite_view<S: Scalar>(
    t: &TransformationTensor<S>,
    left: &SystemShape,
    right: &SystemShape,
) -> Result<BipartiteReversibleView> {
    let whole = left.compose(right);
    if t.in_shape != whole || t.out_shape != whole {
        return Err(Error::ShapeMismatch { left: whole.to_string(), right: t.in_shape.to_string() });
    }
    let spec = reversible_spec_of(t)?;
    let mut table = Vec::with_capacity(spec.len());
    for q in 1..=spec.len() {
        let from = split_label(left, right, q)?;
        let to = split_label(left, right, spec.perm[q - 1])?;
        table.push((from, to, spec.bits[q - 1]));
    }
    Ok(BipartiteReversibleView { left: left.clone(), right: right.clone(), table })
}

/// The nonzero coefficients, in label order.
pub fn decompose<S: Scalar>(t: &TransformationTensor<S>) -> Vec<AtomicTerm<S>> {
    t.terms().collect()
}

pub fn recompose<S: Scalar>(
    in_shape: &SystemShape,
    out_shape: &SystemShape,
    terms: &[AtomicTerm<S>],
) -> Result<TransformationTensor<S>> {
    TransformationTensor::new(in_shape.clone(), out_shape.clone(), terms.iter().cloned())
}

pub fn is_channel<S: Scalar>(t: &TransformationTensor<S>) -> bool {
    t.is_channel(DEFAULT_TOLERANCE)
}

/// An outcome-indexed family of transformations whose full coarse-graining is
/// a channel.
#[derive(Clone, Debug, PartialEq)]
pub struct Instrument<S = Rational> {
    outcomes: Vec<String>,
    members: Vec<TransformationTensor<S>>,
}

impl<S: Scalar> Instrument<S> {
    pub fn new(outcomes: Vec<String>, members: Vec<TransformationTensor<S>>) -> Result<Self> {
        if members.is_empty() || outcomes.len() != members.len() {
            return Err(Error::DimensionMismatch { expected: members.len().max(1), found: outcomes.len() });
        }
        for m in &members {
            members[0].check_same_shapes(m)?;
            m.check_valid(DEFAULT_TOLERANCE)?;
        }
        let instrument = Self { outcomes, members };
        let all: Vec<usize> = (0..instrument.members.len()).collect();
        if !instrument.coarse_grain(&all)?.is_channel(DEFAULT_TOLERANCE) {
            return Err(Error::InvalidSystem("instrument does not coarse-grain to a channel".into()));
        }
        Ok(instrument)
    }

    pub fn outcomes(&self) -> &[String] {
        &self.outcomes
    }

    pub fn members(&self) -> &[TransformationTensor<S>] {
        &self.members
    }

    /// `t_Y = sum_{y in Y} t_y` over outcome indices.
    pub fn coarse_grain(&self, subset: &[usize]) -> Result<TransformationTensor<S>> {
        let first = &self.members[0];
        let mut acc = TransformationTensor::raw(first.in_shape.clone(), first.out_shape.clone());
        for &y in subset {
            let m = self.members.get(y).ok_or_else(|| Error::OutOfRange(format!("outcome {y}")))?;
            acc = acc.add(m)?;
        }
        Ok(acc)
    }
}

pub fn coarse_grain<S: Scalar>(instrument: &Instrument<S>, subset: &[usize]) -> Result<TransformationTensor<S>> {
    instrument.coarse_grain(subset)
}
