//! Closed algebra over scalars, states, effects and transformations.
//!
//! The atomic characterisation only covers maps between non-trivial systems,
//! so mixed compositions (a state beside a map, an effect followed by a state,
//! ...) are spelled out here case by case.

use serde_json::{json, Value};

use crate::bct::state::{pair, par_effects, par_states, BctEffect, BctState};
use crate::bct::tensor::{compose_par, AtomicTerm, TransformationTensor};
use crate::error::{Error, Result};
use crate::scalar::{Rational, Scalar};
use crate::systems::{join_label, SystemShape};

#[derive(Clone, Debug, PartialEq)]
pub enum Process<S = Rational> {
    Scalar(S),
    State(BctState<S>),
    Effect(BctEffect<S>),
    Map(TransformationTensor<S>),
}

impl<S: Scalar> Process<S> {
    /// Folds states and effects on the trivial system into scalars.
    pub fn normalize(self) -> Self {
        match self {
            Process::State(r) if r.shape().is_trivial() => Process::Scalar(r.weights()[0].clone()),
            Process::Effect(e) if e.shape().is_trivial() => Process::Scalar(e.weights()[0].clone()),
            p => p,
        }
    }

    pub fn input(&self) -> SystemShape {
        match self {
            Process::Scalar(_) | Process::State(_) => SystemShape::trivial(),
            Process::Effect(e) => e.shape().clone(),
            Process::Map(t) => t.in_shape().clone(),
        }
    }

    pub fn output(&self) -> SystemShape {
        match self {
            Process::Scalar(_) | Process::Effect(_) => SystemShape::trivial(),
            Process::State(r) => r.shape().clone(),
            Process::Map(t) => t.out_shape().clone(),
        }
    }

    pub fn kind(&self) -> &'static str {
        match self {
            Process::Scalar(_) => "scalar",
            Process::State(_) => "state",
            Process::Effect(_) => "effect",
            Process::Map(_) => "transformation",
        }
    }

    pub fn scale(&self, p: &S) -> Self {
        match self {
            Process::Scalar(x) => Process::Scalar(x.clone() * p.clone()),
            Process::State(r) => Process::State(r.scale(p)),
            Process::Effect(e) => Process::Effect(e.scale(p)),
            Process::Map(t) => Process::Map(t.scale(p)),
        }
    }

    pub fn as_scalar(&self) -> Option<&S> {
        match self {
            Process::Scalar(x) => Some(x),
            _ => None,
        }
    }

    /// Sequential composition: `self` first, then `next`.
    pub fn then(&self, next: &Self) -> Result<Self> {
        if self.output() != next.input() {
            return Err(Error::ShapeMismatch { left: self.output().to_string(), right: next.input().to_string() });
        }
        use Process::*;
        let out = match (self, next) {
            (Scalar(p), x) => x.scale(p),
            (x, Scalar(p)) => x.scale(p),
            (State(r), Map(t)) => State(t.apply(r)?),
            (State(r), Effect(e)) => Scalar(pair(e, r)?),
            (Map(t), Map(u)) => Map(t.then(u)?),
            (Map(t), Effect(e)) => Effect(t.pull(e)?),
            (Effect(e), State(r)) => Map(measure_prepare(e, r)?),
            _ => unreachable!("shape check rules out the remaining cases"),
        };
        Ok(out.normalize())
    }

    /// Parallel composition, `self` on the left.
    pub fn beside(&self, right: &Self) -> Result<Self> {
        use Process::*;
        let out = match (self, right) {
            (Scalar(p), x) => x.scale(p),
            (x, Scalar(p)) => x.scale(p),
            (State(a), State(b)) => State(par_states(a, b)),
            (Effect(a), Effect(b)) => Effect(par_effects(a, b)),
            (State(r), Effect(e)) | (Effect(e), State(r)) => Map(measure_prepare(e, r)?),
            (Map(t), Map(u)) => Map(compose_par(t, u)?),
            (Effect(e), Map(t)) => Map(identity_par_map(e.shape(), t)?.then(&effect_par_identity(e, t.out_shape())?)?),
            (Map(t), Effect(e)) => {
                Map(crate::bct::tensor::par_with_identity(t, e.shape())?.then(&identity_par_effect(t.out_shape(), e)?)?)
            }
            (State(r), Map(t)) => Map(t.then(&state_par_identity(r, t.out_shape())?)?),
            (Map(t), State(r)) => Map(t.then(&identity_par_state(t.out_shape(), r)?)?),
        };
        Ok(out.normalize())
    }

    pub fn to_json(&self) -> Value {
        match self {
            Process::Scalar(x) => json!({ "kind": "scalar", "value": x.to_json() }),
            Process::State(r) => r.to_json(),
            Process::Effect(e) => e.to_json(),
            Process::Map(t) => {
                let mut v = t.to_json();
                v["kind"] = json!("transformation");
                v
            }
        }
    }
}

fn identity_par_map<S: Scalar>(left: &SystemShape, t: &TransformationTensor<S>) -> Result<TransformationTensor<S>> {
    crate::bct::tensor::identity_par(left, t)
}

/// Discard-then-prepare `A -> B`: `i -> l` with weight `e[i] rho[l] / 2` for
/// both shifts.
pub fn measure_prepare<S: Scalar>(effect: &BctEffect<S>, state: &BctState<S>) -> Result<TransformationTensor<S>> {
    let half = S::half();
    let mut terms = Vec::new();
    for (i, ei) in effect.weights().iter().enumerate() {
        for (l, rl) in state.weights().iter().enumerate() {
            let w = half.clone() * ei.clone() * rl.clone();
            if !w.is_zero() {
                terms.push(AtomicTerm::new(i + 1, l + 1, 0, w.clone()));
                terms.push(AtomicTerm::new(i + 1, l + 1, 1, w));
            }
        }
    }
    TransformationTensor::from_terms_unchecked(effect.shape().clone(), state.shape().clone(), terms)
}

/// `rho (x) I_c : C -> B (x) C`.
pub fn state_par_identity<S: Scalar>(state: &BctState<S>, c: &SystemShape) -> Result<TransformationTensor<S>> {
    let b = state.shape();
    let half = S::half();
    let mut terms = Vec::new();
    for (bi, r) in state.weights().iter().enumerate() {
        if r.is_zero() {
            continue;
        }
        for ci in 1..=c.bct_dim() {
            for s in 0..2u8 {
                terms.push(AtomicTerm::new(ci, join_label(b, c, bi + 1, ci, s)?, s, half.clone() * r.clone()));
            }
        }
    }
    TransformationTensor::from_terms_unchecked(c.clone(), b.compose(c), terms)
}

/// `I_c (x) rho : C -> C (x) B`.
pub fn identity_par_state<S: Scalar>(c: &SystemShape, state: &BctState<S>) -> Result<TransformationTensor<S>> {
    let b = state.shape();
    let half = S::half();
    let mut terms = Vec::new();
    for (bi, r) in state.weights().iter().enumerate() {
        if r.is_zero() {
            continue;
        }
        for ci in 1..=c.bct_dim() {
            for s in 0..2u8 {
                terms.push(AtomicTerm::new(ci, join_label(c, b, ci, bi + 1, s)?, 0, half.clone() * r.clone()));
            }
        }
    }
    TransformationTensor::from_terms_unchecked(c.clone(), c.compose(b), terms)
}

/// `e (x) I_c : A (x) C -> C`.
pub fn effect_par_identity<S: Scalar>(effect: &BctEffect<S>, c: &SystemShape) -> Result<TransformationTensor<S>> {
    let a = effect.shape();
    let mut terms = Vec::new();
    for (ai, w) in effect.weights().iter().enumerate() {
        if w.is_zero() {
            continue;
        }
        for ci in 1..=c.bct_dim() {
            for s in 0..2u8 {
                terms.push(AtomicTerm::new(join_label(a, c, ai + 1, ci, s)?, ci, s, w.clone()));
            }
        }
    }
    TransformationTensor::from_terms_unchecked(a.compose(c), c.clone(), terms)
}

/// `I_c (x) e : C (x) A -> C`.
pub fn identity_par_effect<S: Scalar>(c: &SystemShape, effect: &BctEffect<S>) -> Result<TransformationTensor<S>> {
    let a = effect.shape();
    let mut terms = Vec::new();
    for (ai, w) in effect.weights().iter().enumerate() {
        if w.is_zero() {
            continue;
        }
        for ci in 1..=c.bct_dim() {
            for s in 0..2u8 {
                terms.push(AtomicTerm::new(join_label(c, a, ci, ai + 1, s)?, ci, 0, w.clone()));
            }
        }
    }
    TransformationTensor::from_terms_unchecked(c.compose(a), c.clone(), terms)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::bct::state::{deterministic_effect, point_effect, point_state, pure_effect};
    use crate::bct::tensor::identity;
    use crate::systems::PureLabel;

    type R = Rational;

    fn shape(v: &[usize]) -> SystemShape {
        SystemShape::new(v.to_vec()).unwrap()
    }

    #[test]
    fn closed_product_circuit_gives_half() {
        let a = shape(&[2]);
        let rho = Process::State(point_state::<R>(&a, 1)).beside(&Process::State(point_state(&a, 1))).unwrap();
        let eff = pure_effect::<R>(&a.compose(&a), &PureLabel::bipartite(1, 1, 0).unwrap()).unwrap();
        let p = rho.then(&Process::Effect(eff)).unwrap();
        assert_eq!(p, Process::Scalar(R::new(1, 2)));
    }

    #[test]
    fn local_effect_on_bipartite_state() {
        // (i'| (x) id applied to |(i,j)_s) gives delta_{i,i'} |j).
        let (a, b) = (shape(&[2]), shape(&[3]));
        for i in 1..=2 {
            for j in 1..=3 {
                for s in 0..2 {
                    let q = join_label(&a, &b, i, j, s).unwrap();
                    let st = Process::State(point_state::<R>(&a.compose(&b), q));
                    let local = Process::Effect(point_effect::<R>(&a, 1))
                        .beside(&Process::Map(identity(&b).unwrap()))
                        .unwrap();
                    let out = st.then(&local).unwrap();
                    let expected = if i == 1 { point_state(&b, j) } else { BctState::from_raw(b.clone(), vec![R::from(0); 3]) };
                    assert_eq!(out, Process::State(expected));
                }
            }
        }
    }

    #[test]
    fn local_state_on_bipartite_effect_carries_half() {
        let (a, b) = (shape(&[2]), shape(&[2]));
        let eff = Process::Effect(point_effect::<R>(&a.compose(&b), join_label(&a, &b, 2, 1, 1).unwrap()));
        let prep = Process::State(point_state::<R>(&a, 2)).beside(&Process::Map(identity(&b).unwrap())).unwrap();
        let out = prep.then(&eff).unwrap();
        assert_eq!(out, Process::Effect(BctEffect::from_raw(b.clone(), vec![R::new(1, 2), R::from(0)])));
    }

    #[test]
    fn measure_prepare_and_discards() {
        let a = shape(&[3]);
        let disc = Process::Effect(deterministic_effect::<R>(&a));
        let prep = Process::State(point_state::<R>(&shape(&[2]), 2));
        let mp = disc.then(&prep).unwrap();
        let Process::Map(t) = &mp else { panic!("expected a map") };
        assert!(t.is_channel(0.0));
        assert_eq!(prep.beside(&disc).unwrap(), mp);
        assert!(prep.then(&prep).is_err());
    }
}
