use serde_json::{json, Value};

use crate::error::{Error, Result};
use crate::scalar::{Rational, Scalar};
use crate::systems::{flatten_label, join_label, PureLabel, SystemShape};

/// A subnormalised state: a nonnegative weight per global pure label.
#[derive(Clone, Debug, PartialEq)]
pub struct BctState<S = Rational> {
    shape: SystemShape,
    weights: Vec<S>,
}

/// An effect: a weight in `[0, 1]` per global pure label.
#[derive(Clone, Debug, PartialEq)]
pub struct BctEffect<S = Rational> {
    shape: SystemShape,
    weights: Vec<S>,
}

fn check_len<S>(shape: &SystemShape, weights: &[S]) -> Result<()> {
    if weights.len() != shape.bct_dim() {
        return Err(Error::DimensionMismatch { expected: shape.bct_dim(), found: weights.len() });
    }
    Ok(())
}

impl<S: Scalar> BctState<S> {
    pub fn new(shape: SystemShape, weights: Vec<S>) -> Result<Self> {
        Self::with_tolerance(shape, weights, crate::scalar::DEFAULT_TOLERANCE)
    }

    pub fn with_tolerance(shape: SystemShape, weights: Vec<S>, tol: f64) -> Result<Self> {
        check_len(&shape, &weights)?;
        if let Some(q) = weights.iter().position(|w| !w.is_nonneg()) {
            return Err(Error::Negative { position: format!("label {}", q + 1), value: format!("{:?}", weights[q]) });
        }
        let total: S = weights.iter().cloned().sum();
        if !total.at_most_one(tol) {
            return Err(Error::ExceedsOne { what: "state norm", position: "total".into(), value: format!("{total:?}") });
        }
        Ok(Self { shape, weights })
    }

    pub(crate) fn from_raw(shape: SystemShape, weights: Vec<S>) -> Self {
        debug_assert_eq!(weights.len(), shape.bct_dim());
        Self { shape, weights }
    }

    pub fn shape(&self) -> &SystemShape {
        &self.shape
    }

    pub fn weights(&self) -> &[S] {
        &self.weights
    }

    /// Weight on global label `q` (1-based).
    pub fn weight(&self, q: usize) -> &S {
        &self.weights[q - 1]
    }

    pub fn norm(&self) -> S {
        self.weights.iter().cloned().sum()
    }

    pub fn is_deterministic(&self, tol: f64) -> bool {
        self.norm().close(&S::one(), tol)
    }

    pub fn scale(&self, p: &S) -> Self {
        Self::from_raw(self.shape.clone(), self.weights.iter().map(|w| w.clone() * p.clone()).collect())
    }

    pub fn convert<T: Scalar>(&self) -> BctState<T> {
        BctState::from_raw(self.shape.clone(), self.weights.iter().map(Scalar::convert).collect())
    }

    /// Pure states in the support with their weights: the unique subconvex
    /// decomposition.
    pub fn decompose(&self) -> Vec<(usize, S)> {
        self.weights.iter().enumerate().filter(|(_, w)| !w.is_zero()).map(|(q, w)| (q + 1, w.clone())).collect()
    }

    pub fn to_json(&self) -> Value {
        json!({
            "kind": "state",
            "shape": self.shape.elems(),
            "weights": self.weights.iter().map(Scalar::to_json).collect::<Vec<_>>(),
        })
    }
}

impl<S: Scalar> BctEffect<S> {
    pub fn new(shape: SystemShape, weights: Vec<S>) -> Result<Self> {
        Self::with_tolerance(shape, weights, crate::scalar::DEFAULT_TOLERANCE)
    }

    pub fn with_tolerance(shape: SystemShape, weights: Vec<S>, tol: f64) -> Result<Self> {
        check_len(&shape, &weights)?;
        for (q, w) in weights.iter().enumerate() {
            if !w.is_nonneg() {
                return Err(Error::Negative { position: format!("label {}", q + 1), value: format!("{w:?}") });
            }
            if !w.at_most_one(tol) {
                return Err(Error::ExceedsOne {
                    what: "effect weight",
                    position: format!("label {}", q + 1),
                    value: format!("{w:?}"),
                });
            }
        }
        Ok(Self { shape, weights })
    }

    pub(crate) fn from_raw(shape: SystemShape, weights: Vec<S>) -> Self {
        debug_assert_eq!(weights.len(), shape.bct_dim());
        Self { shape, weights }
    }

    pub fn shape(&self) -> &SystemShape {
        &self.shape
    }

    pub fn weights(&self) -> &[S] {
        &self.weights
    }

    pub fn weight(&self, q: usize) -> &S {
        &self.weights[q - 1]
    }

    pub fn scale(&self, p: &S) -> Self {
        Self::from_raw(self.shape.clone(), self.weights.iter().map(|w| w.clone() * p.clone()).collect())
    }

    pub fn convert<T: Scalar>(&self) -> BctEffect<T> {
        BctEffect::from_raw(self.shape.clone(), self.weights.iter().map(Scalar::convert).collect())
    }

    pub fn to_json(&self) -> Value {
        json!({
            "kind": "effect",
            "shape": self.shape.elems(),
            "weights": self.weights.iter().map(Scalar::to_json).collect::<Vec<_>>(),
        })
    }
}

pub fn pure_state<S: Scalar>(shape: &SystemShape, label: &PureLabel) -> Result<BctState<S>> {
    let q = flatten_label(shape, label)?;
    Ok(point_state(shape, q))
}

pub fn pure_effect<S: Scalar>(shape: &SystemShape, label: &PureLabel) -> Result<BctEffect<S>> {
    let q = flatten_label(shape, label)?;
    Ok(point_effect(shape, q))
}

/// Pure state at global label `q`.
pub fn point_state<S: Scalar>(shape: &SystemShape, q: usize) -> BctState<S> {
    let mut w = vec![S::zero(); shape.bct_dim()];
    w[q - 1] = S::one();
    BctState::from_raw(shape.clone(), w)
}

pub fn point_effect<S: Scalar>(shape: &SystemShape, q: usize) -> BctEffect<S> {
    let mut w = vec![S::zero(); shape.bct_dim()];
    w[q - 1] = S::one();
    BctEffect::from_raw(shape.clone(), w)
}

/// The unique deterministic effect: the all-ones covector.
pub fn deterministic_effect<S: Scalar>(shape: &SystemShape) -> BctEffect<S> {
    BctEffect::from_raw(shape.clone(), vec![S::one(); shape.bct_dim()])
}

pub fn uniform_state<S: Scalar>(shape: &SystemShape) -> BctState<S> {
    let n = shape.bct_dim();
    BctState::from_raw(shape.clone(), vec![S::one() / S::from_usize(n); n])
}

pub fn pair<S: Scalar>(effect: &BctEffect<S>, state: &BctState<S>) -> Result<S> {
    if effect.shape != state.shape {
        return Err(Error::ShapeMismatch { left: effect.shape.to_string(), right: state.shape.to_string() });
    }
    Ok(effect.weights.iter().zip(&state.weights).map(|(e, r)| e.clone() * r.clone()).sum())
}

/// `rho (x) sigma`: each pair of pure states spreads half its weight on each
/// section bit.
pub fn par_states<S: Scalar>(rho: &BctState<S>, sigma: &BctState<S>) -> BctState<S> {
    if rho.shape.is_trivial() {
        return sigma.scale(&rho.weights[0]);
    }
    if sigma.shape.is_trivial() {
        return rho.scale(&sigma.weights[0]);
    }
    let shape = rho.shape.compose(&sigma.shape);
    let mut w = vec![S::zero(); shape.bct_dim()];
    let half = S::half();
    for (a, ra) in rho.weights.iter().enumerate() {
        if ra.is_zero() {
            continue;
        }
        for (b, sb) in sigma.weights.iter().enumerate() {
            if sb.is_zero() {
                continue;
            }
            let v = half.clone() * ra.clone() * sb.clone();
            for s in 0..2 {
                let q = join_label(&rho.shape, &sigma.shape, a + 1, b + 1, s).expect("labels in range");
                w[q - 1] = w[q - 1].clone() + v.clone();
            }
        }
    }
    BctState::from_raw(shape, w)
}

/// `a (x) b` for effects: no factor one half, so that discarding both factors
/// is the deterministic effect of the composite.
pub fn par_effects<S: Scalar>(a: &BctEffect<S>, b: &BctEffect<S>) -> BctEffect<S> {
    if a.shape.is_trivial() {
        return b.scale(&a.weights[0]);
    }
    if b.shape.is_trivial() {
        return a.scale(&b.weights[0]);
    }
    let shape = a.shape.compose(&b.shape);
    let mut w = vec![S::zero(); shape.bct_dim()];
    for (x, ex) in a.weights.iter().enumerate() {
        for (y, ey) in b.weights.iter().enumerate() {
            let v = ex.clone() * ey.clone();
            for s in 0..2 {
                let q = join_label(&a.shape, &b.shape, x + 1, y + 1, s).expect("labels in range");
                w[q - 1] = v.clone();
            }
        }
    }
    BctEffect::from_raw(shape, w)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::systems::{all_labels, q_encode};

    type R = Rational;

    fn shape(v: &[usize]) -> SystemShape {
        SystemShape::new(v.to_vec()).unwrap()
    }

    #[test]
    fn pure_state_examples() {
        let s: BctState<R> = pure_state(&shape(&[3]), &PureLabel::single(2)).unwrap();
        assert_eq!(s.weights(), &[R::from(0), R::from(1), R::from(0)]);
        let s: BctState<R> = pure_state(&shape(&[2, 2]), &PureLabel::bipartite(1, 2, 1).unwrap()).unwrap();
        assert_eq!(s.weights().len(), 8);
        assert_eq!(s.decompose(), vec![(4, R::from(1))]);
        assert!(pure_state::<R>(&shape(&[2]), &PureLabel::single(3)).is_err());
    }

    #[test]
    fn delta_pairing_table() {
        let sh = shape(&[2, 3]);
        for a in all_labels(&sh) {
            for b in all_labels(&sh) {
                let e: BctEffect<R> = pure_effect(&sh, &a).unwrap();
                let r: BctState<R> = pure_state(&sh, &b).unwrap();
                let expected = if a == b { R::from(1) } else { R::from(0) };
                assert_eq!(pair(&e, &r).unwrap(), expected);
            }
        }
    }

    #[test]
    fn product_state_rule() {
        let one = shape(&[2]);
        let r1: BctState<R> = pure_state(&one, &PureLabel::single(1)).unwrap();
        let prod = par_states(&r1, &r1);
        let half = R::new(1, 2);
        assert_eq!(prod.decompose(), vec![(1, half), (2, half)]);
        let e: BctEffect<R> = pure_effect(&shape(&[2, 2]), &PureLabel::bipartite(1, 1, 0).unwrap()).unwrap();
        assert_eq!(pair(&e, &prod).unwrap(), half);
        let e1: BctEffect<R> = pure_effect(&one, &PureLabel::single(1)).unwrap();
        assert_eq!(pair(&par_effects(&e1, &e1), &prod).unwrap(), R::from(1));
    }

    #[test]
    fn discard_of_composite_is_product_of_discards() {
        let (a, b) = (shape(&[2]), shape(&[3]));
        let d = par_effects(&deterministic_effect::<R>(&a), &deterministic_effect(&b));
        assert_eq!(d, deterministic_effect(&a.compose(&b)));
        assert_eq!(d.weights().len(), 12);
    }

    #[test]
    fn half_mixture_pairing() {
        let sh = shape(&[2, 2]);
        let mut w = vec![R::from(0); 8];
        w[q_encode(2, 2, 1, 1, 0).unwrap() - 1] = R::new(1, 2);
        w[q_encode(2, 2, 1, 1, 1).unwrap() - 1] = R::new(1, 2);
        let rho = BctState::new(sh.clone(), w).unwrap();
        let e: BctEffect<R> = pure_effect(&sh, &PureLabel::bipartite(1, 1, 0).unwrap()).unwrap();
        assert_eq!(pair(&e, &rho).unwrap(), R::new(1, 2));
        assert_eq!(pair(&deterministic_effect(&sh), &rho).unwrap(), R::from(1));
    }

    #[test]
    fn validation() {
        let sh = shape(&[2]);
        assert!(BctState::<R>::new(sh.clone(), vec![R::new(2, 3), R::new(2, 3)]).is_err());
        assert!(BctState::<R>::new(sh.clone(), vec![R::new(-1, 3), R::new(1, 3)]).is_err());
        assert!(BctEffect::<R>::new(sh.clone(), vec![R::new(4, 3), R::new(0, 1)]).is_err());
        assert!(BctEffect::<R>::new(sh, vec![R::from(1)]).is_err());
        let pair_err = pair(&deterministic_effect::<R>(&shape(&[2])), &uniform_state(&shape(&[3])));
        assert!(matches!(pair_err, Err(Error::ShapeMismatch { .. })));
    }
}
