//! The ontological model of BCT as explicit stochastic maps.
//!
//! An elementary system of dimension `n` is modelled by `n` labels times one
//! hidden bit, so `Lambda(n) = 2n`. Composites concatenate wires in the order
//! `(n1, B1, n2, B2, ...)`, left factor outermost. A pure label with section
//! bits `s_k` is carried by the ontic bits `b_1, b_1 ^ s_1, b_1 ^ s_2, ...`:
//! every section bit is the parity between the first hidden bit and the bit of
//! factor `k + 1`.
//!
//! Transformations are handled on fused wires. The merging bijection `mu`
//! takes a composite ontic point to `(global label, first hidden bit)`, and on
//! fused wires an atomic term `i0 -> l` with shift `tau` acts as
//! `(i0, b) -> (l, b ^ tau)`.

use serde_json::{json, Value};

use crate::bct::process::Process;
use crate::bct::state::{BctEffect, BctState};
use crate::bct::tensor::TransformationTensor;
use crate::classical::ClassicalMap;
use crate::error::{Error, Result};
use crate::scalar::Scalar;
use crate::systems::{flatten_label, unflatten_label, LabelCodec, PureLabel, SystemShape};

/// Ontic space of a BCT system.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct OnticSpace {
    shape: SystemShape,
}

/// A point of an ontic space: one label and one hidden bit per factor.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct OnticPoint {
    pub indices: Vec<usize>,
    pub bits: Vec<u8>,
}

impl OnticSpace {
    pub fn new(shape: SystemShape) -> Self {
        Self { shape }
    }

    pub fn shape(&self) -> &SystemShape {
        &self.shape
    }

    pub fn dim(&self) -> usize {
        self.shape.ontic_dim()
    }

    /// Wire dimensions in order, `[n1, 2, n2, 2, ...]`.
    pub fn wire_dims(&self) -> Vec<usize> {
        self.shape.elems().iter().flat_map(|&n| [n, 2]).collect()
    }

    /// 0-based row-major index of a point.
    pub fn encode(&self, point: &OnticPoint) -> Result<usize> {
        let elems = self.shape.elems();
        if point.indices.len() != elems.len() || point.bits.len() != elems.len() {
            return Err(Error::DimensionMismatch { expected: elems.len(), found: point.indices.len() });
        }
        let mut idx = 0;
        for ((&n, &x), &b) in elems.iter().zip(&point.indices).zip(&point.bits) {
            if x == 0 || x > n || b > 1 {
                return Err(Error::OutOfRange(format!("ontic point {point:?} for {}", self.shape)));
            }
            idx = idx * 2 * n + (x - 1) * 2 + b as usize;
        }
        Ok(idx)
    }

    pub fn decode(&self, mut idx: usize) -> Result<OnticPoint> {
        if idx >= self.dim() {
            return Err(Error::OutOfRange(format!("ontic index {idx} for {}", self.shape)));
        }
        let elems = self.shape.elems();
        let mut indices = vec![0; elems.len()];
        let mut bits = vec![0; elems.len()];
        for (k, &n) in elems.iter().enumerate().rev() {
            let block = idx % (2 * n);
            idx /= 2 * n;
            indices[k] = block / 2 + 1;
            bits[k] = (block % 2) as u8;
        }
        Ok(OnticPoint { indices, bits })
    }

    /// Human-readable wire label, e.g. `(1,0,2,1)` for `(i1, b1, i2, b2)`.
    pub fn label(&self, idx: usize) -> String {
        match self.decode(idx) {
            Ok(p) if !p.indices.is_empty() => {
                let parts: Vec<String> =
                    p.indices.iter().zip(&p.bits).flat_map(|(i, b)| [i.to_string(), b.to_string()]).collect();
                format!("({})", parts.join(","))
            }
            _ => "()".to_string(),
        }
    }

    pub fn labels(&self) -> Vec<String> {
        (0..self.dim()).map(|i| self.label(i)).collect()
    }

    /// Merges an ontic point into `(global label, carried bit)`.
    pub fn fuse(&self, idx: usize) -> Result<(usize, u8)> {
        if self.shape.is_trivial() {
            return Ok((1, 0));
        }
        let p = self.decode(idx)?;
        let elems = self.shape.elems();
        let (mut q, c) = (p.indices[0], p.bits[0]);
        let mut acc_dim = elems[0];
        for k in 1..elems.len() {
            let codec = LabelCodec::new(acc_dim, elems[k])?;
            q = codec.encode(q, p.indices[k], c ^ p.bits[k])?;
            acc_dim = codec.len();
        }
        Ok((q, c))
    }

    /// Inverse of [`fuse`](Self::fuse).
    pub fn unfuse(&self, q: usize, c: u8) -> Result<usize> {
        if self.shape.is_trivial() {
            return Ok(0);
        }
        let label = unflatten_label(&self.shape, q)?;
        let bits = std::iter::once(c).chain(label.bits().iter().map(|&s| s ^ c)).collect();
        self.encode(&OnticPoint { indices: label.indices().to_vec(), bits })
    }
}

pub fn xi_system(shape: &SystemShape) -> OnticSpace {
    OnticSpace::new(shape.clone())
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Role {
    Scalar,
    State,
    Effect,
    Map,
}

impl Role {
    pub fn as_str(self) -> &'static str {
        match self {
            Role::Scalar => "scalar",
            Role::State => "state",
            Role::Effect => "effect",
            Role::Map => "map",
        }
    }
}

/// Image of a BCT process: a classical map between ontic spaces.
#[derive(Clone, Debug, PartialEq)]
pub struct OnticImage<S> {
    pub role: Role,
    pub input: OnticSpace,
    pub output: OnticSpace,
    pub map: ClassicalMap<S>,
}

impl<S: Scalar> OnticImage<S> {
    pub fn to_json(&self) -> Value {
        json!({
            "role": self.role.as_str(),
            "in_shape": self.input.shape().elems(),
            "out_shape": self.output.shape().elems(),
            "in_labels": self.input.labels(),
            "out_labels": self.output.labels(),
            "map": self.map.to_json(),
        })
    }
}

fn shape_points(shape: &SystemShape, label: &PureLabel) -> Result<[OnticPoint; 2]> {
    let make = |b: u8| OnticPoint {
        indices: label.indices().to_vec(),
        bits: std::iter::once(b).chain(label.bits().iter().map(|&s| s ^ b)).collect(),
    };
    label.validate(shape)?;
    Ok([make(0), make(1)])
}

/// State image, from the closed form: half on each value of the first hidden
/// bit, the remaining bits fixed by the section bits.
pub fn xi_state<S: Scalar>(state: &BctState<S>) -> Result<OnticImage<S>> {
    let space = xi_system(state.shape());
    let mut v = vec![S::zero(); space.dim()];
    if state.shape().is_trivial() {
        v[0] = state.weights()[0].clone();
    } else {
        let half = S::half();
        for (q, w) in state.weights().iter().enumerate() {
            if w.is_zero() {
                continue;
            }
            let label = unflatten_label(state.shape(), q + 1)?;
            for p in shape_points(state.shape(), &label)? {
                let idx = space.encode(&p)?;
                v[idx] = v[idx].clone() + half.clone() * w.clone();
            }
        }
    }
    Ok(OnticImage {
        role: Role::State,
        input: xi_system(&SystemShape::trivial()),
        output: space,
        map: ClassicalMap::state(v)?,
    })
}

/// Effect image: the label weight on both hidden-bit branches (no half).
pub fn xi_effect<S: Scalar>(effect: &BctEffect<S>) -> Result<OnticImage<S>> {
    let space = xi_system(effect.shape());
    let mut v = vec![S::zero(); space.dim()];
    if effect.shape().is_trivial() {
        v[0] = effect.weights()[0].clone();
    } else {
        for (q, w) in effect.weights().iter().enumerate() {
            let label = unflatten_label(effect.shape(), q + 1)?;
            for p in shape_points(effect.shape(), &label)? {
                v[space.encode(&p)?] = w.clone();
            }
        }
    }
    Ok(OnticImage {
        role: Role::Effect,
        input: space,
        output: xi_system(&SystemShape::trivial()),
        map: ClassicalMap::effect(v)?,
    })
}

/// Transformation image: fuse the input wires, act on `(label, bit)`, unfuse.
pub fn xi_transformation<S: Scalar>(t: &TransformationTensor<S>) -> Result<OnticImage<S>> {
    let (sin, sout) = (xi_system(t.in_shape()), xi_system(t.out_shape()));
    let mut rows: Vec<Vec<(usize, u8, S)>> = vec![Vec::new(); t.in_shape().bct_dim()];
    for term in t.terms() {
        rows[term.input - 1].push((term.output, term.tau, term.weight));
    }
    let (din, dout) = (sin.dim(), sout.dim());
    let mut entries = vec![S::zero(); din * dout];
    for col in 0..din {
        let (q, c) = sin.fuse(col)?;
        for (l, tau, w) in &rows[q - 1] {
            let row = sout.unfuse(*l, c ^ tau)?;
            let e = &mut entries[row * din + col];
            *e = e.clone() + w.clone();
        }
    }
    Ok(OnticImage { role: Role::Map, input: sin, output: sout, map: ClassicalMap::new(din, dout, entries)? })
}

/// The merging bijection of a shape onto the fused single system, as a
/// permutation matrix `Lambda(shape) -> Lambda(fused)`.
pub fn mu_chain<S: Scalar>(shape: &SystemShape) -> Result<ClassicalMap<S>> {
    let space = xi_system(shape);
    let d = space.dim();
    let mut perm = Vec::with_capacity(d);
    for idx in 0..d {
        let (q, c) = space.fuse(idx)?;
        perm.push((q - 1) * 2 + c as usize + 1);
    }
    crate::classical::permutation_map(&perm)
}

/// `mu` for `left (x) right`: the image of the merging map.
pub fn mu<S: Scalar>(left: &SystemShape, right: &SystemShape) -> Result<ClassicalMap<S>> {
    if left.is_trivial() || right.is_trivial() {
        return Err(Error::InvalidSystem("merging needs non-trivial systems".into()));
    }
    mu_chain(&left.compose(right))
}

pub fn mu_inv<S: Scalar>(left: &SystemShape, right: &SystemShape) -> Result<ClassicalMap<S>> {
    Ok(mu::<S>(left, right)?.transpose())
}

/// Image of any process as a classical map (scalars are 1x1).
pub fn xi_process<S: Scalar>(p: &Process<S>) -> Result<ClassicalMap<S>> {
    Ok(match p {
        Process::Scalar(x) => ClassicalMap::scalar(x.clone()),
        Process::State(r) => xi_state(r)?.map,
        Process::Effect(e) => xi_effect(e)?.map,
        Process::Map(t) => xi_transformation(t)?.map,
    })
}

/// Ontic wire permutation exchanging the blocks of `left` and `right`.
pub fn block_swap<S: Scalar>(left: &SystemShape, right: &SystemShape) -> Result<ClassicalMap<S>> {
    let (a, b) = (left.ontic_dim(), right.ontic_dim());
    let perm: Vec<usize> = (0..a * b).map(|idx| (idx % b) * a + idx / b + 1).collect();
    crate::classical::permutation_map(&perm)
}

/// Recovers `C(i, l, tau)` from a transformation image through the fused
/// column `(i, 0)`.
pub fn recover_coefficients<S: Scalar>(
    image: &OnticImage<S>,
    in_shape: &SystemShape,
    out_shape: &SystemShape,
) -> Result<Vec<(usize, usize, u8, S)>> {
    let (sin, sout) = (xi_system(in_shape), xi_system(out_shape));
    let mut out = Vec::new();
    for i in 1..=in_shape.bct_dim() {
        let col = sin.unfuse(i, 0)?;
        for l in 1..=out_shape.bct_dim() {
            for tau in 0..2u8 {
                let w = image.map.get(sout.unfuse(l, tau)?, col).clone();
                if !w.is_zero() {
                    out.push((i, l, tau, w));
                }
            }
        }
    }
    Ok(out)
}

/// Global label of an ontic point whose hidden bits are consistent with a
/// pure label, if any (used by diagnostics).
pub fn label_of_point(shape: &SystemShape, point: &OnticPoint) -> Result<usize> {
    let b = point.bits.first().copied().unwrap_or(0);
    let bits = point.bits.iter().skip(1).map(|&x| x ^ b).collect();
    flatten_label(shape, &PureLabel::new(point.indices.clone(), bits)?)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::bct::state::{deterministic_effect, par_states, point_effect, point_state, pure_state};
    use crate::bct::tensor::{identity, nu, reversible, swap, AtomicTerm, ReversibleSpec};
    use crate::scalar::Rational;
    use crate::systems::q_encode;

    type R = Rational;

    fn shape(v: &[usize]) -> SystemShape {
        SystemShape::new(v.to_vec()).unwrap()
    }

    fn r(n: i128, d: i128) -> R {
        R::new(n, d)
    }

    #[test]
    fn ontic_dimensions() {
        assert_eq!(xi_system(&shape(&[3])).dim(), 6);
        assert_eq!(xi_system(&SystemShape::trivial()).dim(), 1);
        assert_eq!(xi_system(&shape(&[2, 3])).dim(), 24);
        let sp = xi_system(&shape(&[2, 3]));
        for i in 0..sp.dim() {
            assert_eq!(sp.encode(&sp.decode(i).unwrap()).unwrap(), i);
            let (q, c) = sp.fuse(i).unwrap();
            assert_eq!(sp.unfuse(q, c).unwrap(), i);
        }
    }

    #[test]
    fn state_images() {
        let a = shape(&[2]);
        let img = xi_state(&point_state::<R>(&a, 2)).unwrap().map;
        assert_eq!(img.entries(), &[r(0, 1), r(0, 1), r(1, 2), r(1, 2)]);
        let ab = shape(&[2, 2]);
        let rho = pure_state::<R>(&ab, &PureLabel::bipartite(1, 1, 0).unwrap()).unwrap();
        let img = xi_state(&rho).unwrap();
        let sp = &img.output;
        let p1 = sp.encode(&OnticPoint { indices: vec![1, 1], bits: vec![0, 0] }).unwrap();
        let p2 = sp.encode(&OnticPoint { indices: vec![1, 1], bits: vec![1, 1] }).unwrap();
        for i in 0..16 {
            let expected = if i == p1 || i == p2 { r(1, 2) } else { r(0, 1) };
            assert_eq!(img.map.get(i, 0), &expected);
        }
        // Product states go to product distributions.
        for i in 1..=2 {
            for j in 1..=3 {
                let (x, y) = (point_state::<R>(&a, i), point_state::<R>(&shape(&[3]), j));
                let lhs = xi_state(&par_states(&x, &y)).unwrap().map;
                let rhs = xi_state(&x).unwrap().map.kron(&xi_state(&y).unwrap().map);
                assert_eq!(lhs, rhs);
            }
        }
    }

    #[test]
    fn effect_images_pair_like_the_theory() {
        let ab = shape(&[2, 3]);
        for q in 1..=ab.bct_dim() {
            for q2 in 1..=ab.bct_dim() {
                let e = xi_effect(&point_effect::<R>(&ab, q)).unwrap().map;
                let s = xi_state(&point_state::<R>(&ab, q2)).unwrap().map;
                let p = s.then(&e).unwrap();
                assert_eq!(p.as_scalar().unwrap(), &if q == q2 { r(1, 1) } else { r(0, 1) });
            }
        }
        let det = xi_effect(&deterministic_effect::<R>(&ab)).unwrap().map;
        assert!(det.entries().iter().all(|x| *x == r(1, 1)));
    }

    #[test]
    fn atomic_image_example() {
        let t = TransformationTensor::new(shape(&[2]), shape(&[2]), [AtomicTerm::<R>::normalised(1, 2, 1)]).unwrap();
        let m = xi_transformation(&t).unwrap().map;
        // ontic index (i, b) -> 2(i-1) + b
        let mut expected = ClassicalMap::<R>::zeros(4, 4);
        expected.add_at(3, 0, r(1, 1));
        expected.add_at(2, 1, r(1, 1));
        assert_eq!(m, expected);
    }

    #[test]
    fn identity_and_swap_images() {
        for v in [&[2][..], &[3], &[2, 2], &[2, 3]] {
            let s = shape(v);
            assert_eq!(xi_transformation(&identity::<R>(&s).unwrap()).unwrap().map, ClassicalMap::identity(s.ontic_dim()));
        }
        for (n, m) in [(2, 2), (2, 3), (3, 2)] {
            let (a, b) = (shape(&[n]), shape(&[m]));
            let img = xi_transformation(&swap::<R>(&a, &b).unwrap()).unwrap().map;
            assert_eq!(img, block_swap(&a, &b).unwrap());
        }
    }

    #[test]
    fn mu_closed_form_and_nu_image() {
        for (n1, n2) in [(2, 2), (2, 3), (3, 3)] {
            let (a, b) = (shape(&[n1]), shape(&[n2]));
            let m = mu::<R>(&a, &b).unwrap();
            // (x, b1, y, b2) -> (Q(x, y, b1 ^ b2), b1)
            for x in 1..=n1 {
                for y in 1..=n2 {
                    for b1 in 0..2u8 {
                        for b2 in 0..2u8 {
                            let col = xi_system(&a.compose(&b))
                                .encode(&OnticPoint { indices: vec![x, y], bits: vec![b1, b2] })
                                .unwrap();
                            let row = (q_encode(n1, n2, x, y, b1 ^ b2).unwrap() - 1) * 2 + b1 as usize;
                            assert_eq!(m.get(row, col), &r(1, 1));
                        }
                    }
                }
            }
            assert_eq!(xi_transformation(&nu::<R>(&a, &b).unwrap()).unwrap().map, m);
            assert_eq!(m.then(&mu_inv(&a, &b).unwrap()).unwrap(), ClassicalMap::identity(4 * n1 * n2));
        }
    }

    #[test]
    fn reversible_images_are_permutations() {
        let spec = ReversibleSpec::new(vec![3, 1, 2], vec![1, 0, 1]).unwrap();
        let m = xi_transformation(&reversible::<R>(&spec).unwrap()).unwrap().map;
        assert!(m.is_permutation());
        for i in 1..=3 {
            for b in 0..2u8 {
                let col = 2 * (i - 1) + b as usize;
                let row = 2 * (spec.perm()[i - 1] - 1) + (b ^ spec.bits()[i - 1]) as usize;
                assert_eq!(m.get(row, col), &r(1, 1));
            }
        }
    }

    #[test]
    fn coefficients_recovered_from_image() {
        let t = TransformationTensor::new(
            shape(&[2, 2]),
            shape(&[3]),
            [AtomicTerm::new(5, 3, 1, r(1, 4)), AtomicTerm::new(1, 1, 0, r(3, 4))],
        )
        .unwrap();
        let img = xi_transformation(&t).unwrap();
        let rec = recover_coefficients(&img, t.in_shape(), t.out_shape()).unwrap();
        let terms: Vec<_> = t.terms().map(|a| (a.input, a.output, a.tau, a.weight)).collect();
        assert_eq!(rec, terms);
    }
}
