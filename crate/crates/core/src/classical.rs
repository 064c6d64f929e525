//! Finite classical theory as a process theory.
//!
//! A system is a positive dimension; a process `n -> m` is an `m x n` matrix
//! with nonnegative entries. States are maps with `in_dim = 1`, effects have
//! `out_dim = 1`, and scalars are `1 x 1` maps, so a single composition
//! algebra covers all of them.
//!
//! Kronecker products use row-major wire order: in `f.kron(g)` the left
//! factor is the outer index. Every other module follows this convention.

use std::fmt;

use serde_json::{json, Value};

use crate::error::{Error, Result};
use crate::scalar::{Rational, Scalar};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct ClassicalSystem {
    dim: usize,
}

impl ClassicalSystem {
    pub fn new(dim: usize) -> Result<Self> {
        if dim == 0 {
            return Err(Error::InvalidSystem("classical dimension must be positive".into()));
        }
        Ok(Self { dim })
    }

    pub fn trivial() -> Self {
        Self { dim: 1 }
    }

    pub fn dim(self) -> usize {
        self.dim
    }

    pub fn is_trivial(self) -> bool {
        self.dim == 1
    }
}

/// A nonnegative `out_dim x in_dim` matrix, stored row-major.
#[derive(Clone, PartialEq)]
pub struct ClassicalMap<S = Rational> {
    in_dim: usize,
    out_dim: usize,
    entries: Vec<S>,
}

impl<S: Scalar> ClassicalMap<S> {
    pub fn new(in_dim: usize, out_dim: usize, entries: Vec<S>) -> Result<Self> {
        if in_dim == 0 || out_dim == 0 {
            return Err(Error::InvalidSystem("classical dimension must be positive".into()));
        }
        if entries.len() != in_dim * out_dim {
            return Err(Error::DimensionMismatch { expected: in_dim * out_dim, found: entries.len() });
        }
        if let Some(pos) = entries.iter().position(|e| !e.is_nonneg()) {
            return Err(Error::Negative {
                position: format!("({}, {})", pos / in_dim, pos % in_dim),
                value: format!("{:?}", entries[pos]),
            });
        }
        Ok(Self { in_dim, out_dim, entries })
    }

    pub fn zeros(in_dim: usize, out_dim: usize) -> Self {
        Self { in_dim, out_dim, entries: vec![S::zero(); in_dim * out_dim] }
    }

    pub fn identity(dim: usize) -> Self {
        let mut m = Self::zeros(dim, dim);
        for i in 0..dim {
            m.entries[i * dim + i] = S::one();
        }
        m
    }

    pub fn scalar(p: S) -> Self {
        Self { in_dim: 1, out_dim: 1, entries: vec![p] }
    }

    pub fn state(weights: Vec<S>) -> Result<Self> {
        Self::new(1, weights.len(), weights)
    }

    pub fn effect(weights: Vec<S>) -> Result<Self> {
        Self::new(weights.len(), 1, weights)
    }

    /// Point state `|i>` (1-based) of a `dim`-level system.
    pub fn point_state(dim: usize, i: usize) -> Result<Self> {
        if i == 0 || i > dim {
            return Err(Error::OutOfRange(format!("point {i} in dimension {dim}")));
        }
        let mut m = Self::zeros(1, dim);
        m.entries[i - 1] = S::one();
        Ok(m)
    }

    pub fn point_effect(dim: usize, i: usize) -> Result<Self> {
        Ok(Self::point_state(dim, i)?.transpose())
    }

    pub fn uniform_state(dim: usize) -> Self {
        let w = S::one() / S::from_usize(dim);
        Self { in_dim: 1, out_dim: dim, entries: vec![w; dim] }
    }

    pub fn discard(dim: usize) -> Self {
        Self { in_dim: dim, out_dim: 1, entries: vec![S::one(); dim] }
    }

    pub fn in_dim(&self) -> usize {
        self.in_dim
    }

    pub fn out_dim(&self) -> usize {
        self.out_dim
    }

    pub fn entries(&self) -> &[S] {
        &self.entries
    }

    pub fn get(&self, out: usize, inp: usize) -> &S {
        &self.entries[out * self.in_dim + inp]
    }

    pub(crate) fn add_at(&mut self, out: usize, inp: usize, w: S) {
        let cell = &mut self.entries[out * self.in_dim + inp];
        *cell = cell.clone() + w;
    }

    pub fn is_state(&self) -> bool {
        self.in_dim == 1
    }

    pub fn is_effect(&self) -> bool {
        self.out_dim == 1
    }

    pub fn transpose(&self) -> Self {
        let mut t = Self::zeros(self.out_dim, self.in_dim);
        for o in 0..self.out_dim {
            for i in 0..self.in_dim {
                t.entries[i * self.out_dim + o] = self.get(o, i).clone();
            }
        }
        t
    }

    pub fn column_sums(&self) -> Vec<S> {
        (0..self.in_dim)
            .map(|i| (0..self.out_dim).map(|o| self.get(o, i).clone()).sum())
            .collect()
    }

    pub fn is_substochastic(&self, tol: f64) -> bool {
        self.column_sums().iter().all(|c| c.at_most_one(tol))
    }

    pub fn is_stochastic(&self, tol: f64) -> bool {
        self.column_sums().iter().all(|c| c.close(&S::one(), tol))
    }

    /// A 0/1 matrix with exactly one 1 in every row and column.
    pub fn is_permutation(&self) -> bool {
        if self.in_dim != self.out_dim {
            return false;
        }
        let zero = S::zero();
        let one = S::one();
        if self.entries.iter().any(|e| *e != zero && *e != one) {
            return false;
        }
        let rows_ok = (0..self.out_dim).all(|o| (0..self.in_dim).filter(|&i| *self.get(o, i) == one).count() == 1);
        let cols_ok = (0..self.in_dim).all(|i| (0..self.out_dim).filter(|&o| *self.get(o, i) == one).count() == 1);
        rows_ok && cols_ok
    }

    pub fn is_zero(&self) -> bool {
        self.entries.iter().all(|e| e.is_zero())
    }

    /// Sequential composition: `self` first, then `next`, i.e. the product `next * self`.
    pub fn then(&self, next: &Self) -> Result<Self> {
        if self.out_dim != next.in_dim {
            return Err(Error::DimensionMismatch { expected: self.out_dim, found: next.in_dim });
        }
        let mut out = Self::zeros(self.in_dim, next.out_dim);
        for k in 0..self.out_dim {
            for i in 0..self.in_dim {
                let a = self.get(k, i);
                if a.is_zero() {
                    continue;
                }
                for o in 0..next.out_dim {
                    let b = next.get(o, k);
                    if b.is_zero() {
                        continue;
                    }
                    out.add_at(o, i, b.clone() * a.clone());
                }
            }
        }
        Ok(out)
    }

    /// Parallel composition (Kronecker product, left factor outer).
    pub fn kron(&self, other: &Self) -> Self {
        let in_dim = self.in_dim * other.in_dim;
        let out_dim = self.out_dim * other.out_dim;
        let mut out = Self::zeros(in_dim, out_dim);
        for o1 in 0..self.out_dim {
            for i1 in 0..self.in_dim {
                let a = self.get(o1, i1);
                if a.is_zero() {
                    continue;
                }
                for o2 in 0..other.out_dim {
                    for i2 in 0..other.in_dim {
                        let b = other.get(o2, i2);
                        if b.is_zero() {
                            continue;
                        }
                        out.entries[(o1 * other.out_dim + o2) * in_dim + i1 * other.in_dim + i2] =
                            a.clone() * b.clone();
                    }
                }
            }
        }
        out
    }

    pub fn scale(&self, p: &S) -> Self {
        Self {
            in_dim: self.in_dim,
            out_dim: self.out_dim,
            entries: self.entries.iter().map(|e| e.clone() * p.clone()).collect(),
        }
    }

    pub fn add(&self, other: &Self) -> Result<Self> {
        if self.in_dim != other.in_dim || self.out_dim != other.out_dim {
            return Err(Error::ShapeMismatch {
                left: format!("{}x{}", self.out_dim, self.in_dim),
                right: format!("{}x{}", other.out_dim, other.in_dim),
            });
        }
        Ok(Self {
            in_dim: self.in_dim,
            out_dim: self.out_dim,
            entries: self.entries.iter().zip(&other.entries).map(|(a, b)| a.clone() + b.clone()).collect(),
        })
    }

    /// The single entry of a `1 x 1` map.
    pub fn as_scalar(&self) -> Option<&S> {
        (self.in_dim == 1 && self.out_dim == 1).then(|| &self.entries[0])
    }

    /// Largest entrywise absolute deviation, or `None` on a shape mismatch.
    pub fn max_abs_dev(&self, other: &Self) -> Option<f64> {
        if self.in_dim != other.in_dim || self.out_dim != other.out_dim {
            return None;
        }
        Some(self.entries.iter().zip(&other.entries).map(|(a, b)| a.abs_dev(b)).fold(0.0, f64::max))
    }

    /// First `(out, in)` position where the maps differ beyond `tol`.
    pub fn first_difference(&self, other: &Self, tol: f64) -> Option<(usize, usize)> {
        if self.in_dim != other.in_dim || self.out_dim != other.out_dim {
            return Some((usize::MAX, usize::MAX));
        }
        self.entries
            .iter()
            .zip(&other.entries)
            .position(|(a, b)| !a.close(b, tol))
            .map(|pos| (pos / self.in_dim, pos % self.in_dim))
    }

    pub fn approx_eq(&self, other: &Self, tol: f64) -> bool {
        self.first_difference(other, tol).is_none()
    }

    /// Closes both wires of a square map with the Choi vector and covector.
    /// The result is the trace `sum_w M[w, w]`.
    pub fn choi_close(&self) -> Result<S> {
        if self.in_dim != self.out_dim {
            return Err(Error::NotSquare { rows: self.out_dim, cols: self.in_dim });
        }
        Ok((0..self.in_dim).map(|w| self.get(w, w).clone()).sum())
    }

    /// `{"in":n,"out":m,"entries":[...]}`, row-major.
    pub fn to_json(&self) -> Value {
        json!({
            "in": self.in_dim,
            "out": self.out_dim,
            "entries": self.entries.iter().map(Scalar::to_json).collect::<Vec<_>>(),
        })
    }

    pub fn from_json(value: &Value) -> Result<Self> {
        let field = |k: &str| value.get(k).ok_or_else(|| Error::Json(format!("missing field `{k}`")));
        let in_dim = field("in")?.as_u64().ok_or_else(|| Error::Json("`in` must be an integer".into()))? as usize;
        let out_dim = field("out")?.as_u64().ok_or_else(|| Error::Json("`out` must be an integer".into()))? as usize;
        let entries = field("entries")?
            .as_array()
            .ok_or_else(|| Error::Json("`entries` must be an array".into()))?
            .iter()
            .map(|v| S::from_json(v).ok_or_else(|| Error::Json(format!("bad scalar {v}"))))
            .collect::<Result<Vec<_>>>()?;
        Self::new(in_dim, out_dim, entries)
    }
}

impl<S: fmt::Debug> fmt::Debug for ClassicalMap<S> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "ClassicalMap {}x{} [", self.out_dim, self.in_dim)?;
        for o in 0..self.out_dim {
            let row: Vec<String> =
                (0..self.in_dim).map(|i| format!("{:?}", self.entries[o * self.in_dim + i])).collect();
            writeln!(f, "  {}", row.join(", "))?;
        }
        write!(f, "]")
    }
}

/// `g . f` for maps given in application order.
pub fn compose_seq<S: Scalar>(f: &ClassicalMap<S>, g: &ClassicalMap<S>) -> Result<ClassicalMap<S>> {
    f.then(g)
}

pub fn compose_par<S: Scalar>(f: &ClassicalMap<S>, g: &ClassicalMap<S>) -> ClassicalMap<S> {
    f.kron(g)
}

/// Permutation matrix of a bijection on `[1..n]` given as `perm[i-1] = pi(i)`.
/// Column `i` has its single 1 in row `pi(i)`.
pub fn permutation_map<S: Scalar>(perm: &[usize]) -> Result<ClassicalMap<S>> {
    check_permutation(perm)?;
    let n = perm.len();
    let mut m = ClassicalMap::zeros(n, n);
    for (i, &p) in perm.iter().enumerate() {
        m.entries[(p - 1) * n + i] = S::one();
    }
    Ok(m)
}

pub(crate) fn check_permutation(perm: &[usize]) -> Result<()> {
    let n = perm.len();
    if n == 0 {
        return Err(Error::NotBijective("empty permutation".into()));
    }
    let mut seen = vec![false; n];
    for &p in perm {
        if p == 0 || p > n || std::mem::replace(&mut seen[p - 1], true) {
            return Err(Error::NotBijective(format!("{perm:?}")));
        }
    }
    Ok(())
}

pub fn invert_permutation(perm: &[usize]) -> Result<Vec<usize>> {
    check_permutation(perm)?;
    let mut inv = vec![0; perm.len()];
    for (i, &p) in perm.iter().enumerate() {
        inv[p - 1] = i + 1;
    }
    Ok(inv)
}

pub fn choi_close<S: Scalar>(m: &ClassicalMap<S>) -> Result<S> {
    m.choi_close()
}

/// The generalised Choi vector `sum_i |ii>` and covector `sum_j <jj|` of a
/// `dim`-level system.
#[derive(Clone, PartialEq)]
pub struct ChoiPair<S = Rational> {
    dim: usize,
    vector: ClassicalMap<S>,
    covector: ClassicalMap<S>,
}

impl<S: fmt::Debug> fmt::Debug for ChoiPair<S> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("ChoiPair").field("dim", &self.dim).finish()
    }
}

impl<S: Scalar> ChoiPair<S> {
    pub fn new(dim: usize) -> Result<Self> {
        ClassicalSystem::new(dim)?;
        let mut v = vec![S::zero(); dim * dim];
        for i in 0..dim {
            v[i * dim + i] = S::one();
        }
        let vector = ClassicalMap::state(v.clone())?;
        let covector = ClassicalMap::effect(v)?;
        Ok(Self { dim, vector, covector })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn vector(&self) -> &ClassicalMap<S> {
        &self.vector
    }

    pub fn covector(&self) -> &ClassicalMap<S> {
        &self.covector
    }

    /// `(id (x) g) . (gamma (x) id)`, which the snake identity says is `id`.
    pub fn snake(&self) -> ClassicalMap<S> {
        let id = ClassicalMap::identity(self.dim);
        let open = self.vector.kron(&id);
        let close = id.kron(&self.covector);
        open.then(&close).expect("snake wiring is dimensionally consistent")
    }
}

/// Whether the snake identity holds exactly on a `d`-level system.
pub fn snake_check(d: usize) -> bool {
    match ChoiPair::<Rational>::new(d) {
        Ok(pair) => pair.snake() == ClassicalMap::identity(d),
        Err(_) => false,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn r(n: i128, d: i128) -> Rational {
        Rational::new(n, d)
    }

    fn m(in_dim: usize, out_dim: usize, e: &[(i128, i128)]) -> ClassicalMap {
        ClassicalMap::new(in_dim, out_dim, e.iter().map(|&(n, d)| r(n, d)).collect()).unwrap()
    }

    #[test]
    fn identity_composes_to_identity() {
        let id3 = ClassicalMap::<Rational>::identity(3);
        assert_eq!(compose_seq(&id3, &id3).unwrap(), id3);
    }

    #[test]
    fn point_state_then_point_effect_is_one() {
        let s = ClassicalMap::<Rational>::point_state(3, 2).unwrap();
        let e = ClassicalMap::<Rational>::point_effect(3, 2).unwrap();
        assert_eq!(s.then(&e).unwrap().as_scalar(), Some(&r(1, 1)));
    }

    #[test]
    fn hand_matrix_product() {
        // M = [[1/2, 0], [0, 1]] then N = [[1, 1]]
        let mm = m(2, 2, &[(1, 2), (0, 1), (0, 1), (1, 1)]);
        let nn = m(2, 1, &[(1, 1), (1, 1)]);
        assert_eq!(compose_seq(&mm, &nn).unwrap(), m(2, 1, &[(1, 2), (1, 1)]));
    }

    #[test]
    fn seq_dimension_mismatch() {
        let a = ClassicalMap::<Rational>::identity(2);
        let b = ClassicalMap::<Rational>::identity(3);
        assert!(matches!(compose_seq(&a, &b), Err(Error::DimensionMismatch { .. })));
    }

    #[test]
    fn kron_cases() {
        let id2 = ClassicalMap::<Rational>::identity(2);
        let id3 = ClassicalMap::<Rational>::identity(3);
        assert_eq!(compose_par(&id2, &id3), ClassicalMap::identity(6));

        let p1 = ClassicalMap::<Rational>::point_state(2, 1).unwrap();
        let p2 = ClassicalMap::<Rational>::point_state(2, 2).unwrap();
        // index (1,2) in row-major order is position 1 (0-based)
        assert_eq!(compose_par(&p1, &p2), ClassicalMap::point_state(4, 2).unwrap());

        let u = ClassicalMap::<Rational>::uniform_state(2);
        assert_eq!(compose_par(&u, &u), ClassicalMap::state(vec![r(1, 4); 4]).unwrap());
    }

    #[test]
    fn permutations() {
        assert_eq!(permutation_map::<Rational>(&[1, 2, 3]).unwrap(), ClassicalMap::identity(3));
        assert_eq!(permutation_map::<Rational>(&[2, 1]).unwrap(), m(2, 2, &[(0, 1), (1, 1), (1, 1), (0, 1)]));
        let cycle = permutation_map::<Rational>(&[2, 3, 1]).unwrap();
        let e1 = ClassicalMap::point_state(3, 1).unwrap();
        assert_eq!(e1.then(&cycle).unwrap(), ClassicalMap::point_state(3, 2).unwrap());
        assert!(matches!(permutation_map::<Rational>(&[1, 1]), Err(Error::NotBijective(_))));
        assert!(matches!(permutation_map::<Rational>(&[1, 3]), Err(Error::NotBijective(_))));
        let p = [3, 1, 4, 2];
        let inv = invert_permutation(&p).unwrap();
        let prod = permutation_map::<Rational>(&inv).unwrap().then(&permutation_map(&p).unwrap()).unwrap();
        assert_eq!(prod, ClassicalMap::identity(4));
        assert!(cycle.is_permutation() && cycle.is_stochastic(0.0));
    }

    #[test]
    fn choi_close_cases() {
        assert_eq!(choi_close(&ClassicalMap::<Rational>::identity(2)).unwrap(), r(2, 1));
        assert_eq!(choi_close(&ClassicalMap::<Rational>::zeros(4, 4)).unwrap(), r(0, 1));
        // rank one: M[y,x] = v[x] u[y]
        let v = [r(1, 2), r(1, 3), r(1, 6)];
        let u = [r(1, 1), r(0, 1), r(1, 2)];
        let mut e = Vec::new();
        for y in 0..3 {
            for x in 0..3 {
                e.push(v[x] * u[y]);
            }
        }
        let rank_one = ClassicalMap::new(3, 3, e).unwrap();
        let expected: Rational = (0..3).map(|w| v[w] * u[w]).sum();
        assert_eq!(rank_one.choi_close().unwrap(), expected);
        assert!(matches!(ClassicalMap::<Rational>::zeros(2, 3).choi_close(), Err(Error::NotSquare { .. })));
    }

    #[test]
    fn snake_holds() {
        assert!(snake_check(1));
        assert!(snake_check(2));
        assert!(snake_check(5));
        assert!(!snake_check(0));
    }

    #[test]
    fn negative_entries_rejected() {
        assert!(matches!(
            ClassicalMap::new(1, 2, vec![r(1, 2), r(-1, 2)]),
            Err(Error::Negative { .. })
        ));
    }

    #[test]
    fn json_round_trip() {
        let a = m(2, 2, &[(1, 2), (0, 1), (1, 3), (1, 1)]);
        let v = a.to_json();
        assert_eq!(v["entries"][0], json!([1, 2]));
        assert_eq!(ClassicalMap::<Rational>::from_json(&v).unwrap(), a);
    }
}
