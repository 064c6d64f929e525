//! System bookkeeping for bilocal classical theory.
//!
//! A system is an ordered list of elementary dimensions `n_k >= 2`. Composites
//! are canonically left-nested, and a pure label of a `p`-partite system is a
//! tuple of indices `i_1..i_p` plus `p - 1` section bits. The codec `Q` maps
//! a bipartite label `(i, j, s)` to a single global label; folding it from the
//! left flattens any pure label into `[1..N]` where `N = 2^(p-1) * prod(n_k)`.
//!
//! Section bits of the left-nested label `((i1 i2)_s1 i3)_s2 ...` are relative
//! to the first factor: `s_k` records the parity between factor `1` and factor
//! `k + 1`. This is what makes the reassociation rule
//! `((i j)_s k)_t = (i (j k)_{s^t})_s` hold.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(try_from = "Vec<usize>", into = "Vec<usize>")]
pub struct SystemShape {
    elems: Vec<usize>,
}

impl SystemShape {
    /// Builds a shape, stripping trivial (dimension 1) factors.
    pub fn new(elems: Vec<usize>) -> Result<Self> {
        if elems.contains(&0) {
            return Err(Error::InvalidSystem(format!("zero dimension in {elems:?}")));
        }
        Ok(Self { elems: elems.into_iter().filter(|&n| n != 1).collect() })
    }

    pub fn trivial() -> Self {
        Self { elems: Vec::new() }
    }

    pub fn elementary(n: usize) -> Result<Self> {
        Self::new(vec![n])
    }

    pub fn elems(&self) -> &[usize] {
        &self.elems
    }

    pub fn parts(&self) -> usize {
        self.elems.len()
    }

    pub fn is_trivial(&self) -> bool {
        self.elems.is_empty()
    }

    pub fn is_elementary(&self) -> bool {
        self.elems.len() == 1
    }

    /// Parallel composite `self (x) other`, canonically left-nested.
    pub fn compose(&self, other: &SystemShape) -> SystemShape {
        let mut elems = self.elems.clone();
        elems.extend_from_slice(&other.elems);
        SystemShape { elems }
    }

    /// Global BCT dimension `2^(p-1) * prod(n_k)`, `1` for the trivial system.
    pub fn bct_dim(&self) -> usize {
        match self.elems.split_first() {
            None => 1,
            Some((&first, rest)) => rest.iter().fold(first, |acc, &n| dimension_rule(acc, n)),
        }
    }

    /// Size of the ontic space `prod(2 n_k)`.
    pub fn ontic_dim(&self) -> usize {
        self.elems.iter().map(|&n| 2 * n).product()
    }
}

impl TryFrom<Vec<usize>> for SystemShape {
    type Error = Error;

    fn try_from(v: Vec<usize>) -> Result<Self> {
        Self::new(v)
    }
}

impl From<SystemShape> for Vec<usize> {
    fn from(s: SystemShape) -> Self {
        s.elems
    }
}

impl fmt::Display for SystemShape {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.elems.is_empty() {
            return write!(f, "()");
        }
        let parts: Vec<String> = self.elems.iter().map(|n| n.to_string()).collect();
        write!(f, "({})", parts.join(","))
    }
}

/// Composition rule for two global dimensions: `2nm` when both are
/// non-trivial, otherwise the non-trivial one.
pub fn dimension_rule(n: usize, m: usize) -> usize {
    match (n, m) {
        (1, m) => m,
        (n, 1) => n,
        (n, m) => 2 * n * m,
    }
}

pub fn bct_dim(shape: &SystemShape) -> usize {
    shape.bct_dim()
}

/// Bijection `[1..n1] x [1..n2] x {0,1} -> [1..2 n1 n2]`,
/// `Q(i, j, s) = 2 n2 (i - 1) + 2j + s - 1`.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct LabelCodec {
    left: usize,
    right: usize,
}

impl LabelCodec {
    pub fn new(left: usize, right: usize) -> Result<Self> {
        if left == 0 || right == 0 {
            return Err(Error::InvalidSystem(format!("codec over ({left}, {right})")));
        }
        Ok(Self { left, right })
    }

    pub fn len(&self) -> usize {
        2 * self.left * self.right
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn encode(&self, i: usize, j: usize, s: u8) -> Result<usize> {
        if i == 0 || i > self.left || j == 0 || j > self.right || s > 1 {
            return Err(Error::OutOfRange(format!(
                "Q({i}, {j}, {s}) over ({}, {})",
                self.left, self.right
            )));
        }
        Ok(2 * self.right * (i - 1) + 2 * j + s as usize - 1)
    }

    pub fn decode(&self, q: usize) -> Result<(usize, usize, u8)> {
        if q == 0 || q > self.len() {
            return Err(Error::OutOfRange(format!("label {q} over ({}, {})", self.left, self.right)));
        }
        let z = q - 1;
        let i = z / (2 * self.right) + 1;
        let rem = z % (2 * self.right);
        Ok((i, rem / 2 + 1, (rem % 2) as u8))
    }
}

pub fn q_encode(n1: usize, n2: usize, i: usize, j: usize, s: u8) -> Result<usize> {
    LabelCodec::new(n1, n2)?.encode(i, j, s)
}

pub fn q_decode(n1: usize, n2: usize, q: usize) -> Result<(usize, usize, u8)> {
    LabelCodec::new(n1, n2)?.decode(q)
}

/// Left-nested pure label `(...((i1 i2)_s1 i3)_s2 ... i_p)_{s_{p-1}}`.
/// Indices are 1-based.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct PureLabel {
    indices: Vec<usize>,
    bits: Vec<u8>,
}

impl PureLabel {
    pub fn new(indices: Vec<usize>, bits: Vec<u8>) -> Result<Self> {
        if indices.is_empty() && !bits.is_empty() {
            return Err(Error::InvalidLabel("section bits without indices".into()));
        }
        if !indices.is_empty() && bits.len() + 1 != indices.len() {
            return Err(Error::InvalidLabel(format!(
                "{} indices need {} section bits, got {}",
                indices.len(),
                indices.len() - 1,
                bits.len()
            )));
        }
        if bits.iter().any(|&b| b > 1) {
            return Err(Error::InvalidLabel(format!("section bits must be 0/1: {bits:?}")));
        }
        Ok(Self { indices, bits })
    }

    pub fn single(i: usize) -> Self {
        Self { indices: vec![i], bits: Vec::new() }
    }

    pub fn bipartite(i: usize, j: usize, s: u8) -> Result<Self> {
        Self::new(vec![i, j], vec![s])
    }

    /// The label of the trivial system.
    pub fn empty() -> Self {
        Self { indices: Vec::new(), bits: Vec::new() }
    }

    pub fn indices(&self) -> &[usize] {
        &self.indices
    }

    pub fn bits(&self) -> &[u8] {
        &self.bits
    }

    pub fn validate(&self, shape: &SystemShape) -> Result<()> {
        if self.indices.len() != shape.parts() {
            return Err(Error::InvalidLabel(format!("label {self} does not fit shape {shape}")));
        }
        for (&i, &n) in self.indices.iter().zip(shape.elems()) {
            if i == 0 || i > n {
                return Err(Error::InvalidLabel(format!("index {i} out of range for dimension {n}")));
            }
        }
        Ok(())
    }
}

impl fmt::Display for PureLabel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let Some((first, rest)) = self.indices.split_first() else {
            return write!(f, "()");
        };
        let mut core = first.to_string();
        for (i, s) in rest.iter().zip(&self.bits) {
            core = format!("({core},{i});{s}");
        }
        write!(f, "({core})")
    }
}

impl FromStr for PureLabel {
    type Err = Error;

    /// Parses `(i)`, `((i,j);s)`, `(((i,j);s,k);t)`, and so on. A bare integer
    /// is accepted as a single-system label.
    fn from_str(text: &str) -> Result<Self> {
        let compact: String = text.chars().filter(|c| !c.is_whitespace()).collect();
        if let Ok(i) = compact.parse::<usize>() {
            return Ok(Self::single(i));
        }
        let inner = compact
            .strip_prefix('(')
            .and_then(|t| t.strip_suffix(')'))
            .ok_or_else(|| Error::InvalidLabel(format!("`{text}`: expected parentheses")))?;
        let mut indices = Vec::new();
        let mut bits = Vec::new();
        parse_core(inner, &mut indices, &mut bits).map_err(|m| Error::InvalidLabel(format!("`{text}`: {m}")))?;
        Self::new(indices, bits)
    }
}

// core := INT | "(" core "," INT ");" BIT
fn parse_core(core: &str, indices: &mut Vec<usize>, bits: &mut Vec<u8>) -> std::result::Result<(), String> {
    if let Ok(i) = core.parse::<usize>() {
        indices.push(i);
        return Ok(());
    }
    let (body, bit) = core.rsplit_once(';').ok_or("expected `;bit`")?;
    let bit: u8 = bit.parse().map_err(|_| format!("bad section bit `{bit}`"))?;
    let body = body
        .strip_prefix('(')
        .and_then(|b| b.strip_suffix(')'))
        .ok_or("expected `(...)` before `;`")?;
    let (left, last) = body.rsplit_once(',').ok_or("expected `,`")?;
    let last: usize = last.parse().map_err(|_| format!("bad index `{last}`"))?;
    parse_core(left, indices, bits)?;
    indices.push(last);
    bits.push(bit);
    Ok(())
}

/// Flattens a label by folding `Q` from the left.
pub fn flatten_label(shape: &SystemShape, label: &PureLabel) -> Result<usize> {
    label.validate(shape)?;
    let Some((&first, rest)) = label.indices.split_first() else {
        return Ok(1);
    };
    let mut acc = first;
    let mut acc_dim = shape.elems[0];
    for ((&i, &n), &s) in rest.iter().zip(&shape.elems[1..]).zip(&label.bits) {
        acc = LabelCodec::new(acc_dim, n)?.encode(acc, i, s)?;
        acc_dim = dimension_rule(acc_dim, n);
    }
    Ok(acc)
}

pub fn unflatten_label(shape: &SystemShape, q: usize) -> Result<PureLabel> {
    let n = shape.bct_dim();
    if q == 0 || q > n {
        return Err(Error::OutOfRange(format!("label {q} for shape {shape} of dimension {n}")));
    }
    if shape.is_trivial() {
        return Ok(PureLabel::empty());
    }
    let p = shape.parts();
    let mut indices = vec![0; p];
    let mut bits = vec![0; p - 1];
    let mut acc = q;
    let mut dims = Vec::with_capacity(p);
    let mut d = shape.elems[0];
    dims.push(d);
    for &m in &shape.elems[1..] {
        d = dimension_rule(d, m);
        dims.push(d);
    }
    for k in (1..p).rev() {
        let (left, i, s) = LabelCodec::new(dims[k - 1], shape.elems[k])?.decode(acc)?;
        indices[k] = i;
        bits[k - 1] = s;
        acc = left;
    }
    indices[0] = acc;
    Ok(PureLabel { indices, bits })
}

/// Every pure label of a shape, in flattened order.
pub fn all_labels(shape: &SystemShape) -> Vec<PureLabel> {
    (1..=shape.bct_dim())
        .map(|q| unflatten_label(shape, q).expect("label in range"))
        .collect()
}

/// Tripartite left-nested label `((i j)_s k)_t`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct LeftNested {
    pub i: usize,
    pub j: usize,
    pub s: u8,
    pub k: usize,
    pub t: u8,
}

/// Tripartite right-nested label `(i (j k)_inner)_outer`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct RightNested {
    pub i: usize,
    pub j: usize,
    pub k: usize,
    pub inner: u8,
    pub outer: u8,
}

fn check_tripartite(dims: (usize, usize, usize), i: usize, j: usize, k: usize, bits: [u8; 2]) -> Result<()> {
    let (n1, n2, n3) = dims;
    if i == 0 || i > n1 || j == 0 || j > n2 || k == 0 || k > n3 || bits.iter().any(|&b| b > 1) {
        return Err(Error::InvalidLabel(format!("tripartite label ({i},{j},{k};{bits:?}) over {dims:?}")));
    }
    Ok(())
}

/// `((i j)_s k)_t -> (i (j k)_{s^t})_s`.
pub fn reassoc_label(n1: usize, n2: usize, n3: usize, label: LeftNested) -> Result<RightNested> {
    check_tripartite((n1, n2, n3), label.i, label.j, label.k, [label.s, label.t])?;
    Ok(RightNested { i: label.i, j: label.j, k: label.k, inner: label.s ^ label.t, outer: label.s })
}

/// Inverse of [`reassoc_label`].
pub fn unreassoc_label(n1: usize, n2: usize, n3: usize, label: RightNested) -> Result<LeftNested> {
    check_tripartite((n1, n2, n3), label.i, label.j, label.k, [label.inner, label.outer])?;
    Ok(LeftNested { i: label.i, j: label.j, s: label.outer, k: label.k, t: label.inner ^ label.outer })
}

/// Canonical label of the bipartite pure label `(x, y)_s` where `x` is a label
/// of `left` and `y` a label of `right`. For an elementary `right` this is
/// exactly `Q(x, y, s)`. A trivial side contributes nothing (and `s` must be 0).
pub fn join_label(left: &SystemShape, right: &SystemShape, x: usize, y: usize, s: u8) -> Result<usize> {
    if left.is_trivial() || right.is_trivial() {
        if s != 0 {
            return Err(Error::InvalidLabel("section bit on a trivial factor".into()));
        }
        return if left.is_trivial() { check_range(right, y).map(|_| y) } else { check_range(left, x).map(|_| x) };
    }
    if s > 1 {
        return Err(Error::InvalidLabel(format!("section bit {s}")));
    }
    if right.is_elementary() {
        return LabelCodec::new(left.bct_dim(), right.elems[0])?.encode(x, y, s);
    }
    let lx = unflatten_label(left, x)?;
    let ly = unflatten_label(right, y)?;
    let mut indices = lx.indices;
    indices.extend_from_slice(&ly.indices);
    let mut bits = lx.bits;
    bits.push(s);
    bits.extend(ly.bits.iter().map(|&b| b ^ s));
    flatten_label(&left.compose(right), &PureLabel { indices, bits })
}

/// Inverse of [`join_label`] for non-trivial factors.
pub fn split_label(left: &SystemShape, right: &SystemShape, q: usize) -> Result<(usize, usize, u8)> {
    if left.is_trivial() || right.is_trivial() {
        return Err(Error::InvalidSystem("split of a trivial factor".into()));
    }
    if right.is_elementary() {
        return LabelCodec::new(left.bct_dim(), right.elems[0])?.decode(q);
    }
    let whole = unflatten_label(&left.compose(right), q)?;
    let p = left.parts();
    let s = whole.bits[p - 1];
    let lx = PureLabel { indices: whole.indices[..p].to_vec(), bits: whole.bits[..p - 1].to_vec() };
    let ly = PureLabel {
        indices: whole.indices[p..].to_vec(),
        bits: whole.bits[p..].iter().map(|&b| b ^ s).collect(),
    };
    Ok((flatten_label(left, &lx)?, flatten_label(right, &ly)?, s))
}

fn check_range(shape: &SystemShape, q: usize) -> Result<()> {
    if q == 0 || q > shape.bct_dim() {
        return Err(Error::OutOfRange(format!("label {q} for shape {shape}")));
    }
    Ok(())
}
