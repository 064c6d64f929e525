//! Scalar backends.
//!
//! Every algebraic object in the crate is generic over [`Scalar`]. The default
//! backend is [`Rational`], an exact `i128` fraction, so that equality checks in
//! the verification suites are exact. `f64` is available for dimension sweeps;
//! comparisons then go through an absolute entrywise tolerance.

use std::fmt::Debug;
use std::iter::Sum;
use std::ops::{Add, Div, Mul, Neg, Sub};

use num_traits::{One, Signed, ToPrimitive, Zero};
use serde_json::{json, Value};

/// Exact rational scalar, the default backend.
pub type Rational = num_rational::Ratio<i128>;

/// Default tolerance for the float backend (absolute, entrywise).
pub const DEFAULT_TOLERANCE: f64 = 1e-12;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Backend {
    Rational,
    Float,
}

impl std::str::FromStr for Backend {
    type Err = crate::error::Error;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "rational" => Ok(Backend::Rational),
            "float" => Ok(Backend::Float),
            other => Err(crate::error::Error::InvalidSystem(format!("unknown backend `{other}`"))),
        }
    }
}

pub trait Scalar:
    Clone
    + Debug
    + PartialEq
    + PartialOrd
    + Send
    + Sync
    + 'static
    + Zero
    + One
    + Add<Output = Self>
    + Sub<Output = Self>
    + Mul<Output = Self>
    + Div<Output = Self>
    + Neg<Output = Self>
    + Sum
{
    const BACKEND: Backend;

    fn from_ratio(num: i64, den: i64) -> Self;

    fn from_usize(n: usize) -> Self {
        Self::from_ratio(n as i64, 1)
    }

    fn half() -> Self {
        Self::from_ratio(1, 2)
    }

    fn to_f64(&self) -> f64;

    /// Nearest representable value; exact for the float backend.
    fn from_f64(x: f64) -> Self;

    /// Re-expresses the value in another backend. Rationals convert exactly into
    /// rationals and as closely as possible into floats.
    fn convert<T: Scalar>(&self) -> T {
        T::from_f64(self.to_f64())
    }

    /// JSON form: `[num, den]` for rationals, a bare number for floats.
    fn to_json(&self) -> Value;

    /// Accepts `[num, den]`, an integer, a `"p/q"` string, or (float backend only)
    /// an arbitrary number.
    fn from_json(value: &Value) -> Option<Self>;

    fn abs_dev(&self, other: &Self) -> f64 {
        (self.clone() - other.clone()).to_f64().abs()
    }

    /// Equality: exact for rationals, within `tol` for floats.
    fn close(&self, other: &Self, tol: f64) -> bool {
        match Self::BACKEND {
            Backend::Rational => self == other,
            Backend::Float => self.abs_dev(other) <= tol,
        }
    }

    fn is_nonneg(&self) -> bool {
        *self >= Self::zero()
    }

    /// `self <= 1`, with float slack.
    fn at_most_one(&self, tol: f64) -> bool {
        match Self::BACKEND {
            Backend::Rational => *self <= Self::one(),
            Backend::Float => self.to_f64() <= 1.0 + tol,
        }
    }
}

impl Scalar for Rational {
    const BACKEND: Backend = Backend::Rational;

    fn from_ratio(num: i64, den: i64) -> Self {
        Rational::new(num as i128, den as i128)
    }

    fn to_f64(&self) -> f64 {
        self.numer().to_f64().unwrap_or(f64::NAN) / self.denom().to_f64().unwrap_or(f64::NAN)
    }

    fn from_f64(x: f64) -> Self {
        Rational::approximate_float(x).unwrap_or_else(Rational::zero)
    }

    fn convert<T: Scalar>(&self) -> T {
        lift(self)
    }

    fn to_json(&self) -> Value {
        let (n, d) = (self.numer(), self.denom());
        match (i64::try_from(*n), i64::try_from(*d)) {
            (Ok(n), Ok(d)) => json!([n, d]),
            _ => json!([n.to_string(), d.to_string()]),
        }
    }

    fn from_json(value: &Value) -> Option<Self> {
        match value {
            Value::Array(parts) if parts.len() == 2 => {
                let n = json_int(&parts[0])?;
                let d = json_int(&parts[1])?;
                (d != 0).then(|| Rational::new(n, d))
            }
            Value::Number(_) => json_int(value).map(Rational::from_integer),
            Value::String(s) => parse_fraction(s),
            _ => None,
        }
    }

    fn abs_dev(&self, other: &Self) -> f64 {
        Scalar::to_f64(&(self - other).abs())
    }
}

impl Scalar for f64 {
    const BACKEND: Backend = Backend::Float;

    fn from_ratio(num: i64, den: i64) -> Self {
        num as f64 / den as f64
    }

    fn to_f64(&self) -> f64 {
        *self
    }

    fn from_f64(x: f64) -> Self {
        x
    }

    fn to_json(&self) -> Value {
        json!(self)
    }

    fn from_json(value: &Value) -> Option<Self> {
        match value {
            Value::Array(_) | Value::String(_) => Rational::from_json(value).map(|r| Scalar::to_f64(&r)),
            Value::Number(n) => n.as_f64(),
            _ => None,
        }
    }
}

fn json_int(v: &Value) -> Option<i128> {
    match v {
        Value::Number(n) => n.as_i64().map(i128::from),
        Value::String(s) => s.trim().parse().ok(),
        _ => None,
    }
}

/// Parses `"p/q"` or `"p"`.
pub fn parse_fraction(s: &str) -> Option<Rational> {
    let s = s.trim();
    match s.split_once('/') {
        Some((n, d)) => {
            let n: i128 = n.trim().parse().ok()?;
            let d: i128 = d.trim().parse().ok()?;
            (d != 0).then(|| Rational::new(n, d))
        }
        None => s.parse().ok().map(Rational::from_integer),
    }
}

/// Converts an exact rational into the target backend.
pub fn lift<S: Scalar>(r: &Rational) -> S {
    match (i64::try_from(*r.numer()), i64::try_from(*r.denom())) {
        (Ok(n), Ok(d)) => S::from_ratio(n, d),
        _ => {
            let approx = Scalar::to_f64(r);
            // Only reachable for the float backend in practice.
            S::from_ratio((approx * 1e15) as i64, 1_000_000_000_000_000)
        }
    }
}

/// `p/q` text form used by the DSL pretty-printer and diagnostics.
pub fn fmt_rational(r: &Rational) -> String {
    if r.is_integer() {
        r.numer().to_string()
    } else {
        format!("{}/{}", r.numer(), r.denom())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rational_json_round_trip() {
        let half = Rational::new(1, 2);
        assert_eq!(half.to_json(), json!([1, 2]));
        assert_eq!(Rational::from_json(&json!([2, 4])), Some(half));
        assert_eq!(Rational::from_json(&json!("3/6")), Some(half));
        assert_eq!(Rational::from_json(&json!(1)), Some(Rational::one()));
        assert_eq!(Rational::from_json(&json!([1, 0])), None);
        assert_eq!(Rational::from_json(&json!(0.5)), None);
    }

    #[test]
    fn float_close_uses_tolerance() {
        assert!(0.1f64.close(&(0.1 + 1e-14), DEFAULT_TOLERANCE));
        assert!(!0.1f64.close(&0.2, DEFAULT_TOLERANCE));
        let a = Rational::new(1, 3);
        assert!(a.close(&Rational::new(2, 6), 1.0));
        assert!(!a.close(&Rational::new(1, 4), 1.0));
    }

    #[test]
    fn product_of_probabilities_is_probability() {
        let p = Rational::new(2, 3);
        let q = Rational::new(3, 7);
        let pq = p * q;
        assert!(pq.is_nonneg() && pq.at_most_one(0.0));
    }
}
