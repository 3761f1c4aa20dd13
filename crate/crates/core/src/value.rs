//! Exact and interval values.
//!
//! Interval endpoints are widened by one ulp after every operation, which
//! covers the rounding of `+ - * /` and of the platform `ln`/`exp`.

use std::fmt;
use std::ops::{Add, Mul, Neg, Sub};

use num_bigint::BigInt;
use num_rational::{BigRational, Rational64};
use num_traits::{ToPrimitive, Zero};
use serde::Serialize;

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct Interval {
    pub lo: f64,
    pub hi: f64,
}

#[inline]
fn down(x: f64) -> f64 {
    if x.is_finite() {
        x.next_down()
    } else {
        x
    }
}

#[inline]
fn up(x: f64) -> f64 {
    if x.is_finite() {
        x.next_up()
    } else {
        x
    }
}

impl Interval {
    pub fn new(lo: f64, hi: f64) -> Self {
        debug_assert!(lo <= hi || lo.is_nan() || hi.is_nan(), "bad interval [{lo}, {hi}]");
        Interval { lo, hi }
    }

    pub fn point(x: f64) -> Self {
        Interval { lo: x, hi: x }
    }

    /// Smallest interval with representable endpoints containing `x`.
    pub fn from_rational(x: Rational64) -> Self {
        let f = x.to_f64().unwrap_or(f64::NAN);
        let (n, d) = (*x.numer(), *x.denom());
        if d > 0 && (d as u64).is_power_of_two() && n.unsigned_abs() < (1 << 53) {
            Interval::point(f)
        } else {
            Interval { lo: down(f), hi: up(f) }
        }
    }

    pub fn width(&self) -> f64 {
        self.hi - self.lo
    }

    pub fn mid(&self) -> f64 {
        0.5 * (self.lo + self.hi)
    }

    pub fn contains(&self, x: f64) -> bool {
        self.lo <= x && x <= self.hi
    }

    pub fn overlaps(&self, o: &Interval) -> bool {
        self.lo <= o.hi && o.lo <= self.hi
    }

    pub fn hull(&self, o: &Interval) -> Interval {
        Interval { lo: self.lo.min(o.lo), hi: self.hi.max(o.hi) }
    }

    pub fn scale(&self, c: f64) -> Interval {
        let (a, b) = (self.lo * c, self.hi * c);
        Interval { lo: down(a.min(b)), hi: up(a.max(b)) }
    }

    /// Division by an interval of positive numbers.
    pub fn div_pos(&self, o: &Interval) -> Interval {
        assert!(o.lo > 0.0, "division by non-positive interval");
        let c = [self.lo / o.lo, self.lo / o.hi, self.hi / o.lo, self.hi / o.hi];
        let lo = c.iter().copied().fold(f64::INFINITY, f64::min);
        let hi = c.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        Interval { lo: down(lo), hi: up(hi) }
    }

    /// Natural log of a positive interval.
    pub fn ln(&self) -> Interval {
        assert!(self.lo > 0.0, "log of non-positive interval");
        Interval { lo: down(self.lo.ln()), hi: up(self.hi.ln()) }
    }

    pub fn exp(&self) -> Interval {
        Interval { lo: down(self.lo.exp()).max(0.0), hi: up(self.hi.exp()) }
    }

    pub fn min(&self, o: &Interval) -> Interval {
        Interval { lo: self.lo.min(o.lo), hi: self.hi.min(o.hi) }
    }

    pub fn max(&self, o: &Interval) -> Interval {
        Interval { lo: self.lo.max(o.lo), hi: self.hi.max(o.hi) }
    }
}

impl Add for Interval {
    type Output = Interval;
    fn add(self, o: Interval) -> Interval {
        Interval { lo: down(self.lo + o.lo), hi: up(self.hi + o.hi) }
    }
}

impl Sub for Interval {
    type Output = Interval;
    fn sub(self, o: Interval) -> Interval {
        Interval { lo: down(self.lo - o.hi), hi: up(self.hi - o.lo) }
    }
}

impl Neg for Interval {
    type Output = Interval;
    fn neg(self) -> Interval {
        Interval { lo: -self.hi, hi: -self.lo }
    }
}

impl Mul for Interval {
    type Output = Interval;
    fn mul(self, o: Interval) -> Interval {
        let c = [self.lo * o.lo, self.lo * o.hi, self.hi * o.lo, self.hi * o.hi];
        let lo = c.iter().copied().fold(f64::INFINITY, f64::min);
        let hi = c.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        Interval { lo: down(lo), hi: up(hi) }
    }
}

impl fmt::Display for Interval {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "[{}, {}]", self.lo, self.hi)
    }
}

/// Widens a 64-bit rational to an arbitrary-precision one.
pub fn to_big(r: Rational64) -> BigRational {
    BigRational::new(BigInt::from(*r.numer()), BigInt::from(*r.denom()))
}

/// Nearest float to a big rational.
pub fn big_to_f64(r: &BigRational) -> f64 {
    r.to_f64().unwrap_or(f64::NAN)
}

/// A coefficient: exact rational or real.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Scalar {
    Rational(Rational64),
    Real(f64),
}

impl Scalar {
    pub fn int(n: i64) -> Self {
        Scalar::Rational(Rational64::from_integer(n))
    }

    pub fn to_f64(&self) -> f64 {
        match self {
            Scalar::Rational(r) => r.to_f64().unwrap_or(f64::NAN),
            Scalar::Real(x) => *x,
        }
    }

    pub fn as_interval(&self) -> Interval {
        match self {
            Scalar::Rational(r) => Interval::from_rational(*r),
            Scalar::Real(x) => Interval::point(*x),
        }
    }
}

impl fmt::Display for Scalar {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Scalar::Rational(r) => write!(f, "{r}"),
            Scalar::Real(x) => write!(f, "{x}"),
        }
    }
}

/// A potential value: exact rational, or a certified interval.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Value {
    Exact(Rational64),
    Approx(Interval),
}

impl Value {
    pub fn zero() -> Self {
        Value::Exact(Rational64::zero())
    }

    pub fn int(n: i64) -> Self {
        Value::Exact(Rational64::from_integer(n))
    }

    pub fn is_exact(&self) -> bool {
        matches!(self, Value::Exact(_))
    }

    pub fn exact(&self) -> Option<Rational64> {
        match self {
            Value::Exact(r) => Some(*r),
            Value::Approx(_) => None,
        }
    }

    pub fn interval(&self) -> Interval {
        match self {
            Value::Exact(r) => Interval::from_rational(*r),
            Value::Approx(i) => *i,
        }
    }

    pub fn lo(&self) -> f64 {
        self.interval().lo
    }

    pub fn hi(&self) -> f64 {
        self.interval().hi
    }

    /// Point value (midpoint for intervals).
    pub fn mid(&self) -> f64 {
        match self {
            Value::Exact(r) => r.to_f64().unwrap_or(f64::NAN),
            Value::Approx(i) => i.mid(),
        }
    }

    pub fn width(&self) -> f64 {
        match self {
            Value::Exact(_) => 0.0,
            Value::Approx(i) => i.width(),
        }
    }

    pub fn scale(&self, c: Scalar) -> Value {
        match (self, c) {
            (Value::Exact(a), Scalar::Rational(b)) => Value::Exact(a * b),
            _ => Value::Approx(self.interval() * c.as_interval()),
        }
    }

    pub fn half(&self) -> Value {
        self.scale(Scalar::Rational(Rational64::new(1, 2)))
    }
}

impl Add for Value {
    type Output = Value;
    fn add(self, o: Value) -> Value {
        match (self, o) {
            (Value::Exact(a), Value::Exact(b)) => Value::Exact(a + b),
            _ => Value::Approx(self.interval() + o.interval()),
        }
    }
}

impl Sub for Value {
    type Output = Value;
    fn sub(self, o: Value) -> Value {
        match (self, o) {
            (Value::Exact(a), Value::Exact(b)) => Value::Exact(a - b),
            _ => Value::Approx(self.interval() - o.interval()),
        }
    }
}

impl Neg for Value {
    type Output = Value;
    fn neg(self) -> Value {
        match self {
            Value::Exact(a) => Value::Exact(-a),
            Value::Approx(i) => Value::Approx(-i),
        }
    }
}

impl fmt::Display for Value {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Value::Exact(r) => write!(f, "{r}"),
            Value::Approx(i) => i.fmt(f),
        }
    }
}
