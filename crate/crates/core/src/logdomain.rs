//! Log-domain arithmetic for probabilities too small to hold in linear scale.

use std::iter::Sum;
use std::ops::{Add, Mul};

/// Nonnegative real stored as its natural logarithm.
///
/// `f64::NEG_INFINITY` encodes exact zero, so sums and products of zero
/// values behave like their linear counterparts.
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd)]
pub struct LogValue(f64);

impl LogValue {
    pub const ZERO: LogValue = LogValue(f64::NEG_INFINITY);
    pub const ONE: LogValue = LogValue(0.0);

    /// Wraps a value already in log scale.
    pub fn from_ln(ln: f64) -> Self {
        debug_assert!(!ln.is_nan());
        LogValue(ln)
    }

    /// Converts a nonnegative linear-scale value.
    pub fn from_linear(x: f64) -> Self {
        assert!(x >= 0.0, "LogValue requires a nonnegative value, got {x}");
        LogValue(x.ln())
    }

    pub fn ln(self) -> f64 {
        self.0
    }

    pub fn to_linear(self) -> f64 {
        self.0.exp()
    }

    pub fn is_zero(self) -> bool {
        self.0 == f64::NEG_INFINITY
    }
}

impl Add for LogValue {
    type Output = LogValue;

    fn add(self, rhs: LogValue) -> LogValue {
        LogValue(log_add(self.0, rhs.0))
    }
}

impl Mul for LogValue {
    type Output = LogValue;

    fn mul(self, rhs: LogValue) -> LogValue {
        if self.is_zero() || rhs.is_zero() {
            LogValue::ZERO
        } else {
            LogValue(self.0 + rhs.0)
        }
    }
}

impl Sum for LogValue {
    fn sum<I: Iterator<Item = LogValue>>(iter: I) -> LogValue {
        iter.fold(LogValue::ZERO, |acc, v| acc + v)
    }
}

/// log(exp(a) + exp(b)) without overflow.
pub fn log_add(a: f64, b: f64) -> f64 {
    if a == f64::NEG_INFINITY {
        return b;
    }
    if b == f64::NEG_INFINITY {
        return a;
    }
    let (hi, lo) = if a >= b { (a, b) } else { (b, a) };
    hi + (lo - hi).exp().ln_1p()
}

/// log of the sum of exponentials of `terms`.
pub fn log_sum_exp(terms: &[f64]) -> f64 {
    let hi = terms.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if hi == f64::NEG_INFINITY {
        return f64::NEG_INFINITY;
    }
    let sum: f64 = terms.iter().map(|&t| (t - hi).exp()).sum();
    hi + sum.ln()
}
