//! Natural-log representation of nonnegative weights.
//!
//! Products become sums and `-inf` encodes an exact zero. Sums are
//! accumulated with a running max shift so that terms such as
//! `beta^(delta' * d_i * m)` never underflow.

use std::fmt;
use std::ops::{Div, Mul};

use serde::{Serialize, Serializer};

/// A nonnegative weight stored as its natural logarithm.
#[derive(Clone, Copy, Debug, PartialEq, PartialOrd)]
pub struct LogWeight(f64);

impl LogWeight {
    pub const ZERO: LogWeight = LogWeight(f64::NEG_INFINITY);
    pub const ONE: LogWeight = LogWeight(0.0);

    /// Wraps a log value. `+inf` and NaN are rejected.
    pub fn from_ln(ln: f64) -> Self {
        assert!(
            !ln.is_nan() && ln != f64::INFINITY,
            "log weight must be finite or -inf, got {ln}"
        );
        LogWeight(ln)
    }

    pub fn from_linear(x: f64) -> Self {
        assert!(x >= 0.0 && x.is_finite(), "weight must be finite and nonnegative, got {x}");
        LogWeight(x.ln())
    }

    #[inline]
    pub fn ln(self) -> f64 {
        self.0
    }

    pub fn to_linear(self) -> f64 {
        self.0.exp()
    }

    pub fn is_zero(self) -> bool {
        self.0 == f64::NEG_INFINITY
    }

    /// `self^k` for a nonnegative integer exponent, with `0^0 = 1`.
    pub fn powu(self, k: u64) -> Self {
        LogWeight(scaled_ln(k, self.0))
    }

    /// Absolute gap between two log values; zero when both are exact zeros.
    pub fn abs_gap(self, other: LogWeight) -> f64 {
        if self.is_zero() && other.is_zero() {
            0.0
        } else {
            (self.0 - other.0).abs()
        }
    }

    /// Gap relative to `max(1, |self|)`.
    pub fn rel_gap(self, other: LogWeight) -> f64 {
        let gap = self.abs_gap(other);
        if gap == 0.0 {
            0.0
        } else {
            gap / self.0.abs().max(1.0)
        }
    }
}

/// `k * ln_base` with the convention that a zero count contributes nothing,
/// even when the base is zero (`ln_base = -inf`).
#[inline]
pub fn scaled_ln(k: u64, ln_base: f64) -> f64 {
    if k == 0 {
        0.0
    } else {
        k as f64 * ln_base
    }
}

impl Mul for LogWeight {
    type Output = LogWeight;

    fn mul(self, rhs: LogWeight) -> LogWeight {
        if self.is_zero() || rhs.is_zero() {
            LogWeight::ZERO
        } else {
            LogWeight(self.0 + rhs.0)
        }
    }
}

impl Div for LogWeight {
    type Output = LogWeight;

    fn div(self, rhs: LogWeight) -> LogWeight {
        assert!(!rhs.is_zero(), "division by a zero weight");
        if self.is_zero() {
            LogWeight::ZERO
        } else {
            LogWeight(self.0 - rhs.0)
        }
    }
}

impl fmt::Display for LogWeight {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.is_zero() {
            write!(f, "-inf")
        } else {
            write!(f, "{}", self.0)
        }
    }
}

impl Serialize for LogWeight {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        if self.is_zero() {
            s.serialize_str("-inf")
        } else {
            s.serialize_f64(self.0)
        }
    }
}

/// Streaming log-sum-exp accumulator: the represented value is
/// `max + ln(sum)`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct LogSumExp {
    max: f64,
    sum: f64,
}

impl Default for LogSumExp {
    fn default() -> Self {
        Self::new()
    }
}

impl LogSumExp {
    pub fn new() -> Self {
        LogSumExp { max: f64::NEG_INFINITY, sum: 0.0 }
    }

    #[inline]
    pub fn push(&mut self, ln: f64) {
        if ln == f64::NEG_INFINITY {
            return;
        }
        if ln > self.max {
            self.sum = self.sum * (self.max - ln).exp() + 1.0;
            self.max = ln;
        } else {
            self.sum += (ln - self.max).exp();
        }
    }

    pub fn push_weight(&mut self, w: LogWeight) {
        self.push(w.ln());
    }

    pub fn merge(mut self, other: LogSumExp) -> LogSumExp {
        if other.max == f64::NEG_INFINITY {
            return self;
        }
        if self.max == f64::NEG_INFINITY {
            return other;
        }
        if other.max > self.max {
            self.sum = self.sum * (self.max - other.max).exp() + other.sum;
            self.max = other.max;
        } else {
            self.sum += other.sum * (other.max - self.max).exp();
        }
        self
    }

    pub fn value(&self) -> LogWeight {
        if self.max == f64::NEG_INFINITY {
            LogWeight::ZERO
        } else {
            LogWeight::from_ln(self.max + self.sum.ln())
        }
    }
}

impl FromIterator<LogWeight> for LogSumExp {
    fn from_iter<I: IntoIterator<Item = LogWeight>>(iter: I) -> Self {
        let mut acc = LogSumExp::new();
        for w in iter {
            acc.push_weight(w);
        }
        acc
    }
}

/// Log-sum-exp of a sequence of weights.
pub fn log_sum_exp<I: IntoIterator<Item = LogWeight>>(iter: I) -> LogWeight {
    iter.into_iter().collect::<LogSumExp>().value()
}

/// Pairwise reduction in a fixed shape, so the result depends only on the
/// order of `parts` and never on how they were scheduled.
pub fn tree_reduce<T, F>(mut parts: Vec<T>, merge: F) -> Option<T>
where
    F: Fn(T, T) -> T,
{
    while parts.len() > 1 {
        let mut next = Vec::with_capacity(parts.len().div_ceil(2));
        let mut it = parts.into_iter();
        while let Some(a) = it.next() {
            match it.next() {
                Some(b) => next.push(merge(a, b)),
                None => next.push(a),
            }
        }
        parts = next;
    }
    parts.pop()
}
