//! Sign-tracked log-domain scalars.
//!
//! A [`SignedLog`] stores a real number as `sign * exp(ln_abs)`, which keeps
//! products and quotients of astronomically large or tiny factors exactly
//! representable. Sums go through [`signed_sum`], which accumulates positive
//! and negative parts separately and reports how much cancellation occurred.

/// A real number represented as `sign * exp(ln_abs)`.
///
/// `sign == 0` iff the value is exactly zero; `ln_abs` is ignored in that
/// case. Any finite `f64` (and far beyond its range) is representable.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SignedLog {
    pub sign: i8,
    pub ln_abs: f64,
}

impl SignedLog {
    pub const ZERO: SignedLog = SignedLog { sign: 0, ln_abs: f64::NEG_INFINITY };
    pub const ONE: SignedLog = SignedLog { sign: 1, ln_abs: 0.0 };

    pub fn new(sign: i8, ln_abs: f64) -> Self {
        debug_assert!(sign == -1 || sign == 0 || sign == 1);
        if sign == 0 {
            Self::ZERO
        } else {
            SignedLog { sign, ln_abs }
        }
    }

    /// Positive value from its natural log.
    pub fn from_ln(ln_abs: f64) -> Self {
        SignedLog { sign: 1, ln_abs }
    }

    pub fn from_f64(v: f64) -> Self {
        if v == 0.0 {
            Self::ZERO
        } else {
            SignedLog { sign: if v > 0.0 { 1 } else { -1 }, ln_abs: v.abs().ln() }
        }
    }

    /// Back to `f64`; overflows saturate to `±inf` (see [`Self::saturates_f64`]).
    pub fn to_f64(self) -> f64 {
        self.sign as f64 * self.ln_abs.exp()
    }

    /// True when the magnitude exceeds the `f64` range, so [`Self::to_f64`]
    /// would return `±inf`.
    pub fn saturates_f64(self) -> bool {
        self.sign != 0 && self.ln_abs > f64::MAX.ln()
    }

    pub fn is_zero(self) -> bool {
        self.sign == 0
    }

    pub fn abs(self) -> Self {
        SignedLog { sign: self.sign.abs(), ln_abs: self.ln_abs }
    }

    pub fn neg(self) -> Self {
        SignedLog { sign: -self.sign, ln_abs: self.ln_abs }
    }

    pub fn mul(self, rhs: Self) -> Self {
        if self.sign == 0 || rhs.sign == 0 {
            return Self::ZERO;
        }
        SignedLog { sign: self.sign * rhs.sign, ln_abs: self.ln_abs + rhs.ln_abs }
    }

    pub fn div(self, rhs: Self) -> Self {
        debug_assert!(rhs.sign != 0, "division by zero SignedLog");
        if self.sign == 0 {
            return Self::ZERO;
        }
        SignedLog { sign: self.sign * rhs.sign, ln_abs: self.ln_abs - rhs.ln_abs }
    }

    /// Multiply by `exp(ln_factor)` (a positive factor given in log form).
    pub fn scale_ln(self, ln_factor: f64) -> Self {
        if self.sign == 0 {
            return Self::ZERO;
        }
        SignedLog { sign: self.sign, ln_abs: self.ln_abs + ln_factor }
    }

    pub fn add(self, rhs: Self) -> Self {
        signed_sum([self, rhs]).value
    }

    pub fn sub(self, rhs: Self) -> Self {
        self.add(rhs.neg())
    }

    /// Relative difference `|a - b| / max(|a|, |b|)`, 0 when both are zero.
    pub fn rel_diff(self, rhs: Self) -> f64 {
        if self.sign == 0 && rhs.sign == 0 {
            return 0.0;
        }
        let diff = self.sub(rhs);
        if diff.sign == 0 {
            return 0.0;
        }
        (diff.ln_abs - self.ln_abs.max(rhs.ln_abs)).exp()
    }
}

/// Outcome of a sign-aware log-domain sum.
#[derive(Debug, Clone, Copy)]
pub struct SumOutcome {
    pub value: SignedLog,
    /// Natural log of the largest term magnitude (`-inf` when all terms are zero).
    pub max_term_ln: f64,
    /// `|result| / max_term` in linear scale. Near 1 means no cancellation;
    /// values near 0 mean the sum lost that many leading digits.
    pub cancellation: f64,
}

impl SumOutcome {
    /// A sum is flagged catastrophic when fewer than ~8 leading digits survive.
    pub const CANCELLATION_FLOOR: f64 = 1e-8;

    pub fn flagged(&self) -> bool {
        !self.value.is_zero() && self.cancellation < Self::CANCELLATION_FLOOR
            || self.value.is_zero() && self.max_term_ln.is_finite()
    }
}

/// Sum of signed log-domain terms.
///
/// Positive and negative parts are each accumulated with a streaming
/// log-sum-exp (no cancellation within a part); the single subtraction at the
/// end is where precision can be lost, and `cancellation` quantifies it.
pub fn signed_sum<I>(terms: I) -> SumOutcome
where
    I: IntoIterator<Item = SignedLog>,
{
    let mut pos = LogAccumulator::new();
    let mut neg = LogAccumulator::new();
    for t in terms {
        match t.sign {
            1 => pos.push(t.ln_abs),
            -1 => neg.push(t.ln_abs),
            _ => {}
        }
    }
    let lp = pos.ln_sum();
    let ln = neg.ln_sum();
    let max_term_ln = pos.max.max(neg.max);

    let value = match (lp.is_finite(), ln.is_finite()) {
        (false, false) => SignedLog::ZERO,
        (true, false) => SignedLog::from_ln(lp),
        (false, true) => SignedLog::new(-1, ln),
        (true, true) => {
            if lp == ln {
                SignedLog::ZERO
            } else {
                let (hi, lo, sign) = if lp > ln { (lp, ln, 1) } else { (ln, lp, -1) };
                // ln(e^hi - e^lo) = hi + ln(1 - e^(lo-hi))
                SignedLog::new(sign, hi + (-(lo - hi).exp()).ln_1p())
            }
        }
    };

    let cancellation = if value.is_zero() {
        0.0
    } else {
        (value.ln_abs - max_term_ln).exp().min(1.0)
    };
    SumOutcome { value, max_term_ln, cancellation }
}

/// Streaming log-sum-exp of nonnegative terms given by their logs.
struct LogAccumulator {
    max: f64,
    /// Sum of exp(l - max) over pushed terms.
    scaled: f64,
}

impl LogAccumulator {
    fn new() -> Self {
        LogAccumulator { max: f64::NEG_INFINITY, scaled: 0.0 }
    }

    fn push(&mut self, l: f64) {
        if l == f64::NEG_INFINITY {
            return;
        }
        if l > self.max {
            self.scaled = self.scaled * (self.max - l).exp() + 1.0;
            self.max = l;
        } else {
            self.scaled += (l - self.max).exp();
        }
    }

    fn ln_sum(&self) -> f64 {
        if self.scaled == 0.0 {
            f64::NEG_INFINITY
        } else {
            self.max + self.scaled.ln()
        }
    }
}

/// Log-sum-exp of plain (all-positive) log terms.
pub fn ln_sum_exp(terms: &[f64]) -> f64 {
    let mut acc = LogAccumulator::new();
    for &t in terms {
        acc.push(t);
    }
    acc.ln_sum()
}
