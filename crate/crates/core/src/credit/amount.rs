//! An amount of social credit with an unbounded binary exponent.
//!
//! Yields that decay geometrically reach `2^-60000` and beyond within a
//! hundred thousand steps. Plain `f64` underflows long before that and the
//! choice rule then compares zeros. [`Credit`] keeps a 53-bit mantissa with
//! an `i64` exponent so those tiny yields keep their relative precision.

use std::cmp::Ordering;
use std::fmt;
use std::ops::{Add, AddAssign, Mul, Neg, Sub};

/// Real number stored as `mantissa * 2^exponent`, with `|mantissa|` in
/// `[0.5, 1)` (or exactly zero, with exponent zero).
#[derive(Clone, Copy)]
pub struct Credit {
    mantissa: f64,
    exponent: i64,
}

const LN_2: f64 = std::f64::consts::LN_2;

fn pow2(e: i64) -> f64 {
    // Valid for normal exponents only.
    debug_assert!((-1022..=1023).contains(&e));
    f64::from_bits(((e + 1023) as u64) << 52)
}

fn ldexp(mut x: f64, mut e: i64) -> f64 {
    while e > 1023 {
        x *= pow2(1023);
        e -= 1023;
        if x.is_infinite() {
            return x;
        }
    }
    while e < -1022 {
        x *= pow2(-1022);
        e += 1022;
        if x == 0.0 {
            return x;
        }
    }
    x * pow2(e)
}

fn frexp(x: f64) -> (f64, i64) {
    if x == 0.0 {
        return (0.0, 0);
    }
    let bits = x.to_bits();
    let biased = ((bits >> 52) & 0x7ff) as i64;
    if biased == 0 {
        let (m, e) = frexp(x * pow2(64));
        return (m, e - 64);
    }
    let m = f64::from_bits((bits & !(0x7ff_u64 << 52)) | (1022_u64 << 52));
    (m, biased - 1022)
}

impl Credit {
    pub const ZERO: Credit = Credit {
        mantissa: 0.0,
        exponent: 0,
    };

    fn normalized(mantissa: f64, exponent: i64) -> Self {
        let (m, e) = frexp(mantissa);
        if m == 0.0 {
            Self::ZERO
        } else {
            Self {
                mantissa: m,
                exponent: exponent + e,
            }
        }
    }

    /// Panics on NaN or infinity; every amount in the model is finite.
    pub fn from_f64(x: f64) -> Self {
        assert!(x.is_finite(), "credit amounts must be finite, got {x}");
        Self::normalized(x, 0)
    }

    /// Nearest `f64`; amounts below the `f64` range become (signed) zero.
    pub fn to_f64(self) -> f64 {
        if self.exponent > 1100 {
            return self.mantissa.signum() * f64::INFINITY;
        }
        ldexp(self.mantissa, self.exponent)
    }

    pub fn is_zero(self) -> bool {
        self.mantissa == 0.0
    }

    pub fn is_positive(self) -> bool {
        self.mantissa > 0.0
    }

    pub fn is_negative(self) -> bool {
        self.mantissa < 0.0
    }

    pub fn abs(self) -> Self {
        Self {
            mantissa: self.mantissa.abs(),
            exponent: self.exponent,
        }
    }

    pub fn max(self, other: Self) -> Self {
        if other > self {
            other
        } else {
            self
        }
    }

    /// Natural logarithm of a positive amount, usable far outside the `f64` range.
    pub fn ln(self) -> f64 {
        assert!(self.is_positive(), "ln of a non-positive credit amount");
        self.mantissa.ln() + self.exponent as f64 * LN_2
    }

    /// Binary exponent; `self = m * 2^exponent` with `|m|` in `[0.5, 1)`.
    pub fn exponent(self) -> i64 {
        self.exponent
    }

    /// Decimal rendering with `digits` significant digits, in the style of
    /// C's `%g` (trailing zeros stripped, exponent form outside `1e-4..1e{digits}`).
    pub fn format_significant(self, digits: usize) -> String {
        let digits = digits.max(1);
        if self.is_zero() {
            return "0".to_string();
        }
        let (neg, mantissa, exp10) = self.decimal_parts(digits);
        let mut out = String::new();
        if neg {
            out.push('-');
        }
        if exp10 < -4 || exp10 >= digits as i64 {
            out.push_str(&mantissa[..1]);
            let frac = mantissa[1..].trim_end_matches('0');
            if !frac.is_empty() {
                out.push('.');
                out.push_str(frac);
            }
            out.push('e');
            out.push_str(&exp10.to_string());
        } else if exp10 < 0 {
            out.push_str("0.");
            for _ in 0..(-exp10 - 1) {
                out.push('0');
            }
            out.push_str(mantissa.trim_end_matches('0'));
        } else {
            let split = exp10 as usize + 1;
            out.push_str(&mantissa[..split]);
            let frac = mantissa[split..].trim_end_matches('0');
            if !frac.is_empty() {
                out.push('.');
                out.push_str(frac);
            }
        }
        out
    }

    /// Sign, `digits` decimal digits and decimal exponent of the leading digit.
    fn decimal_parts(self, digits: usize) -> (bool, String, i64) {
        let neg = self.is_negative();
        let (scaled, shift) = if (-1000..=1000).contains(&self.exponent) {
            (self.abs().to_f64(), 0i64)
        } else {
            // Move the value into f64 range first; precision of the decimal
            // exponent split limits this path to roughly 12 correct digits.
            let log10 = self.abs().ln() / std::f64::consts::LN_10;
            let whole = log10.floor();
            (10f64.powf(log10 - whole), whole as i64)
        };
        let text = format!("{:.*e}", digits - 1, scaled);
        let (m, e) = text.split_once('e').expect("exponent form");
        let mantissa: String = m.chars().filter(|c| c.is_ascii_digit()).collect();
        let exp10: i64 = e.parse::<i64>().expect("decimal exponent") + shift;
        (neg, mantissa, exp10)
    }
}

impl Default for Credit {
    fn default() -> Self {
        Self::ZERO
    }
}

impl From<f64> for Credit {
    fn from(x: f64) -> Self {
        Self::from_f64(x)
    }
}

impl PartialEq for Credit {
    fn eq(&self, other: &Self) -> bool {
        self.cmp(other) == Ordering::Equal
    }
}

impl Eq for Credit {}

impl PartialOrd for Credit {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for Credit {
    fn cmp(&self, other: &Self) -> Ordering {
        let sign = |c: &Credit| {
            if c.mantissa > 0.0 {
                1
            } else if c.mantissa < 0.0 {
                -1
            } else {
                0
            }
        };
        let (sa, sb) = (sign(self), sign(other));
        if sa != sb || sa == 0 {
            return sa.cmp(&sb);
        }
        let magnitude = self
            .exponent
            .cmp(&other.exponent)
            .then_with(|| self.mantissa.abs().total_cmp(&other.mantissa.abs()));
        if sa > 0 {
            magnitude
        } else {
            magnitude.reverse()
        }
    }
}

impl Neg for Credit {
    type Output = Credit;

    fn neg(self) -> Credit {
        if self.is_zero() {
            return self;
        }
        Credit {
            mantissa: -self.mantissa,
            exponent: self.exponent,
        }
    }
}

impl Add for Credit {
    type Output = Credit;

    fn add(self, rhs: Credit) -> Credit {
        if self.is_zero() {
            return rhs;
        }
        if rhs.is_zero() {
            return self;
        }
        let (big, small) = if self.exponent >= rhs.exponent {
            (self, rhs)
        } else {
            (rhs, self)
        };
        let gap = big.exponent - small.exponent;
        if gap > 1100 {
            return big;
        }
        Credit::normalized(big.mantissa + ldexp(small.mantissa, -gap), big.exponent)
    }
}

impl AddAssign for Credit {
    fn add_assign(&mut self, rhs: Credit) {
        *self = *self + rhs;
    }
}

impl Sub for Credit {
    type Output = Credit;

    fn sub(self, rhs: Credit) -> Credit {
        self + (-rhs)
    }
}

impl Mul for Credit {
    type Output = Credit;

    fn mul(self, rhs: Credit) -> Credit {
        if self.is_zero() || rhs.is_zero() {
            return Credit::ZERO;
        }
        Credit::normalized(self.mantissa * rhs.mantissa, self.exponent + rhs.exponent)
    }
}

impl Mul<f64> for Credit {
    type Output = Credit;

    fn mul(self, rhs: f64) -> Credit {
        self * Credit::from_f64(rhs)
    }
}

impl std::iter::Sum for Credit {
    fn sum<I: Iterator<Item = Credit>>(iter: I) -> Credit {
        iter.fold(Credit::ZERO, |acc, x| acc + x)
    }
}

impl fmt::Debug for Credit {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.format_significant(17))
    }
}

impl fmt::Display for Credit {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.format_significant(12))
    }
}
