//! Precision contexts and signed log-domain magnitudes.

use std::cmp::Ordering;
use std::fmt;

use rug::float::Special;
use rug::Float;

use crate::error::{Error, Result};

pub const MIN_DIGITS: u32 = 30;
const GUARD_BITS: u32 = 16;

/// Mantissa bits carrying `digits` decimal digits plus guard bits.
pub fn digits_to_bits(digits: u32) -> u32 {
    (digits as f64 * std::f64::consts::LOG2_10).ceil() as u32 + GUARD_BITS
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PrecisionContext {
    pub working_digits: u32,
    pub residual_target: f64,
    pub max_escalations: u32,
    pub escalation_factor: u32,
}

impl Default for PrecisionContext {
    fn default() -> Self {
        PrecisionContext { working_digits: 50, residual_target: 1e-20, max_escalations: 3, escalation_factor: 2 }
    }
}

impl PrecisionContext {
    pub fn new(working_digits: u32, residual_target: f64, max_escalations: u32, escalation_factor: u32) -> Result<Self> {
        if working_digits < MIN_DIGITS {
            return Err(Error::InvalidParameter(format!("working_digits {working_digits} < {MIN_DIGITS}")));
        }
        if !(residual_target > 0.0 && residual_target < 1.0) {
            return Err(Error::InvalidParameter(format!("residual_target {residual_target} outside (0,1)")));
        }
        if escalation_factor < 2 {
            return Err(Error::InvalidParameter("escalation_factor must be >= 2".into()));
        }
        Ok(PrecisionContext { working_digits, residual_target, max_escalations, escalation_factor })
    }

    pub fn bits(&self) -> u32 {
        digits_to_bits(self.working_digits)
    }

    pub fn with_digits(&self, digits: u32) -> Self {
        PrecisionContext { working_digits: digits.max(MIN_DIGITS), ..*self }
    }

    pub fn with_target(&self, residual_target: f64) -> Self {
        PrecisionContext { residual_target, ..*self }
    }

    /// Digit counts tried in order: the starting precision, then each escalation.
    pub fn ladder(&self, start_digits: u32) -> Vec<u32> {
        let mut d = start_digits.max(self.working_digits);
        let mut out = vec![d];
        for _ in 0..self.max_escalations {
            d = d.saturating_mul(self.escalation_factor);
            out.push(d);
        }
        out
    }

    pub fn float(&self, x: f64) -> Float {
        Float::with_val(self.bits(), x)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Sign {
    Negative,
    Zero,
    Positive,
}

impl Sign {
    pub fn as_i8(self) -> i8 {
        match self {
            Sign::Negative => -1,
            Sign::Zero => 0,
            Sign::Positive => 1,
        }
    }

    fn times(self, other: Sign) -> Sign {
        match self.as_i8() * other.as_i8() {
            1 => Sign::Positive,
            -1 => Sign::Negative,
            _ => Sign::Zero,
        }
    }
}

/// A real number stored as `sign * exp(log_magnitude)`.
///
/// Zero is `(-inf, Sign::Zero)`.
#[derive(Debug, Clone, PartialEq)]
pub struct LogValue {
    log_magnitude: Float,
    sign: Sign,
}

impl LogValue {
    pub fn zero(prec: u32) -> Self {
        LogValue { log_magnitude: Float::with_val(prec, Special::NegInfinity), sign: Sign::Zero }
    }

    pub fn one(prec: u32) -> Self {
        LogValue { log_magnitude: Float::new(prec), sign: Sign::Positive }
    }

    pub fn from_ln(log_magnitude: Float, sign: Sign) -> Self {
        if sign == Sign::Zero || log_magnitude.is_infinite() && log_magnitude.is_sign_negative() {
            return LogValue::zero(log_magnitude.prec());
        }
        LogValue { log_magnitude, sign }
    }

    /// Positive value `exp(ln)`.
    pub fn from_ln_f64(ln: f64) -> Self {
        LogValue::from_ln(Float::with_val(53, ln), Sign::Positive)
    }

    pub fn from_float(x: &Float) -> Self {
        if x.is_zero() {
            return LogValue::zero(x.prec());
        }
        let sign = if x.is_sign_negative() { Sign::Negative } else { Sign::Positive };
        let mag = Float::with_val(x.prec() + GUARD_BITS, x.abs_ref());
        LogValue { log_magnitude: mag.ln(), sign }
    }

    pub fn from_f64(x: f64) -> Self {
        LogValue::from_float(&Float::with_val(53, x))
    }

    pub fn sign(&self) -> Sign {
        self.sign
    }

    pub fn is_zero(&self) -> bool {
        self.sign == Sign::Zero
    }

    pub fn ln(&self) -> &Float {
        &self.log_magnitude
    }

    pub fn ln_f64(&self) -> f64 {
        self.log_magnitude.to_f64()
    }

    pub fn prec(&self) -> u32 {
        self.log_magnitude.prec()
    }

    pub fn to_float(&self, prec: u32) -> Float {
        if self.is_zero() {
            return Float::new(prec);
        }
        let v = Float::with_val(prec, self.log_magnitude.exp_ref());
        if self.sign == Sign::Negative {
            -v
        } else {
            v
        }
    }

    /// Decoded value; saturates to 0 or ±inf outside the f64 range.
    pub fn to_f64(&self) -> f64 {
        if self.is_zero() {
            return 0.0;
        }
        let v = self.log_magnitude.to_f64().exp();
        if self.sign == Sign::Negative {
            -v
        } else {
            v
        }
    }

    pub fn abs(&self) -> Self {
        if self.is_zero() {
            return self.clone();
        }
        LogValue { log_magnitude: self.log_magnitude.clone(), sign: Sign::Positive }
    }

    pub fn neg(&self) -> Self {
        let sign = match self.sign {
            Sign::Positive => Sign::Negative,
            Sign::Negative => Sign::Positive,
            Sign::Zero => Sign::Zero,
        };
        LogValue { log_magnitude: self.log_magnitude.clone(), sign }
    }

    pub fn mul(&self, other: &LogValue) -> Self {
        let sign = self.sign.times(other.sign);
        if sign == Sign::Zero {
            return LogValue::zero(self.prec().max(other.prec()));
        }
        let prec = self.prec().max(other.prec());
        LogValue { log_magnitude: Float::with_val(prec, &self.log_magnitude + &other.log_magnitude), sign }
    }

    /// `self / other`; division by zero yields a +inf magnitude.
    pub fn div(&self, other: &LogValue) -> Self {
        if self.is_zero() {
            return self.clone();
        }
        let prec = self.prec().max(other.prec());
        if other.is_zero() {
            return LogValue { log_magnitude: Float::with_val(prec, Special::Infinity), sign: self.sign };
        }
        let sign = self.sign.times(other.sign);
        LogValue { log_magnitude: Float::with_val(prec, &self.log_magnitude - &other.log_magnitude), sign }
    }

    pub fn recip(&self) -> Self {
        LogValue::one(self.prec()).div(self)
    }

    /// `|self|^p` with the sign dropped.
    pub fn pow_abs(&self, p: f64) -> Self {
        if self.is_zero() {
            return self.clone();
        }
        LogValue { log_magnitude: Float::with_val(self.prec(), &self.log_magnitude * p), sign: Sign::Positive }
    }

    pub fn sqrt(&self) -> Self {
        self.pow_abs(0.5)
    }

    /// Multiply by `exp(x)`.
    pub fn scale_exp(&self, x: &Float) -> Self {
        if self.is_zero() {
            return self.clone();
        }
        let prec = self.prec().max(x.prec());
        LogValue { log_magnitude: Float::with_val(prec, &self.log_magnitude + x), sign: self.sign }
    }

    pub fn scale_exp_f64(&self, x: f64) -> Self {
        self.scale_exp(&Float::with_val(53, x))
    }

    /// Total order on the represented reals.
    pub fn cmp_value(&self, other: &LogValue) -> Ordering {
        let a = self.sign.as_i8();
        let b = other.sign.as_i8();
        if a != b {
            return a.cmp(&b);
        }
        let ord = self.log_magnitude.partial_cmp(&other.log_magnitude).unwrap_or(Ordering::Equal);
        match self.sign {
            Sign::Positive => ord,
            Sign::Negative => ord.reverse(),
            Sign::Zero => Ordering::Equal,
        }
    }

    /// Scientific notation with `sig` significant digits, e.g. `1.2345e-300`.
    pub fn to_sci(&self, sig: usize) -> String {
        if self.is_zero() {
            return format!("{:.*e}", sig.saturating_sub(1), 0.0);
        }
        let prec = self.prec().max(64) + 64;
        let v = self.to_float(prec);
        if v.is_infinite() {
            return if v.is_sign_negative() { "-inf".into() } else { "inf".into() };
        }
        let (neg, digits, exp) = v.to_sign_string_exp(10, Some(sig));
        let exp = exp.unwrap_or(0) - 1;
        let (head, tail) = digits.split_at(1);
        let sign = if neg { "-" } else { "" };
        if tail.is_empty() {
            format!("{sign}{head}e{exp}")
        } else {
            format!("{sign}{head}.{tail}e{exp}")
        }
    }
}

impl fmt::Display for LogValue {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.to_sci(17))
    }
}

fn canonical_order(a: &LogValue, b: &LogValue) -> Ordering {
    b.log_magnitude
        .partial_cmp(&a.log_magnitude)
        .unwrap_or(Ordering::Equal)
        .then_with(|| b.sign.cmp(&a.sign))
}

/// Signed sum in the log domain.
///
/// Inputs are sorted (descending magnitude, positive before negative) before
/// summation, so the result does not depend on the input order. An empty list
/// sums to zero.
pub fn log_sum(values: &[LogValue]) -> LogValue {
    let prec = values.iter().map(LogValue::prec).max().unwrap_or(53);
    let mut live: Vec<&LogValue> = values.iter().filter(|v| !v.is_zero()).collect();
    if live.is_empty() {
        return LogValue::zero(prec);
    }
    live.sort_by(|a, b| canonical_order(a, b));
    let top = live[0].log_magnitude.clone();
    if top.is_infinite() {
        return LogValue { log_magnitude: Float::with_val(prec, &top), sign: live[0].sign };
    }
    let mut acc = Float::new(prec + GUARD_BITS);
    for v in &live {
        let shifted = Float::with_val(prec + GUARD_BITS, &v.log_magnitude - &top).exp();
        match v.sign {
            Sign::Positive => acc += &shifted,
            Sign::Negative => acc -= &shifted,
            Sign::Zero => {}
        }
    }
    if acc.is_zero() {
        return LogValue::zero(prec);
    }
    let sign = if acc.is_sign_negative() { Sign::Negative } else { Sign::Positive };
    let ln = Float::with_val(prec, acc.abs().ln() + &top);
    LogValue { log_magnitude: ln, sign }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn lv(ln: f64, sign: Sign) -> LogValue {
        LogValue::from_ln(Float::with_val(200, ln), sign)
    }

    #[test]
    fn sums_small_cases() {
        let four = log_sum(&[lv(2f64.ln(), Sign::Positive), lv(2f64.ln(), Sign::Positive)]);
        assert!((four.ln_f64() - 4f64.ln()).abs() < 1e-15);
        let zero = log_sum(&[lv(0.0, Sign::Positive), lv(0.0, Sign::Negative)]);
        assert!(zero.is_zero());
        assert!(zero.ln().is_infinite());
        let two = log_sum(&[lv(3f64.ln(), Sign::Positive), lv(0.0, Sign::Negative)]);
        assert_eq!(two.sign(), Sign::Positive);
        assert!((two.ln_f64() - 2f64.ln()).abs() < 1e-15);
    }

    #[test]
    fn huge_magnitudes_do_not_overflow() {
        let a = lv(5000.0, Sign::Positive);
        let b = lv(5000.0 + 2f64.ln(), Sign::Negative);
        let s = log_sum(&[a, b]);
        assert_eq!(s.sign(), Sign::Negative);
        assert!((s.ln_f64() - 5000.0).abs() < 1e-12);
    }

    #[test]
    fn sci_formatting() {
        assert_eq!(LogValue::from_f64(1234.5).to_sci(5), "1.2345e3");
        assert_eq!(LogValue::from_f64(-0.00025).to_sci(2), "-2.5e-4");
        let big = lv(10000.0, Sign::Positive);
        assert!(big.to_sci(17).ends_with("e4342"));
    }

    #[test]
    fn context_validation() {
        assert!(PrecisionContext::new(20, 1e-10, 2, 2).is_err());
        assert!(PrecisionContext::new(40, 1.5, 2, 2).is_err());
        assert!(PrecisionContext::new(40, 1e-10, 2, 1).is_err());
        let c = PrecisionContext::new(40, 1e-10, 2, 3).unwrap();
        assert_eq!(c.ladder(40), vec![40, 120, 360]);
    }
}
