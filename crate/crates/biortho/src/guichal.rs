//! Explicit lower bounds for `1/d_{T,m}` built from Güichal's exponential sums
//! `q(s) = sum_k A_k e^{-lambda_k s}`.

use rayon::prelude::*;
use rug::float::Constant;
use rug::ops::Pow;
use rug::{Float, Rational};

use crate::error::{Error, Result};
use crate::precision::{LogValue, Sign};
use crate::special::{gamma_series, ln_factorial, maximize_unimodal};
use crate::spectra::{GapProfile, Spectrum};

const PREC: u32 = 128;

#[derive(Debug, Clone, PartialEq)]
pub enum Coefficients {
    Exact(Vec<Rational>),
    Approx(Vec<Float>),
}

#[derive(Debug, Clone, PartialEq)]
pub struct GuichalSum {
    lambdas: Vec<Rational>,
    coefficients: Coefficients,
}

fn check_lambdas<T: PartialOrd>(l: &[T]) -> Result<()> {
    if l.is_empty() {
        return Err(Error::InvalidParameter("need at least one exponent".into()));
    }
    for i in 1..l.len() {
        if l[i] == l[i - 1] {
            return Err(Error::DuplicateLambda { index: i + 1 });
        }
        if l[i] < l[i - 1] {
            return Err(Error::NotMonotone { index: i + 1 });
        }
    }
    Ok(())
}

/// `A_k = 1 / prod_{i != k} (lambda_i - lambda_k)`.
///
/// Every finite `f64` is a dyadic rational, so this always runs in exact mode.
pub fn guichal_coefficients(lambdas: &[f64]) -> Result<GuichalSum> {
    if lambdas.iter().any(|l| !l.is_finite() || *l < 0.0) {
        return Err(Error::InvalidParameter("exponents must be finite and nonnegative".into()));
    }
    let rs: Vec<Rational> = lambdas.iter().map(|&l| Rational::from_f64(l).unwrap()).collect();
    GuichalSum::from_rationals(rs)
}

impl GuichalSum {
    pub fn from_rationals(lambdas: Vec<Rational>) -> Result<Self> {
        check_lambdas(&lambdas)?;
        let coeffs = (0..lambdas.len())
            .map(|k| {
                let mut p = Rational::from(1);
                for (i, li) in lambdas.iter().enumerate() {
                    if i != k {
                        p *= Rational::from(li - &lambdas[k]);
                    }
                }
                p.recip()
            })
            .collect();
        Ok(GuichalSum { lambdas, coefficients: Coefficients::Exact(coeffs) })
    }

    /// Big-float mode for exponents that are not given exactly.
    pub fn from_floats(lambdas: &[Float]) -> Result<Self> {
        check_lambdas(lambdas)?;
        let prec = lambdas.iter().map(Float::prec).max().unwrap();
        let coeffs = (0..lambdas.len())
            .map(|k| {
                let mut p = Float::with_val(prec, 1);
                for (i, li) in lambdas.iter().enumerate() {
                    if i != k {
                        p *= Float::with_val(prec, li - &lambdas[k]);
                    }
                }
                p.recip()
            })
            .collect();
        let exact = lambdas.iter().map(|l| l.to_rational().unwrap()).collect();
        Ok(GuichalSum { lambdas: exact, coefficients: Coefficients::Approx(coeffs) })
    }

    /// Number of exponents minus one.
    pub fn order(&self) -> usize {
        self.lambdas.len() - 1
    }

    pub fn lambdas(&self) -> &[Rational] {
        &self.lambdas
    }

    pub fn coefficients(&self) -> &Coefficients {
        &self.coefficients
    }

    pub fn is_exact(&self) -> bool {
        matches!(self.coefficients, Coefficients::Exact(_))
    }

    fn coefficient_float(&self, k: usize, prec: u32) -> Float {
        match &self.coefficients {
            Coefficients::Exact(c) => Float::with_val(prec, &c[k]),
            Coefficients::Approx(c) => Float::with_val(prec, &c[k]),
        }
    }

    /// `sum_i A_i (-lambda_i)^j` for `j = 0..=M`, i.e. `q^{(j)}(0)`.
    ///
    /// Exact in rational mode; in float mode the values are rounded.
    pub fn moment_conditions(&self) -> Vec<Rational> {
        let m = self.order();
        match &self.coefficients {
            Coefficients::Exact(c) => (0..=m)
                .map(|j| {
                    let mut s = Rational::new();
                    for (a, l) in c.iter().zip(&self.lambdas) {
                        let p = Rational::from(-l.clone()).pow(j as i32);
                        s += Rational::from(a * p);
                    }
                    s
                })
                .collect(),
            Coefficients::Approx(c) => {
                let prec = c[0].prec();
                (0..=m)
                    .map(|j| {
                        let mut s = Float::new(prec);
                        for (a, l) in c.iter().zip(&self.lambdas) {
                            let neg = Float::with_val(prec, -l.clone());
                            s += Float::with_val(prec, a * neg.pow(j as u32));
                        }
                        s.to_rational().unwrap_or_default()
                    })
                    .collect()
            }
        }
    }

    /// `q(s)` at `prec` bits of working precision.
    pub fn eval_float(&self, s: f64, prec: u32) -> Float {
        let sf = Float::with_val(prec, s);
        let mut acc = Float::new(prec);
        for (k, l) in self.lambdas.iter().enumerate() {
            let e = Float::with_val(prec, -Float::with_val(prec, l) * &sf).exp();
            acc += self.coefficient_float(k, prec) * e;
        }
        acc
    }
}

/// `q(s)`, with working precision raised until the cancellation is resolved.
pub fn q_eval(g: &GuichalSum, s: f64) -> Result<f64> {
    if !(s >= 0.0) {
        return Err(Error::InvalidParameter(format!("s must be nonnegative, got {s}")));
    }
    if s == 0.0 {
        return Ok(if g.order() == 0 { g.coefficient_float(0, 64).to_f64() } else { 0.0 });
    }
    let mut prec = 128u32;
    loop {
        let v = g.eval_float(s, prec);
        let largest = g
            .lambdas
            .iter()
            .enumerate()
            .map(|(k, l)| {
                let e = Float::with_val(64, -Float::with_val(64, l) * s).exp();
                Float::with_val(64, g.coefficient_float(k, 64) * e).abs()
            })
            .fold(Float::new(64), |a, b| a.max(&b));
        let noise = Float::with_val(64, largest * Float::with_val(64, Float::i_exp(1, 64 - prec as i32)));
        if Float::with_val(64, v.abs_ref()) > noise || prec >= 1 << 16 {
            return Ok(v.to_f64());
        }
        prec *= 2;
    }
}

/// `s^M / M! e^{-lambda_1 s}`, the envelope of `q`.
pub fn q_envelope(g: &GuichalSum, s: f64) -> f64 {
    let m = g.order() as f64;
    let l1 = g.lambdas[0].to_f64();
    if s == 0.0 {
        return if g.order() == 0 { 1.0 } else { 0.0 };
    }
    (m * s.ln() - ln_factorial(m, 64).to_f64() - l1 * s).exp()
}

#[derive(Debug, Clone, PartialEq)]
pub struct MomentIntegral {
    /// `(int_0^T s^{2M}/M!^2 e^{-2 lambda_1 s} ds)^{1/2}`.
    pub exact: LogValue,
    /// `T^M/M! sqrt(2T) / sqrt(2M + 1 + 2 T lambda_1)`.
    pub closed_bound: LogValue,
}

pub fn moment_integral(m: usize, lambda1: f64, t: f64) -> Result<MomentIntegral> {
    if !(lambda1 >= 0.0) || !(t > 0.0) {
        return Err(Error::InvalidParameter(format!("need lambda1 >= 0 and T > 0, got {lambda1}, {t}")));
    }
    let p = PREC;
    let a = Float::with_val(p, 2 * m + 1);
    let x = Float::with_val(p, 2.0 * lambda1) * t;
    let ln_t = Float::with_val(p, t).ln();
    let lf = ln_factorial(m as f64, p);
    let s = gamma_series(&a, &x, p);
    let ln_sq = Float::with_val(p, &a * &ln_t) - &x + s.ln() - Float::with_val(p, &lf * 2u32);
    let exact = LogValue::from_ln(ln_sq / 2u32, Sign::Positive);
    let denom = Float::with_val(p, &a + &x).ln();
    let ln_b = Float::with_val(p, &ln_t * m as u32) - &lf
        + Float::with_val(p, Float::with_val(p, 2.0 * t).ln() - denom) / 2u32;
    Ok(MomentIntegral { exact, closed_bound: LogValue::from_ln(ln_b, Sign::Positive) })
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExpTail {
    pub value: LogValue,
    pub lower: LogValue,
    pub upper: LogValue,
}

/// `max_{x >= 0} (1 - e^{-x})(1 + x)/x`.
pub fn c1_constant() -> f64 {
    let f = |x: f64| -(-x).exp_m1() * (1.0 + x) / x;
    maximize_unimodal(f, 0.1, 10.0, 1e-12).1
}

/// `sum_{n >= N} x^n/n!` with the two-sided estimate `(x/(1+x))^N e^x` times
/// `1/N!` below and `C_1 N` above.
pub fn exp_tail(n: usize, x: f64) -> Result<ExpTail> {
    if n == 0 || !(x >= 0.0) {
        return Err(Error::InvalidParameter(format!("need N >= 1 and x >= 0, got {n}, {x}")));
    }
    let p = PREC;
    if x == 0.0 {
        let z = LogValue::zero(p);
        return Ok(ExpTail { value: z.clone(), lower: z.clone(), upper: z });
    }
    let xf = Float::with_val(p, x);
    let nf = n as f64;
    let ln_x = Float::with_val(p, xf.ln_ref());
    let s = gamma_series(&Float::with_val(p, n), &xf, p);
    let value = Float::with_val(p, &ln_x * n as u32) + s.ln() - ln_factorial(nf - 1.0, p);
    let ratio = Float::with_val(p, &ln_x - Float::with_val(p, x + 1.0).ln()) * n as u32 + &xf;
    let lower = Float::with_val(p, &ratio - ln_factorial(nf, p));
    let upper = ratio + Float::with_val(p, c1_constant() * nf).ln();
    Ok(ExpTail {
        value: LogValue::from_ln(value, Sign::Positive),
        lower: LogValue::from_ln(lower, Sign::Positive),
        upper: LogValue::from_ln(upper, Sign::Positive),
    })
}

/// `prod_{i <= M+1, i != m} |lambda_i - lambda_m|` times the exact moment integral.
pub fn distance_upper_bound(s: &Spectrum, t: f64, m: usize, big_m: usize) -> Result<LogValue> {
    if m == 0 || big_m < m {
        return Err(Error::InvalidParameter(format!("need 1 <= m <= M, got m={m}, M={big_m}")));
    }
    if s.truncation_length() < big_m + 1 {
        return Err(Error::InsufficientTruncation { have: s.truncation_length(), need: big_m + 1 });
    }
    let lm = s.lambda(m);
    let mut acc = Float::new(PREC);
    for i in (1..=big_m + 1).filter(|&i| i != m) {
        acc += Float::with_val(PREC, s.lambda(i) - lm).abs().ln();
    }
    let mi = moment_integral(big_m, s.lambda(1), t)?;
    Ok(mi.exact.scale_exp(&acc))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Regime {
    OneGap,
    TwoGapMLeNstar,
    TwoGapMGtNstar,
    BestMScan,
}

impl Regime {
    pub fn name(self) -> &'static str {
        match self {
            Regime::OneGap => "one_gap",
            Regime::TwoGapMLeNstar => "two_gap_m_le_Nstar",
            Regime::TwoGapMGtNstar => "two_gap_m_gt_Nstar",
            Regime::BestMScan => "best_M_scan",
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct BoundParameters {
    pub k_star: Option<i64>,
    pub big_k_star: Option<i64>,
    pub big_k_prime_star: Option<i64>,
    pub m_used: Option<usize>,
    /// Log of the factor in front of `e^{1/X}`.
    pub ln_constant: f64,
    /// Same factor with the constants exactly as written in the statement
    /// (`c_u = 6/pi^2`, `(gamma*)^{2(N*-1)}`, `sqrt(1+T lambda_1)/sqrt(T)`).
    pub ln_statement_constant: Option<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct LowerBoundResult {
    pub bound_on_inverse_distance: LogValue,
    pub regime: Regime,
    pub parameters: BoundParameters,
}

impl LowerBoundResult {
    pub fn ln(&self) -> f64 {
        self.bound_on_inverse_distance.ln_f64()
    }
}

fn fl(x: f64) -> Float {
    Float::with_val(PREC, x)
}

fn lg(x: f64) -> Float {
    Float::with_val(PREC, x).ln_gamma()
}

fn ln(x: f64) -> Float {
    Float::with_val(PREC, x).ln()
}

fn check_bound_inputs(t: f64, lambda1: f64, m: usize) -> Result<()> {
    if !(t > 0.0) {
        return Err(Error::InvalidParameter(format!("horizon must be positive, got {t}")));
    }
    if !(lambda1 > 0.0) {
        return Err(Error::ZeroLambda);
    }
    if m == 0 {
        return Err(Error::InvalidParameter("index m starts at 1".into()));
    }
    Ok(())
}

/// `ln(6/pi^2) + ln sqrt(1 + 2 T lambda_1) - ln sqrt(2T)`.
fn prefactor(t: f64, lambda1: f64) -> Float {
    let pi = Float::with_val(PREC, Constant::Pi);
    ln(6.0) - Float::with_val(PREC, pi.ln() * 2u32) + Float::with_val(PREC, ln(1.0 + 2.0 * t * lambda1) - ln(2.0 * t)) / 2u32
}

fn finish(ln_c: Float, x: f64, regime: Regime, mut params: BoundParameters) -> LowerBoundResult {
    params.ln_constant = ln_c.to_f64();
    let total = ln_c + fl(1.0) / fl(x);
    LowerBoundResult { bound_on_inverse_distance: LogValue::from_ln(total, Sign::Positive), regime, parameters: params }
}

/// Bound under the uniform upper gap `sqrt(lambda_{n+1}) - sqrt(lambda_n) <= gamma_max`.
pub fn lower_bound_one_gap(t: f64, gamma_max: f64, lambda1: f64, m: usize) -> Result<LowerBoundResult> {
    check_bound_inputs(t, lambda1, m)?;
    if !(gamma_max > 0.0) {
        return Err(Error::InvalidParameter(format!("gamma_max must be positive, got {gamma_max}")));
    }
    let k = (2.0 * lambda1.sqrt() / gamma_max).floor() + m as f64 + 2.0;
    let mf = m as f64;
    let x = t * gamma_max * gamma_max;
    let ln_c = prefactor(t, lambda1) + lg(k) - lg(mf + k + 4.0) - lg(mf) + fl(x).ln() * (k + 2.0)
        - ln(1.0 + x) * (mf + k + 3.0);
    let params = BoundParameters { k_star: Some(k as i64), ..Default::default() };
    Ok(finish(ln_c, x, Regime::OneGap, params))
}

/// Bound using the asymptotic gap `gamma_max*` beyond `N*` (`p.n_star_lower`).
pub fn lower_bound_two_gap(s: &Spectrum, p: &GapProfile, t: f64, m: usize) -> Result<LowerBoundResult> {
    let lambda1 = s.lambda(1);
    check_bound_inputs(t, lambda1, m)?;
    let g = p.gamma_max;
    let gs = p.gamma_max_star;
    if !(g > 0.0 && gs > 0.0 && gs <= g) {
        return Err(Error::InvalidParameter(format!("need 0 < gamma_max* <= gamma_max, got {gs}, {g}")));
    }
    let ns = p.n_star_lower as f64;
    if ns < 1.0 {
        return Err(Error::InvalidParameter("N* starts at 1".into()));
    }
    let mf = m as f64;
    let a = (2.0 * lambda1.sqrt() / g).floor();
    let b = ((2.0 * lambda1.sqrt() + (ns + mf) * g) / gs).floor() + 1.0;
    let k = b + 1.0 - ns;
    let x = t * gs * gs;
    let ln_x = fl(x).ln();
    let ln_1x = ln(1.0 + x);
    let ratio = ln(g / gs);
    let pi = Float::with_val(PREC, Constant::Pi);
    let ln_cu = ln(6.0) - Float::with_val(PREC, pi.ln() * 2u32);
    let stmt_sqrt = Float::with_val(PREC, ln(1.0 + t * lambda1) - ln(t)) / 2u32;
    let pref = prefactor(t, lambda1);
    let mut params = BoundParameters { k_star: Some(a as i64), big_k_star: Some(k as i64), ..Default::default() };
    if mf <= ns {
        let d = ((g / gs) * (ns - mf)).floor() + 1.0;
        let kp = d + 1.0 - ns;
        let c_plus = Float::with_val(PREC, &ratio * (ns - 1.0)) + lg(ns + mf + a + 2.0) - lg(mf + a + 2.0) - lg(b + 1.0)
            - ln(2.0 * mf + a + 1.0);
        let c_minus = Float::with_val(PREC, &ratio * (ns - 1.0)) + lg(mf) + lg(ns - mf + 1.0) - lg(d + 1.0);
        let n0 = ns + k + kp + 3.0;
        let tail = -lg(n0 + 1.0) + Float::with_val(PREC, &ln_x * (k + kp + 2.0)) - Float::with_val(PREC, &ln_1x * n0);
        let core = Float::with_val(PREC, tail - &c_plus - &c_minus);
        let stmt = Float::with_val(PREC, &core + &ln_cu) + &stmt_sqrt + ln(gs) * (2.0 * (ns - 1.0));
        params.big_k_prime_star = Some(kp as i64);
        params.ln_statement_constant = Some(stmt.to_f64());
        Ok(finish(core + pref, x, Regime::TwoGapMLeNstar, params))
    } else {
        let c_plus = Float::with_val(PREC, &ratio * ns) + lg(ns + mf + a + 2.0) - lg(mf + a + 2.0) - lg(b + 1.0)
            - ln(mf - ns + b);
        let c_minus = Float::with_val(PREC, &ratio * ns) + lg(mf);
        let tail = -lg(mf + k + 4.0) + Float::with_val(PREC, &ln_x * (k + 2.0)) - Float::with_val(PREC, &ln_1x * (mf + k + 3.0));
        let core = Float::with_val(PREC, tail - &c_plus - &c_minus);
        let stmt = Float::with_val(PREC, &core + &ln_cu) + &stmt_sqrt;
        params.ln_statement_constant = Some(stmt.to_f64());
        Ok(finish(core + pref, x, Regime::TwoGapMGtNstar, params))
    }
}

/// `max_M 1/distance_upper_bound(M)` over `M` in `m_range` (clipped to the truncation).
pub fn best_lower_bound(
    s: &Spectrum,
    t: f64,
    m: usize,
    m_range: std::ops::RangeInclusive<usize>,
) -> Result<LowerBoundResult> {
    let lo = (*m_range.start()).max(m);
    let hi = (*m_range.end()).min(s.truncation_length().saturating_sub(1));
    if lo > hi {
        return Err(Error::InsufficientTruncation { have: s.truncation_length(), need: lo + 1 });
    }
    let all: Vec<(usize, LogValue)> = (lo..=hi)
        .into_par_iter()
        .map(|big_m| distance_upper_bound(s, t, m, big_m).map(|d| (big_m, d.recip())))
        .collect::<Result<_>>()?;
    let (best_m, best) = all
        .into_iter()
        .reduce(|a, b| if b.1.cmp_value(&a.1).is_gt() { b } else { a })
        .unwrap();
    let params = BoundParameters { m_used: Some(best_m), ln_constant: best.ln_f64(), ..Default::default() };
    Ok(LowerBoundResult { bound_on_inverse_distance: best, regime: Regime::BestMScan, parameters: params })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::spectra::gen_quadratic;

    fn close(a: f64, b: f64, rel: f64) -> bool {
        (a - b).abs() <= rel * b.abs()
    }

    #[test]
    fn coefficient_examples() {
        let g = guichal_coefficients(&[1.0, 2.0]).unwrap();
        assert_eq!(g.coefficients, Coefficients::Exact(vec![Rational::from(1), Rational::from(-1)]));
        let g = guichal_coefficients(&[1.0, 2.0, 3.0]).unwrap();
        let half = Rational::from((1, 2));
        assert_eq!(g.coefficients, Coefficients::Exact(vec![half.clone(), Rational::from(-1), half]));
        let g = guichal_coefficients(&[5.0]).unwrap();
        assert_eq!(g.order(), 0);
        assert_eq!(q_eval(&g, 0.0).unwrap(), 1.0);
        assert!(matches!(guichal_coefficients(&[1.0, 1.0]), Err(Error::DuplicateLambda { .. })));
    }

    #[test]
    fn q_examples() {
        let g = guichal_coefficients(&[1.0, 2.0]).unwrap();
        let v = q_eval(&g, 1.0).unwrap();
        assert!(close(v, (-1f64).exp() - (-2f64).exp(), 1e-15));
        assert!(v <= q_envelope(&g, 1.0));
        let g = guichal_coefficients(&[1.0, 2.0, 3.0]).unwrap();
        let v = q_eval(&g, 0.5).unwrap();
        assert!(close(v, 0.046950968759089, 1e-12));
        assert!(close(q_envelope(&g, 0.5), 0.075816, 1e-4));
        assert_eq!(q_eval(&g, 0.0).unwrap(), 0.0);
    }

    #[test]
    fn conditions_are_exact() {
        let g = guichal_coefficients(&[0.5, 1.25, 3.0, 7.75]).unwrap();
        let c = g.moment_conditions();
        assert!(c[..3].iter().all(|v| *v == 0));
        assert_eq!(c[3], 1);
    }

    #[test]
    fn moment_examples() {
        let mi = moment_integral(1, 1.0, 1.0).unwrap();
        let want = (0.25 - 1.25 * (-2f64).exp()).sqrt();
        assert!(close(mi.exact.to_f64(), want, 1e-14));
        assert!(close(mi.closed_bound.to_f64(), (2.0f64 / 5.0).sqrt(), 1e-14));
        let mi = moment_integral(0, 0.0, 3.0).unwrap();
        assert!(close(mi.exact.to_f64(), 3f64.sqrt(), 1e-14));
    }

    #[test]
    fn tail_examples() {
        let e = std::f64::consts::E;
        let c1 = c1_constant();
        assert!(close(c1, 1.298425607525639, 1e-12));
        let t = exp_tail(1, 1.0).unwrap();
        assert!(close(t.value.to_f64(), e - 1.0, 1e-14));
        assert!(close(t.lower.to_f64(), e / 2.0, 1e-14));
        assert!(close(t.upper.to_f64(), c1 * e / 2.0, 1e-14));
        let t = exp_tail(2, 1.0).unwrap();
        assert!(close(t.value.to_f64(), e - 2.0, 1e-14));
        assert!(close(t.lower.to_f64(), e / 8.0, 1e-14));
        assert!(exp_tail(4, 0.0).unwrap().value.is_zero());
    }

    #[test]
    fn distance_bound_examples() {
        let s = Spectrum::from_values(vec![1.0, 4.0]).unwrap();
        let d = distance_upper_bound(&s, 1.0, 1, 1).unwrap();
        assert!(close(d.to_f64(), 0.852925, 1e-5));
        let b = best_lower_bound(&s, 1.0, 1, 1..=1).unwrap();
        assert!(close(b.bound_on_inverse_distance.to_f64(), 1.17244, 1e-5));
        assert!(matches!(distance_upper_bound(&s, 1.0, 1, 2), Err(Error::InsufficientTruncation { .. })));
    }

    #[test]
    fn one_gap_example() {
        let r = lower_bound_one_gap(1.0, 1.0, 1.0, 1).unwrap();
        assert_eq!(r.parameters.k_star, Some(5));
        assert!(close(r.parameters.ln_constant.exp(), 9.617e-8, 1e-3));
        assert!(close(r.bound_on_inverse_distance.to_f64(), 2.614e-7, 1e-3));
    }

    #[test]
    fn two_gap_k_star() {
        let s = gen_quadratic(1.0, 0.0, 0.0, 10).unwrap();
        let p = GapProfile::new(1.0, 2.0, 1.0, 1.0, 3, 3).unwrap();
        let r = lower_bound_two_gap(&s, &p, 1.0, 1).unwrap();
        assert_eq!(r.parameters.big_k_star, Some(9));
        assert_eq!(r.regime, Regime::TwoGapMLeNstar);
    }

    #[test]
    fn two_gap_reduces_to_one_gap() {
        // With N* = 1 and equal gaps the m > N* formula is (m + k* - 1) times the one-gap one.
        let s = gen_quadratic(1.0, 0.0, 0.0, 10).unwrap();
        let p = GapProfile::new(1.0, 1.0, 1.0, 1.0, 1, 1).unwrap();
        let two = lower_bound_two_gap(&s, &p, 1.0, 2).unwrap();
        let one = lower_bound_one_gap(1.0, 1.0, 1.0, 2).unwrap();
        assert_eq!(two.regime, Regime::TwoGapMGtNstar);
        assert!(close(two.ln() - one.ln(), 7f64.ln(), 1e-12));
    }
}
