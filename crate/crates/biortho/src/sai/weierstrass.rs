//! `F_m(z) = prod_{k != m} (1 - ((i z - lambda_m)/(lambda_k - lambda_m))^2)`, vanishing at
//! `-i lambda_n` for `n != m` and equal to one at `-i lambda_m`.

use num_complex::Complex64;
use rug::Float;

use super::cx::Cx;
use crate::error::{Error, Result};
use crate::precision::{LogValue, PrecisionContext, Sign};
use crate::spectra::{GapProfile, Spectrum};

#[derive(Debug, Clone, PartialEq)]
pub struct WeierstrassValue {
    /// `|F_m(z)|` over the truncation.
    pub value: LogValue,
    pub phase: f64,
    /// Bound on `|ln F_m(z) - ln F_m^{trunc}(z)|` from factors beyond the truncation,
    /// assuming the asymptotic gap persists.
    pub tail_bound: f64,
}

/// `int_U^inf du / (u^2 - a^2)^2` for `U > a >= 0`.
fn tail_integral(u: f64, a: f64) -> f64 {
    let r = a / u;
    if r < 0.1 {
        let r2 = r * r;
        let mut pw = 1.0;
        let mut s = 0.0;
        for j in 0..30 {
            s += (j + 1) as f64 * pw / (2 * j + 3) as f64;
            pw *= r2;
        }
        s / (u * u * u)
    } else {
        u / (2.0 * a * a * (u * u - a * a)) + ((u - a) / (u + a)).ln() / (4.0 * a * a * a)
    }
}

/// Truncated product with an explicit bound on the missing factors.
pub fn log_weierstrass(
    s: &Spectrum,
    p: &GapProfile,
    m: usize,
    z: Complex64,
    ctx: &PrecisionContext,
) -> Result<WeierstrassValue> {
    let n = s.truncation_length();
    if m == 0 || m > n {
        return Err(Error::InvalidParameter(format!("index {m} outside 1..={n}")));
    }
    let wp = ctx.bits() + 32;
    let lm = Float::with_val(wp, s.lambda(m));
    // w = i z - lambda_m
    let w = Cx::new(Float::with_val(wp, -z.im) - &lm, Float::with_val(wp, z.re));
    let w2 = w.mul(&w);
    let mut ln_abs = Float::new(wp);
    let mut phase = Float::new(wp);
    for k in (1..=n).filter(|&k| k != m) {
        let d = Float::with_val(wp, s.lambda(k)) - &lm;
        let d2 = Float::with_val(wp, d.square_ref());
        let re = Float::with_val(wp, &d2 - &w2.re) / &d2;
        let im = -Float::with_val(wp, &w2.im / &d2);
        let mag2 = Float::with_val(wp, re.square_ref()) + Float::with_val(wp, im.square_ref());
        if mag2.is_zero() {
            return Ok(WeierstrassValue { value: LogValue::zero(wp), phase: 0.0, tail_bound: 0.0 });
        }
        ln_abs += mag2.ln() / 2u32;
        phase += im.atan2(&re);
    }
    let gap = if n >= p.n_star_upper { p.gamma_min_star } else { p.gamma_min };
    let a = s.lambda(m).sqrt();
    let u_n = s.lambda(n).sqrt();
    let w_abs2 = w.norm_sqr().to_f64();
    let tail_bound = if n == m || u_n <= a {
        f64::INFINITY
    } else {
        let d_next = (u_n + gap).powi(2) - a * a;
        let q = w_abs2 / (d_next * d_next);
        if q >= 0.5 {
            let need_u = (a * a + (2.0 * w_abs2).sqrt()).sqrt();
            let extra = ((need_u - u_n) / gap).ceil().max(1.0) as usize;
            return Err(Error::InsufficientTruncation { have: n, need: n + extra });
        }
        w_abs2 * tail_integral(u_n, a) / gap / (1.0 - q)
    };
    Ok(WeierstrassValue { value: LogValue::from_ln(ln_abs, Sign::Positive), phase: phase.to_f64(), tail_bound })
}

/// `ln |F_m(x)|` for real `x` in double precision (`|F_m(x)| = |F_m(-x)|`).
pub(crate) fn ln_abs_real_f64(lams: &[f64], m: usize, x: f64) -> f64 {
    let lm = lams[m - 1];
    let x2 = x * x;
    let im = 2.0 * lm * x;
    let mut acc = 0.0;
    for (k, &lk) in lams.iter().enumerate() {
        if k + 1 == m {
            continue;
        }
        let d = lk - lm;
        // (d^2 - lm^2 + x^2) - 2 i lm x, over d^2
        let re = lk * (lk - 2.0 * lm) + x2;
        acc += re.hypot(im).ln() - 2.0 * d.abs().ln();
    }
    acc
}

/// Upper bound `sum_k ln(1 + (x^2 + lambda_m^2)/(lambda_k - lambda_m)^2)` for `ln |F_m(x)|`.
pub(crate) fn envelope_f64(lams: &[f64], m: usize, x: f64) -> f64 {
    let lm = lams[m - 1];
    let w2 = x * x + lm * lm;
    lams.iter()
        .enumerate()
        .filter(|&(k, _)| k + 1 != m)
        .map(|(_, &lk)| (w2 / ((lk - lm) * (lk - lm))).ln_1p())
        .sum()
}

/// `F_m(-x)` for real `x` at `prec` bits.
pub(crate) fn value_real_hp(lams: &[f64], m: usize, x: &Float, prec: u32) -> Cx {
    let lm = Float::with_val(prec, lams[m - 1]);
    let xf = Float::with_val(prec, x);
    let x2 = Float::with_val(prec, xf.square_ref());
    let im_num = -Float::with_val(prec, &lm * &xf) * 2u32;
    let mut acc = Cx::real(Float::with_val(prec, 1));
    for (k, &lk) in lams.iter().enumerate() {
        if k + 1 == m {
            continue;
        }
        let lkf = Float::with_val(prec, lk);
        let d = Float::with_val(prec, &lkf - &lm);
        let d2 = Float::with_val(prec, d.square_ref());
        let re = Float::with_val(prec, &lkf - Float::with_val(prec, &lm * 2u32)) * &lkf + &x2;
        let f = Cx::new(re / &d2, Float::with_val(prec, &im_num / &d2));
        acc.mul_assign(&f);
    }
    acc
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::spectra::{analyze_gaps, gen_quadratic};

    #[test]
    fn interpolation_conditions() {
        let s = gen_quadratic(1.0, 0.0, 0.0, 12).unwrap();
        let p = analyze_gaps(&s, 1).unwrap();
        let ctx = PrecisionContext::default();
        for m in [1, 3, 7] {
            for n in 1..=12 {
                let v = log_weierstrass(&s, &p, m, Complex64::new(0.0, -s.lambda(n)), &ctx).unwrap();
                if n == m {
                    assert!(v.value.ln_f64().abs() < 1e-40);
                } else {
                    assert!(v.value.is_zero());
                }
            }
        }
    }

    #[test]
    fn value_at_origin() {
        let s = gen_quadratic(1.0, 0.0, 0.0, 10_000).unwrap();
        let p = analyze_gaps(&s, 1).unwrap();
        let v = log_weierstrass(&s, &p, 1, Complex64::new(0.0, 0.0), &PrecisionContext::default()).unwrap();
        assert!((v.value.to_f64() - 0.8678).abs() < 1e-4, "{}", v.value.to_f64());
        assert!(v.tail_bound < 1e-8);
    }

    #[test]
    fn tail_integral_forms_agree() {
        let u: f64 = 10.0;
        let a: f64 = 0.999;
        let closed = u / (2.0 * a * a * (u * u - a * a)) + ((u - a) / (u + a)).ln() / (4.0 * a * a * a);
        assert!((tail_integral(u, a) / closed - 1.0).abs() < 1e-9);
        let a = 1.001;
        let r = a / u;
        let series: f64 = (0..30).map(|j| (j + 1) as f64 * r.powi(2 * j) / (2 * j + 3) as f64).sum::<f64>() / u.powi(3);
        assert!((tail_integral(u, a) / series - 1.0).abs() < 1e-9);
    }

    #[test]
    fn fast_paths_agree() {
        let s = gen_quadratic(1.0, 0.0, 0.0, 30).unwrap();
        let p = analyze_gaps(&s, 1).unwrap();
        let ctx = PrecisionContext::default();
        for x in [0.0, 0.7, 12.0, 300.0] {
            let v = log_weierstrass(&s, &p, 4, Complex64::new(-x, 0.0), &ctx);
            let fast = ln_abs_real_f64(s.values(), 4, x);
            let hp = value_real_hp(s.values(), 4, &Float::with_val(200, x), 200).norm_sqr().ln().to_f64() / 2.0;
            assert!((fast - hp).abs() < 1e-10);
            if let Ok(v) = v {
                assert!((v.value.ln_f64() - hp).abs() < 1e-10);
            }
            assert!(fast <= envelope_f64(s.values(), 4, x) + 1e-12);
        }
    }
}
