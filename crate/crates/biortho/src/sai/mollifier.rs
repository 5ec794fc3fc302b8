//! The cosine mollifier `P(z) = e^{i z T'/2} prod_{k >= N'} cos(a_k z)`, `a_k = C/k^2`.
//!
//! Factors with `a_k |z| <= U_SPLIT` are summed in closed form through
//! `ln cos w = -sum_j c_j w^{2j}` and Hurwitz zeta values.

use num_complex::Complex64;
use rug::ops::Pow;
use rug::Float;

use super::calibration::CalibrationConstants;
use super::cx::Cx;
use crate::error::{Error, Result};
use crate::precision::{LogValue, PrecisionContext, Sign};
use crate::special::{hurwitz_scaled_table, logcos_coefficients, scaled_hurwitz_f64, tail_inverse_squares};

pub(crate) const U_SPLIT: f64 = 0.5;
const SERIES_F64: usize = 24;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MollifierParams {
    pub t_prime: f64,
    pub n_prime: usize,
    /// `C_{N',T'} = T' / (2 sum_{k >= N'} k^{-2})`.
    pub c_const: f64,
    pub theta3: f64,
    /// First index summed in closed form at `|z| = 1`; grows like `sqrt|z|`.
    pub truncation_k: usize,
}

impl MollifierParams {
    pub fn new(t_prime: f64, n_prime: usize, theta3: f64) -> Result<Self> {
        if !(t_prime > 0.0) || n_prime == 0 {
            return Err(Error::InvalidParameter(format!("need T' > 0 and N' >= 1, got {t_prime}, {n_prime}")));
        }
        let tail = tail_inverse_squares(n_prime as u64, 128).to_f64();
        let c_const = t_prime / (2.0 * tail);
        let mut p = MollifierParams { t_prime, n_prime, c_const, theta3, truncation_k: n_prime };
        p.truncation_k = p.split_index(1.0);
        Ok(p)
    }

    /// `max(N', ceil(sqrt(C r / U_SPLIT)))`.
    pub fn split_index(&self, r: f64) -> usize {
        let k = (self.c_const * r.abs() / U_SPLIT).sqrt().ceil();
        (k as usize).max(self.n_prime)
    }
}

/// `T' = min(T, 1/gamma*^2)` and the smallest admissible `N'`.
pub fn choose_params(t: f64, gamma_min_star: f64, cal: &CalibrationConstants) -> Result<MollifierParams> {
    if !(t > 0.0) || !(gamma_min_star > 0.0) {
        return Err(Error::InvalidParameter(format!("need T > 0 and gamma* > 0, got {t}, {gamma_min_star}")));
    }
    let g2 = gamma_min_star * gamma_min_star;
    let t_prime = t.min(1.0 / g2);
    let n_prime = (2.0 + cal.theta3 / (g2 * t_prime)).ceil() as usize;
    MollifierParams::new(t_prime, n_prime, cal.theta3)
}

/// Double-precision evaluator with per-`K` zeta tables.
pub(crate) struct MollifierF64 {
    p: MollifierParams,
    coef: Vec<f64>,
    /// `tables[K - N'][0] = K^2 zeta(2, K)`, `[j] = K^{4j} zeta(4j, K)`.
    tables: Vec<[f64; SERIES_F64 + 1]>,
}

fn scaled_row(k: usize) -> [f64; SERIES_F64 + 1] {
    let mut row = [0.0; SERIES_F64 + 1];
    row[0] = scaled_hurwitz_f64(2.0, k as u64);
    for (j, slot) in row.iter_mut().enumerate().skip(1) {
        *slot = scaled_hurwitz_f64(4.0 * j as f64, k as u64);
    }
    row
}

impl MollifierF64 {
    /// Tables cover arguments up to `r_max`; larger ones fall back to direct evaluation.
    pub fn new(p: &MollifierParams, r_max: f64) -> Self {
        let coef = logcos_coefficients(SERIES_F64, 64).iter().map(Float::to_f64).collect();
        let hi = p.split_index(r_max);
        let mut tables = vec![[0.0; SERIES_F64 + 1]; hi - p.n_prime + 1];
        *tables.last_mut().unwrap() = scaled_row(hi);
        // K^s zeta(s, K) = 1 + (K/(K+1))^s (K+1)^s zeta(s, K+1)
        for k in (p.n_prime..hi).rev() {
            let ratio = k as f64 / (k + 1) as f64;
            let r2 = ratio * ratio;
            let r4 = r2 * r2;
            let next = tables[k + 1 - p.n_prime];
            let row = &mut tables[k - p.n_prime];
            row[0] = 1.0 + r2 * next[0];
            let mut pw = 1.0;
            for j in 1..=SERIES_F64 {
                pw *= r4;
                row[j] = 1.0 + pw * next[j];
            }
        }
        MollifierF64 { p: *p, coef, tables }
    }


    fn row(&self, k: usize) -> [f64; SERIES_F64 + 1] {
        match self.tables.get(k - self.p.n_prime) {
            Some(r) => *r,
            None => scaled_row(k),
        }
    }

    /// `(ln |P(x)|, P(x) < 0)` for real `x`.
    pub fn ln_abs_real(&self, x: f64) -> (f64, bool) {
        let r = x.abs();
        let c = self.p.c_const;
        let k_split = self.p.split_index(r);
        let mut acc = 0.0;
        let mut negative = false;
        for k in self.p.n_prime..k_split {
            let kf = k as f64;
            let v = (c * r / (kf * kf)).cos();
            negative ^= v < 0.0;
            acc += v.abs().ln();
        }
        let kf = k_split as f64;
        let u = c * r / (kf * kf);
        let u2 = u * u;
        let row = self.row(k_split);
        let mut pw = 1.0;
        for j in 1..=SERIES_F64 {
            pw *= u2;
            acc -= self.coef[j - 1] * pw * row[j];
        }
        (acc, negative)
    }

    /// `ln P(i y)` for real `y`.
    pub fn ln_imag(&self, y: f64) -> f64 {
        let r = y.abs();
        let c = self.p.c_const;
        let k_split = self.p.split_index(r);
        let mut acc = (r - y) * self.p.t_prime / 2.0;
        for k in self.p.n_prime..k_split {
            let kf = k as f64;
            let u = c * r / (kf * kf);
            // ln cosh u - u
            acc += (-2.0 * u).exp().ln_1p() - std::f64::consts::LN_2;
        }
        let kf = k_split as f64;
        let u = c * r / (kf * kf);
        let u2 = u * u;
        let row = self.row(k_split);
        acc -= u * row[0];
        let mut pw = 1.0;
        let mut sign = 1.0;
        for j in 1..=SERIES_F64 {
            pw *= u2;
            acc += sign * self.coef[j - 1] * pw * row[j];
            sign = -sign;
        }
        acc
    }

    /// Upper bound for `ln |P(x)|`: `-(x^2/2) C^2 zeta(4, K0)` with `a_{K0} |x| <= pi/2`.
    pub fn envelope_real(&self, x: f64) -> f64 {
        let r = x.abs();
        let c = self.p.c_const;
        let k0 = ((2.0 * c * r / std::f64::consts::PI).sqrt().ceil() as usize).max(self.p.n_prime);
        let kf = k0 as f64;
        let zeta4 = self.row(k0)[1] / (kf * kf * kf * kf);
        -0.5 * r * r * c * c * zeta4
    }
}

fn series_len(prec: u32) -> usize {
    let ratio = (2.0 * U_SPLIT / std::f64::consts::PI).powi(2);
    (prec as f64 * std::f64::consts::LN_2 / -ratio.ln()).ceil() as usize + 4
}

/// `zeta(4j, k)` for `j = 1..=count`, unscaled.
fn zeta_row(k: usize, count: usize, prec: u32) -> Vec<Float> {
    let scaled = hurwitz_scaled_table(4, count, k as u64, prec);
    let inv4 = Float::with_val(prec, k).pow(4u32).recip();
    let mut pw = Float::with_val(prec, 1);
    scaled
        .into_iter()
        .map(|h| {
            pw *= &inv4;
            h * &pw
        })
        .collect()
}

/// Arbitrary-precision evaluator for real and imaginary arguments.
pub(crate) struct MollifierHp {
    p: MollifierParams,
    prec: u32,
    c: Float,
    coef: Vec<Float>,
    /// `zeta[K - N'][j - 1] = zeta(4j, K)`.
    zeta: Vec<Vec<Float>>,
}

impl MollifierHp {
    pub fn new(p: &MollifierParams, r_max: f64, prec: u32) -> Self {
        let wp = prec + 16;
        let count = series_len(wp);
        let coef = logcos_coefficients(count, wp);
        let c = Float::with_val(wp, tail_inverse_squares(p.n_prime as u64, wp + 32).recip() * p.t_prime / 2u32);
        let hi = p.split_index(r_max);
        let mut zeta = vec![Vec::new(); hi - p.n_prime + 1];
        *zeta.last_mut().unwrap() = zeta_row(hi, count, wp);
        for k in (p.n_prime..hi).rev() {
            let inv4 = Float::with_val(wp, k).pow(4u32).recip();
            let mut pw = Float::with_val(wp, 1);
            let next = &zeta[k + 1 - p.n_prime];
            let row: Vec<Float> = next
                .iter()
                .map(|z| {
                    pw *= &inv4;
                    Float::with_val(wp, z + &pw)
                })
                .collect();
            zeta[k - p.n_prime] = row;
        }
        MollifierHp { p: *p, prec: wp, c, coef, zeta }
    }


    fn zeta_at(&self, k: usize) -> std::borrow::Cow<'_, [Float]> {
        match self.zeta.get(k - self.p.n_prime) {
            Some(r) => std::borrow::Cow::Borrowed(r.as_slice()),
            None => std::borrow::Cow::Owned(zeta_row(k, self.coef.len(), self.prec)),
        }
    }

    /// `P(x) e^{-i x T'/2} = prod_k cos(a_k x)` for real `x`.
    pub fn cos_product(&self, x: &Float) -> Float {
        let wp = self.prec;
        let cr = Float::with_val(wp, &self.c * x).abs();
        let k_split = self.p.split_index(x.to_f64());
        let mut prod = Float::with_val(wp, 1);
        for k in self.p.n_prime..k_split {
            let u = Float::with_val(wp, &cr / Float::with_val(wp, k).square());
            prod *= u.cos();
        }
        let cr2 = Float::with_val(wp, cr.square_ref());
        let mut pw = Float::with_val(wp, 1);
        let mut tail = Float::new(wp);
        for (cj, z) in self.coef.iter().zip(self.zeta_at(k_split).iter()) {
            pw *= &cr2;
            tail -= Float::with_val(wp, cj * &pw) * z;
        }
        prod * tail.exp()
    }

    /// `ln P(i y)` for real `y`.
    pub fn ln_imag(&self, y: f64) -> Float {
        let wp = self.prec;
        let r = y.abs();
        let cr = Float::with_val(wp, &self.c * r);
        let k_split = self.p.split_index(r);
        let mut acc = Float::with_val(wp, (r - y) * self.p.t_prime) / 2u32;
        let ln2 = Float::with_val(wp, rug::float::Constant::Log2);
        for k in self.p.n_prime..k_split {
            let u = Float::with_val(wp, &cr / Float::with_val(wp, k).square());
            let e = Float::with_val(wp, -(u * 2u32)).exp();
            acc += e.ln_1p() - &ln2;
        }
        acc -= Float::with_val(wp, &cr * tail_inverse_squares(k_split as u64, wp));
        let cr2 = Float::with_val(wp, cr.square_ref());
        let mut pw = Float::with_val(wp, 1);
        for (j, (cj, z)) in self.coef.iter().zip(self.zeta_at(k_split).iter()).enumerate() {
            pw *= &cr2;
            let t = Float::with_val(wp, cj * &pw) * z;
            if j % 2 == 0 {
                acc += t;
            } else {
                acc -= t;
            }
        }
        acc
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct MollifierValue {
    /// `|P(z)|`.
    pub value: LogValue,
    /// `arg P(z)`, unwrapped sum of the factor arguments.
    pub phase: f64,
}

/// `|P(z)|` and `arg P(z)` at a complex point.
pub fn log_mollifier(p: &MollifierParams, z: Complex64, ctx: &PrecisionContext) -> Result<MollifierValue> {
    let wp = ctx.bits() + 32;
    let count = series_len(wp);
    let coef = logcos_coefficients(count, wp);
    let c = Float::with_val(wp, tail_inverse_squares(p.n_prime as u64, wp + 32).recip() * p.t_prime / 2u32);
    let x = Float::with_val(wp, z.re);
    let y = Float::with_val(wp, z.im);
    let k_split = p.split_index(z.norm());
    let tp = Float::with_val(wp, p.t_prime);
    let mut ln_abs = -Float::with_val(wp, &y * &tp) / 2u32;
    let mut phase = Float::with_val(wp, &x * &tp) / 2u32;
    for k in p.n_prime..k_split {
        let a = Float::with_val(wp, &c / Float::with_val(wp, k).square());
        let ax = Float::with_val(wp, &a * &x);
        let ay = Float::with_val(wp, &a * &y);
        let (s, co) = ax.sin_cos(Float::new(wp));
        let sh = Float::with_val(wp, ay.sinh_ref());
        let ch = Float::with_val(wp, ay.cosh_ref());
        let re = Float::with_val(wp, &co * &ch);
        let im = -Float::with_val(wp, &s * &sh);
        let mag2 = Float::with_val(wp, co.square_ref()) + Float::with_val(wp, sh.square_ref());
        if mag2.is_zero() {
            return Ok(MollifierValue { value: LogValue::zero(wp), phase: 0.0 });
        }
        ln_abs += mag2.ln() / 2u32;
        phase += im.atan2(&re);
    }
    // tail: -sum_j c_j (C z)^{2j} zeta(4j, K)
    let zeta = zeta_row(k_split, count, wp);
    let cz = Cx::new(Float::with_val(wp, &c * &x), Float::with_val(wp, &c * &y));
    let cz2 = cz.mul(&cz);
    let mut pw = Cx::real(Float::with_val(wp, 1));
    let mut tail = Cx::real(Float::new(wp));
    for (cj, zj) in coef.iter().zip(&zeta) {
        pw.mul_assign(&cz2);
        let k = Float::with_val(wp, cj * zj);
        tail.add_assign(&pw.scale(&-k));
    }
    ln_abs += &tail.re;
    phase += &tail.im;
    Ok(MollifierValue { value: LogValue::from_ln(ln_abs, Sign::Positive), phase: phase.to_f64() })
}
