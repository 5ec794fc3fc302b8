//! Gram-matrix oracle: exact distances `d_{T,m}` and the minimal biorthogonal family.

use rug::Float;

use crate::error::{Error, Result};
use crate::precision::{digits_to_bits, LogValue, PrecisionContext, Sign};
use crate::sai::SaiSamples;
use crate::spectra::Spectrum;

const CHECK_BITS: u32 = 64;

#[derive(Debug, Clone)]
pub struct GramMatrix {
    dim: usize,
    entries: Vec<Float>,
}

impl GramMatrix {
    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn get(&self, i: usize, j: usize) -> &Float {
        &self.entries[i * self.dim + j]
    }

    pub fn to_f64(&self) -> Vec<Vec<f64>> {
        (0..self.dim).map(|i| (0..self.dim).map(|j| self.get(i, j).to_f64()).collect()).collect()
    }
}

/// `int_0^T e^{-(a+b) t} dt`.
fn gram_entry(a: f64, b: f64, t: &Float, prec: u32) -> Float {
    let s = Float::with_val(prec, a) + b;
    if s.is_zero() {
        return Float::with_val(prec, t);
    }
    let e = Float::with_val(prec, -(Float::with_val(prec, &s * t))).exp_m1();
    -e / s
}

/// Entries in the order given by `order` (0-based indices into the spectrum).
fn gram_permuted(s: &Spectrum, t: f64, order: &[usize], prec: u32) -> Vec<Float> {
    let tf = Float::with_val(prec, t);
    let n = order.len();
    let v = s.values();
    let mut out = vec![Float::new(prec); n * n];
    for i in 0..n {
        for j in i..n {
            let e = gram_entry(v[order[i]], v[order[j]], &tf, prec);
            out[j * n + i] = e.clone();
            out[i * n + j] = e;
        }
    }
    out
}

pub fn gram_matrix(s: &Spectrum, t: f64, prec: u32) -> GramMatrix {
    let order: Vec<usize> = (0..s.truncation_length()).collect();
    GramMatrix { dim: order.len(), entries: gram_permuted(s, t, &order, prec) }
}

/// In-place lower Cholesky factor (row-major); `Err(k)` when pivot `k` is not positive.
fn cholesky(a: &[Float], n: usize, prec: u32) -> std::result::Result<Vec<Float>, usize> {
    let mut l = vec![Float::new(prec); n * n];
    for j in 0..n {
        let mut diag = Float::with_val(prec, &a[j * n + j]);
        for k in 0..j {
            diag -= Float::with_val(prec, l[j * n + k].square_ref());
        }
        if !(diag > 0) {
            return Err(j);
        }
        let ljj = diag.sqrt();
        for i in (j + 1)..n {
            let mut acc = Float::with_val(prec, &a[i * n + j]);
            for k in 0..j {
                acc -= Float::with_val(prec, &l[i * n + k] * &l[j * n + k]);
            }
            l[i * n + j] = acc / &ljj;
        }
        l[j * n + j] = ljj;
    }
    Ok(l)
}

/// Solve `L^T x = b` for lower-triangular `L` restricted to the leading `k` rows.
fn back_substitute(l: &[Float], n: usize, k: usize, b: &[Float], prec: u32) -> Vec<Float> {
    let mut x = vec![Float::new(prec); k];
    for i in (0..k).rev() {
        let mut acc = Float::with_val(prec, &b[i]);
        for j in (i + 1)..k {
            acc -= Float::with_val(prec, &l[j * n + i] * &x[j]);
        }
        x[i] = acc / &l[i * n + i];
    }
    x
}

#[derive(Debug, Clone, PartialEq)]
pub struct DistanceResult {
    pub d: LogValue,
    pub m: usize,
    /// Decimal digits of the accepted attempt.
    pub precision_used: u32,
    /// Relative disagreement between the factorization's `d^2` and the squared
    /// norm of the computed approximant evaluated with extra precision.
    pub residual: f64,
}

struct Attempt {
    d2: Float,
    residual: f64,
}

fn distance_attempt(s: &Spectrum, t: f64, m: usize, digits: u32) -> std::result::Result<Attempt, usize> {
    let n = s.truncation_length();
    let bits = digits_to_bits(digits);
    let mut order: Vec<usize> = (0..n).filter(|&k| k != m - 1).collect();
    order.push(m - 1);
    let g = gram_permuted(s, t, &order, bits);
    let l = cholesky(&g, n, bits)?;
    let lnn = &l[(n - 1) * n + (n - 1)];
    let d2_chol = Float::with_val(bits, lnn.square_ref());
    if n == 1 {
        return Ok(Attempt { d2: d2_chol, residual: 0.0 });
    }
    // Projection coefficients y with G_{-m} y = g_m: y = L11^{-T} l21.
    let l21: Vec<Float> = (0..n - 1).map(|k| l[(n - 1) * n + k].clone()).collect();
    let y = back_substitute(&l, n, n - 1, &l21, bits);
    // ||e_m - sum y_k e_k||^2 with a freshly built, more precise Gram matrix.
    let hb = bits + CHECK_BITS;
    let gh = gram_permuted(s, t, &order, hb);
    let mut q = Float::with_val(hb, &gh[(n - 1) * n + (n - 1)]);
    for i in 0..n - 1 {
        let mut row = Float::with_val(hb, &gh[i * n + (n - 1)]) * -2i32;
        for j in 0..n - 1 {
            row += Float::with_val(hb, &gh[i * n + j] * &y[j]);
        }
        q += Float::with_val(hb, &row * &y[i]);
    }
    if !(q > 0) {
        return Err(n - 1);
    }
    let diff = Float::with_val(hb, &q - &d2_chol).abs() / &q;
    Ok(Attempt { d2: Float::with_val(bits, &q), residual: diff.to_f64() })
}

/// `d_{T,m}`: distance from `e^{-lambda_m t}` to the span of the other exponentials.
///
/// Runs up the context's precision ladder until the residual meets the target.
pub fn distance(s: &Spectrum, t: f64, m: usize, ctx: &PrecisionContext) -> Result<DistanceResult> {
    let n = s.truncation_length();
    if m == 0 || m > n {
        return Err(Error::InvalidParameter(format!("index {m} outside 1..={n}")));
    }
    if !(t > 0.0) {
        return Err(Error::InvalidParameter(format!("horizon must be positive, got {t}")));
    }
    let mut last = None;
    for digits in ctx.ladder(ctx.working_digits) {
        match distance_attempt(s, t, m, digits) {
            Ok(a) => {
                let ok = a.residual <= ctx.residual_target;
                let d = LogValue::from_float(&a.d2).sqrt();
                let res = DistanceResult { d, m, precision_used: digits, residual: a.residual };
                if ok {
                    return Ok(res);
                }
                last = Some(res);
            }
            Err(_) => last = None,
        }
    }
    let top = *ctx.ladder(ctx.working_digits).last().unwrap();
    match last {
        Some(r) => Err(Error::EscalationExhausted { digits: r.precision_used, achieved: r.residual, target: ctx.residual_target }),
        None => Err(Error::NotPositiveDefinite { pivot: n, digits: top }),
    }
}

/// Distances for the listed indices.
pub fn distances(s: &Spectrum, t: f64, ms: &[usize], ctx: &PrecisionContext) -> Result<Vec<DistanceResult>> {
    ms.iter().map(|&m| distance(s, t, m, ctx)).collect()
}

#[derive(Debug, Clone, PartialEq)]
pub struct ConvergedDistance {
    pub result: DistanceResult,
    pub truncation: usize,
    pub converged: bool,
    pub history: Vec<(usize, f64)>,
}

/// Distances on growing prefixes of `s` until the relative change drops below `tol`.
///
/// Appending eigenvalues can only shrink `d`, so the last value is the smallest
/// computed and `1/d` is a valid lower estimate of the infinite-family value.
pub fn distance_converged(
    s: &Spectrum,
    t: f64,
    m: usize,
    ctx: &PrecisionContext,
    start: usize,
    tol: f64,
) -> Result<ConvergedDistance> {
    let full = s.truncation_length();
    let mut n = start.max(m + 1).min(full);
    let mut history = Vec::new();
    let mut prev: Option<f64> = None;
    loop {
        let r = distance(&s.truncate(n)?, t, m, ctx)?;
        let ln_d = r.d.ln_f64();
        history.push((n, ln_d));
        let converged = prev.map_or(false, |p| ((ln_d - p).exp() - 1.0).abs() < tol);
        if converged || n == full {
            return Ok(ConvergedDistance { result: r, truncation: n, converged, history });
        }
        prev = Some(ln_d);
        n = (n * 2).min(full);
    }
}

/// `e^{-lambda_m T} / d_{T,m}`, the least norm of a family biorthogonal to `e^{lambda_n t}`.
pub fn minimal_norm_growing(s: &Spectrum, t: f64, m: usize, ctx: &PrecisionContext) -> Result<LogValue> {
    let r = distance(s, t, m, ctx)?;
    let shift = Float::with_val(r.d.prec(), -s.lambda(m) * t);
    Ok(r.d.recip().scale_exp(&shift))
}

/// `lim_{T -> inf} d_{T,m} = (2 lambda_m)^{-1/2} prod_{k != m} |lambda_m - lambda_k| / (lambda_m + lambda_k)`.
pub fn muntz_infinite_distance(s: &Spectrum, m: usize) -> Result<LogValue> {
    if s.lambda(1) <= 0.0 {
        return Err(Error::ZeroLambda);
    }
    let n = s.truncation_length();
    if m == 0 || m > n {
        return Err(Error::InvalidParameter(format!("index {m} outside 1..={n}")));
    }
    let prec = 128;
    let lm = Float::with_val(prec, s.lambda(m));
    let mut acc = -Float::with_val(prec, Float::with_val(prec, &lm * 2u32).ln()) / 2u32;
    for k in 1..=n {
        if k == m {
            continue;
        }
        let lk = Float::with_val(prec, s.lambda(k));
        let num = Float::with_val(prec, &lm - &lk).abs().ln();
        let den = Float::with_val(prec, &lm + &lk).ln();
        acc += num - den;
    }
    Ok(LogValue::from_ln(acc, Sign::Positive))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Method {
    Minimal,
    Sai,
}

#[derive(Debug, Clone)]
pub enum Coefficients {
    /// Column `m` of `G^{-1}`: `sigma_m^-(t) = sum_k c_k e^{-lambda_k t}`.
    Minimal(Vec<Vec<Float>>),
    Sai(Vec<SaiSamples>),
}

#[derive(Debug, Clone)]
pub struct BiorthogonalFamily {
    pub method: Method,
    pub horizon_t: f64,
    /// 1-based indices `m` of the members, in the order of `norms`.
    pub indices: Vec<usize>,
    pub norms: Vec<LogValue>,
    pub coefficients: Coefficients,
    /// `residuals[i][n-1]` for member `indices[i]` against exponential `n`.
    pub residuals: Vec<Vec<f64>>,
    pub tolerance: f64,
    pub precision_used: u32,
}

impl BiorthogonalFamily {
    pub fn max_residual(&self) -> f64 {
        self.residuals.iter().flatten().fold(0.0, |a: f64, &b| a.max(b))
    }
}

fn minimal_attempt(s: &Spectrum, t: f64, digits: u32) -> std::result::Result<(Vec<Vec<Float>>, Vec<Vec<f64>>), usize> {
    let n = s.truncation_length();
    let bits = digits_to_bits(digits);
    let order: Vec<usize> = (0..n).collect();
    let g = gram_permuted(s, t, &order, bits);
    let l = cholesky(&g, n, bits)?;
    let mut cols = Vec::with_capacity(n);
    for m in 0..n {
        // Forward solve L z = e_m, then L^T x = z.
        let mut z = vec![Float::new(bits); n];
        for i in m..n {
            let mut acc = Float::with_val(bits, if i == m { 1 } else { 0 });
            for k in m..i {
                acc -= Float::with_val(bits, &l[i * n + k] * &z[k]);
            }
            z[i] = acc / &l[i * n + i];
        }
        cols.push(back_substitute(&l, n, n, &z, bits));
    }
    let hb = bits + CHECK_BITS;
    let gh = gram_permuted(s, t, &order, hb);
    let mut res = vec![vec![0.0; n]; n];
    for (m, col) in cols.iter().enumerate() {
        for i in 0..n {
            let mut acc = Float::with_val(hb, if i == m { -1 } else { 0 });
            for k in 0..n {
                acc += Float::with_val(hb, &gh[i * n + k] * &col[k]);
            }
            res[m][i] = acc.abs().to_f64();
        }
    }
    Ok((cols, res))
}

/// The minimal-norm family biorthogonal to `e^{-lambda_n t}`, from the full inverse Gram matrix.
pub fn minimal_family(s: &Spectrum, t: f64, ctx: &PrecisionContext) -> Result<BiorthogonalFamily> {
    if !(t > 0.0) {
        return Err(Error::InvalidParameter(format!("horizon must be positive, got {t}")));
    }
    let n = s.truncation_length();
    let mut achieved = None;
    for digits in ctx.ladder(ctx.working_digits) {
        let Ok((cols, res)) = minimal_attempt(s, t, digits) else { continue };
        let worst = res.iter().flatten().fold(0.0f64, |a, &b| a.max(b));
        if worst <= ctx.residual_target {
            let norms = (0..n).map(|m| LogValue::from_float(&cols[m][m]).sqrt()).collect();
            return Ok(BiorthogonalFamily {
                method: Method::Minimal,
                horizon_t: t,
                indices: (1..=n).collect(),
                norms,
                coefficients: Coefficients::Minimal(cols),
                residuals: res,
                tolerance: ctx.residual_target,
                precision_used: digits,
            });
        }
        achieved = Some((digits, worst));
    }
    match achieved {
        Some((digits, worst)) => Err(Error::EscalationExhausted { digits, achieved: worst, target: ctx.residual_target }),
        None => Err(Error::NotPositiveDefinite { pivot: n, digits: *ctx.ladder(ctx.working_digits).last().unwrap() }),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::spectra::gen_quadratic;

    fn ctx() -> PrecisionContext {
        PrecisionContext::new(50, 1e-30, 4, 2).unwrap()
    }

    #[test]
    fn two_by_two_matrix() {
        let s = Spectrum::from_values(vec![1.0, 2.0]).unwrap();
        let g = gram_matrix(&s, 1.0, 200).to_f64();
        assert!((g[0][0] - 0.432332358381693654).abs() < 1e-15);
        assert!((g[0][1] - 0.316737643877379).abs() < 1e-14);
        assert!((g[1][1] - 0.245421090277816).abs() < 1e-14);
        let z = Spectrum::from_values(vec![0.0]).unwrap();
        assert_eq!(gram_matrix(&z, 3.5, 100).to_f64()[0][0], 3.5);
    }

    #[test]
    fn single_exponential_distance() {
        let s = Spectrum::from_values(vec![1.0]).unwrap();
        for t in [0.3, 1.0, 4.0] {
            let d = distance(&s, t, 1, &ctx()).unwrap().d.to_f64();
            assert!((d - ((1.0 - (-2.0 * t).exp()) / 2.0).sqrt()).abs() < 1e-15);
        }
    }

    #[test]
    fn distance_monotone_in_t_and_truncation() {
        let s = gen_quadratic(1.0, 0.0, 0.0, 8).unwrap();
        let c = ctx();
        let a = distance(&s, 0.5, 2, &c).unwrap().d.ln_f64();
        let b = distance(&s, 1.0, 2, &c).unwrap().d.ln_f64();
        assert!(a < b);
        let short = distance(&s.truncate(5).unwrap(), 0.5, 2, &c).unwrap().d.ln_f64();
        assert!(a <= short);
    }

    #[test]
    fn muntz_examples() {
        let s = Spectrum::from_values(vec![1.0, 2.0, 3.0]).unwrap();
        assert!((muntz_infinite_distance(&s, 2).unwrap().to_f64() - 1.0 / 30.0).abs() < 1e-15);
        let one = Spectrum::from_values(vec![1.0]).unwrap();
        assert!((muntz_infinite_distance(&one, 1).unwrap().to_f64() - 0.5f64.sqrt()).abs() < 1e-15);
        let zero = Spectrum::from_values(vec![0.0, 1.0]).unwrap();
        assert!(muntz_infinite_distance(&zero, 1).is_err());
    }

    #[test]
    fn minimal_family_small() {
        let s = Spectrum::from_values(vec![1.0, 2.0]).unwrap();
        let f = minimal_family(&s, 1.0, &ctx()).unwrap();
        assert!((f.norms[0].to_f64() - 1.0 / 0.153470).abs() < 1e-3);
        assert!(f.max_residual() <= 1e-30);
        let one = Spectrum::from_values(vec![2.0]).unwrap();
        let f = minimal_family(&one, 1.0, &ctx()).unwrap();
        let Coefficients::Minimal(cols) = &f.coefficients else { panic!() };
        let norm2 = (1.0 - (-4.0f64).exp()) / 4.0;
        assert!((cols[0][0].to_f64() - 1.0 / norm2).abs() < 1e-14);
    }
}
