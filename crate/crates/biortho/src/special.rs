//! Special functions shared by the bound and construction modules.

use rug::ops::Pow;
use rug::{Float, Integer, Rational};

/// `ln n!` via log-Gamma.
pub fn ln_factorial(n: f64, prec: u32) -> Float {
    Float::with_val(prec, n + 1.0).ln_gamma()
}

pub fn ln_factorial_f64(n: f64) -> f64 {
    ln_factorial(n, 64).to_f64()
}

/// `S(a, x) = sum_{k>=0} x^k / (a (a+1) ... (a+k))`, so that the lower
/// incomplete gamma function is `x^a e^{-x} S(a, x)`.
pub fn gamma_series(a: &Float, x: &Float, prec: u32) -> Float {
    let wp = prec + 32;
    let mut term = Float::with_val(wp, 1) / Float::with_val(wp, a);
    let mut sum = term.clone();
    let mut k = 0u64;
    let tol = Float::with_val(wp, Float::i_exp(1, -(wp as i32)));
    loop {
        k += 1;
        let denom = Float::with_val(wp, a + k);
        term *= x;
        term /= &denom;
        sum += &term;
        let past_peak = denom > *x;
        if past_peak && Float::with_val(wp, &term / &sum) < tol {
            break;
        }
    }
    Float::with_val(prec, sum)
}

/// Even Bernoulli numbers `B_0, B_2, ..., B_{2j_max}`.
pub fn bernoulli_even(j_max: usize) -> Vec<Rational> {
    let m_max = 2 * j_max;
    let mut b: Vec<Rational> = Vec::with_capacity(m_max + 1);
    b.push(Rational::from(1));
    for m in 1..=m_max {
        if m > 1 && m % 2 == 1 {
            b.push(Rational::new());
            continue;
        }
        let mut s = Rational::new();
        let mut binom = Integer::from(1);
        for (k, bk) in b.iter().enumerate() {
            if *bk != 0 {
                s += Rational::from(&binom * bk.clone());
            }
            binom *= (m + 1 - k) as u32;
            binom /= (k + 1) as u32;
        }
        b.push(-s / Rational::from(m as u32 + 1));
    }
    (0..=j_max).map(|j| b[2 * j].clone()).collect()
}

fn euler_maclaurin_terms(prec: u32) -> usize {
    (prec as f64 / 5.3).ceil() as usize + 4
}

/// `a^s * zeta(s, a)` for `s = step, 2*step, ..., count*step`, integer `a >= 1`.
///
/// Direct summation up to a shifted base, then Euler-Maclaurin.
pub fn hurwitz_scaled_table(step: u32, count: usize, a: u64, prec: u32) -> Vec<Float> {
    let wp = prec + 32;
    let jm = euler_maclaurin_terms(wp);
    let bern = bernoulli_even(jm);
    let s_max = step as u64 * count as u64;
    let b = a.max(s_max + 2 * jm as u64 + 8);
    let af = Float::with_val(wp, a);
    let mut out = vec![Float::new(wp); count];
    for k in 0..(b - a) {
        let base = Float::with_val(wp, &af / Float::with_val(wp, a + k));
        let r = base.pow(step);
        let mut p = Float::with_val(wp, 1);
        for slot in out.iter_mut() {
            p *= &r;
            *slot += &p;
        }
    }
    let bf = Float::with_val(wp, b);
    let ratio = Float::with_val(wp, &af / &bf);
    let tol = Float::with_val(wp, Float::i_exp(1, -(wp as i32)));
    let mut fact = Float::with_val(wp, 1);
    let mut fact_table = Vec::with_capacity(jm + 1);
    fact_table.push(fact.clone());
    for j in 1..=jm {
        fact *= (2 * j - 1) as u32;
        fact *= (2 * j) as u32;
        fact_table.push(fact.clone());
    }
    for (idx, slot) in out.iter_mut().enumerate() {
        let s = step as u64 * (idx as u64 + 1);
        let mut bracket = Float::with_val(wp, &bf / (s - 1)) + 0.5f64;
        let mut rising = Float::with_val(wp, s);
        let mut bpow = bf.clone();
        for j in 1..=jm {
            let term = Float::with_val(wp, &bern[j] * &rising) / &fact_table[j] / &bpow;
            bracket += &term;
            if Float::with_val(wp, term.abs_ref()) < tol {
                break;
            }
            rising *= s + 2 * j as u64 - 1;
            rising *= s + 2 * j as u64;
            bpow *= &bf;
            bpow *= &bf;
        }
        let scale = Float::with_val(wp, (&ratio).pow(s as u32));
        *slot += scale * bracket;
        slot.set_prec(prec);
    }
    out
}

/// `sum_{k>=a} k^{-2}` at the given precision.
pub fn tail_inverse_squares(a: u64, prec: u32) -> Float {
    let scaled = hurwitz_scaled_table(2, 1, a, prec).remove(0);
    let af = Float::with_val(prec, a);
    scaled / af.square()
}

/// Coefficients of `ln cos u = -sum_{j>=1} c_j u^{2j}` for `j = 1..=count`.
pub fn logcos_coefficients(count: usize, prec: u32) -> Vec<Float> {
    let bern = bernoulli_even(count);
    let mut out = Vec::with_capacity(count);
    let mut fact = Float::with_val(prec, 1);
    for j in 1..=count {
        fact *= (2 * j - 1) as u32;
        fact *= (2 * j) as u32;
        let four_j = Float::with_val(prec, Float::i_exp(1, 2 * j as i32));
        let num = Float::with_val(prec, &four_j * (Float::with_val(prec, &four_j - 1u32))) * Float::with_val(prec, bern[j].clone().abs());
        out.push(num / &fact / (2 * j) as u32);
    }
    out
}

/// Lanczos-free `ln Gamma` in f64 via MPFR.
pub fn ln_gamma_f64(x: f64) -> f64 {
    Float::with_val(64, x).ln_gamma().to_f64()
}

/// Golden-section maximization of a unimodal function on `[lo, hi]`.
pub fn maximize_unimodal(f: impl Fn(f64) -> f64, mut lo: f64, mut hi: f64, tol: f64) -> (f64, f64) {
    let g = (5f64.sqrt() - 1.0) / 2.0;
    let mut x1 = hi - g * (hi - lo);
    let mut x2 = lo + g * (hi - lo);
    let mut f1 = f(x1);
    let mut f2 = f(x2);
    while hi - lo > tol {
        if f1 < f2 {
            lo = x1;
            x1 = x2;
            f1 = f2;
            x2 = lo + g * (hi - lo);
            f2 = f(x2);
        } else {
            hi = x2;
            x2 = x1;
            f2 = f1;
            x1 = hi - g * (hi - lo);
            f1 = f(x1);
        }
    }
    let x = 0.5 * (lo + hi);
    (x, f(x))
}

/// Gauss-Legendre nodes and weights on `[-1, 1]` at `prec` bits.
pub fn gauss_legendre(n: usize, prec: u32) -> (Vec<Float>, Vec<Float>) {
    let wp = prec + 32;
    let mut nodes = Vec::with_capacity(n);
    let mut weights = Vec::with_capacity(n);
    let legendre = |x: &Float| {
        let mut p0 = Float::with_val(wp, 1);
        let mut p1 = x.clone();
        for k in 2..=n {
            let p2 = (Float::with_val(wp, x * &p1) * (2 * k - 1) as u32 - Float::with_val(wp, &p0 * (k - 1) as u32)) / k as u32;
            p0 = p1;
            p1 = p2;
        }
        let dp = Float::with_val(wp, Float::with_val(wp, x * &p1) - &p0) * n as u32 / (Float::with_val(wp, x.square_ref()) - 1u32);
        (p1, dp)
    };
    for i in 1..=n {
        let guess = (std::f64::consts::PI * (i as f64 - 0.25) / (n as f64 + 0.5)).cos();
        let mut x = Float::with_val(wp, guess);
        let tol = Float::with_val(wp, Float::i_exp(1, -(wp as i32) + 8));
        for _ in 0..100 {
            let (p, dp) = legendre(&x);
            let step = Float::with_val(wp, &p / &dp);
            x -= &step;
            if Float::with_val(wp, step.abs_ref()) < tol {
                break;
            }
        }
        let (_, dp) = legendre(&x);
        let one_minus = Float::with_val(wp, 1u32 - Float::with_val(wp, x.square_ref()));
        let w = Float::with_val(wp, 2u32 / (one_minus * dp.square()));
        nodes.push(Float::with_val(prec, &x));
        weights.push(Float::with_val(prec, &w));
    }
    nodes.reverse();
    weights.reverse();
    (nodes, weights)
}

/// `k^s zeta(s, k)` in double precision, for `s > 1` and integer `k >= 1`.
pub fn scaled_hurwitz_f64(s: f64, k: u64) -> f64 {
    let kf = k as f64;
    let mut sum = 0.0;
    let mut i = 0u64;
    // Direct terms until the Euler-Maclaurin tail at base b is accurate.
    loop {
        let b = kf + i as f64;
        if b >= 2.0 * s + 20.0 || i > 4000 {
            break;
        }
        let t = (kf / b).powf(s);
        sum += t;
        if t < 1e-18 * sum {
            return sum;
        }
        i += 1;
    }
    let b = kf + i as f64;
    let r = (kf / b).powf(s);
    let mut bracket = b / (s - 1.0) + 0.5;
    let bern = [1.0 / 6.0, -1.0 / 30.0, 1.0 / 42.0, -1.0 / 30.0, 5.0 / 66.0, -691.0 / 2730.0];
    let mut rising = s;
    let mut fact = 2.0;
    let mut bpow = b;
    for (j, bj) in bern.iter().enumerate() {
        let j = j as f64 + 1.0;
        bracket += bj * rising / fact / bpow;
        rising *= (s + 2.0 * j - 1.0) * (s + 2.0 * j);
        fact *= (2.0 * j + 1.0) * (2.0 * j + 2.0);
        bpow *= b * b;
    }
    sum + r * bracket
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn bernoulli_small() {
        let b = bernoulli_even(4);
        assert_eq!(b[1], Rational::from((1, 6)));
        assert_eq!(b[2], Rational::from((-1, 30)));
        assert_eq!(b[3], Rational::from((1, 42)));
        assert_eq!(b[4], Rational::from((-1, 30)));
    }

    #[test]
    fn hurwitz_against_direct_sum() {
        // zeta(4, 3) = pi^4/90 - 1 - 1/16
        let t = hurwitz_scaled_table(4, 3, 3, 200);
        let pi4 = Float::with_val(200, rug::float::Constant::Pi).pow(4u32) / 90u32;
        let z4 = pi4 - 1u32 - Float::with_val(200, 1) / 16u32;
        let want = z4 * 81u32;
        let err = Float::with_val(200, &t[0] - &want).abs().to_f64();
        assert!(err < 1e-50, "{err}");
        // large s: a^s zeta(s,a) -> 1 + (a/(a+1))^s + ...
        let direct: f64 = (0..200).map(|k| (3.0 / (3.0 + k as f64)).powi(12)).sum();
        assert!((t[2].to_f64() - direct).abs() < 1e-14);
    }

    #[test]
    fn inverse_square_tail() {
        let pi2 = std::f64::consts::PI.powi(2) / 6.0;
        let t = tail_inverse_squares(1, 100).to_f64();
        assert!((t - pi2).abs() < 1e-15);
        let t5 = tail_inverse_squares(5, 100).to_f64();
        let direct = pi2 - (1..5).map(|k| 1.0 / (k * k) as f64).sum::<f64>();
        assert!((t5 - direct).abs() < 1e-15);
    }

    #[test]
    fn logcos_low_order() {
        let c = logcos_coefficients(3, 100);
        assert!((c[0].to_f64() - 0.5).abs() < 1e-18);
        assert!((c[1].to_f64() - 1.0 / 12.0).abs() < 1e-18);
        assert!((c[2].to_f64() - 1.0 / 45.0).abs() < 1e-18);
    }

    #[test]
    fn gamma_series_matches_closed_form() {
        // gamma(1, x) = 1 - e^{-x} = x e^{-x} S(1, x)
        let x = Float::with_val(128, 2.5);
        let s = gamma_series(&Float::with_val(128, 1), &x, 128);
        let v = Float::with_val(128, &x * Float::with_val(128, -&x).exp()) * s;
        assert!((v.to_f64() - (1.0 - (-2.5f64).exp())).abs() < 1e-15);
    }
    #[test]
    fn gauss_legendre_integrates_polynomials() {
        let (x, w) = gauss_legendre(10, 200);
        let s: Float = x.iter().zip(&w).map(|(x, w)| Float::with_val(200, x.square_ref()).square() * w).fold(Float::new(200), |a, b| a + b);
        let err = Float::with_val(200, s - Float::with_val(200, 2) / 5u32).abs().to_f64();
        assert!(err < 1e-55, "{err}");
        let total: f64 = w.iter().map(Float::to_f64).sum();
        assert!((total - 2.0).abs() < 1e-15);
    }

    #[test]
    fn scaled_hurwitz_double() {
        let exact = hurwitz_scaled_table(2, 3, 7, 128);
        for (j, e) in exact.iter().enumerate() {
            let s = 2.0 * (j + 1) as f64;
            let v = scaled_hurwitz_f64(s, 7);
            assert!((v / e.to_f64() - 1.0).abs() < 1e-14, "{s} {v} {}", e.to_f64());
        }
        let big = hurwitz_scaled_table(4, 1, 5000, 128)[0].to_f64();
        assert!((scaled_hurwitz_f64(4.0, 5000) / big - 1.0).abs() < 1e-14);
        let steep = hurwitz_scaled_table(60, 1, 3, 128)[0].to_f64();
        assert!((scaled_hurwitz_f64(60.0, 3) / steep - 1.0).abs() < 1e-14);
    }
}
