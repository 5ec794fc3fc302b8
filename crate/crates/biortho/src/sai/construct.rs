//! Norms and the explicit family `sigma_m^+(t) = phi_m(T/2 - t) e^{-lambda_m T}`, with
//! `phi_m(xi) = (1/pi) Re int_0^inf g_m(x) e^{-i xi x} dx` and
//! `g_m(x) = F_m(-x) prod_k cos(a_k x) e^{i x (T' - T)/2} / P(i lambda_m)`.

use rug::float::Constant;
use rug::Float;

use super::calibration::CalibrationConstants;
use super::cx::Cx;
use super::mollifier::{MollifierF64, MollifierHp, MollifierParams};
use super::weierstrass::{envelope_f64, ln_abs_real_f64, value_real_hp};
use crate::error::{Error, Result};
use crate::gram::{BiorthogonalFamily, Coefficients, Method};
use crate::precision::{digits_to_bits, LogValue, PrecisionContext, Sign};
use crate::special::{gauss_legendre, ln_gamma_f64};
use crate::spectra::{GapProfile, Spectrum};

const NORM_NODES: usize = 20;
const FAMILY_NODES: usize = 48;
const NORM_TAIL: f64 = 1e-12;
const MAX_PANELS: usize = 200_000;

/// Time samples of one member of the family.
#[derive(Debug, Clone)]
pub struct SaiSamples {
    pub m: usize,
    /// `t_i` on a uniform grid of `[0, T]`.
    pub times: Vec<f64>,
    /// `sigma_m^+(t_i)`.
    pub values: Vec<LogValue>,
    /// `||sigma_m^+||` by quadrature of the time samples.
    pub time_domain_norm: LogValue,
    /// `||sigma_m^+||` by Parseval in double precision.
    pub parseval_norm: LogValue,
    /// `max |phi(+-0.55 T)| / max |phi|`.
    pub support_ratio: f64,
    pub frequency_cutoff: f64,
    pub frequency_nodes: usize,
}

fn log_add(a: f64, b: f64) -> f64 {
    if a == f64::NEG_INFINITY {
        return b;
    }
    if b == f64::NEG_INFINITY {
        return a;
    }
    let (hi, lo) = if a > b { (a, b) } else { (b, a) };
    hi + (lo - hi).exp().ln_1p()
}

const BLOCK_RATIO: f64 = 1.125;

/// Log of a certified bound on `int_b^inf exp(lnenv(x)) dx` over geometric blocks,
/// where `block(lo, hi)` bounds the log-integrand on `[lo, hi]`. `None` if the
/// blocks have not started to decay within range.
fn tail_bound(block: impl Fn(f64, f64) -> f64, b: f64) -> Option<f64> {
    let mut total = f64::NEG_INFINITY;
    let mut lo = b.max(1.0);
    let mut prev = f64::INFINITY;
    for _ in 0..4000 {
        let hi = BLOCK_RATIO * lo;
        let term = block(lo, hi) + (hi - lo).ln();
        total = log_add(total, term);
        if term < prev && term < total - 50.0 {
            return Some(total);
        }
        prev = term;
        lo = hi;
        if !lo.is_finite() {
            break;
        }
    }
    None
}

struct Scan {
    ln_integral: f64,
    cutoff: f64,
    ln_p_m: f64,
}

fn check_inputs(s: &Spectrum, m: usize, t: f64) -> Result<()> {
    let n = s.truncation_length();
    if m == 0 || m > n {
        return Err(Error::InvalidParameter(format!("index {m} outside 1..={n}")));
    }
    if !(t > 0.0) {
        return Err(Error::InvalidParameter(format!("horizon must be positive, got {t}")));
    }
    Ok(())
}

fn gl_unit(n: usize) -> (Vec<f64>, Vec<f64>) {
    let (x, w) = gauss_legendre(n, 64);
    (x.iter().map(Float::to_f64).collect(), w.iter().map(Float::to_f64).collect())
}

/// `ln int_0^inf |g_m|^2` with a certified cutoff.
fn parseval_scan(s: &Spectrum, m: usize, t: f64, params: &MollifierParams, mol: &MollifierF64) -> Result<Scan> {
    let lams = s.values();
    let ln_p_m = mol.ln_imag(s.lambda(m));
    let width = 8.0 / t.max(params.t_prime);
    let (ux, uw) = gl_unit(NORM_NODES);
    let mut acc = f64::NEG_INFINITY;
    let block = |lo: f64, hi: f64| {
        let k_hi = envelope_f64(lams, m, hi);
        let r_lo = block_envelope(mol, lo, hi);
        2.0 * (k_hi + r_lo - ln_p_m)
    };
    for panel in 0..MAX_PANELS {
        let a = panel as f64 * width;
        for (x0, w0) in ux.iter().zip(&uw) {
            let x = a + width * (x0 + 1.0) / 2.0;
            let lf = ln_abs_real_f64(lams, m, x);
            let (lr, _) = mol.ln_abs_real(x);
            let v = 2.0 * (lf + lr - ln_p_m) + (w0 * width / 2.0).ln();
            acc = log_add(acc, v);
        }
        let b = a + width;
        if panel % 4 == 3 {
            if let Some(tail) = tail_bound(block, b) {
                if tail < acc + NORM_TAIL.ln() {
                    return Ok(Scan { ln_integral: acc, cutoff: b, ln_p_m });
                }
            }
        }
    }
    Err(Error::EnvelopeNotCertified(format!("no certified cutoff for m={m}, T={t} within {MAX_PANELS} panels")))
}

/// Bound on `ln |P(x)|` valid on all of `[lo, hi]`.
fn block_envelope(mol: &MollifierF64, lo: f64, hi: f64) -> f64 {
    let at_hi = mol.envelope_real(hi);
    // x^2 zeta(4, K0(x)) is bounded below by lo^2 zeta(4, K0(hi)).
    at_hi * (lo / hi) * (lo / hi)
}

fn mollifier_for(params: &MollifierParams, t: f64) -> MollifierF64 {
    let guess = 64.0 * (params.n_prime as f64).powi(2) / params.c_const.max(1e-300);
    MollifierF64::new(params, guess.min(1e7).max(1.0 / t))
}

/// `||sigma_m^+||_{L^2(0,T)}` through Parseval:
/// `||sigma||^2 = e^{-2 lambda_m T} / pi * int_0^inf |g_m(x)|^2 dx`.
pub fn sai_norm(
    s: &Spectrum,
    _p: &GapProfile,
    m: usize,
    t: f64,
    params: &MollifierParams,
    _ctx: &PrecisionContext,
) -> Result<LogValue> {
    check_inputs(s, m, t)?;
    let mol = mollifier_for(params, t);
    let scan = parseval_scan(s, m, t, params, &mol)?;
    Ok(norm_from_scan(&scan, s.lambda(m), t))
}

fn norm_from_scan(scan: &Scan, lambda_m: f64, t: f64) -> LogValue {
    let ln_sq = scan.ln_integral - 2.0 * lambda_m * t - std::f64::consts::PI.ln();
    LogValue::from_ln_f64(ln_sq / 2.0)
}

struct Nodes {
    x: Vec<Float>,
    w: Vec<Float>,
    /// `prod_k cos(a_k x_j) e^{i x_j (T' - T)/2}`.
    mol: Vec<Cx>,
    /// `e^{i x_j T/2}`.
    half: Vec<Cx>,
}

fn build_nodes(params: &MollifierParams, t: f64, cutoff: f64, width: f64, bits: u32) -> Nodes {
    let hp = MollifierHp::new(params, cutoff, bits);
    let (ux, uw) = gauss_legendre(FAMILY_NODES, bits + 32);
    let panels = (cutoff / width).ceil() as usize;
    let half_w = Float::with_val(bits, width) / 2u32;
    let shift = Float::with_val(bits, params.t_prime - t) / 2u32;
    let th = Float::with_val(bits, t) / 2u32;
    let mut nodes = Nodes { x: Vec::new(), w: Vec::new(), mol: Vec::new(), half: Vec::new() };
    for panel in 0..panels {
        let a = Float::with_val(bits, panel as f64 * width);
        for (x0, w0) in ux.iter().zip(&uw) {
            let x = Float::with_val(bits, x0 + 1u32) * &half_w + &a;
            let w = Float::with_val(bits, w0 * &half_w);
            let r = Float::with_val(bits, hp.cos_product(&x));
            let ph = Cx::cis(&Float::with_val(bits, &x * &shift));
            nodes.mol.push(ph.scale(&r));
            nodes.half.push(Cx::cis(&Float::with_val(bits, &x * &th)));
            nodes.x.push(x);
            nodes.w.push(w);
        }
    }
    nodes
}

struct Member {
    residuals: Vec<f64>,
    samples: SaiSamples,
}

#[allow(clippy::too_many_arguments)]
fn build_member(
    s: &Spectrum,
    m: usize,
    t: f64,
    params: &MollifierParams,
    nodes: &Nodes,
    n_window: usize,
    bits: u32,
    scan: &Scan,
) -> Member {
    let lams = s.values();
    let hp = MollifierHp::new(params, s.lambda(m), bits);
    let inv_p = Float::with_val(bits, -hp.ln_imag(s.lambda(m))).exp();
    // w_j g_m(x_j)
    let wg: Vec<Cx> = nodes
        .x
        .iter()
        .zip(&nodes.w)
        .zip(&nodes.mol)
        .map(|((x, w), mol)| {
            let f = value_real_hp(lams, m, x, bits);
            f.mul(mol).scale(&Float::with_val(bits, w * &inv_p))
        })
        .collect();
    let pi = Float::with_val(bits, Constant::Pi);
    let tf = Float::with_val(bits, t);
    let lm = Float::with_val(bits, s.lambda(m));

    // int sigma e^{lambda_n t} = e^{-lambda_m T} e^{lambda_n T/2} (1/pi) Re sum w g K_n,
    // K_n(x) = 2 sinh((lambda_n + i x) T/2) / (lambda_n + i x).
    let mut residuals = Vec::with_capacity(n_window);
    for n in 1..=n_window {
        let ln_ = Float::with_val(bits, s.lambda(n));
        let a = Float::with_val(bits, &ln_ * &tf) / 2u32;
        let ea = Float::with_val(bits, a.exp_ref());
        let ema = Float::with_val(bits, -a.clone()).exp();
        let sh = Float::with_val(bits, &ea - &ema) / 2u32;
        let ch = Float::with_val(bits, &ea + &ema) / 2u32;
        let ln2 = Float::with_val(bits, ln_.square_ref());
        let mut acc = Float::new(bits);
        for ((g, x), half) in wg.iter().zip(&nodes.x).zip(&nodes.half) {
            let sinh = Cx::new(Float::with_val(bits, &sh * &half.re), Float::with_val(bits, &ch * &half.im));
            let den = Float::with_val(bits, &ln2 + Float::with_val(bits, x.square_ref()));
            let inv = Cx::new(Float::with_val(bits, &ln_ / &den), -Float::with_val(bits, x / &den));
            let k = sinh.mul(&inv);
            acc += Float::with_val(bits, &g.re * &k.re) - Float::with_val(bits, &g.im * &k.im);
        }
        acc *= 2u32;
        let scale = Float::with_val(bits, Float::with_val(bits, &a - Float::with_val(bits, &lm * &tf)).exp_ref());
        let v = acc * scale / &pi;
        let target = if n == m { 1.0 } else { 0.0 };
        residuals.push(Float::with_val(bits, v - target).abs().to_f64());
    }

    // phi on a uniform xi grid; phi vanishes to all orders at +-T/2, so the
    // trapezoid rule converges spectrally.
    let big_l = ((t * scan.cutoff / std::f64::consts::PI).ceil() as usize + 16).max(64);
    let h = Float::with_val(bits, &tf / big_l as u32);
    let phi_at = |rot: &[Cx]| -> Float {
        let mut acc = Float::new(bits);
        for (g, r) in wg.iter().zip(rot) {
            acc += Float::with_val(bits, &g.re * &r.re) - Float::with_val(bits, &g.im * &r.im);
        }
        acc / &pi
    };
    // e^{-i xi x} at xi = -T/2 is conj(half) conj... = e^{i x T/2}
    let mut rot: Vec<Cx> = nodes.half.clone();
    let step: Vec<Cx> = nodes.x.iter().map(|x| Cx::cis(&-Float::with_val(bits, x * &h))).collect();
    let mut phi = Vec::with_capacity(big_l + 1);
    for i in 0..=big_l {
        if i > 0 {
            for (r, st) in rot.iter_mut().zip(&step) {
                r.mul_assign(st);
            }
        }
        phi.push(phi_at(&rot));
    }
    let mut sum = Float::new(bits);
    for (i, v) in phi.iter().enumerate() {
        let sq = Float::with_val(bits, v.square_ref());
        if i == 0 || i == big_l {
            sum += sq / 2u32;
        } else {
            sum += sq;
        }
    }
    sum *= &h;
    let ln_td = Float::with_val(bits, sum.ln_ref()) - Float::with_val(bits, &lm * &tf) * 2u32;
    let time_domain_norm = LogValue::from_ln(ln_td / 2u32, Sign::Positive);

    let peak = phi.iter().map(|v| v.to_f64().abs()).fold(0.0, f64::max);
    let outside = [0.55, -0.55]
        .iter()
        .map(|c| {
            let xi = Float::with_val(bits, c * t);
            let rot: Vec<Cx> = nodes.x.iter().map(|x| Cx::cis(&-Float::with_val(bits, x * &xi))).collect();
            phi_at(&rot).to_f64().abs()
        })
        .fold(0.0, f64::max);
    let support_ratio = if peak > 0.0 { outside / peak } else { f64::INFINITY };

    let decay = Float::with_val(bits, -Float::with_val(bits, &lm * &tf)).exp();
    let times: Vec<f64> = (0..=big_l).map(|i| t - i as f64 * t / big_l as f64).collect();
    let values: Vec<LogValue> = phi.iter().map(|v| LogValue::from_float(&Float::with_val(bits, v * &decay))).collect();
    let (times, values) = (times.into_iter().rev().collect(), values.into_iter().rev().collect());
    Member {
        residuals,
        samples: SaiSamples {
            m,
            times,
            values,
            time_domain_norm,
            parseval_norm: norm_from_scan(scan, s.lambda(m), t),
            support_ratio,
            frequency_cutoff: scan.cutoff,
            frequency_nodes: nodes.x.len(),
        },
    }
}

/// Cutoff beyond which `int |g_m K_n|` is certified below `tol` after scaling.
fn family_cutoff(s: &Spectrum, m: usize, t: f64, n_window: usize, mol: &MollifierF64, scan: &Scan, tol: f64) -> Result<f64> {
    let lams = s.values();
    let lm = s.lambda(m);
    let ln_kmax = (1..=n_window)
        .map(|n| {
            let a = s.lambda(n) * t / 2.0;
            // ln(2 cosh a) + a - lambda_m T, the largest scaled kernel factor.
            a + (-2.0 * a).exp().ln_1p() + a - lm * t
        })
        .fold(f64::NEG_INFINITY, f64::max);
    let block = |lo: f64, hi: f64| envelope_f64(lams, m, hi) + block_envelope(mol, lo, hi) - scan.ln_p_m + ln_kmax - lo.ln();
    let mut x = scan.cutoff;
    for _ in 0..64 {
        if let Some(tail) = tail_bound(block, x) {
            if tail < tol.ln() {
                return Ok(x);
            }
        }
        x *= 1.25;
    }
    Err(Error::EnvelopeNotCertified(format!("kernel tail for m={m} not certified")))
}

/// Bits needed so that rounding stays below `tol` in the scaled residuals.
fn family_bits(
    s: &Spectrum,
    m: usize,
    t: f64,
    n_window: usize,
    mol: &MollifierF64,
    scan: &Scan,
    cutoff: f64,
    tol: f64,
) -> u32 {
    let lams = s.values();
    let width = 1.0 / t.max(1e-12);
    let steps = (cutoff / width).ceil() as usize + 1;
    let mut ln_l1 = f64::NEG_INFINITY;
    for i in 0..steps {
        let x = (i as f64 + 0.5) * width;
        let v = ln_abs_real_f64(lams, m, x) + mol.ln_abs_real(x).0 - scan.ln_p_m + width.ln();
        ln_l1 = log_add(ln_l1, v);
    }
    let lm = s.lambda(m);
    let worst = (1..=n_window)
        .map(|n| {
            let a = s.lambda(n) * t / 2.0;
            ln_l1 + 2.0 * a + std::f64::consts::LN_2 - lm * t
        })
        .fold(f64::NEG_INFINITY, f64::max);
    // also resolve phi relative to its own size
    let phi_scale = scan.ln_integral / 2.0;
    let need = (worst - tol.ln()).max(ln_l1 - phi_scale + 30.0) / std::f64::consts::LN_2;
    need.max(0.0).ceil() as u32 + 64
}

/// The family `sigma_m^+` for `m` in `indices`, with residuals against
/// `e^{lambda_n t}` for `n = 1..=max(indices)`.
///
/// Precision is derived from the measured cancellation and raised along the
/// context ladder (with finer panels) until every residual meets
/// `ctx.residual_target`.
pub fn sai_family(
    s: &Spectrum,
    _p: &GapProfile,
    indices: &[usize],
    t: f64,
    params: &MollifierParams,
    ctx: &PrecisionContext,
) -> Result<BiorthogonalFamily> {
    if indices.is_empty() {
        return Err(Error::InvalidParameter("no indices requested".into()));
    }
    for &m in indices {
        check_inputs(s, m, t)?;
    }
    let n_window = *indices.iter().max().unwrap();
    let tol = ctx.residual_target;
    let mol = mollifier_for(params, t);
    let scans: Vec<Scan> = indices.iter().map(|&m| parseval_scan(s, m, t, params, &mol)).collect::<Result<_>>()?;
    let mut cutoff: f64 = 0.0;
    let mut bits = digits_to_bits(ctx.working_digits);
    for (&m, scan) in indices.iter().zip(&scans) {
        let c = family_cutoff(s, m, t, n_window, &mol, scan, tol * 1e-6)?;
        cutoff = cutoff.max(c);
    }
    for (&m, scan) in indices.iter().zip(&scans) {
        bits = bits.max(family_bits(s, m, t, n_window, &mol, scan, cutoff, tol * 1e-6));
    }
    let mut width = 30.0 / t.max(params.t_prime);
    let mut last = None;
    for attempt in 0..=ctx.max_escalations {
        if attempt > 0 {
            bits = bits * ctx.escalation_factor.max(2) / 2 + bits / 2;
            width /= 2.0;
        }
        let nodes = build_nodes(params, t, cutoff, width, bits);
        let members: Vec<Member> = indices
            .iter()
            .zip(&scans)
            .map(|(&m, scan)| build_member(s, m, t, params, &nodes, n_window, bits, scan))
            .collect();
        let worst = members.iter().flat_map(|mb| mb.residuals.iter().copied()).fold(0.0, f64::max);
        let family = BiorthogonalFamily {
            method: Method::Sai,
            horizon_t: t,
            indices: indices.to_vec(),
            norms: members.iter().map(|mb| mb.samples.parseval_norm.clone()).collect(),
            residuals: members.iter().map(|mb| mb.residuals.clone()).collect(),
            coefficients: Coefficients::Sai(members.into_iter().map(|mb| mb.samples).collect()),
            tolerance: tol,
            precision_used: (bits as f64 / std::f64::consts::LOG2_10).floor() as u32,
        };
        if worst <= tol {
            return Ok(family);
        }
        last = Some((family.precision_used, worst));
    }
    let (digits, achieved) = last.unwrap();
    Err(Error::EscalationExhausted { digits, achieved, target: tol })
}

/// `ln` of the bound on `||sigma_m^+||^2`:
/// `e^{-2 lambda_m T} e^{C/(T gamma*^2)} e^{C sqrt(lambda_m)/gamma*} B*`.
pub fn theoretical_b_star(
    p: &GapProfile,
    lambda_m: f64,
    lambda_nstar: f64,
    t: f64,
    cal: &CalibrationConstants,
) -> Result<LogValue> {
    if !(lambda_m > 0.0) {
        return Err(Error::ZeroLambda);
    }
    if !(t > 0.0) {
        return Err(Error::InvalidParameter(format!("horizon must be positive, got {t}")));
    }
    let g = p.gamma_min;
    let gs = p.gamma_min_star;
    let ms = p.m_star;
    let cu = cal.c_u_growth;
    let ln_fact = ln_gamma_f64(8.0 * ms + 1.0);
    let (first, rate) = if t <= 1.0 / (gs * gs) {
        let f = ln_fact - 4.0 * ms * (lambda_m * gs * gs * t * t).ln();
        let r = log_add(-1.5 * t.ln(), -(gs * gs * t * t).ln());
        (f, r)
    } else {
        let f = 8.0 * ms * gs.ln() + ln_fact - 4.0 * ms * lambda_m.ln();
        let r = log_add(2.0 * gs.ln(), 3.0 * gs.ln());
        (f, r)
    };
    let ln_b = cu.ln() + log_add(first, 0.0) + cu * ms + cu * lambda_nstar / (g * lambda_m.sqrt()) + rate;
    let c = cal.c_exponent;
    let total = -2.0 * lambda_m * t + c / (t * gs * gs) + c * lambda_m.sqrt() / gs + ln_b;
    Ok(LogValue::from_ln_f64(total))
}
