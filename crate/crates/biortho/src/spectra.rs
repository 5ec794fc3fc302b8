//! Eigenvalue sequences, their gap parameters, and the spectrum file format.

use std::fmt::Write as _;
use std::path::Path;

use rug::Float;

use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq)]
pub enum Generator {
    Quadratic { r: f64, b: f64, c: f64 },
    /// `scale * j_{nu,n}^2`; `alpha` is `None` when the order was given directly.
    BesselLike { alpha: Option<f64>, nu: f64, scale: f64 },
    File { path: String },
    Explicit,
}

impl Generator {
    /// Key/value pairs in the config's `[spectrum]` vocabulary.
    pub fn to_pairs(&self, n: usize) -> Vec<(String, String)> {
        let mut out = Vec::new();
        let mut put = |k: &str, v: String| out.push((k.to_string(), v));
        match self {
            Generator::Quadratic { r, b, c } => {
                put("kind", "quadratic".into());
                put("r", r.to_string());
                put("b", b.to_string());
                put("c", c.to_string());
            }
            Generator::BesselLike { alpha, nu, scale } => {
                put("kind", "bessel".into());
                match alpha {
                    Some(a) => put("alpha", a.to_string()),
                    None => put("nu", nu.to_string()),
                }
                put("scale", scale.to_string());
            }
            Generator::File { path } => {
                put("kind", "file".into());
                put("path", path.clone());
            }
            Generator::Explicit => put("kind", "explicit".into()),
        }
        put("n", n.to_string());
        out
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Spectrum {
    values: Vec<f64>,
    generator: Generator,
}

impl Spectrum {
    pub fn new(values: Vec<f64>, generator: Generator) -> Result<Self> {
        if values.is_empty() {
            return Err(Error::TooShort { needed: 1, got: 0 });
        }
        for (i, v) in values.iter().enumerate() {
            if !v.is_finite() || *v < 0.0 || (i > 0 && *v <= values[i - 1]) {
                return Err(Error::NotMonotone { index: i + 1 });
            }
        }
        Ok(Spectrum { values, generator })
    }

    pub fn from_values(values: Vec<f64>) -> Result<Self> {
        Spectrum::new(values, Generator::Explicit)
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn generator(&self) -> &Generator {
        &self.generator
    }

    pub fn truncation_length(&self) -> usize {
        self.values.len()
    }

    /// `lambda_n`, 1-based.
    pub fn lambda(&self, n: usize) -> f64 {
        self.values[n - 1]
    }

    /// First `n` eigenvalues.
    pub fn truncate(&self, n: usize) -> Result<Spectrum> {
        if n == 0 || n > self.values.len() {
            return Err(Error::InsufficientTruncation { have: self.values.len(), need: n });
        }
        Ok(Spectrum { values: self.values[..n].to_vec(), generator: self.generator.clone() })
    }

    /// `lambda -> s^2 lambda`.
    pub fn scaled(&self, s: f64) -> Result<Spectrum> {
        Spectrum::new(self.values.iter().map(|v| v * s * s).collect(), Generator::Explicit)
    }

    pub fn parse(text: &str, path: Option<&str>) -> Result<Spectrum> {
        let mut values = Vec::new();
        for (lineno, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let v: f64 = line
                .parse()
                .map_err(|_| Error::Config(format!("line {}: not a decimal literal: {line:?}", lineno + 1)))?;
            values.push(v);
        }
        let generator = match path {
            Some(p) => Generator::File { path: p.to_string() },
            None => Generator::Explicit,
        };
        Spectrum::new(values, generator)
    }

    pub fn read_file(path: impl AsRef<Path>) -> Result<Spectrum> {
        let p = path.as_ref();
        let text = std::fs::read_to_string(p)?;
        Spectrum::parse(&text, Some(&p.display().to_string()))
    }

    /// One value per line, shortest round-trip representation, generator in a comment header.
    pub fn to_file_string(&self) -> String {
        let mut out = String::new();
        let desc: Vec<String> =
            self.generator.to_pairs(self.values.len()).into_iter().map(|(k, v)| format!("{k}={v}")).collect();
        let _ = writeln!(out, "# {}", desc.join(" "));
        for v in &self.values {
            let _ = writeln!(out, "{v:?}");
        }
        out
    }

    pub fn write_file(&self, path: impl AsRef<Path>) -> Result<()> {
        std::fs::write(path, self.to_file_string())?;
        Ok(())
    }
}

/// `r n^2 + b n + c` for `n = 1..=n_terms`.
pub fn gen_quadratic(r: f64, b: f64, c: f64, n_terms: usize) -> Result<Spectrum> {
    if !(r > 0.0) || c < 0.0 {
        return Err(Error::InvalidParameter(format!("quadratic needs r > 0, c >= 0 (r={r}, c={c})")));
    }
    let values = (1..=n_terms).map(|n| {
        let n = n as f64;
        r * n * n + b * n + c
    });
    Spectrum::new(values.collect(), Generator::Quadratic { r, b, c })
}

/// Bessel order attached to the degeneracy exponent `alpha`.
pub fn bessel_order(alpha: f64) -> f64 {
    (1.0 - alpha).abs() / (2.0 - alpha)
}

/// `scale * j_{nu,n}^2` with `nu = |1 - alpha| / (2 - alpha)`, `alpha` in `[0, 2)`.
pub fn gen_bessel_like(alpha: f64, scale: f64, n_terms: usize) -> Result<Spectrum> {
    if !(0.0..2.0).contains(&alpha) {
        return Err(Error::InvalidParameter(format!("alpha {alpha} outside [0, 2)")));
    }
    let mut s = gen_bessel_order(bessel_order(alpha), scale, n_terms)?;
    s.generator = Generator::BesselLike { alpha: Some(alpha), nu: bessel_order(alpha), scale };
    Ok(s)
}

pub fn gen_bessel_order(nu: f64, scale: f64, n_terms: usize) -> Result<Spectrum> {
    if !(nu >= 0.0) || !(scale > 0.0) || n_terms == 0 {
        return Err(Error::InvalidParameter(format!("bessel generator needs nu >= 0, scale > 0, N >= 1")));
    }
    let zeros = bessel_zeros(nu, n_terms)?;
    Spectrum::new(zeros.iter().map(|j| scale * j * j).collect(), Generator::BesselLike { alpha: None, nu, scale })
}

/// `(J_nu(x), J_{nu+1}(x))` by the power series, at a precision covering the cancellation.
fn bessel_pair(nu: f64, x: &Float) -> (Float, Float) {
    let xf = x.to_f64();
    let wp = 96 + (xf * std::f64::consts::LOG2_E).ceil() as u32;
    let half = Float::with_val(wp, x) / 2u32;
    let q = Float::with_val(wp, half.square_ref());
    let nu_f = Float::with_val(wp, nu);
    let lead = if nu == 0.0 { Float::with_val(wp, 1) } else { Float::with_val(wp, half.ln_ref()) * &nu_f };
    let lead = if nu == 0.0 { lead } else { lead.exp() };
    let mut t0 = lead.clone() / Float::with_val(wp, &nu_f + 1u32).gamma();
    let mut t1 = Float::with_val(wp, &lead * &half) / Float::with_val(wp, &nu_f + 2u32).gamma();
    let mut s0 = t0.clone();
    let mut s1 = t1.clone();
    let mut k = 0u32;
    loop {
        k += 1;
        t0 *= &q;
        t0 /= Float::with_val(wp, &nu_f + k) * k;
        t0 = -t0;
        t1 *= &q;
        t1 /= Float::with_val(wp, &nu_f + (k + 1)) * k;
        t1 = -t1;
        s0 += &t0;
        s1 += &t1;
        if k as f64 > xf && t0.clone().abs().to_f64() < 1e-40 * (1.0 + s0.to_f64().abs()) && t1.clone().abs().to_f64() < 1e-40 {
            break;
        }
    }
    (s0, s1)
}

/// First `n` positive zeros of `J_nu`: bracketing scan from the previous zero,
/// then safeguarded Newton seeded by McMahon's expansion.
pub fn bessel_zeros(nu: f64, n: usize) -> Result<Vec<f64>> {
    let prec = 128;
    let j_at = |x: f64| bessel_pair(nu, &Float::with_val(prec, x));
    let mut zeros: Vec<f64> = Vec::with_capacity(n);
    let mu = 4.0 * nu * nu;
    for idx in 1..=n {
        let start = match zeros.last() {
            Some(z) => z + 2.0,
            None => nu + 0.1,
        };
        let step = 0.25;
        let mut a = start;
        let mut fa = j_at(a).0.to_f64();
        let mut b = a + step;
        let mut fb = j_at(b).0.to_f64();
        let mut tries = 0;
        while fa.signum() == fb.signum() {
            a = b;
            fa = fb;
            b += step;
            fb = j_at(b).0.to_f64();
            tries += 1;
            if tries > 400 {
                return Err(Error::NewtonDivergence { n: idx });
            }
        }
        let beta = (idx as f64 + nu / 2.0 - 0.25) * std::f64::consts::PI;
        let b8 = 8.0 * beta;
        let mcmahon = beta - (mu - 1.0) / b8 - 4.0 * (mu - 1.0) * (7.0 * mu - 31.0) / (3.0 * b8.powi(3));
        let mut x = if mcmahon > a && mcmahon < b { mcmahon } else { 0.5 * (a + b) };
        let mut converged = false;
        for _ in 0..60 {
            let (j0, j1) = j_at(x);
            let f = j0.to_f64();
            if f == 0.0 {
                converged = true;
                break;
            }
            if f.signum() == fa.signum() {
                a = x;
            } else {
                b = x;
            }
            let deriv = nu / x * f - j1.to_f64();
            let mut next = x - f / deriv;
            if !(next > a && next < b) {
                next = 0.5 * (a + b);
            }
            let done = (next - x).abs() <= 4.0 * f64::EPSILON * x;
            x = next;
            if done || b - a <= 4.0 * f64::EPSILON * x {
                converged = true;
                break;
            }
        }
        if !converged {
            return Err(Error::NewtonDivergence { n: idx });
        }
        zeros.push(x);
    }
    Ok(zeros)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GapProfile {
    pub gamma_min: f64,
    pub gamma_max: f64,
    pub gamma_min_star: f64,
    pub gamma_max_star: f64,
    /// `N*`, threshold after which gaps are at least `gamma_min_star`.
    pub n_star_upper: usize,
    /// `N_*`, threshold after which gaps are at most `gamma_max_star`.
    pub n_star_lower: usize,
    pub m_star: f64,
}

impl GapProfile {
    pub fn new(
        gamma_min: f64,
        gamma_max: f64,
        gamma_min_star: f64,
        gamma_max_star: f64,
        n_star_upper: usize,
        n_star_lower: usize,
    ) -> Result<Self> {
        let ok = gamma_min > 0.0 && gamma_min <= gamma_min_star && gamma_max_star <= gamma_max && gamma_max_star > 0.0;
        if !ok || n_star_upper == 0 || n_star_lower == 0 {
            return Err(Error::InvalidParameter(format!(
                "gap profile violates 0 < gamma_min <= gamma_min* and gamma_max* <= gamma_max \
                 ({gamma_min}, {gamma_min_star}, {gamma_max_star}, {gamma_max})"
            )));
        }
        let m_star = (1.0 - gamma_min / gamma_min_star) * (n_star_upper as f64 - 1.0);
        Ok(GapProfile { gamma_min, gamma_max, gamma_min_star, gamma_max_star, n_star_upper, n_star_lower, m_star })
    }

    /// Uniform gap `gamma` everywhere.
    pub fn uniform(gamma: f64) -> Self {
        GapProfile {
            gamma_min: gamma,
            gamma_max: gamma,
            gamma_min_star: gamma,
            gamma_max_star: gamma,
            n_star_upper: 1,
            n_star_lower: 1,
            m_star: 0.0,
        }
    }
}

/// `sqrt(lambda_{n+1}) - sqrt(lambda_n)` for `n = 1..N-1`.
pub fn sqrt_gaps(s: &Spectrum) -> Vec<f64> {
    s.values.windows(2).map(|w| w[1].sqrt() - w[0].sqrt()).collect()
}

pub fn analyze_gaps(s: &Spectrum, n_star: usize) -> Result<GapProfile> {
    let n = s.truncation_length();
    if n < 2 {
        return Err(Error::TooShort { needed: 2, got: n });
    }
    if n_star == 0 || n_star > n - 1 {
        return Err(Error::InvalidParameter(format!("n_star {n_star} outside 1..={}", n - 1)));
    }
    let gaps = sqrt_gaps(s);
    let fold = |it: &[f64]| {
        it.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &g| (lo.min(g), hi.max(g)))
    };
    let (gamma_min, gamma_max) = fold(&gaps);
    let (gamma_min_star, gamma_max_star) = fold(&gaps[n_star - 1..]);
    GapProfile::new(gamma_min, gamma_max, gamma_min_star, gamma_max_star, n_star, n_star)
}

pub fn verify_gap_hypotheses(s: &Spectrum, p: &GapProfile) -> bool {
    sqrt_gaps(s).iter().enumerate().all(|(i, &g)| {
        let n = i + 1;
        g >= p.gamma_min
            && g <= p.gamma_max
            && (n < p.n_star_upper || g >= p.gamma_min_star)
            && (n < p.n_star_lower || g <= p.gamma_max_star)
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn quadratic_examples() {
        assert_eq!(gen_quadratic(1.0, 0.0, 0.0, 4).unwrap().values(), &[1.0, 4.0, 9.0, 16.0]);
        assert_eq!(gen_quadratic(1.0, 1.0, 0.0, 3).unwrap().values(), &[2.0, 6.0, 12.0]);
        assert!(gen_quadratic(1.0, -3.0, 0.0, 2).is_err());
    }

    #[test]
    fn gap_examples() {
        let s = Spectrum::from_values(vec![0.25, 4.0, 9.0]).unwrap();
        let p = analyze_gaps(&s, 2).unwrap();
        assert_eq!((p.gamma_min, p.gamma_max, p.gamma_min_star, p.gamma_max_star), (1.0, 1.5, 1.0, 1.0));
        assert_eq!(p.m_star, 0.0);
        let s = Spectrum::from_values(vec![0.01, 4.0, 9.0, 16.0]).unwrap();
        let p = analyze_gaps(&s, 2).unwrap();
        assert!((p.gamma_max - 1.9).abs() < 1e-15);
        assert_eq!(p.gamma_min, 1.0);
        assert!(analyze_gaps(&Spectrum::from_values(vec![1.0]).unwrap(), 1).is_err());
    }

    #[test]
    fn hypothesis_examples() {
        let s = gen_quadratic(1.0, 0.0, 0.0, 3).unwrap();
        let p = analyze_gaps(&s, 1).unwrap();
        assert!(verify_gap_hypotheses(&s, &p));
        assert!(!verify_gap_hypotheses(&s, &GapProfile { gamma_min: 2.0, ..p }));
        assert!(!verify_gap_hypotheses(&s, &GapProfile { gamma_max_star: 0.5, n_star_lower: 2, ..p }));
    }

    #[test]
    fn file_round_trip() {
        let s = gen_quadratic(1.0, 0.0, 0.0, 5).unwrap().scaled(1.1).unwrap();
        let back = Spectrum::parse(&s.to_file_string(), None).unwrap();
        assert_eq!(back.values(), s.values());
        let with_comments = "# header\n1.5 # first\n\n2.5\n";
        assert_eq!(Spectrum::parse(with_comments, None).unwrap().values(), &[1.5, 2.5]);
    }

    #[test]
    fn bessel_half_order_is_sine() {
        let s = gen_bessel_like(0.0, 1.0, 3).unwrap();
        let pi2 = std::f64::consts::PI.powi(2);
        for (n, v) in s.values().iter().enumerate() {
            let want = pi2 * ((n + 1) * (n + 1)) as f64;
            assert!((v - want).abs() < 1e-12 * want, "{v} vs {want}");
        }
    }
}
