//! Numerical calibration of the universal constants of the mollifier, the
//! Weierstrass growth estimate and the norm bound.

use std::collections::BTreeMap;
use std::path::Path;

use ini::Ini;
use rayon::prelude::*;

use super::construct::{sai_norm, theoretical_b_star};
use super::mollifier::{choose_params, MollifierF64, MollifierParams};
use super::weierstrass::ln_abs_real_f64;
use crate::error::{Error, Result};
use crate::precision::PrecisionContext;
use crate::spectra::{analyze_gaps, gen_quadratic};
use crate::special::tail_inverse_squares;

pub const CALIBRATION_VERSION: u32 = 1;
const MAX_DRIFT: f64 = 0.05;

#[derive(Debug, Clone, PartialEq)]
pub struct CalibrationConstants {
    pub theta0: f64,
    pub theta1: f64,
    pub theta2: f64,
    /// Always `2^7 theta0 C_u^2 / theta1^2`.
    pub theta3: f64,
    pub c_u_growth: f64,
    /// Exponent constant `C` in the norm bound.
    pub c_exponent: f64,
    /// Grid description and worst-case locations.
    pub provenance: BTreeMap<String, String>,
}

pub(crate) fn theta3_of(theta0: f64, theta1: f64, c_u: f64) -> f64 {
    128.0 * theta0 * c_u * c_u / (theta1 * theta1)
}

fn fmt(x: f64) -> String {
    format!("{x:.16e}")
}

impl CalibrationConstants {
    pub fn new(theta0: f64, theta1: f64, theta2: f64, c_u_growth: f64, c_exponent: f64) -> Result<Self> {
        for (name, v) in [("theta0", theta0), ("theta1", theta1), ("theta2", theta2), ("c_u_growth", c_u_growth)] {
            if !(v > 0.0) || !v.is_finite() {
                return Err(Error::InvalidParameter(format!("{name} must be positive and finite, got {v}")));
            }
        }
        if !c_exponent.is_finite() {
            return Err(Error::InvalidParameter(format!("c_exponent must be finite, got {c_exponent}")));
        }
        Ok(CalibrationConstants {
            theta0,
            theta1,
            theta2,
            theta3: theta3_of(theta0, theta1, c_u_growth),
            c_u_growth,
            c_exponent,
            provenance: BTreeMap::new(),
        })
    }

    pub fn to_text(&self) -> String {
        let mut ini = Ini::new();
        ini.with_section(Some("calibration")).set("version", CALIBRATION_VERSION.to_string());
        ini.with_section(Some("constants"))
            .set("theta0", fmt(self.theta0))
            .set("theta1", fmt(self.theta1))
            .set("theta2", fmt(self.theta2))
            .set("theta3", fmt(self.theta3))
            .set("c_u_growth", fmt(self.c_u_growth))
            .set("c_exponent", fmt(self.c_exponent));
        for (k, v) in &self.provenance {
            ini.with_section(Some("provenance")).set(k.as_str(), v.as_str());
        }
        let mut out = Vec::new();
        ini.write_to(&mut out).expect("writing to a Vec cannot fail");
        String::from_utf8(out).expect("ini output is utf-8")
    }

    pub fn from_text(text: &str) -> Result<Self> {
        let ini = Ini::load_from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        let version = ini
            .section(Some("calibration"))
            .and_then(|s| s.get("version"))
            .ok_or_else(|| Error::Config("calibration record has no version".into()))?;
        if version.trim() != CALIBRATION_VERSION.to_string() {
            return Err(Error::Config(format!("unsupported calibration version {version}")));
        }
        let c = ini.section(Some("constants")).ok_or_else(|| Error::Config("missing [constants]".into()))?;
        let get = |k: &str| -> Result<f64> {
            let v = c.get(k).ok_or_else(|| Error::Config(format!("missing constant {k}")))?;
            v.trim().parse::<f64>().map_err(|_| Error::Config(format!("bad value for {k}: {v}")))
        };
        let mut cal = CalibrationConstants::new(
            get("theta0")?,
            get("theta1")?,
            get("theta2")?,
            get("c_u_growth")?,
            get("c_exponent")?,
        )?;
        let stored = get("theta3")?;
        if (stored - cal.theta3).abs() > 1e-12 * cal.theta3 {
            return Err(Error::Config(format!("theta3 = {stored} contradicts 2^7 theta0 C_u^2 / theta1^2 = {}", cal.theta3)));
        }
        if let Some(p) = ini.section(Some("provenance")) {
            cal.provenance = p.iter().map(|(k, v)| (k.to_string(), v.to_string())).collect();
        }
        Ok(cal)
    }

    pub fn read_file(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| Error::Io(format!("{}: {e}", path.display())))?;
        Self::from_text(&text)
    }

    pub fn write_file(&self, path: impl AsRef<Path>) -> Result<()> {
        std::fs::write(path, self.to_text())?;
        Ok(())
    }
}

/// Sample points and model problems for the calibration.
#[derive(Debug, Clone, PartialEq)]
pub struct CalibrationGrid {
    pub n_primes: Vec<usize>,
    /// Range of `y = C x` for the mollifier scans.
    pub y_min: f64,
    pub y_max: f64,
    pub y_per_decade: usize,
    /// Extra samples inside each grid cell when looking for peaks of `|P|`.
    pub sub_samples: usize,
    pub theta0_ladder: Vec<f64>,
    /// Truncation of `lambda_n = n^2` for the growth constant.
    pub growth_truncation: usize,
    pub growth_m_max: usize,
    pub growth_per_decade: usize,
    /// Truncation of `lambda_n = n^2` for the norm exponent.
    pub norm_truncation: usize,
    pub norm_m_max: usize,
    pub horizons: Vec<f64>,
    /// Relative safety margin added to the norm exponent.
    pub margin: f64,
}

impl Default for CalibrationGrid {
    fn default() -> Self {
        CalibrationGrid {
            n_primes: (1..=12).map(|j| 1usize << j).collect(),
            y_min: 1e-2,
            y_max: 1e10,
            y_per_decade: 24,
            sub_samples: 4,
            theta0_ladder: (0..=6).map(|j| (1u32 << j) as f64).collect(),
            growth_truncation: 4096,
            growth_m_max: 8,
            growth_per_decade: 24,
            norm_truncation: 64,
            norm_m_max: 8,
            horizons: vec![0.1, 0.25, 0.5, 1.0],
            margin: 0.02,
        }
    }
}

impl CalibrationGrid {
    /// Twice the sampling density, a longer truncation and more horizons.
    pub fn refined(&self) -> Self {
        let mut horizons = self.horizons.clone();
        for w in self.horizons.windows(2) {
            horizons.push((w[0] * w[1]).sqrt());
        }
        horizons.sort_by(f64::total_cmp);
        CalibrationGrid {
            y_per_decade: 2 * self.y_per_decade,
            sub_samples: 2 * self.sub_samples,
            growth_truncation: 2 * self.growth_truncation,
            growth_per_decade: 2 * self.growth_per_decade,
            horizons,
            ..self.clone()
        }
    }

    pub fn describe(&self) -> BTreeMap<String, String> {
        let list = |v: &[f64]| v.iter().map(|x| format!("{x}")).collect::<Vec<_>>().join(",");
        let mut out = BTreeMap::new();
        out.insert("grid_n_prime".into(), self.n_primes.iter().map(|n| n.to_string()).collect::<Vec<_>>().join(","));
        out.insert("grid_y".into(), format!("{:e}..{:e} x{}/decade x{}", self.y_min, self.y_max, self.y_per_decade, self.sub_samples));
        out.insert("grid_theta0_ladder".into(), list(&self.theta0_ladder));
        out.insert(
            "grid_growth".into(),
            format!("n^2 N={} m<={} x{}/decade", self.growth_truncation, self.growth_m_max, self.growth_per_decade),
        );
        out.insert("grid_norm".into(), format!("n^2 N={} m<={}", self.norm_truncation, self.norm_m_max));
        out.insert("grid_horizons".into(), list(&self.horizons));
        out.insert("margin".into(), format!("{}", self.margin));
        out
    }
}

fn log_grid(lo: f64, hi: f64, per_decade: usize) -> Vec<f64> {
    let n = ((hi / lo).log10() * per_decade as f64).ceil() as usize;
    (0..=n).map(|i| lo * (hi / lo).powf(i as f64 / n as f64)).collect()
}

/// Mollifier with `C = 1`, so that its argument is `y = C x`.
fn unit_mollifier(n_prime: usize, y_max: f64) -> Result<MollifierF64> {
    let t_prime = 2.0 * tail_inverse_squares(n_prime as u64, 128).to_f64();
    let p = MollifierParams::new(t_prime, n_prime, 0.0)?;
    Ok(MollifierF64::new(&p, y_max))
}

/// Per `N'`: samples `(y, max ln|P| over the cell)`, and the sup of `-ln P(iy)/sqrt(y)`.
struct MollifierScan {
    n_prime: usize,
    peaks: Vec<(f64, f64)>,
    theta2: (f64, f64),
}

fn scan_mollifier(grid: &CalibrationGrid, n_prime: usize) -> Result<MollifierScan> {
    let mol = unit_mollifier(n_prime, grid.y_max)?;
    let ys = log_grid(grid.y_min, grid.y_max, grid.y_per_decade);
    let mut peaks = Vec::with_capacity(ys.len());
    for w in ys.windows(2) {
        let peak = (0..grid.sub_samples)
            .map(|j| mol.ln_abs_real(w[0] + (w[1] - w[0]) * j as f64 / grid.sub_samples as f64).0)
            .fold(f64::NEG_INFINITY, f64::max);
        peaks.push((w[0], peak));
    }
    let theta2 = ys.iter().map(|&y| (y, -mol.ln_imag(y) / y.sqrt())).fold((0.0, f64::NEG_INFINITY), |a, b| if b.1 > a.1 { b } else { a });
    Ok(MollifierScan { n_prime, peaks, theta2 })
}

/// Largest `theta1` for which both branches of the real-axis decay bound hold on the scans.
fn theta1_for(theta0: f64, scans: &[MollifierScan]) -> (f64, String) {
    let mut best = (f64::INFINITY, String::new());
    for sc in scans {
        let np = sc.n_prime as f64;
        for &(y, lp) in &sc.peaks {
            // the cell [y, y'] is bounded with its left end, the weakest point
            let r = (y / theta0).sqrt();
            let bound = if r + 1.0 >= np { -8.0 * lp / r } else { -np.powi(3) * lp / r.powi(4) };
            if bound < best.0 {
                best = (bound, format!("N'={} y={y:.6e}", sc.n_prime));
            }
        }
    }
    best
}

fn growth_constant(grid: &CalibrationGrid) -> Result<(f64, String)> {
    let s = gen_quadratic(1.0, 0.0, 0.0, grid.growth_truncation)?;
    let p = analyze_gaps(&s, 1)?;
    let x_max = s.lambda(grid.growth_truncation) / 16.0;
    let xs = log_grid(1e-2, x_max, grid.growth_per_decade);
    let mut best = (f64::NEG_INFINITY, String::new());
    for m in 1..=grid.growth_m_max {
        let sl = s.lambda(m).sqrt();
        for &x in &xs {
            let v = p.gamma_min * ln_abs_real_f64(s.values(), m, x) / (x.sqrt() + sl);
            if v > best.0 {
                best = (v, format!("m={m} x={x:.6e}"));
            }
        }
    }
    Ok(best)
}

fn norm_exponent(grid: &CalibrationGrid, partial: &CalibrationConstants, ctx: &PrecisionContext) -> Result<(f64, String)> {
    let s = gen_quadratic(1.0, 0.0, 0.0, grid.norm_truncation)?;
    let p = analyze_gaps(&s, 1)?;
    let cells: Vec<(f64, usize)> = grid.horizons.iter().flat_map(|&t| (1..=grid.norm_m_max).map(move |m| (t, m))).collect();
    let gs = p.gamma_min_star;
    let lambda_nstar = s.lambda(p.n_star_upper);
    let values: Vec<Result<(f64, String)>> = cells
        .par_iter()
        .map(|&(t, m)| {
            let params = choose_params(t, gs, partial)?;
            let ln_sq = 2.0 * sai_norm(&s, &p, m, t, &params, ctx)?.ln_f64();
            let base = theoretical_b_star(&p, s.lambda(m), lambda_nstar, t, partial)?.ln_f64();
            let weight = 1.0 / (t * gs * gs) + s.lambda(m).sqrt() / gs;
            Ok(((ln_sq - base) / weight, format!("T={t} m={m}")))
        })
        .collect();
    let mut best = (f64::NEG_INFINITY, String::new());
    for v in values {
        let v = v?;
        if v.0 > best.0 {
            best = v;
        }
    }
    Ok(best)
}

fn calibrate_once(grid: &CalibrationGrid, ctx: &PrecisionContext) -> Result<CalibrationConstants> {
    if grid.n_primes.is_empty() || grid.theta0_ladder.is_empty() || grid.horizons.is_empty() {
        return Err(Error::InvalidParameter("calibration grid has an empty axis".into()));
    }
    let scans: Vec<MollifierScan> = grid.n_primes.par_iter().map(|&n| scan_mollifier(grid, n)).collect::<Result<_>>()?;
    let (theta2, theta2_at) = scans
        .iter()
        .map(|s| (s.theta2.1, format!("N'={} y={:.6e}", s.n_prime, s.theta2.0)))
        .fold((f64::NEG_INFINITY, String::new()), |a, b| if b.0 > a.0 { b } else { a });
    let (c_u, c_u_at) = growth_constant(grid)?;
    let mut choice: Option<(f64, f64, f64, String)> = None;
    for &theta0 in &grid.theta0_ladder {
        let (theta1, at) = theta1_for(theta0, &scans);
        if !(theta1 > 0.0) {
            continue;
        }
        let t3 = theta3_of(theta0, theta1, c_u);
        if choice.as_ref().map_or(true, |c| t3 < c.2) {
            choice = Some((theta0, theta1, t3, at));
        }
    }
    let (theta0, theta1, _, theta1_at) =
        choice.ok_or_else(|| Error::InvalidParameter("no admissible theta0 on the ladder".into()))?;
    let mut cal = CalibrationConstants::new(theta0, theta1, theta2, c_u, 0.0)?;
    let (c_raw, c_at) = norm_exponent(grid, &cal, ctx)?;
    cal.c_exponent = c_raw + grid.margin * c_raw.abs();
    let mut prov = grid.describe();
    prov.insert("theta1_binding".into(), theta1_at);
    prov.insert("theta2_binding".into(), theta2_at);
    prov.insert("c_u_binding".into(), c_u_at);
    prov.insert("c_exponent_binding".into(), c_at);
    prov.insert("c_exponent_raw".into(), fmt(c_raw));
    cal.provenance = prov;
    Ok(cal)
}

fn drift(a: f64, b: f64) -> f64 {
    let scale = a.abs().max(b.abs());
    if scale == 0.0 {
        0.0
    } else {
        (a - b).abs() / scale
    }
}

/// Calibrates on `grid` and on `grid.refined()`; returns the refined constants
/// unless any of them moved by more than 5%.
pub fn calibrate_constants(grid: &CalibrationGrid, ctx: &PrecisionContext) -> Result<CalibrationConstants> {
    let coarse = calibrate_once(grid, ctx)?;
    let mut fine = calibrate_once(&grid.refined(), ctx)?;
    let pairs = [
        ("theta1", coarse.theta1, fine.theta1),
        ("theta2", coarse.theta2, fine.theta2),
        ("theta3", coarse.theta3, fine.theta3),
        ("c_u_growth", coarse.c_u_growth, fine.c_u_growth),
        ("c_exponent", coarse.c_exponent, fine.c_exponent),
    ];
    for (name, a, b) in pairs {
        let d = drift(a, b);
        if d > MAX_DRIFT {
            return Err(Error::CalibrationUnstable { constant: name.into(), drift: d });
        }
        fine.provenance.insert(format!("drift_{name}"), format!("{d:.6e}"));
    }
    if coarse.theta0 != fine.theta0 {
        return Err(Error::CalibrationUnstable { constant: "theta0".into(), drift: drift(coarse.theta0, fine.theta0) });
    }
    Ok(fine)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn theta3_identity_and_round_trip() {
        let mut c = CalibrationConstants::new(4.0, 0.7, 1.5, 2.2, 30.0).unwrap();
        assert_eq!(c.theta3, 128.0 * 4.0 * 2.2 * 2.2 / (0.7 * 0.7));
        c.provenance.insert("note".into(), "x=1".into());
        let back = CalibrationConstants::from_text(&c.to_text()).unwrap();
        assert_eq!(back, c);
    }

    #[test]
    fn rejects_inconsistent_theta3() {
        let c = CalibrationConstants::new(4.0, 0.7, 1.5, 2.2, 30.0).unwrap();
        let text = c.to_text().replace(&fmt(c.theta3), "1.0e0");
        assert!(matches!(CalibrationConstants::from_text(&text), Err(Error::Config(_))));
        let text = c.to_text().replace("version=1", "version=99");
        assert!(CalibrationConstants::from_text(&text).is_err());
    }

    #[test]
    fn theta2_finite_on_small_mollifier() {
        let grid = CalibrationGrid { y_max: 1e6, ..CalibrationGrid::default() };
        let sc = scan_mollifier(&grid, 10).unwrap();
        assert!(sc.theta2.1.is_finite() && sc.theta2.1 > 0.0 && sc.theta2.1 < 3.0, "{:?}", sc.theta2);
    }
}
