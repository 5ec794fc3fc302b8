//! Batch runs: configuration, the bound chain per `(m, T)` cell, CSV reports and plots.
//!
//! The chain is compared on the scale of the growing family:
//! `e^{-lambda_m T} L <= e^{-lambda_m T}/d <= ||sigma_m^+|| <= sqrt(B)`,
//! where `L` is the explicit lower bound on `1/d` and `B` the norm-squared bound.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use ini::Ini;
use rayon::prelude::*;

use crate::counting::{check_counting_lemmas, Violation};
use crate::error::{Error, Result};
use crate::gram::{distance, BiorthogonalFamily, Coefficients, DistanceResult};
use crate::guichal::{best_lower_bound, lower_bound_one_gap, lower_bound_two_gap, LowerBoundResult};
use crate::precision::{LogValue, PrecisionContext};
use crate::sai::{choose_params, sai_family, sai_norm, theoretical_b_star, CalibrationConstants};
use crate::spectra::{analyze_gaps, gen_bessel_like, gen_bessel_order, gen_quadratic, Spectrum};

pub const CALIBRATION_ENV: &str = "BIORTHO_CALIBRATION";

#[derive(Debug, Clone, PartialEq)]
pub enum SpectrumSource {
    Quadratic { r: f64, b: f64, c: f64, n: usize },
    BesselAlpha { alpha: f64, scale: f64, n: usize },
    BesselOrder { nu: f64, scale: f64, n: usize },
    File(PathBuf),
}

impl SpectrumSource {
    pub fn build(&self) -> Result<Spectrum> {
        match self {
            SpectrumSource::Quadratic { r, b, c, n } => gen_quadratic(*r, *b, *c, *n),
            SpectrumSource::BesselAlpha { alpha, scale, n } => gen_bessel_like(*alpha, *scale, *n),
            SpectrumSource::BesselOrder { nu, scale, n } => gen_bessel_order(*nu, *scale, *n),
            SpectrumSource::File(p) => Spectrum::read_file(p),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Checks {
    pub sai: bool,
    pub b_star: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub spectrum: SpectrumSource,
    pub horizons: Vec<f64>,
    pub indices: Vec<usize>,
    pub n_star: Vec<usize>,
    pub precision: PrecisionContext,
    /// Relative slack allowed in each comparison of the chain.
    pub slack: f64,
    pub out_dir: Option<PathBuf>,
    pub plot: bool,
    pub checks: Checks,
    pub calibration: Option<PathBuf>,
    /// Multiplies the lower bound; anything above one should make the chain fail.
    pub lower_bound_inflation: f64,
    pub rho_points: usize,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            spectrum: SpectrumSource::Quadratic { r: 1.0, b: 0.0, c: 0.0, n: 32 },
            horizons: vec![1.0],
            indices: vec![1],
            n_star: vec![1],
            precision: PrecisionContext::default(),
            slack: 1e-8,
            out_dir: None,
            plot: false,
            checks: Checks { sai: false, b_star: false },
            calibration: None,
            lower_bound_inflation: 1.0,
            rho_points: 50,
        }
    }
}

fn parse_list<T: std::str::FromStr>(key: &str, v: &str) -> Result<Vec<T>> {
    v.split(',')
        .map(str::trim)
        .filter(|x| !x.is_empty())
        .map(|x| x.parse::<T>().map_err(|_| Error::Config(format!("{key}: cannot parse {x:?}"))))
        .collect()
}

fn parse_one<T: std::str::FromStr>(key: &str, v: &str) -> Result<T> {
    v.trim().parse::<T>().map_err(|_| Error::Config(format!("{key}: cannot parse {v:?}")))
}

fn parse_bool(key: &str, v: &str) -> Result<bool> {
    match v.trim() {
        "true" | "yes" | "1" | "on" => Ok(true),
        "false" | "no" | "0" | "off" => Ok(false),
        _ => Err(Error::Config(format!("{key}: expected a boolean, got {v:?}"))),
    }
}

impl RunConfig {
    /// Parses the sectioned `key=value` format. Relative file paths are resolved against `base`.
    pub fn parse(text: &str, base: Option<&Path>) -> Result<Self> {
        let ini = Ini::load_from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        let mut cfg = RunConfig::default();
        let resolve = |p: &str| -> PathBuf {
            let p = PathBuf::from(p.trim());
            match base {
                Some(b) if p.is_relative() => b.join(p),
                _ => p,
            }
        };
        let known: BTreeMap<&str, &[&str]> = [
            ("spectrum", &["kind", "r", "b", "c", "n", "alpha", "nu", "scale", "path"][..]),
            ("run", &["horizons", "indices", "n_star", "slack", "sai", "b_star", "rho_points"][..]),
            ("precision", &["digits", "tolerance", "max_escalations", "escalation_factor"][..]),
            ("output", &["dir", "plot"][..]),
            ("calibration", &["path"][..]),
            ("test", &["lower_bound_inflation"][..]),
        ]
        .into_iter()
        .collect();
        for (sec, props) in ini.iter() {
            let Some(sec) = sec else {
                if props.iter().next().is_some() {
                    return Err(Error::Config("keys outside any section".into()));
                }
                continue;
            };
            let allowed = known.get(sec).ok_or_else(|| Error::Config(format!("unknown section [{sec}]")))?;
            for (k, _) in props.iter() {
                if !allowed.contains(&k) {
                    return Err(Error::Config(format!("unknown key {k} in [{sec}]")));
                }
            }
        }
        if let Some(sp) = ini.section(Some("spectrum")) {
            let get = |k: &str| sp.get(k);
            let num = |k: &str, d: f64| -> Result<f64> { get(k).map_or(Ok(d), |v| parse_one(k, v)) };
            let n = get("n").map_or(Ok(32), |v| parse_one::<usize>("n", v))?;
            cfg.spectrum = match get("kind").unwrap_or("quadratic").trim() {
                "quadratic" => SpectrumSource::Quadratic { r: num("r", 1.0)?, b: num("b", 0.0)?, c: num("c", 0.0)?, n },
                "bessel" => match (get("alpha"), get("nu")) {
                    (Some(a), None) => SpectrumSource::BesselAlpha { alpha: parse_one("alpha", a)?, scale: num("scale", 1.0)?, n },
                    (None, Some(v)) => SpectrumSource::BesselOrder { nu: parse_one("nu", v)?, scale: num("scale", 1.0)?, n },
                    _ => return Err(Error::Config("bessel spectrum needs exactly one of alpha, nu".into())),
                },
                "file" => {
                    let p = get("path").ok_or_else(|| Error::Config("file spectrum needs path".into()))?;
                    SpectrumSource::File(resolve(p))
                }
                other => return Err(Error::Config(format!("unknown spectrum kind {other:?}"))),
            };
        }
        if let Some(run) = ini.section(Some("run")) {
            if let Some(v) = run.get("horizons") {
                cfg.horizons = parse_list("horizons", v)?;
            }
            if let Some(v) = run.get("indices") {
                cfg.indices = parse_list("indices", v)?;
            }
            if let Some(v) = run.get("n_star") {
                cfg.n_star = parse_list("n_star", v)?;
            }
            if let Some(v) = run.get("slack") {
                cfg.slack = parse_one("slack", v)?;
            }
            if let Some(v) = run.get("sai") {
                cfg.checks.sai = parse_bool("sai", v)?;
            }
            if let Some(v) = run.get("b_star") {
                cfg.checks.b_star = parse_bool("b_star", v)?;
            }
            if let Some(v) = run.get("rho_points") {
                cfg.rho_points = parse_one("rho_points", v)?;
            }
        }
        if let Some(pr) = ini.section(Some("precision")) {
            let d = PrecisionContext::default();
            let digits = pr.get("digits").map_or(Ok(d.working_digits), |v| parse_one("digits", v))?;
            let tol = pr.get("tolerance").map_or(Ok(d.residual_target), |v| parse_one("tolerance", v))?;
            let esc = pr.get("max_escalations").map_or(Ok(d.max_escalations), |v| parse_one("max_escalations", v))?;
            let fac = pr.get("escalation_factor").map_or(Ok(d.escalation_factor), |v| parse_one("escalation_factor", v))?;
            cfg.precision = PrecisionContext::new(digits, tol, esc, fac)?;
        }
        if let Some(out) = ini.section(Some("output")) {
            if let Some(v) = out.get("dir") {
                cfg.out_dir = Some(resolve(v));
            }
            if let Some(v) = out.get("plot") {
                cfg.plot = parse_bool("plot", v)?;
            }
        }
        if let Some(v) = ini.section(Some("calibration")).and_then(|c| c.get("path")) {
            cfg.calibration = Some(resolve(v));
        }
        if let Some(v) = ini.section(Some("test")).and_then(|c| c.get("lower_bound_inflation")) {
            cfg.lower_bound_inflation = parse_one("lower_bound_inflation", v)?;
        }
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn read_file(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| Error::Io(format!("{}: {e}", path.display())))?;
        RunConfig::parse(&text, path.parent())
    }

    pub fn validate(&self) -> Result<()> {
        if self.horizons.is_empty() {
            return Err(Error::Config("no horizons T given".into()));
        }
        if self.indices.is_empty() {
            return Err(Error::Config("no indices m given".into()));
        }
        if let Some(t) = self.horizons.iter().find(|t| !(**t > 0.0) || !t.is_finite()) {
            return Err(Error::Config(format!("horizon {t} is not positive")));
        }
        if self.indices.contains(&0) || self.n_star.contains(&0) {
            return Err(Error::Config("indices and n_star are 1-based".into()));
        }
        if !(self.slack >= 0.0) || !(self.lower_bound_inflation > 0.0) {
            return Err(Error::Config("slack must be >= 0 and lower_bound_inflation > 0".into()));
        }
        Ok(())
    }

    /// Calibration file: the configured path, else `$BIORTHO_CALIBRATION`.
    pub fn calibration_path(&self) -> Option<PathBuf> {
        self.calibration.clone().or_else(|| std::env::var_os(CALIBRATION_ENV).map(PathBuf::from))
    }

    fn load_calibration(&self) -> Result<Option<CalibrationConstants>> {
        if !(self.checks.sai || self.checks.b_star) {
            return Ok(None);
        }
        match self.calibration_path() {
            Some(p) => CalibrationConstants::read_file(p).map(Some),
            None => Err(Error::Config(format!(
                "the sai and b_star checks need a calibration file ([calibration] path or {CALIBRATION_ENV})"
            ))),
        }
    }
}

/// One `(m, T)` cell of the chain; logs are natural.
#[derive(Debug, Clone, PartialEq)]
pub struct BoundRow {
    pub m: usize,
    pub t: f64,
    pub regime: String,
    /// `ln L`, lower bound on `1/d`.
    pub ln_lower: f64,
    pub ln_inverse_distance: f64,
    /// `ln(e^{-lambda_m T}/d)`.
    pub ln_minimal_norm: f64,
    pub ln_sai_norm: Option<f64>,
    /// `ln sqrt(B)`.
    pub ln_b_star: Option<f64>,
    pub digits_used: u32,
    /// `ln(1/d) - ln L`.
    pub margin_lower: f64,
    pub margin_sai: Option<f64>,
    pub margin_b_star: Option<f64>,
    pub pass: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct BoundReport {
    pub rows: Vec<BoundRow>,
    /// Column name and per-row value of the swept parameter, if any.
    pub axis: Option<(String, Vec<f64>)>,
}

impl BoundReport {
    pub fn all_pass(&self) -> bool {
        self.rows.iter().all(|r| r.pass)
    }

    pub fn failures(&self) -> Vec<(usize, f64)> {
        self.rows.iter().filter(|r| !r.pass).map(|r| (r.m, r.t)).collect()
    }
}

/// Scientific notation with 17 significant digits for `e^{ln}`.
pub fn sci_from_ln(ln: f64) -> String {
    if ln == f64::NEG_INFINITY {
        return LogValue::from_f64(0.0).to_sci(17);
    }
    LogValue::from_ln_f64(ln).to_sci(17)
}

pub fn sci(x: f64) -> String {
    format!("{x:.16e}")
}

fn best_lower(s: &Spectrum, t: f64, m: usize, n_star: &[usize]) -> Result<LowerBoundResult> {
    let n = s.truncation_length();
    let mut cands = Vec::new();
    if s.lambda(1) > 0.0 {
        let p1 = analyze_gaps(s, 1)?;
        cands.push(lower_bound_one_gap(t, p1.gamma_max, s.lambda(1), m)?);
        for &ns in n_star.iter().filter(|&&ns| ns < n) {
            let p = analyze_gaps(s, ns)?;
            cands.push(lower_bound_two_gap(s, &p, t, m)?);
        }
    }
    if m < n {
        cands.push(best_lower_bound(s, t, m, m..=n - 1)?);
    }
    cands
        .into_iter()
        .reduce(|a, b| if b.ln() > a.ln() { b } else { a })
        .ok_or_else(|| Error::InsufficientTruncation { have: n, need: m + 1 })
}

fn compute_cell(s: &Spectrum, cfg: &RunConfig, cal: Option<&CalibrationConstants>, m: usize, t: f64) -> Result<BoundRow> {
    let slack = cfg.slack.ln_1p();
    let lower = best_lower(s, t, m, &cfg.n_star)?;
    let ln_lower = lower.ln() + cfg.lower_bound_inflation.ln();
    let d = distance(s, t, m, &cfg.precision)?;
    let ln_inv = -d.d.ln_f64();
    let ln_min = ln_inv - s.lambda(m) * t;
    let margin_lower = ln_inv - ln_lower;
    let mut pass = margin_lower >= -slack;
    let (mut ln_sai, mut ln_b, mut margin_sai, mut margin_b) = (None, None, None, None);
    if let Some(cal) = cal {
        let p = analyze_gaps(s, *cfg.n_star.first().unwrap_or(&1))?;
        let params = choose_params(t, p.gamma_min_star, cal)?;
        if cfg.checks.sai || cfg.checks.b_star {
            let v = sai_norm(s, &p, m, t, &params, &cfg.precision)?.ln_f64();
            ln_sai = Some(v);
            let ms = v - ln_min;
            margin_sai = Some(ms);
            pass &= ms >= -slack.max(1e-6);
        }
        if cfg.checks.b_star {
            let b = theoretical_b_star(&p, s.lambda(m), s.lambda(p.n_star_upper), t, cal)?.ln_f64() / 2.0;
            ln_b = Some(b);
            let mb = b - ln_sai.unwrap();
            margin_b = Some(mb);
            pass &= mb >= -slack;
        }
    }
    Ok(BoundRow {
        m,
        t,
        regime: lower.regime.name().to_string(),
        ln_lower,
        ln_inverse_distance: ln_inv,
        ln_minimal_norm: ln_min,
        ln_sai_norm: ln_sai,
        ln_b_star: ln_b,
        digits_used: d.precision_used,
        margin_lower,
        margin_sai,
        margin_b_star: margin_b,
        pass,
    })
}

fn cells(cfg: &RunConfig) -> Vec<(usize, f64)> {
    cfg.horizons.iter().flat_map(|&t| cfg.indices.iter().map(move |&m| (m, t))).collect()
}

fn run_cells(s: &Spectrum, cfg: &RunConfig, cal: Option<&CalibrationConstants>) -> Result<Vec<BoundRow>> {
    cells(cfg)
        .par_iter()
        .map(|&(m, t)| compute_cell(s, cfg, cal, m, t).map_err(|e| Error::Cell { m, t, source: Box::new(e) }))
        .collect()
}

/// Runs the chain on every `(m, T)` cell and writes `report.csv`, `bounds.csv`
/// (and `chain_m<m>.svg` when plotting) into the output directory.
pub fn run_verify(cfg: &RunConfig) -> Result<BoundReport> {
    cfg.validate()?;
    let cal = cfg.load_calibration()?;
    let s = cfg.spectrum.build()?;
    let report = BoundReport { rows: run_cells(&s, cfg, cal.as_ref())?, axis: None };
    write_outputs(cfg, &report)?;
    Ok(report)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SweepAxis {
    Horizon,
    /// `lambda -> s^2 lambda`.
    Scale,
    Truncation,
    Index,
}

impl SweepAxis {
    pub fn name(self) -> &'static str {
        match self {
            SweepAxis::Horizon => "T",
            SweepAxis::Scale => "scale",
            SweepAxis::Truncation => "N",
            SweepAxis::Index => "m",
        }
    }

    pub fn parse(s: &str) -> Result<Self> {
        match s {
            "T" | "t" | "horizon" => Ok(SweepAxis::Horizon),
            "scale" | "gamma" => Ok(SweepAxis::Scale),
            "N" | "n" | "truncation" => Ok(SweepAxis::Truncation),
            "m" | "index" => Ok(SweepAxis::Index),
            _ => Err(Error::Config(format!("unknown sweep axis {s:?}"))),
        }
    }
}

/// Varies one parameter over `values`, all others taken from `cfg`; one row per
/// grid point and configured cell, in grid order.
pub fn run_sweep(cfg: &RunConfig, axis: SweepAxis, values: &[f64]) -> Result<BoundReport> {
    cfg.validate()?;
    if values.is_empty() {
        return Err(Error::Config("empty sweep".into()));
    }
    let cal = cfg.load_calibration()?;
    let base = cfg.spectrum.build()?;
    let mut rows = Vec::new();
    let mut col = Vec::new();
    for &v in values {
        let mut c = cfg.clone();
        let s = match axis {
            SweepAxis::Horizon => {
                c.horizons = vec![v];
                base.clone()
            }
            SweepAxis::Index => {
                c.indices = vec![v as usize];
                base.clone()
            }
            SweepAxis::Scale => base.scaled(v)?,
            SweepAxis::Truncation => base.truncate(v as usize)?,
        };
        c.validate()?;
        let r = run_cells(&s, &c, cal.as_ref())?;
        col.extend(std::iter::repeat(v).take(r.len()));
        rows.extend(r);
    }
    let report = BoundReport { rows, axis: Some((axis.name().to_string(), col)) };
    write_outputs(cfg, &report)?;
    Ok(report)
}

fn opt_ln(v: Option<f64>) -> (String, String) {
    match v {
        Some(x) => (sci_from_ln(x), sci(x)),
        None => (String::new(), String::new()),
    }
}

/// Full chain: one row per cell.
pub fn report_csv(report: &BoundReport) -> Result<String> {
    let mut w = csv::Writer::from_writer(Vec::new());
    let mut header = Vec::new();
    if let Some((name, _)) = &report.axis {
        header.push(name.clone());
    }
    for h in [
        "m",
        "T",
        "regime",
        "lower_bound",
        "log_lower_bound",
        "inverse_distance",
        "log_inverse_distance",
        "minimal_norm",
        "log_minimal_norm",
        "sai_norm",
        "log_sai_norm",
        "sqrt_b_star",
        "log_sqrt_b_star",
        "digits_used",
        "margin_lower",
        "margin_sai",
        "margin_b_star",
        "pass",
    ] {
        header.push(h.to_string());
    }
    w.write_record(&header).map_err(csv_err)?;
    for (i, r) in report.rows.iter().enumerate() {
        let mut rec = Vec::new();
        if let Some((_, vals)) = &report.axis {
            rec.push(sci(vals[i]));
        }
        let (sai, lsai) = opt_ln(r.ln_sai_norm);
        let (b, lb) = opt_ln(r.ln_b_star);
        rec.extend([
            r.m.to_string(),
            sci(r.t),
            r.regime.clone(),
            sci_from_ln(r.ln_lower),
            sci(r.ln_lower),
            sci_from_ln(r.ln_inverse_distance),
            sci(r.ln_inverse_distance),
            sci_from_ln(r.ln_minimal_norm),
            sci(r.ln_minimal_norm),
            sai,
            lsai,
            b,
            lb,
            r.digits_used.to_string(),
            sci(r.margin_lower),
            r.margin_sai.map(sci).unwrap_or_default(),
            r.margin_b_star.map(sci).unwrap_or_default(),
            r.pass.to_string(),
        ]);
        w.write_record(&rec).map_err(csv_err)?;
    }
    finish_csv(w)
}

/// `m, T, regime, log_bound, log_inverse_distance, margin`.
pub fn bounds_csv(report: &BoundReport) -> Result<String> {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(["m", "T", "regime", "log_bound", "log_inverse_distance", "margin"]).map_err(csv_err)?;
    for r in &report.rows {
        w.write_record([
            r.m.to_string(),
            sci(r.t),
            r.regime.clone(),
            sci(r.ln_lower),
            sci(r.ln_inverse_distance),
            sci(r.margin_lower),
        ])
        .map_err(csv_err)?;
    }
    finish_csv(w)
}

/// `m, T, digits_used, log_d, residual`.
pub fn distance_csv(rows: &[(f64, DistanceResult)]) -> Result<String> {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(["m", "T", "digits_used", "d", "log_d", "residual"]).map_err(csv_err)?;
    for (t, d) in rows {
        w.write_record([
            d.m.to_string(),
            sci(*t),
            d.precision_used.to_string(),
            d.d.to_sci(17),
            sci(d.d.ln_f64()),
            sci(d.residual),
        ])
        .map_err(csv_err)?;
    }
    finish_csv(w)
}

/// `n, rho, exact, branch, bound`.
pub fn violations_csv(rows: &[Violation]) -> Result<String> {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(["n", "rho", "exact", "branch", "bound"]).map_err(csv_err)?;
    for v in rows {
        w.write_record([v.n.to_string(), sci(v.rho), v.exact.to_string(), v.branch.name().to_string(), sci(v.bound)])
            .map_err(csv_err)?;
    }
    finish_csv(w)
}

/// Per member: Parseval and time-domain norms, worst residual and support leakage.
pub fn norm_table_csv(families: &[BiorthogonalFamily]) -> Result<String> {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record([
        "m",
        "T",
        "method",
        "norm",
        "log_norm",
        "time_domain_norm",
        "log_time_domain_norm",
        "max_residual",
        "support_ratio",
        "digits_used",
    ])
    .map_err(csv_err)?;
    for fam in families {
        for (i, &m) in fam.indices.iter().enumerate() {
            let worst = fam.residuals[i].iter().copied().fold(0.0, f64::max);
            let (method, td, ltd, supp) = match &fam.coefficients {
                Coefficients::Sai(s) => {
                    let smp = &s[i];
                    ("sai", smp.time_domain_norm.to_sci(17), sci(smp.time_domain_norm.ln_f64()), sci(smp.support_ratio))
                }
                Coefficients::Minimal(_) => ("minimal", String::new(), String::new(), String::new()),
            };
            w.write_record([
                m.to_string(),
                sci(fam.horizon_t),
                method.to_string(),
                fam.norms[i].to_sci(17),
                sci(fam.norms[i].ln_f64()),
                td,
                ltd,
                sci(worst),
                supp,
                fam.precision_used.to_string(),
            ])
            .map_err(csv_err)?;
        }
    }
    finish_csv(w)
}

fn csv_err(e: csv::Error) -> Error {
    Error::Io(e.to_string())
}

fn finish_csv(w: csv::Writer<Vec<u8>>) -> Result<String> {
    let bytes = w.into_inner().map_err(|e| Error::Io(e.to_string()))?;
    String::from_utf8(bytes).map_err(|e| Error::Io(e.to_string()))
}

fn write_outputs(cfg: &RunConfig, report: &BoundReport) -> Result<()> {
    let Some(dir) = &cfg.out_dir else { return Ok(()) };
    std::fs::create_dir_all(dir)?;
    std::fs::write(dir.join("report.csv"), report_csv(report)?)?;
    std::fs::write(dir.join("bounds.csv"), bounds_csv(report)?)?;
    if cfg.plot {
        plot_chain(report, dir)?;
    }
    Ok(())
}

/// Counting check over a log grid of `rho` for each configured `n_star`.
pub fn run_counting_check(cfg: &RunConfig) -> Result<Vec<Violation>> {
    cfg.validate()?;
    let s = cfg.spectrum.build()?;
    let n = s.truncation_length();
    let span = s.lambda(n) - s.lambda(1);
    if !(span > 0.0) {
        return Err(Error::TooShort { needed: 2, got: n });
    }
    let lo = (s.lambda(2) - s.lambda(1)) / 4.0;
    let k = cfg.rho_points.max(2);
    let grid: Vec<f64> = (0..k).map(|i| lo * (span / lo).powf(i as f64 / (k - 1) as f64)).collect();
    let mut out = Vec::new();
    for &ns in &cfg.n_star {
        let p = analyze_gaps(&s, ns.min(n - 1))?;
        out.extend(check_counting_lemmas(&s, &p, &grid));
    }
    if let Some(dir) = &cfg.out_dir {
        std::fs::create_dir_all(dir)?;
        std::fs::write(dir.join("violations.csv"), violations_csv(&out)?)?;
    }
    Ok(out)
}

/// Gram-oracle distances for every configured cell.
pub fn run_distance(cfg: &RunConfig) -> Result<Vec<(f64, DistanceResult)>> {
    cfg.validate()?;
    let s = cfg.spectrum.build()?;
    let rows: Vec<(f64, DistanceResult)> = cells(cfg)
        .par_iter()
        .map(|&(m, t)| {
            distance(&s, t, m, &cfg.precision).map(|d| (t, d)).map_err(|e| Error::Cell { m, t, source: Box::new(e) })
        })
        .collect::<Result<_>>()?;
    if let Some(dir) = &cfg.out_dir {
        std::fs::create_dir_all(dir)?;
        std::fs::write(dir.join("distance.csv"), distance_csv(&rows)?)?;
    }
    Ok(rows)
}

/// Explicit families for every configured horizon.
pub fn run_construct(cfg: &RunConfig) -> Result<Vec<BiorthogonalFamily>> {
    cfg.validate()?;
    let cal = match cfg.calibration_path() {
        Some(p) => CalibrationConstants::read_file(p)?,
        None => return Err(Error::Config(format!("construct needs a calibration file ([calibration] path or {CALIBRATION_ENV})"))),
    };
    let s = cfg.spectrum.build()?;
    let p = analyze_gaps(&s, *cfg.n_star.first().unwrap_or(&1))?;
    let mut fams = Vec::new();
    for &t in &cfg.horizons {
        let params = choose_params(t, p.gamma_min_star, &cal)?;
        let fam = sai_family(&s, &p, &cfg.indices, t, &params, &cfg.precision)
            .map_err(|e| Error::Cell { m: *cfg.indices.iter().max().unwrap(), t, source: Box::new(e) })?;
        fams.push(fam);
    }
    if let Some(dir) = &cfg.out_dir {
        std::fs::create_dir_all(dir)?;
        std::fs::write(dir.join("norms.csv"), norm_table_csv(&fams)?)?;
        let mut samples = String::from("m,T,t,sigma,log_abs_sigma\n");
        for fam in &fams {
            if let Coefficients::Sai(ss) = &fam.coefficients {
                for smp in ss {
                    for (t, v) in smp.times.iter().zip(&smp.values) {
                        let _ = writeln!(samples, "{},{},{},{},{}", smp.m, sci(fam.horizon_t), sci(*t), v.to_sci(17), sci(v.ln_f64()));
                    }
                }
            }
        }
        std::fs::write(dir.join("samples.csv"), samples)?;
    }
    Ok(fams)
}

/// One SVG per index: `x = 1/T`, `y` = logs of the chain on the growing-family scale.
pub fn plot_chain(report: &BoundReport, dir: &Path) -> Result<()> {
    use plotters::prelude::*;
    let mut ms: Vec<usize> = report.rows.iter().map(|r| r.m).collect();
    ms.sort_unstable();
    ms.dedup();
    for m in ms {
        let mut rows: Vec<&BoundRow> = report.rows.iter().filter(|r| r.m == m).collect();
        rows.sort_by(|a, b| b.t.total_cmp(&a.t));
        let lam_t = |r: &BoundRow| r.ln_minimal_norm - r.ln_inverse_distance;
        let series: Vec<(&str, RGBColor, Vec<(f64, f64)>)> = vec![
            ("lower bound", BLUE, rows.iter().map(|r| (1.0 / r.t, r.ln_lower + lam_t(r))).collect()),
            ("minimal norm", BLACK, rows.iter().map(|r| (1.0 / r.t, r.ln_minimal_norm)).collect()),
            ("sai norm", GREEN, rows.iter().filter_map(|r| r.ln_sai_norm.map(|v| (1.0 / r.t, v))).collect()),
            ("sqrt B*", RED, rows.iter().filter_map(|r| r.ln_b_star.map(|v| (1.0 / r.t, v))).collect()),
        ];
        let pts = series.iter().flat_map(|s| s.2.iter());
        let (mut x0, mut x1, mut y0, mut y1) = (f64::INFINITY, f64::NEG_INFINITY, f64::INFINITY, f64::NEG_INFINITY);
        for &(x, y) in pts {
            x0 = x0.min(x);
            x1 = x1.max(x);
            y0 = y0.min(y);
            y1 = y1.max(y);
        }
        if x0 == x1 {
            x0 -= 0.5;
            x1 += 0.5;
        }
        let pad = ((y1 - y0) * 0.05).max(1.0);
        let path = dir.join(format!("chain_m{m}.svg"));
        let root = SVGBackend::new(&path, (800, 560)).into_drawing_area();
        let draw = |e: &dyn std::fmt::Display| Error::Io(format!("plot: {e}"));
        root.fill(&WHITE).map_err(|e| draw(&e))?;
        let mut chart = ChartBuilder::on(&root)
            .caption(format!("m = {m}"), ("sans-serif", 20))
            .margin(12)
            .x_label_area_size(40)
            .y_label_area_size(60)
            .build_cartesian_2d(x0..x1, (y0 - pad)..(y1 + pad))
            .map_err(|e| draw(&e))?;
        chart.configure_mesh().x_desc("1/T").y_desc("ln").draw().map_err(|e| draw(&e))?;
        for (name, color, data) in series {
            if data.is_empty() {
                continue;
            }
            chart
                .draw_series(LineSeries::new(data.clone(), color))
                .map_err(|e| draw(&e))?
                .label(name)
                .legend(move |(x, y)| PathElement::new(vec![(x, y), (x + 16, y)], color));
            chart.draw_series(data.iter().map(|&p| Circle::new(p, 3, color.filled()))).map_err(|e| draw(&e))?;
        }
        chart.configure_series_labels().background_style(WHITE).border_style(BLACK).draw().map_err(|e| draw(&e))?;
        root.present().map_err(|e| draw(&e))?;
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn config_round_trip_and_validation() {
        let text = "[spectrum]\nkind=quadratic\nn=12\n[run]\nhorizons=0.5, 1\nindices=1,2\n[precision]\ndigits=40\n";
        let c = RunConfig::parse(text, None).unwrap();
        assert_eq!(c.horizons, vec![0.5, 1.0]);
        assert_eq!(c.indices, vec![1, 2]);
        assert_eq!(c.precision.working_digits, 40);
        assert!(matches!(RunConfig::parse("[run]\nindices=\n", None), Err(Error::Config(_))));
        assert!(matches!(RunConfig::parse("[run]\nhorizons=-1\n", None), Err(Error::Config(_))));
        assert!(matches!(RunConfig::parse("[bogus]\nx=1\n", None), Err(Error::Config(_))));
        assert!(matches!(RunConfig::parse("[run]\nindices=1\nfoo=2\n", None), Err(Error::Config(_))));
    }

    #[test]
    fn sci_formatting() {
        assert_eq!(sci(1.0), "1.0000000000000000e0");
        assert_eq!(sci_from_ln(0.0), "1.0000000000000000e0");
        assert!(sci_from_ln(2000.0).ends_with("e868"));
    }

    #[test]
    fn sweep_axis_names() {
        for a in [SweepAxis::Horizon, SweepAxis::Scale, SweepAxis::Truncation, SweepAxis::Index] {
            assert_eq!(SweepAxis::parse(a.name()).unwrap(), a);
        }
    }
}
