//! Python bindings. Magnitudes that may overflow a double are returned as natural logs.

use pyo3::exceptions::{PyRuntimeError, PyValueError};
use pyo3::prelude::*;

use biortho::counting;
use biortho::gram;
use biortho::guichal;
use biortho::sai;
use biortho::spectra;
use biortho::{Error, PrecisionContext};

fn to_py(e: Error) -> PyErr {
    match e {
        Error::InvalidParameter(_)
        | Error::Config(_)
        | Error::NotMonotone { .. }
        | Error::TooShort { .. }
        | Error::DuplicateLambda { .. }
        | Error::ZeroLambda => PyValueError::new_err(e.to_string()),
        _ => PyRuntimeError::new_err(e.to_string()),
    }
}

fn ctx(digits: u32, tolerance: f64) -> PyResult<PrecisionContext> {
    PrecisionContext::new(digits, tolerance, 3, 2).map_err(to_py)
}

#[pyclass(name = "Spectrum", module = "biortho_py")]
#[derive(Clone)]
struct PySpectrum {
    inner: spectra::Spectrum,
}

#[pymethods]
impl PySpectrum {
    #[new]
    fn new(values: Vec<f64>) -> PyResult<Self> {
        Ok(PySpectrum { inner: spectra::Spectrum::from_values(values).map_err(to_py)? })
    }

    /// `r n^2 + b n + c`, `n = 1..=n_terms`.
    #[staticmethod]
    #[pyo3(signature = (n_terms, r=1.0, b=0.0, c=0.0))]
    fn quadratic(n_terms: usize, r: f64, b: f64, c: f64) -> PyResult<Self> {
        Ok(PySpectrum { inner: spectra::gen_quadratic(r, b, c, n_terms).map_err(to_py)? })
    }

    #[staticmethod]
    #[pyo3(signature = (n_terms, alpha, scale=1.0))]
    fn bessel(n_terms: usize, alpha: f64, scale: f64) -> PyResult<Self> {
        Ok(PySpectrum { inner: spectra::gen_bessel_like(alpha, scale, n_terms).map_err(to_py)? })
    }

    #[staticmethod]
    fn read(path: &str) -> PyResult<Self> {
        Ok(PySpectrum { inner: spectra::Spectrum::read_file(path).map_err(to_py)? })
    }

    fn values(&self) -> Vec<f64> {
        self.inner.values().to_vec()
    }

    fn __len__(&self) -> usize {
        self.inner.truncation_length()
    }

    /// 1-based.
    fn __getitem__(&self, n: usize) -> PyResult<f64> {
        if n == 0 || n > self.inner.truncation_length() {
            return Err(pyo3::exceptions::PyIndexError::new_err(format!("index {n} outside 1..={}", self.inner.truncation_length())));
        }
        Ok(self.inner.lambda(n))
    }

    fn truncate(&self, n: usize) -> PyResult<Self> {
        Ok(PySpectrum { inner: self.inner.truncate(n).map_err(to_py)? })
    }

    fn gaps(&self, n_star: usize) -> PyResult<PyGapProfile> {
        Ok(PyGapProfile { inner: spectra::analyze_gaps(&self.inner, n_star).map_err(to_py)? })
    }

    fn __repr__(&self) -> String {
        format!("Spectrum(N={})", self.inner.truncation_length())
    }
}

#[pyclass(name = "GapProfile", module = "biortho_py", frozen)]
#[derive(Clone)]
struct PyGapProfile {
    inner: spectra::GapProfile,
}

#[pymethods]
impl PyGapProfile {
    #[getter]
    fn gamma_min(&self) -> f64 {
        self.inner.gamma_min
    }
    #[getter]
    fn gamma_max(&self) -> f64 {
        self.inner.gamma_max
    }
    #[getter]
    fn gamma_min_star(&self) -> f64 {
        self.inner.gamma_min_star
    }
    #[getter]
    fn gamma_max_star(&self) -> f64 {
        self.inner.gamma_max_star
    }
    #[getter]
    fn n_star(&self) -> usize {
        self.inner.n_star_upper
    }
    #[getter]
    fn m_star(&self) -> f64 {
        self.inner.m_star
    }

    fn __repr__(&self) -> String {
        let p = &self.inner;
        format!(
            "GapProfile(gamma_min={}, gamma_max={}, gamma_min_star={}, gamma_max_star={}, n_star={})",
            p.gamma_min, p.gamma_max, p.gamma_min_star, p.gamma_max_star, p.n_star_upper
        )
    }
}

#[pyclass(name = "Calibration", module = "biortho_py", frozen)]
#[derive(Clone)]
struct PyCalibration {
    inner: sai::CalibrationConstants,
}

#[pymethods]
impl PyCalibration {
    #[staticmethod]
    fn read(path: &str) -> PyResult<Self> {
        Ok(PyCalibration { inner: sai::CalibrationConstants::read_file(path).map_err(to_py)? })
    }

    #[staticmethod]
    fn from_text(text: &str) -> PyResult<Self> {
        Ok(PyCalibration { inner: sai::CalibrationConstants::from_text(text).map_err(to_py)? })
    }

    fn to_text(&self) -> String {
        self.inner.to_text()
    }

    #[getter]
    fn theta3(&self) -> f64 {
        self.inner.theta3
    }
    #[getter]
    fn c_u_growth(&self) -> f64 {
        self.inner.c_u_growth
    }
    #[getter]
    fn c_exponent(&self) -> f64 {
        self.inner.c_exponent
    }
}

/// `(ln d, digits used, residual)` for the distance from `e^{-lambda_m t}` to the others.
#[pyfunction]
#[pyo3(signature = (s, t, m, digits=50, tolerance=1e-20))]
fn distance(py: Python<'_>, s: &PySpectrum, t: f64, m: usize, digits: u32, tolerance: f64) -> PyResult<(f64, u32, f64)> {
    let c = ctx(digits, tolerance)?;
    let r = py.allow_threads(|| gram::distance(&s.inner, t, m, &c)).map_err(to_py)?;
    Ok((r.d.ln_f64(), r.precision_used, r.residual))
}

/// `ln(e^{-lambda_m t}/d)`.
#[pyfunction]
#[pyo3(signature = (s, t, m, digits=50, tolerance=1e-20))]
fn minimal_norm_growing(py: Python<'_>, s: &PySpectrum, t: f64, m: usize, digits: u32, tolerance: f64) -> PyResult<f64> {
    let c = ctx(digits, tolerance)?;
    Ok(py.allow_threads(|| gram::minimal_norm_growing(&s.inner, t, m, &c)).map_err(to_py)?.ln_f64())
}

/// `(ln L, regime)` for the best explicit lower bound on `1/d` over `M = m..N-1`.
#[pyfunction]
fn best_lower_bound(py: Python<'_>, s: &PySpectrum, t: f64, m: usize) -> PyResult<(f64, String)> {
    let n = s.inner.truncation_length();
    let r = py.allow_threads(|| guichal::best_lower_bound(&s.inner, t, m, m..=n.saturating_sub(1))).map_err(to_py)?;
    Ok((r.ln(), r.regime.name().to_string()))
}

#[pyfunction]
fn lower_bound_two_gap(s: &PySpectrum, p: &PyGapProfile, t: f64, m: usize) -> PyResult<(f64, String)> {
    let r = guichal::lower_bound_two_gap(&s.inner, &p.inner, t, m).map_err(to_py)?;
    Ok((r.ln(), r.regime.name().to_string()))
}

#[pyfunction]
fn lower_bound_one_gap(t: f64, gamma_max: f64, lambda1: f64, m: usize) -> PyResult<f64> {
    Ok(guichal::lower_bound_one_gap(t, gamma_max, lambda1, m).map_err(to_py)?.ln())
}

#[pyfunction]
fn count_exact(s: &PySpectrum, n: usize, rho: f64) -> PyResult<usize> {
    counting::count_exact(&s.inner, n, rho).map_err(to_py)
}

/// `(bound, branch)` of the tightest applicable counting bound.
#[pyfunction]
fn count_bound(s: &PySpectrum, p: &PyGapProfile, n: usize, rho: f64) -> PyResult<(f64, String)> {
    let b = counting::count_bound(&s.inner, &p.inner, n, rho).map_err(to_py)?;
    Ok((b.value, b.branch.name().to_string()))
}

/// `ln ||sigma_m^+||` of the explicit family.
#[pyfunction]
#[pyo3(signature = (s, t, m, calibration, n_star=1))]
fn sai_norm(py: Python<'_>, s: &PySpectrum, t: f64, m: usize, calibration: &PyCalibration, n_star: usize) -> PyResult<f64> {
    let p = spectra::analyze_gaps(&s.inner, n_star).map_err(to_py)?;
    let params = sai::choose_params(t, p.gamma_min_star, &calibration.inner).map_err(to_py)?;
    let c = PrecisionContext::default();
    Ok(py.allow_threads(|| sai::sai_norm(&s.inner, &p, m, t, &params, &c)).map_err(to_py)?.ln_f64())
}

/// `ln` of the bound on `||sigma_m^+||^2`.
#[pyfunction]
#[pyo3(signature = (s, t, m, calibration, n_star=1))]
fn theoretical_b_star(s: &PySpectrum, t: f64, m: usize, calibration: &PyCalibration, n_star: usize) -> PyResult<f64> {
    let p = spectra::analyze_gaps(&s.inner, n_star).map_err(to_py)?;
    let lam_n = s.inner.lambda(p.n_star_upper);
    Ok(sai::theoretical_b_star(&p, s.inner.lambda(m), lam_n, t, &calibration.inner).map_err(to_py)?.ln_f64())
}

#[pymodule]
fn biortho_py(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<PySpectrum>()?;
    m.add_class::<PyGapProfile>()?;
    m.add_class::<PyCalibration>()?;
    m.add_function(wrap_pyfunction!(distance, m)?)?;
    m.add_function(wrap_pyfunction!(minimal_norm_growing, m)?)?;
    m.add_function(wrap_pyfunction!(best_lower_bound, m)?)?;
    m.add_function(wrap_pyfunction!(lower_bound_two_gap, m)?)?;
    m.add_function(wrap_pyfunction!(lower_bound_one_gap, m)?)?;
    m.add_function(wrap_pyfunction!(count_exact, m)?)?;
    m.add_function(wrap_pyfunction!(count_bound, m)?)?;
    m.add_function(wrap_pyfunction!(sai_norm, m)?)?;
    m.add_function(wrap_pyfunction!(theoretical_b_star, m)?)?;
    Ok(())
}
