//! Python module `rbl`: thin wrappers over `rbl_core`.

use num_complex::Complex64;
use pyo3::exceptions::{PyRuntimeError, PyValueError};
use pyo3::prelude::*;
use pyo3::types::PyDict;
use rbl_core::bounds::{self, SatelliteMarking};
use rbl_core::dynamics::{self, RotationNumber};
use rbl_core::extremal::{self, Alpha};
use rbl_core::lavaurs::{self, LavaursModel};
use rbl_core::modulus::{self, AnnularDomain, Disk};
use rbl_core::{hyperbolic, specfun, Error};
use std::sync::OnceLock;

fn err(e: Error) -> PyErr {
    match e {
        Error::Domain(_) | Error::Precondition(_) | Error::Usage(_) | Error::DegenerateDomain(_) | Error::DomainNotNested(_) => PyValueError::new_err(e.to_string()),
        _ => PyRuntimeError::new_err(e.to_string()),
    }
}

macro_rules! scalar {
    ($name:ident, $f:path) => {
        #[pyfunction]
        fn $name(x: f64) -> PyResult<f64> {
            $f(x).map_err(err)
        }
    };
}

scalar!(tau, specfun::tau);
scalar!(tau_inv, specfun::tau_inv);
scalar!(tau_lower, specfun::tau_lower);
scalar!(tau_log_excess, specfun::tau_log_excess);
scalar!(psi, specfun::psi);
scalar!(psi_inv, specfun::psi_inv);
scalar!(grotzsch_mu, specfun::grotzsch_mu);
scalar!(ellip_k, specfun::ellip_k);

#[pyfunction]
fn main_bound(s: u64, d_star: u64) -> PyResult<f64> {
    bounds::main_bound(s, d_star).map_err(err)
}

#[pyfunction]
fn pc1_bound(s: u64, d_star: u64) -> PyResult<f64> {
    bounds::pc1_bound(s, d_star).map_err(err)
}

#[pyfunction]
fn static_bound(t: u64) -> PyResult<f64> {
    extremal::static_bound(t).map_err(err)
}

/// `(bound, holds)` for the packing inequality on `points`.
#[pyfunction]
fn pack_bound(points: Vec<Complex64>) -> PyResult<(f64, bool)> {
    extremal::pack_bound(&points).map_err(err)
}

#[pyclass(name = "MarkedPointSet", from_py_object)]
#[derive(Clone)]
struct PyMarked(extremal::MarkedPointSet);

#[pymethods]
impl PyMarked {
    /// `alpha=None` puts the base point at infinity.
    #[new]
    #[pyo3(signature = (satellites, alpha=None))]
    fn new(satellites: Vec<Complex64>, alpha: Option<Complex64>) -> PyResult<Self> {
        let a = alpha.map_or(Alpha::Infinity, Alpha::Finite);
        extremal::MarkedPointSet::new(a, satellites, None).map(PyMarked).map_err(err)
    }

    #[staticmethod]
    fn from_json(text: &str) -> PyResult<Self> {
        extremal::MarkedPointSet::from_json(text).map(PyMarked).map_err(err)
    }

    fn to_json(&self) -> String {
        self.0.to_json()
    }

    fn normalized(&self) -> PyResult<Self> {
        self.0.normalized().map(PyMarked).map_err(err)
    }

    #[getter]
    fn satellites(&self) -> Vec<Complex64> {
        self.0.satellites.clone()
    }

    #[getter]
    fn alpha(&self) -> Option<Complex64> {
        match self.0.alpha {
            Alpha::Finite(a) => Some(a),
            Alpha::Infinity => None,
        }
    }

    fn diameter(&self) -> PyResult<f64> {
        extremal::diameter(&self.0.satellites).map_err(err)
    }

    fn min_gap(&self) -> PyResult<f64> {
        extremal::min_gap(&self.0.satellites).map_err(err)
    }

    fn __len__(&self) -> usize {
        self.0.satellites.len()
    }
}

#[pyclass(name = "ModulusEstimate", get_all, skip_from_py_object)]
struct PyEstimate {
    value: f64,
    grid_h: f64,
    residual: f64,
    refinements: Vec<(f64, f64)>,
    lower_biased: bool,
    converged: bool,
}

#[pymethods]
impl PyEstimate {
    fn __repr__(&self) -> String {
        format!("ModulusEstimate(value={}, grid_h={}, lower_biased={})", self.value, self.grid_h, self.lower_biased)
    }

    fn __float__(&self) -> f64 {
        self.value
    }
}

impl From<modulus::ModulusEstimate> for PyEstimate {
    fn from(e: modulus::ModulusEstimate) -> Self {
        PyEstimate { value: e.value, grid_h: e.grid_h, residual: e.residual, refinements: e.refinements, lower_biased: e.lower_biased, converged: e.converged }
    }
}

fn solve(py: Python<'_>, d: AnnularDomain, grid: usize) -> PyResult<PyEstimate> {
    py.detach(|| modulus::compute_modulus(&d, grid)).map(PyEstimate::from).map_err(err)
}

/// Modulus of the annulus between two disks given as `(center, radius)`.
#[pyfunction]
#[pyo3(signature = (inner, outer, grid=256))]
fn disk_annulus_modulus(py: Python<'_>, inner: (Complex64, f64), outer: (Complex64, f64), grid: usize) -> PyResult<PyEstimate> {
    let d = modulus::disk_annulus(Disk::new(inner.0, inner.1), Disk::new(outer.0, outer.1)).map_err(err)?;
    solve(py, d, grid)
}

/// Modulus of an annular domain in the JSON layout read by the `modulus` command.
#[pyfunction]
#[pyo3(signature = (domain_json, grid=256))]
fn domain_modulus(py: Python<'_>, domain_json: &str, grid: usize) -> PyResult<PyEstimate> {
    let d = AnnularDomain::from_json(domain_json).map_err(err)?;
    solve(py, d, grid)
}

#[pyclass(name = "LengthBound", get_all, skip_from_py_object)]
struct PyLengthBound {
    s: f64,
    d_star: u64,
    modulus_bound: f64,
    length_lower: f64,
}

#[pymethods]
impl PyLengthBound {
    fn __repr__(&self) -> String {
        format!("LengthBound(s={}, d_star={}, modulus_bound={}, length_lower={})", self.s, self.d_star, self.modulus_bound, self.length_lower)
    }
}

#[pyfunction]
fn length_lower_bound(s: u64, d_star: u64) -> PyResult<PyLengthBound> {
    let b = hyperbolic::length_lower_bound(s, d_star).map_err(err)?;
    Ok(PyLengthBound { s: b.s, d_star: b.d_star, modulus_bound: b.modulus_bound, length_lower: b.length_lower })
}

/// `(psi_inv(length), pi/length)`.
#[pyfunction]
fn annulus_modulus_interval(length: f64) -> PyResult<(f64, f64)> {
    hyperbolic::annulus_modulus_interval(length).map_err(err)
}

#[pyclass(name = "PLRestriction", skip_from_py_object)]
struct PyRestriction(dynamics::PLRestriction);

#[pymethods]
impl PyRestriction {
    /// Restriction at the satellite center of rotation number `p/q`.
    #[staticmethod]
    fn satellite(py: Python<'_>, p: u32, q: u32) -> PyResult<Self> {
        let rot = RotationNumber::new(p, q).map_err(err)?;
        py.detach(|| {
            let c = dynamics::satellite_center(rot)?;
            dynamics::auto_restriction(c, rot)
        })
        .map(PyRestriction)
        .map_err(err)
    }

    #[staticmethod]
    fn from_json(text: &str) -> PyResult<Self> {
        dynamics::PLRestriction::from_json(text).map(PyRestriction).map_err(err)
    }

    fn to_json(&self) -> PyResult<String> {
        self.0.to_json().map_err(err)
    }

    #[getter]
    fn c(&self) -> Complex64 {
        self.0.c
    }

    #[getter]
    fn q(&self) -> u32 {
        self.0.q
    }

    #[getter]
    fn s(&self) -> u32 {
        self.0.s
    }

    #[getter]
    fn d_star(&self) -> u32 {
        self.0.d_star
    }

    #[getter]
    fn alpha(&self) -> Complex64 {
        self.0.alpha
    }

    #[getter]
    fn u_boundary(&self) -> Vec<Complex64> {
        self.0.u_boundary.clone()
    }

    #[getter]
    fn k_samples(&self) -> Vec<Complex64> {
        self.0.k_samples.clone()
    }

    fn auto_eps_fat(&self, grid: usize) -> f64 {
        self.0.auto_eps_fat(grid)
    }

    /// Measures the root annulus and compares it with the bound; returns a dict.
    #[pyo3(signature = (grid=512, eps_fat=None))]
    fn verify<'py>(&self, py: Python<'py>, grid: usize, eps_fat: Option<f64>) -> PyResult<Bound<'py, PyDict>> {
        let eps = eps_fat.unwrap_or_else(|| self.0.auto_eps_fat(grid));
        let r = py.detach(|| bounds::verify_main(&self.0, eps, grid)).map_err(err)?;
        report_dict(py, &r)
    }
}

fn report_dict<'py>(py: Python<'py>, r: &bounds::BoundReport) -> PyResult<Bound<'py, PyDict>> {
    let d = PyDict::new(py);
    d.set_item("case_id", &r.case_id)?;
    d.set_item("p", r.p)?;
    d.set_item("q", r.q)?;
    d.set_item("s", r.s)?;
    d.set_item("d_star", r.d_star)?;
    d.set_item("measured", r.measured.value)?;
    d.set_item("bound", r.bound)?;
    d.set_item("margin", r.margin)?;
    d.set_item("passed", r.passed)?;
    d.set_item("grid", r.grid)?;
    d.set_item("eps_fat", r.eps_fat)?;
    Ok(d)
}

/// Full satellite case `p/q` at the given grid; returns a dict.
#[pyfunction]
#[pyo3(signature = (p, q, grid=512))]
fn satellite_case<'py>(py: Python<'py>, p: u32, q: u32, grid: usize) -> PyResult<Bound<'py, PyDict>> {
    let rot = RotationNumber::new(p, q).map_err(err)?;
    let r = py.detach(|| bounds::satellite_case(rot, grid, None)).map_err(err)?;
    report_dict(py, &r)
}

/// Round-annulus check of the static bound for a satellite marking.
#[pyfunction]
fn verify_static_round<'py>(py: Python<'py>, alpha: Complex64, reps: Vec<Complex64>, w: Complex64) -> PyResult<Bound<'py, PyDict>> {
    let m = SatelliteMarking::new(alpha, reps, w).map_err(err)?;
    let (probe, bound) = bounds::verify_static_round(&m).map_err(err)?;
    let d = PyDict::new(py);
    d.set_item("index", probe.k)?;
    d.set_item("center", probe.center)?;
    d.set_item("r_in", probe.r_in)?;
    d.set_item("r_out", probe.r_out)?;
    d.set_item("modulus", probe.modulus)?;
    d.set_item("bound", bound)?;
    d.set_item("passed", probe.modulus < bound)?;
    Ok(d)
}

fn model() -> PyResult<&'static LavaursModel> {
    static M: OnceLock<Result<LavaursModel, String>> = OnceLock::new();
    M.get_or_init(|| LavaursModel::build().map_err(|e| e.to_string())).as_ref().map_err(|e| PyRuntimeError::new_err(e.clone()))
}

fn params() -> PyResult<&'static lavaurs::SigmaParams> {
    static P: OnceLock<Result<lavaurs::SigmaParams, String>> = OnceLock::new();
    let m = model()?;
    P.get_or_init(|| lavaurs::find_sigma_params(m).map_err(|e| e.to_string())).as_ref().map_err(|e| PyRuntimeError::new_err(e.clone()))
}

/// Parabolic model at a = -7/4 and the phases σ₀, σ_Ch; returns a dict.
#[pyfunction]
fn lavaurs_parameters(py: Python<'_>) -> PyResult<Bound<'_, PyDict>> {
    let m = model()?;
    let p = params()?;
    let d = PyDict::new(py);
    d.set_item("a", m.a)?;
    d.set_item("x0", m.x0)?;
    d.set_item("multiplier", m.multiplier)?;
    d.set_item("A", m.cap_a)?;
    d.set_item("B", m.cap_b)?;
    d.set_item("calibration", m.x_cal)?;
    d.set_item("sigma0", p.sigma0)?;
    d.set_item("sigma_ch", p.sigma_ch)?;
    d.set_item("beta_ch", p.beta_ch)?;
    d.set_item("q_ch", p.q_ch)?;
    d.set_item("sigma_star", lavaurs::default_sigma_star(p))?;
    Ok(d)
}

/// `g_σ(x)` on the attracting fundamental interval.
#[pyfunction]
fn lavaurs_g(sigma: f64, x: f64) -> PyResult<f64> {
    model()?.lavaurs_g(sigma, x).map_err(err)
}

/// Real parameter `a_N` whose return map approximates `G_σ*`; returns a dict.
#[pyfunction]
#[pyo3(signature = (n, sigma=None))]
fn approximate_parameter(py: Python<'_>, n: u32, sigma: Option<f64>) -> PyResult<Bound<'_, PyDict>> {
    let m = model()?;
    let s = match sigma {
        Some(s) => s,
        None => lavaurs::default_sigma_star(params()?),
    };
    let r = py.detach(|| lavaurs::approximate_parameter(m, s, n)).map_err(err)?;
    let d = PyDict::new(py);
    d.set_item("n", r.n)?;
    d.set_item("a_n", r.a_n)?;
    d.set_item("q_n", r.q_n)?;
    d.set_item("deviation", r.deviation)?;
    d.set_item("sigma_star", r.sigma_star)?;
    d.set_item("beta_n", r.beta_n)?;
    d.set_item("diam_l", r.diam_l)?;
    d.set_item("diam_l_star", r.diam_l_star)?;
    d.set_item("diam_ratio", r.diam_ratio())?;
    Ok(d)
}

#[pymodule]
fn rbl(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_function(wrap_pyfunction!(tau, m)?)?;
    m.add_function(wrap_pyfunction!(tau_inv, m)?)?;
    m.add_function(wrap_pyfunction!(tau_lower, m)?)?;
    m.add_function(wrap_pyfunction!(tau_log_excess, m)?)?;
    m.add_function(wrap_pyfunction!(psi, m)?)?;
    m.add_function(wrap_pyfunction!(psi_inv, m)?)?;
    m.add_function(wrap_pyfunction!(grotzsch_mu, m)?)?;
    m.add_function(wrap_pyfunction!(ellip_k, m)?)?;
    m.add_function(wrap_pyfunction!(main_bound, m)?)?;
    m.add_function(wrap_pyfunction!(pc1_bound, m)?)?;
    m.add_function(wrap_pyfunction!(static_bound, m)?)?;
    m.add_function(wrap_pyfunction!(pack_bound, m)?)?;
    m.add_function(wrap_pyfunction!(disk_annulus_modulus, m)?)?;
    m.add_function(wrap_pyfunction!(domain_modulus, m)?)?;
    m.add_function(wrap_pyfunction!(length_lower_bound, m)?)?;
    m.add_function(wrap_pyfunction!(annulus_modulus_interval, m)?)?;
    m.add_function(wrap_pyfunction!(satellite_case, m)?)?;
    m.add_function(wrap_pyfunction!(verify_static_round, m)?)?;
    m.add_function(wrap_pyfunction!(lavaurs_parameters, m)?)?;
    m.add_function(wrap_pyfunction!(lavaurs_g, m)?)?;
    m.add_function(wrap_pyfunction!(approximate_parameter, m)?)?;
    m.add_class::<PyMarked>()?;
    m.add_class::<PyEstimate>()?;
    m.add_class::<PyLengthBound>()?;
    m.add_class::<PyRestriction>()?;
    m.add("__version__", env!("CARGO_PKG_VERSION"))?;
    Ok(())
}
