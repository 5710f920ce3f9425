//! Python bindings for `lmar-core`.

use lmar_core::experiments::{run_experiment_with_threads, theory_report, ExperimentConfig};
use lmar_core::gaussian_sim::sample_noise;
use lmar_core::rng::derive_seed as core_derive_seed;
use lmar_core::{
    generate_x_path, generate_y_path, Ar1Model, CovarianceModel, MomentContext, PathKind, SamplePath, TruncationPolicy,
};
use pyo3::create_exception;
use pyo3::exceptions::PyValueError;
use pyo3::prelude::*;

create_exception!(lmar, LmarError, PyValueError, "Raised for any error reported by the core library.");

fn err(e: lmar_core::LmarError) -> PyErr {
    LmarError::new_err(format!("{}: {e}", e.name()))
}

fn json_to_py<'py, T: serde::Serialize>(py: Python<'py>, value: &T) -> PyResult<Bound<'py, PyAny>> {
    let text = serde_json::to_string(value).map_err(|e| LmarError::new_err(e.to_string()))?;
    py.import("json")?.call_method1("loads", (text,))
}

/// Stationary noise model: `CovarianceModel("fgn:0.7")`, `"arfima:0.2"` or `"white"`.
#[pyclass(name = "CovarianceModel", module = "lmar", frozen, skip_from_py_object)]
#[derive(Clone)]
pub struct PyCovarianceModel {
    inner: CovarianceModel,
}

#[pymethods]
impl PyCovarianceModel {
    #[new]
    fn new(tag: &str) -> PyResult<Self> {
        Ok(Self {
            inner: tag.parse().map_err(err)?,
        })
    }

    #[staticmethod]
    fn fgn(hurst: f64) -> PyResult<Self> {
        Ok(Self {
            inner: CovarianceModel::fgn(hurst).map_err(err)?,
        })
    }

    #[staticmethod]
    fn arfima(d: f64) -> PyResult<Self> {
        Ok(Self {
            inner: CovarianceModel::arfima(d).map_err(err)?,
        })
    }

    #[staticmethod]
    fn white() -> Self {
        Self {
            inner: CovarianceModel::white_noise(),
        }
    }

    #[getter]
    fn hurst(&self) -> Option<f64> {
        self.inner.hurst()
    }

    #[getter]
    fn tag(&self) -> String {
        self.inner.tag()
    }

    fn rho(&self, k: i64) -> f64 {
        self.inner.rho(k)
    }

    /// `rho(0), ..., rho(n - 1)`.
    fn autocovariances(&self, n: usize) -> Vec<f64> {
        self.inner.autocovariances(n)
    }

    /// One path of the noise alone.
    #[pyo3(signature = (n, seed = 0))]
    fn simulate(&self, py: Python<'_>, n: usize, seed: u64) -> PyResult<Vec<f64>> {
        let model = &self.inner;
        let path = py.detach(|| sample_noise(model, n, seed)).map_err(err)?;
        Ok(path.values)
    }

    fn __repr__(&self) -> String {
        format!("CovarianceModel('{}')", self.inner.tag())
    }
}

fn model_arg(model: &Bound<'_, PyAny>) -> PyResult<CovarianceModel> {
    if let Ok(m) = model.cast::<PyCovarianceModel>() {
        return Ok(m.get().inner.clone());
    }
    let tag: String = model.extract()?;
    tag.parse().map_err(err)
}

/// AR(1) model `X_t = theta X_{t-1} + xi_t` with its moment quantities.
#[pyclass(name = "Ar1", module = "lmar", frozen)]
pub struct PyAr1 {
    ctx: MomentContext,
}

#[pymethods]
impl PyAr1 {
    /// `model` is a `CovarianceModel` or its tag string.
    #[new]
    fn new(theta: f64, model: &Bound<'_, PyAny>) -> PyResult<Self> {
        let noise = model_arg(model)?;
        let ar = Ar1Model::new(theta, noise).map_err(err)?;
        Ok(Self {
            ctx: MomentContext::new(ar, TruncationPolicy::default()).map_err(err)?,
        })
    }

    #[getter]
    fn theta(&self) -> f64 {
        self.ctx.theta()
    }

    #[getter]
    fn model(&self) -> PyCovarianceModel {
        PyCovarianceModel {
            inner: self.ctx.noise().clone(),
        }
    }

    /// `f(theta)`; the model's own theta when omitted.
    #[pyo3(signature = (theta = None))]
    fn f(&self, theta: Option<f64>) -> PyResult<f64> {
        match theta {
            None => Ok(self.ctx.f_value()),
            Some(t) => self.ctx.f_theta(t).map_err(err),
        }
    }

    #[pyo3(signature = (theta = None))]
    fn f_prime(&self, theta: Option<f64>) -> PyResult<f64> {
        match theta {
            None => Ok(self.ctx.f_prime_value()),
            Some(t) => self.ctx.f_prime(t).map_err(err),
        }
    }

    /// Autocovariance of the stationary solution at lag `k`.
    fn r(&self, k: i64) -> f64 {
        self.ctx.r_cov(k)
    }

    fn sigma_h2(&self, py: Python<'_>) -> PyResult<f64> {
        py.detach(|| self.ctx.sigma_h2()).map_err(err)
    }

    fn v_n2(&self, n: usize) -> PyResult<f64> {
        self.ctx.v_n2(n).map_err(err)
    }

    fn f_inverse(&self, y: f64) -> PyResult<f64> {
        self.ctx.f_inverse(y).map_err(err)
    }

    /// `kind` is `"x"` (started at zero), `"y"` (stationary) or `"noise"`.
    #[pyo3(signature = (n, seed = 0, kind = "x"))]
    fn simulate(&self, py: Python<'_>, n: usize, seed: u64, kind: &str) -> PyResult<Vec<f64>> {
        let model = self.ctx.model();
        let path = py
            .detach(|| match kind {
                "x" => generate_x_path(model, n, seed),
                "y" => generate_y_path(model, n, seed),
                "noise" => sample_noise(model.noise(), n, seed),
                other => Err(lmar_core::LmarError::Domain(format!("unknown path kind `{other}`"))),
            })
            .map_err(err)?;
        Ok(path.values)
    }

    /// Second-moment estimate of theta from an observed path.
    fn estimate(&self, x: Vec<f64>) -> PyResult<f64> {
        let path = SamplePath::new(x, 0, self.ctx.model().tag(), PathKind::Ar1).map_err(err)?;
        self.ctx.estimate_theta(&path).map_err(err)
    }

    /// `sqrt(n) f'(theta) (theta_hat - theta) / sigma_H`.
    fn normalized_error(&self, theta_hat: f64, n: usize) -> PyResult<f64> {
        lmar_core::normalized_error(theta_hat, self.ctx.theta(), n, &self.ctx).map_err(err)
    }

    fn dtv_bound(&self, n: usize) -> PyResult<f64> {
        lmar_core::dtv_fourth_moment_bound(&self.ctx, n).map_err(err)
    }

    /// Theory report as a dict.
    #[pyo3(signature = (n_grid, epsilon = 0.01))]
    fn theory<'py>(&self, py: Python<'py>, n_grid: Vec<usize>, epsilon: f64) -> PyResult<Bound<'py, PyAny>> {
        let report = py.detach(|| theory_report(&self.ctx, &n_grid, epsilon)).map_err(err)?;
        json_to_py(py, &report)
    }

    fn __repr__(&self) -> String {
        format!("Ar1({})", self.ctx.model().tag())
    }
}

#[pyfunction]
fn berry_esseen_rate(hurst: f64, n: usize, epsilon: f64) -> PyResult<f64> {
    lmar_core::berry_esseen_rate(hurst, n, epsilon).map_err(err)
}

#[pyfunction]
fn duality_constant(hurst: f64) -> PyResult<f64> {
    lmar_core::duality_constant(hurst).map_err(err)
}

/// Kolmogorov distance between the empirical CDF of `samples` and Phi.
#[pyfunction]
fn ks_distance(samples: Vec<f64>) -> PyResult<f64> {
    lmar_core::ks_distance(&samples).map_err(err)
}

/// `(ln n)^-1 sum_k k^-1 1{g_k <= z}` over `g_1..g_n`.
#[pyfunction]
fn asclt_log_average(g: Vec<f64>, z: f64) -> PyResult<f64> {
    lmar_core::asclt_log_average(&g, z).map_err(err)
}

#[pyfunction]
fn derive_seed(base: u64, n: u64, replicate: u64) -> u64 {
    core_derive_seed(base, n, replicate)
}

/// Runs an experiment from its JSON config and returns the full result as a dict.
#[pyfunction]
#[pyo3(signature = (config_json, threads = None))]
fn run_experiment<'py>(py: Python<'py>, config_json: &str, threads: Option<usize>) -> PyResult<Bound<'py, PyAny>> {
    let config = ExperimentConfig::from_json(config_json).map_err(err)?;
    let result = py.detach(|| run_experiment_with_threads(&config, threads)).map_err(err)?;
    json_to_py(py, &result)
}

#[pymodule]
fn lmar(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add("LmarError", m.py().get_type::<LmarError>())?;
    m.add_class::<PyCovarianceModel>()?;
    m.add_class::<PyAr1>()?;
    m.add_function(wrap_pyfunction!(berry_esseen_rate, m)?)?;
    m.add_function(wrap_pyfunction!(duality_constant, m)?)?;
    m.add_function(wrap_pyfunction!(ks_distance, m)?)?;
    m.add_function(wrap_pyfunction!(asclt_log_average, m)?)?;
    m.add_function(wrap_pyfunction!(derive_seed, m)?)?;
    m.add_function(wrap_pyfunction!(run_experiment, m)?)?;
    Ok(())
}
