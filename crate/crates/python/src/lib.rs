//! Python bindings: kernels, growth models, principal eigenvalues, steady
//! states, time evolution and critical speeds.

use pyo3::create_exception;
use pyo3::exceptions::PyException;
use pyo3::prelude::*;
use pyo3::types::PyDict;

use niche_core::critical_speed::{self, ScanPolicy, SpeedBracket};
use niche_core::environment::{GrowthModel, Profile1d};
use niche_core::evolution::{bump, long_time_classify, EvolutionOptions, EvolutionSetup, Frame, Thresholds};
use niche_core::kernel::{Kernel, Orientation};
use niche_core::operator::Grid;
use niche_core::spectral::{eigen_for_model, lambda_p_limit, EigenOptions, RSchedule};
use niche_core::steady_state::{solve_bounded, SolveOptions};

create_exception!(nichepy, NicheError, PyException);

fn err(e: impl std::fmt::Display) -> PyErr {
    NicheError::new_err(e.to_string())
}

fn orientation(minus: bool) -> Orientation {
    if minus {
        Orientation::Minus
    } else {
        Orientation::Plus
    }
}

#[pyclass(name = "Kernel", module = "nichepy", frozen, skip_from_py_object)]
#[derive(Clone)]
struct PyKernel {
    inner: Kernel,
}

#[pymethods]
impl PyKernel {
    #[staticmethod]
    #[pyo3(signature = (radius = 1.0))]
    fn uniform(radius: f64) -> PyResult<Self> {
        Ok(PyKernel {
            inner: Kernel::uniform(radius).map_err(err)?,
        })
    }

    #[staticmethod]
    #[pyo3(signature = (radius = 1.0))]
    fn tent(radius: f64) -> PyResult<Self> {
        Ok(PyKernel {
            inner: Kernel::tent(radius).map_err(err)?,
        })
    }

    #[staticmethod]
    #[pyo3(signature = (radius = 1.0))]
    fn cosine(radius: f64) -> PyResult<Self> {
        Ok(PyKernel {
            inner: Kernel::truncated_cosine(radius).map_err(err)?,
        })
    }

    #[staticmethod]
    #[pyo3(signature = (sigma = 1.0, sampling_radius = 8.0))]
    fn gaussian(sigma: f64, sampling_radius: f64) -> PyResult<Self> {
        Ok(PyKernel {
            inner: Kernel::gaussian(sigma, sampling_radius).map_err(err)?,
        })
    }

    #[staticmethod]
    #[pyo3(signature = (scale = 1.0, sampling_radius = 200.0))]
    fn fat_quartic(scale: f64, sampling_radius: f64) -> PyResult<Self> {
        Ok(PyKernel {
            inner: Kernel::fat_quartic(scale, sampling_radius).map_err(err)?,
        })
    }

    /// Piecewise-linear density through `(z, d)` pairs, renormalized to unit mass.
    #[staticmethod]
    fn tabulated(z: Vec<f64>, d: Vec<f64>) -> PyResult<Self> {
        Ok(PyKernel {
            inner: Kernel::tabulated(z, d).map_err(err)?,
        })
    }

    #[getter]
    fn name(&self) -> &'static str {
        self.inner.name()
    }

    fn density(&self, z: f64) -> f64 {
        self.inner.density(z)
    }

    fn mass(&self) -> f64 {
        self.inner.mass()
    }

    fn is_symmetric(&self) -> bool {
        self.inner.is_symmetric()
    }

    fn is_fat_tailed(&self) -> bool {
        self.inner.is_fat_tailed()
    }

    /// `∫ J(±z) e^{αz} dz`.
    #[pyo3(signature = (alpha, minus = false))]
    fn exponential_moment(&self, alpha: f64, minus: bool) -> PyResult<f64> {
        self.inner.exponential_moment(alpha, orientation(minus)).map_err(err)
    }

    /// `J_N(z) = ζ(z/N) J(z)` renormalized.
    fn truncate(&self, n: f64) -> PyResult<Self> {
        Ok(PyKernel {
            inner: self.inner.truncate(n).map_err(err)?,
        })
    }

    fn reflect(&self) -> Self {
        PyKernel {
            inner: self.inner.reflect(),
        }
    }

    fn __repr__(&self) -> String {
        format!("Kernel({})", self.inner.name())
    }
}

#[pyclass(name = "Growth", module = "nichepy", frozen, skip_from_py_object)]
#[derive(Clone)]
struct PyGrowth {
    inner: GrowthModel,
}

#[pymethods]
impl PyGrowth {
    /// Logistic `f = u (a(x) − b u)` with a plateau niche `a` and constant `b`.
    #[staticmethod]
    #[pyo3(signature = (inside = 1.0, outside = -1.0, half_width = 2.0, ramp = 1.0, b = 1.0))]
    fn niche(inside: f64, outside: f64, half_width: f64, ramp: f64, b: f64) -> PyResult<Self> {
        let a = Profile1d::niche(inside, outside, half_width, ramp);
        Ok(PyGrowth {
            inner: GrowthModel::logistic(a, Profile1d::Constant(b)).map_err(err)?,
        })
    }

    /// Logistic growth with constant coefficients.
    #[staticmethod]
    #[pyo3(signature = (a, b = 1.0))]
    fn constant(a: f64, b: f64) -> PyResult<Self> {
        Ok(PyGrowth {
            inner: GrowthModel::logistic(Profile1d::Constant(a), Profile1d::Constant(b)).map_err(err)?,
        })
    }

    #[staticmethod]
    fn plateau(amplitude: f64, q: f64, l: f64, l0: f64) -> PyResult<Self> {
        Ok(PyGrowth {
            inner: GrowthModel::plateau(amplitude, q, l, l0).map_err(err)?,
        })
    }

    fn a(&self, x: f64) -> f64 {
        self.inner.a(x)
    }

    fn f(&self, x: f64, s: f64) -> f64 {
        self.inner.f(x, s)
    }

    fn sup_a(&self) -> f64 {
        self.inner.sup_a()
    }

    fn saturation(&self) -> f64 {
        self.inner.saturation()
    }

    fn reflect(&self) -> Self {
        PyGrowth {
            inner: self.inner.reflect(),
        }
    }
}

fn grid(r: f64, h: f64) -> PyResult<Grid> {
    Grid::with_spacing(r, h).map_err(err)
}

/// `λ_p` on `[-R, R]` with spacing `h`. Returns `(λ_p, x, φ)`.
#[pyfunction]
#[pyo3(signature = (kernel, growth, c = 0.0, r = 16.0, h = 0.05, epsilon = 0.0, tol = 1e-10))]
fn principal_eigenvalue(
    kernel: &PyKernel,
    growth: &PyGrowth,
    c: f64,
    r: f64,
    h: f64,
    epsilon: f64,
    tol: f64,
) -> PyResult<(f64, Vec<f64>, Vec<f64>)> {
    let g = grid(r, h)?;
    let res = eigen_for_model(
        &kernel.inner,
        &growth.inner,
        c,
        epsilon,
        g,
        &EigenOptions::with_tol(tol),
    )
    .map_err(err)?;
    Ok((res.lambda_p, g.points(), res.eigenfunction))
}

/// `λ_p` extrapolated over a doubling domain schedule `r0, 2 r0, ...`.
#[pyfunction]
#[pyo3(signature = (kernel, growth, c = 0.0, r0 = 8.0, levels = 5, h = 0.05, r_tol = 1e-4, tol = 1e-10))]
#[allow(clippy::too_many_arguments)]
fn lambda_limit(
    kernel: &PyKernel,
    growth: &PyGrowth,
    c: f64,
    r0: f64,
    levels: usize,
    h: f64,
    r_tol: f64,
    tol: f64,
) -> PyResult<(f64, bool)> {
    let schedule = RSchedule::geometric(r0, levels, h);
    let lim = lambda_p_limit(
        &kernel.inner,
        &growth.inner,
        c,
        0.0,
        &schedule,
        r_tol,
        &EigenOptions::with_tol(tol),
    )
    .map_err(err)?;
    Ok((lim.result.lambda_p, lim.converged_in_r))
}

/// Positive steady state in the moving frame.
#[pyfunction]
#[pyo3(signature = (kernel, growth, c = 0.0, r = 16.0, h = 0.05, epsilon = 0.0, tol = 1e-9))]
#[allow(clippy::too_many_arguments)]
fn steady_state<'py>(
    py: Python<'py>,
    kernel: &PyKernel,
    growth: &PyGrowth,
    c: f64,
    r: f64,
    h: f64,
    epsilon: f64,
    tol: f64,
) -> PyResult<Bound<'py, PyDict>> {
    let opts = SolveOptions {
        tol,
        ..Default::default()
    };
    let res = solve_bounded(grid(r, h)?, &kernel.inner, &growth.inner, c, epsilon, &opts).map_err(err)?;
    let d = PyDict::new(py);
    d.set_item("x", res.x)?;
    d.set_item("u", res.u)?;
    d.set_item("residual", res.residual)?;
    d.set_item("classification", res.classification.to_string())?;
    d.set_item("lambda_p", res.lambda_p)?;
    d.set_item("l1_mass", res.l1_mass)?;
    Ok(d)
}

/// Integrates from a bump of height 0.5 on the niche and classifies the outcome.
#[pyfunction]
#[pyo3(signature = (kernel, growth, c = 0.0, horizon = 200.0, r = 16.0, h = 0.05, moving = true))]
#[allow(clippy::too_many_arguments)]
fn evolve<'py>(
    py: Python<'py>,
    kernel: &PyKernel,
    growth: &PyGrowth,
    c: f64,
    horizon: f64,
    r: f64,
    h: f64,
    moving: bool,
) -> PyResult<Bound<'py, PyDict>> {
    let g = grid(r, h)?;
    let setup = EvolutionSetup {
        kernel: &kernel.inner,
        growth: &growth.inner,
        c,
        grid: g,
        frame: if moving { Frame::Moving } else { Frame::Fixed },
    };
    let trace = setup
        .integrate(&bump(&g, 0.5, 2.0), horizon, &EvolutionOptions::default())
        .map_err(err)?;
    let outcome = long_time_classify(&trace, None, &Thresholds::default()).map_err(err)?;
    let d = PyDict::new(py);
    d.set_item("outcome", outcome.to_string())?;
    d.set_item("times", trace.times)?;
    d.set_item("sup_norms", trace.sup_norms)?;
    d.set_item("niche_minima", trace.niche_minima)?;
    d.set_item("x", trace.x)?;
    d.set_item("final_state", trace.final_state)?;
    d.set_item("dt", trace.dt)?;
    Ok(d)
}

fn bracket(b: SpeedBracket) -> (f64, f64) {
    (b.lo, b.hi)
}

/// Brackets `c*` and `c**` on both sides of zero.
#[pyfunction]
#[pyo3(signature = (kernel, growth, r0 = 8.0, levels = 5, h = 0.05, points_per_side = 21, bracket_tol = 1e-3, workers = 1))]
#[allow(clippy::too_many_arguments)]
fn find_speeds<'py>(
    py: Python<'py>,
    kernel: &PyKernel,
    growth: &PyGrowth,
    r0: f64,
    levels: usize,
    h: f64,
    points_per_side: usize,
    bracket_tol: f64,
    workers: usize,
) -> PyResult<Bound<'py, PyDict>> {
    let policy = ScanPolicy {
        r0,
        levels,
        h,
        points_per_side,
        bracket_tol,
        workers,
        ..ScanPolicy::default()
    };
    let rep = critical_speed::find_speeds(&kernel.inner, &growth.inner, &policy).map_err(err)?;
    let d = PyDict::new(py);
    d.set_item("c_star_plus", bracket(rep.c_star_plus))?;
    d.set_item("c_star_minus", bracket(rep.c_star_minus))?;
    d.set_item("c_dstar_plus", bracket(rep.c_dstar_plus))?;
    d.set_item("c_dstar_minus", bracket(rep.c_dstar_minus))?;
    let curve: Vec<(f64, f64)> = rep.lambda_curve.iter().map(|s| (s.c, s.lambda_p)).collect();
    d.set_item("lambda_curve", curve)?;
    d.set_item("monotone_sign_structure", rep.monotone_sign_structure)?;
    Ok(d)
}

/// Closed-form speed bounds; missing entries are `None`.
#[pyfunction]
fn speed_bounds<'py>(py: Python<'py>, kernel: &PyKernel, growth: &PyGrowth) -> PyResult<Bound<'py, PyDict>> {
    let b = critical_speed::speed_bounds(&kernel.inner, &growth.inner).map_err(err)?;
    let d = PyDict::new(py);
    d.set_item("c_alpha_plus", b.c_alpha_plus.map(|s| s.value))?;
    d.set_item("c_alpha_minus", b.c_alpha_minus.map(|s| s.value))?;
    d.set_item("symmetric_values", b.symmetric_values)?;
    d.set_item("c_hash", b.fat_tail.map(|f| f.c_hash))?;
    Ok(d)
}

#[pymodule]
fn nichepy(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<PyKernel>()?;
    m.add_class::<PyGrowth>()?;
    m.add("NicheError", m.py().get_type::<NicheError>())?;
    m.add_function(wrap_pyfunction!(principal_eigenvalue, m)?)?;
    m.add_function(wrap_pyfunction!(lambda_limit, m)?)?;
    m.add_function(wrap_pyfunction!(steady_state, m)?)?;
    m.add_function(wrap_pyfunction!(evolve, m)?)?;
    m.add_function(wrap_pyfunction!(find_speeds, m)?)?;
    m.add_function(wrap_pyfunction!(speed_bounds, m)?)?;
    Ok(())
}
