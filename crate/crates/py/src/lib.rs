//! Python bindings for the coupled plate/rod limit model: the scaling-regime
//! algebra, the closed-form energy densities, and the configuration-driven
//! solve / convergence-study pipelines.

use std::path::PathBuf;

use nalgebra::{DVector, Matrix2, Matrix3, Vector3};
use pyo3::exceptions::{PyRuntimeError, PyValueError};
use pyo3::prelude::*;

use platerod::bridge::{convergence_study, MollifiedTriple};
use platerod::cli::{solve_problem, Solved};
use platerod::config::parse_config_str;
use platerod::error::Error;
use platerod::fem::reconstruct::{FePlate, FeRod};
use platerod::limit::{
    junction_residual, plate_reduced_density, rod_correction, rod_reduced_density, PlateField,
    PlateState, RodField, RodState,
};
use platerod::model::{derive_regime, derived_moduli, svk_density, LameParams, ScalingRegime};

fn to_py(e: Error) -> PyErr {
    match &e {
        Error::Config(_) | Error::Domain(_) | Error::Regime(_) | Error::ForceData(_) => {
            PyValueError::new_err(e.to_string())
        }
        _ => PyRuntimeError::new_err(e.to_string()),
    }
}

fn lame(lambda: f64, mu: f64) -> PyResult<LameParams> {
    LameParams::new(lambda, mu).map_err(to_py)
}

fn base_dir_arg(explicit: Option<PathBuf>) -> PyResult<PathBuf> {
    match explicit {
        Some(p) => Ok(p),
        None => std::env::current_dir().map_err(|e| PyRuntimeError::new_err(e.to_string())),
    }
}

/// Thickness-scaling regime: exponents and derived small parameters for a
/// plate of half-thickness `delta = epsilon^theta` joined to a rod of
/// radius `epsilon`.
#[pyclass(frozen)]
struct Regime {
    inner: ScalingRegime,
}

#[pymethods]
impl Regime {
    #[new]
    fn new(kappa: f64, kappa_prime: f64, epsilon: f64) -> PyResult<Self> {
        Ok(Regime {
            inner: derive_regime(kappa, kappa_prime, epsilon).map_err(to_py)?,
        })
    }

    #[getter]
    fn kappa(&self) -> f64 {
        self.inner.kappa
    }
    #[getter]
    fn kappa_prime(&self) -> f64 {
        self.inner.kappa_prime
    }
    #[getter]
    fn epsilon(&self) -> f64 {
        self.inner.epsilon
    }
    #[getter]
    fn theta(&self) -> f64 {
        self.inner.theta
    }
    #[getter]
    fn eta(&self) -> f64 {
        self.inner.eta
    }
    #[getter]
    fn delta(&self) -> f64 {
        self.inner.delta
    }
    #[getter]
    fn q_eps(&self) -> f64 {
        self.inner.q_eps
    }

    /// `delta^(2 kappa - 1)`, the normalization of the 3D energy.
    fn energy_scale(&self) -> f64 {
        self.inner.energy_scale()
    }

    /// Whether the plate keeps its nonlinear membrane-slope coupling.
    fn vk_plate(&self) -> bool {
        self.inner.vk_plate()
    }

    /// Whether the rod keeps its nonlinear stretch correction.
    fn vk_rod(&self) -> bool {
        self.inner.vk_rod()
    }

    fn __repr__(&self) -> String {
        let r = &self.inner;
        format!(
            "Regime(kappa={}, kappa_prime={}, epsilon={}, theta={}, eta={}, delta={}, q_eps={})",
            r.kappa, r.kappa_prime, r.epsilon, r.theta, r.eta, r.delta, r.q_eps
        )
    }
}

/// St Venant-Kirchhoff energy density of a deformation gradient (3x3 rows).
#[pyfunction]
fn energy_density(f: [[f64; 3]; 3], lambda: f64, mu: f64) -> PyResult<f64> {
    let m = Matrix3::from_fn(|i, j| f[i][j]);
    Ok(svk_density(lame(lambda, mu)?, &m))
}

/// `(E, nu)`: Young modulus and Poisson ratio of a Lame pair.
#[pyfunction]
fn elastic_moduli(lambda: f64, mu: f64) -> PyResult<(f64, f64)> {
    Ok(derived_moduli(lame(lambda, mu)?))
}

/// Reduced plate energy density per midsurface area, from the deflection
/// Hessian and the membrane strain (2x2 rows, symmetric).
#[pyfunction]
fn plate_density(
    hess: [[f64; 2]; 2],
    membrane: [[f64; 2]; 2],
    lambda: f64,
    mu: f64,
) -> PyResult<f64> {
    let s = PlateState {
        hess: Matrix2::from_fn(|i, j| hess[i][j]),
        membrane: Matrix2::from_fn(|i, j| membrane[i][j]),
    };
    Ok(plate_reduced_density(lame(lambda, mu)?, &s))
}

/// Reduced rod energy density per unit length, from the bending curvatures
/// `(W1'', W2'')`, the stretch `W3'`, the twist rate `Q3'`, and — in the
/// coupled regime (`vk_rod=True`) — the displacement rates `(W1', W2', W3')`
/// and twist `Q3` feeding the quadratic stretch correction.
#[pyfunction]
#[pyo3(signature = (bend, stretch, twist_rate, lambda, mu, vk_rod=false, w_rates=[0.0, 0.0, 0.0], q3=0.0))]
#[allow(clippy::too_many_arguments)]
fn rod_density(
    bend: [f64; 2],
    stretch: f64,
    twist_rate: f64,
    lambda: f64,
    mu: f64,
    vk_rod: bool,
    w_rates: [f64; 3],
    q3: f64,
) -> PyResult<f64> {
    let dw = Vector3::from_column_slice(&w_rates);
    let s = RodState {
        bend,
        stretch,
        twist_rate,
        correction: rod_correction(vk_rod, &dw, q3),
    };
    Ok(rod_reduced_density(lame(lambda, mu)?, &s))
}

/// A minimized limit problem: the objective value, solver statistics, and
/// the plate/rod fields, sampled through the same finite-element
/// reconstruction the CLI uses.
#[pyclass(frozen)]
struct Solution {
    solved: Solved,
    full: DVector<f64>,
    objective_value: f64,
    iterations: usize,
}

#[pymethods]
impl Solution {
    /// Minimized energy (internal energy minus load work).
    #[getter]
    fn objective(&self) -> f64 {
        self.objective_value
    }

    /// Total Newton iterations across all continuation stages.
    #[getter]
    fn iterations(&self) -> usize {
        self.iterations
    }

    /// Number of continuation stages.
    #[getter]
    fn stages(&self) -> usize {
        self.solved.reports.len()
    }

    /// `(N(f_p), N(f_r))` force-magnitude norms of the load.
    #[getter]
    fn force_norms(&self) -> (f64, f64) {
        self.solved.force_norms
    }

    /// Midsurface displacement `(U1, U2, U3)` at a plate point.
    fn plate(&self, x1: f64, x2: f64) -> (f64, f64, f64) {
        let fe = FePlate::new(&self.solved.objective.disc, &self.full);
        let v = fe.value(x1, x2);
        (v[0], v[1], v[2])
    }

    /// Deflection slope `(dU3/dx1, dU3/dx2)` at a plate point.
    fn plate_slope(&self, x1: f64, x2: f64) -> (f64, f64) {
        let fe = FePlate::new(&self.solved.objective.disc, &self.full);
        let g = fe.gradient(x1, x2);
        (g[(2, 0)], g[(2, 1)])
    }

    /// Centerline displacement `(W1, W2, W3)` at a rod point.
    fn rod(&self, x3: f64) -> (f64, f64, f64) {
        let fe = FeRod::new(&self.solved.objective.disc, &self.full);
        let v = fe.value(x3);
        (v[0], v[1], v[2])
    }

    /// Torsion angle `Q3` at a rod point.
    fn rod_twist(&self, x3: f64) -> f64 {
        let fe = FeRod::new(&self.solved.objective.disc, &self.full);
        fe.twist(x3)
    }

    /// Worst violation of the junction conditions tying the two fields.
    fn junction_residual(&self) -> f64 {
        let plate = FePlate::new(&self.solved.objective.disc, &self.full);
        let rod = FeRod::new(&self.solved.objective.disc, &self.full);
        junction_residual(&plate, &rod)
    }

    fn __repr__(&self) -> String {
        format!(
            "Solution(objective={}, iterations={}, stages={})",
            self.objective_value,
            self.iterations,
            self.solved.reports.len()
        )
    }
}

/// One thickness of a convergence study.
#[pyclass(frozen, get_all)]
struct StudyRow {
    delta: f64,
    epsilon: f64,
    q_eps: f64,
    j3d_rescaled: f64,
    limit_j3: f64,
    gap: f64,
    gsv_plate_err: f64,
    gsv_rod_err: f64,
}

#[pymethods]
impl StudyRow {
    fn __repr__(&self) -> String {
        format!(
            "StudyRow(delta={}, j3d_rescaled={}, limit_j3={}, gap={})",
            self.delta, self.j3d_rescaled, self.limit_j3, self.gap
        )
    }
}

/// Minimize the limit energy described by a configuration document (same
/// schema as the CLI). Relative force-table paths resolve against
/// `base_dir` (default: the working directory).
#[pyfunction]
#[pyo3(signature = (config_text, base_dir=None))]
fn solve(config_text: &str, base_dir: Option<PathBuf>) -> PyResult<Solution> {
    let cfg = parse_config_str(config_text, &base_dir_arg(base_dir)?).map_err(to_py)?;
    let solved = solve_problem(&cfg).map_err(to_py)?;
    let full = solved.full();
    let objective_value = solved.objective.value(&solved.minimizer);
    let iterations = solved.reports.iter().map(|r| r.iterations).sum();
    Ok(Solution {
        solved,
        full,
        objective_value,
        iterations,
    })
}

/// Solve, mollify the minimizer, and run the rescaled-3D-energy convergence
/// study over `study.deltas`. Returns `(rows, warnings)`.
#[pyfunction]
#[pyo3(signature = (config_text, base_dir=None))]
fn study(config_text: &str, base_dir: Option<PathBuf>) -> PyResult<(Vec<StudyRow>, Vec<String>)> {
    let cfg = parse_config_str(config_text, &base_dir_arg(base_dir)?).map_err(to_py)?;
    let solved = solve_problem(&cfg).map_err(to_py)?;
    let full = solved.full();
    let plate = FePlate::new(&solved.objective.disc, &full);
    let rod = FeRod::new(&solved.objective.disc, &full);
    let triple = MollifiedTriple::new(
        &plate,
        &rod,
        &cfg.geometry,
        cfg.materials,
        solved.objective.vk_plate,
        solved.objective.vk_rod,
        cfg.warpings,
        cfg.mollification,
    )
    .map_err(to_py)?;
    let outcome = convergence_study(
        &triple,
        &cfg.forces,
        cfg.kappa,
        cfg.kappa_prime,
        &cfg.deltas,
        &cfg.resolution,
    )
    .map_err(to_py)?;
    let rows = outcome
        .rows
        .iter()
        .map(|r| StudyRow {
            delta: r.delta,
            epsilon: r.epsilon,
            q_eps: r.q_eps,
            j3d_rescaled: r.j3d_rescaled,
            limit_j3: r.limit_j3,
            gap: r.gap,
            gsv_plate_err: r.gsv_plate_err,
            gsv_rod_err: r.gsv_rod_err,
        })
        .collect();
    Ok((rows, outcome.warnings))
}

/// Validate a configuration document and echo it back with every default
/// filled in (the same `resolved.toml` the CLI persists).
#[pyfunction]
#[pyo3(signature = (config_text, base_dir=None))]
fn resolved_config(config_text: &str, base_dir: Option<PathBuf>) -> PyResult<String> {
    let cfg = parse_config_str(config_text, &base_dir_arg(base_dir)?).map_err(to_py)?;
    Ok(cfg.resolved_toml())
}

#[pymodule]
fn platerod_py(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<Regime>()?;
    m.add_class::<Solution>()?;
    m.add_class::<StudyRow>()?;
    m.add_function(wrap_pyfunction!(energy_density, m)?)?;
    m.add_function(wrap_pyfunction!(elastic_moduli, m)?)?;
    m.add_function(wrap_pyfunction!(plate_density, m)?)?;
    m.add_function(wrap_pyfunction!(rod_density, m)?)?;
    m.add_function(wrap_pyfunction!(solve, m)?)?;
    m.add_function(wrap_pyfunction!(study, m)?)?;
    m.add_function(wrap_pyfunction!(resolved_config, m)?)?;
    m.add("__version__", env!("CARGO_PKG_VERSION"))?;
    Ok(())
}
