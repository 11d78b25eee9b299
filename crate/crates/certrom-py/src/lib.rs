//! Python bindings for the certified reduced-order modeling toolkit.
//!
//! The module mirrors the Rust API at the granularity a notebook wants:
//! grids and velocity fields, full-order runs, POD bases and reduced
//! operators, certified reduced runs with their energy ledgers, error
//! certificates and bounds, transition indicators, coupling margins,
//! and the full report pipeline driven from a TOML string.

use nalgebra::DVector;
use pyo3::exceptions::PyValueError;
use pyo3::prelude::*;
use pyo3::types::{PyDict, PyList};
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;

use certrom::certify::{
    defect_scan as core_defect_scan, run_certified, CertStepConfig, CertifiedRun,
};
use certrom::estimate::{
    aposteriori_bound as core_aposteriori_bound, apriori_report, error_certificate,
    ConvectiveLipschitz, EpsilonSource, ErrorCertificate,
};
use certrom::fsi::{
    alpha_margin as core_alpha_margin, dt_margin as core_dt_margin, margin_report,
    robin_partitioned_run, FsiParams, Testbed, TestbedConfig,
};
use certrom::report::{emit, orchestrate, parse_config_str, StageSet};
use certrom::rom::{
    assemble_reduced, pod_basis as core_pod_basis, Closure, ReducedOperators, RegimeSet, RomBasis,
    SnapshotSet,
};
use certrom::spectral::{
    fom_run, solenoidal_basis as core_solenoidal_basis, taylor_green as core_taylor_green,
    FomRun, ForcingSpec, SpectralVelocity, StepConfig, TorusGrid,
};
use certrom::transition::{
    energy_barrier_check, enstrophy_history, enstrophy_threshold_check, linearized_operator,
    resolvent_norm as core_resolvent_norm, shear_constant, BarrierOutcome, EnstrophyOutcome,
    EnstrophyThresholdInput,
};

fn value_err<E: std::fmt::Display>(err: E) -> PyErr {
    PyValueError::new_err(err.to_string())
}

fn to_dvector(values: Vec<f64>) -> DVector<f64> {
    DVector::from_vec(values)
}

/// Fourier grid on the periodic square with its viscosity.
#[pyclass(module = "certrom_py", from_py_object)]
#[derive(Clone)]
struct Grid {
    inner: TorusGrid,
}

#[pymethods]
impl Grid {
    #[new]
    fn new(modes_per_dim: usize, viscosity: f64) -> PyResult<Self> {
        TorusGrid::new(modes_per_dim, viscosity)
            .map(|inner| Grid { inner })
            .map_err(value_err)
    }

    #[getter]
    fn modes_per_dim(&self) -> usize {
        self.inner.modes_per_dim()
    }

    #[getter]
    fn viscosity(&self) -> f64 {
        self.inner.viscosity()
    }

    #[getter]
    fn dealias_max_wavenumber(&self) -> i64 {
        self.inner.dealias_max_wavenumber()
    }

    fn __repr__(&self) -> String {
        format!(
            "Grid(modes_per_dim={}, viscosity={})",
            self.inner.modes_per_dim(),
            self.inner.viscosity()
        )
    }
}

/// Divergence-free velocity field in Fourier coefficients.
#[pyclass(module = "certrom_py", from_py_object)]
#[derive(Clone)]
struct Velocity {
    inner: SpectralVelocity,
}

#[pymethods]
impl Velocity {
    #[getter]
    fn modes_per_dim(&self) -> usize {
        self.inner.modes_per_dim()
    }

    fn l2_norm(&self) -> f64 {
        self.inner.l2_norm()
    }

    fn grad_norm(&self) -> f64 {
        self.inner.grad_norm()
    }

    fn dual_norm(&self) -> f64 {
        self.inner.dual_norm()
    }

    /// L2 norm of the scalar vorticity.
    fn enstrophy_norm(&self) -> f64 {
        self.inner.curl().l2_norm()
    }

    /// Complex coefficient of component `c` at wavevector `(k1, k2)`,
    /// returned as a `(re, im)` pair.
    fn coeff(&self, c: usize, k1: i64, k2: i64) -> (f64, f64) {
        let z = self.inner.coeff(c, k1, k2);
        (z.re, z.im)
    }

    fn add(&self, other: &Velocity) -> Velocity {
        Velocity {
            inner: self.inner.add(&other.inner),
        }
    }

    fn sub(&self, other: &Velocity) -> Velocity {
        Velocity {
            inner: self.inner.sub(&other.inner),
        }
    }

    fn scaled(&self, factor: f64) -> Velocity {
        Velocity {
            inner: self.inner.scaled(factor),
        }
    }

    fn inner_product(&self, other: &Velocity) -> f64 {
        self.inner.inner(&other.inner)
    }

    fn __repr__(&self) -> String {
        format!(
            "Velocity(modes_per_dim={}, l2_norm={:.6e})",
            self.inner.modes_per_dim(),
            self.inner.l2_norm()
        )
    }
}

/// Full-order trajectory with its time grid.
#[pyclass(module = "certrom_py")]
struct FomResult {
    inner: FomRun,
}

#[pymethods]
impl FomResult {
    #[getter]
    fn completed(&self) -> bool {
        self.inner.completed()
    }

    #[getter]
    fn times(&self) -> Vec<f64> {
        self.inner.times.clone()
    }

    #[getter]
    fn steps_completed(&self) -> usize {
        self.inner.states.len() - 1
    }

    #[getter]
    fn l2_history(&self) -> Vec<f64> {
        self.inner.states.iter().map(|u| u.l2_norm()).collect()
    }

    #[getter]
    fn enstrophy_history(&self) -> Vec<f64> {
        enstrophy_history(&self.inner.states)
    }

    fn state(&self, index: usize) -> PyResult<Velocity> {
        self.inner
            .states
            .get(index)
            .map(|u| Velocity { inner: u.clone() })
            .ok_or_else(|| value_err(format!("state index {index} out of range")))
    }

    fn final_state(&self) -> Velocity {
        Velocity {
            inner: self.inner.final_state().clone(),
        }
    }

    fn states(&self) -> Vec<Velocity> {
        self.inner
            .states
            .iter()
            .map(|u| Velocity { inner: u.clone() })
            .collect()
    }

    fn __len__(&self) -> usize {
        self.inner.states.len()
    }
}

/// Orthonormal reduced basis with its energy spectrum.
#[pyclass(module = "certrom_py")]
struct Basis {
    inner: RomBasis,
}

#[pymethods]
impl Basis {
    #[getter]
    fn dim(&self) -> usize {
        self.inner.dim()
    }

    #[getter]
    fn spectrum(&self) -> Vec<f64> {
        self.inner.spectrum().to_vec()
    }

    #[getter]
    fn tail_energy(&self) -> f64 {
        self.inner.tail_energy()
    }

    fn mode(&self, index: usize) -> PyResult<Velocity> {
        if index >= self.inner.dim() {
            return Err(value_err(format!("mode index {index} out of range")));
        }
        Ok(Velocity {
            inner: self.inner.mode(index).clone(),
        })
    }

    fn project(&self, field: &Velocity) -> Vec<f64> {
        self.inner.project(&field.inner).as_slice().to_vec()
    }

    fn lift(&self, coords: Vec<f64>) -> PyResult<Velocity> {
        self.inner
            .lift(&to_dvector(coords))
            .map(|inner| Velocity { inner })
            .map_err(value_err)
    }

    fn reconstruct(&self, field: &Velocity) -> Velocity {
        Velocity {
            inner: self.inner.reconstruct(&field.inner),
        }
    }
}

/// Galerkin-reduced operators: Stokes matrix, skew convection tensor,
/// projected forcing and closure.
#[pyclass(module = "certrom_py")]
struct ReducedModel {
    inner: ReducedOperators,
}

#[pymethods]
impl ReducedModel {
    #[getter]
    fn dim(&self) -> usize {
        self.inner.dim()
    }

    #[getter]
    fn viscosity(&self) -> f64 {
        self.inner.viscosity()
    }
}

/// Certified reduced trajectory: per-step energy ledger, structure
/// defect scan, and the cumulative bound.
#[pyclass(module = "certrom_py")]
struct CertifiedResult {
    inner: CertifiedRun,
}

#[pymethods]
impl CertifiedResult {
    #[getter]
    fn completed(&self) -> bool {
        self.inner.completed()
    }

    #[getter]
    fn steps_completed(&self) -> usize {
        self.inner.states.len() - 1
    }

    #[getter]
    fn all_certified(&self) -> bool {
        self.inner.ledger.entries.iter().all(|e| e.certified)
    }

    #[getter]
    fn bound_certified(&self) -> bool {
        self.inner.ledger.bound_certified
    }

    #[getter]
    fn bound_lhs(&self) -> f64 {
        self.inner.ledger.bound_lhs
    }

    #[getter]
    fn bound_rhs(&self) -> f64 {
        self.inner.ledger.bound_rhs
    }

    #[getter]
    fn sup_state_sq(&self) -> f64 {
        self.inner.ledger.sup_state_sq
    }

    #[getter]
    fn dissipation_sum(&self) -> f64 {
        self.inner.ledger.dissipation_sum
    }

    #[getter]
    fn young_epsilon(&self) -> f64 {
        self.inner.ledger.young_epsilon
    }

    #[getter]
    fn slacks(&self) -> Vec<f64> {
        self.inner
            .ledger
            .entries
            .iter()
            .map(|e| e.inequality_slack)
            .collect()
    }

    #[getter]
    fn min_slack(&self) -> f64 {
        self.inner
            .ledger
            .entries
            .iter()
            .map(|e| e.inequality_slack)
            .fold(f64::INFINITY, f64::min)
    }

    #[getter]
    fn skew_ok(&self) -> Option<bool> {
        self.inner.flags.skew_ok
    }

    #[getter]
    fn diss_ok(&self) -> Option<bool> {
        self.inner.flags.diss_ok
    }

    #[getter]
    fn regime_ok(&self) -> Option<bool> {
        self.inner.flags.regime_ok
    }

    #[getter]
    fn max_skew_defect(&self) -> f64 {
        self.inner.defects.max_skew_defect
    }

    #[getter]
    fn max_dissipation_defect(&self) -> f64 {
        self.inner.defects.max_dissipation_defect
    }

    #[getter]
    fn operator_digest(&self) -> String {
        self.inner.operator_digest.clone()
    }

    #[getter]
    fn times(&self) -> Vec<f64> {
        self.inner.times.clone()
    }

    #[getter]
    fn states(&self) -> Vec<Vec<f64>> {
        self.inner
            .states
            .iter()
            .map(|a| a.as_slice().to_vec())
            .collect()
    }
}

/// Residual-based error certificate with its exponential bound.
#[pyclass(module = "certrom_py")]
struct Certificate {
    inner: ErrorCertificate,
}

#[pymethods]
impl Certificate {
    #[getter]
    fn eta(&self) -> f64 {
        self.inner.eta
    }

    #[getter]
    fn residual_l2(&self) -> f64 {
        self.inner.residual_l2
    }

    #[getter]
    fn initial_mismatch(&self) -> f64 {
        self.inner.initial_mismatch
    }

    #[getter]
    fn lipschitz(&self) -> f64 {
        self.inner.lipschitz.value
    }

    #[getter]
    fn lipschitz_provenance(&self) -> String {
        self.inner.lipschitz.provenance.label().to_string()
    }

    #[getter]
    fn closure_lipschitz(&self) -> f64 {
        self.inner.closure_lipschitz
    }

    #[getter]
    fn gronwall_factor(&self) -> f64 {
        self.inner.gronwall_factor
    }

    #[getter]
    fn bound(&self) -> f64 {
        self.inner.bound
    }

    #[getter]
    fn true_error(&self) -> Option<f64> {
        self.inner.true_error
    }

    #[getter]
    fn effectivity(&self) -> Option<f64> {
        self.inner.effectivity
    }

    #[getter]
    fn viscosity(&self) -> f64 {
        self.inner.viscosity
    }

    #[getter]
    fn horizon(&self) -> f64 {
        self.inner.horizon
    }
}

/// Added-mass coefficient and both stability margins of the coupled
/// scheme at one parameter point.
#[pyclass(module = "certrom_py")]
struct MarginResult {
    c_am: f64,
    dt_max: f64,
    alpha_min: f64,
    margin_ok: bool,
    c_tr_h: f64,
    lambda_h: f64,
}

#[pymethods]
impl MarginResult {
    #[getter]
    fn c_am(&self) -> f64 {
        self.c_am
    }

    #[getter]
    fn dt_max(&self) -> f64 {
        self.dt_max
    }

    #[getter]
    fn alpha_min(&self) -> f64 {
        self.alpha_min
    }

    #[getter]
    fn margin_ok(&self) -> bool {
        self.margin_ok
    }

    #[getter]
    fn c_tr_h(&self) -> f64 {
        self.c_tr_h
    }

    #[getter]
    fn lambda_h(&self) -> f64 {
        self.lambda_h
    }

    fn __repr__(&self) -> String {
        format!(
            "MarginResult(c_am={:.6e}, dt_max={:.6e}, alpha_min={:.6e}, margin_ok={})",
            self.c_am, self.dt_max, self.alpha_min, self.margin_ok
        )
    }
}

/// Coupled-testbed energy run summary.
#[pyclass(module = "certrom_py")]
struct CoupledRunResult {
    completed: bool,
    certified: bool,
    steps_completed: usize,
    ledger_tol: f64,
    min_slack: f64,
    initial_energy: f64,
    final_energy: f64,
}

#[pymethods]
impl CoupledRunResult {
    #[getter]
    fn completed(&self) -> bool {
        self.completed
    }

    #[getter]
    fn certified(&self) -> bool {
        self.certified
    }

    #[getter]
    fn steps_completed(&self) -> usize {
        self.steps_completed
    }

    #[getter]
    fn ledger_tol(&self) -> f64 {
        self.ledger_tol
    }

    #[getter]
    fn min_slack(&self) -> f64 {
        self.min_slack
    }

    #[getter]
    fn initial_energy(&self) -> f64 {
        self.initial_energy
    }

    #[getter]
    fn final_energy(&self) -> f64 {
        self.final_energy
    }
}

#[pyfunction]
fn taylor_green(grid: &Grid, amplitude: f64) -> Velocity {
    Velocity {
        inner: core_taylor_green(&grid.inner, amplitude),
    }
}

#[pyfunction]
fn random_low_mode(grid: &Grid, max_wavenumber: i64, l2_norm: f64, seed: u64) -> Velocity {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    Velocity {
        inner: SpectralVelocity::random_low_mode(&grid.inner, max_wavenumber, l2_norm, &mut rng),
    }
}

/// Orthonormal basis of the resolved divergence-free space up to
/// `max_wavenumber`, as a list of velocity fields.
#[pyfunction]
fn solenoidal_basis(grid: &Grid, max_wavenumber: i64) -> PyResult<Vec<Velocity>> {
    core_solenoidal_basis(&grid.inner, max_wavenumber)
        .map(|fields| fields.into_iter().map(|inner| Velocity { inner }).collect())
        .map_err(value_err)
}

#[pyfunction]
#[pyo3(signature = (grid, u0, theta, dt, steps, solver_tol = 1e-10, max_iter = 200, forcing = None))]
#[allow(clippy::too_many_arguments)]
fn run_fom(
    grid: &Grid,
    u0: &Velocity,
    theta: f64,
    dt: f64,
    steps: usize,
    solver_tol: f64,
    max_iter: usize,
    forcing: Option<Velocity>,
) -> PyResult<FomResult> {
    let cfg = StepConfig::new(theta, dt, solver_tol, max_iter).map_err(value_err)?;
    let spec = match forcing {
        Some(field) => ForcingSpec::constant(&grid.inner, &field.inner).map_err(value_err)?,
        None => ForcingSpec::Zero,
    };
    Ok(FomResult {
        inner: fom_run(&grid.inner, &u0.inner, &spec, &cfg, steps),
    })
}

#[pyfunction]
#[pyo3(signature = (snapshots, dim, weights = None))]
fn pod_basis(snapshots: Vec<Velocity>, dim: usize, weights: Option<Vec<f64>>) -> PyResult<Basis> {
    let states: Vec<SpectralVelocity> = snapshots.into_iter().map(|v| v.inner).collect();
    let set = match weights {
        Some(w) => SnapshotSet::from_weighted_states(states, w).map_err(value_err)?,
        None => SnapshotSet::from_states(states).map_err(value_err)?,
    };
    core_pod_basis(&set, dim)
        .map(|inner| Basis { inner })
        .map_err(value_err)
}

#[pyfunction]
#[pyo3(signature = (grid, basis, closure = "none", alpha = 0.0, coefficient = 0.0, regime_radius = 1.0, forcing = None))]
#[allow(clippy::too_many_arguments)]
fn reduced_model(
    grid: &Grid,
    basis: &Basis,
    closure: &str,
    alpha: f64,
    coefficient: f64,
    regime_radius: f64,
    forcing: Option<Velocity>,
) -> PyResult<ReducedModel> {
    let closure = match closure {
        "none" => Closure::none(),
        "linear-damping" => Closure::linear_damping(alpha).map_err(value_err)?,
        "eddy-viscosity" => {
            Closure::eddy_viscosity(coefficient, regime_radius).map_err(value_err)?
        }
        other => {
            return Err(value_err(format!(
                "unknown closure kind {other:?}; expected \"none\", \"linear-damping\" or \"eddy-viscosity\""
            )))
        }
    };
    let spec = match forcing {
        Some(field) => ForcingSpec::constant(&grid.inner, &field.inner).map_err(value_err)?,
        None => ForcingSpec::Zero,
    };
    assemble_reduced(&grid.inner, &basis.inner, &spec, closure)
        .map(|inner| ReducedModel { inner })
        .map_err(value_err)
}

#[pyfunction]
#[pyo3(signature = (model, initial, regime_radius, theta, dt, steps, solver_tol = 1e-10, max_iter = 200, seed = 0))]
#[allow(clippy::too_many_arguments)]
fn certified_run(
    model: &ReducedModel,
    initial: Vec<f64>,
    regime_radius: f64,
    theta: f64,
    dt: f64,
    steps: usize,
    solver_tol: f64,
    max_iter: usize,
    seed: u64,
) -> PyResult<CertifiedResult> {
    let regime = RegimeSet::new(regime_radius).map_err(value_err)?;
    let cfg = CertStepConfig::new(model.inner.viscosity(), theta, dt, solver_tol, max_iter)
        .map_err(value_err)?;
    run_certified(&model.inner, &regime, &to_dvector(initial), &cfg, steps, seed)
        .map(|inner| CertifiedResult { inner })
        .map_err(value_err)
}

/// Scans the reduced operators for antisymmetry and closure-dissipation
/// defects over random regime states plus the supplied trajectory.
/// Returns `(max_skew_defect, max_dissipation_defect, skew_ok, diss_ok)`.
#[pyfunction]
#[pyo3(signature = (model, regime_radius, trajectory, seed = 0, threshold = 1e-10))]
fn defect_scan(
    model: &ReducedModel,
    regime_radius: f64,
    trajectory: Vec<Vec<f64>>,
    seed: u64,
    threshold: f64,
) -> PyResult<(f64, f64, bool, bool)> {
    let regime = RegimeSet::new(regime_radius).map_err(value_err)?;
    let states: Vec<DVector<f64>> = trajectory.into_iter().map(to_dvector).collect();
    let summary = core_defect_scan(&model.inner, &regime, &states, seed, f64::EPSILON, threshold);
    Ok((
        summary.max_skew_defect,
        summary.max_dissipation_defect,
        summary.skew_ok,
        summary.diss_ok,
    ))
}

#[pyfunction]
#[pyo3(signature = (grid, basis, model, result, u0, dt, lipschitz, reference = None))]
#[allow(clippy::too_many_arguments)]
fn certificate(
    grid: &Grid,
    basis: &Basis,
    model: &ReducedModel,
    result: &CertifiedResult,
    u0: &Velocity,
    dt: f64,
    lipschitz: f64,
    reference: Option<Vec<Velocity>>,
) -> PyResult<Certificate> {
    let lip = ConvectiveLipschitz::declared(lipschitz).map_err(value_err)?;
    let reference: Option<Vec<SpectralVelocity>> =
        reference.map(|fields| fields.into_iter().map(|v| v.inner).collect());
    let (cert, _) = error_certificate(
        &grid.inner,
        &basis.inner,
        &model.inner,
        &result.inner.states,
        dt,
        &u0.inner,
        lip,
        reference.as_deref(),
    )
    .map_err(value_err)?;
    Ok(Certificate { inner: cert })
}

/// Exponential error bound `sqrt(2/nu) * exp((l_n + l_c) * horizon / nu) * eta`.
#[pyfunction]
fn aposteriori_bound(eta: f64, l_n: f64, l_c: f64, nu: f64, horizon: f64) -> f64 {
    core_aposteriori_bound(eta, l_n, l_c, nu, horizon)
}

/// Rate-style bound from a projection error: returns `(c_pr, bound)`
/// with `c_pr = exp(l_reg * horizon / nu)`. `source` is `"pod-tail"`
/// or `"exact-reference"`.
#[pyfunction]
fn apriori_bound(
    epsilon_n: f64,
    source: &str,
    l_reg: f64,
    nu: f64,
    horizon: f64,
) -> PyResult<(f64, f64)> {
    let source = match source {
        "pod-tail" => EpsilonSource::PodTailSurrogate,
        "exact-reference" => EpsilonSource::ExactAgainstReference,
        other => {
            return Err(value_err(format!(
                "unknown epsilon source {other:?}; expected \"pod-tail\" or \"exact-reference\""
            )))
        }
    };
    let report = apriori_report(epsilon_n, source, l_reg, nu, horizon).map_err(value_err)?;
    Ok((report.c_pr, report.bound))
}

/// Energy-barrier check around a base flow: returns
/// `(stable, margin, shear_constant)`.
#[pyfunction]
fn energy_barrier(grid: &Grid, base: &Velocity, nu: f64) -> PyResult<(bool, f64, f64)> {
    let flow = shear_constant(&grid.inner, &base.inner).map_err(value_err)?;
    let verdict = energy_barrier_check(&flow, nu);
    Ok((
        verdict.outcome == BarrierOutcome::Stable,
        verdict.margin,
        verdict.gamma_u,
    ))
}

/// Forward-invariance check of a vorticity ball under sampled forcing
/// curl norms: returns `(outcome, r_min)` with outcome `"invariant"`
/// or `"not-decided"`.
#[pyfunction]
#[pyo3(signature = (nu, samples, radius, initial_enstrophy, epsilon = None, vorticity_poincare = 1.0))]
fn enstrophy_threshold(
    nu: f64,
    samples: Vec<(f64, f64)>,
    radius: f64,
    initial_enstrophy: f64,
    epsilon: Option<f64>,
    vorticity_poincare: f64,
) -> PyResult<(String, f64)> {
    let input = EnstrophyThresholdInput::new(2, nu, epsilon, vorticity_poincare, samples, radius)
        .map_err(value_err)?;
    let verdict = enstrophy_threshold_check(&input, initial_enstrophy);
    let outcome = match verdict.outcome {
        EnstrophyOutcome::Invariant => "invariant",
        EnstrophyOutcome::NotDecided => "not-decided",
    };
    Ok((outcome.to_string(), verdict.r_min))
}

/// Resolvent norm of the linearization around `base` at shift `sigma`.
#[pyfunction]
#[pyo3(signature = (grid, base, nu, sigma, truncation = 2))]
fn resolvent_norm(
    grid: &Grid,
    base: &Velocity,
    nu: f64,
    sigma: f64,
    truncation: i64,
) -> PyResult<f64> {
    let flow = shear_constant(&grid.inner, &base.inner).map_err(value_err)?;
    let operator = linearized_operator(&grid.inner, &flow, nu, truncation).map_err(value_err)?;
    core_resolvent_norm(&operator, sigma).map_err(value_err)
}

/// Largest stable time step `alpha / (2 c_am alpha + 1)`.
#[pyfunction]
fn dt_margin(alpha: f64, c_am: f64) -> f64 {
    core_dt_margin(alpha, c_am)
}

/// Smallest stabilizing Robin weight at step `dt`.
#[pyfunction]
fn alpha_margin(dt: f64, c_am: f64) -> f64 {
    core_alpha_margin(dt, c_am)
}

/// Trace constant and stiffness ratio measured from the assembled
/// testbed, as `(c_tr_h, lambda_h)`.
#[pyfunction]
#[pyo3(signature = (fluid_cells = 8, structure_cells = 8, elastic_modulus = 1.0))]
fn testbed_constants(
    fluid_cells: usize,
    structure_cells: usize,
    elastic_modulus: f64,
) -> PyResult<(f64, f64)> {
    let testbed = Testbed::assemble(
        TestbedConfig::new(fluid_cells, structure_cells, elastic_modulus).map_err(value_err)?,
    )
    .map_err(value_err)?;
    Ok((testbed.trace_constant(), testbed.stiffness_ratio()))
}

#[pyfunction]
#[pyo3(signature = (rho_f, rho_s, nu, alpha, dt, c_tr_h = None, lambda_h = None, fluid_cells = 8, structure_cells = 8, elastic_modulus = 1.0, kappa = 0.5))]
#[allow(clippy::too_many_arguments)]
fn fsi_margin(
    rho_f: f64,
    rho_s: f64,
    nu: f64,
    alpha: f64,
    dt: f64,
    c_tr_h: Option<f64>,
    lambda_h: Option<f64>,
    fluid_cells: usize,
    structure_cells: usize,
    elastic_modulus: f64,
    kappa: f64,
) -> PyResult<MarginResult> {
    let (c_tr, lambda) = match (c_tr_h, lambda_h) {
        (Some(c), Some(l)) => (c, l),
        _ => {
            let testbed = Testbed::assemble(
                TestbedConfig::new(fluid_cells, structure_cells, elastic_modulus)
                    .map_err(value_err)?,
            )
            .map_err(value_err)?;
            (
                c_tr_h.unwrap_or_else(|| testbed.trace_constant()),
                lambda_h.unwrap_or_else(|| testbed.stiffness_ratio()),
            )
        }
    };
    let params = FsiParams::new(
        rho_f,
        rho_s,
        nu,
        c_tr,
        lambda,
        alpha,
        dt,
        elastic_modulus,
        kappa,
    )
    .map_err(value_err)?;
    let report = margin_report(&params, (0.0, 0.0));
    Ok(MarginResult {
        c_am: report.c_am,
        dt_max: report.dt_max,
        alpha_min: report.alpha_min,
        margin_ok: report.margin_ok,
        c_tr_h: c_tr,
        lambda_h: lambda,
    })
}

#[pyfunction]
#[pyo3(signature = (rho_f, rho_s, nu, alpha, dt, steps, amplitude = 1.0, seed = 0, fluid_cells = 8, structure_cells = 8, elastic_modulus = 1.0, kappa = 0.5))]
#[allow(clippy::too_many_arguments)]
fn fsi_run(
    rho_f: f64,
    rho_s: f64,
    nu: f64,
    alpha: f64,
    dt: f64,
    steps: usize,
    amplitude: f64,
    seed: u64,
    fluid_cells: usize,
    structure_cells: usize,
    elastic_modulus: f64,
    kappa: f64,
) -> PyResult<CoupledRunResult> {
    let testbed = Testbed::assemble(
        TestbedConfig::new(fluid_cells, structure_cells, elastic_modulus).map_err(value_err)?,
    )
    .map_err(value_err)?;
    let params = FsiParams::new(
        rho_f,
        rho_s,
        nu,
        testbed.trace_constant(),
        testbed.stiffness_ratio(),
        alpha,
        dt,
        elastic_modulus,
        kappa,
    )
    .map_err(value_err)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let initial = testbed.random_state(amplitude, &mut rng);
    let run = robin_partitioned_run(&testbed, &params, &initial, None, steps).map_err(value_err)?;
    let min_slack = run
        .ledger
        .iter()
        .map(|e| e.inequality_slack)
        .fold(f64::INFINITY, f64::min);
    let certified = run
        .ledger
        .iter()
        .all(|e| e.inequality_slack >= -run.ledger_tol);
    let final_energy = run
        .ledger
        .last()
        .map(|e| e.energy.total())
        .unwrap_or_else(|| run.initial_energy.total());
    Ok(CoupledRunResult {
        completed: run.completed(),
        certified,
        steps_completed: run.ledger.len(),
        ledger_tol: run.ledger_tol,
        min_slack,
        initial_energy: run.initial_energy.total(),
        final_energy,
    })
}

/// Runs the full pipeline described by a TOML configuration string and
/// writes the report plus artifacts. Returns a dict with the scenario,
/// seed, flag table, overall pass verdict, and emitted paths.
#[pyfunction]
#[pyo3(signature = (config_toml, out_dir = None))]
fn run_report<'py>(
    py: Python<'py>,
    config_toml: &str,
    out_dir: Option<String>,
) -> PyResult<Bound<'py, PyDict>> {
    let mut config = parse_config_str(config_toml).map_err(value_err)?;
    if let Some(dir) = out_dir {
        config.output_dir = Some(std::path::PathBuf::from(dir));
    }
    let stages = StageSet::requested_by(&config);
    let report = orchestrate(&config, stages).map_err(value_err)?;
    let dir = config
        .output_dir
        .clone()
        .unwrap_or_else(|| std::path::PathBuf::from(format!("{}-out", config.scenario)));
    let paths = emit(&report, &dir).map_err(value_err)?;

    let flags = PyDict::new(py);
    flags.set_item("skew_ok", report.flags.skew_ok)?;
    flags.set_item("diss_ok", report.flags.diss_ok)?;
    flags.set_item("margin_ok", report.flags.margin_ok)?;
    flags.set_item("residual_computed", report.flags.residual_computed)?;
    flags.set_item("regime_ok", report.flags.regime_ok)?;

    let constants = PyDict::new(py);
    for record in &report.constants {
        let entry = PyDict::new(py);
        entry.set_item("value", record.value)?;
        entry.set_item("provenance", &record.provenance)?;
        constants.set_item(&record.name, entry)?;
    }

    let out = PyDict::new(py);
    out.set_item("scenario", &report.scenario)?;
    out.set_item("seed", report.seed)?;
    out.set_item("stages", &report.stages)?;
    out.set_item("flags", flags)?;
    out.set_item("constants", constants)?;
    out.set_item("all_flags_pass", report.all_flags_pass())?;
    let path_list = PyList::new(
        py,
        paths
            .iter()
            .map(|p| p.display().to_string())
            .collect::<Vec<_>>(),
    )?;
    out.set_item("paths", path_list)?;
    Ok(out)
}

/// Validates a TOML configuration string, returning the list of schema
/// violations (empty when the configuration is accepted).
#[pyfunction]
fn validate_config(config_toml: &str) -> Vec<String> {
    match parse_config_str(config_toml) {
        Ok(_) => Vec::new(),
        Err(err) => vec![err.to_string()],
    }
}

#[pymodule]
fn certrom_py(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add("__version__", env!("CARGO_PKG_VERSION"))?;
    m.add_class::<Grid>()?;
    m.add_class::<Velocity>()?;
    m.add_class::<FomResult>()?;
    m.add_class::<Basis>()?;
    m.add_class::<ReducedModel>()?;
    m.add_class::<CertifiedResult>()?;
    m.add_class::<Certificate>()?;
    m.add_class::<MarginResult>()?;
    m.add_class::<CoupledRunResult>()?;
    m.add_function(wrap_pyfunction!(taylor_green, m)?)?;
    m.add_function(wrap_pyfunction!(random_low_mode, m)?)?;
    m.add_function(wrap_pyfunction!(solenoidal_basis, m)?)?;
    m.add_function(wrap_pyfunction!(run_fom, m)?)?;
    m.add_function(wrap_pyfunction!(pod_basis, m)?)?;
    m.add_function(wrap_pyfunction!(reduced_model, m)?)?;
    m.add_function(wrap_pyfunction!(certified_run, m)?)?;
    m.add_function(wrap_pyfunction!(defect_scan, m)?)?;
    m.add_function(wrap_pyfunction!(certificate, m)?)?;
    m.add_function(wrap_pyfunction!(aposteriori_bound, m)?)?;
    m.add_function(wrap_pyfunction!(apriori_bound, m)?)?;
    m.add_function(wrap_pyfunction!(energy_barrier, m)?)?;
    m.add_function(wrap_pyfunction!(enstrophy_threshold, m)?)?;
    m.add_function(wrap_pyfunction!(resolvent_norm, m)?)?;
    m.add_function(wrap_pyfunction!(dt_margin, m)?)?;
    m.add_function(wrap_pyfunction!(alpha_margin, m)?)?;
    m.add_function(wrap_pyfunction!(testbed_constants, m)?)?;
    m.add_function(wrap_pyfunction!(fsi_margin, m)?)?;
    m.add_function(wrap_pyfunction!(fsi_run, m)?)?;
    m.add_function(wrap_pyfunction!(run_report, m)?)?;
    m.add_function(wrap_pyfunction!(validate_config, m)?)?;
    Ok(())
}
