//! Residual-based error certificates for reduced trajectories.
//!
//! The residual of a reduced trajectory against the full spectral
//! dynamics is realised on interior time nodes with a centered
//! difference quotient: at node `t_k` the defect is
//!
//! ```text
//! r_k = (u_{k+1} - u_{k-1}) / (2 dt) + nu A u_k + B(u_k, u_k)
//!       + C(u_k) - f_k
//! ```
//!
//! where every `u` is the lifted reduced state and `f_k` is the lifted
//! reduced forcing sample. Collocating the spatial terms at the stage
//! average instead would reproduce the time-stepping identity and
//! report only the nonlinear solver tolerance; the centered quotient
//! measures the distance to the continuous dynamics, which is what the
//! exponential error bound consumes.
//!
//! Dual norms are exact: after a Leray projection the Riesz map of the
//! divergence-free dual pairing is diagonal in Fourier space, so no
//! iterative solve is involved and the recorded solver tolerance is
//! zero. Time quadrature extends the interior-node trapezoid rule
//! constantly onto the two boundary strips, so the weights sum to the
//! full horizon.

use nalgebra::{Cholesky, DMatrix, DVector};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::rom::{ReducedOperators, RegimeSet, RomBasis, RomError};
use crate::spectral::{convection_apply, leray_project, skew_trilinear, SpectralVelocity, TorusGrid};

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

#[derive(Debug, Error)]
pub enum EstimateError {
    #[error("the centered residual needs at least three states, got {0}")]
    TooFewStates(usize),
    #[error("reduced state has dimension {got}, the basis has {expected}")]
    DimensionMismatch { expected: usize, got: usize },
    #[error("trajectory has {reduced} states but the reference has {reference}")]
    LengthMismatch { reduced: usize, reference: usize },
    #[error("basis resolution {basis} does not match grid resolution {grid}")]
    GridMismatch { basis: usize, grid: usize },
    #[error("time step must be finite and positive, got {0}")]
    InvalidTimeStep(f64),
    #[error("viscosity must be finite and positive, got {0}")]
    InvalidViscosity(f64),
    #[error("horizon must be finite and non-negative, got {0}")]
    InvalidHorizon(f64),
    #[error("Lipschitz constant must be finite and non-negative, got {0}")]
    InvalidLipschitz(f64),
    #[error("projection error must be finite and non-negative, got {0}")]
    InvalidProjectionError(f64),
    #[error("constant estimation needs at least one trial")]
    NoTrials,
    #[error("empty trajectory")]
    EmptyTrajectory,
    #[error("modal Gram matrix is not positive definite")]
    DegenerateGram,
    #[error(transparent)]
    Rom(#[from] RomError),
}

/// How a stability constant entered a certificate.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Provenance {
    /// Supplied by the caller and taken at face value.
    Declared,
    /// Sampled numerically; a lower envelope of the true constant, so
    /// certificates built on it are labelled accordingly.
    Estimated,
}

impl Provenance {
    pub fn label(&self) -> &'static str {
        match self {
            Provenance::Declared => "declared",
            Provenance::Estimated => "estimated",
        }
    }
}

/// Lipschitz constant of the convective term on the regime set,
/// together with its provenance.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct ConvectiveLipschitz {
    pub value: f64,
    pub provenance: Provenance,
}

impl ConvectiveLipschitz {
    /// Records a caller-supplied constant.
    pub fn declared(value: f64) -> Result<Self, EstimateError> {
        if !value.is_finite() || value < 0.0 {
            return Err(EstimateError::InvalidLipschitz(value));
        }
        Ok(ConvectiveLipschitz {
            value,
            provenance: Provenance::Declared,
        })
    }

    /// Samples the constant by maximising the skew form ratio
    /// `|b(e, u, w) + b(v, e, w)| / (|e| |w|_V)` over random pairs
    /// `u, v` drawn from the regime ball and random resolved test
    /// fields `w`. The running maximum is non-decreasing in the trial
    /// count for a fixed seed.
    pub fn estimated(
        grid: &TorusGrid,
        basis: &RomBasis,
        regime: &RegimeSet,
        trials: usize,
        seed: u64,
    ) -> Result<Self, EstimateError> {
        if trials == 0 {
            return Err(EstimateError::NoTrials);
        }
        check_basis_grid(basis, grid)?;
        let pair_seed = seed.wrapping_add(0x9E37_79B9_7F4A_7C15);
        let states = regime.sample_states(basis.dim(), 2 * trials, pair_seed);
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let kmax = grid.dealias_max_wavenumber();
        let mut value = 0.0f64;
        for trial in 0..trials {
            let u = basis.lift(&states[2 * trial])?;
            let v = basis.lift(&states[2 * trial + 1])?;
            let e = u.sub(&v);
            let w = SpectralVelocity::random_low_mode(grid, kmax, 1.0, &mut rng);
            let numerator = (skew_trilinear(grid, &e, &u, &w)
                + skew_trilinear(grid, &v, &e, &w))
            .abs();
            let denominator = e.l2_norm() * w.grad_norm();
            if denominator > 0.0 {
                value = value.max(numerator / denominator);
            }
        }
        Ok(ConvectiveLipschitz {
            value,
            provenance: Provenance::Estimated,
        })
    }
}

/// Dual-norm residual samples of a reduced trajectory on the interior
/// nodes of its step grid.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ResidualSeries {
    /// Interior node times, strictly inside `(0, horizon)`.
    pub times: Vec<f64>,
    /// Dual norm of the strong residual at each node.
    pub dual_norms: Vec<f64>,
    /// Step size of the trajectory the residual was sampled on.
    pub dt: f64,
    /// Full time window covered by the trajectory.
    pub horizon: f64,
    /// Quadrature rule used by [`ResidualSeries::l2_time_norm`].
    pub rule: String,
    /// Digest of the operator set the trajectory was stepped with.
    pub operator_digest: String,
    /// Tolerance of the Riesz solve behind the dual norms. The Fourier
    /// realisation is diagonal and exact, so this is zero.
    pub riesz_solver_tol: f64,
}

impl ResidualSeries {
    pub fn len(&self) -> usize {
        self.dual_norms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.dual_norms.is_empty()
    }

    /// Quadrature weights of the interior trapezoid rule extended
    /// constantly onto the boundary strips; they sum to the horizon.
    pub fn quadrature_weights(&self) -> Vec<f64> {
        let nodes = self.dual_norms.len();
        match nodes {
            0 => Vec::new(),
            1 => vec![self.horizon],
            _ => {
                let mut weights = vec![self.dt; nodes];
                weights[0] = 1.5 * self.dt;
                weights[nodes - 1] = 1.5 * self.dt;
                weights
            }
        }
    }

    /// Time quadrature of the squared dual norms, square-rooted.
    pub fn l2_time_norm(&self) -> f64 {
        self.dual_norms
            .iter()
            .zip(self.quadrature_weights())
            .map(|(r, w)| w * r * r)
            .sum::<f64>()
            .sqrt()
    }
}

fn check_basis_grid(basis: &RomBasis, grid: &TorusGrid) -> Result<(), EstimateError> {
    if basis.modes_per_dim() != grid.modes_per_dim() {
        return Err(EstimateError::GridMismatch {
            basis: basis.modes_per_dim(),
            grid: grid.modes_per_dim(),
        });
    }
    Ok(())
}

fn check_state_dims(basis: &RomBasis, states: &[DVector<f64>]) -> Result<(), EstimateError> {
    for state in states {
        if state.len() != basis.dim() {
            return Err(EstimateError::DimensionMismatch {
                expected: basis.dim(),
                got: state.len(),
            });
        }
    }
    Ok(())
}

/// Samples the strong residual of a reduced trajectory on the interior
/// nodes of its step grid and returns the dual norms.
///
/// The trajectory must hold the states of every step, `dt` apart; at
/// least three states are needed for one centered quotient.
pub fn residual_series(
    grid: &TorusGrid,
    basis: &RomBasis,
    ops: &ReducedOperators,
    states: &[DVector<f64>],
    dt: f64,
) -> Result<ResidualSeries, EstimateError> {
    if !dt.is_finite() || dt <= 0.0 {
        return Err(EstimateError::InvalidTimeStep(dt));
    }
    if states.len() < 3 {
        return Err(EstimateError::TooFewStates(states.len()));
    }
    check_basis_grid(basis, grid)?;
    if ops.dim() != basis.dim() {
        return Err(EstimateError::DimensionMismatch {
            expected: basis.dim(),
            got: ops.dim(),
        });
    }
    check_state_dims(basis, states)?;

    let nu = ops.viscosity();
    let steps = states.len() - 1;
    let horizon = steps as f64 * dt;
    let half_step = 1.0 / (2.0 * dt);

    let mut times = Vec::with_capacity(steps - 1);
    let mut dual_norms = Vec::with_capacity(steps - 1);
    for k in 1..steps {
        let t_k = k as f64 * dt;
        let mut quotient = &states[k + 1] - &states[k - 1];
        quotient *= half_step;
        let mut residual = basis.lift(&quotient)?;
        let lifted = basis.lift(&states[k])?;
        residual.axpy(nu, &lifted.stokes_apply());
        residual.axpy(1.0, &convection_apply(grid, &lifted, &lifted));
        residual.axpy(1.0, &basis.lift(&ops.closure_eval(&states[k]))?);
        residual.axpy(-1.0, &basis.lift(&ops.forcing_at(t_k))?);
        let projected = leray_project(grid, residual.raw());
        times.push(t_k);
        dual_norms.push(projected.dual_norm());
    }

    Ok(ResidualSeries {
        times,
        dual_norms,
        dt,
        horizon,
        rule: "trapezoid-step-grid".to_string(),
        operator_digest: ops.digest(),
        riesz_solver_tol: 0.0,
    })
}

/// Distance of initial data to the reduced space, measured in the
/// energy norm.
pub fn initial_mismatch(basis: &RomBasis, u0: &SpectralVelocity) -> Result<f64, EstimateError> {
    if u0.modes_per_dim() != basis.modes_per_dim() {
        return Err(EstimateError::GridMismatch {
            basis: basis.modes_per_dim(),
            grid: u0.modes_per_dim(),
        });
    }
    let inside = basis.lift(&basis.project(u0))?;
    Ok(u0.sub(&inside).l2_norm())
}

/// Residual estimator: time quadrature of the dual-norm samples plus
/// the weighted distance of the initial data to the reduced space.
pub fn eta_estimator(
    series: &ResidualSeries,
    basis: &RomBasis,
    u0: &SpectralVelocity,
    nu: f64,
) -> Result<f64, EstimateError> {
    if !nu.is_finite() || nu <= 0.0 {
        return Err(EstimateError::InvalidViscosity(nu));
    }
    Ok(series.l2_time_norm() + nu * initial_mismatch(basis, u0)?)
}

/// Exponential-in-time error bound driven by the residual estimator:
/// `sqrt(2 / nu) * exp((l_n + l_c) * horizon / nu) * eta`.
pub fn aposteriori_bound(eta: f64, l_n: f64, l_c: f64, nu: f64, horizon: f64) -> f64 {
    (2.0 / nu).sqrt() * ((l_n + l_c) * horizon / nu).exp() * eta
}

/// Error of a reduced trajectory against a full-order reference in the
/// trajectory norm: square root of the peak squared energy error plus
/// the time integral of the squared gradient error.
pub fn true_error(
    basis: &RomBasis,
    states: &[DVector<f64>],
    reference: &[SpectralVelocity],
    dt: f64,
) -> Result<f64, EstimateError> {
    if !dt.is_finite() || dt <= 0.0 {
        return Err(EstimateError::InvalidTimeStep(dt));
    }
    if states.is_empty() {
        return Err(EstimateError::EmptyTrajectory);
    }
    if states.len() != reference.len() {
        return Err(EstimateError::LengthMismatch {
            reduced: states.len(),
            reference: reference.len(),
        });
    }
    check_state_dims(basis, states)?;

    let mut sup_sq = 0.0f64;
    let mut grad_sq = Vec::with_capacity(states.len());
    for (state, full) in states.iter().zip(reference) {
        let error = full.sub(&basis.lift(state)?);
        sup_sq = sup_sq.max(error.l2_norm().powi(2));
        grad_sq.push(error.grad_norm().powi(2));
    }
    Ok((sup_sq + trapezoid(&grad_sq, dt)).sqrt())
}

fn trapezoid(values: &[f64], dt: f64) -> f64 {
    match values.len() {
        0 | 1 => 0.0,
        _ => {
            let interior: f64 = values[1..values.len() - 1].iter().sum();
            dt * (interior + 0.5 * (values[0] + values[values.len() - 1]))
        }
    }
}

/// Certificate tying the residual estimator to an exponential error
/// bound, optionally compared against a full-order reference.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ErrorCertificate {
    /// Residual estimator value.
    pub eta: f64,
    /// Quadrature part of the estimator.
    pub residual_l2: f64,
    /// Energy-norm distance of the initial data to the reduced space.
    pub initial_mismatch: f64,
    /// Convective Lipschitz constant and its provenance.
    pub lipschitz: ConvectiveLipschitz,
    /// Lipschitz constant of the closure on the regime set.
    pub closure_lipschitz: f64,
    /// Largest gradient norm along the lifted trajectory.
    pub sup_grad_norm: f64,
    pub viscosity: f64,
    pub horizon: f64,
    /// `exp((l_n + l_c) * horizon / nu)`.
    pub gronwall_factor: f64,
    /// Certified bound on the trajectory-norm error.
    pub bound: f64,
    /// Measured error against the reference, when one was supplied.
    pub true_error: Option<f64>,
    /// `bound / true_error`; at least one when the bound is honest.
    pub effectivity: Option<f64>,
}

/// Builds the full certificate for a reduced trajectory: residual
/// series, estimator, exponential bound, and (when a reference is
/// supplied) the measured error and effectivity.
#[allow(clippy::too_many_arguments)]
pub fn error_certificate(
    grid: &TorusGrid,
    basis: &RomBasis,
    ops: &ReducedOperators,
    states: &[DVector<f64>],
    dt: f64,
    u0: &SpectralVelocity,
    lipschitz: ConvectiveLipschitz,
    reference: Option<&[SpectralVelocity]>,
) -> Result<(ErrorCertificate, ResidualSeries), EstimateError> {
    let series = residual_series(grid, basis, ops, states, dt)?;
    let nu = ops.viscosity();
    let mismatch = initial_mismatch(basis, u0)?;
    let residual_l2 = series.l2_time_norm();
    let eta = residual_l2 + nu * mismatch;

    let mut sup_grad_norm = 0.0f64;
    for state in states {
        sup_grad_norm = sup_grad_norm.max(basis.lift(state)?.grad_norm());
    }

    let closure_lipschitz = ops.closure_lipschitz();
    let horizon = series.horizon;
    let gronwall_factor = ((lipschitz.value + closure_lipschitz) * horizon / nu).exp();
    let bound = aposteriori_bound(eta, lipschitz.value, closure_lipschitz, nu, horizon);

    let measured = match reference {
        Some(reference) => Some(true_error(basis, states, reference, dt)?),
        None => None,
    };
    let effectivity = measured.and_then(|e| if e > 0.0 { Some(bound / e) } else { None });

    Ok((
        ErrorCertificate {
            eta,
            residual_l2,
            initial_mismatch: mismatch,
            lipschitz,
            closure_lipschitz,
            sup_grad_norm,
            viscosity: nu,
            horizon,
            gronwall_factor,
            bound,
            true_error: measured,
            effectivity,
        },
        series,
    ))
}

/// Where the projection-error input of a rate report came from.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum EpsilonSource {
    /// Square root of the truncated spectrum tail; a surrogate that is
    /// only as good as the snapshot family.
    PodTailSurrogate,
    /// Gradient-norm distance of a full-order reference trajectory to
    /// the reduced space, integrated in time.
    ExactAgainstReference,
}

impl EpsilonSource {
    pub fn label(&self) -> &'static str {
        match self {
            EpsilonSource::PodTailSurrogate => "pod-tail-surrogate",
            EpsilonSource::ExactAgainstReference => "exact-against-reference",
        }
    }
}

/// A priori rate report: best-approximation error amplified by a
/// regularity-dependent stability factor.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct AprioriReport {
    /// Projection error of the target trajectory onto the reduced
    /// space, in the time-integrated gradient norm.
    pub epsilon_n: f64,
    pub source: EpsilonSource,
    /// Lipschitz constant of the convective term on the regularity
    /// ball of the target trajectory.
    pub l_reg: f64,
    /// Stability factor `exp(l_reg * horizon / nu)`; at least one.
    pub c_pr: f64,
    /// `c_pr * epsilon_n`.
    pub bound: f64,
}

/// Builds the rate report from a projection error and its provenance.
pub fn apriori_report(
    epsilon_n: f64,
    source: EpsilonSource,
    l_reg: f64,
    nu: f64,
    horizon: f64,
) -> Result<AprioriReport, EstimateError> {
    if !epsilon_n.is_finite() || epsilon_n < 0.0 {
        return Err(EstimateError::InvalidProjectionError(epsilon_n));
    }
    if !l_reg.is_finite() || l_reg < 0.0 {
        return Err(EstimateError::InvalidLipschitz(l_reg));
    }
    if !nu.is_finite() || nu <= 0.0 {
        return Err(EstimateError::InvalidViscosity(nu));
    }
    if !horizon.is_finite() || horizon < 0.0 {
        return Err(EstimateError::InvalidHorizon(horizon));
    }
    let c_pr = (l_reg * horizon / nu).exp();
    Ok(AprioriReport {
        epsilon_n,
        source,
        l_reg,
        c_pr,
        bound: c_pr * epsilon_n,
    })
}

/// Projection-error surrogate from the truncated spectrum tail.
pub fn pod_tail_epsilon(basis: &RomBasis) -> f64 {
    basis.tail_energy().max(0.0).sqrt()
}

/// Exact projection error of a reference trajectory onto the reduced
/// space: per-step gradient-orthogonal projection, trapezoid rule in
/// time, square root.
pub fn best_approximation_epsilon(
    grid: &TorusGrid,
    basis: &RomBasis,
    reference: &[SpectralVelocity],
    dt: f64,
) -> Result<f64, EstimateError> {
    if !dt.is_finite() || dt <= 0.0 {
        return Err(EstimateError::InvalidTimeStep(dt));
    }
    if reference.is_empty() {
        return Err(EstimateError::EmptyTrajectory);
    }
    check_basis_grid(basis, grid)?;

    let n = basis.dim();
    let applied: Vec<SpectralVelocity> =
        (0..n).map(|i| basis.mode(i).stokes_apply()).collect();
    let mut gram = DMatrix::zeros(n, n);
    for i in 0..n {
        for j in i..n {
            let value = basis.mode(j).inner(&applied[i]);
            gram[(i, j)] = value;
            gram[(j, i)] = value;
        }
    }
    let factor = Cholesky::new(gram).ok_or(EstimateError::DegenerateGram)?;

    let mut grad_sq = Vec::with_capacity(reference.len());
    for full in reference {
        if full.modes_per_dim() != basis.modes_per_dim() {
            return Err(EstimateError::GridMismatch {
                basis: basis.modes_per_dim(),
                grid: full.modes_per_dim(),
            });
        }
        let rhs = DVector::from_fn(n, |i, _| full.inner(&applied[i]));
        let coords = factor.solve(&rhs);
        let error = full.sub(&basis.lift(&coords)?);
        grad_sq.push(error.grad_norm().powi(2));
    }
    Ok(trapezoid(&grad_sq, dt).sqrt())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::certify::{run_certified, CertStepConfig};
    use crate::rom::{assemble_reduced, pod_basis, Closure, SnapshotSet};
    use crate::spectral::{
        fom_run, solenoidal_basis, taylor_green, ForcingSpec, StepConfig,
    };
    use approx::{assert_abs_diff_eq, assert_relative_eq};

    fn full_basis(grid: &TorusGrid, kmax: i64) -> RomBasis {
        let modes = solenoidal_basis(grid, kmax).unwrap();
        let spectrum = vec![1.0; modes.len()];
        RomBasis::from_parts(modes, spectrum, 0.0)
    }

    fn euclidean(values: &[f64]) -> DVector<f64> {
        DVector::from_column_slice(values)
    }

    #[test]
    fn manufactured_decay_leaves_only_the_quotient_defect() {
        // States sampled from a(t) = exp(-t) e_1 with the forcing that
        // makes it an exact solution. The only residual left is the
        // centered-quotient defect of the exponential,
        // exp(-t) * (sinh(dt)/dt - 1), which at dt = 5e-4 is the frozen
        // constant below. The first basis mode has unit wavenumber, so
        // its dual norm equals its energy norm.
        let grid = TorusGrid::new(8, 0.35).unwrap();
        let basis = full_basis(&grid, 2);
        let nu = grid.viscosity();
        let dt = 5e-4;
        let steps = 10usize;

        let mut samples = Vec::new();
        for k in 0..=steps {
            let t = k as f64 * dt;
            let amplitude = (nu - 1.0) * (-t).exp();
            samples.push((t, basis.mode(0).scaled(amplitude)));
        }
        let forcing = ForcingSpec::sampled(&grid, samples).unwrap();
        let ops = assemble_reduced(&grid, &basis, &forcing, Closure::none()).unwrap();

        let mut states = Vec::new();
        for k in 0..=steps {
            let mut coords = DVector::zeros(basis.dim());
            coords[0] = (-(k as f64) * dt).exp();
            states.push(coords);
        }

        let series = residual_series(&grid, &basis, &ops, &states, dt).unwrap();
        assert_eq!(series.len(), steps - 1);

        let defect = 4.16666671875e-8;
        for (t, dual) in series.times.iter().zip(&series.dual_norms) {
            let expected = (-t).exp() * defect;
            assert_relative_eq!(*dual, expected, max_relative = 1e-4);
            assert!(*dual <= 1e-7);
        }
        assert_eq!(series.riesz_solver_tol, 0.0);
        assert_eq!(series.operator_digest, ops.digest());
        assert!(series.times.first().unwrap() > &0.0);
        assert!(series.times.last().unwrap() < &series.horizon);
    }

    #[test]
    fn resting_flow_has_zero_residual() {
        let grid = TorusGrid::new(8, 0.5).unwrap();
        let basis = full_basis(&grid, 2);
        let ops = assemble_reduced(&grid, &basis, &ForcingSpec::Zero, Closure::none()).unwrap();
        let states = vec![DVector::zeros(basis.dim()); 5];
        let series = residual_series(&grid, &basis, &ops, &states, 0.1).unwrap();
        assert!(series.dual_norms.iter().all(|r| *r == 0.0));

        let eta = eta_estimator(&series, &basis, &SpectralVelocity::zero(8), 0.5).unwrap();
        assert_eq!(eta, 0.0);
        assert_eq!(aposteriori_bound(eta, 1.0, 0.5, 0.5, 1.0), 0.0);
    }

    fn eta_of_run(grid: &TorusGrid, theta: f64, dt: f64, steps: usize) -> f64 {
        let basis = full_basis(grid, 2);
        let ops = assemble_reduced(grid, &basis, &ForcingSpec::Zero, Closure::none()).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let u0 = SpectralVelocity::random_low_mode(grid, 2, 1.0, &mut rng);
        let a0 = basis.project(&u0);
        let config = CertStepConfig::new(grid.viscosity(), theta, dt, 1e-12, 400).unwrap();
        let regime = RegimeSet::new(50.0).unwrap();
        let run = run_certified(&ops, &regime, &a0, &config, steps, 3).unwrap();
        assert!(run.completed());
        let series = residual_series(grid, &basis, &ops, &run.states, dt).unwrap();
        let start = basis.lift(&a0).unwrap();
        eta_estimator(&series, &basis, &start, grid.viscosity()).unwrap()
    }

    #[test]
    fn estimator_shrinks_at_the_scheme_order_under_step_halving() {
        // At full reduced dimension the model error vanishes and the
        // estimator tracks the time discretisation: second order for
        // the midpoint weight, first order for the implicit endpoint.
        let grid = TorusGrid::new(8, 0.2).unwrap();

        let coarse = eta_of_run(&grid, 0.5, 0.02, 25);
        let fine = eta_of_run(&grid, 0.5, 0.01, 50);
        let ratio = coarse / fine;
        assert!(
            (3.6..=4.4).contains(&ratio),
            "midpoint ratio {ratio} outside [3.6, 4.4]"
        );

        let coarse = eta_of_run(&grid, 1.0, 0.02, 25);
        let fine = eta_of_run(&grid, 1.0, 0.01, 50);
        let ratio = coarse / fine;
        assert!(
            (1.8..=2.2).contains(&ratio),
            "endpoint ratio {ratio} outside [1.8, 2.2]"
        );
    }

    #[test]
    fn estimator_is_quadrature_converged_on_reduced_runs() {
        // With a genuinely reduced basis the estimator is dominated by
        // model error, which the step grid only samples: refining the
        // grid must not move the value by more than half a percent.
        let grid = TorusGrid::new(8, 0.05).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(29);
        let u0 = SpectralVelocity::random_low_mode(&grid, 2, 2.0, &mut rng);
        let fom_cfg = StepConfig::new(0.5, 0.01, 1e-11, 400).unwrap();
        let reference = fom_run(&grid, &u0, &ForcingSpec::Zero, &fom_cfg, 20);
        assert!(reference.completed());

        let set = SnapshotSet::from_states(reference.states.clone()).unwrap();
        let basis = pod_basis(&set, 2).unwrap();
        let ops = assemble_reduced(&grid, &basis, &ForcingSpec::Zero, Closure::none()).unwrap();
        let a0 = basis.project(&u0);
        let start = basis.lift(&a0).unwrap();
        let regime = RegimeSet::new(50.0).unwrap();

        let mut etas = Vec::new();
        for (dt, steps) in [(0.005, 40usize), (0.0025, 80usize)] {
            let config = CertStepConfig::new(grid.viscosity(), 0.5, dt, 1e-12, 400).unwrap();
            let run = run_certified(&ops, &regime, &a0, &config, steps, 5).unwrap();
            assert!(run.completed());
            let series = residual_series(&grid, &basis, &ops, &run.states, dt).unwrap();
            etas.push(eta_estimator(&series, &basis, &start, grid.viscosity()).unwrap());
        }
        let drift = (etas[0] - etas[1]).abs() / etas[0];
        assert!(
            drift <= 5e-3,
            "estimator moved from {} to {} ({drift} relative) under refinement",
            etas[0],
            etas[1]
        );
    }

    #[test]
    fn declared_constant_passes_through() {
        let lip = ConvectiveLipschitz::declared(2.5).unwrap();
        assert_eq!(lip.value, 2.5);
        assert_eq!(lip.provenance, Provenance::Declared);
        assert_eq!(lip.provenance.label(), "declared");
        assert!(matches!(
            ConvectiveLipschitz::declared(-1.0),
            Err(EstimateError::InvalidLipschitz(_))
        ));
    }

    #[test]
    fn sampled_constant_vanishes_with_the_regime_ball() {
        let grid = TorusGrid::new(8, 0.5).unwrap();
        let basis = full_basis(&grid, 2);
        let regime = RegimeSet::new(1e-12).unwrap();
        let lip = ConvectiveLipschitz::estimated(&grid, &basis, &regime, 5, 17).unwrap();
        assert!(lip.value <= 1e-9, "tiny regime gave {}", lip.value);
        assert_eq!(lip.provenance, Provenance::Estimated);
    }

    #[test]
    fn sampled_constant_is_monotone_in_the_trial_count() {
        let grid = TorusGrid::new(8, 0.5).unwrap();
        let basis = full_basis(&grid, 2);
        let regime = RegimeSet::new(0.8).unwrap();
        let few = ConvectiveLipschitz::estimated(&grid, &basis, &regime, 10, 7).unwrap();
        let many = ConvectiveLipschitz::estimated(&grid, &basis, &regime, 50, 7).unwrap();
        assert!(few.value > 0.0);
        assert!(many.value >= few.value);
        assert!(many.value.is_finite());
    }

    #[test]
    fn identical_trajectories_have_zero_error() {
        let grid = TorusGrid::new(8, 0.5).unwrap();
        let basis = full_basis(&grid, 2);
        let states = vec![
            euclidean(&[0.3; 24]),
            euclidean(&[0.2; 24]),
            euclidean(&[0.1; 24]),
        ];
        let reference: Vec<SpectralVelocity> = states
            .iter()
            .map(|a| basis.lift(a).unwrap())
            .collect();
        let error = true_error(&basis, &states, &reference, 0.1).unwrap();
        assert_eq!(error, 0.0);
    }

    #[test]
    fn constant_offset_error_matches_the_closed_form() {
        // A time-constant offset c psi has trajectory norm
        // |c psi| * sqrt(1 + horizon * |grad psi|^2 / |psi|^2); the
        // cellular field psi has |grad psi|^2 = 2 |psi|^2.
        let grid = TorusGrid::new(8, 0.5).unwrap();
        let basis = full_basis(&grid, 2);
        let offset = taylor_green(&grid, 1.0).scaled(0.3);

        let states = vec![euclidean(&[0.1; 24]); 6];
        let reference: Vec<SpectralVelocity> = states
            .iter()
            .map(|a| {
                let mut field = basis.lift(a).unwrap();
                field.axpy(1.0, &offset);
                field
            })
            .collect();
        let dt = 0.2;
        let horizon = dt * (states.len() - 1) as f64;
        let expected = offset.l2_norm() * (1.0 + 2.0 * horizon).sqrt();
        let error = true_error(&basis, &states, &reference, dt).unwrap();
        assert_relative_eq!(error, expected, max_relative = 1e-12);
    }

    #[test]
    fn richer_bases_track_the_reference_more_closely() {
        let grid = TorusGrid::new(8, 0.1).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(29);
        let u0 = SpectralVelocity::random_low_mode(&grid, 2, 1.0, &mut rng);
        let dt = 0.01;
        let steps = 30usize;
        let fom_cfg = StepConfig::new(0.5, dt, 1e-11, 400).unwrap();
        let reference = fom_run(&grid, &u0, &ForcingSpec::Zero, &fom_cfg, steps);
        assert!(reference.completed());
        let set = SnapshotSet::from_states(reference.states.clone()).unwrap();

        let mut errors = Vec::new();
        for n in [1usize, 2, 4] {
            let basis = pod_basis(&set, n).unwrap();
            let ops =
                assemble_reduced(&grid, &basis, &ForcingSpec::Zero, Closure::none()).unwrap();
            let a0 = basis.project(&u0);
            let config = CertStepConfig::new(grid.viscosity(), 0.5, dt, 1e-12, 400).unwrap();
            let regime = RegimeSet::new(50.0).unwrap();
            let run = run_certified(&ops, &regime, &a0, &config, steps, 5).unwrap();
            assert!(run.completed());
            errors.push(true_error(&basis, &run.states, &reference.states, dt).unwrap());
        }
        assert!(
            errors[1] < errors[0] && errors[2] < errors[1],
            "errors did not decrease: {errors:?}"
        );
    }

    #[test]
    fn certificate_bound_dominates_the_measured_error() {
        // Reduced space spanned by the cellular mode, initial data with
        // an orthogonal perturbation, reference evolved at full order.
        let grid = TorusGrid::new(8, 1.0).unwrap();
        let snapshot = taylor_green(&grid, 0.7);
        let set =
            SnapshotSet::from_states(vec![snapshot.clone()]).unwrap();
        let basis = pod_basis(&set, 1).unwrap();

        let mut rng = ChaCha8Rng::seed_from_u64(13);
        let mut perturbation = SpectralVelocity::random_low_mode(&grid, 2, 1.0, &mut rng);
        let overlap = perturbation.inner(basis.mode(0));
        perturbation.axpy(-overlap, basis.mode(0));
        perturbation.scale(0.1 / perturbation.l2_norm());
        let mut u0 = snapshot.clone();
        u0.axpy(1.0, &perturbation);

        let dt = 0.01;
        let steps = 20usize;
        let fom_cfg = StepConfig::new(0.5, dt, 1e-11, 400).unwrap();
        let reference = fom_run(&grid, &u0, &ForcingSpec::Zero, &fom_cfg, steps);
        assert!(reference.completed());

        let ops = assemble_reduced(&grid, &basis, &ForcingSpec::Zero, Closure::none()).unwrap();
        let a0 = basis.project(&u0);
        let config = CertStepConfig::new(grid.viscosity(), 0.5, dt, 1e-12, 400).unwrap();
        let regime = RegimeSet::new(2.0 * u0.l2_norm()).unwrap();
        let run = run_certified(&ops, &regime, &a0, &config, steps, 5).unwrap();
        assert!(run.completed());

        let lipschitz =
            ConvectiveLipschitz::estimated(&grid, &basis, &regime, 30, 23).unwrap();
        let (certificate, series) = error_certificate(
            &grid,
            &basis,
            &ops,
            &run.states,
            dt,
            &u0,
            lipschitz,
            Some(&reference.states),
        )
        .unwrap();

        assert_eq!(series.operator_digest, run.operator_digest);
        assert!(certificate.initial_mismatch > 0.0);
        let measured = certificate.true_error.unwrap();
        assert!(measured > 0.0);
        let effectivity = certificate.effectivity.unwrap();
        assert!(
            effectivity >= 0.99,
            "bound {} does not dominate error {measured}",
            certificate.bound
        );
        assert_relative_eq!(
            certificate.bound,
            aposteriori_bound(
                certificate.eta,
                certificate.lipschitz.value,
                certificate.closure_lipschitz,
                certificate.viscosity,
                certificate.horizon
            ),
            max_relative = 1e-15
        );
        assert!(certificate.gronwall_factor >= 1.0);
        assert!(certificate.sup_grad_norm > 0.0);
    }

    #[test]
    fn references_inside_the_span_have_zero_projection_error() {
        let grid = TorusGrid::new(8, 0.5).unwrap();
        let basis = full_basis(&grid, 2);
        let reference: Vec<SpectralVelocity> = [0.4, 0.3, 0.2]
            .iter()
            .map(|s| {
                let coords = euclidean(&vec![*s; 24]);
                basis.lift(&coords).unwrap()
            })
            .collect();
        let epsilon = best_approximation_epsilon(&grid, &basis, &reference, 0.1).unwrap();
        assert_abs_diff_eq!(epsilon, 0.0, epsilon = 1e-12);

        let report =
            apriori_report(epsilon, EpsilonSource::ExactAgainstReference, 1.0, 0.5, 1.0).unwrap();
        assert_abs_diff_eq!(report.bound, 0.0, epsilon = 1e-11);
    }

    #[test]
    fn projection_error_beats_the_spectrum_tail_surrogate_on_its_own_snapshots() {
        let grid = TorusGrid::new(8, 0.1).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(53);
        let u0 = SpectralVelocity::random_low_mode(&grid, 2, 1.0, &mut rng);
        let fom_cfg = StepConfig::new(0.5, 0.01, 1e-11, 400).unwrap();
        let reference = fom_run(&grid, &u0, &ForcingSpec::Zero, &fom_cfg, 20);
        assert!(reference.completed());
        let set = SnapshotSet::from_states(reference.states.clone()).unwrap();
        let basis = pod_basis(&set, 3).unwrap();

        let surrogate = pod_tail_epsilon(&basis);
        assert!(surrogate > 0.0);
        assert_relative_eq!(
            surrogate * surrogate,
            basis.tail_energy(),
            max_relative = 1e-12
        );

        let exact =
            best_approximation_epsilon(&grid, &basis, &reference.states, 0.01).unwrap();
        assert!(exact.is_finite() && exact > 0.0);
    }

    #[test]
    fn validation_rejects_malformed_inputs() {
        let grid = TorusGrid::new(8, 0.5).unwrap();
        let basis = full_basis(&grid, 2);
        let ops = assemble_reduced(&grid, &basis, &ForcingSpec::Zero, Closure::none()).unwrap();

        let short = vec![DVector::zeros(basis.dim()); 2];
        assert!(matches!(
            residual_series(&grid, &basis, &ops, &short, 0.1),
            Err(EstimateError::TooFewStates(2))
        ));

        let states = vec![DVector::zeros(basis.dim()); 4];
        assert!(matches!(
            residual_series(&grid, &basis, &ops, &states, 0.0),
            Err(EstimateError::InvalidTimeStep(_))
        ));

        let wrong = vec![DVector::zeros(3); 4];
        assert!(matches!(
            residual_series(&grid, &basis, &ops, &wrong, 0.1),
            Err(EstimateError::DimensionMismatch { .. })
        ));

        let reference = vec![SpectralVelocity::zero(8); 3];
        assert!(matches!(
            true_error(&basis, &states, &reference, 0.1),
            Err(EstimateError::LengthMismatch { .. })
        ));

        assert!(matches!(
            apriori_report(-0.1, EpsilonSource::PodTailSurrogate, 1.0, 0.5, 1.0),
            Err(EstimateError::InvalidProjectionError(_))
        ));
        assert!(matches!(
            apriori_report(0.1, EpsilonSource::PodTailSurrogate, 1.0, -0.5, 1.0),
            Err(EstimateError::InvalidViscosity(_))
        ));
    }
}
