//! Certified reduced time stepping with a per-step energy ledger.
//!
//! Every step of the implicit theta scheme records the exact energy
//! balance: kinetic energy before and after, viscous dissipation at the
//! stage value, closure dissipation, and forcing work. For `theta >= 1/2`,
//! an exactly antisymmetric convection tensor and a dissipative closure,
//! the balance closes with non-negative slack up to the nonlinear solver
//! tolerance; the ledger makes that checkable line by line instead of
//! asking for trust in the scheme.
//!
//! Certification of structure is numerical, not assumed: the skew and
//! dissipation defects are evaluated on the trajectory plus a seeded batch
//! of states from the declared regime ball, and any violation beyond the
//! defect threshold flips the corresponding flag to false.

use nalgebra::{Cholesky, DMatrix, DVector, Dyn};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::rom::{RegimeSet, ReducedOperators};
use crate::spectral::{SpectralError, StepConfig, StepFailure};

/// Defect ceiling for the skew and dissipation flags.
pub const DEFECT_THRESHOLD: f64 = 1e-10;

/// Number of pseudo-random regime-ball states in one defect batch.
pub const DEFECT_BATCH: usize = 100;

/// Errors raised by the certifier.
#[derive(Debug, Error)]
pub enum CertifyError {
    #[error(transparent)]
    Config(#[from] SpectralError),
    #[error("Young parameter must lie in (0, nu); got {epsilon} with nu = {nu}")]
    InvalidYoungEpsilon { epsilon: f64, nu: f64 },
    #[error("machine guard must be finite and positive, got {0}")]
    InvalidMachineGuard(f64),
    #[error("config was built for viscosity {config} but the operators have {operators}")]
    ViscosityMismatch { config: f64, operators: f64 },
    #[error("state dimension {got} does not match the reduced dimension {expected}")]
    DimensionMismatch { expected: usize, got: usize },
    #[error("initial state has non-finite entries")]
    NonFiniteState,
    #[error("reduced Stokes matrix is not positive definite")]
    IndefiniteStokes,
}

/// Scheme parameters plus the two certification constants: the Young
/// splitting parameter `epsilon in (0, nu)` and the machine guard added
/// to defect denominators.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CertStepConfig {
    step: StepConfig,
    nu: f64,
    young_epsilon: f64,
    machine_guard: f64,
}

impl CertStepConfig {
    /// Defaults: `epsilon = nu / 2`, machine guard = f64 epsilon.
    pub fn new(
        nu: f64,
        theta: f64,
        dt: f64,
        solver_tol: f64,
        max_iter: usize,
    ) -> Result<Self, CertifyError> {
        if !nu.is_finite() || nu <= 0.0 {
            return Err(CertifyError::Config(SpectralError::InvalidViscosity(nu)));
        }
        Ok(CertStepConfig {
            step: StepConfig::new(theta, dt, solver_tol, max_iter)?,
            nu,
            young_epsilon: nu / 2.0,
            machine_guard: f64::EPSILON,
        })
    }

    pub fn with_young_epsilon(mut self, epsilon: f64) -> Result<Self, CertifyError> {
        if !epsilon.is_finite() || epsilon <= 0.0 || epsilon >= self.nu {
            return Err(CertifyError::InvalidYoungEpsilon {
                epsilon,
                nu: self.nu,
            });
        }
        self.young_epsilon = epsilon;
        Ok(self)
    }

    pub fn with_machine_guard(mut self, guard: f64) -> Result<Self, CertifyError> {
        if !guard.is_finite() || guard <= 0.0 {
            return Err(CertifyError::InvalidMachineGuard(guard));
        }
        self.machine_guard = guard;
        Ok(self)
    }

    pub fn step(&self) -> &StepConfig {
        &self.step
    }

    pub fn viscosity(&self) -> f64 {
        self.nu
    }

    pub fn theta(&self) -> f64 {
        self.step.theta()
    }

    pub fn dt(&self) -> f64 {
        self.step.dt()
    }

    pub fn solver_tol(&self) -> f64 {
        self.step.solver_tol()
    }

    pub fn max_iter(&self) -> usize {
        self.step.max_iter()
    }

    pub fn young_epsilon(&self) -> f64 {
        self.young_epsilon
    }

    pub fn machine_guard(&self) -> f64 {
        self.machine_guard
    }

    /// Slack below `-ledger_tol(scale)` voids a step's certificate. The
    /// only inexactness in the balance is the nonlinear solve, so the
    /// tolerance is ten solver tolerances at the step's energy scale.
    pub fn ledger_tol(&self, energy_scale: f64) -> f64 {
        10.0 * self.solver_tol() * energy_scale.max(1.0)
    }
}

/// One fully accounted scheme step.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LedgerEntry {
    pub step: usize,
    pub time: f64,
    pub energy_before: f64,
    pub energy_after: f64,
    /// `nu dt ||grad u||^2` at the stage value.
    pub viscous_dissipation: f64,
    /// `dt <C(u), u>` at the stage value; negative means energy injection.
    pub closure_dissipation: f64,
    /// `dt <f, u>` at the stage value.
    pub forcing_work: f64,
    /// Balance slack `E_before + work - E_after - viscous - closure`;
    /// non-negative up to solver tolerance for an admissible scheme.
    pub inequality_slack: f64,
    /// Young-split energy increment, bounded by `young_rhs` per step.
    pub young_lhs: f64,
    pub young_rhs: f64,
    pub skew_defect_obs: f64,
    pub diss_defect_obs: f64,
    pub solver_iters: usize,
    pub certified: bool,
}

/// Run-level energy accounting and the cumulative bound.
///
/// The telescoped inequality controls the final energy together with the
/// accumulated dissipation, and every intermediate energy is controlled
/// by the same right-hand side; `bound_lhs` is the larger of those two
/// certified quantities, so `bound_lhs <= bound_rhs` is exactly what the
/// per-step inequalities prove.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EnergyLedger {
    pub entries: Vec<LedgerEntry>,
    pub young_epsilon: f64,
    /// `sup_k ||a^k||^2` over the whole trajectory.
    pub sup_state_sq: f64,
    /// `2 (nu - eps) sum_k dt ||grad u^{k+theta}||^2`.
    pub dissipation_sum: f64,
    /// `||a^K||^2 + dissipation_sum`, the telescoped left-hand side.
    pub final_plus_dissipation: f64,
    pub bound_lhs: f64,
    /// `||a^0||^2 + (1/2 eps) sum_k dt ||f^{k+theta}||_dual^2`.
    pub bound_rhs: f64,
    pub bound_guard: f64,
    pub bound_certified: bool,
    pub all_certified: bool,
}

/// Certification flags. `None` means the corresponding stage was not
/// requested, so the flag is not applicable rather than failed.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize, Default)]
pub struct FlagTable {
    pub skew_ok: Option<bool>,
    pub diss_ok: Option<bool>,
    pub margin_ok: Option<bool>,
    pub residual_computed: Option<bool>,
    pub regime_ok: Option<bool>,
}

impl FlagTable {
    pub fn empty() -> Self {
        FlagTable::default()
    }

    /// True when no flag is false; not-applicable flags do not object.
    pub fn all_pass(&self) -> bool {
        [
            self.skew_ok,
            self.diss_ok,
            self.margin_ok,
            self.residual_computed,
            self.regime_ok,
        ]
        .iter()
        .all(|flag| flag.unwrap_or(true))
    }
}

/// Structure defect maxima over a declared evaluation set.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DefectSummary {
    pub threshold: f64,
    pub samples: usize,
    pub max_skew_defect: f64,
    pub max_dissipation_defect: f64,
    pub skew_ok: bool,
    pub diss_ok: bool,
}

/// A certified reduced trajectory with its evidence.
#[derive(Debug, Clone)]
pub struct CertifiedRun {
    pub times: Vec<f64>,
    pub states: Vec<DVector<f64>>,
    pub ledger: EnergyLedger,
    pub defects: DefectSummary,
    pub flags: FlagTable,
    /// Hash of the operator set that stepped this trajectory; residuals
    /// certify the run only when computed with a matching set.
    pub operator_digest: String,
    /// Present when the nonlinear solver failed and truncated the run.
    pub failure: Option<StepFailure>,
}

impl CertifiedRun {
    pub fn completed(&self) -> bool {
        self.failure.is_none()
    }

    pub fn final_state(&self) -> &DVector<f64> {
        self.states.last().expect("runs hold at least the initial state")
    }
}

/// Relative energy-injection rate of the convection tensor at `state`.
pub fn skew_defect(ops: &ReducedOperators, state: &DVector<f64>, machine_guard: f64) -> f64 {
    let norm = state.norm();
    ops.nonlinear(state).dot(state).abs() / (norm * norm * norm + machine_guard)
}

/// Relative energy-injection rate of the closure at `state`.
pub fn dissipation_defect(
    ops: &ReducedOperators,
    state: &DVector<f64>,
    machine_guard: f64,
) -> f64 {
    (-ops.closure_dissipation(state)).max(0.0) / (state.norm_squared() + machine_guard)
}

/// Evaluates the structure defects on a seeded regime-ball batch plus the
/// supplied trajectory states and compares the maxima to `threshold`.
pub fn defect_scan(
    ops: &ReducedOperators,
    regime: &RegimeSet,
    trajectory: &[DVector<f64>],
    seed: u64,
    machine_guard: f64,
    threshold: f64,
) -> DefectSummary {
    let batch = regime.sample_states(ops.dim(), DEFECT_BATCH, seed);
    let mut max_skew = 0.0f64;
    let mut max_diss = 0.0f64;
    let mut samples = 0usize;
    for state in batch.iter().chain(trajectory.iter()) {
        max_skew = max_skew.max(skew_defect(ops, state, machine_guard));
        max_diss = max_diss.max(dissipation_defect(ops, state, machine_guard));
        samples += 1;
    }
    DefectSummary {
        threshold,
        samples,
        max_skew_defect: max_skew,
        max_dissipation_defect: max_diss,
        skew_ok: max_skew <= threshold,
        diss_ok: max_diss <= threshold,
    }
}

/// Implicit theta stepper in reduced coordinates.
///
/// The implicit viscous matrix is factored once; each step runs the same
/// fixed-point iteration as the full-order stepper, so at full reduced
/// dimension the two schemes produce the same trajectory to solver
/// tolerance.
pub struct RomStepper<'a> {
    ops: &'a ReducedOperators,
    config: CertStepConfig,
    implicit: Cholesky<f64, Dyn>,
    stokes_chol: Cholesky<f64, Dyn>,
}

struct StageOutcome {
    stage: DVector<f64>,
    next: DVector<f64>,
    iterations: usize,
}

impl<'a> RomStepper<'a> {
    pub fn new(ops: &'a ReducedOperators, config: CertStepConfig) -> Result<Self, CertifyError> {
        if config.nu != ops.viscosity() {
            return Err(CertifyError::ViscosityMismatch {
                config: config.nu,
                operators: ops.viscosity(),
            });
        }
        let n = ops.dim();
        let theta_dt_nu = config.theta() * config.dt() * config.nu;
        let implicit_matrix = DMatrix::identity(n, n) + ops.stokes() * theta_dt_nu;
        let implicit = Cholesky::new(implicit_matrix).ok_or(CertifyError::IndefiniteStokes)?;
        let stokes_chol =
            Cholesky::new(ops.stokes().clone()).ok_or(CertifyError::IndefiniteStokes)?;
        Ok(RomStepper {
            ops,
            config,
            implicit,
            stokes_chol,
        })
    }

    pub fn config(&self) -> &CertStepConfig {
        &self.config
    }

    /// Dual-norm square of a reduced forcing vector.
    pub fn dual_norm_sq(&self, forcing: &DVector<f64>) -> f64 {
        self.stokes_chol.solve(forcing).dot(forcing)
    }

    /// Advance one step from `state` at time `t`.
    pub fn step(&self, state: &DVector<f64>, t: f64) -> Result<DVector<f64>, CertifyError> {
        self.stage_step(state, t).map(|outcome| outcome.next)
    }

    fn stage_step(&self, state: &DVector<f64>, t: f64) -> Result<StageOutcome, CertifyError> {
        let theta = self.config.theta();
        let theta_dt = theta * self.config.dt();
        let forcing = self.ops.forcing_at(t + theta_dt);

        let mut stage = state.clone();
        let mut last_update = f64::INFINITY;
        for iteration in 1..=self.config.max_iter() {
            let mut rhs = state.clone();
            rhs.axpy(theta_dt, &forcing, 1.0);
            rhs.axpy(-theta_dt, &self.ops.nonlinear(&stage), 1.0);
            rhs.axpy(-theta_dt, &self.ops.closure_eval(&stage), 1.0);
            let next = self.implicit.solve(&rhs);

            last_update = (&next - &stage).norm();
            let scale = state.norm().max(next.norm());
            stage = next;
            if last_update <= self.config.solver_tol() * scale || scale == 0.0 {
                let mut next_state = state.clone();
                next_state.axpy(1.0 / theta, &(&stage - state), 1.0);
                return Ok(StageOutcome {
                    stage,
                    next: next_state,
                    iterations: iteration,
                });
            }
        }
        Err(CertifyError::Config(SpectralError::NonConvergence {
            iterations: self.config.max_iter(),
            last_update,
            tolerance: self.config.solver_tol(),
        }))
    }
}

/// March `steps` certified theta steps from `initial` at `t = 0`.
///
/// The trajectory is truncated at the first step whose ledger entry fails
/// certification and at solver failures; everything computed up to the
/// truncation is still reported. Leaving the regime ball does not truncate,
/// it only clears `regime_ok`.
pub fn run_certified(
    ops: &ReducedOperators,
    regime: &RegimeSet,
    initial: &DVector<f64>,
    config: &CertStepConfig,
    steps: usize,
    defect_seed: u64,
) -> Result<CertifiedRun, CertifyError> {
    if initial.len() != ops.dim() {
        return Err(CertifyError::DimensionMismatch {
            expected: ops.dim(),
            got: initial.len(),
        });
    }
    if initial.iter().any(|value| !value.is_finite()) {
        return Err(CertifyError::NonFiniteState);
    }
    let stepper = RomStepper::new(ops, *config)?;
    let dt = config.dt();
    let theta = config.theta();
    let nu = config.viscosity();
    let epsilon = config.young_epsilon();
    let guard = config.machine_guard();

    let mut times = vec![0.0];
    let mut states = vec![initial.clone()];
    let mut entries: Vec<LedgerEntry> = Vec::with_capacity(steps);
    let mut failure = None;
    let mut all_certified = true;

    let mut sup_state_sq = initial.norm_squared();
    let mut dissipation_sum = 0.0;
    let mut dual_sum = 0.0;
    let mut bound_guard = 0.0;

    for k in 0..steps {
        let t = k as f64 * dt;
        let outcome = match stepper.stage_step(&states[k], t) {
            Ok(outcome) => outcome,
            Err(CertifyError::Config(SpectralError::NonConvergence {
                iterations,
                last_update,
                tolerance,
            })) => {
                failure = Some(StepFailure {
                    step: k,
                    iterations,
                    last_update,
                    tolerance,
                });
                all_certified = false;
                break;
            }
            Err(other) => return Err(other),
        };

        let stage = &outcome.stage;
        let forcing = ops.forcing_at(t + theta * dt);
        let grad_sq = ops.stokes_apply(stage).dot(stage);
        let dual_sq = stepper.dual_norm_sq(&forcing);

        let energy_before = 0.5 * states[k].norm_squared();
        let energy_after = 0.5 * outcome.next.norm_squared();
        let viscous_dissipation = nu * dt * grad_sq;
        let closure_dissipation = dt * ops.closure_dissipation(stage);
        let forcing_work = dt * forcing.dot(stage);
        let inequality_slack = energy_before + forcing_work
            - energy_after
            - viscous_dissipation
            - closure_dissipation;
        let young_lhs = energy_after - energy_before + (nu - epsilon) * dt * grad_sq;
        let young_rhs = dt / (4.0 * epsilon) * dual_sq;

        let ledger_tol = config.ledger_tol(energy_before.max(energy_after));
        let certified = inequality_slack >= -ledger_tol
            && closure_dissipation >= -ledger_tol
            && young_lhs <= young_rhs + ledger_tol;

        entries.push(LedgerEntry {
            step: k,
            time: (k + 1) as f64 * dt,
            energy_before,
            energy_after,
            viscous_dissipation,
            closure_dissipation,
            forcing_work,
            inequality_slack,
            young_lhs,
            young_rhs,
            skew_defect_obs: skew_defect(ops, stage, guard),
            diss_defect_obs: dissipation_defect(ops, stage, guard),
            solver_iters: outcome.iterations,
            certified,
        });

        sup_state_sq = sup_state_sq.max(outcome.next.norm_squared());
        dissipation_sum += 2.0 * (nu - epsilon) * dt * grad_sq;
        dual_sum += dt * dual_sq;
        bound_guard += 2.0 * ledger_tol;

        times.push((k + 1) as f64 * dt);
        states.push(outcome.next);

        if !certified {
            all_certified = false;
            break;
        }
    }

    let final_plus_dissipation = states
        .last()
        .map(|state| state.norm_squared())
        .unwrap_or(0.0)
        + dissipation_sum;
    let bound_lhs = sup_state_sq.max(final_plus_dissipation);
    let bound_rhs = initial.norm_squared() + dual_sum / (2.0 * epsilon);
    let bound_certified = bound_lhs <= bound_rhs + bound_guard;

    let regime_ok = states.iter().all(|state| regime.contains(state));
    let defects = defect_scan(ops, regime, &states, defect_seed, guard, DEFECT_THRESHOLD);

    let flags = FlagTable {
        skew_ok: Some(defects.skew_ok),
        diss_ok: Some(defects.diss_ok),
        margin_ok: None,
        residual_computed: None,
        regime_ok: Some(regime_ok),
    };

    Ok(CertifiedRun {
        times,
        states,
        ledger: EnergyLedger {
            entries,
            young_epsilon: epsilon,
            sup_state_sq,
            dissipation_sum,
            final_plus_dissipation,
            bound_lhs,
            bound_rhs,
            bound_guard,
            bound_certified,
            all_certified: all_certified && failure.is_none(),
        },
        defects,
        flags,
        operator_digest: ops.digest(),
        failure,
    })
}
