//! Run configuration, pipeline orchestration, and report emission.
//!
//! A run is described by a TOML file: a scenario id, a mandatory seed,
//! and one section per pipeline stage. [`orchestrate`] executes the
//! requested stages in order (full-order solve, basis extraction,
//! certified reduced run, error certificate, transition indicators,
//! coupling margins) and folds every stage's outputs, constants, and
//! flags into a [`RunReport`]. [`emit`] writes the report as JSON plus a
//! human-readable summary together with the CSV artifacts; all bytes are
//! deterministic for a fixed config and seed.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use thiserror::Error;

use crate::certify::{run_certified, CertStepConfig, CertifiedRun, DefectSummary, FlagTable};
use crate::estimate::{
    apriori_report, best_approximation_epsilon, error_certificate, pod_tail_epsilon,
    AprioriReport, ConvectiveLipschitz, EpsilonSource, ErrorCertificate, Provenance,
};
use crate::fsi::{robin_partitioned_run, FsiParams, MarginReport, Testbed, TestbedConfig};
use crate::io;
use crate::rom::{assemble_reduced, pod_basis, Closure, ReducedOperators, RegimeSet, RomBasis, SnapshotSet};
use crate::spectral::{
    fom_run, taylor_green, ForcingSpec, SpectralVelocity, StepConfig, StepFailure, TorusGrid,
};
use crate::transition::{
    amplification_verdict, energy_barrier_check, enstrophy_threshold_check, linearized_operator,
    resolvent_norm, shear_constant, AmplificationVerdict, BarrierVerdict, EnstrophyThresholdInput,
    EnstrophyVerdict, ResolventQuery, VELOCITY_POINCARE, VORTICITY_POINCARE,
};

pub const REPORT_FORMAT: &str = "certrom-report v1";

/// Features that the config schema rejects by name instead of with a
/// bare unknown-key message.
const UNSUPPORTED_FEATURES: &[&str] = &[
    "hyperreduction",
    "hyper_reduction",
    "deim",
    "empirical_interpolation",
    "supremizer",
    "moving_interface",
    "three_dimensional",
    "report_signing",
];

/// One schema rule the config text broke, addressed by key path.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct SchemaViolation {
    pub path: String,
    pub message: String,
}

impl std::fmt::Display for SchemaViolation {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "{}: {}", self.path, self.message)
    }
}

fn schema_list(violations: &[SchemaViolation]) -> String {
    violations
        .iter()
        .map(|v| v.to_string())
        .collect::<Vec<_>>()
        .join("; ")
}

#[derive(Debug, Error)]
pub enum ReportError {
    #[error("reading {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("schema violation: {}", schema_list(violations))]
    Schema { violations: Vec<SchemaViolation> },
    #[error("stage {stage} requires the config section [{section}]")]
    MissingSection {
        stage: &'static str,
        section: &'static str,
    },
    #[error("stage {stage} runs on outputs of stage {needs}; request both")]
    MissingStage {
        stage: &'static str,
        needs: &'static str,
    },
    #[error("stage {stage} failed: {message}")]
    Stage { stage: &'static str, message: String },
    #[error("writing {path}: {source}")]
    Emit {
        path: String,
        #[source]
        source: std::io::Error,
    },
}

impl ReportError {
    fn stage(stage: &'static str, err: impl std::fmt::Display) -> Self {
        ReportError::Stage {
            stage,
            message: err.to_string(),
        }
    }
}

fn default_theta() -> f64 {
    0.5
}

fn default_solver_tol() -> f64 {
    1e-10
}

fn default_max_iter() -> usize {
    200
}

fn default_stride() -> usize {
    1
}

fn default_regime_radius() -> f64 {
    10.0
}

fn default_trials() -> usize {
    32
}

fn default_truncation() -> i64 {
    2
}

fn default_sweep_points() -> usize {
    10
}

fn default_kappa() -> f64 {
    0.5
}

fn default_cells() -> usize {
    8
}

fn default_modulus() -> f64 {
    1.0
}

fn default_fsi_steps() -> usize {
    40
}

fn default_amplitude() -> f64 {
    1.0
}

fn default_true() -> bool {
    true
}

/// Torus discretization block.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridConfig {
    pub modes_per_dim: usize,
    pub viscosity: f64,
}

/// Body forcing block; `kind` is `zero` or `taylor-green`.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ForcingConfig {
    pub kind: String,
    #[serde(default)]
    pub amplitude: f64,
}

impl Default for ForcingConfig {
    fn default() -> Self {
        ForcingConfig {
            kind: "zero".to_string(),
            amplitude: 0.0,
        }
    }
}

/// Initial velocity block; `kind` is `taylor-green` or `random-low-mode`.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct InitialConfig {
    pub kind: String,
    #[serde(default = "default_amplitude")]
    pub amplitude: f64,
    /// Largest excited wavenumber of a random initial field.
    #[serde(default)]
    pub max_wavenumber: Option<i64>,
}

impl Default for InitialConfig {
    fn default() -> Self {
        InitialConfig {
            kind: "taylor-green".to_string(),
            amplitude: 1.0,
            max_wavenumber: None,
        }
    }
}

/// Full-order run block.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FomConfig {
    #[serde(default = "default_theta")]
    pub theta: f64,
    pub dt: f64,
    pub steps: usize,
    #[serde(default = "default_solver_tol")]
    pub solver_tol: f64,
    #[serde(default = "default_max_iter")]
    pub max_iter: usize,
    /// Velocity-norm ball the trajectory is checked against. Absent
    /// means unbounded, so the containment flag is trivially true.
    #[serde(default)]
    pub regime_radius: Option<f64>,
}

/// Closure block inside `[rom]`; `kind` is `none`, `linear-damping`,
/// `eddy-viscosity`, or `damping-probe`. The probe accepts a negative
/// coefficient and exists to script dissipation-defect failures.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ClosureConfig {
    pub kind: String,
    #[serde(default)]
    pub alpha: Option<f64>,
    #[serde(default)]
    pub coefficient: Option<f64>,
    #[serde(default)]
    pub regime_radius: Option<f64>,
}

impl Default for ClosureConfig {
    fn default() -> Self {
        ClosureConfig {
            kind: "none".to_string(),
            alpha: None,
            coefficient: None,
            regime_radius: None,
        }
    }
}

/// Reduced-basis block.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RomConfig {
    pub dim: usize,
    #[serde(default = "default_regime_radius")]
    pub regime_radius: f64,
    #[serde(default)]
    pub closure: ClosureConfig,
    /// Every `snapshot_stride`-th full-order state feeds the basis.
    #[serde(default = "default_stride")]
    pub snapshot_stride: usize,
}

/// Certified reduced run block.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CertifyConfig {
    #[serde(default = "default_theta")]
    pub theta: f64,
    pub dt: f64,
    pub steps: usize,
    #[serde(default = "default_solver_tol")]
    pub solver_tol: f64,
    #[serde(default = "default_max_iter")]
    pub max_iter: usize,
    #[serde(default)]
    pub young_epsilon: Option<f64>,
    /// Energy-injection amplitude added to one convection tensor pair.
    /// Scripts a skew-defect failure; needs a reduced dimension of at
    /// least three.
    #[serde(default)]
    pub tamper_skew: Option<f64>,
}

/// Error-certificate block; `lipschitz` is `declared` or `estimated`.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EstimateConfig {
    pub lipschitz: String,
    #[serde(default)]
    pub lipschitz_value: Option<f64>,
    #[serde(default = "default_trials")]
    pub trials: usize,
    /// Regularity-ball convective constant of the rate report; the
    /// report is skipped when absent.
    #[serde(default)]
    pub apriori_regularity: Option<f64>,
    /// Measure the true error against the full-order states when the
    /// two runs share a step grid.
    #[serde(default = "default_true")]
    pub compare_reference: bool,
}

/// Transition-indicator block.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TransitionConfig {
    /// Amplitude of the cellular base flow the linearization expands
    /// around; zero means the rest state.
    #[serde(default)]
    pub base_amplitude: f64,
    #[serde(default = "default_truncation")]
    pub truncation: i64,
    pub sigma: f64,
    #[serde(default = "default_sweep_points")]
    pub sweep_points: usize,
    #[serde(default)]
    pub sweep_min: Option<f64>,
    pub theta_threshold: f64,
    pub forcing_bound: f64,
    /// Candidate vorticity-ball radius; the invariance check is
    /// skipped when absent.
    #[serde(default)]
    pub enstrophy_radius: Option<f64>,
    #[serde(default)]
    pub epsilon: Option<f64>,
}

/// Coupling-margin block.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FsiConfig {
    pub rho_f: f64,
    pub rho_s: f64,
    pub nu: f64,
    pub alpha: f64,
    pub dt: f64,
    #[serde(default = "default_kappa")]
    pub kappa: f64,
    #[serde(default = "default_cells")]
    pub fluid_cells: usize,
    #[serde(default = "default_cells")]
    pub structure_cells: usize,
    #[serde(default = "default_modulus")]
    pub elastic_modulus: f64,
    #[serde(default = "default_fsi_steps")]
    pub steps: usize,
    #[serde(default = "default_amplitude")]
    pub initial_amplitude: f64,
    /// Declared trace constant; measured from the testbed when absent.
    #[serde(default)]
    pub c_tr_h: Option<f64>,
    /// Declared stiffness-mass eigenvalue bound; measured when absent.
    #[serde(default)]
    pub lambda_h: Option<f64>,
}

/// Validated description of one run: scenario id, seed, and one block
/// per requested stage.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub scenario: String,
    pub seed: u64,
    #[serde(default)]
    pub output_dir: Option<PathBuf>,
    #[serde(default)]
    pub grid: Option<GridConfig>,
    #[serde(default)]
    pub forcing: ForcingConfig,
    #[serde(default)]
    pub initial: InitialConfig,
    #[serde(default)]
    pub fom: Option<FomConfig>,
    #[serde(default)]
    pub rom: Option<RomConfig>,
    #[serde(default)]
    pub certify: Option<CertifyConfig>,
    #[serde(default)]
    pub estimate: Option<EstimateConfig>,
    #[serde(default)]
    pub transition: Option<TransitionConfig>,
    #[serde(default)]
    pub fsi: Option<FsiConfig>,
}

fn push(violations: &mut Vec<SchemaViolation>, path: &str, message: String) {
    violations.push(SchemaViolation {
        path: path.to_string(),
        message,
    });
}

fn check_positive(violations: &mut Vec<SchemaViolation>, path: &str, value: f64) {
    if !value.is_finite() || value <= 0.0 {
        push(violations, path, format!("must be a positive finite number, got {value}"));
    }
}

fn check_nonnegative(violations: &mut Vec<SchemaViolation>, path: &str, value: f64) {
    if !value.is_finite() || value < 0.0 {
        push(violations, path, format!("must be a non-negative finite number, got {value}"));
    }
}

fn check_theta(violations: &mut Vec<SchemaViolation>, path: &str, theta: f64) {
    if !(0.5..=1.0).contains(&theta) {
        push(
            violations,
            path,
            format!("theta is {theta}; the energy-stable scheme family is the interval [1/2, 1]"),
        );
    }
}

fn check_step_block(
    violations: &mut Vec<SchemaViolation>,
    prefix: &str,
    theta: f64,
    dt: f64,
    steps: usize,
    solver_tol: f64,
    max_iter: usize,
) {
    check_theta(violations, &format!("{prefix}.theta"), theta);
    check_positive(violations, &format!("{prefix}.dt"), dt);
    if steps == 0 {
        push(violations, &format!("{prefix}.steps"), "must be at least 1".to_string());
    }
    check_positive(violations, &format!("{prefix}.solver_tol"), solver_tol);
    if max_iter == 0 {
        push(violations, &format!("{prefix}.max_iter"), "must be at least 1".to_string());
    }
}

impl RunConfig {
    /// Collects every semantic schema rule the parsed document breaks.
    pub fn validate(&self) -> Vec<SchemaViolation> {
        let mut v = Vec::new();
        if self.scenario.trim().is_empty() {
            push(&mut v, "scenario", "must be a non-empty id".to_string());
        }
        if let Some(grid) = &self.grid {
            if grid.modes_per_dim < 4 || grid.modes_per_dim % 2 != 0 {
                push(
                    &mut v,
                    "grid.modes_per_dim",
                    format!("must be an even number of at least 4, got {}", grid.modes_per_dim),
                );
            }
            check_positive(&mut v, "grid.viscosity", grid.viscosity);
        }
        match self.forcing.kind.as_str() {
            "zero" => {}
            "taylor-green" => check_nonnegative(&mut v, "forcing.amplitude", self.forcing.amplitude),
            other => push(
                &mut v,
                "forcing.kind",
                format!("unknown forcing `{other}`; supported kinds are `zero` and `taylor-green`"),
            ),
        }
        match self.initial.kind.as_str() {
            "taylor-green" | "random-low-mode" => {
                check_nonnegative(&mut v, "initial.amplitude", self.initial.amplitude);
            }
            other => push(
                &mut v,
                "initial.kind",
                format!(
                    "unknown initial state `{other}`; supported kinds are `taylor-green` and `random-low-mode`"
                ),
            ),
        }
        if let Some(k) = self.initial.max_wavenumber {
            if k < 1 {
                push(&mut v, "initial.max_wavenumber", format!("must be at least 1, got {k}"));
            }
        }
        if let Some(fom) = &self.fom {
            check_step_block(&mut v, "fom", fom.theta, fom.dt, fom.steps, fom.solver_tol, fom.max_iter);
            if let Some(r) = fom.regime_radius {
                check_positive(&mut v, "fom.regime_radius", r);
            }
        }
        if let Some(rom) = &self.rom {
            if rom.dim == 0 {
                push(&mut v, "rom.dim", "must be at least 1".to_string());
            }
            check_positive(&mut v, "rom.regime_radius", rom.regime_radius);
            if rom.snapshot_stride == 0 {
                push(&mut v, "rom.snapshot_stride", "must be at least 1".to_string());
            }
            self.validate_closure(&rom.closure, &mut v);
        }
        if let Some(certify) = &self.certify {
            check_step_block(
                &mut v,
                "certify",
                certify.theta,
                certify.dt,
                certify.steps,
                certify.solver_tol,
                certify.max_iter,
            );
            if let Some(eps) = certify.young_epsilon {
                check_positive(&mut v, "certify.young_epsilon", eps);
                if let Some(grid) = &self.grid {
                    if eps >= grid.viscosity {
                        push(
                            &mut v,
                            "certify.young_epsilon",
                            format!("must stay below the viscosity {}, got {eps}", grid.viscosity),
                        );
                    }
                }
            }
            if let Some(delta) = certify.tamper_skew {
                if !delta.is_finite() {
                    push(&mut v, "certify.tamper_skew", format!("must be finite, got {delta}"));
                }
                if self.rom.as_ref().map(|r| r.dim < 3).unwrap_or(true) {
                    push(
                        &mut v,
                        "certify.tamper_skew",
                        "needs a reduced dimension of at least 3 to perturb a tensor pair".to_string(),
                    );
                }
            }
        }
        if let Some(estimate) = &self.estimate {
            match estimate.lipschitz.as_str() {
                "declared" => match estimate.lipschitz_value {
                    Some(value) => check_nonnegative(&mut v, "estimate.lipschitz_value", value),
                    None => push(
                        &mut v,
                        "estimate.lipschitz_value",
                        "required when estimate.lipschitz is `declared`".to_string(),
                    ),
                },
                "estimated" => {
                    if estimate.trials == 0 {
                        push(&mut v, "estimate.trials", "must be at least 1".to_string());
                    }
                }
                other => push(
                    &mut v,
                    "estimate.lipschitz",
                    format!("unknown mode `{other}`; supported modes are `declared` and `estimated`"),
                ),
            }
            if let Some(l) = estimate.apriori_regularity {
                check_nonnegative(&mut v, "estimate.apriori_regularity", l);
            }
        }
        if let Some(t) = &self.transition {
            check_nonnegative(&mut v, "transition.base_amplitude", t.base_amplitude);
            if t.truncation < 1 {
                push(&mut v, "transition.truncation", format!("must be at least 1, got {}", t.truncation));
            }
            check_positive(&mut v, "transition.sigma", t.sigma);
            if t.sweep_points < 2 {
                push(&mut v, "transition.sweep_points", "must be at least 2".to_string());
            }
            if let Some(min) = t.sweep_min {
                check_positive(&mut v, "transition.sweep_min", min);
                if min.is_finite() && t.sigma.is_finite() && min > t.sigma {
                    push(
                        &mut v,
                        "transition.sweep_min",
                        format!("must not exceed transition.sigma = {}, got {min}", t.sigma),
                    );
                }
            }
            check_positive(&mut v, "transition.theta_threshold", t.theta_threshold);
            check_nonnegative(&mut v, "transition.forcing_bound", t.forcing_bound);
            if let Some(r) = t.enstrophy_radius {
                check_nonnegative(&mut v, "transition.enstrophy_radius", r);
            }
            if let (Some(eps), Some(grid)) = (t.epsilon, &self.grid) {
                if !eps.is_finite() || eps <= 0.0 || eps >= grid.viscosity {
                    push(
                        &mut v,
                        "transition.epsilon",
                        format!("must lie strictly between 0 and the viscosity {}, got {eps}", grid.viscosity),
                    );
                }
            }
        }
        if let Some(fsi) = &self.fsi {
            check_positive(&mut v, "fsi.rho_f", fsi.rho_f);
            check_positive(&mut v, "fsi.rho_s", fsi.rho_s);
            check_positive(&mut v, "fsi.nu", fsi.nu);
            check_positive(&mut v, "fsi.alpha", fsi.alpha);
            check_positive(&mut v, "fsi.dt", fsi.dt);
            if !fsi.kappa.is_finite() || fsi.kappa <= 0.0 || fsi.kappa >= 1.0 {
                push(
                    &mut v,
                    "fsi.kappa",
                    format!("must lie strictly between 0 and 1, got {}", fsi.kappa),
                );
            }
            if fsi.fluid_cells < 2 {
                push(&mut v, "fsi.fluid_cells", "must be at least 2".to_string());
            }
            if fsi.structure_cells < 2 {
                push(&mut v, "fsi.structure_cells", "must be at least 2".to_string());
            }
            check_positive(&mut v, "fsi.elastic_modulus", fsi.elastic_modulus);
            check_nonnegative(&mut v, "fsi.initial_amplitude", fsi.initial_amplitude);
            if let Some(c) = fsi.c_tr_h {
                check_positive(&mut v, "fsi.c_tr_h", c);
            }
            if let Some(l) = fsi.lambda_h {
                check_nonnegative(&mut v, "fsi.lambda_h", l);
            }
        }
        v
    }

    fn validate_closure(&self, closure: &ClosureConfig, v: &mut Vec<SchemaViolation>) {
        match closure.kind.as_str() {
            "none" => {}
            "linear-damping" => match closure.alpha {
                Some(alpha) => check_nonnegative(v, "rom.closure.alpha", alpha),
                None => push(v, "rom.closure.alpha", "required for `linear-damping`".to_string()),
            },
            "damping-probe" => match closure.alpha {
                Some(alpha) => {
                    if !alpha.is_finite() {
                        push(v, "rom.closure.alpha", format!("must be finite, got {alpha}"));
                    }
                }
                None => push(v, "rom.closure.alpha", "required for `damping-probe`".to_string()),
            },
            "eddy-viscosity" => {
                match closure.coefficient {
                    Some(c) => check_nonnegative(v, "rom.closure.coefficient", c),
                    None => push(v, "rom.closure.coefficient", "required for `eddy-viscosity`".to_string()),
                }
                match closure.regime_radius {
                    Some(r) => check_positive(v, "rom.closure.regime_radius", r),
                    None => push(v, "rom.closure.regime_radius", "required for `eddy-viscosity`".to_string()),
                }
            }
            other => push(
                v,
                "rom.closure.kind",
                format!(
                    "unknown closure `{other}`; supported kinds are `none`, `linear-damping`, `eddy-viscosity`, and `damping-probe`"
                ),
            ),
        }
    }
}

fn toml_schema_error(err: toml::de::Error) -> ReportError {
    let mut message = err.to_string();
    if message.contains("unknown field") {
        for feature in UNSUPPORTED_FEATURES {
            if message.contains(feature) {
                message = format!("explicitly unsupported feature `{feature}`: {message}");
                break;
            }
        }
    }
    ReportError::Schema {
        violations: vec![SchemaViolation {
            path: "config".to_string(),
            message,
        }],
    }
}

/// Parses and validates a config document.
pub fn parse_config_str(text: &str) -> Result<RunConfig, ReportError> {
    let config: RunConfig = toml::from_str(text).map_err(toml_schema_error)?;
    let violations = config.validate();
    if violations.is_empty() {
        Ok(config)
    } else {
        Err(ReportError::Schema { violations })
    }
}

/// Reads and validates a config file.
pub fn parse_config(path: &Path) -> Result<RunConfig, ReportError> {
    let text = fs::read_to_string(path).map_err(|source| ReportError::Io {
        path: path.display().to_string(),
        source,
    })?;
    parse_config_str(&text)
}

/// Which pipeline stages a run executes. Later stages consume earlier
/// outputs: the basis needs full-order snapshots, the certified run
/// needs the reduced operators, and the certificate needs the
/// certified trajectory.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize)]
pub struct StageSet {
    pub fom: bool,
    pub rom: bool,
    pub certify: bool,
    pub estimate: bool,
    pub transition: bool,
    pub fsi_margin: bool,
    pub fsi_run: bool,
}

impl StageSet {
    pub fn fom_only() -> Self {
        StageSet {
            fom: true,
            ..StageSet::default()
        }
    }

    pub fn through_pod() -> Self {
        StageSet {
            fom: true,
            rom: true,
            ..StageSet::default()
        }
    }

    pub fn through_certify() -> Self {
        StageSet {
            certify: true,
            ..StageSet::through_pod()
        }
    }

    pub fn through_estimate() -> Self {
        StageSet {
            estimate: true,
            ..StageSet::through_certify()
        }
    }

    pub fn transition_only() -> Self {
        StageSet {
            transition: true,
            ..StageSet::default()
        }
    }

    pub fn fsi_margin_only() -> Self {
        StageSet {
            fsi_margin: true,
            ..StageSet::default()
        }
    }

    pub fn fsi_with_run() -> Self {
        StageSet {
            fsi_margin: true,
            fsi_run: true,
            ..StageSet::default()
        }
    }

    /// Every stage the config carries a section for.
    pub fn requested_by(config: &RunConfig) -> Self {
        StageSet {
            fom: config.fom.is_some(),
            rom: config.rom.is_some(),
            certify: config.certify.is_some(),
            estimate: config.estimate.is_some(),
            transition: config.transition.is_some(),
            fsi_margin: config.fsi.is_some(),
            fsi_run: config.fsi.as_ref().map(|f| f.steps > 0).unwrap_or(false),
        }
    }

    pub fn names(&self) -> Vec<String> {
        let mut names = Vec::new();
        if self.fom {
            names.push("fom".to_string());
        }
        if self.rom {
            names.push("rom".to_string());
        }
        if self.certify {
            names.push("certify".to_string());
        }
        if self.estimate {
            names.push("estimate".to_string());
        }
        if self.transition {
            names.push("transition".to_string());
        }
        if self.fsi_margin {
            names.push("fsi-margin".to_string());
        }
        if self.fsi_run {
            names.push("fsi-run".to_string());
        }
        names
    }
}

/// A named number used by a reported bound, with how it was obtained:
/// `declared` (taken from the config), `computed` (exact arithmetic on
/// run data), or `estimated` (sampled, a lower envelope).
#[derive(Debug, Clone, Serialize)]
pub struct ConstantRecord {
    pub name: String,
    pub value: f64,
    pub provenance: String,
}

/// Inventory row of one emitted artifact file.
#[derive(Debug, Clone, Serialize)]
pub struct ArtifactRecord {
    pub name: String,
    pub sha256: String,
    pub bytes: usize,
}

#[derive(Debug, Clone, Serialize)]
pub struct FomSection {
    pub steps_requested: usize,
    pub steps_completed: usize,
    pub completed: bool,
    pub final_time: f64,
    pub initial_l2: f64,
    pub final_l2: f64,
    pub sup_l2: f64,
    pub regime_radius: Option<f64>,
    pub regime_ok: bool,
    pub failure: Option<StepFailure>,
}

#[derive(Debug, Clone, Serialize)]
pub struct RomSection {
    pub dim: usize,
    pub modes_per_dim: usize,
    pub snapshots_used: usize,
    pub spectrum: Vec<f64>,
    pub tail_energy: f64,
    pub regime_radius: f64,
    pub closure: serde_json::Value,
    pub operator_digest: String,
    pub tampered: bool,
}

#[derive(Debug, Clone, Serialize)]
pub struct CertifySection {
    pub steps_requested: usize,
    pub steps_completed: usize,
    pub completed: bool,
    pub theta: f64,
    pub dt: f64,
    pub young_epsilon: f64,
    pub all_certified: bool,
    pub sup_state_sq: f64,
    pub dissipation_sum: f64,
    pub final_plus_dissipation: f64,
    pub bound_lhs: f64,
    pub bound_rhs: f64,
    pub bound_certified: bool,
    pub defects: DefectSummary,
    pub operator_digest: String,
    pub failure: Option<StepFailure>,
}

#[derive(Debug, Clone, Serialize)]
pub struct EstimateSection {
    pub certificate: ErrorCertificate,
    pub residual_nodes: usize,
    pub quadrature_rule: String,
    pub riesz_solver_tol: f64,
    pub operator_digest_match: bool,
    /// `estimated` when any constant in the bound is sampled rather
    /// than declared or computed; such a bound does not certify the
    /// regime unconditionally.
    pub bound_provenance: String,
    pub caveat: Option<String>,
    pub apriori: Option<AprioriReport>,
}

#[derive(Debug, Clone, Serialize)]
pub struct ResolventSection {
    pub sigma: f64,
    pub norm: f64,
    pub truncation: i64,
    pub operator_dim: usize,
    pub sweep_points: usize,
}

#[derive(Debug, Clone, Serialize)]
pub struct TransitionSection {
    pub base_amplitude: f64,
    pub barrier: BarrierVerdict,
    pub enstrophy: Option<EnstrophyVerdict>,
    pub initial_enstrophy: f64,
    pub forcing_curl_l2: f64,
    pub resolvent: ResolventSection,
    pub amplification: AmplificationVerdict,
    /// One block per indicator: the inequality, every constant with
    /// its provenance, and the verdict.
    pub narratives: Vec<String>,
}

#[derive(Debug, Clone, Serialize)]
pub struct FsiTestbedSection {
    pub fluid_cells: usize,
    pub structure_cells: usize,
    pub elastic_modulus: f64,
    pub fluid_dofs: usize,
    pub structure_dofs: usize,
    pub measured_trace_constant: f64,
    pub measured_lambda: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct FsiRunSection {
    pub steps_requested: usize,
    pub steps_completed: usize,
    pub completed: bool,
    pub ledger_certified: bool,
    pub ledger_tol: f64,
    pub initial_energy: f64,
    pub final_energy: f64,
    pub min_slack: f64,
    pub energy_growth_steps: usize,
    pub failure: Option<String>,
}

#[derive(Debug, Clone, Serialize)]
pub struct FsiSection {
    pub margin: MarginReport,
    pub trace_provenance: String,
    pub lambda_provenance: String,
    pub testbed: FsiTestbedSection,
    pub run: Option<FsiRunSection>,
    pub note: String,
}

/// Everything one run produced: config echo, per-stage sections, the
/// constants behind every reported bound, the flag table, and the
/// artifact inventory. The flag table is present even when a stage
/// failed; absent stages leave their flags not applicable.
#[derive(Debug, Clone, Serialize)]
pub struct RunReport {
    pub format: String,
    pub scenario: String,
    pub seed: u64,
    pub stages: Vec<String>,
    pub config: RunConfig,
    pub flags: FlagTable,
    pub constants: Vec<ConstantRecord>,
    pub fom: Option<FomSection>,
    pub rom: Option<RomSection>,
    pub certify: Option<CertifySection>,
    pub estimate: Option<EstimateSection>,
    pub transition: Option<TransitionSection>,
    pub fsi: Option<FsiSection>,
    pub artifacts: Vec<ArtifactRecord>,
    #[serde(skip)]
    artifact_bytes: Vec<(String, Vec<u8>)>,
}

impl RunReport {
    /// Exit status of the run: success only when no requested flag is
    /// false.
    pub fn all_flags_pass(&self) -> bool {
        self.flags.all_pass()
    }

    /// Emitted artifact payloads, name first.
    pub fn artifact_payloads(&self) -> &[(String, Vec<u8>)] {
        &self.artifact_bytes
    }

    fn add_artifact(&mut self, name: &str, bytes: Vec<u8>) {
        let mut hasher = Sha256::new();
        hasher.update(&bytes);
        let sha256 = hasher
            .finalize()
            .iter()
            .map(|byte| format!("{byte:02x}"))
            .collect::<String>();
        self.artifacts.push(ArtifactRecord {
            name: name.to_string(),
            sha256,
            bytes: bytes.len(),
        });
        self.artifact_bytes.push((name.to_string(), bytes));
    }

    fn add_constant(&mut self, name: &str, value: f64, provenance: &str) {
        self.constants.push(ConstantRecord {
            name: name.to_string(),
            value,
            provenance: provenance.to_string(),
        });
    }
}

struct GridStage {
    grid: TorusGrid,
    forcing: ForcingSpec,
    forcing_curl_l2: f64,
    initial: SpectralVelocity,
}

fn build_grid_stage(
    config: &RunConfig,
    stage: &'static str,
) -> Result<GridStage, ReportError> {
    let grid_cfg = config.grid.as_ref().ok_or(ReportError::MissingSection {
        stage,
        section: "grid",
    })?;
    let grid = TorusGrid::new(grid_cfg.modes_per_dim, grid_cfg.viscosity)
        .map_err(|e| ReportError::stage(stage, e))?;
    let (forcing, forcing_curl_l2) = match config.forcing.kind.as_str() {
        "zero" => (ForcingSpec::Zero, 0.0),
        "taylor-green" => {
            let field = taylor_green(&grid, config.forcing.amplitude);
            let curl = field.curl().l2_norm();
            let spec = ForcingSpec::constant(&grid, &field).map_err(|e| ReportError::stage(stage, e))?;
            (spec, curl)
        }
        other => unreachable!("validated forcing kind: {other}"),
    };
    let initial = match config.initial.kind.as_str() {
        "taylor-green" => taylor_green(&grid, config.initial.amplitude),
        "random-low-mode" => {
            let kmax = config
                .initial
                .max_wavenumber
                .unwrap_or_else(|| grid.dealias_max_wavenumber().min(3))
                .min(grid.dealias_max_wavenumber());
            let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
            SpectralVelocity::random_low_mode(&grid, kmax, config.initial.amplitude, &mut rng)
        }
        other => unreachable!("validated initial kind: {other}"),
    };
    Ok(GridStage {
        grid,
        forcing,
        forcing_curl_l2,
        initial,
    })
}

fn failure_note(failure: &StepFailure) -> String {
    format!(
        "solver stalled at step {} after {} iterations (last update {}, tolerance {})",
        failure.step, failure.iterations, failure.last_update, failure.tolerance
    )
}

/// Executes the requested stages on a validated config and folds their
/// outputs into one report. Missing config sections and broken stage
/// chains are hard errors; a stage that runs but fails certification
/// is recorded in the report and reflected by the flags instead.
pub fn orchestrate(config: &RunConfig, stages: StageSet) -> Result<RunReport, ReportError> {
    let mut report = RunReport {
        format: REPORT_FORMAT.to_string(),
        scenario: config.scenario.clone(),
        seed: config.seed,
        stages: stages.names(),
        config: config.clone(),
        flags: FlagTable::empty(),
        constants: Vec::new(),
        fom: None,
        rom: None,
        certify: None,
        estimate: None,
        transition: None,
        fsi: None,
        artifacts: Vec::new(),
        artifact_bytes: Vec::new(),
    };

    if stages.rom && !stages.fom {
        return Err(ReportError::MissingStage {
            stage: "rom",
            needs: "fom",
        });
    }
    if stages.certify && !stages.rom {
        return Err(ReportError::MissingStage {
            stage: "certify",
            needs: "rom",
        });
    }
    if stages.estimate && !stages.certify {
        return Err(ReportError::MissingStage {
            stage: "estimate",
            needs: "certify",
        });
    }
    if stages.fsi_run && !stages.fsi_margin {
        return Err(ReportError::MissingStage {
            stage: "fsi-run",
            needs: "fsi-margin",
        });
    }

    let needs_grid = stages.fom || stages.transition;
    let grid_stage = if needs_grid {
        let first = if stages.fom { "fom" } else { "transition" };
        Some(build_grid_stage(config, first)?)
    } else {
        None
    };

    let mut fom_states: Option<(Vec<SpectralVelocity>, f64)> = None;
    if stages.fom {
        let gs = grid_stage.as_ref().expect("grid built for fom");
        let fom_cfg = config.fom.as_ref().ok_or(ReportError::MissingSection {
            stage: "fom",
            section: "fom",
        })?;
        let step_cfg = StepConfig::new(fom_cfg.theta, fom_cfg.dt, fom_cfg.solver_tol, fom_cfg.max_iter)
            .map_err(|e| ReportError::stage("fom", e))?;
        let run = fom_run(&gs.grid, &gs.initial, &gs.forcing, &step_cfg, fom_cfg.steps);
        let norms: Vec<f64> = run.states.iter().map(|s| s.l2_norm()).collect();
        let sup = norms.iter().cloned().fold(0.0, f64::max);
        let regime_ok = fom_cfg
            .regime_radius
            .map(|r| norms.iter().all(|&n| n <= r))
            .unwrap_or(true);
        let final_time = *run.times.last().expect("run holds the initial time");
        let snapshot = io::snapshot_to_csv(run.final_state(), gs.grid.viscosity(), final_time);
        report.add_artifact("snapshot_final.csv", snapshot.into_bytes());
        report.flags.regime_ok = Some(regime_ok);
        report.fom = Some(FomSection {
            steps_requested: fom_cfg.steps,
            steps_completed: run.states.len() - 1,
            completed: run.completed(),
            final_time,
            initial_l2: norms[0],
            final_l2: *norms.last().expect("at least the initial state"),
            sup_l2: sup,
            regime_radius: fom_cfg.regime_radius,
            regime_ok,
            failure: run.failure.clone(),
        });
        fom_states = Some((run.states, fom_cfg.dt));
    }

    let mut rom_parts: Option<(RomBasis, ReducedOperators, RegimeSet)> = None;
    if stages.rom {
        let gs = grid_stage.as_ref().expect("grid built for rom");
        let rom_cfg = config.rom.as_ref().ok_or(ReportError::MissingSection {
            stage: "rom",
            section: "rom",
        })?;
        let (states, _) = fom_states.as_ref().expect("fom ran before rom");
        let selected: Vec<SpectralVelocity> = states
            .iter()
            .step_by(rom_cfg.snapshot_stride)
            .cloned()
            .collect();
        let snapshots = SnapshotSet::from_states(selected).map_err(|e| ReportError::stage("rom", e))?;
        let basis = pod_basis(&snapshots, rom_cfg.dim).map_err(|e| ReportError::stage("rom", e))?;
        let closure = match rom_cfg.closure.kind.as_str() {
            "none" => Closure::none(),
            "linear-damping" => {
                Closure::linear_damping(rom_cfg.closure.alpha.expect("validated alpha"))
                    .map_err(|e| ReportError::stage("rom", e))?
            }
            "damping-probe" => Closure::damping_probe(rom_cfg.closure.alpha.expect("validated alpha")),
            "eddy-viscosity" => Closure::eddy_viscosity(
                rom_cfg.closure.coefficient.expect("validated coefficient"),
                rom_cfg.closure.regime_radius.expect("validated radius"),
            )
            .map_err(|e| ReportError::stage("rom", e))?,
            other => unreachable!("validated closure kind: {other}"),
        };
        let mut ops = assemble_reduced(&gs.grid, &basis, &gs.forcing, closure.clone())
            .map_err(|e| ReportError::stage("rom", e))?;
        let tamper = stages
            .certify
            .then(|| config.certify.as_ref().and_then(|c| c.tamper_skew))
            .flatten();
        if let Some(delta) = tamper {
            ops.break_skew_pair(0, 1, 2, delta);
        }
        report.add_artifact("rom.bin", io::rom_container_bytes(&basis, &ops));
        report.add_artifact("rom_manifest.json", io::rom_manifest(&basis, &ops).into_bytes());
        report.rom = Some(RomSection {
            dim: basis.dim(),
            modes_per_dim: basis.modes_per_dim(),
            snapshots_used: snapshots.len(),
            spectrum: basis.spectrum().to_vec(),
            tail_energy: basis.tail_energy(),
            regime_radius: rom_cfg.regime_radius,
            closure: io::closure_json(ops.closure()),
            operator_digest: ops.digest().to_string(),
            tampered: tamper.is_some(),
        });
        let regime = RegimeSet::new(rom_cfg.regime_radius).map_err(|e| ReportError::stage("rom", e))?;
        rom_parts = Some((basis, ops, regime));
    }

    let mut certified: Option<(CertifiedRun, f64)> = None;
    if stages.certify {
        let gs = grid_stage.as_ref().expect("grid built for certify");
        let certify_cfg = config.certify.as_ref().ok_or(ReportError::MissingSection {
            stage: "certify",
            section: "certify",
        })?;
        let (basis, ops, regime) = rom_parts.as_ref().expect("rom ran before certify");
        let mut step_cfg = CertStepConfig::new(
            gs.grid.viscosity(),
            certify_cfg.theta,
            certify_cfg.dt,
            certify_cfg.solver_tol,
            certify_cfg.max_iter,
        )
        .map_err(|e| ReportError::stage("certify", e))?;
        if let Some(eps) = certify_cfg.young_epsilon {
            step_cfg = step_cfg
                .with_young_epsilon(eps)
                .map_err(|e| ReportError::stage("certify", e))?;
        }
        let initial = basis.project(&gs.initial);
        let run = run_certified(ops, regime, &initial, &step_cfg, certify_cfg.steps, config.seed)
            .map_err(|e| ReportError::stage("certify", e))?;
        report.add_artifact("ledger.csv", io::ledger_csv(&run.ledger).into_bytes());
        report.flags.skew_ok = run.flags.skew_ok;
        report.flags.diss_ok = run.flags.diss_ok;
        report.flags.regime_ok = run.flags.regime_ok;
        report.add_constant("certify.young_epsilon", run.ledger.young_epsilon, "declared");
        report.add_constant("certify.sup_state_sq", run.ledger.sup_state_sq, "computed");
        report.add_constant("certify.dissipation_sum", run.ledger.dissipation_sum, "computed");
        report.add_constant("certify.bound_lhs", run.ledger.bound_lhs, "computed");
        report.add_constant("certify.bound_rhs", run.ledger.bound_rhs, "computed");
        report.certify = Some(CertifySection {
            steps_requested: certify_cfg.steps,
            steps_completed: run.states.len() - 1,
            completed: run.completed(),
            theta: certify_cfg.theta,
            dt: certify_cfg.dt,
            young_epsilon: run.ledger.young_epsilon,
            all_certified: run.ledger.all_certified,
            sup_state_sq: run.ledger.sup_state_sq,
            dissipation_sum: run.ledger.dissipation_sum,
            final_plus_dissipation: run.ledger.final_plus_dissipation,
            bound_lhs: run.ledger.bound_lhs,
            bound_rhs: run.ledger.bound_rhs,
            bound_certified: run.ledger.bound_certified,
            defects: run.defects.clone(),
            operator_digest: run.operator_digest.clone(),
            failure: run.failure.clone(),
        });
        certified = Some((run, certify_cfg.dt));
    }

    if stages.estimate {
        let gs = grid_stage.as_ref().expect("grid built for estimate");
        let estimate_cfg = config.estimate.as_ref().ok_or(ReportError::MissingSection {
            stage: "estimate",
            section: "estimate",
        })?;
        let (basis, ops, regime) = rom_parts.as_ref().expect("rom ran before estimate");
        let (run, dt) = certified.as_ref().expect("certify ran before estimate");
        let lipschitz = match estimate_cfg.lipschitz.as_str() {
            "declared" => ConvectiveLipschitz::declared(
                estimate_cfg.lipschitz_value.expect("validated value"),
            )
            .map_err(|e| ReportError::stage("estimate", e))?,
            "estimated" => ConvectiveLipschitz::estimated(
                &gs.grid,
                basis,
                regime,
                estimate_cfg.trials,
                config.seed,
            )
            .map_err(|e| ReportError::stage("estimate", e))?,
            other => unreachable!("validated lipschitz mode: {other}"),
        };
        let reference: Option<&[SpectralVelocity]> = match (&fom_states, estimate_cfg.compare_reference) {
            (Some((states, fom_dt)), true)
                if *fom_dt == *dt && states.len() >= run.states.len() =>
            {
                Some(&states[..run.states.len()])
            }
            _ => None,
        };
        let (certificate, series) = error_certificate(
            &gs.grid,
            basis,
            ops,
            &run.states,
            *dt,
            &gs.initial,
            lipschitz,
            reference,
        )
        .map_err(|e| ReportError::stage("estimate", e))?;
        let digest_match = series.operator_digest == run.operator_digest;
        report.flags.residual_computed = Some(digest_match);
        let estimated = certificate.lipschitz.provenance == Provenance::Estimated;
        let bound_provenance = if estimated { "estimated" } else { "computed" };
        let caveat = estimated.then(|| {
            "the convective constant is a sampled lower envelope, so the bound is estimated and does not certify the regime unconditionally".to_string()
        });
        let apriori = match estimate_cfg.apriori_regularity {
            Some(l_reg) => {
                let (epsilon_n, source) = match reference {
                    Some(reference) => (
                        best_approximation_epsilon(&gs.grid, basis, reference, *dt)
                            .map_err(|e| ReportError::stage("estimate", e))?,
                        EpsilonSource::ExactAgainstReference,
                    ),
                    None => (pod_tail_epsilon(basis), EpsilonSource::PodTailSurrogate),
                };
                Some(
                    apriori_report(epsilon_n, source, l_reg, ops.viscosity(), series.horizon)
                        .map_err(|e| ReportError::stage("estimate", e))?,
                )
            }
            None => None,
        };
        report.add_artifact("residual.csv", io::residual_csv(&series).into_bytes());
        report.add_constant("estimate.eta", certificate.eta, "computed");
        report.add_constant(
            "estimate.lipschitz",
            certificate.lipschitz.value,
            certificate.lipschitz.provenance.label(),
        );
        report.add_constant("estimate.closure_lipschitz", certificate.closure_lipschitz, "computed");
        report.add_constant("estimate.viscosity", certificate.viscosity, "declared");
        report.add_constant("estimate.horizon", certificate.horizon, "computed");
        report.add_constant("estimate.gronwall_factor", certificate.gronwall_factor, bound_provenance);
        report.add_constant("estimate.bound", certificate.bound, bound_provenance);
        if let Some(error) = certificate.true_error {
            report.add_constant("estimate.true_error", error, "computed");
        }
        if let Some(effectivity) = certificate.effectivity {
            report.add_constant("estimate.effectivity", effectivity, bound_provenance);
        }
        if let Some(apriori) = &apriori {
            report.add_constant("estimate.apriori_epsilon_n", apriori.epsilon_n, "computed");
            report.add_constant("estimate.apriori_l_reg", apriori.l_reg, "declared");
            report.add_constant("estimate.apriori_bound", apriori.bound, "computed");
        }
        report.estimate = Some(EstimateSection {
            certificate,
            residual_nodes: series.len(),
            quadrature_rule: series.rule.clone(),
            riesz_solver_tol: series.riesz_solver_tol,
            operator_digest_match: digest_match,
            bound_provenance: bound_provenance.to_string(),
            caveat,
            apriori,
        });
    }

    if stages.transition {
        let gs = grid_stage.as_ref().expect("grid built for transition");
        let t_cfg = config.transition.as_ref().ok_or(ReportError::MissingSection {
            stage: "transition",
            section: "transition",
        })?;
        let nu = gs.grid.viscosity();
        let base = taylor_green(&gs.grid, t_cfg.base_amplitude);
        let flow = shear_constant(&gs.grid, &base).map_err(|e| ReportError::stage("transition", e))?;
        let barrier = energy_barrier_check(&flow, nu);

        let initial_enstrophy = gs.initial.curl().l2_norm();
        let enstrophy = match t_cfg.enstrophy_radius {
            Some(radius) => {
                let samples = vec![(0.0, gs.forcing_curl_l2)];
                let input = EnstrophyThresholdInput::new(
                    2,
                    nu,
                    t_cfg.epsilon,
                    VORTICITY_POINCARE,
                    samples,
                    radius,
                )
                .map_err(|e| ReportError::stage("transition", e))?;
                Some(enstrophy_threshold_check(&input, initial_enstrophy))
            }
            None => None,
        };

        let operator = linearized_operator(&gs.grid, &flow, nu, t_cfg.truncation)
            .map_err(|e| ReportError::stage("transition", e))?;
        let norm = resolvent_norm(&operator, t_cfg.sigma)
            .map_err(|e| ReportError::stage("transition", e))?;
        let query = ResolventQuery::new(
            t_cfg.sigma,
            t_cfg.truncation,
            t_cfg.theta_threshold,
            t_cfg.forcing_bound,
        )
        .map_err(|e| ReportError::stage("transition", e))?;
        let amplification = amplification_verdict(&query, norm);

        let sweep_min = t_cfg.sweep_min.unwrap_or(t_cfg.sigma / 10.0);
        let mut sweep = Vec::with_capacity(t_cfg.sweep_points);
        for i in 0..t_cfg.sweep_points {
            let fraction = i as f64 / (t_cfg.sweep_points - 1) as f64;
            let sigma = sweep_min + fraction * (t_cfg.sigma - sweep_min);
            let value = resolvent_norm(&operator, sigma)
                .map_err(|e| ReportError::stage("transition", e))?;
            sweep.push((sigma, value));
        }
        report.add_artifact("sigma_sweep.csv", io::sigma_sweep_csv(&sweep).into_bytes());

        let mut narratives = Vec::new();
        narratives.push(format!(
            "indicator: energy-barrier\ninequality: nu > gamma_U * C_P\nnu = {} (declared)\ngamma_U = {} (computed, collocation sup of the base-flow gradient on a doubled grid)\nC_P = {} (declared)\n{}",
            nu,
            flow.gamma_u(),
            VELOCITY_POINCARE,
            barrier.describe()
        ));
        if let Some(verdict) = &enstrophy {
            narratives.push(format!(
                "indicator: enstrophy-ball\ninequality: G^2/(4 eps) <= (nu - eps) R^2 / (2 C^2)\nnu = {} (declared)\neps = {} (declared)\nC = {} (declared)\nsup G = {} (computed, forcing curl norm)\ninitial enstrophy = {} (computed)\n{}",
                verdict.viscosity,
                verdict.epsilon,
                verdict.vorticity_poincare,
                gs.forcing_curl_l2,
                initial_enstrophy,
                verdict.describe()
            ));
        }
        narratives.push(format!(
            "indicator: resolvent-amplification\ninequality: |resolvent| * forcing_bound > threshold\nsigma = {} (declared)\n|resolvent| = {} (computed, smallest singular value of the shifted operator)\nforcing_bound = {} (declared)\nthreshold = {} (declared)\n{}",
            t_cfg.sigma,
            norm,
            t_cfg.forcing_bound,
            t_cfg.theta_threshold,
            amplification.describe()
        ));

        report.add_constant("transition.gamma_u", flow.gamma_u(), "computed");
        report.add_constant("transition.velocity_poincare", VELOCITY_POINCARE, "declared");
        report.add_constant("transition.barrier_margin", barrier.margin, "computed");
        if let Some(verdict) = &enstrophy {
            report.add_constant("transition.r_min", verdict.r_min, "computed");
            report.add_constant("transition.epsilon", verdict.epsilon, "declared");
            report.add_constant("transition.vorticity_poincare", verdict.vorticity_poincare, "declared");
        }
        report.add_constant("transition.sigma", t_cfg.sigma, "declared");
        report.add_constant("transition.resolvent_norm", norm, "computed");
        report.add_constant("transition.amplification", amplification.amplification, "computed");
        report.add_constant("transition.theta_threshold", t_cfg.theta_threshold, "declared");
        report.add_constant("transition.forcing_bound", t_cfg.forcing_bound, "declared");

        report.transition = Some(TransitionSection {
            base_amplitude: t_cfg.base_amplitude,
            barrier,
            enstrophy,
            initial_enstrophy,
            forcing_curl_l2: gs.forcing_curl_l2,
            resolvent: ResolventSection {
                sigma: t_cfg.sigma,
                norm,
                truncation: t_cfg.truncation,
                operator_dim: operator.dim(),
                sweep_points: t_cfg.sweep_points,
            },
            amplification,
            narratives,
        });
    }

    if stages.fsi_margin {
        let fsi_cfg = config.fsi.as_ref().ok_or(ReportError::MissingSection {
            stage: "fsi-margin",
            section: "fsi",
        })?;
        let testbed_cfg = TestbedConfig::new(
            fsi_cfg.fluid_cells,
            fsi_cfg.structure_cells,
            fsi_cfg.elastic_modulus,
        )
        .map_err(|e| ReportError::stage("fsi-margin", e))?;
        let testbed = Testbed::assemble(testbed_cfg).map_err(|e| ReportError::stage("fsi-margin", e))?;
        let trace_provenance = if fsi_cfg.c_tr_h.is_some() { "declared" } else { "computed" };
        let lambda_provenance = if fsi_cfg.lambda_h.is_some() { "declared" } else { "computed" };
        let c_tr_h = fsi_cfg.c_tr_h.unwrap_or_else(|| testbed.trace_constant());
        let lambda = fsi_cfg.lambda_h.unwrap_or_else(|| testbed.stiffness_ratio());
        let params = FsiParams::new(
            fsi_cfg.rho_f,
            fsi_cfg.rho_s,
            fsi_cfg.nu,
            c_tr_h,
            lambda,
            fsi_cfg.alpha,
            fsi_cfg.dt,
            fsi_cfg.elastic_modulus,
            fsi_cfg.kappa,
        )
        .map_err(|e| ReportError::stage("fsi-margin", e))?;

        let (margin, run_section) = if stages.fsi_run {
            let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
            let initial = testbed.random_state(fsi_cfg.initial_amplitude, &mut rng);
            let run = robin_partitioned_run(&testbed, &params, &initial, None, fsi_cfg.steps)
                .map_err(|e| ReportError::stage("fsi-run", e))?;
            report.add_artifact("fsi_ledger.csv", io::fsi_ledger_csv(&run).into_bytes());
            let min_slack = run
                .ledger
                .iter()
                .map(|entry| entry.inequality_slack)
                .fold(f64::INFINITY, f64::min);
            let final_energy = run
                .ledger
                .last()
                .map(|entry| entry.energy.total())
                .unwrap_or_else(|| run.initial_energy.total());
            let section = FsiRunSection {
                steps_requested: fsi_cfg.steps,
                steps_completed: run.states.len() - 1,
                completed: run.completed(),
                ledger_certified: run.ledger_certified(),
                ledger_tol: run.ledger_tol,
                initial_energy: run.initial_energy.total(),
                final_energy,
                min_slack: if min_slack.is_finite() { min_slack } else { 0.0 },
                energy_growth_steps: run.energy_growth_steps.len(),
                failure: run.failure.clone(),
            };
            (run.margin.clone(), Some(section))
        } else {
            (crate::fsi::margin_report(&params, (0.0, 0.0)), None)
        };

        report.flags.margin_ok = Some(margin.margin_ok);
        report.add_constant("fsi.rho_f", margin.rho_f, "declared");
        report.add_constant("fsi.rho_s", margin.rho_s, "declared");
        report.add_constant("fsi.c_tr_h", margin.c_tr_h, trace_provenance);
        report.add_constant("fsi.lambda_h", margin.lambda_h, lambda_provenance);
        report.add_constant("fsi.c_am", margin.c_am, "computed");
        report.add_constant("fsi.alpha", margin.alpha, "declared");
        report.add_constant("fsi.dt", margin.dt, "declared");
        report.add_constant("fsi.dt_max", margin.dt_max, "computed");
        report.add_constant("fsi.alpha_min", margin.alpha_min, "computed");

        report.fsi = Some(FsiSection {
            margin,
            trace_provenance: trace_provenance.to_string(),
            lambda_provenance: lambda_provenance.to_string(),
            testbed: FsiTestbedSection {
                fluid_cells: fsi_cfg.fluid_cells,
                structure_cells: fsi_cfg.structure_cells,
                elastic_modulus: fsi_cfg.elastic_modulus,
                fluid_dofs: testbed.fluid_dofs(),
                structure_dofs: testbed.structure_dofs(),
                measured_trace_constant: testbed.trace_constant(),
                measured_lambda: testbed.stiffness_ratio(),
            },
            run: run_section,
            note: "the fluid half of the testbed is a one-dimensional linear diffusion surrogate; convection is dropped".to_string(),
        });
    }

    Ok(report)
}

fn sig(value: f64) -> String {
    format!("{value:.16e}")
}

fn flag_text(flag: Option<bool>) -> &'static str {
    match flag {
        Some(true) => "true",
        Some(false) => "false",
        None => "n/a",
    }
}

/// Renders the human-readable summary. Same information as the JSON
/// body: flag table first, then constants and per-stage summaries.
pub fn render_text(report: &RunReport) -> String {
    let mut out = String::new();
    let _ = writeln!(out, "run report ({})", report.format);
    let _ = writeln!(out, "scenario: {}", report.scenario);
    let _ = writeln!(out, "seed: {}", report.seed);
    let _ = writeln!(out, "stages: {}", report.stages.join(", "));
    let _ = writeln!(out);
    let _ = writeln!(out, "flag table");
    let _ = writeln!(out, "  skew-ok            {}", flag_text(report.flags.skew_ok));
    let _ = writeln!(out, "  diss-ok            {}", flag_text(report.flags.diss_ok));
    let _ = writeln!(out, "  margin-ok          {}", flag_text(report.flags.margin_ok));
    let _ = writeln!(out, "  residual-computed  {}", flag_text(report.flags.residual_computed));
    let _ = writeln!(out, "  regime-ok          {}", flag_text(report.flags.regime_ok));
    let _ = writeln!(out);
    if !report.constants.is_empty() {
        let _ = writeln!(out, "constants");
        for constant in &report.constants {
            let _ = writeln!(out, "  {} = {} ({})", constant.name, sig(constant.value), constant.provenance);
        }
        let _ = writeln!(out);
    }
    if let Some(fom) = &report.fom {
        let _ = writeln!(out, "full-order run");
        let _ = writeln!(out, "  steps {} of {} requested, final time {}", fom.steps_completed, fom.steps_requested, sig(fom.final_time));
        let _ = writeln!(out, "  velocity norm {} initial, {} final, {} sup", sig(fom.initial_l2), sig(fom.final_l2), sig(fom.sup_l2));
        match fom.regime_radius {
            Some(radius) => {
                let _ = writeln!(out, "  regime ball radius {}: contained = {}", sig(radius), fom.regime_ok);
            }
            None => {
                let _ = writeln!(out, "  regime ball unbounded: contained trivially");
            }
        }
        if let Some(failure) = &fom.failure {
            let _ = writeln!(out, "  failure: {}", failure_note(failure));
        }
        let _ = writeln!(out);
    }
    if let Some(rom) = &report.rom {
        let _ = writeln!(out, "reduced basis");
        let _ = writeln!(out, "  dimension {} from {} snapshots, tail energy {}", rom.dim, rom.snapshots_used, sig(rom.tail_energy));
        let _ = writeln!(out, "  closure {}", rom.closure);
        let _ = writeln!(out, "  operator digest {}", rom.operator_digest);
        if rom.tampered {
            let _ = writeln!(out, "  convection tensor carries a scripted antisymmetry defect");
        }
        let _ = writeln!(out);
    }
    if let Some(certify) = &report.certify {
        let _ = writeln!(out, "certified reduced run");
        let _ = writeln!(out, "  steps {} of {} requested, theta {}, dt {}", certify.steps_completed, certify.steps_requested, certify.theta, certify.dt);
        let _ = writeln!(out, "  per-step inequality certified at every step: {}", certify.all_certified);
        let _ = writeln!(out, "  cumulative bound: lhs {} <= rhs {} holds {}", sig(certify.bound_lhs), sig(certify.bound_rhs), certify.bound_certified);
        let _ = writeln!(out, "  defects: skew {} diss {} over {} samples (threshold {})", sig(certify.defects.max_skew_defect), sig(certify.defects.max_dissipation_defect), certify.defects.samples, sig(certify.defects.threshold));
        if let Some(failure) = &certify.failure {
            let _ = writeln!(out, "  failure: {}", failure_note(failure));
        }
        let _ = writeln!(out);
    }
    if let Some(estimate) = &report.estimate {
        let certificate = &estimate.certificate;
        let _ = writeln!(out, "error certificate");
        let _ = writeln!(out, "  estimator eta {} over horizon {}", sig(certificate.eta), sig(certificate.horizon));
        let _ = writeln!(out, "  bound {} ({})", sig(certificate.bound), estimate.bound_provenance);
        if let (Some(error), Some(effectivity)) = (certificate.true_error, certificate.effectivity) {
            let _ = writeln!(out, "  true error {} effectivity {}", sig(error), sig(effectivity));
        }
        let _ = writeln!(out, "  residual nodes {} ({})", estimate.residual_nodes, estimate.quadrature_rule);
        if let Some(caveat) = &estimate.caveat {
            let _ = writeln!(out, "  caveat: {caveat}");
        }
        if let Some(apriori) = &estimate.apriori {
            let _ = writeln!(out, "  rate report: epsilon_n {} ({}), bound {}", sig(apriori.epsilon_n), apriori.source.label(), sig(apriori.bound));
        }
        let _ = writeln!(out);
    }
    if let Some(transition) = &report.transition {
        let _ = writeln!(out, "transition indicators");
        for narrative in &transition.narratives {
            for line in narrative.lines() {
                let _ = writeln!(out, "  {line}");
            }
            let _ = writeln!(out);
        }
    }
    if let Some(fsi) = &report.fsi {
        let margin = &fsi.margin;
        let _ = writeln!(out, "coupling margins");
        let _ = writeln!(out, "  note: {}", fsi.note);
        let _ = writeln!(out, "  added-mass coefficient {} (trace {} {}, lambda {} {})", sig(margin.c_am), sig(margin.c_tr_h), fsi.trace_provenance, sig(margin.lambda_h), fsi.lambda_provenance);
        let _ = writeln!(out, "  dt {} vs ceiling {}: margin_ok = {}", sig(margin.dt), sig(margin.dt_max), margin.margin_ok);
        let _ = writeln!(out, "  alpha {} vs floor {}", sig(margin.alpha), sig(margin.alpha_min));
        let _ = writeln!(out, "  linearization regime holds: {}", margin.regime_ok);
        if let Some(run) = &fsi.run {
            let _ = writeln!(out, "  partitioned run: {} of {} steps, ledger certified = {}", run.steps_completed, run.steps_requested, run.ledger_certified);
            let _ = writeln!(out, "  coupled energy {} initial, {} final, min slack {}", sig(run.initial_energy), sig(run.final_energy), sig(run.min_slack));
            if let Some(failure) = &run.failure {
                let _ = writeln!(out, "  failure: {failure}");
            }
        }
        let _ = writeln!(out);
    }
    let _ = writeln!(out, "artifacts");
    if report.artifacts.is_empty() {
        let _ = writeln!(out, "  none");
    }
    for artifact in &report.artifacts {
        let _ = writeln!(out, "  {} sha256 {} ({} bytes)", artifact.name, artifact.sha256, artifact.bytes);
    }
    out
}

/// Serializes the machine-readable report body.
pub fn render_json(report: &RunReport) -> String {
    let mut text = serde_json::to_string_pretty(report).expect("report serializes");
    text.push('\n');
    text
}

/// Writes the CSV artifacts, the JSON report, and the text summary
/// into `dir`, creating it if needed. Returns the written paths.
pub fn emit(report: &RunReport, dir: &Path) -> Result<Vec<PathBuf>, ReportError> {
    fs::create_dir_all(dir).map_err(|source| ReportError::Emit {
        path: dir.display().to_string(),
        source,
    })?;
    let mut written = Vec::new();
    let mut write = |name: &str, bytes: &[u8]| -> Result<(), ReportError> {
        let path = dir.join(name);
        fs::write(&path, bytes).map_err(|source| ReportError::Emit {
            path: path.display().to_string(),
            source,
        })?;
        written.push(path);
        Ok(())
    };
    for (name, bytes) in &report.artifact_bytes {
        write(name, bytes)?;
    }
    write("report.json", render_json(report).as_bytes())?;
    write("report.txt", render_text(report).as_bytes())?;
    Ok(written)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn minimal_text() -> &'static str {
        "scenario = \"minimal\"\nseed = 7\n\n[grid]\nmodes_per_dim = 8\nviscosity = 0.5\n"
    }

    fn full_text() -> String {
        concat!(
            "scenario = \"pipeline\"\n",
            "seed = 11\n",
            "\n",
            "[grid]\n",
            "modes_per_dim = 8\n",
            "viscosity = 0.5\n",
            "\n",
            "[initial]\n",
            "kind = \"random-low-mode\"\n",
            "amplitude = 1.0\n",
            "max_wavenumber = 2\n",
            "\n",
            "[fom]\n",
            "dt = 0.01\n",
            "steps = 12\n",
            "\n",
            "[rom]\n",
            "dim = 3\n",
            "regime_radius = 8.0\n",
            "\n",
            "[certify]\n",
            "dt = 0.01\n",
            "steps = 10\n",
            "\n",
            "[estimate]\n",
            "lipschitz = \"declared\"\n",
            "lipschitz_value = 1.0\n",
            "apriori_regularity = 1.0\n",
            "\n",
            "[transition]\n",
            "sigma = 1.0\n",
            "theta_threshold = 10.0\n",
            "forcing_bound = 1.0\n",
            "enstrophy_radius = 10.0\n",
            "\n",
            "[fsi]\n",
            "rho_f = 1.0\n",
            "rho_s = 5.0\n",
            "nu = 0.5\n",
            "alpha = 4.0\n",
            "dt = 0.001\n",
            "steps = 12\n",
            "initial_amplitude = 0.01\n",
        )
        .to_string()
    }

    #[test]
    fn minimal_config_fills_documented_defaults() {
        let config = parse_config_str(minimal_text()).unwrap();
        assert_eq!(config.scenario, "minimal");
        assert_eq!(config.seed, 7);
        assert_eq!(config.forcing.kind, "zero");
        assert_eq!(config.initial.kind, "taylor-green");
        assert_eq!(config.initial.amplitude, 1.0);
        assert!(config.fom.is_none());
        assert!(config.fsi.is_none());
    }

    #[test]
    fn theta_outside_stable_family_names_the_interval() {
        let text = format!("{}\n[fom]\ntheta = 0.4\ndt = 0.01\nsteps = 2\n", minimal_text());
        let err = parse_config_str(&text).unwrap_err();
        let message = err.to_string();
        assert!(message.contains("fom.theta"), "{message}");
        assert!(message.contains("[1/2, 1]"), "{message}");
    }

    #[test]
    fn unsupported_feature_is_named_explicitly() {
        let text = format!("{}hyperreduction = true\n", minimal_text());
        let err = parse_config_str(&text).unwrap_err();
        let message = err.to_string();
        assert!(message.contains("explicitly unsupported feature"), "{message}");
        assert!(message.contains("hyperreduction"), "{message}");
    }

    #[test]
    fn seed_is_mandatory() {
        let err = parse_config_str("scenario = \"x\"\n[grid]\nmodes_per_dim = 8\nviscosity = 0.5\n")
            .unwrap_err();
        assert!(err.to_string().contains("seed"), "{err}");
    }

    #[test]
    fn violations_carry_key_paths() {
        let text = concat!(
            "scenario = \"bad\"\n",
            "seed = 1\n",
            "[grid]\n",
            "modes_per_dim = 7\n",
            "viscosity = -1.0\n",
            "[fsi]\n",
            "rho_f = 1.0\n",
            "rho_s = 1.0\n",
            "nu = 0.1\n",
            "alpha = 1.0\n",
            "dt = 0.1\n",
            "kappa = 1.5\n",
        );
        let err = parse_config_str(text).unwrap_err();
        let message = err.to_string();
        for path in ["grid.modes_per_dim", "grid.viscosity", "fsi.kappa"] {
            assert!(message.contains(path), "missing {path} in {message}");
        }
    }

    #[test]
    fn fom_only_report_limits_flags_to_regime() {
        let text = format!("{}\n[fom]\ndt = 0.01\nsteps = 5\n", minimal_text());
        let config = parse_config_str(&text).unwrap();
        let report = orchestrate(&config, StageSet::fom_only()).unwrap();
        assert!(report.fom.is_some());
        assert!(report.rom.is_none());
        assert!(report.certify.is_none());
        assert_eq!(report.flags.regime_ok, Some(true));
        assert_eq!(report.flags.skew_ok, None);
        assert_eq!(report.flags.diss_ok, None);
        assert_eq!(report.flags.margin_ok, None);
        assert_eq!(report.flags.residual_computed, None);
        assert!(report.all_flags_pass());
    }

    #[test]
    fn full_pipeline_sets_all_five_flags_true() {
        let config = parse_config_str(&full_text()).unwrap();
        let stages = StageSet::requested_by(&config);
        assert!(stages.fom && stages.rom && stages.certify && stages.estimate);
        assert!(stages.transition && stages.fsi_margin && stages.fsi_run);
        let report = orchestrate(&config, stages).unwrap();
        assert_eq!(report.flags.skew_ok, Some(true));
        assert_eq!(report.flags.diss_ok, Some(true));
        assert_eq!(report.flags.margin_ok, Some(true));
        assert_eq!(report.flags.residual_computed, Some(true));
        assert_eq!(report.flags.regime_ok, Some(true));
        assert!(report.all_flags_pass());
    }

    #[test]
    fn reported_bounds_recompute_from_reported_constants() {
        let config = parse_config_str(&full_text()).unwrap();
        let report = orchestrate(&config, StageSet::requested_by(&config)).unwrap();

        let certificate = &report.estimate.as_ref().unwrap().certificate;
        let rebuilt = (2.0 / certificate.viscosity).sqrt()
            * ((certificate.lipschitz.value + certificate.closure_lipschitz) * certificate.horizon
                / certificate.viscosity)
                .exp()
            * certificate.eta;
        assert_relative_eq!(rebuilt, certificate.bound, max_relative = 1e-12);

        let margin = &report.fsi.as_ref().unwrap().margin;
        let c_am = (margin.rho_f / margin.rho_s) * margin.c_tr_h * margin.c_tr_h * margin.lambda_h;
        assert_relative_eq!(c_am, margin.c_am, max_relative = 1e-12);
        let dt_max = margin.alpha / (2.0 * c_am * margin.alpha + 1.0);
        assert_relative_eq!(dt_max, margin.dt_max, max_relative = 1e-12);
        let alpha_min = ((1.0 + 8.0 * c_am * margin.dt).sqrt() - 1.0) / (2.0 * margin.dt);
        assert_relative_eq!(alpha_min, margin.alpha_min, max_relative = 1e-12);
    }

    #[test]
    fn tampered_tensor_flips_the_antisymmetry_flag() {
        let text = full_text().replace("[certify]\n", "[certify]\ntamper_skew = 0.1\n");
        let config = parse_config_str(&text).unwrap();
        let report = orchestrate(&config, StageSet::through_certify()).unwrap();
        assert_eq!(report.flags.skew_ok, Some(false));
        assert!(!report.all_flags_pass());
        assert!(report.rom.as_ref().unwrap().tampered);
        let certify = report.certify.as_ref().unwrap();
        assert!(certify.steps_completed >= 1);
        let ledger = report
            .artifact_payloads()
            .iter()
            .find(|(name, _)| name == "ledger.csv")
            .map(|(_, bytes)| String::from_utf8(bytes.clone()).unwrap())
            .unwrap();
        let data_rows = ledger.lines().filter(|line| !line.starts_with('#')).count();
        assert_eq!(data_rows, certify.steps_completed + 1);
    }

    #[test]
    fn energy_injecting_closure_flips_the_dissipation_flag() {
        let text = full_text().replace(
            "[rom]\ndim = 3\nregime_radius = 8.0\n",
            "[rom]\ndim = 3\nregime_radius = 8.0\nclosure = { kind = \"damping-probe\", alpha = -0.05 }\n",
        );
        let config = parse_config_str(&text).unwrap();
        let report = orchestrate(&config, StageSet::through_certify()).unwrap();
        assert_eq!(report.flags.diss_ok, Some(false));
        assert!(!report.all_flags_pass());
    }

    #[test]
    fn fixed_seed_reproduces_every_byte() {
        let text = full_text().replace("lipschitz = \"declared\"\nlipschitz_value = 1.0\n", "lipschitz = \"estimated\"\ntrials = 8\n");
        let config = parse_config_str(&text).unwrap();
        let stages = StageSet::requested_by(&config);
        let first = orchestrate(&config, stages).unwrap();
        let second = orchestrate(&config, stages).unwrap();
        assert_eq!(render_json(&first), render_json(&second));
        assert_eq!(render_text(&first), render_text(&second));
        assert_eq!(first.artifact_payloads(), second.artifact_payloads());
    }

    #[test]
    fn estimated_constants_label_the_bound() {
        let text = full_text().replace("lipschitz = \"declared\"\nlipschitz_value = 1.0\n", "lipschitz = \"estimated\"\ntrials = 8\n");
        let config = parse_config_str(&text).unwrap();
        let report = orchestrate(&config, StageSet::through_estimate()).unwrap();
        let estimate = report.estimate.as_ref().unwrap();
        assert_eq!(estimate.bound_provenance, "estimated");
        assert!(estimate.caveat.is_some());
        let lipschitz = report
            .constants
            .iter()
            .find(|c| c.name == "estimate.lipschitz")
            .unwrap();
        assert_eq!(lipschitz.provenance, "estimated");
    }

    #[test]
    fn missing_section_for_a_requested_stage_is_an_error() {
        let config = parse_config_str(minimal_text()).unwrap();
        let err = orchestrate(&config, StageSet::fom_only()).unwrap_err();
        assert!(matches!(err, ReportError::MissingSection { section: "fom", .. }));
    }

    #[test]
    fn flag_table_lines_cover_exactly_the_five_flags() {
        let config = parse_config_str(&full_text()).unwrap();
        let report = orchestrate(&config, StageSet::requested_by(&config)).unwrap();
        let text = render_text(&report);
        let table: Vec<&str> = text
            .lines()
            .skip_while(|line| *line != "flag table")
            .skip(1)
            .take_while(|line| !line.trim().is_empty())
            .collect();
        assert_eq!(table.len(), 5);
        for (line, name) in table.iter().zip([
            "skew-ok",
            "diss-ok",
            "margin-ok",
            "residual-computed",
            "regime-ok",
        ]) {
            assert!(line.trim_start().starts_with(name), "{line}");
        }
    }

    #[test]
    fn emit_writes_report_and_artifacts() {
        let config = parse_config_str(&full_text()).unwrap();
        let report = orchestrate(&config, StageSet::requested_by(&config)).unwrap();
        let dir = std::env::temp_dir().join(format!("certrom-report-{}", std::process::id()));
        let written = emit(&report, &dir).unwrap();
        assert!(written.iter().any(|p| p.ends_with("report.json")));
        assert!(written.iter().any(|p| p.ends_with("report.txt")));
        assert!(written.iter().any(|p| p.ends_with("ledger.csv")));
        for path in &written {
            assert!(path.exists());
        }
        let json: serde_json::Value =
            serde_json::from_str(&fs::read_to_string(dir.join("report.json")).unwrap()).unwrap();
        assert_eq!(json["format"], REPORT_FORMAT);
        assert_eq!(json["flags"]["skew_ok"], serde_json::Value::Bool(true));
        fs::remove_dir_all(&dir).unwrap();
    }

    #[test]
    fn constants_render_with_at_least_fifteen_significant_digits() {
        assert_eq!(sig(0.1), "1.0000000000000001e-1");
        assert_eq!(sig(2.0 / 5.0), "4.0000000000000002e-1");
    }
}
