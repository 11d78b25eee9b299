//! Transition indicators for steady base flows: an energy barrier, a
//! planar enstrophy invariant ball, and a resolvent amplification
//! proxy. Each indicator is an inequality in declared, computable
//! quantities and returns a decidable verdict together with every
//! constant that entered it.
//!
//! None of these claims to detect transition. The barrier and the
//! enstrophy ball are sufficient conditions for persistence; their
//! negative verdict is "not decided", never "unstable". The resolvent
//! proxy certifies linear amplification only and carries that caveat
//! in its verdict.

use nalgebra::DMatrix;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::spectral::grid::wavenumber;
use crate::spectral::{
    convection_apply, pair_modes, solenoidal_basis, SpectralVelocity, TorusGrid,
};

/// Poincare constant of mean-free solenoidal velocities on the
/// `2 pi` torus: the lowest wavenumber shell is `|k| = 1`.
pub const VELOCITY_POINCARE: f64 = 1.0;

/// Poincare constant of mean-free vorticity on the `2 pi` torus.
pub const VORTICITY_POINCARE: f64 = 1.0;

/// How the shear constant is evaluated; recorded in every report.
pub const SHEAR_REALIZATION: &str =
    "sup over a 2x-oversampled collocation grid of the pointwise spectral norm of grad U";

#[derive(Debug, Error)]
pub enum TransitionError {
    #[error("field resolution {field} does not match grid resolution {grid}")]
    GridMismatch { field: usize, grid: usize },
    #[error("truncation {requested} exceeds the largest resolvable wavenumber {limit}")]
    TruncationOverflow { requested: i64, limit: i64 },
    #[error("shift {sigma} is numerically an eigenvalue of the linearized operator")]
    SingularShift { sigma: f64 },
    #[error("the enstrophy indicator is restricted to planar flow, got dimension {0}")]
    EnstrophyNeedsPlanarFlow(usize),
    #[error("split parameter must satisfy 0 < epsilon < viscosity, got epsilon {epsilon} with viscosity {viscosity}")]
    InvalidEpsilon { epsilon: f64, viscosity: f64 },
    #[error("viscosity must be finite and positive, got {0}")]
    InvalidViscosity(f64),
    #[error("forcing curl sample {index} must be finite and non-negative, got {value}")]
    InvalidSample { index: usize, value: f64 },
    #[error("Poincare constant must be finite and positive, got {0}")]
    InvalidPoincare(f64),
    #[error("candidate radius must be finite and non-negative, got {0}")]
    InvalidRadius(f64),
    #[error("shift must be finite and positive, got {0}")]
    InvalidSigma(f64),
    #[error("amplification threshold must be finite and positive, got {0}")]
    InvalidThreshold(f64),
    #[error("forcing bound must be finite and non-negative, got {0}")]
    InvalidForcingBound(f64),
}

/// A steady base state together with its computable shear constant.
#[derive(Debug, Clone)]
pub struct BaseFlow {
    velocity: SpectralVelocity,
    grad_sup: f64,
    gamma_u: f64,
}

impl BaseFlow {
    pub fn velocity(&self) -> &SpectralVelocity {
        &self.velocity
    }

    /// Largest pointwise spectral norm of the velocity gradient.
    pub fn grad_sup(&self) -> f64 {
        self.grad_sup
    }

    /// Shear constant of the perturbation energy balance:
    /// `|<(v.grad) U, v>| <= gamma_u |v| |v|_V`.
    pub fn gamma_u(&self) -> f64 {
        self.gamma_u
    }
}

fn derivative(field: &SpectralVelocity, axis: usize) -> SpectralVelocity {
    let n = field.modes_per_dim();
    let mut coeffs = field.raw().clone();
    for c in 0..2 {
        for i in 0..n {
            for j in 0..n {
                let k = wavenumber(n, if axis == 0 { i } else { j }) as f64;
                coeffs[(c, i, j)] *= Complex64::new(0.0, k);
            }
        }
    }
    SpectralVelocity::from_parts(n, coeffs)
}

/// Largest singular value of the 2x2 matrix with rows
/// `(j11, j12)` and `(j21, j22)`.
fn spectral_norm_2x2(j11: f64, j12: f64, j21: f64, j22: f64) -> f64 {
    let frobenius_sq = j11 * j11 + j12 * j12 + j21 * j21 + j22 * j22;
    let determinant = j11 * j22 - j12 * j21;
    let gap = (frobenius_sq * frobenius_sq - 4.0 * determinant * determinant).max(0.0);
    (0.5 * (frobenius_sq + gap.sqrt())).sqrt()
}

/// Evaluates the shear constant of a steady base state: the gradient is
/// maximised pointwise on a twice-oversampled collocation grid (the
/// conservative direction for a sufficient condition) and multiplied by
/// the velocity Poincare constant.
pub fn shear_constant(
    grid: &TorusGrid,
    velocity: &SpectralVelocity,
) -> Result<BaseFlow, TransitionError> {
    if velocity.modes_per_dim() != grid.modes_per_dim() {
        return Err(TransitionError::GridMismatch {
            field: velocity.modes_per_dim(),
            grid: grid.modes_per_dim(),
        });
    }
    let dx = derivative(velocity, 0).physical_values(2);
    let dy = derivative(velocity, 1).physical_values(2);
    let m = dx[0].nrows();
    let mut grad_sup = 0.0f64;
    for i in 0..m {
        for j in 0..m {
            let norm = spectral_norm_2x2(
                dx[0][(i, j)],
                dy[0][(i, j)],
                dx[1][(i, j)],
                dy[1][(i, j)],
            );
            grad_sup = grad_sup.max(norm);
        }
    }
    Ok(BaseFlow {
        velocity: velocity.clone(),
        grad_sup,
        gamma_u: VELOCITY_POINCARE * grad_sup,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum BarrierOutcome {
    /// Dissipation strictly dominates shear production.
    Stable,
    /// The sufficient condition failed; this never means unstable.
    NotDecided,
}

/// Energy-barrier verdict with every constant that entered it.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct BarrierVerdict {
    pub outcome: BarrierOutcome,
    /// `viscosity - gamma_u * poincare`; positive iff stable.
    pub margin: f64,
    pub viscosity: f64,
    pub gamma_u: f64,
    pub poincare: f64,
    pub realization: String,
}

impl BarrierVerdict {
    pub fn describe(&self) -> String {
        format!(
            "energy barrier: nu > gamma_U * C_P reads {} > {} * {}; margin {}; verdict {}; gamma_U realization: {}",
            self.viscosity,
            self.gamma_u,
            self.poincare,
            self.margin,
            match self.outcome {
                BarrierOutcome::Stable => "stable",
                BarrierOutcome::NotDecided => "not-decided",
            },
            self.realization,
        )
    }
}

/// Checks the energy barrier `nu > gamma_u * C_P`. The inequality is
/// strict; equality is not decided.
pub fn energy_barrier_check(flow: &BaseFlow, nu: f64) -> BarrierVerdict {
    let margin = nu - flow.gamma_u * VELOCITY_POINCARE;
    BarrierVerdict {
        outcome: if margin > 0.0 {
            BarrierOutcome::Stable
        } else {
            BarrierOutcome::NotDecided
        },
        margin,
        viscosity: nu,
        gamma_u: flow.gamma_u,
        poincare: VELOCITY_POINCARE,
        realization: SHEAR_REALIZATION.to_string(),
    }
}

/// Data of the planar enstrophy threshold check.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct EnstrophyThresholdInput {
    viscosity: f64,
    epsilon: f64,
    vorticity_poincare: f64,
    /// `(time, |curl f(time)|)` samples of the forcing curl.
    samples: Vec<(f64, f64)>,
    /// Candidate ball radius.
    radius: f64,
}

impl EnstrophyThresholdInput {
    /// Builds the check input. The indicator rests on a vorticity
    /// budget without stretching, so any spatial dimension other than
    /// two is rejected outright rather than approximated. `epsilon`
    /// defaults to half the viscosity.
    pub fn new(
        spatial_dimension: usize,
        viscosity: f64,
        epsilon: Option<f64>,
        vorticity_poincare: f64,
        samples: Vec<(f64, f64)>,
        radius: f64,
    ) -> Result<Self, TransitionError> {
        if spatial_dimension != 2 {
            return Err(TransitionError::EnstrophyNeedsPlanarFlow(spatial_dimension));
        }
        if !viscosity.is_finite() || viscosity <= 0.0 {
            return Err(TransitionError::InvalidViscosity(viscosity));
        }
        let epsilon = epsilon.unwrap_or(viscosity / 2.0);
        if !epsilon.is_finite() || epsilon <= 0.0 || epsilon >= viscosity {
            return Err(TransitionError::InvalidEpsilon { epsilon, viscosity });
        }
        if !vorticity_poincare.is_finite() || vorticity_poincare <= 0.0 {
            return Err(TransitionError::InvalidPoincare(vorticity_poincare));
        }
        for (index, (_, value)) in samples.iter().enumerate() {
            if !value.is_finite() || *value < 0.0 {
                return Err(TransitionError::InvalidSample {
                    index,
                    value: *value,
                });
            }
        }
        if !radius.is_finite() || radius < 0.0 {
            return Err(TransitionError::InvalidRadius(radius));
        }
        Ok(EnstrophyThresholdInput {
            viscosity,
            epsilon,
            vorticity_poincare,
            samples,
            radius,
        })
    }

    pub fn viscosity(&self) -> f64 {
        self.viscosity
    }

    pub fn epsilon(&self) -> f64 {
        self.epsilon
    }

    pub fn radius(&self) -> f64 {
        self.radius
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum EnstrophyOutcome {
    /// The candidate ball is forward invariant for the given data.
    Invariant,
    /// The threshold condition or the initial datum failed; this never
    /// means vorticity growth.
    NotDecided,
}

/// Enstrophy-ball verdict with the minimal invariant radius.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct EnstrophyVerdict {
    pub outcome: EnstrophyOutcome,
    /// Smallest radius for which the threshold condition holds at
    /// every sample.
    pub r_min: f64,
    pub radius: f64,
    pub initial_enstrophy: f64,
    pub viscosity: f64,
    pub epsilon: f64,
    pub vorticity_poincare: f64,
}

impl EnstrophyVerdict {
    pub fn describe(&self) -> String {
        format!(
            "enstrophy ball: G^2/(4 eps) <= (nu - eps) R^2 / (2 C^2) with nu {}, eps {}, C {}; minimal radius {}; candidate {}; initial enstrophy {}; verdict {}",
            self.viscosity,
            self.epsilon,
            self.vorticity_poincare,
            self.r_min,
            self.radius,
            self.initial_enstrophy,
            match self.outcome {
                EnstrophyOutcome::Invariant => "invariant",
                EnstrophyOutcome::NotDecided => "not-decided",
            },
        )
    }
}

/// Checks the pointwise threshold condition
/// `G(t)^2 / (4 eps) <= (nu - eps) R^2 / (2 C^2)` at every sample and
/// reports the smallest radius satisfying it; the candidate ball is
/// invariant iff it is at least that large and contains the initial
/// vorticity.
pub fn enstrophy_threshold_check(
    input: &EnstrophyThresholdInput,
    initial_enstrophy: f64,
) -> EnstrophyVerdict {
    let sup_g = input
        .samples
        .iter()
        .map(|(_, g)| *g)
        .fold(0.0f64, f64::max);
    let r_min = sup_g * input.vorticity_poincare
        / (2.0 * input.epsilon * (input.viscosity - input.epsilon)).sqrt();
    let outcome = if input.radius >= r_min && initial_enstrophy <= input.radius {
        EnstrophyOutcome::Invariant
    } else {
        EnstrophyOutcome::NotDecided
    };
    EnstrophyVerdict {
        outcome,
        r_min,
        radius: input.radius,
        initial_enstrophy,
        viscosity: input.viscosity,
        epsilon: input.epsilon,
        vorticity_poincare: input.vorticity_poincare,
    }
}

/// Dense generator of the linearized perturbation dynamics
/// `dv/dt = nu P Lap v - P((U.grad) v + (v.grad) U)` on the real
/// orthonormal basis of mean-free solenoidal modes up to the given
/// truncation. For a resting base state the matrix is diagonal with
/// entries `-nu |k|^2`.
#[derive(Debug, Clone)]
pub struct LinearizedOperator {
    matrix: DMatrix<f64>,
    wavenumbers: Vec<(i64, i64)>,
    truncation: i64,
    viscosity: f64,
}

impl LinearizedOperator {
    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.matrix
    }

    pub fn dim(&self) -> usize {
        self.matrix.nrows()
    }

    pub fn truncation(&self) -> i64 {
        self.truncation
    }

    pub fn viscosity(&self) -> f64 {
        self.viscosity
    }

    pub fn wavenumbers(&self) -> &[(i64, i64)] {
        &self.wavenumbers
    }
}

/// Assembles the linearized operator about a base flow.
pub fn linearized_operator(
    grid: &TorusGrid,
    flow: &BaseFlow,
    nu: f64,
    truncation: i64,
) -> Result<LinearizedOperator, TransitionError> {
    if flow.velocity.modes_per_dim() != grid.modes_per_dim() {
        return Err(TransitionError::GridMismatch {
            field: flow.velocity.modes_per_dim(),
            grid: grid.modes_per_dim(),
        });
    }
    if !nu.is_finite() || nu <= 0.0 {
        return Err(TransitionError::InvalidViscosity(nu));
    }
    let modes = pair_modes(grid, truncation).map_err(|_| TransitionError::TruncationOverflow {
        requested: truncation,
        limit: grid.nyquist() - 1,
    })?;
    let wavenumbers: Vec<(i64, i64)> = modes.iter().map(|m| m.k).collect();
    let fields = solenoidal_basis(grid, truncation).map_err(|_| {
        TransitionError::TruncationOverflow {
            requested: truncation,
            limit: grid.nyquist() - 1,
        }
    })?;

    let n = fields.len();
    let mut matrix = DMatrix::zeros(n, n);
    for j in 0..n {
        let mut image = fields[j].stokes_apply();
        image.scale(-nu);
        image.axpy(-1.0, &convection_apply(grid, &flow.velocity, &fields[j]));
        image.axpy(-1.0, &convection_apply(grid, &fields[j], &flow.velocity));
        for i in 0..n {
            matrix[(i, j)] = fields[i].inner(&image);
        }
    }
    Ok(LinearizedOperator {
        matrix,
        wavenumbers,
        truncation,
        viscosity: nu,
    })
}

/// Spectral norm of the shifted inverse `(sigma I - L)^{-1}`, computed
/// as the reciprocal of the smallest singular value of the shift.
pub fn resolvent_norm(op: &LinearizedOperator, sigma: f64) -> Result<f64, TransitionError> {
    let n = op.dim();
    let mut shifted = -op.matrix.clone();
    for i in 0..n {
        shifted[(i, i)] += sigma;
    }
    let singular_values = shifted.svd(false, false).singular_values;
    let largest = singular_values[0];
    let smallest = singular_values[singular_values.len() - 1];
    if smallest < 1e-14 * largest {
        return Err(TransitionError::SingularShift { sigma });
    }
    Ok(1.0 / smallest)
}

/// Parameters of an amplification question.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct ResolventQuery {
    pub sigma: f64,
    pub truncation: i64,
    pub theta_threshold: f64,
    /// Supremum of the energy norm of the admissible forcing.
    pub forcing_bound: f64,
}

impl ResolventQuery {
    pub fn new(
        sigma: f64,
        truncation: i64,
        theta_threshold: f64,
        forcing_bound: f64,
    ) -> Result<Self, TransitionError> {
        if !sigma.is_finite() || sigma <= 0.0 {
            return Err(TransitionError::InvalidSigma(sigma));
        }
        if truncation < 1 {
            return Err(TransitionError::TruncationOverflow {
                requested: truncation,
                limit: 1,
            });
        }
        if !theta_threshold.is_finite() || theta_threshold <= 0.0 {
            return Err(TransitionError::InvalidThreshold(theta_threshold));
        }
        if !forcing_bound.is_finite() || forcing_bound < 0.0 {
            return Err(TransitionError::InvalidForcingBound(forcing_bound));
        }
        Ok(ResolventQuery {
            sigma,
            truncation,
            theta_threshold,
            forcing_bound,
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum AmplificationOutcome {
    /// The linearized dynamics amplify some admissible forcing beyond
    /// the declared threshold.
    AmplificationCertified,
    BelowThreshold,
}

/// Amplification verdict; certifies linear behaviour only and says so.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct AmplificationVerdict {
    pub outcome: AmplificationOutcome,
    /// `resolvent_norm * forcing_bound`.
    pub amplification: f64,
    pub threshold: f64,
    pub resolvent_norm: f64,
    pub forcing_bound: f64,
    pub caveat: String,
}

impl AmplificationVerdict {
    pub fn describe(&self) -> String {
        format!(
            "resolvent proxy: amplification {} vs threshold {}; verdict {} ({})",
            self.amplification,
            self.threshold,
            match self.outcome {
                AmplificationOutcome::AmplificationCertified => "amplification-certified",
                AmplificationOutcome::BelowThreshold => "below-threshold",
            },
            self.caveat,
        )
    }
}

/// Compares the certified linear amplification against the declared
/// threshold; the comparison is strict.
pub fn amplification_verdict(query: &ResolventQuery, norm: f64) -> AmplificationVerdict {
    let amplification = norm * query.forcing_bound;
    AmplificationVerdict {
        outcome: if amplification > query.theta_threshold {
            AmplificationOutcome::AmplificationCertified
        } else {
            AmplificationOutcome::BelowThreshold
        },
        amplification,
        threshold: query.theta_threshold,
        resolvent_norm: norm,
        forcing_bound: query.forcing_bound,
        caveat: "linear proxy only".to_string(),
    }
}

/// Enstrophy of every state of a trajectory.
pub fn enstrophy_history(states: &[SpectralVelocity]) -> Vec<f64> {
    states.iter().map(|u| u.curl().l2_norm()).collect()
}
