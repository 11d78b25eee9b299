//! Fourier-Galerkin discretisation of 2D incompressible flow on the
//! periodic torus `[0, 2pi)^2`.
//!
//! Velocity fields are stored as Fourier coefficients with the Parseval
//! convention `||u||^2 = integral |u|^2 dx = (2pi)^2 sum_k |u_hat(k)|^2`.
//! All fields satisfy three structural invariants: conjugate symmetry
//! (real-valued in physical space), modewise solenoidality `k . u_hat = 0`
//! and a vanishing mean mode. Nonlinear products are evaluated
//! pseudo-spectrally with a 2/3-rule dealias mask and an exactly
//! antisymmetrised trilinear form, so the discrete convection term is
//! energy-neutral by construction.

mod basis;
pub(crate) mod convect;
mod fft;
mod field;
mod forcing;
pub(crate) mod grid;
mod stepper;

pub use basis::{pair_modes, solenoidal_basis, PairMode, Parity};
pub use convect::{convection_apply, skew_trilinear};
pub use field::{
    leray_project, taylor_green, FieldNorms, ScalarSpectralField, SpectralVelocity,
};
pub use forcing::ForcingSpec;
pub use grid::TorusGrid;
pub use stepper::{fom_run, theta_step, FomRun, StepConfig, StepFailure};

use thiserror::Error;

/// Errors raised by the spectral layer.
#[derive(Debug, Error)]
pub enum SpectralError {
    #[error("grid size must be even and at least 4, got {0}")]
    InvalidGridSize(usize),
    #[error("viscosity must be finite and positive, got {0}")]
    InvalidViscosity(f64),
    #[error("dealias fraction must lie in (0, 1], got {0}")]
    InvalidDealiasFraction(f64),
    #[error("wavenumber ({0}, {1}) is outside the grid's resolvable range")]
    WavenumberOutOfRange(i64, i64),
    #[error("field size {got} does not match grid size {expected}")]
    SizeMismatch { expected: usize, got: usize },
    #[error("field violates the {0} invariant by {1:.3e}")]
    InvariantViolation(&'static str, f64),
    #[error("theta must lie in [1/2, 1], got {0}")]
    ThetaOutOfRange(f64),
    #[error("time step must be finite and positive, got {0}")]
    InvalidTimeStep(f64),
    #[error("solver tolerance must lie in (0, 1e-6], got {0}")]
    InvalidSolverTolerance(f64),
    #[error("maximum iteration count must be positive")]
    InvalidMaxIterations,
    #[error(
        "fixed-point solver did not converge: {iterations} iterations, \
         last update {last_update:.3e} against tolerance {tolerance:.3e}"
    )]
    NonConvergence {
        iterations: usize,
        last_update: f64,
        tolerance: f64,
    },
    #[error("forcing sample times must be finite and strictly increasing")]
    InvalidForcingSamples,
    #[error("forcing sample at index {0} does not match the grid")]
    ForcingSampleMismatch(usize),
}
