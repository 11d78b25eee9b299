//! Implicit theta-scheme time integration for the full-order model.
//!
//! One step solves
//!
//! ```text
//! (u_next - u_prev) / dt + nu A u_mid + B(u_mid, u_mid) = f(t + theta dt)
//! ```
//!
//! for the stage value `u_mid = theta u_next + (1 - theta) u_prev` by a
//! fixed-point iteration in which the viscous part is inverted exactly
//! (it is diagonal in Fourier space). For `theta >= 1/2` the step obeys a
//! discrete energy inequality up to the solver tolerance, which is the
//! property the certified reduced scheme inherits.

use serde::{Deserialize, Serialize};

use super::convect::convection_apply;
use super::grid::wavenumber;
use super::{ForcingSpec, SpectralError, SpectralVelocity, TorusGrid};

/// Validated parameters of one implicit theta step.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct StepConfig {
    theta: f64,
    dt: f64,
    solver_tol: f64,
    max_iter: usize,
}

impl StepConfig {
    /// `theta` must lie in `[1/2, 1]`: below one half the discrete energy
    /// inequality has no sign and the step is rejected at construction.
    pub fn new(theta: f64, dt: f64, solver_tol: f64, max_iter: usize) -> Result<Self, SpectralError> {
        if !(0.5..=1.0).contains(&theta) {
            return Err(SpectralError::ThetaOutOfRange(theta));
        }
        if !dt.is_finite() || dt <= 0.0 {
            return Err(SpectralError::InvalidTimeStep(dt));
        }
        if !(solver_tol > 0.0 && solver_tol <= 1e-6) {
            return Err(SpectralError::InvalidSolverTolerance(solver_tol));
        }
        if max_iter == 0 {
            return Err(SpectralError::InvalidMaxIterations);
        }
        Ok(StepConfig {
            theta,
            dt,
            solver_tol,
            max_iter,
        })
    }

    pub fn theta(&self) -> f64 {
        self.theta
    }

    pub fn dt(&self) -> f64 {
        self.dt
    }

    pub fn solver_tol(&self) -> f64 {
        self.solver_tol
    }

    pub fn max_iter(&self) -> usize {
        self.max_iter
    }
}

/// Apply `(I + theta dt nu A)^{-1}`, which is diagonal in Fourier space.
fn viscous_invert(grid: &TorusGrid, cfg: &StepConfig, field: &mut SpectralVelocity) {
    let n = grid.modes_per_dim();
    let scale = cfg.theta * cfg.dt * grid.viscosity();
    let coeffs = field.raw_mut();
    for c in 0..2 {
        for i in 0..n {
            let k1 = wavenumber(n, i) as f64;
            for j in 0..n {
                let k2 = wavenumber(n, j) as f64;
                let factor = 1.0 / (1.0 + scale * (k1 * k1 + k2 * k2));
                coeffs[(c, i, j)] *= factor;
            }
        }
    }
}

/// Advance one implicit theta step from `u_prev` at time `t`.
pub fn theta_step(
    grid: &TorusGrid,
    u_prev: &SpectralVelocity,
    t: f64,
    forcing: &ForcingSpec,
    cfg: &StepConfig,
) -> Result<SpectralVelocity, SpectralError> {
    let n = grid.modes_per_dim();
    let f_mid = forcing.eval(n, t + cfg.theta * cfg.dt);
    let theta_dt = cfg.theta * cfg.dt;

    let mut stage = u_prev.clone();
    let mut last_update = f64::INFINITY;
    for _iteration in 0..cfg.max_iter {
        // stage_next = (I + theta dt nu A)^{-1} (u_prev + theta dt (f - B(stage, stage)))
        let convection = convection_apply(grid, &stage, &stage);
        let mut next = u_prev.clone();
        next.axpy(theta_dt, &f_mid);
        next.axpy(-theta_dt, &convection);
        viscous_invert(grid, cfg, &mut next);

        last_update = next.sub(&stage).l2_norm();
        let scale = u_prev.l2_norm().max(next.l2_norm());
        stage = next;
        if last_update <= cfg.solver_tol * scale || scale == 0.0 {
            // u_next = u_prev + (stage - u_prev) / theta
            let mut u_next = u_prev.clone();
            let mut increment = stage.sub(u_prev);
            increment.scale(1.0 / cfg.theta);
            u_next.axpy(1.0, &increment);
            return Ok(u_next);
        }
    }
    Err(SpectralError::NonConvergence {
        iterations: cfg.max_iter,
        last_update,
        tolerance: cfg.solver_tol,
    })
}

/// Why a run stopped before completing all requested steps.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StepFailure {
    pub step: usize,
    pub iterations: usize,
    pub last_update: f64,
    pub tolerance: f64,
}

/// A full-order trajectory: states at `t^k = k dt` for `k = 0..=steps`.
#[derive(Debug, Clone)]
pub struct FomRun {
    pub times: Vec<f64>,
    pub states: Vec<SpectralVelocity>,
    /// Present when the run stopped early on solver failure.
    pub failure: Option<StepFailure>,
}

impl FomRun {
    pub fn completed(&self) -> bool {
        self.failure.is_none()
    }

    pub fn final_state(&self) -> &SpectralVelocity {
        self.states.last().expect("runs hold at least the initial state")
    }
}

/// March `steps` theta steps from `u0`. On solver failure the trajectory
/// is truncated at the last certified state and the failure is recorded;
/// callers choose whether that aborts the pipeline.
pub fn fom_run(
    grid: &TorusGrid,
    u0: &SpectralVelocity,
    forcing: &ForcingSpec,
    cfg: &StepConfig,
    steps: usize,
) -> FomRun {
    let mut times = Vec::with_capacity(steps + 1);
    let mut states = Vec::with_capacity(steps + 1);
    times.push(0.0);
    states.push(u0.clone());
    for k in 0..steps {
        let t = k as f64 * cfg.dt;
        match theta_step(grid, &states[k], t, forcing, cfg) {
            Ok(next) => {
                times.push((k + 1) as f64 * cfg.dt);
                states.push(next);
            }
            Err(SpectralError::NonConvergence {
                iterations,
                last_update,
                tolerance,
            }) => {
                return FomRun {
                    times,
                    states,
                    failure: Some(StepFailure {
                        step: k,
                        iterations,
                        last_update,
                        tolerance,
                    }),
                };
            }
            Err(other) => unreachable!("theta_step only fails on non-convergence: {other}"),
        }
    }
    FomRun {
        times,
        states,
        failure: None,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::spectral::taylor_green;
    use approx::assert_relative_eq;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn config_rejects_theta_below_one_half() {
        let err = StepConfig::new(0.4, 1e-3, 1e-10, 100).unwrap_err();
        assert!(matches!(err, SpectralError::ThetaOutOfRange(_)));
        assert!(StepConfig::new(1.1, 1e-3, 1e-10, 100).is_err());
        assert!(StepConfig::new(0.5, 1e-3, 1e-10, 100).is_ok());
        assert!(StepConfig::new(1.0, 1e-3, 1e-10, 100).is_ok());
    }

    #[test]
    fn config_rejects_loose_solver_tolerance() {
        assert!(StepConfig::new(0.5, 1e-3, 1e-5, 100).is_err());
        assert!(StepConfig::new(0.5, 1e-3, 0.0, 100).is_err());
    }

    #[test]
    fn unforced_energy_is_monotone_for_admissible_theta() {
        let grid = TorusGrid::new(16, 0.05).unwrap();
        for &theta in &[0.5, 0.75, 1.0] {
            let cfg = StepConfig::new(theta, 5e-3, 1e-10, 200).unwrap();
            let mut rng = ChaCha8Rng::seed_from_u64(17);
            let mut state = SpectralVelocity::random_low_mode(&grid, 4, 1.0, &mut rng);
            for k in 0..20 {
                let next = theta_step(&grid, &state, k as f64 * cfg.dt(), &ForcingSpec::Zero, &cfg)
                    .unwrap();
                assert!(
                    next.l2_norm() <= state.l2_norm() + cfg.solver_tol(),
                    "theta = {theta}: energy grew at step {k}"
                );
                state = next;
            }
        }
    }

    #[test]
    fn zero_state_zero_forcing_stays_zero() {
        let grid = TorusGrid::new(8, 0.1).unwrap();
        let cfg = StepConfig::new(0.5, 1e-2, 1e-10, 50).unwrap();
        let zero = SpectralVelocity::zero(8);
        let next = theta_step(&grid, &zero, 0.0, &ForcingSpec::Zero, &cfg).unwrap();
        assert_eq!(next.l2_norm(), 0.0);
    }

    #[test]
    fn taylor_green_decays_at_the_exact_viscous_rate() {
        // The Taylor-Green mode family is closed under the scheme: its
        // nonlinear term projects to zero, so each step is the rational
        // theta approximation of exp(-2 nu dt) on the |k|^2 = 2 shell.
        let grid = TorusGrid::new(16, 0.1).unwrap();
        let cfg = StepConfig::new(0.5, 1e-2, 1e-12, 100).unwrap();
        let u0 = taylor_green(&grid, 1.0);
        let run = fom_run(&grid, &u0, &ForcingSpec::Zero, &cfg, 10);
        assert!(run.completed());
        let t = 0.1;
        let exact = taylor_green(&grid, (-2.0 * grid.viscosity() * t).exp());
        let err = run.final_state().sub(&exact).l2_norm() / exact.l2_norm();
        assert!(err < 1e-7, "relative error {err:.3e}");
    }

    #[test]
    fn richardson_ratio_matches_scheme_order() {
        let grid = TorusGrid::new(16, 0.2).unwrap();
        let horizon = 0.5;
        let u0 = taylor_green(&grid, 1.0);
        let exact = taylor_green(&grid, (-2.0 * grid.viscosity() * horizon).exp());
        let terminal_error = |theta: f64, dt: f64| {
            let cfg = StepConfig::new(theta, dt, 1e-12, 200).unwrap();
            let steps = (horizon / dt).round() as usize;
            let run = fom_run(&grid, &u0, &ForcingSpec::Zero, &cfg, steps);
            assert!(run.completed());
            run.final_state().sub(&exact).l2_norm()
        };
        let ratio_mid = terminal_error(0.5, 0.05) / terminal_error(0.5, 0.025);
        assert!(
            (3.6..=4.4).contains(&ratio_mid),
            "midpoint ratio {ratio_mid:.3} outside [3.6, 4.4]"
        );
        let ratio_euler = terminal_error(1.0, 0.05) / terminal_error(1.0, 0.025);
        assert!(
            (1.8..=2.2).contains(&ratio_euler),
            "backward Euler ratio {ratio_euler:.3} outside [1.8, 2.2]"
        );
    }

    #[test]
    fn divergence_stays_zero_along_a_forced_run() {
        let grid = TorusGrid::new(16, 0.1).unwrap();
        let cfg = StepConfig::new(0.75, 5e-3, 1e-10, 200).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let u0 = SpectralVelocity::random_low_mode(&grid, 3, 1.0, &mut rng);
        let f = SpectralVelocity::random_low_mode(&grid, 2, 0.3, &mut rng);
        let forcing = ForcingSpec::constant(&grid, &f).unwrap();
        let run = fom_run(&grid, &u0, &forcing, &cfg, 20);
        assert!(run.completed());
        for state in &run.states {
            state.validate(1e-10).unwrap();
        }
    }

    #[test]
    fn energy_identity_slack_is_solver_sized() {
        // 1/2 ||u_next||^2 - 1/2 ||u_prev||^2 + nu dt ||grad u_mid||^2
        //   <= dt <f_mid, u_mid> + solver slack.
        let grid = TorusGrid::new(16, 0.1).unwrap();
        let cfg = StepConfig::new(0.5, 5e-3, 1e-11, 300).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(23);
        let u_prev = SpectralVelocity::random_low_mode(&grid, 4, 1.0, &mut rng);
        let f = SpectralVelocity::random_low_mode(&grid, 2, 0.5, &mut rng);
        let forcing = ForcingSpec::constant(&grid, &f).unwrap();
        let u_next = theta_step(&grid, &u_prev, 0.0, &forcing, &cfg).unwrap();

        let mut u_mid = u_next.scaled(cfg.theta());
        u_mid.axpy(1.0 - cfg.theta(), &u_prev);
        let f_mid = forcing.eval(16, cfg.theta() * cfg.dt());
        let lhs = 0.5 * u_next.l2_norm().powi(2) - 0.5 * u_prev.l2_norm().powi(2)
            + grid.viscosity() * cfg.dt() * u_mid.grad_norm().powi(2);
        let rhs = cfg.dt() * f_mid.inner(&u_mid);
        assert!(lhs <= rhs + 10.0 * cfg.solver_tol(), "slack {:.3e}", rhs - lhs);
        assert_relative_eq!(lhs, rhs, max_relative = 1e-6);
    }
}
