//! Dissipative closure models acting on reduced coordinates.

use nalgebra::{DMatrix, DVector};

use super::RomError;

/// Closure term added to the reduced momentum balance.
///
/// Every admissible variant is dissipative, `<C(a), a> >= 0`, which the
/// certification defects verify numerically. `damping_probe` deliberately
/// skips the sign check so the failure path can be exercised.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Closure {
    /// Plain Galerkin model, `C(a) = 0`.
    None,
    /// `C(a) = alpha a` with `alpha >= 0`.
    LinearDamping { alpha: f64 },
    /// `C(a) = coefficient ||a|| A a`, Lipschitz on the ball of radius
    /// `regime_radius` with constant `2 coefficient regime_radius ||A||`.
    EddyViscosity {
        coefficient: f64,
        regime_radius: f64,
    },
}

impl Closure {
    pub fn none() -> Self {
        Closure::None
    }

    pub fn linear_damping(alpha: f64) -> Result<Self, RomError> {
        if !alpha.is_finite() || alpha < 0.0 {
            return Err(RomError::NegativeClosureParameter {
                name: "alpha",
                value: alpha,
            });
        }
        Ok(Closure::LinearDamping { alpha })
    }

    pub fn eddy_viscosity(coefficient: f64, regime_radius: f64) -> Result<Self, RomError> {
        if !coefficient.is_finite() || coefficient < 0.0 {
            return Err(RomError::NegativeClosureParameter {
                name: "coefficient",
                value: coefficient,
            });
        }
        if !regime_radius.is_finite() || regime_radius <= 0.0 {
            return Err(RomError::InvalidRegimeRadius(regime_radius));
        }
        Ok(Closure::EddyViscosity {
            coefficient,
            regime_radius,
        })
    }

    /// Unchecked damping constructor. A negative `alpha` produces an
    /// anti-dissipative model that the certifier must reject.
    pub fn damping_probe(alpha: f64) -> Self {
        Closure::LinearDamping { alpha }
    }

    pub fn eval(&self, stokes: &DMatrix<f64>, state: &DVector<f64>) -> DVector<f64> {
        match self {
            Closure::None => DVector::zeros(state.len()),
            Closure::LinearDamping { alpha } => state * *alpha,
            Closure::EddyViscosity { coefficient, .. } => {
                stokes * state * (*coefficient * state.norm())
            }
        }
    }

    /// Lipschitz constant on the closure's certified ball, given the
    /// spectral norm of the reduced Stokes matrix.
    pub fn lipschitz(&self, stokes_norm: f64) -> f64 {
        match self {
            Closure::None => 0.0,
            Closure::LinearDamping { alpha } => alpha.abs(),
            Closure::EddyViscosity {
                coefficient,
                regime_radius,
            } => 2.0 * coefficient * regime_radius * stokes_norm,
        }
    }

    pub fn label(&self) -> &'static str {
        match self {
            Closure::None => "none",
            Closure::LinearDamping { .. } => "linear-damping",
            Closure::EddyViscosity { .. } => "eddy-viscosity",
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use rand::{RngExt, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn diag_stokes(entries: &[f64]) -> DMatrix<f64> {
        DMatrix::from_diagonal(&DVector::from_row_slice(entries))
    }

    #[test]
    fn eval_matches_closed_forms() {
        let stokes = diag_stokes(&[1.0, 2.0, 4.0]);
        let a = DVector::from_vec(vec![3.0, 0.0, -4.0]);

        let none = Closure::none().eval(&stokes, &a);
        assert_eq!(none, DVector::zeros(3));

        let damping = Closure::linear_damping(0.5).unwrap().eval(&stokes, &a);
        assert_eq!(damping, DVector::from_vec(vec![1.5, 0.0, -2.0]));

        // ||a|| = 5, so C(a) = 0.1 * 5 * diag(1,2,4) a.
        let eddy = Closure::eddy_viscosity(0.1, 2.0).unwrap().eval(&stokes, &a);
        assert_relative_eq!(eddy[0], 1.5, max_relative = 1e-14);
        assert_relative_eq!(eddy[2], -8.0, max_relative = 1e-14);
    }

    #[test]
    fn admissible_closures_are_dissipative() {
        let stokes = diag_stokes(&[1.0, 2.0, 5.0, 8.0]);
        let mut rng = ChaCha8Rng::seed_from_u64(21);
        for closure in [
            Closure::none(),
            Closure::linear_damping(0.3).unwrap(),
            Closure::eddy_viscosity(0.2, 1.5).unwrap(),
        ] {
            for _ in 0..50 {
                let a = DVector::from_fn(4, |_, _| rng.random_range(-1.0..1.0));
                let dissipation = closure.eval(&stokes, &a).dot(&a);
                assert!(dissipation >= 0.0);
            }
        }
    }

    #[test]
    fn damping_probe_injects_energy() {
        let stokes = diag_stokes(&[1.0, 2.0]);
        let probe = Closure::damping_probe(-0.1);
        let a = DVector::from_vec(vec![1.0, 1.0]);
        assert!(probe.eval(&stokes, &a).dot(&a) < 0.0);
        // The checked constructor refuses the same parameter.
        assert!(Closure::linear_damping(-0.1).is_err());
    }

    #[test]
    fn eddy_viscosity_lipschitz_bound_holds_on_the_ball() {
        let stokes = diag_stokes(&[1.0, 4.0, 9.0]);
        let stokes_norm = 9.0;
        let radius = 2.0;
        let closure = Closure::eddy_viscosity(0.25, radius).unwrap();
        let lipschitz = closure.lipschitz(stokes_norm);
        assert_relative_eq!(lipschitz, 2.0 * 0.25 * radius * stokes_norm);

        let mut rng = ChaCha8Rng::seed_from_u64(4);
        for _ in 0..200 {
            let a = DVector::from_fn(3, |_, _| rng.random_range(-1.0..1.0)) * rng.random_range(0.0..radius) / 3f64.sqrt();
            let b = DVector::from_fn(3, |_, _| rng.random_range(-1.0..1.0)) * rng.random_range(0.0..radius) / 3f64.sqrt();
            let gap = (closure.eval(&stokes, &a) - closure.eval(&stokes, &b)).norm();
            assert!(gap <= lipschitz * (&a - &b).norm() + 1e-14);
        }
    }

    #[test]
    fn constructors_reject_bad_parameters() {
        assert!(Closure::eddy_viscosity(-0.1, 1.0).is_err());
        assert!(Closure::eddy_viscosity(0.1, 0.0).is_err());
        assert!(Closure::linear_damping(f64::NAN).is_err());
    }
}
