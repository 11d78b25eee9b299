//! Reduced operator assembly in an orthonormal basis.
//!
//! The convection tensor is stored with its antisymmetry in the last two
//! slots enforced bit-exactly: each entry `T[i][j][k]` with `j < k` is
//! computed once from the antisymmetrised trilinear form and written to
//! both slots with opposite signs, and the `j == k` diagonal is zero.
//! Energy neutrality of the reduced nonlinearity is then a structural
//! property of the storage, not a quadrature accident.

use nalgebra::{DMatrix, DVector};
use sha2::{Digest, Sha256};

use crate::spectral::convect::{physical_state, skew_from_states};
use crate::spectral::{ForcingSpec, SpectralVelocity, TorusGrid};

use super::{Closure, RomBasis, RomError};

/// Forcing projected onto the reduced basis.
#[derive(Debug, Clone, PartialEq)]
pub enum ReducedForcing {
    Zero,
    Constant(DVector<f64>),
    Sampled {
        times: Vec<f64>,
        values: Vec<DVector<f64>>,
    },
}

impl ReducedForcing {
    /// Reduced forcing at time `t`, with the same clamp-and-interpolate
    /// semantics as the full-order forcing.
    pub fn eval(&self, dim: usize, t: f64) -> DVector<f64> {
        match self {
            ReducedForcing::Zero => DVector::zeros(dim),
            ReducedForcing::Constant(value) => value.clone(),
            ReducedForcing::Sampled { times, values } => {
                if t <= times[0] {
                    return values[0].clone();
                }
                let last = times.len() - 1;
                if t >= times[last] {
                    return values[last].clone();
                }
                let upper = times.partition_point(|&time| time <= t);
                let weight = (t - times[upper - 1]) / (times[upper] - times[upper - 1]);
                &values[upper - 1] * (1.0 - weight) + &values[upper] * weight
            }
        }
    }

    fn digest_into(&self, hasher: &mut Sha256) {
        match self {
            ReducedForcing::Zero => hasher.update([0u8]),
            ReducedForcing::Constant(value) => {
                hasher.update([1u8]);
                for entry in value.iter() {
                    hasher.update(entry.to_le_bytes());
                }
            }
            ReducedForcing::Sampled { times, values } => {
                hasher.update([2u8]);
                hasher.update((times.len() as u64).to_le_bytes());
                for (time, value) in times.iter().zip(values) {
                    hasher.update(time.to_le_bytes());
                    for entry in value.iter() {
                        hasher.update(entry.to_le_bytes());
                    }
                }
            }
        }
    }
}

/// Galerkin operators for the reduced momentum balance
/// `a' + nu A a + N(a) + C(a) = f(t)`.
#[derive(Debug, Clone, PartialEq)]
pub struct ReducedOperators {
    nu: f64,
    stokes: DMatrix<f64>,
    convection: Vec<f64>,
    forcing: ReducedForcing,
    closure: Closure,
    stokes_norm: f64,
}

/// Projects the full-order operators onto `basis`.
pub fn assemble_reduced(
    grid: &TorusGrid,
    basis: &RomBasis,
    forcing: &ForcingSpec,
    closure: Closure,
) -> Result<ReducedOperators, RomError> {
    if basis.modes_per_dim() != grid.modes_per_dim() {
        return Err(RomError::GridMismatch {
            basis: basis.modes_per_dim(),
            grid: grid.modes_per_dim(),
        });
    }
    let n = basis.dim();

    let mut stokes = DMatrix::<f64>::zeros(n, n);
    for j in 0..n {
        let stokes_mode = basis.mode(j).stokes_apply();
        for i in 0..=j {
            let value = basis.mode(i).inner(&stokes_mode);
            stokes[(i, j)] = value;
            stokes[(j, i)] = value;
        }
    }

    let states: Vec<_> = basis
        .modes()
        .iter()
        .map(|mode| physical_state(grid, mode, true))
        .collect();
    let mut convection = vec![0.0f64; n * n * n];
    for i in 0..n {
        for j in 0..n {
            for k in (j + 1)..n {
                let value = skew_from_states(grid, &states[i], &states[j], &states[k]);
                convection[tensor_index(n, i, j, k)] = value;
                convection[tensor_index(n, i, k, j)] = -value;
            }
        }
    }

    let forcing = match forcing {
        ForcingSpec::Zero => ReducedForcing::Zero,
        ForcingSpec::Constant(field) => {
            ReducedForcing::Constant(project_checked(grid, basis, field)?)
        }
        ForcingSpec::Sampled(samples) => {
            let mut times = Vec::with_capacity(samples.len());
            let mut values = Vec::with_capacity(samples.len());
            for (time, field) in samples {
                times.push(*time);
                values.push(project_checked(grid, basis, field)?);
            }
            ReducedForcing::Sampled { times, values }
        }
    };

    ReducedOperators::from_raw(grid.viscosity(), stokes, convection, forcing, closure)
}

fn project_checked(
    grid: &TorusGrid,
    basis: &RomBasis,
    field: &SpectralVelocity,
) -> Result<DVector<f64>, RomError> {
    if field.modes_per_dim() != grid.modes_per_dim() {
        return Err(RomError::GridMismatch {
            basis: field.modes_per_dim(),
            grid: grid.modes_per_dim(),
        });
    }
    Ok(basis.project(field))
}

fn tensor_index(n: usize, i: usize, j: usize, k: usize) -> usize {
    (i * n + j) * n + k
}

impl ReducedOperators {
    pub(crate) fn from_raw(
        nu: f64,
        stokes: DMatrix<f64>,
        convection: Vec<f64>,
        forcing: ReducedForcing,
        closure: Closure,
    ) -> Result<Self, RomError> {
        let n = stokes.nrows();
        if stokes.ncols() != n || convection.len() != n * n * n {
            return Err(RomError::DimensionMismatch {
                expected: n * n * n,
                got: convection.len(),
            });
        }
        let stokes_norm = stokes
            .clone()
            .symmetric_eigen()
            .eigenvalues
            .iter()
            .fold(0.0f64, |acc, &lambda| acc.max(lambda.abs()));
        Ok(ReducedOperators {
            nu,
            stokes,
            convection,
            forcing,
            closure,
            stokes_norm,
        })
    }

    pub fn dim(&self) -> usize {
        self.stokes.nrows()
    }

    pub fn viscosity(&self) -> f64 {
        self.nu
    }

    pub fn stokes(&self) -> &DMatrix<f64> {
        &self.stokes
    }

    /// Spectral norm of the reduced Stokes matrix.
    pub fn stokes_norm(&self) -> f64 {
        self.stokes_norm
    }

    pub fn stokes_apply(&self, state: &DVector<f64>) -> DVector<f64> {
        assert_eq!(state.len(), self.dim());
        &self.stokes * state
    }

    /// Trilinear form value `b(phi_i, phi_j, phi_k)` as stored.
    pub fn trilinear(&self, i: usize, j: usize, k: usize) -> f64 {
        let n = self.dim();
        assert!(i < n && j < n && k < n);
        self.convection[tensor_index(n, i, j, k)]
    }

    /// Reduced convection `N_i(a) = sum_{p,q} a_p a_q T[p][q][i]`.
    pub fn nonlinear(&self, state: &DVector<f64>) -> DVector<f64> {
        let n = self.dim();
        assert_eq!(state.len(), n);
        let mut out = DVector::zeros(n);
        for p in 0..n {
            let ap = state[p];
            if ap == 0.0 {
                continue;
            }
            for q in 0..n {
                let weight = ap * state[q];
                if weight == 0.0 {
                    continue;
                }
                let base = (p * n + q) * n;
                for i in 0..n {
                    out[i] += weight * self.convection[base + i];
                }
            }
        }
        out
    }

    pub fn forcing(&self) -> &ReducedForcing {
        &self.forcing
    }

    pub fn forcing_at(&self, t: f64) -> DVector<f64> {
        self.forcing.eval(self.dim(), t)
    }

    pub fn closure(&self) -> &Closure {
        &self.closure
    }

    pub fn closure_eval(&self, state: &DVector<f64>) -> DVector<f64> {
        self.closure.eval(&self.stokes, state)
    }

    /// Energy drain `<C(a), a>` of the closure at `state`.
    pub fn closure_dissipation(&self, state: &DVector<f64>) -> f64 {
        self.closure_eval(state).dot(state)
    }

    pub fn closure_lipschitz(&self) -> f64 {
        self.closure.lipschitz(self.stokes_norm)
    }

    pub(crate) fn convection_raw(&self) -> &[f64] {
        &self.convection
    }

    /// Content hash of every operator entry. Two operator sets certify the
    /// same reduced model exactly when their digests agree.
    pub fn digest(&self) -> String {
        let mut hasher = Sha256::new();
        hasher.update(b"certrom-reduced-operators-v1");
        hasher.update((self.dim() as u64).to_le_bytes());
        hasher.update(self.nu.to_le_bytes());
        for value in self.stokes.iter() {
            hasher.update(value.to_le_bytes());
        }
        for value in &self.convection {
            hasher.update(value.to_le_bytes());
        }
        self.forcing.digest_into(&mut hasher);
        match &self.closure {
            Closure::None => hasher.update([0u8]),
            Closure::LinearDamping { alpha } => {
                hasher.update([1u8]);
                hasher.update(alpha.to_le_bytes());
            }
            Closure::EddyViscosity {
                coefficient,
                regime_radius,
            } => {
                hasher.update([2u8]);
                hasher.update(coefficient.to_le_bytes());
                hasher.update(regime_radius.to_le_bytes());
            }
        }
        hasher
            .finalize()
            .iter()
            .map(|byte| format!("{byte:02x}"))
            .collect()
    }

    /// Diagnostic tamper: shifts a single tensor entry without touching its
    /// antisymmetric partner, so the stored structure no longer cancels.
    /// Only exists to demonstrate that the certifier catches the damage.
    pub fn break_skew_pair(&mut self, i: usize, j: usize, k: usize, delta: f64) {
        let n = self.dim();
        assert!(i < n && j < n && k < n && j != k);
        self.convection[tensor_index(n, i, j, k)] += delta;
    }
}
