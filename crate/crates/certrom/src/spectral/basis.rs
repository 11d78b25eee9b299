//! Explicit real orthonormal basis of the mean-free solenoidal space.
//!
//! Wavenumbers come in conjugate pairs `{k, -k}`. For a canonical
//! representative `k` the tangential direction `tau = (-k2, k1) / |k|`
//! spans the solenoidal modes, and each pair contributes a cosine and a
//! sine field, both with unit energy norm:
//!
//! ```text
//! cos mode:  2 alpha tau cos(k.x),   sin mode:  2 alpha tau sin(k.x),
//! alpha = 1 / (2 sqrt(2) pi).
//! ```
//!
//! The ordering (by `|k|^2`, then lexicographic, cosine before sine) is
//! deterministic; it backs full-dimension reduced models and the matrix
//! assembly of linearised operators.

use num_complex::Complex64;

use super::{SpectralError, SpectralVelocity, TorusGrid};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Parity {
    Cosine,
    Sine,
}

/// One real basis field: the conjugate pair `{k, -k}` with a parity.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PairMode {
    pub k: (i64, i64),
    pub parity: Parity,
}

impl PairMode {
    /// The unit-norm field for this mode on an `n x n` grid.
    pub fn field(&self, n: usize) -> SpectralVelocity {
        let (k1, k2) = self.k;
        let ksq = ((k1 * k1 + k2 * k2) as f64).sqrt();
        let tau = [-(k2 as f64) / ksq, (k1 as f64) / ksq];
        let alpha = 1.0 / (2.0 * std::f64::consts::SQRT_2 * std::f64::consts::PI);
        let coeff = match self.parity {
            Parity::Cosine => Complex64::new(alpha, 0.0),
            Parity::Sine => Complex64::new(0.0, -alpha),
        };
        let plus = [coeff * tau[0], coeff * tau[1]];
        let minus = [plus[0].conj(), plus[1].conj()];
        SpectralVelocity::from_modes(n, &[(self.k, plus), ((-k1, -k2), minus)])
            .expect("pair modes satisfy the invariants by construction")
    }
}

/// Enumerate the canonical pair modes with `0 < |k|_inf <= kmax`.
///
/// Canonical representatives have `k1 > 0`, or `k1 == 0` and `k2 > 0`.
/// `kmax` must stay below the grid Nyquist so every pair is resolvable.
pub fn pair_modes(grid: &TorusGrid, kmax: i64) -> Result<Vec<PairMode>, SpectralError> {
    if kmax < 1 || kmax >= grid.nyquist() {
        return Err(SpectralError::WavenumberOutOfRange(kmax, kmax));
    }
    let mut ks = Vec::new();
    for k1 in 0..=kmax {
        for k2 in -kmax..=kmax {
            let canonical = k1 > 0 || (k1 == 0 && k2 > 0);
            if canonical {
                ks.push((k1, k2));
            }
        }
    }
    ks.sort_by_key(|&(k1, k2)| (k1 * k1 + k2 * k2, k1, k2));
    let mut modes = Vec::with_capacity(2 * ks.len());
    for k in ks {
        modes.push(PairMode {
            k,
            parity: Parity::Cosine,
        });
        modes.push(PairMode {
            k,
            parity: Parity::Sine,
        });
    }
    Ok(modes)
}

/// Materialise the orthonormal basis fields for `pair_modes(grid, kmax)`.
pub fn solenoidal_basis(
    grid: &TorusGrid,
    kmax: i64,
) -> Result<Vec<SpectralVelocity>, SpectralError> {
    let n = grid.modes_per_dim();
    Ok(pair_modes(grid, kmax)?
        .iter()
        .map(|mode| mode.field(n))
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn basis_is_orthonormal() {
        let grid = TorusGrid::new(8, 0.1).unwrap();
        let basis = solenoidal_basis(&grid, 2).unwrap();
        // (2*2+1)^2 - 1 = 24 wavenumbers, 12 pairs, 2 parities each.
        assert_eq!(basis.len(), 24);
        for (i, a) in basis.iter().enumerate() {
            for (j, b) in basis.iter().enumerate() {
                let inner = a.inner(b);
                let expected = if i == j { 1.0 } else { 0.0 };
                assert!(
                    (inner - expected).abs() < 1e-12,
                    "gram[{i}][{j}] = {inner:.3e}"
                );
            }
        }
    }

    #[test]
    fn basis_fields_satisfy_invariants() {
        let grid = TorusGrid::new(8, 0.1).unwrap();
        for field in solenoidal_basis(&grid, 3).unwrap() {
            field.validate(1e-13).unwrap();
        }
    }

    #[test]
    fn truncation_must_stay_below_nyquist() {
        let grid = TorusGrid::new(8, 0.1).unwrap();
        assert!(pair_modes(&grid, 4).is_err());
        assert!(pair_modes(&grid, 0).is_err());
        assert!(pair_modes(&grid, 3).is_ok());
    }

    #[test]
    fn cosine_mode_is_a_tangential_cosine_wave() {
        let _grid = TorusGrid::new(8, 0.1).unwrap();
        let mode = PairMode {
            k: (1, 0),
            parity: Parity::Cosine,
        };
        let field = mode.field(8);
        assert_relative_eq!(field.l2_norm(), 1.0, max_relative = 1e-13);
        // tau(1, 0) = (0, 1): the second component carries 2 alpha cos(x).
        let values = field.physical_values(1);
        let amplitude = 1.0 / (std::f64::consts::SQRT_2 * std::f64::consts::PI);
        assert_relative_eq!(values[1][(0, 0)], amplitude, max_relative = 1e-12);
        assert!(values[0][(0, 0)].abs() < 1e-14);
    }
}
