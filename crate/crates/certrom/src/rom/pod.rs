//! Proper orthogonal decomposition by the method of snapshots.

use nalgebra::{DMatrix, DVector};

use crate::spectral::SpectralVelocity;

use super::{RomError, SnapshotSet};

/// Relative eigenvalue cutoff below which correlation directions are
/// treated as numerical noise rather than usable modes.
const RANK_THRESHOLD: f64 = 1e-12;

/// Orthonormal reduced basis with its correlation spectrum.
#[derive(Debug, Clone)]
pub struct RomBasis {
    modes: Vec<SpectralVelocity>,
    spectrum: Vec<f64>,
    tail_energy: f64,
}

impl RomBasis {
    pub(crate) fn from_parts(
        modes: Vec<SpectralVelocity>,
        spectrum: Vec<f64>,
        tail_energy: f64,
    ) -> Self {
        RomBasis {
            modes,
            spectrum,
            tail_energy,
        }
    }

    pub fn dim(&self) -> usize {
        self.modes.len()
    }

    pub fn modes_per_dim(&self) -> usize {
        self.modes[0].modes_per_dim()
    }

    pub fn mode(&self, index: usize) -> &SpectralVelocity {
        &self.modes[index]
    }

    pub fn modes(&self) -> &[SpectralVelocity] {
        &self.modes
    }

    /// Full correlation spectrum, descending, not truncated to `dim`.
    pub fn spectrum(&self) -> &[f64] {
        &self.spectrum
    }

    /// Sum of the correlation eigenvalues beyond the retained modes.
    pub fn tail_energy(&self) -> f64 {
        self.tail_energy
    }

    /// Reduced coordinates of `field` in the energy inner product.
    pub fn project(&self, field: &SpectralVelocity) -> DVector<f64> {
        DVector::from_fn(self.dim(), |j, _| self.modes[j].inner(field))
    }

    /// Field represented by the reduced coordinates `coords`.
    pub fn lift(&self, coords: &DVector<f64>) -> Result<SpectralVelocity, RomError> {
        if coords.len() != self.dim() {
            return Err(RomError::DimensionMismatch {
                expected: self.dim(),
                got: coords.len(),
            });
        }
        let mut field = SpectralVelocity::zero(self.modes_per_dim());
        for (j, mode) in self.modes.iter().enumerate() {
            field.axpy(coords[j], mode);
        }
        Ok(field)
    }

    /// Orthogonal projection of `field` onto the reduced space.
    pub fn reconstruct(&self, field: &SpectralVelocity) -> SpectralVelocity {
        self.lift(&self.project(field)).expect("coords match dim")
    }
}

/// Extracts the leading `n` POD modes from a weighted snapshot set.
///
/// The correlation matrix `K_ij = sqrt(w_i w_j) <s_i, s_j>` is symmetric
/// positive semidefinite; its eigenpairs give the modes as weighted
/// snapshot combinations. A modified Gram-Schmidt polish removes the
/// roundoff left by the eigensolver so the basis is orthonormal to
/// machine precision even when the spectrum decays steeply.
pub fn pod_basis(set: &SnapshotSet, n: usize) -> Result<RomBasis, RomError> {
    if n == 0 {
        return Err(RomError::EmptyBasis);
    }
    let count = set.len();
    let sqrt_weights: Vec<f64> = (0..count).map(|i| set.weight(i).sqrt()).collect();

    let mut correlation = DMatrix::<f64>::zeros(count, count);
    for i in 0..count {
        for j in i..count {
            let value = sqrt_weights[i] * sqrt_weights[j] * set.snapshot(i).inner(set.snapshot(j));
            correlation[(i, j)] = value;
            correlation[(j, i)] = value;
        }
    }

    let eigen = correlation.symmetric_eigen();
    let mut order: Vec<usize> = (0..count).collect();
    order.sort_by(|&a, &b| {
        eigen.eigenvalues[b]
            .partial_cmp(&eigen.eigenvalues[a])
            .expect("correlation eigenvalues are finite")
    });

    let spectrum: Vec<f64> = order
        .iter()
        .map(|&idx| eigen.eigenvalues[idx].max(0.0))
        .collect();
    let leading = spectrum[0];
    let effective_rank = spectrum
        .iter()
        .filter(|&&lambda| lambda > leading * RANK_THRESHOLD)
        .count();
    if n > effective_rank {
        return Err(RomError::RankDeficient {
            requested: n,
            effective_rank,
        });
    }

    let mut modes = Vec::with_capacity(n);
    for (rank, &idx) in order.iter().take(n).enumerate() {
        let scale = 1.0 / spectrum[rank].sqrt();
        let mut mode = SpectralVelocity::zero(set.modes_per_dim());
        for i in 0..count {
            let coefficient = scale * sqrt_weights[i] * eigen.eigenvectors[(i, idx)];
            mode.axpy(coefficient, set.snapshot(i));
        }
        modes.push(mode);
    }

    for pass in 0..2 {
        for j in 0..modes.len() {
            for i in 0..j {
                let overlap = modes[i].inner(&modes[j]);
                let (head, tail) = modes.split_at_mut(j);
                tail[0].axpy(-overlap, &head[i]);
            }
            let norm = modes[j].l2_norm();
            debug_assert!(norm > 0.0 || pass > 0);
            modes[j].scale(1.0 / norm);
        }
    }

    let tail_energy = spectrum.iter().skip(n).sum();
    Ok(RomBasis::from_parts(modes, spectrum, tail_energy))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::spectral::{taylor_green, SpectralVelocity, TorusGrid};
    use approx::assert_relative_eq;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn orthonormality_defect(basis: &RomBasis) -> f64 {
        let n = basis.dim();
        let mut worst = 0.0f64;
        for i in 0..n {
            for j in 0..n {
                let expected = if i == j { 1.0 } else { 0.0 };
                worst = worst.max((basis.mode(i).inner(basis.mode(j)) - expected).abs());
            }
        }
        worst
    }

    #[test]
    fn single_snapshot_basis_is_the_normalized_snapshot() {
        let grid = TorusGrid::new(8, 0.1).unwrap();
        let amplitude = 3.0;
        let snapshot = taylor_green(&grid, amplitude);
        let weight = 0.25;
        let set =
            SnapshotSet::from_weighted_states(vec![snapshot.clone()], vec![weight]).unwrap();
        let basis = pod_basis(&set, 1).unwrap();

        // Frozen values: the mode is s/||s|| and the eigenvalue w ||s||^2.
        let norm = snapshot.l2_norm();
        assert_relative_eq!(basis.spectrum()[0], weight * norm * norm, max_relative = 1e-12);
        assert_relative_eq!(basis.tail_energy(), 0.0, epsilon = 1e-14);
        let mut expected = snapshot.clone();
        expected.scale(1.0 / norm);
        let mut diff = basis.mode(0).clone();
        // Eigenvectors are sign-ambiguous; align before comparing.
        if basis.mode(0).inner(&expected) < 0.0 {
            diff.scale(-1.0);
        }
        diff.axpy(-1.0, &expected);
        assert!(diff.l2_norm() < 1e-12);
    }

    #[test]
    fn orthogonal_snapshots_give_their_energies_as_eigenvalues() {
        let grid = TorusGrid::new(8, 0.1).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        // Taylor-Green occupies the |k|^2 = 2 shell only; a mode confined
        // to another shell is exactly orthogonal to it.
        let tg = taylor_green(&grid, 2.0 / (std::f64::consts::PI * 2f64.sqrt()));
        let mut other = SpectralVelocity::random_low_mode(&grid, 2, 1.0, &mut rng);
        let overlap = tg.inner(&other);
        other.axpy(-overlap / tg.inner(&tg), &tg);
        other.scale(1.0 / other.l2_norm());

        // Unit weights: eigenvalues are the squared snapshot norms 4 and 1.
        let set = SnapshotSet::from_weighted_states(
            vec![tg.clone(), other.clone()],
            vec![1.0, 1.0],
        )
        .unwrap();
        let basis = pod_basis(&set, 1).unwrap();
        assert_relative_eq!(basis.spectrum()[0], 4.0, max_relative = 1e-10);
        assert_relative_eq!(basis.spectrum()[1], 1.0, max_relative = 1e-10);
        assert_relative_eq!(basis.tail_energy(), 1.0, max_relative = 1e-10);

        let full = pod_basis(&set, 2).unwrap();
        assert_relative_eq!(full.tail_energy(), 0.0, epsilon = 1e-12);
        assert!(orthonormality_defect(&full) < 1e-12);
    }

    #[test]
    fn basis_is_orthonormal_on_a_decaying_trajectory() {
        let grid = TorusGrid::new(16, 0.05).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let snapshots: Vec<SpectralVelocity> = (0..12)
            .map(|_| SpectralVelocity::random_low_mode(&grid, 3, 1.0, &mut rng))
            .collect();
        let set = SnapshotSet::from_states(snapshots).unwrap();
        let basis = pod_basis(&set, 6).unwrap();
        assert!(orthonormality_defect(&basis) < 1e-12);
        // Spectrum is descending and non-negative.
        for pair in basis.spectrum().windows(2) {
            assert!(pair[0] >= pair[1]);
            assert!(pair[1] >= 0.0);
        }
    }

    #[test]
    fn weighted_reconstruction_error_equals_tail_energy() {
        let grid = TorusGrid::new(16, 0.05).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let snapshots: Vec<SpectralVelocity> = (0..10)
            .map(|_| SpectralVelocity::random_low_mode(&grid, 3, 1.5, &mut rng))
            .collect();
        let weights: Vec<f64> = (0..10).map(|i| 0.05 + 0.01 * i as f64).collect();
        let set = SnapshotSet::from_weighted_states(snapshots, weights).unwrap();

        for n in [2usize, 5] {
            let basis = pod_basis(&set, n).unwrap();
            let mut weighted_error = 0.0;
            for i in 0..set.len() {
                let mut residual = set.snapshot(i).clone();
                residual.axpy(-1.0, &basis.reconstruct(set.snapshot(i)));
                let norm = residual.l2_norm();
                weighted_error += set.weight(i) * norm * norm;
            }
            assert_relative_eq!(weighted_error, basis.tail_energy(), epsilon = 1e-10);
        }
    }

    #[test]
    fn rank_deficiency_is_reported() {
        let grid = TorusGrid::new(8, 0.1).unwrap();
        // Two parallel snapshots span a one-dimensional space.
        let set = SnapshotSet::from_states(vec![
            taylor_green(&grid, 1.0),
            taylor_green(&grid, 2.0),
        ])
        .unwrap();
        let err = pod_basis(&set, 2).unwrap_err();
        assert!(matches!(
            err,
            RomError::RankDeficient {
                requested: 2,
                effective_rank: 1
            }
        ));
        assert!(pod_basis(&set, 1).is_ok());
    }

    #[test]
    fn lift_and_project_round_trip() {
        let grid = TorusGrid::new(16, 0.05).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let snapshots: Vec<SpectralVelocity> = (0..8)
            .map(|_| SpectralVelocity::random_low_mode(&grid, 3, 1.0, &mut rng))
            .collect();
        let set = SnapshotSet::from_states(snapshots).unwrap();
        let basis = pod_basis(&set, 4).unwrap();

        let coords = DVector::from_vec(vec![0.3, -1.2, 0.7, 0.05]);
        let lifted = basis.lift(&coords).unwrap();
        let recovered = basis.project(&lifted);
        assert!((recovered - &coords).norm() < 1e-12);

        let bad = DVector::from_vec(vec![1.0; 3]);
        assert!(matches!(
            basis.lift(&bad),
            Err(RomError::DimensionMismatch {
                expected: 4,
                got: 3
            })
        ));
    }
}
