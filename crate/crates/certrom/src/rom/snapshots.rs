//! Weighted snapshot collections feeding the POD eigenproblem.

use crate::spectral::SpectralVelocity;

use super::RomError;

/// Velocity snapshots with positive quadrature weights.
///
/// The weights enter the correlation matrix as `sqrt(w_i w_j) <s_i, s_j>`,
/// so trajectory snapshots can carry their time-quadrature weights and the
/// spectrum keeps the interpretation of energy per unit time.
#[derive(Debug, Clone)]
pub struct SnapshotSet {
    snapshots: Vec<SpectralVelocity>,
    weights: Vec<f64>,
    modes_per_dim: usize,
}

impl SnapshotSet {
    /// Uniform weight `1/K` per snapshot.
    pub fn from_states(snapshots: Vec<SpectralVelocity>) -> Result<Self, RomError> {
        let count = snapshots.len();
        if count == 0 {
            return Err(RomError::EmptySnapshotSet);
        }
        let weight = 1.0 / count as f64;
        Self::from_weighted_states(snapshots, vec![weight; count])
    }

    pub fn from_weighted_states(
        snapshots: Vec<SpectralVelocity>,
        weights: Vec<f64>,
    ) -> Result<Self, RomError> {
        if snapshots.is_empty() || snapshots.len() != weights.len() {
            return Err(RomError::EmptySnapshotSet);
        }
        let modes_per_dim = snapshots[0].modes_per_dim();
        for (index, snapshot) in snapshots.iter().enumerate() {
            if snapshot.modes_per_dim() != modes_per_dim {
                return Err(RomError::SnapshotSizeMismatch { index });
            }
        }
        for (index, &weight) in weights.iter().enumerate() {
            if !weight.is_finite() || weight <= 0.0 {
                return Err(RomError::NonPositiveWeight { index, weight });
            }
        }
        Ok(SnapshotSet {
            snapshots,
            weights,
            modes_per_dim,
        })
    }

    pub fn len(&self) -> usize {
        self.snapshots.len()
    }

    pub fn is_empty(&self) -> bool {
        self.snapshots.is_empty()
    }

    pub fn modes_per_dim(&self) -> usize {
        self.modes_per_dim
    }

    pub fn snapshot(&self, index: usize) -> &SpectralVelocity {
        &self.snapshots[index]
    }

    pub fn weight(&self, index: usize) -> f64 {
        self.weights[index]
    }

    pub fn snapshots(&self) -> &[SpectralVelocity] {
        &self.snapshots
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::spectral::{taylor_green, TorusGrid};

    #[test]
    fn uniform_weights_sum_to_one() {
        let grid = TorusGrid::new(8, 0.1).unwrap();
        let states = vec![
            taylor_green(&grid, 1.0),
            taylor_green(&grid, 2.0),
            taylor_green(&grid, 3.0),
        ];
        let set = SnapshotSet::from_states(states).unwrap();
        let total: f64 = (0..set.len()).map(|i| set.weight(i)).sum();
        assert!((total - 1.0).abs() < 1e-15);
    }

    #[test]
    fn rejects_empty_and_mismatched_input() {
        assert!(matches!(
            SnapshotSet::from_states(vec![]),
            Err(RomError::EmptySnapshotSet)
        ));

        let small = TorusGrid::new(8, 0.1).unwrap();
        let large = TorusGrid::new(16, 0.1).unwrap();
        let err = SnapshotSet::from_states(vec![
            taylor_green(&small, 1.0),
            taylor_green(&large, 1.0),
        ]);
        assert!(matches!(
            err,
            Err(RomError::SnapshotSizeMismatch { index: 1 })
        ));
    }

    #[test]
    fn rejects_nonpositive_weights() {
        let grid = TorusGrid::new(8, 0.1).unwrap();
        let err = SnapshotSet::from_weighted_states(
            vec![taylor_green(&grid, 1.0), taylor_green(&grid, 2.0)],
            vec![1.0, 0.0],
        );
        assert!(matches!(
            err,
            Err(RomError::NonPositiveWeight { index: 1, .. })
        ));
    }
}
