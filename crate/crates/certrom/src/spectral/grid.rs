//! Torus grid descriptor: resolution, viscosity and the dealias mask.

use serde::{Deserialize, Serialize};

use super::SpectralError;

/// Parameters of the `n x n` Fourier grid on `[0, 2pi)^2`.
///
/// Wavenumbers per dimension run through `-n/2, ..., n/2 - 1` in standard
/// FFT index order. The dealias ceiling `floor(fraction * n / 2)` is fixed
/// at construction and applied to every pseudo-spectral product.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TorusGrid {
    n: usize,
    nu: f64,
    dealias_fraction: f64,
}

impl TorusGrid {
    /// Grid with the default 2/3 dealias rule.
    pub fn new(n: usize, nu: f64) -> Result<Self, SpectralError> {
        Self::with_dealias_fraction(n, nu, 2.0 / 3.0)
    }

    pub fn with_dealias_fraction(
        n: usize,
        nu: f64,
        dealias_fraction: f64,
    ) -> Result<Self, SpectralError> {
        if n < 4 || n % 2 != 0 {
            return Err(SpectralError::InvalidGridSize(n));
        }
        if !nu.is_finite() || nu <= 0.0 {
            return Err(SpectralError::InvalidViscosity(nu));
        }
        if !dealias_fraction.is_finite() || dealias_fraction <= 0.0 || dealias_fraction > 1.0 {
            return Err(SpectralError::InvalidDealiasFraction(dealias_fraction));
        }
        Ok(TorusGrid {
            n,
            nu,
            dealias_fraction,
        })
    }

    pub fn modes_per_dim(&self) -> usize {
        self.n
    }

    pub fn viscosity(&self) -> f64 {
        self.nu
    }

    pub fn dealias_fraction(&self) -> f64 {
        self.dealias_fraction
    }

    /// Largest retained wavenumber magnitude under the dealias mask.
    pub fn dealias_max_wavenumber(&self) -> i64 {
        (self.dealias_fraction * self.n as f64 / 2.0).floor() as i64
    }

    /// Largest wavenumber representable on the grid.
    pub fn nyquist(&self) -> i64 {
        (self.n / 2) as i64
    }

    /// Signed wavenumber for a storage index.
    pub fn wavenumber(&self, index: usize) -> i64 {
        wavenumber(self.n, index)
    }

    /// Storage index for a signed wavenumber.
    pub fn index_of(&self, k: i64) -> Result<usize, SpectralError> {
        let half = (self.n / 2) as i64;
        if k < -half || k >= half {
            return Err(SpectralError::WavenumberOutOfRange(k, k));
        }
        Ok(index_of(self.n, k))
    }
}

pub(crate) fn wavenumber(n: usize, index: usize) -> i64 {
    if index < n / 2 {
        index as i64
    } else {
        index as i64 - n as i64
    }
}

pub(crate) fn index_of(n: usize, k: i64) -> usize {
    if k >= 0 {
        k as usize
    } else {
        (k + n as i64) as usize
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn wavenumber_layout_round_trips() {
        let grid = TorusGrid::new(8, 0.1).unwrap();
        for i in 0..8 {
            let k = grid.wavenumber(i);
            assert_eq!(grid.index_of(k).unwrap(), i);
        }
        assert_eq!(grid.wavenumber(0), 0);
        assert_eq!(grid.wavenumber(3), 3);
        assert_eq!(grid.wavenumber(4), -4);
        assert_eq!(grid.wavenumber(7), -1);
    }

    #[test]
    fn dealias_ceiling_matches_two_thirds_rule() {
        let grid = TorusGrid::new(32, 0.1).unwrap();
        assert_eq!(grid.dealias_max_wavenumber(), 10);
        let grid = TorusGrid::new(8, 0.1).unwrap();
        assert_eq!(grid.dealias_max_wavenumber(), 2);
    }

    #[test]
    fn rejects_degenerate_parameters() {
        assert!(TorusGrid::new(3, 0.1).is_err());
        assert!(TorusGrid::new(6, 0.0).is_err());
        assert!(TorusGrid::new(6, f64::NAN).is_err());
        assert!(TorusGrid::with_dealias_fraction(8, 0.1, 1.5).is_err());
    }
}
