//! Time-dependent forcing specifications.

use super::{SpectralError, SpectralVelocity, TorusGrid};

/// Forcing for the momentum equation: zero, constant in time, or a sampled
/// series with piecewise-linear interpolation. Samples are Leray-projected
/// at construction so the forcing always lies in the solenoidal space;
/// evaluation outside the sampled range clamps to the end values.
#[derive(Debug, Clone, PartialEq)]
pub enum ForcingSpec {
    Zero,
    Constant(SpectralVelocity),
    Sampled(Vec<(f64, SpectralVelocity)>),
}

impl ForcingSpec {
    pub fn constant(grid: &TorusGrid, field: &SpectralVelocity) -> Result<Self, SpectralError> {
        check_size(grid, field, 0)?;
        Ok(ForcingSpec::Constant(leray_projected(grid, field)))
    }

    pub fn sampled(
        grid: &TorusGrid,
        samples: Vec<(f64, SpectralVelocity)>,
    ) -> Result<Self, SpectralError> {
        if samples.is_empty() {
            return Err(SpectralError::InvalidForcingSamples);
        }
        for window in samples.windows(2) {
            if !(window[1].0 > window[0].0) {
                return Err(SpectralError::InvalidForcingSamples);
            }
        }
        let mut projected = Vec::with_capacity(samples.len());
        for (index, (time, field)) in samples.into_iter().enumerate() {
            if !time.is_finite() {
                return Err(SpectralError::InvalidForcingSamples);
            }
            check_size(grid, &field, index)?;
            projected.push((time, leray_projected(grid, &field)));
        }
        Ok(ForcingSpec::Sampled(projected))
    }

    /// Forcing field at time `t`.
    pub fn eval(&self, n: usize, t: f64) -> SpectralVelocity {
        match self {
            ForcingSpec::Zero => SpectralVelocity::zero(n),
            ForcingSpec::Constant(field) => field.clone(),
            ForcingSpec::Sampled(samples) => {
                if t <= samples[0].0 {
                    return samples[0].1.clone();
                }
                let last = samples.len() - 1;
                if t >= samples[last].0 {
                    return samples[last].1.clone();
                }
                let upper = samples.partition_point(|(time, _)| *time <= t);
                let (t0, ref f0) = samples[upper - 1];
                let (t1, ref f1) = samples[upper];
                let weight = (t - t0) / (t1 - t0);
                let mut out = f0.scaled(1.0 - weight);
                out.axpy(weight, f1);
                out
            }
        }
    }
}

fn check_size(
    grid: &TorusGrid,
    field: &SpectralVelocity,
    index: usize,
) -> Result<(), SpectralError> {
    if field.modes_per_dim() != grid.modes_per_dim() {
        return Err(SpectralError::ForcingSampleMismatch(index));
    }
    Ok(())
}

fn leray_projected(grid: &TorusGrid, field: &SpectralVelocity) -> SpectralVelocity {
    super::field::leray_project(grid, field.raw())
}
