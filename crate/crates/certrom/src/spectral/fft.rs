//! Cached 2D complex FFT built from 1D passes.
//!
//! Conventions: `to_physical` is the unnormalised inverse transform, so
//! `u(x) = sum_k u_hat(k) exp(i k.x)` holds on the collocation grid;
//! `to_spectral` applies the `1/n^2` normalisation so the two maps are
//! mutually inverse.

use std::cell::RefCell;
use std::collections::HashMap;
use std::rc::Rc;
use std::sync::Arc;

use ndarray::Array2;
use num_complex::Complex64;
use rustfft::{Fft, FftPlanner};

pub(crate) struct Fft2 {
    n: usize,
    forward: Arc<dyn Fft<f64>>,
    inverse: Arc<dyn Fft<f64>>,
}

impl Fft2 {
    fn new(n: usize) -> Self {
        let mut planner = FftPlanner::new();
        Fft2 {
            n,
            forward: planner.plan_fft_forward(n),
            inverse: planner.plan_fft_inverse(n),
        }
    }

    /// Unnormalised inverse transform: spectral coefficients to grid values.
    pub fn to_physical(&self, spectral: &Array2<Complex64>) -> Array2<Complex64> {
        let mut out = spectral.clone();
        self.transform(&mut out, &self.inverse);
        out
    }

    /// Forward transform with `1/n^2` normalisation: grid values to coefficients.
    pub fn to_spectral(&self, physical: &Array2<Complex64>) -> Array2<Complex64> {
        let mut out = physical.clone();
        self.transform(&mut out, &self.forward);
        let scale = 1.0 / (self.n * self.n) as f64;
        out.mapv_inplace(|z| z * scale);
        out
    }

    fn transform(&self, data: &mut Array2<Complex64>, plan: &Arc<dyn Fft<f64>>) {
        let n = self.n;
        for mut row in data.rows_mut() {
            let slice = row
                .as_slice_mut()
                .expect("row-major layout guarantees contiguous rows");
            plan.process(slice);
        }
        let mut column = vec![Complex64::default(); n];
        for j in 0..n {
            for i in 0..n {
                column[i] = data[(i, j)];
            }
            plan.process(&mut column);
            for i in 0..n {
                data[(i, j)] = column[i];
            }
        }
    }
}

thread_local! {
    static PLANS: RefCell<HashMap<usize, Rc<Fft2>>> = RefCell::new(HashMap::new());
}

/// Fetch the cached transform pair for an `n x n` grid.
pub(crate) fn fft2_for(n: usize) -> Rc<Fft2> {
    PLANS.with(|plans| {
        plans
            .borrow_mut()
            .entry(n)
            .or_insert_with(|| Rc::new(Fft2::new(n)))
            .clone()
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn round_trip_recovers_coefficients() {
        let n = 8;
        let fft = fft2_for(n);
        let mut spec = Array2::zeros((n, n));
        spec[(1, 2)] = Complex64::new(0.3, -0.7);
        spec[(5, 0)] = Complex64::new(-1.1, 0.2);
        let phys = fft.to_physical(&spec);
        let back = fft.to_spectral(&phys);
        for ((i, j), value) in back.indexed_iter() {
            let expected = spec[(i, j)];
            assert!((value - expected).norm() < 1e-13, "mismatch at ({i}, {j})");
        }
    }

    #[test]
    fn single_mode_evaluates_to_plane_wave() {
        let n = 16;
        let fft = fft2_for(n);
        let mut spec = Array2::zeros((n, n));
        spec[(1, 0)] = Complex64::new(1.0, 0.0);
        let phys = fft.to_physical(&spec);
        let h = 2.0 * std::f64::consts::PI / n as f64;
        for i in 0..n {
            let expected = Complex64::new(0.0, (i as f64) * h).exp();
            assert!((phys[(i, 0)] - expected).norm() < 1e-12);
        }
    }
}
