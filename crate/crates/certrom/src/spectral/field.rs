//! Divergence-free spectral velocity fields and their norms.

use ndarray::{Array2, Array3};
use num_complex::Complex64;
use rand::{Rng, RngExt};

use super::fft::fft2_for;
use super::grid::{index_of, wavenumber};
use super::{SpectralError, TorusGrid};

/// Parseval weight: `||u||^2 = (2pi)^2 sum_k |u_hat(k)|^2`.
pub(crate) const PARSEVAL: f64 = {
    let two_pi = 2.0 * std::f64::consts::PI;
    two_pi * two_pi
};

/// Energy, gradient and dual norms of one field.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FieldNorms {
    /// `||u||_H`, the L2 norm.
    pub l2: f64,
    /// `||u||_V = ||grad u||`, the H1 seminorm.
    pub grad: f64,
    /// `||u||_{V'}`, the dual norm realised by the diagonal Riesz map `1/|k|`.
    pub dual: f64,
}

/// Velocity field in Fourier coefficients, component-major storage
/// `coeffs[(c, i, j)]` with `c` the vector component and `(i, j)` the
/// wavenumber indices.
///
/// Every constructed value satisfies three invariants: conjugate symmetry
/// `u_hat(-k) = conj(u_hat(k))`, modewise solenoidality `k . u_hat(k) = 0`
/// and a vanishing mean mode `u_hat(0) = 0`.
#[derive(Debug, Clone, PartialEq)]
pub struct SpectralVelocity {
    n: usize,
    coeffs: Array3<Complex64>,
}

impl SpectralVelocity {
    /// The zero field on an `n x n` grid.
    pub fn zero(n: usize) -> Self {
        SpectralVelocity {
            n,
            coeffs: Array3::zeros((2, n, n)),
        }
    }

    /// Build a field from explicit `(wavenumber, [u1_hat, u2_hat])` entries.
    ///
    /// The entries must already satisfy the structural invariants; this
    /// constructor validates instead of projecting, so hand-derived test
    /// fields cannot be silently altered.
    pub fn from_modes(
        n: usize,
        modes: &[((i64, i64), [Complex64; 2])],
    ) -> Result<Self, SpectralError> {
        let mut coeffs = Array3::zeros((2, n, n));
        let half = (n / 2) as i64;
        for &((k1, k2), value) in modes {
            if k1 < -half || k1 >= half || k2 < -half || k2 >= half {
                return Err(SpectralError::WavenumberOutOfRange(k1, k2));
            }
            let (i, j) = (index_of(n, k1), index_of(n, k2));
            coeffs[(0, i, j)] = value[0];
            coeffs[(1, i, j)] = value[1];
        }
        let field = SpectralVelocity { n, coeffs };
        field.validate(1e-12)?;
        Ok(field)
    }

    pub fn modes_per_dim(&self) -> usize {
        self.n
    }

    /// Coefficient of component `c` at signed wavenumber `(k1, k2)`.
    pub fn coeff(&self, c: usize, k1: i64, k2: i64) -> Complex64 {
        self.coeffs[(c, index_of(self.n, k1), index_of(self.n, k2))]
    }

    pub(crate) fn raw(&self) -> &Array3<Complex64> {
        &self.coeffs
    }

    pub(crate) fn raw_mut(&mut self) -> &mut Array3<Complex64> {
        &mut self.coeffs
    }

    pub(crate) fn from_parts(n: usize, coeffs: Array3<Complex64>) -> Self {
        SpectralVelocity { n, coeffs }
    }

    /// Check the structural invariants against `tol`.
    pub fn validate(&self, tol: f64) -> Result<(), SpectralError> {
        let n = self.n;
        let mut worst_sym = 0.0f64;
        let mut worst_div = 0.0f64;
        for c in 0..2 {
            for i in 0..n {
                for j in 0..n {
                    let value = self.coeffs[(c, i, j)];
                    if !value.re.is_finite() || !value.im.is_finite() {
                        return Err(SpectralError::InvariantViolation("finite", f64::INFINITY));
                    }
                    let partner = self.coeffs[(c, (n - i) % n, (n - j) % n)];
                    worst_sym = worst_sym.max((value - partner.conj()).norm());
                }
            }
        }
        for i in 0..n {
            let k1 = wavenumber(n, i) as f64;
            for j in 0..n {
                let k2 = wavenumber(n, j) as f64;
                let div = k1 * self.coeffs[(0, i, j)] + k2 * self.coeffs[(1, i, j)];
                worst_div = worst_div.max(div.norm());
            }
        }
        let mean = self.coeffs[(0, 0, 0)].norm().max(self.coeffs[(1, 0, 0)].norm());
        if worst_sym > tol {
            return Err(SpectralError::InvariantViolation("conjugate symmetry", worst_sym));
        }
        if worst_div > tol {
            return Err(SpectralError::InvariantViolation("solenoidality", worst_div));
        }
        if mean > tol {
            return Err(SpectralError::InvariantViolation("zero mean", mean));
        }
        Ok(())
    }

    /// Energy inner product `<u, v> = (2pi)^2 Re sum_k u_hat . conj(v_hat)`.
    pub fn inner(&self, other: &SpectralVelocity) -> f64 {
        let mut acc = 0.0;
        for (a, b) in self.coeffs.iter().zip(other.coeffs.iter()) {
            acc += (a * b.conj()).re;
        }
        PARSEVAL * acc
    }

    pub fn l2_norm(&self) -> f64 {
        self.inner(self).max(0.0).sqrt()
    }

    pub fn grad_norm(&self) -> f64 {
        let n = self.n;
        let mut acc = 0.0;
        for c in 0..2 {
            for i in 0..n {
                let k1 = wavenumber(n, i) as f64;
                for j in 0..n {
                    let k2 = wavenumber(n, j) as f64;
                    acc += (k1 * k1 + k2 * k2) * self.coeffs[(c, i, j)].norm_sqr();
                }
            }
        }
        (PARSEVAL * acc).sqrt()
    }

    pub fn dual_norm(&self) -> f64 {
        let n = self.n;
        let mut acc = 0.0;
        for c in 0..2 {
            for i in 0..n {
                let k1 = wavenumber(n, i) as f64;
                for j in 0..n {
                    let k2 = wavenumber(n, j) as f64;
                    let ksq = k1 * k1 + k2 * k2;
                    if ksq > 0.0 {
                        acc += self.coeffs[(c, i, j)].norm_sqr() / ksq;
                    }
                }
            }
        }
        (PARSEVAL * acc).sqrt()
    }

    /// All three norms in one pass-friendly bundle.
    pub fn norms(&self) -> FieldNorms {
        FieldNorms {
            l2: self.l2_norm(),
            grad: self.grad_norm(),
            dual: self.dual_norm(),
        }
    }

    /// Negative Laplacian: multiply each mode by `|k|^2`.
    pub fn stokes_apply(&self) -> SpectralVelocity {
        let n = self.n;
        let mut out = self.clone();
        for c in 0..2 {
            for i in 0..n {
                let k1 = wavenumber(n, i) as f64;
                for j in 0..n {
                    let k2 = wavenumber(n, j) as f64;
                    out.coeffs[(c, i, j)] *= k1 * k1 + k2 * k2;
                }
            }
        }
        out
    }

    /// Scalar vorticity `curl u = d(u2)/dx - d(u1)/dy`.
    pub fn curl(&self) -> ScalarSpectralField {
        let n = self.n;
        let mut coeffs = Array2::zeros((n, n));
        for i in 0..n {
            let k1 = wavenumber(n, i) as f64;
            for j in 0..n {
                let k2 = wavenumber(n, j) as f64;
                let value = k1 * self.coeffs[(1, i, j)] - k2 * self.coeffs[(0, i, j)];
                coeffs[(i, j)] = Complex64::new(0.0, 1.0) * value;
            }
        }
        ScalarSpectralField { n, coeffs }
    }

    pub fn scale(&mut self, factor: f64) {
        self.coeffs.mapv_inplace(|z| z * factor);
    }

    pub fn scaled(&self, factor: f64) -> SpectralVelocity {
        let mut out = self.clone();
        out.scale(factor);
        out
    }

    /// `self += factor * other`.
    pub fn axpy(&mut self, factor: f64, other: &SpectralVelocity) {
        for (a, b) in self.coeffs.iter_mut().zip(other.coeffs.iter()) {
            *a += factor * b;
        }
    }

    pub fn add(&self, other: &SpectralVelocity) -> SpectralVelocity {
        let mut out = self.clone();
        out.axpy(1.0, other);
        out
    }

    pub fn sub(&self, other: &SpectralVelocity) -> SpectralVelocity {
        let mut out = self.clone();
        out.axpy(-1.0, other);
        out
    }
}

/// Scalar field in Fourier coefficients (vorticity, stream function).
#[derive(Debug, Clone, PartialEq)]
pub struct ScalarSpectralField {
    n: usize,
    coeffs: Array2<Complex64>,
}

impl ScalarSpectralField {
    pub fn modes_per_dim(&self) -> usize {
        self.n
    }

    pub fn coeff(&self, k1: i64, k2: i64) -> Complex64 {
        self.coeffs[(index_of(self.n, k1), index_of(self.n, k2))]
    }

    pub fn l2_norm(&self) -> f64 {
        let acc: f64 = self.coeffs.iter().map(|z| z.norm_sqr()).sum();
        (PARSEVAL * acc).sqrt()
    }
}

/// Enforce conjugate symmetry by averaging each mode with the conjugate
/// of its mirror partner.
pub(crate) fn hermitian_symmetrize(n: usize, coeffs: &mut Array3<Complex64>) {
    for c in 0..2 {
        for i in 0..n {
            let ip = (n - i) % n;
            for j in 0..n {
                let jp = (n - j) % n;
                if (i, j) > (ip, jp) {
                    continue;
                }
                let a = coeffs[(c, i, j)];
                let b = coeffs[(c, ip, jp)];
                let avg = 0.5 * (a + b.conj());
                coeffs[(c, i, j)] = avg;
                coeffs[(c, ip, jp)] = avg.conj();
            }
        }
    }
}

/// Leray projection of raw coefficients onto the divergence-free,
/// mean-free subspace: `u_hat <- u_hat - (k . u_hat / |k|^2) k` for
/// `k != 0`, zero mode removed, conjugate symmetry restored.
pub fn leray_project(grid: &TorusGrid, raw: &Array3<Complex64>) -> SpectralVelocity {
    let n = grid.modes_per_dim();
    assert_eq!(raw.dim(), (2, n, n), "raw coefficient block must be (2, n, n)");
    let mut coeffs = raw.clone();
    hermitian_symmetrize(n, &mut coeffs);
    for i in 0..n {
        let k1 = wavenumber(n, i) as f64;
        for j in 0..n {
            let k2 = wavenumber(n, j) as f64;
            let ksq = k1 * k1 + k2 * k2;
            if ksq == 0.0 {
                coeffs[(0, i, j)] = Complex64::default();
                coeffs[(1, i, j)] = Complex64::default();
                continue;
            }
            let parallel = (k1 * coeffs[(0, i, j)] + k2 * coeffs[(1, i, j)]) / ksq;
            coeffs[(0, i, j)] -= parallel * k1;
            coeffs[(1, i, j)] -= parallel * k2;
        }
    }
    SpectralVelocity { n, coeffs }
}

/// Taylor-Green vortex `a (sin x cos y, -cos x sin y)`.
///
/// Its four active modes sit at `(+-1, +-1)`; the exact norms follow from
/// `integral |u|^2 = 2 pi^2 a^2`, giving `||u|| = sqrt(2) pi a` and
/// `||grad u|| = 2 pi a`.
pub fn taylor_green(grid: &TorusGrid, amplitude: f64) -> SpectralVelocity {
    let n = grid.modes_per_dim();
    let quarter = 0.25 * amplitude;
    let mut coeffs = Array3::zeros((2, n, n));
    let entries: [((i64, i64), f64, f64); 4] = [
        ((1, 1), -quarter, quarter),
        ((1, -1), -quarter, -quarter),
        ((-1, 1), quarter, quarter),
        ((-1, -1), quarter, -quarter),
    ];
    for ((k1, k2), im1, im2) in entries {
        let (i, j) = (index_of(n, k1), index_of(n, k2));
        coeffs[(0, i, j)] = Complex64::new(0.0, im1);
        coeffs[(1, i, j)] = Complex64::new(0.0, im2);
    }
    SpectralVelocity { n, coeffs }
}

impl SpectralVelocity {
    /// Pseudo-random solenoidal field with support in `0 < |k|_inf <= kmax`,
    /// scaled to the requested L2 norm. Mode iteration order is fixed, so a
    /// seeded generator reproduces the field exactly.
    pub fn random_low_mode<R: Rng>(
        grid: &TorusGrid,
        kmax: i64,
        l2_norm: f64,
        rng: &mut R,
    ) -> SpectralVelocity {
        let n = grid.modes_per_dim();
        let mut raw = Array3::zeros((2, n, n));
        for k1 in -kmax..=kmax {
            for k2 in -kmax..=kmax {
                if k1 == 0 && k2 == 0 {
                    continue;
                }
                let (i, j) = (index_of(n, k1), index_of(n, k2));
                for c in 0..2 {
                    let re: f64 = rng.random_range(-1.0..1.0);
                    let im: f64 = rng.random_range(-1.0..1.0);
                    raw[(c, i, j)] = Complex64::new(re, im);
                }
            }
        }
        let mut field = leray_project(grid, &raw);
        let norm = field.l2_norm();
        if norm > 0.0 {
            field.scale(l2_norm / norm);
        }
        field
    }

    /// Evaluate both components on the collocation grid, optionally
    /// oversampled by an integer factor.
    pub fn physical_values(&self, oversample: usize) -> [Array2<f64>; 2] {
        let m = self.n * oversample.max(1);
        let fft = fft2_for(m);
        let mut out = [Array2::zeros((m, m)), Array2::zeros((m, m))];
        for c in 0..2 {
            let padded = pad_spectrum(self.n, m, &self.coeffs, c);
            let phys = fft.to_physical(&padded);
            out[c] = phys.mapv(|z| z.re);
        }
        out
    }
}

/// Re-index an `n`-grid spectrum into an `m >= n` grid (zero padding).
pub(crate) fn pad_spectrum(
    n: usize,
    m: usize,
    coeffs: &Array3<Complex64>,
    component: usize,
) -> Array2<Complex64> {
    let mut out = Array2::zeros((m, m));
    for i in 0..n {
        let k1 = wavenumber(n, i);
        for j in 0..n {
            let k2 = wavenumber(n, j);
            out[(index_of(m, k1), index_of(m, k2))] = coeffs[(component, i, j)];
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn grid(n: usize) -> TorusGrid {
        TorusGrid::new(n, 0.1).unwrap()
    }

    #[test]
    fn leray_removes_gradient_part_of_single_mode() {
        // k = (1, 1), u_hat = (1, 0): the projector I - k k^T / |k|^2
        // sends it to (1/2, -1/2).
        let g = grid(8);
        let mut raw = Array3::zeros((2, 8, 8));
        raw[(0, 1, 1)] = Complex64::new(1.0, 0.0);
        raw[(0, 7, 7)] = Complex64::new(1.0, 0.0);
        let projected = leray_project(&g, &raw);
        assert_relative_eq!(projected.coeff(0, 1, 1).re, 0.5, max_relative = 1e-14);
        assert_relative_eq!(projected.coeff(1, 1, 1).re, -0.5, max_relative = 1e-14);
        projected.validate(1e-13).unwrap();
    }

    #[test]
    fn leray_zeroes_the_mean_mode() {
        let g = grid(8);
        let mut raw = Array3::zeros((2, 8, 8));
        raw[(0, 0, 0)] = Complex64::new(3.0, 0.0);
        raw[(1, 0, 0)] = Complex64::new(-2.0, 0.0);
        let projected = leray_project(&g, &raw);
        assert_eq!(projected.coeff(0, 0, 0), Complex64::default());
        assert_eq!(projected.coeff(1, 0, 0), Complex64::default());
    }

    #[test]
    fn leray_is_idempotent_and_preserves_divergence_free_fields() {
        let g = grid(16);
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let field = SpectralVelocity::random_low_mode(&g, 4, 2.0, &mut rng);
        let again = leray_project(&g, field.raw());
        let diff = field.sub(&again).l2_norm();
        assert!(diff <= 1e-13 * field.l2_norm().max(1.0), "diff = {diff:.3e}");
    }

    #[test]
    fn stokes_multiplies_by_mode_magnitude() {
        let g = grid(8);
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let field = SpectralVelocity::random_low_mode(&g, 2, 1.0, &mut rng);
        let applied = field.stokes_apply();
        for &(k1, k2) in &[(1i64, 0i64), (1, 1), (2, -1), (0, 2)] {
            let ksq = (k1 * k1 + k2 * k2) as f64;
            for c in 0..2 {
                let expected = field.coeff(c, k1, k2) * ksq;
                assert!((applied.coeff(c, k1, k2) - expected).norm() < 1e-14);
            }
        }
        assert_eq!(applied.coeff(0, 0, 0), Complex64::default());
    }

    #[test]
    fn stokes_coercivity_matches_gradient_norm() {
        // <A u, u> = ||grad u||^2 by Parseval.
        let g = grid(16);
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let field = SpectralVelocity::random_low_mode(&g, 5, 3.0, &mut rng);
        let quad = field.stokes_apply().inner(&field);
        let grad = field.grad_norm();
        assert_relative_eq!(quad, grad * grad, max_relative = 1e-12);
    }

    #[test]
    fn taylor_green_matches_closed_form_norms() {
        // integral |u|^2 over the torus = 2 pi^2 a^2, all modes at |k|^2 = 2.
        let g = grid(32);
        let a = 0.7;
        let tg = taylor_green(&g, a);
        tg.validate(1e-14).unwrap();
        let norms = tg.norms();
        let sqrt2 = std::f64::consts::SQRT_2;
        let pi = std::f64::consts::PI;
        assert_relative_eq!(norms.l2, sqrt2 * pi * a, max_relative = 1e-13);
        assert_relative_eq!(norms.grad, 2.0 * pi * a, max_relative = 1e-13);
        assert_relative_eq!(norms.dual, pi * a, max_relative = 1e-13);
    }

    #[test]
    fn taylor_green_vorticity_is_product_of_sines() {
        // curl u = 2 a sin x sin y, so omega_hat(1, 1) = -a/2 and
        // ||omega|| = 2 pi a.
        let g = grid(16);
        let a = 1.3;
        let omega = taylor_green(&g, a).curl();
        assert!((omega.coeff(1, 1) - Complex64::new(-a / 2.0, 0.0)).norm() < 1e-14);
        assert!((omega.coeff(-1, -1) - Complex64::new(-a / 2.0, 0.0)).norm() < 1e-14);
        assert_relative_eq!(omega.l2_norm(), 2.0 * std::f64::consts::PI * a, max_relative = 1e-13);
    }

    #[test]
    fn curl_of_zero_field_vanishes() {
        let omega = SpectralVelocity::zero(8).curl();
        assert_eq!(omega.l2_norm(), 0.0);
    }

    #[test]
    fn norm_multipliers_agree_on_unit_wavenumber_shell() {
        // On |k| = 1 every Riesz multiplier equals one, so l2 = grad = dual.
        let _g = grid(8);
        let alpha = 1.0 / (2.0 * std::f64::consts::SQRT_2 * std::f64::consts::PI);
        let field = SpectralVelocity::from_modes(
            8,
            &[
                ((1, 0), [Complex64::default(), Complex64::new(alpha, 0.0)]),
                ((-1, 0), [Complex64::default(), Complex64::new(alpha, 0.0)]),
            ],
        )
        .unwrap();
        let norms = field.norms();
        assert_relative_eq!(norms.l2, 1.0, max_relative = 1e-13);
        assert_relative_eq!(norms.grad, norms.l2, max_relative = 1e-13);
        assert_relative_eq!(norms.dual, norms.l2, max_relative = 1e-13);
    }

    #[test]
    fn norm_multipliers_scale_with_wavenumber() {
        // On |k|^2 = 4 the gradient norm doubles and the dual norm halves.
        let g = grid(8);
        let field = SpectralVelocity::from_modes(
            8,
            &[
                ((2, 0), [Complex64::default(), Complex64::new(0.3, 0.1)]),
                ((-2, 0), [Complex64::default(), Complex64::new(0.3, -0.1)]),
            ],
        )
        .unwrap();
        let norms = field.norms();
        assert_relative_eq!(norms.grad, 2.0 * norms.l2, max_relative = 1e-13);
        assert_relative_eq!(norms.dual, 0.5 * norms.l2, max_relative = 1e-13);
        let _ = g;
    }

    #[test]
    fn poincare_inequality_holds_on_random_fields() {
        // Mean-free fields on the torus satisfy ||u|| <= ||grad u||.
        for seed in 0..20 {
            let g = grid(16);
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let field = SpectralVelocity::random_low_mode(&g, 6, 1.0, &mut rng);
            assert!(field.l2_norm() <= field.grad_norm() * (1.0 + 1e-12));
        }
    }

    #[test]
    fn from_modes_rejects_divergent_input() {
        let err = SpectralVelocity::from_modes(
            8,
            &[
                ((1, 0), [Complex64::new(1.0, 0.0), Complex64::default()]),
                ((-1, 0), [Complex64::new(1.0, 0.0), Complex64::default()]),
            ],
        )
        .unwrap_err();
        assert!(matches!(err, SpectralError::InvariantViolation("solenoidality", _)));
    }

    #[test]
    fn random_field_is_reproducible_for_a_fixed_seed() {
        let g = grid(16);
        let mut rng_a = ChaCha8Rng::seed_from_u64(42);
        let mut rng_b = ChaCha8Rng::seed_from_u64(42);
        let a = SpectralVelocity::random_low_mode(&g, 4, 1.0, &mut rng_a);
        let b = SpectralVelocity::random_low_mode(&g, 4, 1.0, &mut rng_b);
        assert_eq!(a, b);
        a.validate(1e-12).unwrap();
        assert_relative_eq!(a.l2_norm(), 1.0, max_relative = 1e-12);
    }

    #[test]
    fn physical_values_match_direct_mode_sum() {
        let g = grid(8);
        let tg = taylor_green(&g, 1.0);
        let values = tg.physical_values(2);
        let m = 16;
        let h = 2.0 * std::f64::consts::PI / m as f64;
        for i in (0..m).step_by(3) {
            for j in (0..m).step_by(3) {
                let (x, y) = (i as f64 * h, j as f64 * h);
                let expected = [x.sin() * y.cos(), -(x.cos()) * y.sin()];
                for c in 0..2 {
                    assert!((values[c][(i, j)] - expected[c]).abs() < 1e-12);
                }
            }
        }
    }
}
