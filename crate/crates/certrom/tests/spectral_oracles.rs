//! Independent collocation-quadrature oracles for the spectral kernels.
//!
//! Every value here is computed by direct mode summation on a fine grid,
//! sharing no code with the FFT-based production path: fields are
//! evaluated pointwise from their Fourier coefficients and integrals use
//! the rectangle rule, which is exact for trigonometric polynomials once
//! the grid resolves the integrand.

use certrom::spectral::{skew_trilinear, taylor_green, SpectralVelocity, TorusGrid};
use num_complex::Complex64;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// All active modes of a field as `(k, [u1_hat, u2_hat])`.
fn active_modes(field: &SpectralVelocity) -> Vec<((i64, i64), [Complex64; 2])> {
    let n = field.modes_per_dim() as i64;
    let mut modes = Vec::new();
    for k1 in -n / 2..n / 2 {
        for k2 in -n / 2..n / 2 {
            let value = [field.coeff(0, k1, k2), field.coeff(1, k1, k2)];
            if value[0].norm() > 0.0 || value[1].norm() > 0.0 {
                modes.push(((k1, k2), value));
            }
        }
    }
    modes
}

/// Evaluate a mode list at a physical point by direct summation.
fn eval_at(modes: &[((i64, i64), [Complex64; 2])], x: f64, y: f64) -> [f64; 2] {
    let mut out = [0.0, 0.0];
    for &((k1, k2), value) in modes {
        let phase = Complex64::new(0.0, k1 as f64 * x + k2 as f64 * y).exp();
        for c in 0..2 {
            out[c] += (value[c] * phase).re;
        }
    }
    out
}

/// Gradient of a mode list at a physical point: `out[c][a] = d_a u_c`.
fn eval_grad_at(modes: &[((i64, i64), [Complex64; 2])], x: f64, y: f64) -> [[f64; 2]; 2] {
    let mut out = [[0.0; 2]; 2];
    for &((k1, k2), value) in modes {
        let phase = Complex64::new(0.0, k1 as f64 * x + k2 as f64 * y).exp();
        for c in 0..2 {
            let base = value[c] * phase * Complex64::new(0.0, 1.0);
            out[c][0] += (base * k1 as f64).re;
            out[c][1] += (base * k2 as f64).re;
        }
    }
    out
}

/// Rectangle-rule quadrature of `<(w.grad) u, v>` on an `m x m` grid.
fn quadrature_advective(
    w: &SpectralVelocity,
    u: &SpectralVelocity,
    v: &SpectralVelocity,
    m: usize,
) -> f64 {
    let w_modes = active_modes(w);
    let u_modes = active_modes(u);
    let v_modes = active_modes(v);
    let h = 2.0 * std::f64::consts::PI / m as f64;
    let mut acc = 0.0;
    for i in 0..m {
        let x = i as f64 * h;
        for j in 0..m {
            let y = j as f64 * h;
            let wv = eval_at(&w_modes, x, y);
            let gu = eval_grad_at(&u_modes, x, y);
            let vv = eval_at(&v_modes, x, y);
            for c in 0..2 {
                acc += (wv[0] * gu[c][0] + wv[1] * gu[c][1]) * vv[c];
            }
        }
    }
    acc * h * h
}

/// Skew form by quadrature: the integrand has maximal wavenumber at most
/// three times the field ceiling, so `m` beyond that makes it exact.
fn quadrature_skew(
    w: &SpectralVelocity,
    u: &SpectralVelocity,
    v: &SpectralVelocity,
    m: usize,
) -> f64 {
    0.5 * (quadrature_advective(w, u, v, m) - quadrature_advective(w, v, u, m))
}

/// Rectangle-rule value of `integral |u|^2 dx`.
fn quadrature_l2_sq(field: &SpectralVelocity, m: usize) -> f64 {
    let modes = active_modes(field);
    let h = 2.0 * std::f64::consts::PI / m as f64;
    let mut acc = 0.0;
    for i in 0..m {
        let x = i as f64 * h;
        for j in 0..m {
            let y = j as f64 * h;
            let value = eval_at(&modes, x, y);
            acc += value[0] * value[0] + value[1] * value[1];
        }
    }
    acc * h * h
}

#[test]
fn skew_form_matches_fine_grid_quadrature_on_random_low_mode_fields() {
    let grid = TorusGrid::new(32, 0.1).unwrap();
    for seed in 0..5 {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let w = SpectralVelocity::random_low_mode(&grid, 3, 1.0, &mut rng);
        let u = SpectralVelocity::random_low_mode(&grid, 3, 1.3, &mut rng);
        let v = SpectralVelocity::random_low_mode(&grid, 3, 0.8, &mut rng);
        // Integrand wavenumber ceiling is 3 * 3 = 9, so 64 points are exact.
        let oracle = quadrature_skew(&w, &u, &v, 64);
        let value = skew_trilinear(&grid, &w, &u, &v);
        assert!(
            (value - oracle).abs() <= 1e-10,
            "seed {seed}: skew form {value:.15e} vs quadrature {oracle:.15e}"
        );
    }
}

#[test]
fn skew_form_quadrature_oracle_is_antisymmetric_too() {
    let grid = TorusGrid::new(32, 0.1).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(99);
    let w = SpectralVelocity::random_low_mode(&grid, 2, 1.0, &mut rng);
    let u = SpectralVelocity::random_low_mode(&grid, 2, 1.0, &mut rng);
    let oracle = quadrature_skew(&w, &u, &u, 48);
    assert!(oracle.abs() < 1e-12, "quadrature self-pairing {oracle:.3e}");
}

#[test]
fn taylor_green_norm_matches_direct_quadrature() {
    // integral |u|^2 = 2 pi^2 a^2 for u = a (sin x cos y, -cos x sin y):
    // the quadrature oracle fixes the expected value sqrt(2) pi a.
    let grid = TorusGrid::new(16, 0.1).unwrap();
    let a = 0.9;
    let tg = taylor_green(&grid, a);
    let oracle = quadrature_l2_sq(&tg, 16).sqrt();
    let expected = std::f64::consts::SQRT_2 * std::f64::consts::PI * a;
    assert!((oracle - expected).abs() < 1e-12);
    assert!((tg.l2_norm() - oracle).abs() < 1e-12);
}

#[test]
fn parseval_identity_holds_against_quadrature_on_random_fields() {
    let grid = TorusGrid::new(16, 0.1).unwrap();
    for seed in 10..14 {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let field = SpectralVelocity::random_low_mode(&grid, 4, 2.0, &mut rng);
        let oracle = quadrature_l2_sq(&field, 32).sqrt();
        assert!(
            (field.l2_norm() - oracle).abs() <= 1e-11,
            "seed {seed}: {:.15e} vs {:.15e}",
            field.l2_norm(),
            oracle
        );
    }
}
