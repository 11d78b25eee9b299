//! Dealiased pseudo-spectral convection.
//!
//! The discrete trilinear form is the exactly antisymmetrised skew form
//!
//! ```text
//! b(w, u, v) = 1/2 <(w.grad) u, v> - 1/2 <(w.grad) v, u>
//! ```
//!
//! evaluated with 2/3-rule truncated products, so `b(w, v, v) = 0` holds in
//! floating point (the two halves are the same computation) and the
//! convection operator `B(w, u)` defined by `<B(w, u), v> = b(w, u, v)`
//! inherits energy neutrality without relying on unresolved products.

use ndarray::{Array2, Array3};
use num_complex::Complex64;

use super::fft::fft2_for;
use super::field::{hermitian_symmetrize, leray_project, PARSEVAL};
use super::grid::wavenumber;
use super::{SpectralVelocity, TorusGrid};

/// Zero all modes with `|k1|` or `|k2|` above the grid's dealias ceiling.
fn dealias_component(grid: &TorusGrid, coeffs: &mut Array2<Complex64>) {
    let n = grid.modes_per_dim();
    let kmax = grid.dealias_max_wavenumber();
    for i in 0..n {
        let k1 = wavenumber(n, i);
        for j in 0..n {
            let k2 = wavenumber(n, j);
            if k1.abs() > kmax || k2.abs() > kmax {
                coeffs[(i, j)] = Complex64::default();
            }
        }
    }
}

/// Collocation values of the dealiased field and its gradient:
/// `(w1, w2, d1 u1, d2 u1, d1 u2, d2 u2)` evaluated on the grid.
pub(crate) struct PhysicalState {
    components: [Array2<f64>; 2],
    gradients: [[Array2<f64>; 2]; 2],
}

pub(crate) fn physical_state(
    grid: &TorusGrid,
    field: &SpectralVelocity,
    with_grad: bool,
) -> PhysicalState {
    let n = grid.modes_per_dim();
    let fft = fft2_for(n);
    let mut components = [Array2::zeros((n, n)), Array2::zeros((n, n))];
    let mut gradients = [
        [Array2::zeros((n, n)), Array2::zeros((n, n))],
        [Array2::zeros((n, n)), Array2::zeros((n, n))],
    ];
    for c in 0..2 {
        let mut spec = field.raw().index_axis(ndarray::Axis(0), c).to_owned();
        dealias_component(grid, &mut spec);
        components[c] = fft.to_physical(&spec).mapv(|z| z.re);
        if with_grad {
            for axis in 0..2 {
                let mut deriv = spec.clone();
                for i in 0..n {
                    let k1 = wavenumber(n, i) as f64;
                    for j in 0..n {
                        let k2 = wavenumber(n, j) as f64;
                        let k = if axis == 0 { k1 } else { k2 };
                        deriv[(i, j)] *= Complex64::new(0.0, k);
                    }
                }
                gradients[c][axis] = fft.to_physical(&deriv).mapv(|z| z.re);
            }
        }
    }
    PhysicalState {
        components,
        gradients,
    }
}

/// One half of the skew form: the dealiased collocation quadrature of
/// `<(w.grad) u, v>`.
pub(crate) fn advective_pairing(
    grid: &TorusGrid,
    w: &PhysicalState,
    u: &PhysicalState,
    v: &PhysicalState,
) -> f64 {
    let n = grid.modes_per_dim();
    let weight = PARSEVAL / (n * n) as f64;
    let mut acc = 0.0;
    for c in 0..2 {
        for i in 0..n {
            for j in 0..n {
                let advect = w.components[0][(i, j)] * u.gradients[c][0][(i, j)]
                    + w.components[1][(i, j)] * u.gradients[c][1][(i, j)];
                acc += advect * v.components[c][(i, j)];
            }
        }
    }
    weight * acc
}

/// Skew form evaluated from precomputed collocation states. The tensor
/// assembly uses this entry point so reduced operators are bit-identical
/// with `skew_trilinear` on the same arguments.
pub(crate) fn skew_from_states(
    grid: &TorusGrid,
    w: &PhysicalState,
    u: &PhysicalState,
    v: &PhysicalState,
) -> f64 {
    let forward = advective_pairing(grid, w, u, v);
    let backward = advective_pairing(grid, w, v, u);
    0.5 * (forward - backward)
}

/// Exactly antisymmetrised trilinear convection form.
///
/// Swapping `u` and `v` negates the result bit-for-bit, and
/// `skew_trilinear(w, v, v)` is exactly zero, because both properties are
/// realised as the same floating-point expression with reordered terms.
pub fn skew_trilinear(
    grid: &TorusGrid,
    w: &SpectralVelocity,
    u: &SpectralVelocity,
    v: &SpectralVelocity,
) -> f64 {
    let w_state = physical_state(grid, w, false);
    let u_state = physical_state(grid, u, true);
    let v_state = physical_state(grid, v, true);
    skew_from_states(grid, &w_state, &u_state, &v_state)
}

/// Riesz representer of `v -> skew_trilinear(w, u, v)` in the energy inner
/// product: `1/2 (w.grad) u + 1/2 div(w u^T)` with dealiased products,
/// Leray-projected back onto the solenoidal space.
pub fn convection_apply(
    grid: &TorusGrid,
    w: &SpectralVelocity,
    u: &SpectralVelocity,
) -> SpectralVelocity {
    let n = grid.modes_per_dim();
    let fft = fft2_for(n);
    let w_state = physical_state(grid, w, false);
    let u_state = physical_state(grid, u, true);
    let mut rep = Array3::zeros((2, n, n));
    for c in 0..2 {
        let mut advective = Array2::zeros((n, n));
        let mut flux = [Array2::zeros((n, n)), Array2::zeros((n, n))];
        for i in 0..n {
            for j in 0..n {
                advective[(i, j)] = Complex64::new(
                    w_state.components[0][(i, j)] * u_state.gradients[c][0][(i, j)]
                        + w_state.components[1][(i, j)] * u_state.gradients[c][1][(i, j)],
                    0.0,
                );
                for a in 0..2 {
                    flux[a][(i, j)] = Complex64::new(
                        w_state.components[a][(i, j)] * u_state.components[c][(i, j)],
                        0.0,
                    );
                }
            }
        }
        let mut advective_spec = fft.to_spectral(&advective);
        dealias_component(grid, &mut advective_spec);
        let mut flux_spec = [fft.to_spectral(&flux[0]), fft.to_spectral(&flux[1])];
        dealias_component(grid, &mut flux_spec[0]);
        dealias_component(grid, &mut flux_spec[1]);
        for i in 0..n {
            let k1 = wavenumber(n, i) as f64;
            for j in 0..n {
                let k2 = wavenumber(n, j) as f64;
                let divergence = Complex64::new(0.0, k1) * flux_spec[0][(i, j)]
                    + Complex64::new(0.0, k2) * flux_spec[1][(i, j)];
                rep[(c, i, j)] = 0.5 * (advective_spec[(i, j)] + divergence);
            }
        }
    }
    hermitian_symmetrize(n, &mut rep);
    leray_project(grid, &rep)
}
