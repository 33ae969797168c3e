//! Fourier-multiplier operators on fields.
//!
//! Conventions, fixed once for the whole crate:
//!
//! * derivatives multiply by `i*k`; the unpaired Nyquist mode is zeroed for
//!   every odd symbol so real fields stay real;
//! * the heat semigroup multiplies by `exp(-|k|^2 t)`; the mean mode passes
//!   through unchanged;
//! * the Leray projection applies `Id - k k^T/|k|^2` and leaves the mean mode
//!   unchanged;
//! * the Riesz transform `R_i` applies `i k_i/|k|` and sends the mean mode to
//!   zero;
//! * pointwise products are followed by 2/3-rule dealiasing (helpers here fold
//!   the cut into the surrounding spectral pass).

use crate::error::{Error, Result};
use crate::fft::{self, C64};
use crate::field::{ScalarField, TensorField, VectorField};
use crate::grid::Grid;
use crate::par;

/// Forward transform of a scalar field.
pub fn forward_scalar(u: &ScalarField) -> Vec<C64> {
    let mut spec = fft::to_complex(u.data());
    fft::forward(u.grid(), &mut spec);
    spec
}

/// Inverse transform to a real scalar field.
pub fn inverse_scalar(grid: Grid, mut spec: Vec<C64>) -> ScalarField {
    fft::inverse(grid, &mut spec);
    ScalarField::from_vec(grid, fft::real_part(&spec))
}

/// Forward transform of all three components.
pub fn forward_vector(u: &VectorField) -> [Vec<C64>; 3] {
    [0, 1, 2].map(|a| {
        let mut spec = fft::to_complex(u.comp(a));
        fft::forward(u.grid(), &mut spec);
        spec
    })
}

/// Inverse transform of three spectral components to a real vector field.
pub fn inverse_vector(grid: Grid, spec: [Vec<C64>; 3]) -> VectorField {
    let comp = spec.map(|mut s| {
        fft::inverse(grid, &mut s);
        fft::real_part(&s)
    });
    VectorField::from_components(grid, comp)
}

/// Rewrites every spectral entry as `f(idx, value)`.
pub(crate) fn map_modes(grid: Grid, spec: &mut [C64], f: impl Fn(usize, C64) -> C64 + Sync) {
    let _ = grid;
    par::update_indexed(spec, |i, v| f(i, v));
}

/// Multiplier `i*k_axis` (spectral derivative); Nyquist plane zeroed.
pub(crate) fn derivative_in_spec(grid: Grid, spec: &mut [C64], axis: usize) {
    map_modes(grid, spec, |idx, v| {
        let k = grid.deriv_wavevector(idx)[axis];
        C64::new(0.0, k) * v
    });
}

/// Spectral derivative along `axis` (0, 1 or 2).
pub fn derivative(u: &ScalarField, axis: usize) -> ScalarField {
    assert!(axis < 3, "axis out of range");
    let grid = u.grid();
    let mut spec = forward_scalar(u);
    derivative_in_spec(grid, &mut spec, axis);
    inverse_scalar(grid, spec)
}

/// Gradient of a scalar field.
pub fn gradient(u: &ScalarField) -> VectorField {
    let grid = u.grid();
    let spec = forward_scalar(u);
    let comps = [0, 1, 2].map(|axis| {
        let mut s = spec.clone();
        derivative_in_spec(grid, &mut s, axis);
        fft::inverse(grid, &mut s);
        fft::real_part(&s)
    });
    VectorField::from_components(grid, comps)
}

/// Divergence of a vector field.
pub fn divergence_field(u: &VectorField) -> ScalarField {
    let grid = u.grid();
    let spec = forward_vector(u);
    let mut out = vec![C64::ZERO; grid.cells()];
    par::fill_indexed(&mut out, |idx| {
        let k = grid.deriv_wavevector(idx);
        let mut acc = C64::ZERO;
        for (axis, s) in spec.iter().enumerate() {
            acc += C64::new(0.0, k[axis]) * s[idx];
        }
        acc
    });
    inverse_scalar(grid, out)
}

/// Relative divergence residual `||div u||_2 / ||u||_2` (plain quadrature
/// norms; 0 for the zero field).
pub fn divergence_rel(u: &VectorField) -> f64 {
    let div = divergence_field(u);
    let n2 = |d: &[f64]| par::sum_indexed(d.len(), |i| d[i] * d[i]);
    let num = n2(div.data()).sqrt();
    let den = (0..3).map(|a| n2(u.comp(a))).sum::<f64>().sqrt();
    if den == 0.0 {
        0.0
    } else {
        num / den
    }
}

/// Laplacian of a scalar field.
pub fn laplacian(u: &ScalarField) -> ScalarField {
    let grid = u.grid();
    let mut spec = forward_scalar(u);
    map_modes(grid, &mut spec, |idx, v| {
        let k = grid.wavevector(idx);
        let k2 = k[0] * k[0] + k[1] * k[1] + k[2] * k[2];
        -k2 * v
    });
    inverse_scalar(grid, spec)
}

/// Heat-semigroup multiplier `exp(-|k|^2 t)` applied in place.
pub(crate) fn heat_in_spec(grid: Grid, spec: &mut [C64], t: f64) {
    map_modes(grid, spec, |idx, v| {
        let k = grid.wavevector(idx);
        let k2 = k[0] * k[0] + k[1] * k[1] + k[2] * k[2];
        (-k2 * t).exp() * v
    });
}

fn check_time(t: f64) -> Result<()> {
    if !t.is_finite() || t < 0.0 {
        return Err(Error::InvalidParameter(format!(
            "heat semigroup time must be finite and nonnegative, got {t}"
        )));
    }
    Ok(())
}

/// `e^{t Laplacian}` of a scalar field.
pub fn heat_semigroup_scalar(u: &ScalarField, t: f64) -> Result<ScalarField> {
    check_time(t)?;
    let grid = u.grid();
    let mut spec = forward_scalar(u);
    heat_in_spec(grid, &mut spec, t);
    Ok(inverse_scalar(grid, spec))
}

/// `e^{t Laplacian}` applied componentwise to a vector field.
pub fn heat_semigroup(u: &VectorField, t: f64) -> Result<VectorField> {
    check_time(t)?;
    let grid = u.grid();
    let mut spec = forward_vector(u);
    for s in spec.iter_mut() {
        heat_in_spec(grid, s, t);
    }
    Ok(inverse_vector(grid, spec))
}

/// Leray projection applied to three spectral components in place.
pub(crate) fn leray_in_spec(grid: Grid, spec: &mut [Vec<C64>; 3]) {
    let [sx, sy, sz] = spec;
    par::for_each_chunk3_mut(sx, sy, sz, |base, cx, cy, cz| {
        for j in 0..cx.len() {
            let idx = base + j;
            let k = grid.deriv_wavevector(idx);
            let k2 = k[0] * k[0] + k[1] * k[1] + k[2] * k[2];
            if k2 == 0.0 {
                continue; // mean mode passes through unchanged
            }
            let dot = k[0] * cx[j] + k[1] * cy[j] + k[2] * cz[j];
            let d = dot / k2;
            cx[j] -= k[0] * d;
            cy[j] -= k[1] * d;
            cz[j] -= k[2] * d;
        }
    });
}

/// Leray projection onto divergence-free fields; the mean mode passes
/// through unchanged.
pub fn leray_project(u: &VectorField) -> VectorField {
    let grid = u.grid();
    let mut spec = forward_vector(u);
    leray_in_spec(grid, &mut spec);
    inverse_vector(grid, spec)
}

/// Riesz transform `R_axis` (`i k_axis / |k|` with the odd-symbol
/// wavevector, so `sum_i R_i R_j` matches the Leray symbol mode by mode);
/// the mean mode goes to zero.
pub fn riesz(u: &ScalarField, axis: usize) -> ScalarField {
    assert!(axis < 3, "axis out of range");
    let grid = u.grid();
    let mut spec = forward_scalar(u);
    map_modes(grid, &mut spec, |idx, v| {
        let k = grid.deriv_wavevector(idx);
        let knorm = (k[0] * k[0] + k[1] * k[1] + k[2] * k[2]).sqrt();
        if knorm == 0.0 {
            C64::ZERO
        } else {
            C64::new(0.0, k[axis] / knorm) * v
        }
    });
    inverse_scalar(grid, spec)
}

/// `e^{t Laplacian} P` (heat flow of the projected field) in one spectral
/// round trip.
pub fn oseen_apply(u: &VectorField, t: f64) -> Result<VectorField> {
    check_time(t)?;
    let grid = u.grid();
    let mut spec = forward_vector(u);
    leray_in_spec(grid, &mut spec);
    for s in spec.iter_mut() {
        heat_in_spec(grid, s, t);
    }
    Ok(inverse_vector(grid, spec))
}

/// Zeroes every mode cut by the 2/3 rule.
pub(crate) fn dealias_in_spec(grid: Grid, spec: &mut [C64]) {
    map_modes(grid, spec, |idx, v| {
        if grid.keep_index(idx) {
            v
        } else {
            C64::ZERO
        }
    });
}

/// Pointwise product of two scalar fields, dealiased.
pub fn dealiased_product(a: &ScalarField, b: &ScalarField) -> ScalarField {
    assert_eq!(a.grid(), b.grid(), "grid mismatch");
    let grid = a.grid();
    let ad = a.data();
    let bd = b.data();
    let mut prod = vec![0.0; grid.cells()];
    par::fill_indexed(&mut prod, |i| ad[i] * bd[i]);
    let mut spec = fft::to_complex(&prod);
    fft::forward(grid, &mut spec);
    dealias_in_spec(grid, &mut spec);
    inverse_scalar(grid, spec)
}

/// Velocity-gradient tensor `(grad u)_{ij} = d_i u_j`.
pub fn grad_tensor(u: &VectorField) -> TensorField {
    let grid = u.grid();
    let spec = forward_vector(u);
    let mut out = TensorField::zeros(grid);
    for i in 0..3 {
        for j in 0..3 {
            let mut s = spec[j].clone();
            derivative_in_spec(grid, &mut s, i);
            fft::inverse(grid, &mut s);
            let re = fft::real_part(&s);
            out.comp_mut(i, j).copy_from_slice(&re);
        }
    }
    out
}

/// Tensor divergence `(Div F)_j = sum_i d_i F_{ij}`.
pub fn div_tensor(f: &TensorField) -> VectorField {
    let grid = f.grid();
    let mut out: [Vec<C64>; 3] = [(); 3].map(|_| vec![C64::ZERO; grid.cells()]);
    for j in 0..3 {
        for i in 0..3 {
            let mut s = fft::to_complex(f.comp(i, j));
            fft::forward(grid, &mut s);
            derivative_in_spec(grid, &mut s, i);
            let oj = &mut out[j];
            par::update_indexed(oj, |idx, v| v + s[idx]);
        }
    }
    inverse_vector(grid, out)
}
