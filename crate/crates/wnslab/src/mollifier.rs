//! Compactly supported mollifier and plateau cutoff.
//!
//! The mollifier is the classical unit bump `phi(x) = c e^{-1/(1-|x|^2)}`
//! on `|x| < 1`, normalized to unit mass, scaled as
//! `phi_eps(x) = eps^{-3} phi(x/eps)`. At desk resolutions the support of
//! `phi_eps` is below the grid spacing, so the convolution is applied as the
//! Fourier multiplier `phihat(eps*|k|)` with the radial transform computed by
//! quadrature once per (grid, eps) and tabulated against the integer `|m|^2`
//! of each mode. The table is exact per mode, preserves the mean exactly
//! (`phihat(0) = 1`), and commutes bit-exactly with power-of-two rescaling.
//!
//! The cutoff `theta` is a quintic-smoothstep plateau: `theta = 1` on
//! `|x| <= 1`, `0` on `|x| >= 2`, monotone C^2 in between; `theta_alpha(x) =
//! theta(alpha x)` selects the ball of radius `2/alpha`.

use crate::error::{Error, Result};
use crate::fft::{self, C64};
use crate::field::{ScalarField, VectorField};
use crate::grid::Grid;
use crate::par;
use crate::spectral;
use std::collections::HashMap;
use std::sync::{Arc, Mutex, OnceLock};

/// Mollifier scale `eps` and cutoff scale `alpha`.
///
/// `theta_alpha * u` lives in the ball of radius `2/alpha`; smoothing by
/// `phi_eps` widens that by `eps`, so using the pair on a box requires
/// `2/alpha + eps <= L/2` (checked by [`mollify`]).
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct MollifierSpec {
    epsilon: f64,
    alpha: f64,
}

impl MollifierSpec {
    pub fn new(epsilon: f64, alpha: f64) -> Result<Self> {
        if !epsilon.is_finite() || epsilon <= 0.0 {
            return Err(Error::InvalidParameter(format!(
                "mollifier scale epsilon must be positive, got {epsilon}"
            )));
        }
        if !alpha.is_finite() || alpha <= 0.0 {
            return Err(Error::InvalidParameter(format!(
                "cutoff scale alpha must be positive, got {alpha}"
            )));
        }
        Ok(Self { epsilon, alpha })
    }

    #[inline]
    pub fn epsilon(&self) -> f64 {
        self.epsilon
    }

    #[inline]
    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    /// Radius of the support of `phi_eps * (theta_alpha u)`.
    #[inline]
    pub fn support_radius(&self) -> f64 {
        2.0 / self.alpha + self.epsilon
    }

    /// Checks that the smoothed cutoff support fits inside the box.
    pub fn check_fits(&self, grid: Grid) -> Result<()> {
        let half = 0.5 * grid.box_length();
        if self.support_radius() > half {
            return Err(Error::InvalidParameter(format!(
                "cutoff+mollifier support radius {:.3} exceeds the box half-width {:.3} \
                 (need 2/alpha + eps <= L/2)",
                self.support_radius(),
                half
            )));
        }
        Ok(())
    }

    /// Parameters after the scaling map `u -> u_lambda`: `(lambda*eps, alpha/lambda)`.
    pub fn rescaled(&self, lambda: f64) -> Result<Self> {
        Self::new(self.epsilon * lambda, self.alpha / lambda)
    }
}

/// Unnormalized bump profile `e^{-1/(1-r^2)}` for `r < 1`, else 0.
#[inline]
fn bump_raw(r: f64) -> f64 {
    if r >= 1.0 {
        0.0
    } else {
        (-1.0 / (1.0 - r * r)).exp()
    }
}

/// Composite Simpson rule on [0, 1].
fn simpson01(f: impl Fn(f64) -> f64, intervals: usize) -> f64 {
    debug_assert!(intervals % 2 == 0);
    let h = 1.0 / intervals as f64;
    let mut acc = f(0.0) + f(1.0);
    for i in 1..intervals {
        let w = if i % 2 == 1 { 4.0 } else { 2.0 };
        acc += w * f(i as f64 * h);
    }
    acc * h / 3.0
}

const SIMPSON_INTERVALS: usize = 512;

/// Mass of the unnormalized bump, `int_{|x|<1} e^{-1/(1-|x|^2)} dx`.
pub fn bump_mass_raw() -> f64 {
    static MASS: OnceLock<f64> = OnceLock::new();
    *MASS.get_or_init(|| {
        4.0 * std::f64::consts::PI * simpson01(|r| r * r * bump_raw(r), SIMPSON_INTERVALS)
    })
}

/// Normalized bump value `phi(x)` at radius `r`.
#[inline]
pub fn phi_value(r: f64) -> f64 {
    bump_raw(r) / bump_mass_raw()
}

/// `||phi||_{L^q}` of the normalized bump, by radial quadrature.
pub fn phi_lq_norm(q: f64) -> f64 {
    let c = 1.0 / bump_mass_raw();
    let int = 4.0
        * std::f64::consts::PI
        * simpson01(|r| r * r * (c * bump_raw(r)).powf(q), SIMPSON_INTERVALS);
    int.powf(1.0 / q)
}

#[inline]
fn sinc(x: f64) -> f64 {
    if x.abs() < 1e-8 {
        1.0 - x * x / 6.0
    } else {
        x.sin() / x
    }
}

/// Radial transform of the normalized bump,
/// `phihat(s) = int phi(x) e^{-i s x.e} dx = 4 pi int_0^1 r^2 phi(r) sinc(s r) dr`,
/// normalized so `phihat(0) = 1` exactly.
pub fn phi_hat(s: f64) -> f64 {
    let raw = |s: f64| simpson01(|r| r * r * bump_raw(r) * sinc(s * r), SIMPSON_INTERVALS);
    static AT_ZERO: OnceLock<f64> = OnceLock::new();
    let z = *AT_ZERO.get_or_init(|| raw(0.0));
    if s == 0.0 {
        1.0
    } else {
        raw(s) / z
    }
}

type TableKey = (usize, u64, u64);

/// Multiplier table for `phi_eps` on a grid, indexed by the integer `|m|^2`
/// of each mode: `table[m2] = phihat(eps * (2 pi / L) * sqrt(m2))`.
fn multiplier_table(grid: Grid, eps: f64) -> Arc<Vec<f64>> {
    static CACHE: OnceLock<Mutex<HashMap<TableKey, Arc<Vec<f64>>>>> = OnceLock::new();
    let cache = CACHE.get_or_init(|| Mutex::new(HashMap::new()));
    let key = (grid.n(), grid.box_length().to_bits(), eps.to_bits());
    let mut guard = cache.lock().unwrap();
    guard
        .entry(key)
        .or_insert_with(|| {
            let k0 = 2.0 * std::f64::consts::PI / grid.box_length();
            let len = grid.max_m2() as usize + 1;
            let mut table = vec![0.0; len];
            par::fill_indexed(&mut table, |m2| {
                let s = eps * k0 * (m2 as f64).sqrt();
                phi_hat(s)
            });
            Arc::new(table)
        })
        .clone()
}

/// Quintic smoothstep on [0, 1].
#[inline]
fn smoothstep(t: f64) -> f64 {
    let t = t.clamp(0.0, 1.0);
    t * t * t * (10.0 + t * (-15.0 + 6.0 * t))
}

/// Plateau cutoff profile: 1 on `rho <= 1`, 0 on `rho >= 2`.
#[inline]
pub fn theta_profile(rho: f64) -> f64 {
    if rho <= 1.0 {
        1.0
    } else if rho >= 2.0 {
        0.0
    } else {
        1.0 - smoothstep(rho - 1.0)
    }
}

/// `theta_alpha(x) = theta(alpha |x|)` at a point.
#[inline]
pub fn theta_value(alpha: f64, x: [f64; 3]) -> f64 {
    let r = (x[0] * x[0] + x[1] * x[1] + x[2] * x[2]).sqrt();
    theta_profile(alpha * r)
}

/// Gradient of `theta_alpha` at a point (analytic).
#[inline]
pub fn grad_theta_value(alpha: f64, x: [f64; 3]) -> [f64; 3] {
    let r = (x[0] * x[0] + x[1] * x[1] + x[2] * x[2]).sqrt();
    let rho = alpha * r;
    if !(1.0..2.0).contains(&rho) || r == 0.0 {
        return [0.0; 3];
    }
    // d/drho of (1 - smoothstep(rho - 1))
    let t = rho - 1.0;
    let ds = 30.0 * t * t * (t - 1.0) * (t - 1.0);
    let factor = -ds * alpha / r;
    [factor * x[0], factor * x[1], factor * x[2]]
}

fn theta_samples(grid: Grid, alpha: f64) -> Arc<Vec<f64>> {
    static CACHE: OnceLock<Mutex<HashMap<TableKey, Arc<Vec<f64>>>>> = OnceLock::new();
    let cache = CACHE.get_or_init(|| Mutex::new(HashMap::new()));
    let key = (grid.n(), grid.box_length().to_bits(), alpha.to_bits());
    let mut guard = cache.lock().unwrap();
    guard
        .entry(key)
        .or_insert_with(|| {
            let mut t = vec![0.0; grid.cells()];
            par::fill_indexed(&mut t, |i| theta_value(alpha, grid.position(i)));
            Arc::new(t)
        })
        .clone()
}

/// Applies the plain convolution `phi_eps * u` to spectral data in place
/// (multiplier only, no cutoff, no dealiasing).
pub(crate) fn phi_convolve_in_spec(grid: Grid, eps: f64, spec: &mut [C64]) {
    let table = multiplier_table(grid, eps);
    par::update_indexed(spec, |idx, v| v * table[grid.mode_m2(idx) as usize]);
}

/// Plain mollification `phi_eps * u` of a scalar field (no cutoff).
pub fn phi_convolve_scalar(u: &ScalarField, eps: f64) -> ScalarField {
    let grid = u.grid();
    let mut spec = spectral::forward_scalar(u);
    phi_convolve_in_spec(grid, eps, &mut spec);
    spectral::inverse_scalar(grid, spec)
}

/// Mollified cutoff field `phi_eps * (theta_alpha u)`.
///
/// The pointwise product with `theta_alpha` is dealiased; the mollifier then
/// acts as a multiplier in the same spectral pass. Fails when
/// `2/alpha + eps` does not fit inside the box half-width.
pub fn mollify(u: &VectorField, spec: &MollifierSpec) -> Result<VectorField> {
    let grid = u.grid();
    spec.check_fits(grid)?;
    let theta = theta_samples(grid, spec.alpha);
    let table = multiplier_table(grid, spec.epsilon);
    let comps = [0, 1, 2].map(|a| {
        let uc = u.comp(a);
        let mut s = vec![C64::ZERO; grid.cells()];
        par::fill_indexed(&mut s, |i| C64::new(theta[i] * uc[i], 0.0));
        fft::forward(grid, &mut s);
        par::update_indexed(&mut s, |idx, v| {
            if grid.keep_index(idx) {
                v * table[grid.mode_m2(idx) as usize]
            } else {
                C64::ZERO
            }
        });
        fft::inverse(grid, &mut s);
        fft::real_part(&s)
    });
    Ok(VectorField::from_components(grid, comps))
}

/// `phi_eps * (u . grad theta_alpha)`: the divergence of the mollified
/// cutoff advection field when `u` is divergence-free. Used by the energy
/// budget's cutoff commutator term.
pub fn phi_convolve_u_dot_grad_theta(u: &VectorField, spec: &MollifierSpec) -> Result<ScalarField> {
    let grid = u.grid();
    spec.check_fits(grid)?;
    let [ux, uy, uz] = u.components();
    let alpha = spec.alpha;
    let mut s = vec![C64::ZERO; grid.cells()];
    par::fill_indexed(&mut s, |i| {
        let gt = grad_theta_value(alpha, grid.position(i));
        C64::new(ux[i] * gt[0] + uy[i] * gt[1] + uz[i] * gt[2], 0.0)
    });
    fft::forward(grid, &mut s);
    // product with grad(theta): dealias, then convolve
    par::update_indexed(&mut s, |idx, v| {
        if grid.keep_index(idx) { v } else { C64::ZERO }
    });
    phi_convolve_in_spec(grid, spec.epsilon, &mut s);
    Ok(spectral::inverse_scalar(grid, s))
}
