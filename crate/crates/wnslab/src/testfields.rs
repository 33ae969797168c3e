//! Reproducible divergence-free velocity fields for tests, benchmarks, and
//! the command-line generator.
//!
//! Every constructor returns a field that is divergence free in the discrete
//! sense (spectral divergence at round-off), either because it is built as a
//! curl or because it ends with a Leray projection. The random constructor is
//! seeded and fully deterministic: the same `(grid, amplitude, max_mode,
//! seed)` always produces the same bits.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha20Rng;

use crate::fft::{self, C64};
use crate::field::VectorField;
use crate::grid::Grid;
use crate::mollifier::theta_profile;
use crate::par;
use crate::spectral::leray_project;

/// Taylor-Green vortex (one cell per box length) under a Gaussian envelope
/// `exp(-|x|^2 / (2 sigma^2))`, re-projected to divergence free.
///
/// The envelope localizes the classical periodic vortex near the origin so
/// the field has most of its weighted mass where the weights are order one.
pub fn windowed_taylor_green(grid: Grid, amplitude: f64, sigma: f64) -> VectorField {
    let k = 2.0 * std::f64::consts::PI / grid.box_length();
    let raw = VectorField::from_fn(grid, |x| {
        let r2 = x.iter().map(|c| c * c).sum::<f64>();
        let w = amplitude * (-r2 / (2.0 * sigma * sigma)).exp();
        [
            w * (k * x[0]).sin() * (k * x[1]).cos() * (k * x[2]).cos(),
            -w * (k * x[0]).cos() * (k * x[1]).sin() * (k * x[2]).cos(),
            0.0,
        ]
    });
    leray_project(&raw)
}

/// Curl of the Gaussian vector potential `psi(x) = a exp(-|x|^2 / (2 sigma^2))`
/// with a fixed skew direction `a`; divergence free by construction.
///
/// Analytically `u = grad(G) x a = -(G / sigma^2) (x x a)`, which the tests
/// use as an independent reference.
pub fn gaussian_curl(grid: Grid, amplitude: f64, sigma: f64) -> VectorField {
    let dir = curl_direction(amplitude);
    let potential: [Vec<f64>; 3] = dir.map(|a| {
        let mut data = vec![0.0; grid.cells()];
        par::fill_indexed(&mut data, |idx| {
            let x = grid.position(idx);
            let r2 = x.iter().map(|c| c * c).sum::<f64>();
            a * (-r2 / (2.0 * sigma * sigma)).exp()
        });
        data
    });
    let spec: [Vec<C64>; 3] = potential.map(|p| {
        let mut s = fft::to_complex(&p);
        fft::forward(grid, &mut s);
        s
    });
    let comps = [0usize, 1, 2].map(|i| {
        let (j, l) = ((i + 1) % 3, (i + 2) % 3);
        let mut out = vec![C64::ZERO; grid.cells()];
        par::fill_indexed(&mut out, |idx| {
            let k = grid.deriv_wavevector(idx);
            C64::new(0.0, k[j]) * spec[l][idx] - C64::new(0.0, k[l]) * spec[j][idx]
        });
        fft::inverse(grid, &mut out);
        fft::real_part(&out)
    });
    VectorField::from_components(grid, comps)
}

fn curl_direction(amplitude: f64) -> [f64; 3] {
    let a = [0.36, -0.48, 0.8]; // unit vector, skewed against the axes
    a.map(|c| amplitude * c)
}

/// Slowly decaying field `amplitude (1 + |x|)^{-decay}` along a fixed skew
/// direction, tapered to zero before the box faces and Leray-projected.
///
/// The taper is the quintic plateau profile: identically one for
/// `|x| <= 0.2 L` and identically zero for `|x| >= 0.4 L`, so the raw field
/// never sees the periodic wrap. The slow radial decay makes this the
/// stress case for threshold splitting and weighted norms.
pub fn heavy_tail(grid: Grid, amplitude: f64, decay: f64) -> VectorField {
    let inner = 0.2 * grid.box_length();
    let dir = [0.84, 0.42, -0.34]; // unit-ish skew direction before projection
    let raw = VectorField::from_fn(grid, |x| {
        let r = x.iter().map(|c| c * c).sum::<f64>().sqrt();
        let w = amplitude * (1.0 + r).powf(-decay) * theta_profile(r / inner);
        [w * dir[0], w * dir[1], w * dir[2]]
    });
    leray_project(&raw)
}

/// Seeded random field: independent uniform samples per point and component,
/// truncated to the spectral band `|m|_inf <= max_mode`, Leray-projected,
/// and scaled so the maximum pointwise magnitude equals `amplitude`.
pub fn random_band(grid: Grid, amplitude: f64, max_mode: i64, seed: u64) -> VectorField {
    let mut rng = ChaCha20Rng::seed_from_u64(seed);
    let comps: [Vec<f64>; 3] = [(); 3].map(|_| {
        // sequential draw keeps the stream independent of the worker count
        (0..grid.cells())
            .map(|_| rng.random_range(-1.0..1.0))
            .collect()
    });
    let spec = comps.map(|c| {
        let mut s = fft::to_complex(&c);
        fft::forward(grid, &mut s);
        par::update_indexed(&mut s, |idx, v| {
            let m = grid.modes(idx);
            if m.iter().all(|c| c.abs() <= max_mode) {
                v
            } else {
                C64::ZERO
            }
        });
        fft::inverse(grid, &mut s);
        fft::real_part(&s)
    });
    let mut u = leray_project(&VectorField::from_components(grid, spec));
    let peak = u.max_abs();
    if peak > 0.0 {
        u.scale(amplitude / peak);
    }
    u
}
