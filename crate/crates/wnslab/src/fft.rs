//! Three-dimensional complex FFT on flat x-fastest storage.
//!
//! Each axis pass transforms contiguous lanes; between passes the layout is
//! rotated (x-fastest -> y-fastest -> z-fastest -> x-fastest), so three
//! pass+rotate rounds return to the original layout with every axis
//! transformed. Lanes and rotation blocks are disjoint, which keeps the
//! parallel version bit-identical to the sequential one.

use crate::grid::Grid;
use crate::par;
use num_complex::Complex;
use rustfft::{Fft, FftPlanner};
use std::collections::HashMap;
use std::sync::{Arc, Mutex, OnceLock};

pub type C64 = Complex<f64>;

struct Plans {
    fwd: Arc<dyn Fft<f64>>,
    inv: Arc<dyn Fft<f64>>,
}

fn plans(n: usize) -> Arc<Plans> {
    static CACHE: OnceLock<Mutex<HashMap<usize, Arc<Plans>>>> = OnceLock::new();
    let cache = CACHE.get_or_init(|| Mutex::new(HashMap::new()));
    let mut guard = cache.lock().unwrap();
    guard
        .entry(n)
        .or_insert_with(|| {
            let mut planner = FftPlanner::new();
            Arc::new(Plans {
                fwd: planner.plan_fft_forward(n),
                inv: planner.plan_fft_inverse(n),
            })
        })
        .clone()
}

/// Unnormalized forward 3-D DFT in place (all axes).
pub fn forward(grid: Grid, spec: &mut Vec<C64>) {
    transform(grid, spec, true);
}

/// Inverse 3-D DFT in place, normalized by `1/N^3`.
pub fn inverse(grid: Grid, spec: &mut Vec<C64>) {
    transform(grid, spec, false);
    let scale = 1.0 / grid.cells() as f64;
    par::update_indexed(spec, |_, v| v * scale);
}

fn transform(grid: Grid, spec: &mut Vec<C64>, fwd: bool) {
    let n = grid.n();
    assert_eq!(spec.len(), grid.cells(), "spectral buffer size mismatch");
    let plans = plans(n);
    let fft = if fwd { &plans.fwd } else { &plans.inv };
    let mut tmp = vec![C64::ZERO; spec.len()];
    for _ in 0..3 {
        lane_pass(n, spec, fft);
        rotate(n, spec, &mut tmp);
        std::mem::swap(spec, &mut tmp);
    }
}

/// Transforms every contiguous lane of length `n` in place.
fn lane_pass(n: usize, data: &mut [C64], fft: &Arc<dyn Fft<f64>>) {
    let scratch_len = fft.get_inplace_scratch_len();
    par::for_each_chunk_mut(
        data,
        n,
        || vec![C64::ZERO; scratch_len],
        |scratch, _, lane| fft.process_with_scratch(lane, scratch),
    );
}

/// `dst[y + n*(z + n*x)] = src[x + n*(y + n*z)]`: cycles the fastest axis.
fn rotate(n: usize, src: &[C64], dst: &mut [C64]) {
    let plane = n * n;
    par::for_each_chunk_mut(
        dst,
        plane,
        || (),
        |_, x, block| {
            for zy in 0..plane {
                block[zy] = src[x + n * zy];
            }
        },
    );
}

/// Real samples -> complex buffer.
pub fn to_complex(data: &[f64]) -> Vec<C64> {
    let mut out = vec![C64::ZERO; data.len()];
    par::fill_indexed(&mut out, |i| C64::new(data[i], 0.0));
    out
}

/// Real parts of a complex buffer (imaginary parts are dropped; for the
/// multiplier operators in this crate they are at round-off level).
pub fn real_part(spec: &[C64]) -> Vec<f64> {
    let mut out = vec![0.0; spec.len()];
    par::fill_indexed(&mut out, |i| spec[i].re);
    out
}
