//! Data-parallel building blocks with a sequential fallback.
//!
//! With the `parallel` feature the helpers run on rayon; without it they run
//! as plain loops. Work is always partitioned into fixed-size chunks and
//! reductions combine per-chunk partial results in index order, so outputs
//! are bit-identical for any worker count (and identical to the sequential
//! build).

#[cfg(feature = "parallel")]
use rayon::prelude::*;

/// Chunk length for reductions and pointwise fills.
const CHUNK: usize = 4096;

/// `out[i] = f(i)` for every index.
pub fn fill_indexed<T, F>(out: &mut [T], f: F)
where
    T: Send,
    F: Fn(usize) -> T + Sync,
{
    let apply = |base: usize, slice: &mut [T]| {
        for (j, v) in slice.iter_mut().enumerate() {
            *v = f(base + j);
        }
    };
    #[cfg(feature = "parallel")]
    out.par_chunks_mut(CHUNK)
        .enumerate()
        .for_each(|(c, slice)| apply(c * CHUNK, slice));
    #[cfg(not(feature = "parallel"))]
    for (c, slice) in out.chunks_mut(CHUNK).enumerate() {
        apply(c * CHUNK, slice);
    }
}

/// `out[i] = f(i, out[i])` for every index.
pub fn update_indexed<T, F>(out: &mut [T], f: F)
where
    T: Copy + Send,
    F: Fn(usize, T) -> T + Sync,
{
    let apply = |base: usize, slice: &mut [T]| {
        for (j, v) in slice.iter_mut().enumerate() {
            *v = f(base + j, *v);
        }
    };
    #[cfg(feature = "parallel")]
    out.par_chunks_mut(CHUNK)
        .enumerate()
        .for_each(|(c, slice)| apply(c * CHUNK, slice));
    #[cfg(not(feature = "parallel"))]
    for (c, slice) in out.chunks_mut(CHUNK).enumerate() {
        apply(c * CHUNK, slice);
    }
}

/// Deterministic sum of `term(i)` over `0..len`.
///
/// Fixed-size chunks are summed independently and the partial sums are
/// combined in chunk order, so the floating-point result does not depend on
/// how chunks were scheduled.
pub fn sum_indexed<F>(len: usize, term: F) -> f64
where
    F: Fn(usize) -> f64 + Sync,
{
    let nchunks = len.div_ceil(CHUNK);
    let partial = |c: usize| {
        let lo = c * CHUNK;
        let hi = (lo + CHUNK).min(len);
        let mut s = 0.0;
        for i in lo..hi {
            s += term(i);
        }
        s
    };
    #[cfg(feature = "parallel")]
    let parts: Vec<f64> = (0..nchunks).into_par_iter().map(partial).collect();
    #[cfg(not(feature = "parallel"))]
    let parts: Vec<f64> = (0..nchunks).map(partial).collect();
    parts.iter().sum()
}

/// Maximum of `term(i)` over `0..len`; `f64::NEG_INFINITY` when empty.
pub fn max_indexed<F>(len: usize, term: F) -> f64
where
    F: Fn(usize) -> f64 + Sync,
{
    let nchunks = len.div_ceil(CHUNK);
    let partial = |c: usize| {
        let lo = c * CHUNK;
        let hi = (lo + CHUNK).min(len);
        let mut m = f64::NEG_INFINITY;
        for i in lo..hi {
            m = m.max(term(i));
        }
        m
    };
    #[cfg(feature = "parallel")]
    let parts: Vec<f64> = (0..nchunks).into_par_iter().map(partial).collect();
    #[cfg(not(feature = "parallel"))]
    let parts: Vec<f64> = (0..nchunks).map(partial).collect();
    parts.into_iter().fold(f64::NEG_INFINITY, f64::max)
}

/// Applies `f` to consecutive chunks of `data`, handing each invocation a
/// per-worker scratch state built by `init` plus the chunk index.
pub fn for_each_chunk_mut<T, S, G, F>(data: &mut [T], chunk: usize, init: G, f: F)
where
    T: Send,
    S: Send,
    G: Fn() -> S + Sync + Send,
    F: Fn(&mut S, usize, &mut [T]) + Sync + Send,
{
    #[cfg(feature = "parallel")]
    data.par_chunks_mut(chunk)
        .enumerate()
        .for_each_init(&init, |state, (i, c)| f(state, i, c));
    #[cfg(not(feature = "parallel"))]
    {
        let mut state = init();
        for (i, c) in data.chunks_mut(chunk).enumerate() {
            f(&mut state, i, c);
        }
    }
}

/// Applies `f` chunkwise to three equally long slices (zipped), passing the
/// base index of each chunk triple.
pub fn for_each_chunk3_mut<T, F>(a: &mut [T], b: &mut [T], c: &mut [T], f: F)
where
    T: Send,
    F: Fn(usize, &mut [T], &mut [T], &mut [T]) + Sync + Send,
{
    assert!(a.len() == b.len() && b.len() == c.len(), "slice length mismatch");
    #[cfg(feature = "parallel")]
    a.par_chunks_mut(CHUNK)
        .zip(b.par_chunks_mut(CHUNK))
        .zip(c.par_chunks_mut(CHUNK))
        .enumerate()
        .for_each(|(i, ((ca, cb), cc))| f(i * CHUNK, ca, cb, cc));
    #[cfg(not(feature = "parallel"))]
    for (i, ((ca, cb), cc)) in a
        .chunks_mut(CHUNK)
        .zip(b.chunks_mut(CHUNK))
        .zip(c.chunks_mut(CHUNK))
        .enumerate()
    {
        f(i * CHUNK, ca, cb, cc);
    }
}

/// Number of workers the parallel backend will use (1 for the sequential
/// build); recorded in run manifests.
pub fn worker_count() -> usize {
    #[cfg(feature = "parallel")]
    {
        rayon::current_num_threads()
    }
    #[cfg(not(feature = "parallel"))]
    {
        1
    }
}
