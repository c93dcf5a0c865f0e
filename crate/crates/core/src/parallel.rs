//! Reductions with a fixed summation order.
//!
//! Sums are split into fixed-size chunks whose partial sums are combined
//! left to right, so the result does not depend on the number of worker
//! threads. `Reduction::Ordered` skips the thread pool entirely and is
//! bit-identical to the parallel path.

use rayon::prelude::*;
use std::sync::atomic::{AtomicBool, Ordering};

const CHUNK: usize = 4096;

static ORDERED: AtomicBool = AtomicBool::new(false);

/// Process-wide default used by [`chunked_sum`] and [`fill`].
pub fn set_reduction(mode: Reduction) {
    ORDERED.store(mode == Reduction::Ordered, Ordering::Relaxed);
}

pub fn reduction() -> Reduction {
    if ORDERED.load(Ordering::Relaxed) {
        Reduction::Ordered
    } else {
        Reduction::Parallel
    }
}

/// How nodal sums are evaluated.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Reduction {
    /// Fixed chunks evaluated on the rayon pool.
    #[default]
    Parallel,
    /// Same chunks, evaluated on the calling thread.
    Ordered,
}

/// Sum `f(i)` for `i in 0..n` with the process-wide reduction mode.
pub fn chunked_sum<F>(n: usize, f: F) -> f64
where
    F: Fn(usize) -> f64 + Sync,
{
    chunked_sum_with(n, reduction(), f)
}

/// Sum `f(i)` for `i in 0..n`.
pub fn chunked_sum_with<F>(n: usize, mode: Reduction, f: F) -> f64
where
    F: Fn(usize) -> f64 + Sync,
{
    let chunk_sum = |c: usize| {
        let lo = c * CHUNK;
        let hi = (lo + CHUNK).min(n);
        let mut acc = 0.0;
        for i in lo..hi {
            acc += f(i);
        }
        acc
    };
    let chunks = n.div_ceil(CHUNK);
    let partials: Vec<f64> = match mode {
        Reduction::Parallel if chunks > 1 => (0..chunks).into_par_iter().map(chunk_sum).collect(),
        _ => (0..chunks).map(chunk_sum).collect(),
    };
    partials.iter().sum()
}

/// Fill `out[i] = f(i)`.
pub fn fill<F>(out: &mut [f64], f: F)
where
    F: Fn(usize) -> f64 + Sync,
{
    match reduction() {
        Reduction::Parallel if out.len() > CHUNK => {
            out.par_chunks_mut(CHUNK).enumerate().for_each(|(c, chunk)| {
                for (k, v) in chunk.iter_mut().enumerate() {
                    *v = f(c * CHUNK + k);
                }
            })
        }
        _ => out.iter_mut().enumerate().for_each(|(i, v)| *v = f(i)),
    }
}
