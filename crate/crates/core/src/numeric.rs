//! Deterministic parallel reductions.
//!
//! Rayon's adaptive splitting makes the association order of a floating
//! point `sum` run-dependent. Reports must be byte-identical across runs, so
//! every reduction over nodes goes through fixed-size chunks whose partial
//! sums are combined sequentially.

use rayon::prelude::*;

const CHUNK: usize = 4096;

pub fn det_sum(values: &[f64]) -> f64 {
    let partial: Vec<f64> = values.par_chunks(CHUNK).map(|c| c.iter().sum::<f64>()).collect();
    partial.iter().sum()
}

/// Deterministic `Σ f(i)` for `i in 0..len`.
pub fn det_sum_by<F>(len: usize, f: F) -> f64
where
    F: Fn(usize) -> f64 + Sync,
{
    let chunks = len.div_ceil(CHUNK);
    let partial: Vec<f64> = (0..chunks)
        .into_par_iter()
        .map(|c| {
            let lo = c * CHUNK;
            let hi = (lo + CHUNK).min(len);
            (lo..hi).map(&f).sum::<f64>()
        })
        .collect();
    partial.iter().sum()
}

pub fn det_max_by<F>(len: usize, f: F) -> f64
where
    F: Fn(usize) -> f64 + Sync,
{
    (0..len).into_par_iter().map(&f).reduce(|| f64::NEG_INFINITY, f64::max)
}
