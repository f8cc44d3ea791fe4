//! Two-dimensional complex FFT on square grids: rows in parallel, then a
//! transpose so columns are processed as contiguous rows.

use std::sync::Arc;

use num_complex::Complex64;
use rayon::prelude::*;
use rustfft::{Fft, FftPlanner};

pub(crate) struct Fft2 {
    n: usize,
    forward: Arc<dyn Fft<f64>>,
    inverse: Arc<dyn Fft<f64>>,
}

impl std::fmt::Debug for Fft2 {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("Fft2").field("n", &self.n).finish()
    }
}

impl Fft2 {
    pub fn new(n: usize) -> Self {
        let mut planner = FftPlanner::new();
        Fft2 {
            n,
            forward: planner.plan_fft_forward(n),
            inverse: planner.plan_fft_inverse(n),
        }
    }

    /// Unnormalized forward transform, in place.
    pub fn forward(&self, data: &mut [Complex64]) {
        let mut scratch = vec![Complex64::new(0.0, 0.0); data.len()];
        self.forward_transposed(data, &mut scratch);
        transpose_into(&scratch, data, self.n);
    }

    /// Unnormalized inverse transform, in place (scales by `n^2` overall).
    pub fn inverse(&self, data: &mut [Complex64]) {
        let mut scratch = vec![Complex64::new(0.0, 0.0); data.len()];
        transpose_into(data, &mut scratch, self.n);
        self.inverse_from_transposed(&mut scratch, data);
    }

    /// Forward transform of `data`, leaving the spectrum in `out` with the
    /// axes swapped (`out[k1 * n + k0]`). `data` is clobbered.
    pub fn forward_transposed(&self, data: &mut [Complex64], out: &mut [Complex64]) {
        self.rows(data, &self.forward);
        transpose_into(data, out, self.n);
        self.rows(out, &self.forward);
    }

    /// Inverse of [`Fft2::forward_transposed`]: reads an axis-swapped
    /// spectrum from `spec` (clobbered) and writes values to `out`.
    pub fn inverse_from_transposed(&self, spec: &mut [Complex64], out: &mut [Complex64]) {
        self.rows(spec, &self.inverse);
        transpose_into(spec, out, self.n);
        self.rows(out, &self.inverse);
    }

    fn rows(&self, data: &mut [Complex64], plan: &Arc<dyn Fft<f64>>) {
        let dir = if Arc::ptr_eq(plan, &self.forward) {
            Direction::Forward
        } else {
            Direction::Inverse
        };
        self.fused_rows(data, Some(dir), |_, _| {}, None);
    }

    fn plan(&self, dir: Direction) -> &Arc<dyn Fft<f64>> {
        match dir {
            Direction::Forward => &self.forward,
            Direction::Inverse => &self.inverse,
        }
    }

    /// One sweep over blocks of rows: optional row transforms `pre`, then
    /// `mid(offset, block)` with the flat index of the block's first entry,
    /// then optional row transforms `post`. Blocks stay cache resident
    /// across all three stages.
    pub fn fused_rows<F>(&self, data: &mut [Complex64], pre: Option<Direction>, mid: F, post: Option<Direction>)
    where
        F: Fn(usize, &mut [Complex64]) + Sync,
    {
        debug_assert_eq!(data.len(), self.n * self.n);
        const ROWS: usize = 16;
        let block_len = self.n * ROWS;
        let scratch_len = self
            .forward
            .get_inplace_scratch_len()
            .max(self.inverse.get_inplace_scratch_len());
        data.par_chunks_mut(block_len).enumerate().for_each_init(
            || vec![Complex64::new(0.0, 0.0); scratch_len],
            |scratch, (k, block)| {
                if let Some(dir) = pre {
                    self.plan(dir).process_with_scratch(block, scratch);
                }
                mid(k * block_len, block);
                if let Some(dir) = post {
                    self.plan(dir).process_with_scratch(block, scratch);
                }
            },
        );
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub(crate) enum Direction {
    Forward,
    Inverse,
}

/// Out-of-place transpose of a square row-major matrix, tiled for cache
/// reuse. Each band of `TILE` output rows is gathered independently.
pub(crate) fn transpose_into(src: &[Complex64], dst: &mut [Complex64], n: usize) {
    const TILE: usize = 32;
    assert!(src.len() == n * n && dst.len() == n * n);
    dst.par_chunks_mut(n * TILE).enumerate().for_each(|(band_idx, band)| {
        let j0 = band_idx * TILE;
        let rows = band.len() / n;
        for i0 in (0..n).step_by(TILE) {
            let i1 = (i0 + TILE).min(n);
            for dj in 0..rows {
                let out = &mut band[dj * n + i0..dj * n + i1];
                for (k, o) in out.iter_mut().enumerate() {
                    *o = src[(i0 + k) * n + j0 + dj];
                }
            }
        }
    });
}
