//! Thin wrapper over rustfft: per-thread plan cache plus 1-D/2-D in-place
//! transforms. Normalization is chosen so `inverse(forward(u)) == u`; the
//! quadrature weights that make the pair unitary live with the norm
//! routines in `spectral`.

use crate::grid::SpectralGrid;
use num_complex::Complex64;
use rustfft::FftPlanner;
use std::cell::RefCell;

thread_local! {
    static PLANNER: RefCell<FftPlanner<f64>> = RefCell::new(FftPlanner::new());
}

fn transform_rows(values: &mut [Complex64], n: usize, forward: bool) {
    PLANNER.with(|p| {
        let fft = if forward {
            p.borrow_mut().plan_fft_forward(n)
        } else {
            p.borrow_mut().plan_fft_inverse(n)
        };
        fft.process(values);
    });
}

fn transpose_square(values: &mut [Complex64], n: usize) {
    for i in 0..n {
        for j in (i + 1)..n {
            values.swap(i * n + j, j * n + i);
        }
    }
}

/// Unnormalized forward DFT along every axis, in place.
pub fn forward(grid: &SpectralGrid, values: &mut [Complex64]) {
    debug_assert_eq!(values.len(), grid.len());
    let n = grid.n();
    match grid.dim() {
        1 => transform_rows(values, n, true),
        2 => {
            transform_rows(values, n, true);
            transpose_square(values, n);
            transform_rows(values, n, true);
            transpose_square(values, n);
        }
        _ => unreachable!(),
    }
}

/// Inverse DFT along every axis, in place, scaled so it inverts `forward`.
pub fn inverse(grid: &SpectralGrid, values: &mut [Complex64]) {
    debug_assert_eq!(values.len(), grid.len());
    let n = grid.n();
    match grid.dim() {
        1 => transform_rows(values, n, false),
        2 => {
            transform_rows(values, n, false);
            transpose_square(values, n);
            transform_rows(values, n, false);
            transpose_square(values, n);
        }
        _ => unreachable!(),
    }
    let scale = 1.0 / grid.len() as f64;
    for v in values.iter_mut() {
        *v *= scale;
    }
}
