//! Row/column 2-D FFT over row-major complex planes.

use std::cell::RefCell;

use rustfft::num_complex::Complex64;
use rustfft::{FftDirection, FftPlanner};

thread_local! {
    static PLANNER: RefCell<FftPlanner<f64>> = RefCell::new(FftPlanner::new());
}

/// In-place unnormalized 2-D transform of a row-major `height × width` plane.
pub(crate) fn fft2(plane: &mut [Complex64], height: usize, width: usize, direction: FftDirection) {
    debug_assert_eq!(plane.len(), height * width);
    let (row_fft, col_fft) = PLANNER.with(|p| {
        let mut p = p.borrow_mut();
        (
            p.plan_fft(width, direction),
            p.plan_fft(height, direction),
        )
    });

    // rustfft processes every consecutive chunk of the plan length.
    row_fft.process(plane);
    let mut transposed = transpose(plane, height, width);
    col_fft.process(&mut transposed);
    let back = transpose(&transposed, width, height);
    plane.copy_from_slice(&back);
}

fn transpose(src: &[Complex64], rows: usize, cols: usize) -> Vec<Complex64> {
    let mut dst = vec![Complex64::new(0.0, 0.0); src.len()];
    for r in 0..rows {
        for c in 0..cols {
            dst[c * rows + r] = src[r * cols + c];
        }
    }
    dst
}

/// Moves the zero-frequency term from index `(0, 0)` to `(height / 2, width / 2)`.
pub(crate) fn shift(src: &[Complex64], height: usize, width: usize) -> Vec<Complex64> {
    let (ch, cw) = (height / 2, width / 2);
    let mut dst = vec![Complex64::new(0.0, 0.0); src.len()];
    for k in 0..height {
        let u = (k + ch) % height;
        for l in 0..width {
            let v = (l + cw) % width;
            dst[u * width + v] = src[k * width + l];
        }
    }
    dst
}

/// Inverse of [`shift`].
pub(crate) fn unshift(src: &[Complex64], height: usize, width: usize) -> Vec<Complex64> {
    let (ch, cw) = (height / 2, width / 2);
    let mut dst = vec![Complex64::new(0.0, 0.0); src.len()];
    for u in 0..height {
        let k = (u + height - ch) % height;
        for v in 0..width {
            let l = (v + width - cw) % width;
            dst[k * width + l] = src[u * width + v];
        }
    }
    dst
}
