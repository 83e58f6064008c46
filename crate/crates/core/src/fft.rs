//! Square 2-D FFTs built from rustfft row transforms.

use std::cell::RefCell;
use std::sync::Arc;

use num_complex::Complex64;
use rustfft::{Fft, FftDirection, FftPlanner};

thread_local! {
    static PLANNER: RefCell<FftPlanner<f64>> = RefCell::new(FftPlanner::new());
}

fn plan(n: usize, direction: FftDirection) -> Arc<dyn Fft<f64>> {
    PLANNER.with(|p| p.borrow_mut().plan_fft(n, direction))
}

fn transpose(src: &[Complex64], dst: &mut [Complex64], n: usize) {
    const BLOCK: usize = 32;
    for rb in (0..n).step_by(BLOCK) {
        for cb in (0..n).step_by(BLOCK) {
            for r in rb..(rb + BLOCK).min(n) {
                for c in cb..(cb + BLOCK).min(n) {
                    dst[c * n + r] = src[r * n + c];
                }
            }
        }
    }
}

fn fft2(data: &mut [Complex64], n: usize, direction: FftDirection) {
    debug_assert_eq!(data.len(), n * n);
    let fft = plan(n, direction);
    let mut scratch = vec![Complex64::default(); fft.get_inplace_scratch_len()];
    let mut tmp = vec![Complex64::default(); n * n];
    fft.process_with_scratch(data, &mut scratch);
    transpose(data, &mut tmp, n);
    fft.process_with_scratch(&mut tmp, &mut scratch);
    transpose(&tmp, data, n);
}

/// Unnormalized forward transform (kernel `exp(-2πi kx/N)`).
pub fn forward(data: &mut [Complex64], n: usize) {
    fft2(data, n, FftDirection::Forward);
}

/// Unnormalized inverse transform; `inverse(forward(x)) == N²·x`.
pub fn inverse(data: &mut [Complex64], n: usize) {
    fft2(data, n, FftDirection::Inverse);
}

/// Signed FFT frequency index for bin `k` of an `n`-point transform.
#[inline]
pub fn freq_index(k: usize, n: usize) -> f64 {
    if k < n / 2 {
        k as f64
    } else {
        k as f64 - n as f64
    }
}
