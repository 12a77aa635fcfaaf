use std::cell::RefCell;
use std::sync::Arc;

use rustfft::num_complex::Complex;
use rustfft::{Fft, FftPlanner};

thread_local! {
    static PLANNER: RefCell<FftPlanner<f64>> = RefCell::new(FftPlanner::new());
}

pub(crate) fn forward(len: usize) -> Arc<dyn Fft<f64>> {
    PLANNER.with(|p| p.borrow_mut().plan_fft_forward(len))
}

pub(crate) fn inverse(len: usize) -> Arc<dyn Fft<f64>> {
    PLANNER.with(|p| p.borrow_mut().plan_fft_inverse(len))
}

/// Forward transform of a real even sequence given by its nonnegative half
/// `half[0..]`, placed at lags `0, ±1, ...` of a length-`len` circular buffer.
/// Returns the full complex spectrum.
pub(crate) fn even_sequence_spectrum(half: &[f64], len: usize) -> Vec<Complex<f64>> {
    debug_assert!(2 * half.len() <= len + 1);
    let mut buf = vec![Complex::new(0.0, 0.0); len];
    for (m, &v) in half.iter().enumerate() {
        buf[m].re = v;
        if m > 0 {
            buf[len - m].re = v;
        }
    }
    forward(len).process(&mut buf);
    buf
}
