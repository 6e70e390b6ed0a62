//! Thin FFT wrapper: cached plans, normalized inverse, angular frequency grid.
//!
//! Convention: analysis kernel e^{−jωt} (rustfft forward), synthesis e^{+jωt};
//! the inverse transform carries the 1/N factor.

use crate::Real;
use num_complex::Complex;
use rustfft::{Fft, FftPlanner};
use std::sync::Arc;

pub struct FftPair<T: Real> {
    n: usize,
    fwd: Arc<dyn Fft<T>>,
    inv: Arc<dyn Fft<T>>,
    scratch: Vec<Complex<T>>,
}

impl<T: Real> FftPair<T> {
    pub fn new(n: usize) -> Self {
        let mut planner = FftPlanner::new();
        let fwd = planner.plan_fft_forward(n);
        let inv = planner.plan_fft_inverse(n);
        let scratch_len = fwd.get_inplace_scratch_len().max(inv.get_inplace_scratch_len());
        FftPair {
            n,
            fwd,
            inv,
            scratch: vec![Complex::new(T::zero(), T::zero()); scratch_len],
        }
    }

    pub fn len(&self) -> usize {
        self.n
    }

    pub fn is_empty(&self) -> bool {
        self.n == 0
    }

    pub fn forward(&mut self, buf: &mut [Complex<T>]) {
        debug_assert_eq!(buf.len(), self.n);
        self.fwd.process_with_scratch(buf, &mut self.scratch);
    }

    pub fn inverse(&mut self, buf: &mut [Complex<T>]) {
        debug_assert_eq!(buf.len(), self.n);
        self.inv.process_with_scratch(buf, &mut self.scratch);
        let s = T::of(1.0 / self.n as f64);
        for v in buf.iter_mut() {
            *v = *v * s;
        }
    }
}

/// Angular frequencies ω_i (rad/s) in FFT bin order for an n-point grid at
/// `sample_rate`: 0, Δ, …, up to ±Nyquist, negative half wrapped.
pub fn angular_freqs<T: Real>(n: usize, sample_rate: T) -> Vec<T> {
    let dw = T::of(2.0) * T::PI() * sample_rate / T::of(n as f64);
    (0..n)
        .map(|i| {
            let s = if i <= (n - 1) / 2 {
                i as f64
            } else {
                i as f64 - n as f64
            };
            dw * T::of(s)
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn round_trip_and_tone_bin() {
        let n = 64;
        let fs = 64.0f64;
        let mut fft = FftPair::new(n);
        // e^{+jω₀t} with ω₀ = 2π·3 lands in bin 3 under the e^{−jωt} analysis kernel
        let mut buf: Vec<_> = (0..n)
            .map(|i| Complex::from_polar(1.0, 2.0 * std::f64::consts::PI * 3.0 * i as f64 / fs))
            .collect();
        let orig = buf.clone();
        fft.forward(&mut buf);
        assert!((buf[3].re - n as f64).abs() < 1e-9);
        assert!(buf.iter().enumerate().all(|(i, v)| i == 3 || v.norm() < 1e-9));
        fft.inverse(&mut buf);
        for (a, b) in buf.iter().zip(&orig) {
            assert!((a - b).norm() < 1e-12);
        }
    }

    #[test]
    fn freq_grid_wraps_negative_half() {
        let w = angular_freqs::<f64>(8, 8.0);
        assert_eq!(w[0], 0.0);
        assert!((w[1] - 2.0 * std::f64::consts::PI).abs() < 1e-12);
        assert!((w[7] + 2.0 * std::f64::consts::PI).abs() < 1e-12);
        assert!((w[4] + 8.0 * std::f64::consts::PI).abs() < 1e-12);
    }
}
