//! Real-multiplication-per-symbol accounting for the compared receiver/
//! transmitter techniques.

use crate::coeffs::CoeffTable;
use crate::error::{Error, Result};
use crate::Real;

/// Block-processing parameters the FFT-based techniques are costed with.
#[derive(Debug, Clone, Copy)]
pub struct ComplexityParams {
    pub n_steps: u32,
    pub n_spans: u32,
    pub n_fft: u32,
    pub n_samples: u32,
}

impl ComplexityParams {
    pub fn validate(&self) -> Result<()> {
        if self.n_steps == 0 || self.n_spans == 0 || self.n_samples == 0 {
            return Err(Error::Parameter("complexity parameters must be positive".into()));
        }
        if !self.n_fft.is_power_of_two() {
            return Err(Error::Parameter(format!(
                "n_fft {} is not a power of two",
                self.n_fft
            )));
        }
        Ok(())
    }
}

/// DBP: 8·N_steps·N_spans·N_FFT·(log₂ N_FFT + 10.5) / N_s.
pub fn mult_dbp(p: &ComplexityParams) -> f64 {
    let log2n = (p.n_fft as f64).log2();
    8.0 * p.n_steps as f64 * p.n_spans as f64 * p.n_fft as f64 * (log2n + 10.5)
        / p.n_samples as f64
}

/// Single-stage LUT predistortion: 2(4M + 3) for M significant coefficients.
pub fn mult_pbnlc(m: usize) -> f64 {
    2.0 * (4.0 * m as f64 + 3.0)
}

/// Frequency-domain dispersion equalizer: 8·N_FFT·(log₂ N_FFT + 1) / N_s.
pub fn mult_edc(p: &ComplexityParams) -> f64 {
    let log2n = (p.n_fft as f64).log2();
    8.0 * p.n_fft as f64 * (log2n + 1.0) / p.n_samples as f64
}

/// Significant-coefficient count of a table: distinct quantized groups when
/// combined, raw retained entries otherwise.
#[allow(non_snake_case)]
pub fn count_M<T: Real>(table: &CoeffTable<T>) -> usize {
    table.significant_count()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn formulas_match_hand_arithmetic() {
        let p = ComplexityParams {
            n_steps: 1,
            n_spans: 1,
            n_fft: 1024,
            n_samples: 1024,
        };
        p.validate().unwrap();
        assert_eq!(mult_dbp(&p), 164.0);
        assert_eq!(mult_edc(&p), 88.0);
        assert_eq!(mult_pbnlc(900), 7206.0);
        assert_eq!(mult_pbnlc(0), 6.0);
        assert_eq!(mult_pbnlc(1), 14.0);
    }

    #[test]
    fn dbp_is_linear_in_spans_and_steps() {
        let base = ComplexityParams {
            n_steps: 2,
            n_spans: 7,
            n_fft: 4096,
            n_samples: 2048,
        };
        let double_spans = ComplexityParams {
            n_spans: 14,
            ..base
        };
        assert!((mult_dbp(&double_spans) - 2.0 * mult_dbp(&base)).abs() < 1e-12);
        assert!(
            (mult_dbp(&ComplexityParams {
                n_steps: 4,
                ..base
            }) - 2.0 * mult_dbp(&base))
            .abs()
                < 1e-12
        );
    }

    #[test]
    fn non_power_of_two_fft_rejected() {
        let p = ComplexityParams {
            n_steps: 1,
            n_spans: 1,
            n_fft: 1000,
            n_samples: 1000,
        };
        assert!(p.validate().is_err());
    }
}
