//! Receiver chain: dispersion compensation, digital back-propagation,
//! matched filtering, hard detection, and link-quality metrics.

use crate::channel::{ssfm_span, SpanPlan};
use crate::error::{Error, Result};
use crate::fftutil::{angular_freqs, FftPair};
use crate::model::{Constellation, LinkConfig, SampledField, SymbolGrid};
use crate::Real;
use num_complex::Complex;

/// Back-propagation resolution.
#[derive(Debug, Clone, Copy)]
pub struct DbpConfig {
    pub steps_per_span: usize,
    pub samples_per_symbol: usize,
}

impl DbpConfig {
    pub fn validate(&self) -> Result<()> {
        if self.steps_per_span == 0 || self.samples_per_symbol < 2 {
            return Err(Error::Parameter(
                "need steps_per_span >= 1 and samples_per_symbol >= 2".into(),
            ));
        }
        Ok(())
    }
}

/// Frequency-domain compensation of the accumulated dispersion over
/// `total_length`: multiplies the spectrum by exp(−j(β₂/2)w²L).
pub fn edc<T: Real>(
    field: &SampledField<T>,
    link: &LinkConfig<T>,
    total_length: T,
) -> SampledField<T> {
    let n = field.len();
    let mut out = field.clone();
    if n == 0 || total_length == T::zero() {
        return out;
    }
    let mut fft = FftPair::<T>::new(n);
    let w = angular_freqs(n, field.sample_rate);
    let kern: Vec<Complex<T>> = w
        .iter()
        .map(|&wi| {
            let phi = -link.beta2 * T::of(0.5) * wi * wi * total_length;
            Complex::new(T::zero(), phi).exp()
        })
        .collect();
    for pol in [&mut out.x, &mut out.y] {
        fft.forward(pol);
        for (v, k) in pol.iter_mut().zip(&kern) {
            *v = *v * *k;
        }
        fft.inverse(pol);
    }
    out
}

/// Spectral resampling to `target_len` samples (low-pass decimation or
/// zero-padded interpolation); exact for signals bandlimited inside the
/// narrower of the two rates.
pub fn resample<T: Real>(field: &SampledField<T>, target_len: usize) -> Result<SampledField<T>> {
    let n = field.len();
    if target_len == 0 || n == 0 {
        return Err(Error::Parameter("empty field in resample".into()));
    }
    if target_len == n {
        return Ok(field.clone());
    }
    let mut fwd = FftPair::<T>::new(n);
    let mut inv = FftPair::<T>::new(target_len);
    let keep = n.min(target_len);
    let scale = T::of(target_len as f64 / n as f64);
    let mut out = SampledField {
        x: Vec::new(),
        y: Vec::new(),
        sample_rate: field.sample_rate * scale,
        center_time_offset: field.center_time_offset,
    };
    for pol in [&field.x, &field.y] {
        let mut spec = pol.clone();
        fwd.forward(&mut spec);
        let mut dst = vec![Complex::new(T::zero(), T::zero()); target_len];
        for j in 0..keep {
            let signed = if j <= (keep - 1) / 2 {
                j as isize
            } else {
                j as isize - keep as isize
            };
            let src = signed.rem_euclid(n as isize) as usize;
            let d = signed.rem_euclid(target_len as isize) as usize;
            dst[d] = spec[src] * scale;
        }
        inv.inverse(&mut dst);
        if out.x.is_empty() {
            out.x = dst;
        } else {
            out.y = dst;
        }
    }
    Ok(out)
}

/// Digital back-propagation: inverse split-step with negated (α, β₂, γ),
/// spans walked in reverse order, each preceded by the inverse amplifier
/// gain. Expects the field already at the configured rate.
pub fn dbp<T: Real>(
    field: &SampledField<T>,
    link: &LinkConfig<T>,
    cfg: &DbpConfig,
) -> Result<SampledField<T>> {
    cfg.validate()?;
    let inv_link = LinkConfig {
        alpha: -link.alpha,
        beta2: -link.beta2,
        gamma: -link.gamma,
        ..*link
    };
    let plan = SpanPlan::new(link.span_length / T::of(cfg.steps_per_span as f64))?;
    let inv_gain = link.span_gain().sqrt().recip();
    let mut out = field.clone();
    for _ in 0..link.n_spans {
        out.scale(inv_gain);
        out = ssfm_span(&out, &inv_link, &plan)?;
    }
    Ok(out)
}

/// Cyclic matched filter and symbol-rate downsampling; `delay` is the total
/// residual sampling offset in samples (0 when transmit shaping and this
/// filter use the same centered taps).
pub fn matched_filter_downsample<T: Real>(
    field: &SampledField<T>,
    taps: &[T],
    samples_per_symbol: usize,
    delay: isize,
) -> Result<SymbolGrid<T>> {
    let n = field.len();
    if samples_per_symbol == 0 || n == 0 || n % samples_per_symbol != 0 {
        return Err(Error::Parameter(format!(
            "field length {n} not a multiple of {samples_per_symbol} samples/symbol"
        )));
    }
    if taps.is_empty() {
        return Err(Error::Parameter("empty filter".into()));
    }
    let n_sym = n / samples_per_symbol;
    let center = (taps.len() - 1) / 2;
    let grab = |src: &[Complex<T>]| -> Vec<Complex<T>> {
        (0..n_sym)
            .map(|i| {
                let base = i as isize * samples_per_symbol as isize + delay - center as isize;
                let mut acc = Complex::new(T::zero(), T::zero());
                for (j, &h) in taps.iter().enumerate() {
                    let idx = (base + j as isize).rem_euclid(n as isize) as usize;
                    acc += src[idx] * h;
                }
                acc
            })
            .collect()
    };
    SymbolGrid::new(
        grab(&field.x),
        grab(&field.y),
        field.sample_rate / T::of(samples_per_symbol as f64),
    )
}

/// Hard decisions plus the recovered bit streams.
#[derive(Debug, Clone)]
pub struct Detected<T: Real> {
    pub symbols: SymbolGrid<T>,
    pub bits_x: Vec<u8>,
    pub bits_y: Vec<u8>,
}

/// Blindly normalize to the constellation's average energy, then pick the
/// nearest point per symbol per polarization.
pub fn ml_detect<T: Real>(received: &SymbolGrid<T>, constellation: &Constellation<T>) -> Detected<T> {
    let n = received.len().max(1);
    let e_rx = (received
        .x
        .iter()
        .chain(&received.y)
        .map(|c| c.norm_sqr())
        .sum::<T>()
        / T::of(2.0 * n as f64))
    .max(T::min_positive_value());
    let g = (constellation.mean_energy() / e_rx).sqrt();
    let mut bits_x = Vec::with_capacity(received.len() * constellation.bits_per_symbol);
    let mut bits_y = bits_x.clone();
    let decide = |src: &[Complex<T>], bits: &mut Vec<u8>| -> Vec<Complex<T>> {
        src.iter()
            .map(|&r| {
                let p = constellation.nearest(r * g);
                constellation.pattern_bits(p, bits);
                constellation.points[p]
            })
            .collect()
    };
    let x = decide(&received.x, &mut bits_x);
    let y = decide(&received.y, &mut bits_y);
    Detected {
        symbols: SymbolGrid {
            x,
            y,
            symbol_rate: received.symbol_rate,
        },
        bits_x,
        bits_y,
    }
}

/// One technique/launch-power result row.
#[derive(Debug, Clone, PartialEq)]
pub struct MetricsRow {
    pub technique: String,
    pub launch_power_dbm: f64,
    pub ber: f64,
    pub snr_db: f64,
    pub q_db: f64,
    pub mults_per_symbol: f64,
    pub snr_capped: bool,
}

/// Guard values for degenerate (error-free / hopeless) measurements.
pub const SNR_CAP_DB: f64 = 200.0;
pub const Q_CAP_DB: f64 = 40.0;

/// Q (linear) from BER via the Gaussian tail model BER = erfc(Q/√2)/2,
/// refined to machine precision with Newton steps on erfc (the library
/// inverse alone is only good to ~1e-7).
pub fn q_from_ber(ber: f64) -> f64 {
    let target = 2.0 * ber;
    let mut q = std::f64::consts::SQRT_2 * statrs::function::erf::erfc_inv(target);
    // Newton: d/dq erfc(q/√2) = −√(2/π)·exp(−q²/2)
    for _ in 0..3 {
        let f = libm::erfc(q / std::f64::consts::SQRT_2) - target;
        let slope = -(2.0 / std::f64::consts::PI).sqrt() * (-q * q / 2.0).exp();
        let step = f / slope;
        q -= step;
        if step.abs() < 1e-14 * q.abs() {
            break;
        }
    }
    q
}

/// Error rates and signal quality against known transmit data. The symbol
/// slices must already have edge guards removed; bit slices cover x then y
/// of the same trimmed range.
pub fn metrics<T: Real>(
    tx_bits: &[u8],
    rx_bits: &[u8],
    tx_syms: &SymbolGrid<T>,
    rx_syms: &SymbolGrid<T>,
) -> Result<MetricsRow> {
    if tx_bits.is_empty() || tx_bits.len() != rx_bits.len() {
        return Err(Error::Parameter(format!(
            "bit streams empty or mismatched: {} vs {}",
            tx_bits.len(),
            rx_bits.len()
        )));
    }
    if tx_syms.len() != rx_syms.len() || tx_syms.is_empty() {
        return Err(Error::Parameter("symbol grids empty or mismatched".into()));
    }
    let errors = tx_bits
        .iter()
        .zip(rx_bits)
        .filter(|(a, b)| a != b)
        .count();
    let ber = errors as f64 / tx_bits.len() as f64;
    // least-squares complex gain g minimizing Σ|g·rx − tx|², both pols jointly
    let pairs = || tx_syms.x.iter().zip(&rx_syms.x).chain(tx_syms.y.iter().zip(&rx_syms.y));
    let mut num = Complex::new(T::zero(), T::zero());
    let mut den = T::zero();
    for (&t, &r) in pairs() {
        num = num + r.conj() * t;
        den += r.norm_sqr();
    }
    let g = if den > T::zero() {
        num / den
    } else {
        Complex::new(T::one(), T::zero())
    };
    let mut sig = T::zero();
    let mut resid = T::zero();
    for (&t, &r) in pairs() {
        sig += t.norm_sqr();
        resid += (g * r - t).norm_sqr();
    }
    let (snr_db, snr_capped) = if resid > T::zero() && sig > T::zero() {
        let v = 10.0 * (sig / resid).to64().log10();
        (v.min(SNR_CAP_DB), v >= SNR_CAP_DB)
    } else {
        (SNR_CAP_DB, true)
    };
    let q_db = if ber <= 0.0 {
        Q_CAP_DB
    } else if ber >= 0.5 {
        -Q_CAP_DB
    } else {
        (20.0 * q_from_ber(ber).log10()).clamp(-Q_CAP_DB, Q_CAP_DB)
    };
    Ok(MetricsRow {
        technique: String::new(),
        launch_power_dbm: f64::NAN,
        ber,
        snr_db,
        q_db,
        mults_per_symbol: f64::NAN,
        snr_capped,
    })
}
