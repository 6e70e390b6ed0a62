//! Domain types, 16-QAM Gray mapping, RRC pulse shaping, and resampling shared
//! by the transmitter and receiver.

use crate::error::{Error, Result};
use crate::Real;
use num_complex::Complex;

/// Symbol alphabet with an implicit bit labeling: `points[p]` is the symbol
/// for the `bits_per_symbol`-bit pattern `p` (MSB first).
#[derive(Debug, Clone)]
pub struct Constellation<T: Real> {
    pub points: Vec<Complex<T>>,
    pub bits_per_symbol: usize,
}

/// Gray value of a 2-bit pattern on one PAM-4 rail: 00→−3, 01→−1, 11→+1, 10→+3.
fn pam4_gray<T: Real>(hi: u8, lo: u8) -> T {
    T::of(match (hi, lo) {
        (0, 0) => -3.0,
        (0, 1) => -1.0,
        (1, 1) => 1.0,
        _ => 3.0,
    })
}

impl<T: Real> Constellation<T> {
    /// Rectangular 16-QAM, Gray-labeled per rail (bits `b3 b2 b1 b0`: I from
    /// `b3 b2`, Q from `b1 b0`), normalized to unit average energy.
    pub fn qam16() -> Self {
        let scale = T::of(1.0 / 10.0f64.sqrt());
        let points = (0u8..16)
            .map(|p| {
                let i = pam4_gray::<T>((p >> 3) & 1, (p >> 2) & 1);
                let q = pam4_gray::<T>((p >> 1) & 1, p & 1);
                Complex::new(i * scale, q * scale)
            })
            .collect();
        Self {
            points,
            bits_per_symbol: 4,
        }
    }

    /// Pattern of the nearest constellation point (hard ML decision for AWGN).
    pub fn nearest(&self, r: Complex<T>) -> usize {
        let mut best = 0;
        let mut best_d = T::infinity();
        for (p, &c) in self.points.iter().enumerate() {
            let d = (r - c).norm_sqr();
            if d < best_d {
                best_d = d;
                best = p;
            }
        }
        best
    }

    /// Average symbol energy (should be 1).
    pub fn mean_energy(&self) -> T {
        let n = T::of(self.points.len() as f64);
        self.points.iter().map(|c| c.norm_sqr()).sum::<T>() / n
    }

    /// Expand a pattern into bits, MSB first.
    pub fn pattern_bits(&self, pattern: usize, out: &mut Vec<u8>) {
        for b in (0..self.bits_per_symbol).rev() {
            out.push(((pattern >> b) & 1) as u8);
        }
    }
}

/// Map a bit sequence (values 0/1) onto constellation symbols, one polarization.
pub fn qam16_map<T: Real>(bits: &[u8], constellation: &Constellation<T>) -> Result<Vec<Complex<T>>> {
    let bps = constellation.bits_per_symbol;
    if bits.len() % bps != 0 {
        return Err(Error::Parameter(format!(
            "bit count {} is not a multiple of {bps}",
            bits.len()
        )));
    }
    Ok(bits
        .chunks_exact(bps)
        .map(|c| {
            let p = c.iter().fold(0usize, |acc, &b| (acc << 1) | b as usize);
            constellation.points[p]
        })
        .collect())
}

/// Dual-polarization symbol sequence at a common symbol rate.
#[derive(Debug, Clone)]
pub struct SymbolGrid<T: Real> {
    pub x: Vec<Complex<T>>,
    pub y: Vec<Complex<T>>,
    pub symbol_rate: T,
}

impl<T: Real> SymbolGrid<T> {
    pub fn new(x: Vec<Complex<T>>, y: Vec<Complex<T>>, symbol_rate: T) -> Result<Self> {
        if x.len() != y.len() {
            return Err(Error::Parameter(format!(
                "polarization length mismatch: {} vs {}",
                x.len(),
                y.len()
            )));
        }
        Ok(Self { x, y, symbol_rate })
    }

    pub fn len(&self) -> usize {
        self.x.len()
    }

    pub fn is_empty(&self) -> bool {
        self.x.is_empty()
    }
}

/// Dual-polarization baseband waveform on a uniform time grid.
#[derive(Debug, Clone)]
pub struct SampledField<T: Real> {
    pub x: Vec<Complex<T>>,
    pub y: Vec<Complex<T>>,
    pub sample_rate: T,
    /// Time of sample 0 relative to the symbol-0 instant (s).
    pub center_time_offset: T,
}

impl<T: Real> SampledField<T> {
    pub fn len(&self) -> usize {
        self.x.len()
    }

    pub fn is_empty(&self) -> bool {
        self.x.is_empty()
    }

    /// Mean sample power over both polarizations (W).
    pub fn mean_power(&self) -> T {
        let n = T::of(self.x.len() as f64);
        let px = self.x.iter().map(|c| c.norm_sqr()).sum::<T>();
        let py = self.y.iter().map(|c| c.norm_sqr()).sum::<T>();
        (px + py) / n
    }

    pub fn scale(&mut self, g: T) {
        for v in self.x.iter_mut().chain(self.y.iter_mut()) {
            *v = *v * g;
        }
    }
}

/// Pulse model parameters: the symbol period, the Gaussian width used inside
/// the coefficient integrals, the pulse peak power, and the RRC roll-off used
/// for the actual waveform.
#[derive(Debug, Clone, Copy)]
pub struct PulseParams<T: Real> {
    pub t_sym: T,
    pub tau: T,
    pub p0: T,
    pub rrc_rolloff: T,
}

impl<T: Real> PulseParams<T> {
    pub fn validate(&self) -> Result<()> {
        let ok = self.t_sym > T::zero()
            && self.tau > T::zero()
            && self.p0 > T::zero()
            && self.rrc_rolloff >= T::zero()
            && self.rrc_rolloff <= T::one();
        if ok {
            Ok(())
        } else {
            Err(Error::Parameter("pulse parameters out of range".into()))
        }
    }
}

/// Fiber and amplifier parameters. `alpha` is the power attenuation in 1/m
/// (0.2 dB/km ≈ 4.605e-5), `beta2` in s²/m, `gamma` in 1/W/m.
#[derive(Debug, Clone, Copy)]
pub struct LinkConfig<T: Real> {
    pub alpha: T,
    pub beta2: T,
    pub gamma: T,
    pub span_length: T,
    pub n_spans: usize,
    pub noise_figure_db: T,
    pub center_wavelength: T,
}

pub const SPEED_OF_LIGHT: f64 = 299_792_458.0;

/// Power attenuation dB/km → 1/m.
pub fn alpha_from_db_per_km<T: Real>(a: T) -> T {
    a * T::of(10.0f64.ln() / 10.0 / 1e3)
}

impl<T: Real> LinkConfig<T> {
    pub fn total_length(&self) -> T {
        self.span_length * T::of(self.n_spans as f64)
    }

    /// EDFA power gain restoring one span of loss.
    pub fn span_gain(&self) -> T {
        (self.alpha * self.span_length).exp()
    }

    /// Optical carrier frequency (Hz).
    pub fn carrier_frequency(&self) -> T {
        T::of(SPEED_OF_LIGHT) / self.center_wavelength
    }

    pub fn validate(&self) -> Result<()> {
        let fin = self.alpha.is_finite()
            && self.beta2.is_finite()
            && self.gamma.is_finite()
            && self.span_length > T::zero()
            && self.n_spans >= 1
            && self.center_wavelength > T::zero();
        if fin {
            Ok(())
        } else {
            Err(Error::Parameter("link parameters out of range".into()))
        }
    }
}

/// Root-raised-cosine taps: odd length covering `span_symbols` symbol
/// periods, unit energy, even about the center tap.
pub fn rrc_taps<T: Real>(rolloff: T, span_symbols: usize, samples_per_symbol: usize) -> Result<Vec<T>> {
    if rolloff < T::zero() || rolloff > T::one() {
        return Err(Error::Parameter(format!("rolloff {rolloff} outside [0,1]")));
    }
    if span_symbols < 8 || samples_per_symbol < 2 {
        return Err(Error::Parameter(
            "need span_symbols >= 8 and samples_per_symbol >= 2".into(),
        ));
    }
    let n = (span_symbols * samples_per_symbol) | 1;
    let half = (n - 1) / 2;
    let beta = rolloff;
    let pi = T::PI();
    let mut taps = Vec::with_capacity(n);
    for i in 0..n {
        // t in symbol periods, exact at the singular points
        let t = T::of(i as f64 - half as f64) / T::of(samples_per_symbol as f64);
        let four_bt = T::of(4.0) * beta * t;
        let v = if t == T::zero() {
            T::one() + beta * (T::of(4.0) / pi - T::one())
        } else if beta > T::zero() && (four_bt.abs() - T::one()).abs() < T::of(1e-9) {
            // limit at t = ±1/(4β)
            let x = pi / (T::of(4.0) * beta);
            beta / T::of(2.0f64.sqrt())
                * ((T::one() + T::of(2.0) / pi) * x.sin() + (T::one() - T::of(2.0) / pi) * x.cos())
        } else {
            let num = (pi * t * (T::one() - beta)).sin()
                + four_bt * (pi * t * (T::one() + beta)).cos();
            num / (pi * t * (T::one() - four_bt * four_bt))
        };
        taps.push(v);
    }
    let energy = taps.iter().map(|&h| h * h).sum::<T>();
    let norm = energy.sqrt().recip();
    for h in &mut taps {
        *h *= norm;
    }
    Ok(taps)
}

/// Pulse-shape a symbol grid onto `len = symbols·sps` samples by cyclic
/// convolution, with the tap center aligned so symbol `i` peaks at sample
/// `i·sps`. Average launch power scaling is applied separately by the harness.
pub fn shape<T: Real>(symbols: &SymbolGrid<T>, taps: &[T], samples_per_symbol: usize) -> SampledField<T> {
    let n = symbols.len() * samples_per_symbol;
    let center = (taps.len() - 1) / 2;
    let mut x = vec![Complex::new(T::zero(), T::zero()); n];
    let mut y = vec![Complex::new(T::zero(), T::zero()); n];
    for (i, (&ax, &ay)) in symbols.x.iter().zip(&symbols.y).enumerate() {
        let base = i * samples_per_symbol + n - center;
        for (j, &h) in taps.iter().enumerate() {
            let idx = (base + j) % n;
            x[idx] += ax * h;
            y[idx] += ay * h;
        }
    }
    SampledField {
        x,
        y,
        sample_rate: symbols.symbol_rate * T::of(samples_per_symbol as f64),
        center_time_offset: T::zero(),
    }
}
