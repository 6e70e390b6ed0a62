//! Brute-force reference integrator for the coefficient integrals: marches
//! the source-driven first-order field spectrally (integrating-factor form,
//! Simpson in z with analytic dispersed-Gaussian sources) and accumulates the
//! back-compensated second-order responses on a time grid. Shares no code
//! with the closed-form chain evaluation — this is the independent check the
//! fast engine is validated against.

use crate::error::{Error, Result};
use crate::fftutil::{angular_freqs, FftPair};
use crate::model::{LinkConfig, PulseParams};
use num_complex::Complex64;

/// Discretization of the reference march.
#[derive(Debug, Clone, Copy)]
pub struct OracleGrid {
    pub n_samples: usize,
    /// half-width of the time window in symbol periods
    pub window_symbols: f64,
    /// z sub-step of the first-order march (m); outer stations sit at 2×this
    pub z_substep: f64,
}

impl Default for OracleGrid {
    fn default() -> Self {
        OracleGrid {
            n_samples: 2048,
            window_symbols: 64.0,
            z_substep: 50.0,
        }
    }
}

/// Reference values for one (m, n) row: the first-order coefficient and the
/// two second-order coefficient slices over k ∈ [−kmax, kmax].
#[derive(Debug, Clone)]
pub struct ReferenceRow {
    pub fo: Complex64,
    pub term1: Vec<Complex64>,
    pub term2: Vec<Complex64>,
    pub kmax: i32,
}

struct March {
    n: usize,
    t: Vec<f64>,
    w: Vec<f64>,
    /// e^{jπ·bin}: converts a spectrum sum into the t = 0 sample value
    mid_sign: Vec<f64>,
    fft: FftPair<f64>,
    tau2: f64,
    t_sym: f64,
    beta2: f64,
    alpha: f64,
}

impl March {
    fn new(pulse: &PulseParams<f64>, link: &LinkConfig<f64>, grid: &OracleGrid) -> Self {
        let n = grid.n_samples;
        let span_t = 2.0 * grid.window_symbols * pulse.t_sym;
        let dt = span_t / n as f64;
        let t: Vec<f64> = (0..n).map(|i| (i as f64 - n as f64 / 2.0) * dt).collect();
        let w = angular_freqs(n, 1.0 / dt);
        let mid_sign: Vec<f64> = (0..n).map(|k| if k % 2 == 0 { 1.0 } else { -1.0 }).collect();
        March {
            n,
            t,
            w,
            mid_sign,
            fft: FftPair::new(n),
            tau2: pulse.tau * pulse.tau,
            t_sym: pulse.t_sym,
            beta2: link.beta2,
            alpha: link.alpha,
        }
    }

    /// Dispersed Gaussian ĝ_idx(z, t) into `out` (multiplying when `mul`).
    fn pulse_into(&self, idx: i32, z: f64, conj: bool, mul: bool, out: &mut [Complex64]) {
        let q = Complex64::new(self.tau2, -self.beta2 * z);
        let q = if conj { q.conj() } else { q };
        let pref = Complex64::new(self.tau2.sqrt(), 0.0) / q.sqrt();
        let shift = idx as f64 * self.t_sym;
        for (o, &t) in out.iter_mut().zip(&self.t) {
            let d = t - shift;
            let v = pref * (Complex64::new(-d * d, 0.0) / (2.0 * q)).exp();
            *o = if mul { *o * v } else { v };
        }
    }

    /// Source spectrum term f = e^{−j(β₂/2)w²z}·j·e^{−α·ζ}·DFT[ĝ_m ĝ_n ĝ*_{m+n}],
    /// where ζ is the distance into the current span (loss is a per-span
    /// sawtooth restored by the amplifiers).
    fn source(&mut self, m: i32, n: i32, z: f64, zeta: f64, buf: &mut Vec<Complex64>) {
        buf.resize(self.n, Complex64::new(0.0, 0.0));
        self.pulse_into(m, z, false, false, buf);
        self.pulse_into(n, z, false, true, buf);
        self.pulse_into(m + n, z, true, true, buf);
        self.fft.forward(buf);
        let att = (-self.alpha * zeta).exp();
        for (v, &w) in buf.iter_mut().zip(&self.w) {
            let phase = Complex64::new(0.0, -0.5 * self.beta2 * w * w * z).exp();
            *v *= phase * Complex64::new(0.0, att);
        }
    }

    /// u₁(z, t) in the time domain from the compensated spectrum V.
    fn first_order_field(&mut self, v: &[Complex64], z: f64, out: &mut Vec<Complex64>) {
        out.clear();
        out.extend(
            v.iter()
                .zip(&self.w)
                .map(|(&vv, &w)| vv * Complex64::new(0.0, 0.5 * self.beta2 * w * w * z).exp()),
        );
        self.fft.inverse(out);
    }

    /// t = 0 value of D(−z){field} from the time-domain samples.
    fn compensated_midpoint(&mut self, field: &mut Vec<Complex64>, z: f64) -> Complex64 {
        self.fft.forward(field);
        let mut acc = Complex64::new(0.0, 0.0);
        for ((&f, &w), &s) in field.iter().zip(&self.w).zip(&self.mid_sign) {
            acc += f * Complex64::new(0.0, -0.5 * self.beta2 * w * w * z).exp() * s;
        }
        acc / self.n as f64
    }
}

/// March the full reference for one (m, n): the first-order coefficient and
/// both second-order k-slices, |k| ≤ kmax, over the whole link length.
pub fn reference_row(
    m: i32,
    n: i32,
    kmax: i32,
    pulse: &PulseParams<f64>,
    link: &LinkConfig<f64>,
    grid: &OracleGrid,
) -> Result<ReferenceRow> {
    pulse.validate()?;
    link.validate()?;
    if kmax < 0 || grid.n_samples < 64 || !(grid.z_substep > 0.0) {
        return Err(Error::Parameter("bad oracle grid".into()));
    }
    let span = link.span_length;
    let h = grid.z_substep;
    // per-span stations at ≈2× the substep, even count for composite Simpson;
    // spans are integrated separately because the sawtooth loss makes the
    // integrand jump at amplifier sites
    let n_outer = (((span / (2.0 * h)).round() as usize + 1) / 2).max(1) * 2;
    let big_h = span / n_outer as f64;
    let half = big_h / 2.0;

    let mut mr = March::new(pulse, link, grid);
    let nk = (2 * kmax + 1) as usize;
    let mut c1 = vec![Complex64::new(0.0, 0.0); nk];
    let mut c2 = c1.clone();
    let mut v = vec![Complex64::new(0.0, 0.0); mr.n];
    let mut f_lo = Vec::new();
    let mut f_mid = Vec::new();
    let mut f_hi = Vec::new();
    let mut u1 = Vec::new();
    let mut prod = vec![Complex64::new(0.0, 0.0); mr.n];

    // accumulate the outer integrand at one station into the Simpson sums
    let add_station = |mr: &mut March,
                           v: &[Complex64],
                           z: f64,
                           zeta: f64,
                           weight: f64,
                           u1: &mut Vec<Complex64>,
                           prod: &mut Vec<Complex64>,
                           c1: &mut [Complex64],
                           c2: &mut [Complex64]| {
        mr.first_order_field(v, z, u1);
        let att = Complex64::new(0.0, (-link.alpha * zeta).exp()); // j·e^{−αζ}
        for (ki, k) in (-kmax..=kmax).enumerate() {
            // Term 1: u₁·ĝ_k·ĝ*_k
            prod.copy_from_slice(u1);
            mr.pulse_into(k, z, false, true, prod);
            mr.pulse_into(k, z, true, true, prod);
            c1[ki] += mr.compensated_midpoint(prod, z) * att * weight;
            // Term 2: u₁*·ĝ_k·ĝ_{−k}
            for (p, &u) in prod.iter_mut().zip(u1.iter()) {
                *p = u.conj();
            }
            mr.pulse_into(k, z, false, true, prod);
            mr.pulse_into(-k, z, false, true, prod);
            c2[ki] += mr.compensated_midpoint(prod, z) * att * weight;
        }
    };

    for sp in 0..link.n_spans {
        let z0 = sp as f64 * span;
        mr.source(m, n, z0, 0.0, &mut f_hi);
        for j in 0..=n_outer {
            let zeta = j as f64 * big_h;
            let z = z0 + zeta;
            // composite Simpson weights over this span's stations
            let weight = big_h / 3.0
                * if j == 0 || j == n_outer {
                    1.0
                } else if j % 2 == 1 {
                    4.0
                } else {
                    2.0
                };
            add_station(
                &mut mr, &v, z, zeta, weight, &mut u1, &mut prod, &mut c1, &mut c2,
            );
            if j == n_outer {
                break;
            }
            // advance V across [z, z+H] by Simpson on the three substations
            std::mem::swap(&mut f_lo, &mut f_hi);
            mr.source(m, n, z + half, zeta + half, &mut f_mid);
            mr.source(m, n, z + big_h, zeta + big_h, &mut f_hi);
            for i in 0..mr.n {
                v[i] += half / 3.0 * (f_lo[i] + 4.0 * f_mid[i] + f_hi[i]);
            }
        }
    }
    let fo = v
        .iter()
        .zip(&mr.mid_sign)
        .map(|(&vv, &s)| vv * s)
        .sum::<Complex64>()
        / mr.n as f64;
    Ok(ReferenceRow {
        fo,
        term1: c1,
        term2: c2,
        kmax,
    })
}
