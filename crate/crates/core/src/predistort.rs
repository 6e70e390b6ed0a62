//! Transmitter-side perturbative predistortion: evaluate the first- and
//! second-order distortion-field estimates from coefficient tables and
//! subtract them from the symbol grid (feed-forward, single pass).

use crate::coeffs::{CoeffIndex, CoeffTable};
use crate::error::{Error, Result};
use crate::model::SymbolGrid;
use crate::Real;
use num_complex::Complex;

/// Scalings and tables for one predistortion setup. `gamma` and `p0` are the
/// runtime launch parameters (the tables themselves are power-independent
/// kernels); `l_w` limits the index window actually summed, which may be
/// narrower than what the tables carry.
#[derive(Clone, Copy)]
pub struct PredistortConfig<'a, T: Real> {
    pub epsilon_fo: T,
    pub epsilon_so: T,
    pub l_w: u32,
    pub use_term2: bool,
    pub gamma: T,
    pub p0: T,
    pub fo_table: Option<&'a CoeffTable<T>>,
    pub so_term1_table: Option<&'a CoeffTable<T>>,
    pub so_term2_table: Option<&'a CoeffTable<T>>,
}

impl<'a, T: Real> PredistortConfig<'a, T> {
    pub fn validate(&self) -> Result<()> {
        if self.epsilon_fo < T::zero() || self.epsilon_so < T::zero() {
            return Err(Error::Config("epsilon scalings must be non-negative".into()));
        }
        if self.l_w == 0 || self.l_w % 2 != 0 {
            return Err(Error::Config("window L_w must be positive and even".into()));
        }
        if !(self.p0 > T::zero()) || !self.gamma.is_finite() {
            return Err(Error::Config("need p0 > 0 and finite gamma".into()));
        }
        for (name, t) in [
            ("fo", self.fo_table),
            ("so-term1", self.so_term1_table),
            ("so-term2", self.so_term2_table),
        ] {
            if let Some(t) = t {
                if t.l_w < self.l_w {
                    return Err(Error::Config(format!(
                        "{name} table window {} narrower than requested {}",
                        t.l_w, self.l_w
                    )));
                }
            }
        }
        Ok(())
    }
}

/// Triplet/quintuplet terms of one table, flattened for the hot loop.
struct Flat<T> {
    /// (m, n, k, coefficient)
    terms: Vec<(i32, i32, i32, Complex<T>)>,
    /// group boundaries (start, len, value) into `terms` when quantized
    groups: Option<Vec<(usize, usize, Complex<T>)>>,
}

fn flatten<T: Real>(table: &CoeffTable<T>, l_w: u32, grouped: bool) -> Flat<T> {
    let half = (l_w / 2) as i32;
    let keep = |i: &CoeffIndex| {
        (i.m as i32).abs() <= half && (i.n as i32).abs() <= half && (i.k as i32).abs() <= half
    };
    match (&table.groups, grouped) {
        (Some(groups), true) => {
            let mut terms = Vec::with_capacity(table.entries.len());
            let mut spans = Vec::with_capacity(groups.len());
            for (&(qre, qim), idxs) in groups {
                let start = terms.len();
                for idx in idxs.iter().filter(|i| keep(i)) {
                    terms.push((idx.m as i32, idx.n as i32, idx.k as i32, Complex::new(T::zero(), T::zero())));
                }
                let len = terms.len() - start;
                if len > 0 {
                    let q = table.quant_scale.unwrap_or_else(T::one);
                    spans.push((
                        start,
                        len,
                        Complex::new(T::of(qre as f64) * q, T::of(qim as f64) * q),
                    ));
                }
            }
            Flat {
                terms,
                groups: Some(spans),
            }
        }
        _ => Flat {
            terms: table
                .entries
                .iter()
                .filter(|(i, _)| keep(i))
                .map(|(i, &c)| (i.m as i32, i.n as i32, i.k as i32, c))
                .collect(),
            groups: None,
        },
    }
}

#[inline]
fn at<T: Real>(v: &[Complex<T>], i: isize) -> Complex<T> {
    if i >= 0 && (i as usize) < v.len() {
        v[i as usize]
    } else {
        Complex::new(T::zero(), T::zero())
    }
}

/// First-order distortion increments Δu₁ per slot, both polarizations:
/// scale·Σ (a_{m,x}a*_{m+n,x} + a_{m,y}a*_{m+n,y})·a_{n,·}·C(m,n) with all
/// indices relative to the slot, out-of-frame symbols read as zero.
pub fn fo_distortion<T: Real>(
    symbols: &SymbolGrid<T>,
    cfg: &PredistortConfig<'_, T>,
) -> Result<SymbolGrid<T>> {
    cfg.validate()?;
    let table = cfg
        .fo_table
        .ok_or_else(|| Error::Config("first-order table not loaded".into()))?;
    let scale = cfg.epsilon_fo * T::of(8.0 / 9.0) * cfg.gamma * cfg.p0.powf(T::of(1.5));
    let flat = flatten(table, cfg.l_w, false);
    let n = symbols.len();
    let mut out = SymbolGrid {
        x: vec![Complex::new(T::zero(), T::zero()); n],
        y: vec![Complex::new(T::zero(), T::zero()); n],
        symbol_rate: symbols.symbol_rate,
    };
    if scale == T::zero() {
        return Ok(out);
    }
    for i in 0..n as isize {
        let mut ax = Complex::new(T::zero(), T::zero());
        let mut ay = ax;
        for &(m, n_i, _, c) in &flat.terms {
            let (m, n_i) = (m as isize, n_i as isize);
            let b = at(&symbols.x, i + m) * at(&symbols.x, i + m + n_i).conj()
                + at(&symbols.y, i + m) * at(&symbols.y, i + m + n_i).conj();
            ax += b * at(&symbols.x, i + n_i) * c;
            ay += b * at(&symbols.y, i + n_i) * c;
        }
        out.x[i as usize] = ax * scale;
        out.y[i as usize] = ay * scale;
    }
    Ok(out)
}

/// Second-order distortion increments Δu₂. `grouped` selects the quantized
/// group-accumulation evaluation (one coefficient multiply per group); the
/// naive path multiplies term by term. Both orders sum the same products.
pub fn so_distortion_with<T: Real>(
    symbols: &SymbolGrid<T>,
    cfg: &PredistortConfig<'_, T>,
    grouped: bool,
) -> Result<SymbolGrid<T>> {
    cfg.validate()?;
    let t1 = cfg
        .so_term1_table
        .ok_or_else(|| Error::Config("second-order term-1 table not loaded".into()))?;
    let t2 = if cfg.use_term2 {
        Some(
            cfg.so_term2_table
                .ok_or_else(|| Error::Config("second-order term-2 table not loaded".into()))?,
        )
    } else {
        None
    };
    let scale =
        cfg.epsilon_so * T::of(64.0 / 81.0) * cfg.gamma * cfg.gamma * cfg.p0.powf(T::of(2.5));
    let n = symbols.len();
    let mut out = SymbolGrid {
        x: vec![Complex::new(T::zero(), T::zero()); n],
        y: vec![Complex::new(T::zero(), T::zero()); n],
        symbol_rate: symbols.symbol_rate,
    };
    if scale == T::zero() {
        return Ok(out);
    }
    let f1 = flatten(t1, cfg.l_w, grouped);
    let f2 = t2.map(|t| flatten(t, cfg.l_w, grouped));
    let two = T::of(2.0);
    for i in 0..n as isize {
        let mut ax = Complex::new(T::zero(), T::zero());
        let mut ay = ax;
        // Term 1: 2·B·a_n·(|a_k|² both pols)·C
        let prod1 = |m: isize, n_i: isize, k: isize| -> (Complex<T>, Complex<T>) {
            let b = at(&symbols.x, i + m) * at(&symbols.x, i + m + n_i).conj()
                + at(&symbols.y, i + m) * at(&symbols.y, i + m + n_i).conj();
            let w = at(&symbols.x, i + k).norm_sqr() + at(&symbols.y, i + k).norm_sqr();
            let bw = b * (two * w);
            (bw * at(&symbols.x, i + n_i), bw * at(&symbols.y, i + n_i))
        };
        match &f1.groups {
            Some(spans) => {
                for &(start, len, v) in spans {
                    let mut sx = Complex::new(T::zero(), T::zero());
                    let mut sy = sx;
                    for &(m, n_i, k, _) in &f1.terms[start..start + len] {
                        let (px, py) = prod1(m as isize, n_i as isize, k as isize);
                        sx += px;
                        sy += py;
                    }
                    ax += sx * v;
                    ay += sy * v;
                }
            }
            None => {
                for &(m, n_i, k, c) in &f1.terms {
                    let (px, py) = prod1(m as isize, n_i as isize, k as isize);
                    ax += px * c;
                    ay += py * c;
                }
            }
        }
        // Term 2: conj(B·a_n)·(a_k a_{−k} both pols)·C
        if let Some(f2) = &f2 {
            let prod2 = |m: isize, n_i: isize, k: isize| -> (Complex<T>, Complex<T>) {
                let b = at(&symbols.x, i + m) * at(&symbols.x, i + m + n_i).conj()
                    + at(&symbols.y, i + m) * at(&symbols.y, i + m + n_i).conj();
                let w = at(&symbols.x, i + k) * at(&symbols.x, i - k)
                    + at(&symbols.y, i + k) * at(&symbols.y, i - k);
                (
                    (b * at(&symbols.x, i + n_i)).conj() * w,
                    (b * at(&symbols.y, i + n_i)).conj() * w,
                )
            };
            match &f2.groups {
                Some(spans) => {
                    for &(start, len, v) in spans {
                        let mut sx = Complex::new(T::zero(), T::zero());
                        let mut sy = sx;
                        for &(m, n_i, k, _) in &f2.terms[start..start + len] {
                            let (px, py) = prod2(m as isize, n_i as isize, k as isize);
                            sx += px;
                            sy += py;
                        }
                        ax += sx * v;
                        ay += sy * v;
                    }
                }
                None => {
                    for &(m, n_i, k, c) in &f2.terms {
                        let (px, py) = prod2(m as isize, n_i as isize, k as isize);
                        ax += px * c;
                        ay += py * c;
                    }
                }
            }
        }
        out.x[i as usize] = ax * scale;
        out.y[i as usize] = ay * scale;
    }
    Ok(out)
}

/// Second-order distortion with the evaluation strategy implied by the
/// tables (grouped when quantized).
pub fn so_distortion<T: Real>(
    symbols: &SymbolGrid<T>,
    cfg: &PredistortConfig<'_, T>,
) -> Result<SymbolGrid<T>> {
    let grouped = cfg.so_term1_table.map_or(false, |t| t.quantized);
    so_distortion_with(symbols, cfg, grouped)
}

/// Feed-forward predistortion: ã = a − Δu₁ − Δu₂ per slot and polarization,
/// using whichever orders have tables configured.
pub fn predistort<T: Real>(
    symbols: &SymbolGrid<T>,
    cfg: &PredistortConfig<'_, T>,
) -> Result<SymbolGrid<T>> {
    cfg.validate()?;
    if cfg.fo_table.is_none() && cfg.so_term1_table.is_none() {
        return Err(Error::Config("no coefficient tables configured".into()));
    }
    let mut out = symbols.clone();
    if cfg.fo_table.is_some() {
        let d = fo_distortion(symbols, cfg)?;
        for (o, v) in out.x.iter_mut().zip(&d.x) {
            *o -= *v;
        }
        for (o, v) in out.y.iter_mut().zip(&d.y) {
            *o -= *v;
        }
    }
    if cfg.so_term1_table.is_some() {
        let d = so_distortion(symbols, cfg)?;
        for (o, v) in out.x.iter_mut().zip(&d.x) {
            *o -= *v;
        }
        for (o, v) in out.y.iter_mut().zip(&d.y) {
            *o -= *v;
        }
    }
    Ok(out)
}
