//! First- and second-order nonlinearity coefficient tables: integrands,
//! adaptive quadrature, truncation, quantization/combination, and the binary
//! LUT container.

pub mod chain;
pub mod io;
pub mod quad;
pub mod quantize;

pub use io::{load_table, save_table};
pub use quantize::quantize_combine;

use crate::error::{Error, Result};
use crate::model::{LinkConfig, PulseParams};
use crate::Real;
use chain::{ChainKind, ChainParams};
use num_complex::Complex;
use std::collections::BTreeMap;
use std::str::FromStr;

/// Which coefficient family a table holds.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CoeffOrder {
    /// First-order triplet coefficients C(m, n); k is unused.
    Fo,
    /// Second-order quintuplet coefficients, |a_k|²-paired bracket.
    SoTerm1,
    /// Second-order quintuplet coefficients, a_k·a_{−k}-paired bracket.
    SoTerm2,
}

impl CoeffOrder {
    pub(crate) fn chain_kind(self) -> ChainKind {
        match self {
            CoeffOrder::Fo => ChainKind::Fo,
            CoeffOrder::SoTerm1 => ChainKind::SoTerm1,
            CoeffOrder::SoTerm2 => ChainKind::SoTerm2,
        }
    }
}

impl std::fmt::Display for CoeffOrder {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            CoeffOrder::Fo => "fo",
            CoeffOrder::SoTerm1 => "so-term1",
            CoeffOrder::SoTerm2 => "so-term2",
        })
    }
}

impl FromStr for CoeffOrder {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "fo" => Ok(CoeffOrder::Fo),
            "so-term1" => Ok(CoeffOrder::SoTerm1),
            "so-term2" => Ok(CoeffOrder::SoTerm2),
            other => Err(Error::Parameter(format!("unknown coefficient order {other:?}"))),
        }
    }
}

/// Pulse-index triple; `k` stays 0 for first-order entries.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct CoeffIndex {
    pub m: i16,
    pub n: i16,
    pub k: i16,
}

impl CoeffIndex {
    pub fn new(m: i32, n: i32, k: i32) -> Self {
        CoeffIndex {
            m: m as i16,
            n: n as i16,
            k: k as i16,
        }
    }
}

/// Quadrature rule selector (only composite 8-point Gauss–Legendre is
/// implemented; the field exists so LUT files are self-describing).
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum QuadRule {
    CompositeGl8,
}

impl FromStr for QuadRule {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "gl8" | "composite-gl8" => Ok(QuadRule::CompositeGl8),
            other => Err(Error::Parameter(format!("unknown quadrature rule {other:?}"))),
        }
    }
}

/// Quadrature resolution: `panels_z`/`panels_s` are per-axis resolution
/// factors (2 = baseline, 4 = doubled, …) on top of the adaptive per-block
/// phase-budgeted panel counts; `rel_tol` is the Richardson stopping
/// tolerance used by the single-coefficient entry points.
#[derive(Debug, Clone, Copy)]
pub struct QuadratureSpec<T: Real> {
    pub rule: QuadRule,
    pub panels_z: u32,
    pub panels_s: u32,
    pub rel_tol: T,
}

impl<T: Real> Default for QuadratureSpec<T> {
    fn default() -> Self {
        QuadratureSpec {
            rule: QuadRule::CompositeGl8,
            panels_z: 2,
            panels_s: 2,
            rel_tol: T::of(1e-6),
        }
    }
}

impl<T: Real> QuadratureSpec<T> {
    pub fn validate(&self) -> Result<()> {
        if self.panels_z < 2 || self.panels_s < 2 || self.panels_z % 2 != 0 || self.panels_s % 2 != 0
        {
            return Err(Error::Parameter(
                "panel factors must be even and at least 2".into(),
            ));
        }
        if !(self.rel_tol > T::zero()) {
            return Err(Error::Parameter("rel_tol must be positive".into()));
        }
        Ok(())
    }

    pub fn doubled(&self) -> Self {
        QuadratureSpec {
            panels_z: self.panels_z * 2,
            panels_s: self.panels_s * 2,
            ..*self
        }
    }

    pub(crate) fn mults(&self) -> (u32, u32) {
        (self.panels_z / 2, self.panels_s / 2)
    }
}

/// Sparse coefficient tensor with truncation/quantization metadata. Groups
/// map a quantized (re, im) integer pair to the index list sharing that value.
#[derive(Debug, Clone)]
pub struct CoeffTable<T: Real> {
    pub order: CoeffOrder,
    pub l_w: u32,
    pub mu_db: T,
    pub entries: BTreeMap<CoeffIndex, Complex<T>>,
    pub quantized: bool,
    pub quant_scale: Option<T>,
    pub groups: Option<BTreeMap<(i64, i64), Vec<CoeffIndex>>>,
    pub pulse: PulseParams<T>,
    pub link: LinkConfig<T>,
}

impl<T: Real> CoeffTable<T> {
    /// The reference coefficient: index (0,0,0).
    pub fn reference(&self) -> Option<Complex<T>> {
        self.entries.get(&CoeffIndex::new(0, 0, 0)).copied()
    }

    pub fn get(&self, m: i32, n: i32, k: i32) -> Option<Complex<T>> {
        self.entries.get(&CoeffIndex::new(m, n, k)).copied()
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    /// Number of distinct multiplications the table costs per output symbol
    /// term: quantized group count if combined, else the raw entry count.
    pub fn significant_count(&self) -> usize {
        match &self.groups {
            Some(g) => g.len(),
            None => self.entries.len(),
        }
    }
}

fn chain_params<T: Real>(pulse: &PulseParams<T>, link: &LinkConfig<T>) -> ChainParams<T> {
    ChainParams {
        t_sym: pulse.t_sym,
        tau: pulse.tau,
        beta2: link.beta2,
        alpha: link.alpha,
        span_length: link.span_length,
    }
}

fn check_domain<T: Real>(z: T, s: T, link: &LinkConfig<T>) -> Result<()> {
    if s < T::zero() || s > z || z > link.total_length() {
        return Err(Error::Parameter(format!(
            "integration point outside 0 <= s <= z <= L: z={z}, s={s}"
        )));
    }
    Ok(())
}

fn finite_or_err<T: Real>(
    v: Complex<T>,
    z: T,
    s: T,
    idx: CoeffIndex,
) -> Result<Complex<T>> {
    if v.re.is_finite() && v.im.is_finite() {
        Ok(v)
    } else {
        Err(Error::NumericDomain {
            what: "integrand evaluated to a non-finite value",
            z: z.to64(),
            s: s.to64(),
            m: idx.m as i32,
            n: idx.n as i32,
            k: idx.k as i32,
        })
    }
}

/// Integrand of the |a_k|²-paired second-order double integral at one (z, s).
pub fn term1_integrand<T: Real>(
    z: T,
    s: T,
    idx: CoeffIndex,
    pulse: &PulseParams<T>,
    link: &LinkConfig<T>,
) -> Result<Complex<T>> {
    check_domain(z, s, link)?;
    let node = chain::node_eval(ChainKind::SoTerm1, z, s, &chain_params(pulse, link))?;
    finite_or_err(node.value(idx.m as i32, idx.n as i32, idx.k as i32), z, s, idx)
}

/// Integrand of the a_k·a_{−k}-paired second-order double integral.
pub fn term2_integrand<T: Real>(
    z: T,
    s: T,
    idx: CoeffIndex,
    pulse: &PulseParams<T>,
    link: &LinkConfig<T>,
) -> Result<Complex<T>> {
    check_domain(z, s, link)?;
    let node = chain::node_eval(ChainKind::SoTerm2, z, s, &chain_params(pulse, link))?;
    finite_or_err(node.value(idx.m as i32, idx.n as i32, idx.k as i32), z, s, idx)
}

/// Integrand of the first-order triplet integral in the dispersion-
/// compensated frame; `z` only bounds the domain (the integrand itself is
/// z-free once the outer dispersion is compensated).
pub fn fo_integrand<T: Real>(
    s: T,
    m: i32,
    n: i32,
    pulse: &PulseParams<T>,
    link: &LinkConfig<T>,
    z: T,
) -> Result<Complex<T>> {
    check_domain(z, s, link)?;
    let node = chain::node_eval(ChainKind::Fo, T::zero().max(s), s, &chain_params(pulse, link))?;
    finite_or_err(node.value(m, n, 0), z, s, CoeffIndex::new(m, n, 0))
}

/// One second-order coefficient via the adaptive engine, with a Richardson
/// panel-doubling convergence check at `quad.rel_tol`.
pub fn so_coeff<T: Real>(
    order: CoeffOrder,
    idx: CoeffIndex,
    pulse: &PulseParams<T>,
    link: &LinkConfig<T>,
    quad: &QuadratureSpec<T>,
) -> Result<Complex<T>> {
    if order == CoeffOrder::Fo {
        return Err(Error::Parameter("use fo_coeff for first-order entries".into()));
    }
    quad.validate()?;
    let (m, n, k) = (idx.m as i32, idx.n as i32, idx.k as i32);
    let kk = k.unsigned_abs() as i32;
    let (mz, ms) = quad.mults();
    let mut base = quad::Engine::new(order, pulse, link, kk, mz, ms)?;
    let a = base.row(m, n, T::neg_infinity())?[(kk + k) as usize];
    let mut dbl = quad::Engine::new(order, pulse, link, kk, mz * 2, ms * 2)?;
    let b = dbl.row(m, n, T::neg_infinity())?[(kk + k) as usize];
    converged(a, b, quad.rel_tol, idx)?;
    Ok(a)
}

/// One first-order coefficient (t = 0, z = L evaluation of the single
/// integral), with the same convergence contract as `so_coeff`.
pub fn fo_coeff<T: Real>(
    m: i32,
    n: i32,
    pulse: &PulseParams<T>,
    link: &LinkConfig<T>,
    quad: &QuadratureSpec<T>,
) -> Result<Complex<T>> {
    quad.validate()?;
    let (_, ms) = quad.mults();
    let mut base = quad::FoEngine::new(pulse, link, ms)?;
    let a = base.value(m, n, T::neg_infinity())?;
    let mut dbl = quad::FoEngine::new(pulse, link, ms * 2)?;
    let b = dbl.value(m, n, T::neg_infinity())?;
    converged(a, b, quad.rel_tol, CoeffIndex::new(m, n, 0))?;
    Ok(a)
}

fn converged<T: Real>(a: Complex<T>, b: Complex<T>, rel_tol: T, idx: CoeffIndex) -> Result<()> {
    let denom = a.norm().max(b.norm());
    if denom == T::zero() || denom < T::of(1e-280) {
        return Ok(()); // both deep under any retention threshold
    }
    let rel = (a - b).norm() / denom;
    if rel < rel_tol {
        Ok(())
    } else {
        Err(Error::Quadrature {
            m: idx.m as i32,
            n: idx.n as i32,
            k: idx.k as i32,
            achieved: rel.to64(),
            requested: rel_tol.to64(),
        })
    }
}

/// Build a truncated coefficient table: keep (m,n,k) in the L_w window with
/// 20·log10(|C|/|C(0,0,0)|) ≥ mu_db. The build exploits the exact m↔n and
/// (m,n,k) → (−m,−n,−k) symmetries of the integrand, so only a quarter of the
/// index space is integrated; mirrored entries are bit-identical.
pub fn build_table<T: Real>(
    order: CoeffOrder,
    l_w: u32,
    mu_db: T,
    pulse: &PulseParams<T>,
    link: &LinkConfig<T>,
    quad: &QuadratureSpec<T>,
) -> Result<CoeffTable<T>> {
    if l_w == 0 || l_w % 2 != 0 {
        return Err(Error::Parameter("window L_w must be positive and even".into()));
    }
    if mu_db >= T::zero() {
        return Err(Error::Parameter("truncation threshold mu_db must be negative".into()));
    }
    quad.validate()?;
    pulse.validate()?;
    link.validate()?;
    let half = (l_w / 2) as i32;
    let mut entries = BTreeMap::new();
    let thresh_of = |reference: T| reference * T::of(10.0).powf(mu_db / T::of(20.0));

    if order == CoeffOrder::Fo {
        let (_, ms) = quad.mults();
        let mut eng = quad::FoEngine::new(pulse, link, ms)?;
        let c000 = eng.value(0, 0, T::neg_infinity())?;
        let thresh = thresh_of(c000.norm());
        let ln_eps = thresh.ln();
        for m in -half..=half {
            for n in m..=half {
                if (m, n) < (-n, -m) {
                    continue; // covered by the negated row
                }
                let v = eng.value(m, n, ln_eps)?;
                if v.norm() >= thresh {
                    for (a, b) in [(m, n), (n, m), (-m, -n), (-n, -m)] {
                        entries.insert(CoeffIndex::new(a, b, 0), v);
                    }
                }
            }
        }
    } else {
        let (mz, ms) = quad.mults();
        let mut eng = quad::Engine::new(order, pulse, link, half, mz, ms)?;
        let c000 = eng.row(0, 0, T::neg_infinity())?[half as usize];
        let thresh = thresh_of(c000.norm());
        let ln_eps = thresh.ln();
        for m in -half..=half {
            for n in m..=half {
                if (m, n) < (-n, -m) {
                    continue;
                }
                let row = eng.row(m, n, ln_eps)?;
                for k in -half..=half {
                    let v = row[(k + half) as usize];
                    if v.norm() >= thresh {
                        for (a, b, c) in [(m, n, k), (n, m, k), (-m, -n, -k), (-n, -m, -k)] {
                            entries.insert(CoeffIndex::new(a, b, c), v);
                        }
                    }
                }
            }
        }
    }
    Ok(CoeffTable {
        order,
        l_w,
        mu_db,
        entries,
        quantized: false,
        quant_scale: None,
        groups: None,
        pulse: *pulse,
        link: *link,
    })
}
