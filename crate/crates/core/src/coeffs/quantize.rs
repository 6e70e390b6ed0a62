//! Uniform quantization of a coefficient table and combination of entries
//! sharing a quantized value, which is what turns table size into multiplier
//! count: symbols multiplying equal coefficients are summed first and
//! multiplied once.

use super::{CoeffIndex, CoeffTable};
use crate::error::{Error, Result};
use crate::Real;
use num_complex::Complex;
use std::collections::BTreeMap;

/// Default quantization step: |C(0,0,0)| / 32.
const DEFAULT_REF_DIV: f64 = 32.0;

/// Quantize each retained coefficient to an integer grid of step
/// `quant_step` (`None` picks |C(0,0,0)|/32) and group indices by quantized
/// value. Entries that quantize to exactly zero are dropped — they no longer
/// contribute a multiplication. Errors if the reference itself would vanish.
pub fn quantize_combine<T: Real>(
    table: &CoeffTable<T>,
    quant_step: Option<T>,
) -> Result<CoeffTable<T>> {
    if table.quantized {
        return Err(Error::Parameter("table is already quantized".into()));
    }
    let reference = table
        .reference()
        .ok_or_else(|| Error::Parameter("table has no (0,0,0) reference entry".into()))?;
    let q = match quant_step {
        Some(q) if q > T::zero() => q,
        Some(_) => return Err(Error::Parameter("quant_step must be positive".into())),
        None => reference.norm() / T::of(DEFAULT_REF_DIV),
    };
    let cell = |v: Complex<T>| -> (i64, i64) {
        (
            (v.re / q).round().to64() as i64,
            (v.im / q).round().to64() as i64,
        )
    };
    if cell(reference) == (0, 0) {
        return Err(Error::DegenerateQuantization);
    }
    let mut entries = BTreeMap::new();
    let mut groups: BTreeMap<(i64, i64), Vec<CoeffIndex>> = BTreeMap::new();
    for (&idx, &v) in &table.entries {
        let key = cell(v);
        if key == (0, 0) {
            continue;
        }
        let qv = Complex::new(T::of(key.0 as f64) * q, T::of(key.1 as f64) * q);
        entries.insert(idx, qv);
        groups.entry(key).or_default().push(idx);
    }
    Ok(CoeffTable {
        entries,
        quantized: true,
        quant_scale: Some(q),
        groups: Some(groups),
        ..table.clone()
    })
}
