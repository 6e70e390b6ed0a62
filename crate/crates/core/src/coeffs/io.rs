//! Binary LUT container for coefficient tables. Little-endian throughout,
//! CRC-32 trailer over everything that precedes it.
//!
//! Layout: magic `PBNLCLUT`, version u16, order u8, quantized u8, L_w u32,
//! mu_db f64, quant_scale f64 (0 when unquantized), pulse (t_sym, tau, p0,
//! rolloff as f64), link (alpha, beta2, gamma, span_length as f64, n_spans
//! u32, noise figure f64, wavelength f64), n_entries u64, then records of
//! (m, n, k as i16, re, im as f64), then the CRC-32.

use super::{CoeffIndex, CoeffOrder, CoeffTable};
use crate::error::{Error, Result};
use crate::model::{LinkConfig, PulseParams};
use crate::Real;
use num_complex::Complex;
use std::collections::BTreeMap;
use std::io::{Read, Write};
use std::path::Path;

const MAGIC: &[u8; 8] = b"PBNLCLUT";
const VERSION: u16 = 1;

fn order_code(o: CoeffOrder) -> u8 {
    match o {
        CoeffOrder::Fo => 0,
        CoeffOrder::SoTerm1 => 1,
        CoeffOrder::SoTerm2 => 2,
    }
}

fn order_from(code: u8) -> Result<CoeffOrder> {
    match code {
        0 => Ok(CoeffOrder::Fo),
        1 => Ok(CoeffOrder::SoTerm1),
        2 => Ok(CoeffOrder::SoTerm2),
        c => Err(Error::Format(format!("unknown order code {c}"))),
    }
}

pub fn save_table<T: Real>(table: &CoeffTable<T>, path: &Path) -> Result<()> {
    let mut buf: Vec<u8> = Vec::with_capacity(128 + table.entries.len() * 22);
    buf.extend_from_slice(MAGIC);
    buf.extend_from_slice(&VERSION.to_le_bytes());
    buf.push(order_code(table.order));
    buf.push(table.quantized as u8);
    buf.extend_from_slice(&table.l_w.to_le_bytes());
    buf.extend_from_slice(&table.mu_db.to64().to_le_bytes());
    let qs = table.quant_scale.map_or(0.0, |q| q.to64());
    buf.extend_from_slice(&qs.to_le_bytes());
    for v in [
        table.pulse.t_sym,
        table.pulse.tau,
        table.pulse.p0,
        table.pulse.rrc_rolloff,
        table.link.alpha,
        table.link.beta2,
        table.link.gamma,
        table.link.span_length,
    ] {
        buf.extend_from_slice(&v.to64().to_le_bytes());
    }
    buf.extend_from_slice(&(table.link.n_spans as u32).to_le_bytes());
    buf.extend_from_slice(&table.link.noise_figure_db.to64().to_le_bytes());
    buf.extend_from_slice(&table.link.center_wavelength.to64().to_le_bytes());
    buf.extend_from_slice(&(table.entries.len() as u64).to_le_bytes());
    for (idx, v) in &table.entries {
        buf.extend_from_slice(&idx.m.to_le_bytes());
        buf.extend_from_slice(&idx.n.to_le_bytes());
        buf.extend_from_slice(&idx.k.to_le_bytes());
        buf.extend_from_slice(&v.re.to64().to_le_bytes());
        buf.extend_from_slice(&v.im.to64().to_le_bytes());
    }
    let crc = crc32fast::hash(&buf);
    buf.extend_from_slice(&crc.to_le_bytes());
    let mut f = std::fs::File::create(path)?;
    f.write_all(&buf)?;
    Ok(())
}

struct Cursor<'a> {
    buf: &'a [u8],
    pos: usize,
}

impl<'a> Cursor<'a> {
    fn take(&mut self, n: usize) -> Result<&'a [u8]> {
        if self.pos + n > self.buf.len() {
            return Err(Error::Format("truncated table file".into()));
        }
        let s = &self.buf[self.pos..self.pos + n];
        self.pos += n;
        Ok(s)
    }
    fn u16(&mut self) -> Result<u16> {
        Ok(u16::from_le_bytes(self.take(2)?.try_into().unwrap()))
    }
    fn u32(&mut self) -> Result<u32> {
        Ok(u32::from_le_bytes(self.take(4)?.try_into().unwrap()))
    }
    fn u64(&mut self) -> Result<u64> {
        Ok(u64::from_le_bytes(self.take(8)?.try_into().unwrap()))
    }
    fn i16(&mut self) -> Result<i16> {
        Ok(i16::from_le_bytes(self.take(2)?.try_into().unwrap()))
    }
    fn u8(&mut self) -> Result<u8> {
        Ok(self.take(1)?[0])
    }
    fn f64(&mut self) -> Result<f64> {
        Ok(f64::from_le_bytes(self.take(8)?.try_into().unwrap()))
    }
}

pub fn load_table<T: Real>(path: &Path) -> Result<CoeffTable<T>> {
    let mut buf = Vec::new();
    std::fs::File::open(path)?.read_to_end(&mut buf)?;
    if buf.len() < MAGIC.len() + 4 {
        return Err(Error::Format("file too short for a coefficient table".into()));
    }
    let (body, tail) = buf.split_at(buf.len() - 4);
    let stored_crc = u32::from_le_bytes(tail.try_into().unwrap());
    if crc32fast::hash(body) != stored_crc {
        return Err(Error::Format("CRC mismatch: table file is corrupt".into()));
    }
    let mut c = Cursor { buf: body, pos: 0 };
    if c.take(8)? != MAGIC {
        return Err(Error::Format("not a coefficient table file".into()));
    }
    let version = c.u16()?;
    if version != VERSION {
        return Err(Error::Format(format!("unsupported table version {version}")));
    }
    let order = order_from(c.u8()?)?;
    let quantized = c.u8()? != 0;
    let l_w = c.u32()?;
    let mu_db = T::of(c.f64()?);
    let qs = c.f64()?;
    let quant_scale = if quantized { Some(T::of(qs)) } else { None };
    let pulse = PulseParams {
        t_sym: T::of(c.f64()?),
        tau: T::of(c.f64()?),
        p0: T::of(c.f64()?),
        rrc_rolloff: T::of(c.f64()?),
    };
    let link = LinkConfig {
        alpha: T::of(c.f64()?),
        beta2: T::of(c.f64()?),
        gamma: T::of(c.f64()?),
        span_length: T::of(c.f64()?),
        n_spans: c.u32()? as usize,
        noise_figure_db: T::of(c.f64()?),
        center_wavelength: T::of(c.f64()?),
    };
    let n_entries = c.u64()? as usize;
    let mut entries = BTreeMap::new();
    for _ in 0..n_entries {
        let idx = CoeffIndex {
            m: c.i16()?,
            n: c.i16()?,
            k: c.i16()?,
        };
        let v = Complex::new(T::of(c.f64()?), T::of(c.f64()?));
        entries.insert(idx, v);
    }
    if c.pos != body.len() {
        return Err(Error::Format("trailing bytes after table records".into()));
    }
    let groups = if quantized {
        let q = T::of(qs);
        if !(q > T::zero()) {
            return Err(Error::Format("quantized table with non-positive scale".into()));
        }
        let mut g: BTreeMap<(i64, i64), Vec<CoeffIndex>> = BTreeMap::new();
        for (&idx, v) in &entries {
            let key = (
                (v.re / q).round().to64() as i64,
                (v.im / q).round().to64() as i64,
            );
            g.entry(key).or_default().push(idx);
        }
        Some(g)
    } else {
        None
    };
    Ok(CoeffTable {
        order,
        l_w,
        mu_db,
        entries,
        quantized,
        quant_scale,
        groups,
        pulse,
        link,
    })
}
