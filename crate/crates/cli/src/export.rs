//! Result rows and their CSV / JSON-lines serialization. Column order is
//! fixed; float formatting uses Rust's shortest-round-trip representation so
//! identical rows always serialize to identical bytes.

use serde::{Deserialize, Serialize};
use std::io::Write;
use std::path::Path;

/// One experiment outcome. The CSV column order is exactly the field order
/// here; `timestamp` is deliberately not part of the row.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OutRow {
    pub technique: String,
    pub distance_km: f64,
    pub launch_power_dbm: f64,
    pub mu_db: f64,
    pub epsilon_fo: f64,
    pub epsilon_so: f64,
    pub ber: f64,
    pub snr_db: f64,
    pub q_db: f64,
    pub mults_per_symbol: f64,
    pub snr_capped: bool,
}

pub const CSV_HEADER: &str = "technique,distance_km,launch_power_dbm,mu_db,epsilon_fo,epsilon_so,ber,snr_db,q_db,mults_per_symbol,snr_capped";

fn fmt_f64(v: f64) -> String {
    if v.is_nan() {
        "nan".into()
    } else {
        format!("{v}")
    }
}

pub fn to_csv(rows: &[OutRow]) -> String {
    let mut out = String::from(CSV_HEADER);
    out.push('\n');
    for r in rows {
        out.push_str(&format!(
            "{},{},{},{},{},{},{},{},{},{},{}\n",
            r.technique,
            fmt_f64(r.distance_km),
            fmt_f64(r.launch_power_dbm),
            fmt_f64(r.mu_db),
            fmt_f64(r.epsilon_fo),
            fmt_f64(r.epsilon_so),
            fmt_f64(r.ber),
            fmt_f64(r.snr_db),
            fmt_f64(r.q_db),
            fmt_f64(r.mults_per_symbol),
            r.snr_capped,
        ));
    }
    out
}

pub fn to_jsonl(rows: &[OutRow]) -> Result<String, String> {
    let mut out = String::new();
    for r in rows {
        out.push_str(&serde_json::to_string(r).map_err(|e| e.to_string())?);
        out.push('\n');
    }
    Ok(out)
}

#[cfg(test)]
pub fn parse_jsonl(text: &str) -> Result<Vec<OutRow>, String> {
    text.lines()
        .filter(|l| !l.trim().is_empty())
        .map(|l| serde_json::from_str(l).map_err(|e| e.to_string()))
        .collect()
}

/// Write rows to `path`; the format follows the extension (`.csv` or
/// `.jsonl`), defaulting to CSV.
pub fn write_rows(rows: &[OutRow], path: &Path) -> Result<(), String> {
    let text = match path.extension().and_then(|e| e.to_str()) {
        Some("jsonl") | Some("ndjson") => to_jsonl(rows)?,
        _ => to_csv(rows),
    };
    let mut f = std::fs::File::create(path)
        .map_err(|e| format!("cannot create {}: {e}", path.display()))?;
    f.write_all(text.as_bytes())
        .map_err(|e| format!("write {}: {e}", path.display()))
}

pub const REACH_CSV_HEADER: &str = "technique,distance_km,ber_limit,lower_bound";

/// Write reach rows (CSV or JSONL by extension, like `write_rows`).
pub fn write_reach(rows: &[crate::harness::ReachRow], path: &Path) -> Result<(), String> {
    let text = match path.extension().and_then(|e| e.to_str()) {
        Some("jsonl") | Some("ndjson") => {
            let mut out = String::new();
            for r in rows {
                out.push_str(&serde_json::to_string(r).map_err(|e| e.to_string())?);
                out.push('\n');
            }
            out
        }
        _ => {
            let mut out = String::from(REACH_CSV_HEADER);
            out.push('\n');
            for r in rows {
                out.push_str(&format!(
                    "{},{},{},{}\n",
                    r.technique,
                    fmt_f64(r.distance_km),
                    fmt_f64(r.ber_limit),
                    r.lower_bound
                ));
            }
            out
        }
    };
    std::fs::write(path, text).map_err(|e| format!("write {}: {e}", path.display()))
}
