//! Table lifecycle for the CLI: building the three coefficient tables at the
//! configured window/threshold, persisting them, and preparing run-time
//! (retruncated + quantized) variants.

use crate::config::Config;
use crate::harness::{retruncate, Tables};
use pbnlc_core::coeffs::{build_table, load_table, quantize_combine, save_table, CoeffOrder};
use pbnlc_core::{CoeffTable, QuadratureSpec};
use std::path::{Path, PathBuf};

pub const ORDERS: [(CoeffOrder, &str); 3] = [
    (CoeffOrder::Fo, "fo"),
    (CoeffOrder::SoTerm1, "so-term1"),
    (CoeffOrder::SoTerm2, "so-term2"),
];

/// Canonical file name for one table. The window and link geometry are part
/// of the name; the truncation threshold travels inside the file.
pub fn table_path(dir: &Path, tag: &str, cfg: &Config) -> PathBuf {
    dir.join(format!(
        "{tag}_lw{}_ns{}_sp{}.lut",
        cfg.table.l_w, cfg.link.n_spans, cfg.link.span_km
    ))
}

/// A stored table is only reusable if it was built for the same physics.
fn params_match(t: &CoeffTable, cfg: &Config) -> bool {
    let link = cfg.link_config();
    let pulse = cfg.pulse_params(t.pulse.p0);
    t.l_w == cfg.table.l_w
        && t.link.n_spans == link.n_spans
        && t.link.span_length == link.span_length
        && t.link.alpha == link.alpha
        && t.link.beta2 == link.beta2
        && t.pulse.t_sym == pulse.t_sym
        && t.pulse.tau == pulse.tau
        && t.pulse.rrc_rolloff == pulse.rrc_rolloff
}

/// Build one table at the given threshold and panel factor (2 = baseline).
pub fn build_one(
    order: CoeffOrder,
    cfg: &Config,
    mu_db: f64,
    panels: u32,
) -> Result<CoeffTable, String> {
    let quad = QuadratureSpec {
        panels_z: panels,
        panels_s: panels,
        ..QuadratureSpec::default()
    };
    // table values are power-independent kernels; p0 here only has to pass
    // validation
    let pulse = cfg.pulse_params(1e-3);
    build_table(order, cfg.table.l_w, mu_db, &pulse, &cfg.link_config(), &quad)
        .map_err(|e| e.to_string())
}

/// Build (or reuse) and persist the requested tables; returns per-table
/// (tag, path, entry count). An existing file is reused when its physics
/// match and its threshold is at least as permissive as `mu_db`.
pub fn build_all(
    cfg: &Config,
    dir: &Path,
    mu_db: f64,
    panels: u32,
    only: Option<&[String]>,
    force: bool,
) -> Result<Vec<(String, PathBuf, usize)>, String> {
    std::fs::create_dir_all(dir).map_err(|e| format!("create {}: {e}", dir.display()))?;
    let mut out = Vec::new();
    for (order, tag) in ORDERS {
        if let Some(filter) = only {
            if !filter.iter().any(|f| f == tag) {
                continue;
            }
        }
        let path = table_path(dir, tag, cfg);
        let reusable = if path.exists() && !force {
            match load_table::<f64>(&path) {
                Ok(t) if params_match(&t, cfg) && t.mu_db <= mu_db => Some(t),
                _ => None,
            }
        } else {
            None
        };
        let table = match reusable {
            Some(t) => t,
            None => {
                let t = build_one(order, cfg, mu_db, panels)?;
                save_table(&t, &path).map_err(|e| format!("{}: {e}", path.display()))?;
                t
            }
        };
        out.push((tag.to_string(), path, table.len()));
    }
    Ok(out)
}

fn quantize_for_run(cfg: &Config, raw: CoeffTable) -> Result<CoeffTable, String> {
    if cfg.table.quant_fraction <= 0.0 {
        return Ok(raw);
    }
    let step = raw
        .reference()
        .ok_or("table lost its reference entry")?
        .norm()
        * cfg.table.quant_fraction;
    quantize_combine(&raw, Some(step)).map_err(|e| e.to_string())
}

/// Load whichever stored tables exist and prepare them for a run at
/// threshold `mu_db`: verify physics, retruncate (the stored threshold must
/// be equal or more permissive), and quantize/combine with the configured
/// step fraction.
pub fn load_for_run(cfg: &Config, dir: &Path, mu_db: f64) -> Result<Tables, String> {
    let mut tables = Tables::default();
    for (_, tag) in ORDERS {
        let path = table_path(dir, tag, cfg);
        if !path.exists() {
            continue;
        }
        let raw = load_table(&path).map_err(|e| format!("{}: {e}", path.display()))?;
        if !params_match(&raw, cfg) {
            return Err(format!(
                "{} was built for different link/pulse parameters; rerun build-tables --force",
                path.display()
            ));
        }
        let cut = retruncate(&raw, mu_db)?;
        let q = quantize_for_run(cfg, cut)?;
        match tag {
            "fo" => tables.fo = Some(q),
            "so-term1" => tables.t1 = Some(q),
            _ => tables.t2 = Some(q),
        }
    }
    Ok(tables)
}

/// In-memory tables for a throwaway link variant (used by reach scans where
/// every candidate distance needs its own coefficients).
pub fn build_in_memory(cfg: &Config, mu_db: f64, need_so: bool) -> Result<Tables, String> {
    let fo = quantize_for_run(cfg, build_one(CoeffOrder::Fo, cfg, mu_db, 2)?)?;
    let mut tables = Tables {
        fo: Some(fo),
        ..Default::default()
    };
    if need_so {
        tables.t1 = Some(quantize_for_run(
            cfg,
            build_one(CoeffOrder::SoTerm1, cfg, mu_db, 2)?,
        )?);
        if cfg.experiment.use_term2 {
            tables.t2 = Some(quantize_for_run(
                cfg,
                build_one(CoeffOrder::SoTerm2, cfg, mu_db, 2)?,
            )?);
        }
    }
    Ok(tables)
}
