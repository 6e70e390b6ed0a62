//! Command-line front end for the perturbative-predistortion link toolkit.

mod config;
mod export;
mod harness;
mod tables;

use clap::{Args, Parser, Subcommand};
use config::Config;
use harness::{techniques, Technique};
use pbnlc_core::complexity::count_M;
use std::path::PathBuf;

const FIGURES: &str = "figure reproduction:
  pbnlc build-tables --out-dir tables
  pbnlc run --tables-dir tables --out compare.csv         # SNR/BER vs launch power, all techniques
  pbnlc sweep-power --tables-dir tables --powers -6:8:1 --out power.csv
  pbnlc build-tables --out-dir tables --mu -50
  pbnlc sweep-mu --tables-dir tables --mu-grid -50,-45,-40,-35,-30 --out mu.csv
  pbnlc reach --spans 30:90:10 --ber 2e-2 --out reach.csv # distance at the FEC limit
  pbnlc complexity --tables-dir tables                    # real multiplications per symbol";

#[derive(Parser)]
#[command(
    name = "pbnlc",
    about = "Perturbation-based nonlinearity predistortion for coherent fiber links",
    after_help = FIGURES
)]
struct Cli {
    /// TOML config; omitted = reference 32 GBaud 16-QAM system over 8×80 km
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Args)]
struct TableDirArg {
    /// directory holding the stored coefficient tables
    #[arg(long, default_value = "tables")]
    tables_dir: PathBuf,
}

#[derive(Subcommand)]
enum Cmd {
    /// Integrate the coefficient tables and store them as .lut files
    BuildTables {
        #[arg(long, default_value = "tables")]
        out_dir: PathBuf,
        /// truncation threshold in dB relative to the (0,0,0) coefficient
        /// (overrides the config; build at the most permissive value any
        /// later run or sweep will ask for)
        #[arg(long, allow_hyphen_values = true)]
        mu: Option<f64>,
        /// quadrature panel factor (2 = baseline, 4 = doubled resolution)
        #[arg(long, default_value_t = 2)]
        panels: u32,
        /// subset of tables: fo, so-term1, so-term2
        #[arg(long, value_delimiter = ',')]
        orders: Option<Vec<String>>,
        /// rebuild even when a matching file exists
        #[arg(long)]
        force: bool,
    },
    /// Run the configured experiment and write result rows
    Run {
        #[command(flatten)]
        tables: TableDirArg,
        /// output file (.csv or .jsonl)
        #[arg(long)]
        out: PathBuf,
        /// run-time truncation threshold in dB (defaults to the config value)
        #[arg(long, allow_hyphen_values = true)]
        mu: Option<f64>,
    },
    /// Run with an overridden launch-power grid
    SweepPower {
        #[command(flatten)]
        tables: TableDirArg,
        #[arg(long)]
        out: PathBuf,
        /// grid as lo:hi:step or a comma list, in dBm
        #[arg(long, allow_hyphen_values = true)]
        powers: String,
        #[arg(long, allow_hyphen_values = true)]
        mu: Option<f64>,
    },
    /// Re-threshold the stored tables over a μ grid and rerun the
    /// table-driven techniques (fo/so) at each value
    SweepMu {
        #[command(flatten)]
        tables: TableDirArg,
        #[arg(long)]
        out: PathBuf,
        /// μ values in dB, e.g. -50,-45,-40,-35,-30 (each must be at or
        /// above the stored build threshold)
        #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
        mu_grid: Vec<f64>,
    },
    /// Scan span counts, rebuilding tables per distance, and interpolate the
    /// maximum reach at a BER limit per technique
    Reach {
        #[arg(long)]
        out: PathBuf,
        /// pre-FEC BER limit
        #[arg(long, default_value_t = 2e-2)]
        ber: f64,
        /// span-count grid as lo:hi:step or a comma list
        #[arg(long)]
        spans: String,
    },
    /// Print per-technique real-multiplication counts for the configured
    /// scenario (CSV on stdout)
    Complexity {
        /// read coefficient counts from stored tables; omitted = counts
        /// given explicitly
        #[arg(long)]
        tables_dir: Option<PathBuf>,
        /// explicit first-order coefficient count
        #[arg(long)]
        m_fo: Option<usize>,
        /// explicit total second-order coefficient count
        #[arg(long)]
        m_so: Option<usize>,
    },
}

fn parse_grid(s: &str) -> Result<Vec<f64>, String> {
    if let Some((lo, rest)) = s.split_once(':') {
        let (hi, step) = rest
            .split_once(':')
            .ok_or_else(|| format!("bad grid {s:?}: want lo:hi:step"))?;
        let (lo, hi, step): (f64, f64, f64) = (
            lo.parse().map_err(|_| format!("bad grid bound {lo:?}"))?,
            hi.parse().map_err(|_| format!("bad grid bound {hi:?}"))?,
            step.parse().map_err(|_| format!("bad grid step {step:?}"))?,
        );
        if !(step > 0.0) || hi < lo {
            return Err(format!("bad grid {s:?}: need lo <= hi and step > 0"));
        }
        let n = ((hi - lo) / step).round() as usize;
        return Ok((0..=n).map(|i| lo + i as f64 * step).filter(|&v| v <= hi + 1e-9).collect());
    }
    s.split(',')
        .map(|v| v.trim().parse().map_err(|_| format!("bad grid value {v:?}")))
        .collect()
}

fn main() {
    let cli = Cli::parse();
    if let Err(msg) = dispatch(&cli) {
        eprintln!(
            "{}",
            serde_json::json!({ "error": msg, "exit_code": 1 })
        );
        std::process::exit(1);
    }
}

fn dispatch(cli: &Cli) -> Result<(), String> {
    let cfg = Config::load(cli.config.as_deref())?;
    match &cli.cmd {
        Cmd::BuildTables {
            out_dir,
            mu,
            panels,
            orders,
            force,
        } => {
            let mu = mu.unwrap_or(cfg.table.mu_db);
            if mu >= 0.0 {
                return Err("truncation threshold must be negative dB".into());
            }
            let t0 = std::time::Instant::now();
            let built = tables::build_all(&cfg, out_dir, mu, *panels, orders.as_deref(), *force)?;
            for (tag, path, entries) in built {
                eprintln!(
                    "{tag}: {entries} entries at mu {mu} dB -> {} ({:.1} s)",
                    path.display(),
                    t0.elapsed().as_secs_f64()
                );
            }
            Ok(())
        }
        Cmd::Run { tables, out, mu } => {
            let mu = mu.unwrap_or(cfg.table.mu_db);
            let t = tables::load_for_run(&cfg, &tables.tables_dir, mu)?;
            let rows = harness::run_experiment(&cfg, &t, mu)?;
            export::write_rows(&rows, out)?;
            eprintln!("{} rows -> {}", rows.len(), out.display());
            Ok(())
        }
        Cmd::SweepPower {
            tables,
            out,
            powers,
            mu,
        } => {
            let mut cfg = cfg;
            cfg.experiment.launch_power_dbm = parse_grid(powers)?;
            let mu = mu.unwrap_or(cfg.table.mu_db);
            let t = tables::load_for_run(&cfg, &tables.tables_dir, mu)?;
            let rows = harness::run_experiment(&cfg, &t, mu)?;
            export::write_rows(&rows, out)?;
            eprintln!("{} rows -> {}", rows.len(), out.display());
            Ok(())
        }
        Cmd::SweepMu {
            tables,
            out,
            mu_grid,
        } => {
            if mu_grid.is_empty() {
                return Err("empty --mu-grid".into());
            }
            let mut cfg = cfg;
            cfg.experiment.scenario.retain(|s| s == "fo" || s == "so");
            if cfg.experiment.scenario.is_empty() {
                return Err("scenario has no table-driven technique (fo/so) to sweep".into());
            }
            let mut rows = Vec::new();
            for &mu in mu_grid {
                let t = tables::load_for_run(&cfg, &tables.tables_dir, mu)?;
                rows.extend(harness::run_experiment(&cfg, &t, mu)?);
                eprintln!("mu {mu} dB done");
            }
            export::write_rows(&rows, out)?;
            eprintln!("{} rows -> {}", rows.len(), out.display());
            Ok(())
        }
        Cmd::Reach { out, ber, spans } => {
            if !(*ber > 0.0 && *ber < 0.5) {
                return Err("BER limit must be in (0, 0.5)".into());
            }
            let span_grid: Vec<usize> = parse_grid(spans)?
                .into_iter()
                .map(|v| v.round() as usize)
                .filter(|&v| v > 0)
                .collect();
            if span_grid.len() < 2 {
                return Err("need at least two span counts to interpolate reach".into());
            }
            let techs = techniques(&cfg)?;
            let need_tables = techs.iter().any(|t| matches!(t, Technique::Fo | Technique::So));
            let need_so = techs.iter().any(|t| matches!(t, Technique::So));
            // per technique: (distance, best BER) per span count
            let mut curves: Vec<(Technique, Vec<(f64, f64)>)> =
                techs.iter().map(|&t| (t, Vec::new())).collect();
            for &n in &span_grid {
                let mut c = cfg.clone();
                c.link.n_spans = n;
                let t = if need_tables {
                    tables::build_in_memory(&c, c.table.mu_db, need_so)?
                } else {
                    harness::Tables::default()
                };
                let dist_km = c.link.n_spans as f64 * c.link.span_km;
                for (tech, best) in harness::best_ber_per_technique(&c, &t, c.table.mu_db)? {
                    curves
                        .iter_mut()
                        .find(|(t2, _)| *t2 == tech)
                        .expect("technique order is stable")
                        .1
                        .push((dist_km, best));
                }
                eprintln!("{n} spans done");
            }
            let e = &cfg.experiment;
            let bits = (2 * 4 * (e.n_symbols_per_frame - 2 * e.edge_guard)) as f64
                * e.n_frames as f64;
            let rows: Vec<harness::ReachRow> = curves
                .iter()
                .filter_map(|(tech, samples)| {
                    harness::interpolate_reach(samples, *ber, bits).map(|(d, lb)| {
                        harness::ReachRow {
                            technique: tech.label(),
                            distance_km: d,
                            ber_limit: *ber,
                            lower_bound: lb,
                        }
                    })
                })
                .collect();
            export::write_reach(&rows, out)?;
            eprintln!("{} rows -> {}", rows.len(), out.display());
            Ok(())
        }
        Cmd::Complexity {
            tables_dir,
            m_fo,
            m_so,
        } => {
            let (m_fo, m_so) = match tables_dir {
                Some(dir) => {
                    let t = tables::load_for_run(&cfg, dir, cfg.table.mu_db)?;
                    let fo = t.fo.as_ref().map(count_M);
                    let so = match (&t.fo, &t.t1) {
                        (Some(f), Some(t1)) => Some(
                            count_M(f)
                                + count_M(t1)
                                + t.t2
                                    .as_ref()
                                    .filter(|_| cfg.experiment.use_term2)
                                    .map_or(0, count_M),
                        ),
                        _ => None,
                    };
                    (fo, so)
                }
                None => (*m_fo, *m_so),
            };
            use pbnlc_core::complexity::{mult_dbp, mult_edc, mult_pbnlc, ComplexityParams};
            println!("technique,m_coefficients,mults_per_symbol");
            let n_spans = cfg.link.n_spans as u32;
            let fft = |steps: u32| ComplexityParams {
                n_steps: steps,
                n_spans,
                n_fft: harness::COMPLEXITY_N_FFT,
                n_samples: harness::COMPLEXITY_N_FFT,
            };
            for tech in techniques(&cfg)? {
                let (m, mults) = match tech {
                    Technique::Edc => (0, mult_edc(&fft(1))),
                    Technique::Dbp(s) => (0, mult_dbp(&fft(s as u32))),
                    Technique::Fo => match m_fo {
                        Some(m) => (m, mult_pbnlc(m)),
                        None => continue, // no table, no count
                    },
                    Technique::So => match m_so {
                        Some(m) => (m, mult_pbnlc(m)),
                        None => continue,
                    },
                };
                println!("{},{},{}", tech.label(), m, mults);
            }
            Ok(())
        }
    }
}
