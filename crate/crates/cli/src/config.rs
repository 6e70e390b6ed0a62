//! Layered experiment configuration: built-in defaults (the reference
//! simulation parameters), overridden by an optional TOML file, overridden by
//! command-line flags.

use pbnlc_core::model::alpha_from_db_per_km;
use pbnlc_core::{LinkConfig, PulseParams};
use serde::{Deserialize, Serialize};
use std::path::Path;

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PulseSection {
    /// symbol rate in GBd
    pub symbol_rate_gbd: f64,
    /// Gaussian width as a fraction of the symbol period
    pub tau_fraction: f64,
    pub rrc_rolloff: f64,
}

impl Default for PulseSection {
    fn default() -> Self {
        PulseSection {
            symbol_rate_gbd: 32.0,
            tau_fraction: 0.5,
            rrc_rolloff: 0.1,
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct LinkSection {
    pub attenuation_db_per_km: f64,
    /// group-velocity dispersion in ps²/km
    pub beta2_ps2_km: f64,
    /// nonlinear coefficient in 1/(W·km)
    pub gamma_per_w_km: f64,
    pub span_km: f64,
    pub n_spans: usize,
    pub noise_figure_db: f64,
    pub wavelength_nm: f64,
}

impl Default for LinkSection {
    fn default() -> Self {
        LinkSection {
            attenuation_db_per_km: 0.2,
            beta2_ps2_km: -20.47,
            gamma_per_w_km: 1.22,
            span_km: 80.0,
            n_spans: 8,
            noise_figure_db: 5.5,
            wavelength_nm: 1550.0,
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TableSection {
    /// symbol window size (predistortion sums run over ±l_w/2)
    pub l_w: u32,
    /// truncation threshold relative to C(0,0,0), dB
    pub mu_db: f64,
    /// quantization step as a fraction of |C(0,0,0)|; 0 disables quantization
    pub quant_fraction: f64,
}

impl Default for TableSection {
    fn default() -> Self {
        TableSection {
            l_w: 100,
            mu_db: -40.0,
            quant_fraction: 1.0 / 32.0,
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExperimentSection {
    /// techniques to simulate: edc | fo | so | dbp<steps>
    pub scenario: Vec<String>,
    pub launch_power_dbm: Vec<f64>,
    pub n_frames: u32,
    pub n_symbols_per_frame: usize,
    pub seed: u64,
    pub ase_noise: bool,
    /// oversampling for the forward split-step channel
    pub forward_sps: usize,
    /// forward split-step size in km
    pub forward_step_km: f64,
    /// oversampling for digital back-propagation
    pub dbp_sps: usize,
    /// pulse-shaping filter span in symbols
    pub rrc_span_symbols: usize,
    /// symbols dropped from each frame edge before counting errors
    pub edge_guard: usize,
    /// scaling factors applied to the first-order distortion during tuning
    pub epsilon_fo_grid: Vec<f64>,
    /// scaling factors applied to the second-order distortion during tuning
    pub epsilon_so_grid: Vec<f64>,
    /// include the conjugate-paired second-order term
    pub use_term2: bool,
}

impl Default for ExperimentSection {
    fn default() -> Self {
        ExperimentSection {
            scenario: vec!["edc".into(), "fo".into(), "so".into(), "dbp2".into()],
            launch_power_dbm: vec![-4.0, -2.0, 0.0, 2.0, 4.0, 6.0],
            n_frames: 4,
            n_symbols_per_frame: 1 << 16,
            seed: 7,
            ase_noise: true,
            forward_sps: 8,
            forward_step_km: 0.5,
            dbp_sps: 2,
            rrc_span_symbols: 32,
            edge_guard: 64,
            epsilon_fo_grid: vec![0.6, 0.8, 1.0, 1.2],
            epsilon_so_grid: vec![0.6, 0.8, 1.0, 1.2],
            use_term2: true,
        }
    }
}

#[derive(Debug, Clone, Default, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Config {
    pub pulse: PulseSection,
    pub link: LinkSection,
    pub table: TableSection,
    pub experiment: ExperimentSection,
}

impl Config {
    pub fn load(path: Option<&Path>) -> Result<Config, String> {
        match path {
            None => Ok(Config::default()),
            Some(p) => {
                let text = std::fs::read_to_string(p)
                    .map_err(|e| format!("cannot read config {}: {e}", p.display()))?;
                toml::from_str(&text).map_err(|e| format!("config parse error: {e}"))
            }
        }
    }

    pub fn t_sym(&self) -> f64 {
        1.0 / (self.pulse.symbol_rate_gbd * 1e9)
    }

    pub fn pulse_params(&self, launch_power_w: f64) -> PulseParams {
        PulseParams {
            t_sym: self.t_sym(),
            tau: self.pulse.tau_fraction * self.t_sym(),
            p0: launch_power_w,
            rrc_rolloff: self.pulse.rrc_rolloff,
        }
    }

    pub fn link_config(&self) -> LinkConfig {
        LinkConfig {
            alpha: alpha_from_db_per_km(self.link.attenuation_db_per_km),
            beta2: self.link.beta2_ps2_km * 1e-27, // ps²/km -> s²/m
            gamma: self.link.gamma_per_w_km * 1e-3,
            span_length: self.link.span_km * 1e3,
            n_spans: self.link.n_spans,
            noise_figure_db: self.link.noise_figure_db,
            center_wavelength: self.link.wavelength_nm * 1e-9,
        }
    }
}

pub fn dbm_to_watts(dbm: f64) -> f64 {
    1e-3 * 10f64.powf(dbm / 10.0)
}
