//! TOML scenario files.
//!
//! ```toml
//! [sim]                     # every key optional
//! carrier_hz = 5e9
//! stationarity_s = 0.45
//! tx_power_dbm = 37.5
//! noise_psd_dbm_hz = -174.0
//! taps = 8
//!
//! [[fixed]]                 # optional; defaults to V22 V42 V64 V66 V88
//! rho_db = -3.0
//! dpf = 6
//! dpt = 4
//!
//! [[stage]]
//! name = "hilly"
//! duration_s = 120.0
//! v_start_kmh = 300.0
//! v_end_kmh = 200.0
//! d_start_m = 17000.0
//! d_end_m = 11900.0
//! tau = { kind = "constant", ns = 1000.0 }
//! ```
//!
//! A stage's `tau` is either `{ kind = "constant", ns = .. }` or
//! `{ kind = "uniform", min_ns = .., max_ns = .. }`.

use serde::{Deserialize, Serialize};

use super::{default_fixed_configs, default_scenario, ScenarioStage, SimParams};
use crate::error::{Error, Result};
use crate::grid::PilotConfig;

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SimSection {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub carrier_hz: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub stationarity_s: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub tx_power_dbm: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub noise_psd_dbm_hz: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub taps: Option<usize>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FixedEntry {
    pub rho_db: f64,
    pub dpf: usize,
    pub dpt: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioFile {
    #[serde(default)]
    pub sim: SimSection,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub fixed: Option<Vec<FixedEntry>>,
    pub stage: Vec<ScenarioStage<f64>>,
}

impl ScenarioFile {
    /// The built-in three-stage flight with default settings.
    pub fn builtin() -> Self {
        Self {
            sim: SimSection::default(),
            fixed: None,
            stage: default_scenario(),
        }
    }

    pub fn to_toml(&self) -> Result<String> {
        toml::to_string(self).map_err(|e| Error::Parse(e.to_string()))
    }

    /// Overrides the settings given in the `[sim]` table.
    pub fn apply(&self, params: &mut SimParams<f64>) -> Result<()> {
        let s = &self.sim;
        if let Some(v) = s.carrier_hz {
            params.carrier_hz = v;
        }
        if let Some(v) = s.stationarity_s {
            params.stationarity_s = v;
        }
        if let Some(v) = s.tx_power_dbm {
            params.link_budget.tx_power_dbm = v;
        }
        if let Some(v) = s.noise_psd_dbm_hz {
            params.link_budget.noise_psd_dbm_hz = v;
        }
        if let Some(v) = s.taps {
            params.n_taps = v;
        }
        if !(params.carrier_hz > 0.0) || !(params.stationarity_s > 0.0) || params.n_taps == 0 {
            return Err(Error::Config(
                "carrier, stationarity and tap count must be positive".into(),
            ));
        }
        Ok(())
    }

    pub fn fixed_configs(&self) -> Result<Vec<PilotConfig<f64>>> {
        match &self.fixed {
            None => Ok(default_fixed_configs()),
            Some(entries) => entries
                .iter()
                .map(|e| PilotConfig::from_db(e.rho_db, e.dpf, e.dpt))
                .collect(),
        }
    }
}

pub fn parse_scenario(text: &str) -> Result<ScenarioFile> {
    let file: ScenarioFile = toml::from_str(text).map_err(|e| Error::Parse(e.to_string()))?;
    if file.stage.is_empty() {
        return Err(Error::Config(
            "scenario needs at least one [[stage]]".into(),
        ));
    }
    Ok(file)
}
