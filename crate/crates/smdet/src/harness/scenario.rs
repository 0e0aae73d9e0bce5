//! Scenario files: the JSON schema describing one simulation campaign.

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::config::{ModKind, SystemConfig};
use crate::corrmodel::{SpatialModel, TemporalModel};
use crate::detectors::{DetectorKind, EstimatorKind};
use crate::linalg::{CMat, C64};
use crate::smcodec::CandidateMode;
use crate::{Error, Result};

/// Spatial-correlation entry in a scenario file.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum SpatialSpec {
    /// Uniform linear arrays with the given antenna spacing in wavelengths.
    Bessel { spacing: f64 },
    /// Exponential profiles r^|i-j| (receive) and t^|i-j| (transmit).
    Exponential { r: f64, t: f64 },
    /// Explicit per-side matrices as nested [re, im] arrays.
    ExplicitKron {
        phi_t: Vec<Vec<[f64; 2]>>,
        phi_r: Vec<Vec<[f64; 2]>>,
    },
}

impl SpatialSpec {
    pub fn to_model(&self) -> Result<SpatialModel> {
        Ok(match self {
            SpatialSpec::Bessel { spacing } => SpatialModel::Bessel { spacing: *spacing },
            SpatialSpec::Exponential { r, t } => SpatialModel::Exponential { r: *r, t: *t },
            SpatialSpec::ExplicitKron { phi_t, phi_r } => SpatialModel::ExplicitKron {
                phi_t: parse_matrix(phi_t)?,
                phi_r: parse_matrix(phi_r)?,
            },
        })
    }
}

fn parse_matrix(rows: &[Vec<[f64; 2]>]) -> Result<CMat> {
    let n = rows.len();
    if n == 0 || rows.iter().any(|r| r.len() != n) {
        return Err(Error::Parse("explicit matrix must be square".into()));
    }
    Ok(CMat::from_fn(n, n, |i, j| {
        C64::new(rows[i][j][0], rows[i][j][1])
    }))
}

/// What the receiver knows about the spatial correlation.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum StatsMode {
    /// Full genie knowledge of Phi.
    GeniePhi,
    /// Per-window blind estimate from the three pilot blocks.
    EstimatedPhi,
    /// Transmit side known, receive side assumed uncorrelated.
    GeniePhiTOnly,
    /// Receive side known, transmit side assumed uncorrelated.
    GeniePhiROnly,
}

/// Stop rule for one SNR point: whichever triggers first.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct StopRule {
    pub min_errors: u64,
    pub max_bits: u64,
}

impl Default for StopRule {
    fn default() -> Self {
        Self {
            min_errors: 200,
            max_bits: 20_000_000,
        }
    }
}

fn default_symbol_power() -> f64 {
    1.0
}
fn default_pilot_power() -> f64 {
    1.0
}
fn default_temporal() -> TemporalModel {
    TemporalModel::Jakes
}
fn default_candidate_mode() -> CandidateMode {
    CandidateMode::Sm
}

/// One simulation campaign: the link, the candidate family, the estimator,
/// the detector list and the SNR grid.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Scenario {
    pub n_tx: usize,
    pub n_rx: usize,
    pub block_len: usize,
    pub frame_len: usize,
    pub mod_kind: ModKind,
    pub mod_order: usize,
    /// Normalized Doppler f_D T_s.
    pub doppler: f64,
    #[serde(default = "default_symbol_power")]
    pub symbol_power: f64,
    #[serde(default = "default_pilot_power")]
    pub pilot_power: f64,
    pub spatial: SpatialSpec,
    #[serde(default = "default_temporal")]
    pub temporal: TemporalModel,
    #[serde(default = "default_candidate_mode")]
    pub candidate_mode: CandidateMode,
    pub estimator: EstimatorKind,
    pub detectors: Vec<DetectorKind>,
    /// E_b/N_0 grid in dB, strictly increasing.
    pub snr_db: Vec<f64>,
    pub stats_mode: StatsMode,
    pub seed: u64,
    #[serde(default)]
    pub stop: StopRule,
}

impl Scenario {
    /// Link parameters at one SNR point; the average received bit energy per
    /// antenna is eps_s / m with m the information bits per transmission, so
    /// sigma_z^2 = eps_s / (m 10^(dB/10)).
    pub fn system_config(&self, snr_db: f64) -> SystemConfig {
        let bits_per_transmission = self.bits_per_block() as f64 / self.block_len as f64;
        let noise_var =
            self.symbol_power / (bits_per_transmission * 10f64.powf(snr_db / 10.0));
        SystemConfig {
            n_tx: self.n_tx,
            n_rx: self.n_rx,
            block_len: self.block_len,
            frame_len: self.frame_len,
            mod_order: self.mod_order,
            mod_kind: self.mod_kind,
            doppler: self.doppler,
            symbol_power: self.symbol_power,
            pilot_power: self.pilot_power,
            noise_var,
        }
    }

    /// Information bits carried by one data block.
    pub fn bits_per_block(&self) -> usize {
        let m_bits = self.mod_order.trailing_zeros() as usize;
        let a_bits = self.n_tx.trailing_zeros() as usize;
        match self.candidate_mode {
            CandidateMode::Sm => self.block_len * (m_bits + a_bits),
            CandidateMode::SskOnly => self.block_len * a_bits,
            CandidateMode::Smx => self.n_tx * self.block_len * m_bits,
        }
    }

    pub fn validate(&self) -> Result<()> {
        self.system_config(self.snr_db.first().copied().unwrap_or(10.0))
            .validate()?;
        if self.snr_db.is_empty() {
            return Err(Error::InvalidConfig("snr_db grid is empty".into()));
        }
        if self.snr_db.windows(2).any(|w| w[1] <= w[0]) {
            return Err(Error::InvalidConfig(
                "snr_db grid must be strictly increasing".into(),
            ));
        }
        if self.detectors.is_empty() {
            return Err(Error::InvalidConfig("detector list is empty".into()));
        }
        if self.stop.min_errors == 0 || self.stop.max_bits == 0 {
            return Err(Error::InvalidConfig("stop rules must be positive".into()));
        }
        if self.bits_per_block() == 0 {
            return Err(Error::InvalidConfig(
                "configuration carries no information bits".into(),
            ));
        }
        if self.bits_per_block() > 63 {
            return Err(Error::InvalidConfig(
                "payloads beyond 63 bits per block are not supported".into(),
            ));
        }
        for d in &self.detectors {
            if d.requires_psk()
                && (self.mod_kind != ModKind::Psk || self.candidate_mode != CandidateMode::Sm)
            {
                return Err(Error::InvalidConfig(format!(
                    "detector {d} requires PSK SM signaling"
                )));
            }
            if d.requires_estimator_statistics() && self.estimator == EstimatorKind::Perfect {
                return Err(Error::InvalidConfig(format!(
                    "detector {d} needs an imperfect-CSI estimator"
                )));
            }
        }
        if self.stats_mode == StatsMode::EstimatedPhi && self.estimator != EstimatorKind::Mb {
            return Err(Error::InvalidConfig(
                "estimated statistics need the three-pilot (mb) estimator".into(),
            ));
        }
        Ok(())
    }
}

/// Load and validate a scenario file.
pub fn load_scenario(path: &Path) -> Result<Scenario> {
    let text = std::fs::read_to_string(path)?;
    let scenario: Scenario =
        serde_json::from_str(&text).map_err(|e| Error::Parse(e.to_string()))?;
    scenario.validate()?;
    Ok(scenario)
}

/// Serialize a scenario to pretty JSON.
pub fn scenario_to_json(scenario: &Scenario) -> String {
    serde_json::to_string_pretty(scenario).expect("scenario serializes")
}
