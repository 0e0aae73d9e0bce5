//! System-level configuration shared by every module.

use serde::{Deserialize, Serialize};

use crate::{Error, Result};

/// Modulation family.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ModKind {
    Psk,
    Qam,
}

impl std::fmt::Display for ModKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            ModKind::Psk => write!(f, "psk"),
            ModKind::Qam => write!(f, "qam"),
        }
    }
}

/// Physical-layer parameters of one simulated link.
///
/// `doppler` is the normalized maximum Doppler shift f_D·T_s per symbol
/// interval; successive blocks are `block_len` symbols apart. `pilot_power`
/// is fixed to 1 by the normalization every estimator-aware detector assumes.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct SystemConfig {
    /// Transmit antennas (N_T).
    pub n_tx: usize,
    /// Receive antennas (N_R).
    pub n_rx: usize,
    /// Symbols per block (B).
    pub block_len: usize,
    /// Blocks per frame (N); a pilot block starts each frame.
    pub frame_len: usize,
    /// Constellation size (M).
    pub mod_order: usize,
    /// Constellation family.
    pub mod_kind: ModKind,
    /// Normalized Doppler f_D·T_s.
    pub doppler: f64,
    /// Average data symbol power (eps_s).
    pub symbol_power: f64,
    /// Average pilot symbol power (eps_p); must be 1.
    pub pilot_power: f64,
    /// Complex noise variance per sample (sigma_z^2).
    pub noise_var: f64,
}

impl SystemConfig {
    /// Information bits per SM transmission: log2(M·N_T).
    pub fn bits_per_transmission(&self) -> usize {
        (self.mod_order * self.n_tx).trailing_zeros() as usize
    }

    /// Validate invariants shared by all modules.
    pub fn validate(&self) -> Result<()> {
        if self.n_tx == 0 || self.n_rx == 0 || self.block_len == 0 {
            return Err(Error::InvalidConfig(
                "antenna counts and block length must be positive".into(),
            ));
        }
        if !self.n_tx.is_power_of_two() {
            return Err(Error::InvalidConfig(
                "n_tx must be a power of two so antenna indices carry whole bits".into(),
            ));
        }
        if self.block_len < self.n_tx {
            return Err(Error::InvalidConfig(
                "block_len must be at least n_tx".into(),
            ));
        }
        if self.block_len != self.n_tx {
            // Identity pilot blocks require B = N_T.
            return Err(Error::InvalidConfig(
                "pilot blocks are scaled identities; block_len must equal n_tx".into(),
            ));
        }
        if !self.mod_order.is_power_of_two() || self.mod_order < 2 {
            return Err(Error::InvalidConfig(
                "mod_order must be a power of two (at least 2)".into(),
            ));
        }
        if self.frame_len < 2 {
            return Err(Error::InvalidConfig("frame_len must be at least 2".into()));
        }
        if self.symbol_power <= 0.0 || self.noise_var <= 0.0 {
            return Err(Error::InvalidConfig(
                "symbol power and noise variance must be positive".into(),
            ));
        }
        if (self.pilot_power - 1.0).abs() > 1e-12 {
            return Err(Error::InvalidConfig(
                "pilot_power must be 1 (normalization assumed by the estimators)".into(),
            ));
        }
        Ok(())
    }

    /// Convenience: copy with a different noise variance (used by SNR sweeps).
    pub fn with_noise_var(mut self, noise_var: f64) -> Self {
        self.noise_var = noise_var;
        self
    }
}
