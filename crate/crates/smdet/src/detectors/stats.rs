//! Build-once, read-many statistics caches for the detector family.
//!
//! Covariances depend on the candidate only through a small key: the antenna
//! pattern for PSK-SM, the pattern plus the per-slot magnitude profile for
//! QAM-SM, and the full matrix otherwise. One bank block holds the factored
//! covariances (plus log-determinants) for one data block index; the
//! decision-directed banks are index-free so a single block serves the whole
//! frame.

use crate::config::{ModKind, SystemConfig};
use crate::corrmodel::TemporalModel;
use crate::linalg::{CMat, CholFactor};
use crate::smcodec::{CandidateMode, CandidateSet, Constellation};
use crate::{Error, Result};

use super::context::{DdContext, KernelCtx, MbContext, ZrcContext, ZtcContext};
use super::DetectorKind;

/// Spatial correlation knowledge available to the receiver.
#[derive(Debug, Clone)]
pub struct ReceiverStatistics {
    pub phi: CMat,
    pub phi_t: CMat,
    pub phi_r: CMat,
}

/// Covariance factors keyed by what the covariance actually depends on.
#[derive(Debug, Clone)]
pub enum CovKeyed {
    /// One factor per antenna-pattern group.
    PerL(Vec<CholFactor>),
    /// One factor per (antenna pattern, magnitude profile); the second
    /// field is the profile count, the third the N_R·log det E_s constant
    /// per profile.
    PerLMag(Vec<CholFactor>, usize, Vec<f64>),
    /// One factor per candidate.
    PerX(Vec<CholFactor>),
}

/// Reduced receive-side bank (transmit-side kernels).
#[derive(Debug, Clone)]
pub struct ZrcBank {
    pub ctx: ZrcContext,
    pub cov: CovKeyed,
}

/// Reduced transmit-side bank (a single shared covariance).
#[derive(Debug, Clone)]
pub struct ZtcBank {
    pub ctx: ZtcContext,
}

/// All precomputed statistics needed to detect one data block index.
#[derive(Debug, Clone)]
pub struct BankBlock {
    pub k: usize,
    pub ctx: KernelCtx,
    pub ceea: Option<CovKeyed>,
    pub zrc: Option<ZrcBank>,
    pub ztc: Option<ZtcBank>,
}

/// Magnitude-profile index of a candidate's symbol vector.
pub fn mag_profile_of(symbols: &[u8], cons: &Constellation) -> usize {
    let n = cons.n_mag_classes();
    let mut p = 0usize;
    for &s in symbols {
        p = p * n + cons.mag_class(s as usize);
    }
    p
}

/// Representative |s|^2 per magnitude class.
fn class_powers(cons: &Constellation) -> Vec<f64> {
    let mut pows = vec![0.0f64; cons.n_mag_classes()];
    let mut seen = vec![false; cons.n_mag_classes()];
    for (i, p) in cons.points.iter().enumerate() {
        let c = cons.mag_class(i);
        if !seen[c] {
            pows[c] = p.norm_sqr();
            seen[c] = true;
        }
    }
    pows
}

/// Slot powers of a magnitude-profile index.
fn profile_slot_powers(profile: usize, b: usize, pows: &[f64]) -> Vec<f64> {
    let n = pows.len();
    let mut out = vec![0.0; b];
    let mut p = profile;
    for j in (0..b).rev() {
        out[j] = pows[p % n];
        p /= n;
    }
    out
}

fn full_cov_cache(
    kernel: &super::context::EstimatorKernel,
    cfg: &SystemConfig,
    cons: &Constellation,
    set: &CandidateSet,
) -> Result<CovKeyed> {
    match set.mode {
        CandidateMode::Sm if cfg.mod_kind == ModKind::Psk => {
            let mut chols = Vec::with_capacity(set.n_l_groups);
            for g in 0..set.n_l_groups {
                let antenna = set.antenna_of_group(cfg, g);
                chols.push(CholFactor::new(&kernel.cov_psk(&antenna), 1e-12)?);
            }
            Ok(CovKeyed::PerL(chols))
        }
        CandidateMode::Sm => {
            let pows = class_powers(cons);
            let n_prof = pows.len().pow(cfg.block_len as u32);
            let mut chols = Vec::with_capacity(set.n_l_groups * n_prof);
            let mut logdet_es = Vec::with_capacity(n_prof);
            for prof in 0..n_prof {
                let slots = profile_slot_powers(prof, cfg.block_len, &pows);
                logdet_es.push(slots.iter().map(|p| p.ln()).sum::<f64>());
            }
            for g in 0..set.n_l_groups {
                let antenna = set.antenna_of_group(cfg, g);
                for prof in 0..n_prof {
                    let slots = profile_slot_powers(prof, cfg.block_len, &pows);
                    chols.push(CholFactor::new(&kernel.cov_qam(&antenna, &slots), 1e-12)?);
                }
            }
            Ok(CovKeyed::PerLMag(chols, n_prof, logdet_es))
        }
        _ => {
            let mut chols = Vec::with_capacity(set.len());
            for cand in &set.list {
                let x = cand.x_matrix(cfg, cons);
                chols.push(CholFactor::new(&kernel.cov_general(&x), 1e-12)?);
            }
            Ok(CovKeyed::PerX(chols))
        }
    }
}

fn zrc_cov_cache(
    ctx: &ZrcContext,
    cfg: &SystemConfig,
    cons: &Constellation,
    set: &CandidateSet,
) -> Result<CovKeyed> {
    match set.mode {
        CandidateMode::Sm if cfg.mod_kind == ModKind::Psk => {
            let mut chols = Vec::with_capacity(set.n_l_groups);
            for g in 0..set.n_l_groups {
                let antenna = set.antenna_of_group(cfg, g);
                chols.push(CholFactor::new(&ctx.cov_psk(&antenna), 1e-12)?);
            }
            Ok(CovKeyed::PerL(chols))
        }
        _ => {
            let mut chols = Vec::with_capacity(set.len());
            for cand in &set.list {
                let x = cand.x_matrix(cfg, cons);
                chols.push(CholFactor::new(&ctx.cov_general(&x), 1e-12)?);
            }
            Ok(CovKeyed::PerX(chols))
        }
    }
}

fn needs(detectors: &[DetectorKind], k: DetectorKind) -> bool {
    detectors.contains(&k)
}

fn build_block(
    ctx: KernelCtx,
    zrc_ctx: Option<ZrcContext>,
    ztc_ctx: Option<ZtcContext>,
    k: usize,
    cfg: &SystemConfig,
    cons: &Constellation,
    set: &CandidateSet,
    detectors: &[DetectorKind],
) -> Result<BankBlock> {
    let want_full = needs(detectors, DetectorKind::CeeaMl)
        || needs(detectors, DetectorKind::TwoStage);
    let ceea = if want_full {
        Some(full_cov_cache(ctx.kernel(), cfg, cons, set)?)
    } else {
        None
    };
    let zrc = match zrc_ctx {
        Some(zc) => {
            let cov = zrc_cov_cache(&zc, cfg, cons, set)?;
            Some(ZrcBank { ctx: zc, cov })
        }
        None => None,
    };
    let ztc = ztc_ctx.map(|ctx| ZtcBank { ctx });
    Ok(BankBlock { k, ctx, ceea, zrc, ztc })
}

/// Build model-based statistics for each requested data block index.
pub fn build_mb_bank(
    cfg: &SystemConfig,
    cons: &Constellation,
    set: &CandidateSet,
    rx: &ReceiverStatistics,
    temporal: TemporalModel,
    detectors: &[DetectorKind],
    k_p: usize,
    ks: &[usize],
) -> Result<Vec<BankBlock>> {
    if set.is_empty() {
        return Err(Error::EmptyCandidateSet);
    }
    let want_zrc =
        needs(detectors, DetectorKind::Zrc) || needs(detectors, DetectorKind::TwoStageZrc);
    let want_ztc = needs(detectors, DetectorKind::Ztc);
    ks.iter()
        .map(|&k| {
            let ctx = KernelCtx::Mb(MbContext::new(cfg, &rx.phi, temporal, k, k_p)?);
            let zrc_ctx = if want_zrc {
                Some(ZrcContext::new_mb(cfg, &rx.phi_t, temporal, k, k_p)?)
            } else {
                None
            };
            let ztc_ctx = if want_ztc {
                Some(ZtcContext::new_mb(cfg, &rx.phi_r, temporal, k, k_p)?)
            } else {
                None
            };
            build_block(ctx, zrc_ctx, ztc_ctx, k, cfg, cons, set, detectors)
        })
        .collect()
}

/// Build the decision-directed statistics (independent of block index).
pub fn build_dd_bank(
    cfg: &SystemConfig,
    cons: &Constellation,
    set: &CandidateSet,
    rx: &ReceiverStatistics,
    rho1: f64,
    detectors: &[DetectorKind],
) -> Result<BankBlock> {
    if set.is_empty() {
        return Err(Error::EmptyCandidateSet);
    }
    let ctx = KernelCtx::Dd(DdContext::new(cfg, &rx.phi, rho1)?);
    let zrc_ctx = if needs(detectors, DetectorKind::Zrc)
        || needs(detectors, DetectorKind::TwoStageZrc)
    {
        Some(ZrcContext::new_dd(cfg, &rx.phi_t, rho1)?)
    } else {
        None
    };
    let ztc_ctx = if needs(detectors, DetectorKind::Ztc) {
        Some(ZtcContext::new_dd(cfg, &rx.phi_r, rho1)?)
    } else {
        None
    };
    build_block(ctx, zrc_ctx, ztc_ctx, 0, cfg, cons, set, detectors)
}
