//! Detection rules for SM/SMX signaling under imperfect channel knowledge.
//!
//! All estimator-aware detectors share one structure: conditioned on the
//! channel estimate, the received block is Gaussian with candidate-dependent
//! mean and covariance, and detection minimizes
//! `quad_form(C, residual) + log det C`. The covariances live in a
//! precomputed [`stats::BankBlock`]; only the means involve the current
//! estimate.

pub mod context;
pub mod full_search;
pub mod stats;
pub mod two_stage;

use serde::{Deserialize, Serialize};

use crate::linalg::{CMat, CholFactor};
use crate::{Error, Result};

pub use context::{DdContext, EstimatorKernel, KernelCtx, MbContext, ZrcContext, ZtcContext};
pub use full_search::{
    detect_ceea_full, detect_ceea_reference, detect_per_column, detect_zrc_full, detect_ztc_full,
};
pub use stats::{build_dd_bank, build_mb_bank, BankBlock, CovKeyed, ReceiverStatistics};
pub use two_stage::{detect_two_stage, detect_two_stage_zrc};

/// Detection rule; combined with an estimator choice by the harness.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum DetectorKind {
    /// ML with genie channel knowledge.
    PerfectCsi,
    /// Plugs the estimate into the perfect-CSI rule.
    Mismatched,
    /// Estimation-error-aware exhaustive ML.
    CeeaMl,
    /// Antenna pattern first, quantized symbols second (PSK only).
    TwoStage,
    /// Full search assuming uncorrelated receive antennas.
    Zrc,
    /// Full search assuming uncorrelated transmit antennas.
    Ztc,
    /// Two-stage on the reduced receive-side statistics (PSK only).
    TwoStageZrc,
}

impl DetectorKind {
    /// Detectors whose two-stage shortcut needs constant-modulus symbols.
    pub fn requires_psk(&self) -> bool {
        matches!(self, DetectorKind::TwoStage | DetectorKind::TwoStageZrc)
    }

    /// Detectors that need estimator statistics (not just an estimate).
    pub fn requires_estimator_statistics(&self) -> bool {
        !matches!(self, DetectorKind::PerfectCsi | DetectorKind::Mismatched)
    }
}

impl std::fmt::Display for DetectorKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let s = match self {
            DetectorKind::PerfectCsi => "perfect-csi",
            DetectorKind::Mismatched => "mismatched",
            DetectorKind::CeeaMl => "ceea-ml",
            DetectorKind::TwoStage => "two-stage",
            DetectorKind::Zrc => "zrc",
            DetectorKind::Ztc => "ztc",
            DetectorKind::TwoStageZrc => "two-stage-zrc",
        };
        write!(f, "{s}")
    }
}

/// Which channel estimator feeds the detectors.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum EstimatorKind {
    Mb,
    Dd,
    Perfect,
}

impl std::fmt::Display for EstimatorKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let s = match self {
            EstimatorKind::Mb => "mb",
            EstimatorKind::Dd => "dd",
            EstimatorKind::Perfect => "perfect",
        };
        write!(f, "{s}")
    }
}

/// Outcome of one detection call.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Decision {
    /// Index into the candidate set's enumeration order.
    pub candidate_index: usize,
    /// Metric value of the winning candidate.
    pub metric: f64,
    /// Number of singular tentative-symbol systems solved by pseudo-inverse.
    pub singular_fallbacks: u32,
}

/// The Gaussian quadratic form chi^H Gamma^{-1} chi, via a Cholesky solve
/// (one jitter retry at 1e-12, then `NotPositiveDefinite`).
pub fn quad_form(gamma: &CMat, chi: &CMat) -> Result<CMat> {
    if gamma.nrows() != chi.nrows() {
        return Err(Error::ShapeMismatch {
            context: "quad_form operand rows must match".into(),
        });
    }
    let chol = CholFactor::new(gamma, 1e-12)?;
    let solved = chol.solve_mat(chi);
    Ok(chi.adjoint() * solved)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::config::{ModKind, SystemConfig};
    use crate::corrmodel::{
        awgn, generate_channels, spatial_correlation, standard_complex_gaussian, RngStream,
        SpatialModel, TemporalModel,
    };
    use crate::linalg::{kron, vec_of, CVec, C64};
    use crate::smcodec::{
        build_constellation, enumerate_candidates, CandidateMode, CandidateSet, Constellation,
        DEFAULT_CANDIDATE_CAP,
    };

    fn cfg(n_tx: usize, n_rx: usize, m: usize, kind: ModKind, noise_var: f64) -> SystemConfig {
        SystemConfig {
            n_tx,
            n_rx,
            block_len: n_tx,
            frame_len: 5,
            mod_order: m,
            mod_kind: kind,
            doppler: 0.01,
            symbol_power: 1.0,
            pilot_power: 1.0,
            noise_var,
        }
    }

    fn setup(
        cfg: &SystemConfig,
        mode: CandidateMode,
    ) -> (Constellation, CandidateSet) {
        let cons = build_constellation(cfg.mod_kind, cfg.mod_order, cfg.symbol_power).unwrap();
        let set = enumerate_candidates(cfg, &cons, mode, DEFAULT_CANDIDATE_CAP).unwrap();
        (cons, set)
    }

    #[test]
    fn quad_form_closed_cases() {
        let g = CMat::identity(2, 2);
        let chi = CMat::from_column_slice(2, 1, &[C64::new(1.0, 0.0), C64::new(0.0, 1.0)]);
        let out = quad_form(&g, &chi).unwrap();
        assert!((out[(0, 0)].re - 2.0).abs() < 1e-12);

        let g = CMat::from_diagonal(&CVec::from_vec(vec![C64::new(2.0, 0.0), C64::new(4.0, 0.0)]));
        let chi = CMat::from_column_slice(2, 1, &[C64::new(2.0, 0.0), C64::new(0.0, 2.0)]);
        let out = quad_form(&g, &chi).unwrap();
        assert!((out[(0, 0)].re - 3.0).abs() < 1e-12);
    }

    #[test]
    fn quad_form_matches_explicit_inverse() {
        let mut rng = RngStream::new(31, 0).rng();
        let b = CMat::from_fn(6, 6, |_, _| standard_complex_gaussian(&mut rng));
        let g = &b * b.adjoint() + CMat::identity(6, 6);
        let chi = CMat::from_fn(6, 2, |_, _| standard_complex_gaussian(&mut rng));
        let out = quad_form(&g, &chi).unwrap();
        let inv = g.clone().try_inverse().unwrap();
        let want = chi.adjoint() * inv * &chi;
        assert!((out - want).norm() < 1e-10);
    }

    #[test]
    fn quad_form_rejects_indefinite() {
        let g = CMat::from_fn(2, 2, |i, j| {
            if i == j {
                C64::new(-1.0, 0.0)
            } else {
                C64::new(0.0, 0.0)
            }
        });
        let chi = CMat::identity(2, 2);
        assert!(matches!(
            quad_form(&g, &chi),
            Err(Error::NotPositiveDefinite)
        ));
    }

    #[test]
    fn perfect_csi_zero_noise_recovers_everything() {
        let c = cfg(2, 2, 4, ModKind::Psk, 1e-4);
        let (cons, set) = setup(&c, CandidateMode::Sm);
        let s = spatial_correlation(&SpatialModel::Exponential { r: 0.5, t: 0.5 }, &c).unwrap();
        for trial in 0..200u64 {
            let chan =
                generate_channels(&c, &s, TemporalModel::Jakes, 1, RngStream::new(50, trial))
                    .unwrap();
            let h = &chan.blocks[0];
            let mut rng = RngStream::new(51, trial).rng();
            let idx = (rng.next_u64() % set.len() as u64) as usize;
            let y = h * set.list[idx].x_matrix(&c, &cons);
            let dec = detect_per_column(&y, h, &set, &cons, &c).unwrap();
            assert_eq!(dec.candidate_index, idx);
        }
    }

    use rand::RngCore;

    /// Shared helper: one random MB-window observation at block k.
    struct MbObs {
        h: CMat,
        h_hat: CMat,
        y: CMat,
        tx_index: usize,
    }

    fn random_mb_obs(
        c: &SystemConfig,
        cons: &Constellation,
        set: &CandidateSet,
        spatial: &crate::corrmodel::SpatialCorrelation,
        temporal: TemporalModel,
        k: usize,
        trial: u64,
    ) -> MbObs {
        let chan = generate_channels(c, spatial, temporal, 11, RngStream::new(900, trial))
            .unwrap();
        let mut rng = RngStream::new(901, trial).rng();
        let pilot_scale = c.pilot_power.sqrt();
        let obs: Vec<CMat> = [0usize, 5, 10]
            .iter()
            .map(|&p| {
                chan.blocks[p].scale(pilot_scale) + awgn(c.n_rx, c.n_tx, c.noise_var, &mut rng)
            })
            .collect();
        let win =
            crate::chest::MbWindow::from_pilot_obs(0, c, [&obs[0], &obs[1], &obs[2]]).unwrap();
        let h_hat = win.estimate(k).unwrap().h_hat;
        let tx_index = (rng.next_u64() % set.len() as u64) as usize;
        let x = set.list[tx_index].x_matrix(c, cons);
        let y = &chan.blocks[k] * x + awgn(c.n_rx, c.block_len, c.noise_var, &mut rng);
        MbObs {
            h: chan.blocks[k].clone(),
            h_hat,
            y,
            tx_index,
        }
    }

    #[test]
    fn degeneracy_chain_static_low_noise() {
        // Time-invariant channel and vanishing noise: the error-aware ML,
        // the mismatched rule and the perfect-CSI rule agree.
        let c = cfg(2, 2, 2, ModKind::Psk, 1e-9);
        let (cons, set) = setup(&c, CandidateMode::Sm);
        let s = spatial_correlation(&SpatialModel::Exponential { r: 0.6, t: 0.6 }, &c).unwrap();
        let rx = ReceiverStatistics {
            phi: s.phi.clone(),
            phi_t: s.phi_t.clone(),
            phi_r: s.phi_r.clone(),
        };
        let k = 3usize;
        let bank = build_mb_bank(
            &c,
            &cons,
            &set,
            &rx,
            TemporalModel::Static,
            &[DetectorKind::CeeaMl],
            0,
            &[k],
        )
        .unwrap();
        for trial in 0..100 {
            let obs = random_mb_obs(&c, &cons, &set, &s, TemporalModel::Static, k, trial);
            let ml =
                detect_ceea_full(&bank[0], &obs.y, &vec_of(&obs.h_hat), &set, &cons, &c).unwrap();
            let mm = detect_per_column(&obs.y, &obs.h_hat, &set, &cons, &c).unwrap();
            let pf = detect_per_column(&obs.y, &obs.h, &set, &cons, &c).unwrap();
            assert_eq!(ml.candidate_index, mm.candidate_index);
            assert_eq!(mm.candidate_index, pf.candidate_index);
            assert_eq!(pf.candidate_index, obs.tx_index);
        }
    }

    #[test]
    fn cached_paths_match_reference_psk_and_qam() {
        for kind in [ModKind::Psk, ModKind::Qam] {
            let c = cfg(2, 2, 4, kind, 0.08);
            let (cons, set) = setup(&c, CandidateMode::Sm);
            let s =
                spatial_correlation(&SpatialModel::Exponential { r: 0.8, t: 0.5 }, &c).unwrap();
            let rx = ReceiverStatistics {
                phi: s.phi.clone(),
                phi_t: s.phi_t.clone(),
                phi_r: s.phi_r.clone(),
            };
            let k = 2usize;
            let bank = build_mb_bank(
                &c,
                &cons,
                &set,
                &rx,
                TemporalModel::Jakes,
                &[DetectorKind::CeeaMl],
                0,
                &[k],
            )
            .unwrap();
            for trial in 0..60 {
                let obs = random_mb_obs(&c, &cons, &set, &s, TemporalModel::Jakes, k, trial);
                let vh = vec_of(&obs.h_hat);
                let fast = detect_ceea_full(&bank[0], &obs.y, &vh, &set, &cons, &c).unwrap();
                let slow = detect_ceea_reference(&bank[0], &obs.y, &vh, &set, &cons, &c).unwrap();
                assert_eq!(fast.candidate_index, slow.candidate_index, "kind {kind:?}");
            }
        }
    }

    #[test]
    fn qam_and_psk_paths_agree_on_constant_modulus() {
        // 4-QAM is constant-modulus, so the magnitude-profile metric and the
        // pattern-only metric pick the same candidate.
        let c_qam = cfg(2, 2, 4, ModKind::Qam, 0.08);
        let mut c_psk = c_qam;
        c_psk.mod_kind = ModKind::Psk;
        let cons = build_constellation(ModKind::Qam, 4, 1.0).unwrap();
        let set = enumerate_candidates(&c_qam, &cons, CandidateMode::Sm, DEFAULT_CANDIDATE_CAP)
            .unwrap();
        let s =
            spatial_correlation(&SpatialModel::Exponential { r: 0.7, t: 0.7 }, &c_qam).unwrap();
        let rx = ReceiverStatistics {
            phi: s.phi.clone(),
            phi_t: s.phi_t.clone(),
            phi_r: s.phi_r.clone(),
        };
        let k = 2usize;
        let dets = [DetectorKind::CeeaMl];
        let bank_qam =
            build_mb_bank(&c_qam, &cons, &set, &rx, TemporalModel::Jakes, &dets, 0, &[k]).unwrap();
        let bank_psk =
            build_mb_bank(&c_psk, &cons, &set, &rx, TemporalModel::Jakes, &dets, 0, &[k]).unwrap();
        assert!(matches!(
            bank_qam[0].ceea.as_ref().unwrap(),
            CovKeyed::PerLMag(..)
        ));
        assert!(matches!(
            bank_psk[0].ceea.as_ref().unwrap(),
            CovKeyed::PerL(..)
        ));
        for trial in 0..60 {
            let obs = random_mb_obs(&c_qam, &cons, &set, &s, TemporalModel::Jakes, k, trial);
            let vh = vec_of(&obs.h_hat);
            let a = detect_ceea_full(&bank_qam[0], &obs.y, &vh, &set, &cons, &c_qam).unwrap();
            let b = detect_ceea_full(&bank_psk[0], &obs.y, &vh, &set, &cons, &c_psk).unwrap();
            assert_eq!(a.candidate_index, b.candidate_index);
            // with eps_s = 1 the metrics agree exactly too
            assert!((a.metric - b.metric).abs() < 1e-8);
        }
    }

    #[test]
    fn zrc_equals_ceea_when_receive_uncorrelated() {
        // Phi_R = I makes the reduced receive-side search algebraically
        // identical to the full ML (MB estimator).
        let c = cfg(2, 2, 4, ModKind::Psk, 0.15);
        let (cons, set) = setup(&c, CandidateMode::Sm);
        let s = spatial_correlation(&SpatialModel::Exponential { r: 0.0, t: 0.7 }, &c).unwrap();
        let rx = ReceiverStatistics {
            phi: s.phi.clone(),
            phi_t: s.phi_t.clone(),
            phi_r: s.phi_r.clone(),
        };
        let k = 4usize;
        let bank = build_mb_bank(
            &c,
            &cons,
            &set,
            &rx,
            TemporalModel::Jakes,
            &[DetectorKind::CeeaMl, DetectorKind::Zrc],
            0,
            &[k],
        )
        .unwrap();
        for trial in 0..100 {
            let obs = random_mb_obs(&c, &cons, &set, &s, TemporalModel::Jakes, k, trial);
            let vh = vec_of(&obs.h_hat);
            let ml = detect_ceea_full(&bank[0], &obs.y, &vh, &set, &cons, &c).unwrap();
            let zrc = detect_zrc_full(&bank[0], &obs.y, &obs.h_hat, &set, &cons, &c).unwrap();
            assert_eq!(ml.candidate_index, zrc.candidate_index, "trial {trial}");
        }
    }

    #[test]
    fn ztc_covariance_exact_for_permutation_patterns() {
        // With Phi = I (x) Phi_R and a permutation antenna pattern carrying
        // constant-modulus symbols, X X^H = eps_s I exactly, so the shared
        // reduced covariance replicates the unapproximated one.
        let c = cfg(2, 2, 4, ModKind::Psk, 0.1);
        let cons = build_constellation(ModKind::Psk, 4, 1.0).unwrap();
        let s = spatial_correlation(&SpatialModel::Exponential { r: 0.8, t: 0.0 }, &c).unwrap();
        let rho1 = crate::corrmodel::temporal_correlation(1, TemporalModel::Jakes, &c);
        let dd = DdContext::new(&c, &s.phi, rho1).unwrap();
        let ztc = ZtcContext::new_dd(&c, &s.phi_r, rho1).unwrap();

        let block = crate::smcodec::SmBlock {
            antenna_idx: vec![1, 0],
            symbols: vec![2, 1],
        };
        let x = block.x_matrix(&c, &cons);
        let full = dd.kernel.cov_general(&x);
        let shared = ztc.chol.l() * ztc.chol.l().adjoint();
        let expanded = kron(&CMat::identity(2, 2), &shared);
        assert!(
            (&full - &expanded).norm() < 1e-10,
            "deviation {}",
            (&full - &expanded).norm()
        );
    }

    #[test]
    fn two_stage_recovers_exactly_in_clean_conditions() {
        let c = cfg(2, 2, 4, ModKind::Psk, 1e-8);
        let (cons, set) = setup(&c, CandidateMode::Sm);
        let s = spatial_correlation(&SpatialModel::Exponential { r: 0.0, t: 0.0 }, &c).unwrap();
        let rx = ReceiverStatistics {
            phi: s.phi.clone(),
            phi_t: s.phi_t.clone(),
            phi_r: s.phi_r.clone(),
        };
        let k = 3usize;
        let bank = build_mb_bank(
            &c,
            &cons,
            &set,
            &rx,
            TemporalModel::Static,
            &[DetectorKind::TwoStage, DetectorKind::TwoStageZrc],
            0,
            &[k],
        )
        .unwrap();
        for trial in 0..200 {
            let obs = random_mb_obs(&c, &cons, &set, &s, TemporalModel::Static, k, trial);
            let vh = vec_of(&obs.h_hat);
            let ts = detect_two_stage(&bank[0], &obs.y, &vh, &set, &cons, &c).unwrap();
            assert_eq!(ts.candidate_index, obs.tx_index, "trial {trial}");
            let tz = detect_two_stage_zrc(&bank[0], &obs.y, &obs.h_hat, &set, &cons, &c).unwrap();
            assert_eq!(tz.candidate_index, obs.tx_index, "trial {trial}");
        }
    }

    #[test]
    fn two_stage_tracks_full_search_at_moderate_snr() {
        // 4x4, QPSK, exponential correlation 0.5: the two-stage shortcut
        // agrees with the exhaustive ML on at least 95% of random blocks.
        let m_bits = 4.0; // log2(M * N_T)
        let snr_db = 15.0;
        let noise_var = 1.0 / (m_bits * 10f64.powf(snr_db / 10.0));
        let c = cfg(4, 4, 4, ModKind::Psk, noise_var);
        let (cons, set) = setup(&c, CandidateMode::Sm);
        let s = spatial_correlation(&SpatialModel::Exponential { r: 0.5, t: 0.5 }, &c).unwrap();
        let rx = ReceiverStatistics {
            phi: s.phi.clone(),
            phi_t: s.phi_t.clone(),
            phi_r: s.phi_r.clone(),
        };
        let k = 2usize;
        let bank = build_mb_bank(
            &c,
            &cons,
            &set,
            &rx,
            TemporalModel::Jakes,
            &[DetectorKind::CeeaMl, DetectorKind::TwoStage],
            0,
            &[k],
        )
        .unwrap();
        let trials = 400;
        let mut agree = 0usize;
        for trial in 0..trials {
            let obs = random_mb_obs(&c, &cons, &set, &s, TemporalModel::Jakes, k, trial);
            let vh = vec_of(&obs.h_hat);
            let full = detect_ceea_full(&bank[0], &obs.y, &vh, &set, &cons, &c).unwrap();
            let ts = detect_two_stage(&bank[0], &obs.y, &vh, &set, &cons, &c).unwrap();
            if full.candidate_index == ts.candidate_index {
                agree += 1;
            }
        }
        let rate = agree as f64 / trials as f64;
        assert!(rate >= 0.95, "agreement {rate}");
    }

    #[test]
    fn argmin_invariant_to_constant_shift() {
        let metrics = [3.0, 1.5, 2.2, 9.0];
        let argmin = |v: &[f64]| {
            v.iter()
                .enumerate()
                .min_by(|a, b| a.1.partial_cmp(b.1).unwrap())
                .unwrap()
                .0
        };
        let shifted: Vec<f64> = metrics.iter().map(|m| m + 123.456).collect();
        assert_eq!(argmin(&metrics), argmin(&shifted));
    }
}
