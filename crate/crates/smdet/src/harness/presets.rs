//! Built-in scenario presets mirroring the standard experiment setups.

use crate::config::ModKind;
use crate::corrmodel::TemporalModel;
use crate::detectors::{DetectorKind, EstimatorKind};
use crate::smcodec::CandidateMode;
use crate::{Error, Result};

use super::scenario::{Scenario, SpatialSpec, StatsMode, StopRule};

/// A named preset with a one-line description.
pub struct Preset {
    pub name: &'static str,
    pub description: &'static str,
    pub build: fn() -> Scenario,
}

fn snr_grid(start: f64, stop: f64, step: f64) -> Vec<f64> {
    let mut v = Vec::new();
    let mut x = start;
    while x <= stop + 1e-9 {
        v.push(x);
        x += step;
    }
    v
}

fn base_4x4_qpsk(frame_len: usize, spatial: SpatialSpec) -> Scenario {
    Scenario {
        n_tx: 4,
        n_rx: 4,
        block_len: 4,
        frame_len,
        mod_kind: ModKind::Psk,
        mod_order: 4,
        doppler: 0.01,
        symbol_power: 1.0,
        pilot_power: 1.0,
        spatial,
        temporal: TemporalModel::Jakes,
        candidate_mode: CandidateMode::Sm,
        estimator: EstimatorKind::Mb,
        detectors: vec![
            DetectorKind::PerfectCsi,
            DetectorKind::Mismatched,
            DetectorKind::CeeaMl,
            DetectorKind::TwoStage,
            DetectorKind::Zrc,
            DetectorKind::Ztc,
            DetectorKind::TwoStageZrc,
        ],
        snr_db: snr_grid(0.0, 24.0, 3.0),
        stats_mode: StatsMode::GeniePhi,
        seed: 2024,
        stop: StopRule::default(),
    }
}

fn qam16_2x4(frame_len: usize, estimator: EstimatorKind) -> Scenario {
    Scenario {
        n_tx: 2,
        n_rx: 4,
        block_len: 2,
        frame_len,
        mod_kind: ModKind::Qam,
        mod_order: 16,
        doppler: 0.01,
        symbol_power: 1.0,
        pilot_power: 1.0,
        spatial: SpatialSpec::Exponential { r: 0.8, t: 0.8 },
        temporal: TemporalModel::Jakes,
        candidate_mode: CandidateMode::Sm,
        estimator,
        detectors: vec![
            DetectorKind::PerfectCsi,
            DetectorKind::Mismatched,
            DetectorKind::CeeaMl,
        ],
        snr_db: snr_grid(8.0, 26.0, 2.0),
        stats_mode: StatsMode::GeniePhi,
        seed: 2024,
        stop: StopRule::default(),
    }
}

/// All built-in presets.
pub fn presets() -> Vec<Preset> {
    vec![
        Preset {
            name: "fig-mb-exp-r08",
            description:
                "QPSK SM 4x4, exponential correlation 0.8, polynomial estimator, N=10 (alias of -n10)",
            build: || base_4x4_qpsk(10, SpatialSpec::Exponential { r: 0.8, t: 0.8 }),
        },
        Preset {
            name: "fig-mb-exp-r08-n5",
            description: "QPSK SM 4x4, exponential correlation 0.8, polynomial estimator, N=5",
            build: || base_4x4_qpsk(5, SpatialSpec::Exponential { r: 0.8, t: 0.8 }),
        },
        Preset {
            name: "fig-mb-exp-r08-n10",
            description: "QPSK SM 4x4, exponential correlation 0.8, polynomial estimator, N=10",
            build: || base_4x4_qpsk(10, SpatialSpec::Exponential { r: 0.8, t: 0.8 }),
        },
        Preset {
            name: "fig-mb-exp-r05-n10",
            description: "QPSK SM 4x4, exponential correlation 0.5, polynomial estimator, N=10",
            build: || base_4x4_qpsk(10, SpatialSpec::Exponential { r: 0.5, t: 0.5 }),
        },
        Preset {
            name: "fig-mb-bessel-d05-n5",
            description: "QPSK SM 4x4, half-wavelength arrays, polynomial estimator, N=5",
            build: || base_4x4_qpsk(5, SpatialSpec::Bessel { spacing: 0.5 }),
        },
        Preset {
            name: "fig-mb-bessel-d10-n5",
            description: "QPSK SM 4x4, one-wavelength arrays, polynomial estimator, N=5",
            build: || base_4x4_qpsk(5, SpatialSpec::Bessel { spacing: 1.0 }),
        },
        Preset {
            name: "fig-mb-estphi-exp-r08-n10",
            description:
                "QPSK SM 4x4, exponential 0.8, blind spatial-correlation estimate, reduced detectors",
            build: || {
                let mut s = base_4x4_qpsk(10, SpatialSpec::Exponential { r: 0.8, t: 0.8 });
                s.stats_mode = StatsMode::EstimatedPhi;
                s.detectors = vec![
                    DetectorKind::Mismatched,
                    DetectorKind::Zrc,
                    DetectorKind::Ztc,
                ];
                s
            },
        },
        Preset {
            name: "fig-mb-16qam-n10",
            description: "16-QAM SM 2x4 (5 bit/use), polynomial estimator, N=10",
            build: || qam16_2x4(10, EstimatorKind::Mb),
        },
        Preset {
            name: "fig-mb-16qam-n20",
            description: "16-QAM SM 2x4 (5 bit/use), polynomial estimator, N=20",
            build: || qam16_2x4(20, EstimatorKind::Mb),
        },
        Preset {
            name: "fig-dd-16qam-n10",
            description: "16-QAM SM 2x4 (5 bit/use), decision-directed tracker, N=10",
            build: || qam16_2x4(10, EstimatorKind::Dd),
        },
        Preset {
            name: "fig-dd-16qam-n20",
            description: "16-QAM SM 2x4 (5 bit/use), decision-directed tracker, N=20",
            build: || qam16_2x4(20, EstimatorKind::Dd),
        },
        Preset {
            name: "fig-dd-qpsk-2x4-n10",
            description: "QPSK SM 2x4 (3 bit/use), decision-directed tracker with reduced detectors",
            build: || {
                let mut s = qam16_2x4(10, EstimatorKind::Dd);
                s.mod_kind = ModKind::Psk;
                s.mod_order = 4;
                s.detectors = vec![
                    DetectorKind::Mismatched,
                    DetectorKind::CeeaMl,
                    DetectorKind::Zrc,
                    DetectorKind::Ztc,
                ];
                s.snr_db = snr_grid(0.0, 24.0, 3.0);
                s
            },
        },
        Preset {
            name: "fig-smx-mb-2x2-n10",
            description: "Spatial multiplexing 2x2 QPSK (4 bit/use), polynomial estimator",
            build: || {
                let mut s = base_4x4_qpsk(10, SpatialSpec::Exponential { r: 0.8, t: 0.8 });
                s.n_tx = 2;
                s.n_rx = 2;
                s.block_len = 2;
                s.candidate_mode = CandidateMode::Smx;
                s.detectors = vec![
                    DetectorKind::PerfectCsi,
                    DetectorKind::Mismatched,
                    DetectorKind::CeeaMl,
                ];
                s
            },
        },
    ]
}

/// Look up a preset case-insensitively.
pub fn find_preset(name: &str) -> Result<Scenario> {
    let lower = name.to_lowercase();
    presets()
        .iter()
        .find(|p| p.name == lower)
        .map(|p| (p.build)())
        .ok_or_else(|| Error::InvalidConfig(format!("unknown preset '{name}'")))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn all_presets_validate() {
        for p in presets() {
            let s = (p.build)();
            s.validate().unwrap_or_else(|e| panic!("{}: {e}", p.name));
        }
    }

    #[test]
    fn lookup_is_case_insensitive_and_matches_expected_config() {
        let s = find_preset("fig-MB-exp-r08").unwrap();
        assert_eq!(s.mod_order, 4);
        assert_eq!(s.n_tx, 4);
        assert_eq!(s.n_rx, 4);
        assert_eq!(s.block_len, 4);
        assert!((s.doppler - 0.01).abs() < 1e-15);
        assert!(matches!(
            s.spatial,
            SpatialSpec::Exponential { r, t } if (r - 0.8).abs() < 1e-15 && (t - 0.8).abs() < 1e-15
        ));
        assert!(s.frame_len == 5 || s.frame_len == 10);
        assert!(find_preset("nope").is_err());
    }
}
