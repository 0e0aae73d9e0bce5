//! Monte Carlo execution: frame windows, SNR sweeps, deterministic batching.
//!
//! One trial is one independent frame window: two frames plus the closing
//! pilot for the polynomial estimator (pilots at blocks 0, N, 2N; data
//! blocks 1..2N-1 except N), or a single frame for the decision-directed
//! tracker (pilot at block 0, data blocks 1..N-1). Every window owns an
//! explicit random stream derived from (seed, snr index, window index), so
//! results are bit-identical regardless of worker count; windows are
//! processed in fixed-size batches and reduced in window order, and the
//! stop rule is evaluated between batches only.

use std::sync::Arc;

use rand::RngCore;
use rayon::prelude::*;

use crate::chest::{dd_update, ls_pilot_estimate, ChannelEstimate, MbWindow};
use crate::config::SystemConfig;
use crate::corrmodel::{
    awgn, generate_channels, spatial_correlation, temporal_correlation, RngStream,
    SpatialCorrelation,
};
use crate::detectors::{
    build_dd_bank, build_mb_bank, detect_ceea_full, detect_per_column, detect_two_stage,
    detect_two_stage_zrc, detect_zrc_full, detect_ztc_full, BankBlock, DetectorKind,
    EstimatorKind, ReceiverStatistics,
};
use crate::linalg::{psd_clamp, vec_of, CMat};
use crate::smcodec::{
    build_constellation, enumerate_candidates, map_bits, payload_to_bits, CandidateMode,
    CandidateSet, Constellation, DEFAULT_CANDIDATE_CAP,
};
use crate::{Error, Result};

use super::results::{BerCell, BerCurve, BerPoint};
use super::scenario::{Scenario, StatsMode};

/// Windows per deterministic batch between stop-rule checks.
const BATCH_WINDOWS: u64 = 16;

/// Everything one window needs, shared read-only across workers.
struct SweepCtx {
    scenario: Scenario,
    cfg: SystemConfig,
    cons: Constellation,
    set: CandidateSet,
    truth: SpatialCorrelation,
    /// Prebuilt statistics (genie modes); estimated mode rebuilds per window.
    banks: Option<Arc<Vec<BankBlock>>>,
    data_ks: Vec<usize>,
    n_blocks: usize,
    collect_trace: bool,
}

/// Per-detector outcomes of one window.
pub struct WindowResult {
    /// (block index, transmitted payload, detected payload) per detector.
    pub per_detector: Vec<Vec<(usize, u64, u64)>>,
    /// Channel estimates used per (detector index, block index), when
    /// tracing is enabled.
    pub trace: Vec<(usize, usize, CMat)>,
}

fn receiver_statistics(truth: &SpatialCorrelation, mode: StatsMode) -> ReceiverStatistics {
    let nt = truth.phi_t.nrows();
    let nr = truth.phi_r.nrows();
    match mode {
        StatsMode::GeniePhi | StatsMode::EstimatedPhi => ReceiverStatistics {
            phi: truth.phi.clone(),
            phi_t: truth.phi_t.clone(),
            phi_r: truth.phi_r.clone(),
        },
        StatsMode::GeniePhiTOnly => ReceiverStatistics {
            phi: crate::linalg::kron(&truth.phi_t, &CMat::identity(nr, nr)),
            phi_t: truth.phi_t.clone(),
            phi_r: CMat::identity(nr, nr),
        },
        StatsMode::GeniePhiROnly => ReceiverStatistics {
            phi: crate::linalg::kron(&CMat::identity(nt, nt), &truth.phi_r),
            phi_t: CMat::identity(nt, nt),
            phi_r: truth.phi_r.clone(),
        },
    }
}

fn build_banks(
    scenario: &Scenario,
    cfg: &SystemConfig,
    cons: &Constellation,
    set: &CandidateSet,
    rx: &ReceiverStatistics,
    data_ks: &[usize],
) -> Result<Vec<BankBlock>> {
    match scenario.estimator {
        EstimatorKind::Mb => build_mb_bank(
            cfg,
            cons,
            set,
            rx,
            scenario.temporal,
            &scenario.detectors,
            0,
            data_ks,
        ),
        EstimatorKind::Dd => {
            let rho1 = temporal_correlation(1, scenario.temporal, cfg);
            Ok(vec![build_dd_bank(
                cfg,
                cons,
                set,
                rx,
                rho1,
                &scenario.detectors,
            )?])
        }
        EstimatorKind::Perfect => Ok(Vec::new()),
    }
}

/// Draw one payload uniformly over the block's information bits.
fn draw_payload(bits: usize, rng: &mut impl RngCore) -> u64 {
    debug_assert!(bits <= 63);
    rng.next_u64() & ((1u64 << bits) - 1)
}

fn candidate_index_of_payload(
    payload: u64,
    ctx: &SweepCtx,
) -> Result<usize> {
    match ctx.set.mode {
        CandidateMode::Sm => {
            let bits = payload_to_bits(payload, ctx.set.bits_per_block);
            let block = map_bits(&bits, &ctx.cfg, &ctx.cons)?;
            Ok(ctx.set.index_of_sm(&ctx.cfg, &ctx.cons, &block))
        }
        // for the antenna-only and dense grids the payload is the index
        CandidateMode::SskOnly | CandidateMode::Smx => Ok(payload as usize),
    }
}

fn dispatch_detector(
    kind: DetectorKind,
    bank: &BankBlock,
    y: &CMat,
    h_true: &CMat,
    estimate: &CMat,
    ctx: &SweepCtx,
) -> Result<crate::detectors::Decision> {
    match kind {
        DetectorKind::PerfectCsi => detect_per_column(y, h_true, &ctx.set, &ctx.cons, &ctx.cfg),
        DetectorKind::Mismatched => detect_per_column(y, estimate, &ctx.set, &ctx.cons, &ctx.cfg),
        DetectorKind::CeeaMl => detect_ceea_full(
            bank,
            y,
            &vec_of(estimate),
            &ctx.set,
            &ctx.cons,
            &ctx.cfg,
        ),
        DetectorKind::TwoStage => detect_two_stage(
            bank,
            y,
            &vec_of(estimate),
            &ctx.set,
            &ctx.cons,
            &ctx.cfg,
        ),
        DetectorKind::Zrc => detect_zrc_full(bank, y, estimate, &ctx.set, &ctx.cons, &ctx.cfg),
        DetectorKind::Ztc => detect_ztc_full(bank, y, estimate, &ctx.set, &ctx.cons, &ctx.cfg),
        DetectorKind::TwoStageZrc => {
            detect_two_stage_zrc(bank, y, estimate, &ctx.set, &ctx.cons, &ctx.cfg)
        }
    }
}

/// Run one frame window. The window's randomness is fully determined by
/// `window_stream`; the channel uses stream 2s and everything else 2s+1,
/// drawn in a fixed order (pilot noise, then per data block payload then
/// noise).
fn run_frame_window(ctx: &SweepCtx, window_stream: u64) -> Result<WindowResult> {
    let cfg = &ctx.cfg;
    let seed = ctx.scenario.seed;
    let chan = generate_channels(
        cfg,
        &ctx.truth,
        ctx.scenario.temporal,
        ctx.n_blocks,
        RngStream::new(seed, 2 * window_stream),
    )?;
    let mut rng = RngStream::new(seed, 2 * window_stream + 1).rng();
    let n_det = ctx.scenario.detectors.len();
    let mut out = WindowResult {
        per_detector: vec![Vec::with_capacity(ctx.data_ks.len()); n_det],
        trace: Vec::new(),
    };

    let pilot_scale = cfg.pilot_power.sqrt();

    match ctx.scenario.estimator {
        EstimatorKind::Mb => {
            let n = cfg.frame_len;
            // pilot observations at blocks 0, N, 2N
            let pilots: Vec<CMat> = [0usize, n, 2 * n]
                .iter()
                .map(|&p| {
                    chan.blocks[p].scale(pilot_scale)
                        + awgn(cfg.n_rx, cfg.n_tx, cfg.noise_var, &mut rng)
                })
                .collect();
            let window = MbWindow::from_pilot_obs(0, cfg, [&pilots[0], &pilots[1], &pilots[2]])?;

            // estimated statistics rebuild the banks from this window's pilots
            let local_banks;
            let banks: &Vec<BankBlock> = if ctx.scenario.stats_mode == StatsMode::EstimatedPhi {
                let ls: Vec<ChannelEstimate> = [0usize, n, 2 * n]
                    .iter()
                    .zip(&pilots)
                    .map(|(&p, y)| ls_pilot_estimate(y, cfg, p))
                    .collect();
                let est = crate::chest::estimate_spatial_correlation(
                    [&ls[0], &ls[1], &ls[2]],
                    cfg,
                );
                // the sign-refined profiles can be slightly indefinite;
                // clamp before building covariances
                let phi_t = psd_clamp(&est.phi_t_refined);
                let phi_r = psd_clamp(&est.phi_r_refined);
                let rx = ReceiverStatistics {
                    phi: crate::linalg::kron(&phi_t, &phi_r),
                    phi_t,
                    phi_r,
                };
                local_banks = build_banks(&ctx.scenario, cfg, &ctx.cons, &ctx.set, &rx, &ctx.data_ks)?;
                &local_banks
            } else {
                ctx.banks.as_ref().expect("genie banks prebuilt")
            };

            for (ki, &k) in ctx.data_ks.iter().enumerate() {
                let payload = draw_payload(ctx.set.bits_per_block, &mut rng);
                let tx_idx = candidate_index_of_payload(payload, ctx)?;
                let x = ctx.set.list[tx_idx].x_matrix(cfg, &ctx.cons);
                let y =
                    &chan.blocks[k] * &x + awgn(cfg.n_rx, cfg.block_len, cfg.noise_var, &mut rng);
                let estimate = window.estimate(k)?;
                for (di, &kind) in ctx.scenario.detectors.iter().enumerate() {
                    let dec =
                        dispatch_detector(kind, &banks[ki], &y, &chan.blocks[k], &estimate.h_hat, ctx)?;
                    out.per_detector[di].push((k, payload, ctx.set.list[dec.candidate_index].payload));
                    if ctx.collect_trace {
                        out.trace.push((di, k, estimate.h_hat.clone()));
                    }
                }
            }
        }
        EstimatorKind::Dd => {
            let pilot_y = chan.blocks[0].scale(pilot_scale)
                + awgn(cfg.n_rx, cfg.n_tx, cfg.noise_var, &mut rng);
            let init = ls_pilot_estimate(&pilot_y, cfg, 0);
            let mut states: Vec<ChannelEstimate> = vec![init; ctx.scenario.detectors.len()];
            let bank = &ctx.banks.as_ref().expect("dd banks prebuilt")[0];

            for &k in &ctx.data_ks {
                let payload = draw_payload(ctx.set.bits_per_block, &mut rng);
                let tx_idx = candidate_index_of_payload(payload, ctx)?;
                let x = ctx.set.list[tx_idx].x_matrix(cfg, &ctx.cons);
                let y =
                    &chan.blocks[k] * &x + awgn(cfg.n_rx, cfg.block_len, cfg.noise_var, &mut rng);
                for (di, &kind) in ctx.scenario.detectors.iter().enumerate() {
                    let dec =
                        dispatch_detector(kind, bank, &y, &chan.blocks[k], &states[di].h_hat, ctx)?;
                    out.per_detector[di].push((k, payload, ctx.set.list[dec.candidate_index].payload));
                    if ctx.collect_trace {
                        out.trace.push((di, k, states[di].h_hat.clone()));
                    }
                    // each detector tracks the channel with its own decisions
                    if kind != DetectorKind::PerfectCsi {
                        let x_hat = ctx.set.list[dec.candidate_index].x_matrix(cfg, &ctx.cons);
                        states[di] = dd_update(&states[di], &y, &x_hat, k)?;
                    }
                }
            }
        }
        EstimatorKind::Perfect => {
            for &k in &ctx.data_ks {
                let payload = draw_payload(ctx.set.bits_per_block, &mut rng);
                let tx_idx = candidate_index_of_payload(payload, ctx)?;
                let x = ctx.set.list[tx_idx].x_matrix(cfg, &ctx.cons);
                let y =
                    &chan.blocks[k] * &x + awgn(cfg.n_rx, cfg.block_len, cfg.noise_var, &mut rng);
                for (di, _) in ctx.scenario.detectors.iter().enumerate() {
                    let dec = detect_per_column(&y, &chan.blocks[k], &ctx.set, &ctx.cons, &ctx.cfg)?;
                    out.per_detector[di].push((k, payload, ctx.set.list[dec.candidate_index].payload));
                }
            }
        }
    }
    Ok(out)
}

/// Expose one instrumented window for tests: returns the per-detector
/// decisions plus the channel estimates each detector consumed.
pub fn run_window_instrumented(
    scenario: &Scenario,
    snr_db: f64,
    window_index: u64,
) -> Result<WindowResult> {
    let ctx = sweep_ctx(scenario, snr_db, true)?;
    run_frame_window(&ctx, window_index)
}

fn sweep_ctx(scenario: &Scenario, snr_db: f64, collect_trace: bool) -> Result<SweepCtx> {
    let cfg = scenario.system_config(snr_db);
    cfg.validate()?;
    let cons = build_constellation(cfg.mod_kind, cfg.mod_order, cfg.symbol_power)?;
    let set = enumerate_candidates(&cfg, &cons, scenario.candidate_mode, DEFAULT_CANDIDATE_CAP)?;
    let truth = spatial_correlation(&scenario.spatial.to_model()?, &cfg)?;
    let data_ks = crate::analysis::data_block_indices(scenario.estimator, cfg.frame_len);
    let n_blocks = match scenario.estimator {
        EstimatorKind::Mb => 2 * cfg.frame_len + 1,
        EstimatorKind::Dd | EstimatorKind::Perfect => cfg.frame_len,
    };
    let banks = if scenario.stats_mode == StatsMode::EstimatedPhi
        || scenario.estimator == EstimatorKind::Perfect
    {
        None
    } else {
        let rx = receiver_statistics(&truth, scenario.stats_mode);
        Some(Arc::new(build_banks(
            scenario, &cfg, &cons, &set, &rx, &data_ks,
        )?))
    };
    Ok(SweepCtx {
        scenario: scenario.clone(),
        cfg,
        cons,
        set,
        truth,
        banks,
        data_ks,
        n_blocks,
        collect_trace,
    })
}

/// Run the full SNR sweep of a scenario with `workers` threads.
///
/// Identical `(seed, scenario)` pairs produce byte-identical CSVs for any
/// worker count.
pub fn run_sweep(scenario: &Scenario, workers: usize) -> Result<BerCurve> {
    scenario.validate()?;
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(workers.max(1))
        .build()
        .map_err(|e| Error::InvalidConfig(format!("worker pool: {e}")))?;

    let n_det = scenario.detectors.len();
    let mut points: Vec<BerPoint> = Vec::new();

    for (snr_idx, &snr_db) in scenario.snr_db.iter().enumerate() {
        let ctx = Arc::new(sweep_ctx(scenario, snr_db, false)?);
        let bits_per_block = ctx.set.bits_per_block as u64;

        let mut totals = vec![BerCell::default(); n_det];
        let mut per_k: Vec<Vec<(usize, BerCell)>> = (0..n_det)
            .map(|_| ctx.data_ks.iter().map(|&k| (k, BerCell::default())).collect())
            .collect();
        let mut window_idx: u64 = 0;
        let mut hit_max_bits = false;

        loop {
            let batch: Vec<u64> = (window_idx..window_idx + BATCH_WINDOWS).collect();
            window_idx += BATCH_WINDOWS;
            let results: Result<Vec<WindowResult>> = pool.install(|| {
                batch
                    .par_iter()
                    .map(|&w| run_frame_window(&ctx, (snr_idx as u64) << 40 | w))
                    .collect()
            });
            for res in results? {
                for (di, rows) in res.per_detector.iter().enumerate() {
                    for &(k, tx, rx) in rows {
                        let errs = (tx ^ rx).count_ones() as u64;
                        totals[di].add(bits_per_block, errs);
                        let slot = per_k[di]
                            .iter_mut()
                            .find(|(kk, _)| *kk == k)
                            .expect("known block index");
                        slot.1.add(bits_per_block, errs);
                    }
                }
            }

            let min_errors = totals.iter().map(|c| c.errors).min().unwrap_or(0);
            let bits_done = totals.first().map(|c| c.bits).unwrap_or(0);
            if min_errors >= scenario.stop.min_errors {
                break;
            }
            if bits_done >= scenario.stop.max_bits {
                hit_max_bits = true;
                break;
            }
        }

        for di in 0..n_det {
            points.push(BerPoint {
                detector: scenario.detectors[di],
                estimator: scenario.estimator,
                snr_db,
                total: totals[di],
                per_k: per_k[di].clone(),
                hit_max_bits,
            });
        }
    }

    // order rows by detector (scenario order) then SNR ascending
    points.sort_by(|a, b| {
        let da = scenario.detectors.iter().position(|d| *d == a.detector);
        let db = scenario.detectors.iter().position(|d| *d == b.detector);
        da.cmp(&db)
            .then(a.snr_db.partial_cmp(&b.snr_db).unwrap())
    });
    Ok(BerCurve { points })
}
