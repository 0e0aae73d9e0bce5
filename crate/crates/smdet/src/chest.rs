//! Pilot-assisted channel estimation.
//!
//! Two trackers are provided. The model-based estimator fits a quadratic
//! polynomial per channel coefficient through three consecutive pilot blocks
//! (one every `frame_len` blocks) and interpolates the channel anywhere in
//! the two-frame window. The decision-directed estimator refreshes the
//! columns of the channel estimate from detected data blocks treated as
//! pseudo-pilots. A blind spatial-correlation estimator built on the pilot
//! estimates rounds out the module.

use nalgebra::Matrix3;

use crate::config::SystemConfig;
use crate::corrmodel::{temporal_correlation, TemporalModel};
use crate::linalg::{pseudo_inverse, CMat, C64};
use crate::{Error, Result};

/// Where a channel estimate came from.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum EstimateSource {
    /// Polynomial interpolation over three pilot blocks.
    Mb,
    /// Decision-directed least squares (also the raw pilot-block estimate).
    Dd,
    /// Genie knowledge of the true channel.
    Perfect,
}

/// A channel estimate attached to the block it estimates.
#[derive(Debug, Clone)]
pub struct ChannelEstimate {
    pub h_hat: CMat,
    pub source: EstimateSource,
    pub block_idx: usize,
}

/// Interpolation weights w(k) applied to the three pilot-epoch estimates.
#[derive(Debug, Clone, Copy)]
pub struct MbWeights {
    pub w: [f64; 3],
    pub k: usize,
    pub k_p: usize,
    pub frame_len: usize,
}

/// Quadratic (Lagrange) interpolation weights for epoch `k` from pilot
/// epochs {k_p, k_p+N, k_p+2N}.
///
/// The weights always sum to one; at a pilot epoch they collapse to a
/// standard basis vector.
pub fn mb_weights(k: usize, k_p: usize, frame_len: usize) -> Result<MbWeights> {
    if frame_len == 0 {
        return Err(Error::SingularT);
    }
    let nodes = [
        k_p as f64,
        (k_p + frame_len) as f64,
        (k_p + 2 * frame_len) as f64,
    ];
    let kk = k as f64;
    let mut w = [0.0; 3];
    for i in 0..3 {
        let mut v = 1.0;
        for j in 0..3 {
            if i != j {
                v *= (kk - nodes[j]) / (nodes[i] - nodes[j]);
            }
        }
        w[i] = v;
    }
    Ok(MbWeights {
        w,
        k,
        k_p,
        frame_len,
    })
}

/// The pilot-epoch Vandermonde matrix [[k^2, k, 1]; ...] for the three pilot
/// epochs starting at `k_p`. Exposed so the weight computation can be
/// validated against the direct matrix route.
pub fn pilot_epoch_matrix(k_p: usize, frame_len: usize) -> Matrix3<f64> {
    let rows = [k_p, k_p + frame_len, k_p + 2 * frame_len];
    Matrix3::from_fn(|r, c| {
        let k = rows[r] as f64;
        match c {
            0 => k * k,
            1 => k,
            _ => 1.0,
        }
    })
}

/// Temporal moments of the model-based estimator at block `k`:
/// the interpolation weights, their squared norm, the pilot-to-data
/// correlation contraction w·q(k), and the pilot-pilot contraction nu(k).
#[derive(Debug, Clone, Copy)]
pub struct MbMoments {
    pub w: [f64; 3],
    pub q: [f64; 3],
    /// w(k) · q(k)
    pub wq: f64,
    /// w(k) R_p w(k)^T with R_p the pilot-epoch temporal Gram.
    pub nu: f64,
    /// ||w(k)||^2
    pub w_norm_sq: f64,
}

/// Compute the temporal moments for a block index inside the two-frame
/// window anchored at pilot epoch `k_p`.
pub fn mb_temporal_moments(
    k: usize,
    k_p: usize,
    cfg: &SystemConfig,
    temporal: TemporalModel,
) -> Result<MbMoments> {
    let n = cfg.frame_len;
    let weights = mb_weights(k, k_p, n)?;
    let w = weights.w;
    let rho = |lag: i64| temporal_correlation(lag, temporal, cfg);
    let q = [
        rho(k as i64 - k_p as i64),
        rho(k as i64 - k_p as i64 - n as i64),
        rho(k as i64 - k_p as i64 - 2 * n as i64),
    ];
    let rho_n = rho(n as i64);
    let rho_2n = rho(2 * n as i64);
    let r_p = [
        [1.0, rho_n, rho_2n],
        [rho_n, 1.0, rho_n],
        [rho_2n, rho_n, 1.0],
    ];
    let mut nu = 0.0;
    for i in 0..3 {
        for j in 0..3 {
            nu += w[i] * r_p[i][j] * w[j];
        }
    }
    let wq = w.iter().zip(&q).map(|(a, b)| a * b).sum();
    let w_norm_sq = w.iter().map(|a| a * a).sum();
    Ok(MbMoments {
        w,
        q,
        wq,
        nu,
        w_norm_sq,
    })
}

/// One model-based estimation window: the three pilot-epoch least-squares
/// estimates Y(k_p + iN)/sqrt(eps_p).
#[derive(Debug, Clone)]
pub struct MbWindow {
    pub k_p: usize,
    pub frame_len: usize,
    pub pilot_ls: [CMat; 3],
}

impl MbWindow {
    /// Build from the three received pilot blocks.
    pub fn from_pilot_obs(
        k_p: usize,
        cfg: &SystemConfig,
        pilot_obs: [&CMat; 3],
    ) -> Result<Self> {
        let scale = 1.0 / cfg.pilot_power.sqrt();
        for y in &pilot_obs {
            if y.nrows() != cfg.n_rx || y.ncols() != cfg.n_tx {
                return Err(Error::ShapeMismatch {
                    context: "pilot observation must be n_rx x n_tx".into(),
                });
            }
        }
        Ok(Self {
            k_p,
            frame_len: cfg.frame_len,
            pilot_ls: [
                pilot_obs[0].scale(scale),
                pilot_obs[1].scale(scale),
                pilot_obs[2].scale(scale),
            ],
        })
    }

    /// Interpolated channel estimate at block `k` (valid for
    /// k_p <= k < k_p + 2N).
    pub fn estimate(&self, k: usize) -> Result<ChannelEstimate> {
        let w = mb_weights(k, self.k_p, self.frame_len)?.w;
        let mut h = self.pilot_ls[0].scale(w[0]);
        h += self.pilot_ls[1].scale(w[1]);
        h += self.pilot_ls[2].scale(w[2]);
        Ok(ChannelEstimate {
            h_hat: h,
            source: EstimateSource::Mb,
            block_idx: k,
        })
    }

    /// Fitted per-coefficient polynomial coefficients (alpha, beta, gamma)
    /// as matrices, from the epoch-matrix inverse.
    pub fn coeffs(&self) -> Result<[CMat; 3]> {
        let t = pilot_epoch_matrix(self.k_p, self.frame_len);
        let t_inv = t.try_inverse().ok_or(Error::SingularT)?;
        let (nr, nt) = self.pilot_ls[0].shape();
        let mut out = [CMat::zeros(nr, nt), CMat::zeros(nr, nt), CMat::zeros(nr, nt)];
        for (row, coeff) in out.iter_mut().enumerate() {
            for t_idx in 0..3 {
                *coeff += self.pilot_ls[t_idx].scale(t_inv[(row, t_idx)]);
            }
        }
        Ok(out)
    }
}

/// Covariance of the stacked model-based estimation error at block `k`.
#[derive(Debug, Clone)]
pub struct ErrorCovariance {
    pub psi_e: CMat,
    pub block_idx: usize,
}

/// Psi_E(k) = (nu - 2 w·q + 1) Phi + sigma_z^2 ||w||^2 I.
pub fn mb_error_covariance(
    k: usize,
    k_p: usize,
    cfg: &SystemConfig,
    phi: &CMat,
    temporal: TemporalModel,
) -> Result<ErrorCovariance> {
    let m = mb_temporal_moments(k, k_p, cfg, temporal)?;
    let dim = cfg.n_rx * cfg.n_tx;
    let psi_e = phi.scale(m.nu - 2.0 * m.wq + 1.0)
        + CMat::identity(dim, dim).scale(cfg.noise_var * m.w_norm_sq);
    Ok(ErrorCovariance { psi_e, block_idx: k })
}

/// Least-squares estimate from a received pilot block: Y / sqrt(eps_p).
pub fn ls_pilot_estimate(y: &CMat, cfg: &SystemConfig, block_idx: usize) -> ChannelEstimate {
    ChannelEstimate {
        h_hat: y.scale(1.0 / cfg.pilot_power.sqrt()),
        source: EstimateSource::Dd,
        block_idx,
    }
}

/// Decision-directed update: re-estimate the channel columns of the
/// antennas activated by the detected block and carry the rest over.
///
/// `x_hat` is the detected (pseudo-pilot) block; its nonzero rows define the
/// active antenna set.
pub fn dd_update(
    prev: &ChannelEstimate,
    y: &CMat,
    x_hat: &CMat,
    block_idx: usize,
) -> Result<ChannelEstimate> {
    let active: Vec<usize> = (0..x_hat.nrows())
        .filter(|&i| x_hat.row(i).iter().any(|v| v.norm_sqr() > 0.0))
        .collect();
    dd_update_with_active(prev, y, x_hat, &active, block_idx)
}

/// [`dd_update`] with an explicit active-antenna set; errors if a claimed
/// antenna has an all-zero pseudo-pilot row.
pub fn dd_update_with_active(
    prev: &ChannelEstimate,
    y: &CMat,
    x_hat: &CMat,
    active: &[usize],
    block_idx: usize,
) -> Result<ChannelEstimate> {
    if active.is_empty() {
        return Ok(ChannelEstimate {
            h_hat: prev.h_hat.clone(),
            source: EstimateSource::Dd,
            block_idx,
        });
    }
    let b = x_hat.ncols();
    let mut truncated = CMat::zeros(active.len(), b);
    for (r, &a) in active.iter().enumerate() {
        let mut zero = true;
        for j in 0..b {
            truncated[(r, j)] = x_hat[(a, j)];
            if x_hat[(a, j)].norm_sqr() > 0.0 {
                zero = false;
            }
        }
        if zero {
            return Err(Error::RankDeficientTruncation { antenna: a });
        }
    }
    let pinv = pseudo_inverse(&truncated, 1e-10)?;
    let refreshed = y * pinv; // n_rx x |active|
    let mut h = prev.h_hat.clone();
    for (r, &a) in active.iter().enumerate() {
        h.set_column(a, &refreshed.column(r));
    }
    Ok(ChannelEstimate {
        h_hat: h,
        source: EstimateSource::Dd,
        block_idx,
    })
}

/// Output of the blind spatial-correlation estimator.
#[derive(Debug, Clone)]
pub struct CorrelationEstimate {
    pub r_hat: f64,
    pub t_hat: f64,
    /// Exponential-profile matrices rebuilt from (r_hat, t_hat) with the
    /// sign pattern of the raw averages.
    pub phi_r_refined: CMat,
    pub phi_t_refined: CMat,
    /// Raw three-pilot time averages.
    pub phi_r_raw: CMat,
    pub phi_t_raw: CMat,
}

/// Estimate the per-side spatial correlation from the three pilot-epoch
/// channel estimates of one window.
///
/// Raw averages: Phi_R = sum_k H_k H_k^H / (3 N_T) and
/// Phi_T = sum_k H_k^T H_k^* / (3 N_R). The refined matrices fit an
/// exponential profile rho^|i-j| to the entry magnitudes and reapply the
/// sign of the raw real parts.
pub fn estimate_spatial_correlation(
    pilot_estimates: [&ChannelEstimate; 3],
    cfg: &SystemConfig,
) -> CorrelationEstimate {
    let (nr, nt) = (cfg.n_rx, cfg.n_tx);
    let mut phi_r_raw = CMat::zeros(nr, nr);
    let mut phi_t_raw = CMat::zeros(nt, nt);
    for est in &pilot_estimates {
        let h = &est.h_hat;
        phi_r_raw += h * h.adjoint();
        phi_t_raw += h.transpose() * h.conjugate();
    }
    phi_r_raw.unscale_mut(3.0 * nt as f64);
    phi_t_raw.unscale_mut(3.0 * nr as f64);

    let r_hat = fit_exponential_profile(&phi_r_raw);
    let t_hat = fit_exponential_profile(&phi_t_raw);

    let refine = |raw: &CMat, rho: f64| {
        CMat::from_fn(raw.nrows(), raw.ncols(), |i, j| {
            let sign = if raw[(i, j)].re < 0.0 { -1.0 } else { 1.0 };
            C64::new(rho.powi(i.abs_diff(j) as i32) * sign, 0.0)
        })
    };

    CorrelationEstimate {
        r_hat,
        t_hat,
        phi_r_refined: refine(&phi_r_raw, r_hat),
        phi_t_refined: refine(&phi_t_raw, t_hat),
        phi_r_raw,
        phi_t_raw,
    }
}

/// Least-squares fit of rho in [0, 1) to the entry magnitudes of a raw
/// correlation average: minimizes sum_ij (rho^|i-j| - |raw_ij|)^2.
///
/// A 64-point grid brackets the minimum, then golden-section search refines
/// it to 1e-6.
fn fit_exponential_profile(raw: &CMat) -> f64 {
    let n = raw.nrows();
    let objective = |rho: f64| {
        let mut acc = 0.0;
        for i in 0..n {
            for j in 0..n {
                let d = rho.powi(i.abs_diff(j) as i32) - raw[(i, j)].norm();
                acc += d * d;
            }
        }
        acc
    };
    let hi = 1.0 - 1e-6;
    let grid = 64;
    let mut best = 0usize;
    let mut best_val = f64::INFINITY;
    for g in 0..=grid {
        let rho = hi * g as f64 / grid as f64;
        let v = objective(rho);
        if v < best_val {
            best_val = v;
            best = g;
        }
    }
    let lo = hi * best.saturating_sub(1) as f64 / grid as f64;
    let up = hi * (best + 1).min(grid) as f64 / grid as f64;
    golden_section(objective, lo, up, 1e-6)
}

fn golden_section(f: impl Fn(f64) -> f64, mut lo: f64, mut hi: f64, tol: f64) -> f64 {
    let inv_phi = 0.5 * (5.0f64.sqrt() - 1.0);
    let mut x1 = hi - inv_phi * (hi - lo);
    let mut x2 = lo + inv_phi * (hi - lo);
    let mut f1 = f(x1);
    let mut f2 = f(x2);
    while hi - lo > tol {
        if f1 <= f2 {
            hi = x2;
            x2 = x1;
            f2 = f1;
            x1 = hi - inv_phi * (hi - lo);
            f1 = f(x1);
        } else {
            lo = x1;
            x1 = x2;
            f1 = f2;
            x2 = lo + inv_phi * (hi - lo);
            f2 = f(x2);
        }
    }
    0.5 * (lo + hi)
}

/// Sample temporal correlation between consecutive pilot-epoch estimates
/// (one frame apart). Optional alternative to genie knowledge of the
/// temporal model; returns an estimate of rho_T at lag `frame_len`.
pub fn estimate_temporal_pilot_lag(pilot_estimates: [&ChannelEstimate; 3]) -> f64 {
    let h0 = &pilot_estimates[0].h_hat;
    let h1 = &pilot_estimates[1].h_hat;
    let h2 = &pilot_estimates[2].h_hat;
    let mut cross = 0.0;
    let mut power = 0.0;
    for (a, b) in [(h0, h1), (h1, h2)] {
        cross += a.iter().zip(b.iter()).map(|(x, y)| (x * y.conj()).re).sum::<f64>();
        power += 0.5 * (a.norm_squared() + b.norm_squared());
    }
    if power <= 0.0 {
        return 0.0;
    }
    (cross / power).clamp(-1.0, 1.0)
}
