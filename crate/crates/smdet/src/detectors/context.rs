//! Per-estimator conditional statistics of the received block.
//!
//! Conditioned on the channel estimate, vec(Y(k)) is complex Gaussian with a
//! mean that is linear in vec(H_hat) and a covariance that depends on the
//! candidate only through the transmitted matrix. Each context precomputes
//! the estimate-independent pieces: the conditioning operator A and the
//! covariance kernel K such that
//!
//!   mean  = (X^T (x) I) · A · vec(H_hat)
//!   cov   = sigma_z^2 I + (X^T (x) I) · K · (X^* (x) I)
//!
//! The reduced (ZRC/ZTC) contexts carry the same structure on one side of
//! the link only.

use crate::chest::{mb_temporal_moments, MbMoments};
use crate::config::SystemConfig;
use crate::corrmodel::TemporalModel;
use crate::linalg::{unvec, CMat, CVec, CholFactor, C64};
use crate::Result;

/// Covariance sandwich (X^T (x) I) M (X^* (x) I), evaluated blockwise.
pub fn sandwich_kron(x: &CMat, m: &CMat, n_rx: usize) -> CMat {
    let b = x.ncols();
    let nt = x.nrows();
    let mut out = CMat::zeros(b * n_rx, b * n_rx);
    for j in 0..b {
        for jp in 0..b {
            for a in 0..nt {
                let xa = x[(a, j)];
                if xa.norm_sqr() == 0.0 {
                    continue;
                }
                for ap in 0..nt {
                    let w = xa * x[(ap, jp)].conj();
                    if w.norm_sqr() == 0.0 {
                        continue;
                    }
                    for p in 0..n_rx {
                        for q in 0..n_rx {
                            out[(j * n_rx + p, jp * n_rx + q)] +=
                                w * m[(a * n_rx + p, ap * n_rx + q)];
                        }
                    }
                }
            }
        }
    }
    out
}

/// Shared mean/covariance assembly for the full-dimension detectors.
#[derive(Debug, Clone)]
pub struct EstimatorKernel {
    /// Conditioning operator A (N_R N_T square).
    pub a_mat: CMat,
    /// Covariance kernel K (N_R N_T square).
    pub kernel: CMat,
    pub n_rx: usize,
    pub n_tx: usize,
    pub block_len: usize,
    pub noise_var: f64,
    pub symbol_power: f64,
}

impl EstimatorKernel {
    /// A · vec(H_hat); gathered per candidate into the conditional mean.
    pub fn a_vec(&self, vec_h_hat: &CVec) -> CVec {
        &self.a_mat * vec_h_hat
    }

    /// Conditional mean for a general candidate X: vec(unvec(A vecH) · X).
    pub fn mean_general(&self, a_vh: &CVec, x: &CMat) -> CVec {
        let a_h = unvec(a_vh, self.n_rx, self.n_tx);
        crate::linalg::vec_of(&(a_h * x))
    }

    /// Conditional covariance for a general candidate X.
    pub fn cov_general(&self, x: &CMat) -> CMat {
        let dim = self.block_len * self.n_rx;
        sandwich_kron(x, &self.kernel, self.n_rx) + CMat::identity(dim, dim).scale(self.noise_var)
    }

    /// PSK-SM covariance keyed on the antenna pattern alone:
    /// (sigma_z^2 / eps_s) I + (L^T (x) I) K (L^* (x) I).
    pub fn cov_psk(&self, antenna: &[u8]) -> CMat {
        let b = antenna.len();
        let nr = self.n_rx;
        let mut out = CMat::zeros(b * nr, b * nr);
        for j in 0..b {
            for jp in 0..b {
                let (a, ap) = (antenna[j] as usize, antenna[jp] as usize);
                for p in 0..nr {
                    for q in 0..nr {
                        out[(j * nr + p, jp * nr + q)] = self.kernel[(a * nr + p, ap * nr + q)];
                    }
                }
            }
        }
        let scale = self.noise_var / self.symbol_power;
        for i in 0..b * nr {
            out[(i, i)] += C64::new(scale, 0.0);
        }
        out
    }

    /// QAM-SM covariance keyed on (antenna pattern, per-slot |s|^2).
    pub fn cov_qam(&self, antenna: &[u8], slot_powers: &[f64]) -> CMat {
        let b = antenna.len();
        let nr = self.n_rx;
        let mut out = CMat::zeros(b * nr, b * nr);
        for j in 0..b {
            for jp in 0..b {
                let (a, ap) = (antenna[j] as usize, antenna[jp] as usize);
                for p in 0..nr {
                    for q in 0..nr {
                        out[(j * nr + p, jp * nr + q)] = self.kernel[(a * nr + p, ap * nr + q)];
                    }
                }
            }
        }
        for j in 0..b {
            let scale = self.noise_var / slot_powers[j];
            for p in 0..nr {
                out[(j * nr + p, j * nr + p)] += C64::new(scale, 0.0);
            }
        }
        out
    }

    /// Conditional mean gathered for an SM candidate (depends on L only).
    pub fn mean_sm(&self, a_vh: &CVec, antenna: &[u8], out: &mut CVec) {
        let nr = self.n_rx;
        for (j, &a) in antenna.iter().enumerate() {
            for p in 0..nr {
                out[j * nr + p] = a_vh[a as usize * nr + p];
            }
        }
    }
}

/// Statistics context for detection with the polynomial (model-based)
/// channel estimator at data block `k` of the window anchored at `k_p`.
#[derive(Debug, Clone)]
pub struct MbContext {
    pub kernel: EstimatorKernel,
    pub moments: MbMoments,
    pub k: usize,
    pub k_p: usize,
    /// Covariance of vec(H_hat(k)).
    pub sigma22: CMat,
    /// Receiver-side spatial correlation used to build the context.
    pub phi: CMat,
}

impl MbContext {
    pub fn new(
        cfg: &SystemConfig,
        phi: &CMat,
        temporal: TemporalModel,
        k: usize,
        k_p: usize,
    ) -> Result<Self> {
        let m = mb_temporal_moments(k, k_p, cfg, temporal)?;
        let dim = cfg.n_rx * cfg.n_tx;
        let sigma22 =
            phi.scale(m.nu) + CMat::identity(dim, dim).scale(cfg.noise_var * m.w_norm_sq);
        let chol = CholFactor::new(&sigma22, 1e-12)?;
        // A = wq · Phi · Sigma22^{-1}; Phi and Sigma22 commute.
        let a_mat = chol.solve_mat(phi).scale(m.wq);
        let kernel = (CMat::identity(dim, dim) - a_mat.scale(m.wq)) * phi;
        Ok(Self {
            kernel: EstimatorKernel {
                a_mat,
                kernel,
                n_rx: cfg.n_rx,
                n_tx: cfg.n_tx,
                block_len: cfg.block_len,
                noise_var: cfg.noise_var,
                symbol_power: cfg.symbol_power,
            },
            moments: m,
            k,
            k_p,
            sigma22,
            phi: phi.clone(),
        })
    }

    /// Estimation-error covariance Psi_E(k) implied by this context.
    pub fn psi_e(&self) -> CMat {
        let dim = self.phi.nrows();
        self.phi
            .scale(self.moments.nu - 2.0 * self.moments.wq + 1.0)
            + CMat::identity(dim, dim)
                .scale(self.kernel.noise_var * self.moments.w_norm_sq)
    }
}

/// Statistics context for detection with the decision-directed estimator
/// (one data block behind); independent of the block index.
#[derive(Debug, Clone)]
pub struct DdContext {
    pub kernel: EstimatorKernel,
    pub rho1: f64,
    pub phi: CMat,
}

impl DdContext {
    pub fn new(cfg: &SystemConfig, phi: &CMat, rho1: f64) -> Result<Self> {
        let dim = cfg.n_rx * cfg.n_tx;
        let shifted = phi + CMat::identity(dim, dim).scale(cfg.noise_var);
        let chol = CholFactor::new(&shifted, 1e-12)?;
        let a_mat = chol.solve_mat(phi).scale(rho1);
        let kernel = (CMat::identity(dim, dim) - a_mat.scale(rho1)) * phi;
        Ok(Self {
            kernel: EstimatorKernel {
                a_mat,
                kernel,
                n_rx: cfg.n_rx,
                n_tx: cfg.n_tx,
                block_len: cfg.block_len,
                noise_var: cfg.noise_var,
                symbol_power: cfg.symbol_power,
            },
            rho1,
            phi: phi.clone(),
        })
    }
}

/// Either estimator's context, as stored in a statistics bank block.
#[derive(Debug, Clone)]
pub enum KernelCtx {
    Mb(MbContext),
    Dd(DdContext),
}

impl KernelCtx {
    pub fn kernel(&self) -> &EstimatorKernel {
        match self {
            KernelCtx::Mb(c) => &c.kernel,
            KernelCtx::Dd(c) => &c.kernel,
        }
    }
}

/// Reduced context ignoring receive-side correlation: works on rows of Y
/// with transmit-side kernels of dimension N_T.
#[derive(Debug, Clone)]
pub struct ZrcContext {
    /// Mean operator: conditional mean is H_hat · w_mat · X.
    pub w_mat: CMat,
    /// Covariance kernel: cov = sigma^2-term + X^H K_T X.
    pub kernel_t: CMat,
    pub noise_var: f64,
    pub symbol_power: f64,
}

impl ZrcContext {
    /// Model-based variant at block `k`.
    pub fn new_mb(
        cfg: &SystemConfig,
        phi_t: &CMat,
        temporal: TemporalModel,
        k: usize,
        k_p: usize,
    ) -> Result<Self> {
        let m = mb_temporal_moments(k, k_p, cfg, temporal)?;
        let nt = cfg.n_tx;
        let sigma22 =
            phi_t.scale(m.nu) + CMat::identity(nt, nt).scale(cfg.noise_var * m.w_norm_sq);
        let chol = CholFactor::new(&sigma22, 1e-12)?;
        let w_mat = chol.solve_mat(phi_t).scale(m.wq);
        let kernel_t = (CMat::identity(nt, nt) - w_mat.scale(m.wq)) * phi_t;
        Ok(Self {
            w_mat,
            kernel_t,
            noise_var: cfg.noise_var,
            symbol_power: cfg.symbol_power,
        })
    }

    /// Decision-directed variant; the one-block prediction uses rho_T(1) and
    /// data-power-scaled estimation noise.
    pub fn new_dd(cfg: &SystemConfig, phi_t: &CMat, rho1: f64) -> Result<Self> {
        let nt = cfg.n_tx;
        let shifted =
            phi_t + CMat::identity(nt, nt).scale(cfg.noise_var / cfg.symbol_power);
        let chol = CholFactor::new(&shifted, 1e-12)?;
        let w_mat = chol.solve_mat(phi_t).scale(rho1);
        let kernel_t = (CMat::identity(nt, nt) - w_mat.scale(rho1)) * phi_t;
        Ok(Self {
            w_mat,
            kernel_t,
            noise_var: cfg.noise_var,
            symbol_power: cfg.symbol_power,
        })
    }

    /// PSK covariance keyed on the antenna pattern:
    /// (sigma_z^2/eps_s) I_B + L^H K_T L.
    pub fn cov_psk(&self, antenna: &[u8]) -> CMat {
        let b = antenna.len();
        let mut out = CMat::from_fn(b, b, |j, jp| {
            self.kernel_t[(antenna[j] as usize, antenna[jp] as usize)]
        });
        let scale = self.noise_var / self.symbol_power;
        for i in 0..b {
            out[(i, i)] += C64::new(scale, 0.0);
        }
        out
    }

    /// General covariance: sigma_z^2 I_B + X^H K_T X.
    pub fn cov_general(&self, x: &CMat) -> CMat {
        let b = x.ncols();
        x.adjoint() * &self.kernel_t * x + CMat::identity(b, b).scale(self.noise_var)
    }
}

/// Reduced context ignoring transmit-side correlation: a single N_R
/// covariance shared by every candidate.
#[derive(Debug, Clone)]
pub struct ZtcContext {
    /// Mean operator: conditional mean is w_mat · H_hat · X.
    pub w_mat: CMat,
    /// Shared covariance factor.
    pub chol: CholFactor,
}

impl ZtcContext {
    pub fn new_mb(
        cfg: &SystemConfig,
        phi_r: &CMat,
        temporal: TemporalModel,
        k: usize,
        k_p: usize,
    ) -> Result<Self> {
        let m = mb_temporal_moments(k, k_p, cfg, temporal)?;
        let nr = cfg.n_rx;
        let d =
            phi_r.scale(m.nu) + CMat::identity(nr, nr).scale(cfg.noise_var * m.w_norm_sq);
        let chol_d = CholFactor::new(&d, 1e-12)?;
        let w_mat = chol_d.solve_mat(phi_r).scale(m.wq);
        let cov = CMat::identity(nr, nr).scale(cfg.noise_var)
            + ((CMat::identity(nr, nr) - w_mat.scale(m.wq)) * phi_r).scale(cfg.symbol_power);
        Ok(Self {
            w_mat,
            chol: CholFactor::new(&cov, 1e-12)?,
        })
    }

    pub fn new_dd(cfg: &SystemConfig, phi_r: &CMat, rho1: f64) -> Result<Self> {
        let nr = cfg.n_rx;
        let shifted = phi_r + CMat::identity(nr, nr).scale(cfg.noise_var);
        let chol_s = CholFactor::new(&shifted, 1e-12)?;
        let w_mat = chol_s.solve_mat(phi_r).scale(rho1);
        let cov = CMat::identity(nr, nr).scale(cfg.noise_var)
            + ((CMat::identity(nr, nr) - w_mat.scale(rho1)) * phi_r).scale(cfg.symbol_power);
        Ok(Self {
            w_mat,
            chol: CholFactor::new(&cov, 1e-12)?,
        })
    }
}
