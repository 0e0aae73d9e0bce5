//! Spatial and temporal correlation models and synthesis of space-time
//! correlated block-fading channel sequences.
//!
//! A channel sequence H(0),...,H(K) has separable correlation: the stacked
//! vec(H(k)) sequence has covariance R_T (x) Phi, where [R_T]_{kl} is the
//! block-lag temporal correlation and Phi the spatial correlation of
//! vec(H(k)). Synthesis draws an i.i.d. complex Gaussian panel W and applies
//! the spatial square root on the left and the temporal Cholesky factor
//! across the block axis.

use std::f64::consts::PI;

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::bessel::j0;
use crate::config::SystemConfig;
use crate::linalg::{hermitian_deviation, kron, min_eigenvalue, psd_sqrt, CMat, CVec, C64};
use crate::{Error, Result};

/// Identifies one reproducible random stream: `(seed, stream)` fully
/// determines the draw sequence, independent of scheduling.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct RngStream {
    pub seed: u64,
    pub stream: u64,
}

impl RngStream {
    pub fn new(seed: u64, stream: u64) -> Self {
        Self { seed, stream }
    }

    /// Instantiate the generator for this stream.
    pub fn rng(&self) -> ChaCha8Rng {
        let mut rng = ChaCha8Rng::seed_from_u64(self.seed);
        rng.set_stream(self.stream);
        rng
    }
}

/// Spatial correlation model for the antenna arrays.
#[derive(Debug, Clone)]
pub enum SpatialModel {
    /// Isotropic scattering on uniform linear arrays with the same antenna
    /// spacing (in wavelengths) at both ends: entries J0(2*pi*|i-j|*spacing).
    Bessel { spacing: f64 },
    /// Exponential profile: receive entries r^|i-j|, transmit entries t^|i-j|.
    Exponential { r: f64, t: f64 },
    /// User-supplied per-side matrices combined as Phi = Phi_T (x) Phi_R.
    ExplicitKron { phi_t: CMat, phi_r: CMat },
    /// User-supplied full spatial correlation of vec(H); the per-side
    /// matrices are recovered as normalized partial traces.
    Explicit { phi: CMat },
}

/// Block-lag temporal correlation model.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum TemporalModel {
    /// Isotropic Doppler: rho_T(lag) = J0(2*pi*f_D*T_s*B*lag).
    Jakes,
    /// Time-invariant channel: rho_T = 1.
    Static,
}

/// Spatial correlation matrices produced by [`spatial_correlation`].
#[derive(Debug, Clone)]
pub struct SpatialCorrelation {
    pub phi_t: CMat,
    pub phi_r: CMat,
    pub phi: CMat,
}

/// A synthesized channel sequence H(0),...,H(K) plus its provenance.
#[derive(Debug, Clone)]
pub struct ChannelRealization {
    pub blocks: Vec<CMat>,
    pub stream: RngStream,
}

/// Temporal correlation coefficient at a signed block lag.
pub fn temporal_correlation(lag: i64, model: TemporalModel, cfg: &SystemConfig) -> f64 {
    match model {
        TemporalModel::Static => 1.0,
        TemporalModel::Jakes => {
            let x = 2.0 * PI * cfg.doppler * cfg.block_len as f64 * lag.unsigned_abs() as f64;
            j0(x)
        }
    }
}

fn toeplitz_profile(n: usize, value: impl Fn(usize) -> f64) -> CMat {
    CMat::from_fn(n, n, |i, j| C64::new(value(i.abs_diff(j)), 0.0))
}

/// Build (Phi_T, Phi_R, Phi) for a spatial model.
///
/// Explicit matrices are checked for Hermitian symmetry, unit diagonal and
/// positive semidefiniteness (eigenvalues above -1e-10).
pub fn spatial_correlation(model: &SpatialModel, cfg: &SystemConfig) -> Result<SpatialCorrelation> {
    match model {
        SpatialModel::Bessel { spacing } => {
            let f = |d: usize| j0(2.0 * PI * d as f64 * spacing);
            let phi_t = toeplitz_profile(cfg.n_tx, f);
            let phi_r = toeplitz_profile(cfg.n_rx, f);
            let phi = kron(&phi_t, &phi_r);
            Ok(SpatialCorrelation { phi_t, phi_r, phi })
        }
        SpatialModel::Exponential { r, t } => {
            if !(0.0..1.0).contains(r) || !(0.0..1.0).contains(t) {
                return Err(Error::InvalidConfig(
                    "exponential correlation parameters must lie in [0, 1)".into(),
                ));
            }
            let phi_t = toeplitz_profile(cfg.n_tx, |d| t.powi(d as i32));
            let phi_r = toeplitz_profile(cfg.n_rx, |d| r.powi(d as i32));
            let phi = kron(&phi_t, &phi_r);
            Ok(SpatialCorrelation { phi_t, phi_r, phi })
        }
        SpatialModel::ExplicitKron { phi_t, phi_r } => {
            check_correlation_matrix(phi_t, cfg.n_tx)?;
            check_correlation_matrix(phi_r, cfg.n_rx)?;
            let phi = kron(phi_t, phi_r);
            Ok(SpatialCorrelation {
                phi_t: phi_t.clone(),
                phi_r: phi_r.clone(),
                phi,
            })
        }
        SpatialModel::Explicit { phi } => {
            check_correlation_matrix(phi, cfg.n_rx * cfg.n_tx)?;
            // One-sided correlations as normalized partial traces of Phi.
            let (nr, nt) = (cfg.n_rx, cfg.n_tx);
            let phi_r = CMat::from_fn(nr, nr, |i, m| {
                (0..nt).map(|j| phi[(j * nr + i, j * nr + m)]).sum::<C64>() / nt as f64
            });
            let phi_t = CMat::from_fn(nt, nt, |j, n| {
                (0..nr).map(|i| phi[(j * nr + i, n * nr + i)]).sum::<C64>() / nr as f64
            });
            Ok(SpatialCorrelation {
                phi_t,
                phi_r,
                phi: phi.clone(),
            })
        }
    }
}

fn check_correlation_matrix(m: &CMat, dim: usize) -> Result<()> {
    if m.nrows() != dim || m.ncols() != dim {
        return Err(Error::ShapeMismatch {
            context: format!(
                "correlation matrix is {}x{}, expected {dim}x{dim}",
                m.nrows(),
                m.ncols()
            ),
        });
    }
    let dev = hermitian_deviation(m);
    if dev > 1e-10 {
        return Err(Error::NotHermitian { deviation: dev });
    }
    for i in 0..dim {
        if (m[(i, i)].re - 1.0).abs() > 1e-9 || m[(i, i)].im.abs() > 1e-9 {
            return Err(Error::InvalidConfig(
                "correlation matrix must have unit diagonal".into(),
            ));
        }
    }
    let min_eig = min_eigenvalue(m);
    if min_eig < -1e-10 {
        return Err(Error::ExplicitNotPsd { min_eig });
    }
    Ok(())
}

/// One draw from CN(0, 1): independent real and imaginary parts of variance
/// 1/2 each, by Box-Muller on the stream's uniforms.
pub fn standard_complex_gaussian(rng: &mut impl Rng) -> C64 {
    let u1: f64 = 1.0 - rng.gen::<f64>(); // (0, 1]
    let u2: f64 = rng.gen();
    let radius = (-u1.ln()).sqrt();
    let angle = 2.0 * PI * u2;
    C64::new(radius * angle.cos(), radius * angle.sin())
}

/// Matrix of i.i.d. circularly symmetric complex Gaussian noise with per-entry
/// variance `noise_var` (filled column by column).
pub fn awgn(rows: usize, cols: usize, noise_var: f64, rng: &mut impl Rng) -> CMat {
    debug_assert!(noise_var >= 0.0);
    let scale = noise_var.sqrt();
    CMat::from_fn(rows, cols, |_, _| standard_complex_gaussian(rng) * scale)
}

/// Synthesize `n_blocks` correlated channel matrices.
///
/// The stacked sequence has covariance R_T (x) Phi with [R_T]_{kl} =
/// rho_T(k-l); per-entry marginals are CN(0, 1). The draw is fully
/// determined by `stream`.
pub fn generate_channels(
    cfg: &SystemConfig,
    spatial: &SpatialCorrelation,
    temporal: TemporalModel,
    n_blocks: usize,
    stream: RngStream,
) -> Result<ChannelRealization> {
    assert!(n_blocks >= 1);
    let mut rng = stream.rng();
    let dim = cfg.n_rx * cfg.n_tx;
    let phi_sqrt = psd_sqrt(&spatial.phi)?;

    let blocks = match temporal {
        TemporalModel::Static => {
            let w = CVec::from_fn(dim, |_, _| standard_complex_gaussian(&mut rng));
            let h = crate::linalg::unvec(&(&phi_sqrt * w), cfg.n_rx, cfg.n_tx);
            vec![h; n_blocks]
        }
        TemporalModel::Jakes => {
            let r_t =
                toeplitz_profile(n_blocks, |d| temporal_correlation(d as i64, temporal, cfg));
            let c_t = crate::linalg::CholFactor::new(&r_t, 1e-10)
                .map_err(|_| Error::TemporalGramNotPsd)?;
            // W: dim x n_blocks i.i.d. CN(0,1), drawn column-major.
            let w = CMat::from_fn(dim, n_blocks, |_, _| standard_complex_gaussian(&mut rng));
            // G = Phi^{1/2} W C_T^T gives E{g_k g_l^H} = rho_T(k-l) Phi.
            let g = &phi_sqrt * w * c_t.l().transpose();
            (0..n_blocks)
                .map(|k| crate::linalg::unvec(&g.column(k).into_owned(), cfg.n_rx, cfg.n_tx))
                .collect()
        }
    };

    Ok(ChannelRealization { blocks, stream })
}
