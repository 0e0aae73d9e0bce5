//! Pairwise error probabilities of the error-aware ML detector, and the
//! union bound on BER they imply.
//!
//! For a transmitted block X and a competitor X', the decision metric
//! difference is a quadratic form in the received vector. Conditioned on the
//! channel estimate, the received vector is Gaussian around vec(H_hat X)
//! with covariance Psi_tilde, so the conditional PEP is the CDF of an
//! indefinite noncentral quadratic form, inverted numerically. Averaging
//! over the estimate distribution is done by Monte Carlo.

use nalgebra::SymmetricEigen;

use crate::config::SystemConfig;
use crate::corrmodel::{temporal_correlation, RngStream, TemporalModel};
use crate::detectors::{EstimatorKind, MbContext};
use crate::linalg::{hermitize, psd_sqrt, vec_of, CMat, CVec, CholFactor};
use crate::smcodec::{CandidateSet, Constellation};
use crate::{Error, Result};

use super::imhof::{normal_cdf, quadratic_form_cdf, QuadFormSpec};

/// Derived quantities of one ordered candidate pair at one block index.
#[derive(Debug, Clone)]
pub struct PairwiseCase {
    /// Difference of inverse covariances.
    pub d_mat: CMat,
    /// Difference of whitened means.
    pub eps_vec: CVec,
    /// Decision threshold of the quadratic form (defined whenever the
    /// spectrum has a nonzero eigenvalue).
    pub eta: f64,
    /// Covariance of the received vector around vec(H_hat X).
    pub psi_tilde: CMat,
}

/// Precomputed per-pair machinery for evaluating conditional PEPs at many
/// estimate draws.
pub struct PairEngine {
    ctx: MbContext,
    x_tx: CMat,
    x_a: CMat,
    x_b: CMat,
    chol_a: CholFactor,
    chol_b: CholFactor,
    logdet_diff: f64, // logdet C_b - logdet C_a
    d_mat: CMat,
    psi_tilde: CMat,
    /// Eigenvalues of Psi^{1/2} D Psi^{1/2}.
    lambdas: Vec<f64>,
    /// U^H Psi^{1/2} D and U^H Psi^{1/2}.
    g1: CMat,
    g2: CMat,
    /// Below this magnitude an eigenvalue is numerical noise of the
    /// inverse-difference and is treated as exactly zero.
    lambda_floor: f64,
}

impl PairEngine {
    /// Engine for P{metric(x_b) < metric(x_a) | x_tx transmitted}.
    ///
    /// The usual pairwise error P{X -> X'} is `new_with_roles(ctx, x, x, x')`.
    pub fn new_with_roles(ctx: &MbContext, x_tx: &CMat, x_a: &CMat, x_b: &CMat) -> Result<Self> {
        if x_a == x_b {
            return Err(Error::InvalidConfig(
                "pairwise error needs two distinct candidates".into(),
            ));
        }
        let kern = &ctx.kernel;
        let cov_a = kern.cov_general(x_a);
        let cov_b = kern.cov_general(x_b);
        let chol_a = CholFactor::new(&cov_a, 1e-12)?;
        let chol_b = CholFactor::new(&cov_b, 1e-12)?;
        let dim = cov_a.nrows();
        let inv_a = chol_a.solve_mat(&CMat::identity(dim, dim));
        let inv_b = chol_b.solve_mat(&CMat::identity(dim, dim));
        let d_mat = hermitize(&(&inv_b - &inv_a));

        let psi_e = ctx.psi_e();
        let psi_tilde = super::super::detectors::context::sandwich_kron(x_tx, &psi_e, kern.n_rx)
            + CMat::identity(dim, dim).scale(kern.noise_var);
        let psi_sqrt = psd_sqrt(&psi_tilde)?;

        let q = hermitize(&(&psi_sqrt * &d_mat * &psi_sqrt));
        let eig = SymmetricEigen::new(q);
        let lambdas: Vec<f64> = eig.eigenvalues.iter().copied().collect();
        let lambda_max = lambdas.iter().fold(0.0f64, |a, &b| a.max(b.abs()));
        // rounding noise scale of D: the largest honest eigenvalue of Q is
        // bounded by ||Psi|| * max ||C^{-1}||, and the inverse difference
        // carries relative rounding error around machine precision.
        let noise_scale =
            psi_tilde.norm() * inv_a.norm().max(inv_b.norm()) * 1e-12;
        let lambda_floor = (1e-12 * lambda_max).max(noise_scale);
        let u_h = eig.eigenvectors.adjoint();
        let g2 = &u_h * &psi_sqrt;
        let g1 = &g2 * &d_mat;

        let logdet_diff = chol_b.logdet() - chol_a.logdet();
        Ok(Self {
            ctx: ctx.clone(),
            x_tx: x_tx.clone(),
            x_a: x_a.clone(),
            x_b: x_b.clone(),
            chol_a,
            chol_b,
            logdet_diff,
            d_mat,
            psi_tilde,
            lambdas,
            g1,
            g2,
            lambda_floor,
        })
    }

    /// Standard orientation: transmitted block `x`, competitor `x_prime`.
    pub fn new(ctx: &MbContext, x: &CMat, x_prime: &CMat) -> Result<Self> {
        Self::new_with_roles(ctx, x, x, x_prime)
    }

    /// Conditional pairwise error probability given the channel estimate.
    pub fn conditional(&self, h_hat: &CMat) -> Result<f64> {
        Ok(self.case_for(h_hat)?.0)
    }

    /// Conditional PEP plus the derived pairwise quantities.
    pub fn case_for(&self, h_hat: &CMat) -> Result<(f64, PairwiseCase)> {
        let kern = &self.ctx.kernel;
        let a_vh = kern.a_vec(&vec_of(h_hat));
        let m_a = kern.mean_general(&a_vh, &self.x_a);
        let m_b = kern.mean_general(&a_vh, &self.x_b);

        // eps = C_b^{-1} m_b - C_a^{-1} m_a; G terms from the same solves
        let inv_m_a = self.chol_a.solve_mat(&CMat::from_column_slice(
            m_a.len(),
            1,
            m_a.as_slice(),
        ));
        let inv_m_b = self.chol_b.solve_mat(&CMat::from_column_slice(
            m_b.len(),
            1,
            m_b.as_slice(),
        ));
        let inv_m_a = inv_m_a.column(0).into_owned();
        let inv_m_b = inv_m_b.column(0).into_owned();
        let g_a = m_a.dotc(&inv_m_a).re;
        let g_b = m_b.dotc(&inv_m_b).re;
        let eps: CVec = &inv_m_b - &inv_m_a;
        let c0 = g_b - g_a + self.logdet_diff;

        let y_mean = vec_of(&(h_hat * &self.x_tx));
        let dy = &self.d_mat * &y_mean;
        let c1 = y_mean.dotc(&dy).re - 2.0 * eps.dotc(&y_mean).re + c0;

        // b = U^H Psi^{1/2} (D y_mean - eps)
        let b_vec: CVec = &self.g1 * &y_mean - &self.g2 * &eps;

        let mut lambdas = Vec::new();
        let mut shifts = Vec::new();
        let mut sigma_n2 = 0.0;
        let mut shift_sum = 0.0;
        let zero_tol = self.lambda_floor.max(1e-300);
        for (i, &l) in self.lambdas.iter().enumerate() {
            if l.abs() > zero_tol {
                lambdas.push(l);
                let c = b_vec[i] / l;
                shift_sum += c.norm_sqr() * l;
                shifts.push(c);
            } else {
                sigma_n2 += 2.0 * b_vec[i].norm_sqr();
            }
        }
        let eta = shift_sum - c1;

        let prob = if lambdas.is_empty() {
            // purely Gaussian decision statistic
            if sigma_n2 > 0.0 {
                normal_cdf(-c1 / sigma_n2.sqrt())
            } else if c1 < 0.0 {
                1.0
            } else {
                0.0
            }
        } else {
            quadratic_form_cdf(&QuadFormSpec {
                lambdas,
                shifts,
                linear_sigma2: sigma_n2,
                threshold: eta,
            })?
        };
        Ok((
            prob,
            PairwiseCase {
                d_mat: self.d_mat.clone(),
                eps_vec: eps,
                eta,
                psi_tilde: self.psi_tilde.clone(),
            },
        ))
    }

    /// Covariance of vec(H_hat(k)) used for the estimate average.
    pub fn estimate_covariance(&self) -> &CMat {
        &self.ctx.sigma22
    }
}

/// Conditional PEP of the model-based error-aware ML detector: probability
/// of preferring `x_prime` over the transmitted `x` given the estimate.
pub fn pep_conditional(
    x: &CMat,
    x_prime: &CMat,
    k: usize,
    k_p: usize,
    h_hat: &CMat,
    cfg: &SystemConfig,
    phi: &CMat,
    temporal: TemporalModel,
) -> Result<f64> {
    let ctx = MbContext::new(cfg, phi, temporal, k, k_p)?;
    PairEngine::new(&ctx, x, x_prime)?.conditional(h_hat)
}

/// A Monte Carlo mean with its standard error.
#[derive(Debug, Clone, Copy)]
pub struct PepEstimate {
    pub mean: f64,
    pub std_err: f64,
}

/// Average the conditional PEP over the channel-estimate distribution
/// vec(H_hat) ~ CN(0, Sigma22(k)) with `n_mc` draws.
pub fn pep_average(
    x: &CMat,
    x_prime: &CMat,
    k: usize,
    k_p: usize,
    cfg: &SystemConfig,
    phi: &CMat,
    temporal: TemporalModel,
    n_mc: usize,
    stream: RngStream,
) -> Result<PepEstimate> {
    if n_mc < 100 {
        return Err(Error::InvalidConfig(
            "estimate averaging needs at least 100 draws".into(),
        ));
    }
    let ctx = MbContext::new(cfg, phi, temporal, k, k_p)?;
    let engine = PairEngine::new(&ctx, x, x_prime)?;
    pep_average_with_engine(&engine, cfg, n_mc, stream)
}

fn pep_average_with_engine(
    engine: &PairEngine,
    cfg: &SystemConfig,
    n_mc: usize,
    stream: RngStream,
) -> Result<PepEstimate> {
    let sqrt_cov = psd_sqrt(engine.estimate_covariance())?;
    let mut rng = stream.rng();
    let mut sum = 0.0;
    let mut sum_sq = 0.0;
    for _ in 0..n_mc {
        let w = CVec::from_fn(sqrt_cov.nrows(), |_, _| {
            crate::corrmodel::standard_complex_gaussian(&mut rng)
        });
        let h_hat = crate::linalg::unvec(&(&sqrt_cov * w), cfg.n_rx, cfg.n_tx);
        let p = engine.conditional(&h_hat)?;
        sum += p;
        sum_sq += p * p;
    }
    let mean = sum / n_mc as f64;
    let var = (sum_sq / n_mc as f64 - mean * mean).max(0.0);
    Ok(PepEstimate {
        mean,
        std_err: (var / n_mc as f64).sqrt(),
    })
}

/// Union bound on BER(k) for the model-based error-aware ML detector:
/// sum over ordered candidate pairs of d_H(X, X') · PEP / (2^{mB} mB),
/// clipped to one.
#[allow(clippy::too_many_arguments)]
pub fn ber_union_bound(
    k: usize,
    k_p: usize,
    cfg: &SystemConfig,
    phi: &CMat,
    temporal: TemporalModel,
    set: &CandidateSet,
    cons: &Constellation,
    n_mc: usize,
    seed: u64,
) -> Result<f64> {
    const PAIR_CAP: usize = 1 << 12;
    if set.len() > PAIR_CAP {
        return Err(Error::SearchSpaceTooLarge {
            size: set.len() as u128,
            cap: PAIR_CAP as u128,
        });
    }
    let m_bits = set.bits_per_block;
    if set.len() < 2 || m_bits == 0 {
        return Ok(0.0);
    }
    let ctx = MbContext::new(cfg, phi, temporal, k, k_p)?;
    let weight = 1.0 / (2f64.powi(m_bits as i32) * m_bits as f64);

    let mut bound = 0.0;
    let mut pair_idx = 0u64;
    for (i, ci) in set.list.iter().enumerate() {
        let xi = ci.x_matrix(cfg, cons);
        for (j, cj) in set.list.iter().enumerate() {
            if i == j {
                continue;
            }
            let d_h = (ci.payload ^ cj.payload).count_ones() as f64;
            let xj = cj.x_matrix(cfg, cons);
            let engine = PairEngine::new(&ctx, &xi, &xj)?;
            let est = pep_average_with_engine(
                &engine,
                cfg,
                n_mc,
                RngStream::new(seed, pair_idx),
            )?;
            bound += weight * d_h * est.mean;
            pair_idx += 1;
        }
    }
    Ok(bound.min(1.0))
}

/// Frame-averaged BER from per-block values over the estimator's data-block
/// index set: blocks 1..2N-1 except N for the model-based estimator, blocks
/// 1..N-1 for the decision-directed one.
pub fn ber_average(
    per_k: &[(usize, f64)],
    estimator: EstimatorKind,
    frame_len: usize,
) -> Result<f64> {
    let wanted = data_block_indices(estimator, frame_len);
    let mut sum = 0.0;
    for k in &wanted {
        let v = per_k
            .iter()
            .find(|(idx, _)| idx == k)
            .ok_or(Error::MissingBlockIndex { index: *k })?;
        sum += v.1;
    }
    Ok(sum / wanted.len() as f64)
}

/// Data-block indices detected under each estimator's window.
pub fn data_block_indices(estimator: EstimatorKind, frame_len: usize) -> Vec<usize> {
    match estimator {
        EstimatorKind::Mb => (1..2 * frame_len)
            .filter(|&k| k != frame_len)
            .collect(),
        EstimatorKind::Dd | EstimatorKind::Perfect => (1..frame_len).collect(),
    }
}

/// Per-block union bounds plus their frame average.
#[derive(Debug, Clone)]
pub struct BerBound {
    pub per_k: Vec<(usize, f64)>,
    pub average: f64,
}

/// Union bound at every data block of the model-based window.
#[allow(clippy::too_many_arguments)]
pub fn ber_union_bound_frame(
    cfg: &SystemConfig,
    phi: &CMat,
    temporal: TemporalModel,
    set: &CandidateSet,
    cons: &Constellation,
    n_mc: usize,
    seed: u64,
) -> Result<BerBound> {
    let ks = data_block_indices(EstimatorKind::Mb, cfg.frame_len);
    let mut per_k = Vec::with_capacity(ks.len());
    for (i, &k) in ks.iter().enumerate() {
        let b = ber_union_bound(
            k,
            0,
            cfg,
            phi,
            temporal,
            set,
            cons,
            n_mc,
            seed.wrapping_add(i as u64 * 0x9e37_79b9_7f4a_7c15),
        )?;
        per_k.push((k, b));
    }
    let average = ber_average(&per_k, EstimatorKind::Mb, cfg.frame_len)?;
    Ok(BerBound { per_k, average })
}

/// Used by tests and the harness to keep rho_T(1) handy.
pub fn rho1(cfg: &SystemConfig, temporal: TemporalModel) -> f64 {
    temporal_correlation(1, temporal, cfg)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::config::ModKind;
    use crate::corrmodel::{
        awgn, generate_channels, spatial_correlation, SpatialModel,
    };
    use crate::smcodec::{build_constellation, enumerate_candidates, CandidateMode};

    fn cfg(noise_var: f64) -> SystemConfig {
        SystemConfig {
            n_tx: 2,
            n_rx: 2,
            block_len: 2,
            frame_len: 5,
            mod_order: 2,
            mod_kind: ModKind::Psk,
            doppler: 0.01,
            symbol_power: 1.0,
            pilot_power: 1.0,
            noise_var,
        }
    }

    fn fixture(noise_var: f64) -> (SystemConfig, crate::corrmodel::SpatialCorrelation) {
        let c = cfg(noise_var);
        let s = spatial_correlation(&SpatialModel::Exponential { r: 0.8, t: 0.8 }, &c).unwrap();
        (c, s)
    }

    #[test]
    fn rejects_identical_candidates() {
        let (c, s) = fixture(0.1);
        let ctx = MbContext::new(&c, &s.phi, TemporalModel::Jakes, 2, 0).unwrap();
        let x = CMat::identity(2, 2);
        assert!(PairEngine::new(&ctx, &x, &x).is_err());
    }

    #[test]
    fn complementary_events_sum_to_one() {
        // P{metric(B) < metric(A)} + P{metric(A) < metric(B)} = 1 for a
        // fixed transmitted block and estimate (continuous metrics).
        let (c, s) = fixture(0.2);
        let cons = build_constellation(ModKind::Psk, 2, 1.0).unwrap();
        let set = enumerate_candidates(&c, &cons, CandidateMode::Sm, 1 << 20).unwrap();
        let ctx = MbContext::new(&c, &s.phi, TemporalModel::Jakes, 3, 0).unwrap();
        let mut rng = RngStream::new(5150, 0).rng();
        for (i, j) in [(0usize, 5usize), (1, 2), (3, 12), (7, 8)] {
            let xi = set.list[i].x_matrix(&c, &cons);
            let xj = set.list[j].x_matrix(&c, &cons);
            let fwd = PairEngine::new_with_roles(&ctx, &xi, &xi, &xj).unwrap();
            let rev = PairEngine::new_with_roles(&ctx, &xi, &xj, &xi).unwrap();
            for _ in 0..4 {
                let h_hat = awgn(2, 2, 1.0, &mut rng);
                let p = fwd.conditional(&h_hat).unwrap();
                let q = rev.conditional(&h_hat).unwrap();
                assert!(
                    (p + q - 1.0).abs() < 1e-7,
                    "pair ({i},{j}): p={p}, q={q}, sum={}",
                    p + q
                );
            }
        }
    }

    #[test]
    fn conditional_matches_metric_simulation() {
        // Ground truth: simulate the metric comparison at a fixed estimate.
        let (c, s) = fixture(0.25);
        let cons = build_constellation(ModKind::Psk, 2, 1.0).unwrap();
        let set = enumerate_candidates(&c, &cons, CandidateMode::Sm, 1 << 20).unwrap();
        let k = 2usize;
        let ctx = MbContext::new(&c, &s.phi, TemporalModel::Jakes, k, 0).unwrap();
        let x = set.list[3].x_matrix(&c, &cons);
        let xp = set.list[9].x_matrix(&c, &cons);
        let engine = PairEngine::new(&ctx, &x, &xp).unwrap();

        let chan =
            generate_channels(&c, &s, TemporalModel::Jakes, 11, RngStream::new(31, 7)).unwrap();
        let h_hat = &chan.blocks[k] + awgn(2, 2, 0.05, &mut RngStream::new(32, 0).rng());
        let p = engine.conditional(&h_hat).unwrap();

        // direct simulation of the same conditional model
        let kern = &ctx.kernel;
        let cov_a = kern.cov_general(&x);
        let cov_b = kern.cov_general(&xp);
        let chol_a = CholFactor::new(&cov_a, 0.0).unwrap();
        let chol_b = CholFactor::new(&cov_b, 0.0).unwrap();
        let a_vh = kern.a_vec(&vec_of(&h_hat));
        let m_a = kern.mean_general(&a_vh, &x);
        let m_b = kern.mean_general(&a_vh, &xp);
        let psi_e = ctx.psi_e();
        let psi = crate::detectors::context::sandwich_kron(&x, &psi_e, 2)
            + CMat::identity(4, 4).scale(c.noise_var);
        let psi_sqrt = psd_sqrt(&psi).unwrap();
        let y_mean = vec_of(&(&h_hat * &x));

        let n = 200_000usize;
        let mut rng = RngStream::new(33, 0).rng();
        let mut hits = 0usize;
        for _ in 0..n {
            let w = CVec::from_fn(4, |_, _| {
                crate::corrmodel::standard_complex_gaussian(&mut rng)
            });
            let y = &y_mean + &psi_sqrt * w;
            let ma = chol_a.quad_vec(&(&y - &m_a)) + chol_a.logdet();
            let mb = chol_b.quad_vec(&(&y - &m_b)) + chol_b.logdet();
            if mb < ma {
                hits += 1;
            }
        }
        let emp = hits as f64 / n as f64;
        let se = (emp * (1.0 - emp) / n as f64).sqrt().max(1e-6);
        assert!((p - emp).abs() < 4.0 * se, "p={p}, emp={emp}, se={se:.2e}");
    }

    #[test]
    fn average_shrinks_with_more_draws_and_is_deterministic() {
        let (c, s) = fixture(0.3);
        let cons = build_constellation(ModKind::Psk, 2, 1.0).unwrap();
        let set = enumerate_candidates(&c, &cons, CandidateMode::Sm, 1 << 20).unwrap();
        let x = set.list[1].x_matrix(&c, &cons);
        let xp = set.list[6].x_matrix(&c, &cons);
        let a = pep_average(
            &x,
            &xp,
            2,
            0,
            &c,
            &s.phi,
            TemporalModel::Jakes,
            400,
            RngStream::new(9, 1),
        )
        .unwrap();
        let b = pep_average(
            &x,
            &xp,
            2,
            0,
            &c,
            &s.phi,
            TemporalModel::Jakes,
            400,
            RngStream::new(9, 1),
        )
        .unwrap();
        assert_eq!(a.mean, b.mean);
        assert!(a.mean >= 0.0 && a.mean <= 1.0);
        assert!(a.std_err > 0.0);

        // standard error scaling ~ sqrt(2) when doubling draws
        let wide = pep_average(
            &x,
            &xp,
            2,
            0,
            &c,
            &s.phi,
            TemporalModel::Jakes,
            800,
            RngStream::new(9, 1),
        )
        .unwrap();
        let ratio = a.std_err / wide.std_err;
        assert!(
            (ratio - 2f64.sqrt()).abs() < 0.2 * 2f64.sqrt(),
            "ratio {ratio}"
        );
    }

    #[test]
    fn average_is_the_mean_of_conditionals() {
        // pep_average must equal the plain mean of engine.conditional over
        // the same deterministic estimate draws.
        let (c, s) = fixture(0.3);
        let cons = build_constellation(ModKind::Psk, 2, 1.0).unwrap();
        let set = enumerate_candidates(&c, &cons, CandidateMode::Sm, 1 << 20).unwrap();
        let ctx = MbContext::new(&c, &s.phi, TemporalModel::Jakes, 2, 0).unwrap();
        let x = set.list[0].x_matrix(&c, &cons);
        let xp = set.list[10].x_matrix(&c, &cons);
        let engine = PairEngine::new(&ctx, &x, &xp).unwrap();

        let n = 150usize;
        let stream = RngStream::new(77, 0);
        let sqrt_cov = psd_sqrt(engine.estimate_covariance()).unwrap();
        let mut rng = stream.rng();
        let mut sum = 0.0;
        for _ in 0..n {
            let w = CVec::from_fn(4, |_, _| {
                crate::corrmodel::standard_complex_gaussian(&mut rng)
            });
            let h_hat = crate::linalg::unvec(&(&sqrt_cov * w), 2, 2);
            sum += engine.conditional(&h_hat).unwrap();
        }
        let by_hand = sum / n as f64;
        let est =
            pep_average(&x, &xp, 2, 0, &c, &s.phi, TemporalModel::Jakes, n, stream).unwrap();
        assert!((est.mean - by_hand).abs() < 1e-12, "{} vs {by_hand}", est.mean);
    }

    #[test]
    fn union_bound_degenerate_and_monotone() {
        // single-candidate set carries no bits: bound 0
        let mut c1 = cfg(0.1);
        c1.n_tx = 1;
        c1.block_len = 1;
        let cons = build_constellation(ModKind::Psk, 2, 1.0).unwrap();
        let ssk1 = enumerate_candidates(&c1, &cons, CandidateMode::SskOnly, 1 << 20).unwrap();
        assert_eq!(ssk1.len(), 1);
        let phi1 = CMat::identity(1, 1);
        assert_eq!(
            ber_union_bound(1, 0, &c1, &phi1, TemporalModel::Jakes, &ssk1, &cons, 100, 3)
                .unwrap(),
            0.0
        );

        // nonincreasing in SNR for a small antenna-only set
        let (c, s) = fixture(0.1);
        let ssk = enumerate_candidates(&c, &cons, CandidateMode::SskOnly, 1 << 20).unwrap();
        let mut last = f64::INFINITY;
        for snr_db in [0.0, 5.0, 10.0, 15.0, 20.0] {
            let m_bits = ssk.bits_per_block as f64 / c.block_len as f64;
            let cc = c.with_noise_var(c.symbol_power / (m_bits * 10f64.powf(snr_db / 10.0)));
            let b = ber_union_bound(
                2,
                0,
                &cc,
                &s.phi,
                TemporalModel::Jakes,
                &ssk,
                &cons,
                120,
                99,
            )
            .unwrap();
            assert!(b <= last + 1e-6, "bound grew at {snr_db} dB: {b} > {last}");
            assert!((0.0..=1.0).contains(&b));
            last = b;
        }
    }

    #[test]
    fn ber_average_index_sets() {
        // constant per-block value averages to itself over the right set
        let per_k: Vec<(usize, f64)> = (1..10).filter(|&k| k != 5).map(|k| (k, 0.125)).collect();
        let avg = ber_average(&per_k, EstimatorKind::Mb, 5).unwrap();
        assert!((avg - 0.125).abs() < 1e-15);
        assert_eq!(
            data_block_indices(EstimatorKind::Mb, 5),
            vec![1, 2, 3, 4, 6, 7, 8, 9]
        );
        assert_eq!(data_block_indices(EstimatorKind::Dd, 5), vec![1, 2, 3, 4]);

        // missing index is an error
        let missing: Vec<(usize, f64)> = vec![(1, 0.1)];
        assert!(matches!(
            ber_average(&missing, EstimatorKind::Mb, 5),
            Err(Error::MissingBlockIndex { .. })
        ));

        // direct-average identity for equal bit counts
        let values = [0.1, 0.2, 0.3, 0.4, 0.15, 0.25, 0.35, 0.45];
        let per_k: Vec<(usize, f64)> = data_block_indices(EstimatorKind::Mb, 5)
            .into_iter()
            .zip(values)
            .collect();
        let avg = ber_average(&per_k, EstimatorKind::Mb, 5).unwrap();
        let direct: f64 = values.iter().sum::<f64>() / 8.0;
        assert!((avg - direct).abs() < 1e-15);
    }
}
