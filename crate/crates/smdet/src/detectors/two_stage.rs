//! Two-stage PSK-SM detectors: detect the antenna pattern with a quantized
//! tentative symbol solution, then emit the symbols of the winning pattern.
//!
//! For each antenna pattern the per-slot symbol vector minimizing the
//! exponent of the conditional likelihood is s_tilde = eps_s (J^{-1} b)^*,
//! quantized to the constellation; the pattern score augments the Gaussian
//! metric with the quantized quadratic form. A singular J falls back to a
//! pseudo-inverse and is counted in the decision diagnostics.

use crate::config::SystemConfig;
use crate::linalg::{pseudo_inverse, CMat, CVec, CholFactor, C64};
use crate::smcodec::{CandidateMode, CandidateSet, Constellation, SmBlock};
use crate::{Error, Result};

use super::stats::{BankBlock, CovKeyed};
use super::Decision;

const SINGULAR_J_TOL: f64 = 1e-10;

fn solve_hermitian(j_mat: &CMat, rhs: &CVec, fallbacks: &mut u32) -> Result<CVec> {
    match CholFactor::new(j_mat, 0.0) {
        Ok(chol) => {
            let mut x = rhs.clone();
            chol.forward_solve_vec(&mut x);
            let ok = chol.l().adjoint().solve_upper_triangular_mut(&mut x);
            debug_assert!(ok);
            Ok(x)
        }
        Err(_) => {
            *fallbacks += 1;
            let pinv = pseudo_inverse(j_mat, SINGULAR_J_TOL)?;
            Ok(pinv * rhs)
        }
    }
}

/// Two-stage detector on the full-dimension (error-aware ML) statistics.
pub fn detect_two_stage(
    block: &BankBlock,
    y: &CMat,
    vec_h_hat: &CVec,
    set: &CandidateSet,
    cons: &Constellation,
    cfg: &SystemConfig,
) -> Result<Decision> {
    if set.is_empty() {
        return Err(Error::EmptyCandidateSet);
    }
    if set.mode != CandidateMode::Sm || !cons.constant_modulus() {
        return Err(Error::InvalidConfig(
            "two-stage detection requires constant-modulus SM signaling".into(),
        ));
    }
    let chols = match block.ceea.as_ref() {
        Some(CovKeyed::PerL(chols)) => chols,
        _ => {
            return Err(Error::InvalidConfig(
                "two-stage detection needs the pattern-keyed covariance cache".into(),
            ))
        }
    };
    let kern = block.ctx.kernel();
    let a_vh = kern.a_vec(vec_h_hat);
    let nr = cfg.n_rx;
    let b = cfg.block_len;
    let dim = b * nr;
    let eps = cfg.symbol_power;

    let mut best = f64::INFINITY;
    let mut best_block: Option<SmBlock> = None;
    let mut fallbacks_total = 0u32;
    let mut mean = CVec::zeros(dim);

    for (g, chol) in chols.iter().enumerate() {
        let first = g * set.per_l;
        let antenna = &set.list[first].antenna;
        kern.mean_sm(&a_vh, antenna, &mut mean);
        let mut u_m = mean.clone();
        chol.forward_solve_vec(&mut u_m);
        let g_m = u_m.norm_squared();

        // v_j = L^{-1} (e_j (x) y_j); J = V^H V, b = V^H u_m
        let mut basis = vec![CVec::zeros(dim); b];
        for (j, base) in basis.iter_mut().enumerate() {
            for r in 0..nr {
                base[j * nr + r] = y[(r, j)];
            }
            chol.forward_solve_vec(base);
        }
        let j_mat = CMat::from_fn(b, b, |r, c| basis[r].dotc(&basis[c]));
        let b_vec = CVec::from_fn(b, |r, _| basis[r].dotc(&u_m));

        let mut fallbacks = 0u32;
        let tentative = solve_hermitian(&j_mat, &b_vec, &mut fallbacks)?;
        fallbacks_total += fallbacks;

        // s_bar = quantize(eps * (J^{-1} b)^*)
        let quantized: Vec<u8> = tentative
            .iter()
            .map(|v| cons.quantize(v.conj() * eps) as u8)
            .collect();
        let s_bar: Vec<C64> = quantized.iter().map(|&q| cons.points[q as usize]).collect();

        // score = logdet(eps C) + G(C, mean) + s^T J s^* / eps^2 - 2 Re{b^H s^*} / eps
        let mut quad = C64::new(0.0, 0.0);
        for r in 0..b {
            for c in 0..b {
                quad += s_bar[r] * j_mat[(r, c)] * s_bar[c].conj();
            }
        }
        let mut cross = C64::new(0.0, 0.0);
        for r in 0..b {
            cross += b_vec[r].conj() * s_bar[r].conj();
        }
        let score = dim as f64 * eps.ln() + chol.logdet() + g_m + quad.re / (eps * eps)
            - 2.0 * cross.re / eps;
        debug_assert!(score.is_finite());
        if score < best {
            best = score;
            best_block = Some(SmBlock {
                antenna_idx: antenna.clone(),
                symbols: quantized,
            });
        }
    }
    let block_out = best_block.ok_or(Error::EmptyCandidateSet)?;
    assert!(best.is_finite());
    Ok(Decision {
        candidate_index: set.index_of_sm(cfg, cons, &block_out),
        metric: best,
        singular_fallbacks: fallbacks_total,
    })
}

/// Two-stage detector on the reduced receive-side statistics.
pub fn detect_two_stage_zrc(
    block: &BankBlock,
    y: &CMat,
    h_hat: &CMat,
    set: &CandidateSet,
    cons: &Constellation,
    cfg: &SystemConfig,
) -> Result<Decision> {
    if set.is_empty() {
        return Err(Error::EmptyCandidateSet);
    }
    if set.mode != CandidateMode::Sm || !cons.constant_modulus() {
        return Err(Error::InvalidConfig(
            "two-stage detection requires constant-modulus SM signaling".into(),
        ));
    }
    let bank = block.zrc.as_ref().expect("bank built without ZRC cache");
    let chols = match &bank.cov {
        CovKeyed::PerL(chols) => chols,
        _ => {
            return Err(Error::InvalidConfig(
                "two-stage ZRC needs the pattern-keyed covariance cache".into(),
            ))
        }
    };
    let p = h_hat * &bank.ctx.w_mat;
    let nr = cfg.n_rx;
    let b = cfg.block_len;
    let eps = cfg.symbol_power;
    let yhy = y.adjoint() * y;

    let mut best = f64::INFINITY;
    let mut best_block: Option<SmBlock> = None;
    let mut fallbacks_total = 0u32;

    for (g, chol) in chols.iter().enumerate() {
        let first = g * set.per_l;
        let antenna = &set.list[first].antenna;
        let mut mean = CMat::zeros(nr, b);
        for (j, &a) in antenna.iter().enumerate() {
            mean.set_column(j, &p.column(a as usize));
        }
        let inv = chol.inverse();
        // J = C^{-1} (.) (Y^H Y)^*
        let j_mat = CMat::from_fn(b, b, |r, c| inv[(r, c)] * yhy[(r, c)].conj());
        // b = diag(Y^H mean C^{-1})
        let t2 = (y.adjoint() * &mean) * &inv;
        let b_vec = CVec::from_fn(b, |r, _| t2[(r, r)]);

        let mut fallbacks = 0u32;
        let rhs = b_vec.map(|v| v.conj());
        let tentative = solve_hermitian(&j_mat, &rhs, &mut fallbacks)?;
        fallbacks_total += fallbacks;

        let quantized: Vec<u8> = tentative
            .iter()
            .map(|v| cons.quantize(v * eps) as u8)
            .collect();
        let s_bar: Vec<C64> = quantized.iter().map(|&q| cons.points[q as usize]).collect();

        // score = N_R logdet(eps C) + tr G(C, mean^H)
        //         + s^H J s / eps^2 - 2 Re{b^T s} / eps
        let mut quad = C64::new(0.0, 0.0);
        for r in 0..b {
            for c in 0..b {
                quad += s_bar[r].conj() * j_mat[(r, c)] * s_bar[c];
            }
        }
        let mut cross = C64::new(0.0, 0.0);
        for r in 0..b {
            cross += b_vec[r] * s_bar[r];
        }
        let score = nr as f64 * (b as f64 * eps.ln() + chol.logdet())
            + chol.quad_trace(&mean.adjoint())
            + quad.re / (eps * eps)
            - 2.0 * cross.re / eps;
        debug_assert!(score.is_finite());
        if score < best {
            best = score;
            best_block = Some(SmBlock {
                antenna_idx: antenna.clone(),
                symbols: quantized,
            });
        }
    }
    let block_out = best_block.ok_or(Error::EmptyCandidateSet)?;
    assert!(best.is_finite());
    Ok(Decision {
        candidate_index: set.index_of_sm(cfg, cons, &block_out),
        metric: best,
        singular_fallbacks: fallbacks_total,
    })
}
