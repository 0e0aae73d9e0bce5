//! Exhaustive-search detectors: perfect-CSI ML, mismatched ML, the
//! estimation-error-aware ML family, and the reduced ZRC/ZTC searches.

use crate::config::SystemConfig;
use crate::linalg::{vec_of, CMat, CVec, C64};
use crate::smcodec::{CandidateMode, CandidateSet, Constellation, SmBlock};
use crate::{Error, Result};

use super::stats::{mag_profile_of, BankBlock, CovKeyed};
use super::Decision;

/// Per-column minimum-distance detection with a known channel matrix.
/// Used by both the perfect-CSI and mismatched detectors.
pub fn detect_per_column(
    y: &CMat,
    h: &CMat,
    set: &CandidateSet,
    cons: &Constellation,
    cfg: &SystemConfig,
) -> Result<Decision> {
    if set.is_empty() {
        return Err(Error::EmptyCandidateSet);
    }
    let b = cfg.block_len;
    match set.mode {
        CandidateMode::Sm | CandidateMode::SskOnly => {
            let ssk = set.mode == CandidateMode::SskOnly;
            let ref_sym = set.list[0].symbols[0] as usize;
            let mut antenna = vec![0u8; b];
            let mut symbols = vec![0u8; b];
            let mut total = 0.0;
            for j in 0..b {
                let yj = y.column(j);
                let mut best = f64::INFINITY;
                for a in 0..cfg.n_tx {
                    let ha = h.column(a);
                    if ssk {
                        let p = cons.points[ref_sym];
                        let d = (0..cfg.n_rx)
                            .map(|r| (yj[r] - ha[r] * p).norm_sqr())
                            .sum::<f64>();
                        if d < best {
                            best = d;
                            antenna[j] = a as u8;
                            symbols[j] = ref_sym as u8;
                        }
                    } else {
                        // iterate points in label order for deterministic ties
                        for label in 0..cons.order as u32 {
                            let s = cons.index_of_label(label);
                            let p = cons.points[s];
                            let d = (0..cfg.n_rx)
                                .map(|r| (yj[r] - ha[r] * p).norm_sqr())
                                .sum::<f64>();
                            if d < best {
                                best = d;
                                antenna[j] = a as u8;
                                symbols[j] = s as u8;
                            }
                        }
                    }
                }
                total += best;
            }
            assert!(total.is_finite());
            let block = SmBlock {
                antenna_idx: antenna,
                symbols,
            };
            Ok(Decision {
                candidate_index: set.index_of_sm(cfg, cons, &block),
                metric: total,
                singular_fallbacks: 0,
            })
        }
        CandidateMode::Smx => {
            // every column ranges over all M^{N_T} dense column vectors
            let m = cons.order;
            let combos = m.pow(cfg.n_tx as u32);
            let mut col_points: Vec<Vec<C64>> = Vec::with_capacity(combos);
            for c in 0..combos {
                let mut pts = vec![C64::new(0.0, 0.0); cfg.n_tx];
                let mut cc = c;
                for i in (0..cfg.n_tx).rev() {
                    pts[i] = cons.points[cons.index_of_label((cc % m) as u32)];
                    cc /= m;
                }
                col_points.push(pts);
            }
            let mut index = 0usize;
            let mut total = 0.0;
            for j in 0..b {
                let yj = y.column(j);
                let mut best = f64::INFINITY;
                let mut best_c = 0usize;
                for (c, pts) in col_points.iter().enumerate() {
                    let mut d = 0.0;
                    for r in 0..cfg.n_rx {
                        let mut hx = C64::new(0.0, 0.0);
                        for (i, p) in pts.iter().enumerate() {
                            hx += h[(r, i)] * p;
                        }
                        d += (yj[r] - hx).norm_sqr();
                    }
                    if d < best {
                        best = d;
                        best_c = c;
                    }
                }
                index = index * combos + best_c;
                total += best;
            }
            assert!(total.is_finite());
            Ok(Decision {
                candidate_index: index,
                metric: total,
                singular_fallbacks: 0,
            })
        }
    }
}

/// Estimation-error-aware exhaustive ML: minimizes the Gaussian metric
/// quad(C, residual) + log det C with the candidate-keyed covariance cache.
pub fn detect_ceea_full(
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
    let kern = block.ctx.kernel();
    let a_vh = kern.a_vec(vec_h_hat);
    let cache = block.ceea.as_ref().expect("bank built without ML cache");
    let nr = cfg.n_rx;
    let b = cfg.block_len;
    let dim = b * nr;

    let mut best = f64::INFINITY;
    let mut best_idx = 0usize;

    match cache {
        CovKeyed::PerL(chols) => {
            // PSK: covariance and mean depend on the antenna pattern only.
            let eps = cfg.symbol_power;
            let mut mean = CVec::zeros(dim);
            let mut basis = vec![CVec::zeros(dim); b];
            for (g, chol) in chols.iter().enumerate() {
                let first = g * set.per_l;
                kern.mean_sm(&a_vh, &set.list[first].antenna, &mut mean);
                let mut u_m = mean.clone();
                chol.forward_solve_vec(&mut u_m);
                for (j, base) in basis.iter_mut().enumerate() {
                    base.fill(C64::new(0.0, 0.0));
                    for r in 0..nr {
                        base[j * nr + r] = y[(r, j)];
                    }
                    chol.forward_solve_vec(base);
                }
                let logdet = chol.logdet();
                for c in first..first + set.per_l {
                    let symbols = &set.list[c].symbols;
                    let mut metric = logdet;
                    for e in 0..dim {
                        let mut z = -u_m[e];
                        for (j, base) in basis.iter().enumerate() {
                            let coef = cons.points[symbols[j] as usize].conj() / eps;
                            z += coef * base[e];
                        }
                        metric += z.norm_sqr();
                    }
                    debug_assert!(metric.is_finite());
                    if metric < best {
                        best = metric;
                        best_idx = c;
                    }
                }
            }
        }
        CovKeyed::PerLMag(chols, n_prof, logdet_es) => {
            // QAM: one covariance per (pattern, magnitude profile).
            let mut mean = CVec::zeros(dim);
            let n_groups = set.n_l_groups;
            for g in 0..n_groups {
                let first = g * set.per_l;
                kern.mean_sm(&a_vh, &set.list[first].antenna, &mut mean);
                // lazily factor-solve per profile within this pattern group
                let mut solved: Vec<Option<(CVec, Vec<CVec>)>> = vec![None; *n_prof];
                for c in first..first + set.per_l {
                    let symbols = &set.list[c].symbols;
                    let prof = mag_profile_of(symbols, cons);
                    if solved[prof].is_none() {
                        let chol = &chols[g * n_prof + prof];
                        let mut u_m = mean.clone();
                        chol.forward_solve_vec(&mut u_m);
                        let mut basis = vec![CVec::zeros(dim); b];
                        for (j, base) in basis.iter_mut().enumerate() {
                            for r in 0..nr {
                                base[j * nr + r] = y[(r, j)];
                            }
                            chol.forward_solve_vec(base);
                        }
                        solved[prof] = Some((u_m, basis));
                    }
                    let (u_m, basis) = solved[prof].as_ref().unwrap();
                    let chol = &chols[g * n_prof + prof];
                    let mut metric = chol.logdet() + nr as f64 * logdet_es[prof];
                    for e in 0..dim {
                        let mut z = -u_m[e];
                        for (j, base) in basis.iter().enumerate() {
                            let p = cons.points[symbols[j] as usize];
                            let coef = p.conj() / p.norm_sqr();
                            z += coef * base[e];
                        }
                        metric += z.norm_sqr();
                    }
                    debug_assert!(metric.is_finite());
                    if metric < best {
                        best = metric;
                        best_idx = c;
                    }
                }
            }
        }
        CovKeyed::PerX(chols) => {
            let y_vec = vec_of(y);
            for (c, cand) in set.list.iter().enumerate() {
                let x = cand.x_matrix(cfg, cons);
                let mean = kern.mean_general(&a_vh, &x);
                let metric = chols[c].quad_vec(&(&y_vec - mean)) + chols[c].logdet();
                debug_assert!(metric.is_finite());
                if metric < best {
                    best = metric;
                    best_idx = c;
                }
            }
        }
    }
    assert!(best.is_finite());
    Ok(Decision {
        candidate_index: best_idx,
        metric: best,
        singular_fallbacks: 0,
    })
}

/// Reduced full search ignoring receive-side correlation.
pub fn detect_zrc_full(
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
    let bank = block.zrc.as_ref().expect("bank built without ZRC cache");
    let p = h_hat * &bank.ctx.w_mat;
    let nr = cfg.n_rx as f64;
    let b = cfg.block_len;

    let mut best = f64::INFINITY;
    let mut best_idx = 0usize;
    match &bank.cov {
        CovKeyed::PerL(chols) => {
            let eps = cfg.symbol_power;
            let mut mean = CMat::zeros(cfg.n_rx, b);
            let mut chi = CMat::zeros(b, cfg.n_rx);
            for (g, chol) in chols.iter().enumerate() {
                let first = g * set.per_l;
                for (j, &a) in set.list[first].antenna.iter().enumerate() {
                    mean.set_column(j, &p.column(a as usize));
                }
                let logdet_term = nr * (b as f64 * eps.ln() + chol.logdet());
                for c in first..first + set.per_l {
                    let symbols = &set.list[c].symbols;
                    // residual^H = (Y S^H / eps - mean)^H, built directly
                    for j in 0..b {
                        let coef = cons.points[symbols[j] as usize].conj() / eps;
                        for r in 0..cfg.n_rx {
                            chi[(j, r)] = (y[(r, j)] * coef - mean[(r, j)]).conj();
                        }
                    }
                    let metric = chol.quad_trace_mut(&mut chi) + logdet_term;
                    debug_assert!(metric.is_finite());
                    if metric < best {
                        best = metric;
                        best_idx = c;
                    }
                }
            }
        }
        CovKeyed::PerX(chols) => {
            for (c, cand) in set.list.iter().enumerate() {
                let x = cand.x_matrix(cfg, cons);
                let resid = y - &p * x;
                let metric = chols[c].quad_trace(&resid.adjoint()) + nr * chols[c].logdet();
                debug_assert!(metric.is_finite());
                if metric < best {
                    best = metric;
                    best_idx = c;
                }
            }
        }
        CovKeyed::PerLMag(..) => unreachable!("ZRC caches are PerL or PerX"),
    }
    assert!(best.is_finite());
    Ok(Decision {
        candidate_index: best_idx,
        metric: best,
        singular_fallbacks: 0,
    })
}

/// Reduced full search ignoring transmit-side correlation; a single shared
/// covariance makes its log-determinant candidate-independent.
pub fn detect_ztc_full(
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
    let bank = block.ztc.as_ref().expect("bank built without ZTC cache");
    let p = &bank.ctx.w_mat * h_hat;
    let logdet_term = cfg.n_tx as f64 * bank.ctx.chol.logdet();
    let b = cfg.block_len;

    let mut best = f64::INFINITY;
    let mut best_idx = 0usize;
    let sm_like = !set.list[0].antenna.is_empty();
    let mut resid = CMat::zeros(cfg.n_rx, b);
    for (c, cand) in set.list.iter().enumerate() {
        resid.copy_from(y);
        if sm_like {
            for (j, (&a, &s)) in cand.antenna.iter().zip(&cand.symbols).enumerate() {
                let point = cons.points[s as usize];
                for r in 0..cfg.n_rx {
                    resid[(r, j)] -= p[(r, a as usize)] * point;
                }
            }
        } else {
            for j in 0..b {
                for i in 0..cfg.n_tx {
                    let point = cons.points[cand.symbols[j * cfg.n_tx + i] as usize];
                    for r in 0..cfg.n_rx {
                        resid[(r, j)] -= p[(r, i)] * point;
                    }
                }
            }
        }
        let metric = bank.ctx.chol.quad_trace_mut(&mut resid) + logdet_term;
        debug_assert!(metric.is_finite());
        if metric < best {
            best = metric;
            best_idx = c;
        }
    }
    assert!(best.is_finite());
    Ok(Decision {
        candidate_index: best_idx,
        metric: best,
        singular_fallbacks: 0,
    })
}

/// Reference implementation of the error-aware ML metric that rebuilds the
/// conditional statistics from scratch for every candidate. Slow; used to
/// validate the cached paths.
pub fn detect_ceea_reference(
    block: &BankBlock,
    y: &CMat,
    vec_h_hat: &CVec,
    set: &CandidateSet,
    cons: &Constellation,
    cfg: &SystemConfig,
) -> Result<Decision> {
    let kern = block.ctx.kernel();
    let a_vh = kern.a_vec(vec_h_hat);
    let y_vec = vec_of(y);
    let mut best = f64::INFINITY;
    let mut best_idx = 0usize;
    for (c, cand) in set.list.iter().enumerate() {
        let x = cand.x_matrix(cfg, cons);
        let cov = kern.cov_general(&x);
        let chol = crate::linalg::CholFactor::new(&cov, 1e-12)?;
        let mean = kern.mean_general(&a_vh, &x);
        let metric = chol.quad_vec(&(&y_vec - mean)) + chol.logdet();
        if metric < best {
            best = metric;
            best_idx = c;
        }
    }
    Ok(Decision {
        candidate_index: best_idx,
        metric: best,
        singular_fallbacks: 0,
    })
}
