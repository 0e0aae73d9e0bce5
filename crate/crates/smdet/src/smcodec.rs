//! Constellations, bit-to-block mapping, pilot blocks and detection
//! candidate sets for spatial-modulation signaling.
//!
//! An SM block carries `B` symbol slots; slot `j` activates one transmit
//! antenna `l_j` and sends one constellation point `s_j`, so the transmitted
//! matrix factors as X = L·Diag(s) with L the one-hot antenna (SSK) matrix.
//! Bits map per slot: the first log2(N_T) bits select the antenna in natural
//! binary (antenna 0 = all zeros), the rest select the Gray-labeled
//! constellation point.

use serde::{Deserialize, Serialize};

use crate::config::{ModKind, SystemConfig};
use crate::linalg::{CMat, C64};
use crate::{Error, Result};

/// Default cap on enumerated candidate-set cardinality.
pub const DEFAULT_CANDIDATE_CAP: u128 = 1 << 20;

/// A modulation alphabet with Gray bit labels and unit-average-power scaling.
#[derive(Debug, Clone)]
pub struct Constellation {
    pub kind: ModKind,
    pub order: usize,
    /// Points scaled so the average power equals the configured symbol power.
    pub points: Vec<C64>,
    /// Gray label of each point (a permutation of 0..order).
    pub bit_labels: Vec<u32>,
    /// Inverse of `bit_labels`.
    label_to_index: Vec<u32>,
    /// Average point power.
    pub symbol_power: f64,
    /// Squared-magnitude class per point (QAM rings; single class for PSK).
    mag_class: Vec<u8>,
    n_mag_classes: usize,
}

fn gray(i: u32) -> u32 {
    i ^ (i >> 1)
}

/// Build a Gray-labeled constellation of the given order and average power.
pub fn build_constellation(
    kind: ModKind,
    order: usize,
    symbol_power: f64,
) -> Result<Constellation> {
    let supported = match kind {
        ModKind::Psk => order >= 2 && order.is_power_of_two(),
        ModKind::Qam => matches!(order, 4 | 16 | 64),
    };
    if !supported {
        return Err(Error::UnsupportedOrder {
            kind: match kind {
                ModKind::Psk => "psk",
                ModKind::Qam => "qam",
            },
            order,
        });
    }

    let mut points = vec![C64::new(0.0, 0.0); order];
    let mut bit_labels = vec![0u32; order];
    match kind {
        ModKind::Psk => {
            let scale = symbol_power.sqrt();
            for i in 0..order {
                let angle = 2.0 * std::f64::consts::PI * i as f64 / order as f64;
                points[i] = C64::new(scale * angle.cos(), scale * angle.sin());
                bit_labels[i] = gray(i as u32);
            }
        }
        ModKind::Qam => {
            // Square grid with odd coordinates, per-axis Gray labels, scaled
            // to the requested average power: E{|x|^2} = 2(M-1)/3 * step^2.
            let side = (order as f64).sqrt() as usize;
            let half_bits = side.trailing_zeros();
            let step = (symbol_power * 3.0 / (2.0 * (order as f64 - 1.0))).sqrt();
            for a in 0..side {
                for b in 0..side {
                    let idx = a * side + b;
                    let re = step * (2.0 * a as f64 - (side as f64 - 1.0));
                    let im = step * (2.0 * b as f64 - (side as f64 - 1.0));
                    points[idx] = C64::new(re, im);
                    bit_labels[idx] = (gray(a as u32) << half_bits) | gray(b as u32);
                }
            }
        }
    }

    let mut label_to_index = vec![0u32; order];
    for (i, &l) in bit_labels.iter().enumerate() {
        label_to_index[l as usize] = i as u32;
    }

    // Partition points into squared-magnitude classes (QAM rings).
    let mags: Vec<f64> = points.iter().map(|p| p.norm_sqr()).collect();
    let tol = 1e-9 * symbol_power.max(1e-30);
    let mut classes: Vec<f64> = Vec::new();
    let mut sorted = mags.clone();
    sorted.sort_by(|a, b| a.partial_cmp(b).unwrap());
    for m in sorted {
        if classes.last().map_or(true, |c| (m - c).abs() > tol) {
            classes.push(m);
        }
    }
    let mag_class: Vec<u8> = mags
        .iter()
        .map(|m| {
            classes
                .iter()
                .position(|c| (m - c).abs() <= tol)
                .expect("class cover") as u8
        })
        .collect();

    Ok(Constellation {
        kind,
        order,
        points,
        bit_labels,
        label_to_index,
        symbol_power,
        n_mag_classes: classes.len(),
        mag_class,
    })
}

impl Constellation {
    /// Bits per symbol.
    pub fn bits(&self) -> usize {
        self.order.trailing_zeros() as usize
    }

    /// Point index carrying the given Gray label.
    pub fn index_of_label(&self, label: u32) -> usize {
        self.label_to_index[label as usize] as usize
    }

    /// True when every point has the same magnitude.
    pub fn constant_modulus(&self) -> bool {
        self.n_mag_classes == 1
    }

    /// Number of squared-magnitude classes.
    pub fn n_mag_classes(&self) -> usize {
        self.n_mag_classes
    }

    /// Squared-magnitude class of a point index.
    pub fn mag_class(&self, point_idx: usize) -> usize {
        self.mag_class[point_idx] as usize
    }

    /// Index of the nearest constellation point (Euclidean).
    pub fn quantize(&self, value: C64) -> usize {
        let mut best = 0;
        let mut best_d = f64::INFINITY;
        for (i, p) in self.points.iter().enumerate() {
            let d = (value - p).norm_sqr();
            if d < best_d {
                best_d = d;
                best = i;
            }
        }
        best
    }

    /// Index of the point equal to `value` within tolerance.
    pub fn index_of_point(&self, value: C64) -> Result<usize> {
        let idx = self.quantize(value);
        let tol = 1e-6 * self.symbol_power.sqrt().max(1e-30);
        if (value - self.points[idx]).norm() > tol {
            return Err(Error::NotInConstellation);
        }
        Ok(idx)
    }
}

/// One SM block: per-slot active antenna index (0-based) and constellation
/// point index.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SmBlock {
    pub antenna_idx: Vec<u8>,
    pub symbols: Vec<u8>,
}

impl SmBlock {
    /// The one-hot SSK matrix L (N_T x B).
    pub fn l_matrix(&self, cfg: &SystemConfig) -> CMat {
        let mut l = CMat::zeros(cfg.n_tx, self.antenna_idx.len());
        for (j, &a) in self.antenna_idx.iter().enumerate() {
            l[(a as usize, j)] = C64::new(1.0, 0.0);
        }
        l
    }

    /// The transmitted matrix X = L·Diag(s).
    pub fn x_matrix(&self, cfg: &SystemConfig, cons: &Constellation) -> CMat {
        let mut x = CMat::zeros(cfg.n_tx, self.antenna_idx.len());
        for (j, (&a, &s)) in self.antenna_idx.iter().zip(&self.symbols).enumerate() {
            x[(a as usize, j)] = cons.points[s as usize];
        }
        x
    }

    /// Symbol values as a vector.
    pub fn symbol_values(&self, cons: &Constellation) -> Vec<C64> {
        self.symbols
            .iter()
            .map(|&s| cons.points[s as usize])
            .collect()
    }
}

/// Bits consumed by one SM block.
pub fn bits_per_sm_block(cfg: &SystemConfig) -> usize {
    cfg.block_len * cfg.bits_per_transmission()
}

/// Map a payload of B·log2(M·N_T) bits onto an SM block.
pub fn map_bits(bits: &[bool], cfg: &SystemConfig, cons: &Constellation) -> Result<SmBlock> {
    let m_bits = cons.bits();
    let a_bits = cfg.n_tx.trailing_zeros() as usize;
    let expected = cfg.block_len * (m_bits + a_bits);
    if bits.len() != expected {
        return Err(Error::BadLength {
            expected,
            got: bits.len(),
        });
    }
    let mut antenna_idx = Vec::with_capacity(cfg.block_len);
    let mut symbols = Vec::with_capacity(cfg.block_len);
    for j in 0..cfg.block_len {
        let chunk = &bits[j * (m_bits + a_bits)..(j + 1) * (m_bits + a_bits)];
        let mut a = 0u32;
        for &b in &chunk[..a_bits] {
            a = (a << 1) | b as u32;
        }
        let mut label = 0u32;
        for &b in &chunk[a_bits..] {
            label = (label << 1) | b as u32;
        }
        antenna_idx.push(a as u8);
        symbols.push(cons.index_of_label(label) as u8);
    }
    Ok(SmBlock {
        antenna_idx,
        symbols,
    })
}

/// Exact inverse of [`map_bits`].
pub fn demap_block(block: &SmBlock, cfg: &SystemConfig, cons: &Constellation) -> Vec<bool> {
    let m_bits = cons.bits();
    let a_bits = cfg.n_tx.trailing_zeros() as usize;
    let mut bits = Vec::with_capacity(block.antenna_idx.len() * (m_bits + a_bits));
    for (&a, &s) in block.antenna_idx.iter().zip(&block.symbols) {
        for i in (0..a_bits).rev() {
            bits.push((a >> i) & 1 == 1);
        }
        let label = cons.bit_labels[s as usize];
        for i in (0..m_bits).rev() {
            bits.push((label >> i) & 1 == 1);
        }
    }
    bits
}

/// Recover the SM factorization of a transmitted matrix.
///
/// Fails with `NotInConstellation` if a column's nonzero entry is not a
/// constellation point, or `ShapeMismatch` if a column does not have exactly
/// one nonzero entry.
pub fn sm_block_from_x(x: &CMat, cons: &Constellation) -> Result<SmBlock> {
    let mut antenna_idx = Vec::with_capacity(x.ncols());
    let mut symbols = Vec::with_capacity(x.ncols());
    for j in 0..x.ncols() {
        let mut active = None;
        for i in 0..x.nrows() {
            if x[(i, j)].norm_sqr() > 0.0 {
                if active.is_some() {
                    return Err(Error::ShapeMismatch {
                        context: format!("column {j} activates more than one antenna"),
                    });
                }
                active = Some(i);
            }
        }
        let i = active.ok_or_else(|| Error::ShapeMismatch {
            context: format!("column {j} is all zero"),
        })?;
        antenna_idx.push(i as u8);
        symbols.push(cons.index_of_point(x[(i, j)])? as u8);
    }
    Ok(SmBlock {
        antenna_idx,
        symbols,
    })
}

/// Hamming distance between the information payloads of two SM blocks.
pub fn hamming_payload_distance(
    x: &CMat,
    x_prime: &CMat,
    cfg: &SystemConfig,
    cons: &Constellation,
) -> Result<usize> {
    let a = demap_block(&sm_block_from_x(x, cons)?, cfg, cons);
    let b = demap_block(&sm_block_from_x(x_prime, cons)?, cfg, cons);
    Ok(a.iter().zip(&b).filter(|(x, y)| x != y).count())
}

/// The pilot block sqrt(eps_p)·I (requires B = N_T).
pub fn pilot_block(cfg: &SystemConfig) -> Result<CMat> {
    if cfg.block_len != cfg.n_tx {
        return Err(Error::ShapeMismatch {
            context: "pilot blocks need block_len == n_tx".into(),
        });
    }
    Ok(CMat::identity(cfg.n_tx, cfg.n_tx).scale(cfg.pilot_power.sqrt()))
}

/// Which family of transmitted matrices the detector searches over.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum CandidateMode {
    /// Antenna index plus modulated symbol per slot: (M·N_T)^B candidates.
    Sm,
    /// Spatial multiplexing: every antenna active, M^(N_T·B) candidates.
    Smx,
    /// Antenna index only, fixed reference symbol: N_T^B candidates.
    SskOnly,
}

impl std::fmt::Display for CandidateMode {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            CandidateMode::Sm => write!(f, "sm"),
            CandidateMode::Smx => write!(f, "smx"),
            CandidateMode::SskOnly => write!(f, "ssk-only"),
        }
    }
}

/// One detection hypothesis. For SM/SSK modes `antenna`/`symbols` hold one
/// entry per slot; for SMX `symbols` holds the full column-major point grid
/// and `antenna` is empty.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Candidate {
    pub antenna: Vec<u8>,
    pub symbols: Vec<u8>,
    /// Information bits, first bit in the most significant used position.
    pub payload: u64,
}

impl Candidate {
    /// Transmitted matrix for this hypothesis.
    pub fn x_matrix(&self, cfg: &SystemConfig, cons: &Constellation) -> CMat {
        let mut x = CMat::zeros(cfg.n_tx, cfg.block_len);
        if self.antenna.is_empty() {
            for j in 0..cfg.block_len {
                for i in 0..cfg.n_tx {
                    x[(i, j)] = cons.points[self.symbols[j * cfg.n_tx + i] as usize];
                }
            }
        } else {
            for (j, (&a, &s)) in self.antenna.iter().zip(&self.symbols).enumerate() {
                x[(a as usize, j)] = cons.points[s as usize];
            }
        }
        x
    }

    /// View as an [`SmBlock`] (SM and SSK modes only).
    pub fn sm_block(&self) -> SmBlock {
        SmBlock {
            antenna_idx: self.antenna.clone(),
            symbols: self.symbols.clone(),
        }
    }
}

/// Deterministically ordered candidate set.
#[derive(Debug, Clone)]
pub struct CandidateSet {
    pub mode: CandidateMode,
    pub list: Vec<Candidate>,
    /// Information bits per block.
    pub bits_per_block: usize,
    /// Number of distinct antenna patterns (SM/SSK) or candidates (SMX).
    pub n_l_groups: usize,
    /// Candidates per antenna pattern (SM: M^B, SSK: 1, SMX: 1).
    pub per_l: usize,
}

impl CandidateSet {
    pub fn len(&self) -> usize {
        self.list.len()
    }

    pub fn is_empty(&self) -> bool {
        self.list.is_empty()
    }

    /// Antenna-pattern group of a candidate index.
    pub fn l_group_of(&self, idx: usize) -> usize {
        idx / self.per_l
    }

    /// Antenna index vector of a group (SM/SSK modes).
    pub fn antenna_of_group(&self, cfg: &SystemConfig, group: usize) -> Vec<u8> {
        let mut v = vec![0u8; cfg.block_len];
        let mut g = group;
        for j in (0..cfg.block_len).rev() {
            v[j] = (g % cfg.n_tx) as u8;
            g /= cfg.n_tx;
        }
        v
    }

    /// Candidate index for an SM decision, per the enumeration order.
    pub fn index_of_sm(&self, cfg: &SystemConfig, cons: &Constellation, block: &SmBlock) -> usize {
        let mut a_idx = 0usize;
        for &a in &block.antenna_idx {
            a_idx = a_idx * cfg.n_tx + a as usize;
        }
        match self.mode {
            CandidateMode::SskOnly => a_idx,
            CandidateMode::Sm => {
                let mut l_idx = 0usize;
                for &s in &block.symbols {
                    l_idx = l_idx * cons.order + cons.bit_labels[s as usize] as usize;
                }
                a_idx * self.per_l + l_idx
            }
            CandidateMode::Smx => panic!("index_of_sm on an SMX candidate set"),
        }
    }
}

/// Enumerate the full candidate set in deterministic lexicographic order:
/// antenna vector major, symbol-label vector minor.
pub fn enumerate_candidates(
    cfg: &SystemConfig,
    cons: &Constellation,
    mode: CandidateMode,
    cap: u128,
) -> Result<CandidateSet> {
    let b = cfg.block_len;
    let nt = cfg.n_tx;
    let m = cons.order;
    let a_bits = nt.trailing_zeros() as usize;
    let m_bits = cons.bits();

    let size: u128 = match mode {
        CandidateMode::Sm => ((m * nt) as u128).pow(b as u32),
        CandidateMode::SskOnly => (nt as u128).pow(b as u32),
        CandidateMode::Smx => (m as u128).pow((nt * b) as u32),
    };
    if size > cap {
        return Err(Error::SearchSpaceTooLarge { size, cap });
    }
    let size = size as usize;

    let mut list = Vec::with_capacity(size);
    match mode {
        CandidateMode::Sm => {
            let n_groups = nt.pow(b as u32);
            let per_l = m.pow(b as u32);
            for g in 0..n_groups {
                let mut antenna = vec![0u8; b];
                let mut gg = g;
                for j in (0..b).rev() {
                    antenna[j] = (gg % nt) as u8;
                    gg /= nt;
                }
                for s in 0..per_l {
                    let mut labels = vec![0u32; b];
                    let mut ss = s;
                    for j in (0..b).rev() {
                        labels[j] = (ss % m) as u32;
                        ss /= m;
                    }
                    let mut payload = 0u64;
                    for j in 0..b {
                        payload = (payload << a_bits) | antenna[j] as u64;
                        payload = (payload << m_bits) | labels[j] as u64;
                    }
                    let symbols = labels
                        .iter()
                        .map(|&l| cons.index_of_label(l) as u8)
                        .collect();
                    list.push(Candidate {
                        antenna: antenna.clone(),
                        symbols,
                        payload,
                    });
                }
            }
            Ok(CandidateSet {
                mode,
                list,
                bits_per_block: b * (a_bits + m_bits),
                n_l_groups: n_groups,
                per_l,
            })
        }
        CandidateMode::SskOnly => {
            let ref_symbol = cons.index_of_label(0) as u8;
            for g in 0..size {
                let mut antenna = vec![0u8; b];
                let mut gg = g;
                for j in (0..b).rev() {
                    antenna[j] = (gg % nt) as u8;
                    gg /= nt;
                }
                let mut payload = 0u64;
                for &a in &antenna {
                    payload = (payload << a_bits) | a as u64;
                }
                list.push(Candidate {
                    antenna,
                    symbols: vec![ref_symbol; b],
                    payload,
                });
            }
            Ok(CandidateSet {
                mode,
                list,
                bits_per_block: b * a_bits,
                n_l_groups: size,
                per_l: 1,
            })
        }
        CandidateMode::Smx => {
            let cells = nt * b;
            for c in 0..size {
                let mut labels = vec![0u32; cells];
                let mut cc = c;
                for p in (0..cells).rev() {
                    labels[p] = (cc % m) as u32;
                    cc /= m;
                }
                let mut payload = 0u64;
                for &l in &labels {
                    payload = (payload << m_bits) | l as u64;
                }
                let symbols = labels
                    .iter()
                    .map(|&l| cons.index_of_label(l) as u8)
                    .collect();
                list.push(Candidate {
                    antenna: Vec::new(),
                    symbols,
                    payload,
                });
            }
            Ok(CandidateSet {
                mode,
                list,
                bits_per_block: cells * m_bits,
                n_l_groups: size,
                per_l: 1,
            })
        }
    }
}

/// Bits of one payload as a vector (first bit first).
pub fn payload_to_bits(payload: u64, n_bits: usize) -> Vec<bool> {
    (0..n_bits)
        .map(|i| (payload >> (n_bits - 1 - i)) & 1 == 1)
        .collect()
}
