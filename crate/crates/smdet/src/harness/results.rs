//! BER accumulation and CSV persistence.

use std::io::Write;
use std::path::Path;

use crate::detectors::{DetectorKind, EstimatorKind};
use crate::Result;

/// Error counts for one measurement cell.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct BerCell {
    pub bits: u64,
    pub errors: u64,
}

impl BerCell {
    pub fn add(&mut self, bits: u64, errors: u64) {
        self.bits += bits;
        self.errors += errors;
    }

    pub fn merge(&mut self, other: &BerCell) {
        self.bits += other.bits;
        self.errors += other.errors;
    }

    pub fn ber(&self) -> f64 {
        if self.bits == 0 {
            0.0
        } else {
            self.errors as f64 / self.bits as f64
        }
    }

    /// Wilson 95% confidence interval on the bit error probability.
    pub fn wilson_ci(&self) -> (f64, f64) {
        if self.bits == 0 {
            return (0.0, 1.0);
        }
        let z = 1.96f64;
        let n = self.bits as f64;
        let p = self.ber();
        let z2 = z * z;
        let denom = 1.0 + z2 / n;
        let center = (p + z2 / (2.0 * n)) / denom;
        let half = z * (p * (1.0 - p) / n + z2 / (4.0 * n * n)).sqrt() / denom;
        ((center - half).max(0.0), (center + half).min(1.0))
    }
}

/// Results for one (detector, SNR) pair.
#[derive(Debug, Clone)]
pub struct BerPoint {
    pub detector: DetectorKind,
    pub estimator: EstimatorKind,
    pub snr_db: f64,
    pub total: BerCell,
    /// Per-data-block-index breakdown (ascending k).
    pub per_k: Vec<(usize, BerCell)>,
    /// The max-bits budget stopped this point before min-errors was met.
    pub hit_max_bits: bool,
}

/// A full sweep result.
#[derive(Debug, Clone)]
pub struct BerCurve {
    pub points: Vec<BerPoint>,
}

impl BerCurve {
    /// CSV rendering: one aggregate row per point (block_k = -1) followed by
    /// the per-block rows.
    pub fn to_csv(&self) -> String {
        let mut out = String::new();
        out.push_str("detector,estimator,snr_db,block_k,bits,bit_errors,ber,ci_low,ci_high\n");
        for p in &self.points {
            let mut row = |k: i64, cell: &BerCell| {
                let (lo, hi) = cell.wilson_ci();
                out.push_str(&format!(
                    "{},{},{},{},{},{},{},{},{}\n",
                    p.detector,
                    p.estimator,
                    p.snr_db,
                    k,
                    cell.bits,
                    cell.errors,
                    cell.ber(),
                    lo,
                    hi
                ));
            };
            row(-1, &p.total);
            for (k, cell) in &p.per_k {
                row(*k as i64, cell);
            }
        }
        out
    }
}

/// Atomically write a curve as CSV (temp file + rename).
pub fn write_results(curve: &BerCurve, path: &Path) -> Result<()> {
    let tmp = path.with_extension("csv.tmp");
    {
        let mut f = std::fs::File::create(&tmp)?;
        f.write_all(curve.to_csv().as_bytes())?;
        f.sync_all()?;
    }
    std::fs::rename(&tmp, path)?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn wilson_interval_sane() {
        let cell = BerCell {
            bits: 10_000,
            errors: 100,
        };
        let (lo, hi) = cell.wilson_ci();
        assert!(lo < 0.01 && 0.01 < hi);
        assert!(hi - lo < 0.005);
        let empty = BerCell::default();
        assert_eq!(empty.wilson_ci(), (0.0, 1.0));
    }

    #[test]
    fn csv_layout() {
        let curve = BerCurve {
            points: vec![BerPoint {
                detector: DetectorKind::CeeaMl,
                estimator: EstimatorKind::Mb,
                snr_db: 10.0,
                total: BerCell {
                    bits: 100,
                    errors: 10,
                },
                per_k: vec![(
                    1,
                    BerCell {
                        bits: 50,
                        errors: 4,
                    },
                )],
                hit_max_bits: false,
            }],
        };
        let csv = curve.to_csv();
        let mut lines = csv.lines();
        assert_eq!(
            lines.next().unwrap(),
            "detector,estimator,snr_db,block_k,bits,bit_errors,ber,ci_low,ci_high"
        );
        assert!(lines.next().unwrap().starts_with("ceea-ml,mb,10,-1,100,10,0.1,"));
        assert!(lines.next().unwrap().starts_with("ceea-ml,mb,10,1,50,4,0.08,"));
    }
}
