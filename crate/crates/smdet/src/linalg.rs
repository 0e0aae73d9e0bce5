//! Complex linear-algebra kernels: Kronecker products, Hermitian square
//! roots, and Cholesky factors with log-determinants.
//!
//! Every covariance in the detector family is Hermitian positive definite by
//! construction, so all quadratic forms go through Cholesky solves; explicit
//! inversion only appears where a Hadamard product genuinely needs the
//! inverse matrix elementwise.

use nalgebra::{DMatrix, DVector, SymmetricEigen};
use num_complex::Complex64;

use crate::{Error, Result};

/// Complex scalar used throughout.
pub type C64 = Complex64;

/// Complex dynamic matrix.
pub type CMat = DMatrix<C64>;

/// Complex dynamic vector.
pub type CVec = DVector<C64>;

/// Kronecker product a (x) b.
pub fn kron(a: &CMat, b: &CMat) -> CMat {
    let (ar, ac) = a.shape();
    let (br, bc) = b.shape();
    let mut out = CMat::zeros(ar * br, ac * bc);
    for i in 0..ar {
        for j in 0..ac {
            let s = a[(i, j)];
            for p in 0..br {
                for q in 0..bc {
                    out[(i * br + p, j * bc + q)] = s * b[(p, q)];
                }
            }
        }
    }
    out
}

/// Column-stacking vec(M).
pub fn vec_of(m: &CMat) -> CVec {
    CVec::from_column_slice(m.as_slice())
}

/// Inverse of `vec_of`: reshape a stacked vector into rows x cols.
pub fn unvec(v: &CVec, rows: usize, cols: usize) -> CMat {
    assert_eq!(v.len(), rows * cols);
    CMat::from_column_slice(rows, cols, v.as_slice())
}

/// Relative deviation from Hermitian symmetry, ||M - M^H|| / max(||M||, 1).
pub fn hermitian_deviation(m: &CMat) -> f64 {
    let diff = m - m.adjoint();
    diff.norm() / m.norm().max(1.0)
}

/// Force exact Hermitian symmetry: (M + M^H) / 2.
pub fn hermitize(m: &CMat) -> CMat {
    (m + m.adjoint()).scale(0.5)
}

/// Hermitian square root S of a PSD matrix M, with S·S^H = M.
///
/// Eigenvalues below 1e-12 are clamped to zero; a symmetry deviation above
/// 1e-10 is rejected.
pub fn psd_sqrt(m: &CMat) -> Result<CMat> {
    let dev = hermitian_deviation(m);
    if dev > 1e-10 {
        return Err(Error::NotHermitian { deviation: dev });
    }
    let eig = SymmetricEigen::new(hermitize(m));
    let roots = eig.eigenvalues.map(|v| {
        let v = if v < 1e-12 { 0.0 } else { v };
        C64::new(v.sqrt(), 0.0)
    });
    Ok(&eig.eigenvectors * CMat::from_diagonal(&roots) * eig.eigenvectors.adjoint())
}

/// Clamp a Hermitian matrix to the PSD cone (negative eigenvalues to zero).
pub fn psd_clamp(m: &CMat) -> CMat {
    let eig = SymmetricEigen::new(hermitize(m));
    let vals = eig.eigenvalues.map(|v| C64::new(v.max(0.0), 0.0));
    &eig.eigenvectors * CMat::from_diagonal(&vals) * eig.eigenvectors.adjoint()
}

/// Minimum eigenvalue of a Hermitian matrix.
pub fn min_eigenvalue(m: &CMat) -> f64 {
    let eig = SymmetricEigen::new(hermitize(m));
    eig.eigenvalues.iter().fold(f64::INFINITY, |a, &b| a.min(b))
}

/// Lower-triangular Cholesky factor of a Hermitian positive definite matrix,
/// together with the log-determinant of the factored matrix.
#[derive(Debug, Clone)]
pub struct CholFactor {
    l: CMat,
    logdet: f64,
}

impl CholFactor {
    /// Factor `m`, retrying once with `jitter`·I added if the first attempt
    /// fails. Exceeding the retry yields `NotPositiveDefinite`.
    pub fn new(m: &CMat, jitter: f64) -> Result<Self> {
        match Self::try_factor(m) {
            Some(f) => Ok(f),
            None => {
                let n = m.nrows();
                let bumped = m + CMat::identity(n, n).scale(jitter);
                Self::try_factor(&bumped).ok_or(Error::NotPositiveDefinite)
            }
        }
    }

    /// The complex factorization happily takes square roots of negative
    /// pivots, so validate that the factor diagonal is real and positive
    /// (true exactly when a Hermitian input is positive definite).
    fn try_factor(m: &CMat) -> Option<Self> {
        let c = nalgebra::Cholesky::new(m.clone())?;
        let l = c.unpack();
        let mut logdet = 0.0;
        for i in 0..l.nrows() {
            let d = l[(i, i)];
            if !(d.re > 0.0) || d.im.abs() > 1e-8 * d.re.abs() {
                return None;
            }
            logdet += 2.0 * d.re.ln();
        }
        if !logdet.is_finite() {
            return None;
        }
        Some(Self { l, logdet })
    }

    /// Dimension of the factored matrix.
    pub fn dim(&self) -> usize {
        self.l.nrows()
    }

    /// log det of the factored matrix.
    pub fn logdet(&self) -> f64 {
        self.logdet
    }

    /// The lower factor L.
    pub fn l(&self) -> &CMat {
        &self.l
    }

    /// chi^H Gamma^{-1} chi for a vector chi, via one forward substitution.
    pub fn quad_vec(&self, chi: &CVec) -> f64 {
        let mut y = chi.clone();
        self.forward_solve_vec(&mut y);
        y.norm_squared()
    }

    /// In-place forward substitution L y = chi (overwrites chi with y).
    pub fn forward_solve_vec(&self, chi: &mut CVec) {
        let ok = self.l.solve_lower_triangular_mut(chi);
        debug_assert!(ok, "triangular solve on a PD factor cannot fail");
    }

    /// tr{ chi^H Gamma^{-1} chi } for a matrix chi.
    pub fn quad_trace(&self, chi: &CMat) -> f64 {
        let mut y = chi.clone();
        self.quad_trace_mut(&mut y)
    }

    /// As [`Self::quad_trace`], overwriting `chi` as scratch space.
    pub fn quad_trace_mut(&self, chi: &mut CMat) -> f64 {
        let ok = self.l.solve_lower_triangular_mut(chi);
        debug_assert!(ok);
        chi.norm_squared()
    }

    /// Gamma^{-1} b for a matrix right-hand side.
    pub fn solve_mat(&self, b: &CMat) -> CMat {
        let mut y = b.clone();
        let ok = self.l.solve_lower_triangular_mut(&mut y);
        debug_assert!(ok);
        let ok = self.l.adjoint().solve_upper_triangular_mut(&mut y);
        debug_assert!(ok);
        y
    }

    /// Explicit inverse (needed only for Hadamard-product metrics).
    pub fn inverse(&self) -> CMat {
        let n = self.dim();
        self.solve_mat(&CMat::identity(n, n))
    }
}

/// Moore-Penrose pseudo-inverse with a relative singular-value threshold.
pub fn pseudo_inverse(m: &CMat, rel_tol: f64) -> Result<CMat> {
    let svd = m.clone().svd(true, true);
    let max_sv = svd.singular_values.iter().fold(0.0f64, |a, &b| a.max(b));
    svd.pseudo_inverse(rel_tol * max_sv.max(1e-300))
        .map_err(|_| Error::ShapeMismatch {
            context: "pseudo-inverse of an empty matrix".into(),
        })
}
