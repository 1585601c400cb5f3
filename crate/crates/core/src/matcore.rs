//! Dense small-matrix kernels: vec, Kronecker products, commutation and
//! symmetrizer matrices, selection matrices, leading principal blocks and the
//! symmetric square root.
//!
//! Everything here works on `nalgebra::DMatrix`. Orders are small (a handful
//! of rows), so `K_mn` and `N_m` are materialized explicitly.

use nalgebra::{Complex, DMatrix, DVector, Scalar, SymmetricEigen};
use serde::{Deserialize, Serialize};
use thiserror::Error;

pub type Mat = DMatrix<f64>;
pub type CMat = DMatrix<Complex<f64>>;
pub type C64 = Complex<f64>;

/// Relative asymmetry below which a raw matrix is silently symmetrized.
pub const SYMMETRY_TOL: f64 = 1e-10;
/// Relative pivot threshold for the positive-definiteness test.
pub const PIVOT_TOL: f64 = 1e-12;
/// Absolute eigenvalue clamp used by [`sqrt_psd`].
pub const EIGEN_CLAMP: f64 = 1e-14;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum MatError {
    #[error("matrix is not square ({rows}x{cols})")]
    NotSquare { rows: usize, cols: usize },
    #[error("matrix order must be at least 1")]
    Empty,
    #[error("matrix contains non-finite entries")]
    NonFinite,
    #[error("matrix is not symmetric (relative asymmetry {0:e})")]
    Asymmetric(f64),
    #[error("matrix is not positive definite (pivot {pivot:e} at index {index})")]
    NotPositiveDefinite { index: usize, pivot: f64 },
    #[error("negative eigenvalue {0:e}")]
    NegativeEigenvalue(f64),
    #[error("block index {index} out of range for order {order}")]
    IndexOutOfRange { index: usize, order: usize },
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },
}

fn max_abs<T: Copy>(it: impl Iterator<Item = T>, norm: impl Fn(T) -> f64) -> f64 {
    it.map(norm).fold(0.0, f64::max)
}

/// Real symmetric matrix of order `m >= 1`.
#[derive(Debug, Clone, PartialEq)]
pub struct SymMatrix(Mat);

impl SymMatrix {
    /// Accepts a raw square matrix. Asymmetry up to [`SYMMETRY_TOL`] (relative
    /// to the largest entry) is removed by averaging with the transpose; larger
    /// asymmetry is rejected.
    pub fn new(a: Mat) -> Result<Self, MatError> {
        if a.nrows() != a.ncols() {
            return Err(MatError::NotSquare { rows: a.nrows(), cols: a.ncols() });
        }
        if a.nrows() == 0 {
            return Err(MatError::Empty);
        }
        if a.iter().any(|x| !x.is_finite()) {
            return Err(MatError::NonFinite);
        }
        let scale = max_abs(a.iter().copied(), f64::abs);
        let asym = max_abs((&a - a.transpose()).iter().copied(), f64::abs);
        if asym == 0.0 {
            return Ok(Self(a));
        }
        let rel = asym / scale;
        if rel > SYMMETRY_TOL {
            return Err(MatError::Asymmetric(rel));
        }
        let sym = (&a + a.transpose()) * 0.5;
        Ok(Self(sym))
    }

    pub fn from_row_slice(m: usize, data: &[f64]) -> Result<Self, MatError> {
        if data.len() != m * m {
            return Err(MatError::DimensionMismatch { expected: m * m, got: data.len() });
        }
        Self::new(Mat::from_row_slice(m, m, data))
    }

    pub fn identity(m: usize) -> Self {
        Self(Mat::identity(m, m))
    }

    pub fn zeros(m: usize) -> Self {
        Self(Mat::zeros(m, m))
    }

    pub fn from_diagonal(d: &[f64]) -> Result<Self, MatError> {
        Self::new(Mat::from_diagonal(&DVector::from_column_slice(d)))
    }

    pub fn order(&self) -> usize {
        self.0.nrows()
    }

    pub fn as_matrix(&self) -> &Mat {
        &self.0
    }

    pub fn into_matrix(self) -> Mat {
        self.0
    }

    pub fn scale(&self, c: f64) -> Self {
        Self(&self.0 * c)
    }

    pub fn max_abs(&self) -> f64 {
        max_abs(self.0.iter().copied(), f64::abs)
    }
}

/// Lower Cholesky factor with the relative pivot rule: a pivot below
/// `PIVOT_TOL * max(diag)` is a failure.
pub fn cholesky_lower(a: &Mat) -> Result<Mat, MatError> {
    let m = a.nrows();
    let scale = (0..m).map(|i| a[(i, i)]).fold(f64::NEG_INFINITY, f64::max);
    if !(scale > 0.0) {
        return Err(MatError::NotPositiveDefinite { index: 0, pivot: scale });
    }
    let mut l = Mat::zeros(m, m);
    for j in 0..m {
        let mut d = a[(j, j)];
        for k in 0..j {
            d -= l[(j, k)] * l[(j, k)];
        }
        if !(d >= PIVOT_TOL * scale) {
            return Err(MatError::NotPositiveDefinite { index: j, pivot: d });
        }
        let ljj = d.sqrt();
        l[(j, j)] = ljj;
        for i in (j + 1)..m {
            let mut s = a[(i, j)];
            for k in 0..j {
                s -= l[(i, k)] * l[(j, k)];
            }
            l[(i, j)] = s / ljj;
        }
    }
    Ok(l)
}

/// Symmetric positive-definite matrix together with its lower Cholesky factor.
#[derive(Debug, Clone, PartialEq)]
pub struct PosDefMatrix {
    base: SymMatrix,
    chol: Mat,
}

impl PosDefMatrix {
    pub fn new(base: SymMatrix) -> Result<Self, MatError> {
        let chol = cholesky_lower(base.as_matrix())?;
        Ok(Self { base, chol })
    }

    pub fn from_matrix(a: Mat) -> Result<Self, MatError> {
        Self::new(SymMatrix::new(a)?)
    }

    pub fn from_row_slice(m: usize, data: &[f64]) -> Result<Self, MatError> {
        Self::new(SymMatrix::from_row_slice(m, data)?)
    }

    pub fn identity(m: usize) -> Self {
        Self { base: SymMatrix::identity(m), chol: Mat::identity(m, m) }
    }

    pub fn order(&self) -> usize {
        self.base.order()
    }

    pub fn as_sym(&self) -> &SymMatrix {
        &self.base
    }

    pub fn as_matrix(&self) -> &Mat {
        self.base.as_matrix()
    }

    /// Lower triangular `L` with `A = L L'`.
    pub fn cholesky(&self) -> &Mat {
        &self.chol
    }

    pub fn ln_det(&self) -> f64 {
        2.0 * self.chol.diagonal().iter().map(|d| d.ln()).sum::<f64>()
    }

    /// `ln |A_i|` for every leading principal block, `i = 1..=m`.
    pub fn ln_leading_minors(&self) -> Vec<f64> {
        let mut acc = 0.0;
        self.chol
            .diagonal()
            .iter()
            .map(|d| {
                acc += 2.0 * d.ln();
                acc
            })
            .collect()
    }

    pub fn inverse(&self) -> PosDefMatrix {
        let m = self.order();
        let linv = self
            .chol
            .solve_lower_triangular(&Mat::identity(m, m))
            .expect("Cholesky factor has a positive diagonal");
        let inv = linv.transpose() * linv;
        let sym = SymMatrix::new((&inv + inv.transpose()) * 0.5).expect("symmetrized inverse");
        PosDefMatrix::new(sym).expect("inverse of a positive-definite matrix")
    }

    /// `tr(A^{-1} X)` through two triangular solves against the factorization.
    pub fn trace_solve(&self, x: &Mat) -> f64 {
        let w = self.chol.solve_lower_triangular(x).expect("non-singular factor");
        let v = self
            .chol
            .solve_lower_triangular(&w.transpose())
            .expect("non-singular factor");
        v.trace()
    }

    pub fn scale(&self, c: f64) -> Result<Self, MatError> {
        Self::new(self.base.scale(c))
    }
}

/// Complex symmetric (not Hermitian) matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct ComplexSymMatrix(CMat);

impl ComplexSymMatrix {
    /// Same acceptance rule as [`SymMatrix::new`], applied to `A - A'`.
    pub fn new(a: CMat) -> Result<Self, MatError> {
        if a.nrows() != a.ncols() {
            return Err(MatError::NotSquare { rows: a.nrows(), cols: a.ncols() });
        }
        if a.nrows() == 0 {
            return Err(MatError::Empty);
        }
        if a.iter().any(|z| !z.re.is_finite() || !z.im.is_finite()) {
            return Err(MatError::NonFinite);
        }
        let scale = max_abs(a.iter().copied(), |z: C64| z.norm());
        let asym = max_abs((&a - a.transpose()).iter().copied(), |z: C64| z.norm());
        if asym == 0.0 {
            return Ok(Self(a));
        }
        let rel = asym / scale;
        if rel > SYMMETRY_TOL {
            return Err(MatError::Asymmetric(rel));
        }
        let half = C64::new(0.5, 0.0);
        Ok(Self((&a + a.transpose()) * half))
    }

    /// `I - i M` for a real symmetric `M`.
    pub fn identity_minus_i(m: &SymMatrix) -> Self {
        let n = m.order();
        Self(CMat::from_fn(n, n, |r, s| {
            let re = if r == s { 1.0 } else { 0.0 };
            C64::new(re, -m.as_matrix()[(r, s)])
        }))
    }

    pub fn order(&self) -> usize {
        self.0.nrows()
    }

    pub fn as_matrix(&self) -> &CMat {
        &self.0
    }

    pub fn try_inverse(&self) -> Option<Self> {
        let inv = self.0.clone().try_inverse()?;
        Self::new(inv).ok()
    }
}

/// `E_i`: the first `i` columns of `I_m`. Stored implicitly.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SelectionMatrix {
    order: usize,
    rank: usize,
}

impl SelectionMatrix {
    pub fn new(order: usize, rank: usize) -> Result<Self, MatError> {
        if rank == 0 || rank > order {
            return Err(MatError::IndexOutOfRange { index: rank, order });
        }
        Ok(Self { order, rank })
    }

    pub fn order(&self) -> usize {
        self.order
    }

    pub fn rank(&self) -> usize {
        self.rank
    }

    /// The explicit `m x i` matrix.
    pub fn to_matrix(&self) -> Mat {
        Mat::from_fn(self.order, self.rank, |r, s| if r == s { 1.0 } else { 0.0 })
    }

    /// `E_i E_i'`: the diagonal 0/1 projector onto the first `i` coordinates.
    pub fn projector(&self) -> Mat {
        Mat::from_fn(self.order, self.order, |r, s| {
            if r == s && r < self.rank {
                1.0
            } else {
                0.0
            }
        })
    }
}

/// On-disk matrix layout: `{"rows", "cols", "data"}` with `data` row-major.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MatrixFile {
    pub rows: usize,
    pub cols: usize,
    pub data: Vec<f64>,
}

impl MatrixFile {
    pub fn to_matrix(&self) -> Result<Mat, MatError> {
        if self.data.len() != self.rows * self.cols {
            return Err(MatError::DimensionMismatch {
                expected: self.rows * self.cols,
                got: self.data.len(),
            });
        }
        if self.data.iter().any(|x| !x.is_finite()) {
            return Err(MatError::NonFinite);
        }
        Ok(Mat::from_row_slice(self.rows, self.cols, &self.data))
    }
}

impl From<&Mat> for MatrixFile {
    fn from(a: &Mat) -> Self {
        let data = (0..a.nrows())
            .flat_map(|r| (0..a.ncols()).map(move |c| (r, c)))
            .map(|(r, c)| a[(r, c)])
            .collect();
        Self { rows: a.nrows(), cols: a.ncols(), data }
    }
}

/// Column-stacking vectorization.
pub fn vec<T: Scalar>(a: &DMatrix<T>) -> DVector<T> {
    DVector::from_column_slice(a.as_slice())
}

/// Inverse of [`vec`] for an `m x n` target.
pub fn unvec<T: Scalar>(v: &DVector<T>, m: usize, n: usize) -> Result<DMatrix<T>, MatError> {
    if v.len() != m * n {
        return Err(MatError::DimensionMismatch { expected: m * n, got: v.len() });
    }
    Ok(DMatrix::from_column_slice(m, n, v.as_slice()))
}

pub fn kron(a: &Mat, b: &Mat) -> Mat {
    a.kronecker(b)
}

/// `K_mn`, the permutation with `K_mn vec(A) = vec(A')` for `A` of size `m x n`.
pub fn commutation_matrix(m: usize, n: usize) -> Mat {
    let mut k = Mat::zeros(m * n, m * n);
    for r in 0..m {
        for s in 0..n {
            k[(s + r * n, r + s * m)] = 1.0;
        }
    }
    k
}

/// `N_m = (I_{m^2} + K_m) / 2`.
pub fn symmetrizer(m: usize) -> Mat {
    (Mat::identity(m * m, m * m) + commutation_matrix(m, m)) * 0.5
}

/// Top-left `i x i` block, real or complex.
pub fn leading_principal_submatrix<T: Scalar>(
    a: &DMatrix<T>,
    i: usize,
) -> Result<DMatrix<T>, MatError> {
    let m = a.nrows();
    if a.ncols() != m {
        return Err(MatError::NotSquare { rows: m, cols: a.ncols() });
    }
    if i == 0 || i > m {
        return Err(MatError::IndexOutOfRange { index: i, order: m });
    }
    Ok(a.view((0, 0), (i, i)).into_owned())
}

/// Unique symmetric square root computed from the symmetric eigendecomposition.
pub fn sqrt_psd(a: &PosDefMatrix) -> Result<PosDefMatrix, MatError> {
    let eig = SymmetricEigen::new(a.as_matrix().clone());
    let mut roots = eig.eigenvalues.clone();
    for lam in roots.iter_mut() {
        if *lam < 0.0 {
            if *lam < -EIGEN_CLAMP {
                return Err(MatError::NegativeEigenvalue(*lam));
            }
            *lam = 0.0;
        }
        *lam = lam.sqrt();
    }
    let q = &eig.eigenvectors;
    let s = q * Mat::from_diagonal(&roots) * q.transpose();
    PosDefMatrix::from_matrix((&s + s.transpose()) * 0.5)
}

/// Order-reversal permutation `P` (anti-identity).
pub fn reversal(m: usize) -> Mat {
    Mat::from_fn(m, m, |r, s| if r + s + 1 == m { 1.0 } else { 0.0 })
}

/// Number of singular values above `rel_tol * sigma_max`.
pub fn numerical_rank(a: &Mat, rel_tol: f64) -> usize {
    let sv = a.clone().singular_values();
    let top = sv.iter().copied().fold(0.0, f64::max);
    if top == 0.0 {
        return 0;
    }
    sv.iter().filter(|&&s| s > rel_tol * top).count()
}

/// Largest absolute entry.
pub fn max_abs_entry(a: &Mat) -> f64 {
    max_abs(a.iter().copied(), f64::abs)
}
