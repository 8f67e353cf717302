//! Dense symmetric linear algebra on top of `nalgebra`.
//!
//! Everything downstream (pencil analysis, the no-Slater reduction, the
//! solver) goes through the handful of kernels here, so that rank and
//! definiteness decisions are made with one consistent set of thresholds.

use std::ops::Deref;

use nalgebra::{DMatrix, DVector, SymmetricEigen, SVD};

use crate::error::{Error, Result};

/// Relative/absolute thresholds for rank, range and definiteness decisions.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Tolerance {
    pub rel: f64,
    pub abs: f64,
}

impl Default for Tolerance {
    fn default() -> Self {
        Tolerance {
            rel: 1e-9,
            abs: 1e-12,
        }
    }
}

impl Tolerance {
    pub fn new(rel: f64, abs: f64) -> Result<Self> {
        if !(rel > 0.0 && abs > 0.0 && rel.is_finite() && abs.is_finite()) {
            return Err(Error::PreconditionViolated(format!(
                "tolerances must be positive and finite (rel={rel}, abs={abs})"
            )));
        }
        Ok(Tolerance { rel, abs })
    }

    /// Same absolute floor, different relative threshold.
    pub fn with_rel(self, rel: f64) -> Self {
        Tolerance { rel, ..self }
    }
}

/// A real symmetric matrix. Symmetry is enforced on construction by
/// averaging with the transpose, so `m[(i, j)] == m[(j, i)]` holds exactly.
#[derive(Debug, Clone, PartialEq)]
pub struct SymMatrix(DMatrix<f64>);

impl SymMatrix {
    pub fn new(m: DMatrix<f64>) -> Result<Self> {
        if m.nrows() != m.ncols() {
            return Err(Error::DimensionMismatch(format!(
                "expected a square matrix, got {}x{}",
                m.nrows(),
                m.ncols()
            )));
        }
        if m.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite("matrix".into()));
        }
        Ok(Self::symmetrize(m))
    }

    /// Symmetrizes without validation. Callers guarantee squareness.
    pub(crate) fn symmetrize(m: DMatrix<f64>) -> Self {
        let t = m.transpose();
        SymMatrix((m + t) * 0.5)
    }

    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self> {
        let n = rows.len();
        if rows.iter().any(|r| r.len() != n) {
            return Err(Error::DimensionMismatch(
                "rows must all have length equal to the row count".into(),
            ));
        }
        Self::new(DMatrix::from_fn(n, n, |i, j| rows[i][j]))
    }

    pub fn from_diagonal(d: &[f64]) -> Self {
        SymMatrix(DMatrix::from_diagonal(&DVector::from_column_slice(d)))
    }

    pub fn zeros(n: usize) -> Self {
        SymMatrix(DMatrix::zeros(n, n))
    }

    pub fn identity(n: usize) -> Self {
        SymMatrix(DMatrix::identity(n, n))
    }

    pub fn dim(&self) -> usize {
        self.0.nrows()
    }

    pub fn as_matrix(&self) -> &DMatrix<f64> {
        &self.0
    }

    pub fn into_matrix(self) -> DMatrix<f64> {
        self.0
    }

    /// `a·self + b·other`.
    pub fn combine(&self, a: f64, other: &SymMatrix, b: f64) -> SymMatrix {
        SymMatrix(&self.0 * a + &other.0 * b)
    }

    /// `self + σ·other`, the pencil member at σ.
    pub fn pencil(&self, other: &SymMatrix, sigma: f64) -> SymMatrix {
        self.combine(1.0, other, sigma)
    }

    /// `Cᵀ·self·C` for a (possibly rectangular) `C`.
    pub fn congruence(&self, c: &DMatrix<f64>) -> SymMatrix {
        Self::symmetrize(c.transpose() * &self.0 * c)
    }

    pub fn quad_form(&self, x: &DVector<f64>) -> f64 {
        x.dot(&(&self.0 * x))
    }

    pub fn scaled(&self, s: f64) -> SymMatrix {
        SymMatrix(&self.0 * s)
    }

    pub fn norm_fro(&self) -> f64 {
        self.0.norm()
    }

    /// Entrywise absolute value. Used for floating-point error bounds.
    pub fn abs(&self) -> DMatrix<f64> {
        self.0.abs()
    }
}

impl Deref for SymMatrix {
    type Target = DMatrix<f64>;

    fn deref(&self) -> &DMatrix<f64> {
        &self.0
    }
}

/// Eigendecomposition `M = Q·diag(values)·Qᵀ` with ascending eigenvalues.
#[derive(Debug, Clone)]
pub struct EigDecomp {
    pub values: DVector<f64>,
    pub vectors: DMatrix<f64>,
}

impl EigDecomp {
    pub fn dim(&self) -> usize {
        self.values.len()
    }

    /// Largest eigenvalue magnitude, i.e. the spectral norm.
    pub fn max_abs(&self) -> f64 {
        self.values.iter().fold(0.0_f64, |m, v| m.max(v.abs()))
    }

    pub fn min(&self) -> f64 {
        self.values.iter().copied().fold(f64::INFINITY, f64::min)
    }

    pub fn recompose(&self) -> DMatrix<f64> {
        let d = DMatrix::from_diagonal(&self.values);
        &self.vectors * d * self.vectors.transpose()
    }

    /// Columns of `vectors` whose eigenvalue satisfies `keep`.
    pub fn select(&self, keep: impl Fn(f64) -> bool) -> DMatrix<f64> {
        let idx: Vec<usize> = (0..self.dim()).filter(|&i| keep(self.values[i])).collect();
        select_columns(&self.vectors, &idx)
    }

    fn pinv_threshold(&self, tol: Tolerance) -> f64 {
        (tol.rel * self.max_abs()).max(tol.abs)
    }

    fn null_threshold(&self, tol: Tolerance) -> f64 {
        (tol.rel * self.max_abs().max(1.0)).max(tol.abs)
    }

    pub fn pinv(&self, tol: Tolerance) -> SymMatrix {
        let thr = self.pinv_threshold(tol);
        let inv = self
            .values
            .map(|v| if v.abs() > thr { 1.0 / v } else { 0.0 });
        SymMatrix::symmetrize(
            &self.vectors * DMatrix::from_diagonal(&inv) * self.vectors.transpose(),
        )
    }

    pub fn null_basis(&self, tol: Tolerance) -> Basis {
        let thr = self.null_threshold(tol);
        Basis::from_orthonormal(self.select(|v| v.abs() <= thr))
    }

    pub fn range_basis(&self, tol: Tolerance) -> Basis {
        let thr = self.null_threshold(tol);
        Basis::from_orthonormal(self.select(|v| v.abs() > thr))
    }

    pub fn is_psd(&self, tol: Tolerance) -> bool {
        self.dim() == 0 || self.min() >= -(tol.rel * self.max_abs().max(1.0)).max(tol.abs)
    }
}

pub(crate) fn select_columns(m: &DMatrix<f64>, idx: &[usize]) -> DMatrix<f64> {
    DMatrix::from_fn(m.nrows(), idx.len(), |i, j| m[(i, idx[j])])
}

/// An `n×k` matrix with orthonormal columns; `k` may be zero.
#[derive(Debug, Clone, PartialEq)]
pub struct Basis {
    columns: DMatrix<f64>,
}

impl Basis {
    pub(crate) fn from_orthonormal(columns: DMatrix<f64>) -> Self {
        Basis { columns }
    }

    pub fn empty(n: usize) -> Self {
        Basis {
            columns: DMatrix::zeros(n, 0),
        }
    }

    pub fn identity(n: usize) -> Self {
        Basis {
            columns: DMatrix::identity(n, n),
        }
    }

    /// Ambient dimension `n`.
    pub fn ambient_dim(&self) -> usize {
        self.columns.nrows()
    }

    /// Number of basis vectors `k`.
    pub fn rank(&self) -> usize {
        self.columns.ncols()
    }

    pub fn is_empty(&self) -> bool {
        self.rank() == 0
    }

    pub fn columns(&self) -> &DMatrix<f64> {
        &self.columns
    }

    /// `Vᵀx`.
    pub fn coords(&self, x: &DVector<f64>) -> DVector<f64> {
        self.columns.tr_mul(x)
    }

    /// `V·y`.
    pub fn lift(&self, y: &DVector<f64>) -> DVector<f64> {
        &self.columns * y
    }
}

pub fn sym_eig(m: &SymMatrix) -> Result<EigDecomp> {
    let n = m.dim();
    if n == 0 {
        return Ok(EigDecomp {
            values: DVector::zeros(0),
            vectors: DMatrix::zeros(0, 0),
        });
    }
    if m.iter().any(|v| !v.is_finite()) {
        return Err(Error::NonFinite("matrix".into()));
    }
    let eig = SymmetricEigen::try_new(m.as_matrix().clone(), f64::EPSILON, 10_000 * n)
        .ok_or(Error::NonConvergence)?;
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| eig.eigenvalues[i].total_cmp(&eig.eigenvalues[j]));
    let values = DVector::from_iterator(n, order.iter().map(|&i| eig.eigenvalues[i]));
    let vectors = select_columns(&eig.eigenvectors, &order);
    Ok(EigDecomp { values, vectors })
}

/// Moore–Penrose pseudoinverse; eigenvalues with `|λ| ≤ rel·max|λ|` are
/// treated as zero.
pub fn pinv(m: &SymMatrix, tol: Tolerance) -> Result<SymMatrix> {
    Ok(sym_eig(m)?.pinv(tol))
}

/// Orthonormal basis of `N(M)`: eigenvectors with `|λ| ≤ rel·max(1, max|λ|)`.
pub fn null_basis(m: &SymMatrix, tol: Tolerance) -> Result<Basis> {
    Ok(sym_eig(m)?.null_basis(tol))
}

/// `b ∈ R(M)` test: `‖(I − MM⁺)b‖ ≤ rel·max(1, ‖b‖)`.
pub fn range_contains(m: &SymMatrix, b: &DVector<f64>, tol: Tolerance) -> Result<bool> {
    if b.len() != m.dim() {
        return Err(Error::DimensionMismatch(format!(
            "vector of length {} against {}x{} matrix",
            b.len(),
            m.dim(),
            m.dim()
        )));
    }
    Ok(range_residual(&sym_eig(m)?, b, tol) <= tol.rel * b.norm().max(1.0))
}

/// `‖(I − MM⁺)b‖` from a precomputed decomposition.
pub(crate) fn range_residual(eig: &EigDecomp, b: &DVector<f64>, tol: Tolerance) -> f64 {
    let thr = eig.pinv_threshold(tol);
    let null = eig.select(|v| v.abs() <= thr);
    null.tr_mul(b).norm()
}

/// `λ_min(M) ≥ −rel·max(1, ‖M‖₂)`.
pub fn is_psd(m: &SymMatrix, tol: Tolerance) -> Result<bool> {
    Ok(sym_eig(m)?.is_psd(tol))
}

pub fn min_eigenvalue(m: &SymMatrix) -> Result<f64> {
    Ok(sym_eig(m)?.min())
}

/// Splits `ℝⁿ` into `V = N(A) ∩ N(B)` and its orthogonal complement `U`.
///
/// The joint null space is the null space of the stacked `2n×n` matrix
/// `[A; B]`, read off one SVD. Both bases come from the same orthonormal set
/// of right singular vectors, so `UᵀV = 0` to machine precision.
pub fn joint_null_split(a: &SymMatrix, b: &SymMatrix, tol: Tolerance) -> Result<(Basis, Basis)> {
    let n = a.dim();
    if b.dim() != n {
        return Err(Error::DimensionMismatch(format!(
            "pencil matrices of size {} and {}",
            n,
            b.dim()
        )));
    }
    if n == 0 {
        return Ok((Basis::empty(0), Basis::empty(0)));
    }
    let mut stacked = DMatrix::zeros(2 * n, n);
    stacked.rows_mut(0, n).copy_from(a.as_matrix());
    stacked.rows_mut(n, n).copy_from(b.as_matrix());
    let svd = SVD::try_new(stacked, false, true, f64::EPSILON, 10_000 * n)
        .ok_or(Error::NonConvergence)?;
    let v_t = svd.v_t.ok_or(Error::NonConvergence)?;
    let smax = svd.singular_values.iter().fold(0.0_f64, |m, s| m.max(*s));
    let thr = (tol.rel * smax.max(1.0)).max(tol.abs);
    let (mut null_idx, mut range_idx) = (Vec::new(), Vec::new());
    for (i, s) in svd.singular_values.iter().enumerate() {
        if *s <= thr {
            null_idx.push(i);
        } else {
            range_idx.push(i);
        }
    }
    let v = v_t.transpose();
    Ok((
        Basis::from_orthonormal(select_columns(&v, &null_idx)),
        Basis::from_orthonormal(select_columns(&v, &range_idx)),
    ))
}

/// `W^{-1/2}` for a positive definite `W`.
pub(crate) fn inv_sqrt(w: &SymMatrix) -> Result<SymMatrix> {
    let eig = sym_eig(w)?;
    if eig.min() <= 0.0 {
        return Err(Error::PreconditionViolated(
            "inverse square root of a matrix that is not positive definite".into(),
        ));
    }
    let d = eig.values.map(|v| 1.0 / v.sqrt());
    Ok(SymMatrix::symmetrize(
        &eig.vectors * DMatrix::from_diagonal(&d) * eig.vectors.transpose(),
    ))
}

/// 2-norm condition number of a square matrix (∞ when singular).
pub fn condition_number(c: &DMatrix<f64>) -> f64 {
    if c.ncols() == 0 {
        return 1.0;
    }
    let s = c.clone().singular_values();
    let max = s.iter().fold(0.0_f64, |m, v| m.max(*v));
    let min = s.iter().fold(f64::INFINITY, |m, v| m.min(*v));
    if min == 0.0 {
        f64::INFINITY
    } else {
        max / min
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn tol() -> Tolerance {
        Tolerance::default()
    }

    fn mat(rows: &[&[f64]]) -> SymMatrix {
        SymMatrix::from_rows(&rows.iter().map(|r| r.to_vec()).collect::<Vec<_>>()).unwrap()
    }

    fn vecf(v: &[f64]) -> DVector<f64> {
        DVector::from_column_slice(v)
    }

    #[test]
    fn symmetrized_on_construction() {
        let m = SymMatrix::new(DMatrix::from_row_slice(2, 2, &[1.0, 2.0, 4.0, 3.0])).unwrap();
        assert_eq!(m[(0, 1)], 3.0);
        assert_eq!(m[(1, 0)], 3.0);
        assert!(SymMatrix::new(DMatrix::from_row_slice(1, 1, &[f64::NAN])).is_err());
        assert!(SymMatrix::new(DMatrix::zeros(2, 3)).is_err());
    }

    #[test]
    fn eig_small_cases() {
        let e = sym_eig(&SymMatrix::identity(2)).unwrap();
        assert_eq!(e.values.as_slice(), &[1.0, 1.0]);
        let e = sym_eig(&mat(&[&[0.0, 1.0], &[1.0, 0.0]])).unwrap();
        assert!((e.values[0] + 1.0).abs() < 1e-15 && (e.values[1] - 1.0).abs() < 1e-15);
        let e = sym_eig(&SymMatrix::from_diagonal(&[1.0, -1.0])).unwrap();
        assert_eq!(e.values.as_slice(), &[-1.0, 1.0]);
        let qtq = e.vectors.tr_mul(&e.vectors);
        assert!((qtq - DMatrix::identity(2, 2)).norm() < 1e-14);
    }

    #[test]
    fn pinv_examples() {
        let p = pinv(&SymMatrix::from_diagonal(&[2.0, 0.0]), tol()).unwrap();
        assert!((p.as_matrix() - DMatrix::from_diagonal(&vecf(&[0.5, 0.0]))).norm() < 1e-15);
        let p = pinv(&SymMatrix::identity(3), tol()).unwrap();
        assert!((p.as_matrix() - DMatrix::identity(3, 3)).norm() < 1e-15);
        let swap = mat(&[&[0.0, 1.0], &[1.0, 0.0]]);
        let p = pinv(&swap, tol()).unwrap();
        assert!((p.as_matrix() - swap.as_matrix()).norm() < 1e-14);
        let mpm = swap.as_matrix() * p.as_matrix() * swap.as_matrix();
        assert!((mpm - swap.as_matrix()).norm() < 1e-14);
    }

    #[test]
    fn null_basis_examples() {
        let v = null_basis(&SymMatrix::from_diagonal(&[1.0, 0.0]), tol()).unwrap();
        assert_eq!(v.rank(), 1);
        assert!((v.columns()[(1, 0)].abs() - 1.0).abs() < 1e-15);
        assert!(null_basis(&SymMatrix::identity(2), tol())
            .unwrap()
            .is_empty());
        let v = null_basis(&mat(&[&[1.0, 1.0], &[1.0, 1.0]]), tol()).unwrap();
        assert_eq!(v.rank(), 1);
        let c = v.columns().column(0);
        assert!((c[0] + c[1]).abs() < 1e-14);
        assert!((c[0].abs() - std::f64::consts::FRAC_1_SQRT_2).abs() < 1e-14);
    }

    #[test]
    fn range_examples() {
        let d = SymMatrix::from_diagonal(&[1.0, 0.0]);
        assert!(range_contains(&d, &vecf(&[1.0, 0.0]), tol()).unwrap());
        assert!(!range_contains(&d, &vecf(&[0.0, 1.0]), tol()).unwrap());
        let ones = mat(&[&[1.0, 1.0], &[1.0, 1.0]]);
        assert!(range_contains(&ones, &vecf(&[1.0, 1.0]), tol()).unwrap());
        assert!(range_contains(&d, &vecf(&[1.0]), tol()).is_err());
    }

    #[test]
    fn psd_examples() {
        assert!(is_psd(&SymMatrix::from_diagonal(&[1.0, 0.0]), tol()).unwrap());
        assert!(!is_psd(&SymMatrix::from_diagonal(&[1.0, -1e-3]), tol()).unwrap());
        for sigma in [-10.0, -1.0, 0.0, 0.5, 3.0, 1e6] {
            let m = mat(&[&[1.0, sigma], &[sigma, -1.0]]);
            assert!(!is_psd(&m, tol()).unwrap());
        }
    }

    #[test]
    fn joint_null_examples() {
        let (v, u) = joint_null_split(
            &SymMatrix::from_diagonal(&[1.0, 0.0]),
            &SymMatrix::from_diagonal(&[0.0, 1.0]),
            tol(),
        )
        .unwrap();
        assert_eq!((v.rank(), u.rank()), (0, 2));

        let (v, u) = joint_null_split(&SymMatrix::zeros(2), &SymMatrix::zeros(2), tol()).unwrap();
        assert_eq!((v.rank(), u.rank()), (2, 0));

        let (v, u) = joint_null_split(
            &SymMatrix::from_diagonal(&[1.0, 0.0, 0.0]),
            &SymMatrix::from_diagonal(&[0.0, 1.0, 0.0]),
            tol(),
        )
        .unwrap();
        assert_eq!((v.rank(), u.rank()), (1, 2));
        assert!((v.columns()[(2, 0)].abs() - 1.0).abs() < 1e-14);
        assert!(u.columns().row(2).norm() < 1e-14);
    }

    #[test]
    fn inv_sqrt_and_condition() {
        let w = SymMatrix::from_diagonal(&[4.0, 9.0]);
        let p = inv_sqrt(&w).unwrap();
        assert!((p[(0, 0)] - 0.5).abs() < 1e-15 && (p[(1, 1)] - 1.0 / 3.0).abs() < 1e-15);
        assert!(inv_sqrt(&SymMatrix::from_diagonal(&[1.0, 0.0])).is_err());
        assert!(
            (condition_number(&DMatrix::from_diagonal(&vecf(&[2.0, 0.5]))) - 4.0).abs() < 1e-12
        );
    }
}
