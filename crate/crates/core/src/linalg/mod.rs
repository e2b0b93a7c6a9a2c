//! Dense symmetric and SPD matrix calculus for small dimensions (g ≤ 8).
//!
//! Everything is stored as `nalgebra::DMatrix<f64>`. Symmetric inputs are
//! symmetrized as `(M + Mᵗ)/2` after the asymmetry check, so downstream code
//! may rely on exact symmetry.

mod complex;
mod eigen;

pub use complex::CMat;
pub use eigen::{sym_eigen, Eigen};

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::error::{GeomError, Result};
use crate::tol::{PD_TOL, SYM_TOL};

pub type Mat = DMatrix<f64>;

/// Matrix literal used by every JSON surface: `{"dim": g, "rows": [[...], ...]}`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MatrixLiteral {
    pub dim: usize,
    pub rows: Vec<Vec<f64>>,
}

pub fn mat_from_rows(rows: &[Vec<f64>]) -> Result<Mat> {
    let nrows = rows.len();
    let ncols = rows.first().map_or(0, Vec::len);
    if rows.iter().any(|r| r.len() != ncols) {
        return Err(GeomError::DimensionMismatch("ragged matrix rows".into()));
    }
    Ok(Mat::from_fn(nrows, ncols, |i, j| rows[i][j]))
}

pub fn rows_of(m: &Mat) -> Vec<Vec<f64>> {
    (0..m.nrows())
        .map(|i| (0..m.ncols()).map(|j| m[(i, j)]).collect())
        .collect()
}

/// Real symmetric matrix of dimension ≥ 1.
#[derive(Debug, Clone, PartialEq)]
pub struct SymMat(Mat);

impl SymMat {
    pub fn new(m: Mat) -> Result<Self> {
        if m.nrows() != m.ncols() {
            return Err(GeomError::DimensionMismatch(format!(
                "expected a square matrix, got {}x{}",
                m.nrows(),
                m.ncols()
            )));
        }
        if m.nrows() == 0 {
            return Err(GeomError::DimensionMismatch(
                "dimension must be >= 1".into(),
            ));
        }
        if m.iter().any(|x| !x.is_finite()) {
            return Err(GeomError::InvalidParameter(
                "non-finite matrix entry".into(),
            ));
        }
        let scale = m.norm();
        let asym = (&m - m.transpose()).norm();
        if scale > 0.0 && asym > SYM_TOL * scale {
            return Err(GeomError::NotSymmetric(asym / scale));
        }
        Ok(Self::symmetrized(m))
    }

    /// Symmetrize without the asymmetry check; for matrices symmetric by construction.
    pub(crate) fn symmetrized(m: Mat) -> Self {
        let t = m.transpose();
        SymMat((m + t) * 0.5)
    }

    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self> {
        Self::new(mat_from_rows(rows)?)
    }

    pub fn zeros(n: usize) -> Self {
        SymMat(Mat::zeros(n, n))
    }

    pub fn identity(n: usize) -> Self {
        SymMat(Mat::identity(n, n))
    }

    pub fn from_diagonal(d: &[f64]) -> Self {
        SymMat(Mat::from_diagonal(&nalgebra::DVector::from_column_slice(d)))
    }

    pub fn dim(&self) -> usize {
        self.0.nrows()
    }

    pub fn as_mat(&self) -> &Mat {
        &self.0
    }

    pub fn into_mat(self) -> Mat {
        self.0
    }

    pub fn frobenius_norm(&self) -> f64 {
        self.0.norm()
    }

    pub fn scale(&self, c: f64) -> SymMat {
        SymMat(&self.0 * c)
    }

    pub fn to_literal(&self) -> MatrixLiteral {
        MatrixLiteral {
            dim: self.dim(),
            rows: rows_of(&self.0),
        }
    }

    pub fn from_literal(lit: &MatrixLiteral) -> Result<Self> {
        let m = Self::from_rows(&lit.rows)?;
        if m.dim() != lit.dim {
            return Err(GeomError::DimensionMismatch(format!(
                "literal declares dim {} but has {} rows",
                lit.dim,
                m.dim()
            )));
        }
        Ok(m)
    }

    pub fn eigen(&self) -> Result<Eigen> {
        sym_eigen(&self.0)
    }
}

/// Symmetric positive definite matrix: every eigenvalue exceeds `PD_TOL·‖P‖_op`.
#[derive(Debug, Clone, PartialEq)]
pub struct SpdMat(SymMat);

impl SpdMat {
    pub fn new(s: SymMat) -> Result<Self> {
        let eig = s.eigen()?;
        let op = eig.values.iter().fold(0.0_f64, |a, v| a.max(v.abs()));
        let min = eig.values[0];
        if !(min > PD_TOL * op) {
            return Err(GeomError::NotPositiveDefinite(min));
        }
        Ok(SpdMat(s))
    }

    pub fn from_mat(m: Mat) -> Result<Self> {
        Self::new(SymMat::new(m)?)
    }

    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self> {
        Self::new(SymMat::from_rows(rows)?)
    }

    pub fn identity(n: usize) -> Self {
        SpdMat(SymMat::identity(n))
    }

    pub fn from_diagonal(d: &[f64]) -> Result<Self> {
        Self::new(SymMat::from_diagonal(d))
    }

    pub fn dim(&self) -> usize {
        self.0.dim()
    }

    pub fn sym(&self) -> &SymMat {
        &self.0
    }

    pub fn as_mat(&self) -> &Mat {
        self.0.as_mat()
    }

    pub fn into_mat(self) -> Mat {
        self.0.into_mat()
    }

    pub fn scale(&self, c: f64) -> Result<SpdMat> {
        if !(c > 0.0) {
            return Err(GeomError::NonpositiveScale(c));
        }
        Ok(SpdMat(self.0.scale(c)))
    }

    pub fn inverse(&self) -> SpdMat {
        let inv = self
            .as_mat()
            .clone()
            .cholesky()
            .map(|c| c.inverse())
            .unwrap_or_else(|| spectral_map(&self.0, |x| 1.0 / x).into_mat());
        SpdMat(SymMat::symmetrized(inv))
    }

    pub fn determinant(&self) -> f64 {
        self.as_mat().determinant()
    }

    pub fn sqrt(&self) -> SpdMat {
        SpdMat(spectral_map(&self.0, f64::sqrt))
    }

    pub fn inv_sqrt(&self) -> SpdMat {
        SpdMat(spectral_map(&self.0, |x| 1.0 / x.sqrt()))
    }

    pub fn log(&self) -> SymMat {
        spectral_map(&self.0, f64::ln)
    }

    pub fn to_literal(&self) -> MatrixLiteral {
        self.0.to_literal()
    }

    pub fn from_literal(lit: &MatrixLiteral) -> Result<Self> {
        Self::new(SymMat::from_literal(lit)?)
    }
}

/// `exp` of a symmetric matrix, always SPD.
pub fn exp_sym(s: &SymMat) -> SpdMat {
    SpdMat(spectral_map(s, f64::exp))
}

/// Apply `f` to the spectrum: `V f(Λ) Vᵗ`.
fn spectral_map(s: &SymMat, f: impl Fn(f64) -> f64) -> SymMat {
    // Jacobi iteration cannot fail on a finite symmetric matrix within the sweep cap
    // at the dimensions used here; fall back to nalgebra only if it ever does.
    let (values, vectors) = match s.eigen() {
        Ok(e) => (e.values, e.vectors),
        Err(_) => {
            let e = s.as_mat().clone().symmetric_eigen();
            (e.eigenvalues.iter().copied().collect(), e.eigenvectors)
        }
    };
    let n = s.dim();
    let mut out = Mat::zeros(n, n);
    for (k, &lam) in values.iter().enumerate() {
        let fl = f(lam);
        let v = vectors.column(k);
        out += (&v * v.transpose()) * fl;
    }
    SymMat::symmetrized(out)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SpdFn {
    Sqrt,
    InvSqrt,
    Log,
    /// Exponential of a symmetric (not necessarily definite) input.
    Exp,
}

/// Spectral functional calculus. `Exp` accepts any symmetric input; the others need SPD input.
pub fn spd_calculus(p: &SymMat, kind: SpdFn) -> Result<SymMat> {
    if kind == SpdFn::Exp {
        return Ok(exp_sym(p).0);
    }
    let spd = SpdMat::new(p.clone())?;
    Ok(match kind {
        SpdFn::Sqrt => spd.sqrt().0,
        SpdFn::InvSqrt => spd.inv_sqrt().0,
        SpdFn::Log => spd.log(),
        SpdFn::Exp => unreachable!(),
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SpectralStats {
    pub lambda_min: f64,
    pub op_norm: f64,
    pub frob_norm: f64,
    /// Ascending.
    pub eigenvalues: Vec<f64>,
}

pub fn spectral_stats(p: &SymMat) -> Result<SpectralStats> {
    let e = p.eigen()?;
    Ok(SpectralStats {
        lambda_min: e.values[0],
        op_norm: e.values.iter().fold(0.0_f64, |a, v| a.max(v.abs())),
        frob_norm: p.frobenius_norm(),
        eigenvalues: e.values,
    })
}

/// Smallest eigenvalue of a symmetric matrix.
pub fn lambda_min(m: &Mat) -> Result<f64> {
    Ok(sym_eigen(m)?.values[0])
}

/// Spectral norm of an arbitrary real matrix (largest singular value).
pub fn op_norm(m: &Mat) -> f64 {
    if m.nrows() == 0 || m.ncols() == 0 {
        return 0.0;
    }
    let gram = m.transpose() * m;
    match sym_eigen(&gram) {
        Ok(e) => e.values.last().copied().unwrap_or(0.0).max(0.0).sqrt(),
        Err(_) => m.norm(),
    }
}

/// Jacobi decomposition `Y = L D Lᵗ`, L unit lower-triangular, D positive.
#[derive(Debug, Clone, PartialEq)]
pub struct JacobiDecomp {
    pub l: Mat,
    pub d: Vec<f64>,
}

impl JacobiDecomp {
    pub fn reconstruct(&self) -> Mat {
        let dm = Mat::from_diagonal(&nalgebra::DVector::from_column_slice(&self.d));
        &self.l * dm * self.l.transpose()
    }
}

pub fn jacobi_decompose(y: &SpdMat) -> Result<JacobiDecomp> {
    ldl(y.as_mat())
}

/// `LDLᵗ` of a symmetric matrix; fails with `NotPositiveDefinite` on a non-positive pivot.
pub(crate) fn ldl(m: &Mat) -> Result<JacobiDecomp> {
    let n = m.nrows();
    let scale = (0..n).fold(0.0_f64, |a, i| a.max(m[(i, i)].abs()));
    let floor = PD_TOL * scale;
    let mut l = Mat::identity(n, n);
    let mut d = vec![0.0; n];
    for j in 0..n {
        let mut dj = m[(j, j)];
        for k in 0..j {
            dj -= l[(j, k)] * l[(j, k)] * d[k];
        }
        if !(dj > floor) {
            return Err(GeomError::NotPositiveDefinite(dj));
        }
        d[j] = dj;
        for i in (j + 1)..n {
            let mut s = m[(i, j)];
            for k in 0..j {
                s -= l[(i, k)] * l[(j, k)] * d[k];
            }
            l[(i, j)] = s / dj;
        }
    }
    Ok(JacobiDecomp { l, d })
}

/// `tr(A B)` without forming the product.
pub(crate) fn trace_prod(a: &Mat, b: &Mat) -> f64 {
    let mut s = 0.0;
    for i in 0..a.nrows() {
        for k in 0..a.ncols() {
            s += a[(i, k)] * b[(k, i)];
        }
    }
    s
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::E;

    #[test]
    fn jacobi_of_identity() {
        let j = jacobi_decompose(&SpdMat::identity(4)).unwrap();
        assert_eq!(j.l, Mat::identity(4, 4));
        assert_eq!(j.d, vec![1.0; 4]);
    }

    #[test]
    fn jacobi_worked_example() {
        let y = SpdMat::from_rows(&[vec![2.0, 1.0], vec![1.0, 1.0]]).unwrap();
        let j = jacobi_decompose(&y).unwrap();
        assert_eq!(j.l[(1, 0)], 0.5);
        assert_eq!(j.d, vec![2.0, 0.5]);
    }

    #[test]
    fn jacobi_diagonal_passthrough() {
        let j = jacobi_decompose(&SpdMat::from_diagonal(&[1.0, 4.0]).unwrap()).unwrap();
        assert_eq!(j.l, Mat::identity(2, 2));
        assert_eq!(j.d, vec![1.0, 4.0]);
    }

    #[test]
    fn ldl_rejects_indefinite() {
        let m = mat_from_rows(&[vec![1.0, 2.0], vec![2.0, 1.0]]).unwrap();
        assert!(matches!(ldl(&m), Err(GeomError::NotPositiveDefinite(_))));
    }

    #[test]
    fn symmat_rejects_asymmetry() {
        let m = mat_from_rows(&[vec![1.0, 2.0], vec![2.1, 1.0]]).unwrap();
        assert!(matches!(SymMat::new(m), Err(GeomError::NotSymmetric(_))));
        let tiny = mat_from_rows(&[vec![1.0, 2.0], vec![2.0 + 1e-13, 1.0]]).unwrap();
        let s = SymMat::new(tiny).unwrap();
        assert_eq!(s.as_mat()[(0, 1)], s.as_mat()[(1, 0)]);
    }

    #[test]
    fn spd_rejects_semidefinite() {
        assert!(SpdMat::from_diagonal(&[1.0, 0.0]).is_err());
        assert!(SpdMat::from_diagonal(&[1.0, -1e-3]).is_err());
    }

    #[test]
    fn calculus_examples() {
        let i3 = SymMat::identity(3);
        let r = spd_calculus(&i3, SpdFn::Sqrt).unwrap();
        assert!((r.as_mat() - Mat::identity(3, 3)).norm() < 1e-15);
        let p = SymMat::from_diagonal(&[E * E, 1.0]);
        let lg = spd_calculus(&p, SpdFn::Log).unwrap();
        assert!((lg.as_mat()[(0, 0)] - 2.0).abs() < 1e-14);
        assert!(lg.as_mat()[(1, 1)].abs() < 1e-15);
        assert!(spd_calculus(&SymMat::from_diagonal(&[-1.0, 1.0]), SpdFn::Log).is_err());
    }

    #[test]
    fn stats_example() {
        let s = spectral_stats(&SymMat::from_diagonal(&[1.0, 4.0])).unwrap();
        assert_eq!(s.lambda_min, 1.0);
        assert_eq!(s.op_norm, 4.0);
        assert!((s.frob_norm - 17f64.sqrt()).abs() < 1e-15);
        assert_eq!(
            spectral_stats(&SymMat::identity(5)).unwrap().lambda_min,
            1.0
        );
    }

    #[test]
    fn literal_dim_checked() {
        let lit = MatrixLiteral {
            dim: 3,
            rows: vec![vec![1.0, 0.0], vec![0.0, 1.0]],
        };
        assert!(SymMat::from_literal(&lit).is_err());
    }
}
