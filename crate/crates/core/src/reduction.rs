//! Siegel reduction: coordinates `(x_ij, l_ij, d_i)`, Siegel-set membership, LLL
//! reduction of positive definite forms under GL(g, ℤ) and SL(2, ℤ) reduction.

use serde::{Deserialize, Serialize};

use crate::error::{GeomError, Result};
use crate::linalg::{jacobi_decompose, rows_of, Mat, SpdMat, SymMat};
use crate::siegel::{SiegelPoint, SymplecticMat};

const LLL_DELTA: f64 = 0.75;
const SWAP_CAP: usize = 100_000;
const SL2_CAP: usize = 10_000;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SiegelSetParams {
    pub u: f64,
}

impl SiegelSetParams {
    pub fn new(u: f64) -> Result<Self> {
        if !(u > 1.0) || !u.is_finite() {
            return Err(GeomError::InvalidParameter(format!(
                "Siegel parameter u must exceed 1, got {u}"
            )));
        }
        Ok(SiegelSetParams { u })
    }
}

impl Default for SiegelSetParams {
    fn default() -> Self {
        SiegelSetParams { u: 2.0 }
    }
}

/// `X` entries, the unit lower-triangular `L` and the pivots `d` of `Y = LDLᵗ`.
#[derive(Debug, Clone, PartialEq)]
pub struct SiegelCoords {
    pub x: Mat,
    pub l: Mat,
    pub d: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SiegelCoordsJson {
    pub x: Vec<Vec<f64>>,
    pub l: Vec<Vec<f64>>,
    pub d: Vec<f64>,
}

impl SiegelCoords {
    pub fn g(&self) -> usize {
        self.d.len()
    }

    pub fn reconstruct(&self) -> Result<SiegelPoint> {
        let dm = Mat::from_diagonal(&nalgebra::DVector::from_column_slice(&self.d));
        SiegelPoint::from_mats(self.x.clone(), &self.l * dm * self.l.transpose())
    }

    pub fn to_json(&self) -> SiegelCoordsJson {
        SiegelCoordsJson {
            x: rows_of(&self.x),
            l: rows_of(&self.l),
            d: self.d.clone(),
        }
    }
}

pub fn siegel_coords(tau: &SiegelPoint) -> Result<SiegelCoords> {
    let j = jacobi_decompose(tau.y())?;
    Ok(SiegelCoords {
        x: tau.x().as_mat().clone(),
        l: j.l,
        d: j.d,
    })
}

/// Clause-by-clause membership of `Y` in the GL(g, ℤ) Siegel set.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct SpdClauses {
    /// `|l_ij| < u` for `i > j`.
    pub l_bounded: bool,
    /// `1 < u·d_1`.
    pub scale: bool,
    /// `d_i < u·d_{i+1}`.
    pub chain: bool,
}

impl SpdClauses {
    pub fn all(&self) -> bool {
        self.l_bounded && self.scale && self.chain
    }
}

fn clauses_of(l: &Mat, d: &[f64], u: f64) -> SpdClauses {
    let g = d.len();
    let mut l_bounded = true;
    for i in 0..g {
        for j in 0..i {
            if !(l[(i, j)].abs() < u) {
                l_bounded = false;
            }
        }
    }
    let scale = 1.0 < u * d[0];
    let chain = d.windows(2).all(|w| w[0] < u * w[1]);
    SpdClauses {
        l_bounded,
        scale,
        chain,
    }
}

pub fn spd_clauses(y: &SpdMat, u: f64) -> Result<SpdClauses> {
    let j = jacobi_decompose(y)?;
    Ok(clauses_of(&j.l, &j.d, u))
}

pub fn in_siegel_set_spd(y: &SpdMat, u: f64) -> bool {
    spd_clauses(y, u).map(|c| c.all()).unwrap_or(false)
}

/// All four inequality families: `|x_ij| < u`, `|l_ij| < u`, `1 < u·d_1`, `d_i < u·d_{i+1}`.
pub fn in_siegel_set(tau: &SiegelPoint, u: f64) -> bool {
    let Ok(c) = siegel_coords(tau) else {
        return false;
    };
    let x_ok = c.x.iter().all(|v| v.abs() < u);
    x_ok && clauses_of(&c.l, &c.d, u).all()
}

/// `τ ∈ 𝔉_g(u)` and `d_{g'+1}(τ) > r`.
pub fn deep_neighborhood(tau: &SiegelPoint, gprime: usize, r: f64, u: f64) -> bool {
    if gprime >= tau.g() || !in_siegel_set(tau, u) {
        return false;
    }
    match siegel_coords(tau) {
        Ok(c) => c.d[gprime] > r,
        Err(_) => false,
    }
}

/// Integer matrix with determinant ±1.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct UnimodularMat {
    g: usize,
    entries: Vec<i64>,
}

impl UnimodularMat {
    pub fn new(g: usize, entries: Vec<i64>) -> Result<Self> {
        if entries.len() != g * g || g == 0 {
            return Err(GeomError::DimensionMismatch(
                "unimodular matrix needs g*g entries".into(),
            ));
        }
        let m = UnimodularMat { g, entries };
        let det = m.det();
        if det.abs() != 1 {
            return Err(GeomError::NotUnimodular(det));
        }
        Ok(m)
    }

    pub fn from_rows(rows: &[Vec<i64>]) -> Result<Self> {
        let g = rows.len();
        if rows.iter().any(|r| r.len() != g) {
            return Err(GeomError::DimensionMismatch(
                "unimodular matrix must be square".into(),
            ));
        }
        Self::new(g, rows.iter().flatten().copied().collect())
    }

    pub fn identity(g: usize) -> Self {
        let mut entries = vec![0; g * g];
        for i in 0..g {
            entries[i * g + i] = 1;
        }
        UnimodularMat { g, entries }
    }

    pub fn g(&self) -> usize {
        self.g
    }

    pub fn get(&self, i: usize, j: usize) -> i64 {
        self.entries[i * self.g + j]
    }

    pub fn rows(&self) -> Vec<Vec<i64>> {
        self.entries.chunks(self.g).map(<[i64]>::to_vec).collect()
    }

    pub fn to_mat(&self) -> Mat {
        Mat::from_fn(self.g, self.g, |i, j| self.get(i, j) as f64)
    }

    /// Exact determinant by fraction-free (Bareiss) elimination.
    pub fn det(&self) -> i128 {
        let n = self.g;
        let mut a: Vec<i128> = self.entries.iter().map(|&v| v as i128).collect();
        let mut sign = 1i128;
        let mut prev = 1i128;
        for k in 0..n {
            if a[k * n + k] == 0 {
                let Some(p) = (k + 1..n).find(|&r| a[r * n + k] != 0) else {
                    return 0;
                };
                for c in 0..n {
                    a.swap(k * n + c, p * n + c);
                }
                sign = -sign;
            }
            for i in k + 1..n {
                for j in k + 1..n {
                    a[i * n + j] =
                        (a[i * n + j] * a[k * n + k] - a[i * n + k] * a[k * n + j]) / prev;
                }
            }
            prev = a[k * n + k];
        }
        sign * a[(n - 1) * n + (n - 1)]
    }

    /// `self · other` with overflow detection.
    pub fn mul(&self, other: &UnimodularMat) -> Result<UnimodularMat> {
        let n = self.g;
        let mut out = vec![0i64; n * n];
        for i in 0..n {
            for j in 0..n {
                let mut s = 0i64;
                for k in 0..n {
                    let p = self
                        .get(i, k)
                        .checked_mul(other.get(k, j))
                        .ok_or(GeomError::Overflow)?;
                    s = s.checked_add(p).ok_or(GeomError::Overflow)?;
                }
                out[i * n + j] = s;
            }
        }
        Ok(UnimodularMat { g: n, entries: out })
    }

    /// Exact inverse (adjugate over ±1), computed by integer Gauss–Jordan.
    pub fn inverse(&self) -> Result<UnimodularMat> {
        let n = self.g;
        let mut a: Vec<i128> = self.entries.iter().map(|&v| v as i128).collect();
        let mut inv: Vec<i128> = UnimodularMat::identity(n)
            .entries
            .iter()
            .map(|&v| v as i128)
            .collect();
        // Euclid-style column reduction keeps everything integral for unimodular input.
        for k in 0..n {
            loop {
                let nz: Vec<usize> = (k..n).filter(|&r| a[r * n + k] != 0).collect();
                if nz.len() <= 1 {
                    if let Some(&p) = nz.first() {
                        if p != k {
                            for c in 0..n {
                                a.swap(k * n + c, p * n + c);
                                inv.swap(k * n + c, p * n + c);
                            }
                        }
                    }
                    break;
                }
                let p = *nz.iter().min_by_key(|&&r| a[r * n + k].abs()).unwrap();
                for &r in &nz {
                    if r != p {
                        let q = a[r * n + k] / a[p * n + k];
                        for c in 0..n {
                            a[r * n + c] -= q * a[p * n + c];
                            inv[r * n + c] -= q * inv[p * n + c];
                        }
                    }
                }
            }
            let piv = a[k * n + k];
            if piv.abs() != 1 {
                return Err(GeomError::NotUnimodular(piv));
            }
            for c in 0..n {
                a[k * n + c] *= piv;
                inv[k * n + c] *= piv;
            }
            for r in 0..n {
                if r != k && a[r * n + k] != 0 {
                    let q = a[r * n + k];
                    for c in 0..n {
                        a[r * n + c] -= q * a[k * n + c];
                        inv[r * n + c] -= q * inv[k * n + c];
                    }
                }
            }
        }
        let entries = inv
            .into_iter()
            .map(|v| i64::try_from(v).map_err(|_| GeomError::Overflow))
            .collect::<Result<Vec<_>>>()?;
        Ok(UnimodularMat { g: n, entries })
    }

    fn col_axpy(&mut self, dst: usize, q: i64, src: usize) -> Result<()> {
        let n = self.g;
        for r in 0..n {
            let p = q
                .checked_mul(self.entries[r * n + src])
                .ok_or(GeomError::Overflow)?;
            self.entries[r * n + dst] = self.entries[r * n + dst]
                .checked_sub(p)
                .ok_or(GeomError::Overflow)?;
        }
        Ok(())
    }

    fn swap_cols(&mut self, a: usize, b: usize) {
        let n = self.g;
        for r in 0..n {
            self.entries.swap(r * n + a, r * n + b);
        }
    }
}

fn congruent(y: &Mat, u: &UnimodularMat) -> Mat {
    let um = u.to_mat();
    let out = um.transpose() * y * &um;
    (&out + out.transpose()) * 0.5
}

/// LLL reduction (δ = 3/4) of the lattice with Gram matrix `Y`: returns `Uᵗ Y U` with
/// `|l_ij| ≤ ½` and `d_i ≤ 2 d_{i+1}`.
pub fn reduce_spd(y: &SpdMat, u: f64) -> Result<(SpdMat, UnimodularMat)> {
    if !(u >= 2.0) {
        return Err(GeomError::InvalidParameter(format!(
            "reduce_spd needs u >= 2, got {u}"
        )));
    }
    let g = y.dim();
    let y0 = y.as_mat();
    let mut um = UnimodularMat::identity(g);
    let mut swaps = 0usize;
    let mut k = 1usize;
    while k < g {
        // Size-reduce column k against k-1, …, 0.
        for j in (0..k).rev() {
            let jd = crate::linalg::ldl(&congruent(y0, &um))?;
            let mu = jd.l[(k, j)];
            if mu.abs() > 0.5 + 1e-12 {
                let q = mu.round();
                if q.abs() > i64::MAX as f64 / 4.0 {
                    return Err(GeomError::Overflow);
                }
                um.col_axpy(k, q as i64, j)?;
            }
        }
        let jd = crate::linalg::ldl(&congruent(y0, &um))?;
        let mu = jd.l[(k, k - 1)];
        let rhs = (LLL_DELTA - mu * mu) * jd.d[k - 1];
        if jd.d[k] < rhs * (1.0 - 1e-12) {
            um.swap_cols(k, k - 1);
            swaps += 1;
            if swaps > SWAP_CAP {
                return Err(GeomError::NoConvergence(format!(
                    "LLL exceeded {SWAP_CAP} swaps"
                )));
            }
            k = (k - 1).max(1);
        } else {
            k += 1;
        }
    }
    let red = SpdMat::new(SymMat::new(congruent(y0, &um))?)?;
    Ok((red, um))
}

/// Reduce `τ` (g = 1) into the standard fundamental domain of SL(2, ℤ).
pub fn reduce_sl2(tau: &SiegelPoint) -> Result<(SiegelPoint, SymplecticMat)> {
    if tau.g() != 1 {
        return Err(GeomError::DimensionMismatch(
            "reduce_sl2 needs g = 1".into(),
        ));
    }
    let mut x = tau.x().as_mat()[(0, 0)];
    let mut y = tau.y().as_mat()[(0, 0)];
    // Integer matrix [[a, b], [c, d]].
    let (mut a, mut b, mut c, mut d) = (1i64, 0i64, 0i64, 1i64);
    for _ in 0..SL2_CAP {
        let n = x.round();
        if n != 0.0 {
            let ni = n as i64;
            x -= n;
            // T^{-n} · M
            a = a
                .checked_sub(ni.checked_mul(c).ok_or(GeomError::Overflow)?)
                .ok_or(GeomError::Overflow)?;
            b = b
                .checked_sub(ni.checked_mul(d).ok_or(GeomError::Overflow)?)
                .ok_or(GeomError::Overflow)?;
        }
        let r2 = x * x + y * y;
        if r2 < 1.0 - 1e-12 {
            // S = [[0, -1], [1, 0]]: τ ↦ −1/τ.
            x = -x / r2;
            y /= r2;
            let (na, nb, nc, nd) = (-c, -d, a, b);
            a = na;
            b = nb;
            c = nc;
            d = nd;
        } else {
            let m = SymplecticMat::from_blocks(
                Mat::from_element(1, 1, a as f64),
                Mat::from_element(1, 1, b as f64),
                Mat::from_element(1, 1, c as f64),
                Mat::from_element(1, 1, d as f64),
            )?;
            let red = SiegelPoint::from_rows(&[vec![x]], &[vec![y]])?;
            return Ok((red, m));
        }
    }
    Err(GeomError::NoConvergence(format!(
        "SL(2,Z) reduction exceeded {SL2_CAP} steps"
    )))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn diag_point(x: &[f64], y: &[f64]) -> SiegelPoint {
        SiegelPoint::from_mats(
            Mat::from_diagonal(&nalgebra::DVector::from_column_slice(x)),
            Mat::from_diagonal(&nalgebra::DVector::from_column_slice(y)),
        )
        .unwrap()
    }

    #[test]
    fn coords_examples() {
        let c = siegel_coords(&SiegelPoint::i_identity(3)).unwrap();
        assert_eq!(c.d, vec![1.0; 3]);
        let tau = SiegelPoint::from_rows(
            &[vec![0.1, 0.2], vec![0.2, 0.3]],
            &[vec![2.0, 1.0], vec![1.0, 1.0]],
        )
        .unwrap();
        let c = siegel_coords(&tau).unwrap();
        assert_eq!(c.l[(1, 0)], 0.5);
        assert_eq!(c.d, vec![2.0, 0.5]);
        assert_eq!(&c.x, tau.x().as_mat());
    }

    #[test]
    fn membership_examples() {
        assert!(in_siegel_set(&SiegelPoint::i_identity(1), 2.0));
        assert!(in_siegel_set(&diag_point(&[0.0, 0.0], &[1.0, 3.0]), 2.0));
        assert!(!in_siegel_set(&diag_point(&[0.0, 0.0], &[3.0, 1.0]), 2.0));
        assert!(in_siegel_set_spd(&SpdMat::identity(4), 2.0));
        assert!(!in_siegel_set_spd(
            &SpdMat::from_diagonal(&[0.4, 1.0]).unwrap(),
            2.0
        ));
        let y = SpdMat::from_rows(&[vec![2.0, 1.0], vec![1.0, 1.0]]).unwrap();
        assert!(!in_siegel_set_spd(&y, 2.0));
    }

    #[test]
    fn deep_examples() {
        let tau = diag_point(&[0.0, 0.0], &[1.0, 100.0]);
        assert!(deep_neighborhood(&tau, 1, 50.0, 2.0));
        assert!(!deep_neighborhood(&tau, 1, 200.0, 2.0));
        assert!(!deep_neighborhood(&SiegelPoint::i_identity(3), 2, 1.0, 2.0));
    }

    #[test]
    fn unimodular_det_and_inverse() {
        let u = UnimodularMat::from_rows(&[vec![2, 1, 0], vec![1, 1, 0], vec![3, 5, 1]]).unwrap();
        assert_eq!(u.det(), 1);
        let p = u.mul(&u.inverse().unwrap()).unwrap();
        assert_eq!(p, UnimodularMat::identity(3));
        assert!(matches!(
            UnimodularMat::from_rows(&[vec![2, 0], vec![0, 1]]),
            Err(GeomError::NotUnimodular(2))
        ));
    }

    #[test]
    fn reduce_spd_examples() {
        let y = SpdMat::from_diagonal(&[1.0, 5.0]).unwrap();
        let (r, u) = reduce_spd(&y, 2.0).unwrap();
        assert_eq!(u, UnimodularMat::identity(2));
        assert_eq!(r, y);
        let y1 = SpdMat::from_diagonal(&[7.0]).unwrap();
        assert_eq!(reduce_spd(&y1, 2.0).unwrap().1, UnimodularMat::identity(1));
        // U0 diag(1, 5) U0ᵗ
        let u0 = UnimodularMat::from_rows(&[vec![3, 7], vec![2, 5]])
            .unwrap()
            .to_mat();
        let y = SpdMat::from_mat(
            &u0 * Mat::from_diagonal(&nalgebra::DVector::from_vec(vec![1.0, 5.0])) * u0.transpose(),
        )
        .unwrap();
        let (r, _) = reduce_spd(&y, 2.0).unwrap();
        let cl = spd_clauses(&r, 2.0).unwrap();
        assert!(cl.l_bounded && cl.chain);
        assert!((r.determinant() - 5.0).abs() < 1e-9);
    }

    #[test]
    fn reduce_sl2_examples() {
        let i = SiegelPoint::i_identity(1);
        let (r, m) = reduce_sl2(&i).unwrap();
        assert_eq!(r, i);
        assert_eq!(m, SymplecticMat::identity(1));
        let tau = SiegelPoint::from_rows(&[vec![0.7]], &[vec![0.8]]).unwrap();
        let (r, m) = reduce_sl2(&tau).unwrap();
        let (x, y) = (r.x().as_mat()[(0, 0)], r.y().as_mat()[(0, 0)]);
        assert!(x.abs() <= 0.5 && x * x + y * y >= 1.0 - 1e-12);
        let back = crate::siegel::act(&m, &tau).unwrap();
        assert!((back.tau().re - r.tau().re).norm() < 1e-12);
        assert!((back.tau().im - r.tau().im).norm() < 1e-12);
        let tau = SiegelPoint::from_rows(&[vec![3.3]], &[vec![10.0]]).unwrap();
        let (r, _) = reduce_sl2(&tau).unwrap();
        assert_eq!(r.y().as_mat()[(0, 0)], 10.0);
    }
}
