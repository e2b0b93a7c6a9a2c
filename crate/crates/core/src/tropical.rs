//! The cone Sym⁺(r, ℝ) of flat-torus Gram matrices with the invariant metric
//! `½ tr(P⁻¹dP P⁻¹dP)`.

use serde::{Deserialize, Serialize};

use crate::error::{GeomError, Result};
use crate::linalg::{exp_sym, mat_from_rows, rows_of, sym_eigen, trace_prod, Mat, SpdMat, SymMat};
use crate::reduction::reduce_spd;

pub use crate::horo::base_distance;

/// Gram matrix `P` of the flat metric `Σ p_ij dx_i dx_j` on ℝʳ/ℤʳ.
#[derive(Debug, Clone, PartialEq)]
pub struct FlatTorusMetric(pub SpdMat);

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FlatTorusJson {
    pub r: usize,
    #[serde(rename = "P")]
    pub p: Vec<Vec<f64>>,
}

impl FlatTorusMetric {
    pub fn new(p: SpdMat) -> Self {
        FlatTorusMetric(p)
    }

    pub fn r(&self) -> usize {
        self.0.dim()
    }

    pub fn p(&self) -> &SpdMat {
        &self.0
    }

    pub fn to_json(&self) -> FlatTorusJson {
        FlatTorusJson {
            r: self.r(),
            p: rows_of(self.0.as_mat()),
        }
    }

    pub fn from_json(j: &FlatTorusJson) -> Result<Self> {
        let p = SpdMat::from_mat(mat_from_rows(&j.p)?)?;
        if p.dim() != j.r {
            return Err(GeomError::DimensionMismatch(
                "declared r does not match P".into(),
            ));
        }
        Ok(FlatTorusMetric(p))
    }
}

/// Tangent vector `V ∈ Sym(r, ℝ)`.
#[derive(Debug, Clone, PartialEq)]
pub struct TropTangent(pub SymMat);

pub fn trwp_inner(p: &FlatTorusMetric, v: &TropTangent, w: &TropTangent) -> Result<f64> {
    if v.0.dim() != p.r() || w.0.dim() != p.r() {
        return Err(GeomError::DimensionMismatch(
            "tangent and base differ in dimension".into(),
        ));
    }
    let pi = p.0.inverse();
    let a = pi.as_mat() * v.0.as_mat();
    let b = pi.as_mat() * w.0.as_mat();
    Ok(0.5 * trace_prod(&a, &b))
}

pub fn trwp_norm_sq(p: &FlatTorusMetric, v: &TropTangent) -> Result<f64> {
    Ok(trwp_inner(p, v, v)?.max(0.0))
}

/// Eigenvalues of `P^{-1/2} Q P^{-1/2}`.
fn relative_spectrum(p: &SpdMat, q: &SpdMat) -> Result<Vec<f64>> {
    if p.dim() != q.dim() {
        return Err(GeomError::DimensionMismatch(
            "metrics differ in dimension".into(),
        ));
    }
    let h = p.inv_sqrt();
    let m = h.as_mat() * q.as_mat() * h.as_mat();
    let e = sym_eigen(&((&m + m.transpose()) * 0.5))?;
    if let Some(&bad) = e.values.iter().find(|&&v| !(v > 0.0)) {
        return Err(GeomError::NotPositiveDefinite(bad));
    }
    Ok(e.values)
}

/// `(½ Σ log² μ_i)^{1/2}` with `μ_i` the eigenvalues of `P^{-1/2} Q P^{-1/2}`.
pub fn trwp_distance(p: &FlatTorusMetric, q: &FlatTorusMetric) -> Result<f64> {
    let mu = relative_spectrum(&p.0, &q.0)?;
    Ok((0.5 * mu.iter().map(|m| m.ln().powi(2)).sum::<f64>()).sqrt())
}

/// `P^{1/2} exp(s P^{-1/2} V P^{-1/2}) P^{1/2}`.
pub fn trwp_geodesic(p: &FlatTorusMetric, v: &TropTangent, s: f64) -> Result<FlatTorusMetric> {
    if v.0.dim() != p.r() {
        return Err(GeomError::DimensionMismatch(
            "tangent and base differ in dimension".into(),
        ));
    }
    let h = p.0.sqrt();
    let hi = p.0.inv_sqrt();
    let psi = SymMat::symmetrized(hi.as_mat() * v.0.as_mat() * hi.as_mat() * s);
    let e = exp_sym(&psi);
    let out = h.as_mat() * e.as_mat() * h.as_mat();
    Ok(FlatTorusMetric(SpdMat::new(SymMat::symmetrized(out))?))
}

/// Geodesic segment `s ↦ P^{1/2} M^s P^{1/2}`, `M = P^{-1/2} Q P^{-1/2}`, `s ∈ [0, 1]`.
#[derive(Debug, Clone)]
pub struct TropGeodesic {
    p_half: Mat,
    vectors: Mat,
    logs: Vec<f64>,
}

pub fn trwp_geodesic_between(p: &FlatTorusMetric, q: &FlatTorusMetric) -> Result<TropGeodesic> {
    if p.r() != q.r() {
        return Err(GeomError::DimensionMismatch(
            "metrics differ in dimension".into(),
        ));
    }
    let hi = p.0.inv_sqrt();
    let m = hi.as_mat() * q.0.as_mat() * hi.as_mat();
    let e = sym_eigen(&((&m + m.transpose()) * 0.5))?;
    if let Some(&bad) = e.values.iter().find(|&&v| !(v > 0.0)) {
        return Err(GeomError::NotPositiveDefinite(bad));
    }
    Ok(TropGeodesic {
        p_half: p.0.sqrt().into_mat(),
        vectors: e.vectors,
        logs: e.values.iter().map(|v| v.ln()).collect(),
    })
}

impl TropGeodesic {
    pub fn length(&self) -> f64 {
        (0.5 * self.logs.iter().map(|l| l * l).sum::<f64>()).sqrt()
    }

    fn spectral(&self, f: impl Fn(f64) -> f64) -> Mat {
        let n = self.logs.len();
        let mut out = Mat::zeros(n, n);
        for (k, &l) in self.logs.iter().enumerate() {
            let v = self.vectors.column(k);
            out += (&v * v.transpose()) * f(l);
        }
        &self.p_half * out * &self.p_half
    }

    pub fn point(&self, s: f64) -> Result<FlatTorusMetric> {
        let m = self.spectral(|l| (s * l).exp());
        Ok(FlatTorusMetric(SpdMat::new(SymMat::symmetrized(m))?))
    }

    pub fn velocity(&self, s: f64) -> SymMat {
        SymMat::symmetrized(self.spectral(|l| l * (s * l).exp()))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FlatMetricCoeffs {
    pub p: Vec<Vec<f64>>,
    /// `√det P`.
    pub volume: f64,
    /// `min ᵗn P n` over nonzero integer vectors.
    pub shortest_sq: f64,
    pub shortest_vector: Vec<i64>,
}

const ENUM_WINDOW: i64 = 3;

/// Coefficients, volume and shortest lattice vector (enumeration over `|n|∞ ≤ 3` on the
/// LLL-reduced form, mapped back to the original basis).
pub fn flat_metric_coeffs(p: &FlatTorusMetric) -> Result<FlatMetricCoeffs> {
    let r = p.r();
    let (red, u) = reduce_spd(&p.0, 2.0)?;
    let g = red.as_mat();
    let mut best = f64::INFINITY;
    let mut best_n = vec![0i64; r];
    let mut n = vec![-ENUM_WINDOW; r];
    loop {
        if n.iter().any(|&v| v != 0) {
            let mut q = 0.0;
            for i in 0..r {
                for j in 0..r {
                    q += n[i] as f64 * g[(i, j)] * n[j] as f64;
                }
            }
            if q < best {
                best = q;
                best_n.clone_from(&n);
            }
        }
        let mut k = 0;
        loop {
            if k == r {
                let shortest_vector = (0..r)
                    .map(|i| (0..r).map(|j| u.get(i, j) * best_n[j]).sum())
                    .collect();
                return Ok(FlatMetricCoeffs {
                    p: rows_of(p.0.as_mat()),
                    volume: p.0.determinant().sqrt(),
                    shortest_sq: best,
                    shortest_vector,
                });
            }
            if n[k] < ENUM_WINDOW {
                n[k] += 1;
                break;
            }
            n[k] = -ENUM_WINDOW;
            k += 1;
        }
    }
}

/// `t_n / d_g(τ_n)` termwise.
pub fn normalize_basepoint(
    t_seq: &[FlatTorusMetric],
    d_g_seq: &[f64],
) -> Result<Vec<FlatTorusMetric>> {
    if t_seq.len() != d_g_seq.len() {
        return Err(GeomError::DimensionMismatch(
            "sequence lengths differ".into(),
        ));
    }
    t_seq
        .iter()
        .zip(d_g_seq)
        .map(|(t, &d)| {
            if !(d > 0.0) || !d.is_finite() {
                return Err(GeomError::NonpositiveScale(d));
            }
            Ok(FlatTorusMetric(t.0.scale(1.0 / d)?))
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::E;

    fn diag(d: &[f64]) -> FlatTorusMetric {
        FlatTorusMetric(SpdMat::from_diagonal(d).unwrap())
    }

    #[test]
    fn norm_examples() {
        let v = TropTangent(SymMat::from_diagonal(&[4.0]));
        assert_eq!(trwp_norm_sq(&diag(&[4.0]), &v).unwrap(), 0.5);
    }

    #[test]
    fn distance_examples() {
        let d = trwp_distance(&diag(&[1.0, 1.0]), &diag(&[E * E, (-2.0f64).exp()])).unwrap();
        assert!((d - 2.0).abs() < 1e-12);
        let p = diag(&[2.0, 3.0]);
        assert!(trwp_distance(&p, &p).unwrap() < 1e-15);
    }

    #[test]
    fn geodesic_example() {
        let v = TropTangent(SymMat::from_diagonal(&[2.0, 0.0]));
        let q = trwp_geodesic(&diag(&[1.0, 1.0]), &v, 1.0).unwrap();
        assert!(
            (q.0.as_mat() - Mat::from_diagonal(&nalgebra::DVector::from_vec(vec![E * E, 1.0])))
                .norm()
                < 1e-13
        );
        let p = diag(&[2.0, 5.0]);
        assert!((trwp_geodesic(&p, &v, 0.0).unwrap().0.as_mat() - p.0.as_mat()).norm() < 1e-14);
    }

    #[test]
    fn between_endpoints() {
        let p = FlatTorusMetric(SpdMat::from_rows(&[vec![2.0, 0.3], vec![0.3, 1.0]]).unwrap());
        let q = FlatTorusMetric(SpdMat::from_rows(&[vec![5.0, -1.0], vec![-1.0, 0.7]]).unwrap());
        let geo = trwp_geodesic_between(&p, &q).unwrap();
        assert!((geo.point(1.0).unwrap().0.as_mat() - q.0.as_mat()).norm() < 1e-13);
        assert!((geo.length() - trwp_distance(&p, &q).unwrap()).abs() < 1e-14);
        let mid = geo.point(0.4).unwrap();
        let speed = trwp_norm_sq(&mid, &TropTangent(geo.velocity(0.4)))
            .unwrap()
            .sqrt();
        assert!((speed - geo.length()).abs() < 1e-12);
    }

    #[test]
    fn coeff_examples() {
        let c = flat_metric_coeffs(&diag(&[1.0, 1.0])).unwrap();
        assert_eq!(c.volume, 1.0);
        assert_eq!(c.shortest_sq, 1.0);
        let c = flat_metric_coeffs(&diag(&[1.0, 4.0])).unwrap();
        assert_eq!(c.volume, 2.0);
        assert_eq!(c.shortest_sq, 1.0);
    }

    #[test]
    fn normalization_examples() {
        let n = 5;
        let t = diag(&[3f64.powi(n), 2.0 * 3f64.powi(n)]);
        let out = normalize_basepoint(&[t.clone()], &[2.0 * 3f64.powi(n)]).unwrap();
        assert!((out[0].0.as_mat()[(0, 0)] - 0.5).abs() < 1e-15);
        assert!((out[0].0.as_mat()[(1, 1)] - 1.0).abs() < 1e-15);
        assert_eq!(normalize_basepoint(&[t.clone()], &[1.0]).unwrap()[0], t);
        assert!(matches!(
            normalize_basepoint(&[t], &[0.0]),
            Err(GeomError::NonpositiveScale(_))
        ));
    }
}
