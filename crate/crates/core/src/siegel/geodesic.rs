//! Geodesics of 𝔖_g in closed form, through the bounded realization.
//!
//! With `τ₀ = X₀ + iY₀`, the map `τ ↦ Y₀^{-1/2}(τ − X₀)Y₀^{-1/2}` is an isometry sending
//! `τ₀` to `iI`, and the Cayley transform then sends `iI` to `0` in the disk
//! `{Z : I − ZZ̄ ≻ 0}`. Geodesics through `0` are `Z(s) = U tanh(sα) Uᵗ`
//! where `U α Uᵗ` is a Takagi factorization of the initial direction.

use super::{cayley, SiegelPoint, TangentVec};
use crate::error::{GeomError, Result};
use crate::linalg::{sym_eigen, CMat, Mat};

/// Takagi factorization `Z = U diag(σ) Uᵗ` of a complex symmetric matrix, with `σ`
/// descending and `U` unitary (columns for zero `σ` carry no weight).
pub fn takagi(z: &CMat) -> Result<(Vec<f64>, CMat)> {
    let g = z.nrows();
    if z.ncols() != g {
        return Err(GeomError::DimensionMismatch(
            "Takagi factorization needs a square matrix".into(),
        ));
    }
    let mut e = Mat::zeros(2 * g, 2 * g);
    e.view_mut((0, 0), (g, g)).copy_from(&z.re);
    e.view_mut((0, g), (g, g)).copy_from(&z.im);
    e.view_mut((g, 0), (g, g)).copy_from(&z.im);
    e.view_mut((g, g), (g, g)).copy_from(&(-&z.re));
    // Eigenpairs come in ±σ; (p; q) with eigenvalue σ gives Z(p − iq) = σ(p + iq).
    let eig = sym_eigen(&e)?;
    let mut values = Vec::with_capacity(g);
    let mut re = Mat::zeros(g, g);
    let mut im = Mat::zeros(g, g);
    for k in 0..g {
        let col = 2 * g - 1 - k;
        values.push(eig.values[col].max(0.0));
        for i in 0..g {
            re[(i, k)] = eig.vectors[(i, col)];
            im[(i, k)] = eig.vectors[(g + i, col)];
        }
    }
    Ok((values, CMat::new(re, im)))
}

/// Cayley image of `τ2` after moving `τ1` to `iI`.
pub(crate) fn disk_image(t1: &SiegelPoint, t2: &SiegelPoint) -> Result<CMat> {
    let yis = t1.y().inv_sqrt();
    let yis = yis.as_mat();
    let re = yis * (t2.x().as_mat() - t1.x().as_mat()) * yis;
    let im = yis * t2.y().as_mat() * yis;
    cayley(&CMat::new(re, im))
}

/// Unit-interval parametrization `s ∈ [0, 1]` of a geodesic segment.
#[derive(Debug, Clone)]
pub struct Geodesic {
    x0: Mat,
    y_half: Mat,
    u: CMat,
    alpha: Vec<f64>,
}

/// Geodesic from `t1` (at `s = 0`) to `t2` (at `s = 1`).
pub fn geodesic(t1: &SiegelPoint, t2: &SiegelPoint) -> Result<Geodesic> {
    if t1.g() != t2.g() {
        return Err(GeomError::DimensionMismatch("points differ in g".into()));
    }
    let z = disk_image(t1, t2)?;
    let (zeta, u) = takagi(&z)?;
    let mut alpha = Vec::with_capacity(zeta.len());
    for k in zeta {
        if k >= 1.0 - 1e-15 {
            return Err(GeomError::NumericallySingular(
                "endpoint too close to the boundary".into(),
            ));
        }
        alpha.push(k.atanh());
    }
    Ok(Geodesic {
        x0: t1.x().as_mat().clone(),
        y_half: t1.y().sqrt().into_mat(),
        u,
        alpha,
    })
}

/// Geodesic `s ↦ exp_τ(sV)`, `s ∈ [0, 1]`.
pub fn exp_geodesic(tau: &SiegelPoint, v: &TangentVec) -> Result<Geodesic> {
    if v.dim() != tau.g() {
        return Err(GeomError::DimensionMismatch(
            "tangent vector and point differ in g".into(),
        ));
    }
    let yis = tau.y().inv_sqrt();
    let yis = yis.as_mat();
    // At iI the Cayley differential is dZ = dσ / 2i.
    let v1 = CMat::new(yis * v.vx.as_mat() * yis, yis * v.vy.as_mat() * yis);
    let h = v1.scale_complex(0.0, -0.5);
    let (alpha, u) = takagi(&h)?;
    Ok(Geodesic {
        x0: tau.x().as_mat().clone(),
        y_half: tau.y().sqrt().into_mat(),
        u,
        alpha,
    })
}

impl Geodesic {
    pub fn g(&self) -> usize {
        self.x0.nrows()
    }

    pub fn length(&self) -> f64 {
        std::f64::consts::SQRT_2 * self.alpha.iter().map(|a| a * a).sum::<f64>().sqrt()
    }

    fn disk_sum(&self, f: impl Fn(f64) -> f64) -> CMat {
        let g = self.g();
        let mut re = Mat::zeros(g, g);
        let mut im = Mat::zeros(g, g);
        for (k, &a) in self.alpha.iter().enumerate() {
            let w = f(a);
            if w == 0.0 {
                continue;
            }
            for i in 0..g {
                let (pi, qi) = (self.u.re[(i, k)], self.u.im[(i, k)]);
                for j in 0..g {
                    let (pj, qj) = (self.u.re[(j, k)], self.u.im[(j, k)]);
                    re[(i, j)] += w * (pi * pj - qi * qj);
                    im[(i, j)] += w * (pi * qj + qi * pj);
                }
            }
        }
        CMat::new(re, im)
    }

    fn resolvent(&self, z: &CMat) -> Result<CMat> {
        (&CMat::identity(self.g()) - z).inverse()
    }

    pub fn point(&self, s: f64) -> Result<SiegelPoint> {
        let g = self.g();
        let z = self.disk_sum(|a| (s * a).tanh());
        let inv = self.resolvent(&z)?;
        let sigma = (&(&CMat::identity(g) + &z) * &inv).scale_complex(0.0, 1.0);
        let yh = CMat::real(self.y_half.clone());
        let mut tau = &(&yh * &sigma) * &yh;
        tau.re += &self.x0;
        SiegelPoint::from_cmat(&tau)
    }

    /// `dτ/ds`; constant speed `length()`.
    pub fn velocity(&self, s: f64) -> Result<TangentVec> {
        let z = self.disk_sum(|a| (s * a).tanh());
        let zdot = self.disk_sum(|a| {
            let c = (s * a).cosh();
            a / (c * c)
        });
        let inv = self.resolvent(&z)?;
        let sdot = (&(&inv * &zdot) * &inv).scale_complex(0.0, 2.0);
        let yh = CMat::real(self.y_half.clone());
        let t = &(&yh * &sdot) * &yh;
        Ok(TangentVec::from_mats_unchecked(t.re, t.im))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::siegel::{siegel_distance, wp_norm_sq};
    use std::f64::consts::E;

    #[test]
    fn scalar_geodesic_is_vertical_ray() {
        let a = SiegelPoint::i_identity(1);
        let b = SiegelPoint::from_rows(&[vec![0.0]], &[vec![E * E]]).unwrap();
        let geo = geodesic(&a, &b).unwrap();
        let mid = geo.point(0.5).unwrap();
        assert!((mid.y().as_mat()[(0, 0)] - E).abs() < 1e-13);
        assert!(mid.x().as_mat()[(0, 0)].abs() < 1e-13);
        let end = geo.point(1.0).unwrap();
        assert!((end.y().as_mat()[(0, 0)] - E * E).abs() < 1e-12);
    }

    #[test]
    fn endpoints_and_speed() {
        let a = SiegelPoint::from_rows(
            &[vec![0.3, -0.1], vec![-0.1, 0.2]],
            &[vec![1.5, 0.4], vec![0.4, 0.8]],
        )
        .unwrap();
        let b = SiegelPoint::from_rows(
            &[vec![-0.5, 0.7], vec![0.7, 1.1]],
            &[vec![0.6, -0.2], vec![-0.2, 2.5]],
        )
        .unwrap();
        let geo = geodesic(&a, &b).unwrap();
        let p0 = geo.point(0.0).unwrap();
        let p1 = geo.point(1.0).unwrap();
        assert!((p0.tau().re - a.tau().re).norm() < 1e-12);
        assert!((p1.tau().re - b.tau().re).norm() < 1e-12);
        assert!((p1.tau().im - b.tau().im).norm() < 1e-12);
        let d = siegel_distance(&a, &b).unwrap();
        assert!((geo.length() - d).abs() < 1e-12);
        for s in [0.0, 0.3, 0.9] {
            let p = geo.point(s).unwrap();
            let v = geo.velocity(s).unwrap();
            assert!((wp_norm_sq(&p, &v).unwrap().sqrt() - d).abs() < 1e-10);
        }
    }

    #[test]
    fn exp_map_length() {
        let tau = SiegelPoint::from_rows(
            &[vec![0.1, 0.0], vec![0.0, 0.0]],
            &[vec![2.0, 0.5], vec![0.5, 1.0]],
        )
        .unwrap();
        let v = TangentVec::from_mats(
            Mat::from_row_slice(2, 2, &[0.3, 0.1, 0.1, -0.2]),
            Mat::from_row_slice(2, 2, &[0.0, 0.4, 0.4, 0.5]),
        )
        .unwrap();
        let geo = exp_geodesic(&tau, &v).unwrap();
        let speed = wp_norm_sq(&tau, &v).unwrap().sqrt();
        assert!((geo.length() - speed).abs() < 1e-13);
        let end = geo.point(1.0).unwrap();
        assert!((siegel_distance(&tau, &end).unwrap() - speed).abs() < 1e-11);
        let v0 = geo.velocity(0.0).unwrap();
        assert!((v0.vx.as_mat() - v.vx.as_mat()).norm() < 1e-12);
        assert!((v0.vy.as_mat() - v.vy.as_mat()).norm() < 1e-12);
    }
}
