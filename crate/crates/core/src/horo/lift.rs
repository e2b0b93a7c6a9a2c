//! Horizontal lift of a base geodesic.
//!
//! The base path `(τ'(s), t(s))` is a product of exact geodesics; the fiber coordinates
//! `f(s)` solve `G ḟ = −b`, where `G` is the Gram matrix of the vertical coordinate basis
//! and `b` the inner products of the coordinate lift of the base velocity with it. The
//! ODE is integrated with classical RK4.

use super::{assemble, coordinate_lift, project, vertical_basis, BasePoint, FiberCoords};
use crate::error::{GeomError, Result};
use crate::linalg::{trace_prod, Mat, SymMat};
use crate::siegel::{geodesic, Geodesic, SiegelPoint, TangentVec};
use crate::tropical::{trwp_geodesic_between, FlatTorusMetric, TropGeodesic};

#[derive(Debug, Clone)]
pub struct LiftResult {
    /// Lift of the base endpoint; lies exactly over the target base point.
    pub endpoint: SiegelPoint,
    /// Simpson quadrature of the lifted speed.
    pub length: f64,
    /// Length of the base geodesic.
    pub base_length: f64,
}

struct BasePath {
    tau_p: Option<Geodesic>,
    t: TropGeodesic,
}

impl BasePath {
    fn at(&self, s: f64) -> Result<(BasePoint, Option<TangentVec>, SymMat)> {
        let (tau_p, a) = match &self.tau_p {
            Some(geo) => (Some(geo.point(s)?), Some(geo.velocity(s)?)),
            None => (None, None),
        };
        let t = self.t.point(s)?.0;
        Ok((BasePoint { tau_p, t }, a, self.t.velocity(s)))
    }
}

/// Weighted products `Y⁻¹V_X`, `Y⁻¹V_Y` for fast inner products.
fn weighted(yi: &Mat, v: &TangentVec) -> (Mat, Mat) {
    (yi * v.vx.as_mat(), yi * v.vy.as_mat())
}

fn inner(a: &(Mat, Mat), b: &(Mat, Mat)) -> f64 {
    0.5 * (trace_prod(&a.0, &b.0) + trace_prod(&a.1, &b.1))
}

type BaseState = (BasePoint, Option<TangentVec>, SymMat);

/// `(ḟ, speed)` for the base state at some parameter and fiber state `f`.
fn rhs(state: &BaseState, gprime: usize, f: &[f64]) -> Result<(Vec<f64>, f64)> {
    let (base, a, bdot) = state;
    let fc = FiberCoords::from_vec(gprime, base.g2(), f);
    let tau = assemble(base, &fc)?;
    let yi = tau.y().inverse().into_mat();
    let basis: Vec<(Mat, Mat)> = vertical_basis(&tau, gprime)?
        .iter()
        .map(|v| weighted(&yi, v))
        .collect();
    let lift0 = coordinate_lift(&tau, gprime, a.as_ref(), bdot)?;
    let l0 = weighted(&yi, &lift0);
    let n = basis.len();
    let g = Mat::from_fn(n, n, |i, j| inner(&basis[i], &basis[j]));
    let b = nalgebra::DVector::from_fn(n, |i, _| -inner(&basis[i], &l0));
    let fdot = g
        .cholesky()
        .ok_or_else(|| GeomError::NumericallySingular("vertical Gram matrix not definite".into()))?
        .solve(&b);
    // Horizontal velocity = lift0 + Σ ḟ_k v_k; its norm² = ⟨lift0, lift0⟩ + ⟨lift0, Σḟv⟩.
    let mut nsq = inner(&l0, &l0);
    for i in 0..n {
        nsq -= fdot[i] * b[i];
    }
    Ok((fdot.iter().copied().collect(), nsq.max(0.0).sqrt()))
}

/// Horizontal lift, starting at `start`, of the base geodesic from `π(start)` to `target`.
pub fn horizontal_lift(
    start: &SiegelPoint,
    target: &BasePoint,
    gprime: usize,
    steps: usize,
) -> Result<LiftResult> {
    let steps = steps.max(2) + steps % 2;
    let b0 = project(start, gprime)?;
    if b0.gprime() != target.gprime() || b0.g2() != target.g2() {
        return Err(GeomError::DimensionMismatch(
            "target base point has the wrong shape".into(),
        ));
    }
    let tau_p = match (&b0.tau_p, &target.tau_p) {
        (Some(p), Some(q)) => Some(geodesic(p, q)?),
        _ => None,
    };
    let t = trwp_geodesic_between(
        &FlatTorusMetric(b0.t.clone()),
        &FlatTorusMetric(target.t.clone()),
    )?;
    let base_length =
        (tau_p.as_ref().map_or(0.0, |g| g.length().powi(2)) + t.length().powi(2)).sqrt();
    let path = BasePath { tau_p, t };

    let mut f = FiberCoords::of(start, gprime)?.to_vec();
    let h = 1.0 / steps as f64;
    let mut speeds = Vec::with_capacity(steps + 1);
    let axpy = |x: &[f64], k: &[f64], c: f64| -> Vec<f64> {
        x.iter().zip(k).map(|(a, b)| a + c * b).collect()
    };
    let mut here = path.at(0.0)?;
    for i in 0..steps {
        let s = i as f64 * h;
        let mid = path.at(s + 0.5 * h)?;
        let next = path.at(s + h)?;
        let (k1, sp) = rhs(&here, gprime, &f)?;
        speeds.push(sp);
        let (k2, _) = rhs(&mid, gprime, &axpy(&f, &k1, 0.5 * h))?;
        let (k3, _) = rhs(&mid, gprime, &axpy(&f, &k2, 0.5 * h))?;
        let (k4, _) = rhs(&next, gprime, &axpy(&f, &k3, h))?;
        for j in 0..f.len() {
            f[j] += h / 6.0 * (k1[j] + 2.0 * k2[j] + 2.0 * k3[j] + k4[j]);
        }
        here = next;
    }
    speeds.push(rhs(&here, gprime, &f)?.1);
    let mut length = speeds[0] + speeds[steps];
    for (i, sp) in speeds.iter().enumerate().take(steps).skip(1) {
        length += if i % 2 == 1 { 4.0 * sp } else { 2.0 * sp };
    }
    length *= h / 3.0;

    let fc = FiberCoords::from_vec(gprime, target.g2(), &f);
    let endpoint = assemble(target, &fc)?;
    Ok(LiftResult {
        endpoint,
        length,
        base_length,
    })
}
