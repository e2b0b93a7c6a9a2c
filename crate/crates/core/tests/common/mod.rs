//! Independent reference computations built directly on nalgebra.
#![allow(dead_code)]

use nalgebra::{DMatrix, SymmetricEigen};
use wpgeom::siegel::{SiegelPoint, TangentVec};

pub type M = DMatrix<f64>;

pub fn inv(m: &M) -> M {
    m.clone().try_inverse().expect("invertible")
}

/// `½ tr(Y⁻¹V_X Y⁻¹V_X) + ½ tr(Y⁻¹V_Y Y⁻¹V_Y)`.
pub fn oracle_wp_norm_sq(y: &M, vx: &M, vy: &M) -> f64 {
    let yi = inv(y);
    let a = &yi * vx;
    let b = &yi * vy;
    0.5 * ((&a * &a).trace() + (&b * &b).trace())
}

pub fn wp_norm_sq_at(tau: &SiegelPoint, v: &TangentVec) -> f64 {
    oracle_wp_norm_sq(tau.y().as_mat(), v.vx.as_mat(), v.vy.as_mat())
}

/// Eigenvalues of the pencil `(Q, P)` through the Cholesky factor of `P`.
pub fn pencil_eigenvalues(p: &M, q: &M) -> Vec<f64> {
    let l = p.clone().cholesky().expect("SPD").l();
    let li = inv(&l);
    let m = &li * q * li.transpose();
    let m = (&m + m.transpose()) * 0.5;
    let mut v: Vec<f64> = SymmetricEigen::new(m).eigenvalues.iter().copied().collect();
    v.sort_by(f64::total_cmp);
    v
}

/// `(½ Σ log² μ)^{1/2}` over the pencil eigenvalues.
pub fn spd_distance(p: &M, q: &M) -> f64 {
    (0.5 * pencil_eigenvalues(p, q)
        .iter()
        .map(|m| m.ln().powi(2))
        .sum::<f64>())
    .sqrt()
}

pub fn min_eigenvalue(m: &M) -> f64 {
    SymmetricEigen::new(m.clone())
        .eigenvalues
        .iter()
        .copied()
        .fold(f64::INFINITY, f64::min)
}

/// Unit lower-triangular `L` and pivots `d` from the Cholesky factor.
pub fn ldl(m: &M) -> (M, Vec<f64>) {
    let c = m.clone().cholesky().expect("SPD").l();
    let n = m.nrows();
    let d: Vec<f64> = (0..n).map(|i| c[(i, i)] * c[(i, i)]).collect();
    let l = M::from_fn(n, n, |i, j| c[(i, j)] / c[(j, j)]);
    (l, d)
}

/// `Y'' − ᵗY'''(Y')⁻¹Y'''`.
pub fn schur(y: &M, gp: usize) -> M {
    let g = y.nrows();
    let h = g - gp;
    let ypp = y.view((gp, gp), (h, h)).into_owned();
    if gp == 0 {
        return ypp;
    }
    let yp = y.view((0, 0), (gp, gp)).into_owned();
    let yppp = y.view((0, gp), (gp, h)).into_owned();
    ypp - yppp.transpose() * inv(&yp) * yppp
}

/// Hyperbolic distance on the upper half-plane.
pub fn hyperbolic_distance(x1: f64, y1: f64, x2: f64, y2: f64) -> f64 {
    let num = (x1 - x2).powi(2) + (y1 - y2).powi(2);
    (1.0 + num / (2.0 * y1 * y2)).acosh()
}

pub fn sym_unit(g: usize, i: usize, j: usize) -> M {
    let mut e = M::zeros(g, g);
    e[(i, j)] = 1.0;
    e[(j, i)] = 1.0;
    e
}

/// Velocity of `s ↦ τ(f + s ḟ)` for fiber coordinates `(X''', Y''', X'')`, built from
/// `Y'' = t + ᵗY'''(Y')⁻¹Y'''` with the base point fixed.
pub fn vertical_from_fiber_velocity(y: &M, gp: usize, dx3: &M, dy3: &M, dx2: &M) -> (M, M) {
    let g = y.nrows();
    let h = g - gp;
    let mut vx = M::zeros(g, g);
    let mut vy = M::zeros(g, g);
    vx.view_mut((gp, gp), (h, h)).copy_from(dx2);
    if gp > 0 {
        let yp = y.view((0, 0), (gp, gp)).into_owned();
        let yppp = y.view((0, gp), (gp, h)).into_owned();
        let a = inv(&yp) * &yppp;
        vx.view_mut((0, gp), (gp, h)).copy_from(dx3);
        vx.view_mut((gp, 0), (h, gp)).copy_from(&dx3.transpose());
        vy.view_mut((0, gp), (gp, h)).copy_from(dy3);
        vy.view_mut((gp, 0), (h, gp)).copy_from(&dy3.transpose());
        vy.view_mut((gp, gp), (h, h))
            .copy_from(&(dy3.transpose() * &a + a.transpose() * dy3));
    }
    (vx, vy)
}
