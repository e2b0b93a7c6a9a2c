//! Horospherical decomposition relative to the boundary component 𝔖_{g'}.
//!
//! With `τ = [[τ', τ'''], [ᵗτ''', τ'']]` split at `g'`, the projection is
//! `π(τ) = (τ', t)` where `t = Y'' − ᵗY'''(Y')⁻¹Y'''`. The fiber over a base point
//! is parametrized by `(X''', Y''', X'')`.

mod lattice;
mod lift;

pub(crate) use lattice::reduce_coords;
pub use lattice::reduce_fiber_pair;
pub use lift::{horizontal_lift, LiftResult};

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{GeomError, Result};
use crate::linalg::{lambda_min, op_norm, trace_prod, Mat, SpdMat, SymMat};
use crate::reduction::{deep_neighborhood, in_siegel_set, siegel_coords};
use crate::rng;
use crate::siegel::{siegel_distance, wp_norm_sq, SiegelPoint, TangentVec};
use crate::tropical::{trwp_distance, FlatTorusMetric};

/// Real and imaginary blocks of `τ` split at `g'`.
#[derive(Debug, Clone, PartialEq)]
pub struct BlockSplit {
    pub gprime: usize,
    pub xp: Mat,
    pub yp: Mat,
    pub xpp: Mat,
    pub ypp: Mat,
    pub xppp: Mat,
    pub yppp: Mat,
}

pub fn split(tau: &SiegelPoint, gprime: usize) -> Result<BlockSplit> {
    let g = tau.g();
    if gprime >= g {
        return Err(GeomError::DimensionMismatch(format!(
            "need 0 <= g' < g, got g' = {gprime}, g = {g}"
        )));
    }
    let h = g - gprime;
    let x = tau.x().as_mat();
    let y = tau.y().as_mat();
    let b = |m: &Mat, r0, c0, r, c| m.view((r0, c0), (r, c)).into_owned();
    Ok(BlockSplit {
        gprime,
        xp: b(x, 0, 0, gprime, gprime),
        yp: b(y, 0, 0, gprime, gprime),
        xpp: b(x, gprime, gprime, h, h),
        ypp: b(y, gprime, gprime, h, h),
        xppp: b(x, 0, gprime, gprime, h),
        yppp: b(y, 0, gprime, gprime, h),
    })
}

impl BlockSplit {
    pub fn g2(&self) -> usize {
        self.xpp.nrows()
    }

    pub fn g(&self) -> usize {
        self.gprime + self.g2()
    }

    /// `(Y')⁻¹`, empty when `g' = 0`.
    pub fn yp_inv(&self) -> Mat {
        inv_or_empty(&self.yp)
    }

    /// Schur complement `t = Y'' − ᵗY'''(Y')⁻¹Y'''`.
    pub fn schur(&self) -> Mat {
        let t = &self.ypp - self.yppp.transpose() * self.yp_inv() * &self.yppp;
        (&t + t.transpose()) * 0.5
    }

    pub fn reassemble(&self) -> Result<SiegelPoint> {
        let g = self.g();
        let gp = self.gprime;
        let h = self.g2();
        let mut x = Mat::zeros(g, g);
        let mut y = Mat::zeros(g, g);
        x.view_mut((0, 0), (gp, gp)).copy_from(&self.xp);
        y.view_mut((0, 0), (gp, gp)).copy_from(&self.yp);
        x.view_mut((gp, gp), (h, h)).copy_from(&self.xpp);
        y.view_mut((gp, gp), (h, h)).copy_from(&self.ypp);
        x.view_mut((0, gp), (gp, h)).copy_from(&self.xppp);
        y.view_mut((0, gp), (gp, h)).copy_from(&self.yppp);
        x.view_mut((gp, 0), (h, gp))
            .copy_from(&self.xppp.transpose());
        y.view_mut((gp, 0), (h, gp))
            .copy_from(&self.yppp.transpose());
        SiegelPoint::from_mats(x, y)
    }
}

pub(crate) fn inv_or_empty(m: &Mat) -> Mat {
    if m.nrows() == 0 {
        return Mat::zeros(0, 0);
    }
    m.clone()
        .cholesky()
        .map(|c| c.inverse())
        .or_else(|| m.clone().try_inverse())
        .unwrap_or_else(|| Mat::from_element(m.nrows(), m.ncols(), f64::NAN))
}

fn op_norm_or_zero(m: &Mat) -> f64 {
    if m.nrows() == 0 || m.ncols() == 0 {
        0.0
    } else {
        op_norm(m)
    }
}

/// Point `(τ', t)` of 𝔖_{g'} × Sym⁺(g'', ℝ); `tau_p` is `None` when `g' = 0`.
#[derive(Debug, Clone, PartialEq)]
pub struct BasePoint {
    pub tau_p: Option<SiegelPoint>,
    pub t: SpdMat,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BasePointJson {
    #[serde(rename = "tauP")]
    pub tau_p: Option<crate::siegel::SiegelPointJson>,
    pub t: Vec<Vec<f64>>,
}

impl BasePoint {
    pub fn gprime(&self) -> usize {
        self.tau_p.as_ref().map_or(0, SiegelPoint::g)
    }

    pub fn g2(&self) -> usize {
        self.t.dim()
    }

    pub fn yp(&self) -> Mat {
        self.tau_p
            .as_ref()
            .map_or_else(|| Mat::zeros(0, 0), |p| p.y().as_mat().clone())
    }

    pub fn xp(&self) -> Mat {
        self.tau_p
            .as_ref()
            .map_or_else(|| Mat::zeros(0, 0), |p| p.x().as_mat().clone())
    }

    pub fn to_json(&self) -> BasePointJson {
        BasePointJson {
            tau_p: self.tau_p.as_ref().map(SiegelPoint::to_json),
            t: crate::linalg::rows_of(self.t.as_mat()),
        }
    }

    pub fn from_json(j: &BasePointJson) -> Result<Self> {
        let tau_p = j.tau_p.as_ref().map(SiegelPoint::from_json).transpose()?;
        let t = SpdMat::from_rows(&j.t)?;
        Ok(BasePoint { tau_p, t })
    }
}

pub fn project(tau: &SiegelPoint, gprime: usize) -> Result<BasePoint> {
    let b = split(tau, gprime)?;
    let t = SpdMat::from_mat(b.schur())?;
    let tau_p = if gprime == 0 {
        None
    } else {
        Some(SiegelPoint::from_mats(b.xp, b.yp)?)
    };
    Ok(BasePoint { tau_p, t })
}

/// Product distance `(d_WP(τ'₁, τ'₂)² + d_trWP(t₁, t₂)²)^{1/2}`.
pub fn base_distance(a: &BasePoint, b: &BasePoint) -> Result<f64> {
    let dp = match (&a.tau_p, &b.tau_p) {
        (Some(p), Some(q)) => siegel_distance(p, q)?,
        (None, None) => 0.0,
        _ => {
            return Err(GeomError::DimensionMismatch(
                "base points differ in g'".into(),
            ))
        }
    };
    let dt = trwp_distance(&FlatTorusMetric(a.t.clone()), &FlatTorusMetric(b.t.clone()))?;
    Ok((dp * dp + dt * dt).sqrt())
}

/// Fiber coordinates `(X''', Y''', X'')`.
#[derive(Debug, Clone, PartialEq)]
pub struct FiberCoords {
    pub xppp: Mat,
    pub yppp: Mat,
    pub xpp: Mat,
}

impl FiberCoords {
    pub fn zero(gprime: usize, g2: usize) -> Self {
        FiberCoords {
            xppp: Mat::zeros(gprime, g2),
            yppp: Mat::zeros(gprime, g2),
            xpp: Mat::zeros(g2, g2),
        }
    }

    pub fn of(tau: &SiegelPoint, gprime: usize) -> Result<Self> {
        let b = split(tau, gprime)?;
        Ok(FiberCoords {
            xppp: b.xppp,
            yppp: b.yppp,
            xpp: b.xpp,
        })
    }

    pub fn dim(&self) -> usize {
        let (gp, h) = self.xppp.shape();
        2 * gp * h + h * (h + 1) / 2
    }

    /// Flatten as `(X''' row-major, Y''' row-major, X'' upper triangle)`.
    pub fn to_vec(&self) -> Vec<f64> {
        let (gp, h) = self.xppp.shape();
        let mut v = Vec::with_capacity(self.dim());
        for i in 0..gp {
            for j in 0..h {
                v.push(self.xppp[(i, j)]);
            }
        }
        for i in 0..gp {
            for j in 0..h {
                v.push(self.yppp[(i, j)]);
            }
        }
        for i in 0..h {
            for j in i..h {
                v.push(self.xpp[(i, j)]);
            }
        }
        v
    }

    pub fn from_vec(gprime: usize, g2: usize, v: &[f64]) -> Self {
        let mut f = FiberCoords::zero(gprime, g2);
        let mut k = 0;
        for i in 0..gprime {
            for j in 0..g2 {
                f.xppp[(i, j)] = v[k];
                k += 1;
            }
        }
        for i in 0..gprime {
            for j in 0..g2 {
                f.yppp[(i, j)] = v[k];
                k += 1;
            }
        }
        for i in 0..g2 {
            for j in i..g2 {
                f.xpp[(i, j)] = v[k];
                f.xpp[(j, i)] = v[k];
                k += 1;
            }
        }
        f
    }
}

/// Point over `base` with fiber coordinates `f`:
/// `Y'' = t + ᵗY'''(Y')⁻¹Y'''`.
pub fn assemble(base: &BasePoint, f: &FiberCoords) -> Result<SiegelPoint> {
    let gp = base.gprime();
    let h = base.g2();
    if f.xppp.shape() != (gp, h) || f.yppp.shape() != (gp, h) || f.xpp.shape() != (h, h) {
        return Err(GeomError::DimensionMismatch(
            "fiber coordinates do not match the base".into(),
        ));
    }
    let yp = base.yp();
    let ypp = base.t.as_mat() + f.yppp.transpose() * inv_or_empty(&yp) * &f.yppp;
    BlockSplit {
        gprime: gp,
        xp: base.xp(),
        yp,
        xpp: f.xpp.clone(),
        ypp: (&ypp + ypp.transpose()) * 0.5,
        xppp: f.xppp.clone(),
        yppp: f.yppp.clone(),
    }
    .reassemble()
}

/// `max(‖PYPᵗ − diag(Y', t)‖_F, ‖Y⁻¹ − Pᵗ diag((Y')⁻¹, t⁻¹) P‖_F)` with
/// `P = [[I, 0], [−ᵗY'''(Y')⁻¹, I]]`.
pub fn conjugator_identities(tau: &SiegelPoint, gprime: usize) -> Result<f64> {
    let b = split(tau, gprime)?;
    let g = tau.g();
    let h = b.g2();
    let ypi = b.yp_inv();
    let t = b.schur();
    let mut p = Mat::identity(g, g);
    p.view_mut((gprime, 0), (h, gprime))
        .copy_from(&(-(b.yppp.transpose() * &ypi)));
    let mut dg = Mat::zeros(g, g);
    dg.view_mut((0, 0), (gprime, gprime)).copy_from(&b.yp);
    dg.view_mut((gprime, gprime), (h, h)).copy_from(&t);
    let r1 = (&p * tau.y().as_mat() * p.transpose() - &dg).norm();
    let mut dgi = Mat::zeros(g, g);
    dgi.view_mut((0, 0), (gprime, gprime)).copy_from(&ypi);
    dgi.view_mut((gprime, gprime), (h, h))
        .copy_from(&inv_or_empty(&t));
    let r2 = (tau.y().inverse().as_mat() - p.transpose() * dgi * &p).norm();
    Ok(r1.max(r2))
}

/// Differential of `π`: `(V', W)` with
/// `W = V''_Y − ᵗV'''_Y(Y')⁻¹Y''' − ᵗY'''(Y')⁻¹V'''_Y + ᵗY'''(Y')⁻¹V'_Y(Y')⁻¹Y'''`.
pub fn dpi_pushforward(
    tau: &SiegelPoint,
    v: &TangentVec,
    gprime: usize,
) -> Result<(Option<TangentVec>, SymMat)> {
    if v.dim() != tau.g() {
        return Err(GeomError::DimensionMismatch(
            "tangent vector and point differ in g".into(),
        ));
    }
    let b = split(tau, gprime)?;
    let vs = split_tangent(v, gprime);
    let a = b.yp_inv() * &b.yppp;
    let w =
        &vs.ypp - vs.yppp.transpose() * &a - a.transpose() * &vs.yppp + a.transpose() * &vs.yp * &a;
    let vp = if gprime == 0 {
        None
    } else {
        Some(TangentVec::from_mats_unchecked(vs.xp, vs.yp))
    };
    Ok((vp, SymMat::symmetrized(w)))
}

fn split_tangent(v: &TangentVec, gprime: usize) -> BlockSplit {
    let g = v.dim();
    let h = g - gprime;
    let x = v.vx.as_mat();
    let y = v.vy.as_mat();
    let b = |m: &Mat, r0, c0, r, c| m.view((r0, c0), (r, c)).into_owned();
    BlockSplit {
        gprime,
        xp: b(x, 0, 0, gprime, gprime),
        yp: b(y, 0, 0, gprime, gprime),
        xpp: b(x, gprime, gprime, h, h),
        ypp: b(y, gprime, gprime, h, h),
        xppp: b(x, 0, gprime, gprime, h),
        yppp: b(y, 0, gprime, gprime, h),
    }
}

/// `(residual, scale)`: residual is `max(‖V'‖_F, ‖W‖_F)`; scale is the size of `V`
/// weighted by the coupling `‖(Y')⁻¹‖‖Y'''‖`.
pub fn vertical_residual(tau: &SiegelPoint, v: &TangentVec, gprime: usize) -> Result<(f64, f64)> {
    let (vp, w) = dpi_pushforward(tau, v, gprime)?;
    let vp_norm = vp.map_or(0.0, |t| t.frobenius_norm_sq().sqrt());
    let b = split(tau, gprime)?;
    let k = op_norm_or_zero(&b.yp_inv()) * op_norm_or_zero(&b.yppp);
    let scale = v.frobenius_norm_sq().sqrt() * (1.0 + k).powi(2);
    Ok((vp_norm.max(w.frobenius_norm()), scale))
}

/// `V' = 0` and `‖W‖_F ≤ tol`.
pub fn is_vertical(tau: &SiegelPoint, v: &TangentVec, gprime: usize, tol: f64) -> bool {
    match dpi_pushforward(tau, v, gprime) {
        Ok((vp, w)) => {
            vp.is_none_or(|t| t.frobenius_norm_sq().sqrt() <= tol) && w.frobenius_norm() <= tol
        }
        Err(_) => false,
    }
}

const VERTICAL_REL_TOL: f64 = 1e-9;

fn require_vertical(tau: &SiegelPoint, v: &TangentVec, gprime: usize) -> Result<()> {
    let (res, scale) = vertical_residual(tau, v, gprime)?;
    if res > VERTICAL_REL_TOL * scale.max(f64::MIN_POSITIVE) && res > 0.0 {
        return Err(GeomError::NotVertical(res));
    }
    Ok(())
}

/// Fiber-intrinsic norm of a vertical vector:
/// `tr(t⁻¹ ᵗV'''_X Y'⁻¹ V'''_X) + tr(t⁻¹ ᵗV'''_Y Y'⁻¹ V'''_Y) + ½ tr(t⁻¹Ṽ t⁻¹Ṽ)`
/// with `Ṽ = V''_X − ᵗV'''_X Y'⁻¹Y''' − ᵗY'''Y'⁻¹V'''_X`.
pub fn vertical_norm_sq(tau: &SiegelPoint, v: &TangentVec, gprime: usize) -> Result<f64> {
    require_vertical(tau, v, gprime)?;
    let b = split(tau, gprime)?;
    let vs = split_tangent(v, gprime);
    let ypi = b.yp_inv();
    let ti = inv_or_empty(&b.schur());
    let a = &ypi * &b.yppp;
    let vt = &vs.xpp - vs.xppp.transpose() * &a - a.transpose() * &vs.xppp;
    let t1 = trace_prod(&ti, &(vs.xppp.transpose() * &ypi * &vs.xppp));
    let t2 = trace_prod(&ti, &(vs.yppp.transpose() * &ypi * &vs.yppp));
    let tv = &ti * &vt;
    Ok(t1 + t2 + 0.5 * trace_prod(&tv, &tv))
}

/// Explicit upper bound for [`vertical_norm_sq`] in terms of `λ = λ_min(t)`,
/// `C₁ = ‖(Y')⁻¹‖_op`, `C₂ = ‖Y'''‖_op`:
/// `C₁(‖V'''_X‖² + ‖V'''_Y‖²)/λ + ½(‖V''_X‖ + 2C₁C₂‖V'''_X‖)²/λ²`.
pub fn vertical_bound(tau: &SiegelPoint, v: &TangentVec, gprime: usize) -> Result<f64> {
    require_vertical(tau, v, gprime)?;
    let b = split(tau, gprime)?;
    let vs = split_tangent(v, gprime);
    let lam = lambda_min(&b.schur())?;
    let c1 = op_norm_or_zero(&b.yp_inv());
    let c2 = op_norm_or_zero(&b.yppp);
    let nx3 = vs.xppp.norm();
    let ny3 = vs.yppp.norm();
    let nx2 = vs.xpp.norm();
    Ok(
        c1 * (nx3 * nx3 + ny3 * ny3) / lam
            + 0.5 * (nx2 + 2.0 * c1 * c2 * nx3).powi(2) / (lam * lam),
    )
}

/// Coordinate basis of the vertical space at `τ`, ordered as [`FiberCoords::to_vec`].
/// Its length is `2g'g'' + g''(g''+1)/2`.
pub fn vertical_basis(tau: &SiegelPoint, gprime: usize) -> Result<Vec<TangentVec>> {
    let b = split(tau, gprime)?;
    let g = tau.g();
    let h = b.g2();
    let a = b.yp_inv() * &b.yppp;
    let mut out = Vec::with_capacity(2 * gprime * h + h * (h + 1) / 2);
    for i in 0..gprime {
        for j in 0..h {
            let mut vx = Mat::zeros(g, g);
            vx[(i, gprime + j)] = 1.0;
            vx[(gprime + j, i)] = 1.0;
            out.push(TangentVec::from_mats_unchecked(vx, Mat::zeros(g, g)));
        }
    }
    for i in 0..gprime {
        for j in 0..h {
            let mut e = Mat::zeros(gprime, h);
            e[(i, j)] = 1.0;
            let corr = e.transpose() * &a + a.transpose() * &e;
            let mut vy = Mat::zeros(g, g);
            vy[(i, gprime + j)] = 1.0;
            vy[(gprime + j, i)] = 1.0;
            vy.view_mut((gprime, gprime), (h, h)).copy_from(&corr);
            out.push(TangentVec::from_mats_unchecked(Mat::zeros(g, g), vy));
        }
    }
    for i in 0..h {
        for j in i..h {
            let mut vx = Mat::zeros(g, g);
            vx[(gprime + i, gprime + j)] = 1.0;
            vx[(gprime + j, gprime + i)] = 1.0;
            out.push(TangentVec::from_mats_unchecked(vx, Mat::zeros(g, g)));
        }
    }
    Ok(out)
}

/// Velocity of `s ↦ assemble((τ'(s), t(s)), f)` for base velocity `(A, B)` and fixed
/// fiber coordinates.
pub fn coordinate_lift(
    tau: &SiegelPoint,
    gprime: usize,
    a: Option<&TangentVec>,
    bdot: &SymMat,
) -> Result<TangentVec> {
    let b = split(tau, gprime)?;
    let g = tau.g();
    let h = b.g2();
    if bdot.dim() != h || a.map_or(gprime, TangentVec::dim) != gprime {
        return Err(GeomError::DimensionMismatch(
            "base velocity does not match the split".into(),
        ));
    }
    let mut vx = Mat::zeros(g, g);
    let mut vy = Mat::zeros(g, g);
    let mut corner = bdot.as_mat().clone();
    if let Some(a) = a {
        vx.view_mut((0, 0), (gprime, gprime))
            .copy_from(a.vx.as_mat());
        vy.view_mut((0, 0), (gprime, gprime))
            .copy_from(a.vy.as_mat());
        let m = b.yp_inv() * &b.yppp;
        corner -= m.transpose() * a.vy.as_mat() * &m;
    }
    vy.view_mut((gprime, gprime), (h, h)).copy_from(&corner);
    Ok(TangentVec::from_mats_unchecked(vx, vy))
}

/// WP-orthogonal projection of `V` onto the horizontal space (complement of the vertical
/// space, obtained by Gram–Schmidt under `wp_inner`).
pub fn horizontal_part(tau: &SiegelPoint, v: &TangentVec, gprime: usize) -> Result<TangentVec> {
    let basis = vertical_basis(tau, gprime)?;
    let mut ortho: Vec<TangentVec> = Vec::with_capacity(basis.len());
    for w in basis {
        let mut u = w;
        for e in &ortho {
            let c = crate::siegel::wp_inner(tau, &u, e)?;
            u = u.add(&e.scale(-c));
        }
        let n = wp_norm_sq(tau, &u)?.sqrt();
        if n > 0.0 {
            ortho.push(u.scale(1.0 / n));
        }
    }
    let mut out = v.clone();
    for e in &ortho {
        let c = crate::siegel::wp_inner(tau, &out, e)?;
        out = out.add(&e.scale(-c));
    }
    Ok(out)
}

/// Length of the three-segment fiber path `X''' → Y''' → X''` between two points over the
/// same base point. Segment speeds are constant, evaluated with the full metric at the
/// segment midpoint.
pub fn fiber_path_length(p: &SiegelPoint, q: &SiegelPoint, gprime: usize) -> Result<f64> {
    if p.g() != q.g() {
        return Err(GeomError::DimensionMismatch("points differ in g".into()));
    }
    let bp = project(p, gprime)?;
    let bq = project(q, gprime)?;
    let mismatch = base_distance(&bp, &bq)?;
    if mismatch > 1e-9 {
        return Err(GeomError::BaseMismatch(mismatch));
    }
    let fp = FiberCoords::of(p, gprime)?;
    let fq = FiberCoords::of(q, gprime)?;
    fiber_path_length_coords(&bp, &fp, &fq)
}

pub(crate) fn fiber_path_length_coords(
    base: &BasePoint,
    fp: &FiberCoords,
    fq: &FiberCoords,
) -> Result<f64> {
    let g2 = base.g2();
    let gp = base.gprime();
    let g = gp + g2;
    let dx3 = &fq.xppp - &fp.xppp;
    let dy3 = &fq.yppp - &fp.yppp;
    let dx2 = &fq.xpp - &fp.xpp;
    let mut total = 0.0;

    // X''' segment at Y''' = Y'''_p.
    if dx3.norm() > 0.0 {
        let mid = FiberCoords {
            xppp: &fp.xppp + &dx3 * 0.5,
            yppp: fp.yppp.clone(),
            xpp: fp.xpp.clone(),
        };
        let tau = assemble(base, &mid)?;
        let mut vx = Mat::zeros(g, g);
        vx.view_mut((0, gp), (gp, g2)).copy_from(&dx3);
        vx.view_mut((gp, 0), (g2, gp)).copy_from(&dx3.transpose());
        total += segment_speed(
            &tau,
            TangentVec::from_mats_unchecked(vx, Mat::zeros(g, g)),
            gp,
        )?;
    }
    // Y''' segment, Y'' re-derived from t.
    if dy3.norm() > 0.0 {
        let mid = FiberCoords {
            xppp: fq.xppp.clone(),
            yppp: &fp.yppp + &dy3 * 0.5,
            xpp: fp.xpp.clone(),
        };
        let tau = assemble(base, &mid)?;
        let a = inv_or_empty(&base.yp()) * &mid.yppp;
        let corr = dy3.transpose() * &a + a.transpose() * &dy3;
        let mut vy = Mat::zeros(g, g);
        vy.view_mut((0, gp), (gp, g2)).copy_from(&dy3);
        vy.view_mut((gp, 0), (g2, gp)).copy_from(&dy3.transpose());
        vy.view_mut((gp, gp), (g2, g2)).copy_from(&corr);
        total += segment_speed(
            &tau,
            TangentVec::from_mats_unchecked(Mat::zeros(g, g), vy),
            gp,
        )?;
    }
    // X'' segment.
    if dx2.norm() > 0.0 {
        let mid = FiberCoords {
            xppp: fq.xppp.clone(),
            yppp: fq.yppp.clone(),
            xpp: &fp.xpp + &dx2 * 0.5,
        };
        let tau = assemble(base, &mid)?;
        let mut vx = Mat::zeros(g, g);
        vx.view_mut((gp, gp), (g2, g2)).copy_from(&dx2);
        total += segment_speed(
            &tau,
            TangentVec::from_mats_unchecked(vx, Mat::zeros(g, g)),
            gp,
        )?;
    }
    Ok(total)
}

fn segment_speed(tau: &SiegelPoint, v: TangentVec, gprime: usize) -> Result<f64> {
    debug_assert!({
        let (res, scale) = vertical_residual(tau, &v, gprime)?;
        res <= 1e-8 * scale
    });
    Ok(wp_norm_sq(tau, &v)?.sqrt())
}

/// Constants of the fiber-diameter estimate
/// `√(C₁R₁²/λ + 2C₁²C₂²R₁²/λ²) + √(C₁R₂²/λ) + R₃/(√2 λ)`, where `R₁, R₂, R₃` bound the
/// Frobenius norms of the `X'''`, `Y'''`, `X''` displacements, `C₁ ≥ ‖(Y')⁻¹‖_op` and
/// `C₂ ≥ ‖Y'''‖_op` at the start of the path.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FiberConstants {
    pub c1: f64,
    pub c2: f64,
    pub r1: f64,
    pub r2: f64,
    pub r3: f64,
}

impl FiberConstants {
    /// Constants for lattice-reduced pairs (see [`reduce_fiber_pair`]): displacements of
    /// `X'''`, `X''` have entries at most ½, and `Y'''`, `ΔY'''` lie in `Y'·[−½, ½]`.
    pub fn reduced(yp: &Mat, g2: usize) -> Self {
        let gp = yp.nrows();
        let c1 = op_norm_or_zero(&inv_or_empty(yp));
        let yn = op_norm_or_zero(yp);
        let s = ((gp * g2) as f64).sqrt();
        FiberConstants {
            c1,
            c2: 0.5 * yn * s,
            r1: 0.5 * s,
            r2: 0.5 * yn * s,
            r3: 0.5 * g2 as f64,
        }
    }

    /// Constants for the coordinate box with half-widths `u` on `X'''`, `X''` and
    /// `u(1 + u g)` on `Y'''`.
    pub fn from_box(yp: &Mat, g2: usize, u: f64) -> Self {
        let gp = yp.nrows();
        let g = (gp + g2) as f64;
        let s = ((gp * g2) as f64).sqrt();
        let hy3 = u * (1.0 + u * g);
        FiberConstants {
            c1: op_norm_or_zero(&inv_or_empty(yp)),
            c2: hy3 * s,
            r1: 2.0 * u * s,
            r2: 2.0 * hy3 * s,
            r3: 2.0 * u * g2 as f64,
        }
    }

    /// Valid over the metric ball of radius `R`: `‖Y'‖` and `‖(Y')⁻¹‖` grow by at most
    /// `e^{√2 R}` there.
    pub fn inflate(&self, radius: f64) -> Self {
        let k = (std::f64::consts::SQRT_2 * radius).exp();
        FiberConstants {
            c1: self.c1 * k,
            c2: self.c2 * k,
            r1: self.r1,
            r2: self.r2 * k,
            r3: self.r3,
        }
    }

    pub fn bound(&self, lambda: f64) -> f64 {
        let FiberConstants { c1, c2, r1, r2, r3 } = *self;
        (c1 * r1 * r1 / lambda + 2.0 * (c1 * c2 * r1).powi(2) / (lambda * lambda)).sqrt()
            + (c1 * r2 * r2 / lambda).sqrt()
            + r3 / (std::f64::consts::SQRT_2 * lambda)
    }

    /// `C` with `bound(λ') ≤ C/√λ'` for every `λ' ≥ λ`.
    pub fn c_tau(&self, lambda: f64) -> f64 {
        let FiberConstants { c1, c2, r1, r2, r3 } = *self;
        let m = lambda.min(1.0);
        (c1 * r1 * r1 + 2.0 * (c1 * c2 * r1).powi(2) / m).sqrt()
            + c1.sqrt() * r2
            + r3 / (2.0 * m).sqrt()
    }
}

/// Half-widths of the fiber coordinate box.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FiberBox {
    pub hx3: f64,
    pub hy3: f64,
    pub hx2: f64,
}

impl FiberBox {
    pub fn from_u(u: f64, g: usize) -> Self {
        FiberBox {
            hx3: u,
            hy3: u * (1.0 + u * g as f64),
            hx2: u,
        }
    }

    pub fn sample<R: Rng>(&self, rng: &mut R, gprime: usize, g2: usize) -> FiberCoords {
        let mut f = FiberCoords::zero(gprime, g2);
        let mut draw = |h: f64| {
            if h > 0.0 {
                h * (2.0 * rng.random::<f64>() - 1.0)
            } else {
                0.0
            }
        };
        for i in 0..gprime {
            for j in 0..g2 {
                f.xppp[(i, j)] = draw(self.hx3);
            }
        }
        for i in 0..gprime {
            for j in 0..g2 {
                f.yppp[(i, j)] = draw(self.hy3);
            }
        }
        for i in 0..g2 {
            for j in i..g2 {
                let v = draw(self.hx2);
                f.xpp[(i, j)] = v;
                f.xpp[(j, i)] = v;
            }
        }
        f
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FiberDiameter {
    /// Largest measured path length over the sampled pairs.
    pub value: f64,
    /// `bound(λ_min(t))` from the lattice-reduced constants.
    pub bound: f64,
    /// `C_{τ'}` with `bound ≤ C_{τ'}/√λ_min(t)`.
    pub c_tau: f64,
    pub lambda_min: f64,
}

const FIBER_DIAM_SEED: u64 = 0x5eed_f1be;

/// Largest fiber path length over `samples` random pairs from the box of [`FiberBox::from_u`]
/// plus the half-period corner pair; pairs are lattice-reduced before measuring.
pub fn fiber_diameter_upper(base: &BasePoint, u: f64, samples: usize) -> Result<FiberDiameter> {
    let g = base.gprime() + base.g2();
    fiber_diameter_box(base, &FiberBox::from_u(u, g), samples)
}

pub fn fiber_diameter_box(
    base: &BasePoint,
    bx: &FiberBox,
    samples: usize,
) -> Result<FiberDiameter> {
    let gp = base.gprime();
    let h = base.g2();
    let lam = lambda_min(base.t.as_mat())?;
    let consts = FiberConstants::reduced(&base.yp(), h);
    let mut best = 0.0_f64;
    let mut measure = |fp: FiberCoords, fq: FiberCoords| -> Result<()> {
        let p = assemble(base, &fp)?;
        let q = assemble(base, &fq)?;
        let (p, q) = reduce_fiber_pair(&p, &q, gp)?;
        let fp = FiberCoords::of(&p, gp)?;
        let fq = FiberCoords::of(&q, gp)?;
        best = best.max(fiber_path_length_coords(base, &fp, &fq)?);
        Ok(())
    };
    let mut corner = FiberCoords::zero(gp, h);
    corner.xppp.fill(bx.hx3.min(0.5));
    corner.xpp.fill(bx.hx2.min(0.5));
    measure(FiberCoords::zero(gp, h), corner)?;
    for k in 0..samples {
        let mut rng = rng::stream(FIBER_DIAM_SEED, 0, k as u64);
        let fp = bx.sample(&mut rng, gp, h);
        let fq = bx.sample(&mut rng, gp, h);
        measure(fp, fq)?;
    }
    Ok(FiberDiameter {
        value: best,
        bound: consts.bound(lam),
        c_tau: consts.c_tau(lam),
        lambda_min: lam,
    })
}

/// `L''` and `D''` of the Jacobi decomposition, so that `t = L'' D'' ᵗL''`.
fn lower_jacobi(tau: &SiegelPoint, gprime: usize) -> Result<(Mat, Vec<f64>)> {
    let c = siegel_coords(tau)?;
    let g = tau.g();
    if gprime >= g {
        return Err(GeomError::DimensionMismatch(format!(
            "need 0 <= g' < g, got g' = {gprime}"
        )));
    }
    let h = g - gprime;
    Ok((
        c.l.view((gprime, gprime), (h, h)).into_owned(),
        c.d[gprime..].to_vec(),
    ))
}

fn unit_lower_inverse_norm(l: &Mat) -> Result<f64> {
    let inv = l
        .clone()
        .solve_lower_triangular(&Mat::identity(l.nrows(), l.ncols()))
        .ok_or_else(|| GeomError::NumericallySingular("L'' not invertible".into()))?;
    Ok(op_norm(&inv))
}

/// `min(D'')/‖(L'')⁻¹‖²_op ≤ λ_min(t)`.
pub fn lambda_lower_bound(tau: &SiegelPoint, gprime: usize, u: f64) -> Result<f64> {
    if !in_siegel_set(tau, u) {
        return Err(GeomError::NotInSiegelSet(u));
    }
    let (l, d) = lower_jacobi(tau, gprime)?;
    let dmin = d.iter().copied().fold(f64::INFINITY, f64::min);
    Ok(dmin / unit_lower_inverse_norm(&l)?.powi(2))
}

/// Chain form `d_{g'+1}/(max(1, u^{g''−1}) ‖(L'')⁻¹‖²_op) ≤ λ_min(t)`.
pub fn lambda_lower_bound_chain(tau: &SiegelPoint, gprime: usize, u: f64) -> Result<f64> {
    if !in_siegel_set(tau, u) {
        return Err(GeomError::NotInSiegelSet(u));
    }
    let (l, d) = lower_jacobi(tau, gprime)?;
    let h = d.len() as i32;
    Ok(d[0] / (u.powi(h - 1).max(1.0) * unit_lower_inverse_norm(&l)?.powi(2)))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CollapseBounds {
    pub lambda_min: f64,
    pub lambda_window: (f64, f64),
    pub delta: f64,
    pub gh_upper: f64,
    pub c_tau: f64,
    pub d_gp1: f64,
}

/// Certified collapse bounds on the ball `B(τ_n, R)`.
pub fn collapse_bounds(
    tau: &SiegelPoint,
    gprime: usize,
    radius: f64,
    u: f64,
) -> Result<CollapseBounds> {
    if !(radius >= 0.0) {
        return Err(GeomError::InvalidParameter(format!(
            "radius must be nonnegative, got {radius}"
        )));
    }
    if gprime >= tau.g() {
        return Err(GeomError::DimensionMismatch(format!(
            "need 0 <= g' < g, got g' = {gprime}"
        )));
    }
    if !deep_neighborhood(tau, gprime, 1.0, u) {
        return Err(GeomError::NotDeepEnough(format!(
            "need τ in the Siegel set for u = {u} with d_{{g'+1}} > 1"
        )));
    }
    let d_gp1 = siegel_coords(tau)?.d[gprime];
    let base = project(tau, gprime)?;
    let lam = lambda_min(base.t.as_mat())?;
    let k = (std::f64::consts::SQRT_2 * radius).exp();
    let window = (lam / k, lam * k);
    let consts = FiberConstants::reduced(&base.yp(), base.g2()).inflate(radius);
    let c = consts.c_tau(window.0);
    let delta = c * (radius / std::f64::consts::SQRT_2).exp() / lam.sqrt();
    Ok(CollapseBounds {
        lambda_min: lam,
        lambda_window: window,
        delta,
        gh_upper: delta / 2.0,
        c_tau: c,
        d_gp1,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn pt(x: &[Vec<f64>], y: &[Vec<f64>]) -> SiegelPoint {
        SiegelPoint::from_rows(x, y).unwrap()
    }

    #[test]
    fn project_examples() {
        let b = project(&SiegelPoint::i_identity(3), 1).unwrap();
        assert_eq!(b.t, SpdMat::identity(2));
        assert_eq!(b.tau_p, Some(SiegelPoint::i_identity(1)));
        let tau = pt(
            &[vec![0.0, 0.0], vec![0.0, 0.0]],
            &[vec![1.0, 1.0], vec![1.0, 3.0]],
        );
        assert!((project(&tau, 1).unwrap().t.as_mat()[(0, 0)] - 2.0).abs() < 1e-15);
        let tau = pt(
            &[vec![0.0, 0.0], vec![0.0, 0.0]],
            &[vec![1.0, 2.0], vec![2.0, 5.0]],
        );
        assert!((project(&tau, 1).unwrap().t.as_mat()[(0, 0)] - 1.0).abs() < 1e-15);
        assert!(conjugator_identities(&tau, 1).unwrap() < 1e-13);
        assert_eq!(
            conjugator_identities(&SiegelPoint::i_identity(3), 2).unwrap(),
            0.0
        );
        assert!(project(&tau, 2).is_err());
    }

    #[test]
    fn g_prime_zero_projection_is_y() {
        let tau = pt(
            &[vec![0.1, 0.2], vec![0.2, 0.3]],
            &[vec![2.0, 1.0], vec![1.0, 1.0]],
        );
        let b = project(&tau, 0).unwrap();
        assert!(b.tau_p.is_none());
        assert_eq!(b.t.as_mat(), tau.y().as_mat());
    }

    #[test]
    fn vertical_norm_at_identity() {
        let (a, b, c) = (0.3, -0.7, 1.1);
        let tau = SiegelPoint::i_identity(2);
        let v = TangentVec::from_mats(
            Mat::from_row_slice(2, 2, &[0.0, a, a, c]),
            Mat::from_row_slice(2, 2, &[0.0, b, b, 0.0]),
        )
        .unwrap();
        assert!(is_vertical(&tau, &v, 1, 1e-14));
        let n = vertical_norm_sq(&tau, &v, 1).unwrap();
        assert!((n - (a * a + b * b + 0.5 * c * c)).abs() < 1e-15);
        assert!((wp_norm_sq(&tau, &v).unwrap() - n).abs() < 1e-15);
        let bad = TangentVec::from_mats(
            Mat::zeros(2, 2),
            Mat::from_row_slice(2, 2, &[1.0, 0.0, 0.0, 0.0]),
        )
        .unwrap();
        assert!(!is_vertical(&tau, &bad, 1, 1e-9));
        assert!(matches!(
            vertical_norm_sq(&tau, &bad, 1),
            Err(GeomError::NotVertical(_))
        ));
    }

    #[test]
    fn assemble_round_trip() {
        let tau = pt(
            &[
                vec![0.1, 0.2, -0.3],
                vec![0.2, 0.5, 0.1],
                vec![-0.3, 0.1, 0.0],
            ],
            &[
                vec![2.0, 0.3, 0.4],
                vec![0.3, 5.0, 1.0],
                vec![0.4, 1.0, 7.0],
            ],
        );
        for gp in 0..3 {
            let b = project(&tau, gp).unwrap();
            let f = FiberCoords::of(&tau, gp).unwrap();
            let back = assemble(&b, &f).unwrap();
            assert!((back.y().as_mat() - tau.y().as_mat()).norm() < 1e-13);
            assert!((back.x().as_mat() - tau.x().as_mat()).norm() < 1e-15);
            assert_eq!(FiberCoords::from_vec(gp, 3 - gp, &f.to_vec()), f);
            assert_eq!(vertical_basis(&tau, gp).unwrap().len(), f.dim());
        }
    }

    #[test]
    fn fiber_path_examples() {
        let tau = SiegelPoint::i_identity(2);
        assert_eq!(fiber_path_length(&tau, &tau, 1).unwrap(), 0.0);
        let delta = 0.8;
        let q = pt(
            &[vec![0.0, 0.0], vec![0.0, delta]],
            &[vec![1.0, 0.0], vec![0.0, 1.0]],
        );
        let l = fiber_path_length(&tau, &q, 1).unwrap();
        assert!((l - delta / std::f64::consts::SQRT_2).abs() < 1e-15);
        let far = pt(
            &[vec![0.0, 0.0], vec![0.0, 0.0]],
            &[vec![1.0, 0.0], vec![0.0, 2.0]],
        );
        assert!(matches!(
            fiber_path_length(&tau, &far, 1),
            Err(GeomError::BaseMismatch(_))
        ));
    }

    #[test]
    fn lambda_bound_examples() {
        let tau = pt(
            &[vec![0.0, 0.0], vec![0.0, 0.0]],
            &[vec![1.0, 0.0], vec![0.0, 100.0]],
        );
        assert_eq!(lambda_lower_bound(&tau, 1, 2.0).unwrap(), 100.0);
        let tau = pt(
            &[vec![0.0; 3], vec![0.0; 3], vec![0.0; 3]],
            &[
                vec![1.0, 0.0, 0.0],
                vec![0.0, 3.0, 0.0],
                vec![0.0, 0.0, 5.0],
            ],
        );
        assert_eq!(lambda_lower_bound(&tau, 1, 2.0).unwrap(), 3.0);
    }

    #[test]
    fn collapse_bound_examples() {
        let tau = pt(
            &[vec![0.0, 0.0], vec![0.0, 0.0]],
            &[vec![1.0, 0.0], vec![0.0, 64.0]],
        );
        let b0 = collapse_bounds(&tau, 1, 0.0, 2.0).unwrap();
        assert_eq!(b0.lambda_window, (64.0, 64.0));
        let tau2 = pt(
            &[vec![0.0, 0.0], vec![0.0, 0.0]],
            &[vec![1.0, 0.0], vec![0.0, 128.0]],
        );
        let b1 = collapse_bounds(&tau, 1, 1.0, 2.0).unwrap();
        let b2 = collapse_bounds(&tau2, 1, 1.0, 2.0).unwrap();
        assert!((b2.delta / b1.delta - 0.5f64.sqrt()).abs() < 1e-12);
        assert!(matches!(
            collapse_bounds(&SiegelPoint::i_identity(2), 1, 1.0, 2.0),
            Err(GeomError::NotDeepEnough(_))
        ));
    }
}
