//! Integral unipotent translations along the fiber.
//!
//! `τ ↦ AτAᵗ` with `A = [[I, 0], [ᵗm, I]]`, `m ∈ ℤ^{g'×g''}`, sends
//! `τ''' ↦ τ'm + τ'''` and `τ'' ↦ ᵗm τ' m + ᵗm τ''' + ᵗτ''' m + τ''`; together with the
//! integer translations of `X'''` and `X''` this generates the lattice acting on a fiber.

use super::{assemble, inv_or_empty, project, BasePoint, FiberCoords};
use crate::error::{GeomError, Result};
use crate::linalg::Mat;
use crate::siegel::SiegelPoint;

fn rounded(m: &Mat) -> Result<Mat> {
    if m.iter().any(|v| !v.is_finite() || v.abs() > 1e15) {
        return Err(GeomError::Overflow);
    }
    Ok(m.map(f64::round))
}

fn shift_unipotent(base: &BasePoint, f: &FiberCoords, m: &Mat) -> FiberCoords {
    let xp = base.xp();
    let yp = base.yp();
    let xpp = m.transpose() * &xp * m + m.transpose() * &f.xppp + f.xppp.transpose() * m + &f.xpp;
    FiberCoords {
        xppp: &f.xppp + &xp * m,
        yppp: &f.yppp + &yp * m,
        xpp: (&xpp + xpp.transpose()) * 0.5,
    }
}

/// Reduce `(e, q)` over a common base point: translate both so that `Y'''_e ∈ Y'·[−½, ½]`,
/// then move `q` within its orbit so that `ΔY''' ∈ Y'·[−½, ½]` and the entries of `ΔX'''`
/// and `ΔX''` are at most ½. The first step is an isometry applied to both points; the
/// remaining steps only change the representative of `q`.
pub fn reduce_fiber_pair(
    e: &SiegelPoint,
    q: &SiegelPoint,
    gprime: usize,
) -> Result<(SiegelPoint, SiegelPoint)> {
    let be = project(e, gprime)?;
    let bq = project(q, gprime)?;
    let fe = FiberCoords::of(e, gprime)?;
    let fq = FiberCoords::of(q, gprime)?;
    let (fe, fq) = reduce_coords(&be, fe, fq)?;
    Ok((assemble(&be, &fe)?, assemble(&bq, &fq)?))
}

pub(crate) fn reduce_coords(
    base: &BasePoint,
    fe: FiberCoords,
    fq: FiberCoords,
) -> Result<(FiberCoords, FiberCoords)> {
    let (mut fe, mut fq) = (fe, fq);
    if base.gprime() > 0 {
        let ypi = inv_or_empty(&base.yp());
        let m = -rounded(&(&ypi * &fe.yppp))?;
        fe = shift_unipotent(base, &fe, &m);
        fq = shift_unipotent(base, &fq, &m);
        let m = -rounded(&(&ypi * (&fq.yppp - &fe.yppp)))?;
        fq = shift_unipotent(base, &fq, &m);
        let n = rounded(&(&fq.xppp - &fe.xppp))?;
        fq.xppp -= n;
    }
    let n = rounded(&(&fq.xpp - &fe.xpp))?;
    fq.xpp -= n;
    Ok((fe, fq))
}
