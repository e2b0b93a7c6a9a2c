//! Degenerating sequences `τ_n = X + i L diag(d_i(n)) Lᵗ`.

use serde::{Deserialize, Serialize};

use crate::error::{GeomError, Result};
use crate::linalg::{mat_from_rows, rows_of, Mat, SymMat};
use crate::reduction::in_siegel_set;
use crate::siegel::{SiegelPoint, SiegelPointJson};

/// Growth law of one Jacobi pivot.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum Profile {
    /// `c`
    Constant { c: f64 },
    /// `c·ρⁿ`
    Geometric { c: f64, rho: f64 },
    /// `base + c·ρⁿ`
    Mixed { c: f64, rho: f64, base: f64 },
}

impl Profile {
    pub fn value(&self, n: u32) -> f64 {
        match *self {
            Profile::Constant { c } => c,
            Profile::Geometric { c, rho } => c * rho.powi(n as i32),
            Profile::Mixed { c, rho, base } => base + c * rho.powi(n as i32),
        }
    }

    /// Growth rate `ρ` and leading coefficient of a divergent profile.
    pub fn divergence(&self) -> Option<(f64, f64)> {
        match *self {
            Profile::Geometric { c, rho } | Profile::Mixed { c, rho, .. }
                if rho > 1.0 && c > 0.0 =>
            {
                Some((rho, c))
            }
            _ => None,
        }
    }

    /// Positive limit of a convergent profile.
    pub fn limit(&self) -> Option<f64> {
        let l = match *self {
            Profile::Constant { c } => c,
            Profile::Geometric { c, rho: 1.0 } => c,
            Profile::Mixed { base, rho, .. } if rho.abs() < 1.0 => base,
            Profile::Mixed { c, rho: 1.0, base } => base + c,
            _ => return None,
        };
        (l > 0.0).then_some(l)
    }
}

/// Recipe for a sequence approaching the boundary component 𝔖_{g'}.
#[derive(Debug, Clone, PartialEq)]
pub struct DegenerationSpec {
    pub g: usize,
    pub gprime: usize,
    /// `τ'_∞`; `None` when `g' = 0`.
    pub anchor: Option<SiegelPoint>,
    pub l_fixed: Mat,
    pub x_fixed: SymMat,
    pub profiles: Vec<Profile>,
    pub u: f64,
    pub seed: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DegenerationSpecJson {
    pub g: usize,
    pub gprime: usize,
    #[serde(default)]
    pub anchor: Option<SiegelPointJson>,
    #[serde(rename = "L_fixed")]
    pub l_fixed: Vec<Vec<f64>>,
    #[serde(rename = "X_fixed")]
    pub x_fixed: Vec<Vec<f64>>,
    pub profiles: Vec<Profile>,
    #[serde(default = "default_u")]
    pub u: f64,
    #[serde(default)]
    pub seed: u64,
}

fn default_u() -> f64 {
    2.0
}

impl DegenerationSpec {
    /// Validates shapes, unit-triangularity of `L`, the `|x|, |l| < u` clauses, the split of
    /// profiles into convergent (`i ≤ g'`) and divergent (`i > g'`) indices, and that the
    /// anchor equals the limit of the leading block.
    pub fn new(
        g: usize,
        gprime: usize,
        anchor: Option<SiegelPoint>,
        l_fixed: Mat,
        x_fixed: SymMat,
        profiles: Vec<Profile>,
        u: f64,
        seed: u64,
    ) -> Result<Self> {
        let bad = |s: String| Err(GeomError::InvalidParameter(s));
        if g == 0 || gprime >= g {
            return bad(format!("need 0 <= g' < g, got g = {g}, g' = {gprime}"));
        }
        if !(u > 1.0) {
            return bad(format!("u must exceed 1, got {u}"));
        }
        if l_fixed.shape() != (g, g) || x_fixed.dim() != g || profiles.len() != g {
            return Err(GeomError::DimensionMismatch(
                "L_fixed, X_fixed and profiles must have size g".into(),
            ));
        }
        for i in 0..g {
            if l_fixed[(i, i)] != 1.0 || (i + 1..g).any(|j| l_fixed[(i, j)] != 0.0) {
                return bad("L_fixed must be unit lower-triangular".into());
            }
            if (0..i).any(|j| !(l_fixed[(i, j)].abs() < u)) {
                return bad("L_fixed entries must satisfy |l_ij| < u".into());
            }
        }
        if x_fixed.as_mat().iter().any(|v| !(v.abs() < u)) {
            return bad("X_fixed entries must satisfy |x_ij| < u".into());
        }
        for (i, p) in profiles.iter().enumerate() {
            if i < gprime && p.limit().is_none() {
                return bad(format!(
                    "profile {} must converge to a positive limit",
                    i + 1
                ));
            }
            if i >= gprime && p.divergence().is_none() {
                return bad(format!("profile {} must diverge", i + 1));
            }
        }
        match (&anchor, gprime) {
            (None, 0) => {}
            (Some(a), gp) if gp > 0 && a.g() == gp => {
                let lim = limit_leading_block(&l_fixed, &x_fixed, &profiles, gp)?;
                let err = (a.x().as_mat() - lim.x().as_mat()).norm()
                    + (a.y().as_mat() - lim.y().as_mat()).norm();
                if err > 1e-9 * (1.0 + lim.y().as_mat().norm()) {
                    return bad(format!(
                        "anchor differs from the limit of the leading block by {err:.3e}"
                    ));
                }
            }
            _ => {
                return Err(GeomError::DimensionMismatch(
                    "anchor must have dimension g'".into(),
                ))
            }
        }
        Ok(DegenerationSpec {
            g,
            gprime,
            anchor,
            l_fixed,
            x_fixed,
            profiles,
            u,
            seed,
        })
    }

    /// Builds the spec with the anchor computed from the convergent profiles.
    pub fn with_derived_anchor(
        g: usize,
        gprime: usize,
        l_fixed: Mat,
        x_fixed: SymMat,
        profiles: Vec<Profile>,
        u: f64,
        seed: u64,
    ) -> Result<Self> {
        let anchor = if gprime == 0 {
            None
        } else {
            if profiles.len() != g || l_fixed.shape() != (g, g) || x_fixed.dim() != g {
                return Err(GeomError::DimensionMismatch(
                    "L_fixed, X_fixed and profiles must have size g".into(),
                ));
            }
            if let Some(i) = (0..gprime).find(|&i| profiles[i].limit().is_none()) {
                return Err(GeomError::InvalidParameter(format!(
                    "profile {} must converge",
                    i + 1
                )));
            }
            Some(limit_leading_block(&l_fixed, &x_fixed, &profiles, gprime)?)
        };
        Self::new(g, gprime, anchor, l_fixed, x_fixed, profiles, u, seed)
    }

    pub fn from_json(j: &DegenerationSpecJson) -> Result<Self> {
        let anchor = j.anchor.as_ref().map(SiegelPoint::from_json).transpose()?;
        let l = mat_from_rows(&j.l_fixed)?;
        let x = SymMat::new(mat_from_rows(&j.x_fixed)?)?;
        match anchor {
            Some(a) => Self::new(
                j.g,
                j.gprime,
                Some(a),
                l,
                x,
                j.profiles.clone(),
                j.u,
                j.seed,
            ),
            None => Self::with_derived_anchor(j.g, j.gprime, l, x, j.profiles.clone(), j.u, j.seed),
        }
    }

    pub fn to_json(&self) -> DegenerationSpecJson {
        DegenerationSpecJson {
            g: self.g,
            gprime: self.gprime,
            anchor: self.anchor.as_ref().map(SiegelPoint::to_json),
            l_fixed: rows_of(&self.l_fixed),
            x_fixed: rows_of(self.x_fixed.as_mat()),
            profiles: self.profiles.clone(),
            u: self.u,
            seed: self.seed,
        }
    }

    /// Geometric spec with `L = I`, `X = 0`, `d_i = c_i` for `i ≤ g'` and
    /// `d_i = c_i·ρⁿ` beyond.
    pub fn geometric(
        g: usize,
        gprime: usize,
        coeffs: &[f64],
        rho: f64,
        u: f64,
        seed: u64,
    ) -> Result<Self> {
        let profiles = coeffs
            .iter()
            .enumerate()
            .map(|(i, &c)| {
                if i < gprime {
                    Profile::Constant { c }
                } else {
                    Profile::Geometric { c, rho }
                }
            })
            .collect();
        Self::with_derived_anchor(
            g,
            gprime,
            Mat::identity(g, g),
            SymMat::zeros(g),
            profiles,
            u,
            seed,
        )
    }

    pub fn pivots(&self, n: u32) -> Vec<f64> {
        self.profiles.iter().map(|p| p.value(n)).collect()
    }

    /// Limits `k_ij = lim d_i/d_j` over divergent indices (0-based, relative to `g'`), or
    /// `None` when some ratio tends to 0 or ∞.
    pub fn k_ratios(&self) -> Option<Mat> {
        let div: Vec<(f64, f64)> = self.profiles[self.gprime..]
            .iter()
            .map(|p| p.divergence())
            .collect::<Option<_>>()?;
        let rho = div[0].0;
        if div.iter().any(|&(r, _)| (r - rho).abs() > 1e-15 * rho) {
            return None;
        }
        let h = div.len();
        Some(Mat::from_fn(h, h, |i, j| div[i].1 / div[j].1))
    }

    pub fn is_nondegenerate(&self) -> bool {
        self.k_ratios().is_some()
    }

    /// `t̄_∞ = L'' diag(k_{g'+1,g}, …, 1) ᵗL''`.
    pub fn t_bar_limit(&self) -> Result<Mat> {
        let k = self.k_ratios().ok_or(GeomError::DegenerateDirection)?;
        let h = self.g - self.gprime;
        let l2 = self
            .l_fixed
            .view((self.gprime, self.gprime), (h, h))
            .into_owned();
        let d = Mat::from_fn(h, h, |i, j| if i == j { k[(i, h - 1)] } else { 0.0 });
        Ok(&l2 * d * l2.transpose())
    }
}

fn limit_leading_block(
    l: &Mat,
    x: &SymMat,
    profiles: &[Profile],
    gp: usize,
) -> Result<SiegelPoint> {
    let lp = l.view((0, 0), (gp, gp)).into_owned();
    let d: Vec<f64> = profiles[..gp]
        .iter()
        .map(|p| {
            p.limit().ok_or_else(|| {
                GeomError::InvalidParameter("leading profile does not converge".into())
            })
        })
        .collect::<Result<_>>()?;
    let dm = Mat::from_diagonal(&nalgebra::DVector::from_vec(d));
    SiegelPoint::from_mats(
        x.as_mat().view((0, 0), (gp, gp)).into_owned(),
        &lp * dm * lp.transpose(),
    )
}

/// `τ_n = X_fixed + i L_fixed diag(d(n)) ᵗL_fixed`.
pub fn make_sequence(spec: &DegenerationSpec, n: u32) -> Result<SiegelPoint> {
    let d = spec.pivots(n);
    let u = spec.u;
    if !(1.0 < u * d[0]) {
        return Err(GeomError::SiegelChainViolated {
            n,
            detail: format!("1 < u·d_1 fails (d_1 = {})", d[0]),
        });
    }
    for i in 0..d.len() - 1 {
        if !(d[i] < u * d[i + 1]) {
            return Err(GeomError::SiegelChainViolated {
                n,
                detail: format!(
                    "d_{} = {} is not below u·d_{} = {}",
                    i + 1,
                    d[i],
                    i + 2,
                    u * d[i + 1]
                ),
            });
        }
    }
    let dm = Mat::from_diagonal(&nalgebra::DVector::from_vec(d));
    let y = &spec.l_fixed * dm * spec.l_fixed.transpose();
    let tau = SiegelPoint::from_mats(spec.x_fixed.as_mat().clone(), y)?;
    if !in_siegel_set(&tau, u) {
        return Err(GeomError::SiegelChainViolated {
            n,
            detail: "point left the Siegel set".into(),
        });
    }
    Ok(tau)
}
