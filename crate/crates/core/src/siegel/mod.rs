//! The Siegel upper half-space `𝔖_g = {τ = X + iY : Y ≻ 0}` with the
//! Weil–Petersson metric `½ tr(Y⁻¹ dτ Y⁻¹ dτ̄)`.

mod geodesic;

pub use geodesic::{exp_geodesic, geodesic, takagi, Geodesic};

use serde::{Deserialize, Serialize};

use crate::error::{GeomError, Result};
use crate::linalg::{mat_from_rows, rows_of, trace_prod, CMat, Mat, SpdMat, SymMat};
use crate::tol::{COND_MAX, SYMP_TOL};

/// A point `τ = X + iY` of 𝔖_g.
#[derive(Debug, Clone, PartialEq)]
pub struct SiegelPoint {
    x: SymMat,
    y: SpdMat,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SiegelPointJson {
    pub g: usize,
    #[serde(rename = "X")]
    pub x: Vec<Vec<f64>>,
    #[serde(rename = "Y")]
    pub y: Vec<Vec<f64>>,
}

impl SiegelPoint {
    pub fn new(x: SymMat, y: SpdMat) -> Result<Self> {
        if x.dim() != y.dim() {
            return Err(GeomError::DimensionMismatch(format!(
                "X is {0}x{0} but Y is {1}x{1}",
                x.dim(),
                y.dim()
            )));
        }
        Ok(SiegelPoint { x, y })
    }

    pub fn from_mats(x: Mat, y: Mat) -> Result<Self> {
        Self::new(SymMat::new(x)?, SpdMat::from_mat(y)?)
    }

    pub fn from_rows(x: &[Vec<f64>], y: &[Vec<f64>]) -> Result<Self> {
        Self::from_mats(mat_from_rows(x)?, mat_from_rows(y)?)
    }

    /// `i·I_g`.
    pub fn i_identity(g: usize) -> Self {
        SiegelPoint {
            x: SymMat::zeros(g),
            y: SpdMat::identity(g),
        }
    }

    /// Pure imaginary point `iY`.
    pub fn imaginary(y: SpdMat) -> Self {
        SiegelPoint {
            x: SymMat::zeros(y.dim()),
            y,
        }
    }

    /// Build from a complex matrix produced by the numerics (symmetrized,
    /// imaginary part must still be positive definite).
    pub(crate) fn from_cmat(z: &CMat) -> Result<Self> {
        let x = SymMat::symmetrized(z.re.clone());
        let y = SpdMat::new(SymMat::symmetrized(z.im.clone())).map_err(|e| {
            GeomError::NumericallySingular(format!("imaginary part lost definiteness: {e}"))
        })?;
        Ok(SiegelPoint { x, y })
    }

    pub fn g(&self) -> usize {
        self.x.dim()
    }

    pub fn x(&self) -> &SymMat {
        &self.x
    }

    pub fn y(&self) -> &SpdMat {
        &self.y
    }

    pub fn tau(&self) -> CMat {
        CMat::new(self.x.as_mat().clone(), self.y.as_mat().clone())
    }

    /// Harish-Chandra map `Φ(τ) = (τ − iI)(τ + iI)⁻¹` into the bounded domain.
    pub fn harish_chandra(&self) -> Result<CMat> {
        cayley(&self.tau())
    }

    pub fn to_json(&self) -> SiegelPointJson {
        SiegelPointJson {
            g: self.g(),
            x: rows_of(self.x.as_mat()),
            y: rows_of(self.y.as_mat()),
        }
    }

    pub fn from_json(j: &SiegelPointJson) -> Result<Self> {
        let p = Self::from_rows(&j.x, &j.y)?;
        if p.g() != j.g {
            return Err(GeomError::DimensionMismatch(format!(
                "point declares g = {} but has dimension {}",
                j.g,
                p.g()
            )));
        }
        Ok(p)
    }
}

/// `(σ − iI)(σ + iI)⁻¹`.
pub(crate) fn cayley(s: &CMat) -> Result<CMat> {
    let n = s.nrows();
    let ii = CMat::i_identity(n);
    let num = s - &ii;
    let den = s + &ii;
    Ok(&num * &den.inverse()?)
}

/// Tangent vector `V = V_X + iV_Y` at a point of 𝔖_g.
#[derive(Debug, Clone, PartialEq)]
pub struct TangentVec {
    pub vx: SymMat,
    pub vy: SymMat,
}

impl TangentVec {
    pub fn new(vx: SymMat, vy: SymMat) -> Result<Self> {
        if vx.dim() != vy.dim() {
            return Err(GeomError::DimensionMismatch(
                "V_X and V_Y differ in dimension".into(),
            ));
        }
        Ok(TangentVec { vx, vy })
    }

    pub fn from_mats(vx: Mat, vy: Mat) -> Result<Self> {
        Self::new(SymMat::new(vx)?, SymMat::new(vy)?)
    }

    pub(crate) fn from_mats_unchecked(vx: Mat, vy: Mat) -> Self {
        TangentVec {
            vx: SymMat::symmetrized(vx),
            vy: SymMat::symmetrized(vy),
        }
    }

    pub fn zero(g: usize) -> Self {
        TangentVec {
            vx: SymMat::zeros(g),
            vy: SymMat::zeros(g),
        }
    }

    pub fn dim(&self) -> usize {
        self.vx.dim()
    }

    pub fn as_cmat(&self) -> CMat {
        CMat::new(self.vx.as_mat().clone(), self.vy.as_mat().clone())
    }

    pub fn scale(&self, c: f64) -> TangentVec {
        TangentVec {
            vx: self.vx.scale(c),
            vy: self.vy.scale(c),
        }
    }

    pub fn add(&self, o: &TangentVec) -> TangentVec {
        TangentVec::from_mats_unchecked(
            self.vx.as_mat() + o.vx.as_mat(),
            self.vy.as_mat() + o.vy.as_mat(),
        )
    }

    pub fn frobenius_norm_sq(&self) -> f64 {
        self.vx.as_mat().norm_squared() + self.vy.as_mat().norm_squared()
    }
}

/// Block matrix `[[A, B], [C, D]]` in Sp(2g, ℝ).
#[derive(Debug, Clone, PartialEq)]
pub struct SymplecticMat {
    a: Mat,
    b: Mat,
    c: Mat,
    d: Mat,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SymplecticMatJson {
    pub g: usize,
    #[serde(rename = "A")]
    pub a: Vec<Vec<f64>>,
    #[serde(rename = "B")]
    pub b: Vec<Vec<f64>>,
    #[serde(rename = "C")]
    pub c: Vec<Vec<f64>>,
    #[serde(rename = "D")]
    pub d: Vec<Vec<f64>>,
}

impl SymplecticMat {
    pub fn from_blocks(a: Mat, b: Mat, c: Mat, d: Mat) -> Result<Self> {
        let g = a.nrows();
        for m in [&a, &b, &c, &d] {
            if m.shape() != (g, g) {
                return Err(GeomError::DimensionMismatch(
                    "symplectic blocks must be g x g".into(),
                ));
            }
        }
        let m = SymplecticMat { a, b, c, d };
        if !is_symplectic(&m.full())? {
            return Err(GeomError::InvalidParameter(
                "matrix is not symplectic".into(),
            ));
        }
        Ok(m)
    }

    pub fn from_full(m: &Mat) -> Result<Self> {
        if m.nrows() != m.ncols() || m.nrows() % 2 != 0 {
            return Err(GeomError::DimensionMismatch(
                "expected a 2g x 2g matrix".into(),
            ));
        }
        let g = m.nrows() / 2;
        Self::from_blocks(
            m.view((0, 0), (g, g)).into_owned(),
            m.view((0, g), (g, g)).into_owned(),
            m.view((g, 0), (g, g)).into_owned(),
            m.view((g, g), (g, g)).into_owned(),
        )
    }

    pub fn identity(g: usize) -> Self {
        SymplecticMat {
            a: Mat::identity(g, g),
            b: Mat::zeros(g, g),
            c: Mat::zeros(g, g),
            d: Mat::identity(g, g),
        }
    }

    /// `[[0, −I], [I, 0]]`, acting as `τ ↦ −τ⁻¹`.
    pub fn inversion(g: usize) -> Self {
        SymplecticMat {
            a: Mat::zeros(g, g),
            b: -Mat::identity(g, g),
            c: Mat::identity(g, g),
            d: Mat::zeros(g, g),
        }
    }

    /// `τ ↦ τ + B` for symmetric `B`.
    pub fn translation(b: &SymMat) -> Self {
        let g = b.dim();
        SymplecticMat {
            a: Mat::identity(g, g),
            b: b.as_mat().clone(),
            c: Mat::zeros(g, g),
            d: Mat::identity(g, g),
        }
    }

    /// `τ ↦ U τ Uᵗ` for invertible `U`.
    pub fn congruence(u: &Mat) -> Result<Self> {
        let g = u.nrows();
        let uinv = u.clone().try_inverse().ok_or_else(|| {
            GeomError::NumericallySingular("congruence matrix not invertible".into())
        })?;
        Ok(SymplecticMat {
            a: u.clone(),
            b: Mat::zeros(g, g),
            c: Mat::zeros(g, g),
            d: uinv.transpose(),
        })
    }

    pub fn g(&self) -> usize {
        self.a.nrows()
    }

    pub fn blocks(&self) -> (&Mat, &Mat, &Mat, &Mat) {
        (&self.a, &self.b, &self.c, &self.d)
    }

    pub fn full(&self) -> Mat {
        let g = self.g();
        let mut m = Mat::zeros(2 * g, 2 * g);
        m.view_mut((0, 0), (g, g)).copy_from(&self.a);
        m.view_mut((0, g), (g, g)).copy_from(&self.b);
        m.view_mut((g, 0), (g, g)).copy_from(&self.c);
        m.view_mut((g, g), (g, g)).copy_from(&self.d);
        m
    }

    /// `self · other`; the action satisfies `act(M₁M₂, τ) = act(M₁, act(M₂, τ))`.
    pub fn compose(&self, other: &SymplecticMat) -> SymplecticMat {
        SymplecticMat {
            a: &self.a * &other.a + &self.b * &other.c,
            b: &self.a * &other.b + &self.b * &other.d,
            c: &self.c * &other.a + &self.d * &other.c,
            d: &self.c * &other.b + &self.d * &other.d,
        }
    }

    /// `M⁻¹ = [[Dᵗ, −Bᵗ], [−Cᵗ, Aᵗ]]`.
    pub fn inverse(&self) -> SymplecticMat {
        SymplecticMat {
            a: self.d.transpose(),
            b: -self.b.transpose(),
            c: -self.c.transpose(),
            d: self.a.transpose(),
        }
    }

    pub fn to_json(&self) -> SymplecticMatJson {
        SymplecticMatJson {
            g: self.g(),
            a: rows_of(&self.a),
            b: rows_of(&self.b),
            c: rows_of(&self.c),
            d: rows_of(&self.d),
        }
    }

    pub fn from_json(j: &SymplecticMatJson) -> Result<Self> {
        let m = Self::from_blocks(
            mat_from_rows(&j.a)?,
            mat_from_rows(&j.b)?,
            mat_from_rows(&j.c)?,
            mat_from_rows(&j.d)?,
        )?;
        if m.g() != j.g {
            return Err(GeomError::DimensionMismatch(
                "declared g does not match blocks".into(),
            ));
        }
        Ok(m)
    }
}

fn standard_j(g: usize) -> Mat {
    let mut j = Mat::zeros(2 * g, 2 * g);
    for i in 0..g {
        j[(i, g + i)] = 1.0;
        j[(g + i, i)] = -1.0;
    }
    j
}

/// `‖MᵗJM − J‖_F ≤ sympTol·max(1, ‖M‖_F²)`.
pub fn is_symplectic(m: &Mat) -> Result<bool> {
    if m.nrows() != m.ncols() || m.nrows() % 2 != 0 || m.nrows() == 0 {
        return Err(GeomError::DimensionMismatch(
            "expected a square matrix of even dimension".into(),
        ));
    }
    let j = standard_j(m.nrows() / 2);
    let resid = (m.transpose() * &j * m - &j).norm();
    Ok(resid <= SYMP_TOL * m.norm_squared().max(1.0))
}

fn factor_of_automorphy(m: &SymplecticMat, tau: &SiegelPoint) -> Result<CMat> {
    if m.g() != tau.g() {
        return Err(GeomError::DimensionMismatch(
            "matrix and point differ in g".into(),
        ));
    }
    let cd = CMat::new(&m.c * tau.x.as_mat() + &m.d, &m.c * tau.y.as_mat());
    let (inv, cond) = cd.inverse_with_cond()?;
    if cond > COND_MAX {
        return Err(GeomError::NumericallySingular(format!(
            "cond(Cτ + D) = {cond:.3e}"
        )));
    }
    Ok(inv)
}

/// `M·τ = (Aτ + B)(Cτ + D)⁻¹`.
pub fn act(m: &SymplecticMat, tau: &SiegelPoint) -> Result<SiegelPoint> {
    let inv = factor_of_automorphy(m, tau)?;
    let ab = CMat::new(&m.a * tau.x.as_mat() + &m.b, &m.a * tau.y.as_mat());
    SiegelPoint::from_cmat(&(&ab * &inv))
}

/// Differential of the action: `V ↦ ᵗ(Cτ + D)⁻¹ V (Cτ + D)⁻¹`.
pub fn push_forward(m: &SymplecticMat, tau: &SiegelPoint, v: &TangentVec) -> Result<TangentVec> {
    if v.dim() != tau.g() {
        return Err(GeomError::DimensionMismatch(
            "tangent vector and point differ in g".into(),
        ));
    }
    let inv = factor_of_automorphy(m, tau)?;
    let out = &(&inv.transpose() * &v.as_cmat()) * &inv;
    Ok(TangentVec::from_mats_unchecked(out.re, out.im))
}

/// Polarized metric `½(tr(Y⁻¹A_X Y⁻¹B_X) + tr(Y⁻¹A_Y Y⁻¹B_Y))`.
pub fn wp_inner(tau: &SiegelPoint, a: &TangentVec, b: &TangentVec) -> Result<f64> {
    let g = tau.g();
    if a.dim() != g || b.dim() != g {
        return Err(GeomError::DimensionMismatch(
            "tangent vector and point differ in g".into(),
        ));
    }
    let yi = tau.y.inverse();
    let yi = yi.as_mat();
    let ax = yi * a.vx.as_mat();
    let ay = yi * a.vy.as_mat();
    let bx = yi * b.vx.as_mat();
    let by = yi * b.vy.as_mat();
    Ok(0.5 * (trace_prod(&ax, &bx) + trace_prod(&ay, &by)))
}

pub fn wp_norm_sq(tau: &SiegelPoint, v: &TangentVec) -> Result<f64> {
    Ok(wp_inner(tau, v, v)?.max(0.0))
}

/// Number of complex coordinates `τ_ij`, `i ≤ j`.
pub fn coord_count(g: usize) -> usize {
    g * (g + 1) / 2
}

/// `(i, j)` with `i ≤ j` for each complex coordinate, in row-major upper order.
pub fn coord_index(g: usize) -> Vec<(usize, usize)> {
    let mut out = Vec::with_capacity(coord_count(g));
    for i in 0..g {
        for j in i..g {
            out.push((i, j));
        }
    }
    out
}

/// Unit symmetric matrix `E_ij + E_ji` (or `E_ii`) of coordinate `(i, j)`.
pub(crate) fn coord_unit(g: usize, (i, j): (usize, usize)) -> Mat {
    let mut e = Mat::zeros(g, g);
    e[(i, j)] = 1.0;
    e[(j, i)] = 1.0;
    e
}

/// Closed-form Hermitian coefficients `h_ab̄ = ¼ tr(Y⁻¹E_a Y⁻¹E_b)` of the metric in the
/// coordinates `z_a = τ_ij`.
pub fn wp_coefficients(tau: &SiegelPoint) -> Mat {
    let g = tau.g();
    let yi = tau.y.inverse();
    let idx = coord_index(g);
    let prods: Vec<Mat> = idx
        .iter()
        .map(|&c| yi.as_mat() * coord_unit(g, c))
        .collect();
    let n = idx.len();
    Mat::from_fn(n, n, |a, b| 0.25 * trace_prod(&prods[a], &prods[b]))
}

fn potential(y: &Mat) -> Option<f64> {
    let ch = y.clone().cholesky()?;
    let l = ch.l();
    Some(-2.0 * (0..y.nrows()).map(|i| l[(i, i)].ln()).sum::<f64>())
}

/// Central-difference complex Hessian `∂_a ∂_b̄ K` of `K(τ) = −log det Im τ`,
/// returned as `(real part, imaginary part)`.
pub fn potential_hessian_fd(tau: &SiegelPoint, h: f64) -> (Mat, Mat) {
    let g = tau.g();
    let idx = coord_index(g);
    let n = idx.len();
    let y0 = tau.y.as_mat().clone();
    // Real coordinates: 0..n are x_a, n..2n are y_a. K only sees Y.
    let eval = |steps: &[(usize, f64)]| -> f64 {
        let mut y = y0.clone();
        for &(k, s) in steps {
            if k >= n {
                let (i, j) = idx[k - n];
                y[(i, j)] += s;
                if i != j {
                    y[(j, i)] += s;
                }
            }
        }
        potential(&y).unwrap_or(f64::NAN)
    };
    let f0 = eval(&[]);
    let mut hess = Mat::zeros(2 * n, 2 * n);
    for u in 0..2 * n {
        for v in u..2 * n {
            let val = if u == v {
                (eval(&[(u, h)]) - 2.0 * f0 + eval(&[(u, -h)])) / (h * h)
            } else {
                (eval(&[(u, h), (v, h)]) - eval(&[(u, h), (v, -h)]) - eval(&[(u, -h), (v, h)])
                    + eval(&[(u, -h), (v, -h)]))
                    / (4.0 * h * h)
            };
            hess[(u, v)] = val;
            hess[(v, u)] = val;
        }
    }
    let re = Mat::from_fn(n, n, |a, b| 0.25 * (hess[(a, b)] + hess[(n + a, n + b)]));
    let im = Mat::from_fn(n, n, |a, b| 0.25 * (hess[(a, n + b)] - hess[(n + a, b)]));
    (re, im)
}

/// Sup-norm deviation between the finite-difference Hessian of the Kähler potential and
/// the closed-form metric coefficients.
pub fn potential_hessian_check(tau: &SiegelPoint, h: f64) -> f64 {
    let (re, im) = potential_hessian_fd(tau, h);
    let exact = wp_coefficients(tau);
    let dre = (re - exact).amax();
    let dim = im.amax();
    dre.max(dim)
}

/// Invariant distance, computed by moving `τ1` to `iI` and reading the singular values
/// `ζ_k` of the Cayley image of `τ2`: `d = √2·(Σ atanh² ζ_k)^{1/2}`.
pub fn siegel_distance(t1: &SiegelPoint, t2: &SiegelPoint) -> Result<f64> {
    if t1.g() != t2.g() {
        return Err(GeomError::DimensionMismatch("points differ in g".into()));
    }
    let z = geodesic::disk_image(t1, t2)?;
    let (zeta, _) = takagi(&z)?;
    let mut s = 0.0;
    for &k in &zeta {
        if k >= 1.0 - 1e-15 {
            return Err(GeomError::NumericallySingular(format!(
                "cross-ratio eigenvalue {:.17} too close to 1",
                k * k
            )));
        }
        let a = k.max(0.0).atanh();
        s += a * a;
    }
    Ok(std::f64::consts::SQRT_2 * s.sqrt())
}

/// Cross-ratio `R = (τ1−τ2)(τ1−τ̄2)⁻¹(τ̄1−τ̄2)(τ̄1−τ2)⁻¹`; its eigenvalues are the squared
/// singular values used by [`siegel_distance`].
pub fn cross_ratio(t1: &SiegelPoint, t2: &SiegelPoint) -> Result<CMat> {
    let a = t1.tau();
    let b = t2.tau();
    let d = &a - &b;
    let e = (&a - &b.conj()).inverse()?;
    let f = &a.conj() - &b.conj();
    let h = (&a.conj() - &b).inverse()?;
    Ok(&(&(&d * &e) * &f) * &h)
}

/// Length of a sampled curve by the midpoint rule on each straight segment.
pub fn curve_length(path: &[SiegelPoint]) -> Result<f64> {
    if path.len() < 2 {
        return Err(GeomError::InvalidParameter(
            "a path needs at least two samples".into(),
        ));
    }
    let g = path[0].g();
    let mut total = 0.0;
    for w in path.windows(2) {
        if w[1].g() != g {
            return Err(GeomError::DimensionMismatch(
                "path samples differ in g".into(),
            ));
        }
        let seg = segment_length(&w[0], &w[1])?;
        if seg > 0.1 {
            return Err(GeomError::SamplesTooCoarse(seg));
        }
        total += seg;
    }
    Ok(total)
}

/// Midpoint-rule length of the straight segment between two points.
pub(crate) fn segment_length(p: &SiegelPoint, q: &SiegelPoint) -> Result<f64> {
    let mx = (p.x.as_mat() + q.x.as_mat()) * 0.5;
    let my = (p.y.as_mat() + q.y.as_mat()) * 0.5;
    let mid = SiegelPoint {
        x: SymMat::symmetrized(mx),
        y: SpdMat::new(SymMat::symmetrized(my))?,
    };
    let v =
        TangentVec::from_mats_unchecked(q.x.as_mat() - p.x.as_mat(), q.y.as_mat() - p.y.as_mat());
    Ok(wp_norm_sq(&mid, &v)?.sqrt())
}
