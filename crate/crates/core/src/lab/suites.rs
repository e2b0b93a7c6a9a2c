//! Closed-form validation suites for `g = 1` and `g = 2` and the library property sweeps.

use serde::{Deserialize, Serialize};

use super::{measure_distortion, rate_fit, sample_ball};
use crate::error::Result;
use crate::horo::{
    assemble, conjugator_identities, dpi_pushforward, horizontal_part, vertical_basis,
    vertical_norm_sq, FiberCoords,
};
use crate::linalg::{Mat, SpdMat};
use crate::reduction::{reduce_sl2, reduce_spd, siegel_coords, spd_clauses};
use crate::rng;
use crate::sampling::{
    random_siegel_point, random_spd, random_sym, random_symplectic, random_tangent, uniform,
};
use crate::siegel::{
    act, curve_length, potential_hessian_check, push_forward, wp_inner, wp_norm_sq, SiegelPoint,
    TangentVec,
};
use crate::tropical::{
    normalize_basepoint, trwp_distance, trwp_geodesic, trwp_norm_sq, FlatTorusMetric, TropTangent,
};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Check {
    pub name: String,
    pub passed: bool,
    pub value: f64,
    pub tolerance: f64,
    pub detail: String,
}

impl Check {
    /// Passes iff `value ≤ tolerance`.
    pub fn at_most(name: &str, value: f64, tolerance: f64, detail: String) -> Self {
        Check {
            name: name.into(),
            passed: value <= tolerance,
            value,
            tolerance,
            detail,
        }
    }

    fn failed(name: &str, err: crate::GeomError) -> Self {
        Check {
            name: name.into(),
            passed: false,
            value: f64::NAN,
            tolerance: f64::NAN,
            detail: err.to_string(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SuiteReport {
    pub name: String,
    pub checks: Vec<Check>,
    pub passed: bool,
}

impl SuiteReport {
    fn new(name: &str, checks: Vec<Check>) -> Self {
        let passed = checks.iter().all(|c| c.passed);
        SuiteReport {
            name: name.into(),
            checks,
            passed,
        }
    }
}

fn run(name: &str, f: impl FnOnce() -> Result<Check>) -> Check {
    f().unwrap_or_else(|e| Check::failed(name, e))
}

fn gram(tau: &SiegelPoint, basis: &[TangentVec]) -> Result<Mat> {
    let n = basis.len();
    let mut g = Mat::zeros(n, n);
    for i in 0..n {
        for j in 0..n {
            g[(i, j)] = wp_inner(tau, &basis[i], &basis[j])?;
        }
    }
    Ok(g)
}

fn rel_err(a: &Mat, b: &Mat) -> f64 {
    (a - b).amax() / b.amax()
}

// ---------------------------------------------------------------- g = 1

fn upper(x: f64, y: f64) -> Result<SiegelPoint> {
    SiegelPoint::from_rows(&[vec![x]], &[vec![y]])
}

/// Pull-back of the metric through `(r, θ) ↦ θ + i e^r` against `½(dr² + e^{−2r}dθ²)`.
pub fn g1_coordinate_error(seed: u64, points: usize) -> Result<f64> {
    let mut worst = 0.0_f64;
    for k in 0..points {
        let mut rng = rng::stream(seed, 1, k as u64);
        let r = uniform(&mut rng, -3.0, 3.0);
        let th = uniform(&mut rng, -1.0, 1.0);
        let tau = upper(th, r.exp())?;
        let basis = [
            TangentVec::from_mats(Mat::zeros(1, 1), Mat::from_element(1, 1, r.exp()))?,
            TangentVec::from_mats(Mat::from_element(1, 1, 1.0), Mat::zeros(1, 1))?,
        ];
        let closed = Mat::from_row_slice(2, 2, &[0.5, 0.0, 0.0, 0.5 * (-2.0 * r).exp()]);
        worst = worst.max(rel_err(&gram(&tau, &basis)?, &closed));
    }
    Ok(worst)
}

/// Length of the horocycle `θ ∈ [0, 1]` at height `e^r`.
pub fn g1_circumference(r: f64) -> Result<f64> {
    let y = r.exp();
    let steps = 400;
    let path: Vec<SiegelPoint> = (0..=steps)
        .map(|k| upper(k as f64 / steps as f64, y))
        .collect::<Result<_>>()?;
    curve_length(&path)
}

/// Measured GH upper bounds `max_slack/2` along `τ_n = i e^{n}` and their slope in `r_n = n`.
pub fn g1_gh_series(
    radius: f64,
    m: usize,
    seed: u64,
    ns: std::ops::RangeInclusive<u32>,
) -> Result<Vec<(f64, f64)>> {
    let mut out = Vec::new();
    for n in ns {
        let tau = upper(0.0, (n as f64).exp())?;
        let samples = sample_ball(&tau, 0, radius, m, seed, n as u64, 2.0)?;
        let (rep, _) =
            measure_distortion(&tau, 0, radius, 2.0, n, &samples, super::DEFAULT_LIFT_STEPS)?;
        out.push((n as f64, rep.gh_upper_measured));
    }
    Ok(out)
}

pub fn g1_suite() -> SuiteReport {
    let seed = 11;
    let mut checks = Vec::new();
    checks.push(run("coordinate change (r, θ)", || {
        let e = g1_coordinate_error(seed, 100)?;
        Ok(Check::at_most(
            "coordinate change (r, θ)",
            e,
            1e-10,
            "100 points, relative sup error".into(),
        ))
    }));
    checks.push(run("circumference e^{-r}/√2", || {
        let mut worst = 0.0_f64;
        for r in [-1.0, 0.0, 1.5, 100f64.ln(), 6.0] {
            let c = g1_circumference(r)?;
            let exact = (-r).exp() / std::f64::consts::SQRT_2;
            worst = worst.max((c - exact).abs() / exact);
        }
        let d = g1_circumference(100f64.ln())?;
        Ok(Check::at_most(
            "circumference e^{-r}/√2",
            worst,
            1e-10,
            format!(
                "at r = log 100: circumference {d:.6e}, metric diameter {:.6e}",
                d / 2.0
            ),
        ))
    }));
    checks.push(run("GH upper decay slope in r", || {
        let radius = 0.25;
        let series = g1_gh_series(radius, 40, seed, 1..=10)?;
        let bound_ok = series
            .iter()
            .all(|&(r, gh)| 2.0 * gh <= (-r).exp() / std::f64::consts::SQRT_2);
        let pts: Vec<(f64, f64)> = series.iter().map(|&(r, v)| (r.exp(), v)).collect();
        let fit = rate_fit(&pts, (1, 10))?;
        let mut c = Check::at_most(
            "GH upper decay slope in r",
            (fit.slope + 1.0).abs(),
            0.05,
            format!(
                "slope {:.4}, r² {:.5}, slack within circumference: {bound_ok}",
                fit.slope, fit.r_squared
            ),
        );
        c.passed &= bound_ok;
        Ok(c)
    }));
    checks.push(run("basepoint renormalization", || {
        let ts: Vec<FlatTorusMetric> = (1..=10)
            .map(|n| Ok(FlatTorusMetric(SpdMat::from_diagonal(&[(n as f64).exp()])?)))
            .collect::<Result<_>>()?;
        let ds: Vec<f64> = (1..=10).map(|n| (n as f64).exp()).collect();
        let norm = normalize_basepoint(&ts, &ds)?;
        let mut worst = norm
            .iter()
            .map(|t| (t.0.as_mat()[(0, 0)] - 1.0).abs())
            .fold(0.0, f64::max);
        // Renormalization is an isometry of (ℝ⁺, dt²/2t²).
        let a = FlatTorusMetric(SpdMat::from_diagonal(&[3.0 * ds[4]])?);
        let b = FlatTorusMetric(SpdMat::from_diagonal(&[0.2 * ds[4]])?);
        let na = &normalize_basepoint(&[a.clone(), b.clone()], &[ds[4], ds[4]])?;
        worst = worst.max((trwp_distance(&a, &b)? - trwp_distance(&na[0], &na[1])?).abs());
        Ok(Check::at_most(
            "basepoint renormalization",
            worst,
            1e-12,
            "t_n ↦ t_n/d_1(τ_n) = 1".into(),
        ))
    }));
    SuiteReport::new("g1", checks)
}

// ---------------------------------------------------------------- g = 2

/// Chart `(θ₁, θ₂, θ₃, θ₄, r₁, r₂) ↦ X + i L diag(e^{r₁}, e^{r₂}) ᵗL` with
/// `X = [[θ₁, θ₂], [θ₂, θ₃]]`, `L = [[1, 0], [θ₄, 1]]`.
pub fn g2_chart(c: &[f64; 6]) -> Result<SiegelPoint> {
    let [x1, x2, x3, l, r1, r2] = *c;
    let (d1, d2) = (r1.exp(), r2.exp());
    SiegelPoint::from_rows(
        &[vec![x1, x2], vec![x2, x3]],
        &[vec![d1, l * d1], vec![l * d1, l * l * d1 + d2]],
    )
}

/// Chart coordinates of a `g = 2` point.
pub fn g2_coords(tau: &SiegelPoint) -> Result<[f64; 6]> {
    let c = siegel_coords(tau)?;
    let x = tau.x().as_mat();
    Ok([
        x[(0, 0)],
        x[(0, 1)],
        x[(1, 1)],
        c.l[(1, 0)],
        c.d[0].ln(),
        c.d[1].ln(),
    ])
}

/// Metric pulled back through [`g2_chart`] using the analytic Jacobian.
pub fn g2_pullback(c: &[f64; 6]) -> Result<Mat> {
    let tau = g2_chart(c)?;
    let [_, _, _, l, r1, r2] = *c;
    let (d1, d2) = (r1.exp(), r2.exp());
    let m = |a: [f64; 4]| Mat::from_row_slice(2, 2, &a);
    let z = Mat::zeros(2, 2);
    let basis = [
        TangentVec::from_mats(m([1.0, 0.0, 0.0, 0.0]), z.clone())?,
        TangentVec::from_mats(m([0.0, 1.0, 1.0, 0.0]), z.clone())?,
        TangentVec::from_mats(m([0.0, 0.0, 0.0, 1.0]), z.clone())?,
        TangentVec::from_mats(z.clone(), m([0.0, d1, d1, 2.0 * l * d1]))?,
        TangentVec::from_mats(z.clone(), m([d1, l * d1, l * d1, l * l * d1]))?,
        TangentVec::from_mats(z, m([0.0, 0.0, 0.0, d2]))?,
    ];
    gram(&tau, &basis)
}

/// Coefficient matrix of the closed-form `g = 2` tensor in the chart coordinates.
pub fn g2_displayed(c: &[f64; 6]) -> Mat {
    let [_, _, _, t4, r1, r2] = *c;
    let q = (r1 - r2).exp();
    let a = 1.0 + q * t4 * t4;
    let e12 = (-(r1 + r2)).exp();
    let e22 = (-2.0 * r2).exp();
    let mut g = Mat::zeros(6, 6);
    // ½[...] with off-diagonal terms split evenly between (i, j) and (j, i).
    g[(0, 0)] = 0.5 * a * a * (-2.0 * r1).exp();
    g[(1, 1)] = (1.0 + 2.0 * q * t4 * t4) * e12;
    g[(2, 2)] = 0.5 * e22;
    g[(3, 3)] = q;
    g[(4, 4)] = 0.5;
    g[(5, 5)] = 0.5;
    g[(0, 1)] = -t4 * a * e12;
    g[(0, 2)] = 0.5 * t4 * t4 * e22;
    g[(1, 2)] = -t4 * e22;
    for (i, j) in [(0, 1), (0, 2), (1, 2)] {
        g[(j, i)] = g[(i, j)];
    }
    g
}

/// `½(dr₁² + e^{−2r₁}dθ₁²) + ½dr₂²`.
pub fn g2_product_part(c: &[f64; 6]) -> Mat {
    let mut g = Mat::zeros(6, 6);
    g[(0, 0)] = 0.5 * (-2.0 * c[4]).exp();
    g[(4, 4)] = 0.5;
    g[(5, 5)] = 0.5;
    g
}

pub fn g2_tensor_error(seed: u64, points: usize) -> Result<f64> {
    let mut worst = 0.0_f64;
    for k in 0..points {
        let mut rng = rng::stream(seed, 2, k as u64);
        let r1 = uniform(&mut rng, -0.6, 2.0);
        let c = [
            uniform(&mut rng, -1.0, 1.0),
            uniform(&mut rng, -1.0, 1.0),
            uniform(&mut rng, -1.0, 1.0),
            uniform(&mut rng, -1.9, 1.9),
            r1,
            r1 + uniform(&mut rng, -0.6, 4.0),
        ];
        worst = worst.max(rel_err(&g2_pullback(&c)?, &g2_displayed(&c)));
    }
    Ok(worst)
}

/// Sup-norm of `g_WP − ½π*(g_ℋ + g_ℝ⁺)` over points whose base lies in the ball of radius
/// `R` around `π(i·diag(1, e^{r₂}))` and whose fiber coordinates lie in the reduced cell
/// `|x₂|, |x₃|, |l₂₁| ≤ ½`. The same offsets are used for every `r₂`.
pub fn g2_remainder_sup(r2: f64, radius: f64, m: usize, seed: u64) -> Result<f64> {
    let tau = g2_chart(&[0.0, 0.0, 0.0, 0.0, 0.0, r2])?;
    let samples = sample_ball(&tau, 1, radius, m, seed, 0, 2.0)?;
    let mut sup = 0.0_f64;
    for (k, s) in samples.iter().enumerate() {
        let mut rng = rng::stream(seed, 3, k as u64);
        let d1 = s.base.yp()[(0, 0)];
        let mut f = FiberCoords::zero(1, 1);
        f.xppp[(0, 0)] = uniform(&mut rng, -0.5, 0.5);
        f.yppp[(0, 0)] = d1 * uniform(&mut rng, -0.5, 0.5);
        f.xpp[(0, 0)] = uniform(&mut rng, -0.5, 0.5);
        let c = g2_coords(&assemble(&s.base, &f)?)?;
        sup = sup.max((g2_pullback(&c)? - g2_product_part(&c)).amax());
    }
    Ok(sup)
}

pub fn g2_suite() -> SuiteReport {
    let seed = 12;
    let mut checks = Vec::new();
    checks.push(run("displayed tensor vs pull-back", || {
        let e = g2_tensor_error(seed, 100)?;
        Ok(Check::at_most(
            "displayed tensor vs pull-back",
            e,
            1e-9,
            "100 Siegel-set points, relative sup error".into(),
        ))
    }));
    checks.push(run("remainder decay slope in r2", || {
        let series: Vec<(f64, f64)> = (2..=12)
            .map(|r2| {
                Ok((
                    (r2 as f64).exp(),
                    g2_remainder_sup(r2 as f64, 1.0, 40, seed)?,
                ))
            })
            .collect::<Result<_>>()?;
        let fit = rate_fit(&series, (2, 12))?;
        Ok(Check::at_most(
            "remainder decay slope in r2",
            (fit.slope + 1.0).abs(),
            0.1,
            format!("slope {:.4}, r² {:.5}", fit.slope, fit.r_squared),
        ))
    }));
    SuiteReport::new("g2", checks)
}

// ---------------------------------------------------------------- property sweeps

fn base_norm_sq(tau: &SiegelPoint, v: &TangentVec, gprime: usize) -> Result<f64> {
    let b = crate::horo::project(tau, gprime)?;
    let (a, w) = dpi_pushforward(tau, v, gprime)?;
    let na = match (&b.tau_p, &a) {
        (Some(p), Some(a)) => wp_norm_sq(p, a)?,
        _ => 0.0,
    };
    Ok(na + trwp_norm_sq(&FlatTorusMetric(b.t), &TropTangent(w))?)
}

/// Library-level property sweeps: invariance, potential, vertical identity, submersion,
/// tropical distance and reduction post-conditions.
pub fn properties_suite(seed: u64) -> SuiteReport {
    let mut checks = Vec::new();
    checks.push(run("symplectic invariance", || {
        let mut worst = 0.0_f64;
        for k in 0..200u64 {
            let mut rng = rng::stream(seed, 10, k);
            let g = 1 + (k % 4) as usize;
            let (m, tau, v) = (
                random_symplectic(&mut rng, g),
                random_siegel_point(&mut rng, g),
                random_tangent(&mut rng, g),
            );
            let a = wp_norm_sq(&tau, &v)?;
            let b = wp_norm_sq(&act(&m, &tau)?, &push_forward(&m, &tau, &v)?)?;
            worst = worst.max((a - b).abs() / a);
        }
        Ok(Check::at_most(
            "symplectic invariance",
            worst,
            1e-9,
            "200 samples, g ≤ 4".into(),
        ))
    }));
    checks.push(run("Kähler potential Hessian", || {
        let mut worst = 0.0_f64;
        for k in 0..20u64 {
            let mut rng = rng::stream(seed, 11, k);
            let tau = random_siegel_point(&mut rng, 1 + (k % 3) as usize);
            worst = worst.max(potential_hessian_check(&tau, 1e-4));
        }
        Ok(Check::at_most(
            "Kähler potential Hessian",
            worst,
            1e-5,
            "20 points, g ≤ 3".into(),
        ))
    }));
    checks.push(run("vertical norm identity", || {
        let mut worst = 0.0_f64;
        for k in 0..500u64 {
            let mut rng = rng::stream(seed, 12, k);
            let g = 1 + (k % 4) as usize;
            let gp = (k / 4) as usize % g;
            let tau = random_siegel_point(&mut rng, g);
            let v = random_vertical(&mut rng, &tau, gp)?;
            let a = wp_norm_sq(&tau, &v)?;
            worst = worst.max((a - vertical_norm_sq(&tau, &v, gp)?).abs() / a);
        }
        Ok(Check::at_most(
            "vertical norm identity",
            worst,
            1e-10,
            "500 vertical vectors, g ≤ 4".into(),
        ))
    }));
    checks.push(run("submersion", || {
        let mut violations = 0usize;
        let mut worst = 0.0_f64;
        for k in 0..500u64 {
            let mut rng = rng::stream(seed, 13, k);
            let g = 1 + (k % 4) as usize;
            let gp = (k / 4) as usize % g;
            let tau = random_siegel_point(&mut rng, g);
            let v = random_tangent(&mut rng, g);
            if base_norm_sq(&tau, &v, gp)? > wp_norm_sq(&tau, &v)? * (1.0 + 1e-12) {
                violations += 1;
            }
            if k < 51 {
                let tau = if k == 0 {
                    SiegelPoint::i_identity(g)
                } else {
                    tau
                };
                let h = horizontal_part(&tau, &v, gp)?;
                let n = wp_norm_sq(&tau, &h)?;
                worst = worst.max((base_norm_sq(&tau, &h, gp)? - n).abs() / n);
            }
        }
        let mut c = Check::at_most(
            "submersion",
            worst,
            1e-9,
            format!("{violations} Lipschitz violations"),
        );
        c.passed &= violations == 0;
        Ok(c)
    }));
    checks.push(run("conjugator identities", || {
        let mut worst = 0.0_f64;
        for k in 0..100u64 {
            let mut rng = rng::stream(seed, 14, k);
            let g = 2 + (k % 3) as usize;
            let tau = random_siegel_point(&mut rng, g);
            let scale = tau.y().as_mat().norm() + tau.y().inverse().as_mat().norm();
            worst = worst.max(conjugator_identities(&tau, (k as usize / 3) % g)? / scale);
        }
        Ok(Check::at_most(
            "conjugator identities",
            worst,
            1e-12,
            "100 points".into(),
        ))
    }));
    checks.push(run("tropical geodesic vs distance", || {
        let mut worst = 0.0_f64;
        for k in 0..100u64 {
            let mut rng = rng::stream(seed, 15, k);
            let r = 1 + (k % 4) as usize;
            let p = FlatTorusMetric(random_spd(&mut rng, r, 20.0));
            let v = TropTangent(random_sym(&mut rng, r, 0.5));
            let s = uniform(&mut rng, 0.0, 1.0);
            let d = trwp_distance(&p, &trwp_geodesic(&p, &v, s)?)?;
            worst = worst.max((d - s * trwp_norm_sq(&p, &v)?.sqrt()).abs());
        }
        Ok(Check::at_most(
            "tropical geodesic vs distance",
            worst,
            1e-9,
            "100 (P, V, s)".into(),
        ))
    }));
    checks.push(run("tropical scaling and GL(r, Z) invariance", || {
        let mut worst = 0.0_f64;
        for k in 0..100u64 {
            let mut rng = rng::stream(seed, 16, k);
            let r = 1 + (k % 4) as usize;
            let p = FlatTorusMetric(random_spd(&mut rng, r, 20.0));
            let q = FlatTorusMetric(random_spd(&mut rng, r, 20.0));
            let d = trwp_distance(&p, &q)?;
            let c = uniform(&mut rng, 0.1, 10.0);
            let ds = trwp_distance(
                &FlatTorusMetric(p.0.scale(c)?),
                &FlatTorusMetric(q.0.scale(c)?),
            )?;
            let um = crate::sampling::random_unimodular(&mut rng, r, 3).to_mat();
            let cong = |m: &FlatTorusMetric| SpdMat::from_mat(um.transpose() * m.0.as_mat() * &um);
            let dg = trwp_distance(&FlatTorusMetric(cong(&p)?), &FlatTorusMetric(cong(&q)?))?;
            worst = worst
                .max((ds - d).abs() / (1.0 + d))
                .max((dg - d).abs() / (1.0 + d));
        }
        Ok(Check::at_most(
            "tropical scaling and GL(r, Z) invariance",
            worst,
            1e-10,
            "100 pairs".into(),
        ))
    }));
    checks.push(run("tropical explicit distance", || {
        let e = std::f64::consts::E;
        let two = trwp_distance(
            &FlatTorusMetric(SpdMat::identity(2)),
            &FlatTorusMetric(SpdMat::from_diagonal(&[e * e, 1.0 / (e * e)])?),
        )?;
        Ok(Check::at_most(
            "tropical explicit distance",
            (two - 2.0).abs(),
            1e-12,
            format!("d(I, diag(e², e⁻²)) = {two:.15}"),
        ))
    }));
    checks.push(run("reduction post-conditions", || {
        let mut bad = 0usize;
        for k in 0..200u64 {
            let mut rng = rng::stream(seed, 17, k);
            let y = random_spd(&mut rng, 1 + (k % 5) as usize, 1e6);
            let (red, _) = reduce_spd(&y, 2.0)?;
            let c = spd_clauses(&red, 2.0)?;
            if !(c.l_bounded && c.chain) {
                bad += 1;
            }
        }
        for k in 0..500u64 {
            let mut rng = rng::stream(seed, 18, k);
            let tau = upper(
                uniform(&mut rng, -20.0, 20.0),
                uniform(&mut rng, 1e-3, 3.0).powi(2),
            )?;
            let (red, m) = reduce_sl2(&tau)?;
            let (x, y) = (red.x().as_mat()[(0, 0)], red.y().as_mat()[(0, 0)]);
            let image = act(&m, &tau)?;
            let moved =
                (image.x().as_mat()[(0, 0)] - x).abs() + (image.y().as_mat()[(0, 0)] - y).abs();
            if x.abs() > 0.5 + 1e-12 || x * x + y * y < 1.0 - 1e-9 || moved > 1e-9 * (1.0 + y) {
                bad += 1;
            }
        }
        Ok(Check::at_most(
            "reduction post-conditions",
            bad as f64,
            0.0,
            "200 SPD inputs, 500 g = 1 points".into(),
        ))
    }));
    SuiteReport::new("properties", checks)
}

/// Random combination of the vertical coordinate basis.
pub fn random_vertical<R: rand::Rng>(
    rng: &mut R,
    tau: &SiegelPoint,
    gprime: usize,
) -> Result<TangentVec> {
    let mut v = TangentVec::zero(tau.g());
    for b in vertical_basis(tau, gprime)? {
        v = v.add(&b.scale(crate::sampling::normal(rng)));
    }
    Ok(v)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn displayed_tensor_at_origin() {
        let c = [0.0; 6];
        let d = Mat::from_diagonal(&nalgebra::DVector::from_vec(vec![
            0.5, 1.0, 0.5, 1.0, 0.5, 0.5,
        ]));
        assert_eq!(g2_displayed(&c), d);
    }

    #[test]
    fn chart_round_trip() {
        let c = [0.3, -0.2, 0.7, 1.1, 0.4, 2.0];
        let back = g2_coords(&g2_chart(&c).unwrap()).unwrap();
        for k in 0..6 {
            assert!((back[k] - c[k]).abs() < 1e-12);
        }
    }
}
