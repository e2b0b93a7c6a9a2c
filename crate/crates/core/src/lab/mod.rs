//! Collapse experiments: degenerating sequences, metric-ball sampling, distortion
//! measurements, decay-rate fits and comparison with the limit space.

mod report;
mod spec;
pub mod suites;

pub use report::{report_csv, report_json, report_value, to_canonical_json, CSV_COLUMNS};
pub use spec::{make_sequence, DegenerationSpec, DegenerationSpecJson, Profile};

use serde::{Deserialize, Serialize};

use crate::error::{GeomError, Result};
use crate::horo::{
    assemble, base_distance, collapse_bounds, fiber_diameter_upper, fiber_path_length_coords,
    horizontal_lift, project, reduce_coords, BasePoint, FiberBox, FiberCoords,
};
use crate::linalg::{lambda_min, SpdMat};
use crate::reduction::siegel_coords;
use crate::rng;
use crate::sampling::{random_sym, random_tangent};
use crate::siegel::{exp_geodesic, siegel_distance, wp_norm_sq, SiegelPoint};
use crate::tol::SAFETY;
use crate::tropical::{trwp_geodesic, trwp_norm_sq, FlatTorusMetric, TropTangent};

pub const DEFAULT_LIFT_STEPS: usize = 8;

/// Base point of a sample and its radius in the product ball.
#[derive(Debug, Clone)]
pub struct BallSample {
    pub point: SiegelPoint,
    pub base: BasePoint,
    pub radius: f64,
}

/// `m` points of `π⁻¹(B(π(τ_n), R))`: sample 0 is `τ_n`; the others move the base point
/// along a random unit product direction by a radius uniform in `[0, R]` and carry fiber
/// coordinates drawn from the box of [`FiberBox::from_u`]. Randomness comes from
/// `rng::stream(seed, stream_n, k)`.
pub fn sample_ball(
    tau_n: &SiegelPoint,
    gprime: usize,
    radius: f64,
    m: usize,
    seed: u64,
    stream_n: u64,
    u: f64,
) -> Result<Vec<BallSample>> {
    if m == 0 {
        return Err(GeomError::InvalidParameter(
            "need at least one sample".into(),
        ));
    }
    if !(radius >= 0.0) || !radius.is_finite() {
        return Err(GeomError::InvalidParameter(format!(
            "radius must be nonnegative, got {radius}"
        )));
    }
    let base0 = project(tau_n, gprime)?;
    let g2 = base0.g2();
    let bx = FiberBox::from_u(u, tau_n.g());
    let mut out = vec![BallSample {
        point: tau_n.clone(),
        base: base0.clone(),
        radius: 0.0,
    }];
    for k in 1..m {
        let mut rng = rng::stream(seed, stream_n, k as u64);
        let a = base0
            .tau_p
            .as_ref()
            .map(|p| random_tangent(&mut rng, p.g()));
        let b = TropTangent(random_sym(&mut rng, g2, 1.0));
        let t0 = FlatTorusMetric(base0.t.clone());
        let na = match (&base0.tau_p, &a) {
            (Some(p), Some(a)) => wp_norm_sq(p, a)?,
            _ => 0.0,
        };
        let norm = (na + trwp_norm_sq(&t0, &b)?).sqrt();
        let rho = radius * rand::Rng::random::<f64>(&mut rng);
        let c = if norm > 0.0 { rho / norm } else { 0.0 };
        let tau_p = match (&base0.tau_p, &a) {
            (Some(p), Some(a)) => Some(exp_geodesic(p, &a.scale(c))?.point(1.0)?),
            _ => None,
        };
        let t = trwp_geodesic(&t0, &b, c)?.0;
        let base = BasePoint { tau_p, t };
        let f = bx.sample(&mut rng, gprime, g2);
        out.push(BallSample {
            point: assemble(&base, &f)?,
            base,
            radius: rho,
        });
    }
    Ok(out)
}

/// Certified interval `[lower, upper]` for the quotient distance of one pair.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PairInterval {
    pub i: usize,
    pub j: usize,
    /// Product base distance (the projection is 1-Lipschitz).
    pub lower: f64,
    /// Length of the horizontal lift followed by a lattice-reduced fiber path.
    pub upper: f64,
}

impl PairInterval {
    pub fn slack(&self) -> f64 {
        self.upper - self.lower
    }
}

/// Lower and upper distance bounds for every pair `i < j`.
pub fn pair_intervals(
    samples: &[BallSample],
    gprime: usize,
    lift_steps: usize,
) -> Result<Vec<PairInterval>> {
    let mut out = Vec::with_capacity(samples.len() * samples.len().saturating_sub(1) / 2);
    for i in 0..samples.len() {
        for j in i + 1..samples.len() {
            let (si, sj) = (&samples[i], &samples[j]);
            let lower = base_distance(&si.base, &sj.base)?;
            let lift = horizontal_lift(&si.point, &sj.base, gprime, lift_steps)?;
            // The lift ends exactly over π(s_j), so both points share `sj.base`.
            let fe = FiberCoords::of(&lift.endpoint, gprime)?;
            let fq = FiberCoords::of(&sj.point, gprime)?;
            let (fe, fq) = reduce_coords(&sj.base, fe, fq)?;
            let upper = lift.length + fiber_path_length_coords(&sj.base, &fe, &fq)?;
            out.push(PairInterval { i, j, lower, upper });
        }
    }
    Ok(out)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DistortionReport {
    pub n: u32,
    #[serde(rename = "R")]
    pub radius: f64,
    pub pairs: usize,
    pub max_slack: f64,
    pub delta_theory: f64,
    pub gh_upper_measured: f64,
    pub gh_upper_theory: f64,
    pub lambda_min: f64,
    pub d_gp1: f64,
    /// Samples whose `λ_min(t)` leaves `λ_min(t_n)·[e^{−√2R}, e^{√2R}]`.
    pub lambda_window_violations: usize,
    /// Pairs with `upper < lower` or `upper − lower > δ·SAFETY`.
    pub sandwich_violations: usize,
    /// Samples whose base distance to `π(τ_n)` exceeds `R·SAFETY`.
    pub radius_violations: usize,
}

/// Distortion of the projection on the sampled ball, compared with the certified bounds.
pub fn measure_distortion(
    tau_n: &SiegelPoint,
    gprime: usize,
    radius: f64,
    u: f64,
    n: u32,
    samples: &[BallSample],
    lift_steps: usize,
) -> Result<(DistortionReport, Vec<PairInterval>)> {
    let cb = collapse_bounds(tau_n, gprime, radius, u)?;
    let pairs = pair_intervals(samples, gprime, lift_steps)?;
    Ok((
        distortion_from(tau_n, gprime, radius, n, samples, &pairs, &cb)?,
        pairs,
    ))
}

fn distortion_from(
    tau_n: &SiegelPoint,
    gprime: usize,
    radius: f64,
    n: u32,
    samples: &[BallSample],
    pairs: &[PairInterval],
    cb: &crate::horo::CollapseBounds,
) -> Result<DistortionReport> {
    let base0 = project(tau_n, gprime)?;
    let mut window_bad = 0;
    let mut radius_bad = 0;
    for s in samples {
        let lam = lambda_min(s.base.t.as_mat())?;
        if lam < cb.lambda_window.0 / SAFETY || lam > cb.lambda_window.1 * SAFETY {
            window_bad += 1;
        }
        if base_distance(&base0, &s.base)? > radius * SAFETY + 1e-12 {
            radius_bad += 1;
        }
    }
    let mut max_slack = 0.0_f64;
    let mut sandwich_bad = 0;
    for p in pairs {
        let s = p.slack();
        if s < -1e-9 * (1.0 + p.lower) || s > cb.delta * SAFETY {
            sandwich_bad += 1;
        }
        max_slack = max_slack.max(s);
    }
    Ok(DistortionReport {
        n,
        radius,
        pairs: pairs.len(),
        max_slack,
        delta_theory: cb.delta,
        gh_upper_measured: max_slack / 2.0,
        gh_upper_theory: cb.gh_upper,
        lambda_min: cb.lambda_min,
        d_gp1: cb.d_gp1,
        lambda_window_violations: window_bad,
        sandwich_violations: sandwich_bad,
        radius_violations: radius_bad,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RateFit {
    pub slope: f64,
    pub intercept: f64,
    pub r_squared: f64,
    pub n_range: (u32, u32),
}

/// Least-squares line through `(log x, log y)`.
pub fn rate_fit(series: &[(f64, f64)], n_range: (u32, u32)) -> Result<RateFit> {
    if series.len() < 4 {
        return Err(GeomError::DegenerateInput(format!(
            "need at least 4 points, got {}",
            series.len()
        )));
    }
    if let Some(&(x, y)) = series
        .iter()
        .find(|&&(x, y)| !(x > 0.0 && y > 0.0 && x.is_finite() && y.is_finite()))
    {
        return Err(GeomError::DegenerateInput(format!(
            "nonpositive or non-finite point ({x}, {y})"
        )));
    }
    let pts: Vec<(f64, f64)> = series.iter().map(|&(x, y)| (x.ln(), y.ln())).collect();
    let k = pts.len() as f64;
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / k;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / k;
    let sxx: f64 = pts.iter().map(|p| (p.0 - mx).powi(2)).sum();
    let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let syy: f64 = pts.iter().map(|p| (p.1 - my).powi(2)).sum();
    if sxx <= 1e-300 {
        return Err(GeomError::DegenerateInput("all abscissae are equal".into()));
    }
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let r_squared = if syy <= 1e-300 {
        1.0
    } else {
        (sxy * sxy) / (sxx * syy)
    };
    Ok(RateFit {
        slope,
        intercept,
        r_squared,
        n_range,
    })
}

/// One row of a limit comparison.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LimitRow {
    pub n: u32,
    pub d_gp1: f64,
    /// `sup max(d_lim − lower, upper − d_lim)` over the sampled pairs.
    pub discrepancy: f64,
    /// Base distance from `(τ'_n, t̄_n)` to `(τ'_∞, t̄_∞)`.
    pub drift: f64,
    /// `max |t̄_n − t̄_∞|` entrywise.
    pub t_bar_error: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LimitTable {
    pub rows: Vec<LimitRow>,
    pub fit: Option<RateFit>,
}

fn limit_base(spec: &DegenerationSpec) -> Result<BasePoint> {
    Ok(BasePoint {
        tau_p: spec.anchor.clone(),
        t: SpdMat::from_mat(spec.t_bar_limit()?)?,
    })
}

fn normalized(b: &BasePoint, dg: f64) -> Result<BasePoint> {
    Ok(BasePoint {
        tau_p: b.tau_p.clone(),
        t: b.t.scale(1.0 / dg)?,
    })
}

/// Compares sampled distance intervals with distances in the limit space. Sample 0 (`τ_n`)
/// corresponds to `(τ'_∞, t̄_∞)`, every other sample to its base point with `t`
/// renormalized by `d_g(τ_n)`.
pub fn limit_row(
    spec: &DegenerationSpec,
    n: u32,
    tau_n: &SiegelPoint,
    samples: &[BallSample],
    pairs: &[PairInterval],
) -> Result<LimitRow> {
    if !spec.is_nondegenerate() {
        return Err(GeomError::DegenerateDirection);
    }
    let lim = limit_base(spec)?;
    let c = siegel_coords(tau_n)?;
    let dg = c.d[spec.g - 1];
    let images: Vec<BasePoint> = samples
        .iter()
        .enumerate()
        .map(|(k, s)| {
            if k == 0 {
                Ok(lim.clone())
            } else {
                normalized(&s.base, dg)
            }
        })
        .collect::<Result<_>>()?;
    let mut disc = 0.0_f64;
    for p in pairs {
        let d = base_distance(&images[p.i], &images[p.j])?;
        disc = disc.max(d - p.lower).max(p.upper - d);
    }
    let bn = normalized(&samples[0].base, dg)?;
    let drift = base_distance(&bn, &lim)?;
    let t_bar_error = (bn.t.as_mat() - lim.t.as_mat()).amax();
    Ok(LimitRow {
        n,
        d_gp1: c.d[spec.gprime],
        discrepancy: disc,
        drift,
        t_bar_error,
    })
}

pub fn limit_compare(
    spec: &DegenerationSpec,
    radius: f64,
    n_list: &[u32],
    m: usize,
    lift_steps: usize,
) -> Result<LimitTable> {
    if !spec.is_nondegenerate() {
        return Err(GeomError::DegenerateDirection);
    }
    let mut rows = Vec::with_capacity(n_list.len());
    for &n in n_list {
        let tau = make_sequence(spec, n)?;
        let samples = sample_ball(&tau, spec.gprime, radius, m, spec.seed, n as u64, spec.u)?;
        let pairs = pair_intervals(&samples, spec.gprime, lift_steps)?;
        rows.push(limit_row(spec, n, &tau, &samples, &pairs)?);
    }
    let fit = if rows.len() >= 4 {
        let range = (
            n_list.iter().copied().min().unwrap_or(0),
            n_list.iter().copied().max().unwrap_or(0),
        );
        Some(rate_fit(
            &rows
                .iter()
                .map(|r| (r.d_gp1, r.discrepancy))
                .collect::<Vec<_>>(),
            range,
        )?)
    } else {
        None
    };
    Ok(LimitTable { rows, fit })
}

/// Parameters of one collapse run.
#[derive(Debug, Clone, PartialEq)]
pub struct Experiment {
    pub spec: DegenerationSpec,
    pub radius: f64,
    pub samples: usize,
    pub n_min: u32,
    pub n_max: u32,
    pub lift_steps: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentJson {
    pub spec: DegenerationSpecJson,
    #[serde(rename = "R")]
    pub radius: f64,
    #[serde(default = "default_samples")]
    pub samples: usize,
    #[serde(default = "default_n_min")]
    pub n_min: u32,
    #[serde(default = "default_n_max")]
    pub n_max: u32,
    #[serde(default = "default_lift_steps")]
    pub lift_steps: usize,
}

fn default_samples() -> usize {
    40
}
fn default_n_min() -> u32 {
    1
}
fn default_n_max() -> u32 {
    12
}
fn default_lift_steps() -> usize {
    DEFAULT_LIFT_STEPS
}

impl Experiment {
    pub fn from_json(j: &ExperimentJson) -> Result<Self> {
        let spec = DegenerationSpec::from_json(&j.spec)?;
        let e = Experiment {
            spec,
            radius: j.radius,
            samples: j.samples,
            n_min: j.n_min,
            n_max: j.n_max,
            lift_steps: j.lift_steps,
        };
        e.validate()?;
        Ok(e)
    }

    pub fn to_json(&self) -> ExperimentJson {
        ExperimentJson {
            spec: self.spec.to_json(),
            radius: self.radius,
            samples: self.samples,
            n_min: self.n_min,
            n_max: self.n_max,
            lift_steps: self.lift_steps,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.radius > 0.0 && self.radius.is_finite()) {
            return Err(GeomError::InvalidParameter(format!(
                "R must be positive, got {}",
                self.radius
            )));
        }
        if self.samples < 2 {
            return Err(GeomError::InvalidParameter(
                "need at least 2 samples".into(),
            ));
        }
        if self.n_min > self.n_max {
            return Err(GeomError::InvalidParameter("n_min exceeds n_max".into()));
        }
        if self.lift_steps < 2 {
            return Err(GeomError::InvalidParameter(
                "need at least 2 lift steps".into(),
            ));
        }
        Ok(())
    }

    /// Short identifier, e.g. `g3_gp1_R0.5`.
    pub fn label(&self) -> String {
        format!("g{}_gp{}_R{}", self.spec.g, self.spec.gprime, self.radius)
    }
}

/// Geometric-profile experiments over `g ∈ {2, 3}`, `g' ∈ {0, 1}`, `R ∈ {0.5, 1, 2}` with
/// `ρ = 3`, `m = 40`, `n = 1..12`.
pub fn default_grid(u: f64, seed: u64) -> Result<Vec<Experiment>> {
    let mut out = Vec::new();
    for g in [2usize, 3] {
        for gp in [0usize, 1] {
            for r in [0.5, 1.0, 2.0] {
                out.push(geometric_experiment(g, gp, r, u, seed, 40, 12)?);
            }
        }
    }
    Ok(out)
}

/// Geometric profile with `d_i = 1` for `i ≤ g'` and `d_i = 3ⁿ` beyond, `L = I`, `X = 0`.
pub fn geometric_experiment(
    g: usize,
    gprime: usize,
    radius: f64,
    u: f64,
    seed: u64,
    samples: usize,
    n_max: u32,
) -> Result<Experiment> {
    let spec = DegenerationSpec::geometric(g, gprime, &vec![1.0; g], 3.0, u, seed)?;
    let e = Experiment {
        spec,
        radius,
        samples,
        n_min: 1,
        n_max,
        lift_steps: DEFAULT_LIFT_STEPS,
    };
    e.validate()?;
    Ok(e)
}

/// Per-`n` row of a collapse report.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReportRow {
    #[serde(flatten)]
    pub distortion: DistortionReport,
    pub fiber_diam_upper: f64,
    pub bound_eq42: f64,
    pub fiber_diam_violation: bool,
    pub limit_discrepancy: Option<f64>,
    pub limit_drift: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Fits {
    pub fiber_diam: Option<RateFit>,
    pub gh_upper: Option<RateFit>,
    pub limit_disc: Option<RateFit>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct CollapseReport {
    pub experiment: Experiment,
    pub rows: Vec<ReportRow>,
    pub fits: Fits,
}

fn run_row(e: &Experiment, n: u32) -> Result<ReportRow> {
    let spec = &e.spec;
    let tau = make_sequence(spec, n)?;
    let samples = sample_ball(
        &tau,
        spec.gprime,
        e.radius,
        e.samples,
        spec.seed,
        n as u64,
        spec.u,
    )?;
    let (distortion, pairs) = measure_distortion(
        &tau,
        spec.gprime,
        e.radius,
        spec.u,
        n,
        &samples,
        e.lift_steps,
    )?;
    let fd = fiber_diameter_upper(&samples[0].base, spec.u, e.samples)?;
    let limit = if spec.is_nondegenerate() {
        Some(limit_row(spec, n, &tau, &samples, &pairs)?)
    } else {
        None
    };
    Ok(ReportRow {
        distortion,
        fiber_diam_upper: fd.value,
        bound_eq42: fd.bound,
        fiber_diam_violation: fd.value > fd.bound * SAFETY,
        limit_discrepancy: limit.as_ref().map(|l| l.discrepancy),
        limit_drift: limit.as_ref().map(|l| l.drift),
    })
}

fn fit_of(rows: &[ReportRow], f: impl Fn(&ReportRow) -> Option<f64>) -> Option<RateFit> {
    let series: Option<Vec<(f64, f64)>> = rows
        .iter()
        .map(|r| f(r).map(|v| (r.distortion.d_gp1, v)))
        .collect();
    let range = (rows.first()?.distortion.n, rows.last()?.distortion.n);
    rate_fit(&series?, range).ok()
}

/// Runs every `n` of the experiment, one thread per `n`; rows are ordered by `n`.
pub fn run_experiment(e: &Experiment) -> Result<CollapseReport> {
    e.validate()?;
    let ns: Vec<u32> = (e.n_min..=e.n_max).collect();
    let workers = std::thread::available_parallelism()
        .map_or(1, |p| p.get())
        .min(ns.len().max(1));
    let mut results: Vec<Option<Result<ReportRow>>> = vec![None; ns.len()];
    std::thread::scope(|scope| {
        let chunks: Vec<_> = results
            .chunks_mut(ns.len().div_ceil(workers).max(1))
            .collect();
        let mut start = 0;
        for chunk in chunks {
            let idx: Vec<u32> = ns[start..start + chunk.len()].to_vec();
            start += chunk.len();
            scope.spawn(move || {
                for (slot, n) in chunk.iter_mut().zip(idx) {
                    *slot = Some(run_row(e, n));
                }
            });
        }
    });
    let rows: Vec<ReportRow> = results
        .into_iter()
        .map(|r| r.expect("every n is processed"))
        .collect::<Result<_>>()?;
    let fits = Fits {
        fiber_diam: fit_of(&rows, |r| Some(r.fiber_diam_upper)),
        gh_upper: fit_of(&rows, |r| Some(r.distortion.gh_upper_measured)),
        limit_disc: fit_of(&rows, |r| r.limit_discrepancy),
    };
    Ok(CollapseReport {
        experiment: e.clone(),
        rows,
        fits,
    })
}

/// Distance from `τ` to each sample, recomputed directly (used to check the sampler).
pub fn sample_distances(tau: &SiegelPoint, samples: &[BallSample]) -> Result<Vec<f64>> {
    samples
        .iter()
        .map(|s| siegel_distance(tau, &s.point))
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn fit_exact_power() {
        let s: Vec<(f64, f64)> = (1..8)
            .map(|k| (3f64.powi(k), 2.0 * 3f64.powf(-0.5 * k as f64)))
            .collect();
        let f = rate_fit(&s, (1, 7)).unwrap();
        assert!((f.slope + 0.5).abs() < 1e-12 && (f.r_squared - 1.0).abs() < 1e-12);
        assert!(rate_fit(&s[..3], (1, 3)).is_err());
        assert!(rate_fit(&[(2.0, 1.0); 5], (1, 5)).is_err());
    }

    #[test]
    fn ball_respects_radius() {
        let spec = DegenerationSpec::geometric(3, 1, &[1.0, 1.0, 1.0], 3.0, 2.0, 7).unwrap();
        let tau = make_sequence(&spec, 3).unwrap();
        let s = sample_ball(&tau, 1, 1.0, 10, 7, 3, 2.0).unwrap();
        let b0 = project(&tau, 1).unwrap();
        for x in &s {
            assert!(base_distance(&b0, &x.base).unwrap() <= 1.0 + 1e-9);
        }
        assert_eq!(s[0].point, tau);
        let one = sample_ball(&tau, 1, 0.0, 1, 7, 3, 2.0).unwrap();
        assert_eq!(one.len(), 1);
    }

    #[test]
    fn fiber_coords_of_samples_are_boxed() {
        let spec = DegenerationSpec::geometric(2, 1, &[1.0, 1.0], 3.0, 2.0, 1).unwrap();
        let tau = make_sequence(&spec, 2).unwrap();
        for s in sample_ball(&tau, 1, 0.5, 6, 1, 2, 2.0)
            .unwrap()
            .iter()
            .skip(1)
        {
            let f = FiberCoords::of(&s.point, 1).unwrap();
            assert!(f.xppp.amax() <= 2.0 && f.xpp.amax() <= 2.0);
        }
    }
}
