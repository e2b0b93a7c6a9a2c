//! Library routines against independent reference computations.

mod common;

use common::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use wpgeom::horo::{
    assemble, collapse_bounds, dpi_pushforward, fiber_path_length, project, BasePoint,
    FiberConstants, FiberCoords,
};
use wpgeom::linalg::{jacobi_decompose, lambda_min, SpdMat};
use wpgeom::sampling::{
    random_siegel_point, random_spd, random_sym, random_symplectic, random_tangent, uniform,
};
use wpgeom::siegel::{act, push_forward, siegel_distance, SiegelPoint, TangentVec};
use wpgeom::tropical::{flat_metric_coeffs, FlatTorusMetric};

fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

fn diag(a: f64, b: f64) -> M {
    M::from_row_slice(2, 2, &[a, 0.0, 0.0, b])
}

fn pt(x: M, y: M) -> SiegelPoint {
    SiegelPoint::from_mats(x, y).unwrap()
}

#[test]
fn distance_matches_half_plane() {
    let mut r = rng(1);
    for _ in 0..200 {
        let (x1, y1) = (uniform(&mut r, -3.0, 3.0), uniform(&mut r, 0.05, 20.0));
        let (x2, y2) = (uniform(&mut r, -3.0, 3.0), uniform(&mut r, 0.05, 20.0));
        let d = siegel_distance(
            &pt(M::from_element(1, 1, x1), M::from_element(1, 1, y1)),
            &pt(M::from_element(1, 1, x2), M::from_element(1, 1, y2)),
        )
        .unwrap();
        let oracle = hyperbolic_distance(x1, y1, x2, y2) / std::f64::consts::SQRT_2;
        assert!(
            (d - oracle).abs() <= 1e-10 * (1.0 + oracle),
            "{d} vs {oracle}"
        );
    }
}

#[test]
fn distance_on_imaginary_slice() {
    let mut r = rng(2);
    for g in 1..=4 {
        for _ in 0..25 {
            let p = random_spd(&mut r, g, 50.0).into_mat();
            let q = random_spd(&mut r, g, 50.0).into_mat();
            let d = siegel_distance(
                &pt(M::zeros(g, g), p.clone()),
                &pt(M::zeros(g, g), q.clone()),
            )
            .unwrap();
            let oracle = spd_distance(&p, &q);
            assert!(
                (d - oracle).abs() <= 1e-9 * (1.0 + oracle),
                "g = {g}: {d} vs {oracle}"
            );
        }
    }
}

#[test]
fn distance_of_diagonal_product() {
    let mut r = rng(3);
    for _ in 0..50 {
        let x: Vec<(f64, f64)> = (0..4)
            .map(|_| (uniform(&mut r, -2.0, 2.0), uniform(&mut r, 0.2, 5.0)))
            .collect();
        let a = pt(diag(x[0].0, x[1].0), diag(x[0].1, x[1].1));
        let b = pt(diag(x[2].0, x[3].0), diag(x[2].1, x[3].1));
        let d1 = hyperbolic_distance(x[0].0, x[0].1, x[2].0, x[2].1);
        let d2 = hyperbolic_distance(x[1].0, x[1].1, x[3].0, x[3].1);
        let oracle = ((d1 * d1 + d2 * d2) / 2.0).sqrt();
        let d = siegel_distance(&a, &b).unwrap();
        assert!(
            (d - oracle).abs() <= 1e-9 * (1.0 + oracle),
            "{d} vs {oracle}"
        );
    }
}

fn shifted(tau: &SiegelPoint, v: &TangentVec, h: f64) -> SiegelPoint {
    pt(
        tau.x().as_mat() + v.vx.as_mat() * h,
        tau.y().as_mat() + v.vy.as_mat() * h,
    )
}

#[test]
fn push_forward_matches_finite_difference() {
    let mut r = rng(4);
    let h = 1e-6;
    for g in 1..=3 {
        for _ in 0..20 {
            let m = random_symplectic(&mut r, g);
            let tau = random_siegel_point(&mut r, g);
            let v = random_tangent(&mut r, g);
            let pf = push_forward(&m, &tau, &v).unwrap();
            let p = act(&m, &shifted(&tau, &v, h)).unwrap();
            let q = act(&m, &shifted(&tau, &v, -h)).unwrap();
            let fx = (p.x().as_mat() - q.x().as_mat()) / (2.0 * h);
            let fy = (p.y().as_mat() - q.y().as_mat()) / (2.0 * h);
            let scale = 1.0 + fx.norm() + fy.norm();
            let err = (pf.vx.as_mat() - fx).norm() + (pf.vy.as_mat() - fy).norm();
            assert!(err <= 1e-6 * scale, "g = {g}: {err} (scale {scale})");
        }
    }
}

#[test]
fn projection_differential_matches_finite_difference() {
    let mut r = rng(5);
    let h = 1e-6;
    for g in 2..=4 {
        for gp in 0..g {
            let tau = random_siegel_point(&mut r, g);
            let v = random_tangent(&mut r, g);
            let (vp, w) = dpi_pushforward(&tau, &v, gp).unwrap();
            let y = tau.y().as_mat();
            let yp = y + v.vy.as_mat() * h;
            let ym = y - v.vy.as_mat() * h;
            let fd = (schur(&yp, gp) - schur(&ym, gp)) / (2.0 * h);
            assert!((w.as_mat() - &fd).norm() <= 1e-6 * (1.0 + fd.norm()));
            if let Some(vp) = vp {
                assert_eq!(
                    vp.vy.as_mat(),
                    &v.vy.as_mat().view((0, 0), (gp, gp)).into_owned()
                );
                assert_eq!(
                    vp.vx.as_mat(),
                    &v.vx.as_mat().view((0, 0), (gp, gp)).into_owned()
                );
            }
            let b = project(&tau, gp).unwrap();
            assert!((b.t.as_mat() - schur(y, gp)).norm() <= 1e-12 * (1.0 + y.norm()));
        }
    }
}

#[test]
fn jacobi_and_lambda_min_match_nalgebra() {
    let mut r = rng(6);
    for g in 1..=6 {
        for _ in 0..20 {
            let y = random_spd(&mut r, g, 1e4);
            let j = jacobi_decompose(&y).unwrap();
            let (l, d) = ldl(y.as_mat());
            assert!((&j.l - &l).norm() <= 1e-9 * l.norm());
            for (a, b) in j.d.iter().zip(&d) {
                assert!((a - b).abs() <= 1e-9 * b);
            }
            let lam = lambda_min(y.as_mat()).unwrap();
            let oracle = min_eigenvalue(y.as_mat());
            assert!((lam - oracle).abs() <= 1e-10 * y.as_mat().norm());
        }
    }
}

#[test]
fn shortest_vector_matches_brute_force() {
    let mut r = rng(7);
    for dim in 1..=3 {
        for _ in 0..20 {
            let p = random_spd(&mut r, dim, 30.0);
            let c = flat_metric_coeffs(&FlatTorusMetric::new(p.clone())).unwrap();
            let m = p.as_mat();
            let w: i64 = 8;
            let mut best = f64::INFINITY;
            let mut n = vec![-w; dim];
            'outer: loop {
                if n.iter().any(|&v| v != 0) {
                    let v = M::from_iterator(dim, 1, n.iter().map(|&k| k as f64));
                    best = best.min((v.transpose() * m * &v)[(0, 0)]);
                }
                for k in 0..dim {
                    if n[k] < w {
                        n[k] += 1;
                        continue 'outer;
                    }
                    n[k] = -w;
                }
                break;
            }
            assert!(
                (c.shortest_sq - best).abs() <= 1e-12 * best,
                "{} vs {best}",
                c.shortest_sq
            );
            let v = M::from_iterator(dim, 1, c.shortest_vector.iter().map(|&k| k as f64));
            assert!(((v.transpose() * m * &v)[(0, 0)] - best).abs() <= 1e-12 * best);
            assert!((c.volume - m.determinant().sqrt()).abs() <= 1e-12 * c.volume);
        }
    }
}

/// Trapezoid quadrature of the oracle speed along the three coordinate segments.
fn quadrature_path_length(base: &BasePoint, fp: &FiberCoords, fq: &FiberCoords, n: usize) -> f64 {
    let gp = base.gprime();
    let h = base.g2();
    let g = gp + h;
    let yp = base.yp();
    let y_of = |yppp: &M| -> M {
        let mut y = M::zeros(g, g);
        let ypp = if gp > 0 {
            base.t.as_mat() + yppp.transpose() * inv(&yp) * yppp
        } else {
            base.t.as_mat().clone()
        };
        y.view_mut((gp, gp), (h, h)).copy_from(&ypp);
        if gp > 0 {
            y.view_mut((0, 0), (gp, gp)).copy_from(&yp);
            y.view_mut((0, gp), (gp, h)).copy_from(yppp);
            y.view_mut((gp, 0), (h, gp)).copy_from(&yppp.transpose());
        }
        y
    };
    let segment = |start: &M, dy3: &M, dx3: &M, dx2: &M| -> f64 {
        let mut total = 0.0;
        for k in 0..=n {
            let s = k as f64 / n as f64;
            let y = y_of(&(start + dy3 * s));
            let (vx, vy) = vertical_from_fiber_velocity(&y, gp, dx3, dy3, dx2);
            let w = if k == 0 || k == n { 0.5 } else { 1.0 };
            total += w * oracle_wp_norm_sq(&y, &vx, &vy).sqrt();
        }
        total / n as f64
    };
    let z3 = M::zeros(gp, h);
    let z2 = M::zeros(h, h);
    segment(&fp.yppp, &z3, &(&fq.xppp - &fp.xppp), &z2)
        + segment(&fp.yppp, &(&fq.yppp - &fp.yppp), &z3, &z2)
        + segment(&fq.yppp, &z3, &z3, &(&fq.xpp - &fp.xpp))
}

#[test]
fn fiber_path_length_matches_quadrature() {
    let mut r = rng(8);
    for (g, gp) in [(2, 0), (2, 1), (3, 1), (3, 2), (4, 2)] {
        for _ in 0..10 {
            let tau = random_siegel_point(&mut r, g);
            let base = project(&tau, gp).unwrap();
            let h = g - gp;
            let mk = |r: &mut ChaCha8Rng| FiberCoords {
                xppp: M::from_fn(gp, h, |_, _| uniform(r, -1.0, 1.0)),
                yppp: M::from_fn(gp, h, |_, _| uniform(r, -1.0, 1.0)),
                xpp: random_sym(r, h, 0.8).into_mat(),
            };
            let (fp, fq) = (mk(&mut r), mk(&mut r));
            let p = assemble(&base, &fp).unwrap();
            let q = assemble(&base, &fq).unwrap();
            let len = fiber_path_length(&p, &q, gp).unwrap();
            let oracle = quadrature_path_length(&base, &fp, &fq, 2000);
            assert!(
                (len - oracle).abs() <= 1e-6 * (1.0 + oracle),
                "g = {g}, g' = {gp}: {len} vs {oracle}"
            );
        }
    }
}

#[test]
fn collapse_bounds_recomputed() {
    let y = SpdMat::from_rows(&[
        vec![40.0, 30.0, 4.0],
        vec![30.0, 123.0, 9.0],
        vec![4.0, 9.0, 2000.0],
    ])
    .unwrap();
    let tau = SiegelPoint::new(random_sym(&mut rng(9), 3, 0.3), y).unwrap();
    for gp in 0..2 {
        for radius in [0.0, 0.5, 2.0] {
            let cb = collapse_bounds(&tau, gp, radius, 2.0).unwrap();
            let lam = min_eigenvalue(&schur(tau.y().as_mat(), gp));
            assert!((cb.lambda_min - lam).abs() <= 1e-10 * lam);
            let k = (std::f64::consts::SQRT_2 * radius).exp();
            assert!((cb.lambda_window.0 - lam / k).abs() <= 1e-10 * lam);
            assert!((cb.lambda_window.1 - lam * k).abs() <= 1e-10 * lam * k);
            let (_, d) = ldl(tau.y().as_mat());
            assert!((cb.d_gp1 - d[gp]).abs() <= 1e-10 * d[gp]);
            let yp = tau.y().as_mat().view((0, 0), (gp, gp)).into_owned();
            let consts = FiberConstants::reduced(&yp, 3 - gp).inflate(radius);
            let c = consts.c_tau(lam / k);
            let delta = c * (radius / std::f64::consts::SQRT_2).exp() / lam.sqrt();
            assert!((cb.delta - delta).abs() <= 1e-10 * delta);
            assert!((cb.gh_upper - delta / 2.0).abs() <= 1e-10 * delta);
            // The closed-form constant dominates the raw estimate on the window.
            for lw in [lam / k, lam, lam * k] {
                assert!(consts.bound(lw) <= c / lw.sqrt() * (1.0 + 1e-12));
            }
        }
    }
}
