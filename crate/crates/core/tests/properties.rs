use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use wpgeom::horo::{assemble, base_distance, project, FiberCoords};
use wpgeom::linalg::SpdMat;
use wpgeom::reduction::{reduce_spd, siegel_coords, spd_clauses};
use wpgeom::sampling::{random_siegel_point, random_spd, random_symplectic, random_unimodular};
use wpgeom::siegel::{act, siegel_distance, SiegelPoint};
use wpgeom::tropical::{trwp_distance, FlatTorusMetric};

fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn distance_is_a_metric(seed in any::<u64>(), g in 1usize..4) {
        let mut r = rng(seed);
        let a = random_siegel_point(&mut r, g);
        let b = random_siegel_point(&mut r, g);
        let c = random_siegel_point(&mut r, g);
        let ab = siegel_distance(&a, &b).unwrap();
        let ba = siegel_distance(&b, &a).unwrap();
        prop_assert!((ab - ba).abs() <= 1e-9 * (1.0 + ab));
        prop_assert!(siegel_distance(&a, &a).unwrap() <= 1e-7);
        let ac = siegel_distance(&a, &c).unwrap();
        let cb = siegel_distance(&c, &b).unwrap();
        prop_assert!(ab <= ac + cb + 1e-9 * (1.0 + ab));
    }

    #[test]
    fn symplectic_maps_are_isometries(seed in any::<u64>(), g in 1usize..4) {
        let mut r = rng(seed);
        let a = random_siegel_point(&mut r, g);
        let b = random_siegel_point(&mut r, g);
        let m = random_symplectic(&mut r, g);
        let d = siegel_distance(&a, &b).unwrap();
        let dm = siegel_distance(&act(&m, &a).unwrap(), &act(&m, &b).unwrap()).unwrap();
        prop_assert!((d - dm).abs() <= 1e-7 * (1.0 + d), "{} vs {}", d, dm);
    }

    #[test]
    fn projection_is_one_lipschitz(seed in any::<u64>(), g in 2usize..5, gp_raw in 0usize..4) {
        let gp = gp_raw % g;
        let mut r = rng(seed);
        let a = random_siegel_point(&mut r, g);
        let b = random_siegel_point(&mut r, g);
        let d = siegel_distance(&a, &b).unwrap();
        let db = base_distance(&project(&a, gp).unwrap(), &project(&b, gp).unwrap()).unwrap();
        prop_assert!(db <= d * (1.0 + 1e-9) + 1e-9, "{} > {}", db, d);
    }

    #[test]
    fn project_assemble_round_trip(seed in any::<u64>(), g in 2usize..5, gp_raw in 0usize..4) {
        let gp = gp_raw % g;
        let mut r = rng(seed);
        let tau = random_siegel_point(&mut r, g);
        let base = project(&tau, gp).unwrap();
        let back = assemble(&base, &FiberCoords::of(&tau, gp).unwrap()).unwrap();
        let err = (back.y().as_mat() - tau.y().as_mat()).norm() + (back.x().as_mat() - tau.x().as_mat()).norm();
        prop_assert!(err <= 1e-10 * (1.0 + tau.y().as_mat().norm()));
    }

    #[test]
    fn tropical_distance_is_invariant(seed in any::<u64>(), dim in 1usize..5, s in 0.1f64..10.0) {
        let mut r = rng(seed);
        let p = random_spd(&mut r, dim, 20.0);
        let q = random_spd(&mut r, dim, 20.0);
        let d = trwp_distance(&FlatTorusMetric::new(p.clone()), &FlatTorusMetric::new(q.clone())).unwrap();
        let scaled = trwp_distance(&FlatTorusMetric::new(p.scale(s).unwrap()), &FlatTorusMetric::new(q.scale(s).unwrap())).unwrap();
        prop_assert!((d - scaled).abs() <= 1e-10 * (1.0 + d));
        let u = random_unimodular(&mut r, dim, 3).to_mat();
        let c = |m: &SpdMat| FlatTorusMetric::new(SpdMat::from_mat(u.transpose() * m.as_mat() * &u).unwrap());
        let du = trwp_distance(&c(&p), &c(&q)).unwrap();
        prop_assert!((d - du).abs() <= 1e-8 * (1.0 + d), "{} vs {}", d, du);
    }

    #[test]
    fn reduction_lands_in_siegel_set(seed in any::<u64>(), g in 1usize..6, cond_exp in 0.0f64..6.0) {
        let mut r = rng(seed);
        let y = random_spd(&mut r, g, 10f64.powf(cond_exp));
        let (red, u) = reduce_spd(&y, 2.0).unwrap();
        prop_assert!(u.det().abs() == 1);
        let c = spd_clauses(&red, 2.0).unwrap();
        prop_assert!(c.l_bounded && c.chain);
        let um = u.to_mat();
        let direct = um.transpose() * y.as_mat() * &um;
        prop_assert!((direct - red.as_mat()).norm() <= 1e-9 * red.as_mat().norm());
    }

    #[test]
    fn siegel_coords_reconstruct(seed in any::<u64>(), g in 1usize..6) {
        let mut r = rng(seed);
        let tau = random_siegel_point(&mut r, g);
        let back = siegel_coords(&tau).unwrap().reconstruct().unwrap();
        prop_assert!((back.y().as_mat() - tau.y().as_mat()).norm() <= 1e-12 * tau.y().as_mat().norm());
        prop_assert_eq!(back.x(), tau.x());
    }

    #[test]
    fn json_round_trip(seed in any::<u64>(), g in 1usize..5) {
        let tau = random_siegel_point(&mut rng(seed), g);
        let text = serde_json::to_string(&tau.to_json()).unwrap();
        let back = SiegelPoint::from_json(&serde_json::from_str(&text).unwrap()).unwrap();
        prop_assert_eq!(back, tau);
    }
}
