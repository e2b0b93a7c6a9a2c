//! Random test objects: symmetric and SPD matrices, Siegel points, tangent vectors,
//! symplectic and unimodular matrices.

use rand::Rng;

use crate::linalg::{Mat, SpdMat, SymMat};
use crate::reduction::UnimodularMat;
use crate::siegel::{SiegelPoint, SymplecticMat, TangentVec};

pub fn uniform<R: Rng>(rng: &mut R, lo: f64, hi: f64) -> f64 {
    lo + (hi - lo) * rng.random::<f64>()
}

/// Standard normal by Box–Muller.
pub fn normal<R: Rng>(rng: &mut R) -> f64 {
    let u1: f64 = 1.0 - rng.random::<f64>();
    let u2: f64 = rng.random::<f64>();
    (-2.0 * u1.ln()).sqrt() * (std::f64::consts::TAU * u2).cos()
}

pub fn gaussian_mat<R: Rng>(rng: &mut R, rows: usize, cols: usize) -> Mat {
    Mat::from_fn(rows, cols, |_, _| normal(rng))
}

pub fn random_sym<R: Rng>(rng: &mut R, g: usize, scale: f64) -> SymMat {
    let a = gaussian_mat(rng, g, g);
    SymMat::symmetrized((&a + a.transpose()) * (0.5 * scale))
}

/// Random orthogonal matrix (QR of a Gaussian matrix).
pub fn random_orthogonal<R: Rng>(rng: &mut R, g: usize) -> Mat {
    let qr = gaussian_mat(rng, g, g).qr();
    let (q, r) = (qr.q(), qr.r());
    let mut q = q;
    for j in 0..g {
        if r[(j, j)] < 0.0 {
            for i in 0..g {
                q[(i, j)] = -q[(i, j)];
            }
        }
    }
    q
}

/// SPD matrix `Q diag(λ) Qᵗ` with `log λ` uniform so that the condition number is at most `cond`.
pub fn random_spd<R: Rng>(rng: &mut R, g: usize, cond: f64) -> SpdMat {
    let q = random_orthogonal(rng, g);
    let half = 0.5 * cond.ln();
    let lam: Vec<f64> = (0..g).map(|_| uniform(rng, -half, half).exp()).collect();
    let d = Mat::from_diagonal(&nalgebra::DVector::from_vec(lam));
    SpdMat::from_mat(&q * d * q.transpose()).expect("SPD by construction")
}

pub fn random_siegel_point<R: Rng>(rng: &mut R, g: usize) -> SiegelPoint {
    let x = random_sym(rng, g, 0.7);
    let y = random_spd(rng, g, 20.0);
    SiegelPoint::new(x, y).expect("dimensions agree")
}

pub fn random_tangent<R: Rng>(rng: &mut R, g: usize) -> TangentVec {
    TangentVec::new(random_sym(rng, g, 1.0), random_sym(rng, g, 1.0)).expect("dimensions agree")
}

/// Product of random translations, congruences and the inversion.
pub fn random_symplectic<R: Rng>(rng: &mut R, g: usize) -> SymplecticMat {
    let mut m = SymplecticMat::identity(g);
    for _ in 0..3 {
        let b = random_sym(rng, g, 0.8);
        m = m.compose(&SymplecticMat::translation(&b));
        let mut a = Mat::identity(g, g) + gaussian_mat(rng, g, g) * 0.3;
        if a.determinant().abs() < 0.2 {
            a = Mat::identity(g, g);
        }
        m = m.compose(&SymplecticMat::congruence(&a).expect("invertible"));
        m = m.compose(&SymplecticMat::inversion(g));
    }
    m
}

/// Product of `steps` random elementary integer column operations and sign flips.
pub fn random_unimodular<R: Rng>(rng: &mut R, g: usize, steps: usize) -> UnimodularMat {
    let mut rows = vec![vec![0i64; g]; g];
    for (i, r) in rows.iter_mut().enumerate() {
        r[i] = 1;
    }
    if g < 2 {
        return UnimodularMat::from_rows(&rows).expect("identity");
    }
    for _ in 0..steps {
        let i = rng.random_range(0..g);
        let mut j = rng.random_range(0..g - 1);
        if j >= i {
            j += 1;
        }
        let q: i64 = rng.random_range(-2..=2);
        for r in rows.iter_mut() {
            r[i] += q * r[j];
        }
        if rng.random::<f64>() < 0.2 {
            for r in rows.iter_mut() {
                r[i] = -r[i];
            }
        }
    }
    UnimodularMat::from_rows(&rows).expect("elementary operations preserve det ±1")
}
