//! Complex matrices stored as a pair of real matrices `re + i·im`.

use std::ops::{Add, Mul, Sub};

use super::Mat;
use crate::error::{GeomError, Result};

#[derive(Debug, Clone, PartialEq)]
pub struct CMat {
    pub re: Mat,
    pub im: Mat,
}

impl CMat {
    pub fn new(re: Mat, im: Mat) -> Self {
        debug_assert_eq!(re.shape(), im.shape());
        CMat { re, im }
    }

    pub fn real(re: Mat) -> Self {
        let im = Mat::zeros(re.nrows(), re.ncols());
        CMat { re, im }
    }

    pub fn identity(n: usize) -> Self {
        CMat::real(Mat::identity(n, n))
    }

    /// `i·I_n`.
    pub fn i_identity(n: usize) -> Self {
        CMat {
            re: Mat::zeros(n, n),
            im: Mat::identity(n, n),
        }
    }

    pub fn nrows(&self) -> usize {
        self.re.nrows()
    }

    pub fn ncols(&self) -> usize {
        self.re.ncols()
    }

    pub fn transpose(&self) -> CMat {
        CMat {
            re: self.re.transpose(),
            im: self.im.transpose(),
        }
    }

    pub fn conj(&self) -> CMat {
        CMat {
            re: self.re.clone(),
            im: -&self.im,
        }
    }

    pub fn adjoint(&self) -> CMat {
        CMat {
            re: self.re.transpose(),
            im: -self.im.transpose(),
        }
    }

    pub fn scale(&self, c: f64) -> CMat {
        CMat {
            re: &self.re * c,
            im: &self.im * c,
        }
    }

    /// Multiply by `a + ib`.
    pub fn scale_complex(&self, a: f64, b: f64) -> CMat {
        CMat {
            re: &self.re * a - &self.im * b,
            im: &self.re * b + &self.im * a,
        }
    }

    pub fn frobenius_norm(&self) -> f64 {
        (self.re.norm_squared() + self.im.norm_squared()).sqrt()
    }

    pub fn trace(&self) -> (f64, f64) {
        (self.re.trace(), self.im.trace())
    }

    /// Real embedding `[[re, -im], [im, re]]`.
    pub fn embed(&self) -> Mat {
        let (r, c) = self.re.shape();
        let mut e = Mat::zeros(2 * r, 2 * c);
        e.view_mut((0, 0), (r, c)).copy_from(&self.re);
        e.view_mut((0, c), (r, c)).copy_from(&(-&self.im));
        e.view_mut((r, 0), (r, c)).copy_from(&self.im);
        e.view_mut((r, c), (r, c)).copy_from(&self.re);
        e
    }

    /// Inverse together with the Frobenius condition estimate `‖E‖_F ‖E⁻¹‖_F / 2n`
    /// of the real embedding (an upper bound for the spectral condition number up to
    /// the factor `2n`).
    pub fn inverse_with_cond(&self) -> Result<(CMat, f64)> {
        let n = self.nrows();
        if n != self.ncols() {
            return Err(GeomError::DimensionMismatch(
                "inverse of non-square matrix".into(),
            ));
        }
        let e = self.embed();
        let inv = e.clone().lu().try_inverse().ok_or_else(|| {
            GeomError::NumericallySingular("complex matrix not invertible".into())
        })?;
        let cond = e.norm() * inv.norm() / (2.0 * n as f64);
        if !cond.is_finite() {
            return Err(GeomError::NumericallySingular(
                "complex matrix not invertible".into(),
            ));
        }
        let re = inv.view((0, 0), (n, n)).into_owned();
        let im = inv.view((n, 0), (n, n)).into_owned();
        Ok((CMat { re, im }, cond))
    }

    pub fn inverse(&self) -> Result<CMat> {
        self.inverse_with_cond().map(|(m, _)| m)
    }
}

impl<'a> Add<&'a CMat> for &'a CMat {
    type Output = CMat;
    fn add(self, o: &CMat) -> CMat {
        CMat {
            re: &self.re + &o.re,
            im: &self.im + &o.im,
        }
    }
}

impl<'a> Sub<&'a CMat> for &'a CMat {
    type Output = CMat;
    fn sub(self, o: &CMat) -> CMat {
        CMat {
            re: &self.re - &o.re,
            im: &self.im - &o.im,
        }
    }
}

impl<'a> Mul<&'a CMat> for &'a CMat {
    type Output = CMat;
    fn mul(self, o: &CMat) -> CMat {
        CMat {
            re: &self.re * &o.re - &self.im * &o.im,
            im: &self.re * &o.im + &self.im * &o.re,
        }
    }
}
