//! Numerical geometry of the Siegel upper half-space under the Weil–Petersson
//! metric, its horospherical projections, and collapse experiments near the
//! boundary of the moduli of abelian varieties.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod error;
pub mod horo;
pub mod lab;
pub mod linalg;
pub mod reduction;
pub mod rng;
pub mod sampling;
pub mod siegel;
pub mod tol;
pub mod tropical;

pub use error::{GeomError, Result};
