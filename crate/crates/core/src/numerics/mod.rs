//! Numerical kernel: small dense linear algebra, half-line quadrature,
//! bracketing root finding, finite differences, the standard normal
//! distribution and counter-based random streams.
//!
//! Everything here is a pure function of its inputs.

mod diff;
mod linalg;
mod normal;
mod quadrature;
mod rng;
mod roots;

pub use diff::{default_step, fd_gradient, fd_hessian, fd_jacobian};
pub use linalg::{LuDecomposition, SquareMatrix};
pub use normal::{normal_cdf, normal_pdf, normal_quantile};
pub use quadrature::{integrate_halfline, integrate_halfline_vec, integrate_line_vec, QuadratureSpec};
pub use rng::{mix_seed, rng_uniform, RngStream};
pub use roots::{brent_root, expand_bracket, Bracket, Root};

pub fn determinant(m: &SquareMatrix) -> crate::Result<f64> {
    m.determinant()
}

pub fn solve(m: &SquareMatrix, rhs: &[f64]) -> crate::Result<Vec<f64>> {
    m.solve(rhs)
}
