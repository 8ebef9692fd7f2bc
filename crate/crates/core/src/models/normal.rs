//! Normal location-scale model with the mean as interest parameter,
//! `θ = (μ, σ)`. Used as a cross-check where exact theory is available.

use super::{Bound, Dataset, ExpectationSupport, Model, ParameterPoint};
use crate::error::Result;
use crate::numerics::{integrate_line_vec, normal_quantile, QuadratureSpec, RngStream, SquareMatrix};

const HALF_LN_2PI: f64 = 0.918_938_533_204_672_8;

#[derive(Debug, Clone, Copy, Default)]
pub struct NormalModel;

impl Model for NormalModel {
    fn id(&self) -> &'static str {
        "normal"
    }

    fn dim(&self) -> usize {
        2
    }

    fn bounds(&self) -> Vec<Bound> {
        vec![Bound::FREE, Bound::positive()]
    }

    fn in_support(&self, y: f64) -> bool {
        y.is_finite()
    }

    fn log_density(&self, theta: &[f64], y: f64) -> f64 {
        let (mu, sigma) = (theta[0], theta[1]);
        let z = (y - mu) / sigma;
        -HALF_LN_2PI - sigma.ln() - 0.5 * z * z
    }

    fn analytic_score(&self, theta: &[f64], y: f64) -> Option<Vec<f64>> {
        let (mu, sigma) = (theta[0], theta[1]);
        let r = y - mu;
        let s2 = sigma * sigma;
        Some(vec![r / s2, -1.0 / sigma + r * r / (s2 * sigma)])
    }

    fn analytic_hessian(&self, theta: &[f64], y: f64) -> Option<SquareMatrix> {
        let (mu, sigma) = (theta[0], theta[1]);
        let r = y - mu;
        let s2 = sigma * sigma;
        let cross = -2.0 * r / (s2 * sigma);
        Some(
            SquareMatrix::new(2, vec![-1.0 / s2, cross, cross, 1.0 / s2 - 3.0 * r * r / (s2 * s2)])
                .expect("2x2 has four entries"),
        )
    }

    fn sample(&self, theta: &ParameterPoint, n: usize, stream: &mut RngStream) -> Result<Dataset> {
        self.check_parameters(theta.values())?;
        let (mu, sigma) = (theta.values()[0], theta.values()[1]);
        let obs = (0..n)
            .map(|_| normal_quantile(stream.next_uniform()).map(|z| mu + sigma * z))
            .collect::<Result<Vec<_>>>()?;
        Dataset::new(obs)
    }

    fn expectation_support(&self) -> ExpectationSupport {
        ExpectationSupport::Quadrature
    }

    fn expectation(
        &self,
        theta0: &ParameterPoint,
        dim: usize,
        g: &dyn Fn(f64, &mut [f64]),
        spec: &QuadratureSpec,
    ) -> Result<Vec<f64>> {
        self.check_parameters(theta0.values())?;
        let (mu, sigma) = (theta0.values()[0], theta0.values()[1]);
        integrate_line_vec(
            |y, out: &mut [f64]| {
                let z = (y - mu) / sigma;
                let density = (-HALF_LN_2PI - 0.5 * z * z).exp() / sigma;
                if density == 0.0 {
                    out.iter_mut().for_each(|v| *v = 0.0);
                    return;
                }
                g(y, out);
                out.iter_mut().for_each(|v| *v *= density);
            },
            dim,
            mu,
            sigma,
            spec,
        )
    }

    fn initial_point(&self, data: &Dataset) -> ParameterPoint {
        let m = data.mean();
        let var = data.observations().iter().map(|y| (y - m) * (y - m)).sum::<f64>() / data.len() as f64;
        ParameterPoint::new(vec![m, var.sqrt().max(1e-8)]).expect("finite start")
    }
}
