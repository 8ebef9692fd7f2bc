//! Linear-exponential survival model,
//! `f(y) = (ψ + λy)·exp(−(ψy + ½λy²))` for `y > 0`.
//!
//! Hazard is linear in time. `ψ > 0` is required; `λ = 0` is admitted as a
//! closed boundary (the exponential special case), because the nuisance
//! MLE at fixed `ψ` routinely lands there.

use super::{Bound, Dataset, ExpectationSupport, Model, ParameterPoint};
use crate::error::{Error, Result};
use crate::numerics::{integrate_halfline_vec, QuadratureSpec, RngStream, SquareMatrix};

#[derive(Debug, Clone, Copy, Default)]
pub struct LinearExponential;

fn check(psi: f64, lambda: f64) -> Result<()> {
    if !(psi > 0.0 && psi.is_finite()) {
        return Err(Error::Domain(format!("linear-exponential needs psi > 0, got {psi}")));
    }
    if !(lambda >= 0.0 && lambda.is_finite()) {
        return Err(Error::Domain(format!("linear-exponential needs lambda >= 0, got {lambda}")));
    }
    Ok(())
}

pub fn linexp_density(y: f64, psi: f64, lambda: f64) -> Result<f64> {
    check(psi, lambda)?;
    if !(y > 0.0) {
        return Err(Error::Data(format!("linear-exponential support is y > 0, got {y}")));
    }
    Ok((psi + lambda * y) * (-(psi * y + 0.5 * lambda * y * y)).exp())
}

/// Solves `ψy + ½λy² = t` for `y ≥ 0`.
///
/// Written as `2t / (ψ + √(ψ² + 2λt))`, which is the root
/// `(−ψ + √(ψ² + 2λt))/λ` without the cancellation as `λ → 0`.
pub fn linexp_inverse_cumulative_hazard(t: f64, psi: f64, lambda: f64) -> f64 {
    2.0 * t / (psi + (psi * psi + 2.0 * lambda * t).sqrt())
}

/// `n` draws by inversion: `t = −log(1 − u)` is unit exponential.
pub fn linexp_sample(psi: f64, lambda: f64, n: usize, stream: &mut RngStream) -> Result<Dataset> {
    check(psi, lambda)?;
    let obs = (0..n)
        .map(|_| {
            let u = stream.next_uniform();
            linexp_inverse_cumulative_hazard(-(-u).ln_1p(), psi, lambda)
        })
        .collect();
    Dataset::new(obs)
}

impl Model for LinearExponential {
    fn id(&self) -> &'static str {
        "linexp"
    }

    fn dim(&self) -> usize {
        2
    }

    fn bounds(&self) -> Vec<Bound> {
        vec![Bound::positive(), Bound::non_negative()]
    }

    fn in_support(&self, y: f64) -> bool {
        y > 0.0 && y.is_finite()
    }

    fn log_density(&self, theta: &[f64], y: f64) -> f64 {
        let (psi, lambda) = (theta[0], theta[1]);
        (psi + lambda * y).ln() - (psi * y + 0.5 * lambda * y * y)
    }

    fn analytic_score(&self, theta: &[f64], y: f64) -> Option<Vec<f64>> {
        let d = theta[0] + theta[1] * y;
        Some(vec![1.0 / d - y, y / d - 0.5 * y * y])
    }

    fn analytic_hessian(&self, theta: &[f64], y: f64) -> Option<SquareMatrix> {
        let d = theta[0] + theta[1] * y;
        let inv = 1.0 / (d * d);
        Some(
            SquareMatrix::new(2, vec![-inv, -y * inv, -y * inv, -y * y * inv])
                .expect("2x2 has four entries"),
        )
    }

    fn sample(&self, theta: &ParameterPoint, n: usize, stream: &mut RngStream) -> Result<Dataset> {
        self.check_parameters(theta.values())?;
        linexp_sample(theta.values()[0], theta.values()[1], n, stream)
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
        let (psi, lambda) = (theta0.values()[0], theta0.values()[1]);
        let scale = 1.0 / (psi + lambda.sqrt());
        integrate_halfline_vec(
            |y, out: &mut [f64]| {
                let density = (psi + lambda * y) * (-(psi * y + 0.5 * lambda * y * y)).exp();
                if density == 0.0 {
                    out.iter_mut().for_each(|v| *v = 0.0);
                    return;
                }
                g(y, out);
                out.iter_mut().for_each(|v| *v *= density);
            },
            dim,
            scale,
            spec,
        )
    }

    /// Exponential fit `ψ₀ = 1/ȳ` with a small positive slope `λ₀ = 0.1·ψ₀/ȳ`.
    fn initial_point(&self, data: &Dataset) -> ParameterPoint {
        let ybar = data.mean();
        let psi0 = 1.0 / ybar;
        ParameterPoint::new(vec![psi0, 0.1 * psi0 / ybar]).expect("finite start")
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::models::loglik;
    use crate::numerics::integrate_halfline;

    #[test]
    fn hand_evaluated_log_density() {
        // (1 + 1)·exp(−(1 + 0.5)) at y = 1
        let v = loglik(
            &LinearExponential,
            &ParameterPoint::new(vec![1.0, 1.0]).unwrap(),
            &Dataset::new(vec![1.0]).unwrap(),
        )
        .unwrap();
        assert!((v - (2f64.ln() - 1.5)).abs() < 1e-15);
        assert!((v + 0.806_853).abs() < 1e-6);
    }

    #[test]
    fn density_normalizes() {
        let v = integrate_halfline(|y| linexp_density(y, 0.1, 0.01).unwrap(), &QuadratureSpec::default()).unwrap();
        assert!((v - 1.0).abs() < 1e-8);
        // closed-form CDF at y = 10: 1 − exp(−(1 + 0.5))
        let spec = QuadratureSpec::default();
        let partial = integrate_halfline(|y| if y < 10.0 { linexp_density(y, 0.1, 0.01).unwrap() } else { 0.0 }, &spec);
        // discontinuous integrand: only loosely checked
        assert!((partial.unwrap() - (1.0 - (-1.5f64).exp())).abs() < 1e-6);
    }

    #[test]
    fn inversion_special_case() {
        assert!((linexp_inverse_cumulative_hazard(0.5, 0.0, 1.0) - 1.0).abs() < 1e-15);
        // λ = 0 is the exponential quantile
        assert!((linexp_inverse_cumulative_hazard(2.0, 0.5, 0.0) - 4.0).abs() < 1e-15);
        // round trip through the cumulative hazard
        let (psi, lam, t) = (0.1, 0.01, 3.7);
        let y = linexp_inverse_cumulative_hazard(t, psi, lam);
        assert!((psi * y + 0.5 * lam * y * y - t).abs() < 1e-12);
    }

    #[test]
    fn parameter_checks() {
        assert!(matches!(linexp_density(1.0, 0.0, 0.1), Err(Error::Domain(_))));
        assert!(matches!(linexp_density(1.0, 0.1, -0.1), Err(Error::Domain(_))));
        assert!(matches!(linexp_density(-1.0, 0.1, 0.1), Err(Error::Data(_))));
        let mut s = RngStream::new(0, 0);
        assert!(linexp_sample(-1.0, 0.1, 5, &mut s).is_err());
    }

    #[test]
    fn sampler_is_deterministic() {
        let a = linexp_sample(0.1, 0.01, 100, &mut RngStream::new(9, 4)).unwrap();
        let b = linexp_sample(0.1, 0.01, 100, &mut RngStream::new(9, 4)).unwrap();
        assert_eq!(a, b);
    }
}
