//! Central finite differences.

use super::linalg::SquareMatrix;
use crate::error::{Error, Result};

/// `ε^{1/3}`, the usual step for central differences.
pub fn default_step() -> f64 {
    f64::EPSILON.cbrt()
}

fn step_for(h: f64, x: f64) -> f64 {
    h * x.abs().max(1.0)
}

fn eval<F: Fn(&[f64]) -> f64>(f: &F, x: &[f64]) -> Result<f64> {
    let v = f(x);
    if v.is_finite() {
        Ok(v)
    } else {
        Err(Error::Domain(format!("function is not finite at {x:?}")))
    }
}

pub fn fd_gradient<F: Fn(&[f64]) -> f64>(f: F, x: &[f64], h: f64) -> Result<Vec<f64>> {
    let mut probe = x.to_vec();
    let mut grad = Vec::with_capacity(x.len());
    for i in 0..x.len() {
        let hi = step_for(h, x[i]);
        probe[i] = x[i] + hi;
        let up = eval(&f, &probe)?;
        probe[i] = x[i] - hi;
        let down = eval(&f, &probe)?;
        probe[i] = x[i];
        grad.push((up - down) / (2.0 * hi));
    }
    Ok(grad)
}

/// Jacobian of a vector function by central differences; row `i` is `∂g/∂xᵢ`.
///
/// Applied to an analytic gradient this gives a Hessian that is much more
/// accurate than second differences of the function itself.
pub fn fd_jacobian<G: Fn(&[f64]) -> Vec<f64>>(g: G, x: &[f64], h: f64) -> Result<SquareMatrix> {
    let n = x.len();
    let mut probe = x.to_vec();
    let mut out = SquareMatrix::zeros(n);
    for i in 0..n {
        let hi = step_for(h, x[i]);
        probe[i] = x[i] + hi;
        let up = g(&probe);
        probe[i] = x[i] - hi;
        let down = g(&probe);
        probe[i] = x[i];
        if up.len() != n || down.len() != n {
            return Err(Error::InvalidInput("jacobian needs a square vector function".into()));
        }
        for j in 0..n {
            let d = (up[j] - down[j]) / (2.0 * hi);
            if !d.is_finite() {
                return Err(Error::Domain(format!("gradient is not finite near {x:?}")));
            }
            out[(i, j)] = d;
        }
    }
    Ok(out.symmetrized())
}

pub fn fd_hessian<F: Fn(&[f64]) -> f64>(f: F, x: &[f64], h: f64) -> Result<SquareMatrix> {
    let n = x.len();
    let mut out = SquareMatrix::zeros(n);
    let mut probe = x.to_vec();
    let steps: Vec<f64> = x.iter().map(|&xi| step_for(h, xi)).collect();
    for i in 0..n {
        for j in i..n {
            let mut corner = |si: f64, sj: f64| -> Result<f64> {
                probe[i] += si * steps[i];
                probe[j] += sj * steps[j];
                let v = eval(&f, &probe);
                probe[i] = x[i];
                probe[j] = x[j];
                v
            };
            let v = (corner(1.0, 1.0)? - corner(1.0, -1.0)? - corner(-1.0, 1.0)? + corner(-1.0, -1.0)?)
                / (4.0 * steps[i] * steps[j]);
            out[(i, j)] = v;
            out[(j, i)] = v;
        }
    }
    Ok(out.symmetrized())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn constant_has_zero_gradient() {
        let g = fd_gradient(|_| 3.5, &[1.0, -2.0, 0.3], default_step()).unwrap();
        assert!(g.iter().all(|v| *v == 0.0));
    }

    #[test]
    fn quadratic_gradient_and_hessian() {
        let f = |x: &[f64]| x.iter().map(|v| v * v).sum::<f64>();
        let g = fd_gradient(f, &[1.0, 2.0], default_step()).unwrap();
        assert!((g[0] - 2.0).abs() < 1e-7 && (g[1] - 4.0).abs() < 1e-7);
        let h = fd_hessian(f, &[1.0, 2.0], 1e-4).unwrap();
        assert!((h[(0, 0)] - 2.0).abs() < 1e-5 && h[(0, 1)].abs() < 1e-5);
        assert_eq!(h, h.transpose());
    }

    #[test]
    fn jacobian_of_gradient() {
        let grad = |x: &[f64]| vec![2.0 * x[0] + x[1], x[0] + 6.0 * x[1]];
        let h = fd_jacobian(grad, &[0.5, -1.0], default_step()).unwrap();
        assert!((h[(0, 0)] - 2.0).abs() < 1e-8);
        assert!((h[(0, 1)] - 1.0).abs() < 1e-8);
        assert!((h[(1, 1)] - 6.0).abs() < 1e-8);
    }

    #[test]
    fn leaving_the_domain_is_an_error() {
        let r = fd_gradient(|x| x[0].ln(), &[1e-9], default_step());
        assert!(matches!(r, Err(Error::Domain(_))));
    }
}
