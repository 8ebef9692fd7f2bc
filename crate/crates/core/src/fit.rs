//! Full and ψ-constrained maximum likelihood.
//!
//! Both fits run one projected Newton ascent in the model's own
//! coordinates. Coordinates with a closed lower bound may come to rest on
//! it: such a coordinate is held fixed (active) while its score points out
//! of the parameter space, and stationarity is only required of the rest.
//! Open bounds are enforced by the line search, which never leaves the
//! domain. Observed informations are reported in the same coordinates.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::models::{hessian, loglik, score, Dataset, Model, ParameterPoint};
use crate::numerics::SquareMatrix;

const MAX_ITERATIONS: usize = 200;
const MAX_HALVINGS: usize = 60;
const GRADIENT_TOL: f64 = 1e-8;
const STEP_TOL: f64 = 1e-10;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FitResult {
    pub theta_hat: ParameterPoint,
    pub max_loglik: f64,
    /// `Ĵ = −ℓ_θθ(θ̂)`.
    pub observed_information: SquareMatrix,
    /// Sup-norm of the score over coordinates not resting on a bound.
    pub gradient_norm: f64,
    pub iterations: usize,
    pub converged: bool,
    /// Coordinates (0-based) that ended on a closed lower bound.
    pub on_boundary: Vec<usize>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConstrainedFit {
    pub psi: f64,
    pub theta_psi: ParameterPoint,
    pub profile_loglik: f64,
    /// `j_λλ(θ̂_ψ) = −ℓ_λλ(θ̂_ψ)`.
    pub nuisance_information: SquareMatrix,
    pub gradient_norm: f64,
    pub iterations: usize,
    pub converged: bool,
    pub on_boundary: Vec<usize>,
}

struct Optimum {
    theta: Vec<f64>,
    loglik: f64,
    gradient_norm: f64,
    iterations: usize,
    on_boundary: Vec<usize>,
}

fn at_closed_bound(model: &dyn Model, theta: &[f64], i: usize) -> bool {
    let b = model.bounds()[i];
    b.lower_closed && theta[i] <= b.lower
}

fn project(model: &dyn Model, theta: &mut [f64]) {
    for (v, b) in theta.iter_mut().zip(model.bounds()) {
        if b.lower_closed && *v < b.lower {
            *v = b.lower;
        }
    }
}

fn ll_at(model: &dyn Model, data: &Dataset, theta: &[f64]) -> Result<f64> {
    loglik(model, &ParameterPoint::new(theta.to_vec())?, data)
}

/// Newton direction on the working coordinates, ridging `−H` until it is
/// positive definite. `None` if no ridge up to a huge multiple works.
fn newton_direction(neg_h: &SquareMatrix, g: &[f64]) -> Option<Vec<f64>> {
    let n = neg_h.order();
    let scale = (0..n).map(|i| neg_h[(i, i)].abs()).fold(0.0, f64::max).max(1e-12);
    let mut ridge = 0.0;
    for _ in 0..80 {
        let mut m = neg_h.clone();
        for i in 0..n {
            m[(i, i)] += ridge;
        }
        if m.is_positive_definite() {
            if let Ok(d) = m.solve(g) {
                if d.iter().all(|v| v.is_finite()) {
                    return Some(d);
                }
            }
        }
        ridge = if ridge == 0.0 { 1e-10 * scale } else { 2.0 * ridge };
    }
    None
}

/// A free coordinate close to an excluded lower bound whose score still
/// points at it, as when the likelihood is maximized only in the limit.
fn drifting_to_open_bound(model: &dyn Model, theta: &[f64], g: &[f64], free: &[bool]) -> Option<usize> {
    model.bounds().iter().enumerate().position(|(i, b)| {
        free[i] && !b.lower_closed && b.lower.is_finite() && g[i] < 0.0 && theta[i] - b.lower < 1e-3 * b.lower.abs().max(1.0)
    })
}

fn maximize(model: &dyn Model, data: &Dataset, start: Vec<f64>, free: &[bool]) -> Result<Optimum> {
    let k = model.dim();
    let mut theta = start;
    project(model, &mut theta);
    let mut ll = ll_at(model, data, &theta).map_err(|e| e.context("starting point"))?;
    let mut trace = vec![ll];
    let mut last_step = f64::INFINITY;
    let mut gradient_norm = f64::INFINITY;

    for iteration in 0..=MAX_ITERATIONS {
        let point = ParameterPoint::new(theta.clone())?;
        let g = score(model, &point, data)?;
        let h = hessian(model, &point, data)?;

        let working: Vec<usize> = (0..k)
            .filter(|&i| free[i] && !(at_closed_bound(model, &theta, i) && g[i] <= 0.0))
            .collect();
        gradient_norm = working.iter().map(|&i| g[i].abs()).fold(0.0, f64::max);
        let theta_scale = theta.iter().map(|v| v.abs()).fold(1.0, f64::max);
        if gradient_norm < GRADIENT_TOL * ll.abs().max(1.0) && last_step < STEP_TOL * theta_scale {
            let on_boundary = (0..k).filter(|&i| at_closed_bound(model, &theta, i)).collect();
            return Ok(Optimum {
                theta,
                loglik: ll,
                gradient_norm,
                iterations: iteration,
                on_boundary,
            });
        }
        if iteration == MAX_ITERATIONS {
            break;
        }
        if working.is_empty() {
            // every free coordinate is pinned to its bound
            last_step = 0.0;
            continue;
        }

        let g_w: Vec<f64> = working.iter().map(|&i| g[i]).collect();
        let neg_h = h.submatrix(&working)?.scaled(-1.0);
        let newton = newton_direction(&neg_h, &g_w);
        let steepest = {
            let diag_scale = (0..working.len())
                .map(|i| neg_h[(i, i)].abs())
                .fold(0.0, f64::max)
                .max(1.0);
            g_w.iter().map(|v| v / diag_scale).collect::<Vec<_>>()
        };

        let mut accepted = None;
        for direction in newton.iter().chain(std::iter::once(&steepest)) {
            let mut alpha = 1.0;
            for _ in 0..MAX_HALVINGS {
                let mut cand = theta.clone();
                for (j, &i) in working.iter().enumerate() {
                    cand[i] += alpha * direction[j];
                }
                project(model, &mut cand);
                // predicted gain along the projected step, which may be much
                // shorter than the raw one when a coordinate hits its bound
                let slope: f64 = (0..k).map(|i| g[i] * (cand[i] - theta[i])).sum();
                if let Ok(ll_c) = ll_at(model, data, &cand) {
                    let gain = ll_c - ll;
                    let roundoff = 1e-13 * ll.abs().max(1.0);
                    if (slope > 0.0 && gain >= 1e-4 * slope) || (slope <= roundoff && gain >= -roundoff) {
                        accepted = Some((cand, ll_c));
                        break;
                    }
                }
                alpha *= 0.5;
            }
            if accepted.is_some() {
                break;
            }
        }

        match accepted {
            Some((cand, ll_c)) => {
                last_step = cand
                    .iter()
                    .zip(&theta)
                    .map(|(a, b)| (a - b).abs())
                    .fold(0.0, f64::max);
                theta = cand;
                ll = ll_c;
                trace.push(ll);
            }
            None if gradient_norm < GRADIENT_TOL * ll.abs().max(1.0) => {
                last_step = 0.0;
            }
            None => {
                if let Some(i) = drifting_to_open_bound(model, &theta, &g, free) {
                    return Err(Error::NoInteriorMaximum {
                        coordinate: i + 1,
                        value: theta[i],
                    });
                }
                return Err(Error::Fit {
                    reason: "line search stalled for Newton and steepest-ascent directions".into(),
                    iterations: iteration,
                    gradient_norm,
                    trace,
                });
            }
        }
    }
    Err(Error::Fit {
        reason: format!("no convergence after {MAX_ITERATIONS} iterations"),
        iterations: MAX_ITERATIONS,
        gradient_norm,
        trace,
    })
}

fn check_sample_size(model: &dyn Model, data: &Dataset) -> Result<()> {
    if data.len() < model.dim() + 1 {
        return Err(Error::Data(format!(
            "fitting needs at least {} observations, got {}",
            model.dim() + 1,
            data.len()
        )));
    }
    model.check_data(data)
}

pub fn fit_full(model: &dyn Model, data: &Dataset, init: Option<&ParameterPoint>) -> Result<FitResult> {
    check_sample_size(model, data)?;
    let start = match init {
        Some(p) => {
            model.check_parameters(p.values())?;
            p.values().to_vec()
        }
        None => model.initial_point(data).values().to_vec(),
    };
    let opt = maximize(model, data, start, &vec![true; model.dim()])?;
    let theta_hat = ParameterPoint::new(opt.theta)?;
    let observed_information = hessian(model, &theta_hat, data)?.scaled(-1.0);
    if !observed_information.is_positive_definite() {
        return Err(Error::FitQuality(format!(
            "observed information at {theta_hat} is not positive definite"
        )));
    }
    Ok(FitResult {
        theta_hat,
        max_loglik: opt.loglik,
        observed_information,
        gradient_norm: opt.gradient_norm,
        iterations: opt.iterations,
        converged: true,
        on_boundary: opt.on_boundary,
    })
}

/// Maximizes over `λ` with `ψ` held fixed. `init` (for instance the fit at
/// a neighbouring `ψ`) only supplies the starting nuisance values.
pub fn fit_constrained(
    model: &dyn Model,
    data: &Dataset,
    psi: f64,
    init: Option<&ParameterPoint>,
) -> Result<ConstrainedFit> {
    check_sample_size(model, data)?;
    let psi_bound = model.bounds()[0];
    if !psi_bound.contains(psi) {
        return Err(Error::Domain(format!("psi = {psi} is not admissible for `{}`", model.id())));
    }
    let mut start = match init {
        Some(p) if p.dim() == model.dim() => p.values().to_vec(),
        _ => model.initial_point(data).values().to_vec(),
    };
    start[0] = psi;
    // a warm start may be inadmissible at the new psi
    if ll_at(model, data, &start).is_err() {
        start = model.initial_point(data).values().to_vec();
        start[0] = psi;
    }
    let mut free = vec![true; model.dim()];
    free[0] = false;
    let opt = maximize(model, data, start, &free).map_err(|e| e.context(format!("constrained fit at psi = {psi}")))?;
    let theta_psi = ParameterPoint::new(opt.theta)?;
    let h = hessian(model, &theta_psi, data)?;
    let nuisance: Vec<usize> = (1..model.dim()).collect();
    let nuisance_information = h.submatrix(&nuisance)?.scaled(-1.0);
    if !nuisance_information.is_positive_definite() {
        return Err(Error::FitQuality(format!(
            "nuisance information at {theta_psi} is not positive definite"
        )));
    }
    Ok(ConstrainedFit {
        psi,
        theta_psi,
        profile_loglik: opt.loglik,
        nuisance_information,
        gradient_norm: opt.gradient_norm,
        iterations: opt.iterations,
        converged: true,
        on_boundary: opt.on_boundary,
    })
}

/// `ℓ(θ̂_ψ)`.
pub fn profile_loglik(model: &dyn Model, data: &Dataset, psi: f64) -> Result<f64> {
    fit_constrained(model, data, psi, None).map(|f| f.profile_loglik)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::models::{leukemia21, LinearExponential, NormalModel};

    fn normal_data() -> Dataset {
        Dataset::new(vec![1.2, -0.3, 2.5, 0.8, 1.9, 0.1, -1.1, 3.0]).unwrap()
    }

    #[test]
    fn normal_closed_form_mle() {
        let d = normal_data();
        let fit = fit_full(&NormalModel, &d, None).unwrap();
        let m = d.mean();
        let s = (d.observations().iter().map(|y| (y - m) * (y - m)).sum::<f64>() / d.len() as f64).sqrt();
        assert!((fit.theta_hat.values()[0] - m).abs() < 1e-8);
        assert!((fit.theta_hat.values()[1] - s).abs() < 1e-8);
        let n = d.len() as f64;
        let expected = -(n / 2.0) * (2.0 * std::f64::consts::PI * s * s).ln() - n / 2.0;
        assert!((fit.max_loglik - expected).abs() < 1e-10);
    }

    #[test]
    fn normal_constrained_closed_form() {
        let d = normal_data();
        let mu0 = 0.4;
        let c = fit_constrained(&NormalModel, &d, mu0, None).unwrap();
        let s = (d.observations().iter().map(|y| (y - mu0) * (y - mu0)).sum::<f64>() / d.len() as f64).sqrt();
        assert!((c.theta_psi.values()[1] - s).abs() < 1e-8);
    }

    #[test]
    fn constrained_at_mle_recovers_full_fit() {
        let d = leukemia21();
        let full = fit_full(&LinearExponential, &d, None).unwrap();
        let c = fit_constrained(&LinearExponential, &d, full.theta_hat.psi(), None).unwrap();
        assert!((c.theta_psi.values()[1] - full.theta_hat.values()[1]).abs() < 1e-7);
        assert!((c.profile_loglik - full.max_loglik).abs() < 1e-10);
    }

    #[test]
    fn lambda_rests_on_boundary_for_large_psi() {
        let c = fit_constrained(&LinearExponential, &leukemia21(), 0.15, None).unwrap();
        assert_eq!(c.theta_psi.values()[1], 0.0);
        assert_eq!(c.on_boundary, vec![1]);
        assert!(c.nuisance_information.is_positive_definite());
    }

    #[test]
    fn too_few_observations() {
        let d = Dataset::new(vec![1.0, 2.0]).unwrap();
        assert!(matches!(fit_full(&LinearExponential, &d, None), Err(Error::Data(_))));
    }

    #[test]
    fn inadmissible_psi() {
        assert!(matches!(
            fit_constrained(&LinearExponential, &leukemia21(), -0.1, None),
            Err(Error::Domain(_))
        ));
    }
}
