//! Likelihood covariances that stand in for sample-space derivatives.
//!
//! Expected versions, full sample:
//!
//! ```text
//! I(θ; θ₀) = E[ℓ_θ(θ) ℓ_θ(θ₀)ᵀ; θ₀]      Q(θ; θ₀) = E[ℓ(θ) ℓ_θ(θ₀)ᵀ; θ₀]
//! ```
//!
//! Both reduce to `n` times the single-observation expectation. Expanding
//! the sums over observations `i ≠ j` gives products of independent factors,
//! and each such term contains `E[ℓ_θ⁽ʲ⁾(θ₀); θ₀] = 0` (differentiation under
//! the integral sign, `∫ ∂L/∂θ dy = 0`), so only the `n` diagonal terms
//! survive.
//!
//! Empirical versions replace the expectation by the plain sum over
//! observations of the per-observation products: no centering, no scaling.

use super::{Dataset, Model, ParameterPoint};
use crate::error::{Error, Result};
use crate::numerics::{QuadratureSpec, SquareMatrix};

fn score_or_nan(model: &dyn Model, theta: &[f64], y: f64) -> Vec<f64> {
    model
        .obs_score(theta, y)
        .unwrap_or_else(|_| vec![f64::NAN; theta.len()])
}

fn check_pair(model: &dyn Model, theta: &ParameterPoint, theta0: &ParameterPoint) -> Result<()> {
    model.check_parameters(theta.values())?;
    model.check_parameters(theta0.values())
}

/// `I(θ; θ₀)`, full sample (`n` times the per-observation expectation).
pub fn expected_i(
    model: &dyn Model,
    theta: &ParameterPoint,
    theta0: &ParameterPoint,
    n: usize,
    spec: &QuadratureSpec,
) -> Result<SquareMatrix> {
    check_pair(model, theta, theta0)?;
    let k = model.dim();
    let v = model.expectation(
        theta0,
        k * k,
        &|y, out: &mut [f64]| {
            let s = score_or_nan(model, theta.values(), y);
            let s0 = score_or_nan(model, theta0.values(), y);
            for a in 0..k {
                for b in 0..k {
                    out[a * k + b] = s[a] * s0[b];
                }
            }
        },
        spec,
    )?;
    SquareMatrix::new(k, v.into_iter().map(|x| x * n as f64).collect())
}

/// `Q(θ; θ₀)`, full sample, as a length-`k` row.
pub fn expected_q(
    model: &dyn Model,
    theta: &ParameterPoint,
    theta0: &ParameterPoint,
    n: usize,
    spec: &QuadratureSpec,
) -> Result<Vec<f64>> {
    check_pair(model, theta, theta0)?;
    let k = model.dim();
    let v = model.expectation(
        theta0,
        k,
        &|y, out: &mut [f64]| {
            let l = model.log_density(theta.values(), y);
            let s0 = score_or_nan(model, theta0.values(), y);
            for b in 0..k {
                out[b] = l * s0[b];
            }
        },
        spec,
    )?;
    Ok(v.into_iter().map(|x| x * n as f64).collect())
}

/// `Î(θ; θ₀) = Σⱼ ℓ_θ⁽ʲ⁾(θ) ℓ_θ⁽ʲ⁾(θ₀)ᵀ`.
pub fn empirical_i(
    model: &dyn Model,
    theta: &ParameterPoint,
    theta0: &ParameterPoint,
    data: &Dataset,
) -> Result<SquareMatrix> {
    check_pair(model, theta, theta0)?;
    model.check_data(data)?;
    let k = model.dim();
    let mut out = SquareMatrix::zeros(k);
    for &y in data.observations() {
        let s = model.obs_score(theta.values(), y)?;
        let s0 = model.obs_score(theta0.values(), y)?;
        for a in 0..k {
            for b in 0..k {
                out[(a, b)] += s[a] * s0[b];
            }
        }
    }
    Ok(out)
}

/// `Q̂(θ; θ₀) = Σⱼ ℓ⁽ʲ⁾(θ) ℓ_θ⁽ʲ⁾(θ₀)ᵀ`.
pub fn empirical_q(
    model: &dyn Model,
    theta: &ParameterPoint,
    theta0: &ParameterPoint,
    data: &Dataset,
) -> Result<Vec<f64>> {
    check_pair(model, theta, theta0)?;
    model.check_data(data)?;
    let k = model.dim();
    let mut out = vec![0.0; k];
    for &y in data.observations() {
        let l = model.log_density(theta.values(), y);
        let s0 = model.obs_score(theta0.values(), y)?;
        for b in 0..k {
            out[b] += l * s0[b];
        }
    }
    Ok(out)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CovarianceVariant {
    Expected,
    Empirical,
}

/// The three covariance ingredients of `U`, evaluated at the full MLE `θ̂`
/// and the constrained MLE `θ̂_ψ`.
#[derive(Debug, Clone)]
pub struct CovarianceBundle {
    pub variant: CovarianceVariant,
    /// `Q(θ̂; θ̂) − Q(θ̂_ψ; θ̂)`.
    pub q_difference: Vec<f64>,
    /// `I(θ̂_ψ; θ̂)`.
    pub cross_information: SquareMatrix,
    /// `i(θ̂) = I(θ̂; θ̂)`.
    pub information: SquareMatrix,
    pub notes: Vec<String>,
}

impl CovarianceBundle {
    /// Model expectations under `θ̂`, from a single vector-valued quadrature.
    ///
    /// The `Q` difference is integrated directly rather than as a difference
    /// of two integrals, which keeps its relative accuracy as `θ̂_ψ → θ̂`.
    pub fn expected(
        model: &dyn Model,
        theta_hat: &ParameterPoint,
        theta_psi: &ParameterPoint,
        n: usize,
        spec: &QuadratureSpec,
    ) -> Result<Self> {
        check_pair(model, theta_psi, theta_hat)?;
        let k = model.dim();
        let dim = k + 2 * k * k;
        let v = model
            .expectation(
                theta_hat,
                dim,
                &|y, out: &mut [f64]| {
                    let dl = model.log_density(theta_hat.values(), y) - model.log_density(theta_psi.values(), y);
                    let s_hat = score_or_nan(model, theta_hat.values(), y);
                    let s_psi = score_or_nan(model, theta_psi.values(), y);
                    for b in 0..k {
                        out[b] = dl * s_hat[b];
                    }
                    for a in 0..k {
                        for b in 0..k {
                            out[k + a * k + b] = s_psi[a] * s_hat[b];
                            out[k + k * k + a * k + b] = s_hat[a] * s_hat[b];
                        }
                    }
                },
                spec,
            )
            .map_err(|e| e.context("expected covariances"))?;
        let nf = n as f64;
        let scaled: Vec<f64> = v.into_iter().map(|x| x * nf).collect();
        let information = SquareMatrix::new(k, scaled[k + k * k..].to_vec())?.symmetrized();
        Ok(Self {
            variant: CovarianceVariant::Expected,
            q_difference: scaled[..k].to_vec(),
            cross_information: SquareMatrix::new(k, scaled[k..k + k * k].to_vec())?,
            information,
            notes: boundary_notes(model, theta_hat),
        })
    }

    /// Sums over the observed data.
    pub fn empirical(
        model: &dyn Model,
        theta_hat: &ParameterPoint,
        theta_psi: &ParameterPoint,
        data: &Dataset,
    ) -> Result<Self> {
        check_pair(model, theta_psi, theta_hat)?;
        model.check_data(data)?;
        let k = model.dim();
        let mut q_difference = vec![0.0; k];
        let mut cross = SquareMatrix::zeros(k);
        let mut info = SquareMatrix::zeros(k);
        for &y in data.observations() {
            let dl = model.log_density(theta_hat.values(), y) - model.log_density(theta_psi.values(), y);
            let s_hat = model.obs_score(theta_hat.values(), y)?;
            let s_psi = model.obs_score(theta_psi.values(), y)?;
            for a in 0..k {
                q_difference[a] += dl * s_hat[a];
                for b in 0..k {
                    cross[(a, b)] += s_psi[a] * s_hat[b];
                    info[(a, b)] += s_hat[a] * s_hat[b];
                }
            }
        }
        if q_difference.iter().any(|v| !v.is_finite()) || !cross.is_finite() || !info.is_finite() {
            return Err(Error::Covariance("empirical covariances are not finite".into()));
        }
        Ok(Self {
            variant: CovarianceVariant::Empirical,
            q_difference,
            cross_information: cross,
            information: info.symmetrized(),
            notes: boundary_notes(model, theta_hat),
        })
    }
}

fn boundary_notes(model: &dyn Model, theta: &ParameterPoint) -> Vec<String> {
    model
        .bounds()
        .iter()
        .zip(theta.values())
        .enumerate()
        .filter(|(_, (b, v))| b.lower_closed && **v == b.lower)
        .map(|(i, _)| format!("theta_hat coordinate {} sits on its closed lower bound", i + 1))
        .collect()
}
