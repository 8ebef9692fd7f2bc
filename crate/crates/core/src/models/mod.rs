//! Parametric models for i.i.d. scalar observations.
//!
//! A model supplies the per-observation log-density `ℓ⁽ʲ⁾(θ; y)`, optionally
//! its analytic first and second derivatives, a sampler and a way to take
//! expectations under `p(y; θ₀)`. Coordinate 0 of every parameter vector is
//! the interest parameter `ψ`; the rest are nuisance parameters `λ`.

mod covariance;
mod linexp;
mod normal;

use std::fmt;

use serde::{Deserialize, Serialize};

pub use covariance::{
    empirical_i, empirical_q, expected_i, expected_q, CovarianceBundle, CovarianceVariant,
};
pub use linexp::{linexp_density, linexp_inverse_cumulative_hazard, linexp_sample, LinearExponential};
pub use normal::NormalModel;

use crate::error::{Error, Result};
use crate::numerics::{default_step, fd_gradient, fd_jacobian, QuadratureSpec, RngStream, SquareMatrix};

/// `θ = (ψ, λ₁, …, λ_{k−1})`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct ParameterPoint(Vec<f64>);

impl ParameterPoint {
    pub fn new(values: Vec<f64>) -> Result<Self> {
        if values.is_empty() {
            return Err(Error::InvalidInput("parameter vector is empty".into()));
        }
        if values.iter().any(|v| !v.is_finite()) {
            return Err(Error::Domain(format!("parameter has non-finite coordinates: {values:?}")));
        }
        Ok(Self(values))
    }

    pub fn psi(&self) -> f64 {
        self.0[0]
    }

    pub fn nuisance(&self) -> &[f64] {
        &self.0[1..]
    }

    pub fn values(&self) -> &[f64] {
        &self.0
    }

    pub fn dim(&self) -> usize {
        self.0.len()
    }

    pub fn with_psi(&self, psi: f64) -> Self {
        let mut v = self.0.clone();
        v[0] = psi;
        Self(v)
    }
}

impl fmt::Display for ParameterPoint {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let parts: Vec<String> = self.0.iter().map(|v| format!("{v}")).collect();
        write!(f, "({})", parts.join(", "))
    }
}

/// Ordered i.i.d. observations.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct Dataset {
    observations: Vec<f64>,
}

impl Dataset {
    pub fn new(observations: Vec<f64>) -> Result<Self> {
        if observations.is_empty() {
            return Err(Error::Data("dataset is empty".into()));
        }
        if let Some(i) = observations.iter().position(|v| !v.is_finite()) {
            return Err(Error::Data(format!("observation {} is not finite", i + 1)));
        }
        Ok(Self { observations })
    }

    pub fn len(&self) -> usize {
        self.observations.len()
    }

    pub fn is_empty(&self) -> bool {
        self.observations.is_empty()
    }

    pub fn observations(&self) -> &[f64] {
        &self.observations
    }

    pub fn mean(&self) -> f64 {
        self.observations.iter().sum::<f64>() / self.len() as f64
    }
}

/// Remission times in weeks for 21 leukemia patients.
pub fn leukemia21() -> Dataset {
    Dataset::new(vec![
        1.0, 1.0, 2.0, 2.0, 3.0, 4.0, 4.0, 5.0, 5.0, 6.0, 8.0, 8.0, 9.0, 10.0, 10.0, 12.0, 14.0, 16.0, 20.0, 24.0, 34.0,
    ])
    .expect("built-in dataset is valid")
}

/// Lower/upper limits of one parameter coordinate.
///
/// A closed lower bound is attainable: the likelihood is defined there and
/// the optimizer may stop on it.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Bound {
    pub lower: f64,
    pub lower_closed: bool,
    pub upper: f64,
}

impl Bound {
    pub const FREE: Bound = Bound {
        lower: f64::NEG_INFINITY,
        lower_closed: false,
        upper: f64::INFINITY,
    };

    pub fn positive() -> Self {
        Bound {
            lower: 0.0,
            lower_closed: false,
            upper: f64::INFINITY,
        }
    }

    pub fn non_negative() -> Self {
        Bound {
            lower: 0.0,
            lower_closed: true,
            upper: f64::INFINITY,
        }
    }

    pub fn contains(&self, v: f64) -> bool {
        let above = if self.lower_closed { v >= self.lower } else { v > self.lower };
        v.is_finite() && above && v < self.upper
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ExpectationSupport {
    Quadrature,
    ClosedForm,
    Unavailable,
}

pub trait Model: Send + Sync {
    fn id(&self) -> &'static str;

    /// Parameter dimension `k`.
    fn dim(&self) -> usize;

    fn bounds(&self) -> Vec<Bound>;

    fn in_support(&self, y: f64) -> bool;

    /// `log p(y; θ)`, assuming `θ` and `y` were already validated.
    fn log_density(&self, theta: &[f64], y: f64) -> f64;

    fn analytic_score(&self, _theta: &[f64], _y: f64) -> Option<Vec<f64>> {
        None
    }

    fn analytic_hessian(&self, _theta: &[f64], _y: f64) -> Option<SquareMatrix> {
        None
    }

    fn sample(&self, theta: &ParameterPoint, n: usize, stream: &mut RngStream) -> Result<Dataset>;

    fn expectation_support(&self) -> ExpectationSupport {
        ExpectationSupport::Unavailable
    }

    /// `E[g(Y); θ₀]` for a vector-valued `g` of length `dim`.
    fn expectation(
        &self,
        _theta0: &ParameterPoint,
        _dim: usize,
        _g: &dyn Fn(f64, &mut [f64]),
        _spec: &QuadratureSpec,
    ) -> Result<Vec<f64>> {
        Err(Error::Unsupported(format!("model `{}` has no expectation support", self.id())))
    }

    /// A moment-matched admissible starting point for the optimizer.
    fn initial_point(&self, data: &Dataset) -> ParameterPoint;

    fn check_parameters(&self, theta: &[f64]) -> Result<()> {
        if theta.len() != self.dim() {
            return Err(Error::InvalidInput(format!(
                "model `{}` has {} parameters, got {}",
                self.id(),
                self.dim(),
                theta.len()
            )));
        }
        for (i, (v, b)) in theta.iter().zip(self.bounds()).enumerate() {
            if !b.contains(*v) {
                return Err(Error::Domain(format!(
                    "coordinate {} = {v} is outside the parameter space of `{}`",
                    i + 1,
                    self.id()
                )));
            }
        }
        Ok(())
    }

    fn check_data(&self, data: &Dataset) -> Result<()> {
        for (i, y) in data.observations().iter().enumerate() {
            if !self.in_support(*y) {
                return Err(Error::Data(format!(
                    "observation {} = {y} is outside the support of `{}`",
                    i + 1,
                    self.id()
                )));
            }
        }
        Ok(())
    }

    /// Per-observation score, analytic when available.
    fn obs_score(&self, theta: &[f64], y: f64) -> Result<Vec<f64>> {
        if let Some(s) = self.analytic_score(theta, y) {
            return Ok(s);
        }
        fd_gradient(|t| self.log_density(t, y), theta, default_step())
    }

    /// Per-observation Hessian, analytic when available.
    fn obs_hessian(&self, theta: &[f64], y: f64) -> Result<SquareMatrix> {
        if let Some(h) = self.analytic_hessian(theta, y) {
            return Ok(h);
        }
        fd_jacobian(
            |t| self.obs_score(t, y).unwrap_or_else(|_| vec![f64::NAN; t.len()]),
            theta,
            default_step(),
        )
    }
}

fn validate(model: &dyn Model, theta: &ParameterPoint, data: &Dataset) -> Result<()> {
    model.check_parameters(theta.values())?;
    model.check_data(data)
}

/// `ℓ(θ) = Σⱼ ℓ⁽ʲ⁾(θ; yⱼ)`.
pub fn loglik(model: &dyn Model, theta: &ParameterPoint, data: &Dataset) -> Result<f64> {
    validate(model, theta, data)?;
    let v: f64 = data
        .observations()
        .iter()
        .map(|&y| model.log_density(theta.values(), y))
        .sum();
    if !v.is_finite() {
        return Err(Error::Domain(format!("log-likelihood is not finite at {theta}")));
    }
    Ok(v)
}

pub fn score(model: &dyn Model, theta: &ParameterPoint, data: &Dataset) -> Result<Vec<f64>> {
    validate(model, theta, data)?;
    let mut total = vec![0.0; model.dim()];
    for &y in data.observations() {
        for (t, s) in total.iter_mut().zip(model.obs_score(theta.values(), y)?) {
            *t += s;
        }
    }
    Ok(total)
}

/// `ℓ_θθ(θ)`, symmetrized.
pub fn hessian(model: &dyn Model, theta: &ParameterPoint, data: &Dataset) -> Result<SquareMatrix> {
    validate(model, theta, data)?;
    let k = model.dim();
    let mut total = SquareMatrix::zeros(k);
    for &y in data.observations() {
        let h = model.obs_hessian(theta.values(), y)?;
        for i in 0..k {
            for j in 0..k {
                total[(i, j)] += h[(i, j)];
            }
        }
    }
    Ok(total.symmetrized())
}

/// Built-in model by id.
pub fn builtin_model(id: &str) -> Option<Box<dyn Model>> {
    match id {
        "linexp" => Some(Box::new(LinearExponential)),
        "normal" => Some(Box::new(NormalModel)),
        _ => None,
    }
}
