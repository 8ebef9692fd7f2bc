//! One-sided confidence limits and p-values from `R`, `R̄*` and `R̂*`.
//!
//! All three statistics decrease in `ψ`. The upper limit at probability `p`
//! solves `statistic(ψ) = Φ⁻¹(1 − p)`, so `Pr(ψ ≤ limit) = p` and limits
//! increase with `p`.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::models::{Dataset, Model};
use crate::numerics::{brent_root, expand_bracket, normal_cdf, normal_quantile};
use crate::statistics::{Analysis, StatisticKind};

/// Tolerance on `ψ` for the limit root.
pub const LIMIT_TOLERANCE: f64 = 1e-7;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BracketPolicy {
    /// First offset from `ψ̂`, relative to `|ψ̂|`.
    pub initial_fraction: f64,
    pub max_expansions: usize,
}

impl Default for BracketPolicy {
    fn default() -> Self {
        Self {
            initial_fraction: 0.1,
            max_expansions: 60,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LimitRequest {
    pub kind: StatisticKind,
    pub probability: f64,
    #[serde(default)]
    pub bracket: BracketPolicy,
}

impl LimitRequest {
    pub fn new(kind: StatisticKind, probability: f64) -> Result<Self> {
        check_probability(probability)?;
        Ok(Self {
            kind,
            probability,
            bracket: BracketPolicy::default(),
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LimitResult {
    pub kind: StatisticKind,
    pub probability: f64,
    pub psi_limit: f64,
    /// Statistic value at `psi_limit`; the target is `Φ⁻¹(1 − p)`.
    pub achieved: f64,
    pub iterations: usize,
}

fn check_probability(p: f64) -> Result<()> {
    if p > 0.0 && p < 1.0 {
        Ok(())
    } else {
        Err(Error::InvalidInput(format!("probability must lie in (0, 1), got {p}")))
    }
}

impl Analysis<'_> {
    pub fn upper_limit(&mut self, request: &LimitRequest) -> Result<LimitResult> {
        check_probability(request.probability)?;
        let kind = request.kind;
        let target = normal_quantile(1.0 - request.probability)?;
        let psi_hat = self.psi_hat();
        // R vanishes exactly at the MLE; the modified statistics do not
        if request.probability == 0.5 && kind == StatisticKind::R {
            return Ok(LimitResult {
                kind,
                probability: 0.5,
                psi_limit: psi_hat,
                achieved: 0.0,
                iterations: 0,
            });
        }

        let f_hat = self.statistic(kind, psi_hat)? - target;
        if f_hat == 0.0 {
            return Ok(LimitResult {
                kind,
                probability: request.probability,
                psi_limit: psi_hat,
                achieved: target,
                iterations: 0,
            });
        }
        // decreasing statistic: above target means the root lies at larger psi
        let direction = if f_hat > 0.0 { 1.0 } else { -1.0 };
        let step = if psi_hat != 0.0 {
            request.bracket.initial_fraction * psi_hat.abs()
        } else {
            self.psi_scale()
        };
        let limit = self.psi_limit(direction);
        let bracket = expand_bracket(
            |psi| Ok(self.statistic(kind, psi)? - target),
            psi_hat,
            f_hat,
            step,
            direction,
            limit,
            request.bracket.max_expansions,
        )
        .map_err(|e| e.context(format!("bracketing the {kind} limit at p = {}", request.probability)))?;
        let (lo, hi) = if bracket.a < bracket.b {
            (bracket.a, bracket.b)
        } else {
            (bracket.b, bracket.a)
        };
        let root = brent_root(|psi| Ok(self.statistic(kind, psi)? - target), lo, hi, LIMIT_TOLERANCE)
            .map_err(|e| e.context(format!("{kind} limit at p = {}", request.probability)))?;
        Ok(LimitResult {
            kind,
            probability: request.probability,
            psi_limit: root.x,
            achieved: root.f_x + target,
            iterations: root.iterations,
        })
    }

    /// `Φ(statistic(ψ₀))`, the lower-tail significance at `ψ₀`.
    pub fn p_value(&mut self, kind: StatisticKind, psi0: f64) -> Result<f64> {
        Ok(normal_cdf(self.statistic(kind, psi0)?))
    }

    pub fn two_sided_interval(&mut self, kind: StatisticKind, level: f64) -> Result<(f64, f64)> {
        check_probability(level)?;
        let lower = self.upper_limit(&LimitRequest::new(kind, 0.5 * (1.0 - level))?)?;
        let upper = self.upper_limit(&LimitRequest::new(kind, 0.5 * (1.0 + level))?)?;
        Ok((lower.psi_limit, upper.psi_limit))
    }
}

pub fn upper_limit(model: &dyn Model, data: &Dataset, kind: StatisticKind, p: f64) -> Result<LimitResult> {
    Analysis::new(model, data)?.upper_limit(&LimitRequest::new(kind, p)?)
}

pub fn p_value(model: &dyn Model, data: &Dataset, kind: StatisticKind, psi0: f64) -> Result<f64> {
    Analysis::new(model, data)?.p_value(kind, psi0)
}

pub fn two_sided_interval(model: &dyn Model, data: &Dataset, kind: StatisticKind, level: f64) -> Result<(f64, f64)> {
    Analysis::new(model, data)?.two_sided_interval(kind, level)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::models::{leukemia21, LinearExponential};

    #[test]
    fn median_limit_is_the_mle() {
        let data = leukemia21();
        let mut a = Analysis::new(&LinearExponential, &data).unwrap();
        let r = a.upper_limit(&LimitRequest::new(StatisticKind::R, 0.5).unwrap()).unwrap();
        assert_eq!(r.psi_limit, a.psi_hat());
    }

    #[test]
    fn limits_match_independent_oracle() {
        // scipy inversion of the same statistics
        let data = leukemia21();
        let mut a = Analysis::new(&LinearExponential, &data).unwrap();
        let cases = [
            (StatisticKind::R, 0.01, 0.020633),
            (StatisticKind::RBar, 0.975, 0.156043),
            (StatisticKind::RHat, 0.99, 0.167024),
        ];
        for (kind, p, oracle) in cases {
            let lim = a.upper_limit(&LimitRequest::new(kind, p).unwrap()).unwrap();
            assert!((lim.psi_limit - oracle).abs() < 2e-6, "{kind} {p}: {}", lim.psi_limit);
            let back = a.p_value(kind, lim.psi_limit).unwrap();
            assert!((back - (1.0 - p)).abs() < 1e-6);
        }
    }

    #[test]
    fn bad_probability() {
        assert!(LimitRequest::new(StatisticKind::R, 1.0).is_err());
        assert!(LimitRequest::new(StatisticKind::R, 0.0).is_err());
    }
}
