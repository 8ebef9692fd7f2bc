//! The signed likelihood root `R` and its modifications
//! `R̄* = R + log(Ū/R)/R` and `R̂* = R + log(Û/R)/R`.
//!
//! `Ū` and `Û` share one assembly. With `A = i(θ̂)⁻¹ Ĵ`,
//!
//! ```text
//!     | {Q(θ̂;θ̂) − Q(θ̂_ψ;θ̂)} A |
//! U = |   [I(θ̂_ψ;θ̂) A]_λ      |  /  (|j_λλ(θ̂_ψ)|^{1/2} |Ĵ|^{1/2})
//! ```
//!
//! where the second block keeps the nuisance rows of the product. The
//! expected covariances give `Ū`; the per-observation sums give `Û`. The
//! sign of `U` is then matched to that of `R`.
//!
//! Both `U` and `R` vanish at `ψ = ψ̂`, so `log(U/R)/R` is evaluated as
//! `0/0` there. The singularity is removable; within `|R| ≤ band` the
//! modified statistics are taken from a quadratic in `R` through three
//! evaluations just outside the band.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fit::{fit_constrained, fit_full, ConstrainedFit, FitResult};
use crate::models::{CovarianceBundle, Dataset, Model, ParameterPoint};
use crate::numerics::{brent_root, expand_bracket, QuadratureSpec, SquareMatrix};

/// Half-width of the band around `R = 0` handled by interpolation.
pub const SINGULAR_BAND: f64 = 1e-2;

/// Consistency slack for `ℓ(θ̂_ψ) ≤ ℓ(θ̂)`.
const PROFILE_SLACK: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum StatisticKind {
    #[serde(rename = "R")]
    R,
    #[serde(rename = "Rbar")]
    RBar,
    #[serde(rename = "Rhat")]
    RHat,
}

impl StatisticKind {
    pub const ALL: [StatisticKind; 3] = [StatisticKind::R, StatisticKind::RBar, StatisticKind::RHat];

    pub fn name(&self) -> &'static str {
        match self {
            StatisticKind::R => "R",
            StatisticKind::RBar => "Rbar",
            StatisticKind::RHat => "Rhat",
        }
    }
}

impl fmt::Display for StatisticKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for StatisticKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim() {
            "R" | "r" => Ok(StatisticKind::R),
            "Rbar" | "rbar" | "R̄*" => Ok(StatisticKind::RBar),
            "Rhat" | "rhat" | "R̂*" => Ok(StatisticKind::RHat),
            other => Err(Error::InvalidInput(format!(
                "unknown statistic `{other}` (expected R, Rbar or Rhat)"
            ))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StatisticSet {
    pub psi: f64,
    pub r: f64,
    pub u_bar: f64,
    pub u_hat: f64,
    pub r_bar_star: f64,
    pub r_hat_star: f64,
    pub near_singular: bool,
    pub diagnostics: Vec<String>,
}

impl StatisticSet {
    pub fn get(&self, kind: StatisticKind) -> f64 {
        match kind {
            StatisticKind::R => self.r,
            StatisticKind::RBar => self.r_bar_star,
            StatisticKind::RHat => self.r_hat_star,
        }
    }
}

/// `sgn(ψ̂ − ψ)·√(2 max(0, ℓ(θ̂) − ℓ(θ̂_ψ)))`.
pub fn signed_lrt(full: &FitResult, constrained: &ConstrainedFit) -> Result<f64> {
    let drop = full.max_loglik - constrained.profile_loglik;
    if drop < -PROFILE_SLACK * full.max_loglik.abs().max(1.0) {
        return Err(Error::InconsistentFit { excess: -drop });
    }
    let magnitude = (2.0 * drop.max(0.0)).sqrt();
    let direction = full.theta_hat.psi() - constrained.psi;
    Ok(if direction > 0.0 {
        magnitude
    } else if direction < 0.0 {
        -magnitude
    } else {
        0.0
    })
}

/// `U` before and after its sign is matched to `R`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct UValue {
    pub value: f64,
    pub raw: f64,
}

/// Assembles `U` from a covariance bundle.
pub fn assemble_u(
    bundle: &CovarianceBundle,
    full: &FitResult,
    constrained: &ConstrainedFit,
    r: f64,
) -> Result<UValue> {
    let j_hat = &full.observed_information;
    let k = j_hat.order();
    let info = &bundle.information;
    if !info.is_positive_definite() {
        return Err(Error::Covariance(format!(
            "{:?} information i(theta_hat) is not positive definite",
            bundle.variant
        )));
    }
    let a = info
        .solve_matrix(j_hat)
        .map_err(|e| Error::Covariance(format!("{:?} information is singular: {e}", bundle.variant)))?;
    let first = a.vec_mul(&bundle.q_difference);
    let lower = bundle.cross_information.matmul(&a);
    let mut stacked = SquareMatrix::zeros(k);
    for j in 0..k {
        stacked[(0, j)] = first[j];
    }
    for i in 1..k {
        for j in 0..k {
            stacked[(i, j)] = lower[(i, j)];
        }
    }
    let det_j = j_hat.determinant()?;
    let det_jll = constrained.nuisance_information.determinant()?;
    if !(det_j > 0.0 && det_jll > 0.0) {
        return Err(Error::FitQuality(format!(
            "information determinants must be positive (|J| = {det_j:e}, |j_ll| = {det_jll:e})"
        )));
    }
    let raw = stacked.determinant()? / (det_jll.sqrt() * det_j.sqrt());
    let value = if r > 0.0 {
        raw.abs()
    } else if r < 0.0 {
        -raw.abs()
    } else {
        raw
    };
    Ok(UValue { value, raw })
}

/// `Ū`, from model expectations under `θ̂`.
pub fn u_bar(
    model: &dyn Model,
    data: &Dataset,
    full: &FitResult,
    constrained: &ConstrainedFit,
    spec: &QuadratureSpec,
) -> Result<f64> {
    let r = signed_lrt(full, constrained)?;
    let bundle = CovarianceBundle::expected(model, &full.theta_hat, &constrained.theta_psi, data.len(), spec)?;
    assemble_u(&bundle, full, constrained, r).map(|u| u.value)
}

/// `Û`, from per-observation sums.
pub fn u_hat(model: &dyn Model, data: &Dataset, full: &FitResult, constrained: &ConstrainedFit) -> Result<f64> {
    let r = signed_lrt(full, constrained)?;
    let bundle = CovarianceBundle::empirical(model, &full.theta_hat, &constrained.theta_psi, data)?;
    assemble_u(&bundle, full, constrained, r).map(|u| u.value)
}

/// `R + log(U/R)/R` for `|R| > band`.
///
/// Inside the band the formula is numerically meaningless; this returns
/// [`Error::Singularity`] there and [`Analysis::statistic_set`] interpolates.
pub fn rstar(r: f64, u: f64, band: f64) -> Result<f64> {
    let ratio = u / r;
    if r.abs() <= band {
        return Err(Error::Singularity { r, ratio });
    }
    if !(ratio > 0.0) || !ratio.is_finite() {
        return Err(Error::Singularity { r, ratio });
    }
    Ok(r + ratio.ln() / r)
}

/// Statistics at one `ψ` before any band handling.
#[derive(Debug, Clone)]
pub struct RawStatistics {
    pub psi: f64,
    pub r: f64,
    pub u_bar: UValue,
    pub u_hat: UValue,
    pub constrained: ConstrainedFit,
    pub notes: Vec<String>,
}

/// A fitted model and data set, evaluating statistics along `ψ`.
///
/// Successive constrained fits are warm-started from the previous one, so
/// an `Analysis` belongs to a single worker.
pub struct Analysis<'a> {
    model: &'a dyn Model,
    data: &'a Dataset,
    full: FitResult,
    spec: QuadratureSpec,
    band: f64,
    warm: Option<ParameterPoint>,
}

impl<'a> Analysis<'a> {
    pub fn new(model: &'a dyn Model, data: &'a Dataset) -> Result<Self> {
        let full = fit_full(model, data, None)?;
        Ok(Self::with_full_fit(model, data, full))
    }

    pub fn with_full_fit(model: &'a dyn Model, data: &'a Dataset, full: FitResult) -> Self {
        Self {
            model,
            data,
            full,
            spec: QuadratureSpec::default(),
            band: SINGULAR_BAND,
            warm: None,
        }
    }

    pub fn with_quadrature(mut self, spec: QuadratureSpec) -> Self {
        self.spec = spec;
        self
    }

    pub fn with_band(mut self, band: f64) -> Self {
        self.band = band;
        self
    }

    pub fn full_fit(&self) -> &FitResult {
        &self.full
    }

    pub fn model(&self) -> &dyn Model {
        self.model
    }

    pub fn data(&self) -> &Dataset {
        self.data
    }

    pub fn band(&self) -> f64 {
        self.band
    }

    pub fn psi_hat(&self) -> f64 {
        self.full.theta_hat.psi()
    }

    /// Rough standard error of `ψ̂` from `Ĵ⁻¹`, used to size brackets.
    pub fn psi_scale(&self) -> f64 {
        self.full
            .observed_information
            .inverse()
            .map(|inv| inv[(0, 0)].abs().sqrt())
            .ok()
            .filter(|s| s.is_finite() && *s > 0.0)
            .unwrap_or_else(|| 0.1 * self.psi_hat().abs().max(1e-8))
    }

    pub fn constrained(&mut self, psi: f64) -> Result<ConstrainedFit> {
        let fit = fit_constrained(self.model, self.data, psi, self.warm.as_ref())?;
        self.warm = Some(fit.theta_psi.clone());
        Ok(fit)
    }

    pub fn r(&mut self, psi: f64) -> Result<f64> {
        let c = self.constrained(psi)?;
        signed_lrt(&self.full, &c)
    }

    pub fn raw(&mut self, psi: f64) -> Result<RawStatistics> {
        let constrained = self.constrained(psi)?;
        let r = signed_lrt(&self.full, &constrained)?;
        let theta_hat = &self.full.theta_hat;
        let expected = CovarianceBundle::expected(self.model, theta_hat, &constrained.theta_psi, self.data.len(), &self.spec)?;
        let empirical = CovarianceBundle::empirical(self.model, theta_hat, &constrained.theta_psi, self.data)?;
        let u_bar = assemble_u(&expected, &self.full, &constrained, r).map_err(|e| e.context("U bar"))?;
        let u_hat = assemble_u(&empirical, &self.full, &constrained, r).map_err(|e| e.context("U hat"))?;
        let mut notes = expected.notes;
        if !constrained.on_boundary.is_empty() {
            notes.push(format!("constrained fit at psi = {psi} rests on a nuisance bound"));
        }
        Ok(RawStatistics {
            psi,
            r,
            u_bar,
            u_hat,
            constrained,
            notes,
        })
    }

    /// `R̄*` and `R̂*` from raw values at or outside the band; a raw `U` whose
    /// sign disagrees with `R` is an error, never silently flipped.
    fn modified(&self, raw: &RawStatistics) -> Result<(f64, f64)> {
        let mut out = [0.0; 2];
        for (slot, (u, label)) in out.iter_mut().zip([(raw.u_bar, "R bar*"), (raw.u_hat, "R hat*")]) {
            if u.raw * raw.r <= 0.0 {
                return Err(Error::Singularity {
                    r: raw.r,
                    ratio: u.raw / raw.r,
                }
                .context(format!("{label} at psi = {}", raw.psi)));
            }
            // interpolation nodes sit on the band edge itself
            *slot = rstar(raw.r, u.value, 0.0)?;
        }
        Ok((out[0], out[1]))
    }

    /// The `ψ` at which `R(ψ) = target`, searched on the side of `ψ̂` that
    /// the sign of `target` dictates.
    pub fn psi_for_r(&mut self, target: f64, tol: f64) -> Result<f64> {
        let psi_hat = self.psi_hat();
        if target == 0.0 {
            return Ok(psi_hat);
        }
        let direction = if target > 0.0 { -1.0 } else { 1.0 };
        let limit = self.psi_limit(direction);
        let step = 2.0 * target.abs() * self.psi_scale();
        let bracket = expand_bracket(|psi| Ok(self.r(psi)? - target), psi_hat, -target, step, direction, limit, 60)?;
        let (lo, hi) = if bracket.a < bracket.b {
            (bracket.a, bracket.b)
        } else {
            (bracket.b, bracket.a)
        };
        brent_root(|psi| Ok(self.r(psi)? - target), lo, hi, tol).map(|root| root.x)
    }

    /// Finite bound on `ψ` in the given direction, if the model has one.
    pub fn psi_limit(&self, direction: f64) -> Option<f64> {
        let b = self.model.bounds()[0];
        let lim = if direction < 0.0 { b.lower } else { b.upper };
        lim.is_finite().then_some(lim)
    }

    pub fn statistic_set(&mut self, psi: f64) -> Result<StatisticSet> {
        let raw = self.raw(psi)?;
        let mut diagnostics = raw.notes.clone();
        if raw.r.abs() > self.band {
            let (r_bar_star, r_hat_star) = self.modified(&raw)?;
            return Ok(StatisticSet {
                psi,
                r: raw.r,
                u_bar: raw.u_bar.value,
                u_hat: raw.u_hat.value,
                r_bar_star,
                r_hat_star,
                near_singular: false,
                diagnostics,
            });
        }

        let b = self.band;
        let targets = if raw.r > 0.0 { [2.0 * b, b, -b] } else { [-2.0 * b, -b, b] };
        let mut nodes = Vec::with_capacity(3);
        for t in targets {
            let node_psi = self
                .psi_for_r(t, 1e-12)
                .map_err(|e| e.context(format!("locating R = {t} for band interpolation")))?;
            let node = self.raw(node_psi)?;
            let (bar, hat) = self.modified(&node)?;
            nodes.push((node.r, bar, hat));
        }
        let r_bar_star = lagrange(&nodes.iter().map(|n| (n.0, n.1)).collect::<Vec<_>>(), raw.r);
        let r_hat_star = lagrange(&nodes.iter().map(|n| (n.0, n.2)).collect::<Vec<_>>(), raw.r);
        diagnostics.push(format!(
            "|R| = {:.3e} within singular band {b}; modified statistics interpolated",
            raw.r.abs()
        ));
        Ok(StatisticSet {
            psi,
            r: raw.r,
            u_bar: raw.u_bar.value,
            u_hat: raw.u_hat.value,
            r_bar_star,
            r_hat_star,
            near_singular: true,
            diagnostics,
        })
    }

    pub fn statistic(&mut self, kind: StatisticKind, psi: f64) -> Result<f64> {
        match kind {
            StatisticKind::R => self.r(psi),
            _ => self.statistic_set(psi).map(|s| s.get(kind)),
        }
    }
}

fn lagrange(points: &[(f64, f64)], x: f64) -> f64 {
    points
        .iter()
        .enumerate()
        .map(|(i, &(xi, yi))| {
            let basis: f64 = points
                .iter()
                .enumerate()
                .filter(|(j, _)| *j != i)
                .map(|(_, &(xj, _))| (x - xj) / (xi - xj))
                .product();
            yi * basis
        })
        .sum()
}

/// One constrained fit at `ψ` and all three statistics.
pub fn statistic_set(model: &dyn Model, data: &Dataset, full: &FitResult, psi: f64) -> Result<StatisticSet> {
    Analysis::with_full_fit(model, data, full.clone()).statistic_set(psi)
}
