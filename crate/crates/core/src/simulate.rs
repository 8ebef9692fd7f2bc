//! Monte Carlo coverage studies and distributional diagnostics.
//!
//! Replicate `r` draws its data from random stream `r` under a seed derived
//! from the master seed, the model, `n` and the true parameter. Results are
//! collected in replicate order before any reduction, so every report is a
//! pure function of its spec whatever the worker count.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fit::fit_full;
use crate::models::{builtin_model, Model, ParameterPoint};
use crate::numerics::{mix_seed, normal_cdf, normal_quantile, RngStream};
use crate::statistics::{Analysis, StatisticKind};

/// Largest failure fraction for which a report is still valid.
pub const FAILURE_CEILING: f64 = 1e-3;

/// The eight probabilities of the paper-style limit table.
pub const DEFAULT_LEVELS: [f64; 8] = [0.01, 0.025, 0.05, 0.1, 0.9, 0.95, 0.975, 0.99];

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CoverageSpec {
    pub model: String,
    pub theta: ParameterPoint,
    pub n: usize,
    pub replicates: usize,
    pub levels: Vec<f64>,
    pub kinds: Vec<StatisticKind>,
    pub seed: u64,
    /// Thread count hint; never affects results.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub workers: Option<usize>,
}

impl CoverageSpec {
    pub fn validate(&self) -> Result<()> {
        if self.replicates == 0 {
            return Err(Error::InvalidInput("replicate count must be at least 1".into()));
        }
        if self.levels.is_empty() || self.kinds.is_empty() {
            return Err(Error::InvalidInput("coverage needs at least one level and one statistic".into()));
        }
        if let Some(p) = self.levels.iter().find(|p| !(**p > 0.0 && **p < 1.0)) {
            return Err(Error::InvalidInput(format!("level {p} is outside (0, 1)")));
        }
        if self.workers == Some(0) {
            return Err(Error::InvalidInput("worker count must be positive".into()));
        }
        Ok(())
    }
}

/// Statistics at the true `ψ` for one simulated data set.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ReplicateValues {
    pub r: f64,
    pub r_bar_star: f64,
    pub r_hat_star: f64,
    pub mle_on_boundary: bool,
    pub near_singular: bool,
}

impl ReplicateValues {
    pub fn get(&self, kind: StatisticKind) -> f64 {
        match kind {
            StatisticKind::R => self.r,
            StatisticKind::RBar => self.r_bar_star,
            StatisticKind::RHat => self.r_hat_star,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FailureStage {
    Sample,
    /// The likelihood has no maximizer inside the parameter space.
    NoInteriorMaximum,
    Fit,
    Statistic,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReplicateFailure {
    pub index: usize,
    pub stage: FailureStage,
    pub message: String,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct FailureCounts {
    pub sample: usize,
    pub no_interior_maximum: usize,
    pub fit: usize,
    pub statistic: usize,
}

impl FailureCounts {
    fn tally(failures: &[&ReplicateFailure]) -> Self {
        let mut c = Self::default();
        for f in failures {
            match f.stage {
                FailureStage::Sample => c.sample += 1,
                FailureStage::NoInteriorMaximum => c.no_interior_maximum += 1,
                FailureStage::Fit => c.fit += 1,
                FailureStage::Statistic => c.statistic += 1,
            }
        }
        c
    }
}

pub type ReplicateOutcome = std::result::Result<ReplicateValues, ReplicateFailure>;

/// Seed shared by all replicates of a study. The replicate count is left
/// out so that a longer run extends a shorter one.
pub fn study_seed(master: u64, model_id: &str, n: usize, theta: &ParameterPoint) -> u64 {
    let mut words = vec![master, fnv1a(model_id.as_bytes()), n as u64];
    words.extend(theta.values().iter().map(|v| v.to_bits()));
    mix_seed(&words)
}

fn fnv1a(bytes: &[u8]) -> u64 {
    bytes.iter().fold(0xcbf2_9ce4_8422_2325, |h, b| (h ^ *b as u64).wrapping_mul(0x0100_0000_01b3))
}

/// Simulates replicate `index` and evaluates all three statistics at the
/// true `ψ`. Any failure excludes the replicate for every statistic.
pub fn simulate_replicate(model: &dyn Model, theta: &ParameterPoint, n: usize, seed: u64, index: usize) -> ReplicateOutcome {
    let fail = |stage, e: Error| ReplicateFailure {
        index,
        stage,
        message: e.to_string(),
    };
    let mut stream = RngStream::new(seed, index as u64);
    let data = model.sample(theta, n, &mut stream).map_err(|e| fail(FailureStage::Sample, e))?;
    let full = fit_full(model, &data, None).map_err(|e| match e.root() {
        Error::NoInteriorMaximum { .. } => fail(FailureStage::NoInteriorMaximum, e),
        _ => fail(FailureStage::Fit, e),
    })?;
    let mle_on_boundary = !full.on_boundary.is_empty();
    let set = Analysis::with_full_fit(model, &data, full)
        .statistic_set(theta.psi())
        .map_err(|e| fail(FailureStage::Statistic, e))?;
    Ok(ReplicateValues {
        r: set.r,
        r_bar_star: set.r_bar_star,
        r_hat_star: set.r_hat_star,
        mle_on_boundary,
        near_singular: set.near_singular,
    })
}

fn with_workers<T: Send>(workers: Option<usize>, job: impl FnOnce() -> T + Send) -> Result<T> {
    match workers {
        None => Ok(job()),
        Some(w) => rayon::ThreadPoolBuilder::new()
            .num_threads(w)
            .build()
            .map(|pool| pool.install(job))
            .map_err(|e| Error::InvalidInput(format!("cannot start {w} workers: {e}"))),
    }
}

/// Replicates `range` of a study, in index order.
pub fn simulate_replicates(
    model: &dyn Model,
    theta: &ParameterPoint,
    n: usize,
    seed: u64,
    range: std::ops::Range<usize>,
    workers: Option<usize>,
) -> Result<Vec<ReplicateOutcome>> {
    model.check_parameters(theta.values())?;
    let study = study_seed(seed, model.id(), n, theta);
    with_workers(workers, || {
        range
            .into_par_iter()
            .map(|i| simulate_replicate(model, theta, n, study, i))
            .collect()
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CoverageEntry {
    pub kind: StatisticKind,
    pub level: f64,
    pub covered: usize,
    pub coverage: f64,
    pub mc_standard_error: f64,
    pub failures: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CoverageReport {
    pub spec: CoverageSpec,
    pub study_seed: u64,
    pub used: usize,
    pub failures: usize,
    pub failures_by_stage: FailureCounts,
    pub failure_examples: Vec<ReplicateFailure>,
    pub mle_on_boundary: usize,
    pub near_singular: usize,
    pub valid: bool,
    pub entries: Vec<CoverageEntry>,
}

impl CoverageReport {
    pub fn entry(&self, kind: StatisticKind, level: f64) -> Option<&CoverageEntry> {
        self.entries.iter().find(|e| e.kind == kind && e.level == level)
    }
}

pub fn coverage_study(spec: &CoverageSpec) -> Result<CoverageReport> {
    let model = builtin_model(&spec.model).ok_or_else(|| Error::Unsupported(format!("unknown model `{}`", spec.model)))?;
    coverage_study_with(model.as_ref(), spec)
}

/// Coverage of the upper limits at each level: replicate `r` covers when
/// `statistic(ψ_true) ≥ Φ⁻¹(1 − p)`, which by monotonicity in `ψ` is the
/// event `ψ_true ≤ limit_p`.
pub fn coverage_study_with(model: &dyn Model, spec: &CoverageSpec) -> Result<CoverageReport> {
    spec.validate()?;
    if model.id() != spec.model {
        return Err(Error::InvalidInput(format!(
            "spec names model `{}` but `{}` was supplied",
            spec.model,
            model.id()
        )));
    }
    let outcomes = simulate_replicates(model, &spec.theta, spec.n, spec.seed, 0..spec.replicates, spec.workers)?;
    let values: Vec<&ReplicateValues> = outcomes.iter().filter_map(|o| o.as_ref().ok()).collect();
    let failed: Vec<&ReplicateFailure> = outcomes.iter().filter_map(|o| o.as_ref().err()).collect();
    let used = values.len();
    let failures = failed.len();

    let mut entries = Vec::with_capacity(spec.kinds.len() * spec.levels.len());
    for &kind in &spec.kinds {
        for &level in &spec.levels {
            let z = normal_quantile(1.0 - level)?;
            let covered = values.iter().filter(|v| v.get(kind) >= z).count();
            let (coverage, mc_standard_error) = if used > 0 {
                let p = covered as f64 / used as f64;
                (p, (p * (1.0 - p) / used as f64).sqrt())
            } else {
                (f64::NAN, f64::NAN)
            };
            entries.push(CoverageEntry {
                kind,
                level,
                covered,
                coverage,
                mc_standard_error,
                failures,
            });
        }
    }
    Ok(CoverageReport {
        spec: spec.clone(),
        study_seed: study_seed(spec.seed, model.id(), spec.n, &spec.theta),
        used,
        failures,
        failures_by_stage: FailureCounts::tally(&failed),
        failure_examples: failed.into_iter().take(10).cloned().collect(),
        mle_on_boundary: values.iter().filter(|v| v.mle_on_boundary).count(),
        near_singular: values.iter().filter(|v| v.near_singular).count(),
        valid: used > 0 && (failures as f64) < FAILURE_CEILING * spec.replicates as f64,
        entries,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Moments {
    pub kind: StatisticKind,
    pub ks_distance: f64,
    pub mean: f64,
    pub variance: f64,
    pub skewness: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NormalityDiagnostic {
    pub model: String,
    pub theta: ParameterPoint,
    pub n: usize,
    pub replicates: usize,
    pub seed: u64,
    pub used: usize,
    pub failures: usize,
    pub statistics: Vec<Moments>,
}

impl NormalityDiagnostic {
    pub fn get(&self, kind: StatisticKind) -> Option<&Moments> {
        self.statistics.iter().find(|m| m.kind == kind)
    }
}

/// Kolmogorov–Smirnov distance between the sample and `Φ`.
pub fn ks_distance(values: &[f64]) -> f64 {
    let mut sorted = values.to_vec();
    sorted.sort_by(f64::total_cmp);
    let n = sorted.len() as f64;
    sorted
        .iter()
        .enumerate()
        .map(|(i, x)| {
            let c = normal_cdf(*x);
            ((i + 1) as f64 / n - c).max(c - i as f64 / n)
        })
        .fold(0.0, f64::max)
}

fn moments(kind: StatisticKind, values: &[f64]) -> Moments {
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    let m2 = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / n;
    let m3 = values.iter().map(|v| (v - mean).powi(3)).sum::<f64>() / n;
    Moments {
        kind,
        ks_distance: ks_distance(values),
        mean,
        variance: m2 * n / (n - 1.0).max(1.0),
        skewness: m3 / m2.powf(1.5),
    }
}

pub fn normality_diagnostic(
    model: &dyn Model,
    theta: &ParameterPoint,
    n: usize,
    replicates: usize,
    seed: u64,
    workers: Option<usize>,
) -> Result<NormalityDiagnostic> {
    if replicates == 0 {
        return Err(Error::InvalidInput("normality diagnostic needs at least one replicate".into()));
    }
    let outcomes = simulate_replicates(model, theta, n, seed, 0..replicates, workers)?;
    let values: Vec<ReplicateValues> = outcomes.iter().filter_map(|o| o.as_ref().ok().copied()).collect();
    if values.is_empty() {
        return Err(Error::Data("every replicate failed; no diagnostic to report".into()));
    }
    let statistics = StatisticKind::ALL
        .iter()
        .map(|&kind| moments(kind, &values.iter().map(|v| v.get(kind)).collect::<Vec<_>>()))
        .collect();
    Ok(NormalityDiagnostic {
        model: model.id().to_string(),
        theta: theta.clone(),
        n,
        replicates,
        seed,
        used: values.len(),
        failures: replicates - values.len(),
        statistics,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RateEntry {
    pub n: usize,
    pub median_abs_difference: f64,
    pub used: usize,
    pub failures: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RateRecord {
    pub model: String,
    pub theta: ParameterPoint,
    pub replicates: usize,
    pub seed: u64,
    pub entries: Vec<RateEntry>,
    /// Least-squares slope of log median against log n.
    pub slope: f64,
    /// Median at the smallest n over the median at the largest.
    pub ratio: f64,
}

/// Median `|R̂* − R̄*|` at each sample size.
pub fn rate_probe(
    model: &dyn Model,
    theta: &ParameterPoint,
    n_list: &[usize],
    replicates: usize,
    seed: u64,
    workers: Option<usize>,
) -> Result<RateRecord> {
    if n_list.len() < 2 {
        return Err(Error::InvalidInput("rate probe needs at least two sample sizes".into()));
    }
    if replicates == 0 {
        return Err(Error::InvalidInput("rate probe needs at least one replicate".into()));
    }
    let mut entries = Vec::with_capacity(n_list.len());
    for &n in n_list {
        let outcomes = simulate_replicates(model, theta, n, seed, 0..replicates, workers)?;
        let mut diffs: Vec<f64> = outcomes
            .iter()
            .filter_map(|o| o.as_ref().ok())
            .map(|v| (v.r_hat_star - v.r_bar_star).abs())
            .collect();
        if diffs.is_empty() {
            return Err(Error::Data(format!("every replicate failed at n = {n}")));
        }
        entries.push(RateEntry {
            n,
            median_abs_difference: median(&mut diffs),
            used: diffs.len(),
            failures: replicates - diffs.len(),
        });
    }
    let xs: Vec<f64> = entries.iter().map(|e| (e.n as f64).ln()).collect();
    let ys: Vec<f64> = entries.iter().map(|e| e.median_abs_difference.ln()).collect();
    let mx = xs.iter().sum::<f64>() / xs.len() as f64;
    let my = ys.iter().sum::<f64>() / ys.len() as f64;
    let sxy: f64 = xs.iter().zip(&ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let sxx: f64 = xs.iter().map(|x| (x - mx).powi(2)).sum();
    let smallest = entries.iter().min_by_key(|e| e.n).unwrap();
    let largest = entries.iter().max_by_key(|e| e.n).unwrap();
    let ratio = smallest.median_abs_difference / largest.median_abs_difference;
    Ok(RateRecord {
        model: model.id().to_string(),
        theta: theta.clone(),
        replicates,
        seed,
        slope: sxy / sxx,
        ratio,
        entries,
    })
}

fn median(values: &mut [f64]) -> f64 {
    values.sort_by(f64::total_cmp);
    let m = values.len() / 2;
    if values.len() % 2 == 1 {
        values[m]
    } else {
        0.5 * (values[m - 1] + values[m])
    }
}
