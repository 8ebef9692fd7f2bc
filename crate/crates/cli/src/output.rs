//! Versioned JSON documents and fixed-format tables.

use std::io::Write;

use rstar_core::fit::FitResult;
use rstar_core::inference::LimitResult;
use rstar_core::simulate::{CoverageReport, NormalityDiagnostic, RateRecord};
use rstar_core::statistics::{StatisticKind, StatisticSet};
use serde::{Deserialize, Serialize};

/// Bumped whenever a field of any document changes.
pub const SCHEMA_VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Document<T> {
    pub schema_version: u32,
    pub command: String,
    pub result: T,
}

impl<T: Serialize> Document<T> {
    pub fn new(command: &str, result: T) -> Self {
        Self {
            schema_version: SCHEMA_VERSION,
            command: command.to_string(),
            result,
        }
    }

    pub fn write_json(&self, out: &mut dyn Write) -> std::io::Result<()> {
        serde_json::to_writer_pretty(&mut *out, self)?;
        writeln!(out)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FitDocument {
    pub model: String,
    pub n: usize,
    pub fit: FitResult,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LimitsTable {
    pub model: String,
    pub n: usize,
    pub psi_hat: f64,
    pub limits: Vec<LimitResult>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DiagnoseRecord {
    pub normality: NormalityDiagnostic,
    pub rate: RateRecord,
}

pub fn fit_table(doc: &FitDocument, out: &mut dyn Write) -> std::io::Result<()> {
    let fit = &doc.fit;
    writeln!(out, "model           {}", doc.model)?;
    writeln!(out, "observations    {}", doc.n)?;
    writeln!(out, "log-likelihood  {:.6}", fit.max_loglik)?;
    let theta: Vec<String> = fit.theta_hat.values().iter().map(|v| format!("{v:.6}")).collect();
    writeln!(out, "estimate        {}", theta.join("  "))?;
    if !fit.on_boundary.is_empty() {
        let at: Vec<String> = fit.on_boundary.iter().map(|i| (i + 1).to_string()).collect();
        writeln!(out, "on bound        coordinate {}", at.join(", "))?;
    }
    writeln!(out, "observed information")?;
    for row in fit.observed_information.rows() {
        let cells: Vec<String> = row.iter().map(|v| format!("{v:>16.6}")).collect();
        writeln!(out, "  {}", cells.join(""))?;
    }
    Ok(())
}

pub fn statistic_table(sets: &[StatisticSet], out: &mut dyn Write) -> std::io::Result<()> {
    writeln!(
        out,
        "{:>10} {:>9} {:>9} {:>9} {:>9} {:>9}",
        "psi", "R", "Ubar", "Uhat", "Rbar*", "Rhat*"
    )?;
    for s in sets {
        writeln!(
            out,
            "{:>10.4} {:>9.4} {:>9.4} {:>9.4} {:>9.4} {:>9.4}{}",
            s.psi,
            s.r,
            s.u_bar,
            s.u_hat,
            s.r_bar_star,
            s.r_hat_star,
            if s.near_singular { "  (interpolated)" } else { "" }
        )?;
    }
    Ok(())
}

fn columns(kinds: impl Iterator<Item = StatisticKind>) -> Vec<StatisticKind> {
    let mut out: Vec<StatisticKind> = Vec::new();
    for k in kinds {
        if !out.contains(&k) {
            out.push(k);
        }
    }
    out
}

fn levels(values: impl Iterator<Item = f64>) -> Vec<f64> {
    let mut out: Vec<f64> = Vec::new();
    for v in values {
        if !out.contains(&v) {
            out.push(v);
        }
    }
    out
}

pub fn limits_table(table: &LimitsTable, out: &mut dyn Write) -> std::io::Result<()> {
    let kinds = columns(table.limits.iter().map(|l| l.kind));
    let probs = levels(table.limits.iter().map(|l| l.probability));
    writeln!(out, "psi_hat = {:.4} (n = {})", table.psi_hat, table.n)?;
    write!(out, "{:>11}", "Probability")?;
    for k in &kinds {
        write!(out, " {:>8}", k.name())?;
    }
    writeln!(out)?;
    for p in probs {
        write!(out, "{p:>11.3}")?;
        for k in &kinds {
            match table.limits.iter().find(|l| l.kind == *k && l.probability == p) {
                Some(l) => write!(out, " {:>8.4}", l.psi_limit)?,
                None => write!(out, " {:>8}", "-")?,
            }
        }
        writeln!(out)?;
    }
    Ok(())
}

pub fn coverage_table(report: &CoverageReport, out: &mut dyn Write) -> std::io::Result<()> {
    let spec = &report.spec;
    writeln!(
        out,
        "model {} at {}, n = {}, replicates = {}, seed = {}",
        spec.model, spec.theta, spec.n, spec.replicates, spec.seed
    )?;
    let f = &report.failures_by_stage;
    writeln!(
        out,
        "used {}, failed {} (no interior maximum {}, fit {}, statistic {}), MLE on a bound {}{}",
        report.used,
        report.failures,
        f.no_interior_maximum,
        f.fit + f.sample,
        f.statistic,
        report.mle_on_boundary,
        if report.valid { "" } else { "  [INVALID: failures exceed 0.1%]" }
    )?;
    write!(out, "{:>11}", "Probability")?;
    for k in &spec.kinds {
        write!(out, " {:>8} {:>8}", k.name(), "(se)")?;
    }
    writeln!(out)?;
    for &p in &spec.levels {
        write!(out, "{p:>11.3}")?;
        for &k in &spec.kinds {
            match report.entry(k, p) {
                Some(e) => write!(out, " {:>8.4} {:>8.4}", e.coverage, e.mc_standard_error)?,
                None => write!(out, " {:>8} {:>8}", "-", "-")?,
            }
        }
        writeln!(out)?;
    }
    Ok(())
}

pub fn diagnose_table(record: &DiagnoseRecord, out: &mut dyn Write) -> std::io::Result<()> {
    let d = &record.normality;
    writeln!(
        out,
        "normality: n = {}, replicates = {} (used {}, failed {})",
        d.n, d.replicates, d.used, d.failures
    )?;
    writeln!(out, "{:>9} {:>9} {:>9} {:>9} {:>9}", "statistic", "KS", "mean", "variance", "skewness")?;
    for m in &d.statistics {
        writeln!(
            out,
            "{:>9} {:>9.4} {:>9.4} {:>9.4} {:>9.4}",
            m.kind.name(),
            m.ks_distance,
            m.mean,
            m.variance,
            m.skewness
        )?;
    }
    let r = &record.rate;
    writeln!(out, "agreement rate: replicates = {}", r.replicates)?;
    writeln!(out, "{:>9} {:>16}", "n", "median |Rhat-Rbar|")?;
    for e in &r.entries {
        writeln!(out, "{:>9} {:>16.6}", e.n, e.median_abs_difference)?;
    }
    writeln!(out, "slope {:.4}, ratio {:.4}", r.slope, r.ratio)
}
