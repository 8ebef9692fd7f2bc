use std::io::Write;

use rstar_core::inference::LimitRequest;
use rstar_core::models::ParameterPoint;
use rstar_core::simulate::{coverage_study_with, normality_diagnostic, rate_probe, CoverageSpec};
use rstar_core::statistics::Analysis;

use crate::output::{self, DiagnoseRecord, Document, FitDocument, LimitsTable};
use crate::{load_dataset, model, CliError, Command, Format, SimulationArgs};

pub(crate) fn execute(command: &Command, out: &mut dyn Write, err: &mut dyn Write) -> Result<(), CliError> {
    match command {
        Command::Fit(args) => {
            let m = model(&args.model.model)?;
            let data = load_dataset(&args.data.data)?;
            let fit = rstar_core::fit::fit_full(m.as_ref(), &data, None)?;
            let doc = FitDocument {
                model: m.id().to_string(),
                n: data.len(),
                fit,
            };
            match args.model.format {
                Format::Json => Document::new("fit", doc).write_json(out)?,
                Format::Table => output::fit_table(&doc, out)?,
            }
        }
        Command::Statistic(args) => {
            let m = model(&args.model.model)?;
            let data = load_dataset(&args.data.data)?;
            let mut analysis = Analysis::new(m.as_ref(), &data)?;
            let sets = args
                .psi
                .iter()
                .map(|&psi| analysis.statistic_set(psi))
                .collect::<Result<Vec<_>, _>>()?;
            match args.model.format {
                Format::Json => Document::new("statistic", sets).write_json(out)?,
                Format::Table => output::statistic_table(&sets, out)?,
            }
        }
        Command::Limits(args) => {
            let kinds = args.selection.kinds()?;
            let levels = args.selection.levels()?;
            let m = model(&args.model.model)?;
            let data = load_dataset(&args.data.data)?;
            let mut analysis = Analysis::new(m.as_ref(), &data)?;
            let mut limits = Vec::with_capacity(kinds.len() * levels.len());
            for &kind in &kinds {
                for &p in &levels {
                    limits.push(analysis.upper_limit(&LimitRequest::new(kind, p)?)?);
                }
            }
            let table = LimitsTable {
                model: m.id().to_string(),
                n: data.len(),
                psi_hat: analysis.psi_hat(),
                limits,
            };
            match args.model.format {
                Format::Json => Document::new("limits", table).write_json(out)?,
                Format::Table => output::limits_table(&table, out)?,
            }
        }
        Command::Coverage(args) => {
            let m = model(&args.model.model)?;
            let spec = CoverageSpec {
                model: m.id().to_string(),
                theta: theta(&args.simulation)?,
                n: args.n,
                replicates: args.reps,
                levels: args.selection.levels()?,
                kinds: args.selection.kinds()?,
                seed: args.simulation.seed,
                workers: None,
            };
            let mut run = spec.clone();
            run.workers = workers(&args.simulation)?;
            let mut report = coverage_study_with(m.as_ref(), &run)?;
            // the worker hint is not part of the result
            report.spec = spec;
            if !report.valid {
                writeln!(
                    err,
                    "warning: {} of {} replicates failed; report flagged invalid",
                    report.failures, report.spec.replicates
                )?;
            }
            match args.model.format {
                Format::Json => Document::new("coverage", report).write_json(out)?,
                Format::Table => output::coverage_table(&report, out)?,
            }
        }
        Command::Diagnose(args) => {
            let m = model(&args.model.model)?;
            let theta = theta(&args.simulation)?;
            let seed = args.simulation.seed;
            let w = workers(&args.simulation)?;
            let record = DiagnoseRecord {
                normality: normality_diagnostic(m.as_ref(), &theta, args.n, args.reps, seed, w)?,
                rate: rate_probe(m.as_ref(), &theta, &args.rate_n, args.rate_reps, seed, w)?,
            };
            match args.model.format {
                Format::Json => Document::new("diagnose", record).write_json(out)?,
                Format::Table => output::diagnose_table(&record, out)?,
            }
        }
    }
    Ok(())
}

fn theta(args: &SimulationArgs) -> Result<ParameterPoint, CliError> {
    ParameterPoint::new(args.theta.clone()).map_err(|e| CliError::Usage(e.to_string()))
}

fn workers(args: &SimulationArgs) -> Result<Option<usize>, CliError> {
    match args.workers {
        Some(0) => Err(CliError::Usage("--workers must be at least 1".into())),
        w => Ok(w),
    }
}
