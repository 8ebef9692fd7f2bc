use std::fs::File;
use std::path::Path;

use rstar_core::models::{leukemia21, Dataset};

use crate::CliError;

/// Data set addressed by built-in id or CSV path.
pub fn load_dataset(spec: &str) -> Result<Dataset, CliError> {
    match spec {
        "leukemia21" => Ok(leukemia21()),
        path => ingest_csv(path),
    }
}

/// Reads one numeric observation per row. A first row that does not parse
/// as a number is taken as a header; any later non-numeric row is an error
/// naming its 1-based line.
pub fn ingest_csv(path: impl AsRef<Path>) -> Result<Dataset, CliError> {
    let path = path.as_ref();
    let file = File::open(path).map_err(|e| CliError::Usage(format!("cannot open {}: {e}", path.display())))?;
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(false)
        .flexible(true)
        .trim(csv::Trim::All)
        .from_reader(file);

    let mut values = Vec::new();
    for (i, record) in reader.records().enumerate() {
        let line = i + 1;
        let record = record.map_err(|e| CliError::Data(format!("{}: row {line}: {e}", path.display())))?;
        if record.iter().all(str::is_empty) {
            continue;
        }
        if record.len() != 1 {
            return Err(CliError::Data(format!(
                "{}: row {line}: expected one value, found {}",
                path.display(),
                record.len()
            )));
        }
        let cell = &record[0];
        match cell.parse::<f64>() {
            Ok(v) if v.is_finite() => values.push(v),
            Ok(v) => {
                return Err(CliError::Data(format!("{}: row {line}: non-finite value {v}", path.display())));
            }
            Err(_) if line == 1 => {}
            Err(_) => {
                return Err(CliError::Data(format!(
                    "{}: row {line}: cannot parse `{cell}` as a number",
                    path.display()
                )));
            }
        }
    }
    if values.is_empty() {
        return Err(CliError::Data(format!("{}: no observations", path.display())));
    }
    Dataset::new(values).map_err(|e| CliError::Data(e.to_string()))
}
