use std::io::Write;
use std::path::Path;

use smc_core::sim::SimTrace;

use crate::CliError;

/// 17 significant digits: round-trips every `f64`.
pub fn fmt_f64(v: f64) -> String {
    format!("{v:.16e}")
}

pub fn write_csv<W: Write>(out: W, names: &[String], columns: &[&[f64]]) -> Result<(), CliError> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(names).map_err(io_err)?;
    let rows = columns.first().map_or(0, |c| c.len());
    let mut rec = Vec::with_capacity(columns.len());
    for i in 0..rows {
        rec.clear();
        rec.extend(columns.iter().map(|c| fmt_f64(c[i])));
        w.write_record(&rec).map_err(io_err)?;
    }
    w.flush().map_err(|e| CliError::Io(e.to_string()))
}

pub fn write_trace(path: &Path, trace: &SimTrace) -> Result<(), CliError> {
    let file = std::fs::File::create(path).map_err(|e| CliError::Io(format!("{}: {e}", path.display())))?;
    let cols: Vec<&[f64]> = trace.columns().iter().map(|c| c.as_slice()).collect();
    write_csv(std::io::BufWriter::new(file), trace.names(), &cols)
}

pub fn write_json(path: &Path, value: &serde_json::Value) -> Result<(), CliError> {
    let mut text = serde_json::to_string_pretty(value).map_err(|e| CliError::Io(e.to_string()))?;
    text.push('\n');
    std::fs::write(path, text).map_err(|e| CliError::Io(format!("{}: {e}", path.display())))
}

fn io_err(e: csv::Error) -> CliError {
    CliError::Io(e.to_string())
}

/// Samples from the first numeric column of `column` (by header name) or the first column.
pub fn read_samples(path: &Path, column: Option<&str>) -> Result<Vec<f64>, CliError> {
    let mut rdr = csv::ReaderBuilder::new()
        .has_headers(false)
        .trim(csv::Trim::All)
        .from_path(path)
        .map_err(|e| CliError::Io(format!("{}: {e}", path.display())))?;
    let mut index = 0;
    let mut out = Vec::new();
    for (line, rec) in rdr.records().enumerate() {
        let rec = rec.map_err(|e| CliError::Config(format!("{}: {e}", path.display())))?;
        if line == 0 && rec.get(0).is_some_and(|f| f.parse::<f64>().is_err()) {
            if let Some(name) = column {
                index = rec.iter().position(|h| h == name).ok_or_else(|| {
                    CliError::Config(format!("{}: no column `{name}`", path.display()))
                })?;
            }
            continue;
        }
        let field = rec
            .get(index)
            .ok_or_else(|| CliError::Config(format!("{}: line {} is short", path.display(), line + 1)))?;
        let v = field.parse::<f64>().map_err(|_| {
            CliError::Config(format!("{}: line {}: `{field}` is not a number", path.display(), line + 1))
        })?;
        out.push(v);
    }
    if out.is_empty() {
        return Err(CliError::Config(format!("{}: no samples", path.display())));
    }
    Ok(out)
}
