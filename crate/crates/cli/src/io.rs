use nalgebra::DMatrix;
use std::path::{Path, PathBuf};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("cannot read {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("{path}: line {line}, column {column}: {message}")]
    Parse {
        path: PathBuf,
        line: u64,
        column: usize,
        message: String,
    },
    #[error("{0}")]
    Config(String),
    #[error(transparent)]
    Core(#[from] spikefisher::Error),
}

pub type CliResult<T> = std::result::Result<T, CliError>;

/// Which axis of the CSV holds observations.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, clap::ValueEnum)]
pub enum Orientation {
    /// One observation per row, one variable per column.
    #[default]
    Rows,
    /// One variable per row, one observation per column.
    Cols,
}

fn parse_error(path: &Path, line: u64, column: usize, message: impl Into<String>) -> CliError {
    CliError::Parse {
        path: path.to_path_buf(),
        line,
        column,
        message: message.into(),
    }
}

/// Reads a numeric CSV table as rows of values.
pub fn read_table(path: &Path, header: bool) -> CliResult<Vec<Vec<f64>>> {
    let file = std::fs::File::open(path).map_err(|source| CliError::Io {
        path: path.to_path_buf(),
        source,
    })?;
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(header)
        .trim(csv::Trim::All)
        .from_reader(file);
    let mut rows = Vec::new();
    for record in reader.records() {
        let record = record.map_err(|e| {
            let line = e.position().map_or(0, |p| p.line());
            parse_error(path, line, 0, e.to_string())
        })?;
        let line = record.position().map_or(0, |p| p.line());
        let row = record
            .iter()
            .enumerate()
            .map(|(j, field)| {
                field
                    .parse::<f64>()
                    .ok()
                    .filter(|v| v.is_finite())
                    .ok_or_else(|| parse_error(path, line, j + 1, format!("'{field}' is not a finite number")))
            })
            .collect::<CliResult<Vec<f64>>>()?;
        rows.push(row);
    }
    if rows.is_empty() {
        return Err(parse_error(path, 1, 1, "no data rows"));
    }
    Ok(rows)
}

/// Reads a data matrix and returns it as variables × observations.
pub fn read_matrix(path: &Path, header: bool, orientation: Orientation) -> CliResult<DMatrix<f64>> {
    let rows = read_table(path, header)?;
    let cols = rows[0].len();
    let m = DMatrix::from_row_iterator(rows.len(), cols, rows.into_iter().flatten());
    Ok(match orientation {
        Orientation::Rows => m.transpose(),
        Orientation::Cols => m,
    })
}

/// Reads a list of numbers, one or more per line.
pub fn read_vector(path: &Path, header: bool) -> CliResult<Vec<f64>> {
    Ok(read_table(path, header)?.into_iter().flatten().collect())
}

/// Writes a matrix with full round-trip precision.
#[cfg(test)]
pub fn write_matrix(path: &Path, m: &DMatrix<f64>) -> CliResult<()> {
    let io_err = |source| CliError::Io {
        path: path.to_path_buf(),
        source,
    };
    let mut w = csv::Writer::from_path(path).map_err(|e| CliError::Config(e.to_string()))?;
    for row in m.row_iter() {
        w.write_record(row.iter().map(|v| v.to_string()))
            .map_err(|e| CliError::Config(e.to_string()))?;
    }
    w.flush().map_err(io_err)
}

pub fn write_text(path: &Path, text: &str) -> CliResult<()> {
    std::fs::write(path, text).map_err(|source| CliError::Io {
        path: path.to_path_buf(),
        source,
    })
}

/// Writes JSON to `path`, or to stdout when no path is given.
pub fn emit_json<T: serde::Serialize>(value: &T, path: Option<&Path>) -> CliResult<()> {
    let text = serde_json::to_string_pretty(value).map_err(|e| CliError::Config(e.to_string()))?;
    match path {
        Some(p) => write_text(p, &(text + "\n")),
        None => {
            println!("{text}");
            Ok(())
        }
    }
}
