//! Energy-record CSV files.
//!
//! The header is fixed; unknown, missing or reordered columns are rejected.
//! Energies are written in Rust's shortest round-trip scientific notation,
//! so `parse_csv(write_csv(d)) == d` for every valid dataset.

use std::fs;
use std::path::Path;
use std::str::FromStr;

use flopwatt_core::data::{DataError, Dataset, EnergyRecord};
use flopwatt_core::{InferenceConfig, Resolution};
use thiserror::Error;

pub const HEADER: [&str; 10] = [
    "model",
    "gpu",
    "precision",
    "cfg",
    "height",
    "width",
    "steps",
    "num_prompts",
    "energy_joules",
    "source",
];

#[derive(Debug, Error)]
pub enum CsvError {
    #[error("header mismatch: expected `{}`, found `{found}`", HEADER.join(","))]
    Header { found: String },
    #[error("line {line}, column `{column}`: {reason} (value `{value}`)")]
    Field {
        line: u64,
        column: &'static str,
        value: String,
        reason: String,
    },
    #[error("line {line}: expected {} fields, found {found}", HEADER.len())]
    Arity { line: u64, found: usize },
    #[error("line {line}: {source}")]
    Record { line: u64, source: DataError },
    #[error(transparent)]
    Dataset(DataError),
    #[error(transparent)]
    Csv(#[from] csv::Error),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl CsvError {
    /// True for failures to read or write the underlying file.
    pub fn is_io(&self) -> bool {
        match self {
            CsvError::Io(_) => true,
            CsvError::Csv(e) => e.is_io_error(),
            _ => false,
        }
    }
}

fn field<T>(line: u64, column: &'static str, raw: &str) -> Result<T, CsvError>
where
    T: FromStr,
    T::Err: std::fmt::Display,
{
    raw.parse().map_err(|e: T::Err| CsvError::Field {
        line,
        column,
        value: raw.to_owned(),
        reason: e.to_string(),
    })
}

fn parse_bool(line: u64, raw: &str) -> Result<bool, CsvError> {
    match raw {
        "true" => Ok(true),
        "false" => Ok(false),
        _ => Err(CsvError::Field {
            line,
            column: "cfg",
            value: raw.to_owned(),
            reason: "expected true or false".into(),
        }),
    }
}

/// Parse a CSV document in the record schema. Line numbers in errors are
/// 1-based file lines (the header is line 1).
pub fn parse_csv(bytes: &[u8]) -> Result<Dataset, CsvError> {
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(true)
        .flexible(true)
        .from_reader(bytes);
    let found: Vec<&str> = reader.headers()?.iter().collect();
    if found != HEADER {
        return Err(CsvError::Header {
            found: found.join(","),
        });
    }

    let mut records = Vec::new();
    for row in reader.records() {
        let row = row?;
        let line = row.position().map_or(0, |p| p.line());
        if row.len() != HEADER.len() {
            return Err(CsvError::Arity {
                line,
                found: row.len(),
            });
        }
        let height = field(line, "height", &row[4])?;
        let width = field(line, "width", &row[5])?;
        let resolution = Resolution::new(height, width).map_err(|e| CsvError::Field {
            line,
            column: "height",
            value: format!("{height}x{width}"),
            reason: e.to_string(),
        })?;
        let energy_joules: f64 = field(line, "energy_joules", &row[8])?;
        if !(energy_joules > 0.0 && energy_joules.is_finite()) {
            return Err(CsvError::Field {
                line,
                column: "energy_joules",
                value: row[8].to_owned(),
                reason: "energy must be positive and finite".into(),
            });
        }
        let config = InferenceConfig {
            model: field(line, "model", &row[0])?,
            gpu: field(line, "gpu", &row[1])?,
            precision: field(line, "precision", &row[2])?,
            cfg: parse_bool(line, &row[3])?,
            resolution,
            steps: field(line, "steps", &row[6])?,
            num_prompts: field(line, "num_prompts", &row[7])?,
        };
        config.validate().map_err(|source| CsvError::Record {
            line,
            source: DataError::InvalidConfig {
                index: records.len(),
                source,
            },
        })?;
        records.push(EnergyRecord {
            config,
            energy_joules,
            source: row[9].to_owned(),
        });
    }
    Dataset::new(records).map_err(CsvError::Dataset)
}

/// Serialize a dataset in the record schema.
pub fn write_csv(dataset: &Dataset) -> Vec<u8> {
    let mut writer = csv::Writer::from_writer(Vec::new());
    writer.write_record(HEADER).expect("writing to memory");
    for r in dataset {
        let c = &r.config;
        writer
            .write_record([
                c.model.name().to_owned(),
                c.gpu.name().to_owned(),
                c.precision.name().to_owned(),
                c.cfg.to_string(),
                c.resolution.height().to_string(),
                c.resolution.width().to_string(),
                c.steps.to_string(),
                c.num_prompts.to_string(),
                format!("{:e}", r.energy_joules),
                r.source.clone(),
            ])
            .expect("writing to memory");
    }
    writer.into_inner().expect("flushing to memory")
}

pub fn read_csv_file(path: &Path) -> Result<Dataset, CsvError> {
    parse_csv(&fs::read(path)?)
}

pub fn write_csv_file(path: &Path, dataset: &Dataset) -> Result<(), CsvError> {
    fs::write(path, write_csv(dataset))?;
    Ok(())
}
