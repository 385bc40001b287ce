//! Energy records, datasets and unit conversions.
//!
//! Joules are the canonical stored unit; kWh only appears at the regression
//! boundary (`ln kWh` is the fitted target) and Wh in per-image reporting.

mod tables;

pub use tables::{embedded_table, embedded_tables, EMBEDDED_SOURCE, TABLE_PROMPTS, TABLE_STEPS};

use alloc::collections::BTreeMap;
use alloc::string::String;
use alloc::vec::Vec;

#[cfg(feature = "serde")]
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::config::{ConfigError, InferenceConfig, ModelId};

pub const JOULES_PER_KWH: f64 = 3.6e6;
pub const JOULES_PER_WH: f64 = 3600.0;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum DataError {
    #[error("energy must be non-negative, got {0}")]
    NegativeEnergy(f64),
    #[error("record {index}: energy must be positive and finite, got {energy}")]
    NonPositiveEnergy { index: usize, energy: f64 },
    #[error("record {index}: {source}")]
    InvalidConfig { index: usize, source: ConfigError },
    #[error("records {first} and {second} share a configuration and source but differ in energy")]
    DuplicateConflict { first: usize, second: usize },
}

pub fn kwh_to_joules(kwh: f64) -> Result<f64, DataError> {
    if kwh < 0.0 || kwh.is_nan() {
        return Err(DataError::NegativeEnergy(kwh));
    }
    Ok(kwh * JOULES_PER_KWH)
}

pub fn joules_to_kwh(joules: f64) -> Result<f64, DataError> {
    if joules < 0.0 || joules.is_nan() {
        return Err(DataError::NegativeEnergy(joules));
    }
    Ok(joules / JOULES_PER_KWH)
}

/// One measured configuration: total energy over all `num_prompts` prompts.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(Serialize, Deserialize))]
pub struct EnergyRecord {
    pub config: InferenceConfig,
    pub energy_joules: f64,
    pub source: String,
}

impl EnergyRecord {
    pub fn energy_kwh(&self) -> f64 {
        self.energy_joules / JOULES_PER_KWH
    }

    /// Regression target.
    pub fn log_kwh(&self) -> f64 {
        libm::log(self.energy_kwh())
    }

    /// Watt-hours per generated image.
    pub fn per_image_wh(&self) -> f64 {
        self.energy_joules / f64::from(self.config.num_prompts) / JOULES_PER_WH
    }
}

/// Ordered, validated collection of records.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct Dataset {
    records: Vec<EnergyRecord>,
}

impl Dataset {
    /// Validates every record and rejects conflicting duplicates (same
    /// configuration and source, different energy). Exact duplicates are kept.
    pub fn new(records: Vec<EnergyRecord>) -> Result<Self, DataError> {
        let mut seen: BTreeMap<(&InferenceConfig, &str), usize> = BTreeMap::new();
        for (index, record) in records.iter().enumerate() {
            record
                .config
                .validate()
                .map_err(|source| DataError::InvalidConfig { index, source })?;
            let e = record.energy_joules;
            if !(e > 0.0 && e.is_finite()) {
                return Err(DataError::NonPositiveEnergy { index, energy: e });
            }
            match seen.get(&(&record.config, record.source.as_str())) {
                Some(&first) if records[first].energy_joules != e => {
                    return Err(DataError::DuplicateConflict {
                        first,
                        second: index,
                    })
                }
                Some(_) => {}
                None => {
                    seen.insert((&record.config, record.source.as_str()), index);
                }
            }
        }
        Ok(Self { records })
    }

    pub fn records(&self) -> &[EnergyRecord] {
        &self.records
    }

    pub fn into_records(self) -> Vec<EnergyRecord> {
        self.records
    }

    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }

    pub fn iter(&self) -> core::slice::Iter<'_, EnergyRecord> {
        self.records.iter()
    }

    /// Records satisfying `keep`, in order. Subsets of a valid dataset are valid.
    pub fn filter(&self, mut keep: impl FnMut(&EnergyRecord) -> bool) -> Dataset {
        Dataset {
            records: self.records.iter().filter(|r| keep(r)).cloned().collect(),
        }
    }

    pub fn models(&self) -> Vec<ModelId> {
        let mut models: Vec<ModelId> = self.records.iter().map(|r| r.config.model).collect();
        models.sort();
        models.dedup();
        models
    }
}

impl<'a> IntoIterator for &'a Dataset {
    type Item = &'a EnergyRecord;
    type IntoIter = core::slice::Iter<'a, EnergyRecord>;

    fn into_iter(self) -> Self::IntoIter {
        self.records.iter()
    }
}
