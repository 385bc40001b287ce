//! JSON documents: fitted laws, validation reports and FLOP breakdowns.
//!
//! Floats go through serde_json's shortest round-trip formatting, so a law
//! read back from its document is bit-identical to the one written.

use std::fs;
use std::path::Path;

use flopwatt_core::flops::FlopBreakdown;
use flopwatt_core::law::{FitDiagnostics, FitError, ScalingLaw};
use flopwatt_core::validation::ValidationReport;
use flopwatt_core::{ModelId, Resolution};
use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum DocError {
    #[error("cannot read law document: {0}")]
    Io(#[from] std::io::Error),
    #[error("malformed law document: {0}")]
    Json(#[from] serde_json::Error),
    #[error("invalid law document: {0}")]
    Invalid(#[from] FitError),
}

/// A law with the diagnostics of the fit that produced it.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LawDocument {
    #[serde(flatten)]
    pub law: ScalingLaw,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub diagnostics: Option<FitDiagnostics>,
}

impl LawDocument {
    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("law documents always serialize")
    }

    /// Parse and validate (finite coefficients, dropped columns exactly zero).
    pub fn from_json(text: &str) -> Result<Self, DocError> {
        let doc: LawDocument = serde_json::from_str(text)?;
        doc.law.validate()?;
        Ok(doc)
    }

    pub fn read(path: &Path) -> Result<Self, DocError> {
        Self::from_json(&fs::read_to_string(path)?)
    }
}

/// A breakdown tagged with its configuration and denoise share.
#[derive(Debug, Clone, Serialize)]
pub struct FlopsDocument {
    pub model: ModelId,
    pub resolution: Resolution,
    #[serde(flatten)]
    pub breakdown: FlopBreakdown,
    pub denoise_share: f64,
}

pub fn report_to_json(report: &ValidationReport) -> String {
    serde_json::to_string_pretty(report).expect("reports always serialize")
}
