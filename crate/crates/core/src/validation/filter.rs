use alloc::string::ToString;
use core::str::FromStr;

#[cfg(feature = "serde")]
use serde::{Deserialize, Serialize};

use super::ValidationError;
use crate::config::{ConfigError, GpuId, ModelId, Precision, Resolution};
use crate::data::EnergyRecord;

/// Conjunction of optional equality constraints on a record's configuration.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
#[cfg_attr(feature = "serde", derive(Serialize, Deserialize))]
#[cfg_attr(feature = "serde", serde(default))]
pub struct RecordFilter {
    #[cfg_attr(feature = "serde", serde(skip_serializing_if = "Option::is_none"))]
    pub model: Option<ModelId>,
    #[cfg_attr(feature = "serde", serde(skip_serializing_if = "Option::is_none"))]
    pub gpu: Option<GpuId>,
    #[cfg_attr(feature = "serde", serde(skip_serializing_if = "Option::is_none"))]
    pub precision: Option<Precision>,
    #[cfg_attr(feature = "serde", serde(skip_serializing_if = "Option::is_none"))]
    pub cfg: Option<bool>,
    #[cfg_attr(feature = "serde", serde(skip_serializing_if = "Option::is_none"))]
    pub num_prompts: Option<u32>,
    #[cfg_attr(feature = "serde", serde(skip_serializing_if = "Option::is_none"))]
    pub resolution: Option<Resolution>,
    #[cfg_attr(feature = "serde", serde(skip_serializing_if = "Option::is_none"))]
    pub steps: Option<u32>,
}

impl RecordFilter {
    pub fn matches(&self, record: &EnergyRecord) -> bool {
        let c = &record.config;
        self.model.is_none_or(|m| m == c.model)
            && self.gpu.is_none_or(|g| g == c.gpu)
            && self.precision.is_none_or(|p| p == c.precision)
            && self.cfg.is_none_or(|g| g == c.cfg)
            && self.num_prompts.is_none_or(|n| n == c.num_prompts)
            && self.resolution.is_none_or(|r| r == c.resolution)
            && self.steps.is_none_or(|s| s == c.steps)
    }

    pub fn is_empty(&self) -> bool {
        *self == Self::default()
    }

    /// Add one `key=value` constraint, e.g. `gpu=a4000`, `cfg=true`,
    /// `resolution=512` or `resolution=512x768`.
    pub fn add_constraint(&mut self, constraint: &str) -> Result<(), ValidationError> {
        let bad = |reason: &str| ValidationError::BadFilter {
            constraint: constraint.to_string(),
            reason: reason.to_string(),
        };
        let (key, value) = constraint
            .split_once('=')
            .ok_or_else(|| bad("expected key=value"))?;
        let value = value.trim();
        let parse_u32 = |v: &str| u32::from_str(v).map_err(|_| bad("expected a positive integer"));
        match key.trim() {
            "model" => {
                self.model = Some(
                    value
                        .parse()
                        .map_err(|e: ConfigError| bad(&e.to_string()))?,
                )
            }
            "gpu" => {
                self.gpu = Some(
                    value
                        .parse()
                        .map_err(|e: ConfigError| bad(&e.to_string()))?,
                )
            }
            "precision" => {
                self.precision = Some(
                    value
                        .parse()
                        .map_err(|e: ConfigError| bad(&e.to_string()))?,
                )
            }
            "cfg" => {
                self.cfg = Some(match value {
                    "true" | "1" | "yes" => true,
                    "false" | "0" | "no" => false,
                    _ => return Err(bad("expected true or false")),
                })
            }
            "num_prompts" | "prompts" => self.num_prompts = Some(parse_u32(value)?),
            "steps" => self.steps = Some(parse_u32(value)?),
            "resolution" | "res" => {
                let (h, w) = match value.split_once(['x', 'X']) {
                    Some((h, w)) => (parse_u32(h)?, parse_u32(w)?),
                    None => {
                        let side = parse_u32(value)?;
                        (side, side)
                    }
                };
                self.resolution = Some(Resolution::new(h, w).map_err(|e| bad(&e.to_string()))?);
            }
            _ => {
                return Err(bad(
                    "unknown key (model, gpu, precision, cfg, num_prompts, resolution, steps)",
                ))
            }
        }
        Ok(())
    }
}

impl FromStr for RecordFilter {
    type Err = ValidationError;

    /// Comma-separated constraints: `gpu=a100,cfg=false`.
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let mut filter = RecordFilter::default();
        for part in s.split(',').map(str::trim).filter(|p| !p.is_empty()) {
            filter.add_constraint(part)?;
        }
        Ok(filter)
    }
}
