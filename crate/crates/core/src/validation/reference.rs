//! Published coefficient values used as comparison references and to build
//! synthetic multi-GPU fixtures.

use alloc::vec;
use alloc::vec::Vec;

#[cfg(feature = "serde")]
use serde::Serialize;

use super::ValidationError;
use crate::config::ModelId;
use crate::law::{Column, ScalingLaw};

/// Single-GPU (A100) fits for the three transformer models.
pub fn published_law(model: ModelId) -> Option<ScalingLaw> {
    let (log_a, alpha, beta_dtype, beta_res) = match model {
        ModelId::Flux => (-20.61, 0.989, 2.04, -0.043),
        ModelId::Sd35 => (-19.95, 0.969, 1.90, -0.054),
        ModelId::Qwen => (-18.64, 0.992, 0.0, -0.306),
        ModelId::Sd2 => return None,
    };
    let mut dropped = vec![Column::A4000, Column::A6000];
    if model == ModelId::Qwen {
        dropped.insert(0, Column::Fp32);
    }
    Some(ScalingLaw::from_coefficients(
        [log_a, alpha, beta_dtype, 0.0, 0.0, beta_res],
        dropped,
    ))
}

/// A100 + A6000 fits on fp16 subsets (A6000 coefficient reported, A4000 and
/// precision unused).
pub fn published_cross_gpu_law(model: ModelId) -> Option<ScalingLaw> {
    let (log_a, alpha, beta_a6000, beta_res) = match model {
        ModelId::Flux => (-20.85, 0.997, 0.450, -0.027),
        ModelId::Sd35 => (-20.44, 0.989, 0.308, -0.037),
        ModelId::Sd2 | ModelId::Qwen => return None,
    };
    Some(ScalingLaw::from_coefficients(
        [log_a, alpha, 0.0, 0.0, beta_a6000, beta_res],
        vec![Column::Fp32, Column::A4000],
    ))
}

#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(Serialize))]
pub struct CoefficientDelta {
    pub column: Column,
    pub published: f64,
    pub fitted: f64,
    /// `fitted − published`
    pub abs_delta: f64,
    /// `|fitted − published| / |published|`; `None` when the published value is 0.
    pub rel_delta: Option<f64>,
}

/// Columns the single-GPU references report.
const REPORTED: [Column; 4] = [
    Column::Intercept,
    Column::LogFlopsCfg,
    Column::Fp32,
    Column::LogRes,
];

/// Deltas of `law` against the published single-GPU coefficients of `reference`.
pub fn compare_to_published(
    law: &ScalingLaw,
    reference: ModelId,
) -> Result<Vec<CoefficientDelta>, ValidationError> {
    let published = published_law(reference).ok_or(ValidationError::UnknownReference(reference))?;
    Ok(REPORTED
        .iter()
        .map(|&column| {
            let (p, f) = (published.coefficient(column), law.coefficient(column));
            CoefficientDelta {
                column,
                published: p,
                fitted: f,
                abs_delta: f - p,
                rel_delta: (p != 0.0).then(|| (f - p).abs() / p.abs()),
            }
        })
        .collect())
}
