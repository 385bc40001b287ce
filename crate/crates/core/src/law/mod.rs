//! Log-linear energy scaling law.
//!
//! ```text
//! ln E[kWh] = ln A + α·ln(GFLOPs·2^cfg) + β_dtype·𝕀_fp32
//!           + β_a4000·𝕀_A4000 + β_a6000·𝕀_A6000 + β_res·ln(H·W/256)
//! ```
//!
//! GFLOPs here is the effective total from [`crate::flops::FlopBreakdown`]
//! (prompts × steps × one denoiser pass, doubled under guidance).

mod metrics;
mod ols;

pub use metrics::{average_ranks, mae, pearson, r_squared, spearman, MetricError};

use alloc::vec::Vec;
use core::fmt;

#[cfg(feature = "serde")]
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::config::{ConfigError, GpuId, InferenceConfig, Precision};
use crate::data::JOULES_PER_KWH;
use crate::flops::breakdown;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum FitError {
    #[error("need at least {need} observations, got {got}")]
    InsufficientData { need: usize, got: usize },
    #[error("no regressor besides the intercept varies across observations")]
    NoVaryingRegressor,
    #[error("design matrix is rank deficient at column `{0}`")]
    RankDeficient(Column),
    #[error("effective FLOPs must be positive and finite, got {0}")]
    NonPositiveFlops(f64),
    #[error("target ln(kWh) values must be finite")]
    NonFiniteTarget,
    #[error("law coefficient `{0}` is invalid (non-finite, or non-zero while dropped)")]
    InvalidLaw(Column),
    #[error(transparent)]
    Metric(#[from] MetricError),
    #[error(transparent)]
    Config(#[from] ConfigError),
}

/// Regressor columns, in design-matrix order.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
#[cfg_attr(feature = "serde", derive(Serialize, Deserialize))]
pub enum Column {
    #[cfg_attr(feature = "serde", serde(rename = "intercept"))]
    Intercept,
    #[cfg_attr(feature = "serde", serde(rename = "log_flops_cfg"))]
    LogFlopsCfg,
    #[cfg_attr(feature = "serde", serde(rename = "fp32_indicator"))]
    Fp32,
    #[cfg_attr(feature = "serde", serde(rename = "a4000_indicator"))]
    A4000,
    #[cfg_attr(feature = "serde", serde(rename = "a6000_indicator"))]
    A6000,
    #[cfg_attr(feature = "serde", serde(rename = "log_res"))]
    LogRes,
}

impl Column {
    pub const ALL: [Column; 6] = [
        Column::Intercept,
        Column::LogFlopsCfg,
        Column::Fp32,
        Column::A4000,
        Column::A6000,
        Column::LogRes,
    ];

    pub const fn name(self) -> &'static str {
        match self {
            Column::Intercept => "intercept",
            Column::LogFlopsCfg => "log_flops_cfg",
            Column::Fp32 => "fp32_indicator",
            Column::A4000 => "a4000_indicator",
            Column::A6000 => "a6000_indicator",
            Column::LogRes => "log_res",
        }
    }

    const fn index(self) -> usize {
        self as usize
    }
}

impl fmt::Display for Column {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// Regressors for one configuration. The intercept is implicit (always 1).
#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(Serialize, Deserialize))]
pub struct FeatureVector {
    pub log_flops_cfg: f64,
    pub fp32_indicator: f64,
    pub a4000_indicator: f64,
    pub a6000_indicator: f64,
    pub log_res: f64,
}

impl FeatureVector {
    pub const INTERCEPT: f64 = 1.0;

    pub fn to_array(&self) -> [f64; 6] {
        [
            Self::INTERCEPT,
            self.log_flops_cfg,
            self.fp32_indicator,
            self.a4000_indicator,
            self.a6000_indicator,
            self.log_res,
        ]
    }
}

fn indicator(on: bool) -> f64 {
    if on {
        1.0
    } else {
        0.0
    }
}

/// Features for `config` given its guidance-adjusted effective GFLOPs.
pub fn build_features(
    config: &InferenceConfig,
    gflops_effective: f64,
) -> Result<FeatureVector, FitError> {
    if !(gflops_effective > 0.0 && gflops_effective.is_finite()) {
        return Err(FitError::NonPositiveFlops(gflops_effective));
    }
    let pixels = config.resolution.pixels() as f64;
    Ok(FeatureVector {
        log_flops_cfg: libm::log(gflops_effective),
        fp32_indicator: indicator(config.precision == Precision::Fp32),
        a4000_indicator: indicator(config.gpu == GpuId::A4000),
        a6000_indicator: indicator(config.gpu == GpuId::A6000),
        log_res: libm::log(pixels / 256.0),
    })
}

/// Features for `config`, computing the effective FLOPs from its breakdown.
pub fn features_for(config: &InferenceConfig) -> Result<FeatureVector, FitError> {
    let b = breakdown(config)?;
    build_features(config, b.effective_total_gflops)
}

/// Fitted coefficients. Coefficients of `dropped_columns` are exactly zero.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(Serialize, Deserialize))]
pub struct ScalingLaw {
    pub log_a: f64,
    pub alpha: f64,
    pub beta_dtype: f64,
    pub beta_a4000: f64,
    pub beta_a6000: f64,
    pub beta_res: f64,
    #[cfg_attr(feature = "serde", serde(default))]
    pub dropped_columns: Vec<Column>,
}

impl ScalingLaw {
    pub fn from_coefficients(c: [f64; 6], dropped_columns: Vec<Column>) -> Self {
        Self {
            log_a: c[0],
            alpha: c[1],
            beta_dtype: c[2],
            beta_a4000: c[3],
            beta_a6000: c[4],
            beta_res: c[5],
            dropped_columns,
        }
    }

    pub fn coefficients(&self) -> [f64; 6] {
        [
            self.log_a,
            self.alpha,
            self.beta_dtype,
            self.beta_a4000,
            self.beta_a6000,
            self.beta_res,
        ]
    }

    pub fn coefficient(&self, column: Column) -> f64 {
        self.coefficients()[column.index()]
    }

    /// Check finiteness and the dropped-column-is-zero invariant.
    pub fn validate(&self) -> Result<(), FitError> {
        for column in Column::ALL {
            let c = self.coefficient(column);
            if !c.is_finite() || (self.dropped_columns.contains(&column) && c != 0.0) {
                return Err(FitError::InvalidLaw(column));
            }
        }
        Ok(())
    }
}

/// Training-set (or held-out) fit quality. `mae_log` is in ln(kWh);
/// `mae_joules` compares the exponentiated energies.
#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(Serialize, Deserialize))]
pub struct FitDiagnostics {
    pub r2: f64,
    pub mae_log: f64,
    pub mae_joules: f64,
    pub pearson: f64,
    pub spearman: f64,
    pub n_samples: usize,
    pub design_rank: usize,
}

impl FitDiagnostics {
    /// Metrics of `predicted` against `actual`, both in ln(kWh).
    pub fn evaluate(
        actual: &[f64],
        predicted: &[f64],
        design_rank: usize,
    ) -> Result<Self, MetricError> {
        let to_joules = |v: &f64| libm::exp(*v) * JOULES_PER_KWH;
        let actual_j: Vec<f64> = actual.iter().map(to_joules).collect();
        let predicted_j: Vec<f64> = predicted.iter().map(to_joules).collect();
        Ok(Self {
            r2: r_squared(actual, predicted)?,
            mae_log: mae(actual, predicted)?,
            mae_joules: mae(&actual_j, &predicted_j)?,
            pearson: pearson(actual, predicted)?,
            spearman: spearman(actual, predicted)?,
            n_samples: actual.len(),
            design_rank,
        })
    }
}

/// Max−min spread below which a regressor counts as constant.
pub const CONSTANT_COLUMN_TOLERANCE: f64 = 1e-12;

/// Ordinary least squares on `(features, ln kWh)` pairs.
///
/// Any non-intercept column that is constant across the observations is
/// dropped before solving and reported with a zero coefficient.
pub fn fit(
    observations: &[(FeatureVector, f64)],
) -> Result<(ScalingLaw, FitDiagnostics), FitError> {
    if observations.len() < 2 {
        return Err(FitError::InsufficientData {
            need: 2,
            got: observations.len(),
        });
    }
    if observations.iter().any(|(_, y)| !y.is_finite()) {
        return Err(FitError::NonFiniteTarget);
    }
    let rows: Vec<[f64; 6]> = observations.iter().map(|(f, _)| f.to_array()).collect();
    let y: Vec<f64> = observations.iter().map(|(_, y)| *y).collect();

    let mut kept = alloc::vec![Column::Intercept];
    let mut dropped = Vec::new();
    for column in &Column::ALL[1..] {
        let j = column.index();
        let (lo, hi) = rows
            .iter()
            .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), r| {
                (lo.min(r[j]), hi.max(r[j]))
            });
        if hi - lo < CONSTANT_COLUMN_TOLERANCE {
            dropped.push(*column);
        } else {
            kept.push(*column);
        }
    }
    if kept.len() == 1 {
        return Err(FitError::NoVaryingRegressor);
    }
    if observations.len() < kept.len() {
        return Err(FitError::InsufficientData {
            need: kept.len(),
            got: observations.len(),
        });
    }

    let design: Vec<f64> = rows
        .iter()
        .flat_map(|r| kept.iter().map(move |c| r[c.index()]))
        .collect();
    let solved = ols::least_squares(&design, kept.len(), &y)
        .map_err(|e| FitError::RankDeficient(kept[e.column]))?;

    let mut coefficients = [0.0; 6];
    for (column, value) in kept.iter().zip(solved) {
        coefficients[column.index()] = value;
    }
    let law = ScalingLaw::from_coefficients(coefficients, dropped);
    let predicted: Vec<f64> = observations
        .iter()
        .map(|(f, _)| predict_log_kwh(&law, f))
        .collect();
    let diagnostics = FitDiagnostics::evaluate(&y, &predicted, kept.len())?;
    Ok((law, diagnostics))
}

/// ln(kWh) predicted by `law` for `features`.
pub fn predict_log_kwh(law: &ScalingLaw, features: &FeatureVector) -> f64 {
    law.coefficients()
        .iter()
        .zip(features.to_array())
        .map(|(c, x)| c * x)
        .sum()
}

/// Predicted total energy in joules for `config` (all prompts).
pub fn predict_joules(law: &ScalingLaw, config: &InferenceConfig) -> Result<f64, FitError> {
    let features = features_for(config)?;
    Ok(libm::exp(predict_log_kwh(law, &features)) * JOULES_PER_KWH)
}
