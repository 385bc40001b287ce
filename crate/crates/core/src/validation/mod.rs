//! Validation protocols: within-architecture k-fold, cross-model and
//! cross-architecture holdout, and pooled cross-GPU fitting.
//!
//! All metrics are computed in ln(kWh), the regression target. Each report
//! carries its per-point (actual, predicted) pairs so actual-vs-predicted
//! diagnostics can be plotted externally.

mod filter;
mod kfold;
mod reference;

pub use filter::RecordFilter;
pub use kfold::kfold_indices;
pub use reference::{
    compare_to_published, published_cross_gpu_law, published_law, CoefficientDelta,
};

use alloc::string::String;
use alloc::vec::Vec;

#[cfg(feature = "serde")]
use serde::Serialize;
use thiserror::Error;

use crate::config::{GpuId, InferenceConfig, ModelId};
use crate::data::Dataset;
use crate::law::{self, FeatureVector, FitDiagnostics, FitError, MetricError, ScalingLaw};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ValidationError {
    #[error("need at least {need} records, got {got}")]
    TooFewRecords { need: usize, got: usize },
    #[error("k must be at least 2, got {0}")]
    InvalidK(usize),
    #[error("within-architecture validation needs a single model, found {0}")]
    MixedModels(usize),
    #[error("{0} appears in both the training and the test set")]
    Overlap(ModelId),
    #[error("{0} split is empty")]
    EmptySplit(&'static str),
    #[error("cross-GPU fitting needs records from at least two GPUs, found {0}")]
    SingleGpu(usize),
    #[error("no published coefficients for {0}")]
    UnknownReference(ModelId),
    #[error("bad filter `{constraint}`: {reason}")]
    BadFilter { constraint: String, reason: String },
    #[error(transparent)]
    Fit(#[from] FitError),
    #[error(transparent)]
    Metric(#[from] MetricError),
}

#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(Serialize))]
#[cfg_attr(feature = "serde", serde(tag = "kind", rename_all = "snake_case"))]
pub enum Protocol {
    WithinArchitecture {
        k: usize,
        seed: u64,
    },
    CrossModelHoldout {
        train: Vec<ModelId>,
        test: ModelId,
    },
    CrossGpu {
        filter: RecordFilter,
    },
    CrossArchitecture {
        train: Vec<ModelId>,
        test: Vec<ModelId>,
    },
}

/// One actual-vs-predicted pair.
#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(Serialize))]
pub struct PredictionPoint {
    pub config: InferenceConfig,
    pub actual_log_kwh: f64,
    pub predicted_log_kwh: f64,
    /// `predicted / actual − 1` in joules.
    pub relative_error: f64,
    /// True when the record was not among the observations the law was fitted on.
    pub held_out: bool,
}

impl PredictionPoint {
    fn new(config: InferenceConfig, actual: f64, predicted: f64, held_out: bool) -> Self {
        Self {
            config,
            actual_log_kwh: actual,
            predicted_log_kwh: predicted,
            relative_error: libm::expm1(predicted - actual),
            held_out,
        }
    }
}

/// Residual summary (actual − predicted, ln kWh) for one GPU in a pooled fit.
#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(Serialize))]
pub struct GpuResidual {
    pub gpu: GpuId,
    pub n: usize,
    pub mean_residual: f64,
    pub mae_log: f64,
}

#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(Serialize))]
pub struct ValidationReport {
    pub protocol: Protocol,
    /// Law fitted on the full training set (all records for k-fold).
    pub law: ScalingLaw,
    pub train_diagnostics: FitDiagnostics,
    /// Held-out metrics; `None` for cross-GPU, which has no holdout.
    pub test_diagnostics: Option<FitDiagnostics>,
    pub points: Vec<PredictionPoint>,
    /// Per-fold laws, k-fold only.
    #[cfg_attr(feature = "serde", serde(skip_serializing_if = "Vec::is_empty"))]
    pub fold_laws: Vec<ScalingLaw>,
    /// Cross-GPU only.
    #[cfg_attr(feature = "serde", serde(skip_serializing_if = "Vec::is_empty"))]
    pub gpu_residuals: Vec<GpuResidual>,
}

impl ValidationReport {
    pub fn held_out_points(&self) -> impl Iterator<Item = &PredictionPoint> {
        self.points.iter().filter(|p| p.held_out)
    }
}

/// `(features, ln kWh)` observations for every record.
pub fn observations(dataset: &Dataset) -> Result<Vec<(FeatureVector, f64)>, FitError> {
    dataset
        .iter()
        .map(|r| Ok((law::features_for(&r.config)?, r.log_kwh())))
        .collect()
}

pub fn fit_dataset(dataset: &Dataset) -> Result<(ScalingLaw, FitDiagnostics), FitError> {
    law::fit(&observations(dataset)?)
}

fn predict_points(
    law: &ScalingLaw,
    dataset: &Dataset,
    held_out: bool,
) -> Result<Vec<PredictionPoint>, FitError> {
    dataset
        .iter()
        .map(|r| {
            let predicted = law::predict_log_kwh(law, &law::features_for(&r.config)?);
            Ok(PredictionPoint::new(
                r.config,
                r.log_kwh(),
                predicted,
                held_out,
            ))
        })
        .collect()
}

fn evaluate(
    points: &[&PredictionPoint],
    design_rank: usize,
) -> Result<FitDiagnostics, MetricError> {
    let actual: Vec<f64> = points.iter().map(|p| p.actual_log_kwh).collect();
    let predicted: Vec<f64> = points.iter().map(|p| p.predicted_log_kwh).collect();
    FitDiagnostics::evaluate(&actual, &predicted, design_rank)
}

/// Fold-partition a dataset with [`kfold_indices`].
pub fn kfold_split(
    dataset: &Dataset,
    k: usize,
    seed: u64,
) -> Result<Vec<Dataset>, ValidationError> {
    let records = dataset.records();
    Ok(kfold_indices(records.len(), k, seed)?
        .into_iter()
        .map(|fold| {
            let picked = fold.into_iter().map(|i| records[i].clone()).collect();
            Dataset::new(picked).expect("subset of a valid dataset")
        })
        .collect())
}

/// k-fold cross-validation on a single-model dataset. Held-out predictions
/// from every fold are pooled into `test_diagnostics`.
pub fn run_within(
    dataset: &Dataset,
    k: usize,
    seed: u64,
) -> Result<ValidationReport, ValidationError> {
    let models = dataset.models();
    if models.len() > 1 {
        return Err(ValidationError::MixedModels(models.len()));
    }
    let records = dataset.records();
    let folds = kfold_indices(records.len(), k, seed)?;

    let (law, train_diagnostics) = fit_dataset(dataset)?;
    let mut fold_laws = Vec::with_capacity(k);
    let mut points = Vec::with_capacity(records.len());
    for (i, held) in folds.iter().enumerate() {
        let train: Vec<_> = folds
            .iter()
            .enumerate()
            .filter(|&(j, _)| j != i)
            .flat_map(|(_, fold)| fold.iter().map(|&idx| records[idx].clone()))
            .collect();
        let test: Vec<_> = held.iter().map(|&idx| records[idx].clone()).collect();
        let train = Dataset::new(train).expect("subset of a valid dataset");
        let test = Dataset::new(test).expect("subset of a valid dataset");
        let (fold_law, _) = fit_dataset(&train)?;
        points.extend(predict_points(&fold_law, &test, true)?);
        fold_laws.push(fold_law);
    }
    let pooled: Vec<&PredictionPoint> = points.iter().collect();
    let test_diagnostics = evaluate(&pooled, train_diagnostics.design_rank)?;
    Ok(ValidationReport {
        protocol: Protocol::WithinArchitecture { k, seed },
        law,
        train_diagnostics,
        test_diagnostics: Some(test_diagnostics),
        points,
        fold_laws,
        gpu_residuals: Vec::new(),
    })
}

fn run_holdout(
    train_models: &[ModelId],
    test_models: &[ModelId],
    dataset: &Dataset,
    protocol: Protocol,
) -> Result<ValidationReport, ValidationError> {
    if let Some(&m) = test_models.iter().find(|m| train_models.contains(m)) {
        return Err(ValidationError::Overlap(m));
    }
    let train = dataset.filter(|r| train_models.contains(&r.config.model));
    let test = dataset.filter(|r| test_models.contains(&r.config.model));
    if train.is_empty() {
        return Err(ValidationError::EmptySplit("train"));
    }
    if test.is_empty() {
        return Err(ValidationError::EmptySplit("test"));
    }

    let (law, train_diagnostics) = fit_dataset(&train)?;
    let mut points = predict_points(&law, &train, false)?;
    points.extend(predict_points(&law, &test, true)?);
    let held: Vec<&PredictionPoint> = points.iter().filter(|p| p.held_out).collect();
    let test_diagnostics = evaluate(&held, train_diagnostics.design_rank)?;
    Ok(ValidationReport {
        protocol,
        law,
        train_diagnostics,
        test_diagnostics: Some(test_diagnostics),
        points,
        fold_laws: Vec::new(),
        gpu_residuals: Vec::new(),
    })
}

/// Fit on the pooled records of `train_models`, evaluate on `test_model`.
pub fn run_cross_model(
    train_models: &[ModelId],
    test_model: ModelId,
    dataset: &Dataset,
) -> Result<ValidationReport, ValidationError> {
    let protocol = Protocol::CrossModelHoldout {
        train: train_models.to_vec(),
        test: test_model,
    };
    run_holdout(train_models, &[test_model], dataset, protocol)
}

/// As [`run_cross_model`] with a set of held-out models, e.g. transformer
/// models → U-Net.
pub fn run_cross_architecture(
    train_models: &[ModelId],
    test_models: &[ModelId],
    dataset: &Dataset,
) -> Result<ValidationReport, ValidationError> {
    let protocol = Protocol::CrossArchitecture {
        train: train_models.to_vec(),
        test: test_models.to_vec(),
    };
    run_holdout(train_models, test_models, dataset, protocol)
}

/// Pooled fit over the filtered records with the GPU indicators active.
pub fn run_cross_gpu(
    filter: &RecordFilter,
    dataset: &Dataset,
) -> Result<ValidationReport, ValidationError> {
    let subset = dataset.filter(|r| filter.matches(r));
    let mut gpus: Vec<GpuId> = subset.iter().map(|r| r.config.gpu).collect();
    gpus.sort();
    gpus.dedup();
    if gpus.len() < 2 {
        return Err(ValidationError::SingleGpu(gpus.len()));
    }

    let (law, train_diagnostics) = fit_dataset(&subset)?;
    let points = predict_points(&law, &subset, false)?;
    let gpu_residuals = gpus
        .iter()
        .map(|&gpu| {
            let residuals: Vec<f64> = points
                .iter()
                .filter(|p| p.config.gpu == gpu)
                .map(|p| p.actual_log_kwh - p.predicted_log_kwh)
                .collect();
            let n = residuals.len();
            GpuResidual {
                gpu,
                n,
                mean_residual: residuals.iter().sum::<f64>() / n as f64,
                mae_log: residuals.iter().map(|r| r.abs()).sum::<f64>() / n as f64,
            }
        })
        .collect();
    Ok(ValidationReport {
        protocol: Protocol::CrossGpu {
            filter: filter.clone(),
        },
        law,
        train_diagnostics,
        test_diagnostics: None,
        points,
        fold_laws: Vec::new(),
        gpu_residuals,
    })
}
