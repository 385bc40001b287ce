//! Energy tables normalized to the cheapest configuration, with optional
//! carbon accounting.

use flopwatt_core::data::{Dataset, EnergyRecord, JOULES_PER_WH};
use flopwatt_core::{GpuId, ModelId, Precision};
use serde::Serialize;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ReportRow {
    pub model: ModelId,
    pub gpu: GpuId,
    pub precision: Precision,
    pub cfg: bool,
    pub height: u32,
    pub width: u32,
    pub steps: u32,
    pub num_prompts: u32,
    pub energy_joules: f64,
    pub energy_kwh: f64,
    pub wh_per_image: f64,
    /// Energy over the dataset minimum.
    pub relative: f64,
    /// Grams of CO2 for the whole run, when a carbon intensity is given.
    pub gco2: Option<f64>,
    pub gco2_per_image: Option<f64>,
}

/// Every record relative to the dataset's lowest-energy record, ordered by
/// (resolution, steps, precision, cfg) so rows of one setting sit together.
/// `carbon_intensity` is in gCO2 per kWh. `None` for an empty dataset.
pub fn relative_report(dataset: &Dataset, carbon_intensity: Option<f64>) -> Option<Vec<ReportRow>> {
    let baseline = dataset.iter().map(|r| r.energy_joules).reduce(f64::min)?;
    let mut records: Vec<&EnergyRecord> = dataset.iter().collect();
    records.sort_by_key(|r| {
        let c = &r.config;
        (
            c.resolution,
            c.steps,
            c.precision,
            c.cfg,
            c.model,
            c.gpu,
            c.num_prompts,
        )
    });
    Some(
        records
            .into_iter()
            .map(|r| {
                let c = &r.config;
                let kwh = r.energy_kwh();
                let gco2 = carbon_intensity.map(|g| kwh * g);
                ReportRow {
                    model: c.model,
                    gpu: c.gpu,
                    precision: c.precision,
                    cfg: c.cfg,
                    height: c.resolution.height(),
                    width: c.resolution.width(),
                    steps: c.steps,
                    num_prompts: c.num_prompts,
                    energy_joules: r.energy_joules,
                    energy_kwh: kwh,
                    wh_per_image: r.energy_joules / f64::from(c.num_prompts) / JOULES_PER_WH,
                    relative: r.energy_joules / baseline,
                    gco2,
                    gco2_per_image: gco2.map(|g| g / f64::from(c.num_prompts)),
                }
            })
            .collect(),
    )
}
