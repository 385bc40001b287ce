use super::models::{denoise_flops, text_encoder_flops, vae_decoder_flops};
use super::{to_gflops, to_gflops_signed, FlopsError};
use crate::config::{ConfigError, InferenceConfig, ModelId, Resolution};

#[cfg(feature = "serde")]
use serde::Serialize;

/// Exact per-component FLOP counts behind a [`FlopBreakdown`].
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct FlopCounts {
    pub text: i128,
    pub denoise_per_step: u128,
    pub decode: u128,
    pub steps: u32,
    pub num_prompts: u32,
    pub cfg: bool,
}

impl FlopCounts {
    /// Text + steps·denoise + decode, for one prompt without guidance.
    pub fn total(&self) -> i128 {
        self.text
            + u128::from(self.steps) as i128 * self.denoise_per_step as i128
            + self.decode as i128
    }

    /// prompts · steps · denoise · 2^cfg.
    pub fn effective_total(&self) -> u128 {
        let guidance = if self.cfg { 2 } else { 1 };
        u128::from(self.num_prompts) * u128::from(self.steps) * self.denoise_per_step * guidance
    }
}

/// FLOP decomposition of one inference configuration, in GFLOPs.
///
/// `total_gflops` is the single-prompt, unguided sum of all three components;
/// `effective_total_gflops` is the denoise-only approximation scaled by the
/// prompt count and doubled under classifier-free guidance, which is what the
/// energy law consumes.
#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(Serialize))]
pub struct FlopBreakdown {
    pub text_gflops: f64,
    pub denoise_per_step_gflops: f64,
    pub decode_gflops: f64,
    pub steps: u32,
    pub num_prompts: u32,
    pub cfg: bool,
    pub total_gflops: f64,
    pub effective_total_gflops: f64,
    /// False when the model has no text-encoder composition (SD2); the text
    /// component is then reported as zero.
    pub text_modeled: bool,
    #[cfg_attr(feature = "serde", serde(skip))]
    pub counts: FlopCounts,
}

impl FlopBreakdown {
    /// Fraction of `total_gflops` spent in the denoising loop.
    pub fn denoise_share(&self) -> f64 {
        let c = &self.counts;
        let denoise = u128::from(c.steps) * c.denoise_per_step;
        denoise as f64 / c.total() as f64
    }
}

pub fn breakdown(config: &InferenceConfig) -> Result<FlopBreakdown, ConfigError> {
    config.validate()?;
    let (text, text_modeled) = match text_encoder_flops(config.model) {
        Ok(text) => (text, true),
        Err(_) => (0, false),
    };
    let counts = FlopCounts {
        text,
        denoise_per_step: denoise_flops(config.model, config.resolution),
        decode: vae_decoder_flops(config.resolution),
        steps: config.steps,
        num_prompts: config.num_prompts,
        cfg: config.cfg,
    };
    Ok(FlopBreakdown {
        text_gflops: to_gflops_signed(counts.text),
        denoise_per_step_gflops: to_gflops(counts.denoise_per_step),
        decode_gflops: to_gflops(counts.decode),
        steps: counts.steps,
        num_prompts: counts.num_prompts,
        cfg: counts.cfg,
        total_gflops: to_gflops_signed(counts.total()),
        effective_total_gflops: to_gflops(counts.effective_total()),
        text_modeled,
        counts,
    })
}

/// steps·denoise / (text + steps·denoise + decode). Requires a text-encoder
/// composition, so SD2 is rejected.
pub fn denoise_share(model: ModelId, res: Resolution, steps: u32) -> Result<f64, FlopsError> {
    let text = text_encoder_flops(model)?;
    let denoise = u128::from(steps) * denoise_flops(model, res);
    let total = text + denoise as i128 + vae_decoder_flops(res) as i128;
    Ok(denoise as f64 / total as f64)
}
