//! Inference scenario description: which model, at what resolution, how many
//! steps, at which precision, with or without classifier-free guidance, over
//! how many prompts and on which GPU.

use core::fmt;
use core::str::FromStr;

#[cfg(feature = "serde")]
use serde::{Deserialize, Serialize};

use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ConfigError {
    #[error("resolution {height}x{width}: {reason}")]
    InvalidResolution {
        height: u32,
        width: u32,
        reason: &'static str,
    },
    #[error("steps must be at least 1")]
    ZeroSteps,
    #[error("num_prompts must be at least 1")]
    ZeroPrompts,
    #[error("qwen only supports fp16 precision")]
    QwenRequiresFp16,
    #[error("unknown {kind} `{value}` (expected one of: {expected})")]
    UnknownName {
        kind: &'static str,
        value: alloc::string::String,
        expected: &'static str,
    },
}

/// Diffusion model families with a FLOP composition.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
#[cfg_attr(feature = "serde", derive(Serialize, Deserialize))]
#[cfg_attr(feature = "serde", serde(rename_all = "lowercase"))]
pub enum ModelId {
    Flux,
    Sd35,
    Sd2,
    Qwen,
}

impl ModelId {
    pub const ALL: [ModelId; 4] = [ModelId::Flux, ModelId::Sd35, ModelId::Sd2, ModelId::Qwen];

    pub const fn name(self) -> &'static str {
        match self {
            ModelId::Flux => "flux",
            ModelId::Sd35 => "sd35",
            ModelId::Sd2 => "sd2",
            ModelId::Qwen => "qwen",
        }
    }

    /// MMDiT-style transformer denoisers, as opposed to the SD2 U-Net.
    pub const fn is_transformer(self) -> bool {
        !matches!(self, ModelId::Sd2)
    }
}

impl fmt::Display for ModelId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for ModelId {
    type Err = ConfigError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.trim().to_ascii_lowercase().as_str() {
            "flux" => Ok(ModelId::Flux),
            "sd35" | "sd3.5" | "sd3-5" => Ok(ModelId::Sd35),
            "sd2" => Ok(ModelId::Sd2),
            "qwen" => Ok(ModelId::Qwen),
            _ => Err(unknown("model", s, "flux, sd35, sd2, qwen")),
        }
    }
}

/// GPU the energy was measured on. A100 is the regression baseline.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Default)]
#[cfg_attr(feature = "serde", derive(Serialize, Deserialize))]
#[cfg_attr(feature = "serde", serde(rename_all = "lowercase"))]
pub enum GpuId {
    #[default]
    A100,
    A4000,
    A6000,
}

impl GpuId {
    pub const ALL: [GpuId; 3] = [GpuId::A100, GpuId::A4000, GpuId::A6000];

    pub const fn name(self) -> &'static str {
        match self {
            GpuId::A100 => "a100",
            GpuId::A4000 => "a4000",
            GpuId::A6000 => "a6000",
        }
    }
}

impl fmt::Display for GpuId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for GpuId {
    type Err = ConfigError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.trim().to_ascii_lowercase().as_str() {
            "a100" => Ok(GpuId::A100),
            "a4000" => Ok(GpuId::A4000),
            "a6000" => Ok(GpuId::A6000),
            _ => Err(unknown("gpu", s, "a100, a4000, a6000")),
        }
    }
}

/// Arithmetic width. Fp16 is the regression baseline.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Default)]
#[cfg_attr(feature = "serde", derive(Serialize, Deserialize))]
#[cfg_attr(feature = "serde", serde(rename_all = "lowercase"))]
pub enum Precision {
    #[default]
    Fp16,
    Fp32,
}

impl Precision {
    pub const ALL: [Precision; 2] = [Precision::Fp16, Precision::Fp32];

    pub const fn name(self) -> &'static str {
        match self {
            Precision::Fp16 => "fp16",
            Precision::Fp32 => "fp32",
        }
    }
}

impl fmt::Display for Precision {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Precision {
    type Err = ConfigError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.trim().to_ascii_lowercase().as_str() {
            "fp16" | "float16" | "f16" => Ok(Precision::Fp16),
            "fp32" | "float32" | "f32" => Ok(Precision::Fp32),
            _ => Err(unknown("precision", s, "fp16, fp32")),
        }
    }
}

fn unknown(kind: &'static str, value: &str, expected: &'static str) -> ConfigError {
    ConfigError::UnknownName {
        kind,
        value: alloc::string::String::from(value),
        expected,
    }
}

/// Output image size in pixels.
///
/// Both sides must be positive multiples of 64 so that every latent grid the
/// FLOP formulas walk through (`/8`, then `/2`, `/4`, `/8` again, or `/16` for
/// patchified transformers) stays integral.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
#[cfg_attr(feature = "serde", derive(Serialize, Deserialize))]
#[cfg_attr(
    feature = "serde",
    serde(try_from = "RawResolution", into = "RawResolution")
)]
pub struct Resolution {
    height: u32,
    width: u32,
}

impl Resolution {
    pub const MULTIPLE: u32 = 64;

    /// The four square sizes swept by the embedded measurement tables.
    pub const SWEEP: [Resolution; 4] = [
        Resolution::square_unchecked(256),
        Resolution::square_unchecked(512),
        Resolution::square_unchecked(768),
        Resolution::square_unchecked(1024),
    ];

    pub fn new(height: u32, width: u32) -> Result<Self, ConfigError> {
        let reason = if height == 0 || width == 0 {
            Some("height and width must be positive")
        } else if !height.is_multiple_of(Self::MULTIPLE) || !width.is_multiple_of(Self::MULTIPLE) {
            Some("height and width must be multiples of 64")
        } else {
            None
        };
        match reason {
            Some(reason) => Err(ConfigError::InvalidResolution {
                height,
                width,
                reason,
            }),
            None => Ok(Self { height, width }),
        }
    }

    pub fn square(side: u32) -> Result<Self, ConfigError> {
        Self::new(side, side)
    }

    const fn square_unchecked(side: u32) -> Self {
        Self {
            height: side,
            width: side,
        }
    }

    pub const fn height(self) -> u32 {
        self.height
    }

    pub const fn width(self) -> u32 {
        self.width
    }

    pub const fn pixels(self) -> u64 {
        self.height as u64 * self.width as u64
    }
}

impl fmt::Display for Resolution {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}x{}", self.height, self.width)
    }
}

#[cfg(feature = "serde")]
#[derive(Serialize, Deserialize)]
struct RawResolution {
    height: u32,
    width: u32,
}

#[cfg(feature = "serde")]
impl TryFrom<RawResolution> for Resolution {
    type Error = ConfigError;

    fn try_from(raw: RawResolution) -> Result<Self, Self::Error> {
        Resolution::new(raw.height, raw.width)
    }
}

#[cfg(feature = "serde")]
impl From<Resolution> for RawResolution {
    fn from(r: Resolution) -> Self {
        RawResolution {
            height: r.height,
            width: r.width,
        }
    }
}

/// One inference scenario.
///
/// Fields are public; call [`InferenceConfig::validate`] (every consumer in
/// this crate does) before relying on the step/prompt/precision invariants.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
#[cfg_attr(feature = "serde", derive(Serialize, Deserialize))]
pub struct InferenceConfig {
    pub model: ModelId,
    pub resolution: Resolution,
    pub steps: u32,
    pub precision: Precision,
    pub cfg: bool,
    pub num_prompts: u32,
    pub gpu: GpuId,
}

impl InferenceConfig {
    /// Single prompt, 10 steps, fp16, no guidance, A100.
    pub fn new(model: ModelId, resolution: Resolution) -> Self {
        Self {
            model,
            resolution,
            steps: 10,
            precision: Precision::Fp16,
            cfg: false,
            num_prompts: 1,
            gpu: GpuId::A100,
        }
    }

    pub fn with_steps(mut self, steps: u32) -> Self {
        self.steps = steps;
        self
    }

    pub fn with_precision(mut self, precision: Precision) -> Self {
        self.precision = precision;
        self
    }

    pub fn with_cfg(mut self, cfg: bool) -> Self {
        self.cfg = cfg;
        self
    }

    pub fn with_prompts(mut self, num_prompts: u32) -> Self {
        self.num_prompts = num_prompts;
        self
    }

    pub fn with_gpu(mut self, gpu: GpuId) -> Self {
        self.gpu = gpu;
        self
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        if self.steps == 0 {
            return Err(ConfigError::ZeroSteps);
        }
        if self.num_prompts == 0 {
            return Err(ConfigError::ZeroPrompts);
        }
        // No fp32 Qwen data exists to fit a precision coefficient against.
        if self.model == ModelId::Qwen && self.precision != Precision::Fp16 {
            return Err(ConfigError::QwenRequiresFp16);
        }
        Ok(())
    }
}
