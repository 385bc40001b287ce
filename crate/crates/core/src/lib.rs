//! Analytical compute and energy model for text-to-image diffusion inference.
//!
//! The crate is split along the pipeline it models:
//!
//! * [`flops`] counts floating-point operations for the text encoder, one
//!   denoiser forward pass and the VAE decoder of each supported model, using
//!   exact integer arithmetic.
//! * [`law`] turns an inference configuration into the log-linear feature
//!   vector, fits `ln E = ln A + α ln FLOPs_cfg + β·x` by ordinary least
//!   squares and evaluates fitted laws.
//! * [`data`] holds energy records, unit conversions and the embedded A100
//!   measurement tables.
//! * [`validation`] runs k-fold, cross-model, cross-GPU and
//!   cross-architecture protocols over datasets.
//!
//! Everything here is `no_std` + `alloc`; file formats and the CLI live in the
//! `flopwatt` crate.

#![cfg_attr(not(test), no_std)]
#![warn(missing_debug_implementations)]

extern crate alloc;

pub mod config;
pub mod data;
pub mod error;
pub mod flops;
pub mod law;
pub mod validation;

pub use config::{GpuId, InferenceConfig, ModelId, Precision, Resolution};
pub use error::Error;
