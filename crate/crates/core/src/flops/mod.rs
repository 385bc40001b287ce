//! Closed-form FLOP accounting.
//!
//! A multiply–add pair counts as two FLOPs. All counts are exact integers
//! (`u128`, or `i128` where a negative correction term is involved) and are
//! converted to GFLOPs (`FLOPs / 1e9`) only at the API boundary.

mod breakdown;
mod models;
mod unet;

pub use breakdown::{breakdown, denoise_share, FlopBreakdown, FlopCounts};
pub use models::{
    denoise_flops, denoise_flops_with_text_tokens, denoise_gflops, text_encoder_flops,
    text_encoder_gflops, vae_decoder_flops, vae_decoder_gflops,
};
pub use unet::{unet_stage_flops, UnetStage};

use thiserror::Error;

use crate::config::ModelId;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum FlopsError {
    #[error("{what} is not modeled for {model}")]
    UnsupportedModel { model: ModelId, what: &'static str },
    #[error("invalid layer dimensions: {0}")]
    InvalidDims(&'static str),
}

pub const FLOPS_PER_GFLOP: f64 = 1e9;

pub fn to_gflops(flops: u128) -> f64 {
    flops as f64 / FLOPS_PER_GFLOP
}

pub fn to_gflops_signed(flops: i128) -> f64 {
    flops as f64 / FLOPS_PER_GFLOP
}

/// 2-D convolution with a square `kernel × kernel` filter and `same` padding.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ConvSpec {
    kernel: u64,
    c_in: u64,
    c_out: u64,
    height: u64,
    width: u64,
}

impl ConvSpec {
    pub fn new(
        kernel: u64,
        c_in: u64,
        c_out: u64,
        height: u64,
        width: u64,
    ) -> Result<Self, FlopsError> {
        if [kernel, c_in, c_out, height, width].contains(&0) {
            return Err(FlopsError::InvalidDims(
                "convolution fields must be positive",
            ));
        }
        Ok(Self {
            kernel,
            c_in,
            c_out,
            height,
            width,
        })
    }
}

/// Dense self-attention transformer stack.
///
/// `d_ff` may be zero: the SD2 U-Net spatial transformers are counted as an
/// attention-only block with the feed-forward accounted in the paired
/// cross-attention term.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct TransformerDims {
    d_model: u64,
    d_ff: u64,
    d_attn: u64,
    n_layer: u64,
    n_ctx: u64,
}

impl TransformerDims {
    pub fn new(
        d_model: u64,
        d_ff: u64,
        d_attn: u64,
        n_layer: u64,
        n_ctx: u64,
    ) -> Result<Self, FlopsError> {
        if [d_model, d_attn, n_layer, n_ctx].contains(&0) {
            return Err(FlopsError::InvalidDims(
                "d_model, d_attn, n_layer and n_ctx must be positive",
            ));
        }
        Ok(Self {
            d_model,
            d_ff,
            d_attn,
            n_layer,
            n_ctx,
        })
    }

    pub fn n_ctx(&self) -> u64 {
        self.n_ctx
    }

    pub fn with_n_ctx(self, n_ctx: u64) -> Result<Self, FlopsError> {
        Self::new(self.d_model, self.d_ff, self.d_attn, self.n_layer, n_ctx)
    }
}

/// Transformer whose queries attend over a separate key/value sequence.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct CrossAttnDims {
    d_q: u64,
    d_k: u64,
    d_ff: u64,
    d_attn: u64,
    n_layer: u64,
    n_q: u64,
    n_k: u64,
}

impl CrossAttnDims {
    #[allow(clippy::too_many_arguments)]
    pub fn new(
        d_q: u64,
        d_k: u64,
        d_ff: u64,
        d_attn: u64,
        n_layer: u64,
        n_q: u64,
        n_k: u64,
    ) -> Result<Self, FlopsError> {
        if [d_q, d_k, d_ff, d_attn, n_layer, n_q, n_k].contains(&0) {
            return Err(FlopsError::InvalidDims(
                "cross-attention fields must be positive",
            ));
        }
        Ok(Self {
            d_q,
            d_k,
            d_ff,
            d_attn,
            n_layer,
            n_q,
            n_k,
        })
    }
}

/// `2·H·W·k²·C_in·C_out`
pub fn conv_flops(spec: &ConvSpec) -> u128 {
    conv(spec.kernel, spec.c_in, spec.c_out, spec.height, spec.width)
}

/// `n_ctx · (2N + 2·n_layer·n_ctx·d_attn)` with `N = 2·d_model·n_layer·(2·d_attn + d_ff)`.
pub fn transformer_flops(dims: &TransformerDims) -> u128 {
    transformer(
        dims.d_model,
        dims.d_ff,
        dims.d_attn,
        dims.n_layer,
        dims.n_ctx,
    )
}

/// `n_ctx · (N + 2·n_layer·n_ctx·d_attn)` with `N = 4·d_model·n_layer·(2·d_attn + d_ff)`.
///
/// The doubled parameter count covers the separate image and text weight
/// streams of a joint-attention block.
pub fn mmdit_flops(dims: &TransformerDims) -> u128 {
    mmdit(
        dims.d_model,
        dims.d_ff,
        dims.d_attn,
        dims.n_layer,
        dims.n_ctx,
    )
}

/// `n_q · (2N + 2·n_layer·n_k·d_attn)` with `N = 2·n_layer·(d_q·(d_attn + d_ff) + d_k·d_attn)`.
pub fn cross_attn_flops(dims: &CrossAttnDims) -> u128 {
    cross_attn(
        dims.d_q,
        dims.d_k,
        dims.d_ff,
        dims.d_attn,
        dims.n_layer,
        dims.n_q,
        dims.n_k,
    )
}

/// Two stacked convolutions: `C_in → C_out` then `C_out → C_out`.
pub fn resnet_block_flops(spec: &ConvSpec) -> u128 {
    resnet(spec.kernel, spec.c_in, spec.c_out, spec.height, spec.width)
}

/// Transformer forward cost per token from the non-embedding parameter count:
/// `2N + 2·L·d_attn·n_layer`.
///
/// This is a per-token figure; multiply by `seq_len` to compare it with a
/// whole-sequence count such as [`denoise_flops`]. It is kept as a reference
/// only and is not used by the fitted pipeline.
pub fn kaplan_denoise_approx(
    nonembedding_params: u64,
    d_attn: u64,
    n_layer: u64,
    seq_len: u64,
) -> u128 {
    2 * u128::from(nonembedding_params)
        + 2 * u128::from(seq_len) * u128::from(d_attn) * u128::from(n_layer)
}

pub(crate) fn conv(k: u64, c_in: u64, c_out: u64, h: u64, w: u64) -> u128 {
    let [k, c_in, c_out, h, w] = [k, c_in, c_out, h, w].map(u128::from);
    2 * h * w * k * k * c_in * c_out
}

pub(crate) fn resnet(k: u64, c_in: u64, c_out: u64, h: u64, w: u64) -> u128 {
    conv(k, c_in, c_out, h, w) + conv(k, c_out, c_out, h, w)
}

pub(crate) fn transformer(d_model: u64, d_ff: u64, d_attn: u64, n_layer: u64, n_ctx: u64) -> u128 {
    let [d_model, d_ff, d_attn, n_layer, n_ctx] =
        [d_model, d_ff, d_attn, n_layer, n_ctx].map(u128::from);
    let params = 2 * d_model * n_layer * (2 * d_attn + d_ff);
    let per_token = 2 * params + 2 * n_layer * n_ctx * d_attn;
    n_ctx * per_token
}

pub(crate) fn mmdit(d_model: u64, d_ff: u64, d_attn: u64, n_layer: u64, n_ctx: u64) -> u128 {
    let [d_model, d_ff, d_attn, n_layer, n_ctx] =
        [d_model, d_ff, d_attn, n_layer, n_ctx].map(u128::from);
    let params = 4 * d_model * n_layer * (2 * d_attn + d_ff);
    let per_token = params + 2 * n_layer * n_ctx * d_attn;
    n_ctx * per_token
}

pub(crate) fn cross_attn(
    d_q: u64,
    d_k: u64,
    d_ff: u64,
    d_attn: u64,
    n_layer: u64,
    n_q: u64,
    n_k: u64,
) -> u128 {
    let [d_q, d_k, d_ff, d_attn, n_layer, n_q, n_k] =
        [d_q, d_k, d_ff, d_attn, n_layer, n_q, n_k].map(u128::from);
    let params = 2 * n_layer * (d_q * (d_attn + d_ff) + d_k * d_attn);
    let per_query = 2 * params + 2 * n_layer * n_k * d_attn;
    n_q * per_query
}
