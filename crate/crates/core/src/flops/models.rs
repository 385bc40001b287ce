use super::{conv, mmdit, resnet, to_gflops, to_gflops_signed, transformer, unet, FlopsError};
use crate::config::{ModelId, Resolution};

/// Patch tokens for a 16×16 patchified latent (8× VAE downsampling, 2×2 patches).
fn patch_tokens(res: Resolution) -> u64 {
    res.pixels() / (16 * 16)
}

/// Text tokens appended to the image tokens in the joint-attention sequence.
///
/// Qwen prompts are variable length; 12 is the dataset average.
pub(crate) const fn default_text_tokens(model: ModelId) -> Option<u64> {
    match model {
        ModelId::Flux => Some(512),
        ModelId::Sd35 => Some(333),
        ModelId::Qwen => Some(12),
        ModelId::Sd2 => None,
    }
}

/// FLOPs of one denoiser forward pass (one step, one prompt, no guidance).
pub fn denoise_flops(model: ModelId, res: Resolution) -> u128 {
    match default_text_tokens(model) {
        Some(tokens) => mmdit_pass(model, res, tokens),
        None => unet::unet_flops(res),
    }
}

/// As [`denoise_flops`] but with an explicit text-token count in the joint
/// sequence. Only meaningful for the transformer denoisers.
pub fn denoise_flops_with_text_tokens(
    model: ModelId,
    res: Resolution,
    text_tokens: u64,
) -> Result<u128, FlopsError> {
    if !model.is_transformer() {
        return Err(FlopsError::UnsupportedModel {
            model,
            what: "text-token override",
        });
    }
    Ok(mmdit_pass(model, res, text_tokens))
}

fn mmdit_pass(model: ModelId, res: Resolution, text_tokens: u64) -> u128 {
    let n_ctx = patch_tokens(res) + text_tokens;
    match model {
        // 19 double-stream blocks followed by 38 single-stream blocks.
        ModelId::Flux => {
            mmdit(3072, 12288, 3072, 19, n_ctx) + transformer(3072, 12288, 3072, 38, n_ctx)
        }
        ModelId::Qwen => mmdit(3072, 12288, 3072, 60, n_ctx),
        ModelId::Sd35 => mmdit(2432, 9478, 2432, 38, n_ctx),
        ModelId::Sd2 => unreachable!("U-Net has no joint sequence"),
    }
}

pub fn denoise_gflops(model: ModelId, res: Resolution) -> f64 {
    to_gflops(denoise_flops(model, res))
}

// GLU feed-forward overhead of the T5-XXL encoder.
const T5_GLU_BIAS: i128 = 24 * 10240 * 4097;

/// FLOPs of the text encoders, once per prompt.
///
/// The Qwen term includes a multi-query-attention correction that is
/// negative as written, so the result is signed. SD2 has no composition and
/// returns [`FlopsError::UnsupportedModel`].
pub fn text_encoder_flops(model: ModelId) -> Result<i128, FlopsError> {
    let tr = |d_model, d_ff, d_attn, n_layer, n_ctx| {
        transformer(d_model, d_ff, d_attn, n_layer, n_ctx) as i128
    };
    match model {
        ModelId::Flux => {
            Ok(tr(768, 3072, 768, 12, 77) + tr(4096, 10240, 4096, 24, 512) + T5_GLU_BIAS)
        }
        ModelId::Sd35 => Ok(tr(768, 3072, 768, 12, 77)
            + tr(1280, 5120, 1280, 32, 77)
            + tr(4096, 10240, 4096, 24, 256)
            + T5_GLU_BIAS),
        ModelId::Qwen => {
            let mqa_correction: i128 = 28 * 12 * 2 * (2 * 3584 * (512 - 3584));
            Ok(tr(3584, 18944, 3584, 28, 12) + mqa_correction)
        }
        ModelId::Sd2 => Err(FlopsError::UnsupportedModel {
            model,
            what: "text encoder",
        }),
    }
}

pub fn text_encoder_gflops(model: ModelId) -> Result<f64, FlopsError> {
    text_encoder_flops(model).map(to_gflops_signed)
}

/// VAE decoder FLOPs, once per prompt, starting from the `H/8 × W/8` latent.
pub fn vae_decoder_flops(res: Resolution) -> u128 {
    let h = u64::from(res.height()) / 8;
    let w = u64::from(res.width()) / 8;
    let (h2, w2) = (2 * h, 2 * w);
    let (h4, w4) = (4 * h, 4 * w);
    let (h8, w8) = (8 * h, 8 * w);

    // latent in + mid block
    conv(3, 16, 512, h, w)
        + 2 * resnet(3, 512, 512, h, w)
        + transformer(512, 256, 512, 1, h * w)
        // up block 1
        + 3 * resnet(3, 512, 512, h, w)
        + conv(3, 512, 512, h2, w2)
        // up block 2
        + 3 * resnet(3, 512, 512, h2, w2)
        + conv(3, 512, 512, h4, w4)
        // up block 3
        + resnet(3, 512, 256, h4, w4)
        + 2 * resnet(3, 256, 256, h4, w4)
        + conv(3, 256, 256, h8, w8)
        // up block 4 + rgb out
        + resnet(3, 256, 128, h8, w8)
        + 2 * resnet(3, 128, 128, h8, w8)
        + conv(3, 128, 3, h8, w8)
}

pub fn vae_decoder_gflops(res: Resolution) -> f64 {
    to_gflops(vae_decoder_flops(res))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sq(side: u32) -> Resolution {
        Resolution::square(side).unwrap()
    }

    #[test]
    fn denoise_values() {
        assert_eq!(denoise_flops(ModelId::Flux, sq(256)), 10_121_493_086_208);
        assert_eq!(denoise_flops(ModelId::Sd35, sq(256)), 3_186_835_823_104);
        assert_eq!(denoise_flops(ModelId::Qwen, sq(256)), 3_668_475_248_640);
        assert!((denoise_gflops(ModelId::Flux, sq(256)) - 1.012e4).abs() / 1.012e4 < 1e-3);
    }

    #[test]
    fn text_token_override() {
        let res = sq(512);
        assert_eq!(
            denoise_flops_with_text_tokens(ModelId::Qwen, res, 12).unwrap(),
            denoise_flops(ModelId::Qwen, res)
        );
        assert!(
            denoise_flops_with_text_tokens(ModelId::Qwen, res, 40).unwrap()
                > denoise_flops(ModelId::Qwen, res)
        );
        assert!(denoise_flops_with_text_tokens(ModelId::Sd2, res, 77).is_err());
    }

    #[test]
    fn text_values() {
        assert_eq!(
            text_encoder_flops(ModelId::Flux).unwrap(),
            3_776_587_450_368
        );
        assert_eq!(text_encoder_flops(ModelId::Qwen).unwrap(), 111_010_185_216);
        // Term-by-term for SD3.5: CLIP-L + CLIP-G + T5 (256 tokens) + GLU bias.
        let expected = 13_189_220_352i128
            + transformer(1280, 5120, 1280, 32, 77) as i128
            + transformer(4096, 10240, 4096, 24, 256) as i128
            + 1_006_878_720;
        assert_eq!(text_encoder_flops(ModelId::Sd35).unwrap(), expected);
        assert_eq!(
            text_encoder_flops(ModelId::Sd35).unwrap(),
            1_979_880_998_912
        );
        assert!(matches!(
            text_encoder_flops(ModelId::Sd2),
            Err(FlopsError::UnsupportedModel { .. })
        ));
    }

    #[test]
    fn qwen_correction_is_negative() {
        let uncorrected = transformer(3584, 18944, 3584, 28, 12) as i128;
        assert!(text_encoder_flops(ModelId::Qwen).unwrap() < uncorrected);
        assert!((text_encoder_gflops(ModelId::Qwen).unwrap() - 111.0).abs() < 0.1);
    }

    #[test]
    fn decoder_scaling() {
        let d256 = vae_decoder_flops(sq(256));
        let d512 = vae_decoder_flops(sq(512));
        assert_eq!(d256, 613_173_690_368);
        assert!(d256 < d512);
        let ratio = d512 as f64 / d256 as f64;
        assert!((ratio / 4.0 - 1.0).abs() < 0.05, "ratio {ratio}");
    }
}
