//! SD2 U-Net, one forward pass, stage by stage.
//!
//! Spatial-transformer blocks are counted as a self-attention transformer
//! (no feed-forward) plus a cross-attention transformer over 77 CLIP tokens of
//! width 1024, plus the 1×1 `proj_in`/`proj_out` linear layers.

use super::{conv, cross_attn, resnet, transformer};
use crate::config::Resolution;

const TEXT_TOKENS: u64 = 77;
const TEXT_WIDTH: u64 = 1024;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum UnetStage {
    ConvIn,
    Down1,
    Down2,
    Down3,
    Down4,
    Mid,
    Up1,
    Up2,
    Up3,
    Up4,
    ConvOut,
}

impl UnetStage {
    pub const ALL: [UnetStage; 11] = [
        UnetStage::ConvIn,
        UnetStage::Down1,
        UnetStage::Down2,
        UnetStage::Down3,
        UnetStage::Down4,
        UnetStage::Mid,
        UnetStage::Up1,
        UnetStage::Up2,
        UnetStage::Up3,
        UnetStage::Up4,
        UnetStage::ConvOut,
    ];
}

/// Self-attention + cross-attention pair at `channels` width over `tokens` queries.
fn attn_pair(channels: u64, tokens: u64) -> u128 {
    transformer(channels, 0, channels, 1, tokens)
        + cross_attn(
            channels,
            TEXT_WIDTH,
            6 * channels,
            channels,
            1,
            tokens,
            TEXT_TOKENS,
        )
}

fn sq(c: u64) -> u128 {
    u128::from(c) * u128::from(c)
}

pub fn unet_stage_flops(stage: UnetStage, res: Resolution) -> u128 {
    let h0 = u64::from(res.height()) / 8;
    let w0 = u64::from(res.width()) / 8;
    let area = u128::from(h0 * w0);
    let (h2, w2) = (h0 / 2, w0 / 2);
    let (h4, w4) = (h0 / 4, w0 / 4);
    let (h8, w8) = (h0 / 8, w0 / 8);
    let tok = |div: u64| h0 * w0 / div;

    match stage {
        UnetStage::ConvIn => conv(3, 4, 320, h0, w0),
        UnetStage::Down1 => {
            2 * resnet(3, 320, 320, h0, w0)
                + 2 * attn_pair(320, tok(1))
                + 4 * area * sq(320)
                + conv(3, 320, 320, h2, w2)
        }
        UnetStage::Down2 => {
            resnet(3, 320, 640, h2, w2)
                + resnet(3, 640, 640, h2, w2)
                + 2 * attn_pair(640, tok(4))
                + area * sq(640)
                + conv(3, 640, 640, h4, w4)
        }
        UnetStage::Down3 => {
            resnet(3, 640, 1280, h4, w4)
                + resnet(3, 1280, 1280, h4, w4)
                + 2 * attn_pair(1280, tok(16))
                + area / 4 * sq(1280)
                + conv(3, 1280, 1280, h8, w8)
        }
        UnetStage::Down4 => 2 * resnet(3, 1280, 1280, h8, w8),
        UnetStage::Mid => {
            2 * resnet(3, 1280, 1280, h8, w8) + attn_pair(1280, tok(64)) + area / 16 * sq(1280)
        }
        UnetStage::Up1 => 3 * resnet(3, 2560, 1280, h8, w8) + conv(3, 1280, 1280, h4, w4),
        UnetStage::Up2 => {
            2 * resnet(3, 2560, 1280, h4, w4)
                + resnet(3, 1920, 1280, h4, w4)
                + 3 * attn_pair(1280, tok(16))
                + 3 * area / 4 * sq(1280)
                + conv(3, 1280, 1280, h2, w2)
        }
        UnetStage::Up3 => {
            resnet(3, 1920, 640, h2, w2)
                + resnet(3, 1280, 640, h2, w2)
                + resnet(3, 960, 640, h2, w2)
                + 3 * attn_pair(640, tok(4))
                + 3 * area * sq(640)
                + conv(3, 640, 640, h0, w0)
        }
        UnetStage::Up4 => {
            2 * resnet(3, 640, 320, h0, w0)
                + resnet(3, 960, 320, h0, w0)
                + 3 * attn_pair(320, tok(1))
                + 12 * area * sq(320)
        }
        UnetStage::ConvOut => conv(3, 320, 4, h0, w0),
    }
}

pub(crate) fn unet_flops(res: Resolution) -> u128 {
    UnetStage::ALL
        .iter()
        .map(|&stage| unet_stage_flops(stage, res))
        .sum()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn frozen_totals() {
        let expected = [
            (256, 178_886_778_880u128),
            (512, 761_482_608_640),
            (768, 1_885_593_968_640),
            (1024, 3_780_898_324_480),
        ];
        for (side, flops) in expected {
            assert_eq!(
                unet_flops(Resolution::square(side).unwrap()),
                flops,
                "{side}"
            );
        }
    }

    #[test]
    fn stages_positive() {
        let res = Resolution::square(64).unwrap();
        for stage in UnetStage::ALL {
            assert!(unet_stage_flops(stage, res) > 0, "{stage:?}");
        }
    }
}
