//! Term-list FLOP evaluator used as a test oracle.
//!
//! Each composition is spelled out as data, one row per formula term, and
//! evaluated in signed 128-bit arithmetic with no code shared with the
//! library.

#[derive(Clone, Copy, Debug)]
pub enum Term {
    /// k, c_in, c_out, h, w
    Conv(i128, i128, i128, i128, i128),
    /// k, c_in, c_out, h, w
    Res(i128, i128, i128, i128, i128),
    /// d_model, d_ff, d_attn, n_layer, n_ctx
    Tr(i128, i128, i128, i128, i128),
    /// d_model, d_ff, d_attn, n_layer, n_ctx
    Mmdit(i128, i128, i128, i128, i128),
    /// d_q, d_k, d_ff, d_attn, n_layer, n_q, n_k
    Cross(i128, i128, i128, i128, i128, i128, i128),
    /// A literal FLOP count.
    Lit(i128),
}

pub fn eval(term: Term) -> i128 {
    match term {
        Term::Conv(k, ci, co, h, w) => 2 * h * w * k * k * ci * co,
        Term::Res(k, ci, co, h, w) => {
            eval(Term::Conv(k, ci, co, h, w)) + eval(Term::Conv(k, co, co, h, w))
        }
        Term::Tr(dm, dff, da, nl, nc) => {
            let n = 2 * dm * nl * (2 * da + dff);
            nc * (2 * n + 2 * nl * nc * da)
        }
        Term::Mmdit(dm, dff, da, nl, nc) => {
            let n = 4 * dm * nl * (2 * da + dff);
            nc * (n + 2 * nl * nc * da)
        }
        Term::Cross(dq, dk, dff, da, nl, nq, nk) => {
            let n = 2 * nl * (dq * (da + dff) + dk * da);
            nq * (2 * n + 2 * nl * nk * da)
        }
        Term::Lit(x) => x,
    }
}

pub fn sum(terms: &[(i128, Term)]) -> i128 {
    terms.iter().map(|&(m, t)| m * eval(t)).sum()
}

pub fn flux(h: i128, w: i128) -> i128 {
    let nc = h * w / 256 + 512;
    sum(&[
        (1, Term::Mmdit(3072, 12288, 3072, 19, nc)),
        (1, Term::Tr(3072, 12288, 3072, 38, nc)),
    ])
}

pub fn qwen(h: i128, w: i128) -> i128 {
    sum(&[(1, Term::Mmdit(3072, 12288, 3072, 60, h * w / 256 + 12))])
}

pub fn sd35(h: i128, w: i128) -> i128 {
    sum(&[(1, Term::Mmdit(2432, 9478, 2432, 38, h * w / 256 + 333))])
}

/// SD2 stages in order ConvIn, Down 1–4, Mid, Up 1–4, ConvOut.
pub fn sd2_stages(h: i128, w: i128) -> [i128; 11] {
    use Term::*;
    let (a, b) = (h / 8, w / 8);
    let hw = a * b;
    [
        sum(&[(1, Conv(3, 4, 320, a, b))]),
        sum(&[
            (2, Res(3, 320, 320, a, b)),
            (2, Tr(320, 0, 320, 1, hw)),
            (2, Cross(320, 1024, 1920, 320, 1, hw, 77)),
            (1, Lit(4 * hw * 320 * 320)),
            (1, Conv(3, 320, 320, a / 2, b / 2)),
        ]),
        sum(&[
            (1, Res(3, 320, 640, a / 2, b / 2)),
            (1, Res(3, 640, 640, a / 2, b / 2)),
            (2, Tr(640, 0, 640, 1, hw / 4)),
            (2, Cross(640, 1024, 3840, 640, 1, hw / 4, 77)),
            (1, Lit(hw * 640 * 640)),
            (1, Conv(3, 640, 640, a / 4, b / 4)),
        ]),
        sum(&[
            (1, Res(3, 640, 1280, a / 4, b / 4)),
            (1, Res(3, 1280, 1280, a / 4, b / 4)),
            (2, Tr(1280, 0, 1280, 1, hw / 16)),
            (2, Cross(1280, 1024, 7680, 1280, 1, hw / 16, 77)),
            (1, Lit(hw / 4 * 1280 * 1280)),
            (1, Conv(3, 1280, 1280, a / 8, b / 8)),
        ]),
        sum(&[(2, Res(3, 1280, 1280, a / 8, b / 8))]),
        sum(&[
            (2, Res(3, 1280, 1280, a / 8, b / 8)),
            (1, Tr(1280, 0, 1280, 1, hw / 64)),
            (1, Cross(1280, 1024, 7680, 1280, 1, hw / 64, 77)),
            (1, Lit(hw / 16 * 1280 * 1280)),
        ]),
        sum(&[
            (3, Res(3, 2560, 1280, a / 8, b / 8)),
            (1, Conv(3, 1280, 1280, a / 4, b / 4)),
        ]),
        sum(&[
            (2, Res(3, 2560, 1280, a / 4, b / 4)),
            (1, Res(3, 1920, 1280, a / 4, b / 4)),
            (3, Tr(1280, 0, 1280, 1, hw / 16)),
            (3, Cross(1280, 1024, 7680, 1280, 1, hw / 16, 77)),
            (1, Lit(3 * hw / 4 * 1280 * 1280)),
            (1, Conv(3, 1280, 1280, a / 2, b / 2)),
        ]),
        sum(&[
            (1, Res(3, 1920, 640, a / 2, b / 2)),
            (1, Res(3, 1280, 640, a / 2, b / 2)),
            (1, Res(3, 960, 640, a / 2, b / 2)),
            (3, Tr(640, 0, 640, 1, hw / 4)),
            (3, Cross(640, 1024, 3840, 640, 1, hw / 4, 77)),
            (1, Lit(3 * hw * 640 * 640)),
            (1, Conv(3, 640, 640, a, b)),
        ]),
        sum(&[
            (2, Res(3, 640, 320, a, b)),
            (1, Res(3, 960, 320, a, b)),
            (3, Tr(320, 0, 320, 1, hw)),
            (3, Cross(320, 1024, 1920, 320, 1, hw, 77)),
            (1, Lit(12 * hw * 320 * 320)),
        ]),
        sum(&[(1, Conv(3, 320, 4, a, b))]),
    ]
}

pub fn sd2(h: i128, w: i128) -> i128 {
    sd2_stages(h, w).iter().sum()
}

pub fn decoder(h: i128, w: i128) -> i128 {
    use Term::*;
    let (a, b) = (h / 8, w / 8);
    sum(&[
        (1, Conv(3, 16, 512, a, b)),
        (2, Res(3, 512, 512, a, b)),
        (1, Tr(512, 256, 512, 1, a * b)),
        (3, Res(3, 512, 512, a, b)),
        (1, Conv(3, 512, 512, 2 * a, 2 * b)),
        (3, Res(3, 512, 512, 2 * a, 2 * b)),
        (1, Conv(3, 512, 512, 4 * a, 4 * b)),
        (1, Res(3, 512, 256, 4 * a, 4 * b)),
        (2, Res(3, 256, 256, 4 * a, 4 * b)),
        (1, Conv(3, 256, 256, 8 * a, 8 * b)),
        (1, Res(3, 256, 128, 8 * a, 8 * b)),
        (2, Res(3, 128, 128, 8 * a, 8 * b)),
        (1, Conv(3, 128, 3, 8 * a, 8 * b)),
    ])
}

pub fn text(model: &str) -> Option<i128> {
    use Term::*;
    let t5_bias = Lit(24 * 10240 * 4097);
    Some(match model {
        "flux" => sum(&[
            (1, Tr(768, 3072, 768, 12, 77)),
            (1, Tr(4096, 10240, 4096, 24, 512)),
            (1, t5_bias),
        ]),
        "sd35" => sum(&[
            (1, Tr(768, 3072, 768, 12, 77)),
            (1, Tr(1280, 5120, 1280, 32, 77)),
            (1, Tr(4096, 10240, 4096, 24, 256)),
            (1, t5_bias),
        ]),
        "qwen" => sum(&[
            (1, Tr(3584, 18944, 3584, 28, 12)),
            (1, Lit(28 * 12 * 2 * (2 * 3584 * (512 - 3584)))),
        ]),
        _ => return None,
    })
}

/// Denoiser FLOPs of one forward pass, by model name.
pub fn denoise(model: &str, h: i128, w: i128) -> i128 {
    match model {
        "flux" => flux(h, w),
        "qwen" => qwen(h, w),
        "sd35" => sd35(h, w),
        "sd2" => sd2(h, w),
        other => panic!("no oracle for {other}"),
    }
}
