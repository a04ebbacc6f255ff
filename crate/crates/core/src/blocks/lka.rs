//! Large-kernel attention with a decomposed `K×K` receptive field, plus the
//! impulse and cost probes used to check the decomposition.

use std::time::Instant;

use super::layers::{ensure_channels, ConvLayer};
use crate::error::{Error, Result};
use crate::init::{self, SeededRng};
use crate::tensor::{conv2d, ConvSpec, Tensor};

/// Depthwise convolution whose output keeps the input size even when the
/// dilated span is even; then the extra trailing row and column are dropped.
#[derive(Clone, Debug, PartialEq)]
pub struct SameDepthwise {
    pub layer: ConvLayer,
}

impl SameDepthwise {
    pub fn init(c: usize, k: usize, dilation: usize, rng: &mut SeededRng) -> Self {
        let span = dilation * (k - 1) + 1;
        let spec = ConvSpec::new(k, k).dilation(dilation).pad(span / 2).groups(c);
        Self {
            layer: ConvLayer::new(c, c, spec, true, rng),
        }
    }

    pub fn forward(&self, x: &Tensor) -> Result<Tensor> {
        let [n, c, h, w] = x.dims4();
        let y = self.layer.forward(x)?;
        let [_, _, oh, ow] = y.dims4();
        if (oh, ow) == (h, w) {
            return Ok(y);
        }
        let mut out = Tensor::zeros(&[n, c, h, w]);
        for ni in 0..n {
            for ci in 0..c {
                let src = y.plane(ni, ci);
                let dst = out.plane_mut(ni, ci);
                for r in 0..h {
                    dst[r * w..(r + 1) * w].copy_from_slice(&src[r * ow..r * ow + w]);
                }
            }
        }
        Ok(out)
    }
}

/// Kernel sizes of the two depthwise stages for a target field `k` and
/// dilation `d`: `(2d−1, ⌈k/d⌉)`.
pub fn lka_kernels(k: usize, d: usize) -> Result<(usize, usize)> {
    if k == 0 || d == 0 {
        return Err(Error::invalid("lka", format!("K={k} and d={d} must be positive")));
    }
    Ok((2 * d - 1, k.div_ceil(d)))
}

/// Side of the composed receptive field: `(⌈K/d⌉−1)·d + 2d−1`.
pub fn lka_support(k: usize, d: usize) -> Result<usize> {
    let (a, b) = lka_kernels(k, d)?;
    Ok((b - 1) * d + a)
}

#[derive(Clone, Debug, PartialEq)]
pub struct LkaBlock {
    pub k: usize,
    pub d: usize,
    pub local: SameDepthwise,
    pub dilated: SameDepthwise,
    pub pointwise: ConvLayer,
    pub ffn: ConvLayer,
}

impl LkaBlock {
    pub fn init(c: usize, k: usize, d: usize, rng: &mut SeededRng) -> Result<Self> {
        let (a, b) = lka_kernels(k, d)?;
        Ok(Self {
            k,
            d,
            local: SameDepthwise::init(c, a, 1, rng),
            dilated: SameDepthwise::init(c, b, d, rng),
            pointwise: ConvLayer::new(c, c, ConvSpec::new(1, 1), true, rng),
            ffn: ConvLayer::new(c, c, ConvSpec::same(3), true, rng),
        })
    }

    pub fn channels(&self) -> usize {
        self.pointwise.out_channels()
    }

    /// Attention weights: pointwise after the dilated after the local stage.
    pub fn attention(&self, x: &Tensor) -> Result<Tensor> {
        ensure_channels("lka_block", self.channels(), x)?;
        let a = self.local.forward(x)?;
        let a = self.dilated.forward(&a)?;
        self.pointwise.forward(&a)
    }

    /// `x ⊙ attention(x) + ffn(x)`.
    pub fn forward(&self, x: &Tensor) -> Result<Tensor> {
        let gated = x.to4().mul(&self.attention(x)?)?;
        gated.add(&self.ffn.forward(x)?)
    }

    pub fn zero_attention(&mut self) {
        self.local.layer.zero();
        self.dilated.layer.zero();
        self.pointwise.zero();
    }

    /// Sets the shortcut to pass its input through unchanged.
    pub fn identity_ffn(&mut self) {
        let c = self.channels();
        self.ffn.weight = Tensor::from_fn4([c, c, 3, 3], |o, i, y, x| {
            if o == i && y == 1 && x == 1 { 1.0 } else { 0.0 }
        });
        if let Some(b) = &mut self.ffn.bias {
            b.data_mut().fill(0.0);
        }
    }
}

/// Inclusive pixel bounds of a response: rows `top..=bottom`, cols `left..=right`.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct BoundingBox {
    pub top: usize,
    pub left: usize,
    pub bottom: usize,
    pub right: usize,
}

impl BoundingBox {
    pub fn height(&self) -> usize {
        self.bottom - self.top + 1
    }

    pub fn width(&self) -> usize {
        self.right - self.left + 1
    }
}

/// Feeds a unit impulse at the centre of `channel` in a `channels×size×size`
/// zero image through `forward` and returns the tight box of `|out| > 1e-12`
/// over all output channels.
pub fn impulse_rf(
    forward: impl Fn(&Tensor) -> Result<Tensor>,
    channels: usize,
    channel: usize,
    size: usize,
) -> Result<BoundingBox> {
    if channel >= channels {
        return Err(Error::invalid("impulse_rf", format!("channel {channel} out of {channels}")));
    }
    let mut x = Tensor::zeros(&[1, channels, size, size]);
    x.set4(0, channel, size / 2, size / 2, 1.0);
    let y = forward(&x)?;
    let [n, c, h, w] = y.dims4();
    let mut bb: Option<BoundingBox> = None;
    for ni in 0..n {
        for ci in 0..c {
            let plane = y.plane(ni, ci);
            for r in 0..h {
                for col in 0..w {
                    if plane[r * w + col].abs() <= 1e-12 {
                        continue;
                    }
                    let b = bb.get_or_insert(BoundingBox { top: r, left: col, bottom: r, right: col });
                    b.top = b.top.min(r);
                    b.bottom = b.bottom.max(r);
                    b.left = b.left.min(col);
                    b.right = b.right.max(col);
                }
            }
        }
    }
    let bb = bb.ok_or_else(|| Error::invalid("impulse_rf", "response is zero everywhere"))?;
    if bb.top == 0 || bb.left == 0 || bb.bottom + 1 == h || bb.right + 1 == w {
        return Err(Error::invalid("impulse_rf", "response touches the border; use a larger probe"));
    }
    Ok(bb)
}

/// Multiply-adds per output pixel per channel of the depthwise stages.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct FlopCount {
    pub direct: usize,
    pub decomposed: usize,
    /// Channel-mixing `1×1` cost, `C` per pixel per channel; identical for both.
    pub pointwise: usize,
}

pub fn flop_count(k: usize, d: usize, channels: usize) -> Result<FlopCount> {
    let (a, b) = lka_kernels(k, d)?;
    Ok(FlopCount {
        direct: k * k,
        decomposed: a * a + b * b,
        pointwise: channels,
    })
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct LkaBench {
    pub flops: FlopCount,
    pub direct_secs: f64,
    pub decomposed_secs: f64,
}

impl LkaBench {
    pub fn speedup(&self) -> f64 {
        self.direct_secs / self.decomposed_secs
    }
}

/// Times a direct `K×K` depthwise convolution against the two decomposed
/// depthwise stages on a random `1×channels×size×size` input. Each path runs
/// `reps` times and the fastest run counts.
pub fn bench_lka(k: usize, d: usize, size: usize, channels: usize, reps: usize, seed: u64) -> Result<LkaBench> {
    let flops = flop_count(k, d, channels)?;
    let (a, b) = lka_kernels(k, d)?;
    let mut rng = init::rng(seed);
    let x = init::normal(&[1, channels, size, size], 1.0, &mut rng);
    let direct_w = init::normal(&[channels, 1, k, k], 0.1, &mut rng);
    let direct_spec = ConvSpec::new(k, k).pad(k / 2).groups(channels);
    let local = SameDepthwise::init(channels, a, 1, &mut rng);
    let dilated = SameDepthwise::init(channels, b, d, &mut rng);
    let time = |f: &dyn Fn() -> Result<Tensor>| -> Result<f64> {
        let mut best = f64::INFINITY;
        for _ in 0..reps.max(1) {
            let t = Instant::now();
            std::hint::black_box(f()?);
            best = best.min(t.elapsed().as_secs_f64());
        }
        Ok(best)
    };
    let direct_secs = time(&|| conv2d(&x, &direct_w, None, direct_spec))?;
    let decomposed_secs = time(&|| dilated.forward(&local.forward(&x)?))?;
    Ok(LkaBench {
        flops,
        direct_secs,
        decomposed_secs,
    })
}
