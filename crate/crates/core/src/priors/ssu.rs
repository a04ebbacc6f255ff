//! Structure upsampler: a four-layer CNN that doubles the resolution of a
//! line or edge map.
//!
//! Three 3×3 convolutions with ReLU run at the input resolution, then a 4×4
//! stride-2 transposed convolution produces one raw channel at twice the
//! size. The output is `sigmoid(γ·(raw + β))`.

use rand::seq::SliceRandom;
use rand::Rng;

use super::raster::{random_segments, rasterize_lines, LineSegment};
use crate::autodiff::{NodeId, Tape};
use crate::error::{Error, Result};
use crate::init::{self, SeededRng};
use crate::tensor::{
    self, activate, conv2d, transposed_conv2d, Activation, ConvSpec, ResizeMode, Tensor,
};

pub const DEFAULT_WIDTH: usize = 32;
pub const INFERENCE_GAMMA: f64 = 2.0;
pub const INFERENCE_BETA: f64 = 2.0;
/// Range that γ and β are each drawn from, per batch, while training.
pub const TRAIN_SHIFT_RANGE: (f64, f64) = (1.5, 3.0);

fn conv_spec() -> ConvSpec {
    ConvSpec::same(3)
}

fn up_spec() -> ConvSpec {
    ConvSpec::new(4, 4).stride(2).pad(1)
}

#[derive(Clone, Debug, PartialEq)]
pub struct SsuWeights {
    pub width: usize,
    /// `w1, b1, w2, b2, w3, b3, w_up, b_up`.
    pub params: Vec<Tensor>,
}

const NAMES: [&str; 8] = ["conv1.w", "conv1.b", "conv2.w", "conv2.b", "conv3.w", "conv3.b", "up.w", "up.b"];

impl SsuWeights {
    /// He-normal convolutions, zero biases.
    pub fn init(width: usize, rng: &mut SeededRng) -> Self {
        let up_std = (1.0 / (4 * width) as f64).sqrt();
        let params = vec![
            init::conv_weight([width, 1, 3, 3], rng),
            Tensor::zeros(&[width]),
            init::conv_weight([width, width, 3, 3], rng),
            Tensor::zeros(&[width]),
            init::conv_weight([width, width, 3, 3], rng),
            Tensor::zeros(&[width]),
            init::normal(&[width, 1, 4, 4], up_std, rng),
            Tensor::zeros(&[1]),
        ];
        Self { width, params }
    }

    pub fn named(&self) -> Vec<(String, Tensor)> {
        NAMES
            .iter()
            .zip(&self.params)
            .map(|(n, t)| (n.to_string(), t.clone()))
            .collect()
    }

    pub fn from_named(named: &[(String, Tensor)]) -> Result<Self> {
        let mut params = Vec::with_capacity(NAMES.len());
        for name in NAMES {
            let t = named
                .iter()
                .find(|(n, _)| n == name)
                .ok_or_else(|| Error::Format(format!("missing SSU parameter {name}")))?;
            params.push(t.1.clone());
        }
        let width = params[0].dims4()[0];
        let expect: [&[usize]; 8] = [
            &[width, 1, 3, 3],
            &[width],
            &[width, width, 3, 3],
            &[width],
            &[width, width, 3, 3],
            &[width],
            &[width, 1, 4, 4],
            &[1],
        ];
        for ((name, p), shape) in NAMES.iter().zip(&params).zip(expect) {
            if p.shape() != shape {
                return Err(Error::Format(format!("{name}: shape {:?}, expected {shape:?}", p.shape())));
            }
        }
        Ok(Self { width, params })
    }

    /// Pre-activation output at twice the input size.
    pub fn raw(&self, x: &Tensor) -> Result<Tensor> {
        let p = &self.params;
        let x = check_input(x)?;
        let mut h = x;
        for layer in 0..3 {
            h = activate(
                &conv2d(&h, &p[2 * layer], Some(&p[2 * layer + 1]), conv_spec())?,
                Activation::Relu,
            );
        }
        transposed_conv2d(&h, &p[6], Some(&p[7]), up_spec())
    }

    /// `sigmoid(γ·(raw + β))`, values in `[0, 1]`.
    pub fn forward(&self, x: &Tensor, gamma: f64, beta: f64) -> Result<Tensor> {
        Ok(self.raw(x)?.map(|r| tensor::sigmoid(gamma * (r + beta))))
    }

    /// Records the raw output on `tape`; `params` are the nodes holding
    /// `self.params` in order.
    pub fn record_raw(tape: &mut Tape, params: &[NodeId], x: NodeId) -> Result<NodeId> {
        let mut h = x;
        for layer in 0..3 {
            let c = tape.conv2d(h, params[2 * layer], Some(params[2 * layer + 1]), conv_spec())?;
            h = tape.activation(c, Activation::Relu);
        }
        tape.transposed_conv2d(h, params[6], Some(params[7]), up_spec())
    }
}

fn check_input(x: &Tensor) -> Result<Tensor> {
    let x = x.to4();
    let c = x.dims4()[1];
    if c != 1 {
        return Err(Error::mismatch("ssu", "channel", 1, c));
    }
    Ok(x)
}

/// Doubles repeatedly at γ = β = 2 until both extents reach the target, then
/// resizes bilinearly to the exact target size.
pub fn ssu_upsample(prior: &Tensor, w: &SsuWeights, target_h: usize, target_w: usize) -> Result<Tensor> {
    let x = check_input(prior)?;
    let [_, _, h, wd] = x.dims4();
    if target_h < h || target_w < wd {
        return Err(Error::invalid(
            "ssu_upsample",
            format!("target {target_h}x{target_w} is smaller than input {h}x{wd}"),
        ));
    }
    let mut cur = x;
    let (mut ch, mut cw) = (h, wd);
    while ch < target_h || cw < target_w {
        cur = w.forward(&cur, INFERENCE_GAMMA, INFERENCE_BETA)?;
        ch *= 2;
        cw *= 2;
    }
    tensor::resize(&cur, target_h, target_w, ResizeMode::Bilinear)
}

/// A low-resolution line map and its direct rendering at `scale`× size.
#[derive(Clone, Debug)]
pub struct LinePair {
    pub segments: Vec<LineSegment>,
    pub low: Tensor,
    pub high: Tensor,
}

impl LinePair {
    pub fn render(segments: Vec<LineSegment>, size: usize, scale: usize) -> Result<Self> {
        let low = rasterize_lines(&segments, size, size)?.reshape(&[1, 1, size, size])?;
        let fine: Vec<LineSegment> = segments.iter().map(|s| s.scaled(scale as f64)).collect();
        let big = size * scale;
        let high = rasterize_lines(&fine, big, big)?.reshape(&[1, 1, big, big])?;
        Ok(Self { segments, low, high })
    }
}

/// `count` images of 2–8 random segments, each at least 8 pixels long.
pub fn synthetic_corpus(count: usize, size: usize, scale: usize, rng: &mut SeededRng) -> Result<Vec<LinePair>> {
    (0..count)
        .map(|_| {
            let n = rng.random_range(2..=8);
            LinePair::render(random_segments(rng, n, size, 8.0), size, scale)
        })
        .collect()
}

#[derive(Clone, Debug)]
pub struct TrainConfig {
    pub epochs: usize,
    /// Step size for the first batch.
    pub step: f64,
    /// Step size for the last batch; the step follows a half-cosine between
    /// the two. Equal to `step` for a fixed step.
    pub final_step: f64,
    pub momentum: f64,
    pub batch: usize,
    pub seed: u64,
    /// Decay of an exponential moving average of the weights, which is what
    /// training returns. 0 returns the last iterate.
    pub average: f64,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            epochs: 12,
            step: 0.05,
            final_step: 0.001,
            momentum: 0.9,
            batch: 8,
            seed: 0,
            average: 0.995,
        }
    }
}

impl TrainConfig {
    /// Sets the first step, scaling the last one by the same factor.
    pub fn with_step(mut self, step: f64) -> Self {
        self.final_step = if self.step == 0.0 { step } else { self.final_step * step / self.step };
        self.step = step;
        self
    }
}

/// Mean binary cross-entropy per epoch.
#[derive(Clone, Debug, Default)]
pub struct TrainLog {
    pub epoch_loss: Vec<f64>,
}

fn stack(items: &[&Tensor]) -> Result<Tensor> {
    let [_, c, h, w] = items[0].dims4();
    let mut data = Vec::with_capacity(items.len() * c * h * w);
    for t in items {
        data.extend_from_slice(t.data());
    }
    Tensor::new(&[items.len(), c, h, w], data)
}

/// Momentum SGD on the BCE between `forward(low)` and `high`, with γ and β
/// redrawn from [`TRAIN_SHIFT_RANGE`] for every batch. `on_epoch` sees the
/// epoch index, its mean loss and the weights training would return if it
/// stopped there.
pub fn ssu_train(
    weights: &mut SsuWeights,
    corpus: &[LinePair],
    cfg: &TrainConfig,
    mut on_epoch: impl FnMut(usize, f64, &SsuWeights),
) -> Result<TrainLog> {
    if corpus.is_empty() {
        return Err(Error::invalid("ssu_train", "empty corpus"));
    }
    if cfg.batch == 0 {
        return Err(Error::invalid("ssu_train", "batch size must be positive"));
    }
    if !(0.0..1.0).contains(&cfg.average) {
        return Err(Error::invalid("ssu_train", "average decay must lie in [0, 1)"));
    }
    let mut averaged = (cfg.average > 0.0).then(|| weights.clone());
    let mut rng = init::rng(cfg.seed);
    let mut velocity: Vec<Tensor> = weights.params.iter().map(|p| Tensor::zeros(p.shape())).collect();
    let mut order: Vec<usize> = (0..corpus.len()).collect();
    let mut log = TrainLog::default();
    let (lo, hi) = TRAIN_SHIFT_RANGE;
    let per_epoch = corpus.len().div_ceil(cfg.batch);
    let last = (cfg.epochs * per_epoch).saturating_sub(1).max(1) as f64;
    let mut t = 0usize;
    for epoch in 0..cfg.epochs {
        order.shuffle(&mut rng);
        let (mut total, mut batches) = (0.0, 0usize);
        for chunk in order.chunks(cfg.batch) {
            let gamma = rng.random_range(lo..=hi);
            let beta = rng.random_range(lo..=hi);
            let lows: Vec<&Tensor> = chunk.iter().map(|&i| &corpus[i].low).collect();
            let highs: Vec<&Tensor> = chunk.iter().map(|&i| &corpus[i].high).collect();
            let x = stack(&lows)?;
            let target = stack(&highs)?;

            let mut tape = Tape::new();
            let ids: Vec<NodeId> = weights.params.iter().map(|p| tape.leaf(p.clone())).collect();
            let xi = tape.constant(x);
            let raw = SsuWeights::record_raw(&mut tape, &ids, xi)?;
            let shifted = tape.offset(raw, beta);
            let logits = tape.scale(shifted, gamma);
            let loss = tape.bce_with_logits(logits, &target)?;
            let value = tape.value(loss).item();
            if !value.is_finite() {
                return Err(Error::NonFinite(format!(
                    "SSU training loss at epoch {epoch}, batch {batches}"
                )));
            }
            let mut grads = tape.backward(loss)?;
            let phase = 0.5 * (1.0 + (std::f64::consts::PI * t as f64 / last).cos());
            let step = cfg.final_step + (cfg.step - cfg.final_step) * phase;
            t += 1;
            for ((p, v), id) in weights.params.iter_mut().zip(&mut velocity).zip(&ids) {
                let g = grads.take(*id).unwrap_or_else(|| Tensor::zeros(p.shape()));
                for ((pv, vv), gv) in p.data_mut().iter_mut().zip(v.data_mut()).zip(g.data()) {
                    *vv = cfg.momentum * *vv - step * gv;
                    *pv += *vv;
                }
            }
            if let Some(avg) = averaged.as_mut() {
                // short memory at first so the initial weights fade quickly
                let decay = cfg.average.min((1 + t) as f64 / (10 + t) as f64);
                for (a, p) in avg.params.iter_mut().zip(&weights.params) {
                    for (av, pv) in a.data_mut().iter_mut().zip(p.data()) {
                        *av += (1.0 - decay) * (pv - *av);
                    }
                }
            }
            total += value;
            batches += 1;
        }
        let mean = total / batches as f64;
        on_epoch(epoch, mean, averaged.as_ref().unwrap_or(weights));
        log.epoch_loss.push(mean);
    }
    if let Some(avg) = averaged {
        *weights = avg;
    }
    Ok(log)
}

/// Pixel counts for F1 between two maps binarised at a threshold.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct F1Counts {
    pub tp: usize,
    pub fp: usize,
    pub fn_: usize,
}

impl F1Counts {
    pub fn compare(pred: &Tensor, truth: &Tensor, threshold: f64) -> Result<Self> {
        pred.ensure_same_shape(truth, "f1")?;
        let mut c = Self::default();
        for (&p, &t) in pred.data().iter().zip(truth.data()) {
            match (p >= threshold, t >= threshold) {
                (true, true) => c.tp += 1,
                (true, false) => c.fp += 1,
                (false, true) => c.fn_ += 1,
                _ => {}
            }
        }
        Ok(c)
    }

    pub fn add(&mut self, other: Self) {
        self.tp += other.tp;
        self.fp += other.fp;
        self.fn_ += other.fn_;
    }

    /// 1 when both maps are empty.
    pub fn f1(&self) -> f64 {
        let denom = 2 * self.tp + self.fp + self.fn_;
        if denom == 0 {
            1.0
        } else {
            2.0 * self.tp as f64 / denom as f64
        }
    }
}

/// Pooled F1 over a set of pairs, upsampling each `low` to the size of `high`.
pub fn evaluate_f1(w: &SsuWeights, pairs: &[LinePair]) -> Result<f64> {
    let mut counts = F1Counts::default();
    for p in pairs {
        let [_, _, h, wd] = p.high.dims4();
        let up = ssu_upsample(&p.low, w, h, wd)?;
        counts.add(F1Counts::compare(&up, &p.high, 0.5)?);
    }
    Ok(counts.f1())
}
