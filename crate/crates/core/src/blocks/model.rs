//! Assembly of the structure restorer (TSR), structure feature encoder (SFE)
//! and texture restorer (FTR) at a configurable channel width.
//!
//! A [`ModelSpec`] expands into a [`Schedule`] of stages holding only layer
//! shapes, which can be traced symbolically at any width; [`Schedule::build`]
//! then draws weights for a runnable [`Network`].

use std::fmt;

use rand::Rng;

use super::ffc::{split_channels, FfcBlock};
use super::gated::GatedConv;
use super::layers::{conv_out_hw, BatchNorm, ConvLayer};
use super::lka::LkaBlock;
use super::transformer::TransformerBlock;
use super::zerora::{residual_add, ZeroRaState, INJECTIONS};
use crate::error::{Error, Result};
use crate::init::{self, SeededRng};
use crate::tensor::{activate, resize, Activation, ConvSpec, ResizeMode, Tensor};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Role {
    Tsr,
    Sfe,
    Ftr,
}

impl Role {
    pub fn parse(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "tsr" => Ok(Self::Tsr),
            "sfe" => Ok(Self::Sfe),
            "ftr" => Ok(Self::Ftr),
            _ => Err(Error::invalid("model_spec", format!("unknown role {s:?}"))),
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            Self::Tsr => "tsr",
            Self::Sfe => "sfe",
            Self::Ftr => "ftr",
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct ModelSpec {
    pub role: Role,
    /// Multiplier on the full-size channel counts.
    pub width_fraction: f64,
    /// Nominal input side; sizes the TSR position tables.
    pub size: usize,
    pub in_channels: usize,
    /// Transformer, dilated residual or FFC blocks in the middle stage.
    pub blocks: usize,
    /// Every n-th transformer block also runs full attention (0 disables).
    pub global_every: usize,
    pub k: usize,
    pub d: usize,
    pub ffc_ratio: f64,
    /// FTR only: add the four SFE maps through zero-initialised residuals.
    pub inject: bool,
}

impl ModelSpec {
    pub fn new(role: Role) -> Self {
        let (in_channels, blocks) = match role {
            // masked RGB, edge, line, mask
            Role::Tsr => (6, 8),
            // edge, line, mask
            Role::Sfe => (3, 3),
            // masked RGB, mask
            Role::Ftr => (4, 9),
        };
        Self {
            role,
            width_fraction: 1.0,
            size: 256,
            in_channels,
            blocks,
            global_every: 4,
            k: 21,
            d: 3,
            ffc_ratio: 0.75,
            inject: false,
        }
    }

    pub fn width(mut self, fraction: f64) -> Self {
        self.width_fraction = fraction;
        self
    }

    pub fn size(mut self, size: usize) -> Self {
        self.size = size;
        self
    }

    pub fn blocks(mut self, blocks: usize) -> Self {
        self.blocks = blocks;
        self
    }

    pub fn inject(mut self, inject: bool) -> Self {
        self.inject = inject;
        self
    }

    /// Channel count for a full-width count of `full`.
    pub fn ch(&self, full: usize) -> usize {
        ((full as f64 * self.width_fraction).round() as usize).max(1)
    }

    /// Parses `key=value` lines; `#` starts a comment. Unset keys keep the
    /// defaults of the role, which must come first.
    pub fn parse(text: &str) -> Result<Self> {
        let mut spec: Option<Self> = None;
        for (no, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (key, value) = line
                .split_once('=')
                .ok_or_else(|| Error::Format(format!("line {}: expected key=value", no + 1)))?;
            let (key, value) = (key.trim(), value.trim());
            if key == "role" {
                spec = Some(Self::new(Role::parse(value)?));
                continue;
            }
            let s = spec
                .as_mut()
                .ok_or_else(|| Error::Format(format!("line {}: role must be set first", no + 1)))?;
            let bad = || Error::Format(format!("line {}: bad value {value:?} for {key}", no + 1));
            match key {
                "width_fraction" => s.width_fraction = value.parse().map_err(|_| bad())?,
                "size" => s.size = value.parse().map_err(|_| bad())?,
                "in_channels" => s.in_channels = value.parse().map_err(|_| bad())?,
                "blocks" => s.blocks = value.parse().map_err(|_| bad())?,
                "global_every" => s.global_every = value.parse().map_err(|_| bad())?,
                "K" => s.k = value.parse().map_err(|_| bad())?,
                "d" => s.d = value.parse().map_err(|_| bad())?,
                "ffc_ratio" => s.ffc_ratio = value.parse().map_err(|_| bad())?,
                "inject" => s.inject = value.parse().map_err(|_| bad())?,
                _ => return Err(Error::Format(format!("line {}: unknown key {key:?}", no + 1))),
            }
        }
        spec.ok_or_else(|| Error::Format("missing role".into()))
    }

    pub fn to_text(&self) -> String {
        format!(
            "role={}\nwidth_fraction={}\nsize={}\nin_channels={}\nblocks={}\nglobal_every={}\nK={}\nd={}\nffc_ratio={}\ninject={}\n",
            self.role.name(),
            self.width_fraction,
            self.size,
            self.in_channels,
            self.blocks,
            self.global_every,
            self.k,
            self.d,
            self.ffc_ratio,
            self.inject
        )
    }
}

/// Shape-level description of one layer.
#[derive(Clone, Debug, PartialEq)]
pub enum LayerKind {
    Conv {
        c_in: usize,
        c_out: usize,
        spec: ConvSpec,
        transposed: bool,
        norm: bool,
        act: Activation,
    },
    /// Gated convolution followed by normalisation and activation.
    Gated {
        c_in: usize,
        c_out: usize,
        spec: ConvSpec,
        transposed: bool,
        act: Activation,
    },
    /// Learned additive position table, resized to the feature grid.
    Position { c: usize, side: usize },
    Transformer { c: usize, max_len: usize, global: bool },
    DilatedResidual { c: usize, dilation: usize },
    Lka { c: usize, k: usize, d: usize },
    Ffc { c: usize, ratio: f64, act: Activation },
}

impl LayerKind {
    fn in_channels(&self) -> usize {
        match *self {
            Self::Conv { c_in, .. } | Self::Gated { c_in, .. } => c_in,
            Self::Position { c, .. }
            | Self::Transformer { c, .. }
            | Self::DilatedResidual { c, .. }
            | Self::Lka { c, .. }
            | Self::Ffc { c, .. } => c,
        }
    }

    fn out_shape(&self, c: usize, h: usize, w: usize) -> Result<(usize, usize, usize)> {
        if c != self.in_channels() {
            return Err(Error::mismatch("assemble", "channel", self.in_channels(), c));
        }
        match *self {
            Self::Conv { c_out, spec, transposed, .. } | Self::Gated { c_out, spec, transposed, .. } => {
                let (oh, ow) = conv_out_hw(spec, transposed, h, w)?;
                Ok((c_out, oh, ow))
            }
            Self::Transformer { max_len, .. } if h.max(w) > max_len => Err(Error::invalid(
                "assemble",
                format!("feature grid {h}x{w} exceeds attention table capacity {max_len}"),
            )),
            _ => Ok((c, h, w)),
        }
    }

    fn build(&self, rng: &mut SeededRng) -> Result<Layer> {
        Ok(match *self {
            Self::Conv { c_in, c_out, spec, transposed, norm, act } => Layer::Conv {
                conv: if transposed {
                    ConvLayer::transposed(c_in, c_out, spec, true, rng)
                } else {
                    ConvLayer::new(c_in, c_out, spec, true, rng)
                },
                norm: norm.then(|| BatchNorm::new(c_out)),
                act,
            },
            Self::Gated { c_in, c_out, spec, transposed, act } => Layer::Gated {
                conv: GatedConv::init(c_in, c_out, spec, transposed, rng),
                norm: BatchNorm::new(c_out),
                act,
            },
            Self::Position { c, side } => Layer::Position(init::normal(&[1, c, side, side], 0.02, rng)),
            Self::Transformer { c, max_len, global } => {
                Layer::Transformer(Box::new(TransformerBlock::init(c, max_len, global, rng)))
            }
            Self::DilatedResidual { c, dilation } => Layer::DilatedResidual {
                first: ConvLayer::new(c, c, ConvSpec::new(3, 3).dilation(dilation).pad(dilation), true, rng),
                norm1: BatchNorm::new(c),
                second: ConvLayer::new(c, c, ConvSpec::same(3), true, rng),
                norm2: BatchNorm::new(c),
            },
            Self::Lka { c, k, d } => Layer::Lka(Box::new(LkaBlock::init(c, k, d, rng)?)),
            Self::Ffc { c, ratio, act } => Layer::Ffc(Box::new(FfcBlock::init(c, ratio, act, rng)?)),
        })
    }
}

/// A row of the layer table: one or more layers reported as a single shape.
#[derive(Clone, Debug, PartialEq)]
pub struct Stage {
    pub label: String,
    pub layers: Vec<LayerKind>,
    /// Index of the injected feature map added to this stage's input.
    pub inject: Option<usize>,
    /// Index under which this stage's output is emitted.
    pub emit: Option<usize>,
}

impl Stage {
    fn new(label: impl Into<String>, layers: Vec<LayerKind>) -> Self {
        Self {
            label: label.into(),
            layers,
            inject: None,
            emit: None,
        }
    }
}

/// Output shape of one stage.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct TraceRow {
    pub label: String,
    pub channels: usize,
    pub h: usize,
    pub w: usize,
}

impl fmt::Display for TraceRow {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} {}@{}x{}", self.label, self.channels, self.h, self.w)
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Schedule {
    pub spec: ModelSpec,
    pub stages: Vec<Stage>,
}

/// Halves (forward) or doubles (transposed) an even spatial size.
fn stride2() -> ConvSpec {
    ConvSpec::new(4, 4).stride(2).pad(1)
}

/// Expands a spec into its stage list and checks it is internally consistent.
pub fn assemble(spec: &ModelSpec) -> Result<Schedule> {
    if !(spec.width_fraction > 0.0 && spec.width_fraction <= 1.0) {
        return Err(Error::invalid("assemble", format!("width fraction {} not in (0, 1]", spec.width_fraction)));
    }
    if spec.size == 0 || spec.size % 8 != 0 {
        return Err(Error::invalid("assemble", format!("size {} is not a positive multiple of 8", spec.size)));
    }
    if spec.inject && spec.role != Role::Ftr {
        return Err(Error::invalid("assemble", "only the texture restorer takes injected features"));
    }
    let c = |n| spec.ch(n);
    let stem = ConvSpec::same(7);
    let up = stride2();
    let relu = Activation::Relu;
    let swish = Activation::Swish;
    let conv = |c_in, c_out, spec, transposed, norm, act| LayerKind::Conv { c_in, c_out, spec, transposed, norm, act };
    let mut stages = Vec::new();
    match spec.role {
        Role::Tsr => {
            stages.push(Stage::new("Conv2d+ReLU", vec![conv(spec.in_channels, c(64), stem, false, false, relu)]));
            for (a, b) in [(64, 128), (128, 256), (256, 256)] {
                stages.push(Stage::new("Conv2d+ReLU", vec![conv(c(a), c(b), stride2(), false, false, relu)]));
            }
            let side = spec.size / 8;
            let mut layers = vec![LayerKind::Position { c: c(256), side }];
            for i in 0..spec.blocks {
                let global = spec.global_every > 0 && (i + 1) % spec.global_every == 0;
                layers.push(LayerKind::Transformer { c: c(256), max_len: side, global });
            }
            stages.push(Stage::new(format!("TransformerBlock×{}", spec.blocks), layers));
            for (a, b) in [(256, 256), (256, 128), (128, 64)] {
                stages.push(Stage::new("TConv2d+ReLU", vec![conv(c(a), c(b), up, true, false, relu)]));
            }
            stages.push(Stage::new("Conv2d+Sigmoid", vec![conv(c(64), 2, stem, false, false, Activation::Sigmoid)]));
        }
        Role::Sfe => {
            let gated = |c_in, c_out, spec, transposed| LayerKind::Gated { c_in, c_out, spec, transposed, act: relu };
            stages.push(Stage::new("GC+BN+ReLU", vec![gated(spec.in_channels, c(64), stem, false)]));
            for (a, b) in [(64, 128), (128, 256), (256, 512)] {
                stages.push(Stage::new("GC+BN+ReLU", vec![gated(c(a), c(b), stride2(), false)]));
            }
            let layers = (0..spec.blocks).map(|_| LayerKind::DilatedResidual { c: c(512), dilation: 2 }).collect();
            let mut middle = Stage::new(format!("DilatedResnetBlock×{}", spec.blocks), layers);
            middle.emit = Some(0);
            stages.push(middle);
            for (i, (a, b)) in [(512, 256), (256, 128), (128, 64)].into_iter().enumerate() {
                let mut s = Stage::new("TGC+BN+ReLU", vec![gated(c(a), c(b), up, true)]);
                s.emit = Some(i + 1);
                stages.push(s);
            }
        }
        Role::Ftr => {
            let lka = |ch| LayerKind::Lka { c: ch, k: spec.k, d: spec.d };
            stages.push(Stage::new(
                "Conv2d+LKA+FFN",
                vec![conv(spec.in_channels, c(64), stem, false, true, swish), lka(c(64))],
            ));
            // Encoder stage k+1 takes S_{3−k} at its input, matching widths.
            for (i, (a, b)) in [(64, 128), (128, 256), (256, 512)].into_iter().enumerate() {
                let mut s = Stage::new("Conv2d+LKA+FFN", vec![conv(c(a), c(b), stride2(), false, true, swish), lka(c(b))]);
                s.inject = spec.inject.then_some(INJECTIONS - 1 - i);
                stages.push(s);
            }
            split_channels(c(512), spec.ffc_ratio)?;
            let layers = (0..spec.blocks)
                .map(|_| LayerKind::Ffc { c: c(512), ratio: spec.ffc_ratio, act: swish })
                .collect();
            let mut middle = Stage::new(format!("FFCBlock×{}", spec.blocks), layers);
            middle.inject = spec.inject.then_some(0);
            stages.push(middle);
            for (a, b) in [(512, 256), (256, 128), (128, 64)] {
                stages.push(Stage::new("TConv2d+LKA+FFN", vec![conv(c(a), c(b), up, true, true, swish), lka(c(b))]));
            }
            stages.push(Stage::new("Conv2d+Tanh", vec![conv(c(64), 3, stem, false, false, Activation::Tanh)]));
        }
    }
    let schedule = Schedule { spec: spec.clone(), stages };
    schedule.trace(spec.size, spec.size)?;
    Ok(schedule)
}

impl Schedule {
    /// Output shape of every stage for an `in_channels×h×w` input, without
    /// allocating weights.
    pub fn trace(&self, h: usize, w: usize) -> Result<Vec<TraceRow>> {
        check_input_size(h, w)?;
        let (mut c, mut h, mut w) = (self.spec.in_channels, h, w);
        let mut rows = Vec::with_capacity(self.stages.len());
        for stage in &self.stages {
            for layer in &stage.layers {
                (c, h, w) = layer.out_shape(c, h, w)?;
            }
            rows.push(TraceRow {
                label: stage.label.clone(),
                channels: c,
                h,
                w,
            });
        }
        Ok(rows)
    }

    /// Shapes `(c, h, w)` at every injection slot, indexed by slot.
    pub fn injection_shapes(&self, h: usize, w: usize) -> Result<Vec<(usize, usize, usize)>> {
        let rows = self.trace(h, w)?;
        let mut out = vec![None; INJECTIONS];
        for (i, stage) in self.stages.iter().enumerate() {
            let slot = stage.emit.or(stage.inject);
            if let Some(k) = slot {
                let (c, sh, sw) = if stage.inject.is_some() {
                    let prev = &rows[i - 1];
                    (prev.channels, prev.h, prev.w)
                } else {
                    (rows[i].channels, rows[i].h, rows[i].w)
                };
                out[k] = Some((c, sh, sw));
            }
        }
        out.into_iter()
            .map(|s| s.ok_or_else(|| Error::invalid("assemble", "schedule has no injection slots")))
            .collect()
    }

    pub fn count(&self, pred: impl Fn(&LayerKind) -> bool) -> usize {
        self.stages.iter().flat_map(|s| &s.layers).filter(|l| pred(l)).count()
    }

    pub fn build(&self, seed: u64) -> Result<Network> {
        let mut rng = init::rng(seed);
        let stages = self
            .stages
            .iter()
            .map(|s| s.layers.iter().map(|l| l.build(&mut rng)).collect::<Result<Vec<_>>>())
            .collect::<Result<Vec<_>>>()?;
        Ok(Network {
            schedule: self.clone(),
            stages,
        })
    }
}

fn check_input_size(h: usize, w: usize) -> Result<()> {
    if h == 0 || w == 0 || h % 8 != 0 || w % 8 != 0 {
        return Err(Error::UnsupportedSize { op: "assemble", h, w });
    }
    Ok(())
}

#[derive(Clone, Debug, PartialEq)]
pub enum Layer {
    Conv {
        conv: ConvLayer,
        norm: Option<BatchNorm>,
        act: Activation,
    },
    Gated {
        conv: GatedConv,
        norm: BatchNorm,
        act: Activation,
    },
    Position(Tensor),
    Transformer(Box<TransformerBlock>),
    DilatedResidual {
        first: ConvLayer,
        norm1: BatchNorm,
        second: ConvLayer,
        norm2: BatchNorm,
    },
    Lka(Box<LkaBlock>),
    Ffc(Box<FfcBlock>),
}

impl Layer {
    pub fn forward(&self, x: &Tensor) -> Result<Tensor> {
        match self {
            Self::Conv { conv, norm, act } => {
                let mut y = conv.forward(x)?;
                if let Some(n) = norm {
                    y = n.forward(&y)?;
                }
                Ok(activate(&y, *act))
            }
            Self::Gated { conv, norm, act } => Ok(activate(&norm.forward(&conv.forward(x)?)?, *act)),
            Self::Position(table) => {
                let [n, _, h, w] = x.dims4();
                let t = resize(table, h, w, ResizeMode::Nearest)?;
                let mut out = x.to4();
                for ni in 0..n {
                    let start = out.offset4(ni, 0, 0, 0);
                    let chunk = &mut out.data_mut()[start..start + t.len()];
                    for (o, v) in chunk.iter_mut().zip(t.data()) {
                        *o += v;
                    }
                }
                Ok(out)
            }
            Self::Transformer(b) => b.forward(x),
            Self::DilatedResidual { first, norm1, second, norm2 } => {
                let y = activate(&norm1.forward(&first.forward(x)?)?, Activation::Relu);
                let y = norm2.forward(&second.forward(&y)?)?;
                x.to4().add(&y)
            }
            Self::Lka(b) => b.forward(x),
            Self::Ffc(b) => b.forward(x),
        }
    }
}

/// Feature maps added into the texture restorer and their residual weights.
#[derive(Clone, Copy, Debug)]
pub struct Injection<'a> {
    pub maps: &'a [Tensor],
    pub state: &'a ZeroRaState,
}

#[derive(Clone, Debug)]
pub struct Output {
    pub output: Tensor,
    /// Stage outputs flagged for emission, by slot (SFE only).
    pub emitted: Vec<Tensor>,
    pub trace: Vec<TraceRow>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct Network {
    pub schedule: Schedule,
    pub stages: Vec<Vec<Layer>>,
}

impl Network {
    pub fn spec(&self) -> &ModelSpec {
        &self.schedule.spec
    }

    /// Runs the network. Injected maps are required exactly when the
    /// [`ModelSpec`] was built with injection on.
    pub fn run(&self, x: &Tensor, injection: Option<Injection<'_>>) -> Result<Output> {
        let [_, c, h, w] = x.dims4();
        if c != self.spec().in_channels {
            return Err(Error::mismatch("network", "input channel", self.spec().in_channels, c));
        }
        check_input_size(h, w)?;
        match (&injection, self.spec().inject) {
            (None, true) => return Err(Error::invalid("network", "injected features are required")),
            (Some(_), false) => return Err(Error::invalid("network", "this network takes no injected features")),
            (Some(inj), true) if inj.maps.len() != INJECTIONS => {
                return Err(Error::mismatch("network", "injected map count", INJECTIONS, inj.maps.len()))
            }
            _ => {}
        }
        let mut x = x.to4();
        let mut emitted: Vec<Option<Tensor>> = vec![None; INJECTIONS];
        let mut trace = Vec::with_capacity(self.stages.len());
        for (stage, layers) in self.schedule.stages.iter().zip(&self.stages) {
            if let (Some(k), Some(inj)) = (stage.inject, &injection) {
                x = residual_add(&x, &inj.maps[k].to4(), inj.state.alpha[k])?;
            }
            for layer in layers {
                x = layer.forward(&x)?;
            }
            let [_, c, h, w] = x.dims4();
            trace.push(TraceRow {
                label: stage.label.clone(),
                channels: c,
                h,
                w,
            });
            if let Some(k) = stage.emit {
                emitted[k] = Some(x.clone());
            }
        }
        Ok(Output {
            output: x,
            emitted: emitted.into_iter().flatten().collect(),
            trace,
        })
    }

    pub fn forward(&self, x: &Tensor) -> Result<Tensor> {
        Ok(self.run(x, None)?.output)
    }

    /// Randomises every batch-norm's frozen statistics so tests do not depend
    /// on the near-identity defaults.
    pub fn randomize_norms(&mut self, seed: u64) {
        let mut rng = init::rng(seed);
        for layer in self.stages.iter_mut().flatten() {
            match layer {
                Layer::Conv { norm: Some(n), .. } | Layer::Gated { norm: n, .. } => {
                    *n = BatchNorm::randomized(n.gamma.len(), &mut rng)
                }
                Layer::DilatedResidual { norm1, norm2, .. } => {
                    *norm1 = BatchNorm::randomized(norm1.gamma.len(), &mut rng);
                    *norm2 = BatchNorm::randomized(norm2.gamma.len(), &mut rng);
                }
                Layer::Ffc(b) => {
                    b.norm1 = BatchNorm::randomized(b.norm1.gamma.len(), &mut rng);
                    b.norm2 = BatchNorm::randomized(b.norm2.gamma.len(), &mut rng);
                }
                Layer::Transformer(b) => {
                    for v in b.row.rpe.iter_mut().chain(b.col.rpe.iter_mut()) {
                        *v = rng.random_range(-0.5..0.5);
                    }
                }
                _ => {}
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn spec_text_round_trip() {
        let s = ModelSpec::new(Role::Ftr).width(0.125).size(64).inject(true);
        assert_eq!(ModelSpec::parse(&s.to_text()).unwrap(), s);
        assert!(ModelSpec::parse("role=tsr\nbogus=1").is_err());
        assert!(ModelSpec::parse("K=3").is_err());
    }

    #[test]
    fn block_counts() {
        let tsr = assemble(&ModelSpec::new(Role::Tsr)).unwrap();
        assert_eq!(tsr.count(|l| matches!(l, LayerKind::Transformer { .. })), 8);
        assert_eq!(tsr.count(|l| matches!(l, LayerKind::Transformer { global: true, .. })), 2);
        let sfe = assemble(&ModelSpec::new(Role::Sfe)).unwrap();
        assert_eq!(sfe.count(|l| matches!(l, LayerKind::DilatedResidual { .. })), 3);
        let ftr = assemble(&ModelSpec::new(Role::Ftr)).unwrap();
        assert_eq!(ftr.count(|l| matches!(l, LayerKind::Ffc { .. })), 9);
    }

    #[test]
    fn inconsistent_specs_rejected() {
        assert!(assemble(&ModelSpec::new(Role::Tsr).size(60)).is_err());
        assert!(assemble(&ModelSpec::new(Role::Sfe).inject(true)).is_err());
        assert!(assemble(&ModelSpec::new(Role::Ftr).width(0.01)).is_err());
        assert!(assemble(&ModelSpec::new(Role::Tsr).width(0.0)).is_err());
    }

    #[test]
    fn trace_rejects_unaligned_input() {
        let s = assemble(&ModelSpec::new(Role::Sfe).width(0.125).size(64)).unwrap();
        assert!(s.trace(60, 64).is_err());
        assert!(s.trace(64, 72).is_ok());
    }
}
