//! Training losses: masked L1, patch adversarial terms with mask resizing,
//! gradient penalty, feature matching, perceptual feature loss, the gradient
//! prior loss and their weighted total.
//!
//! Every expectation is a mean over all elements, batch included. Masks use
//! 1 for holes; a single-channel mask broadcasts over the channels of the
//! tensor it weights.

use crate::autodiff::{NodeId, Tape};
use crate::error::{ensure_dim, Error, Result};
use crate::priors::GradientPair;
use crate::tensor::{conv2d, pool2d, resize, ConvSpec, PoolMode, ResizeMode, Tensor};

/// Floor and ceiling applied to discriminator probabilities before logs.
pub const PROB_EPS: f64 = 1e-7;

pub const GRADIENT_PRIOR_BETA1: f64 = 0.1;
pub const GRADIENT_PRIOR_BETA2: f64 = 20.0;
pub const GAUSSIAN_SIZE: usize = 10;
pub const GAUSSIAN_SIGMA: f64 = 1.0;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct LossWeights {
    pub l1: f64,
    pub adv: f64,
    pub fm: f64,
    pub hrf: f64,
    pub gp: f64,
}

impl Default for LossWeights {
    fn default() -> Self {
        Self {
            l1: 10.0,
            adv: 10.0,
            fm: 100.0,
            hrf: 30.0,
            gp: 1e-3,
        }
    }
}

impl LossWeights {
    pub fn validate(&self) -> Result<()> {
        for (name, v) in [("l1", self.l1), ("adv", self.adv), ("fm", self.fm), ("hrf", self.hrf), ("gp", self.gp)] {
            if !(v >= 0.0 && v.is_finite()) {
                return Err(Error::invalid("loss_weights", format!("{name} = {v} must be finite and non-negative")));
            }
        }
        Ok(())
    }
}

/// Expands a `H×W`, `1×H×W`-like or `N×1×H×W` mask to `like`'s 4-d shape.
fn broadcast_mask(mask: &Tensor, like: &Tensor, op: &'static str) -> Result<Tensor> {
    let [n, c, h, w] = like.dims4();
    let [mn, mc, mh, mw] = mask.dims4();
    ensure_dim(op, "mask height", h, mh)?;
    ensure_dim(op, "mask width", w, mw)?;
    if mn != n && mn != 1 {
        return Err(Error::mismatch(op, "mask batch", n, mn));
    }
    if mc != c && mc != 1 {
        return Err(Error::mismatch(op, "mask channel", c, mc));
    }
    Ok(Tensor::from_fn4([n, c, h, w], |ni, ci, y, x| {
        mask.get4(ni.min(mn - 1), ci.min(mc - 1), y, x)
    }))
}

/// `mean((1 − M) ⊙ |gt − pred|)`: only known pixels contribute.
pub fn masked_l1(pred: &Tensor, gt: &Tensor, mask: &Tensor) -> Result<f64> {
    pred.ensure_same_shape(gt, "masked_l1")?;
    let m = broadcast_mask(mask, pred, "masked_l1")?;
    let total: f64 = pred
        .data()
        .iter()
        .zip(gt.data())
        .zip(m.data())
        .map(|((p, g), m)| (1.0 - m) * (g - p).abs())
        .sum();
    Ok(total / pred.len() as f64)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum PatchResize {
    /// One pixel per patch, chosen by nearest-neighbour sampling.
    Nearest,
    /// A patch is masked when any of its pixels is.
    MaxPool,
}

impl PatchResize {
    pub fn parse(s: &str) -> Option<Self> {
        match s {
            "nearest" => Some(Self::Nearest),
            "maxpool" => Some(Self::MaxPool),
            _ => None,
        }
    }
}

/// Downsamples a mask by `factor` to the discriminator's patch grid. Rank-2
/// masks stay rank 2.
pub fn resize_mask_for_patches(mask: &Tensor, factor: usize, mode: PatchResize) -> Result<Tensor> {
    let [_, _, h, w] = mask.dims4();
    if factor == 0 || h % factor != 0 || w % factor != 0 {
        return Err(Error::invalid(
            "resize_mask_for_patches",
            format!("{h}x{w} is not divisible by factor {factor}"),
        ));
    }
    let out = match mode {
        PatchResize::Nearest => resize(mask, h / factor, w / factor, ResizeMode::Nearest)?,
        PatchResize::MaxPool => pool2d(mask, factor, PoolMode::Max)?,
    };
    if mask.rank() == 2 {
        return out.reshape(&[h / factor, w / factor]);
    }
    Ok(out)
}

/// Patch probabilities and intermediate features of one discriminator pass.
#[derive(Clone, Debug, PartialEq)]
pub struct DiscOutput {
    pub prob: Tensor,
    pub features: Vec<Tensor>,
}

impl DiscOutput {
    pub fn new(prob: Tensor) -> Self {
        Self {
            prob,
            features: Vec::new(),
        }
    }
}

fn clamped_probs(t: &Tensor, which: &str) -> Result<Vec<f64>> {
    t.data()
        .iter()
        .map(|&p| {
            if !(0.0..=1.0).contains(&p) {
                return Err(Error::invalid("adversarial_losses", format!("{which} probability {p} outside [0, 1]")));
            }
            Ok(p.clamp(PROB_EPS, 1.0 - PROB_EPS))
        })
        .collect()
}

/// Discriminator and generator losses; only masked patches count as fake.
///
/// `L_D = −mean log D(real) − mean[(1−M)·log D(fake)] − mean[M·log(1−D(fake))]`,
/// `L_G = −mean log D(fake)`.
pub fn adversarial_losses(real: &DiscOutput, fake: &DiscOutput, patch_mask: &Tensor) -> Result<(f64, f64)> {
    let op = "adversarial_losses";
    let m = broadcast_mask(patch_mask, &fake.prob, op)?;
    let dr = clamped_probs(&real.prob, "real")?;
    let df = clamped_probs(&fake.prob, "fake")?;
    let real_term = -dr.iter().map(|p| p.ln()).sum::<f64>() / dr.len() as f64;
    let n = df.len() as f64;
    let mut fake_as_real = 0.0;
    let mut fake_as_fake = 0.0;
    let mut gen = 0.0;
    for (p, m) in df.iter().zip(m.data()) {
        fake_as_real += (1.0 - m) * p.ln();
        fake_as_fake += m * (1.0 - p).ln();
        gen += p.ln();
    }
    let l_d = real_term - fake_as_real / n - fake_as_fake / n;
    Ok((l_d, -gen / n))
}

/// Mean over the batch of `‖∇_x D(x)‖²` for each sample, with `D` recorded on
/// a tape. A non-scalar output of `d` is averaged to a scalar first.
pub fn gradient_penalty(
    d: impl Fn(&mut Tape, NodeId) -> Result<NodeId>,
    real: &Tensor,
) -> Result<f64> {
    let n = real.dims4()[0];
    let mut total = 0.0;
    for i in 0..n {
        let sample = real.sample(i);
        let mut tape = Tape::new();
        let x = tape.leaf(sample.clone());
        let mut out = d(&mut tape, x)?;
        if !tape.value(out).is_scalar() {
            out = tape.mean(out);
        }
        let grads = tape.backward(out)?;
        let g = grads.wrt(x, &sample);
        total += g.data().iter().map(|v| v * v).sum::<f64>();
    }
    Ok(total / n as f64)
}

/// Mean absolute difference per layer, averaged over layers.
pub fn feature_match(real: &[Tensor], fake: &[Tensor]) -> Result<f64> {
    ensure_dim("feature_match", "layer count", real.len(), fake.len())?;
    if real.is_empty() {
        return Err(Error::invalid("feature_match", "no feature layers"));
    }
    let mut total = 0.0;
    for (r, f) in real.iter().zip(fake) {
        r.ensure_same_shape(f, "feature_match")?;
        total += r.data().iter().zip(f.data()).map(|(a, b)| (a - b).abs()).sum::<f64>() / r.len() as f64;
    }
    Ok(total / real.len() as f64)
}

/// A deterministic map from an image to a list of feature tensors.
pub trait FeatureExtractor {
    fn features(&self, x: &Tensor) -> Result<Vec<Tensor>>;
}

/// Returns the image itself as the only feature.
#[derive(Clone, Copy, Debug, Default)]
pub struct IdentityExtractor;

impl FeatureExtractor for IdentityExtractor {
    fn features(&self, x: &Tensor) -> Result<Vec<Tensor>> {
        Ok(vec![x.clone()])
    }
}

/// One fixed convolution per feature layer, applied to the image.
#[derive(Clone, Debug)]
pub struct ConvExtractor {
    pub layers: Vec<(Tensor, ConvSpec)>,
}

impl FeatureExtractor for ConvExtractor {
    fn features(&self, x: &Tensor) -> Result<Vec<Tensor>> {
        self.layers.iter().map(|(w, s)| conv2d(x, w, None, *s)).collect()
    }
}

impl<F: Fn(&Tensor) -> Result<Vec<Tensor>>> FeatureExtractor for F {
    fn features(&self, x: &Tensor) -> Result<Vec<Tensor>> {
        self(x)
    }
}

/// Mean squared feature difference, averaged over layers.
pub fn hrf_loss(extractor: &impl FeatureExtractor, gt: &Tensor, pred: &Tensor) -> Result<f64> {
    gt.ensure_same_shape(pred, "hrf_loss")?;
    let fg = extractor.features(gt)?;
    let fp = extractor.features(pred)?;
    ensure_dim("hrf_loss", "layer count", fg.len(), fp.len())?;
    if fg.is_empty() {
        return Err(Error::invalid("hrf_loss", "extractor returned no features"));
    }
    let mut total = 0.0;
    for (a, b) in fg.iter().zip(&fp) {
        a.ensure_same_shape(b, "hrf_loss")?;
        total += a.data().iter().zip(b.data()).map(|(x, y)| (x - y) * (x - y)).sum::<f64>() / a.len() as f64;
    }
    Ok(total / fg.len() as f64)
}

/// `size×size` Gaussian with samples at offsets `−(size−1)/2 ..= (size−1)/2`,
/// normalised to sum 1. Even sizes put the centre between pixels.
pub fn gaussian_kernel(size: usize, sigma: f64) -> Tensor {
    let c = (size as f64 - 1.0) / 2.0;
    let g: Vec<f64> = (0..size).map(|i| (-((i as f64 - c).powi(2)) / (2.0 * sigma * sigma)).exp()).collect();
    let mut k = Tensor::from_fn4([1, 1, size, size], |_, _, y, x| g[y] * g[x]);
    let s = k.sum();
    for v in k.data_mut() {
        *v /= s;
    }
    k
}

/// Blurs every plane with the kernel, keeping the spatial size. Zero padding;
/// for even kernels the extra padding goes before the first row and column.
pub fn blur_same(x: &Tensor, kernel: &Tensor) -> Result<Tensor> {
    let [n, c, h, w] = x.dims4();
    let [_, _, kh, kw] = kernel.dims4();
    if kh != kw {
        return Err(Error::invalid("blur_same", "kernel must be square"));
    }
    let k = kh;
    let planes = x.to4().reshape(&[n * c, 1, h, w])?;
    let y = conv2d(&planes, kernel, None, ConvSpec::new(k, k).pad(k / 2))?;
    let ow = y.dims4()[3];
    let mut out = Tensor::zeros(&[n, c, h, w]);
    for p in 0..n * c {
        let src = y.plane(p, 0);
        let dst = &mut out.data_mut()[p * h * w..(p + 1) * h * w];
        for r in 0..h {
            dst[r * w..(r + 1) * w].copy_from_slice(&src[r * ow..r * ow + w]);
        }
    }
    Ok(out)
}

/// `β1·mean|Δ| + β2·mean[(g∗C)⊙|Δ|]` with `Δ = pred − gt` over both gradient
/// components and `g` the normalised 10×10, σ=1 Gaussian.
pub fn gradient_prior_loss(pred: &GradientPair, gt: &GradientPair, canny: &Tensor) -> Result<f64> {
    let op = "gradient_prior_loss";
    pred.gx.ensure_same_shape(&gt.gx, op)?;
    pred.gy.ensure_same_shape(&gt.gy, op)?;
    pred.gx.ensure_same_shape(&pred.gy, op)?;
    if let Some(v) = canny.data().iter().find(|v| !(0.0..=1.0).contains(*v)) {
        return Err(Error::invalid(op, format!("edge map value {v} outside [0, 1]")));
    }
    let weight = blur_same(canny, &gaussian_kernel(GAUSSIAN_SIZE, GAUSSIAN_SIGMA))?;
    let weight = broadcast_mask(&weight, &pred.gx, op)?;
    let mut plain = 0.0;
    let mut weighted = 0.0;
    for (p, g) in [(&pred.gx, &gt.gx), (&pred.gy, &gt.gy)] {
        for ((a, b), w) in p.data().iter().zip(g.data()).zip(weight.data()) {
            let d = (a - b).abs();
            plain += d;
            weighted += w * d;
        }
    }
    let n = 2.0 * pred.gx.len() as f64;
    Ok(GRADIENT_PRIOR_BETA1 * plain / n + GRADIENT_PRIOR_BETA2 * weighted / n)
}

/// Scalar loss terms entering the weighted total.
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct LossParts {
    pub l1: f64,
    pub l_d: f64,
    pub l_g: f64,
    pub gp: f64,
    pub fm: f64,
    pub hrf: f64,
}

impl LossParts {
    pub fn named(&self) -> [(&'static str, f64); 6] {
        [
            ("l1", self.l1),
            ("l_d", self.l_d),
            ("l_g", self.l_g),
            ("gp", self.gp),
            ("fm", self.fm),
            ("hrf", self.hrf),
        ]
    }

    pub fn scaled(&self, t: f64) -> Self {
        Self {
            l1: self.l1 * t,
            l_d: self.l_d * t,
            l_g: self.l_g * t,
            gp: self.gp * t,
            fm: self.fm * t,
            hrf: self.hrf * t,
        }
    }
}

/// `λ_L1·L1 + λ_adv·(L_D + L_G + λ_GP·GP) + λ_fm·FM + λ_hrf·HRF`.
pub fn total_loss(p: &LossParts, w: &LossWeights) -> Result<f64> {
    w.validate()?;
    for (name, v) in p.named() {
        if !v.is_finite() {
            return Err(Error::NonFinite(format!("loss part {name}")));
        }
    }
    Ok(w.l1 * p.l1 + w.adv * (p.l_d + p.l_g + w.gp * p.gp) + w.fm * p.fm + w.hrf * p.hrf)
}
