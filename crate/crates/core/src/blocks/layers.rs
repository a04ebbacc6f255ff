//! Parameterised convolutions and normalisation layers.

use crate::error::{ensure_dim, Error, Result};
use crate::init::{self, SeededRng};
use crate::tensor::{conv2d, transposed_conv2d, ConvSpec, Tensor};

/// A convolution or transposed convolution with its own weights.
///
/// The weight layout is `(C_out, C_in/groups, kh, kw)` for a forward conv and
/// `(C_in, C_out/groups, kh, kw)` for a transposed one, which is the forward
/// weight of the adjoint.
#[derive(Clone, Debug, PartialEq)]
pub struct ConvLayer {
    pub weight: Tensor,
    pub bias: Option<Tensor>,
    pub spec: ConvSpec,
    pub transposed: bool,
}

impl ConvLayer {
    pub fn new(c_in: usize, c_out: usize, spec: ConvSpec, bias: bool, rng: &mut SeededRng) -> Self {
        let g = spec.groups;
        let weight = init::conv_weight([c_out, c_in / g, spec.kernel_h, spec.kernel_w], rng);
        Self {
            weight,
            bias: bias.then(|| Tensor::zeros(&[c_out])),
            spec,
            transposed: false,
        }
    }

    pub fn transposed(c_in: usize, c_out: usize, spec: ConvSpec, bias: bool, rng: &mut SeededRng) -> Self {
        let g = spec.groups;
        let fan_in = (c_in / g) * spec.kernel_h * spec.kernel_w / (spec.stride * spec.stride).max(1);
        let std = (2.0 / fan_in.max(1) as f64).sqrt();
        Self {
            weight: init::normal(&[c_in, c_out / g, spec.kernel_h, spec.kernel_w], std, rng),
            bias: bias.then(|| Tensor::zeros(&[c_out])),
            spec,
            transposed: true,
        }
    }

    /// A `1×1` convolution whose weight is the identity.
    pub fn identity_1x1(c: usize) -> Self {
        Self {
            weight: Tensor::from_fn4([c, c, 1, 1], |o, i, _, _| if o == i { 1.0 } else { 0.0 }),
            bias: None,
            spec: ConvSpec::new(1, 1),
            transposed: false,
        }
    }

    pub fn in_channels(&self) -> usize {
        let [a, b, _, _] = self.weight.dims4();
        if self.transposed { a } else { b * self.spec.groups }
    }

    pub fn out_channels(&self) -> usize {
        let [a, b, _, _] = self.weight.dims4();
        if self.transposed { b * self.spec.groups } else { a }
    }

    pub fn forward(&self, x: &Tensor) -> Result<Tensor> {
        if self.transposed {
            transposed_conv2d(x, &self.weight, self.bias.as_ref(), self.spec)
        } else {
            conv2d(x, &self.weight, self.bias.as_ref(), self.spec)
        }
    }

    pub fn zero(&mut self) {
        self.weight.data_mut().fill(0.0);
        if let Some(b) = &mut self.bias {
            b.data_mut().fill(0.0);
        }
    }
}

/// Batch normalisation with frozen statistics, i.e. a per-channel affine map.
#[derive(Clone, Debug, PartialEq)]
pub struct BatchNorm {
    pub gamma: Vec<f64>,
    pub beta: Vec<f64>,
    pub mean: Vec<f64>,
    pub var: Vec<f64>,
    pub eps: f64,
}

impl BatchNorm {
    pub fn new(c: usize) -> Self {
        Self {
            gamma: vec![1.0; c],
            beta: vec![0.0; c],
            mean: vec![0.0; c],
            var: vec![1.0; c],
            eps: 1e-5,
        }
    }

    /// Random but well-conditioned statistics, for tests that must not rely
    /// on the identity-like default.
    pub fn randomized(c: usize, rng: &mut SeededRng) -> Self {
        use rand::Rng;
        Self {
            gamma: (0..c).map(|_| rng.random_range(0.5..1.5)).collect(),
            beta: (0..c).map(|_| rng.random_range(-0.5..0.5)).collect(),
            mean: (0..c).map(|_| rng.random_range(-0.5..0.5)).collect(),
            var: (0..c).map(|_| rng.random_range(0.5..2.0)).collect(),
            eps: 1e-5,
        }
    }

    pub fn forward(&self, x: &Tensor) -> Result<Tensor> {
        let [n, c, _, _] = x.dims4();
        ensure_dim("batch_norm", "channel", self.gamma.len(), c)?;
        let mut out = x.clone();
        for ci in 0..c {
            let scale = self.gamma[ci] / (self.var[ci] + self.eps).sqrt();
            let shift = self.beta[ci] - self.mean[ci] * scale;
            for ni in 0..n {
                for v in out.plane_mut(ni, ci) {
                    *v = *v * scale + shift;
                }
            }
        }
        Ok(out)
    }
}

/// Layer normalisation over channels at every spatial position, with learned
/// per-channel scale and shift.
#[derive(Clone, Debug, PartialEq)]
pub struct LayerNorm {
    pub gamma: Vec<f64>,
    pub beta: Vec<f64>,
    pub eps: f64,
}

impl LayerNorm {
    pub fn new(c: usize) -> Self {
        Self {
            gamma: vec![1.0; c],
            beta: vec![0.0; c],
            eps: 1e-5,
        }
    }

    pub fn forward(&self, x: &Tensor) -> Result<Tensor> {
        let [n, c, h, w] = x.dims4();
        ensure_dim("layer_norm", "channel", self.gamma.len(), c)?;
        let plane = h * w;
        let mut out = x.to4();
        let src = x.data();
        let dst = out.data_mut();
        for ni in 0..n {
            let base = ni * c * plane;
            for p in 0..plane {
                let mut mean = 0.0;
                for ci in 0..c {
                    mean += src[base + ci * plane + p];
                }
                mean /= c as f64;
                let mut var = 0.0;
                for ci in 0..c {
                    let d = src[base + ci * plane + p] - mean;
                    var += d * d;
                }
                var /= c as f64;
                let inv = 1.0 / (var + self.eps).sqrt();
                for ci in 0..c {
                    let i = base + ci * plane + p;
                    dst[i] = (src[i] - mean) * inv * self.gamma[ci] + self.beta[ci];
                }
            }
        }
        Ok(out)
    }
}

/// Output spatial size of a layer, checked the same way the forward checks it.
pub fn conv_out_hw(spec: ConvSpec, transposed: bool, h: usize, w: usize) -> Result<(usize, usize)> {
    if transposed {
        spec.transposed_output_size(h, w)
    } else {
        spec.output_size(h, w)
    }
}

pub(crate) fn ensure_channels(op: &'static str, expected: usize, x: &Tensor) -> Result<()> {
    let c = x.dims4()[1];
    if c != expected {
        return Err(Error::mismatch(op, "channel", expected, c));
    }
    Ok(())
}
