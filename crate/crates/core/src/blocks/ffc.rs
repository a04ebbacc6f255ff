//! Fast Fourier convolution: a local branch of ordinary convolutions and a
//! global branch that applies a `1×1` convolution to the real FFT of its input.

use super::layers::{ensure_channels, BatchNorm, ConvLayer};
use crate::error::{Error, Result};
use crate::init::{self, SeededRng};
use crate::tensor::{activate, irfft2, rfft2, Activation, ConvSpec, Spectrum, Tensor};

/// Splits `c` channels into `(local, global)` with `global = ratio·c`.
pub fn split_channels(c: usize, ratio: f64) -> Result<(usize, usize)> {
    let g = c as f64 * ratio;
    if !(0.0..=1.0).contains(&ratio) || (g - g.round()).abs() > 1e-9 {
        return Err(Error::invalid(
            "ffc",
            format!("{c} channels cannot be split with global ratio {ratio}"),
        ));
    }
    let g = g.round() as usize;
    Ok((c - g, g))
}

/// `irfft2(W · [Re; Im](rfft2(x)))` where the `1×1` mixing `W` on real parts
/// stacked above imaginary parts is complex-linear, `[[A, −B], [B, A]]` for a
/// complex weight `A + iB`. That form commutes with the phase ramp of a spatial
/// shift, so the unit is shift-equivariant; a free real mixing of the stacked
/// channels is not.
#[derive(Clone, Debug, PartialEq)]
pub struct FourierUnit {
    /// `A`, shape `(c_out, c_in, 1, 1)`.
    pub real: Tensor,
    /// `B`, same shape as `real`.
    pub imag: Tensor,
}

impl FourierUnit {
    pub fn new(real: Tensor, imag: Tensor) -> Result<Self> {
        let [_, _, kh, kw] = real.dims4();
        if real.rank() != 4 || (kh, kw) != (1, 1) {
            return Err(Error::invalid("fourier_unit", "weights must have shape (c_out, c_in, 1, 1)"));
        }
        imag.ensure_same_shape(&real, "fourier_unit")?;
        Ok(Self { real, imag })
    }

    pub fn init(c_in: usize, c_out: usize, rng: &mut SeededRng) -> Self {
        let std = (1.0 / (2 * c_in).max(1) as f64).sqrt();
        Self {
            real: init::normal(&[c_out, c_in, 1, 1], std, rng),
            imag: init::normal(&[c_out, c_in, 1, 1], std, rng),
        }
    }

    pub fn identity(c: usize) -> Self {
        Self {
            real: Tensor::from_fn4([c, c, 1, 1], |o, i, _, _| if o == i { 1.0 } else { 0.0 }),
            imag: Tensor::zeros(&[c, c, 1, 1]),
        }
    }

    /// Multiplies channel `k` by the complex number `multipliers[k]`.
    pub fn diagonal(multipliers: &[(f64, f64)]) -> Self {
        let c = multipliers.len();
        let pick = |part: fn(&(f64, f64)) -> f64| {
            Tensor::from_fn4([c, c, 1, 1], |o, i, _, _| if o == i { part(&multipliers[o]) } else { 0.0 })
        };
        Self {
            real: pick(|m| m.0),
            imag: pick(|m| m.1),
        }
    }

    pub fn in_channels(&self) -> usize {
        self.real.dims4()[1]
    }

    pub fn out_channels(&self) -> usize {
        self.real.dims4()[0]
    }

    /// The `(2·c_out, 2·c_in, 1, 1)` real weight applied to `[Re; Im]`.
    pub fn stacked_weight(&self) -> Tensor {
        let (co, ci) = (self.out_channels(), self.in_channels());
        Tensor::from_fn4([2 * co, 2 * ci, 1, 1], |o, i, _, _| {
            let (a, b) = (self.real.get4(o % co, i % ci, 0, 0), self.imag.get4(o % co, i % ci, 0, 0));
            match (o < co, i < ci) {
                (true, true) | (false, false) => a,
                (true, false) => -b,
                (false, true) => b,
            }
        })
    }

    pub fn forward(&self, x: &Tensor) -> Result<Tensor> {
        ensure_channels("fourier_unit", self.in_channels(), x)?;
        let [_, _, h, w] = x.dims4();
        let spec = rfft2(x);
        let stacked = Tensor::concat_channels(&[&spec.re, &spec.im])?;
        let mixed = crate::tensor::conv2d(&stacked, &self.stacked_weight(), None, ConvSpec::new(1, 1))?;
        let co = self.out_channels();
        let out = Spectrum {
            re: mixed.channels(0, co)?,
            im: mixed.channels(co, co)?,
        };
        irfft2(&out, h, w)
    }
}

/// One FFC layer. Inputs and outputs are `[local; global]` along channels.
#[derive(Clone, Debug, PartialEq)]
pub struct FfcLayer {
    pub local_in: usize,
    pub global_in: usize,
    pub l2l: ConvLayer,
    pub g2l: ConvLayer,
    pub l2g: ConvLayer,
    pub g2g: FourierUnit,
}

impl FfcLayer {
    pub fn init(c_in: usize, c_out: usize, ratio: f64, rng: &mut SeededRng) -> Result<Self> {
        let (li, gi) = split_channels(c_in, ratio)?;
        let (lo, go) = split_channels(c_out, ratio)?;
        let k3 = ConvSpec::same(3);
        Ok(Self {
            local_in: li,
            global_in: gi,
            l2l: ConvLayer::new(li, lo, k3, false, rng),
            g2l: ConvLayer::new(gi, lo, k3, false, rng),
            l2g: ConvLayer::new(li, go, k3, false, rng),
            g2g: FourierUnit::init(gi, go, rng),
        })
    }

    pub fn out_channels(&self) -> usize {
        self.l2l.out_channels() + self.g2g.out_channels()
    }

    pub fn forward(&self, x: &Tensor) -> Result<Tensor> {
        ensure_channels("ffc_layer", self.local_in + self.global_in, x)?;
        let xl = x.channels(0, self.local_in)?;
        let xg = x.channels(self.local_in, self.global_in)?;
        let yl = self.l2l.forward(&xl)?.add(&self.g2l.forward(&xg)?)?;
        let yg = self.l2g.forward(&xl)?.add(&self.g2g.forward(&xg)?)?;
        Tensor::concat_channels(&[&yl, &yg])
    }
}

/// Residual pair of FFC layers, each followed by normalisation and activation.
#[derive(Clone, Debug, PartialEq)]
pub struct FfcBlock {
    pub first: FfcLayer,
    pub norm1: BatchNorm,
    pub second: FfcLayer,
    pub norm2: BatchNorm,
    pub act: Activation,
}

impl FfcBlock {
    pub fn init(c: usize, ratio: f64, act: Activation, rng: &mut SeededRng) -> Result<Self> {
        Ok(Self {
            first: FfcLayer::init(c, c, ratio, rng)?,
            norm1: BatchNorm::new(c),
            second: FfcLayer::init(c, c, ratio, rng)?,
            norm2: BatchNorm::new(c),
            act,
        })
    }

    pub fn forward(&self, x: &Tensor) -> Result<Tensor> {
        let y = activate(&self.norm1.forward(&self.first.forward(x)?)?, self.act);
        let y = activate(&self.norm2.forward(&self.second.forward(&y)?)?, self.act);
        x.to4().add(&y)
    }
}
