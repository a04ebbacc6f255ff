//! Gated convolution: a feature convolution multiplied by a sigmoid gate
//! computed by a second convolution of the same shape.

use super::layers::ConvLayer;
use crate::error::{Error, Result};
use crate::init::SeededRng;
use crate::tensor::{activate, Activation, ConvSpec, Tensor};

#[derive(Clone, Debug, PartialEq)]
pub struct GatedConv {
    pub feature: ConvLayer,
    pub gate: ConvLayer,
}

impl GatedConv {
    pub fn new(feature: ConvLayer, gate: ConvLayer) -> Result<Self> {
        if feature.out_channels() != gate.out_channels() {
            return Err(Error::mismatch(
                "gated_conv",
                "gate output channels",
                feature.out_channels(),
                gate.out_channels(),
            ));
        }
        Ok(Self { feature, gate })
    }

    pub fn init(c_in: usize, c_out: usize, spec: ConvSpec, transposed: bool, rng: &mut SeededRng) -> Self {
        let make = |rng: &mut SeededRng| {
            if transposed {
                ConvLayer::transposed(c_in, c_out, spec, true, rng)
            } else {
                ConvLayer::new(c_in, c_out, spec, true, rng)
            }
        };
        let feature = make(rng);
        let gate = make(rng);
        Self { feature, gate }
    }

    pub fn out_channels(&self) -> usize {
        self.feature.out_channels()
    }

    /// `feature(x) ⊙ σ(gate(x))`.
    pub fn forward(&self, x: &Tensor) -> Result<Tensor> {
        let f = self.feature.forward(x)?;
        let g = activate(&self.gate.forward(x)?, Activation::Sigmoid);
        f.mul(&g)
    }
}
