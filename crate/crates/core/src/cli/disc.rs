//! A fixed two-layer patch discriminator so `loss` can evaluate the
//! adversarial, penalty and feature-matching terms from image files alone.

use crate::autodiff::{NodeId, Tape};
use crate::error::Result;
use crate::init::{self, SeededRng};
use crate::losses::DiscOutput;
use crate::tensor::{activate, conv2d, Activation, ConvSpec, Tensor};

/// Image pixels per probability cell along each axis.
pub const PATCH: usize = 4;

fn down() -> ConvSpec {
    ConvSpec::new(4, 4).stride(2).pad(1)
}

pub struct StubDiscriminator {
    w1: Tensor,
    w2: Tensor,
}

impl StubDiscriminator {
    pub fn init(c_in: usize, rng: &mut SeededRng) -> Self {
        Self {
            w1: init::conv_weight([8, c_in, 4, 4], rng),
            w2: init::conv_weight([1, 8, 4, 4], rng),
        }
    }

    pub fn forward(&self, x: &Tensor) -> Result<DiscOutput> {
        let h = activate(&conv2d(x, &self.w1, None, down())?, Activation::Relu);
        let prob = activate(&conv2d(&h, &self.w2, None, down())?, Activation::Sigmoid);
        Ok(DiscOutput { prob, features: vec![h] })
    }

    /// Mean patch probability, recorded for differentiation.
    pub fn record_score(&self, t: &mut Tape, x: NodeId) -> Result<NodeId> {
        let w1 = t.constant(self.w1.clone());
        let w2 = t.constant(self.w2.clone());
        let h = t.conv2d(x, w1, None, down())?;
        let h = t.activation(h, Activation::Relu);
        let y = t.conv2d(h, w2, None, down())?;
        let p = t.activation(y, Activation::Sigmoid);
        Ok(t.mean(p))
    }
}
