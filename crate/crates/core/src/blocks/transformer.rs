//! Pre-norm transformer block: row attention, column attention, optional full
//! attention, then a position-wise feed-forward network, each sub-layer
//! wrapped as `x + proj(sub(norm(x)))`.

use super::attention::{axial_attention, standard_attention, AxialParams, Axis, StdAttentionParams};
use super::layers::{ensure_channels, ConvLayer, LayerNorm};
use crate::error::Result;
use crate::init::SeededRng;
use crate::tensor::{activate, Activation, ConvSpec, Tensor};

#[derive(Clone, Debug, PartialEq)]
pub struct TransformerBlock {
    pub channels: usize,
    pub norm_row: LayerNorm,
    pub row: AxialParams,
    pub proj_row: ConvLayer,
    pub norm_col: LayerNorm,
    pub col: AxialParams,
    pub proj_col: ConvLayer,
    pub global: Option<(LayerNorm, StdAttentionParams, ConvLayer)>,
    pub norm_ffn: LayerNorm,
    pub ffn_in: ConvLayer,
    pub ffn_out: ConvLayer,
}

fn pointwise(c_in: usize, c_out: usize, rng: &mut SeededRng) -> ConvLayer {
    ConvLayer::new(c_in, c_out, ConvSpec::new(1, 1), true, rng)
}

impl TransformerBlock {
    /// `max_len` bounds both axis lengths; `global` adds a full-attention
    /// sub-layer after the two axial ones.
    pub fn init(c: usize, max_len: usize, global: bool, rng: &mut SeededRng) -> Self {
        let row = AxialParams::init(c, max_len, rng);
        let proj_row = pointwise(c, c, rng);
        let col = AxialParams::init(c, max_len, rng);
        let proj_col = pointwise(c, c, rng);
        let global = global.then(|| (LayerNorm::new(c), StdAttentionParams::init(c, rng), pointwise(c, c, rng)));
        Self {
            channels: c,
            norm_row: LayerNorm::new(c),
            row,
            proj_row,
            norm_col: LayerNorm::new(c),
            col,
            proj_col,
            global,
            norm_ffn: LayerNorm::new(c),
            ffn_in: pointwise(c, 4 * c, rng),
            ffn_out: pointwise(4 * c, c, rng),
        }
    }

    /// Zeroes every sub-layer output projection, leaving only the residuals.
    pub fn zero_outputs(&mut self) {
        self.proj_row.zero();
        self.proj_col.zero();
        if let Some((_, _, p)) = &mut self.global {
            p.zero();
        }
        self.ffn_out.zero();
    }

    pub fn forward(&self, x: &Tensor) -> Result<Tensor> {
        ensure_channels("transformer_block", self.channels, x)?;
        let mut x = x.to4();
        let a = axial_attention(&self.norm_row.forward(&x)?, &self.row, Axis::Row)?;
        x.add_assign(&self.proj_row.forward(&a)?)?;
        let a = axial_attention(&self.norm_col.forward(&x)?, &self.col, Axis::Col)?;
        x.add_assign(&self.proj_col.forward(&a)?)?;
        if let Some((norm, params, proj)) = &self.global {
            let a = standard_attention(&norm.forward(&x)?, params)?;
            x.add_assign(&proj.forward(&a)?)?;
        }
        let hidden = activate(&self.ffn_in.forward(&self.norm_ffn.forward(&x)?)?, Activation::Relu);
        x.add_assign(&self.ffn_out.forward(&hidden)?)?;
        Ok(x)
    }
}
