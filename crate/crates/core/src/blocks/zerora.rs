//! Zero-initialised residual addition and the structure-feature injection
//! built on it.

use super::layers::{BatchNorm, ConvLayer};
use crate::autodiff::{NodeId, Tape};
use crate::error::Result;
use crate::tensor::{activate, Activation, Tensor};

/// Number of injected feature maps.
pub const INJECTIONS: usize = 4;

/// Residual weights `α_k`, all exactly 0 when fresh.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct ZeroRaState {
    pub alpha: [f64; INJECTIONS],
}

impl ZeroRaState {
    pub fn new() -> Self {
        Self::default()
    }
}

/// `x + α·f(x)`. `f` is always evaluated so shape errors surface, but at
/// `α = 0` the result is `x` bit for bit.
pub fn zerora_apply(x: &Tensor, f: impl FnOnce(&Tensor) -> Result<Tensor>, alpha: f64) -> Result<Tensor> {
    let fx = f(x)?;
    residual_add(x, &fx, alpha)
}

/// `x + α·s` with the same shape check and zero case as [`zerora_apply`].
pub fn residual_add(x: &Tensor, s: &Tensor, alpha: f64) -> Result<Tensor> {
    x.ensure_same_shape(s, "zerora")?;
    if alpha == 0.0 {
        return Ok(x.clone());
    }
    x.zip_map(s, "zerora", |a, b| a + alpha * b)
}

/// Records `x + α·f(x)` on a tape, with `α` a leaf so its gradient is available.
pub fn record_zerora(tape: &mut Tape, x: NodeId, fx: NodeId, alpha: NodeId) -> Result<NodeId> {
    let scaled = tape.scale_by(fx, alpha)?;
    tape.add(x, scaled)
}

/// `act(norm(conv(x + α·s)))`: the residual is added before the convolution.
pub fn sfe_inject(
    x: &Tensor,
    s: &Tensor,
    alpha: f64,
    conv: &ConvLayer,
    norm: &BatchNorm,
    act: Activation,
) -> Result<Tensor> {
    let sum = residual_add(x, s, alpha)?;
    Ok(activate(&norm.forward(&conv.forward(&sum)?)?, act))
}
