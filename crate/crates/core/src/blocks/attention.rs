//! Single-head attention over feature maps: axial attention along rows or
//! columns with a relative position bias, and full attention over all
//! positions.
//!
//! Projections are `1×1` convolutions, so `q_j = W_q · x_j` with `W_q` stored
//! as a `(c, c, 1, 1)` weight.

use rand::Rng;

use super::layers::ConvLayer;
use crate::error::{Error, Result};
use crate::init::{self, SeededRng};
use crate::tensor::{ConvSpec, Tensor};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Axis {
    /// Attend among positions of the same row.
    Row,
    /// Attend among positions of the same column.
    Col,
}

fn projection(c: usize, std: f64, rng: &mut SeededRng) -> ConvLayer {
    ConvLayer {
        weight: init::normal(&[c, c, 1, 1], std, rng),
        bias: None,
        spec: ConvSpec::new(1, 1),
        transposed: false,
    }
}

/// Query, key and value projections plus a bias table indexed by the signed
/// offset `j − i ∈ [−(L−1), L−1]`.
#[derive(Clone, Debug, PartialEq)]
pub struct AxialParams {
    pub q: ConvLayer,
    pub k: ConvLayer,
    pub v: ConvLayer,
    pub rpe: Vec<f64>,
}

impl AxialParams {
    pub fn init(c: usize, max_len: usize, rng: &mut SeededRng) -> Self {
        let std = (1.0 / c as f64).sqrt();
        Self {
            q: projection(c, std, rng),
            k: projection(c, std, rng),
            v: projection(c, std, rng),
            rpe: (0..2 * max_len - 1).map(|_| rng.random_range(-0.1..0.1)).collect(),
        }
    }

    /// Longest axis the bias table can index.
    pub fn capacity(&self) -> usize {
        self.rpe.len().div_ceil(2)
    }

    /// Bias for query `i` attending to key `j`.
    pub fn bias(&self, i: usize, j: usize) -> f64 {
        self.rpe[(j + self.capacity() - 1) - i]
    }
}

fn softmax_in_place(row: &mut [f64]) {
    let m = row.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let mut s = 0.0;
    for v in row.iter_mut() {
        *v = (*v - m).exp();
        s += *v;
    }
    for v in row.iter_mut() {
        *v /= s;
    }
}

/// Unscaled logits `q_i·k_j + R_{j−i}`, softmax over `j`, weighted sum of
/// values, independently for every row (or column).
pub fn axial_attention(x: &Tensor, p: &AxialParams, axis: Axis) -> Result<Tensor> {
    match axis {
        Axis::Row => row_attention(x, p),
        Axis::Col => Ok(row_attention(&x.transpose_hw(), p)?.transpose_hw()),
    }
}

fn row_attention(x: &Tensor, p: &AxialParams) -> Result<Tensor> {
    let [n, c, h, w] = x.dims4();
    if w > p.capacity() {
        return Err(Error::invalid(
            "axial_attention",
            format!("axis length {w} exceeds position table capacity {}", p.capacity()),
        ));
    }
    let q = p.q.forward(x)?;
    let k = p.k.forward(x)?;
    let v = p.v.forward(x)?;
    let mut out = Tensor::zeros(&[n, c, h, w]);
    let plane = h * w;
    let mut logits = vec![0.0; w];
    for ni in 0..n {
        let base = ni * c * plane;
        for y in 0..h {
            for i in 0..w {
                for (j, l) in logits.iter_mut().enumerate() {
                    let mut dot = 0.0;
                    for ci in 0..c {
                        let o = base + ci * plane + y * w;
                        dot += q.data()[o + i] * k.data()[o + j];
                    }
                    *l = dot + p.bias(i, j);
                }
                softmax_in_place(&mut logits);
                for ci in 0..c {
                    let o = base + ci * plane + y * w;
                    let mut acc = 0.0;
                    for (j, a) in logits.iter().enumerate() {
                        acc += a * v.data()[o + j];
                    }
                    out.data_mut()[o + i] = acc;
                }
            }
        }
    }
    Ok(out)
}

#[derive(Clone, Debug, PartialEq)]
pub struct StdAttentionParams {
    pub q: ConvLayer,
    pub k: ConvLayer,
    pub v: ConvLayer,
}

impl StdAttentionParams {
    pub fn init(c: usize, rng: &mut SeededRng) -> Self {
        let std = (1.0 / c as f64).sqrt();
        Self {
            q: projection(c, std, rng),
            k: projection(c, std, rng),
            v: projection(c, std, rng),
        }
    }
}

/// Dot-product attention over all `H·W` positions of each sample, logits
/// scaled by `1/√c`.
pub fn standard_attention(x: &Tensor, p: &StdAttentionParams) -> Result<Tensor> {
    let [n, c, h, w] = x.dims4();
    let q = p.q.forward(x)?;
    let k = p.k.forward(x)?;
    let v = p.v.forward(x)?;
    let len = h * w;
    let scale = 1.0 / (c as f64).sqrt();
    let mut out = Tensor::zeros(&[n, c, h, w]);
    let mut logits = vec![0.0; len];
    for ni in 0..n {
        let base = ni * c * len;
        for i in 0..len {
            for (j, l) in logits.iter_mut().enumerate() {
                let mut dot = 0.0;
                for ci in 0..c {
                    dot += q.data()[base + ci * len + i] * k.data()[base + ci * len + j];
                }
                *l = dot * scale;
            }
            softmax_in_place(&mut logits);
            for ci in 0..c {
                let row = &v.data()[base + ci * len..base + (ci + 1) * len];
                let acc: f64 = logits.iter().zip(row).map(|(a, b)| a * b).sum();
                out.data_mut()[base + ci * len + i] = acc;
            }
        }
    }
    Ok(out)
}
