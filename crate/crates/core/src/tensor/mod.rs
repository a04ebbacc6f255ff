//! Dense rank-≤4 tensors and the numeric primitives built on them.
//!
//! Every tensor is stored row-major with the width axis fastest. Lower-rank
//! tensors are interpreted right-aligned against `(N, C, H, W)`, so a rank-2
//! tensor is a single `H×W` plane.

mod activation;
mod conv;
mod fft;
mod pool;
mod resize;

pub use activation::{activate, Activation};
pub use conv::{
    conv2d, conv2d_grad_weight, transposed_conv2d, transposed_conv2d_to, ConvSpec,
};
pub use fft::{irfft2, rfft2, Spectrum};
pub use pool::{pool2d, PoolMode};
pub use resize::{resize, ResizeMode};

pub(crate) use activation::sigmoid;
pub(crate) use resize::nearest_index as nearest_source;

use crate::error::{ensure_dim, Error, Result};

pub const MAX_RANK: usize = 4;

#[derive(Clone, Debug, PartialEq)]
pub struct Tensor {
    shape: Vec<usize>,
    data: Vec<f64>,
}

fn check_shape(shape: &[usize]) -> Result<usize> {
    if shape.is_empty() || shape.len() > MAX_RANK {
        return Err(Error::invalid(
            "tensor",
            format!("rank must be 1..={MAX_RANK}, got {}", shape.len()),
        ));
    }
    if let Some(axis) = shape.iter().position(|&e| e == 0) {
        return Err(Error::invalid(
            "tensor",
            format!("extent of axis {axis} must be positive"),
        ));
    }
    Ok(shape.iter().product())
}

impl Tensor {
    pub fn new(shape: &[usize], data: Vec<f64>) -> Result<Self> {
        let len = check_shape(shape)?;
        ensure_dim("tensor", "data length", len, data.len())?;
        Ok(Self {
            shape: shape.to_vec(),
            data,
        })
    }

    /// Panics on an invalid shape; intended for shapes known to be valid.
    pub fn zeros(shape: &[usize]) -> Self {
        Self::full(shape, 0.0)
    }

    pub fn ones(shape: &[usize]) -> Self {
        Self::full(shape, 1.0)
    }

    pub fn full(shape: &[usize], value: f64) -> Self {
        let len = check_shape(shape).expect("invalid tensor shape");
        Self {
            shape: shape.to_vec(),
            data: vec![value; len],
        }
    }

    /// Builds a rank-4 tensor by evaluating `f(n, c, y, x)` at every index.
    pub fn from_fn4(shape: [usize; 4], mut f: impl FnMut(usize, usize, usize, usize) -> f64) -> Self {
        let [n, c, h, w] = shape;
        let mut data = Vec::with_capacity(n * c * h * w);
        for ni in 0..n {
            for ci in 0..c {
                for y in 0..h {
                    for x in 0..w {
                        data.push(f(ni, ci, y, x));
                    }
                }
            }
        }
        Self::new(&shape, data).expect("invalid tensor shape")
    }

    pub fn scalar(value: f64) -> Self {
        Self {
            shape: vec![1],
            data: vec![value],
        }
    }

    pub fn shape(&self) -> &[usize] {
        &self.shape
    }

    pub fn rank(&self) -> usize {
        self.shape.len()
    }

    pub fn len(&self) -> usize {
        self.data.len()
    }

    pub fn is_empty(&self) -> bool {
        self.data.is_empty()
    }

    pub fn data(&self) -> &[f64] {
        &self.data
    }

    pub fn data_mut(&mut self) -> &mut [f64] {
        &mut self.data
    }

    pub fn into_data(self) -> Vec<f64> {
        self.data
    }

    /// Shape padded on the left with ones to `(N, C, H, W)`.
    pub fn dims4(&self) -> [usize; 4] {
        let mut out = [1; 4];
        let offset = MAX_RANK - self.shape.len();
        out[offset..].copy_from_slice(&self.shape);
        out
    }

    pub fn reshape(mut self, shape: &[usize]) -> Result<Self> {
        let len = check_shape(shape)?;
        ensure_dim("reshape", "element count", self.data.len(), len)?;
        self.shape = shape.to_vec();
        Ok(self)
    }

    /// Returns a rank-4 view of the same data.
    pub fn to4(&self) -> Self {
        Self {
            shape: self.dims4().to_vec(),
            data: self.data.clone(),
        }
    }

    pub fn is_scalar(&self) -> bool {
        self.data.len() == 1
    }

    pub fn item(&self) -> f64 {
        self.data[0]
    }

    #[inline]
    pub fn offset4(&self, n: usize, c: usize, y: usize, x: usize) -> usize {
        let [_, cs, hs, ws] = self.dims4();
        ((n * cs + c) * hs + y) * ws + x
    }

    #[inline]
    pub fn get4(&self, n: usize, c: usize, y: usize, x: usize) -> f64 {
        self.data[self.offset4(n, c, y, x)]
    }

    #[inline]
    pub fn set4(&mut self, n: usize, c: usize, y: usize, x: usize, value: f64) {
        let o = self.offset4(n, c, y, x);
        self.data[o] = value;
    }

    /// The `H×W` plane of sample `n`, channel `c`.
    pub fn plane(&self, n: usize, c: usize) -> &[f64] {
        let [_, _, h, w] = self.dims4();
        let start = self.offset4(n, c, 0, 0);
        &self.data[start..start + h * w]
    }

    pub fn plane_mut(&mut self, n: usize, c: usize) -> &mut [f64] {
        let [_, _, h, w] = self.dims4();
        let start = self.offset4(n, c, 0, 0);
        &mut self.data[start..start + h * w]
    }

    pub fn map(&self, f: impl Fn(f64) -> f64) -> Self {
        Self {
            shape: self.shape.clone(),
            data: self.data.iter().map(|&v| f(v)).collect(),
        }
    }

    pub fn zip_map(&self, other: &Self, op: &'static str, f: impl Fn(f64, f64) -> f64) -> Result<Self> {
        self.ensure_same_shape(other, op)?;
        Ok(Self {
            shape: self.shape.clone(),
            data: self
                .data
                .iter()
                .zip(&other.data)
                .map(|(&a, &b)| f(a, b))
                .collect(),
        })
    }

    pub fn ensure_same_shape(&self, other: &Self, op: &'static str) -> Result<()> {
        let a = self.dims4();
        let b = other.dims4();
        for (name, (&ea, &eb)) in ["batch", "channel", "height", "width"]
            .into_iter()
            .zip(a.iter().zip(&b))
        {
            ensure_dim(op, name, ea, eb)?;
        }
        Ok(())
    }

    pub fn add(&self, other: &Self) -> Result<Self> {
        self.zip_map(other, "add", |a, b| a + b)
    }

    pub fn sub(&self, other: &Self) -> Result<Self> {
        self.zip_map(other, "sub", |a, b| a - b)
    }

    pub fn mul(&self, other: &Self) -> Result<Self> {
        self.zip_map(other, "mul", |a, b| a * b)
    }

    pub fn scale(&self, s: f64) -> Self {
        self.map(|v| v * s)
    }

    pub fn add_assign(&mut self, other: &Self) -> Result<()> {
        self.ensure_same_shape(other, "add_assign")?;
        for (a, &b) in self.data.iter_mut().zip(&other.data) {
            *a += b;
        }
        Ok(())
    }

    /// Sequential left-to-right sum; the order is fixed so results are reproducible.
    pub fn sum(&self) -> f64 {
        self.data.iter().sum()
    }

    pub fn mean(&self) -> f64 {
        self.sum() / self.data.len() as f64
    }

    pub fn dot(&self, other: &Self) -> Result<f64> {
        self.ensure_same_shape(other, "dot")?;
        Ok(self.data.iter().zip(&other.data).map(|(a, b)| a * b).sum())
    }

    pub fn max_abs_diff(&self, other: &Self) -> Result<f64> {
        self.ensure_same_shape(other, "max_abs_diff")?;
        Ok(self
            .data
            .iter()
            .zip(&other.data)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max))
    }

    pub fn max_abs(&self) -> f64 {
        self.data.iter().map(|v| v.abs()).fold(0.0, f64::max)
    }

    pub fn all_finite(&self) -> bool {
        self.data.iter().all(|v| v.is_finite())
    }

    /// Extracts channels `[start, start + count)` of every sample.
    pub fn channels(&self, start: usize, count: usize) -> Result<Self> {
        let [n, c, h, w] = self.dims4();
        if count == 0 || start + count > c {
            return Err(Error::invalid(
                "channels",
                format!("range {start}..{} outside {c} channels", start + count),
            ));
        }
        let plane = h * w;
        let mut data = Vec::with_capacity(n * count * plane);
        for ni in 0..n {
            let base = (ni * c + start) * plane;
            data.extend_from_slice(&self.data[base..base + count * plane]);
        }
        Self::new(&[n, count, h, w], data)
    }

    /// Concatenates along the channel axis.
    pub fn concat_channels(parts: &[&Self]) -> Result<Self> {
        let first = parts
            .first()
            .ok_or_else(|| Error::invalid("concat_channels", "no inputs"))?;
        let [n, _, h, w] = first.dims4();
        let mut total_c = 0;
        for p in parts {
            let [pn, pc, ph, pw] = p.dims4();
            ensure_dim("concat_channels", "batch", n, pn)?;
            ensure_dim("concat_channels", "height", h, ph)?;
            ensure_dim("concat_channels", "width", w, pw)?;
            total_c += pc;
        }
        let plane = h * w;
        let mut data = Vec::with_capacity(n * total_c * plane);
        for ni in 0..n {
            for p in parts {
                let pc = p.dims4()[1];
                let base = ni * pc * plane;
                data.extend_from_slice(&p.data[base..base + pc * plane]);
            }
        }
        Self::new(&[n, total_c, h, w], data)
    }

    /// Sample `n` as a `1×C×H×W` tensor.
    pub fn sample(&self, n: usize) -> Self {
        let [_, c, h, w] = self.dims4();
        let len = c * h * w;
        Self {
            shape: vec![1, c, h, w],
            data: self.data[n * len..(n + 1) * len].to_vec(),
        }
    }

    /// Swaps the height and width axes.
    pub fn transpose_hw(&self) -> Self {
        let [n, c, h, w] = self.dims4();
        Self::from_fn4([n, c, w, h], |ni, ci, y, x| self.get4(ni, ci, x, y))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rejects_bad_shapes() {
        assert!(Tensor::new(&[2, 2], vec![0.0; 3]).is_err());
        assert!(Tensor::new(&[0, 2], vec![]).is_err());
        assert!(Tensor::new(&[1, 1, 1, 1, 1], vec![0.0]).is_err());
    }

    #[test]
    fn dims4_right_aligns() {
        let t = Tensor::zeros(&[3, 5]);
        assert_eq!(t.dims4(), [1, 1, 3, 5]);
        assert_eq!(t.offset4(0, 0, 2, 1), 11);
    }

    #[test]
    fn concat_then_split_channels() {
        let a = Tensor::from_fn4([2, 1, 2, 2], |n, _, y, x| (n * 10 + y * 2 + x) as f64);
        let b = Tensor::from_fn4([2, 2, 2, 2], |n, c, y, x| -((n * 100 + c * 10 + y * 2 + x) as f64));
        let cat = Tensor::concat_channels(&[&a, &b]).unwrap();
        assert_eq!(cat.shape(), &[2, 3, 2, 2]);
        assert_eq!(cat.channels(0, 1).unwrap(), a);
        assert_eq!(cat.channels(1, 2).unwrap(), b);
    }

    #[test]
    fn shape_mismatch_names_dimension() {
        let a = Tensor::zeros(&[1, 2, 3, 3]);
        let b = Tensor::zeros(&[1, 2, 3, 4]);
        match a.add(&b) {
            Err(Error::ShapeMismatch { dim, .. }) => assert_eq!(dim, "width"),
            other => panic!("unexpected {other:?}"),
        }
    }
}
