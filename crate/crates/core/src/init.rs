//! Seeded random initialization.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::tensor::Tensor;

pub type SeededRng = ChaCha8Rng;

pub fn rng(seed: u64) -> SeededRng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn normal(shape: &[usize], std: f64, rng: &mut SeededRng) -> Tensor {
    let mut t = Tensor::zeros(shape);
    for v in t.data_mut() {
        let z: f64 = StandardNormal.sample(rng);
        *v = z * std;
    }
    t
}

pub fn uniform(shape: &[usize], lo: f64, hi: f64, rng: &mut SeededRng) -> Tensor {
    let mut t = Tensor::zeros(shape);
    for v in t.data_mut() {
        *v = rng.random_range(lo..hi);
    }
    t
}

/// He-style init for a conv weight `(C_out, C_in/g, kh, kw)`.
pub fn conv_weight(shape: [usize; 4], rng: &mut SeededRng) -> Tensor {
    let fan_in = (shape[1] * shape[2] * shape[3]) as f64;
    normal(&shape, (2.0 / fan_in).sqrt(), rng)
}
