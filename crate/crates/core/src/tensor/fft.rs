//! 2-D real FFT over the last two axes.
//!
//! Normalization: the forward transform is unnormalized and the inverse is
//! scaled by `1/(H·W)`, so a constant image `c` has the single DC bin `c·H·W`.
//! Any `H, W ≥ 1` is supported.

use std::cell::RefCell;

use rustfft::num_complex::Complex64;
use rustfft::FftPlanner;

use super::Tensor;
use crate::error::{ensure_dim, Error, Result};

/// Half-plane spectrum of a real tensor: shape `(N, C, H, ⌊W/2⌋ + 1)`.
#[derive(Clone, Debug, PartialEq)]
pub struct Spectrum {
    pub re: Tensor,
    pub im: Tensor,
}

impl Spectrum {
    pub fn dims4(&self) -> [usize; 4] {
        self.re.dims4()
    }
}

thread_local! {
    static PLANNER: RefCell<FftPlanner<f64>> = RefCell::new(FftPlanner::new());
}

fn fft_in_place(buf: &mut [Complex64], inverse: bool) {
    let plan = PLANNER.with(|p| {
        let mut p = p.borrow_mut();
        if inverse {
            p.plan_fft_inverse(buf.len())
        } else {
            p.plan_fft_forward(buf.len())
        }
    });
    plan.process(buf);
}

pub fn rfft2(x: &Tensor) -> Spectrum {
    let [n, c, h, w] = x.dims4();
    let wh = w / 2 + 1;
    let mut re = Tensor::zeros(&[n, c, h, wh]);
    let mut im = Tensor::zeros(&[n, c, h, wh]);
    let mut row = vec![Complex64::default(); w];
    let mut col = vec![Complex64::default(); h];
    let mut half = vec![Complex64::default(); h * wh];
    for ni in 0..n {
        for ci in 0..c {
            let src = x.plane(ni, ci);
            for y in 0..h {
                for (dst, &v) in row.iter_mut().zip(&src[y * w..(y + 1) * w]) {
                    *dst = Complex64::new(v, 0.0);
                }
                fft_in_place(&mut row, false);
                half[y * wh..(y + 1) * wh].copy_from_slice(&row[..wh]);
            }
            for kx in 0..wh {
                for y in 0..h {
                    col[y] = half[y * wh + kx];
                }
                fft_in_place(&mut col, false);
                for y in 0..h {
                    half[y * wh + kx] = col[y];
                }
            }
            for (i, z) in half.iter().enumerate() {
                re.plane_mut(ni, ci)[i] = z.re;
                im.plane_mut(ni, ci)[i] = z.im;
            }
        }
    }
    Spectrum { re, im }
}

/// Inverse of [`rfft2`] for an `H×W` signal.
///
/// Only the Hermitian-consistent part of `s` contributes: along the height
/// axis a full complex inverse is taken, along the width axis the implied
/// mirror half is the conjugate and the imaginary parts of the DC and Nyquist
/// columns are dropped.
pub fn irfft2(s: &Spectrum, h: usize, w: usize) -> Result<Tensor> {
    let op = "irfft2";
    if h == 0 || w == 0 {
        return Err(Error::UnsupportedSize { op, h, w });
    }
    let [n, c, sh, swh] = s.re.dims4();
    s.re.ensure_same_shape(&s.im, op)?;
    ensure_dim(op, "height", h, sh)?;
    ensure_dim(op, "half width", w / 2 + 1, swh)?;
    let wh = swh;
    let scale = 1.0 / (h * w) as f64;
    let mut out = Tensor::zeros(&[n, c, h, w]);
    let mut col = vec![Complex64::default(); h];
    let mut row = vec![Complex64::default(); w];
    let mut half = vec![Complex64::default(); h * wh];
    for ni in 0..n {
        for ci in 0..c {
            let (pr, pi) = (s.re.plane(ni, ci), s.im.plane(ni, ci));
            for (i, z) in half.iter_mut().enumerate() {
                *z = Complex64::new(pr[i], pi[i]);
            }
            for kx in 0..wh {
                for y in 0..h {
                    col[y] = half[y * wh + kx];
                }
                fft_in_place(&mut col, true);
                for y in 0..h {
                    half[y * wh + kx] = col[y];
                }
            }
            let dst = out.plane_mut(ni, ci);
            for y in 0..h {
                let hr = &half[y * wh..(y + 1) * wh];
                row[0] = Complex64::new(hr[0].re, 0.0);
                for k in 1..w {
                    row[k] = if k < w - k {
                        hr[k]
                    } else if k == w - k {
                        Complex64::new(hr[k].re, 0.0)
                    } else {
                        hr[w - k].conj()
                    };
                }
                fft_in_place(&mut row, true);
                for (d, z) in dst[y * w..(y + 1) * w].iter_mut().zip(&row) {
                    *d = z.re * scale;
                }
            }
        }
    }
    Ok(out)
}
