//! 3×3 Sobel derivatives per channel: cross-correlation with [`SOBEL_X`] and
//! [`SOBEL_Y`] under zero padding. `gx` grows to the right, `gy` grows downward.

use crate::error::Result;
use crate::tensor::Tensor;

pub const SOBEL_X: [f64; 9] = [-1.0, 0.0, 1.0, -2.0, 0.0, 2.0, -1.0, 0.0, 1.0];
pub const SOBEL_Y: [f64; 9] = [-1.0, -2.0, -1.0, 0.0, 0.0, 0.0, 1.0, 2.0, 1.0];

/// Horizontal and vertical gradient maps, each shaped like the input.
#[derive(Clone, Debug, PartialEq)]
pub struct GradientPair {
    pub gx: Tensor,
    pub gy: Tensor,
}

impl GradientPair {
    /// `gx` and `gy` stacked along channels (`2·C` channels).
    pub fn stacked(&self) -> Result<Tensor> {
        Tensor::concat_channels(&[&self.gx, &self.gy])
    }
}

/// Central difference along one axis, then `[1, 2, 1]` smoothing across it.
/// Differencing first makes constant neighbourhoods give exactly zero.
fn sobel_plane(p: &[f64], h: usize, w: usize, horizontal: bool) -> Vec<f64> {
    let at = |y: isize, x: isize| {
        if y < 0 || x < 0 || y >= h as isize || x >= w as isize {
            0.0
        } else {
            p[y as usize * w + x as usize]
        }
    };
    let mut out = vec![0.0; h * w];
    for y in 0..h as isize {
        for x in 0..w as isize {
            let mut acc = 0.0;
            for (k, wt) in [(-1isize, 1.0), (0, 2.0), (1, 1.0)] {
                acc += wt
                    * if horizontal {
                        at(y + k, x + 1) - at(y + k, x - 1)
                    } else {
                        at(y + 1, x + k) - at(y - 1, x + k)
                    };
            }
            out[y as usize * w + x as usize] = acc;
        }
    }
    out
}

fn apply(img: &Tensor, horizontal: bool) -> Tensor {
    let [n, c, h, w] = img.dims4();
    let mut out = img.clone();
    for ni in 0..n {
        for ci in 0..c {
            let g = sobel_plane(img.plane(ni, ci), h, w, horizontal);
            out.plane_mut(ni, ci).copy_from_slice(&g);
        }
    }
    out
}

pub fn sobel_gradients(img: &Tensor) -> GradientPair {
    GradientPair {
        gx: apply(img, true),
        gy: apply(img, false),
    }
}
