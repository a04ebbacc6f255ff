use super::Tensor;
use crate::error::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ResizeMode {
    /// Source index `floor((i + 0.5) · H / new_h)`.
    Nearest,
    /// Half-pixel centers (align-corners false), edge-clamped.
    Bilinear,
}

#[inline]
pub(crate) fn nearest_index(i: usize, src: usize, dst: usize) -> usize {
    let pos = ((i as f64 + 0.5) * src as f64 / dst as f64).floor() as usize;
    pos.min(src - 1)
}

/// Returns `(lower index, upper index, weight of upper)`.
#[inline]
fn bilinear_taps(i: usize, src: usize, dst: usize) -> (usize, usize, f64) {
    let pos = ((i as f64 + 0.5) * src as f64 / dst as f64 - 0.5).max(0.0);
    let lo = (pos.floor() as usize).min(src - 1);
    let hi = (lo + 1).min(src - 1);
    (lo, hi, pos - lo as f64)
}

pub fn resize(x: &Tensor, new_h: usize, new_w: usize, mode: ResizeMode) -> Result<Tensor> {
    if new_h == 0 || new_w == 0 {
        return Err(Error::invalid("resize", "target extents must be positive"));
    }
    let [n, c, h, w] = x.dims4();
    if (new_h, new_w) == (h, w) {
        return Ok(x.to4());
    }
    let mut out = Tensor::zeros(&[n, c, new_h, new_w]);
    match mode {
        ResizeMode::Nearest => {
            let xs: Vec<usize> = (0..new_w).map(|i| nearest_index(i, w, new_w)).collect();
            for ni in 0..n {
                for ci in 0..c {
                    let src = x.plane(ni, ci);
                    let dst = out.plane_mut(ni, ci);
                    for oy in 0..new_h {
                        let sy = nearest_index(oy, h, new_h);
                        for (ox, &sx) in xs.iter().enumerate() {
                            dst[oy * new_w + ox] = src[sy * w + sx];
                        }
                    }
                }
            }
        }
        ResizeMode::Bilinear => {
            let xt: Vec<_> = (0..new_w).map(|i| bilinear_taps(i, w, new_w)).collect();
            for ni in 0..n {
                for ci in 0..c {
                    let src = x.plane(ni, ci);
                    let dst = out.plane_mut(ni, ci);
                    for oy in 0..new_h {
                        let (y0, y1, fy) = bilinear_taps(oy, h, new_h);
                        for (ox, &(x0, x1, fx)) in xt.iter().enumerate() {
                            let top = src[y0 * w + x0] * (1.0 - fx) + src[y0 * w + x1] * fx;
                            let bot = src[y1 * w + x0] * (1.0 - fx) + src[y1 * w + x1] * fx;
                            dst[oy * new_w + ox] = top * (1.0 - fy) + bot * fy;
                        }
                    }
                }
            }
        }
    }
    Ok(out)
}
