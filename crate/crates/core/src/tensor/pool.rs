use super::Tensor;
use crate::error::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum PoolMode {
    Max,
    Avg,
}

/// Non-overlapping `window×window` pooling. Extents must be divisible by the window.
pub fn pool2d(x: &Tensor, window: usize, mode: PoolMode) -> Result<Tensor> {
    let [n, c, h, w] = x.dims4();
    if window == 0 {
        return Err(Error::invalid("pool2d", "window must be positive"));
    }
    if h % window != 0 || w % window != 0 {
        return Err(Error::invalid(
            "pool2d",
            format!("extent {h}x{w} not divisible by window {window}"),
        ));
    }
    let (oh, ow) = (h / window, w / window);
    let area = (window * window) as f64;
    let mut out = Tensor::zeros(&[n, c, oh, ow]);
    for ni in 0..n {
        for ci in 0..c {
            let src = x.plane(ni, ci);
            let dst = out.plane_mut(ni, ci);
            for oy in 0..oh {
                for ox in 0..ow {
                    let mut acc = match mode {
                        PoolMode::Max => f64::NEG_INFINITY,
                        PoolMode::Avg => 0.0,
                    };
                    for dy in 0..window {
                        let row = &src[(oy * window + dy) * w + ox * window..][..window];
                        for &v in row {
                            acc = match mode {
                                PoolMode::Max => acc.max(v),
                                PoolMode::Avg => acc + v,
                            };
                        }
                    }
                    dst[oy * ow + ox] = match mode {
                        PoolMode::Max => acc,
                        PoolMode::Avg => acc / area,
                    };
                }
            }
        }
    }
    Ok(out)
}
