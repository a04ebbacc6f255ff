//! Masking positional encoding.
//!
//! Masks are `H×W` maps with 1 on holes and 0 on known pixels. A hole pixel is
//! described by how many 3×3 dilations of the known region it takes to reach
//! it (its Chebyshev distance to the nearest known pixel) and by which of four
//! one-sided dilations reaches it first.

use std::collections::VecDeque;

use crate::error::{ensure_dim, Error, Result};
use crate::tensor::{resize, ResizeMode, Tensor};

pub const DEFAULT_D_MAX: usize = 128;
pub const DEFAULT_CHANNELS: usize = 64;

/// Channel order of the direction map.
pub const DIRECTIONS: [&str; 4] = ["up", "down", "left", "right"];

/// Checks that `mask` holds only 0 and 1 and returns its `(h, w)`.
pub fn validate_mask(mask: &Tensor) -> Result<(usize, usize)> {
    let [n, c, h, w] = mask.dims4();
    if n != 1 || c != 1 {
        return Err(Error::invalid("mask", format!("expected a single plane, got {n}x{c} planes")));
    }
    if let Some(v) = mask.data().iter().find(|&&v| v != 0.0 && v != 1.0) {
        return Err(Error::invalid("mask", format!("value {v} is not 0 or 1")));
    }
    Ok((h, w))
}

/// Chebyshev distance from every pixel to the nearest known pixel, clipped at
/// `d_max`. With no known pixel at all every entry is `d_max`.
pub fn masking_distance(mask: &Tensor, d_max: usize) -> Result<Tensor> {
    let (h, w) = validate_mask(mask)?;
    let m = mask.data();
    let mut dist = vec![usize::MAX; h * w];
    let mut queue = VecDeque::new();
    for (i, &v) in m.iter().enumerate() {
        if v == 0.0 {
            dist[i] = 0;
            queue.push_back(i);
        }
    }
    while let Some(i) = queue.pop_front() {
        let (y, x) = ((i / w) as isize, (i % w) as isize);
        for dy in -1..=1 {
            for dx in -1..=1 {
                let (ny, nx) = (y + dy, x + dx);
                if ny < 0 || nx < 0 || ny >= h as isize || nx >= w as isize {
                    continue;
                }
                let j = ny as usize * w + nx as usize;
                if dist[j] == usize::MAX {
                    dist[j] = dist[i] + 1;
                    queue.push_back(j);
                }
            }
        }
    }
    Tensor::new(
        &[h, w],
        dist.into_iter().map(|d| d.min(d_max) as f64).collect(),
    )
}

/// Multi-hot direction labels, shape `1×4×H×W` in [`DIRECTIONS`] order.
#[derive(Clone, Debug, PartialEq)]
pub struct DirectionMap {
    pub labels: Tensor,
    /// Set when the mask has no known pixel, so no direction ever covers.
    pub uncovered: bool,
}

/// First-cover step per pixel for the element made of the three neighbours at
/// offset `(dy, dx)` along one axis; `usize::MAX` where never covered.
fn first_cover(known: &[bool], h: usize, w: usize, dir: usize) -> Vec<usize> {
    const INF: usize = usize::MAX;
    let mut step = vec![INF; h * w];
    // Sweep away from the element so every source is final before use.
    let (outer, inner) = if dir < 2 { (h, w) } else { (w, h) };
    for a in 0..outer {
        let a = if dir % 2 == 0 { a } else { outer - 1 - a };
        for b in 0..inner {
            let (y, x) = if dir < 2 { (a, b) } else { (b, a) };
            let i = y * w + x;
            if known[i] {
                step[i] = 0;
                continue;
            }
            let prev = match dir {
                0 | 2 => a.checked_sub(1),
                _ => (a + 1 < outer).then_some(a + 1),
            };
            let Some(pa) = prev else { continue };
            let mut best = INF;
            for db in -1isize..=1 {
                let nb = b as isize + db;
                if nb < 0 || nb >= inner as isize {
                    continue;
                }
                let (sy, sx) = if dir < 2 { (pa, nb as usize) } else { (nb as usize, pa) };
                best = best.min(step[sy * w + sx]);
            }
            if best != INF {
                step[i] = best + 1;
            }
        }
    }
    step
}

/// Marks, for each hole pixel, every direction whose one-sided dilation of
/// the known region covers it in the fewest steps.
pub fn masking_direction(mask: &Tensor) -> Result<DirectionMap> {
    let (h, w) = validate_mask(mask)?;
    let known: Vec<bool> = mask.data().iter().map(|&v| v == 0.0).collect();
    let steps: Vec<Vec<usize>> = (0..4).map(|d| first_cover(&known, h, w, d)).collect();
    let mut labels = Tensor::zeros(&[1, 4, h, w]);
    let plane = h * w;
    for i in 0..plane {
        if known[i] {
            continue;
        }
        let best = (0..4).map(|d| steps[d][i]).min().unwrap();
        if best == usize::MAX {
            continue;
        }
        for d in 0..4 {
            if steps[d][i] == best {
                labels.data_mut()[d * plane + i] = 1.0;
            }
        }
    }
    Ok(DirectionMap {
        labels,
        uncovered: known.iter().all(|&k| !k),
    })
}

/// `1×d×H×W`: channel `2i` is `sin(D / 10000^(i/d))`, channel `2i+1` the
/// matching cosine, for `i < d/2`. `D` is clipped to `[0, d_max]`.
pub fn sinusoidal_encode(dist: &Tensor, d: usize, d_max: usize) -> Result<Tensor> {
    if d == 0 || d % 2 != 0 {
        return Err(Error::invalid("sinusoidal_encode", format!("channel count {d} must be even and positive")));
    }
    let [_, _, h, w] = dist.dims4();
    let plane = h * w;
    let mut out = Tensor::zeros(&[1, d, h, w]);
    let data = out.data_mut();
    for i in 0..d / 2 {
        let div = 10000f64.powf(i as f64 / d as f64);
        for (j, &v) in dist.data().iter().enumerate() {
            let phase = v.clamp(0.0, d_max as f64) / div;
            data[2 * i * plane + j] = phase.sin();
            data[(2 * i + 1) * plane + j] = phase.cos();
        }
    }
    Ok(out)
}

/// Projects the 4-channel direction labels with `w_dir` (`4×d`) to `1×d×H×W`.
pub fn direction_embedding(labels: &Tensor, w_dir: &Tensor) -> Result<Tensor> {
    let [_, c, h, w] = labels.dims4();
    ensure_dim("direction_embedding", "direction channel", 4, c)?;
    let wd = w_dir.dims4();
    ensure_dim("direction_embedding", "w_dir rows", 4, wd[2])?;
    let d = wd[3];
    let plane = h * w;
    let mut out = Tensor::zeros(&[1, d, h, w]);
    let l = labels.data();
    let wv = w_dir.data();
    let o = out.data_mut();
    for k in 0..d {
        for ch in 0..4 {
            let coef = wv[ch * d + k];
            if coef == 0.0 {
                continue;
            }
            for j in 0..plane {
                o[k * plane + j] += coef * l[ch * plane + j];
            }
        }
    }
    Ok(out)
}

/// Distance and direction encodings of one mask.
#[derive(Clone, Debug)]
pub struct MpeParts {
    pub distance: Tensor,
    pub e_dis: Tensor,
    pub directions: DirectionMap,
    pub e_dir: Tensor,
}

pub fn mpe_parts(mask: &Tensor, w_dir: &Tensor, d: usize, d_max: usize) -> Result<MpeParts> {
    let distance = masking_distance(mask, d_max)?;
    let e_dis = sinusoidal_encode(&distance, d, d_max)?;
    let directions = masking_direction(mask)?;
    let wd = w_dir.dims4();
    ensure_dim("mpe", "w_dir columns", d, wd[3])?;
    let e_dir = direction_embedding(&directions.labels, w_dir)?;
    Ok(MpeParts {
        distance,
        e_dis,
        directions,
        e_dir,
    })
}

/// `E_dis + D_dir·W_dir` at the mask's resolution, nearest-resized to the
/// target size. Shape `1×d×target_h×target_w`.
pub fn mpe(mask: &Tensor, w_dir: &Tensor, d: usize, d_max: usize, target_h: usize, target_w: usize) -> Result<Tensor> {
    let parts = mpe_parts(mask, w_dir, d, d_max)?;
    let sum = parts.e_dis.add(&parts.e_dir)?;
    resize(&sum, target_h, target_w, ResizeMode::Nearest)
}
