//! Edge thinning by non-maximum suppression along the local edge normal, and
//! the threshold fusion of raw and thinned maps.

use crate::error::Result;
use crate::tensor::Tensor;

use super::sobel::{SOBEL_X, SOBEL_Y};

pub const DEFAULT_FUSE_THRESHOLD: f64 = 0.25;

fn at_clamped(p: &[f64], h: usize, w: usize, y: isize, x: isize) -> f64 {
    let y = y.clamp(0, h as isize - 1) as usize;
    let x = x.clamp(0, w as isize - 1) as usize;
    p[y * w + x]
}

fn bilinear(p: &[f64], h: usize, w: usize, y: f64, x: f64) -> f64 {
    let (y0, x0) = (y.floor(), x.floor());
    let (fy, fx) = (y - y0, x - x0);
    let (y0, x0) = (y0 as isize, x0 as isize);
    let a = at_clamped(p, h, w, y0, x0);
    let b = at_clamped(p, h, w, y0, x0 + 1);
    let c = at_clamped(p, h, w, y0 + 1, x0);
    let d = at_clamped(p, h, w, y0 + 1, x0 + 1);
    (1.0 - fy) * ((1.0 - fx) * a + fx * b) + fy * ((1.0 - fx) * c + fx * d)
}

/// Unit normal per pixel: principal eigenvector of the 3×3 box-summed
/// structure tensor of Sobel gradients. Borders replicate, so a ridge that
/// runs off the image keeps its orientation up to the last row. Each window is
/// divided by its largest gradient component before squaring, so far tails of
/// a ridge, whose squared gradients would underflow, keep their orientation.
fn normals(p: &[f64], h: usize, w: usize) -> Vec<(f64, f64)> {
    let mut grad = vec![(0.0, 0.0); h * w];
    for y in 0..h {
        for x in 0..w {
            let (mut gx, mut gy) = (0.0, 0.0);
            for k in 0..9 {
                let v = at_clamped(p, h, w, y as isize + k as isize / 3 - 1, x as isize + k as isize % 3 - 1);
                gx += SOBEL_X[k] * v;
                gy += SOBEL_Y[k] * v;
            }
            grad[y * w + x] = (gx, gy);
        }
    }
    let mut out = vec![(0.0, 0.0); h * w];
    let mut window = Vec::with_capacity(9);
    for y in 0..h {
        for x in 0..w {
            window.clear();
            for k in 0..9 {
                let yy = y as isize + k / 3 - 1;
                let xx = x as isize + k % 3 - 1;
                if yy >= 0 && xx >= 0 && yy < h as isize && xx < w as isize {
                    window.push(grad[yy as usize * w + xx as usize]);
                }
            }
            let m = window.iter().fold(0.0f64, |m, g| m.max(g.0.abs()).max(g.1.abs()));
            if m == 0.0 {
                continue;
            }
            let (mut a, mut b, mut c) = (0.0, 0.0, 0.0);
            for &(gx, gy) in &window {
                let (gx, gy) = (gx / m, gy / m);
                a += gx * gx;
                b += gx * gy;
                c += gy * gy;
            }
            let theta = 0.5 * (2.0 * b).atan2(a - c);
            out[y * w + x] = (theta.cos(), theta.sin());
        }
    }
    out
}

fn nms_plane(p: &[f64], h: usize, w: usize, dst: &mut [f64]) {
    let n = normals(p, h, w);
    for y in 0..h {
        for x in 0..w {
            let i = y * w + x;
            let v = p[i];
            let (nx, ny) = n[i];
            if v == 0.0 || (nx == 0.0 && ny == 0.0) {
                dst[i] = v;
                continue;
            }
            let (fy, fx) = (y as f64, x as f64);
            let fwd = bilinear(p, h, w, fy + ny, fx + nx);
            let back = bilinear(p, h, w, fy - ny, fx - nx);
            dst[i] = if v >= fwd && v >= back { v } else { 0.0 };
        }
    }
}

/// Keeps a pixel only where it is at least both bilinear neighbours one pixel
/// away along the edge normal; survivors keep their value. Pixels without a
/// defined orientation (flat neighbourhoods) are kept.
pub fn edge_nms(edge: &Tensor) -> Tensor {
    let [n, c, h, w] = edge.dims4();
    let mut out = edge.clone();
    for ni in 0..n {
        for ci in 0..c {
            nms_plane(edge.plane(ni, ci), h, w, out.plane_mut(ni, ci));
        }
    }
    out
}

/// `raw` below `threshold` passes through untouched; elsewhere the thinned map
/// is binarised at the same threshold.
pub fn enms_fuse(raw: &Tensor, nms: &Tensor, threshold: f64) -> Result<Tensor> {
    raw.zip_map(nms, "enms_fuse", |r, m| {
        if r < threshold {
            r
        } else if m >= threshold {
            1.0
        } else {
            0.0
        }
    })
}
