//! Brute-force reference implementations shared by the integration tests.
//! Deliberately written as plain loops, independent of the library's kernels.
#![allow(dead_code)]

pub mod blocks_ref;
pub mod gradsuite;

use inpaint_core::init::{self, SeededRng};
use inpaint_core::tensor::ConvSpec;
use inpaint_core::Tensor;
use rand::Rng;

/// Six-nested-loop cross-correlation with zero padding.
pub fn conv2d_loop(x: &Tensor, w: &Tensor, b: Option<&Tensor>, s: ConvSpec) -> Tensor {
    let [n, _, h, wd] = x.dims4();
    let [c_out, cin_g, kh, kw] = w.dims4();
    let oh = (h + 2 * s.pad - s.dilation * (kh - 1) - 1) / s.stride + 1;
    let ow = (wd + 2 * s.pad - s.dilation * (kw - 1) - 1) / s.stride + 1;
    let cout_g = c_out / s.groups;
    let mut out = Tensor::zeros(&[n, c_out, oh, ow]);
    for ni in 0..n {
        for co in 0..c_out {
            let g = co / cout_g;
            for oy in 0..oh {
                for ox in 0..ow {
                    let mut acc = b.map_or(0.0, |b| b.data()[co]);
                    for ci in 0..cin_g {
                        for ky in 0..kh {
                            for kx in 0..kw {
                                let iy = (oy * s.stride + ky * s.dilation) as isize - s.pad as isize;
                                let ix = (ox * s.stride + kx * s.dilation) as isize - s.pad as isize;
                                if iy < 0 || ix < 0 || iy >= h as isize || ix >= wd as isize {
                                    continue;
                                }
                                acc += x.get4(ni, g * cin_g + ci, iy as usize, ix as usize)
                                    * w.get4(co, ci, ky, kx);
                            }
                        }
                    }
                    out.set4(ni, co, oy, ox, acc);
                }
            }
        }
    }
    out
}

/// Naive 2-D DFT returning full `(re, im)` planes for one `H×W` plane.
pub fn dft2(plane: &[f64], h: usize, w: usize) -> (Vec<f64>, Vec<f64>) {
    let mut re = vec![0.0; h * w];
    let mut im = vec![0.0; h * w];
    for ky in 0..h {
        for kx in 0..w {
            let (mut sr, mut si) = (0.0, 0.0);
            for y in 0..h {
                for x in 0..w {
                    let phase = -2.0 * std::f64::consts::PI
                        * ((ky * y) as f64 / h as f64 + (kx * x) as f64 / w as f64);
                    sr += plane[y * w + x] * phase.cos();
                    si += plane[y * w + x] * phase.sin();
                }
            }
            re[ky * w + kx] = sr;
            im[ky * w + kx] = si;
        }
    }
    (re, im)
}

/// Naive inverse 2-D DFT (scaled by `1/(H·W)`), real part.
pub fn idft2_real(re: &[f64], im: &[f64], h: usize, w: usize) -> Vec<f64> {
    let mut out = vec![0.0; h * w];
    for y in 0..h {
        for x in 0..w {
            let mut acc = 0.0;
            for ky in 0..h {
                for kx in 0..w {
                    let phase = 2.0 * std::f64::consts::PI
                        * ((ky * y) as f64 / h as f64 + (kx * x) as f64 / w as f64);
                    acc += re[ky * w + kx] * phase.cos() - im[ky * w + kx] * phase.sin();
                }
            }
            out[y * w + x] = acc / (h * w) as f64;
        }
    }
    out
}

/// Random conv problem with `H, W ≤ max_hw`.
pub fn random_conv_case(rng: &mut SeededRng, max_hw: usize) -> (Tensor, Tensor, Tensor, ConvSpec) {
    loop {
        let groups = [1, 1, 2, 3][rng.random_range(0..4)];
        let cin_g = rng.random_range(1..=3);
        let cout_g = rng.random_range(1..=3);
        let depthwise = rng.random_bool(0.25);
        let (c_in, c_out, groups) = if depthwise {
            let c = rng.random_range(1..=4);
            (c, c, c)
        } else {
            (cin_g * groups, cout_g * groups, groups)
        };
        let kh = rng.random_range(1..=4);
        let kw = rng.random_range(1..=4);
        let spec = ConvSpec::new(kh, kw)
            .stride(rng.random_range(1..=3))
            .dilation(rng.random_range(1..=3))
            .pad(rng.random_range(0..=3))
            .groups(groups);
        let h = rng.random_range(1..=max_hw);
        let w = rng.random_range(1..=max_hw);
        if spec.output_size(h, w).is_err() {
            continue;
        }
        let n = rng.random_range(1..=2);
        let x = init::normal(&[n, c_in, h, w], 1.0, rng);
        let wt = init::normal(&[c_out, c_in / groups, kh, kw], 1.0, rng);
        let b = init::normal(&[c_out], 1.0, rng);
        return (x, wt, b, spec);
    }
}

pub fn assert_close(a: &Tensor, b: &Tensor, tol: f64, what: &str) {
    let d = a.max_abs_diff(b).unwrap();
    assert!(d <= tol, "{what}: max abs diff {d:e} > {tol:e}");
}

/// Random binary mask (1 = hole) built from a few rectangles plus sparse noise.
pub fn random_mask(rng: &mut SeededRng, h: usize, w: usize) -> Tensor {
    let mut m = Tensor::zeros(&[h, w]);
    for _ in 0..rng.random_range(0..=4) {
        let (y0, x0) = (rng.random_range(0..h), rng.random_range(0..w));
        let (y1, x1) = (rng.random_range(y0..h), rng.random_range(x0..w));
        for y in y0..=y1 {
            for x in x0..=x1 {
                m.set4(0, 0, y, x, 1.0);
            }
        }
    }
    let noise = rng.random_range(0.0..0.3);
    for v in m.data_mut() {
        if rng.random_bool(noise) {
            *v = 1.0 - *v;
        }
    }
    m
}

/// Chebyshev distance to the nearest known pixel by scanning all pairs;
/// `None` when nothing is known.
pub fn chebyshev_oracle(mask: &Tensor) -> Vec<Option<usize>> {
    let [_, _, h, w] = mask.dims4();
    let m = mask.data();
    let known: Vec<(usize, usize)> = (0..h * w).filter(|&i| m[i] == 0.0).map(|i| (i / w, i % w)).collect();
    (0..h * w)
        .map(|i| {
            let (y, x) = (i / w, i % w);
            known.iter().map(|&(ky, kx)| y.abs_diff(ky).max(x.abs_diff(kx))).min()
        })
        .collect()
}

/// Direction labels by literally iterating one-sided dilations of the known
/// set until nothing changes; order up, down, left, right.
pub fn direction_oracle(mask: &Tensor) -> Vec<[bool; 4]> {
    let [_, _, h, w] = mask.dims4();
    let m = mask.data();
    // element cells as (dy, dx) offsets of the source relative to the target
    let elements: [[(isize, isize); 3]; 4] = [
        [(-1, -1), (-1, 0), (-1, 1)],
        [(1, -1), (1, 0), (1, 1)],
        [(-1, -1), (0, -1), (1, -1)],
        [(-1, 1), (0, 1), (1, 1)],
    ];
    let mut first = vec![[usize::MAX; 4]; h * w];
    for (d, elem) in elements.iter().enumerate() {
        let mut covered: Vec<bool> = m.iter().map(|&v| v == 0.0).collect();
        let mut t = 0;
        loop {
            t += 1;
            let mut next = covered.clone();
            for y in 0..h as isize {
                for x in 0..w as isize {
                    let i = (y * w as isize + x) as usize;
                    if covered[i] {
                        continue;
                    }
                    let hit = elem.iter().any(|&(dy, dx)| {
                        let (sy, sx) = (y + dy, x + dx);
                        sy >= 0 && sx >= 0 && sy < h as isize && sx < w as isize
                            && covered[(sy * w as isize + sx) as usize]
                    });
                    if hit {
                        next[i] = true;
                        first[i][d] = t;
                    }
                }
            }
            if next == covered {
                break;
            }
            covered = next;
        }
    }
    (0..h * w)
        .map(|i| {
            if m[i] == 0.0 {
                return [false; 4];
            }
            let best = *first[i].iter().min().unwrap();
            let mut out = [false; 4];
            if best != usize::MAX {
                for d in 0..4 {
                    out[d] = first[i][d] == best;
                }
            }
            out
        })
        .collect()
}

/// A ridge with a Gaussian cross-section of width `sigma` centred on the line
/// through `(cx, cy)` with direction `(cos t, sin t)`.
pub fn blurred_ridge(h: usize, w: usize, cx: f64, cy: f64, t: f64, sigma: f64, peak: f64) -> Tensor {
    let (ux, uy) = (t.cos(), t.sin());
    Tensor::from_fn4([1, 1, h, w], |_, _, y, x| {
        let d = (y as f64 - cy) * ux - (x as f64 - cx) * uy;
        peak * (-d * d / (2.0 * sigma * sigma)).exp()
    })
}
