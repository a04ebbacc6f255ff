//! Loop and naive-DFT references for attention and the Fourier unit.

use inpaint_core::blocks::{AxialParams, Axis, FourierUnit, StdAttentionParams};
use inpaint_core::Tensor;

use super::{dft2, idft2_real};

/// `W · v` for a `(c, c, 1, 1)` projection weight.
fn project(w: &Tensor, v: &[f64]) -> Vec<f64> {
    let c = v.len();
    (0..c)
        .map(|o| (0..c).map(|i| w.get4(o, i, 0, 0) * v[i]).sum())
        .collect()
}

fn softmax(logits: &[f64]) -> Vec<f64> {
    let m = logits.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let e: Vec<f64> = logits.iter().map(|l| (l - m).exp()).collect();
    let s: f64 = e.iter().sum();
    e.into_iter().map(|v| v / s).collect()
}

fn feature(x: &Tensor, n: usize, y: usize, xx: usize) -> Vec<f64> {
    (0..x.dims4()[1]).map(|c| x.get4(n, c, y, xx)).collect()
}

/// Per-pair evaluation of `q_i·k_j + R[j−i+L−1]` and the weighted value sum.
pub fn axial_loop(x: &Tensor, p: &AxialParams, axis: Axis) -> Tensor {
    let [n, c, h, w] = x.dims4();
    let l = p.rpe.len().div_ceil(2) as isize;
    let mut out = Tensor::zeros(&[n, c, h, w]);
    for ni in 0..n {
        let (lines, len) = match axis {
            Axis::Row => (h, w),
            Axis::Col => (w, h),
        };
        for line in 0..lines {
            let at = |t: usize| match axis {
                Axis::Row => (line, t),
                Axis::Col => (t, line),
            };
            for i in 0..len {
                let (yi, xi) = at(i);
                let qi = project(&p.q.weight, &feature(x, ni, yi, xi));
                let mut logits = Vec::with_capacity(len);
                let mut values = Vec::with_capacity(len);
                for j in 0..len {
                    let (yj, xj) = at(j);
                    let f = feature(x, ni, yj, xj);
                    let kj = project(&p.k.weight, &f);
                    let dot: f64 = qi.iter().zip(&kj).map(|(a, b)| a * b).sum();
                    logits.push(dot + p.rpe[(j as isize - i as isize + l - 1) as usize]);
                    values.push(project(&p.v.weight, &f));
                }
                let a = softmax(&logits);
                for ci in 0..c {
                    let v: f64 = (0..len).map(|j| a[j] * values[j][ci]).sum();
                    out.set4(ni, ci, yi, xi, v);
                }
            }
        }
    }
    out
}

/// Full attention over the flattened `H·W` positions, logits scaled by `1/√c`.
pub fn std_attention_loop(x: &Tensor, p: &StdAttentionParams) -> Tensor {
    let [n, c, h, w] = x.dims4();
    let pos: Vec<(usize, usize)> = (0..h).flat_map(|y| (0..w).map(move |xx| (y, xx))).collect();
    let mut out = Tensor::zeros(&[n, c, h, w]);
    for ni in 0..n {
        for &(yi, xi) in &pos {
            let qi = project(&p.q.weight, &feature(x, ni, yi, xi));
            let logits: Vec<f64> = pos
                .iter()
                .map(|&(y, xx)| {
                    let kj = project(&p.k.weight, &feature(x, ni, y, xx));
                    qi.iter().zip(&kj).map(|(a, b)| a * b).sum::<f64>() / (c as f64).sqrt()
                })
                .collect();
            let a = softmax(&logits);
            for ci in 0..c {
                let v: f64 = pos
                    .iter()
                    .zip(&a)
                    .map(|(&(y, xx), w)| w * project(&p.v.weight, &feature(x, ni, y, xx))[ci])
                    .sum();
                out.set4(ni, ci, yi, xi, v);
            }
        }
    }
    out
}

/// Fourier unit through naive DFTs: mix `[Re; Im]` on the half plane
/// `kx ≤ W/2`, extend by conjugate symmetry and keep the real part of the
/// inverse.
pub fn fourier_unit_dft(x: &Tensor, unit: &FourierUnit) -> Tensor {
    let [n, ci, h, w] = x.dims4();
    let co = unit.out_channels();
    let stacked = unit.stacked_weight();
    let wt = |o: usize, i: usize| stacked.get4(o, i, 0, 0);
    let mut out = Tensor::zeros(&[n, co, h, w]);
    for ni in 0..n {
        let spectra: Vec<(Vec<f64>, Vec<f64>)> = (0..ci).map(|c| dft2(x.plane(ni, c), h, w)).collect();
        for o in 0..co {
            let mut re = vec![0.0; h * w];
            let mut im = vec![0.0; h * w];
            for ky in 0..h {
                for kx in 0..=w / 2 {
                    let b = ky * w + kx;
                    let (mut r, mut m) = (0.0, 0.0);
                    for (i, (sr, si)) in spectra.iter().enumerate() {
                        r += wt(o, i) * sr[b] + wt(o, ci + i) * si[b];
                        m += wt(co + o, i) * sr[b] + wt(co + o, ci + i) * si[b];
                    }
                    re[b] = r;
                    im[b] = m;
                }
            }
            for ky in 0..h {
                for kx in w / 2 + 1..w {
                    let src = ((h - ky) % h) * w + (w - kx);
                    re[ky * w + kx] = re[src];
                    im[ky * w + kx] = -im[src];
                }
            }
            out.plane_mut(ni, o).copy_from_slice(&idft2_real(&re, &im, h, w));
        }
    }
    out
}

/// Spatial kernel of a constant complex multiplier `m = a + ib` as seen by a
/// real-to-real spectral filter: `m` on `0 < kx < W/2`, `conj(m)` on the
/// mirror half, and `a` on the self-conjugate columns.
pub fn multiplier_kernel(a: f64, b: f64, h: usize, w: usize) -> Vec<f64> {
    let mut re = vec![0.0; h * w];
    let mut im = vec![0.0; h * w];
    for ky in 0..h {
        for kx in 0..w {
            let i = ky * w + kx;
            re[i] = a;
            if kx == 0 || 2 * kx == w {
                im[i] = 0.0;
            } else if 2 * kx < w {
                im[i] = b;
            } else {
                im[i] = -b;
            }
        }
    }
    idft2_real(&re, &im, h, w)
}

/// `(k ⊛ x)(p) = Σ_q k(q)·x(p − q)` with wraparound.
pub fn circular_conv(x: &[f64], k: &[f64], h: usize, w: usize) -> Vec<f64> {
    let mut out = vec![0.0; h * w];
    for py in 0..h {
        for px in 0..w {
            let mut acc = 0.0;
            for qy in 0..h {
                for qx in 0..w {
                    let sy = (py + h - qy) % h;
                    let sx = (px + w - qx) % w;
                    acc += k[qy * w + qx] * x[sy * w + sx];
                }
            }
            out[py * w + px] = acc;
        }
    }
    out
}

/// Stage rows of the published layer table as `(label, channels, side)` for a
/// 256×256 input. The middle rows carry no size in the table; they keep the
/// shape of the stage before them.
pub fn layer_table(role: &str) -> Vec<(&'static str, usize, usize)> {
    match role {
        "tsr" => vec![
            ("Conv2d+ReLU", 64, 256),
            ("Conv2d+ReLU", 128, 128),
            ("Conv2d+ReLU", 256, 64),
            ("Conv2d+ReLU", 256, 32),
            ("TransformerBlock×8", 256, 32),
            ("TConv2d+ReLU", 256, 64),
            ("TConv2d+ReLU", 128, 128),
            ("TConv2d+ReLU", 64, 256),
            ("Conv2d+Sigmoid", 2, 256),
        ],
        "sfe" => vec![
            ("GC+BN+ReLU", 64, 256),
            ("GC+BN+ReLU", 128, 128),
            ("GC+BN+ReLU", 256, 64),
            ("GC+BN+ReLU", 512, 32),
            ("DilatedResnetBlock×3", 512, 32),
            ("TGC+BN+ReLU", 256, 64),
            ("TGC+BN+ReLU", 128, 128),
            ("TGC+BN+ReLU", 64, 256),
        ],
        "ftr" => vec![
            ("Conv2d+LKA+FFN", 64, 256),
            ("Conv2d+LKA+FFN", 128, 128),
            ("Conv2d+LKA+FFN", 256, 64),
            ("Conv2d+LKA+FFN", 512, 32),
            ("FFCBlock×9", 512, 32),
            ("TConv2d+LKA+FFN", 256, 64),
            ("TConv2d+LKA+FFN", 128, 128),
            ("TConv2d+LKA+FFN", 64, 256),
            ("Conv2d+Tanh", 3, 256),
        ],
        _ => panic!("unknown role {role}"),
    }
}
