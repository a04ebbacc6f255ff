//! Finite-difference checks for every differentiable tape op.

use super::random_conv_case;
use inpaint_core::autodiff::{grad_check, NodeId, Tape};
use inpaint_core::init::{self, SeededRng};
use inpaint_core::tensor::{conv2d, Activation, ConvSpec, PoolMode};
use inpaint_core::{Result, Tensor};
use rand::Rng;

pub const STEP: f64 = 1e-5;
pub const INSTANCES: usize = 20;

/// Worst normwise relative error over all inputs of all instances, per op.
pub struct OpResult {
    pub op: &'static str,
    pub worst_rel: f64,
    pub instances: usize,
}

/// `sum(y ⊙ r)` for a fixed random `r`, so the upstream gradient is not uniform.
fn weighted_sum(t: &mut Tape, y: NodeId, r: &Tensor) -> Result<NodeId> {
    let rc = t.constant(r.clone());
    let p = t.mul(y, rc)?;
    Ok(t.sum(p))
}

fn run<F>(op: &'static str, mut case: F) -> OpResult
where
    F: FnMut(usize) -> f64,
{
    let worst = (0..INSTANCES).map(&mut case).fold(0.0, f64::max);
    OpResult {
        op,
        worst_rel: worst,
        instances: INSTANCES,
    }
}

fn check<F>(build: F, inputs: &[(&str, Tensor)]) -> f64
where
    F: Fn(&mut Tape, &[NodeId]) -> Result<NodeId>,
{
    grad_check(build, inputs, STEP)
        .expect("grad_check failed")
        .iter()
        .map(|r| r.max_rel_err)
        .fold(0.0, f64::max)
}

fn small_shape(rng: &mut SeededRng) -> [usize; 4] {
    [
        rng.random_range(1..=2),
        rng.random_range(1..=3),
        rng.random_range(1..=6),
        rng.random_range(1..=6),
    ]
}

/// Normal samples with every entry at least `gap` away from zero.
fn away_from_zero(shape: &[usize], gap: f64, rng: &mut SeededRng) -> Tensor {
    init::normal(shape, 1.0, rng).map(|v| if v.abs() < gap { v.signum() * gap + v } else { v })
}

/// Normal samples whose pooling windows have a unique maximum by a margin.
fn separated_windows(shape: [usize; 4], window: usize, rng: &mut SeededRng) -> Tensor {
    loop {
        let x = init::normal(&shape, 1.0, rng);
        let [n, c, h, w] = shape;
        let mut ok = true;
        for ni in 0..n {
            for ci in 0..c {
                for oy in 0..h / window {
                    for ox in 0..w / window {
                        let mut v: Vec<f64> = (0..window * window)
                            .map(|i| x.get4(ni, ci, oy * window + i / window, ox * window + i % window))
                            .collect();
                        v.sort_by(|a, b| b.total_cmp(a));
                        if v.len() > 1 && v[0] - v[1] < 1e-3 {
                            ok = false;
                        }
                    }
                }
            }
        }
        if ok {
            return x;
        }
    }
}

pub fn run_all(seed: u64) -> Vec<OpResult> {
    let mut rng = init::rng(seed);
    let mut out = Vec::new();

    out.push(run("conv2d", |_| {
        let (x, w, b, spec) = random_conv_case(&mut rng, 6);
        let r = init::normal(conv2d(&x, &w, None, spec).unwrap().shape(), 1.0, &mut rng);
        check(
            |t, ids| {
                let y = t.conv2d(ids[0], ids[1], Some(ids[2]), spec)?;
                weighted_sum(t, y, &r)
            },
            &[("x", x), ("w", w), ("b", b)],
        )
    }));

    out.push(run("transposed_conv2d", |_| {
        // redraw when the padding would crop the transposed output to nothing
        let (g, w, b, spec, y) = loop {
            let (x, w, _, spec) = random_conv_case(&mut rng, 6);
            let g = init::normal(conv2d(&x, &w, None, spec).unwrap().shape(), 1.0, &mut rng);
            let b = init::normal(&[x.dims4()[1]], 1.0, &mut rng);
            if let Ok(y) = inpaint_core::tensor::transposed_conv2d(&g, &w, Some(&b), spec) {
                break (g, w, b, spec, y);
            }
        };
        let r = init::normal(y.shape(), 1.0, &mut rng);
        check(
            |t, ids| {
                let y = t.transposed_conv2d(ids[0], ids[1], Some(ids[2]), spec)?;
                weighted_sum(t, y, &r)
            },
            &[("x", g), ("w", w), ("b", b)],
        )
    }));

    type Binary = fn(&mut Tape, NodeId, NodeId) -> Result<NodeId>;
    let binaries: [(&'static str, Binary); 3] = [
        ("add", |t, a, b| t.add(a, b)),
        ("sub", |t, a, b| t.sub(a, b)),
        ("mul", |t, a, b| t.mul(a, b)),
    ];
    for (name, f) in binaries {
        out.push(run(name, |_| {
            let s = small_shape(&mut rng);
            let a = init::normal(&s, 1.0, &mut rng);
            let b = init::normal(&s, 1.0, &mut rng);
            let r = init::normal(&s, 1.0, &mut rng);
            check(
                |t, ids| {
                    let y = f(t, ids[0], ids[1])?;
                    weighted_sum(t, y, &r)
                },
                &[("a", a), ("b", b)],
            )
        }));
    }

    out.push(run("scale", |_| {
        let s = small_shape(&mut rng);
        let x = init::normal(&s, 1.0, &mut rng);
        let r = init::normal(&s, 1.0, &mut rng);
        let k = rng.random_range(-3.0..3.0);
        check(
            |t, ids| {
                let y = t.scale(ids[0], k);
                weighted_sum(t, y, &r)
            },
            &[("x", x)],
        )
    }));

    out.push(run("offset", |_| {
        let s = small_shape(&mut rng);
        let x = init::normal(&s, 1.0, &mut rng);
        let r = init::normal(&s, 1.0, &mut rng);
        let c = rng.random_range(-3.0..3.0);
        check(
            |t, ids| {
                let y = t.offset(ids[0], c);
                weighted_sum(t, y, &r)
            },
            &[("x", x)],
        )
    }));

    out.push(run("scale_by", |_| {
        let s = small_shape(&mut rng);
        let x = init::normal(&s, 1.0, &mut rng);
        let r = init::normal(&s, 1.0, &mut rng);
        let k = Tensor::scalar(rng.random_range(-3.0..3.0));
        check(
            |t, ids| {
                let y = t.scale_by(ids[0], ids[1])?;
                weighted_sum(t, y, &r)
            },
            &[("x", x), ("alpha", k)],
        )
    }));

    for (name, kind) in [
        ("relu", Activation::Relu),
        ("sigmoid", Activation::Sigmoid),
        ("tanh", Activation::Tanh),
        ("swish", Activation::Swish),
    ] {
        out.push(run(name, |_| {
            let s = small_shape(&mut rng);
            // keep clear of the ReLU kink
            let x = away_from_zero(&s, 1e-3, &mut rng).scale(2.0);
            let r = init::normal(&s, 1.0, &mut rng);
            check(
                |t, ids| {
                    let y = t.activation(ids[0], kind);
                    weighted_sum(t, y, &r)
                },
                &[("x", x)],
            )
        }));
    }

    out.push(run("resize_nearest", |_| {
        let s = small_shape(&mut rng);
        let x = init::normal(&s, 1.0, &mut rng);
        let (nh, nw) = (rng.random_range(1..=12), rng.random_range(1..=12));
        let r = init::normal(&[s[0], s[1], nh, nw], 1.0, &mut rng);
        check(
            |t, ids| {
                let y = t.resize_nearest(ids[0], nh, nw)?;
                weighted_sum(t, y, &r)
            },
            &[("x", x)],
        )
    }));

    for (name, mode) in [("max_pool", PoolMode::Max), ("avg_pool", PoolMode::Avg)] {
        out.push(run(name, |_| {
            let window = rng.random_range(1..=3);
            let s = [
                rng.random_range(1..=2),
                rng.random_range(1..=2),
                window * rng.random_range(1..=3),
                window * rng.random_range(1..=3),
            ];
            let x = separated_windows(s, window, &mut rng);
            let r = init::normal(&[s[0], s[1], s[2] / window, s[3] / window], 1.0, &mut rng);
            check(
                |t, ids| {
                    let y = t.pool(ids[0], window, mode)?;
                    weighted_sum(t, y, &r)
                },
                &[("x", x)],
            )
        }));
    }

    out.push(run("sum", |_| {
        let x = init::normal(&small_shape(&mut rng), 1.0, &mut rng);
        check(
            |t, ids| {
                let sq = t.mul(ids[0], ids[0])?;
                Ok(t.sum(sq))
            },
            &[("x", x)],
        )
    }));

    out.push(run("mean", |_| {
        let x = init::normal(&small_shape(&mut rng), 1.0, &mut rng);
        check(
            |t, ids| {
                let sq = t.mul(ids[0], ids[0])?;
                Ok(t.mean(sq))
            },
            &[("x", x)],
        )
    }));

    out.push(run("bce_with_logits", |_| {
        let s = small_shape(&mut rng);
        let z = init::normal(&s, 3.0, &mut rng);
        let target = init::uniform(&s, 0.0, 1.0, &mut rng);
        check(|t, ids| t.bce_with_logits(ids[0], &target), &[("logits", z)])
    }));

    out.push(run("conv_swish_net", |_| {
        let (h, w) = (rng.random_range(4..=8), rng.random_range(4..=8));
        let x = init::normal(&[1, 2, h, w], 1.0, &mut rng);
        let w1 = init::normal(&[3, 2, 3, 3], 0.5, &mut rng);
        let w2 = init::normal(&[3, 3, 3, 3], 0.5, &mut rng);
        let w3 = init::normal(&[1, 3, 3, 3], 0.5, &mut rng);
        let spec = ConvSpec::same(3);
        check(
            |t, ids| {
                let mut y = ids[0];
                for &wi in &ids[1..] {
                    let c = t.conv2d(y, wi, None, spec)?;
                    y = t.activation(c, Activation::Swish);
                }
                Ok(t.mean(y))
            },
            &[("x", x), ("w1", w1), ("w2", w2), ("w3", w3)],
        )
    }));

    out
}
