//! `grad-check`: every differentiable tape op on random small instances.

use std::io::Write;

use rand::Rng;

use super::GradCheckArgs;
use crate::autodiff::{grad_check, GradReport, NodeId, Tape};
use crate::config::Config;
use crate::error::{Error, Result};
use crate::init::{self, SeededRng};
use crate::tensor::{Activation, ConvSpec, PoolMode, Tensor};

pub const OPS: [&str; 16] = [
    "conv2d",
    "transposed_conv2d",
    "add",
    "sub",
    "mul",
    "scale",
    "offset",
    "scale_by",
    "relu",
    "sigmoid",
    "tanh",
    "swish",
    "resize_nearest",
    "pool_max",
    "pool_avg",
    "bce_with_logits",
];

/// Normal values at least `gap` away from zero, keeping ReLU off its kink.
fn off_kink(shape: &[usize], rng: &mut SeededRng) -> Tensor {
    init::normal(shape, 1.0, rng).map(|v| if v.abs() < 0.05 { v + 0.1 * v.signum() } else { v })
}

/// Pooling windows with a clear maximum.
fn spaced(shape: [usize; 4], rng: &mut SeededRng) -> Tensor {
    let n: usize = shape.iter().product();
    let mut vals: Vec<f64> = (0..n).map(|i| i as f64 * 0.1).collect();
    for i in (1..n).rev() {
        vals.swap(i, rng.random_range(0..=i));
    }
    Tensor::new(&shape, vals).expect("shape matches")
}

fn reduce(t: &mut Tape, y: NodeId, r: &Tensor) -> Result<NodeId> {
    let rc = t.constant(r.clone());
    let p = t.mul(y, rc)?;
    Ok(t.sum(p))
}

fn instance(op: &str, rng: &mut SeededRng, step: f64) -> Result<Vec<GradReport>> {
    let shape = [
        rng.random_range(1..=2),
        rng.random_range(1..=3),
        rng.random_range(2..=6),
        rng.random_range(2..=6),
    ];
    let [n, c, h, w] = shape;
    let x = off_kink(&shape, rng);
    let r = init::normal(&shape, 1.0, rng);
    let unary = |f: &dyn Fn(&mut Tape, NodeId) -> Result<NodeId>, x: Tensor, out_shape: &[usize], rng: &mut SeededRng| {
        let r = init::normal(out_shape, 1.0, rng);
        grad_check(
            |t, ids| {
                let y = f(t, ids[0])?;
                reduce(t, y, &r)
            },
            &[("x", x)],
            step,
        )
    };
    match op {
        "conv2d" | "transposed_conv2d" => {
            let k = rng.random_range(1..=3);
            let spec = ConvSpec::new(k, k).stride(rng.random_range(1..=2)).pad(k / 2);
            let co = rng.random_range(1..=3);
            let transposed = op == "transposed_conv2d";
            let wshape = if transposed { [c, co, k, k] } else { [co, c, k, k] };
            let wt = init::normal(&wshape, 1.0, rng);
            let b = init::normal(&[co], 1.0, rng);
            let (oh, ow) = if transposed {
                spec.transposed_output_size(h, w)?
            } else {
                spec.output_size(h, w)?
            };
            let r = init::normal(&[n, co, oh, ow], 1.0, rng);
            grad_check(
                |t, ids| {
                    let y = if transposed {
                        t.transposed_conv2d(ids[0], ids[1], Some(ids[2]), spec)?
                    } else {
                        t.conv2d(ids[0], ids[1], Some(ids[2]), spec)?
                    };
                    reduce(t, y, &r)
                },
                &[("x", x), ("w", wt), ("b", b)],
                step,
            )
        }
        "add" | "sub" | "mul" => {
            let y0 = init::normal(&shape, 1.0, rng);
            grad_check(
                |t, ids| {
                    let y = match op {
                        "add" => t.add(ids[0], ids[1])?,
                        "sub" => t.sub(ids[0], ids[1])?,
                        _ => t.mul(ids[0], ids[1])?,
                    };
                    reduce(t, y, &r)
                },
                &[("a", x), ("b", y0)],
                step,
            )
        }
        "scale" => {
            let s = rng.random_range(-2.0..2.0);
            unary(&|t, x| Ok(t.scale(x, s)), x, &shape, rng)
        }
        "offset" => {
            let s = rng.random_range(-2.0..2.0);
            unary(&|t, x| Ok(t.offset(x, s)), x, &shape, rng)
        }
        "scale_by" => grad_check(
            |t, ids| {
                let y = t.scale_by(ids[0], ids[1])?;
                reduce(t, y, &r)
            },
            &[("x", x), ("s", Tensor::scalar(rng.random_range(-2.0..2.0)))],
            step,
        ),
        "relu" | "sigmoid" | "tanh" | "swish" => {
            let kind = Activation::parse(op).expect("known activation");
            unary(&|t, x| Ok(t.activation(x, kind)), x, &shape, rng)
        }
        "resize_nearest" => {
            let (nh, nw) = (rng.random_range(1..=9), rng.random_range(1..=9));
            unary(&|t, x| t.resize_nearest(x, nh, nw), x, &[n, c, nh, nw], rng)
        }
        "pool_max" | "pool_avg" => {
            let win = 2;
            let ps = [n, c, 2 * (h / 2).max(1), 2 * (w / 2).max(1)];
            let mode = if op == "pool_max" { PoolMode::Max } else { PoolMode::Avg };
            let x = spaced(ps, rng);
            unary(&|t, x| t.pool(x, win, mode), x, &[n, c, ps[2] / 2, ps[3] / 2], rng)
        }
        "bce_with_logits" => {
            let target = init::uniform(&shape, 0.0, 1.0, rng);
            grad_check(|t, ids| t.bce_with_logits(ids[0], &target), &[("logits", x)], step)
        }
        _ => Err(Error::invalid(
            "grad-check",
            format!("unknown op {op:?}; expected one of {} or all", OPS.join(", ")),
        )),
    }
}

pub fn run(a: &GradCheckArgs, cfg: &Config, out: &mut dyn Write) -> Result<()> {
    let ops: Vec<&str> = if a.op == "all" { OPS.to_vec() } else { vec![a.op.as_str()] };
    let mut rng = init::rng(cfg.seed);
    let mut worst = (String::new(), 0.0f64);
    writeln!(out, "op,instance,{}", GradReport::CSV_HEADER)?;
    for op in ops {
        for i in 0..a.cases {
            for rep in instance(op, &mut rng, a.step)? {
                writeln!(out, "{op},{i},{rep}")?;
                if rep.max_rel_err > worst.1 {
                    worst = (format!("{op}/{}", rep.name), rep.max_rel_err);
                }
            }
        }
    }
    writeln!(out, "worst,{},{:.3e}", worst.0, worst.1)?;
    if worst.1 > a.tolerance {
        return Err(Error::invalid(
            "grad-check",
            format!("{} relative error {:.3e} exceeds {:.1e}", worst.0, worst.1, a.tolerance),
        ));
    }
    Ok(())
}
