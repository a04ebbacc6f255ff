mod common;

use common::blocks_ref::{
    axial_loop, circular_conv, fourier_unit_dft, layer_table, multiplier_kernel, std_attention_loop,
};
use common::{assert_close, conv2d_loop};
use inpaint_core::autodiff::{finite_diff, Tape};
use inpaint_core::blocks::{
    assemble, axial_attention, impulse_rf, lka_support, record_zerora, sfe_inject, standard_attention,
    AxialParams, Axis, BatchNorm, ConvLayer, FfcLayer, FourierUnit, GatedConv, Injection, LkaBlock, ModelSpec,
    Role, StdAttentionParams, ZeroRaState,
};
use inpaint_core::init;
use inpaint_core::tensor::{Activation, ConvSpec};
use inpaint_core::Tensor;
use proptest::prelude::*;
use rand::Rng;

#[test]
fn axial_attention_matches_pair_loop() {
    let mut rng = init::rng(11);
    for case in 0..30 {
        let (h, w, c) = if case == 0 {
            (4, 4, 3)
        } else {
            (rng.random_range(1..=6), rng.random_range(1..=6), rng.random_range(1..=3))
        };
        let p = AxialParams::init(c, 6, &mut rng);
        let x = init::normal(&[rng.random_range(1..=2), c, h, w], 1.0, &mut rng);
        for axis in [Axis::Row, Axis::Col] {
            let got = axial_attention(&x, &p, axis).unwrap();
            assert_close(&got, &axial_loop(&x, &p, axis), 1e-12, &format!("case {case} {axis:?}"));
        }
    }
}

#[test]
fn row_attention_ignores_other_rows() {
    let mut rng = init::rng(12);
    let p = AxialParams::init(3, 5, &mut rng);
    let x = init::normal(&[1, 3, 5, 5], 1.0, &mut rng);
    let base = axial_attention(&x, &p, Axis::Row).unwrap();
    let mut y = x.clone();
    for c in 0..3 {
        for col in 0..5 {
            y.set4(0, c, 3, col, 100.0 * rng.random::<f64>());
        }
    }
    let moved = axial_attention(&y, &p, Axis::Row).unwrap();
    for c in 0..3 {
        for r in [0, 1, 2, 4] {
            for col in 0..5 {
                assert_eq!(moved.get4(0, c, r, col), base.get4(0, c, r, col));
            }
        }
    }
}

#[test]
fn standard_attention_matches_loop() {
    let mut rng = init::rng(13);
    for case in 0..30 {
        let (h, w) = (rng.random_range(1..=4), rng.random_range(1..=4));
        let c = rng.random_range(1..=4);
        let p = StdAttentionParams::init(c, &mut rng);
        let x = init::normal(&[1, c, h, w], 1.0, &mut rng);
        let got = standard_attention(&x, &p).unwrap();
        assert_close(&got, &std_attention_loop(&x, &p), 1e-12, &format!("case {case}"));
    }
}

#[test]
fn zero_logits_give_global_mean() {
    let mut rng = init::rng(14);
    let mut p = StdAttentionParams::init(2, &mut rng);
    p.q.zero();
    p.k.zero();
    p.v = ConvLayer::identity_1x1(2);
    let x = init::normal(&[1, 2, 3, 4], 1.0, &mut rng);
    let y = standard_attention(&x, &p).unwrap();
    for c in 0..2 {
        let mean = x.plane(0, c).iter().sum::<f64>() / 12.0;
        assert!(y.plane(0, c).iter().all(|v| (v - mean).abs() < 1e-14));
    }
}

#[test]
fn fourier_unit_matches_naive_dft() {
    let mut rng = init::rng(15);
    for case in 0..40 {
        let (h, w) = (rng.random_range(1..=8), rng.random_range(1..=8));
        let unit = FourierUnit::init(rng.random_range(1..=3), rng.random_range(1..=3), &mut rng);
        let x = init::normal(&[rng.random_range(1..=2), unit.in_channels(), h, w], 1.0, &mut rng);
        let got = unit.forward(&x).unwrap();
        assert_close(&got, &fourier_unit_dft(&x, &unit), 1e-9, &format!("case {case} {h}x{w}"));
    }
}

#[test]
fn spectral_multiplier_is_circular_convolution() {
    let mut rng = init::rng(16);
    for (h, w) in [(8, 8), (8, 7), (7, 8), (5, 6)] {
        let (a, b) = (rng.random_range(-2.0..2.0), rng.random_range(-2.0..2.0));
        let x = init::normal(&[1, 1, h, w], 1.0, &mut rng);
        let got = FourierUnit::diagonal(&[(a, b)]).forward(&x).unwrap();
        let k = multiplier_kernel(a, b, h, w);
        let want = Tensor::new(&[1, 1, h, w], circular_conv(x.data(), &k, h, w)).unwrap();
        assert_close(&got, &want, 1e-8, &format!("{h}x{w}"));
    }
}

#[test]
fn identity_fourier_unit_round_trips() {
    let x = init::normal(&[1, 2, 8, 8], 1.0, &mut init::rng(17));
    assert_close(&FourierUnit::identity(2).forward(&x).unwrap(), &x, 1e-12, "identity");
}

fn roll(x: &Tensor, dy: usize, dx: usize) -> Tensor {
    let [n, c, h, w] = x.dims4();
    Tensor::from_fn4([n, c, h, w], |ni, ci, y, xx| x.get4(ni, ci, (y + h - dy) % h, (xx + w - dx) % w))
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn global_branch_is_linear(seed in 0u64..10_000, h in 1usize..9, w in 1usize..9, a in -3.0f64..3.0, b in -3.0f64..3.0) {
        let mut rng = init::rng(seed);
        let unit = FourierUnit::init(2, 2, &mut rng);
        let x = init::normal(&[1, 2, h, w], 1.0, &mut rng);
        let y = init::normal(&[1, 2, h, w], 1.0, &mut rng);
        let lhs = unit.forward(&x.scale(a).add(&y.scale(b)).unwrap()).unwrap();
        let rhs = unit.forward(&x).unwrap().scale(a).add(&unit.forward(&y).unwrap().scale(b)).unwrap();
        prop_assert!(lhs.max_abs_diff(&rhs).unwrap() < 1e-10);
    }

    #[test]
    fn global_branch_commutes_with_cyclic_shift(seed in 0u64..10_000, h in 1usize..9, w in 1usize..9, dy in 0usize..8, dx in 0usize..8) {
        let mut rng = init::rng(seed);
        let unit = FourierUnit::init(2, 3, &mut rng);
        let x = init::normal(&[1, 2, h, w], 1.0, &mut rng);
        let (dy, dx) = (dy % h, dx % w);
        let a = unit.forward(&roll(&x, dy, dx)).unwrap();
        let b = roll(&unit.forward(&x).unwrap(), dy, dx);
        prop_assert!(a.max_abs_diff(&b).unwrap() < 1e-9);
    }
}

#[test]
fn ffc_layer_mixes_branches_as_composed() {
    let mut rng = init::rng(18);
    let layer = FfcLayer::init(8, 4, 0.5, &mut rng).unwrap();
    let x = init::normal(&[1, 8, 6, 5], 1.0, &mut rng);
    let got = layer.forward(&x).unwrap();
    let xl = x.channels(0, 4).unwrap();
    let xg = x.channels(4, 4).unwrap();
    let s = ConvSpec::same(3);
    let yl = conv2d_loop(&xl, &layer.l2l.weight, None, s)
        .add(&conv2d_loop(&xg, &layer.g2l.weight, None, s))
        .unwrap();
    let yg = conv2d_loop(&xl, &layer.l2g.weight, None, s)
        .add(&fourier_unit_dft(&xg, &layer.g2g))
        .unwrap();
    assert_close(&got, &Tensor::concat_channels(&[&yl, &yg]).unwrap(), 1e-10, "ffc layer");
}

#[test]
fn lka_impulse_support_matches_composition() {
    for k in [14, 21, 28] {
        let block = LkaBlock::init(2, k, 3, &mut init::rng(k as u64)).unwrap();
        let bb = impulse_rf(|x| block.attention(x), 2, 1, 48).unwrap();
        let want = lka_support(k, 3).unwrap();
        assert_eq!((bb.height(), bb.width()), (want, want), "K={k}");
    }
}

#[test]
fn depthwise_stages_keep_channels_apart() {
    let mut rng = init::rng(19);
    let block = LkaBlock::init(3, 21, 3, &mut rng).unwrap();
    let mut x = init::normal(&[1, 3, 16, 16], 1.0, &mut rng);
    x.plane_mut(0, 1).fill(0.0);
    let a = block.local.forward(&x).unwrap();
    let a_no_bias = a.plane(0, 1).iter().all(|&v| v == block.local.layer.bias.as_ref().unwrap().data()[1]);
    assert!(a_no_bias);
    let mut local = block.local.clone();
    let mut dilated = block.dilated.clone();
    local.layer.bias = None;
    dilated.layer.bias = None;
    let b = dilated.forward(&local.forward(&x).unwrap()).unwrap();
    assert!(b.plane(0, 1).iter().all(|&v| v == 0.0));
    assert!(b.plane(0, 0).iter().any(|&v| v != 0.0));
}

#[test]
fn zerora_gradient_at_zero_is_identity() {
    let mut rng = init::rng(20);
    let x0 = init::normal(&[1, 2, 3, 3], 1.0, &mut rng);
    let g = init::normal(&[1, 2, 3, 3], 1.0, &mut rng);
    let mut tape = Tape::new();
    let x = tape.leaf(x0.clone());
    let alpha = tape.leaf(Tensor::scalar(0.0));
    let fx = tape.activation(x, Activation::Tanh);
    let out = record_zerora(&mut tape, x, fx, alpha).unwrap();
    assert_eq!(tape.value(out), &x0);
    let gc = tape.constant(g.clone());
    let weighted = tape.mul(out, gc).unwrap();
    let loss = tape.sum(weighted);
    let grads = tape.backward(loss).unwrap();
    assert_eq!(grads.wrt(x, &x0), g);
    let numeric = finite_diff(|v| v.mul(&g).unwrap().sum(), &x0, 1e-5);
    assert_close(&grads.wrt(x, &x0), &numeric, 1e-8, "finite differences");
    let d_alpha = grads.wrt(alpha, &Tensor::scalar(0.0)).item();
    let want = x0.map(f64::tanh).mul(&g).unwrap().sum();
    assert!((d_alpha - want).abs() < 1e-12);
}

#[test]
fn sfe_inject_matches_recomposition() {
    let mut rng = init::rng(21);
    for _ in 0..10 {
        let conv = ConvLayer::new(3, 4, ConvSpec::same(3), true, &mut rng);
        let bn = BatchNorm::randomized(4, &mut rng);
        let x = init::normal(&[1, 3, 6, 6], 1.0, &mut rng);
        let s = init::normal(&[1, 3, 6, 6], 1.0, &mut rng);
        let alpha = rng.random_range(-1.0..1.0);
        let got = sfe_inject(&x, &s, alpha, &conv, &bn, Activation::Relu).unwrap();
        let sum = x.zip_map(&s, "t", |a, b| a + alpha * b).unwrap();
        let y = conv2d_loop(&sum, &conv.weight, conv.bias.as_ref(), conv.spec);
        let want = Tensor::from_fn4([1, 4, 6, 6], |n, c, r, col| {
            let v = (y.get4(n, c, r, col) - bn.mean[c]) / (bn.var[c] + bn.eps).sqrt() * bn.gamma[c] + bn.beta[c];
            v.max(0.0)
        });
        assert_close(&got, &want, 1e-12, "sfe_inject");
    }
    let conv = ConvLayer::new(3, 4, ConvSpec::same(3), true, &mut rng);
    let bad = sfe_inject(&Tensor::zeros(&[1, 3, 4, 4]), &Tensor::zeros(&[1, 3, 4, 5]), 0.0, &conv, &BatchNorm::new(4), Activation::Relu);
    assert!(bad.is_err());
}

#[test]
fn gated_conv_matches_recomposition() {
    let mut rng = init::rng(22);
    let g = GatedConv::init(3, 2, ConvSpec::new(3, 3).stride(2).pad(1), false, &mut rng);
    let x = init::normal(&[2, 3, 7, 6], 1.0, &mut rng);
    let f = g.feature.forward(&x).unwrap();
    let s = g.gate.forward(&x).unwrap();
    let want = f.zip_map(&s, "t", |a, b| a * Activation::Sigmoid.apply(b)).unwrap();
    assert_eq!(g.forward(&x).unwrap(), want);
}

fn check_against_table(role: Role, fraction: f64, size: usize) {
    let name = role.name();
    let schedule = assemble(&ModelSpec::new(role).width(fraction).size(size)).unwrap();
    let rows = schedule.trace(size, size).unwrap();
    let table = layer_table(name);
    assert_eq!(rows.len(), table.len(), "{name} row count");
    let scale = 256 / size;
    for (row, (label, c, side)) in rows.iter().zip(table) {
        let want_c = if row.label.contains("Sigmoid") || row.label.contains("Tanh") {
            c
        } else {
            ((c as f64 * fraction).round() as usize).max(1)
        };
        assert_eq!(row.label, label, "{name}");
        assert_eq!((row.channels, row.h, row.w), (want_c, side / scale, side / scale), "{name} {label}");
    }
}

#[test]
fn full_width_schedules_match_layer_table() {
    for role in [Role::Tsr, Role::Sfe, Role::Ftr] {
        check_against_table(role, 1.0, 256);
    }
}

#[test]
fn eighth_width_keeps_stride_pattern() {
    for role in [Role::Tsr, Role::Sfe, Role::Ftr] {
        check_against_table(role, 0.125, 64);
    }
}

#[test]
fn small_networks_run_the_traced_shapes() {
    for role in [Role::Tsr, Role::Sfe, Role::Ftr] {
        let spec = ModelSpec::new(role).width(0.125).size(64).blocks(2);
        let schedule = assemble(&spec).unwrap();
        let net = schedule.build(3).unwrap();
        let x = init::normal(&[1, spec.in_channels, 64, 64], 1.0, &mut init::rng(4));
        let out = net.run(&x, None).unwrap();
        assert_eq!(out.trace, schedule.trace(64, 64).unwrap(), "{}", role.name());
        assert!(out.output.all_finite());
    }
}

#[test]
fn sfe_emits_four_maps_at_strides_8_4_2_1() {
    let spec = ModelSpec::new(Role::Sfe).width(0.125).size(64);
    let net = assemble(&spec).unwrap().build(5).unwrap();
    let x = init::normal(&[1, 3, 64, 48], 1.0, &mut init::rng(6));
    let out = net.run(&x, None).unwrap();
    let strides: Vec<(usize, usize)> = out.emitted.iter().map(|t| (64 / t.dims4()[2], 48 / t.dims4()[3])).collect();
    assert_eq!(strides, vec![(8, 8), (4, 4), (2, 2), (1, 1)]);
}

#[test]
fn zero_alpha_injection_preserves_texture_output() {
    let spec = ModelSpec::new(Role::Ftr).width(0.125).size(64).blocks(2);
    let mut plain = assemble(&spec).unwrap().build(7).unwrap();
    plain.randomize_norms(8);
    let mut injected = assemble(&spec.clone().inject(true)).unwrap().build(7).unwrap();
    injected.randomize_norms(8);
    let sfe = assemble(&ModelSpec::new(Role::Sfe).width(0.125).size(64)).unwrap().build(9).unwrap();
    let state = ZeroRaState::new();
    let mut rng = init::rng(10);
    for _ in 0..3 {
        let x = init::normal(&[1, 4, 64, 64], 1.0, &mut rng);
        let maps = sfe.run(&init::normal(&[1, 3, 64, 64], 1.0, &mut rng), None).unwrap().emitted;
        let a = plain.forward(&x).unwrap();
        let b = injected.run(&x, Some(Injection { maps: &maps, state: &state })).unwrap().output;
        assert_eq!(a, b);
        let live = ZeroRaState { alpha: [0.5; 4] };
        let c = injected.run(&x, Some(Injection { maps: &maps, state: &live })).unwrap().output;
        assert_ne!(a, c);
    }
    assert!(injected.run(&init::normal(&[1, 4, 64, 64], 1.0, &mut rng), None).is_err());
}

#[test]
fn ftr_head_is_bounded() {
    let spec = ModelSpec::new(Role::Ftr).width(0.125).size(64).blocks(1);
    let net = assemble(&spec).unwrap().build(11).unwrap();
    let y = net.forward(&init::normal(&[1, 4, 64, 64], 3.0, &mut init::rng(12))).unwrap();
    assert!(y.data().iter().all(|v| v.abs() <= 1.0));
}
