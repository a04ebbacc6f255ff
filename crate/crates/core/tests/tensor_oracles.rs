mod common;

use common::{assert_close, conv2d_loop, dft2, random_conv_case};
use inpaint_core::init;
use inpaint_core::tensor::{
    activate, conv2d, irfft2, pool2d, rfft2, transposed_conv2d, transposed_conv2d_to, Activation,
    ConvSpec, PoolMode,
};
use inpaint_core::Tensor;
use proptest::prelude::*;
use rand::Rng;

#[test]
fn conv2d_matches_loop_oracle() {
    let mut rng = init::rng(2024);
    for case in 0..100 {
        let (x, w, b, spec) = random_conv_case(&mut rng, 12);
        let got = conv2d(&x, &w, Some(&b), spec).unwrap();
        let want = conv2d_loop(&x, &w, Some(&b), spec);
        assert_close(&got, &want, 1e-12, &format!("case {case} {spec:?}"));
    }
}

#[test]
fn transposed_conv_is_adjoint() {
    let mut rng = init::rng(77);
    for case in 0..50 {
        let (x, w, _, spec) = random_conv_case(&mut rng, 12);
        let y = conv2d(&x, &w, None, spec).unwrap();
        let g = init::normal(y.shape(), 1.0, &mut rng);
        let [_, _, h, wd] = x.dims4();
        let back = transposed_conv2d_to(&g, &w, None, spec, (h, wd)).unwrap();
        let lhs = y.dot(&g).unwrap();
        let rhs = x.dot(&back).unwrap();
        assert!(
            (lhs - rhs).abs() <= 1e-10 * lhs.abs().max(1.0),
            "case {case}: {lhs} vs {rhs}"
        );
    }
}

#[test]
fn transposed_conv_default_size_formula() {
    let x = init::normal(&[1, 3, 5, 6], 1.0, &mut init::rng(1));
    let w = init::normal(&[3, 2, 4, 4], 1.0, &mut init::rng(2));
    let spec = ConvSpec::new(4, 4).stride(2).pad(1);
    let y = transposed_conv2d(&x, &w, None, spec).unwrap();
    assert_eq!(y.shape(), &[1, 2, 10, 12]);
    // the forward conv of the doubled map lands back on the input grid
    assert_eq!(spec.output_size(10, 12).unwrap(), (5, 6));
}

#[test]
fn pooling_matches_loop_oracle() {
    let mut rng = init::rng(5);
    for _ in 0..50 {
        let window = rng.random_range(1..=4);
        let (h, w) = (window * rng.random_range(1..=4), window * rng.random_range(1..=4));
        let x = init::normal(&[2, 2, h, w], 1.0, &mut rng);
        for mode in [PoolMode::Max, PoolMode::Avg] {
            let got = pool2d(&x, window, mode).unwrap();
            let want = Tensor::from_fn4([2, 2, h / window, w / window], |n, c, oy, ox| {
                let vals: Vec<f64> = (0..window * window)
                    .map(|i| x.get4(n, c, oy * window + i / window, ox * window + i % window))
                    .collect();
                match mode {
                    PoolMode::Max => vals.iter().cloned().fold(f64::NEG_INFINITY, f64::max),
                    PoolMode::Avg => vals.iter().sum::<f64>() / vals.len() as f64,
                }
            });
            assert_close(&got, &want, 1e-15, "pool");
        }
    }
}

#[test]
fn rfft2_matches_naive_dft() {
    let mut rng = init::rng(9);
    for _ in 0..30 {
        let h = rng.random_range(1..=16);
        let w = rng.random_range(1..=16);
        let x = init::normal(&[1, 1, h, w], 1.0, &mut rng);
        let s = rfft2(&x);
        let (re, im) = dft2(x.data(), h, w);
        let wh = w / 2 + 1;
        for ky in 0..h {
            for kx in 0..wh {
                let i = ky * wh + kx;
                assert!((s.re.data()[i] - re[ky * w + kx]).abs() < 1e-8, "{h}x{w} re ({ky},{kx})");
                assert!((s.im.data()[i] - im[ky * w + kx]).abs() < 1e-8, "{h}x{w} im ({ky},{kx})");
            }
        }
    }
}

#[test]
fn rfft2_round_trip_random() {
    let mut rng = init::rng(10);
    for _ in 0..50 {
        let h = rng.random_range(1..=24);
        let w = rng.random_range(1..=24);
        let x = init::normal(&[2, 3, h, w], 1.0, &mut rng);
        let back = irfft2(&rfft2(&x), h, w).unwrap();
        let rel = back.max_abs_diff(&x).unwrap() / x.max_abs();
        assert!(rel < 1e-9, "{h}x{w}: {rel:e}");
    }
}

#[test]
fn rfft2_is_linear() {
    let mut rng = init::rng(11);
    let a = init::normal(&[1, 1, 8, 6], 1.0, &mut rng);
    let b = init::normal(&[1, 1, 8, 6], 1.0, &mut rng);
    let combo = a.scale(2.5).add(&b.scale(-0.75)).unwrap();
    let (sa, sb, sc) = (rfft2(&a), rfft2(&b), rfft2(&combo));
    let want = sa.re.scale(2.5).add(&sb.re.scale(-0.75)).unwrap();
    assert_close(&sc.re, &want, 1e-12, "linearity (re)");
}

#[test]
fn activations_match_scalar_formulas() {
    let mut rng = init::rng(12);
    let x = init::uniform(&[1000], -30.0, 30.0, &mut rng);
    let sig = |v: f64| 1.0 / (1.0 + (-v).exp());
    let cases: [(Activation, &dyn Fn(f64) -> f64); 4] = [
        (Activation::Relu, &|v: f64| v.max(0.0)),
        (Activation::Sigmoid, &sig),
        (Activation::Tanh, &|v: f64| v.tanh()),
        (Activation::Swish, &|v: f64| v * sig(v)),
    ];
    for (kind, f) in cases {
        let got = activate(&x, kind);
        for (g, &v) in got.data().iter().zip(x.data()) {
            assert!((g - f(v)).abs() <= 1e-15 * f(v).abs().max(1.0), "{kind:?}({v})");
        }
    }
}

#[test]
fn repeated_calls_are_bitwise_identical() {
    let mut rng = init::rng(13);
    for _ in 0..10 {
        let (x, w, b, spec) = random_conv_case(&mut rng, 12);
        let a = conv2d(&x, &w, Some(&b), spec).unwrap();
        let again = conv2d(&x, &w, Some(&b), spec).unwrap();
        assert_eq!(a.data(), again.data());
    }
    let x = init::normal(&[1, 2, 9, 7], 1.0, &mut rng);
    assert_eq!(rfft2(&x), rfft2(&x));
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn pooling_preserves_constants(v in -5.0f64..5.0, k in 1usize..4, r in 1usize..4) {
        let x = Tensor::full(&[1, 1, k * r, k * 2], v);
        for mode in [PoolMode::Max, PoolMode::Avg] {
            let y = pool2d(&x, k, mode).unwrap();
            prop_assert!(y.data().iter().all(|&u| (u - v).abs() < 1e-14));
        }
    }

    #[test]
    fn conv_outputs_stay_finite(seed in 0u64..1000) {
        let (x, w, b, spec) = random_conv_case(&mut init::rng(seed), 8);
        prop_assert!(conv2d(&x, &w, Some(&b), spec).unwrap().all_finite());
    }
}
