mod common;

use common::gradsuite;
use inpaint_core::autodiff::{finite_diff, Tape};
use inpaint_core::init;
use inpaint_core::tensor::ConvSpec;

#[test]
fn every_op_matches_central_differences() {
    for r in gradsuite::run_all(31) {
        assert!(
            r.worst_rel <= 1e-5,
            "{}: worst relative error {:e} over {} instances",
            r.op,
            r.worst_rel,
            r.instances
        );
    }
}

#[test]
fn finite_diff_of_sum_is_ones() {
    let x = init::normal(&[3, 4], 1.0, &mut init::rng(1));
    let g = finite_diff(|t| t.sum(), &x, 1e-5);
    assert!(g.data().iter().all(|v| (v - 1.0).abs() < 1e-10));
}

#[test]
fn finite_diff_of_squares_is_twice_x() {
    let x = init::normal(&[3, 4], 1.0, &mut init::rng(2));
    let g = finite_diff(|t| t.dot(t).unwrap(), &x, 1e-5);
    assert!(g.max_abs_diff(&x.scale(2.0)).unwrap() < 1e-7);
}

#[test]
fn conv_sum_gradient_small_case() {
    let mut rng = init::rng(3);
    let x = init::normal(&[1, 2, 6, 6], 1.0, &mut rng);
    let w = init::normal(&[2, 2, 3, 3], 1.0, &mut rng);
    let spec = ConvSpec::new(3, 3);
    let mut tape = Tape::new();
    let (xi, wi) = (tape.leaf(x.clone()), tape.leaf(w.clone()));
    let y = tape.conv2d(xi, wi, None, spec).unwrap();
    let root = tape.sum(y);
    let grads = tape.backward(root).unwrap();
    let eval = |x: &inpaint_core::Tensor, w: &inpaint_core::Tensor| {
        inpaint_core::tensor::conv2d(x, w, None, spec).unwrap().sum()
    };
    let nx = finite_diff(|p| eval(p, &w), &x, 1e-5);
    let nw = finite_diff(|p| eval(&x, p), &w, 1e-5);
    for (a, n) in [(grads.wrt(xi, &x), nx), (grads.wrt(wi, &w), nw)] {
        let rel = a.max_abs_diff(&n).unwrap() / n.max_abs();
        assert!(rel <= 1e-6, "{rel:e}");
    }
}
