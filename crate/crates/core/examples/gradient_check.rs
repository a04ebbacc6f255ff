//! Checks reverse-mode gradients of a small conv, swish and pooling stack
//! against central differences.

use inpaint_core::autodiff::{grad_check, GradReport};
use inpaint_core::init;
use inpaint_core::tensor::{Activation, ConvSpec, PoolMode};

fn main() -> inpaint_core::Result<()> {
    let mut rng = init::rng(5);
    let x = init::normal(&[1, 2, 6, 6], 1.0, &mut rng);
    let w = init::normal(&[3, 2, 3, 3], 0.5, &mut rng);
    let b = init::normal(&[3], 0.1, &mut rng);
    let reports = grad_check(
        |t, ids| {
            let y = t.conv2d(ids[0], ids[1], Some(ids[2]), ConvSpec::same(3))?;
            let y = t.activation(y, Activation::Swish);
            let y = t.pool(y, 2, PoolMode::Avg)?;
            Ok(t.mean(y))
        },
        &[("x", x), ("w", w), ("b", b)],
        1e-5,
    )?;
    println!("{}", GradReport::CSV_HEADER);
    for r in &reports {
        println!("{r}");
    }
    Ok(())
}
