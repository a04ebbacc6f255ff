//! The Fourier unit's spectral mixing commutes with cyclic shifts, and a
//! zero-initialised residual gate returns its input untouched.

use inpaint_core::blocks::{zerora_apply, FourierUnit};
use inpaint_core::init;
use inpaint_core::Tensor;

fn roll(x: &Tensor, dy: usize, dx: usize) -> Tensor {
    let [n, c, h, w] = x.dims4();
    Tensor::from_fn4([n, c, h, w], |a, b, y, xx| x.get4(a, b, (y + h - dy) % h, (xx + w - dx) % w))
}

fn main() -> inpaint_core::Result<()> {
    let mut rng = init::rng(9);
    let unit = FourierUnit::init(3, 3, &mut rng);
    let x = init::normal(&[1, 3, 12, 10], 1.0, &mut rng);
    let shifted_after = roll(&unit.forward(&x)?, 3, 7);
    let shifted_before = unit.forward(&roll(&x, 3, 7))?;
    println!("shift then mix vs mix then shift: max diff {:.2e}", shifted_after.max_abs_diff(&shifted_before)?);

    let f = |t: &Tensor| unit.forward(t);
    let start = zerora_apply(&x, f, 0.0)?;
    println!("alpha = 0 returns the input: {}", start == x);
    let later = zerora_apply(&x, f, 0.3)?;
    println!("alpha = 0.3 moves it by {:.3}", later.max_abs_diff(&x)?);
    Ok(())
}
