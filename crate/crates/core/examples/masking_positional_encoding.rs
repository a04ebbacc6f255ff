//! Encodes a rectangular hole: distance to the nearest known pixel, the
//! directions the hole is first covered from, and the summed encoding.

use inpaint_core::init;
use inpaint_core::mpe::{mpe, mpe_parts, DEFAULT_D_MAX};
use inpaint_core::Tensor;

fn main() -> inpaint_core::Result<()> {
    let mask = Tensor::from_fn4([1, 1, 16, 24], |_, _, y, x| {
        if (4..12).contains(&y) && (3..15).contains(&x) { 1.0 } else { 0.0 }
    });
    let d = 8;
    let w_dir = init::normal(&[1, 1, 4, d], 0.02, &mut init::rng(0));
    let parts = mpe_parts(&mask, &w_dir, d, DEFAULT_D_MAX)?;

    println!("distance to the nearest known pixel:");
    for y in 0..16 {
        let row: String = (0..24).map(|x| format!("{:2}", parts.distance.get4(0, 0, y, x))).collect();
        println!("{row}");
    }
    println!("\ncovered first from (left/right/up/down), row 8:");
    for x in 2..16 {
        let dirs: Vec<u8> = (0..4).map(|k| parts.directions.labels.get4(0, k, 8, x) as u8).collect();
        println!("  x={x:2} {dirs:?}");
    }
    let enc = mpe(&mask, &w_dir, d, DEFAULT_D_MAX, 32, 48)?;
    println!("\nencoding resized to the feature grid: {:?}", enc.shape());
    Ok(())
}
