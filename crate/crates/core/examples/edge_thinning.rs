//! Thins a blurred ridge with edge non-maximum suppression and fuses the
//! result back into the raw map at the 0.25 threshold.

use inpaint_core::priors::{edge_nms, enms_fuse, DEFAULT_FUSE_THRESHOLD};
use inpaint_core::Tensor;

fn main() -> inpaint_core::Result<()> {
    let (cx, t, sigma) = (9.3, 1.3f64, 1.4);
    let raw = Tensor::from_fn4([1, 1, 16, 20], |_, _, y, x| {
        let d = (y as f64 - 8.0) * t.cos() - (x as f64 - cx) * t.sin();
        0.9 * (-d * d / (2.0 * sigma * sigma)).exp()
    });
    let thin = edge_nms(&raw);
    let fused = enms_fuse(&raw, &thin, DEFAULT_FUSE_THRESHOLD)?;
    let count = |m: &Tensor, th: f64| m.data().iter().filter(|&&v| v >= th).count();
    println!("pixels >= 0.25: raw {}, thinned {}", count(&raw, 0.25), count(&thin, 0.25));
    for y in 0..16 {
        let row: String = (0..20)
            .map(|x| match fused.get4(0, 0, y, x) {
                v if v == 1.0 => '#',
                v if v > 0.0 => '.',
                _ => ' ',
            })
            .collect();
        println!("|{row}|");
    }
    Ok(())
}
