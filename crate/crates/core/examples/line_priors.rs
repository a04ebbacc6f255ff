//! Rasterizes two segments with exact area coverage, then takes Sobel
//! gradients of the result.

use inpaint_core::priors::{rasterize_lines, sobel_gradients, LineSegment};

fn main() -> inpaint_core::Result<()> {
    let segs = [LineSegment::new(2.0, 3.0, 21.0, 12.5)?, LineSegment::new(4.0, 14.0, 18.0, 14.0)?];
    let raster = rasterize_lines(&segs, 18, 24)?;
    let shade = |v: f64| [' ', '.', ':', '+', '#'][((v * 4.0).round() as usize).min(4)];
    for y in 0..18 {
        let row: String = (0..24).map(|x| shade(raster.get4(0, 0, y, x))).collect();
        println!("|{row}|");
    }
    let img = raster.reshape(&[1, 1, 18, 24])?;
    let g = sobel_gradients(&img);
    let magnitude = g.gx.zip_map(&g.gy, "magnitude", |a, b| a.hypot(b))?;
    let peak = magnitude.data().iter().cloned().fold(0.0, f64::max);
    println!("ink {:.2} px², peak gradient magnitude {peak:.3}", img.sum());
    Ok(())
}
