//! Anti-aliased line rendering by exact area coverage.
//!
//! Pixel `(x, y)` is the unit square centred on integer coordinates `(x, y)`.
//! A segment is drawn as a width-1 rectangle around its centre line, extended
//! by half a pixel past each endpoint, and each pixel takes the area of its
//! square covered by that rectangle. Overlapping segments combine by max.

use rand::Rng;

use crate::error::{Error, Result};
use crate::init::SeededRng;
use crate::tensor::Tensor;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct LineSegment {
    pub x1: f64,
    pub y1: f64,
    pub x2: f64,
    pub y2: f64,
}

impl LineSegment {
    /// Rejects zero-length and non-finite segments.
    pub fn new(x1: f64, y1: f64, x2: f64, y2: f64) -> Result<Self> {
        if ![x1, y1, x2, y2].iter().all(|v| v.is_finite()) {
            return Err(Error::invalid("segment", "non-finite coordinate"));
        }
        if x1 == x2 && y1 == y2 {
            return Err(Error::invalid("segment", "zero-length segment"));
        }
        Ok(Self { x1, y1, x2, y2 })
    }

    pub fn length(&self) -> f64 {
        (self.x2 - self.x1).hypot(self.y2 - self.y1)
    }

    /// The same segment on a grid `s` times finer: pixel edges map to pixel
    /// edges, so `p ↦ s·(p + ½) − ½`.
    pub fn scaled(&self, s: f64) -> Self {
        let f = |p: f64| s * (p + 0.5) - 0.5;
        Self {
            x1: f(self.x1),
            y1: f(self.y1),
            x2: f(self.x2),
            y2: f(self.y2),
        }
    }

    /// Corners of the capped width-1 rectangle, counter-clockwise.
    fn footprint(&self) -> [(f64, f64); 4] {
        let len = self.length();
        let (ux, uy) = ((self.x2 - self.x1) / len, (self.y2 - self.y1) / len);
        let (tx, ty) = (0.5 * ux, 0.5 * uy);
        let (nx, ny) = (-0.5 * uy, 0.5 * ux);
        let (ax, ay) = (self.x1 - tx, self.y1 - ty);
        let (bx, by) = (self.x2 + tx, self.y2 + ty);
        [
            (ax - nx, ay - ny),
            (bx - nx, by - ny),
            (bx + nx, by + ny),
            (ax + nx, ay + ny),
        ]
    }
}

/// Sutherland–Hodgman clip against one axis-aligned half-plane.
fn clip(poly: &[(f64, f64)], inside: impl Fn((f64, f64)) -> f64) -> Vec<(f64, f64)> {
    let mut out = Vec::with_capacity(poly.len() + 2);
    for i in 0..poly.len() {
        let p = poly[i];
        let q = poly[(i + 1) % poly.len()];
        let (dp, dq) = (inside(p), inside(q));
        if dp >= 0.0 {
            out.push(p);
        }
        if (dp >= 0.0) != (dq >= 0.0) {
            let t = dp / (dp - dq);
            out.push((p.0 + t * (q.0 - p.0), p.1 + t * (q.1 - p.1)));
        }
    }
    out
}

fn area(poly: &[(f64, f64)]) -> f64 {
    let mut a = 0.0;
    for i in 0..poly.len() {
        let (x0, y0) = poly[i];
        let (x1, y1) = poly[(i + 1) % poly.len()];
        a += x0 * y1 - x1 * y0;
    }
    0.5 * a.abs()
}

fn pixel_coverage(rect: &[(f64, f64); 4], px: f64, py: f64) -> f64 {
    let mut poly = rect.to_vec();
    poly = clip(&poly, |(x, _)| x - (px - 0.5));
    poly = clip(&poly, |(x, _)| (px + 0.5) - x);
    poly = clip(&poly, |(_, y)| y - (py - 0.5));
    poly = clip(&poly, |(_, y)| (py + 0.5) - y);
    if poly.len() < 3 {
        0.0
    } else {
        area(&poly).min(1.0)
    }
}

/// Renders `segs` into an `h×w` map with values in `[0, 1]`.
///
/// Endpoints must lie in `[0, w]×[0, h]`; the error names the first offending
/// segment by index.
pub fn rasterize_lines(segs: &[LineSegment], h: usize, w: usize) -> Result<Tensor> {
    let mut out = Tensor::zeros(&[h, w]);
    for (i, s) in segs.iter().enumerate() {
        let inside = |x: f64, y: f64| (0.0..=w as f64).contains(&x) && (0.0..=h as f64).contains(&y);
        if !inside(s.x1, s.y1) || !inside(s.x2, s.y2) {
            return Err(Error::invalid(
                "rasterize_lines",
                format!("segment {i} has an endpoint outside [0, {w}]x[0, {h}]"),
            ));
        }
        draw(&mut out, s, h, w);
    }
    Ok(out)
}

fn draw(out: &mut Tensor, s: &LineSegment, h: usize, w: usize) {
    let rect = s.footprint();
    let (mut x0, mut x1, mut y0, mut y1) = (f64::MAX, f64::MIN, f64::MAX, f64::MIN);
    for &(x, y) in &rect {
        x0 = x0.min(x);
        x1 = x1.max(x);
        y0 = y0.min(y);
        y1 = y1.max(y);
    }
    let lo = |v: f64| (v - 0.5).ceil().max(0.0) as usize;
    let hi = |v: f64, n: usize| ((v + 0.5).floor().max(-1.0) as isize).min(n as isize - 1);
    let (cx0, cx1) = (lo(x0), hi(x1, w));
    let (cy0, cy1) = (lo(y0), hi(y1, h));
    let data = out.data_mut();
    for py in cy0 as isize..=cy1 {
        for px in cx0 as isize..=cx1 {
            let c = pixel_coverage(&rect, px as f64, py as f64);
            let v = &mut data[py as usize * w + px as usize];
            if c > *v {
                *v = c;
            }
        }
    }
}

/// Uniform random segments with endpoints on `[0, size − 1]²` and length at
/// least `min_len`.
pub fn random_segments(rng: &mut SeededRng, count: usize, size: usize, min_len: f64) -> Vec<LineSegment> {
    let hi = (size - 1) as f64;
    let mut out = Vec::with_capacity(count);
    while out.len() < count {
        let s = LineSegment {
            x1: rng.random_range(0.0..=hi),
            y1: rng.random_range(0.0..=hi),
            x2: rng.random_range(0.0..=hi),
            y2: rng.random_range(0.0..=hi),
        };
        if s.length() >= min_len {
            out.push(s);
        }
    }
    out
}

/// Fraction of base ridge pixels (value ≥ ½) whose `s×s` max-pooled
/// counterpart in `fine` is also ≥ ½. Returns 1 for a map without ridges.
pub fn ridge_agreement(base: &Tensor, fine: &Tensor, s: usize) -> Result<f64> {
    let pooled = crate::tensor::pool2d(fine, s, crate::tensor::PoolMode::Max)?;
    base.ensure_same_shape(&pooled, "ridge_agreement")?;
    let (mut ridge, mut hit) = (0usize, 0usize);
    for (&b, &p) in base.data().iter().zip(pooled.data()) {
        if b >= 0.5 {
            ridge += 1;
            if p >= 0.5 {
                hit += 1;
            }
        }
    }
    Ok(if ridge == 0 { 1.0 } else { hit as f64 / ridge as f64 })
}
