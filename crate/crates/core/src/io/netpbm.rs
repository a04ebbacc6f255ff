//! Binary PGM (P5) and PPM (P6), 8- or 16-bit by maxval. 16-bit samples are
//! big-endian as the format requires.

use std::fs;
use std::path::Path;

use crate::error::{Error, Result};
use crate::tensor::Tensor;

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Gray {
    pub width: usize,
    pub height: usize,
    pub maxval: u16,
    pub data: Vec<u16>,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Rgb {
    pub width: usize,
    pub height: usize,
    pub maxval: u16,
    /// Interleaved `r, g, b` per pixel.
    pub data: Vec<u16>,
}

struct Header {
    width: usize,
    height: usize,
    maxval: u16,
    body: usize,
}

fn parse_header(bytes: &[u8], magic: &[u8; 2]) -> Result<Header> {
    let bad = |msg: String| Error::Format(format!("{}: {msg}", String::from_utf8_lossy(magic)));
    if bytes.len() < 2 || &bytes[..2] != magic {
        return Err(bad("wrong magic number".into()));
    }
    let mut pos = 2;
    let mut fields = [0usize; 3];
    for field in fields.iter_mut() {
        loop {
            match bytes.get(pos) {
                Some(b'#') => {
                    while bytes.get(pos).is_some_and(|&b| b != b'\n') {
                        pos += 1;
                    }
                }
                Some(b) if b.is_ascii_whitespace() => pos += 1,
                _ => break,
            }
        }
        let start = pos;
        while bytes.get(pos).is_some_and(u8::is_ascii_digit) {
            pos += 1;
        }
        *field = std::str::from_utf8(&bytes[start..pos])
            .ok()
            .and_then(|s| s.parse().ok())
            .ok_or_else(|| bad(format!("malformed header near byte {start}")))?;
    }
    if !bytes.get(pos).is_some_and(u8::is_ascii_whitespace) {
        return Err(bad("header must end with one whitespace byte".into()));
    }
    let [width, height, maxval] = fields;
    if width == 0 || height == 0 {
        return Err(bad("zero image extent".into()));
    }
    if maxval == 0 || maxval > 65535 {
        return Err(bad(format!("maxval {maxval} out of range")));
    }
    Ok(Header {
        width,
        height,
        maxval: maxval as u16,
        body: pos + 1,
    })
}

fn read_samples(bytes: &[u8], count: usize, maxval: u16) -> Result<Vec<u16>> {
    let wide = maxval > 255;
    let need = if wide { 2 * count } else { count };
    if bytes.len() < need {
        return Err(Error::Format(format!("image body has {} bytes, expected {need}", bytes.len())));
    }
    let samples: Vec<u16> = if wide {
        bytes[..need]
            .chunks_exact(2)
            .map(|c| u16::from_be_bytes([c[0], c[1]]))
            .collect()
    } else {
        bytes[..need].iter().map(|&b| b as u16).collect()
    };
    if let Some(v) = samples.iter().find(|&&v| v > maxval) {
        return Err(Error::Format(format!("sample {v} exceeds maxval {maxval}")));
    }
    Ok(samples)
}

fn encode(magic: &str, width: usize, height: usize, maxval: u16, data: &[u16]) -> Vec<u8> {
    let mut out = format!("{magic}\n{width} {height}\n{maxval}\n").into_bytes();
    if maxval > 255 {
        for &v in data {
            out.extend_from_slice(&v.to_be_bytes());
        }
    } else {
        out.extend(data.iter().map(|&v| v as u8));
    }
    out
}

pub fn read_pgm(path: impl AsRef<Path>) -> Result<Gray> {
    let path = path.as_ref();
    let bytes = fs::read(path).map_err(|e| Error::file(path, e))?;
    let h = parse_header(&bytes, b"P5")?;
    let data = read_samples(&bytes[h.body..], h.width * h.height, h.maxval)?;
    Ok(Gray {
        width: h.width,
        height: h.height,
        maxval: h.maxval,
        data,
    })
}

pub fn write_pgm(path: impl AsRef<Path>, img: &Gray) -> Result<()> {
    let path = path.as_ref();
    fs::write(path, encode("P5", img.width, img.height, img.maxval, &img.data)).map_err(|e| Error::file(path, e))?;
    Ok(())
}

pub fn read_ppm(path: impl AsRef<Path>) -> Result<Rgb> {
    let path = path.as_ref();
    let bytes = fs::read(path).map_err(|e| Error::file(path, e))?;
    let h = parse_header(&bytes, b"P6")?;
    let data = read_samples(&bytes[h.body..], 3 * h.width * h.height, h.maxval)?;
    Ok(Rgb {
        width: h.width,
        height: h.height,
        maxval: h.maxval,
        data,
    })
}

pub fn write_ppm(path: impl AsRef<Path>, img: &Rgb) -> Result<()> {
    let path = path.as_ref();
    fs::write(path, encode("P6", img.width, img.height, img.maxval, &img.data)).map_err(|e| Error::file(path, e))?;
    Ok(())
}

fn quantize(v: f64, maxval: u16) -> u16 {
    (v.clamp(0.0, 1.0) * maxval as f64).round() as u16
}

impl Gray {
    /// Values scaled to `[0, 1]` as an `H×W` tensor.
    pub fn to_tensor(&self) -> Tensor {
        let m = self.maxval as f64;
        Tensor::new(
            &[self.height, self.width],
            self.data.iter().map(|&v| v as f64 / m).collect(),
        )
        .expect("image extents are positive")
    }
}

impl Rgb {
    /// Planar `1×3×H×W` tensor with values in `[0, 1]`.
    pub fn to_tensor(&self) -> Tensor {
        let m = self.maxval as f64;
        Tensor::from_fn4([1, 3, self.height, self.width], |_, c, y, x| {
            self.data[3 * (y * self.width + x) + c] as f64 / m
        })
    }
}

/// Quantizes the first plane of `t` (values clamped to `[0, 1]`).
pub fn gray_from_tensor(t: &Tensor, maxval: u16) -> Gray {
    let [_, _, h, w] = t.dims4();
    Gray {
        width: w,
        height: h,
        maxval,
        data: t.plane(0, 0).iter().map(|&v| quantize(v, maxval)).collect(),
    }
}

/// Quantizes the first three channels of sample 0.
pub fn rgb_from_tensor(t: &Tensor, maxval: u16) -> Result<Rgb> {
    let [_, c, h, w] = t.dims4();
    if c < 3 {
        return Err(Error::invalid("rgb_from_tensor", format!("need 3 channels, have {c}")));
    }
    let mut data = Vec::with_capacity(3 * h * w);
    for y in 0..h {
        for x in 0..w {
            for ch in 0..3 {
                data.push(quantize(t.get4(0, ch, y, x), maxval));
            }
        }
    }
    Ok(Rgb {
        width: w,
        height: h,
        maxval,
        data,
    })
}

/// File convention: 0 = masked, maxval = known. Returns the in-memory mask
/// (1 = masked). Intermediate grays count as masked below half of maxval.
pub fn mask_from_gray(img: &Gray) -> Tensor {
    let half = img.maxval as u32;
    Tensor::new(
        &[img.height, img.width],
        img.data
            .iter()
            .map(|&v| if 2 * (v as u32) < half { 1.0 } else { 0.0 })
            .collect(),
    )
    .expect("image extents are positive")
}

/// Inverse of [`mask_from_gray`] at 8 bits.
pub fn mask_to_gray(mask: &Tensor) -> Gray {
    let [_, _, h, w] = mask.dims4();
    Gray {
        width: w,
        height: h,
        maxval: 255,
        data: mask.plane(0, 0).iter().map(|&v| if v >= 0.5 { 0 } else { 255 }).collect(),
    }
}
