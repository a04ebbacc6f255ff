//! Plain file formats used by the command line: ZTEN tensor dumps, binary
//! Netpbm images, segment lists and parameter directories.

mod netpbm;
mod params;
mod segments;
mod zten;

pub use netpbm::{
    gray_from_tensor, mask_from_gray, mask_to_gray, read_pgm, read_ppm, rgb_from_tensor, write_pgm,
    write_ppm, Gray, Rgb,
};
pub use params::{load_params, save_params, MANIFEST};
pub use segments::{format_segments, parse_segments, read_segments};
pub use zten::{read_zten, write_zten, zten_from_bytes, zten_to_bytes};
