//! File formats: Radiance RGBE for HDR panoramas, PPM/PNG for 8-bit shots.

mod ldr;
mod rgbe;

pub use ldr::{decode_png, decode_ppm, decode_rgb8, encode_png, encode_ppm, read_ldr, Rgb8Image};
pub use rgbe::{
    decode_pixel, decode_rgbe, encode_pixel, encode_rgbe, read_rgbe, read_rgbe_with_header, write_rgbe,
    write_rgbe_with, RgbeHeader, ScanlineEncoding, FORMAT_TAG,
};
