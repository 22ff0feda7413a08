//! 8-bit RGB image I/O: binary PPM (P6) and non-interlaced 8-bit RGB PNG.

use crate::error::{Error, Result};
use crate::image::LdrImage;

const PNG_SIGNATURE: [u8; 8] = [0x89, b'P', b'N', b'G', b'\r', b'\n', 0x1a, b'\n'];

/// A plain 8-bit RGB raster with no aspect-ratio or exposure constraints.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Rgb8Image {
    pub width: usize,
    pub height: usize,
    pub data: Vec<[u8; 3]>,
}

impl Rgb8Image {
    pub fn new(width: usize, height: usize, data: Vec<[u8; 3]>) -> Result<Self> {
        if data.len() != width * height {
            return Err(Error::InvalidDimensions {
                width,
                height,
                reason: "sample count does not match dimensions",
            });
        }
        Ok(Self { width, height, data })
    }

    fn flat(&self) -> Vec<u8> {
        self.data.iter().flatten().copied().collect()
    }
}

impl From<&LdrImage> for Rgb8Image {
    fn from(ldr: &LdrImage) -> Self {
        Self {
            width: ldr.width(),
            height: ldr.height(),
            data: ldr.pixels().to_vec(),
        }
    }
}

/// Decodes a PPM or PNG stream, chosen by its magic bytes.
pub fn decode_rgb8(bytes: &[u8]) -> Result<Rgb8Image> {
    if bytes.starts_with(&PNG_SIGNATURE) {
        decode_png(bytes)
    } else if bytes.starts_with(b"P6") {
        decode_ppm(bytes)
    } else {
        Err(Error::UnsupportedImage("neither a P6 PPM nor a PNG stream".into()))
    }
}

/// Loads an LDR panorama and attaches its exposure time.
pub fn read_ldr(bytes: &[u8], exposure_ms: f64) -> Result<LdrImage> {
    let raster = decode_rgb8(bytes)?;
    LdrImage::new(raster.width, raster.height, raster.data, exposure_ms)
}

pub fn decode_ppm(bytes: &[u8]) -> Result<Rgb8Image> {
    let malformed = |m: &str| Error::MalformedImage(format!("PPM: {m}"));
    if !bytes.starts_with(b"P6") {
        return Err(malformed("missing P6 magic"));
    }
    let mut pos = 2;
    let mut fields = [0usize; 3];
    for field in &mut fields {
        // whitespace and comments
        loop {
            match bytes.get(pos) {
                Some(b) if b.is_ascii_whitespace() => pos += 1,
                Some(b'#') => {
                    while bytes.get(pos).is_some_and(|&b| b != b'\n') {
                        pos += 1;
                    }
                }
                Some(_) => break,
                None => return Err(malformed("header ends early")),
            }
        }
        let start = pos;
        while bytes.get(pos).is_some_and(u8::is_ascii_digit) {
            pos += 1;
        }
        if start == pos || pos - start > 9 {
            return Err(malformed("bad header number"));
        }
        *field = std::str::from_utf8(&bytes[start..pos])
            .ok()
            .and_then(|s| s.parse().ok())
            .ok_or_else(|| malformed("bad header number"))?;
    }
    let [width, height, maxval] = fields;
    if !bytes.get(pos).is_some_and(u8::is_ascii_whitespace) {
        return Err(malformed("missing separator after maxval"));
    }
    pos += 1;
    if maxval != 255 {
        return Err(Error::UnsupportedImage(format!("PPM maxval {maxval}, only 8-bit (255) is supported")));
    }
    let need = width
        .checked_mul(height)
        .and_then(|n| n.checked_mul(3))
        .ok_or_else(|| malformed("dimensions overflow"))?;
    let body = bytes
        .get(pos..)
        .filter(|b| b.len() >= need)
        .ok_or_else(|| malformed("pixel data truncated"))?;
    let data = body[..need].chunks_exact(3).map(|p| [p[0], p[1], p[2]]).collect();
    Rgb8Image::new(width, height, data)
}

pub fn encode_ppm(image: &Rgb8Image) -> Vec<u8> {
    let mut out = format!("P6\n{} {}\n255\n", image.width, image.height).into_bytes();
    out.extend(image.flat());
    out
}

pub fn decode_png(bytes: &[u8]) -> Result<Rgb8Image> {
    let decoder = png::Decoder::new(bytes);
    let mut reader = decoder
        .read_info()
        .map_err(|e| Error::MalformedImage(format!("PNG: {e}")))?;
    let info = reader.info();
    if info.bit_depth != png::BitDepth::Eight {
        return Err(Error::UnsupportedImage(format!(
            "PNG bit depth {:?}, only 8-bit is supported",
            info.bit_depth
        )));
    }
    if info.color_type != png::ColorType::Rgb {
        return Err(Error::UnsupportedImage(format!(
            "PNG color type {:?}, only RGB is supported",
            info.color_type
        )));
    }
    if info.interlaced {
        return Err(Error::UnsupportedImage("interlaced PNG".into()));
    }
    let (width, height) = (info.width as usize, info.height as usize);
    let mut buf = vec![0; reader.output_buffer_size()];
    let frame = reader
        .next_frame(&mut buf)
        .map_err(|e| Error::MalformedImage(format!("PNG: {e}")))?;
    let data = buf[..frame.buffer_size()]
        .chunks_exact(3)
        .map(|p| [p[0], p[1], p[2]])
        .collect();
    Rgb8Image::new(width, height, data)
}

pub fn encode_png(image: &Rgb8Image) -> Result<Vec<u8>> {
    let mut out = Vec::new();
    {
        let mut encoder = png::Encoder::new(&mut out, image.width as u32, image.height as u32);
        encoder.set_color(png::ColorType::Rgb);
        encoder.set_depth(png::BitDepth::Eight);
        let mut writer = encoder
            .write_header()
            .map_err(|e| Error::MalformedImage(format!("PNG: {e}")))?;
        writer
            .write_image_data(&image.flat())
            .map_err(|e| Error::MalformedImage(format!("PNG: {e}")))?;
    }
    Ok(out)
}
