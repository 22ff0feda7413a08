//! Radiance `.hdr` (RGBE) reader and writer.
//!
//! Only the canonical `-Y H +X W` orientation and the `32-bit_rle_rgbe`
//! format are accepted. Scanlines are decoded from either flat quadruples
//! or new-style run-length encoding; the writer emits RLE for widths in
//! `[8, 32767]` and flat scanlines otherwise.

use crate::error::{Error, Result};
use crate::image::{HdrImage, Rgb};

pub const FORMAT_TAG: &str = "32-bit_rle_rgbe";

const MIN_RLE_WIDTH: usize = 8;
const MAX_RLE_WIDTH: usize = 0x7fff;
const MIN_RUN: usize = 4;
const MAX_HEADER_LINE: usize = 4096;

/// Metadata recovered from an RGBE header.
#[derive(Debug, Clone, PartialEq)]
pub struct RgbeHeader {
    pub format_tag: String,
    /// Product of every `EXPOSURE=` line, if any were present.
    pub exposure_meta: Option<f64>,
    pub height: usize,
    pub width: usize,
}

/// Scanline layout used when writing.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum ScanlineEncoding {
    /// RLE when the width allows it, flat otherwise.
    #[default]
    Auto,
    Flat,
}

/// Splits one RGB triple into a shared-exponent quadruple.
///
/// Mantissas are rounded to nearest, so the largest component is
/// reproduced within 1/256 relative and the others within 1/256 of the
/// largest.
pub fn encode_pixel(rgb: Rgb) -> Option<[u8; 4]> {
    if rgb.iter().any(|v| !v.is_finite() || *v < 0.0) {
        return None;
    }
    let max = rgb[0].max(rgb[1]).max(rgb[2]);
    if max == 0.0 {
        return Some([0; 4]);
    }
    let (_, mut exp) = frexp(max);
    loop {
        if exp + 128 < 1 {
            return Some([0; 4]);
        }
        if exp + 128 > 255 {
            return None;
        }
        let scale = 2f64.powi(8 - exp);
        let m = rgb.map(|v| (v * scale).round());
        if m.iter().any(|&x| x > 255.0) {
            exp += 1;
            continue;
        }
        return Some([m[0] as u8, m[1] as u8, m[2] as u8, (exp + 128) as u8]);
    }
}

pub fn decode_pixel(q: [u8; 4]) -> Rgb {
    if q[3] == 0 {
        return [0.0; 3];
    }
    let f = 2f64.powi(q[3] as i32 - 136);
    [q[0] as f64 * f, q[1] as f64 * f, q[2] as f64 * f]
}

/// `x = frac * 2^exp` with `frac` in `[0.5, 1)`; `x` must be positive and finite.
fn frexp(x: f64) -> (f64, i32) {
    let mut exp = x.log2().floor() as i32 + 1;
    let mut frac = x / 2f64.powi(exp);
    while frac >= 1.0 {
        frac /= 2.0;
        exp += 1;
    }
    while frac < 0.5 {
        frac *= 2.0;
        exp -= 1;
    }
    (frac, exp)
}

struct Cursor<'a> {
    bytes: &'a [u8],
    pos: usize,
}

impl<'a> Cursor<'a> {
    fn line(&mut self) -> Result<Option<&'a str>> {
        let start = self.pos;
        let rest = &self.bytes[start..];
        let Some(end) = rest.iter().take(MAX_HEADER_LINE + 1).position(|&b| b == b'\n') else {
            if rest.is_empty() {
                return Ok(None);
            }
            return Err(Error::MalformedHeader {
                offset: start,
                reason: "unterminated header line",
            });
        };
        self.pos = start + end + 1;
        let raw = &rest[..end];
        let raw = raw.strip_suffix(b"\r").unwrap_or(raw);
        std::str::from_utf8(raw).map(Some).map_err(|_| Error::MalformedHeader {
            offset: start,
            reason: "header line is not text",
        })
    }

    fn byte(&mut self) -> Result<u8> {
        let b = *self
            .bytes
            .get(self.pos)
            .ok_or(Error::Truncated { offset: self.pos })?;
        self.pos += 1;
        Ok(b)
    }

    fn take(&mut self, n: usize) -> Result<&'a [u8]> {
        let end = self.pos.checked_add(n).filter(|&e| e <= self.bytes.len());
        let end = end.ok_or(Error::Truncated {
            offset: self.bytes.len(),
        })?;
        let s = &self.bytes[self.pos..end];
        self.pos = end;
        Ok(s)
    }
}

fn parse_header(cur: &mut Cursor<'_>) -> Result<RgbeHeader> {
    match cur.line()? {
        Some("#?RADIANCE") | Some("#?RGBE") => {}
        _ => return Err(Error::BadMagic { offset: 0 }),
    }

    let mut format = None;
    let mut exposure_meta: Option<f64> = None;
    loop {
        let offset = cur.pos;
        let line = cur.line()?.ok_or(Error::MalformedHeader {
            offset,
            reason: "header ends before blank line",
        })?;
        if line.is_empty() {
            break;
        }
        if let Some(tag) = line.strip_prefix("FORMAT=") {
            let tag = tag.trim();
            if tag != FORMAT_TAG {
                return Err(Error::UnsupportedFormat {
                    format: tag.to_string(),
                    offset,
                });
            }
            format = Some(tag.to_string());
        } else if let Some(v) = line.strip_prefix("EXPOSURE=") {
            let v: f64 = v.trim().parse().map_err(|_| Error::MalformedHeader {
                offset,
                reason: "unparsable EXPOSURE value",
            })?;
            exposure_meta = Some(exposure_meta.unwrap_or(1.0) * v);
        }
    }
    let format_tag = format.ok_or(Error::MalformedHeader {
        offset: cur.pos,
        reason: "missing FORMAT line",
    })?;

    let offset = cur.pos;
    let bad_res = Error::MalformedHeader {
        offset,
        reason: "expected `-Y <height> +X <width>` resolution line",
    };
    let line = cur.line()?.ok_or(Error::Truncated { offset })?;
    let fields: Vec<&str> = line.split_whitespace().collect();
    let [ "-Y", h, "+X", w ] = fields.as_slice() else {
        return Err(bad_res);
    };
    let (Ok(height), Ok(width)) = (h.parse::<usize>(), w.parse::<usize>()) else {
        return Err(bad_res);
    };
    if height == 0 || width == 0 {
        return Err(bad_res);
    }
    Ok(RgbeHeader {
        format_tag,
        exposure_meta,
        height,
        width,
    })
}

fn read_scanline(cur: &mut Cursor<'_>, width: usize, line: &mut Vec<[u8; 4]>) -> Result<()> {
    line.clear();
    let start = cur.pos;
    let peek = cur.bytes.get(start..start + 4);
    let is_rle = (MIN_RLE_WIDTH..=MAX_RLE_WIDTH).contains(&width)
        && matches!(peek, Some([2, 2, hi, _]) if hi & 0x80 == 0);

    if !is_rle {
        let raw = cur.take(4 * width)?;
        line.extend(raw.chunks_exact(4).map(|q| [q[0], q[1], q[2], q[3]]));
        return Ok(());
    }

    let head = cur.take(4)?;
    let encoded_width = ((head[2] as usize) << 8) | head[3] as usize;
    if encoded_width != width {
        return Err(Error::RleOverrun { offset: start });
    }
    line.resize(width, [0; 4]);
    for channel in 0..4 {
        let mut x = 0;
        while x < width {
            let offset = cur.pos;
            let count = cur.byte()? as usize;
            if count > 128 {
                let run = count - 128;
                if x + run > width {
                    return Err(Error::RleOverrun { offset });
                }
                let value = cur.byte()?;
                for px in &mut line[x..x + run] {
                    px[channel] = value;
                }
                x += run;
            } else {
                if count == 0 || x + count > width {
                    return Err(Error::RleOverrun { offset });
                }
                let values = cur.take(count)?;
                for (px, &v) in line[x..x + count].iter_mut().zip(values) {
                    px[channel] = v;
                }
                x += count;
            }
        }
    }
    Ok(())
}

/// Decodes an RGBE file to its header and raw pixels, without enforcing
/// the panorama aspect ratio.
pub fn decode_rgbe(bytes: &[u8]) -> Result<(RgbeHeader, Vec<Rgb>)> {
    let mut cur = Cursor { bytes, pos: 0 };
    let header = parse_header(&mut cur)?;
    // Don't trust the declared size for allocation; data arrives row by row.
    let total = header
        .width
        .checked_mul(header.height)
        .ok_or(Error::Truncated { offset: cur.pos })?;
    let mut pixels = Vec::with_capacity(total.min(bytes.len()));
    let mut line = Vec::new();
    for _ in 0..header.height {
        read_scanline(&mut cur, header.width, &mut line)?;
        pixels.extend(line.iter().map(|&q| decode_pixel(q)));
    }
    Ok((header, pixels))
}

pub fn read_rgbe_with_header(bytes: &[u8]) -> Result<(RgbeHeader, HdrImage)> {
    let (header, pixels) = decode_rgbe(bytes)?;
    let image = HdrImage::new(header.width, header.height, pixels)?;
    Ok((header, image))
}

/// Reads a Radiance `.hdr` byte stream into a panorama.
pub fn read_rgbe(bytes: &[u8]) -> Result<HdrImage> {
    read_rgbe_with_header(bytes).map(|(_, image)| image)
}

pub fn write_rgbe(image: &HdrImage) -> Result<Vec<u8>> {
    write_rgbe_with(image, ScanlineEncoding::Auto)
}

pub fn write_rgbe_with(image: &HdrImage, encoding: ScanlineEncoding) -> Result<Vec<u8>> {
    encode_rgbe(image.width(), image.height(), image.pixels(), encoding)
}

/// Encodes raw pixels; `pixels.len()` must equal `width * height`.
pub fn encode_rgbe(width: usize, height: usize, pixels: &[Rgb], encoding: ScanlineEncoding) -> Result<Vec<u8>> {
    if pixels.len() != width * height || width == 0 || height == 0 {
        return Err(Error::InvalidDimensions {
            width,
            height,
            reason: "sample count does not match dimensions",
        });
    }
    let mut out = format!("#?RADIANCE\nFORMAT={FORMAT_TAG}\n\n-Y {height} +X {width}\n").into_bytes();
    out.reserve(4 * pixels.len());
    let rle = encoding == ScanlineEncoding::Auto && (MIN_RLE_WIDTH..=MAX_RLE_WIDTH).contains(&width);

    let mut quads = Vec::with_capacity(width);
    let mut channel = Vec::with_capacity(width);
    for (row, scan) in pixels.chunks_exact(width).enumerate() {
        quads.clear();
        for (col, &px) in scan.iter().enumerate() {
            let index = 3 * (row * width + col);
            quads.push(encode_pixel(px).ok_or(Error::Encode { index })?);
        }
        if !rle {
            quads.iter().for_each(|q| out.extend_from_slice(q));
            continue;
        }
        out.extend_from_slice(&[2, 2, (width >> 8) as u8, (width & 0xff) as u8]);
        for c in 0..4 {
            channel.clear();
            channel.extend(quads.iter().map(|q| q[c]));
            rle_encode_channel(&channel, &mut out);
        }
    }
    Ok(out)
}

fn rle_encode_channel(data: &[u8], out: &mut Vec<u8>) {
    let n = data.len();
    let mut i = 0;
    while i < n {
        // Locate the next run long enough to be worth encoding.
        let mut run_start = i;
        let mut run_len = 0;
        while run_start < n {
            run_len = 1;
            while run_start + run_len < n && run_len < 127 && data[run_start + run_len] == data[run_start] {
                run_len += 1;
            }
            if run_len >= MIN_RUN {
                break;
            }
            run_start += 1;
        }
        while i < run_start {
            let k = (run_start - i).min(128);
            out.push(k as u8);
            out.extend_from_slice(&data[i..i + k]);
            i += k;
        }
        if run_start < n {
            out.push((128 + run_len) as u8);
            out.push(data[run_start]);
            i = run_start + run_len;
        }
    }
}
