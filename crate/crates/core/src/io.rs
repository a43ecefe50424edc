//! Image file I/O.
//!
//! Binary and ASCII PGM/PPM (Netpbm, maxval ≤ 255) are handled natively.
//! PNG goes through the `image` crate. Color inputs are reduced to
//! luminance with Rec. 601 weights. Writes go to a sibling temporary file
//! that is renamed into place, so a failed write never leaves a truncated
//! output behind.

use std::fs;
use std::io::Write;
use std::path::Path;

use crate::error::{Error, Result};
use crate::image::Image;

const LUMA_R: f64 = 0.299;
const LUMA_G: f64 = 0.587;
const LUMA_B: f64 = 0.114;

pub fn load_image(path: impl AsRef<Path>) -> Result<Image> {
    let path = path.as_ref();
    let bytes = fs::read(path).map_err(|e| Error::io(path, e))?;
    if bytes.starts_with(b"\x89PNG") {
        decode_png(&bytes)
    } else if bytes.first() == Some(&b'P') {
        decode_netpbm(&bytes)
    } else {
        Err(Error::UnsupportedFormat(format!(
            "{}: not a PGM/PPM/PNG file",
            path.display()
        )))
    }
}

/// Saves `img` clamped to `[0, 255]` and rounded to the nearest integer.
/// The format follows the extension: `.png` writes PNG, anything else P5 PGM.
pub fn save_image(img: &Image, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    let is_png = path
        .extension()
        .and_then(|e| e.to_str())
        .is_some_and(|e| e.eq_ignore_ascii_case("png"));
    let bytes = if is_png {
        encode_png(img)?
    } else {
        encode_pgm(img)
    };
    write_atomic(path, &bytes)
}

/// Quantizes to 8 bits: clamp to `[0, 255]`, round half away from zero.
pub fn quantize(img: &Image) -> Vec<u8> {
    img.data().iter().map(|&v| v.clamp(0.0, 255.0).round() as u8).collect()
}

pub fn encode_pgm(img: &Image) -> Vec<u8> {
    let mut out = format!("P5\n{} {}\n255\n", img.width(), img.height()).into_bytes();
    out.extend(quantize(img));
    out
}

/// Writes `bytes` to a temporary sibling of `path`, then renames it over `path`.
pub fn write_atomic(path: &Path, bytes: &[u8]) -> Result<()> {
    let dir = match path.parent() {
        Some(p) if !p.as_os_str().is_empty() => p,
        _ => Path::new("."),
    };
    let name = path
        .file_name()
        .ok_or_else(|| Error::io(path, std::io::Error::other("path has no file name")))?;
    let tmp = dir.join(format!(".{}.tmp{}", name.to_string_lossy(), std::process::id()));
    let res = (|| {
        let mut f = fs::File::create(&tmp)?;
        f.write_all(bytes)?;
        f.sync_all()?;
        fs::rename(&tmp, path)
    })();
    if let Err(e) = res {
        let _ = fs::remove_file(&tmp);
        return Err(Error::io(path, e));
    }
    Ok(())
}

struct Header {
    magic: u8,
    width: usize,
    height: usize,
    maxval: usize,
    data_start: usize,
}

fn parse_header(bytes: &[u8]) -> Result<Header> {
    if bytes.len() < 2 || bytes[0] != b'P' {
        return Err(Error::Format("missing Netpbm magic".into()));
    }
    let magic = bytes[1];
    if !matches!(magic, b'2' | b'3' | b'5' | b'6') {
        return Err(Error::UnsupportedFormat(format!("Netpbm variant P{}", magic as char)));
    }
    let mut pos = 2;
    let mut fields = [0usize; 3];
    for field in fields.iter_mut() {
        // whitespace and comments
        loop {
            match bytes.get(pos) {
                Some(c) if c.is_ascii_whitespace() => pos += 1,
                Some(b'#') => {
                    while bytes.get(pos).is_some_and(|&c| c != b'\n') {
                        pos += 1;
                    }
                }
                Some(_) => break,
                None => return Err(Error::Format("truncated header".into())),
            }
        }
        let start = pos;
        while bytes.get(pos).is_some_and(|c| c.is_ascii_digit()) {
            pos += 1;
        }
        if start == pos {
            return Err(Error::Format("expected a number in header".into()));
        }
        *field = std::str::from_utf8(&bytes[start..pos])
            .ok()
            .and_then(|s| s.parse().ok())
            .ok_or_else(|| Error::Format("header number out of range".into()))?;
    }
    // exactly one whitespace byte separates the header from raster data
    match bytes.get(pos) {
        Some(c) if c.is_ascii_whitespace() => pos += 1,
        _ => return Err(Error::Format("missing whitespace after maxval".into())),
    }
    let [width, height, maxval] = fields;
    if width == 0 || height == 0 {
        return Err(Error::EmptyImage { height, width });
    }
    if maxval == 0 || maxval > 255 {
        return Err(Error::UnsupportedFormat(format!("maxval {maxval} (only 8-bit supported)")));
    }
    Ok(Header {
        magic,
        width,
        height,
        maxval,
        data_start: pos,
    })
}

fn decode_netpbm(bytes: &[u8]) -> Result<Image> {
    let h = parse_header(bytes)?;
    let channels = if matches!(h.magic, b'3' | b'6') { 3 } else { 1 };
    let count = h.width * h.height * channels;
    let samples: Vec<u8> = match h.magic {
        b'5' | b'6' => {
            let raster = &bytes[h.data_start..];
            if raster.len() < count {
                return Err(Error::Format(format!(
                    "raster has {} bytes, expected {count}",
                    raster.len()
                )));
            }
            raster[..count].to_vec()
        }
        _ => {
            let text = std::str::from_utf8(&bytes[h.data_start..])
                .map_err(|_| Error::Format("ASCII raster is not valid text".into()))?;
            let values: Vec<u8> = text
                .split_ascii_whitespace()
                .take(count)
                .map(|t| t.parse::<u8>())
                .collect::<std::result::Result<_, _>>()
                .map_err(|_| Error::Format("bad ASCII sample".into()))?;
            if values.len() < count {
                return Err(Error::Format("truncated ASCII raster".into()));
            }
            values
        }
    };
    if samples.iter().any(|&s| s as usize > h.maxval) {
        return Err(Error::Format("sample exceeds maxval".into()));
    }
    let scale = 255.0 / h.maxval as f64;
    let data = if channels == 1 {
        samples.iter().map(|&s| s as f64 * scale).collect()
    } else {
        samples
            .chunks_exact(3)
            .map(|p| luminance(p[0], p[1], p[2]) * scale)
            .collect()
    };
    Image::new(h.height, h.width, data)
}

fn luminance(r: u8, g: u8, b: u8) -> f64 {
    LUMA_R * r as f64 + LUMA_G * g as f64 + LUMA_B * b as f64
}

fn decode_png(bytes: &[u8]) -> Result<Image> {
    use ::image::{DynamicImage, ImageFormat};

    let dynimg = ::image::load_from_memory_with_format(bytes, ImageFormat::Png)
        .map_err(|e| Error::Format(format!("PNG decode: {e}")))?;
    let (w, h) = (dynimg.width() as usize, dynimg.height() as usize);
    if w == 0 || h == 0 {
        return Err(Error::EmptyImage { height: h, width: w });
    }
    let data = match dynimg {
        DynamicImage::ImageLuma8(g) => g.into_raw().into_iter().map(f64::from).collect(),
        DynamicImage::ImageLumaA8(_) | DynamicImage::ImageLuma16(_) | DynamicImage::ImageLumaA16(_) => {
            return Err(Error::UnsupportedFormat("PNG must be 8-bit gray or RGB".into()))
        }
        other => other
            .to_rgb8()
            .pixels()
            .map(|p| luminance(p[0], p[1], p[2]))
            .collect(),
    };
    Image::new(h, w, data)
}

fn encode_png(img: &Image) -> Result<Vec<u8>> {
    use ::image::{ExtendedColorType, ImageEncoder};

    let mut out = Vec::new();
    ::image::codecs::png::PngEncoder::new(&mut out)
        .write_image(
            &quantize(img),
            img.width() as u32,
            img.height() as u32,
            ExtendedColorType::L8,
        )
        .map_err(|e| Error::Format(format!("PNG encode: {e}")))?;
    Ok(out)
}
