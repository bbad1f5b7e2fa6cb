//! Binary netpbm readers/writers: P6 pixmaps for color images, P5 graymaps
//! for scalar fields. Quantization to 8 bits is round-half-up; reading maps
//! byte b to b/255, so a write-read-write cycle is stable.

use std::fs;
use std::io::Write;
use std::path::Path;

use crate::error::{Error, Result};
use crate::field::{ChannelField, ScalarField};
use crate::fog::Image;
use crate::io::atomic_write;

/// Round-half-up quantization of a unit-range value to a byte.
#[inline]
pub fn quantize_u8(v: f64) -> u8 {
    (v * 255.0 + 0.5).floor().clamp(0.0, 255.0) as u8
}

pub fn write_p6(image: &Image, path: &Path) -> Result<()> {
    if image.channels() != 3 {
        return Err(Error::invalid(format!(
            "P6 requires 3 channels, image has {}",
            image.channels()
        )));
    }
    let (h, w, _) = image.shape();
    let mut bytes = Vec::with_capacity(32 + h * w * 3);
    write!(bytes, "P6\n{} {}\n255\n", w, h)?;
    for r in 0..h {
        for c in 0..w {
            for ch in 0..3 {
                bytes.push(quantize_u8(image.get(r, c, ch)));
            }
        }
    }
    atomic_write(path, &bytes)
}

pub fn write_p5(field: &ScalarField, path: &Path) -> Result<()> {
    if !field.values().iter().all(|v| (0.0..=1.0).contains(v)) {
        return Err(Error::invalid("graymap values must lie in [0, 1]"));
    }
    let (h, w) = (field.height(), field.width());
    let mut bytes = Vec::with_capacity(32 + h * w);
    write!(bytes, "P5\n{} {}\n255\n", w, h)?;
    for r in 0..h {
        for c in 0..w {
            bytes.push(quantize_u8(field.get(r, c)));
        }
    }
    atomic_write(path, &bytes)
}

/// Parses the three whitespace-separated header numbers after the magic,
/// skipping `#` comment lines. Returns (width, height, maxval, payload
/// offset).
fn parse_header(data: &[u8]) -> Result<(usize, usize, usize, usize)> {
    let mut pos = 2; // past the magic
    let mut fields = [0usize; 3];
    for field in fields.iter_mut() {
        // Skip whitespace and comments.
        loop {
            match data.get(pos) {
                Some(b) if b.is_ascii_whitespace() => pos += 1,
                Some(b'#') => {
                    while pos < data.len() && data[pos] != b'\n' {
                        pos += 1;
                    }
                }
                Some(_) => break,
                None => return Err(Error::Format("truncated netpbm header".into())),
            }
        }
        let start = pos;
        while pos < data.len() && data[pos].is_ascii_digit() {
            pos += 1;
        }
        if start == pos {
            return Err(Error::Format("malformed netpbm header field".into()));
        }
        *field = std::str::from_utf8(&data[start..pos])
            .ok()
            .and_then(|s| s.parse().ok())
            .ok_or_else(|| Error::Format("malformed netpbm header field".into()))?;
    }
    match data.get(pos) {
        Some(b) if b.is_ascii_whitespace() => pos += 1,
        _ => return Err(Error::Format("netpbm header not terminated".into())),
    }
    Ok((fields[0], fields[1], fields[2], pos))
}

pub fn read_p6(path: &Path) -> Result<Image> {
    let data = fs::read(path)?;
    if !data.starts_with(b"P6") {
        return Err(Error::Format(format!(
            "{} is not a binary P6 pixmap",
            path.display()
        )));
    }
    let (w, h, maxval, offset) = parse_header(&data)?;
    if maxval != 255 {
        return Err(Error::Format(format!("unsupported maxval {maxval}")));
    }
    if w == 0 || h == 0 {
        return Err(Error::Format("zero-sized image".into()));
    }
    let need = h * w * 3;
    let payload = &data[offset..];
    if payload.len() < need {
        return Err(Error::Format(format!(
            "truncated pixel payload: need {need} bytes, have {}",
            payload.len()
        )));
    }
    let mut field = ChannelField::zeros(h, w, 3);
    for r in 0..h {
        for c in 0..w {
            for ch in 0..3 {
                let b = payload[(r * w + c) * 3 + ch];
                field.set(r, c, ch, b as f64 / 255.0);
            }
        }
    }
    Image::new(field)
}

pub fn read_p5(path: &Path) -> Result<ScalarField> {
    let data = fs::read(path)?;
    if !data.starts_with(b"P5") {
        return Err(Error::Format(format!(
            "{} is not a binary P5 graymap",
            path.display()
        )));
    }
    let (w, h, maxval, offset) = parse_header(&data)?;
    if maxval != 255 {
        return Err(Error::Format(format!("unsupported maxval {maxval}")));
    }
    let payload = &data[offset..];
    if payload.len() < h * w {
        return Err(Error::Format("truncated pixel payload".into()));
    }
    ScalarField::new(
        h,
        w,
        payload[..h * w].iter().map(|&b| b as f64 / 255.0).collect(),
    )
}
