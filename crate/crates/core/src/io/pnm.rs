//! Binary PGM/PBM images for holograms and 8-bit intensity previews.
//!
//! Holograms go to packed `P4` (1 bit per mirror, rows padded to whole
//! bytes, most significant bit first) or to `P5` with values {0, 255}. In
//! `P4` a set bit is black, so an on mirror is stored as 0. Every hologram
//! image has a sidecar `<image>.txt` with `period_samples=` and `pitch_m=`
//! lines.

use std::path::{Path, PathBuf};

use crate::error::{Error, Result};
use crate::grid::GridSpec;
use crate::hologram::{BinaryHologram, GratingConfig};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PnmKind {
    /// Packed bitmap.
    P4,
    /// 8-bit graymap.
    P5,
}

/// 8-bit grayscale raster, row-major.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct GrayImage {
    pub width: usize,
    pub height: usize,
    pub pixels: Vec<u8>,
}

struct Header {
    kind: PnmKind,
    width: usize,
    height: usize,
    maxval: u32,
    data_start: usize,
}

fn parse_header(b: &[u8]) -> Result<Header> {
    let kind = match b.get(..2) {
        Some(b"P4") => PnmKind::P4,
        Some(b"P5") => PnmKind::P5,
        _ => return Err(Error::format("PNM", "expected P4 or P5 magic")),
    };
    let wanted = if kind == PnmKind::P4 { 2 } else { 3 };
    let mut pos = 2;
    let mut fields = Vec::with_capacity(wanted);
    while fields.len() < wanted {
        match b.get(pos) {
            None => return Err(Error::format("PNM", "truncated header")),
            Some(b'#') => {
                while pos < b.len() && b[pos] != b'\n' {
                    pos += 1;
                }
            }
            Some(c) if c.is_ascii_whitespace() => pos += 1,
            Some(c) if c.is_ascii_digit() => {
                let start = pos;
                while pos < b.len() && b[pos].is_ascii_digit() {
                    pos += 1;
                }
                let text = std::str::from_utf8(&b[start..pos]).unwrap();
                let v: u64 = text
                    .parse()
                    .map_err(|_| Error::format("PNM", format!("header number {text} too large")))?;
                fields.push(v);
            }
            Some(c) => {
                return Err(Error::format(
                    "PNM",
                    format!("unexpected byte {c:#04x} in header"),
                ))
            }
        }
    }
    match b.get(pos) {
        Some(c) if c.is_ascii_whitespace() => pos += 1,
        _ => {
            return Err(Error::format(
                "PNM",
                "header must end with one whitespace byte",
            ))
        }
    }
    let (width, height) = (fields[0] as usize, fields[1] as usize);
    if width == 0 || height == 0 {
        return Err(Error::format("PNM", "zero image dimension"));
    }
    let maxval = if kind == PnmKind::P5 { fields[2] } else { 1 };
    if kind == PnmKind::P5 && maxval != 255 {
        return Err(Error::format(
            "PNM",
            format!("only maxval 255 is supported, got {maxval}"),
        ));
    }
    Ok(Header {
        kind,
        width,
        height,
        maxval: maxval as u32,
        data_start: pos,
    })
}

fn payload<'a>(b: &'a [u8], h: &Header) -> Result<&'a [u8]> {
    let row = match h.kind {
        PnmKind::P4 => h.width.div_ceil(8),
        PnmKind::P5 => h.width,
    };
    let need = row
        .checked_mul(h.height)
        .ok_or_else(|| Error::format("PNM", "dimensions overflow"))?;
    let data = &b[h.data_start..];
    if data.len() != need {
        return Err(Error::format(
            "PNM",
            format!("expected {need} data bytes, found {}", data.len()),
        ));
    }
    Ok(data)
}

/// Encode mirror states as a bare image (no sidecar).
pub fn encode_bits(width: usize, height: usize, bits: &[bool], kind: PnmKind) -> Vec<u8> {
    assert_eq!(bits.len(), width * height);
    let mut out = match kind {
        PnmKind::P4 => format!("P4\n{width} {height}\n").into_bytes(),
        PnmKind::P5 => format!("P5\n{width} {height}\n255\n").into_bytes(),
    };
    match kind {
        PnmKind::P4 => {
            for row in bits.chunks_exact(width) {
                for byte in row.chunks(8) {
                    let mut v = 0u8;
                    for (k, &on) in byte.iter().enumerate() {
                        if !on {
                            v |= 0x80 >> k;
                        }
                    }
                    out.push(v);
                }
            }
        }
        PnmKind::P5 => out.extend(bits.iter().map(|&on| if on { 255 } else { 0 })),
    }
    out
}

/// Decode a P4 or P5 image into mirror states. P5 samples must be 0 or 255;
/// P4 padding bits must be zero.
pub fn decode_bits(bytes: &[u8]) -> Result<(usize, usize, PnmKind, Vec<bool>)> {
    let h = parse_header(bytes)?;
    let data = payload(bytes, &h)?;
    let mut bits = Vec::with_capacity(h.width * h.height);
    match h.kind {
        PnmKind::P4 => {
            let stride = h.width.div_ceil(8);
            let pad = stride * 8 - h.width;
            for row in data.chunks_exact(stride) {
                if pad > 0 && row[stride - 1] & ((1u8 << pad) - 1) != 0 {
                    return Err(Error::format("PNM", "nonzero padding bits in P4 row"));
                }
                for i in 0..h.width {
                    bits.push(row[i / 8] & (0x80 >> (i % 8)) == 0);
                }
            }
        }
        PnmKind::P5 => {
            for &v in data {
                match v {
                    0 => bits.push(false),
                    255 => bits.push(true),
                    _ => {
                        return Err(Error::format(
                            "PNM",
                            format!("hologram sample {v} is neither 0 nor 255"),
                        ))
                    }
                }
            }
        }
    }
    debug_assert_eq!(h.maxval, if h.kind == PnmKind::P5 { 255 } else { 1 });
    Ok((h.width, h.height, h.kind, bits))
}

pub fn encode_gray(img: &GrayImage) -> Vec<u8> {
    let mut out = format!("P5\n{} {}\n255\n", img.width, img.height).into_bytes();
    out.extend_from_slice(&img.pixels);
    out
}

pub fn decode_gray(bytes: &[u8]) -> Result<GrayImage> {
    let h = parse_header(bytes)?;
    if h.kind != PnmKind::P5 {
        return Err(Error::format("PNM", "grayscale image must be P5"));
    }
    Ok(GrayImage {
        width: h.width,
        height: h.height,
        pixels: payload(bytes, &h)?.to_vec(),
    })
}

/// Linear map of `values` to 0..=255 with the maximum at 255. A
/// non-positive maximum yields an all-black image.
pub fn to_gray(width: usize, height: usize, values: &[f64]) -> GrayImage {
    let max = values
        .iter()
        .cloned()
        .filter(|v| v.is_finite())
        .fold(0.0, f64::max);
    let pixels = values
        .iter()
        .map(|&v| {
            if max > 0.0 && v.is_finite() {
                (v.max(0.0) / max * 255.0).round() as u8
            } else {
                0
            }
        })
        .collect();
    GrayImage {
        width,
        height,
        pixels,
    }
}

pub fn sidecar_path(image: &Path) -> PathBuf {
    let mut s = image.as_os_str().to_owned();
    s.push(".txt");
    PathBuf::from(s)
}

pub fn encode_sidecar(config: &GratingConfig, pitch: f64) -> String {
    format!(
        "period_samples={}\npitch_m={:e}\n",
        config.period_samples(),
        pitch
    )
}

pub fn decode_sidecar(text: &str) -> Result<(GratingConfig, f64)> {
    let mut period = None;
    let mut pitch = None;
    for line in text.lines() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let (k, v) = line
            .split_once('=')
            .ok_or_else(|| Error::format("sidecar", format!("line without '=': {line}")))?;
        let (k, v) = (k.trim(), v.trim());
        let slot = match k {
            "period_samples" => &mut period,
            "pitch_m" => &mut pitch,
            _ => return Err(Error::format("sidecar", format!("unknown key {k}"))),
        };
        if slot.replace(v.to_string()).is_some() {
            return Err(Error::format("sidecar", format!("duplicate key {k}")));
        }
    }
    let period: u32 = period
        .ok_or_else(|| Error::format("sidecar", "missing period_samples"))?
        .parse()
        .map_err(|_| Error::format("sidecar", "period_samples is not an integer"))?;
    let pitch: f64 = pitch
        .ok_or_else(|| Error::format("sidecar", "missing pitch_m"))?
        .parse()
        .map_err(|_| Error::format("sidecar", "pitch_m is not a number"))?;
    let config = GratingConfig::new(period).map_err(|e| Error::format("sidecar", e.to_string()))?;
    Ok((config, pitch))
}

pub fn encode_hologram(h: &BinaryHologram, kind: PnmKind) -> (Vec<u8>, String) {
    let g = h.grid();
    (
        encode_bits(g.nx(), g.ny(), h.bits(), kind),
        encode_sidecar(h.config(), g.pitch()),
    )
}

pub fn decode_hologram(image: &[u8], sidecar: &str) -> Result<BinaryHologram> {
    let (nx, ny, _, bits) = decode_bits(image)?;
    let (config, pitch) = decode_sidecar(sidecar)?;
    let grid = GridSpec::new(nx, ny, pitch).map_err(|e| Error::format("PNM", e.to_string()))?;
    BinaryHologram::new(grid, bits, config)
}

/// Write the image and its sidecar.
pub fn save_hologram(path: &Path, h: &BinaryHologram, kind: PnmKind) -> Result<()> {
    let (img, side) = encode_hologram(h, kind);
    super::write_all(path, &img)?;
    super::write_all(&sidecar_path(path), side.as_bytes())
}

pub fn load_hologram(path: &Path) -> Result<BinaryHologram> {
    let img = super::read_all(path)?;
    let side = std::fs::read_to_string(sidecar_path(path))?;
    decode_hologram(&img, &side)
}

pub fn save_gray(path: &Path, img: &GrayImage) -> Result<()> {
    super::write_all(path, &encode_gray(img))
}

pub fn load_gray(path: &Path) -> Result<GrayImage> {
    decode_gray(&super::read_all(path)?)
}
