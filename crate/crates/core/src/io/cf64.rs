//! `CF64` complex field files.
//!
//! Layout: the four bytes `CF64`, little-endian `u32` nx, `u32` ny, `f64`
//! pitch in metres, then `ny * nx` pairs of little-endian `f64` (real,
//! imaginary), row-major with `y` outermost. No padding, no trailer.

use std::path::Path;

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::grid::{ComplexField, GridSpec};

pub const MAGIC: &[u8; 4] = b"CF64";
const HEADER_LEN: usize = 4 + 4 + 4 + 8;

pub fn encode(f: &ComplexField) -> Vec<u8> {
    let g = f.grid();
    let mut out = Vec::with_capacity(HEADER_LEN + 16 * g.len());
    out.extend_from_slice(MAGIC);
    out.extend_from_slice(&(g.nx() as u32).to_le_bytes());
    out.extend_from_slice(&(g.ny() as u32).to_le_bytes());
    out.extend_from_slice(&g.pitch().to_le_bytes());
    for v in f.values() {
        out.extend_from_slice(&v.re.to_le_bytes());
        out.extend_from_slice(&v.im.to_le_bytes());
    }
    out
}

fn f64_at(b: &[u8], at: usize) -> f64 {
    f64::from_le_bytes(b[at..at + 8].try_into().unwrap())
}

pub fn decode(bytes: &[u8]) -> Result<ComplexField> {
    if bytes.len() < HEADER_LEN {
        return Err(Error::format("CF64", "truncated header"));
    }
    if &bytes[..4] != MAGIC {
        return Err(Error::format("CF64", "bad magic"));
    }
    let nx = u32::from_le_bytes(bytes[4..8].try_into().unwrap()) as usize;
    let ny = u32::from_le_bytes(bytes[8..12].try_into().unwrap()) as usize;
    let pitch = f64_at(bytes, 12);
    let grid = GridSpec::new(nx, ny, pitch).map_err(|e| Error::format("CF64", e.to_string()))?;
    let expected = nx
        .checked_mul(ny)
        .and_then(|n| n.checked_mul(16))
        .and_then(|n| n.checked_add(HEADER_LEN))
        .ok_or_else(|| Error::format("CF64", "dimensions overflow"))?;
    if bytes.len() != expected {
        return Err(Error::format(
            "CF64",
            format!(
                "expected {expected} bytes for {grid}, found {}",
                bytes.len()
            ),
        ));
    }
    let values = bytes[HEADER_LEN..]
        .chunks_exact(16)
        .map(|c| Complex64::new(f64_at(c, 0), f64_at(c, 8)))
        .collect();
    ComplexField::new(grid, values)
}

pub fn save(path: &Path, f: &ComplexField) -> Result<()> {
    super::write_all(path, &encode(f))
}

pub fn load(path: &Path) -> Result<ComplexField> {
    decode(&super::read_all(path)?)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn header_layout() {
        let g = GridSpec::new(3, 2, 0.25).unwrap();
        let f = ComplexField::from_fn(g, Complex64::new);
        let b = encode(&f);
        assert_eq!(b.len(), 20 + 6 * 16);
        assert_eq!(&b[..4], b"CF64");
        assert_eq!(&b[4..8], &[3, 0, 0, 0]);
        assert_eq!(&b[8..12], &[2, 0, 0, 0]);
        assert_eq!(f64_at(&b, 12), 0.25);
        // second record is (i=1, j=0): x = 0, y = -0.25
        assert_eq!(f64_at(&b, 36), 0.0);
        assert_eq!(f64_at(&b, 44), -0.25);
        assert_eq!(decode(&b).unwrap(), f);
    }

    #[test]
    fn rejects_corrupt_input() {
        let g = GridSpec::new(2, 2, 1.0).unwrap();
        let mut b = encode(&ComplexField::zeros(g));
        assert!(decode(&b[..b.len() - 1]).is_err());
        b.push(0);
        assert!(decode(&b).is_err());
        b.pop();
        b[0] = b'X';
        assert!(matches!(decode(&b), Err(Error::Format { .. })));
        assert!(decode(b"CF6").is_err());
    }

    #[test]
    fn special_values_survive() {
        let g = GridSpec::new(2, 2, 1e-6).unwrap();
        let vals = vec![
            Complex64::new(f64::NAN, -0.0),
            Complex64::new(f64::INFINITY, f64::MIN_POSITIVE),
            Complex64::new(1e-308, -1e308),
            Complex64::new(0.1, 0.2),
        ];
        let f = ComplexField::new(g, vals).unwrap();
        let b = encode(&f);
        assert_eq!(encode(&decode(&b).unwrap()), b);
    }
}
