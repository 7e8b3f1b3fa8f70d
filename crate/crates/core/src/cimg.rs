//! "CIMG v1" raw complex image container.
//!
//! Layout: the 8-byte magic `CIMG0001`, three little-endian `u32` values
//! `(K, H, W)`, then `K·H·W` pairs of little-endian `f64` `(re, im)` in
//! channel-major, row-major order.

use std::fs;
use std::io::{Read, Write};
use std::path::Path;

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::image::{ComplexImage, Shape};

pub const MAGIC: &[u8; 8] = b"CIMG0001";
const HEADER_LEN: usize = 8 + 12;

pub fn encode(image: &ComplexImage) -> Vec<u8> {
    let s = image.shape();
    let mut out = Vec::with_capacity(HEADER_LEN + 16 * image.len());
    out.extend_from_slice(MAGIC);
    for d in [s.channels, s.height, s.width] {
        out.extend_from_slice(&(d as u32).to_le_bytes());
    }
    for z in image.data() {
        out.extend_from_slice(&z.re.to_le_bytes());
        out.extend_from_slice(&z.im.to_le_bytes());
    }
    out
}

pub fn decode(bytes: &[u8]) -> std::result::Result<ComplexImage, String> {
    if bytes.len() < HEADER_LEN {
        return Err(format!("truncated header ({} bytes)", bytes.len()));
    }
    if &bytes[..8] != MAGIC {
        return Err("bad magic, expected CIMG0001".into());
    }
    let dim = |k: usize| {
        let o = 8 + 4 * k;
        u32::from_le_bytes(bytes[o..o + 4].try_into().unwrap()) as usize
    };
    let shape = Shape::new(dim(0), dim(1), dim(2));
    let expected = shape
        .len()
        .checked_mul(16)
        .and_then(|n| n.checked_add(HEADER_LEN))
        .ok_or_else(|| format!("shape {shape} overflows"))?;
    if bytes.len() != expected {
        return Err(format!(
            "payload size {} does not match shape {shape} (expected {expected})",
            bytes.len()
        ));
    }
    let data = bytes[HEADER_LEN..]
        .chunks_exact(16)
        .map(|c| {
            Complex64::new(
                f64::from_le_bytes(c[..8].try_into().unwrap()),
                f64::from_le_bytes(c[8..].try_into().unwrap()),
            )
        })
        .collect();
    ComplexImage::new(shape, data).map_err(|e| e.to_string())
}

pub fn write(path: impl AsRef<Path>, image: &ComplexImage) -> Result<()> {
    let path = path.as_ref();
    let mut f = fs::File::create(path).map_err(|e| Error::io(path, e))?;
    f.write_all(&encode(image)).map_err(|e| Error::io(path, e))
}

pub fn read(path: impl AsRef<Path>) -> Result<ComplexImage> {
    let path = path.as_ref();
    let mut buf = Vec::new();
    fs::File::open(path)
        .and_then(|mut f| f.read_to_end(&mut buf))
        .map_err(|e| Error::io(path, e))?;
    decode(&buf).map_err(|message| Error::Format {
        path: path.to_path_buf(),
        message,
    })
}
