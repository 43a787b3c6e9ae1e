//! UMSK1 mask tensor files: 5-byte magic `UMSK1`, u16 version, u32 dims
//! T, F, S (all little-endian), then T·F·S float32 little-endian values,
//! layer-major (source outer), rows t outer, f inner. Values are clamped
//! into [0,1] on read; the clamp count is reported so callers can warn.

use std::path::Path;

use anyhow::{bail, Context, Result};
use beamsep_core::Mask;
use ndarray::Array2;

const MAGIC: &[u8; 5] = b"UMSK1";
const VERSION: u16 = 1;
const HEADER_LEN: usize = 5 + 2 + 3 * 4;

#[derive(Debug)]
pub struct MaskFileContents {
    pub layers: Vec<Mask>,
    /// How many stored values fell outside [0,1] and were clamped.
    pub clamped: usize,
}

pub fn write_masks(path: &Path, layers: &[Mask]) -> Result<()> {
    let first = layers.first().context("mask file needs at least one layer")?;
    let (t, f) = (first.frames(), first.freq_bins());
    if layers.iter().any(|m| m.frames() != t || m.freq_bins() != f) {
        bail!("all mask layers must share the same T x F shape");
    }
    if t > u32::MAX as usize || f > u32::MAX as usize || layers.len() > u32::MAX as usize {
        bail!("mask dimensions exceed the u32 header fields");
    }
    let mut buf = Vec::with_capacity(HEADER_LEN + 4 * t * f * layers.len());
    buf.extend_from_slice(MAGIC);
    buf.extend_from_slice(&VERSION.to_le_bytes());
    buf.extend_from_slice(&(t as u32).to_le_bytes());
    buf.extend_from_slice(&(f as u32).to_le_bytes());
    buf.extend_from_slice(&(layers.len() as u32).to_le_bytes());
    for m in layers {
        for row in m.values().rows() {
            for v in row {
                buf.extend_from_slice(&(*v as f32).to_le_bytes());
            }
        }
    }
    std::fs::write(path, buf).with_context(|| format!("write {}", path.display()))
}

pub fn read_masks(path: &Path) -> Result<MaskFileContents> {
    let data = std::fs::read(path).with_context(|| format!("read {}", path.display()))?;
    parse_masks(&data).with_context(|| format!("parse {}", path.display()))
}

fn parse_masks(data: &[u8]) -> Result<MaskFileContents> {
    if data.len() < HEADER_LEN {
        bail!("truncated header ({} bytes)", data.len());
    }
    if &data[..5] != MAGIC {
        bail!("bad magic, not a UMSK1 file");
    }
    let version = u16::from_le_bytes([data[5], data[6]]);
    if version != VERSION {
        bail!("unsupported version {version}");
    }
    let dim = |off: usize| u32::from_le_bytes(data[off..off + 4].try_into().unwrap()) as u64;
    let (t, f, s) = (dim(7), dim(11), dim(15));
    if t == 0 || f == 0 || s == 0 {
        bail!("zero dimension (T={t}, F={f}, S={s})");
    }
    let expected = HEADER_LEN as u64 + 4 * t * f * s;
    if (data.len() as u64) < expected {
        bail!("truncated payload: {} bytes, expected {expected}", data.len());
    }
    if data.len() as u64 > expected {
        bail!("trailing bytes after payload: {} bytes, expected {expected}", data.len());
    }

    let (t, f, s) = (t as usize, f as usize, s as usize);
    let mut clamped = 0usize;
    let mut layers = Vec::with_capacity(s);
    let mut off = HEADER_LEN;
    for layer in 0..s {
        let mut values = Array2::zeros((t, f));
        for ti in 0..t {
            for fi in 0..f {
                let v = f32::from_le_bytes(data[off..off + 4].try_into().unwrap());
                off += 4;
                if v.is_nan() {
                    bail!("NaN mask value in layer {layer} at (t={ti}, f={fi})");
                }
                let v = f64::from(v);
                let c = v.clamp(0.0, 1.0);
                if c != v {
                    clamped += 1;
                }
                values[[ti, fi]] = c;
            }
        }
        layers.push(Mask::new(values)?);
    }
    Ok(MaskFileContents { layers, clamped })
}
