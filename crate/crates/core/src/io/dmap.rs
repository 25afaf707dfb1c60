use std::path::{Path, PathBuf};

use super::{f32_le_iter, payload_len, read_file, write_file, write_pgm, Reader};
use crate::error::FormatError;
use crate::render::DepthFrame;

pub const DMAP_HEADER_LEN: usize = 18;
const VERSION: u16 = 1;

pub fn encode_depth_sequence(frames: &[DepthFrame]) -> Result<Vec<u8>, FormatError> {
    let first = frames.first().ok_or_else(|| FormatError::InvalidValue("depth sequence has no frames".into()))?;
    let (w, h) = first.dims();
    if let Some(bad) = frames.iter().position(|f| f.dims() != (w, h)) {
        return Err(FormatError::InvalidValue(format!("frame {bad} differs in size")));
    }
    let overflow = || FormatError::DimensionOverflow { width: w as u64, height: h as u64, frames: frames.len() as u64 };
    let w32 = u32::try_from(w).map_err(|_| overflow())?;
    let h32 = u32::try_from(h).map_err(|_| overflow())?;
    let t32 = u32::try_from(frames.len()).map_err(|_| overflow())?;
    let len = payload_len(w32, h32, t32, 4)?;
    let mut out = Vec::with_capacity(DMAP_HEADER_LEN + len);
    out.extend_from_slice(b"DMAP");
    out.extend_from_slice(&VERSION.to_le_bytes());
    out.extend_from_slice(&w32.to_le_bytes());
    out.extend_from_slice(&h32.to_le_bytes());
    out.extend_from_slice(&t32.to_le_bytes());
    for f in frames {
        for d in f.depth() {
            out.extend_from_slice(&(*d as f32).to_le_bytes());
        }
    }
    Ok(out)
}

pub fn decode_depth_sequence(bytes: &[u8]) -> Result<Vec<DepthFrame>, FormatError> {
    let mut r = Reader::new(bytes);
    r.magic("DMAP")?;
    let version = r.u16()?;
    if version != VERSION {
        return Err(FormatError::UnsupportedVersion { format: "DMAP", version });
    }
    let w = r.u32()?;
    let h = r.u32()?;
    let t = r.u32()?;
    if w == 0 || h == 0 {
        return Err(FormatError::InvalidValue(format!("zero dimension {w}x{h}")));
    }
    let len = payload_len(w, h, t, 4)?;
    if r.remaining() < len {
        return Err(FormatError::TruncatedPayload { expected: DMAP_HEADER_LEN + len, found: bytes.len() });
    }
    if r.remaining() > len {
        return Err(FormatError::TrailingBytes(r.remaining() - len));
    }
    let frame_bytes = (w as usize) * (h as usize) * 4;
    let mut frames = Vec::with_capacity(t as usize);
    for _ in 0..t {
        let raw = r.take(frame_bytes)?;
        let mut depth = Vec::with_capacity(frame_bytes / 4);
        for d in f32_le_iter(raw) {
            if !d.is_finite() || d < 0.0 {
                return Err(FormatError::InvalidValue(format!("depth {d}")));
            }
            depth.push(d as f64);
        }
        frames.push(
            DepthFrame::new(w as usize, h as usize, depth).map_err(|e| FormatError::InvalidValue(e.to_string()))?,
        );
    }
    Ok(frames)
}

/// 8-bit previews with one min-max range shared by the whole sequence.
///
/// Holes map to 0; valid depths map to `1..=255` with the nearest depth at
/// 255. A sequence whose valid depths are all equal renders as 255.
pub fn depth_previews(frames: &[DepthFrame]) -> Vec<Vec<u8>> {
    let mut lo = f64::INFINITY;
    let mut hi = f64::NEG_INFINITY;
    for d in frames.iter().flat_map(|f| f.depth()).filter(|d| **d > 0.0) {
        lo = lo.min(*d);
        hi = hi.max(*d);
    }
    frames.iter().map(|f| preview_bytes(f.depth(), lo, hi)).collect()
}

/// Preview of one depth grid against an explicit `[near, far]` range.
pub fn preview_bytes(depth: &[f64], near: f64, far: f64) -> Vec<u8> {
    let range = far - near;
    depth
        .iter()
        .map(|&d| {
            if !(d > 0.0) {
                0
            } else if !(range > 0.0) {
                255
            } else {
                let x = ((far - d) / range).clamp(0.0, 1.0);
                1 + (254.0 * x).round() as u8
            }
        })
        .collect()
}

pub fn read_depth_sequence(path: impl AsRef<Path>) -> Result<Vec<DepthFrame>, FormatError> {
    decode_depth_sequence(&read_file(path.as_ref())?)
}

/// Writes the DMAP container at `path` and one preview per frame next to it
/// (`<stem>_0000.pgm`, ...). Returns the preview paths.
pub fn write_depth_sequence(frames: &[DepthFrame], path: impl AsRef<Path>) -> Result<Vec<PathBuf>, FormatError> {
    let path = path.as_ref();
    write_file(path, &encode_depth_sequence(frames)?)?;
    let stem = path.with_extension("");
    let stem = stem.to_string_lossy();
    let mut written = Vec::with_capacity(frames.len());
    for (t, (f, px)) in frames.iter().zip(depth_previews(frames)).enumerate() {
        let p = PathBuf::from(format!("{stem}_{t:04}.pgm"));
        write_pgm(&p, f.width(), f.height(), &px)?;
        written.push(p);
    }
    Ok(written)
}
