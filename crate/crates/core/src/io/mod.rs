//! On-disk formats.
//!
//! | container | layout |
//! |-----------|--------|
//! | PMAP | `"PMAP"`, `u16` version (1), `u32` width, `u32` height, `u16` flags (bit 0: confidence present), then `W·H` row-major `f32` XYZ triplets, then `W·H` `f32` confidences when flagged |
//! | DMAP | `"DMAP"`, `u16` version (1), `u32` width, `u32` height, `u32` frame count, then per frame `W·H` row-major `f32` depths (`0.0` = no geometry) |
//! | PGM  | binary `P5`, maxval 255 |
//! | PLY  | `binary_little_endian 1.0`, `float x,y,z` + `uchar red,green,blue` |
//! | trajectory | JSON: `frame_count`, `intrinsics`, `frames[{rotation[9], translation[3]}]`, optional `time_warp` |
//!
//! Every multi-byte field is little-endian. Invalid point-map pixels are
//! stored as three quiet NaNs (`0x7FC00000`) with confidence 0; no other
//! non-finite value is accepted.

mod dmap;
pub mod layout;
mod pgm;
mod ply;
mod pmap;
mod trajectory_file;

pub use dmap::{
    decode_depth_sequence, depth_previews, encode_depth_sequence, preview_bytes, read_depth_sequence,
    write_depth_sequence, DMAP_HEADER_LEN,
};
pub use pgm::{
    decode_pgm, encode_pgm, read_mask, read_pgm, read_rgb_triplet, write_mask, write_pgm, write_rgb_triplet,
    MASK_THRESHOLD,
};
pub use ply::{decode_ply, encode_ply, read_ply, write_ply};
pub use pmap::{decode_pointmap, encode_pointmap, read_pointmap, write_pointmap, PMAP_HEADER_LEN};
pub use trajectory_file::{
    read_trajectory, write_trajectory, CameraRecord, KeyframeFile, KeyframeRecord, PoseRecord, TrajectoryFile,
};

use std::path::Path;

use crate::error::FormatError;

pub(crate) fn read_file(path: &Path) -> Result<Vec<u8>, FormatError> {
    std::fs::read(path).map_err(|e| FormatError::file(path, e))
}

pub(crate) fn write_file(path: &Path, bytes: &[u8]) -> Result<(), FormatError> {
    std::fs::write(path, bytes).map_err(|e| FormatError::file(path, e))
}

/// Little-endian cursor over a byte slice.
pub(crate) struct Reader<'a> {
    buf: &'a [u8],
    pos: usize,
}

impl<'a> Reader<'a> {
    pub fn new(buf: &'a [u8]) -> Self {
        Self { buf, pos: 0 }
    }

    pub fn remaining(&self) -> usize {
        self.buf.len() - self.pos
    }

    pub fn take(&mut self, n: usize) -> Result<&'a [u8], FormatError> {
        if self.remaining() < n {
            return Err(FormatError::TruncatedPayload { expected: self.pos + n, found: self.buf.len() });
        }
        let s = &self.buf[self.pos..self.pos + n];
        self.pos += n;
        Ok(s)
    }

    pub fn u16(&mut self) -> Result<u16, FormatError> {
        Ok(u16::from_le_bytes(self.take(2)?.try_into().unwrap()))
    }

    pub fn u32(&mut self) -> Result<u32, FormatError> {
        Ok(u32::from_le_bytes(self.take(4)?.try_into().unwrap()))
    }

    pub fn magic(&mut self, expected: &'static str) -> Result<(), FormatError> {
        let n = expected.len();
        let found = &self.buf[..n.min(self.buf.len())];
        if found != expected.as_bytes() {
            return Err(FormatError::BadMagic { expected, found: found.to_vec() });
        }
        self.pos = n;
        Ok(())
    }
}

pub(crate) fn f32_le_iter(bytes: &[u8]) -> impl Iterator<Item = f32> + '_ {
    bytes.chunks_exact(4).map(|c| f32::from_le_bytes(c.try_into().unwrap()))
}

/// Payload byte count, or `DimensionOverflow` when it does not fit.
pub(crate) fn payload_len(width: u32, height: u32, frames: u32, bytes_per_cell: u64) -> Result<usize, FormatError> {
    let overflow =
        || FormatError::DimensionOverflow { width: width as u64, height: height as u64, frames: frames as u64 };
    let n = (width as u64)
        .checked_mul(height as u64)
        .and_then(|v| v.checked_mul(frames as u64))
        .and_then(|v| v.checked_mul(bytes_per_cell))
        .ok_or_else(overflow)?;
    usize::try_from(n).map_err(|_| overflow())
}
