use std::path::Path;

use super::{f32_le_iter, payload_len, read_file, write_file, Reader};
use crate::camera::Vec3;
use crate::error::FormatError;
use crate::raster::{is_valid_point, PointMap, INVALID_POINT};

pub const PMAP_HEADER_LEN: usize = 16;
const VERSION: u16 = 1;
const FLAG_CONFIDENCE: u16 = 1;
const SENTINEL_BITS: u32 = 0x7FC0_0000;

pub fn encode_pointmap(pm: &PointMap) -> Result<Vec<u8>, FormatError> {
    let (w, h) = pm.dims();
    let (w32, h32) = (dim_u32(w)?, dim_u32(h)?);
    let has_conf = pm.confidence().is_some();
    let len = payload_len(w32, h32, 1, if has_conf { 16 } else { 12 })?;
    let mut out = Vec::with_capacity(PMAP_HEADER_LEN + len);
    out.extend_from_slice(b"PMAP");
    out.extend_from_slice(&VERSION.to_le_bytes());
    out.extend_from_slice(&w32.to_le_bytes());
    out.extend_from_slice(&h32.to_le_bytes());
    out.extend_from_slice(&(if has_conf { FLAG_CONFIDENCE } else { 0 }).to_le_bytes());
    for p in pm.points() {
        if is_valid_point(p) {
            for v in p.iter() {
                let f = *v as f32;
                if !f.is_finite() {
                    return Err(FormatError::InvalidValue(format!("{v} does not fit in f32")));
                }
                out.extend_from_slice(&f.to_le_bytes());
            }
        } else {
            for _ in 0..3 {
                out.extend_from_slice(&SENTINEL_BITS.to_le_bytes());
            }
        }
    }
    if let Some(conf) = pm.confidence() {
        for c in conf {
            out.extend_from_slice(&(*c as f32).to_le_bytes());
        }
    }
    Ok(out)
}

pub fn decode_pointmap(bytes: &[u8]) -> Result<PointMap, FormatError> {
    let mut r = Reader::new(bytes);
    r.magic("PMAP")?;
    let version = r.u16()?;
    if version != VERSION {
        return Err(FormatError::UnsupportedVersion { format: "PMAP", version });
    }
    let w = r.u32()?;
    let h = r.u32()?;
    let flags = r.u16()?;
    if w == 0 || h == 0 {
        return Err(FormatError::InvalidValue(format!("zero dimension {w}x{h}")));
    }
    if flags & !FLAG_CONFIDENCE != 0 {
        return Err(FormatError::InvalidValue(format!("unknown flags {flags:#06x}")));
    }
    let has_conf = flags & FLAG_CONFIDENCE != 0;
    let pts_len = payload_len(w, h, 1, 12)?;
    let conf_len = if has_conf { payload_len(w, h, 1, 4)? } else { 0 };
    let total = pts_len.checked_add(conf_len).ok_or(FormatError::DimensionOverflow {
        width: w as u64,
        height: h as u64,
        frames: 1,
    })?;
    if r.remaining() < total {
        return Err(FormatError::TruncatedPayload { expected: PMAP_HEADER_LEN + total, found: bytes.len() });
    }
    if r.remaining() > total {
        return Err(FormatError::TrailingBytes(r.remaining() - total));
    }
    let raw = r.take(pts_len)?;
    let n = pts_len / 12;
    let mut points = Vec::with_capacity(n);
    for (i, c) in raw.chunks_exact(12).enumerate() {
        let bits: Vec<u32> = c.chunks_exact(4).map(|b| u32::from_le_bytes(b.try_into().unwrap())).collect();
        if bits.iter().all(|b| *b == SENTINEL_BITS) {
            points.push(INVALID_POINT);
            continue;
        }
        let v: Vec<f32> = bits.iter().map(|b| f32::from_bits(*b)).collect();
        if !v.iter().all(|x| x.is_finite()) {
            return Err(FormatError::InvalidValue(format!(
                "pixel {i}: non-finite value that is not the invalid-pixel sentinel"
            )));
        }
        points.push(Vec3::new(v[0] as f64, v[1] as f64, v[2] as f64));
    }
    let confidence = if has_conf {
        let raw = r.take(conf_len)?;
        let mut conf = Vec::with_capacity(n);
        for (i, c) in f32_le_iter(raw).enumerate() {
            if !(0.0..=1.0).contains(&c) {
                return Err(FormatError::InvalidValue(format!("pixel {i}: confidence {c}")));
            }
            if !is_valid_point(&points[i]) && c != 0.0 {
                return Err(FormatError::InvalidValue(format!("pixel {i}: invalid point with nonzero confidence")));
            }
            conf.push(c as f64);
        }
        Some(conf)
    } else {
        None
    };
    PointMap::new(w as usize, h as usize, points, confidence).map_err(|e| FormatError::InvalidValue(e.to_string()))
}

pub fn read_pointmap(path: impl AsRef<Path>) -> Result<PointMap, FormatError> {
    decode_pointmap(&read_file(path.as_ref())?)
}

pub fn write_pointmap(pm: &PointMap, path: impl AsRef<Path>) -> Result<(), FormatError> {
    write_file(path.as_ref(), &encode_pointmap(pm)?)
}

fn dim_u32(v: usize) -> Result<u32, FormatError> {
    u32::try_from(v).map_err(|_| FormatError::DimensionOverflow { width: v as u64, height: 0, frames: 1 })
}
