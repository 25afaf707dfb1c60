use std::path::Path;

use super::{read_file, write_file};
use crate::camera::Vec3;
use crate::cloud::PointCloud;
use crate::error::FormatError;

const DEFAULT_COLOR: [u8; 3] = [128, 128, 128];

fn ply_err(msg: impl Into<String>) -> FormatError {
    FormatError::Ply(msg.into())
}

/// Binary little-endian PLY with `float x,y,z` and `uchar red,green,blue`.
/// Clouds without colors are written mid-gray.
pub fn encode_ply(cloud: &PointCloud) -> Result<Vec<u8>, FormatError> {
    let header = format!(
        "ply\nformat binary_little_endian 1.0\nelement vertex {}\n\
         property float x\nproperty float y\nproperty float z\n\
         property uchar red\nproperty uchar green\nproperty uchar blue\nend_header\n",
        cloud.len()
    );
    let mut out = Vec::with_capacity(header.len() + cloud.len() * 15);
    out.extend_from_slice(header.as_bytes());
    for (i, p) in cloud.positions().iter().enumerate() {
        for v in p.iter() {
            let f = *v as f32;
            if !f.is_finite() {
                return Err(FormatError::InvalidValue(format!("{v} does not fit in f32")));
            }
            out.extend_from_slice(&f.to_le_bytes());
        }
        out.extend_from_slice(&cloud.color(i).unwrap_or(DEFAULT_COLOR));
    }
    Ok(out)
}

#[derive(Clone, Copy, PartialEq)]
enum Prop {
    X,
    Y,
    Z,
    R,
    G,
    B,
    Skip(usize),
}

/// Reads binary little-endian PLY vertex data: float or double `x,y,z`, and
/// `uchar` colors when present. Other scalar vertex properties are skipped.
pub fn decode_ply(bytes: &[u8]) -> Result<PointCloud, FormatError> {
    let end = b"end_header\n";
    let hdr_end =
        bytes.windows(end.len()).position(|w| w == end).ok_or_else(|| ply_err("missing end_header"))? + end.len();
    let header = std::str::from_utf8(&bytes[..hdr_end]).map_err(|_| ply_err("header is not text"))?;
    let mut lines = header.lines();
    if lines.next() != Some("ply") {
        return Err(ply_err("missing ply magic"));
    }
    let mut count: Option<usize> = None;
    let mut in_vertex = false;
    let mut props: Vec<(Prop, usize)> = Vec::new();
    let mut double = false;
    for line in lines {
        let tok: Vec<&str> = line.split_whitespace().collect();
        match tok.as_slice() {
            ["format", fmt, _] => {
                if *fmt != "binary_little_endian" {
                    return Err(ply_err(format!("unsupported format {fmt}")));
                }
            }
            ["element", name, n] => {
                in_vertex = *name == "vertex";
                if in_vertex {
                    count = Some(n.parse().map_err(|_| ply_err("bad vertex count"))?);
                } else if count.is_none() {
                    return Err(ply_err("vertex must be the first element"));
                }
            }
            ["property", "list", ..] if in_vertex => {
                return Err(ply_err("list properties on vertices are unsupported"))
            }
            ["property", ty, name] if in_vertex => {
                let size = match *ty {
                    "char" | "uchar" | "int8" | "uint8" => 1,
                    "short" | "ushort" | "int16" | "uint16" => 2,
                    "int" | "uint" | "float" | "int32" | "uint32" | "float32" => 4,
                    "double" | "float64" => 8,
                    other => return Err(ply_err(format!("unknown type {other}"))),
                };
                let prop = match (*name, size) {
                    ("x", 4 | 8) => Prop::X,
                    ("y", 4 | 8) => Prop::Y,
                    ("z", 4 | 8) => Prop::Z,
                    ("red", 1) => Prop::R,
                    ("green", 1) => Prop::G,
                    ("blue", 1) => Prop::B,
                    _ => Prop::Skip(size),
                };
                if matches!(prop, Prop::X | Prop::Y | Prop::Z) {
                    double = size == 8;
                }
                props.push((prop, size));
            }
            _ => {}
        }
    }
    let count = count.ok_or_else(|| ply_err("no vertex element"))?;
    for need in [Prop::X, Prop::Y, Prop::Z] {
        if !props.iter().any(|(p, _)| *p == need) {
            return Err(ply_err("vertex element lacks x/y/z"));
        }
    }
    let stride: usize = props.iter().map(|(_, s)| s).sum();
    let need = count.checked_mul(stride).ok_or_else(|| ply_err("vertex data overflow"))?;
    let data = &bytes[hdr_end..];
    if data.len() < need {
        return Err(FormatError::TruncatedPayload { expected: hdr_end + need, found: bytes.len() });
    }
    let has_color = props.iter().any(|(p, _)| *p == Prop::R);
    let mut positions = Vec::with_capacity(count);
    let mut colors = Vec::with_capacity(if has_color { count } else { 0 });
    for rec in data[..need].chunks_exact(stride) {
        let mut xyz = [0.0f64; 3];
        let mut rgb = DEFAULT_COLOR;
        let mut off = 0;
        for (p, size) in &props {
            let b = &rec[off..off + size];
            let f = || {
                if double {
                    f64::from_le_bytes(b.try_into().unwrap())
                } else {
                    f32::from_le_bytes(b.try_into().unwrap()) as f64
                }
            };
            match p {
                Prop::X => xyz[0] = f(),
                Prop::Y => xyz[1] = f(),
                Prop::Z => xyz[2] = f(),
                Prop::R => rgb[0] = b[0],
                Prop::G => rgb[1] = b[0],
                Prop::B => rgb[2] = b[0],
                Prop::Skip(_) => {}
            }
            off += size;
        }
        positions.push(Vec3::new(xyz[0], xyz[1], xyz[2]));
        if has_color {
            colors.push(rgb);
        }
    }
    PointCloud::from_parts(positions, has_color.then_some(colors), None).map_err(|e| ply_err(e.to_string()))
}

pub fn read_ply(path: impl AsRef<Path>) -> Result<PointCloud, FormatError> {
    decode_ply(&read_file(path.as_ref())?)
}

pub fn write_ply(cloud: &PointCloud, path: impl AsRef<Path>) -> Result<(), FormatError> {
    write_file(path.as_ref(), &encode_ply(cloud)?)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn header_advertises_vertex_count() {
        let c = PointCloud::from_positions(vec![Vec3::new(1.0, 2.0, 3.0)]).unwrap();
        let bytes = encode_ply(&c).unwrap();
        let text = String::from_utf8_lossy(&bytes);
        assert!(text.contains("element vertex 1\n"));
        assert!(text.contains("format binary_little_endian 1.0\n"));
        let back = decode_ply(&bytes).unwrap();
        assert_eq!(back.positions(), c.positions());
        assert_eq!(back.colors().unwrap(), &[[128, 128, 128]]);
    }

    #[test]
    fn empty_cloud() {
        let bytes = encode_ply(&PointCloud::new()).unwrap();
        assert!(String::from_utf8_lossy(&bytes).contains("element vertex 0\n"));
        assert!(bytes.ends_with(b"end_header\n"));
        assert!(decode_ply(&bytes).unwrap().is_empty());
    }

    #[test]
    fn truncated() {
        let c = PointCloud::from_positions(vec![Vec3::zeros(); 3]).unwrap();
        let bytes = encode_ply(&c).unwrap();
        assert!(matches!(decode_ply(&bytes[..bytes.len() - 1]), Err(FormatError::TruncatedPayload { .. })));
    }

    proptest! {
        #[test]
        fn round_trip(pts in prop::collection::vec((prop::array::uniform3(-1e3f32..1e3), any::<[u8; 3]>()), 0..50)) {
            let cloud = PointCloud::from_parts(
                pts.iter().map(|(p, _)| Vec3::new(p[0] as f64, p[1] as f64, p[2] as f64)).collect(),
                Some(pts.iter().map(|(_, c)| *c).collect()),
                None,
            ).unwrap();
            let bytes = encode_ply(&cloud).unwrap();
            let back = decode_ply(&bytes).unwrap();
            prop_assert_eq!(&back, &cloud);
            prop_assert_eq!(encode_ply(&back).unwrap(), bytes);
        }
    }
}
