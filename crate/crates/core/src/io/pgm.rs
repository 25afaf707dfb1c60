use std::path::{Path, PathBuf};

use super::{read_file, write_file};
use crate::error::FormatError;
use crate::raster::{BinaryMask, RgbImage};

/// Gray levels at or above this value are foreground.
pub const MASK_THRESHOLD: u8 = 128;

fn pgm_err(msg: impl Into<String>) -> FormatError {
    FormatError::Pgm(msg.into())
}

/// Parses a binary (`P5`) PGM with maxval 255. Returns `(width, height, pixels)`.
pub fn decode_pgm(bytes: &[u8]) -> Result<(usize, usize, Vec<u8>), FormatError> {
    if bytes.len() < 2 || &bytes[..2] != b"P5" {
        return Err(pgm_err("not a binary P5 file"));
    }
    let mut pos = 2;
    let mut fields = [0usize; 3];
    for field in fields.iter_mut() {
        // whitespace and comments
        loop {
            match bytes.get(pos) {
                Some(b) if b.is_ascii_whitespace() => pos += 1,
                Some(b'#') => {
                    while bytes.get(pos).is_some_and(|b| *b != b'\n') {
                        pos += 1;
                    }
                }
                Some(_) => break,
                None => return Err(pgm_err("header ends early")),
            }
        }
        let start = pos;
        while bytes.get(pos).is_some_and(|b| b.is_ascii_digit()) {
            pos += 1;
        }
        if start == pos {
            return Err(pgm_err("expected a number in the header"));
        }
        *field = std::str::from_utf8(&bytes[start..pos])
            .unwrap()
            .parse()
            .map_err(|_| pgm_err("header number out of range"))?;
    }
    let [w, h, maxval] = fields;
    if maxval != 255 {
        return Err(pgm_err(format!("maxval {maxval} unsupported (need 255)")));
    }
    if w == 0 || h == 0 {
        return Err(pgm_err("zero dimension"));
    }
    if !bytes.get(pos).is_some_and(|b| b.is_ascii_whitespace()) {
        return Err(pgm_err("missing whitespace after maxval"));
    }
    pos += 1;
    let n = w.checked_mul(h).ok_or_else(|| pgm_err("dimension overflow"))?;
    let data = &bytes[pos..];
    if data.len() < n {
        return Err(FormatError::TruncatedPayload { expected: pos + n, found: bytes.len() });
    }
    Ok((w, h, data[..n].to_vec()))
}

pub fn encode_pgm(width: usize, height: usize, pixels: &[u8]) -> Vec<u8> {
    assert_eq!(pixels.len(), width * height);
    let mut out = format!("P5\n{width} {height}\n255\n").into_bytes();
    out.extend_from_slice(pixels);
    out
}

pub fn read_pgm(path: impl AsRef<Path>) -> Result<(usize, usize, Vec<u8>), FormatError> {
    decode_pgm(&read_file(path.as_ref())?)
}

pub fn write_pgm(path: impl AsRef<Path>, width: usize, height: usize, pixels: &[u8]) -> Result<(), FormatError> {
    write_file(path.as_ref(), &encode_pgm(width, height, pixels))
}

pub fn read_mask(path: impl AsRef<Path>) -> Result<BinaryMask, FormatError> {
    let (w, h, px) = read_pgm(path)?;
    BinaryMask::new(w, h, px.iter().map(|v| *v >= MASK_THRESHOLD).collect()).map_err(|e| pgm_err(e.to_string()))
}

/// Foreground as 255, background as 0.
pub fn write_mask(mask: &BinaryMask, path: impl AsRef<Path>) -> Result<(), FormatError> {
    let px: Vec<u8> = mask.values().iter().map(|v| if *v { 255 } else { 0 }).collect();
    write_pgm(path, mask.width(), mask.height(), &px)
}

fn channel_paths(stem: &Path) -> [PathBuf; 3] {
    let base = stem.to_string_lossy();
    [
        PathBuf::from(format!("{base}_r.pgm")),
        PathBuf::from(format!("{base}_g.pgm")),
        PathBuf::from(format!("{base}_b.pgm")),
    ]
}

/// Writes `<stem>_r.pgm`, `<stem>_g.pgm`, `<stem>_b.pgm`.
pub fn write_rgb_triplet(img: &RgbImage, stem: impl AsRef<Path>) -> Result<(), FormatError> {
    let planes = img.channels();
    for (path, plane) in channel_paths(stem.as_ref()).iter().zip(&planes) {
        write_pgm(path, img.width(), img.height(), plane)?;
    }
    Ok(())
}

/// Reads the triplet written by [`write_rgb_triplet`]; `None` when the red
/// plane does not exist.
pub fn read_rgb_triplet(stem: impl AsRef<Path>) -> Result<Option<RgbImage>, FormatError> {
    let paths = channel_paths(stem.as_ref());
    if !paths[0].exists() {
        return Ok(None);
    }
    let (w, h, r) = read_pgm(&paths[0])?;
    let (wg, hg, g) = read_pgm(&paths[1])?;
    let (wb, hb, b) = read_pgm(&paths[2])?;
    if (wg, hg) != (w, h) || (wb, hb) != (w, h) {
        return Err(pgm_err("color planes differ in size"));
    }
    RgbImage::from_channels(w, h, &r, &g, &b).map(Some).map_err(|e| pgm_err(e.to_string()))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn mask_from(px: &[u8], w: usize) -> BinaryMask {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("m.pgm");
        write_pgm(&p, w, px.len() / w, px).unwrap();
        read_mask(&p).unwrap()
    }

    #[test]
    fn thresholds() {
        assert!(mask_from(&[255; 6], 3).values().iter().all(|v| *v));
        assert!(mask_from(&[0; 6], 3).values().iter().all(|v| !*v));
        assert_eq!(mask_from(&[127, 128], 2).values(), &[false, true]);
    }

    #[test]
    fn rejects_p2_and_bad_maxval() {
        assert!(decode_pgm(b"P2\n1 1\n255\n0").is_err());
        assert!(decode_pgm(b"P5\n1 1\n65535\n\0\0").is_err());
        assert!(decode_pgm(b"P5\n2 2\n255\n\0").is_err());
    }

    #[test]
    fn header_comments() {
        let (w, h, px) = decode_pgm(b"P5 # made by hand\n2 # w\n1\n255\n\x07\x09").unwrap();
        assert_eq!((w, h, px), (2, 1, vec![7, 9]));
    }

    #[test]
    fn rgb_triplet_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let img = RgbImage::new(2, 1, vec![[1, 2, 3], [250, 251, 252]]).unwrap();
        let stem = dir.path().join("view_1");
        write_rgb_triplet(&img, &stem).unwrap();
        assert_eq!(read_rgb_triplet(&stem).unwrap().unwrap(), img);
        assert!(read_rgb_triplet(dir.path().join("nope")).unwrap().is_none());
    }
}
