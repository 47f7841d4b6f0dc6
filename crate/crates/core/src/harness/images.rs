//! Image-directory loader for `root/<class_name>/*.ppm|pgm`.
//!
//! Only binary Netpbm is accepted:
//!
//! ```text
//! "P6" (RGB) or "P5" (gray) | whitespace | width | whitespace | height
//! | whitespace | maxval (1..=65535) | one whitespace byte | raster
//! ```
//!
//! `#` comments may appear between header fields. Raster samples are one
//! byte each when `maxval < 256`, otherwise two bytes big-endian, row-major,
//! channels interleaved. Values are scaled by `1/maxval`; gray images are
//! replicated to three channels. Classes are the sub-directory names in
//! sorted order; all images must share one size.

use std::path::Path;

use super::data::{Dataset, Labels};
use crate::error::{Error, Result};

/// A decoded image, `[C,H,W]` planar in `[0, 1]`.
#[derive(Debug, Clone, PartialEq)]
pub struct Netpbm {
    pub channels: usize,
    pub height: usize,
    pub width: usize,
    pub data: Vec<f32>,
}

struct Cursor<'a> {
    bytes: &'a [u8],
    pos: usize,
}

impl Cursor<'_> {
    fn skip_space(&mut self) {
        while let Some(&b) = self.bytes.get(self.pos) {
            if b == b'#' {
                while self.bytes.get(self.pos).is_some_and(|&b| b != b'\n') {
                    self.pos += 1;
                }
            } else if b.is_ascii_whitespace() {
                self.pos += 1;
            } else {
                break;
            }
        }
    }

    fn number(&mut self) -> Option<usize> {
        self.skip_space();
        let start = self.pos;
        while self.bytes.get(self.pos).is_some_and(u8::is_ascii_digit) {
            self.pos += 1;
        }
        std::str::from_utf8(&self.bytes[start..self.pos]).ok()?.parse().ok()
    }
}

pub fn decode_netpbm(bytes: &[u8]) -> Result<Netpbm> {
    let bad = |m: &str| Error::config(format!("netpbm: {m}"));
    let channels = match bytes.get(..2) {
        Some(b"P5") => 1,
        Some(b"P6") => 3,
        _ => return Err(bad("expected binary P5 or P6 magic")),
    };
    let mut cur = Cursor { bytes, pos: 2 };
    let width = cur.number().ok_or_else(|| bad("missing width"))?;
    let height = cur.number().ok_or_else(|| bad("missing height"))?;
    let maxval = cur.number().ok_or_else(|| bad("missing maxval"))?;
    if width == 0 || height == 0 || !(1..=65535).contains(&maxval) {
        return Err(bad("invalid width, height or maxval"));
    }
    if !bytes.get(cur.pos).is_some_and(u8::is_ascii_whitespace) {
        return Err(bad("header must end with one whitespace byte"));
    }
    let raster = &bytes[cur.pos + 1..];
    let depth = if maxval < 256 { 1 } else { 2 };
    let count = width * height * channels;
    if raster.len() < count * depth {
        return Err(bad("truncated raster"));
    }
    let plane = width * height;
    let mut data = vec![0f32; count];
    for i in 0..count {
        let v = if depth == 1 {
            raster[i] as usize
        } else {
            u16::from_be_bytes([raster[2 * i], raster[2 * i + 1]]) as usize
        };
        let (px, ch) = (i / channels, i % channels);
        data[ch * plane + px] = (v.min(maxval) as f64 / maxval as f64) as f32;
    }
    Ok(Netpbm {
        channels,
        height,
        width,
        data,
    })
}

fn sorted_entries(dir: &Path) -> Result<Vec<std::path::PathBuf>> {
    let mut v = std::fs::read_dir(dir)
        .map_err(|e| Error::io(dir, e))?
        .map(|e| e.map(|e| e.path()).map_err(|err| Error::io(dir, err)))
        .collect::<Result<Vec<_>>>()?;
    v.sort();
    Ok(v)
}

/// Loads every `.ppm`/`.pgm` under `root/<class>/` as a 3-channel dataset.
pub fn load_image_dir(root: &Path) -> Result<Dataset> {
    let classes: Vec<_> = sorted_entries(root)?.into_iter().filter(|p| p.is_dir()).collect();
    let mut images = Vec::new();
    let mut labels = Vec::new();
    let mut size: Option<(usize, usize)> = None;
    for (label, dir) in classes.iter().enumerate() {
        for file in sorted_entries(dir)? {
            let ext = file.extension().and_then(|e| e.to_str()).map(str::to_ascii_lowercase);
            if !matches!(ext.as_deref(), Some("ppm" | "pgm")) {
                continue;
            }
            let bytes = std::fs::read(&file).map_err(|e| Error::io(&file, e))?;
            let img = decode_netpbm(&bytes).map_err(|e| Error::config(format!("{}: {e}", file.display())))?;
            match size {
                None => size = Some((img.height, img.width)),
                Some(s) if s != (img.height, img.width) => {
                    return Err(Error::config(format!(
                        "{}: {}×{} differs from the first image's {}×{}",
                        file.display(),
                        img.height,
                        img.width,
                        s.0,
                        s.1
                    )))
                }
                Some(_) => {}
            }
            for ch in 0..3 {
                let src = ch.min(img.channels - 1);
                let plane = img.height * img.width;
                images.extend_from_slice(&img.data[src * plane..(src + 1) * plane]);
            }
            labels.push(label);
        }
    }
    let (h, w) = size.ok_or(Error::EmptyDataset)?;
    Dataset::new(
        root.display().to_string(),
        0,
        [3, h, w],
        classes.len(),
        images,
        Labels::Class(labels),
    )
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn decodes_gray_with_comment() {
        let mut b = b"P5\n# note\n2 1\n255\n".to_vec();
        b.extend([0u8, 255]);
        let img = decode_netpbm(&b).unwrap();
        assert_eq!((img.channels, img.height, img.width), (1, 1, 2));
        assert_eq!(img.data, vec![0.0, 1.0]);
    }

    #[test]
    fn decodes_wide_rgb() {
        let mut b = b"P6 1 1 65535 ".to_vec();
        b.extend([0xff, 0xff, 0, 0, 0x80, 0]);
        let img = decode_netpbm(&b).unwrap();
        assert_eq!(img.data[0], 1.0);
        assert_eq!(img.data[1], 0.0);
        assert!((img.data[2] - 32768.0 / 65535.0).abs() < 1e-7);
    }

    #[test]
    fn rejects_ascii_and_truncation() {
        assert!(decode_netpbm(b"P2 1 1 255 0").is_err());
        assert!(decode_netpbm(b"P5 2 2 255 \x00").is_err());
    }
}
