//! IDX reader for the MNIST image and label files.
//!
//! Layout (all integers big-endian `u32`):
//!
//! * images: magic `0x00000803` (2051), count, rows, cols, then `count*rows*cols` pixel bytes
//! * labels: magic `0x00000801` (2049), count, then `count` label bytes

use std::path::Path;

use crate::error::{Error, Result};
use crate::margin::{LabeledExample, Sign};
use crate::weak::normalize_image;

pub const IMAGE_MAGIC: u32 = 2051;
pub const LABEL_MAGIC: u32 = 2049;

/// Normalized images with their digit labels.
#[derive(Clone, Debug, PartialEq)]
pub struct Digits {
    pub rows: usize,
    pub cols: usize,
    pub images: Vec<Vec<f64>>,
    pub labels: Vec<u8>,
}

impl Digits {
    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    /// First `n` examples (or all of them).
    pub fn take(&self, n: usize) -> Digits {
        let n = n.min(self.len());
        Digits {
            rows: self.rows,
            cols: self.cols,
            images: self.images[..n].to_vec(),
            labels: self.labels[..n].to_vec(),
        }
    }

    /// Binary view: `+1` for `digit`, `-1` for every other class.
    pub fn one_vs_all(&self, digit: u8) -> Vec<LabeledExample> {
        self.images
            .iter()
            .zip(&self.labels)
            .map(|(x, &y)| {
                LabeledExample::new(x.clone(), Sign::from_bool(y == digit))
                    .expect("normalized pixels are finite")
            })
            .collect()
    }

    pub fn pairs(&self) -> Vec<(Vec<f64>, u8)> {
        self.images
            .iter()
            .cloned()
            .zip(self.labels.iter().copied())
            .collect()
    }
}

fn read_u32(bytes: &[u8], offset: usize, what: &str) -> Result<u32> {
    bytes
        .get(offset..offset + 4)
        .map(|b| u32::from_be_bytes([b[0], b[1], b[2], b[3]]))
        .ok_or_else(|| Error::Format {
            offset: offset as u64,
            message: format!("file truncated while reading {what}"),
        })
}

/// Parses an IDX image file into raw pixel bytes: `(rows, cols, images)`.
pub fn parse_idx_images(bytes: &[u8]) -> Result<(usize, usize, Vec<Vec<u8>>)> {
    let magic = read_u32(bytes, 0, "image magic")?;
    if magic != IMAGE_MAGIC {
        return Err(Error::Format {
            offset: 0,
            message: format!("bad image magic {magic}, expected {IMAGE_MAGIC}"),
        });
    }
    let count = read_u32(bytes, 4, "image count")? as usize;
    let rows = read_u32(bytes, 8, "row count")? as usize;
    let cols = read_u32(bytes, 12, "column count")? as usize;
    let size = rows * cols;
    let need = 16 + count * size;
    if bytes.len() < need {
        return Err(Error::Format {
            offset: bytes.len() as u64,
            message: format!("image data truncated: {need} bytes expected"),
        });
    }
    let images = bytes[16..need]
        .chunks_exact(size.max(1))
        .take(count)
        .map(<[u8]>::to_vec)
        .collect();
    Ok((rows, cols, images))
}

pub fn parse_idx_labels(bytes: &[u8]) -> Result<Vec<u8>> {
    let magic = read_u32(bytes, 0, "label magic")?;
    if magic != LABEL_MAGIC {
        return Err(Error::Format {
            offset: 0,
            message: format!("bad label magic {magic}, expected {LABEL_MAGIC}"),
        });
    }
    let count = read_u32(bytes, 4, "label count")? as usize;
    let labels = bytes.get(8..8 + count).ok_or_else(|| Error::Format {
        offset: bytes.len() as u64,
        message: format!("label data truncated: {} bytes expected", 8 + count),
    })?;
    if let Some(pos) = labels.iter().position(|&l| l > 9) {
        return Err(Error::Format {
            offset: (8 + pos) as u64,
            message: format!("label {} is not a digit", labels[pos]),
        });
    }
    Ok(labels.to_vec())
}

/// Builds [`Digits`] from IDX bytes: pixels scaled to `[0, 1]`, then each image standardized.
pub fn decode_digits(image_bytes: &[u8], label_bytes: &[u8]) -> Result<Digits> {
    let (rows, cols, raw) = parse_idx_images(image_bytes)?;
    let labels = parse_idx_labels(label_bytes)?;
    if raw.len() != labels.len() {
        return Err(Error::Format {
            offset: 4,
            message: format!("{} images but {} labels", raw.len(), labels.len()),
        });
    }
    let images = raw
        .iter()
        .map(|img| {
            let scaled: Vec<f64> = img.iter().map(|&p| f64::from(p) / 255.0).collect();
            normalize_image(&scaled)
        })
        .collect();
    Ok(Digits {
        rows,
        cols,
        images,
        labels,
    })
}

pub fn load_mnist_idx(image_path: &Path, label_path: &Path) -> Result<Digits> {
    let images = std::fs::read(image_path).map_err(|e| Error::io(image_path, e))?;
    let labels = std::fs::read(label_path).map_err(|e| Error::io(label_path, e))?;
    decode_digits(&images, &labels).map_err(|e| {
        e.context(format!(
            "reading {} / {}",
            image_path.display(),
            label_path.display()
        ))
    })
}

/// Serializes raw images in IDX format.
pub fn encode_idx_images(rows: usize, cols: usize, images: &[Vec<u8>]) -> Vec<u8> {
    let mut out = Vec::with_capacity(16 + images.len() * rows * cols);
    for v in [IMAGE_MAGIC, images.len() as u32, rows as u32, cols as u32] {
        out.extend_from_slice(&v.to_be_bytes());
    }
    for img in images {
        out.extend_from_slice(img);
    }
    out
}

pub fn encode_idx_labels(labels: &[u8]) -> Vec<u8> {
    let mut out = Vec::with_capacity(8 + labels.len());
    out.extend_from_slice(&LABEL_MAGIC.to_be_bytes());
    out.extend_from_slice(&(labels.len() as u32).to_be_bytes());
    out.extend_from_slice(labels);
    out
}
