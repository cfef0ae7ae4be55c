//! MNIST IDX binaries: big-endian `u32` magic, `u32` dimensions, `u8` payload.

use std::io::Read;
use std::path::Path;

use super::{open_maybe_gz, Dataset, SparseExample, Task};
use crate::error::{Error, Result};

const IMAGE_MAGIC: u32 = 0x0000_0803;
const LABEL_MAGIC: u32 = 0x0000_0801;

/// Decodes an image/label pair into a multiclass(10) dataset with pixels
/// scaled to `[0, 1]` by `/255`. Zero pixels are not stored.
pub fn load_mnist_idx<I: Read, L: Read>(mut images: I, mut labels: L) -> Result<Dataset> {
    let mut image_bytes = Vec::new();
    images.read_to_end(&mut image_bytes)?;
    let mut label_bytes = Vec::new();
    labels.read_to_end(&mut label_bytes)?;

    let magic = read_u32(&image_bytes, 0, "image header")?;
    if magic != IMAGE_MAGIC {
        return Err(Error::Format {
            field: "image magic",
            reason: format!("bad image magic 0x{magic:08x}, expected 0x{IMAGE_MAGIC:08x}"),
        });
    }
    let count = read_u32(&image_bytes, 4, "image header")? as usize;
    let rows = read_u32(&image_bytes, 8, "image header")? as usize;
    let cols = read_u32(&image_bytes, 12, "image header")? as usize;

    let magic = read_u32(&label_bytes, 0, "label header")?;
    if magic != LABEL_MAGIC {
        return Err(Error::Format {
            field: "label magic",
            reason: format!("bad label magic 0x{magic:08x}, expected 0x{LABEL_MAGIC:08x}"),
        });
    }
    let label_count = read_u32(&label_bytes, 4, "label header")? as usize;
    if label_count != count {
        return Err(Error::Format {
            field: "item count",
            reason: format!("count mismatch: {count} images but {label_count} labels"),
        });
    }

    let pixels = rows * cols;
    let payload = &image_bytes[16..];
    if payload.len() < count * pixels {
        return Err(Error::Format {
            field: "image payload",
            reason: format!(
                "truncated: expected {} bytes, found {}",
                count * pixels,
                payload.len()
            ),
        });
    }
    let label_payload = &label_bytes[8..];
    if label_payload.len() < count {
        return Err(Error::Format {
            field: "label payload",
            reason: format!(
                "truncated: expected {count} bytes, found {}",
                label_payload.len()
            ),
        });
    }

    let mut examples = Vec::with_capacity(count);
    for (n, &label) in label_payload[..count].iter().enumerate() {
        if label > 9 {
            return Err(Error::Format {
                field: "label payload",
                reason: format!("label {label} at item {n} is not a digit"),
            });
        }
        let image = &payload[n * pixels..(n + 1) * pixels];
        let features = image
            .iter()
            .enumerate()
            .filter(|(_, &p)| p != 0)
            .map(|(j, &p)| (j, f64::from(p) / 255.0))
            .collect();
        examples.push(SparseExample::new(f64::from(label), features));
    }
    Dataset::new(examples, pixels, Task::Multiclass(10))
}

/// Loads (possibly gzipped) IDX files, keeping at most `limit` examples.
pub fn load_mnist_files(images: &Path, labels: &Path, limit: Option<usize>) -> Result<Dataset> {
    let data = load_mnist_idx(open_maybe_gz(images)?, open_maybe_gz(labels)?)?;
    Ok(match limit {
        Some(n) => data.truncated(n),
        None => data,
    })
}

/// Serializes `count` images of `rows x cols` bytes into IDX form.
pub fn encode_idx_images(count: u32, rows: u32, cols: u32, pixels: &[u8]) -> Vec<u8> {
    let mut out = Vec::with_capacity(16 + pixels.len());
    for word in [IMAGE_MAGIC, count, rows, cols] {
        out.extend_from_slice(&word.to_be_bytes());
    }
    out.extend_from_slice(pixels);
    out
}

/// Serializes labels into IDX form.
pub fn encode_idx_labels(labels: &[u8]) -> Vec<u8> {
    let mut out = Vec::with_capacity(8 + labels.len());
    out.extend_from_slice(&LABEL_MAGIC.to_be_bytes());
    out.extend_from_slice(&(labels.len() as u32).to_be_bytes());
    out.extend_from_slice(labels);
    out
}

fn read_u32(bytes: &[u8], offset: usize, field: &'static str) -> Result<u32> {
    bytes
        .get(offset..offset + 4)
        .map(|b| u32::from_be_bytes([b[0], b[1], b[2], b[3]]))
        .ok_or_else(|| Error::Format {
            field,
            reason: format!(
                "truncated: need {} bytes, found {}",
                offset + 4,
                bytes.len()
            ),
        })
}
