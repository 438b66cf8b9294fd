//! Reader for the big-endian IDX container used by the MNIST files.

use std::path::Path;

use super::logistic::LogisticRegressionTarget;
use crate::error::{Error, Result};

const IMAGES_MAGIC: u32 = 0x0000_0803;
const LABELS_MAGIC: u32 = 0x0000_0801;

struct Cursor<'a> {
    bytes: &'a [u8],
    pos: usize,
    path: &'a str,
}

impl Cursor<'_> {
    fn take(&mut self, n: usize) -> Result<&[u8]> {
        if self.bytes.len() - self.pos < n {
            return Err(Error::IdxTruncated {
                path: self.path.to_owned(),
                offset: self.bytes.len() as u64,
            });
        }
        let out = &self.bytes[self.pos..self.pos + n];
        self.pos += n;
        Ok(out)
    }

    fn u32(&mut self) -> Result<u32> {
        let b = self.take(4)?;
        Ok(u32::from_be_bytes([b[0], b[1], b[2], b[3]]))
    }
}

fn check_magic(c: &mut Cursor<'_>, expected: u32) -> Result<()> {
    let found = c.u32()?;
    if found != expected {
        return Err(Error::IdxBadMagic {
            path: c.path.to_owned(),
            expected,
            found,
        });
    }
    Ok(())
}

/// Images as `(count, rows·cols, pixels)` with raw byte pixels.
pub fn read_idx_images(path: &Path) -> Result<(usize, usize, Vec<u8>)> {
    let bytes = std::fs::read(path)?;
    let name = path.display().to_string();
    let mut c = Cursor {
        bytes: &bytes,
        pos: 0,
        path: &name,
    };
    check_magic(&mut c, IMAGES_MAGIC)?;
    let count = c.u32()? as usize;
    let rows = c.u32()? as usize;
    let cols = c.u32()? as usize;
    let pixels = c.take(count * rows * cols)?.to_vec();
    Ok((count, rows * cols, pixels))
}

pub fn read_idx_labels(path: &Path) -> Result<Vec<u8>> {
    let bytes = std::fs::read(path)?;
    let name = path.display().to_string();
    let mut c = Cursor {
        bytes: &bytes,
        pos: 0,
        path: &name,
    };
    check_magic(&mut c, LABELS_MAGIC)?;
    let count = c.u32()? as usize;
    Ok(c.take(count)?.to_vec())
}

/// Loads an image/label IDX pair, keeps the two digits in `keep`, scales
/// pixels to `[0, 1]` and maps the smaller kept digit to label 0.
pub fn load_idx(
    images: &Path,
    labels: &Path,
    keep: &[u8],
    prior_variance: f64,
) -> Result<LogisticRegressionTarget> {
    let mut digits = keep.to_vec();
    digits.sort_unstable();
    digits.dedup();
    if digits.len() != 2 || digits[1] > 9 {
        return Err(Error::InvalidParameter(format!(
            "keep-digits must name two distinct digits 0-9, got {keep:?}"
        )));
    }
    let (count, dim, pixels) = read_idx_images(images)?;
    let raw_labels = read_idx_labels(labels)?;
    if raw_labels.len() != count {
        return Err(Error::IdxCountMismatch {
            images: count,
            labels: raw_labels.len(),
        });
    }
    let mut features = Vec::new();
    let mut out_labels = Vec::new();
    for (j, &y) in raw_labels.iter().enumerate() {
        let Some(class) = digits.iter().position(|&d| d == y) else {
            continue;
        };
        out_labels.push(class as u8);
        features.extend(pixels[j * dim..(j + 1) * dim].iter().map(|&p| p as f64 / 255.0));
    }
    if out_labels.is_empty() {
        return Err(Error::Degenerate(format!("no rows with digits {digits:?}")));
    }
    LogisticRegressionTarget::new(features, out_labels, dim, prior_variance)
}
