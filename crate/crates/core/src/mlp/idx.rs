//! Reader for the big-endian IDX containers MNIST ships in.

use std::path::{Path, PathBuf};

use ndarray::Array2;

use crate::error::{Error, Result};

pub const IMAGES_MAGIC: u32 = 2051;
pub const LABELS_MAGIC: u32 = 2049;

/// Images scaled to [0, 1] (one row each) with their digit labels.
#[derive(Debug, Clone, PartialEq)]
pub struct ImageSet {
    pub rows: usize,
    pub cols: usize,
    pub images: Array2<f64>,
    pub labels: Vec<u8>,
}

impl ImageSet {
    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    /// The first `n` examples.
    pub fn truncated(&self, n: usize) -> ImageSet {
        let n = n.min(self.len());
        ImageSet {
            rows: self.rows,
            cols: self.cols,
            images: self.images.slice(ndarray::s![..n, ..]).to_owned(),
            labels: self.labels[..n].to_vec(),
        }
    }
}

fn idx_error(path: &Path, offset: usize, message: impl Into<String>) -> Error {
    Error::Idx {
        path: path.to_path_buf(),
        offset,
        message: message.into(),
    }
}

fn read_u32(bytes: &[u8], offset: usize, path: &Path) -> Result<u32> {
    bytes
        .get(offset..offset + 4)
        .map(|b| u32::from_be_bytes([b[0], b[1], b[2], b[3]]))
        .ok_or_else(|| idx_error(path, offset, "file ends inside the header"))
}

/// Returns `(n, rows, cols, pixels scaled by 1/255)`.
pub fn parse_images(bytes: &[u8], path: &Path) -> Result<(usize, usize, usize, Vec<f64>)> {
    let magic = read_u32(bytes, 0, path)?;
    if magic != IMAGES_MAGIC {
        return Err(idx_error(path, 0, format!("expected magic {IMAGES_MAGIC}, found {magic}")));
    }
    let n = read_u32(bytes, 4, path)? as usize;
    let rows = read_u32(bytes, 8, path)? as usize;
    let cols = read_u32(bytes, 12, path)? as usize;
    let expected = n * rows * cols;
    let payload = &bytes[16..];
    if payload.len() < expected {
        return Err(idx_error(
            path,
            16 + payload.len(),
            format!("truncated: header announces {expected} pixel bytes, found {}", payload.len()),
        ));
    }
    if payload.len() > expected {
        return Err(idx_error(path, 16 + expected, "trailing bytes after the last image"));
    }
    Ok((n, rows, cols, payload.iter().map(|&p| p as f64 / 255.0).collect()))
}

pub fn parse_labels(bytes: &[u8], path: &Path) -> Result<Vec<u8>> {
    let magic = read_u32(bytes, 0, path)?;
    if magic != LABELS_MAGIC {
        return Err(idx_error(path, 0, format!("expected magic {LABELS_MAGIC}, found {magic}")));
    }
    let n = read_u32(bytes, 4, path)? as usize;
    let payload = &bytes[8..];
    if payload.len() != n {
        return Err(idx_error(
            path,
            8 + payload.len().min(n),
            format!("header announces {n} labels, found {}", payload.len()),
        ));
    }
    if let Some(k) = payload.iter().position(|&l| l > 9) {
        return Err(idx_error(path, 8 + k, format!("invalid label {}", payload[k])));
    }
    Ok(payload.to_vec())
}

fn read(path: &Path) -> Result<Vec<u8>> {
    std::fs::read(path).map_err(|e| Error::io(path, e))
}

pub fn load_idx(images_path: impl AsRef<Path>, labels_path: impl AsRef<Path>) -> Result<ImageSet> {
    let (ip, lp) = (images_path.as_ref(), labels_path.as_ref());
    let (n, rows, cols, pixels) = parse_images(&read(ip)?, ip)?;
    let labels = parse_labels(&read(lp)?, lp)?;
    if labels.len() != n {
        return Err(idx_error(
            lp,
            4,
            format!("{} labels for {n} images in {}", labels.len(), ip.display()),
        ));
    }
    let images = Array2::from_shape_vec((n, rows * cols), pixels)
        .map_err(|e| Error::Internal(e.to_string()))?;
    Ok(ImageSet {
        rows,
        cols,
        images,
        labels,
    })
}

/// Paths of the four standard MNIST files inside `dir`.
pub struct MnistFiles {
    pub train_images: PathBuf,
    pub train_labels: PathBuf,
    pub test_images: PathBuf,
    pub test_labels: PathBuf,
}

impl MnistFiles {
    pub fn in_dir(dir: impl AsRef<Path>) -> Self {
        let d = dir.as_ref();
        MnistFiles {
            train_images: d.join("train-images-idx3-ubyte"),
            train_labels: d.join("train-labels-idx1-ubyte"),
            test_images: d.join("t10k-images-idx3-ubyte"),
            test_labels: d.join("t10k-labels-idx1-ubyte"),
        }
    }

    pub fn exist(&self) -> bool {
        [&self.train_images, &self.train_labels, &self.test_images, &self.test_labels]
            .iter()
            .all(|p| p.is_file())
    }

    pub fn load(&self) -> Result<(ImageSet, ImageSet)> {
        Ok((
            load_idx(&self.train_images, &self.train_labels)?,
            load_idx(&self.test_images, &self.test_labels)?,
        ))
    }
}

/// Serializes images (values rounded back to bytes) in IDX format.
pub fn encode_images(n: usize, rows: usize, cols: usize, pixels: &[u8]) -> Vec<u8> {
    let mut out = Vec::with_capacity(16 + pixels.len());
    for v in [IMAGES_MAGIC, n as u32, rows as u32, cols as u32] {
        out.extend_from_slice(&v.to_be_bytes());
    }
    out.extend_from_slice(pixels);
    out
}

pub fn encode_labels(labels: &[u8]) -> Vec<u8> {
    let mut out = Vec::with_capacity(8 + labels.len());
    out.extend_from_slice(&LABELS_MAGIC.to_be_bytes());
    out.extend_from_slice(&(labels.len() as u32).to_be_bytes());
    out.extend_from_slice(labels);
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    fn p() -> &'static Path {
        Path::new("mem")
    }

    #[test]
    fn zero_image() {
        let bytes = encode_images(1, 28, 28, &[0u8; 784]);
        let (n, r, c, px) = parse_images(&bytes, p()).unwrap();
        assert_eq!((n, r, c), (1, 28, 28));
        assert!(px.iter().all(|&v| v == 0.0));
    }

    #[test]
    fn pixel_scaling() {
        let bytes = encode_images(1, 1, 2, &[255, 51]);
        let (_, _, _, px) = parse_images(&bytes, p()).unwrap();
        assert_eq!(px, vec![1.0, 0.2]);
    }

    #[test]
    fn label_out_of_range() {
        let err = parse_labels(&encode_labels(&[3, 10]), p()).unwrap_err();
        match err {
            Error::Idx { offset, .. } => assert_eq!(offset, 9),
            e => panic!("unexpected {e:?}"),
        }
    }

    #[test]
    fn bad_magic_and_truncation() {
        let mut bytes = encode_images(2, 2, 2, &[0; 8]);
        assert!(matches!(parse_images(&bytes[..12], p()), Err(Error::Idx { offset: 12, .. })));
        assert!(matches!(parse_images(&bytes[..20], p()), Err(Error::Idx { offset: 20, .. })));
        bytes[3] = 0;
        assert!(matches!(parse_images(&bytes, p()), Err(Error::Idx { offset: 0, .. })));
        assert!(parse_labels(&encode_images(1, 1, 1, &[0]), p()).is_err());
    }

    #[test]
    fn label_count_mismatch() {
        let mut bytes = encode_labels(&[1, 2, 3]);
        bytes.pop();
        assert!(parse_labels(&bytes, p()).is_err());
    }
}
