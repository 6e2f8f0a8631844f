use std::fs;
use std::path::Path;

use crate::error::{Error, Result};

pub const IMAGES_MAGIC: u32 = 0x0000_0803;
pub const LABELS_MAGIC: u32 = 0x0000_0801;

/// Decoded image/label pairs from a pair of IDX files.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RawImageSet {
    pub rows: usize,
    pub cols: usize,
    /// Row-major pixels, `count * rows * cols` bytes.
    pub pixels: Vec<u8>,
    pub labels: Vec<u8>,
}

impl RawImageSet {
    pub fn new(rows: usize, cols: usize, pixels: Vec<u8>, labels: Vec<u8>) -> Result<Self> {
        if pixels.len() != labels.len() * rows * cols {
            return Err(Error::Consistency(format!(
                "{} pixel bytes cannot hold {} images of {rows}x{cols}",
                pixels.len(),
                labels.len()
            )));
        }
        if let Some(bad) = labels.iter().find(|&&l| l > 9) {
            return Err(Error::Format(format!("label {bad} outside 0..=9")));
        }
        Ok(Self {
            rows,
            cols,
            pixels,
            labels,
        })
    }

    pub fn count(&self) -> usize {
        self.labels.len()
    }

    pub fn image_len(&self) -> usize {
        self.rows * self.cols
    }

    pub fn image(&self, i: usize) -> &[u8] {
        let len = self.image_len();
        &self.pixels[i * len..(i + 1) * len]
    }

    /// Encodes back to `(images, labels)` IDX byte streams.
    pub fn to_idx_bytes(&self) -> (Vec<u8>, Vec<u8>) {
        let mut images = Vec::with_capacity(16 + self.pixels.len());
        images.extend_from_slice(&IMAGES_MAGIC.to_be_bytes());
        for dim in [self.count(), self.rows, self.cols] {
            images.extend_from_slice(&(dim as u32).to_be_bytes());
        }
        images.extend_from_slice(&self.pixels);

        let mut labels = Vec::with_capacity(8 + self.labels.len());
        labels.extend_from_slice(&LABELS_MAGIC.to_be_bytes());
        labels.extend_from_slice(&(self.count() as u32).to_be_bytes());
        labels.extend_from_slice(&self.labels);
        (images, labels)
    }

    pub fn write_idx(&self, images_path: &Path, labels_path: &Path) -> Result<()> {
        let (images, labels) = self.to_idx_bytes();
        fs::write(images_path, images).map_err(|e| Error::io(images_path, e))?;
        fs::write(labels_path, labels).map_err(|e| Error::io(labels_path, e))
    }
}

struct Header<'a> {
    dims: Vec<usize>,
    body: &'a [u8],
}

fn read_header<'a>(bytes: &'a [u8], expected_magic: u32, ndims: usize, what: &str) -> Result<Header<'a>> {
    let header_len = 4 + 4 * ndims;
    if bytes.len() < header_len {
        return Err(Error::Format(format!(
            "{what} file is {} bytes, shorter than its {header_len}-byte header",
            bytes.len()
        )));
    }
    let word = |i: usize| u32::from_be_bytes(bytes[4 * i..4 * i + 4].try_into().unwrap());
    let magic = word(0);
    if magic != expected_magic {
        return Err(Error::Format(format!(
            "{what} file has magic {magic:#010x}, expected {expected_magic:#010x}"
        )));
    }
    let dims = (1..=ndims).map(|i| word(i) as usize).collect();
    Ok(Header {
        dims,
        body: &bytes[header_len..],
    })
}

/// Decodes an IDX3 image file into `(count, rows, cols, pixels)`.
pub fn decode_images(bytes: &[u8]) -> Result<(usize, usize, usize, Vec<u8>)> {
    let Header { dims, body } = read_header(bytes, IMAGES_MAGIC, 3, "images")?;
    let (count, rows, cols) = (dims[0], dims[1], dims[2]);
    let expected = count * rows * cols;
    if body.len() != expected {
        return Err(Error::Format(format!(
            "images body is {} bytes, header declares {count}x{rows}x{cols} = {expected}",
            body.len()
        )));
    }
    Ok((count, rows, cols, body.to_vec()))
}

/// Decodes an IDX1 label file.
pub fn decode_labels(bytes: &[u8]) -> Result<Vec<u8>> {
    let Header { dims, body } = read_header(bytes, LABELS_MAGIC, 1, "labels")?;
    if body.len() != dims[0] {
        return Err(Error::Format(format!(
            "labels body is {} bytes, header declares {}",
            body.len(),
            dims[0]
        )));
    }
    Ok(body.to_vec())
}

/// Loads an uncompressed MNIST image/label file pair.
pub fn load_mnist_idx(images_path: &Path, labels_path: &Path) -> Result<RawImageSet> {
    let image_bytes = fs::read(images_path).map_err(|e| Error::io(images_path, e))?;
    let label_bytes = fs::read(labels_path).map_err(|e| Error::io(labels_path, e))?;
    let (count, rows, cols, pixels) = decode_images(&image_bytes)?;
    let labels = decode_labels(&label_bytes)?;
    if labels.len() != count {
        return Err(Error::Consistency(format!(
            "{count} images but {} labels",
            labels.len()
        )));
    }
    RawImageSet::new(rows, cols, pixels, labels)
}
