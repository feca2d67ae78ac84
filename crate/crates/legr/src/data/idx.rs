//! IDX binary image format (big-endian, as used by the MNIST family).
//!
//! Images: magic 0x00000803, dims N, H, W, one byte per pixel. Labels: magic
//! 0x00000801, dim N, one byte per label. Pixels are scaled to [0,1] on read.

use std::path::Path;

use super::Dataset;
use crate::error::{Error, Result};
use crate::tensor::TensorGrid;

const IMAGES_MAGIC: u32 = 0x0000_0803;
const LABELS_MAGIC: u32 = 0x0000_0801;

struct Reader<'a> {
    bytes: &'a [u8],
    pos: usize,
    path: &'a str,
}

impl<'a> Reader<'a> {
    fn take(&mut self, n: usize) -> Result<&'a [u8]> {
        if self.pos + n > self.bytes.len() {
            return Err(Error::Data(format!(
                "{}: truncated payload (wanted {n} bytes at offset {})",
                self.path, self.pos
            )));
        }
        let s = &self.bytes[self.pos..self.pos + n];
        self.pos += n;
        Ok(s)
    }

    fn u32_be(&mut self) -> Result<u32> {
        Ok(u32::from_be_bytes(self.take(4)?.try_into().unwrap()))
    }
}

/// Parse an IDX image/label pair into a dataset with C = 1. The class count
/// is the largest label plus one.
pub fn read_idx(images_path: impl AsRef<Path>, labels_path: impl AsRef<Path>) -> Result<Dataset> {
    let images_path = images_path.as_ref();
    let labels_path = labels_path.as_ref();
    let image_bytes = std::fs::read(images_path)
        .map_err(|e| Error::io(images_path.display().to_string(), e))?;
    let label_bytes = std::fs::read(labels_path)
        .map_err(|e| Error::io(labels_path.display().to_string(), e))?;
    let images_name = images_path.display().to_string();
    let labels_name = labels_path.display().to_string();

    let mut r = Reader {
        bytes: &image_bytes,
        pos: 0,
        path: &images_name,
    };
    let magic = r.u32_be()?;
    if magic != IMAGES_MAGIC {
        return Err(Error::Data(format!(
            "{images_name}: bad magic {magic:#010x}, expected {IMAGES_MAGIC:#010x} for images"
        )));
    }
    let n = r.u32_be()? as usize;
    let h = r.u32_be()? as usize;
    let w = r.u32_be()? as usize;
    let pixels = r.take(n * h * w)?;

    let mut rl = Reader {
        bytes: &label_bytes,
        pos: 0,
        path: &labels_name,
    };
    let lmagic = rl.u32_be()?;
    if lmagic != LABELS_MAGIC {
        return Err(Error::Data(format!(
            "{labels_name}: bad magic {lmagic:#010x}, expected {LABELS_MAGIC:#010x} for labels"
        )));
    }
    let ln = rl.u32_be()? as usize;
    if ln != n {
        return Err(Error::Data(format!(
            "count mismatch: {n} images in {images_name} but {ln} labels in {labels_name}"
        )));
    }
    let raw_labels = rl.take(ln)?;

    let data: Vec<f64> = pixels.iter().map(|&b| b as f64 / 255.0).collect();
    let labels: Vec<usize> = raw_labels.iter().map(|&b| b as usize).collect();
    let class_count = labels.iter().max().map(|&m| m + 1).unwrap_or(1).max(2);
    Dataset::new(TensorGrid::new(vec![n, 1, h, w], data)?, labels, class_count)
}

/// Write a single-channel dataset as an IDX pair, quantizing pixels to bytes.
pub fn write_idx(
    dataset: &Dataset,
    images_path: impl AsRef<Path>,
    labels_path: impl AsRef<Path>,
) -> Result<()> {
    let (c, h, w) = dataset.sample_shape();
    if c != 1 {
        return Err(Error::Data(format!(
            "IDX images are single-channel; dataset has {c} channels"
        )));
    }
    let n = dataset.len();
    let mut image_bytes = Vec::with_capacity(16 + n * h * w);
    image_bytes.extend_from_slice(&IMAGES_MAGIC.to_be_bytes());
    image_bytes.extend_from_slice(&(n as u32).to_be_bytes());
    image_bytes.extend_from_slice(&(h as u32).to_be_bytes());
    image_bytes.extend_from_slice(&(w as u32).to_be_bytes());
    for &v in dataset.images().data() {
        image_bytes.push((v.clamp(0.0, 1.0) * 255.0).round() as u8);
    }

    let mut label_bytes = Vec::with_capacity(8 + n);
    label_bytes.extend_from_slice(&LABELS_MAGIC.to_be_bytes());
    label_bytes.extend_from_slice(&(n as u32).to_be_bytes());
    for &l in dataset.labels() {
        label_bytes.push(l as u8);
    }

    let images_path = images_path.as_ref();
    std::fs::write(images_path, image_bytes)
        .map_err(|e| Error::io(images_path.display().to_string(), e))?;
    let labels_path = labels_path.as_ref();
    std::fs::write(labels_path, label_bytes)
        .map_err(|e| Error::io(labels_path.display().to_string(), e))
}

#[cfg(test)]
mod tests {
    use super::*;

    /// Hand-encoded pair: two 4x4 images with known bytes.
    fn fixture() -> (Vec<u8>, Vec<u8>) {
        let mut images = vec![0x00, 0x00, 0x08, 0x03, 0, 0, 0, 2, 0, 0, 0, 4, 0, 0, 0, 4];
        images.extend((0u8..16).map(|i| i * 10)); // image 0
        images.extend((0u8..16).map(|i| 255 - i)); // image 1
        let labels = vec![0x00, 0x00, 0x08, 0x01, 0, 0, 0, 2, 1, 0];
        (images, labels)
    }

    #[test]
    fn hand_built_fixture_recovers_exact_pixels() {
        let dir = tempfile::tempdir().unwrap();
        let (images, labels) = fixture();
        let ip = dir.path().join("img.idx");
        let lp = dir.path().join("lab.idx");
        std::fs::write(&ip, images).unwrap();
        std::fs::write(&lp, labels).unwrap();
        let ds = read_idx(&ip, &lp).unwrap();
        assert_eq!(ds.len(), 2);
        assert_eq!(ds.sample_shape(), (1, 4, 4));
        assert_eq!(ds.labels(), &[1, 0]);
        assert_eq!(ds.images().at4(0, 0, 0, 3), 30.0 / 255.0);
        assert_eq!(ds.images().at4(1, 0, 0, 0), 1.0);
        assert_eq!(ds.images().at4(1, 0, 3, 3), 240.0 / 255.0);
    }

    #[test]
    fn label_file_with_image_magic_is_bad_magic() {
        let dir = tempfile::tempdir().unwrap();
        let (images, _) = fixture();
        let ip = dir.path().join("img.idx");
        let lp = dir.path().join("lab.idx");
        std::fs::write(&ip, &images).unwrap();
        std::fs::write(&lp, &images).unwrap(); // labels path holds image magic
        let err = read_idx(&ip, &lp).unwrap_err();
        assert!(err.to_string().contains("bad magic"), "{err}");
    }

    #[test]
    fn image_label_count_mismatch_is_detected() {
        let dir = tempfile::tempdir().unwrap();
        let (images, mut labels) = fixture();
        labels[7] = 3; // claim 3 labels
        labels.push(2);
        let ip = dir.path().join("img.idx");
        let lp = dir.path().join("lab.idx");
        std::fs::write(&ip, images).unwrap();
        std::fs::write(&lp, labels).unwrap();
        let err = read_idx(&ip, &lp).unwrap_err();
        assert!(err.to_string().contains("count mismatch"), "{err}");
    }

    #[test]
    fn truncated_payload_is_detected() {
        let dir = tempfile::tempdir().unwrap();
        let (images, labels) = fixture();
        let ip = dir.path().join("img.idx");
        let lp = dir.path().join("lab.idx");
        std::fs::write(&ip, &images[..images.len() - 3]).unwrap();
        std::fs::write(&lp, labels).unwrap();
        let err = read_idx(&ip, &lp).unwrap_err();
        assert!(err.to_string().contains("truncated"), "{err}");
    }

    #[test]
    fn write_read_round_trip_preserves_quantized_pixels() {
        let dir = tempfile::tempdir().unwrap();
        let data: Vec<f64> = (0..2 * 16).map(|i| (i % 256) as f64 / 255.0).collect();
        let ds = Dataset::new(
            TensorGrid::new(vec![2, 1, 4, 4], data).unwrap(),
            vec![0, 1],
            2,
        )
        .unwrap();
        let ip = dir.path().join("img.idx");
        let lp = dir.path().join("lab.idx");
        write_idx(&ds, &ip, &lp).unwrap();
        let back = read_idx(&ip, &lp).unwrap();
        assert_eq!(back.images().data(), ds.images().data());
        assert_eq!(back.labels(), ds.labels());
    }
}
