//! Dataset acquisition and splitting: a deterministic synthetic
//! shape-classification generator for fast experiments, and a reader for the
//! IDX binary image format. Datasets are immutable after load.

mod idx;
mod synth;

pub use idx::{read_idx, write_idx};
pub use synth::{synth_shapes, synth_shapes_with, SynthSpec};

use rand::Rng;

use crate::error::{Error, Result};
use crate::rng::substream;
use crate::tensor::TensorGrid;

/// Labeled image set, NCHW with pixel values in [0,1] (or standardized).
#[derive(Debug, Clone)]
pub struct Dataset {
    images: TensorGrid,
    labels: Vec<usize>,
    class_count: usize,
}

impl Dataset {
    pub fn new(images: TensorGrid, labels: Vec<usize>, class_count: usize) -> Result<Self> {
        if images.shape().len() != 4 || images.shape()[0] != labels.len() {
            return Err(Error::Data(format!(
                "{} labels for image tensor {:?}",
                labels.len(),
                images.shape()
            )));
        }
        if let Some(&bad) = labels.iter().find(|&&l| l >= class_count) {
            return Err(Error::Data(format!(
                "label {bad} out of range for {class_count} classes"
            )));
        }
        Ok(Self {
            images,
            labels,
            class_count,
        })
    }

    pub fn images(&self) -> &TensorGrid {
        &self.images
    }

    pub fn labels(&self) -> &[usize] {
        &self.labels
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    pub fn class_count(&self) -> usize {
        self.class_count
    }

    /// (channels, height, width) of one sample.
    pub fn sample_shape(&self) -> (usize, usize, usize) {
        let s = self.images.shape();
        (s[1], s[2], s[3])
    }

    pub fn subset(&self, idxs: &[usize]) -> Dataset {
        let s = self.images.shape();
        let sample = s[1] * s[2] * s[3];
        let mut data = Vec::with_capacity(idxs.len() * sample);
        let mut labels = Vec::with_capacity(idxs.len());
        for &i in idxs {
            data.extend_from_slice(&self.images.data()[i * sample..(i + 1) * sample]);
            labels.push(self.labels[i]);
        }
        Dataset {
            images: TensorGrid::new(vec![idxs.len(), s[1], s[2], s[3]], data).unwrap(),
            labels,
            class_count: self.class_count,
        }
    }
}

/// Validation split parameters.
#[derive(Debug, Clone)]
pub struct SplitSpec {
    pub val_fraction: f64,
    pub stratified: bool,
    pub seed: u64,
}

impl Default for SplitSpec {
    fn default() -> Self {
        Self {
            val_fraction: 0.10,
            stratified: true,
            seed: 0,
        }
    }
}

/// Deterministic (train, val) split; disjoint and exhaustive. Stratified mode
/// draws at least one validation sample per present class.
pub fn split(dataset: &Dataset, spec: &SplitSpec) -> Result<(Dataset, Dataset)> {
    let n = dataset.len();
    if n == 0 {
        return Err(Error::Data("cannot split an empty dataset".into()));
    }
    if !(0.0..1.0).contains(&spec.val_fraction) {
        return Err(Error::Config(format!(
            "val_fraction {} outside [0, 1)",
            spec.val_fraction
        )));
    }
    let mut rng = substream(spec.seed, "split");
    let shuffle = |idxs: &mut Vec<usize>, rng: &mut rand_chacha::ChaCha8Rng| {
        for i in (1..idxs.len()).rev() {
            let j = rng.gen_range(0..=i);
            idxs.swap(i, j);
        }
    };

    let mut val_idx: Vec<usize> = Vec::new();
    if spec.stratified {
        for class in 0..dataset.class_count() {
            let mut members: Vec<usize> = (0..n).filter(|&i| dataset.labels[i] == class).collect();
            if members.is_empty() {
                continue;
            }
            shuffle(&mut members, &mut rng);
            let want = ((spec.val_fraction * members.len() as f64).round() as usize)
                .max(1)
                .min(members.len());
            val_idx.extend_from_slice(&members[..want]);
        }
    } else {
        let mut order: Vec<usize> = (0..n).collect();
        shuffle(&mut order, &mut rng);
        let want = (spec.val_fraction * n as f64).floor() as usize;
        val_idx.extend_from_slice(&order[..want]);
    }
    if val_idx.is_empty() {
        return Err(Error::Data(
            "val_fraction yields an empty validation split".into(),
        ));
    }
    val_idx.sort_unstable();
    let in_val: Vec<bool> = {
        let mut v = vec![false; n];
        for &i in &val_idx {
            v[i] = true;
        }
        v
    };
    let train_idx: Vec<usize> = (0..n).filter(|&i| !in_val[i]).collect();
    if train_idx.is_empty() {
        return Err(Error::Data("split leaves an empty training set".into()));
    }
    Ok((dataset.subset(&train_idx), dataset.subset(&val_idx)))
}

/// Per-channel standardization statistics, computed on the training split
/// only and reused for val/test.
#[derive(Debug, Clone)]
pub struct Standardizer {
    mean: Vec<f64>,
    std: Vec<f64>,
}

impl Standardizer {
    pub fn fit(train: &Dataset) -> Standardizer {
        let (c, h, w) = train.sample_shape();
        let n = train.len();
        let plane = h * w;
        let mut mean = vec![0.0; c];
        let mut std = vec![0.0; c];
        let data = train.images.data();
        for ch in 0..c {
            let mut sum = 0.0;
            for i in 0..n {
                sum += data[(i * c + ch) * plane..][..plane].iter().sum::<f64>();
            }
            mean[ch] = sum / (n * plane) as f64;
            let mut var = 0.0;
            for i in 0..n {
                var += data[(i * c + ch) * plane..][..plane]
                    .iter()
                    .map(|v| (v - mean[ch]).powi(2))
                    .sum::<f64>();
            }
            std[ch] = (var / (n * plane) as f64).sqrt().max(1e-12);
        }
        Standardizer { mean, std }
    }

    pub fn apply(&self, dataset: &Dataset) -> Dataset {
        let (c, h, w) = dataset.sample_shape();
        let plane = h * w;
        let mut images = dataset.images.clone();
        let data = images.data_mut();
        for i in 0..dataset.len() {
            for ch in 0..c {
                for v in data[(i * c + ch) * plane..][..plane].iter_mut() {
                    *v = (*v - self.mean[ch]) / self.std[ch];
                }
            }
        }
        Dataset {
            images,
            labels: dataset.labels.clone(),
            class_count: dataset.class_count,
        }
    }

    pub fn mean(&self) -> &[f64] {
        &self.mean
    }

    pub fn std(&self) -> &[f64] {
        &self.std
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn toy_dataset(n: usize, classes: usize) -> Dataset {
        let mut data = Vec::with_capacity(n * 3 * 4 * 4);
        for i in 0..n {
            data.extend(std::iter::repeat(i as f64 / n as f64).take(3 * 4 * 4));
        }
        Dataset::new(
            TensorGrid::new(vec![n, 3, 4, 4], data).unwrap(),
            (0..n).map(|i| i % classes).collect(),
            classes,
        )
        .unwrap()
    }

    #[test]
    fn hundred_samples_split_ninety_ten_disjoint() {
        let ds = toy_dataset(100, 4);
        let (train, val) = split(
            &ds,
            &SplitSpec {
                val_fraction: 0.10,
                stratified: false,
                seed: 1,
            },
        )
        .unwrap();
        assert_eq!(train.len(), 90);
        assert_eq!(val.len(), 10);
        // Disjointness via pixel identity: every sample value is unique here.
        let mut seen: Vec<f64> = train
            .images()
            .data()
            .iter()
            .step_by(48)
            .chain(val.images().data().iter().step_by(48))
            .cloned()
            .collect();
        seen.sort_by(f64::total_cmp);
        seen.dedup();
        assert_eq!(seen.len(), 100);
    }

    #[test]
    fn zero_val_fraction_is_rejected() {
        let ds = toy_dataset(20, 2);
        let err = split(
            &ds,
            &SplitSpec {
                val_fraction: 0.0,
                stratified: false,
                seed: 0,
            },
        )
        .unwrap_err();
        assert_eq!(err.category(), "data");
    }

    #[test]
    fn stratified_split_covers_every_class() {
        let ds = toy_dataset(100, 10);
        let (_, val) = split(&ds, &SplitSpec::default()).unwrap();
        for class in 0..10 {
            assert!(
                val.labels().iter().any(|&l| l == class),
                "class {class} missing from val"
            );
        }
    }

    #[test]
    fn split_is_deterministic_per_seed() {
        let ds = toy_dataset(50, 5);
        let spec = SplitSpec {
            val_fraction: 0.2,
            stratified: true,
            seed: 7,
        };
        let (t1, v1) = split(&ds, &spec).unwrap();
        let (t2, v2) = split(&ds, &spec).unwrap();
        assert_eq!(t1.labels(), t2.labels());
        assert_eq!(v1.images().data(), v2.images().data());
    }

    #[test]
    fn standardizing_a_standardized_split_is_idempotent() {
        let ds = toy_dataset(64, 4);
        let standardizer = Standardizer::fit(&ds);
        let once = standardizer.apply(&ds);
        let again = Standardizer::fit(&once);
        for ch in 0..3 {
            assert!(again.mean()[ch].abs() < 1e-6);
            assert!((again.std()[ch] - 1.0).abs() < 1e-6);
        }
    }
}
