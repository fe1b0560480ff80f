//! Dataset loading (IDX), synthetic ground-truth datasets and quantile binning.

use std::fs;
use std::io::{self, Write};
use std::path::Path;

use rand::Rng;
use rand_distr::{Distribution, Normal};
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::rng::seeded;

const IDX_IMAGES_MAGIC: u32 = 0x0000_0803;
const IDX_LABELS_MAGIC: u32 = 0x0000_0801;

/// Flattened square grayscale images with integer class labels.
///
/// `features` is row-major `num_samples × num_features`, values in `[0, 1]`.
#[derive(Debug, Clone, PartialEq)]
pub struct ImageDataset {
    pub num_samples: usize,
    pub num_features: usize,
    pub width: usize,
    pub features: Vec<f32>,
    pub labels: Vec<usize>,
    pub num_classes: usize,
}

impl ImageDataset {
    /// Builds a dataset and checks every invariant.
    pub fn new(
        width: usize,
        features: Vec<f32>,
        labels: Vec<usize>,
        num_classes: usize,
    ) -> Result<Self> {
        let num_features = width * width;
        if width == 0 {
            return Err(Error::invalid("image width must be at least 1"));
        }
        if labels.is_empty() {
            return Err(Error::Empty("dataset has no samples".into()));
        }
        if features.len() != labels.len() * num_features {
            return Err(Error::consistency(format!(
                "{} feature values for {} samples of {} pixels",
                features.len(),
                labels.len(),
                num_features
            )));
        }
        if let Some(bad) = features.iter().find(|v| !(0.0..=1.0).contains(*v)) {
            return Err(Error::consistency(format!(
                "feature value {bad} outside [0, 1]"
            )));
        }
        if let Some(bad) = labels.iter().find(|&&y| y >= num_classes) {
            return Err(Error::consistency(format!(
                "label {bad} outside [0, {num_classes})"
            )));
        }
        Ok(Self {
            num_samples: labels.len(),
            num_features,
            width,
            features,
            labels,
            num_classes,
        })
    }

    pub fn sample(&self, s: usize) -> &[f32] {
        &self.features[s * self.num_features..(s + 1) * self.num_features]
    }

    /// First `count` samples (all of them if `count` is larger).
    pub fn take(&self, count: usize) -> ImageDataset {
        let count = count.min(self.num_samples).max(1);
        ImageDataset {
            num_samples: count,
            num_features: self.num_features,
            width: self.width,
            features: self.features[..count * self.num_features].to_vec(),
            labels: self.labels[..count].to_vec(),
            num_classes: self.num_classes,
        }
    }

    /// Splits into the first `at` samples and the rest; both parts must be non-empty.
    pub fn split(&self, at: usize) -> Result<(ImageDataset, ImageDataset)> {
        if at == 0 || at >= self.num_samples {
            return Err(Error::invalid(format!(
                "cannot split {} samples at {at}",
                self.num_samples
            )));
        }
        let cut = at * self.num_features;
        let part = |features: &[f32], labels: &[usize]| ImageDataset {
            num_samples: labels.len(),
            num_features: self.num_features,
            width: self.width,
            features: features.to_vec(),
            labels: labels.to_vec(),
            num_classes: self.num_classes,
        };
        Ok((
            part(&self.features[..cut], &self.labels[..at]),
            part(&self.features[cut..], &self.labels[at..]),
        ))
    }

    /// Row-major `num_samples × indices.len()` matrix of the selected pixels.
    pub fn gather(&self, indices: &[usize]) -> Vec<f32> {
        let mut out = Vec::with_capacity(self.num_samples * indices.len());
        for s in 0..self.num_samples {
            let row = self.sample(s);
            out.extend(indices.iter().map(|&i| row[i]));
        }
        out
    }
}

/// Reads an IDX image file and its label file. Pixels are scaled by 1/255.
pub fn load_idx(
    images_path: impl AsRef<Path>,
    labels_path: impl AsRef<Path>,
) -> Result<ImageDataset> {
    let images = fs::read(images_path.as_ref())?;
    let labels = fs::read(labels_path.as_ref())?;
    parse_idx(&images, &labels)
}

/// Parses in-memory IDX image and label buffers.
pub fn parse_idx(images: &[u8], labels: &[u8]) -> Result<ImageDataset> {
    let mut img = Cursor(images);
    let magic = img.u32()?;
    if magic != IDX_IMAGES_MAGIC {
        return Err(Error::format(format!("bad IDX image magic {magic:#010x}")));
    }
    let count = img.u32()? as usize;
    let rows = img.u32()? as usize;
    let cols = img.u32()? as usize;
    if rows != cols {
        return Err(Error::format(format!("non-square images {rows}x{cols}")));
    }

    let mut lab = Cursor(labels);
    let magic = lab.u32()?;
    if magic != IDX_LABELS_MAGIC {
        return Err(Error::format(format!("bad IDX label magic {magic:#010x}")));
    }
    let label_count = lab.u32()? as usize;
    if label_count != count {
        return Err(Error::consistency(format!(
            "{count} images but {label_count} labels"
        )));
    }

    let pixels = img.bytes(count * rows * cols)?;
    let label_bytes = lab.bytes(count)?;

    let features = pixels.iter().map(|&p| p as f32 / 255.0).collect();
    let labels: Vec<usize> = label_bytes.iter().map(|&y| y as usize).collect();
    let num_classes = labels.iter().copied().max().map_or(0, |m| m + 1);
    ImageDataset::new(rows, features, labels, num_classes)
}

struct Cursor<'a>(&'a [u8]);

impl<'a> Cursor<'a> {
    fn bytes(&mut self, len: usize) -> io::Result<&'a [u8]> {
        if self.0.len() < len {
            return Err(io::Error::new(
                io::ErrorKind::UnexpectedEof,
                "truncated IDX file",
            ));
        }
        let (head, tail) = self.0.split_at(len);
        self.0 = tail;
        Ok(head)
    }

    fn u32(&mut self) -> io::Result<u32> {
        let b = self.bytes(4)?;
        Ok(u32::from_be_bytes([b[0], b[1], b[2], b[3]]))
    }
}

/// Writes a dataset as an IDX pair. Pixels are quantized to `round(255 v)`.
pub fn write_idx(
    ds: &ImageDataset,
    images_path: impl AsRef<Path>,
    labels_path: impl AsRef<Path>,
) -> Result<()> {
    let (images, labels) = encode_idx(ds)?;
    fs::File::create(images_path)?.write_all(&images)?;
    fs::File::create(labels_path)?.write_all(&labels)?;
    Ok(())
}

pub fn encode_idx(ds: &ImageDataset) -> Result<(Vec<u8>, Vec<u8>)> {
    if ds.num_classes > 256 {
        return Err(Error::consistency("IDX labels are single bytes"));
    }
    let mut images = Vec::with_capacity(16 + ds.features.len());
    images.extend_from_slice(&IDX_IMAGES_MAGIC.to_be_bytes());
    for dim in [ds.num_samples, ds.width, ds.width] {
        images.extend_from_slice(&(dim as u32).to_be_bytes());
    }
    images.extend(ds.features.iter().map(|&v| (v * 255.0).round() as u8));

    let mut labels = Vec::with_capacity(8 + ds.num_samples);
    labels.extend_from_slice(&IDX_LABELS_MAGIC.to_be_bytes());
    labels.extend_from_slice(&(ds.num_samples as u32).to_be_bytes());
    labels.extend(ds.labels.iter().map(|&y| y as u8));
    Ok((images, labels))
}

/// Parameters of a synthetic dataset with planted label-dependent pixels.
#[derive(Debug, Clone, PartialEq)]
pub struct SynthSpec {
    pub num_samples: usize,
    pub width: usize,
    pub num_classes: usize,
    pub informative_pixels: Vec<usize>,
    pub noise_std: f64,
    pub seed: u64,
}

impl SynthSpec {
    pub fn validate(&self) -> Result<()> {
        if self.num_samples == 0 || self.width == 0 {
            return Err(Error::invalid("synthetic dataset needs samples and pixels"));
        }
        if self.num_classes < 2 {
            return Err(Error::invalid(
                "synthetic dataset needs at least two classes",
            ));
        }
        let n = self.width * self.width;
        if let Some(&p) = self.informative_pixels.iter().find(|&&p| p >= n) {
            return Err(Error::Index { index: p, len: n });
        }
        if !(self.noise_std >= 0.0 && self.noise_std.is_finite()) {
            return Err(Error::invalid("noise_std must be finite and non-negative"));
        }
        Ok(())
    }
}

/// Generates a dataset: informative pixels carry `label / (C - 1)` plus Gaussian
/// noise (clamped to `[0, 1]`), every other pixel is uniform noise.
pub fn synth(spec: &SynthSpec) -> Result<ImageDataset> {
    spec.validate()?;
    let n = spec.width * spec.width;
    let mut informative = vec![false; n];
    for &p in &spec.informative_pixels {
        informative[p] = true;
    }
    let noise = Normal::new(0.0, spec.noise_std).map_err(|e| Error::invalid(e.to_string()))?;
    let scale = (spec.num_classes - 1) as f64;

    let mut rng = seeded(spec.seed);
    let mut features = Vec::with_capacity(spec.num_samples * n);
    let mut labels = Vec::with_capacity(spec.num_samples);
    for _ in 0..spec.num_samples {
        let label = rng.gen_range(0..spec.num_classes);
        labels.push(label);
        let level = label as f64 / scale;
        for &inf in &informative {
            let v = if inf {
                let jitter = if spec.noise_std > 0.0 {
                    noise.sample(&mut rng)
                } else {
                    0.0
                };
                (level + jitter).clamp(0.0, 1.0)
            } else {
                rng.gen::<f64>()
            };
            features.push(v as f32);
        }
    }
    ImageDataset::new(spec.width, features, labels, spec.num_classes)
}

/// Per-feature bin indices produced by [`quantile_bins`].
///
/// Bins are stored column-major: `column(i)` holds feature `i` for every sample.
#[derive(Debug, Clone, PartialEq)]
pub struct DiscretizedDataset {
    pub num_samples: usize,
    pub num_features: usize,
    pub num_bins: usize,
    pub bins: Vec<u8>,
    pub bin_edges: Vec<Vec<f64>>,
    pub labels: Vec<usize>,
    pub num_classes: usize,
}

impl DiscretizedDataset {
    pub fn column(&self, feature: usize) -> &[u8] {
        &self.bins[feature * self.num_samples..(feature + 1) * self.num_samples]
    }

    /// Number of cells actually available to `feature` once duplicate edges collapse.
    pub fn effective_bins(&self, feature: usize) -> usize {
        self.bin_edges[feature].len() + 1
    }

    /// Builds a dataset directly from bin columns (one `Vec` per feature).
    pub fn from_columns(
        columns: Vec<Vec<u8>>,
        num_bins: usize,
        labels: Vec<usize>,
        num_classes: usize,
    ) -> Result<Self> {
        let num_samples = labels.len();
        if num_samples == 0 || columns.is_empty() {
            return Err(Error::Empty("discretized dataset".into()));
        }
        let mut bin_edges = Vec::with_capacity(columns.len());
        for col in &columns {
            if col.len() != num_samples {
                return Err(Error::consistency(
                    "bin column length differs from label count",
                ));
            }
            let top = col.iter().copied().max().unwrap_or(0) as usize;
            if top >= num_bins {
                return Err(Error::consistency(format!("bin index {top} >= {num_bins}")));
            }
            // Synthetic edges keep `effective_bins` meaningful.
            bin_edges.push((1..=top).map(|e| e as f64).collect());
        }
        if labels.iter().any(|&y| y >= num_classes) {
            return Err(Error::consistency("label out of range"));
        }
        Ok(Self {
            num_samples,
            num_features: columns.len(),
            num_bins,
            bins: columns.concat(),
            bin_edges,
            labels,
            num_classes,
        })
    }
}

/// Linear-interpolation quantile of sorted data at probability `p`.
pub(crate) fn quantile_sorted(sorted: &[f64], p: f64) -> f64 {
    let h = (sorted.len() - 1) as f64 * p;
    let lo = h.floor() as usize;
    let hi = (lo + 1).min(sorted.len() - 1);
    sorted[lo] + (h - lo as f64) * (sorted[hi] - sorted[lo])
}

/// Edges at the `j / num_bins` quantiles, deduplicated. Edges at or above the
/// column maximum would only open empty cells and are dropped.
fn feature_edges(values: &mut [f64], num_bins: usize) -> Vec<f64> {
    values.sort_by(f64::total_cmp);
    let max = values[values.len() - 1];
    let mut edges: Vec<f64> = Vec::with_capacity(num_bins - 1);
    for j in 1..num_bins {
        let e = quantile_sorted(values, j as f64 / num_bins as f64);
        if e < max && edges.last().is_none_or(|&last| e > last) {
            edges.push(e);
        }
    }
    edges
}

/// Cell index of `v`: the number of edges strictly below it, so a value equal
/// to an edge lands in the lower cell.
pub fn assign_bin(edges: &[f64], v: f64) -> usize {
    edges.partition_point(|&e| e < v)
}

/// Discretizes every feature into at most `num_bins` quantile cells.
pub fn quantile_bins(ds: &ImageDataset, num_bins: usize) -> Result<DiscretizedDataset> {
    if !(2..=256).contains(&num_bins) {
        return Err(Error::invalid(format!(
            "bin count {num_bins} outside [2, 256]"
        )));
    }
    let n = ds.num_features;
    let per_feature: Vec<(Vec<f64>, Vec<u8>)> = (0..n)
        .into_par_iter()
        .map(|i| {
            let raw: Vec<f64> = (0..ds.num_samples)
                .map(|s| ds.features[s * n + i] as f64)
                .collect();
            let edges = feature_edges(&mut raw.clone(), num_bins);
            let col = raw.iter().map(|&v| assign_bin(&edges, v) as u8).collect();
            (edges, col)
        })
        .collect();

    let mut bin_edges = Vec::with_capacity(n);
    let mut bins = Vec::with_capacity(n * ds.num_samples);
    for (edges, col) in per_feature {
        bin_edges.push(edges);
        bins.extend_from_slice(&col);
    }
    Ok(DiscretizedDataset {
        num_samples: ds.num_samples,
        num_features: n,
        num_bins,
        bins,
        bin_edges,
        labels: ds.labels.clone(),
        num_classes: ds.num_classes,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn idx_pair(count: u32, side: u32, pixels: &[u8], labels: &[u8]) -> (Vec<u8>, Vec<u8>) {
        let mut img = Vec::new();
        img.extend_from_slice(&0x803u32.to_be_bytes());
        img.extend_from_slice(&count.to_be_bytes());
        img.extend_from_slice(&side.to_be_bytes());
        img.extend_from_slice(&side.to_be_bytes());
        img.extend_from_slice(pixels);
        let mut lab = Vec::new();
        lab.extend_from_slice(&0x801u32.to_be_bytes());
        lab.extend_from_slice(&(labels.len() as u32).to_be_bytes());
        lab.extend_from_slice(labels);
        (img, lab)
    }

    #[test]
    fn parses_hand_built_idx() {
        let (img, lab) = idx_pair(2, 2, &[0, 255, 128, 64, 1, 2, 3, 4], &[0, 3]);
        let ds = parse_idx(&img, &lab).unwrap();
        assert_eq!((ds.num_samples, ds.num_features, ds.width), (2, 4, 2));
        assert_eq!(ds.num_classes, 4);
        let want = [0.0, 1.0, 128.0 / 255.0, 64.0 / 255.0];
        for (got, want) in ds.sample(0).iter().zip(want) {
            assert!((*got as f64 - want).abs() < 1e-7);
        }
        assert!((ds.sample(0)[2] - 0.50196).abs() < 1e-5);
        assert!((ds.sample(0)[3] - 0.25098).abs() < 1e-5);
    }

    #[test]
    fn rejects_bad_magic() {
        let (mut img, lab) = idx_pair(1, 1, &[0], &[0]);
        img[..4].copy_from_slice(&[0, 0, 0, 0]);
        assert!(matches!(parse_idx(&img, &lab), Err(Error::Format(_))));
    }

    #[test]
    fn rejects_count_mismatch() {
        let (img, lab) = idx_pair(2, 1, &[0, 1], &[0]);
        assert!(matches!(parse_idx(&img, &lab), Err(Error::Consistency(_))));
    }

    #[test]
    fn truncated_file_is_io_error() {
        let (img, lab) = idx_pair(2, 2, &[0, 1, 2], &[0, 1]);
        assert!(matches!(parse_idx(&img, &lab), Err(Error::Io(_))));
    }

    #[test]
    fn idx_encode_round_trip() {
        let (img, lab) = idx_pair(2, 2, &[0, 255, 128, 64, 1, 2, 3, 4], &[0, 3]);
        let ds = parse_idx(&img, &lab).unwrap();
        let (img2, lab2) = encode_idx(&ds).unwrap();
        assert_eq!((img, lab), (img2, lab2));
    }

    fn spec(seed: u64, noise_std: f64, num_classes: usize) -> SynthSpec {
        SynthSpec {
            num_samples: 200,
            width: 4,
            num_classes,
            informative_pixels: vec![5, 10],
            noise_std,
            seed,
        }
    }

    #[test]
    fn synth_is_deterministic() {
        assert_eq!(
            synth(&spec(7, 0.1, 3)).unwrap(),
            synth(&spec(7, 0.1, 3)).unwrap()
        );
        assert_ne!(
            synth(&spec(7, 0.1, 3)).unwrap(),
            synth(&spec(8, 0.1, 3)).unwrap()
        );
    }

    #[test]
    fn noiseless_informative_pixel_equals_label() {
        let ds = synth(&spec(1, 0.0, 2)).unwrap();
        for s in 0..ds.num_samples {
            assert_eq!(ds.sample(s)[5], ds.labels[s] as f32);
        }
    }

    #[test]
    fn synth_rejects_out_of_range_pixel() {
        let mut bad = spec(1, 0.0, 2);
        bad.informative_pixels.push(16);
        assert!(matches!(synth(&bad), Err(Error::Index { index: 16, .. })));
    }

    #[test]
    fn constant_feature_has_no_edges() {
        let ds = ImageDataset::new(1, vec![0.3; 10], vec![0; 10], 1).unwrap();
        let dd = quantile_bins(&ds, 20).unwrap();
        assert!(dd.bin_edges[0].is_empty());
        assert!(dd.column(0).iter().all(|&b| b == 0));
    }

    #[test]
    fn equally_spaced_values_fill_all_bins() {
        let values: Vec<f32> = (1..=100).map(|v| v as f32 / 100.0).collect();
        let ds = ImageDataset::new(1, values, vec![0; 100], 1).unwrap();
        let dd = quantile_bins(&ds, 20).unwrap();
        let col = dd.column(0);
        assert_eq!(col[0], 0);
        assert_eq!(col[99], 19);
        let mut seen = [0usize; 20];
        for &b in col {
            seen[b as usize] += 1;
        }
        assert!(seen.iter().all(|&c| c > 0));
    }

    #[test]
    fn value_on_edge_goes_to_lower_cell() {
        assert_eq!(assign_bin(&[0.25, 0.5], 0.25), 0);
        assert_eq!(assign_bin(&[0.25, 0.5], 0.2500001), 1);
        assert_eq!(assign_bin(&[0.25, 0.5], 0.9), 2);
    }

    #[test]
    fn rejects_single_bin() {
        let ds = ImageDataset::new(1, vec![0.3; 2], vec![0; 2], 1).unwrap();
        assert!(quantile_bins(&ds, 1).is_err());
    }
}
