//! Datasets: IDX and LIBSVM readers plus seeded synthetic generators.

use std::collections::BTreeMap;
use std::fs;
use std::path::Path;

use csnk_core::tensor_net::{Batch, Targets, Tensor};
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

use crate::error::{HarnessError, Result};

/// Labelled samples, one row per sample.
#[derive(Clone, Debug, PartialEq)]
pub struct Dataset {
    features: Tensor<f64>,
    labels: Vec<usize>,
    classes: usize,
    /// Original label value for each class id, when labels were remapped.
    label_values: Option<Vec<f64>>,
}

impl Dataset {
    pub fn new(features: Tensor<f64>, labels: Vec<usize>, classes: usize) -> Result<Self> {
        if features.shape().len() != 2 || features.rows() == 0 {
            return Err(HarnessError::Data(format!(
                "features must be a non-empty matrix, got shape {:?}",
                features.shape()
            )));
        }
        if labels.len() != features.rows() {
            return Err(HarnessError::Data(format!(
                "{} labels for {} samples",
                labels.len(),
                features.rows()
            )));
        }
        if let Some((i, &y)) = labels.iter().enumerate().find(|(_, &y)| y >= classes) {
            return Err(HarnessError::Data(format!("label {y} of sample {i} is not below {classes}")));
        }
        if let Some(i) = features.data().iter().position(|x| !x.is_finite()) {
            return Err(HarnessError::Data(format!(
                "non-finite feature in sample {}",
                i / features.cols()
            )));
        }
        Ok(Self {
            features,
            labels,
            classes,
            label_values: None,
        })
    }

    pub fn n(&self) -> usize {
        self.features.rows()
    }

    pub fn d(&self) -> usize {
        self.features.cols()
    }

    pub fn classes(&self) -> usize {
        self.classes
    }

    pub fn features(&self) -> &Tensor<f64> {
        &self.features
    }

    pub fn labels(&self) -> &[usize] {
        &self.labels
    }

    pub fn label_values(&self) -> Option<&[f64]> {
        self.label_values.as_deref()
    }

    /// Classification batch over the given rows.
    pub fn label_batch(&self, rows: &[usize], id: usize) -> Batch {
        let labels = rows.iter().map(|&r| self.labels[r]).collect();
        Batch::new(self.features.select_rows(rows), Targets::Labels(labels))
            .expect("rows come from a validated dataset")
            .with_id(id)
    }

    /// Reconstruction batch: targets are the inputs.
    pub fn autoencoder_batch(&self, rows: &[usize], id: usize) -> Batch {
        let x = self.features.select_rows(rows);
        Batch::new(x.clone(), Targets::Values(x))
            .expect("rows come from a validated dataset")
            .with_id(id)
    }

    /// Area-averages square `side × side` images down to `out × out`.
    pub fn downsample_square(&self, out: usize) -> Result<Dataset> {
        let side = (self.d() as f64).sqrt().round() as usize;
        if side * side != self.d() || out == 0 || out > side {
            return Err(HarnessError::Data(format!(
                "cannot downsample {} features to {out}×{out}",
                self.d()
            )));
        }
        let mut data = Vec::with_capacity(self.n() * out * out);
        for r in 0..self.n() {
            data.extend(area_downsample(self.features.row(r), side, out));
        }
        let mut ds = Dataset::new(Tensor::from_vec(vec![self.n(), out * out], data)?, self.labels.clone(), self.classes)?;
        ds.label_values = self.label_values.clone();
        Ok(ds)
    }

    /// The first `n` samples.
    pub fn head(&self, n: usize) -> Dataset {
        let rows: Vec<usize> = (0..n.min(self.n())).collect();
        Dataset {
            features: self.features.select_rows(&rows),
            labels: self.labels[..rows.len()].to_vec(),
            classes: self.classes,
            label_values: self.label_values.clone(),
        }
    }
}

fn area_downsample(img: &[f64], side: usize, out: usize) -> Vec<f64> {
    let scale = side as f64 / out as f64;
    // overlap of source cell k with output cell o along one axis
    let weight = |o: usize, k: usize| {
        let (lo, hi) = (o as f64 * scale, (o + 1) as f64 * scale);
        ((k + 1) as f64).min(hi) - (k as f64).max(lo)
    };
    let mut res = vec![0.0; out * out];
    for oy in 0..out {
        for ox in 0..out {
            let mut acc = 0.0;
            for y in (oy as f64 * scale) as usize..((oy + 1) as f64 * scale).ceil() as usize {
                let wy = weight(oy, y);
                for x in (ox as f64 * scale) as usize..((ox + 1) as f64 * scale).ceil() as usize {
                    acc += wy * weight(ox, x) * img[y * side + x];
                }
            }
            res[oy * out + ox] = acc / (scale * scale);
        }
    }
    res
}

fn read(path: &Path) -> Result<Vec<u8>> {
    fs::read(path).map_err(|e| HarnessError::io(path, e))
}

struct IdxReader<'a> {
    path: &'a Path,
    bytes: &'a [u8],
    pos: usize,
}

impl IdxReader<'_> {
    fn err(&self, at: usize, message: impl Into<String>) -> HarnessError {
        HarnessError::Parse {
            path: self.path.to_path_buf(),
            location: format!("byte {at}"),
            message: message.into(),
        }
    }

    fn u32(&mut self, what: &str) -> Result<u32> {
        let end = self.pos + 4;
        let Some(b) = self.bytes.get(self.pos..end) else {
            return Err(self.err(self.pos, format!("truncated while reading {what}")));
        };
        self.pos = end;
        Ok(u32::from_be_bytes([b[0], b[1], b[2], b[3]]))
    }

    fn magic(&mut self, expected: u32) -> Result<()> {
        let m = self.u32("magic number")?;
        if m != expected {
            return Err(self.err(0, format!("wrong magic {m} (expected {expected})")));
        }
        Ok(())
    }

    fn payload(&mut self, len: usize) -> Result<&[u8]> {
        let have = self.bytes.len() - self.pos;
        if have < len {
            return Err(self.err(
                self.bytes.len(),
                format!("truncated: expected {len} data bytes, found {have}"),
            ));
        }
        let out = &self.bytes[self.pos..self.pos + len];
        self.pos += len;
        Ok(out)
    }
}

pub const IDX_IMAGES_MAGIC: u32 = 2051;
pub const IDX_LABELS_MAGIC: u32 = 2049;

/// Reads an IDX image file (magic 2051) and label file (magic 2049).
/// Pixels are scaled to `[0, 1]`.
pub fn load_idx(images_path: &Path, labels_path: &Path) -> Result<Dataset> {
    let image_bytes = read(images_path)?;
    let mut img = IdxReader {
        path: images_path,
        bytes: &image_bytes,
        pos: 0,
    };
    img.magic(IDX_IMAGES_MAGIC)?;
    let n = img.u32("image count")? as usize;
    let rows = img.u32("row count")? as usize;
    let cols = img.u32("column count")? as usize;
    let pixels: Vec<f64> = img.payload(n * rows * cols)?.iter().map(|&b| f64::from(b) / 255.0).collect();

    let label_bytes = read(labels_path)?;
    let mut lab = IdxReader {
        path: labels_path,
        bytes: &label_bytes,
        pos: 0,
    };
    lab.magic(IDX_LABELS_MAGIC)?;
    let count = lab.u32("label count")? as usize;
    if count != n {
        return Err(lab.err(4, format!("label count {count} does not match image count {n}")));
    }
    let labels: Vec<usize> = lab.payload(n)?.iter().map(|&b| usize::from(b)).collect();
    if n == 0 {
        return Err(img.err(4, "no images"));
    }
    let classes = labels.iter().max().map_or(0, |m| m + 1);
    Dataset::new(Tensor::from_vec(vec![n, rows * cols], pixels)?, labels, classes)
}

/// Reads LIBSVM text (`label idx:val …`, 1-based ascending indices, `#`
/// comments). Labels are remapped to `0..classes` in ascending numeric
/// order. Without `expected_dim` the width is the largest index seen.
pub fn load_libsvm(path: &Path, expected_dim: Option<usize>) -> Result<Dataset> {
    let text = fs::read_to_string(path).map_err(|e| HarnessError::io(path, e))?;
    parse_libsvm(&text, path, expected_dim)
}

pub fn parse_libsvm(text: &str, path: &Path, expected_dim: Option<usize>) -> Result<Dataset> {
    let err = |line: usize, message: String| HarnessError::Parse {
        path: path.to_path_buf(),
        location: format!("line {line}"),
        message,
    };
    let mut rows: Vec<(f64, Vec<(usize, f64)>)> = Vec::new();
    let mut max_index = 0;
    for (i, raw) in text.lines().enumerate() {
        let line_no = i + 1;
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let mut tokens = line.split_whitespace();
        let label_tok = tokens.next().expect("non-empty line");
        let label: f64 = label_tok
            .parse()
            .ok()
            .filter(|v: &f64| v.is_finite())
            .ok_or_else(|| err(line_no, format!("malformed label `{label_tok}`")))?;
        let mut feats = Vec::new();
        let mut last = 0;
        for tok in tokens {
            let parsed = tok.split_once(':').and_then(|(i, v)| {
                let idx = i.parse::<usize>().ok()?;
                let val = v.parse::<f64>().ok().filter(|v| v.is_finite())?;
                Some((idx, val))
            });
            let Some((idx, val)) = parsed else {
                return Err(err(line_no, format!("malformed token `{tok}`")));
            };
            if idx == 0 {
                return Err(err(line_no, format!("index 0 in `{tok}`; indices are 1-based")));
            }
            if idx <= last {
                return Err(err(line_no, format!("index {idx} does not ascend after {last}")));
            }
            if let Some(d) = expected_dim {
                if idx > d {
                    return Err(err(line_no, format!("index {idx} exceeds dimension {d}")));
                }
            }
            last = idx;
            feats.push((idx, val));
        }
        max_index = max_index.max(last);
        rows.push((label, feats));
    }
    if rows.is_empty() {
        return Err(HarnessError::Data(format!("{}: no samples", path.display())));
    }
    let d = expected_dim.unwrap_or(max_index).max(1);
    let mut values: Vec<f64> = rows.iter().map(|(l, _)| *l).collect();
    values.sort_by(f64::total_cmp);
    values.dedup();
    let ids: BTreeMap<u64, usize> = values.iter().enumerate().map(|(k, v)| (v.to_bits(), k)).collect();
    let mut data = vec![0.0; rows.len() * d];
    let mut labels = Vec::with_capacity(rows.len());
    for (r, (label, feats)) in rows.iter().enumerate() {
        labels.push(ids[&label.to_bits()]);
        for &(idx, val) in feats {
            data[r * d + idx - 1] = val;
        }
    }
    let mut ds = Dataset::new(Tensor::from_vec(vec![rows.len(), d], data)?, labels, values.len())?;
    ds.label_values = Some(values);
    Ok(ds)
}

/// Isotropic unit-variance Gaussian clusters whose centres are drawn with
/// standard deviation `separation`. Sample `i` belongs to class `i mod classes`.
pub fn gaussian_blobs(n: usize, d: usize, classes: usize, separation: f64, seed: u64) -> Result<Dataset> {
    if n == 0 || d == 0 || classes == 0 {
        return Err(HarnessError::Data("blobs need n, d and classes ≥ 1".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let unit = Normal::new(0.0, 1.0).expect("valid normal");
    let centres: Vec<Vec<f64>> = (0..classes)
        .map(|_| (0..d).map(|_| separation * unit.sample(&mut rng)).collect())
        .collect();
    let mut data = Vec::with_capacity(n * d);
    let mut labels = Vec::with_capacity(n);
    for i in 0..n {
        let c = i % classes;
        labels.push(c);
        data.extend(centres[c].iter().map(|m| m + unit.sample(&mut rng)));
    }
    Dataset::new(Tensor::from_vec(vec![n, d], data)?, labels, classes)
}

/// Segments lit for each digit, in the order top, upper-right, lower-right,
/// bottom, lower-left, upper-left, middle.
const SEGMENTS: [[bool; 7]; 10] = [
    [true, true, true, true, true, true, false],
    [false, true, true, false, false, false, false],
    [true, true, false, true, true, false, true],
    [true, true, true, true, false, false, true],
    [false, true, true, false, false, true, true],
    [true, false, true, true, false, true, true],
    [true, false, true, true, true, true, true],
    [true, true, true, false, false, false, false],
    [true, true, true, true, true, true, true],
    [true, true, true, true, false, true, true],
];

fn segment_pixels(seg: usize) -> Vec<(i32, i32)> {
    let span = |fixed: i32, from: i32, to: i32, horizontal: bool| -> Vec<(i32, i32)> {
        (from..=to).map(|k| if horizontal { (fixed, k) } else { (k, fixed) }).collect()
    };
    match seg {
        0 => span(1, 2, 5, true),
        1 => span(5, 1, 3, false),
        2 => span(5, 4, 6, false),
        3 => span(6, 2, 5, true),
        4 => span(2, 4, 6, false),
        5 => span(2, 1, 3, false),
        _ => span(4, 2, 5, true),
    }
}

/// Seeded stand-in for 8×8 handwritten digits: seven-segment glyphs with
/// random shifts, stroke intensity, dropped stroke pixels and Gaussian
/// noise of standard deviation `noise`, clipped to `[0, 1]`. Ten balanced
/// classes.
pub fn synthetic_digits(n: usize, noise: f64, seed: u64) -> Result<Dataset> {
    if n == 0 {
        return Err(HarnessError::Data("need at least one digit".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let noise = Normal::new(0.0, noise)
        .map_err(|_| HarnessError::Data(format!("noise level {noise} must be non-negative")))?;
    let mut labels: Vec<usize> = (0..n).map(|i| i % 10).collect();
    labels.shuffle(&mut rng);
    let mut data = Vec::with_capacity(n * 64);
    for &digit in &labels {
        let (dy, dx) = (rng.random_range(-1..=1), rng.random_range(-1..=1));
        let ink = rng.random_range(0.6..1.0);
        let mut img = [0.0f64; 64];
        for (seg, &on) in SEGMENTS[digit].iter().enumerate() {
            if !on {
                continue;
            }
            for (y, x) in segment_pixels(seg) {
                let (y, x) = (y + dy, x + dx);
                if (0..8).contains(&y) && (0..8).contains(&x) && rng.random::<f64>() > 0.1 {
                    img[(y * 8 + x) as usize] = ink;
                }
            }
        }
        data.extend(img.iter().map(|&p| (p + noise.sample(&mut rng)).clamp(0.0, 1.0)));
    }
    Dataset::new(Tensor::from_vec(vec![n, 64], data)?, labels, 10)
}
