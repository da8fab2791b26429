//! Dataset container, CSV and IDX ingestion, and seeded synthetic tasks.

use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Read, Write};
use std::path::Path;

use byteorder::{BigEndian, ReadBytesExt};
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

use crate::error::{Error, Result};

const IDX_MAGIC_IMAGES: u32 = 0x0000_0803;
const IDX_MAGIC_LABELS: u32 = 0x0000_0801;

/// Labeled feature matrix: n rows of d features with integer class labels in
/// `0..num_classes`.
#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    features: Vec<f64>,
    labels: Vec<usize>,
    num_features: usize,
    num_classes: usize,
}

impl Dataset {
    pub fn new(features: Vec<f64>, labels: Vec<usize>, num_features: usize, num_classes: usize) -> Result<Self> {
        if num_features == 0 {
            return Err(Error::Data("feature dimension must be >= 1".into()));
        }
        if features.len() != labels.len() * num_features {
            return Err(Error::Data(format!(
                "feature matrix length {} does not match {} rows x {} features",
                features.len(),
                labels.len(),
                num_features
            )));
        }
        if features.iter().any(|v| !v.is_finite()) {
            return Err(Error::Data("non-finite feature value".into()));
        }
        if let Some(&bad) = labels.iter().find(|&&y| y >= num_classes) {
            return Err(Error::Data(format!("label {} out of range 0..{}", bad, num_classes)));
        }
        Ok(Dataset { features, labels, num_features, num_classes })
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    pub fn num_features(&self) -> usize {
        self.num_features
    }

    pub fn num_classes(&self) -> usize {
        self.num_classes
    }

    pub fn features_of(&self, i: usize) -> &[f64] {
        &self.features[i * self.num_features..(i + 1) * self.num_features]
    }

    pub fn label_of(&self, i: usize) -> usize {
        self.labels[i]
    }

    pub fn labels(&self) -> &[usize] {
        &self.labels
    }

    /// Largest Euclidean norm among the feature rows.
    pub fn max_feature_norm(&self) -> f64 {
        (0..self.len())
            .map(|i| self.features_of(i).iter().map(|&v| v * v).sum::<f64>().sqrt())
            .fold(0.0, f64::max)
    }

    /// Concatenate two datasets with identical shapes.
    pub fn concat(&self, other: &Dataset) -> Result<Dataset> {
        if self.num_features != other.num_features || self.num_classes != other.num_classes {
            return Err(Error::Data("cannot concatenate datasets with different shapes".into()));
        }
        let mut features = self.features.clone();
        features.extend_from_slice(&other.features);
        let mut labels = self.labels.clone();
        labels.extend_from_slice(&other.labels);
        Dataset::new(features, labels, self.num_features, self.num_classes)
    }

    /// First `n` rows.
    pub fn take(&self, n: usize) -> Dataset {
        let n = n.min(self.len());
        Dataset {
            features: self.features[..n * self.num_features].to_vec(),
            labels: self.labels[..n].to_vec(),
            num_features: self.num_features,
            num_classes: self.num_classes,
        }
    }
}

/// Read a dataset from CSV with header `f0,...,f{d-1},label`.
pub fn read_csv<P: AsRef<Path>>(path: P, num_classes: usize) -> Result<Dataset> {
    let ctx = path.as_ref().display().to_string();
    let file = File::open(&path).map_err(|e| Error::Data(format!("{}: {}", ctx, e)))?;
    let reader = BufReader::new(file);
    let mut lines = reader.lines();
    let header = lines
        .next()
        .ok_or_else(|| Error::Data(format!("{}: empty file", ctx)))?
        .map_err(|e| Error::Data(format!("{}: {}", ctx, e)))?;
    let cols: Vec<&str> = header.split(',').collect();
    if cols.len() < 2 || cols[cols.len() - 1] != "label" {
        return Err(Error::Data(format!("{}: expected header f0,...,label", ctx)));
    }
    let d = cols.len() - 1;
    let mut features = Vec::new();
    let mut labels = Vec::new();
    for (lineno, line) in lines.enumerate() {
        let line = line.map_err(|e| Error::Data(format!("{}: {}", ctx, e)))?;
        if line.trim().is_empty() {
            continue;
        }
        let fields: Vec<&str> = line.split(',').collect();
        if fields.len() != d + 1 {
            return Err(Error::Data(format!("{}:{}: expected {} fields, got {}", ctx, lineno + 2, d + 1, fields.len())));
        }
        for f in &fields[..d] {
            let v: f64 = f
                .trim()
                .parse()
                .map_err(|e| Error::Data(format!("{}:{}: bad feature '{}': {}", ctx, lineno + 2, f, e)))?;
            features.push(v);
        }
        let y: usize = fields[d]
            .trim()
            .parse()
            .map_err(|e| Error::Data(format!("{}:{}: bad label '{}': {}", ctx, lineno + 2, fields[d], e)))?;
        labels.push(y);
    }
    Dataset::new(features, labels, d, num_classes)
}

/// Write a dataset as CSV with header `f0,...,f{d-1},label`.
pub fn write_csv<P: AsRef<Path>>(dataset: &Dataset, path: P) -> Result<()> {
    let mut w = BufWriter::new(File::create(&path)?);
    let d = dataset.num_features();
    let header: Vec<String> = (0..d).map(|i| format!("f{}", i)).chain(["label".to_string()]).collect();
    writeln!(w, "{}", header.join(","))?;
    for i in 0..dataset.len() {
        let row: Vec<String> = dataset.features_of(i).iter().map(|v| v.to_string()).collect();
        writeln!(w, "{},{}", row.join(","), dataset.label_of(i))?;
    }
    Ok(())
}

/// Read an IDX image/label file pair (MNIST format): big-endian dims, image
/// magic 0x00000803, label magic 0x00000801. Pixel bytes are rescaled to
/// [0, 1].
pub fn read_idx<P: AsRef<Path>>(images: P, labels: P, num_classes: usize) -> Result<Dataset> {
    let pixels = read_idx_images(&images)?;
    let ys = read_idx_labels(&labels)?;
    let n = ys.len();
    if n == 0 || pixels.len() % n != 0 {
        return Err(Error::Data(format!(
            "IDX pair mismatch: {} pixel values vs {} labels",
            pixels.len(),
            n
        )));
    }
    Dataset::new(pixels, ys, pixels_per_image(&images, n)?, num_classes)
}

fn pixels_per_image<P: AsRef<Path>>(images: P, n: usize) -> Result<usize> {
    let mut r = BufReader::new(File::open(&images)?);
    let magic = r.read_u32::<BigEndian>()?;
    if magic != IDX_MAGIC_IMAGES {
        return Err(Error::Data(format!("bad image magic 0x{:08x}", magic)));
    }
    let count = r.read_u32::<BigEndian>()? as usize;
    if count != n {
        return Err(Error::Data(format!("image count {} does not match label count {}", count, n)));
    }
    let rows = r.read_u32::<BigEndian>()? as usize;
    let cols = r.read_u32::<BigEndian>()? as usize;
    Ok(rows * cols)
}

fn read_idx_images<P: AsRef<Path>>(path: P) -> Result<Vec<f64>> {
    let ctx = path.as_ref().display().to_string();
    let mut r = BufReader::new(File::open(&path).map_err(|e| Error::Data(format!("{}: {}", ctx, e)))?);
    let magic = r.read_u32::<BigEndian>()?;
    if magic != IDX_MAGIC_IMAGES {
        return Err(Error::Data(format!("{}: bad image magic 0x{:08x}", ctx, magic)));
    }
    let count = r.read_u32::<BigEndian>()? as usize;
    let rows = r.read_u32::<BigEndian>()? as usize;
    let cols = r.read_u32::<BigEndian>()? as usize;
    let mut bytes = vec![0u8; count * rows * cols];
    r.read_exact(&mut bytes).map_err(|e| Error::Data(format!("{}: truncated image data: {}", ctx, e)))?;
    Ok(bytes.into_iter().map(|b| b as f64 / 255.0).collect())
}

fn read_idx_labels<P: AsRef<Path>>(path: P) -> Result<Vec<usize>> {
    let ctx = path.as_ref().display().to_string();
    let mut r = BufReader::new(File::open(&path).map_err(|e| Error::Data(format!("{}: {}", ctx, e)))?);
    let magic = r.read_u32::<BigEndian>()?;
    if magic != IDX_MAGIC_LABELS {
        return Err(Error::Data(format!("{}: bad label magic 0x{:08x}", ctx, magic)));
    }
    let count = r.read_u32::<BigEndian>()? as usize;
    let mut bytes = vec![0u8; count];
    r.read_exact(&mut bytes).map_err(|e| Error::Data(format!("{}: truncated label data: {}", ctx, e)))?;
    Ok(bytes.into_iter().map(|b| b as usize).collect())
}

/// Binary task: two spherical Gaussians in `d` dimensions at +/- mean.
pub fn two_gaussians(n: usize, d: usize, separation: f64, noise: f64, seed: u64) -> Dataset {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let normal = Normal::new(0.0, noise).unwrap();
    let offset = separation / (d as f64).sqrt();
    let mut features = Vec::with_capacity(n * d);
    let mut labels = Vec::with_capacity(n);
    for i in 0..n {
        let y = i % 2;
        let sign = if y == 0 { -1.0 } else { 1.0 };
        for _ in 0..d {
            features.push(sign * offset + normal.sample(&mut rng));
        }
        labels.push(y);
    }
    Dataset::new(features, labels, d, 2).expect("generated data is valid")
}

/// Binary task: two concentric rings in the first two of `d` dimensions.
pub fn concentric_rings(n: usize, d: usize, r_inner: f64, r_outer: f64, noise: f64, seed: u64) -> Dataset {
    assert!(d >= 2, "rings need at least 2 dimensions");
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let normal = Normal::new(0.0, noise).unwrap();
    let mut features = Vec::with_capacity(n * d);
    let mut labels = Vec::with_capacity(n);
    for i in 0..n {
        let y = i % 2;
        let radius = if y == 0 { r_inner } else { r_outer };
        let angle = rng.random_range(0.0..std::f64::consts::TAU);
        features.push(radius * angle.cos() + normal.sample(&mut rng));
        features.push(radius * angle.sin() + normal.sample(&mut rng));
        for _ in 2..d {
            features.push(normal.sample(&mut rng));
        }
        labels.push(y);
    }
    Dataset::new(features, labels, d, 2).expect("generated data is valid")
}

/// K-class task: one Gaussian blob per class on scaled coordinate directions,
/// useful for memorization-style experiments at higher input dimension.
pub fn gaussian_blobs(n: usize, d: usize, k: usize, separation: f64, noise: f64, seed: u64) -> Dataset {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let normal = Normal::new(0.0, noise).unwrap();
    let mut features = Vec::with_capacity(n * d);
    let mut labels = Vec::with_capacity(n);
    for i in 0..n {
        let y = i % k;
        for j in 0..d {
            let center = if j % k == y { separation } else { 0.0 };
            features.push(center + normal.sample(&mut rng));
        }
        labels.push(y);
    }
    Dataset::new(features, labels, d, k).expect("generated data is valid")
}
