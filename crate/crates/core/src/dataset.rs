//! Labeled datasets: CSV ingestion, synthetic blob generation, min-max
//! scaling, and stratified splitting.
//!
//! All randomized operations draw from a seeded ChaCha8 generator so results
//! are bit-identical across runs and platforms.

use std::collections::BTreeMap;
use std::io::Write;
use std::path::Path;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum DataError {
    #[error("failed to read {path}: {source}")]
    Io {
        path: String,
        source: std::io::Error,
    },
    #[error("csv parse error: {0}")]
    Csv(#[from] csv::Error),
    #[error("label column {0:?} not found in header")]
    MissingLabelColumn(String),
    #[error("non-numeric feature value {value:?} at row {row}, column {column}")]
    NonNumericFeature {
        row: usize,
        column: String,
        value: String,
    },
    #[error("dataset has a single class; at least two are required")]
    SingleClass,
    #[error("empty dataset")]
    Empty,
    #[error("inconsistent row dimensions: expected {expected}, got {got} at row {row}")]
    RaggedRow {
        row: usize,
        expected: usize,
        got: usize,
    },
    #[error("label {label} out of range 1..={class_count}")]
    LabelOutOfRange { label: usize, class_count: usize },
    #[error("class {class} has no points")]
    MissingClass { class: usize },
    #[error("invalid blob spec: {0}")]
    InvalidBlobSpec(String),
    #[error("class {class} has {size} points, too few to stratify")]
    ClassTooSmall { class: usize, size: usize },
    #[error("test fraction must lie in (0,1), got {0}")]
    BadFraction(f64),
}

/// How to locate the label column of a CSV file.
#[derive(Debug, Clone)]
pub enum LabelColumn {
    Name(String),
    Index(usize),
}

/// A labeled training sample: `n` points in `R^d` with class ids in `1..=K`.
#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    points: Vec<Vec<f64>>,
    labels: Vec<usize>,
    class_count: usize,
    feature_count: usize,
}

impl Dataset {
    /// Builds a dataset, validating all invariants: labels in `1..=K`, every
    /// class present, uniform row dimension, `n >= 1`, `d >= 1`.
    pub fn new(points: Vec<Vec<f64>>, labels: Vec<usize>) -> Result<Self, DataError> {
        if points.is_empty() || points.len() != labels.len() {
            return Err(DataError::Empty);
        }
        let feature_count = points[0].len();
        if feature_count == 0 {
            return Err(DataError::Empty);
        }
        for (row, p) in points.iter().enumerate() {
            if p.len() != feature_count {
                return Err(DataError::RaggedRow {
                    row,
                    expected: feature_count,
                    got: p.len(),
                });
            }
        }
        let class_count = *labels.iter().max().unwrap();
        let mut seen = vec![false; class_count + 1];
        for &l in &labels {
            if l == 0 || l > class_count {
                return Err(DataError::LabelOutOfRange {
                    label: l,
                    class_count,
                });
            }
            seen[l] = true;
        }
        for k in 1..=class_count {
            if !seen[k] {
                return Err(DataError::MissingClass { class: k });
            }
        }
        Ok(Dataset {
            points,
            labels,
            class_count,
            feature_count,
        })
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn feature_count(&self) -> usize {
        self.feature_count
    }

    pub fn class_count(&self) -> usize {
        self.class_count
    }

    pub fn point(&self, i: usize) -> &[f64] {
        &self.points[i]
    }

    pub fn points(&self) -> &[Vec<f64>] {
        &self.points
    }

    /// Class id of point `i`, in `1..=K`.
    pub fn label(&self, i: usize) -> usize {
        self.labels[i]
    }

    pub fn labels(&self) -> &[usize] {
        &self.labels
    }

    /// Loads a CSV file with one header row. Labels are re-encoded to
    /// contiguous `1..=K` in order of first occurrence.
    pub fn load_csv(path: impl AsRef<Path>, label: &LabelColumn) -> Result<Self, DataError> {
        Self::load_csv_named(path, label).map(|(data, _)| data)
    }

    /// Like [`load_csv`](Self::load_csv), but also returns the original label
    /// names indexed by `class - 1`.
    pub fn load_csv_named(
        path: impl AsRef<Path>,
        label: &LabelColumn,
    ) -> Result<(Self, Vec<String>), DataError> {
        let path = path.as_ref();
        let file = std::fs::File::open(path).map_err(|source| DataError::Io {
            path: path.display().to_string(),
            source,
        })?;
        let mut reader = csv::Reader::from_reader(file);
        let headers = reader.headers()?.clone();
        let label_idx = match label {
            LabelColumn::Index(i) if *i < headers.len() => *i,
            LabelColumn::Index(i) => {
                return Err(DataError::MissingLabelColumn(i.to_string()));
            }
            LabelColumn::Name(name) => headers
                .iter()
                .position(|h| h == name)
                .ok_or_else(|| DataError::MissingLabelColumn(name.clone()))?,
        };

        let mut points = Vec::new();
        let mut labels = Vec::new();
        let mut encoding: BTreeMap<String, usize> = BTreeMap::new();
        let mut next_class = 1usize;
        for (row, record) in reader.records().enumerate() {
            let record = record?;
            let mut features = Vec::with_capacity(headers.len().saturating_sub(1));
            for (col, field) in record.iter().enumerate() {
                if col == label_idx {
                    let class = *encoding.entry(field.to_string()).or_insert_with(|| {
                        let c = next_class;
                        next_class += 1;
                        c
                    });
                    labels.push(class);
                } else {
                    let value: f64 =
                        field
                            .trim()
                            .parse()
                            .map_err(|_| DataError::NonNumericFeature {
                                row,
                                column: headers[col].to_string(),
                                value: field.to_string(),
                            })?;
                    features.push(value);
                }
            }
            points.push(features);
        }
        if next_class <= 2 {
            // next_class == 2 means exactly one class was seen.
            return Err(DataError::SingleClass);
        }
        let mut names = vec![String::new(); next_class - 1];
        for (name, class) in encoding {
            names[class - 1] = name;
        }
        Ok((Dataset::new(points, labels)?, names))
    }

    /// Writes the dataset as CSV with feature columns `f0..f{d-1}` and a
    /// trailing `label` column, mirroring the input convention of `load_csv`.
    pub fn write_csv(&self, writer: impl Write) -> Result<(), DataError> {
        let mut w = csv::Writer::from_writer(writer);
        let mut header: Vec<String> = (0..self.feature_count).map(|j| format!("f{j}")).collect();
        header.push("label".into());
        w.write_record(&header)?;
        for i in 0..self.len() {
            let mut record: Vec<String> = self.points[i].iter().map(|v| v.to_string()).collect();
            record.push(self.labels[i].to_string());
            w.write_record(&record)?;
        }
        w.flush().map_err(|source| DataError::Io {
            path: "<writer>".into(),
            source,
        })?;
        Ok(())
    }

    /// Maps every feature column affinely onto `[0,1]`. Constant columns map
    /// to 0.
    pub fn minmax_scale(&self) -> Dataset {
        let mut scaled = self.points.clone();
        for j in 0..self.feature_count {
            let mut lo = f64::INFINITY;
            let mut hi = f64::NEG_INFINITY;
            for p in &self.points {
                lo = lo.min(p[j]);
                hi = hi.max(p[j]);
            }
            let range = hi - lo;
            for p in &mut scaled {
                p[j] = if range > 0.0 { (p[j] - lo) / range } else { 0.0 };
            }
        }
        Dataset {
            points: scaled,
            labels: self.labels.clone(),
            class_count: self.class_count,
            feature_count: self.feature_count,
        }
    }

    /// Stratified train/test split, deterministic per seed. The union of the
    /// two parts is the original multiset of rows.
    pub fn train_test_split(
        &self,
        test_fraction: f64,
        seed: u64,
    ) -> Result<(Dataset, Dataset), DataError> {
        if !(test_fraction > 0.0 && test_fraction < 1.0) {
            return Err(DataError::BadFraction(test_fraction));
        }
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut train_idx = Vec::new();
        let mut test_idx = Vec::new();
        for class in 1..=self.class_count {
            let mut idx: Vec<usize> = (0..self.len())
                .filter(|&i| self.labels[i] == class)
                .collect();
            if idx.len() < 2 {
                return Err(DataError::ClassTooSmall {
                    class,
                    size: idx.len(),
                });
            }
            idx.shuffle(&mut rng);
            let n_test = ((idx.len() as f64 * test_fraction).round() as usize)
                .clamp(1, idx.len() - 1);
            test_idx.extend_from_slice(&idx[..n_test]);
            train_idx.extend_from_slice(&idx[n_test..]);
        }
        train_idx.sort_unstable();
        test_idx.sort_unstable();
        let take = |idx: &[usize]| {
            Dataset::new(
                idx.iter().map(|&i| self.points[i].clone()).collect(),
                idx.iter().map(|&i| self.labels[i]).collect(),
            )
        };
        Ok((take(&train_idx)?, take(&test_idx)?))
    }
}

/// Parameters of the synthetic blob generator.
///
/// `n` points are drawn from `k*b` isotropic Gaussian clusters in the first
/// two dimensions; the remaining `d-2` features are standard-normal noise.
/// Clusters are assigned round-robin (after a seeded shuffle) to `k` classes
/// so every class owns exactly `b` clusters. The result is min-max scaled.
#[derive(Debug, Clone, Copy)]
pub struct BlobSpec {
    pub n: usize,
    pub clusters_per_class: usize,
    pub class_count: usize,
    pub dimension: usize,
    pub spread: f64,
    pub seed: u64,
}

impl BlobSpec {
    fn validate(&self) -> Result<(), DataError> {
        let total = self.class_count * self.clusters_per_class;
        if self.class_count < 2 {
            return Err(DataError::InvalidBlobSpec("need k >= 2".into()));
        }
        if self.clusters_per_class < 1 {
            return Err(DataError::InvalidBlobSpec("need b >= 1".into()));
        }
        if self.dimension < 2 {
            return Err(DataError::InvalidBlobSpec("need d >= 2".into()));
        }
        if self.n < total {
            return Err(DataError::InvalidBlobSpec(format!(
                "need n >= k*b = {total}, got {}",
                self.n
            )));
        }
        if !(self.spread > 0.0) {
            return Err(DataError::InvalidBlobSpec("spread must be positive".into()));
        }
        Ok(())
    }
}

/// Generates a synthetic multi-cluster multiclass dataset. Pure function of
/// the spec: identical output for identical seeds.
pub fn generate_blobs(spec: &BlobSpec) -> Result<Dataset, DataError> {
    spec.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let total_clusters = spec.class_count * spec.clusters_per_class;

    // Cluster centers in the informative plane, same box as sklearn's
    // make_blobs default.
    let centers: Vec<[f64; 2]> = (0..total_clusters)
        .map(|_| [rng.gen_range(-10.0..10.0), rng.gen_range(-10.0..10.0)])
        .collect();

    // Shuffled round-robin so each class owns exactly `b` clusters.
    let mut cluster_ids: Vec<usize> = (0..total_clusters).collect();
    cluster_ids.shuffle(&mut rng);
    let mut cluster_class = vec![0usize; total_clusters];
    for (pos, &cl) in cluster_ids.iter().enumerate() {
        cluster_class[cl] = pos % spec.class_count + 1;
    }

    let mut points = Vec::with_capacity(spec.n);
    let mut labels = Vec::with_capacity(spec.n);
    for i in 0..spec.n {
        let cl = i % total_clusters;
        let mut p = Vec::with_capacity(spec.dimension);
        for j in 0..2 {
            let noise: f64 = rng.sample(StandardNormal);
            p.push(centers[cl][j] + spec.spread * noise);
        }
        for _ in 2..spec.dimension {
            p.push(rng.sample(StandardNormal));
        }
        points.push(p);
        labels.push(cluster_class[cl]);
    }
    Ok(Dataset::new(points, labels)?.minmax_scale())
}
