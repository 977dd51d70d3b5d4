//! Synthetic datasets and CSV ingestion.
//!
//! The generators produce Gaussian-blob classification data: every class gets
//! a seeded random mean in feature space and an isotropic spread shared by
//! all classes, so prevalence — not geometry — is the only thing that differs
//! between head and tail classes. Long-tailed training sets shrink class
//! counts exponentially; noisy-label sets start balanced and flip a uniform
//! selection of labels to a uniformly chosen wrong class, keeping the clean
//! labels around for diagnostics only.
//!
//! CSV schema: `feature_0..feature_{D-1},label[,clean_label]`, UTF-8, `.` as
//! the decimal separator.

use std::fmt::Write as _;
use std::path::Path;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

use crate::error::{Error, Result};

// Fixed ChaCha stream ids so mean placement, train draws, test draws, and
// label flips never share a stream.
const STREAM_MEANS: u64 = 0;
const STREAM_TRAIN: u64 = 1;
const STREAM_TEST: u64 = 2;
const STREAM_FLIPS: u64 = 3;

/// One `(features, label, stable index)` triple.
#[derive(Debug, Clone, PartialEq)]
pub struct TrainingSample {
    pub features: Vec<f64>,
    pub label: usize,
    pub index: usize,
}

/// An immutable set of training samples with contiguous indices.
#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    pub samples: Vec<TrainingSample>,
    pub num_classes: usize,
    pub feature_dim: usize,
    /// Generator description or source path.
    pub provenance: String,
    /// Original labels before noise injection; diagnostics only, never
    /// visible to training.
    pub clean_labels: Option<Vec<usize>>,
}

impl Dataset {
    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    pub fn features(&self, index: usize) -> &[f64] {
        &self.samples[index].features
    }

    pub fn label(&self, index: usize) -> usize {
        self.samples[index].label
    }

    /// Observed labels in index order.
    pub fn labels(&self) -> Vec<usize> {
        self.samples.iter().map(|s| s.label).collect()
    }

    pub fn class_counts(&self) -> Vec<usize> {
        let mut counts = vec![0; self.num_classes];
        for s in &self.samples {
            counts[s.label] += 1;
        }
        counts
    }

    fn from_rows(
        rows: Vec<(Vec<f64>, usize)>,
        num_classes: usize,
        provenance: String,
        clean_labels: Option<Vec<usize>>,
    ) -> Result<Self> {
        if rows.is_empty() {
            return Err(Error::Dataset("no samples".into()));
        }
        let feature_dim = rows[0].0.len();
        let mut samples = Vec::with_capacity(rows.len());
        for (index, (features, label)) in rows.into_iter().enumerate() {
            if features.len() != feature_dim {
                return Err(Error::Dataset(format!(
                    "sample {index} has {} features, expected {feature_dim}",
                    features.len()
                )));
            }
            if label >= num_classes {
                return Err(Error::Dataset(format!(
                    "sample {index} has label {label} outside 0..{num_classes}"
                )));
            }
            samples.push(TrainingSample { features, label, index });
        }
        if let Some(clean) = &clean_labels {
            if clean.len() != samples.len() {
                return Err(Error::Dataset("clean label count mismatch".into()));
            }
        }
        Ok(Self {
            samples,
            num_classes,
            feature_dim,
            provenance,
            clean_labels,
        })
    }
}

/// Class-conditional Gaussian blob family.
#[derive(Debug, Clone, PartialEq)]
pub struct BlobSpec {
    pub num_classes: usize,
    pub feature_dim: usize,
    /// Standard deviation of the class-mean coordinates.
    pub mean_spacing: f64,
    /// Within-class standard deviation (shared by every class).
    pub noise_scale: f64,
    pub seed: u64,
}

impl BlobSpec {
    pub fn validate(&self) -> Result<()> {
        if self.num_classes < 2 {
            return Err(Error::InvalidSpec("need at least 2 classes".into()));
        }
        if self.feature_dim == 0 {
            return Err(Error::InvalidSpec("feature dimension must be positive".into()));
        }
        if !(self.mean_spacing.is_finite() && self.mean_spacing > 0.0) {
            return Err(Error::InvalidSpec("mean spacing must be positive".into()));
        }
        if !(self.noise_scale.is_finite() && self.noise_scale > 0.0) {
            return Err(Error::InvalidSpec("noise scale must be positive".into()));
        }
        Ok(())
    }

    /// The seeded class means; identical for every dataset drawn from this spec.
    pub fn class_means(&self) -> Vec<Vec<f64>> {
        let mut rng = ChaCha8Rng::seed_from_u64(self.seed);
        rng.set_stream(STREAM_MEANS);
        let normal = Normal::new(0.0, self.mean_spacing).expect("validated spacing");
        (0..self.num_classes)
            .map(|_| (0..self.feature_dim).map(|_| normal.sample(&mut rng)).collect())
            .collect()
    }

    fn draw_class(&self, rng: &mut ChaCha8Rng, mean: &[f64]) -> Vec<f64> {
        let normal = Normal::new(0.0, self.noise_scale).expect("validated scale");
        mean.iter().map(|m| m + normal.sample(rng)).collect()
    }
}

/// Long-tailed training spec: class `i` keeps
/// `round(max_per_class * ratio^(i / (C-1)))` samples.
#[derive(Debug, Clone, PartialEq)]
pub struct LtSpec {
    pub blobs: BlobSpec,
    pub max_per_class: usize,
    pub imbalance_ratio: f64,
}

/// Noisy-label spec: a balanced base set with a symmetric fraction of labels
/// flipped to uniformly chosen wrong classes.
#[derive(Debug, Clone, PartialEq)]
pub struct NlSpec {
    pub blobs: BlobSpec,
    pub per_class: usize,
    pub noise_rate: f64,
}

/// Per-class sample counts of the exponential long-tail profile.
pub fn lt_class_counts(max_per_class: usize, ratio: f64, num_classes: usize) -> Result<Vec<usize>> {
    if num_classes < 2 {
        return Err(Error::InvalidSpec("need at least 2 classes".into()));
    }
    if !(ratio > 0.0 && ratio <= 1.0) {
        return Err(Error::InvalidSpec(format!(
            "imbalance ratio must be in (0, 1], got {ratio}"
        )));
    }
    let mut counts = Vec::with_capacity(num_classes);
    for class in 0..num_classes {
        let exponent = class as f64 / (num_classes - 1) as f64;
        let count = (max_per_class as f64 * ratio.powf(exponent)).round() as usize;
        if count == 0 {
            return Err(Error::Dataset(format!(
                "class {class} rounds to zero samples (max {max_per_class}, ratio {ratio})"
            )));
        }
        counts.push(count);
    }
    Ok(counts)
}

/// A balanced draw from the blob family; `stream` separates otherwise
/// identical draws (train vs test).
pub fn gen_balanced(spec: &BlobSpec, per_class: usize, stream: u64) -> Result<Dataset> {
    spec.validate()?;
    if per_class == 0 {
        return Err(Error::InvalidSpec("per-class count must be positive".into()));
    }
    let means = spec.class_means();
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    rng.set_stream(stream);
    let mut rows = Vec::with_capacity(per_class * spec.num_classes);
    for (label, mean) in means.iter().enumerate() {
        for _ in 0..per_class {
            rows.push((spec.draw_class(&mut rng, mean), label));
        }
    }
    Dataset::from_rows(
        rows,
        spec.num_classes,
        format!(
            "balanced blobs: C={} D={} per_class={per_class} seed={}",
            spec.num_classes, spec.feature_dim, spec.seed
        ),
        None,
    )
}

/// Long-tailed training draw: exponential per-class counts, same covariance
/// everywhere. Companion balanced test sets come from [`gen_balanced`] on the
/// same blob spec with [`TEST_STREAM`].
pub fn gen_longtail(spec: &LtSpec) -> Result<Dataset> {
    spec.blobs.validate()?;
    let counts = lt_class_counts(spec.max_per_class, spec.imbalance_ratio, spec.blobs.num_classes)?;
    let means = spec.blobs.class_means();
    let mut rng = ChaCha8Rng::seed_from_u64(spec.blobs.seed);
    rng.set_stream(STREAM_TRAIN);
    let mut rows = Vec::with_capacity(counts.iter().sum());
    for (label, (&count, mean)) in counts.iter().zip(&means).enumerate() {
        for _ in 0..count {
            rows.push((spec.blobs.draw_class(&mut rng, mean), label));
        }
    }
    Dataset::from_rows(
        rows,
        spec.blobs.num_classes,
        format!(
            "long-tail blobs: C={} D={} n_max={} ratio={} seed={}",
            spec.blobs.num_classes,
            spec.blobs.feature_dim,
            spec.max_per_class,
            spec.imbalance_ratio,
            spec.blobs.seed
        ),
        None,
    )
}

/// Stream id to use with [`gen_balanced`] for held-out test draws.
pub const TEST_STREAM: u64 = STREAM_TEST;

/// Balanced blobs with `round(noise_rate * N)` labels flipped: each selected
/// sample's label is replaced by a uniform draw over the other `C - 1`
/// classes. The clean labels are retained for diagnostics only.
pub fn gen_noisy(spec: &NlSpec) -> Result<Dataset> {
    if !(spec.noise_rate >= 0.0 && spec.noise_rate < 1.0) {
        return Err(Error::InvalidSpec(format!(
            "noise rate must be in [0, 1), got {}",
            spec.noise_rate
        )));
    }
    let base = gen_balanced(&spec.blobs, spec.per_class, STREAM_TRAIN)?;
    let n = base.len();
    let clean: Vec<usize> = base.labels();

    let flip_count = (spec.noise_rate * n as f64).round() as usize;
    let mut rng = ChaCha8Rng::seed_from_u64(spec.blobs.seed);
    rng.set_stream(STREAM_FLIPS);
    let mut chosen = rand::seq::index::sample(&mut rng, n, flip_count).into_vec();
    chosen.sort_unstable();

    let mut samples = base.samples;
    for &i in &chosen {
        let wrong = rng.random_range(0..spec.blobs.num_classes - 1);
        let new_label = if wrong >= samples[i].label { wrong + 1 } else { wrong };
        samples[i].label = new_label;
    }

    Ok(Dataset {
        samples,
        num_classes: spec.blobs.num_classes,
        feature_dim: spec.blobs.feature_dim,
        provenance: format!(
            "noisy blobs: C={} D={} per_class={} rate={} seed={}",
            spec.blobs.num_classes,
            spec.blobs.feature_dim,
            spec.per_class,
            spec.noise_rate,
            spec.blobs.seed
        ),
        clean_labels: Some(clean),
    })
}

/// Stratified split. Strata come from the clean labels when present (so a
/// noisy dataset splits by its true classes), otherwise from the observed
/// labels. Both halves get contiguous re-indexed samples.
pub fn split(data: &Dataset, test_fraction: f64, seed: u64) -> Result<(Dataset, Dataset)> {
    if !(test_fraction > 0.0 && test_fraction < 1.0) {
        return Err(Error::InvalidSpec(format!(
            "test fraction must be in (0, 1), got {test_fraction}"
        )));
    }
    let strata: Vec<usize> = match &data.clean_labels {
        Some(clean) => clean.clone(),
        None => data.labels(),
    };
    let mut by_class: Vec<Vec<usize>> = vec![Vec::new(); data.num_classes];
    for (i, &c) in strata.iter().enumerate() {
        by_class[c].push(i);
    }

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut test_mask = vec![false; data.len()];
    for (class, members) in by_class.iter().enumerate() {
        if members.is_empty() {
            continue;
        }
        if members.len() < 2 {
            return Err(Error::Dataset(format!(
                "class {class} has {} sample(s), need at least 2 to split",
                members.len()
            )));
        }
        let mut shuffled = members.clone();
        use rand::seq::SliceRandom;
        shuffled.shuffle(&mut rng);
        let want = (test_fraction * members.len() as f64).round() as usize;
        let take = want.clamp(1, members.len() - 1);
        for &i in &shuffled[..take] {
            test_mask[i] = true;
        }
    }

    let subset = |keep_test: bool| -> Result<Dataset> {
        let mut rows = Vec::new();
        let mut clean = data.clean_labels.as_ref().map(|_| Vec::new());
        for (i, s) in data.samples.iter().enumerate() {
            if test_mask[i] == keep_test {
                rows.push((s.features.clone(), s.label));
                if let (Some(cl), Some(all)) = (clean.as_mut(), data.clean_labels.as_ref()) {
                    cl.push(all[i]);
                }
            }
        }
        Dataset::from_rows(
            rows,
            data.num_classes,
            format!("{} [{}]", data.provenance, if keep_test { "test" } else { "train" }),
            clean,
        )
    };

    Ok((subset(false)?, subset(true)?))
}

/// Parses a dataset from `feature_0..feature_{D-1},label[,clean_label]` CSV.
pub fn load_csv(path: &Path) -> Result<Dataset> {
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(true)
        .trim(csv::Trim::All)
        .from_path(path)
        .map_err(|e| Error::Dataset(format!("{}: {e}", path.display())))?;

    let headers = reader
        .headers()
        .map_err(|e| Error::Dataset(format!("bad header: {e}")))?
        .clone();
    let mut columns: Vec<&str> = headers.iter().collect();
    let has_clean = columns.last() == Some(&"clean_label");
    if has_clean {
        columns.pop();
    }
    if columns.last() != Some(&"label") {
        return Err(Error::Dataset(
            "header must end with `label` (optionally followed by `clean_label`)".into(),
        ));
    }
    columns.pop();
    let feature_dim = columns.len();
    if feature_dim == 0 {
        return Err(Error::Dataset("no feature columns".into()));
    }
    for (i, name) in columns.iter().enumerate() {
        if *name != format!("feature_{i}") {
            return Err(Error::Dataset(format!(
                "expected column `feature_{i}`, found `{name}`"
            )));
        }
    }

    let mut rows = Vec::new();
    let mut cleans = Vec::new();
    for (row_idx, record) in reader.records().enumerate() {
        let row = row_idx + 2; // 1-based, after the header line
        let record = record.map_err(|e| Error::CsvRow { row, msg: e.to_string() })?;
        let expected = feature_dim + 1 + usize::from(has_clean);
        if record.len() != expected {
            return Err(Error::CsvRow {
                row,
                msg: format!("expected {expected} fields, found {}", record.len()),
            });
        }
        let mut features = Vec::with_capacity(feature_dim);
        for i in 0..feature_dim {
            let value: f64 = record[i].parse().map_err(|_| Error::CsvRow {
                row,
                msg: format!("non-numeric feature `{}`", &record[i]),
            })?;
            if !value.is_finite() {
                return Err(Error::CsvRow { row, msg: "non-finite feature".into() });
            }
            features.push(value);
        }
        let label: usize = record[feature_dim].parse().map_err(|_| Error::CsvRow {
            row,
            msg: format!("unknown label `{}`", &record[feature_dim]),
        })?;
        rows.push((features, label));
        if has_clean {
            let clean: usize = record[feature_dim + 1].parse().map_err(|_| Error::CsvRow {
                row,
                msg: format!("unknown clean label `{}`", &record[feature_dim + 1]),
            })?;
            cleans.push(clean);
        }
    }
    if rows.is_empty() {
        return Err(Error::Dataset("no samples".into()));
    }

    let max_label = rows
        .iter()
        .map(|(_, l)| *l)
        .chain(cleans.iter().copied())
        .max()
        .unwrap();
    Dataset::from_rows(
        rows,
        max_label + 1,
        path.display().to_string(),
        has_clean.then_some(cleans),
    )
}

/// Writes the CSV form read back by [`load_csv`]; floats use the shortest
/// round-trip representation, so save -> load preserves every value exactly.
pub fn save_csv(data: &Dataset, path: &Path) -> Result<()> {
    let mut out = String::new();
    for i in 0..data.feature_dim {
        let _ = write!(out, "feature_{i},");
    }
    out.push_str("label");
    if data.clean_labels.is_some() {
        out.push_str(",clean_label");
    }
    out.push('\n');
    for (i, s) in data.samples.iter().enumerate() {
        for f in &s.features {
            let _ = write!(out, "{f},");
        }
        let _ = write!(out, "{}", s.label);
        if let Some(clean) = &data.clean_labels {
            let _ = write!(out, ",{}", clean[i]);
        }
        out.push('\n');
    }
    std::fs::write(path, out)?;
    Ok(())
}
