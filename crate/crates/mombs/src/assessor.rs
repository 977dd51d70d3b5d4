//! Per-sample difficulty assessment.
//!
//! For every training sample the assessor measures two things against the
//! current model: its evaluation-mode cross-entropy loss, and its
//! *uncertainty* — the Shannon entropy (nats) of the model's average
//! prediction under `G` multiplicative feature-map disturbances. Both value
//! vectors are converted to ascending rank indices (larger value, larger
//! rank; ties broken by sample index), and the sum of the two ranks is the
//! sample's difficulty rank score `d`. Samples split into four quadrants at
//! the rank median:
//!
//! - high loss, low uncertainty: confidently wrong, likely *poorly labeled*;
//! - high loss, high uncertainty: *under-represented*;
//! - low loss, low uncertainty: *well represented*;
//! - low loss, high uncertainty: *overfitted*.
//!
//! Because both ranks of a well-represented sample sit below the median and
//! both ranks of an under-represented sample sit at or above it, every
//! well-represented `d` is strictly smaller than every under-represented `d`
//! — the ordering the scheduler relies on.

use std::fmt;
use std::path::Path;
use std::str::FromStr;

use crate::data::Dataset;
use crate::error::{Error, Result};
use crate::micronet::{ce_loss, disturbance, MicroModel, PerturbationSpec};

/// Shannon entropy in nats, with `0 * ln 0 := 0`. Entries must be
/// non-negative; the caller is responsible for supplying a (near-)simplex.
pub fn entropy(p: &[f64]) -> Result<f64> {
    let mut h = 0.0;
    for &v in p {
        if !v.is_finite() || v < 0.0 {
            return Err(Error::InvalidProbability(format!("entry {v}")));
        }
        if v > 0.0 {
            h -= v * v.ln();
        }
    }
    Ok(h)
}

/// Entropy of the model's average prediction over `spec.count` disturbed
/// forwards. With `gamma = 0` every draw is the unperturbed prediction, so
/// this reduces bit-exactly to `entropy(forward(x))`. Bounded by `ln C`.
pub fn estimate_uncertainty(model: &MicroModel, x: &[f64], spec: &PerturbationSpec) -> Result<f64> {
    spec.validate()?;
    if spec.gamma == 0.0 {
        return entropy(&model.forward(x)?.class_probs());
    }
    let dim = model.feature_map_dim();
    let mut mean = vec![0.0; model.num_classes()];
    for draw in 0..spec.count {
        let t = disturbance(spec, draw, dim);
        let trace = model.forward_disturbed(x, Some(&t))?;
        for (m, p) in mean.iter_mut().zip(trace.class_probs()) {
            *m += p;
        }
    }
    for m in &mut mean {
        *m /= spec.count as f64;
    }
    entropy(&mean)
}

/// Evaluation-mode (disturbance-free) cross-entropy loss per sample, in
/// index order.
pub fn sample_losses(model: &MicroModel, data: &Dataset) -> Result<Vec<f64>> {
    if data.is_empty() {
        return Err(Error::Dataset("cannot assess an empty dataset".into()));
    }
    data.samples
        .iter()
        .map(|s| ce_loss(model.forward(&s.features)?.output(), s.label))
        .collect()
}

/// Ascending rank index per position: the smallest value gets rank 0, the
/// largest rank `N - 1`, ties broken by the smaller sample index.
pub fn rank_ascending(values: &[f64]) -> Result<Vec<usize>> {
    if let Some(v) = values.iter().find(|v| !v.is_finite()) {
        return Err(Error::NonFinite(format!("rank input ({v})")));
    }
    let mut order: Vec<usize> = (0..values.len()).collect();
    order.sort_by(|&a, &b| {
        values[a]
            .partial_cmp(&values[b])
            .expect("finite values compare totally")
            .then(a.cmp(&b))
    });
    let mut ranks = vec![0; values.len()];
    for (rank, &idx) in order.iter().enumerate() {
        ranks[idx] = rank;
    }
    Ok(ranks)
}

fn check_permutation(what: &'static str, ranks: &[usize]) -> Result<()> {
    let mut seen = vec![false; ranks.len()];
    for &r in ranks {
        if r >= ranks.len() || seen[r] {
            return Err(Error::NotAPermutation { what, len: ranks.len() });
        }
        seen[r] = true;
    }
    Ok(())
}

/// Difficulty rank score per sample: the elementwise sum of the loss ranks
/// and uncertainty ranks. Over a dataset the scores always total `N(N-1)`.
pub fn difficulty_rank_scores(loss_ranks: &[usize], uncertainty_ranks: &[usize]) -> Result<Vec<usize>> {
    if loss_ranks.len() != uncertainty_ranks.len() {
        return Err(Error::ShapeMismatch(format!(
            "rank vectors of length {} vs {}",
            loss_ranks.len(),
            uncertainty_ranks.len()
        )));
    }
    check_permutation("loss ranks", loss_ranks)?;
    check_permutation("uncertainty ranks", uncertainty_ranks)?;
    Ok(loss_ranks
        .iter()
        .zip(uncertainty_ranks)
        .map(|(a, b)| a + b)
        .collect())
}

/// Value-sum difficulty `loss + uncertainty`; used only by the efficacy
/// analysis, never by the scheduler.
pub fn value_difficulty_scores(losses: &[f64], uncertainties: &[f64]) -> Result<Vec<f64>> {
    if losses.len() != uncertainties.len() {
        return Err(Error::ShapeMismatch(format!(
            "value vectors of length {} vs {}",
            losses.len(),
            uncertainties.len()
        )));
    }
    Ok(losses.iter().zip(uncertainties).map(|(l, u)| l + u).collect())
}

/// The four sample categories from the rank median split.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Quadrant {
    /// High loss, low uncertainty: confidently wrong.
    PoorlyLabeled,
    /// High loss, high uncertainty.
    UnderRepresented,
    /// Low loss, low uncertainty.
    WellRepresented,
    /// Low loss, high uncertainty.
    Overfitted,
}

impl Quadrant {
    pub const ALL: [Quadrant; 4] = [
        Quadrant::PoorlyLabeled,
        Quadrant::UnderRepresented,
        Quadrant::WellRepresented,
        Quadrant::Overfitted,
    ];
}

impl fmt::Display for Quadrant {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            Quadrant::PoorlyLabeled => "poorly_labeled",
            Quadrant::UnderRepresented => "under_represented",
            Quadrant::WellRepresented => "well_represented",
            Quadrant::Overfitted => "overfitted",
        };
        f.write_str(s)
    }
}

impl FromStr for Quadrant {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "poorly_labeled" => Ok(Quadrant::PoorlyLabeled),
            "under_represented" => Ok(Quadrant::UnderRepresented),
            "well_represented" => Ok(Quadrant::WellRepresented),
            "overfitted" => Ok(Quadrant::Overfitted),
            other => Err(Error::Dataset(format!("unknown quadrant `{other}`"))),
        }
    }
}

/// Median split: ranks at or above `ceil(N / 2)` count as high.
pub fn categorize(rank_loss: usize, rank_uncertainty: usize, n: usize) -> Quadrant {
    let threshold = n.div_ceil(2);
    match (rank_loss >= threshold, rank_uncertainty >= threshold) {
        (true, false) => Quadrant::PoorlyLabeled,
        (true, true) => Quadrant::UnderRepresented,
        (false, false) => Quadrant::WellRepresented,
        (false, true) => Quadrant::Overfitted,
    }
}

/// Everything the assessor knows about one sample.
#[derive(Debug, Clone, PartialEq)]
pub struct SampleStats {
    pub index: usize,
    pub loss: f64,
    pub uncertainty: f64,
    pub rank_loss: usize,
    pub rank_uncertainty: usize,
    /// Rank-sum difficulty score.
    pub d: usize,
    /// Value-sum difficulty score `loss + uncertainty`.
    pub d_hat: f64,
    pub quadrant: Quadrant,
}

/// One row of stats per training sample, recomputed at an epoch boundary.
#[derive(Debug, Clone, PartialEq)]
pub struct DifficultyTable {
    pub epoch: usize,
    pub stats: Vec<SampleStats>,
}

impl DifficultyTable {
    /// Measures every sample: one evaluation forward for the loss, `G`
    /// disturbed forwards for the uncertainty, then ranks and quadrants.
    pub fn assess(
        model: &MicroModel,
        data: &Dataset,
        spec: &PerturbationSpec,
        epoch: usize,
    ) -> Result<Self> {
        let losses = sample_losses(model, data)?;
        let uncertainties: Vec<f64> = data
            .samples
            .iter()
            .map(|s| estimate_uncertainty(model, &s.features, spec))
            .collect::<Result<_>>()?;
        Self::from_measurements(&losses, &uncertainties, epoch)
    }

    /// Builds the table from already-measured loss/uncertainty vectors.
    pub fn from_measurements(losses: &[f64], uncertainties: &[f64], epoch: usize) -> Result<Self> {
        if losses.len() != uncertainties.len() {
            return Err(Error::ShapeMismatch(format!(
                "{} losses vs {} uncertainties",
                losses.len(),
                uncertainties.len()
            )));
        }
        let n = losses.len();
        let rank_l = rank_ascending(losses)?;
        let rank_u = rank_ascending(uncertainties)?;
        let d = difficulty_rank_scores(&rank_l, &rank_u)?;
        let d_hat = value_difficulty_scores(losses, uncertainties)?;
        let stats = (0..n)
            .map(|i| SampleStats {
                index: i,
                loss: losses[i],
                uncertainty: uncertainties[i],
                rank_loss: rank_l[i],
                rank_uncertainty: rank_u[i],
                d: d[i],
                d_hat: d_hat[i],
                quadrant: categorize(rank_l[i], rank_u[i], n),
            })
            .collect();
        Ok(Self { epoch, stats })
    }

    pub fn len(&self) -> usize {
        self.stats.len()
    }

    pub fn is_empty(&self) -> bool {
        self.stats.is_empty()
    }

    /// Rank-sum difficulty scores in index order, as the scheduler consumes them.
    pub fn d_vector(&self) -> Vec<i64> {
        self.stats.iter().map(|s| s.d as i64).collect()
    }

    pub fn losses(&self) -> Vec<f64> {
        self.stats.iter().map(|s| s.loss).collect()
    }

    pub fn quadrants(&self) -> Vec<Quadrant> {
        self.stats.iter().map(|s| s.quadrant).collect()
    }

    pub fn mean_loss(&self) -> f64 {
        self.stats.iter().map(|s| s.loss).sum::<f64>() / self.len() as f64
    }

    pub fn mean_uncertainty(&self) -> f64 {
        self.stats.iter().map(|s| s.uncertainty).sum::<f64>() / self.len() as f64
    }

    pub fn quadrant_counts(&self) -> [usize; 4] {
        let mut counts = [0; 4];
        for s in &self.stats {
            let slot = Quadrant::ALL.iter().position(|q| *q == s.quadrant).unwrap();
            counts[slot] += 1;
        }
        counts
    }

    /// CSV serialization: `index,loss,uncertainty,rank_l,rank_u,d,quadrant`.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("index,loss,uncertainty,rank_l,rank_u,d,quadrant\n");
        for s in &self.stats {
            out.push_str(&format!(
                "{},{},{},{},{},{},{}\n",
                s.index, s.loss, s.uncertainty, s.rank_loss, s.rank_uncertainty, s.d, s.quadrant
            ));
        }
        out
    }

    pub fn write_csv(&self, path: &Path) -> Result<()> {
        std::fs::write(path, self.to_csv())?;
        Ok(())
    }

    /// Parses [`DifficultyTable::to_csv`] output back.
    pub fn from_csv(text: &str, epoch: usize) -> Result<Self> {
        let mut lines = text.lines();
        let header = lines.next().unwrap_or("");
        if header != "index,loss,uncertainty,rank_l,rank_u,d,quadrant" {
            return Err(Error::Dataset(format!("unexpected header `{header}`")));
        }
        let mut stats = Vec::new();
        for (i, line) in lines.enumerate() {
            let row = i + 2;
            let fields: Vec<&str> = line.split(',').collect();
            if fields.len() != 7 {
                return Err(Error::CsvRow { row, msg: format!("expected 7 fields, got {}", fields.len()) });
            }
            let parse_usize = |s: &str| -> Result<usize> {
                s.parse().map_err(|_| Error::CsvRow { row, msg: format!("bad integer `{s}`") })
            };
            let parse_f64 = |s: &str| -> Result<f64> {
                s.parse().map_err(|_| Error::CsvRow { row, msg: format!("bad number `{s}`") })
            };
            let loss = parse_f64(fields[1])?;
            let uncertainty = parse_f64(fields[2])?;
            stats.push(SampleStats {
                index: parse_usize(fields[0])?,
                loss,
                uncertainty,
                rank_loss: parse_usize(fields[3])?,
                rank_uncertainty: parse_usize(fields[4])?,
                d: parse_usize(fields[5])?,
                d_hat: loss + uncertainty,
                quadrant: fields[6].parse()?,
            });
        }
        if stats.is_empty() {
            return Err(Error::Dataset("no samples".into()));
        }
        Ok(Self { epoch, stats })
    }
}
