//! Epoch plan construction.
//!
//! Given per-sample difficulty scores `d`, the mixed-order builders equalize
//! per-batch difficulty totals: for batch size 2, sort by `d` and pair rank
//! `k` with rank `N-1-k` (opposite ends), which minimizes the variance of
//! pair sums exactly — the sum of pair sums is fixed, so minimizing variance
//! is minimizing the sum of pairwise products, and the rearrangement
//! inequality settles that in favor of opposite pairing. Larger batches use
//! boustrophedon ("snake") dealing over `b` sorted strata so every batch gets
//! one member per stratum. The anti-mixed-order builder pairs neighbors
//! instead, which maximizes the variance; an exhaustive matching oracle is
//! included for checking both claims on small instances.
//!
//! Variance values of integer `d` vectors are computed through an exact
//! integer numerator, so equal multisets of batch sums always compare equal
//! regardless of batch order.
//!
//! Also here: uniform random partitions, self-paced loss reweighting, and
//! hard-example oversampling, plus the ten-way minibatch typing used for
//! plan diagnostics.

use std::fmt;
use std::str::FromStr;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::assessor::Quadrant;
use crate::error::{Error, Result};

/// One minibatch of sample indices. `d_sum` and `mb_type` are filled in when
/// the difficulty scores (and quadrants) are known.
#[derive(Debug, Clone, PartialEq)]
pub struct Minibatch {
    pub members: Vec<usize>,
    pub d_sum: Option<i64>,
    pub mb_type: Option<MbType>,
}

impl Minibatch {
    fn new(members: Vec<usize>) -> Self {
        Self { members, d_sum: None, mb_type: None }
    }

    pub fn len(&self) -> usize {
        self.members.len()
    }

    pub fn is_empty(&self) -> bool {
        self.members.is_empty()
    }
}

/// An ordered partition (or multiset cover, for oversampling plans) of the
/// sample indices into minibatches.
#[derive(Debug, Clone, PartialEq)]
pub struct EpochPlan {
    pub batches: Vec<Minibatch>,
    /// Population variance of the per-batch difficulty sums, once annotated.
    pub variance: Option<f64>,
}

impl EpochPlan {
    fn from_batches(batches: Vec<Vec<usize>>) -> Self {
        Self {
            batches: batches.into_iter().map(Minibatch::new).collect(),
            variance: None,
        }
    }

    pub fn num_batches(&self) -> usize {
        self.batches.len()
    }

    /// Total number of index slots (counting duplicates).
    pub fn num_slots(&self) -> usize {
        self.batches.iter().map(Minibatch::len).sum()
    }

    /// True when each of `0..n` appears exactly once.
    pub fn is_exact_partition(&self, n: usize) -> bool {
        let mut seen = vec![false; n];
        for b in &self.batches {
            for &i in &b.members {
                if i >= n || seen[i] {
                    return false;
                }
                seen[i] = true;
            }
        }
        seen.into_iter().all(|s| s)
    }

    /// Fills per-batch difficulty sums and the plan variance from `d`.
    pub fn annotate_difficulty(&mut self, d: &[i64]) -> Result<()> {
        let sums = batch_sums(&self.batches, d)?;
        for (batch, &s) in self.batches.iter_mut().zip(&sums) {
            batch.d_sum = Some(s);
        }
        self.variance = Some(variance_of_sums(&sums));
        Ok(())
    }

    /// Tags every size-2 batch with its minibatch type; other sizes keep `None`.
    pub fn annotate_types(&mut self, quadrants: &[Quadrant]) -> Result<()> {
        for batch in &mut self.batches {
            if batch.len() != 2 {
                continue;
            }
            let (a, b) = (batch.members[0], batch.members[1]);
            if a >= quadrants.len() || b >= quadrants.len() {
                return Err(Error::Coverage(format!(
                    "batch member out of range for {} quadrants",
                    quadrants.len()
                )));
            }
            batch.mb_type = Some(classify_pair(quadrants[a], quadrants[b]));
        }
        Ok(())
    }

    /// Histogram over the ten minibatch types of the annotated size-2 batches.
    pub fn mb_histogram(&self) -> [usize; 10] {
        let mut counts = [0; 10];
        for batch in &self.batches {
            if let Some(t) = batch.mb_type {
                counts[t.index() - 1] += 1;
            }
        }
        counts
    }

    /// CSV rows `epoch,batch_id,member_indices,d_sum,mb_type` (members joined
    /// by `;`). Missing annotations serialize as empty fields.
    pub fn to_csv(&self, epoch: usize) -> String {
        let mut out = String::from("epoch,batch_id,member_indices,d_sum,mb_type\n");
        for (id, batch) in self.batches.iter().enumerate() {
            let members: Vec<String> = batch.members.iter().map(ToString::to_string).collect();
            let d_sum = batch.d_sum.map(|v| v.to_string()).unwrap_or_default();
            let mb = batch.mb_type.map(|t| t.to_string()).unwrap_or_default();
            out.push_str(&format!("{epoch},{id},{},{d_sum},{mb}\n", members.join(";")));
        }
        out
    }
}

fn batch_sums(batches: &[Minibatch], d: &[i64]) -> Result<Vec<i64>> {
    let mut covered = vec![false; d.len()];
    let mut sums = Vec::with_capacity(batches.len());
    for batch in batches {
        let mut s = 0i64;
        for &i in &batch.members {
            if i >= d.len() {
                return Err(Error::Coverage(format!(
                    "index {i} outside the {}-sample difficulty vector",
                    d.len()
                )));
            }
            covered[i] = true;
            s += d[i];
        }
        sums.push(s);
    }
    if let Some(missing) = covered.iter().position(|&c| !c) {
        return Err(Error::Coverage(format!("index {missing} appears in no batch")));
    }
    Ok(sums)
}

/// Population variance of integer batch sums via the exact numerator
/// `k * sum(s^2) - (sum s)^2`, so the result is independent of batch order.
fn variance_of_sums(sums: &[i64]) -> f64 {
    let k = sums.len() as i128;
    if k == 0 {
        return 0.0;
    }
    let total: i128 = sums.iter().map(|&s| s as i128).sum();
    let sq: i128 = sums.iter().map(|&s| (s as i128) * (s as i128)).sum();
    let numerator = k * sq - total * total;
    numerator as f64 / (k * k) as f64
}

/// Population variance of a plan's per-batch difficulty sums. The plan must
/// cover every index of `d` at least once (oversampling plans may repeat).
pub fn plan_variance(plan: &EpochPlan, d: &[i64]) -> Result<f64> {
    if plan.batches.is_empty() {
        return Err(Error::Coverage("empty plan".into()));
    }
    Ok(variance_of_sums(&batch_sums(&plan.batches, d)?))
}

/// Ascending index order by `(d, index)`.
fn sorted_by_difficulty(d: &[i64]) -> Vec<usize> {
    let mut order: Vec<usize> = (0..d.len()).collect();
    order.sort_by_key(|&i| (d[i], i));
    order
}

/// Removes the `remainder` middle elements of the sorted order; they form the
/// final short batch. Middle-difficulty samples are the least sensitive to
/// which batch they land in.
fn split_out_middle(sorted: Vec<usize>, remainder: usize) -> (Vec<usize>, Vec<usize>) {
    if remainder == 0 {
        return (sorted, Vec::new());
    }
    let start = (sorted.len() - remainder) / 2;
    let mut main = sorted;
    let middle: Vec<usize> = main.drain(start..start + remainder).collect();
    (main, middle)
}

fn shuffle_batches(mut batches: Vec<Vec<usize>>, seed: u64) -> Vec<Vec<usize>> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    batches.shuffle(&mut rng);
    batches
}

fn finish_plan(batches: Vec<Vec<usize>>, d: &[i64], seed: u64) -> Result<EpochPlan> {
    let mut plan = EpochPlan::from_batches(shuffle_batches(batches, seed));
    plan.annotate_difficulty(d)?;
    Ok(plan)
}

/// Mixed-order pairing for batch size 2: sort by `d` and pair rank `k` with
/// rank `N-1-k`, so every pair joins opposite halves of the difficulty
/// ordering. Odd `N` leaves the median sample as a singleton batch. Batch
/// order is then shuffled by `seed`.
pub fn mirror_pairing(d: &[i64], seed: u64) -> Result<EpochPlan> {
    if d.len() < 2 {
        return Err(Error::InvalidSpec(format!(
            "pairing needs at least 2 samples, got {}",
            d.len()
        )));
    }
    let (main, middle) = split_out_middle(sorted_by_difficulty(d), d.len() % 2);
    let half = main.len() / 2;
    let mut batches: Vec<Vec<usize>> = (0..half)
        .map(|k| vec![main[k], main[main.len() - 1 - k]])
        .collect();
    if !middle.is_empty() {
        batches.push(middle);
    }
    finish_plan(batches, d, seed)
}

/// Anti-mixed-order pairing: sort by `d` and pair adjacent ranks
/// (`2k` with `2k+1`), concentrating similar difficulties. This maximizes the
/// variance of pair sums over all perfect matchings.
pub fn anti_mirror_pairing(d: &[i64], seed: u64) -> Result<EpochPlan> {
    contiguous_partition(d, 2, seed)
}

/// The anti-mixed-order builder for any batch size: consecutive chunks of the
/// difficulty ordering.
pub fn contiguous_partition(d: &[i64], batch_size: usize, seed: u64) -> Result<EpochPlan> {
    check_partition_args(d.len(), batch_size)?;
    let (main, middle) = split_out_middle(sorted_by_difficulty(d), d.len() % batch_size);
    let mut batches: Vec<Vec<usize>> = main.chunks(batch_size).map(<[usize]>::to_vec).collect();
    if !middle.is_empty() {
        batches.push(middle);
    }
    finish_plan(batches, d, seed)
}

/// Stratified snake dealing for batch size `b`: sort by `d`, view the order
/// as `b` strata of `N/b` samples, and deal each stratum across the batches
/// in alternating direction. Every batch receives exactly one member per
/// stratum, and `b = 2` reduces to [`mirror_pairing`]. A non-dividing
/// remainder becomes a final short batch of middle-difficulty samples.
pub fn snake_partition(d: &[i64], batch_size: usize, seed: u64) -> Result<EpochPlan> {
    check_partition_args(d.len(), batch_size)?;
    let (main, middle) = split_out_middle(sorted_by_difficulty(d), d.len() % batch_size);
    let num_batches = main.len() / batch_size;
    let mut batches: Vec<Vec<usize>> = vec![Vec::with_capacity(batch_size); num_batches];
    if num_batches > 0 {
        for (stratum, row) in main.chunks(num_batches).enumerate() {
            for (j, &idx) in row.iter().enumerate() {
                let target = if stratum % 2 == 0 { j } else { num_batches - 1 - j };
                batches[target].push(idx);
            }
        }
    }
    if !middle.is_empty() {
        batches.push(middle);
    }
    finish_plan(batches, d, seed)
}

fn check_partition_args(n: usize, batch_size: usize) -> Result<()> {
    if batch_size < 2 {
        return Err(Error::InvalidSpec(format!("batch size must be >= 2, got {batch_size}")));
    }
    if batch_size > n {
        return Err(Error::InvalidSpec(format!(
            "batch size {batch_size} exceeds the {n} available samples"
        )));
    }
    Ok(())
}

/// Uniformly shuffled indices chunked into batches; the remainder forms a
/// final short batch. Deterministic per seed.
pub fn random_partition(n: usize, batch_size: usize, seed: u64) -> Result<EpochPlan> {
    check_partition_args(n, batch_size)?;
    let indices: Vec<usize> = (0..n).collect();
    plan_from_indices(&indices, batch_size, seed)
}

/// Shuffles an index multiset and chunks it into batches of `batch_size`
/// (final chunk may be short). Used by the random sampler and by
/// oversampling plans.
pub fn plan_from_indices(indices: &[usize], batch_size: usize, seed: u64) -> Result<EpochPlan> {
    check_partition_args(indices.len(), batch_size)?;
    let mut shuffled = indices.to_vec();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    shuffled.shuffle(&mut rng);
    plan_from_ordered(&shuffled, batch_size)
}

/// Chunks an index multiset into batches in the given order (final chunk may
/// be short). For multisets that are already shuffled, e.g. [`ohem_expand`]
/// output.
pub fn plan_from_ordered(indices: &[usize], batch_size: usize) -> Result<EpochPlan> {
    check_partition_args(indices.len(), batch_size)?;
    let batches = indices.chunks(batch_size).map(<[usize]>::to_vec).collect();
    Ok(EpochPlan::from_batches(batches))
}

/// Enumerates every perfect matching of `0..n` (n even), invoking `visit`
/// with each one. (n-1)!! matchings, so `n` is capped at 12.
fn for_each_pairing(n: usize, visit: &mut impl FnMut(&[(usize, usize)])) {
    let mut available: Vec<usize> = (0..n).collect();
    let mut current: Vec<(usize, usize)> = Vec::with_capacity(n / 2);
    fn recurse(
        available: &mut Vec<usize>,
        current: &mut Vec<(usize, usize)>,
        visit: &mut impl FnMut(&[(usize, usize)]),
    ) {
        if available.is_empty() {
            visit(current);
            return;
        }
        let first = available[0];
        for pos in 1..available.len() {
            let partner = available[pos];
            let mut rest: Vec<usize> = available.clone();
            rest.remove(pos);
            rest.remove(0);
            current.push((first, partner));
            recurse(&mut rest, current, visit);
            current.pop();
        }
    }
    recurse(&mut available, &mut current, visit);
}

/// Exhaustive oracle for the pairing objective: returns a perfect matching of
/// minimal pair-sum variance together with that variance. `d.len()` must be
/// even and at most 12.
pub fn brute_force_optimal_pairing(d: &[i64]) -> Result<(EpochPlan, f64)> {
    check_brute_force_args(d.len())?;
    let mut best_pairs: Option<Vec<(usize, usize)>> = None;
    let mut best_numerator = i128::MAX;
    for_each_pairing(d.len(), &mut |pairs| {
        let numerator = pairing_variance_numerator(pairs, d);
        if numerator < best_numerator {
            best_numerator = numerator;
            best_pairs = Some(pairs.to_vec());
        }
    });
    let pairs = best_pairs.expect("n >= 2 yields at least one matching");
    let batches: Vec<Vec<usize>> = pairs.iter().map(|&(a, b)| vec![a, b]).collect();
    let mut plan = EpochPlan::from_batches(batches);
    plan.annotate_difficulty(d)?;
    let variance = plan.variance.unwrap();
    Ok((plan, variance))
}

/// Minimum and maximum pair-sum variance over all perfect matchings.
pub fn brute_force_pairing_bounds(d: &[i64]) -> Result<(f64, f64)> {
    check_brute_force_args(d.len())?;
    let k = (d.len() / 2) as i128;
    let mut min = i128::MAX;
    let mut max = i128::MIN;
    for_each_pairing(d.len(), &mut |pairs| {
        let numerator = pairing_variance_numerator(pairs, d);
        min = min.min(numerator);
        max = max.max(numerator);
    });
    Ok((min as f64 / (k * k) as f64, max as f64 / (k * k) as f64))
}

fn pairing_variance_numerator(pairs: &[(usize, usize)], d: &[i64]) -> i128 {
    let k = pairs.len() as i128;
    let mut total = 0i128;
    let mut sq = 0i128;
    for &(a, b) in pairs {
        let s = (d[a] + d[b]) as i128;
        total += s;
        sq += s * s;
    }
    k * sq - total * total
}

fn check_brute_force_args(n: usize) -> Result<()> {
    if n < 2 || n % 2 != 0 {
        return Err(Error::InvalidSpec(format!("need an even n >= 2, got {n}")));
    }
    if n > 12 {
        return Err(Error::InvalidSpec(format!(
            "exhaustive matching enumeration is capped at n = 12, got {n}"
        )));
    }
    Ok(())
}

/// The ten unordered quadrant-pair minibatch types. Types 1-4 are the
/// *positive* compositions (mixed well/under pairs, or hard samples grouped
/// with each other); types 5-10 are *negative*.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum MbType {
    Mb1,
    Mb2,
    Mb3,
    Mb4,
    Mb5,
    Mb6,
    Mb7,
    Mb8,
    Mb9,
    Mb10,
}

impl MbType {
    pub const ALL: [MbType; 10] = [
        MbType::Mb1,
        MbType::Mb2,
        MbType::Mb3,
        MbType::Mb4,
        MbType::Mb5,
        MbType::Mb6,
        MbType::Mb7,
        MbType::Mb8,
        MbType::Mb9,
        MbType::Mb10,
    ];

    /// 1-based type number.
    pub fn index(self) -> usize {
        Self::ALL.iter().position(|t| *t == self).unwrap() + 1
    }

    pub fn is_positive(self) -> bool {
        self.index() <= 4
    }
}

impl fmt::Display for MbType {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "MB{}", self.index())
    }
}

impl FromStr for MbType {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let n: usize = s
            .strip_prefix("MB")
            .and_then(|rest| rest.parse().ok())
            .ok_or_else(|| Error::Dataset(format!("unknown minibatch type `{s}`")))?;
        MbType::ALL
            .get(n.wrapping_sub(1))
            .copied()
            .ok_or_else(|| Error::Dataset(format!("unknown minibatch type `{s}`")))
    }
}

/// Unordered lookup from a pair of member quadrants to the minibatch type.
pub fn classify_pair(a: Quadrant, b: Quadrant) -> MbType {
    use Quadrant::{Overfitted as O, PoorlyLabeled as P, UnderRepresented as U, WellRepresented as W};
    match (a, b) {
        (W, U) | (U, W) => MbType::Mb1,
        (P, P) => MbType::Mb2,
        (P, O) | (O, P) => MbType::Mb3,
        (O, O) => MbType::Mb4,
        (W, W) => MbType::Mb5,
        (U, U) => MbType::Mb6,
        (W, P) | (P, W) => MbType::Mb7,
        (W, O) | (O, W) => MbType::Mb8,
        (P, U) | (U, P) => MbType::Mb9,
        (O, U) | (U, O) => MbType::Mb10,
    }
}

/// Types a size-2 batch from the quadrant table.
pub fn classify_minibatch(batch: &Minibatch, quadrants: &[Quadrant]) -> Result<MbType> {
    if batch.len() != 2 {
        return Err(Error::BatchSize(batch.len()));
    }
    let (a, b) = (batch.members[0], batch.members[1]);
    if a >= quadrants.len() || b >= quadrants.len() {
        return Err(Error::Coverage(format!(
            "batch member out of range for {} quadrants",
            quadrants.len()
        )));
    }
    Ok(classify_pair(quadrants[a], quadrants[b]))
}

/// Self-paced reweighting shape.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SclVariant {
    /// Keep the sample iff its loss is below the threshold.
    Hard,
    /// Weight decays linearly from 1 at zero loss to 0 at the threshold.
    Linear,
}

/// Self-paced weight in `[0, 1]` for a sample with the given loss. The
/// threshold `lambda` is typically a per-epoch percentile of current losses.
pub fn scl_weight(loss: f64, lambda: f64, variant: SclVariant) -> Result<f64> {
    if !(lambda > 0.0 && lambda.is_finite()) {
        return Err(Error::InvalidSpec(format!("lambda must be positive, got {lambda}")));
    }
    Ok(match variant {
        SclVariant::Hard => {
            if loss < lambda {
                1.0
            } else {
                0.0
            }
        }
        SclVariant::Linear => (1.0 - loss / lambda).max(0.0),
    })
}

/// Nearest-rank percentile (`pct` in 0..=100) of a value slice.
pub fn percentile(values: &[f64], pct: f64) -> Result<f64> {
    if values.is_empty() {
        return Err(Error::InvalidSpec("percentile of an empty slice".into()));
    }
    if !(0.0..=100.0).contains(&pct) {
        return Err(Error::InvalidSpec(format!("percentile {pct} outside 0..=100")));
    }
    let mut sorted = values.to_vec();
    sorted.sort_by(|a, b| a.partial_cmp(b).expect("finite values"));
    let rank = ((pct / 100.0) * sorted.len() as f64).ceil() as usize;
    Ok(sorted[rank.saturating_sub(1).min(sorted.len() - 1)])
}

/// Hard-example oversampling: the `ceil(top_fraction * N)` highest-loss
/// indices appear `factor` times, every other index once; the multiset is
/// shuffled by `seed` and ready to be chunked into batches.
pub fn ohem_expand(losses: &[f64], factor: usize, top_fraction: f64, seed: u64) -> Result<Vec<usize>> {
    if factor < 1 {
        return Err(Error::InvalidSpec("oversampling factor must be >= 1".into()));
    }
    if !(top_fraction > 0.0 && top_fraction <= 1.0) {
        return Err(Error::InvalidSpec(format!(
            "top fraction must be in (0, 1], got {top_fraction}"
        )));
    }
    if let Some(v) = losses.iter().find(|v| !v.is_finite()) {
        return Err(Error::NonFinite(format!("loss ({v})")));
    }
    let n = losses.len();
    let k = ((top_fraction * n as f64).ceil() as usize).min(n);
    let mut order: Vec<usize> = (0..n).collect();
    // Highest loss first, ties broken by the smaller index.
    order.sort_by(|&a, &b| {
        losses[b]
            .partial_cmp(&losses[a])
            .expect("finite values compare totally")
            .then(a.cmp(&b))
    });
    let mut expanded: Vec<usize> = (0..n).collect();
    for &hard in &order[..k] {
        for _ in 1..factor {
            expanded.push(hard);
        }
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    expanded.shuffle(&mut rng);
    Ok(expanded)
}

fn default_scl_percentile() -> f64 {
    70.0
}

fn default_ohem_fraction() -> f64 {
    0.25
}

fn default_ohem_factor() -> usize {
    2
}

/// Which policy builds each epoch's plan (and, for the reweighting kinds, how
/// sample losses feed back into the update).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum SamplerKind {
    Random,
    /// Mixed-order: mirror pairing at batch size 2, snake dealing above.
    Mombs,
    /// Anti-mixed-order: contiguous chunks of the difficulty ordering.
    AntiMombs,
    SclHard {
        #[serde(default = "default_scl_percentile")]
        percentile: f64,
    },
    SclLinear {
        #[serde(default = "default_scl_percentile")]
        percentile: f64,
    },
    Ohem {
        #[serde(default = "default_ohem_fraction")]
        top_fraction: f64,
        #[serde(default = "default_ohem_factor")]
        factor: usize,
    },
}

impl SamplerKind {
    /// Whether plan construction consumes the difficulty table after the
    /// pivot epoch. (All kinds still assess post-pivot for diagnostics.)
    pub fn uses_difficulty(&self) -> bool {
        !matches!(self, SamplerKind::Random)
    }
}

impl fmt::Display for SamplerKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            SamplerKind::Random => "random",
            SamplerKind::Mombs => "mombs",
            SamplerKind::AntiMombs => "anti-mombs",
            SamplerKind::SclHard { .. } => "scl-hard",
            SamplerKind::SclLinear { .. } => "scl-linear",
            SamplerKind::Ohem { .. } => "ohem",
        };
        f.write_str(s)
    }
}

impl FromStr for SamplerKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "random" => Ok(SamplerKind::Random),
            "mombs" | "mixed-order" => Ok(SamplerKind::Mombs),
            "anti-mombs" | "anti-mixed-order" => Ok(SamplerKind::AntiMombs),
            "scl-hard" => Ok(SamplerKind::SclHard { percentile: default_scl_percentile() }),
            "scl-linear" => Ok(SamplerKind::SclLinear { percentile: default_scl_percentile() }),
            "ohem" => Ok(SamplerKind::Ohem {
                top_fraction: default_ohem_fraction(),
                factor: default_ohem_factor(),
            }),
            other => Err(Error::Config(format!(
                "unknown sampler `{other}` (expected random, mombs, anti-mombs, scl-hard, \
                 scl-linear, or ohem)"
            ))),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::Rng;

    fn pair_set(plan: &EpochPlan) -> Vec<(usize, usize)> {
        let mut pairs: Vec<(usize, usize)> = plan
            .batches
            .iter()
            .filter(|b| b.len() == 2)
            .map(|b| {
                let (a, b) = (b.members[0], b.members[1]);
                (a.min(b), a.max(b))
            })
            .collect();
        pairs.sort_unstable();
        pairs
    }

    #[test]
    fn mirror_pairing_balances_sums() {
        let plan = mirror_pairing(&[5, 1, 4, 2], 0).unwrap();
        assert_eq!(pair_set(&plan), vec![(0, 1), (2, 3)]);
        let mut sums: Vec<i64> = plan.batches.iter().map(|b| b.d_sum.unwrap()).collect();
        sums.sort_unstable();
        assert_eq!(sums, vec![6, 6]);
        assert_eq!(plan.variance, Some(0.0));
        assert!(plan.is_exact_partition(4));
    }

    #[test]
    fn equal_difficulties_have_zero_variance() {
        let plan = mirror_pairing(&[3; 8], 1).unwrap();
        assert_eq!(plan.variance, Some(0.0));
        let anti = anti_mirror_pairing(&[3; 8], 1).unwrap();
        assert_eq!(anti.variance, Some(0.0));
    }

    #[test]
    fn mirror_pairing_members_come_from_opposite_halves() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        for _ in 0..50 {
            let n = 2 * rng.random_range(2..8usize);
            let d: Vec<i64> = (0..n).map(|_| rng.random_range(0..40)).collect();
            let order = sorted_by_difficulty(&d);
            let mut position = vec![0usize; n];
            for (pos, &idx) in order.iter().enumerate() {
                position[idx] = pos;
            }
            let plan = mirror_pairing(&d, rng.random()).unwrap();
            for batch in &plan.batches {
                let halves: Vec<bool> =
                    batch.members.iter().map(|&i| position[i] < n / 2).collect();
                assert_ne!(halves[0], halves[1], "both members in the same half");
            }
        }
    }

    #[test]
    fn mirror_matches_brute_force_minimum() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        for &n in &[4usize, 6, 8] {
            for _ in 0..20 {
                let d: Vec<i64> = (0..n).map(|_| rng.random_range(0..100)).collect();
                let mirror = mirror_pairing(&d, 3).unwrap().variance.unwrap();
                let (_, oracle) = brute_force_optimal_pairing(&d).unwrap();
                assert_eq!(mirror, oracle, "d = {d:?}");
            }
        }
    }

    #[test]
    fn anti_matches_brute_force_maximum() {
        let mut rng = ChaCha8Rng::seed_from_u64(8);
        for &n in &[4usize, 6, 8] {
            for _ in 0..20 {
                let d: Vec<i64> = (0..n).map(|_| rng.random_range(0..100)).collect();
                let anti = anti_mirror_pairing(&d, 3).unwrap().variance.unwrap();
                let (_, max) = brute_force_pairing_bounds(&d).unwrap();
                assert_eq!(anti, max, "d = {d:?}");
            }
        }
    }

    #[test]
    fn pairing_the_two_hardest_together_never_beats_mirror() {
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        for _ in 0..20 {
            let n = 8;
            let d: Vec<i64> = (0..n).map(|_| rng.random_range(0..50)).collect();
            let order = sorted_by_difficulty(&d);
            let (top, second) = (order[n - 1], order[n - 2]);
            let mirror = mirror_pairing(&d, 0).unwrap().variance.unwrap();
            for_each_pairing(n, &mut |pairs| {
                if pairs
                    .iter()
                    .any(|&(a, b)| (a == top && b == second) || (a == second && b == top))
                {
                    let k = (n / 2) as i128;
                    let var = pairing_variance_numerator(pairs, &d) as f64 / (k * k) as f64;
                    assert!(var >= mirror);
                }
            });
        }
    }

    #[test]
    fn anti_pairing_adjacent_ranks() {
        let plan = anti_mirror_pairing(&[5, 1, 4, 2], 0).unwrap();
        assert_eq!(pair_set(&plan), vec![(0, 2), (1, 3)]);
        let mut sums: Vec<i64> = plan.batches.iter().map(|b| b.d_sum.unwrap()).collect();
        sums.sort_unstable();
        assert_eq!(sums, vec![3, 9]);
        assert_eq!(plan.variance, Some(9.0));
    }

    #[test]
    fn snake_reduces_to_mirror_at_batch_size_two() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for _ in 0..20 {
            let n = 2 * rng.random_range(2..10usize);
            let d: Vec<i64> = (0..n).map(|_| rng.random_range(0..30)).collect();
            let seed: u64 = rng.random();
            let snake = snake_partition(&d, 2, seed).unwrap();
            let mirror = mirror_pairing(&d, seed).unwrap();
            assert_eq!(pair_set(&snake), pair_set(&mirror));
            assert_eq!(snake.variance, mirror.variance);
        }
    }

    #[test]
    fn snake_deal_hand_trace() {
        let d: Vec<i64> = (0..8).collect();
        let plan = snake_partition(&d, 4, 0).unwrap();
        let mut batches: Vec<Vec<usize>> = plan
            .batches
            .iter()
            .map(|b| {
                let mut m = b.members.clone();
                m.sort_unstable();
                m
            })
            .collect();
        batches.sort();
        assert_eq!(batches, vec![vec![0, 3, 4, 7], vec![1, 2, 5, 6]]);
        for b in &plan.batches {
            assert_eq!(b.d_sum, Some(14));
        }
        assert_eq!(plan.variance, Some(0.0));
    }

    #[test]
    fn snake_beats_random_on_average() {
        let mut rng = ChaCha8Rng::seed_from_u64(12);
        let n = 24;
        let b = 4;
        let d: Vec<i64> = (0..n).map(|_| rng.random_range(0..100)).collect();
        let snake_var = snake_partition(&d, b, 0).unwrap().variance.unwrap();
        let mut random_sum = 0.0;
        for seed in 0..100 {
            let plan = random_partition(n, b, seed).unwrap();
            random_sum += plan_variance(&plan, &d).unwrap();
        }
        assert!(snake_var <= random_sum / 100.0);
    }

    #[test]
    fn remainder_goes_to_a_middle_difficulty_short_batch() {
        let d = vec![10, 0, 7, 3, 5]; // sorted order: 1,3,4,2,0 with median idx 4
        let plan = mirror_pairing(&d, 0).unwrap();
        assert!(plan.is_exact_partition(5));
        let short: Vec<&Minibatch> = plan.batches.iter().filter(|b| b.len() == 1).collect();
        assert_eq!(short.len(), 1);
        assert_eq!(short[0].members, vec![4]);

        let snake = snake_partition(&d, 2, 0).unwrap();
        assert!(snake.is_exact_partition(5));
    }

    #[test]
    fn random_partition_is_seeded_and_covering() {
        let a = random_partition(10, 3, 42).unwrap();
        let b = random_partition(10, 3, 42).unwrap();
        assert_eq!(a, b);
        assert!(a.is_exact_partition(10));
        assert_eq!(a.num_batches(), 4);
        assert_ne!(a, random_partition(10, 3, 43).unwrap());
        assert!(random_partition(3, 4, 0).is_err());
        assert!(random_partition(4, 0, 0).is_err());
    }

    #[test]
    fn random_partition_is_uniform_over_pairings() {
        // N=4, b=2 has exactly 3 unordered pairings.
        let mut counts = [0usize; 3];
        let trials = 10_000u64;
        for seed in 0..trials {
            let plan = random_partition(4, 2, seed).unwrap();
            let pairs = pair_set(&plan);
            let slot = match pairs.as_slice() {
                [(0, 1), (2, 3)] => 0,
                [(0, 2), (1, 3)] => 1,
                [(0, 3), (1, 2)] => 2,
                other => panic!("unexpected pairing {other:?}"),
            };
            counts[slot] += 1;
        }
        for &c in &counts {
            let freq = c as f64 / trials as f64;
            assert!((freq - 1.0 / 3.0).abs() < 0.02, "frequency {freq}");
        }
    }

    #[test]
    fn brute_force_small_instances() {
        let (plan, var) = brute_force_optimal_pairing(&[4, 9]).unwrap();
        assert_eq!(plan.num_batches(), 1);
        assert_eq!(var, 0.0);

        let (_, var) = brute_force_optimal_pairing(&[0, 0, 1, 1]).unwrap();
        assert_eq!(var, 0.0);

        assert!(brute_force_optimal_pairing(&[1, 2, 3]).is_err());
        assert!(brute_force_optimal_pairing(&vec![1; 14]).is_err());
    }

    #[test]
    fn classification_covers_all_ten_unordered_pairs() {
        use Quadrant::*;
        let expected = [
            ((WellRepresented, UnderRepresented), MbType::Mb1),
            ((PoorlyLabeled, PoorlyLabeled), MbType::Mb2),
            ((PoorlyLabeled, Overfitted), MbType::Mb3),
            ((Overfitted, Overfitted), MbType::Mb4),
            ((WellRepresented, WellRepresented), MbType::Mb5),
            ((UnderRepresented, UnderRepresented), MbType::Mb6),
            ((WellRepresented, PoorlyLabeled), MbType::Mb7),
            ((WellRepresented, Overfitted), MbType::Mb8),
            ((PoorlyLabeled, UnderRepresented), MbType::Mb9),
            ((Overfitted, UnderRepresented), MbType::Mb10),
        ];
        for ((a, b), t) in expected {
            assert_eq!(classify_pair(a, b), t);
            assert_eq!(classify_pair(b, a), t, "classification must ignore order");
        }
        assert!(MbType::Mb1.is_positive());
        assert!(MbType::Mb4.is_positive());
        assert!(!MbType::Mb5.is_positive());
        assert!(!MbType::Mb10.is_positive());
        assert_eq!("MB7".parse::<MbType>().unwrap(), MbType::Mb7);
    }

    #[test]
    fn classify_minibatch_rejects_wrong_sizes() {
        let quadrants = vec![Quadrant::WellRepresented; 4];
        let batch = Minibatch::new(vec![0, 1, 2]);
        assert!(matches!(
            classify_minibatch(&batch, &quadrants),
            Err(Error::BatchSize(3))
        ));
        let pair = Minibatch::new(vec![0, 3]);
        assert_eq!(classify_minibatch(&pair, &quadrants).unwrap(), MbType::Mb5);
    }

    #[test]
    fn scl_weights() {
        for variant in [SclVariant::Hard, SclVariant::Linear] {
            assert_eq!(scl_weight(0.0, 1.0, variant).unwrap(), 1.0);
        }
        assert_eq!(scl_weight(1.0 + 1e-9, 1.0, SclVariant::Hard).unwrap(), 0.0);
        assert_eq!(scl_weight(0.5, 1.0, SclVariant::Linear).unwrap(), 0.5);
        assert_eq!(scl_weight(2.0, 1.0, SclVariant::Linear).unwrap(), 0.0);
        assert!(scl_weight(0.5, 0.0, SclVariant::Hard).is_err());
        assert!(scl_weight(0.5, -1.0, SclVariant::Linear).is_err());
    }

    #[test]
    fn percentile_is_nearest_rank() {
        let values = [5.0, 1.0, 3.0, 2.0, 4.0];
        assert_eq!(percentile(&values, 100.0).unwrap(), 5.0);
        assert_eq!(percentile(&values, 60.0).unwrap(), 3.0);
        assert_eq!(percentile(&values, 0.0).unwrap(), 1.0);
        assert!(percentile(&[], 50.0).is_err());
    }

    #[test]
    fn ohem_expansion_counts() {
        let losses = [0.1, 0.9, 0.2, 0.3];
        let identity = ohem_expand(&losses, 1, 0.25, 0).unwrap();
        let mut sorted = identity.clone();
        sorted.sort_unstable();
        assert_eq!(sorted, vec![0, 1, 2, 3]);

        let expanded = ohem_expand(&losses, 2, 0.25, 0).unwrap();
        assert_eq!(expanded.len(), 5);
        assert_eq!(expanded.iter().filter(|&&i| i == 1).count(), 2);
        for i in [0usize, 2, 3] {
            assert_eq!(expanded.iter().filter(|&&j| j == i).count(), 1);
        }

        assert!(ohem_expand(&losses, 0, 0.25, 0).is_err());
        assert!(ohem_expand(&losses, 2, 0.0, 0).is_err());
        assert!(ohem_expand(&[f64::NAN], 2, 0.5, 0).is_err());
    }

    #[test]
    fn plan_variance_values_and_coverage() {
        let d = vec![1, 2, 3, 4];
        let single = EpochPlan::from_batches(vec![vec![0, 1, 2, 3]]);
        assert_eq!(plan_variance(&single, &d).unwrap(), 0.0);

        let balanced = EpochPlan::from_batches(vec![vec![0, 3], vec![1, 2]]);
        assert_eq!(plan_variance(&balanced, &d).unwrap(), 0.0);

        let skewed = EpochPlan::from_batches(vec![vec![0, 1], vec![2, 3]]);
        assert_eq!(plan_variance(&skewed, &d).unwrap(), 4.0);

        let missing = EpochPlan::from_batches(vec![vec![0, 1], vec![2]]);
        assert!(matches!(plan_variance(&missing, &d), Err(Error::Coverage(_))));

        let out_of_range = EpochPlan::from_batches(vec![vec![0, 7]]);
        assert!(plan_variance(&out_of_range, &d).is_err());
    }

    #[test]
    fn sampler_kind_round_trips_through_strings() {
        for s in ["random", "mombs", "anti-mombs", "scl-hard", "scl-linear", "ohem"] {
            let kind: SamplerKind = s.parse().unwrap();
            assert_eq!(kind.to_string(), s);
        }
        assert!("bogus".parse::<SamplerKind>().is_err());
    }
}
