//! Experiment driver.
//!
//! One run is `(config, sampler kind, seed)`. Epochs before the pivot train
//! through uniformly random plans. From the pivot on, every epoch starts with
//! a fresh difficulty assessment (evaluation losses plus disturbance
//! uncertainty — assessment never touches the weights), the configured
//! sampler turns the table into a plan, and training proceeds through it with
//! plain minibatch SGD. Assessment, plan shuffling, and model init all draw
//! from seeds derived from the single run seed, so a run is a pure function
//! of its inputs and `pivot = never` runs of any difficulty-aware kind are
//! identical to the random baseline.

mod config;
mod output;

pub use config::{
    DatasetConfig, ExperimentConfig, ModelConfig, OptimConfig, PivotEpoch, PivotName,
    UncertaintyConfig,
};
pub use output::{emit_outputs, write_comparison_csv, write_deltas_csv};

use crate::assessor::{estimate_uncertainty, DifficultyTable};
use crate::data::Dataset;
use crate::error::{Error, Result};
use crate::micronet::{ce_loss, Gradients, Head, MicroModel, PerturbationSpec};
use crate::scheduler::{self, EpochPlan, SamplerKind, SclVariant};
use crate::seed::derive_seed;

/// Per-epoch diagnostics. Difficulty-derived fields are present only for
/// epochs that ran an assessment; the minibatch histogram additionally
/// requires batch size 2.
#[derive(Debug, Clone, PartialEq)]
pub struct EpochMetrics {
    pub epoch: usize,
    /// Mean training loss over the samples as they were visited.
    pub train_loss: f64,
    pub test_accuracy: f64,
    pub plan_variance: Option<f64>,
    pub mb_counts: Option<[usize; 10]>,
    pub mean_uncertainty: Option<f64>,
    pub mean_loss: Option<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunMetrics {
    pub per_epoch: Vec<EpochMetrics>,
    /// Accuracy after the last epoch (of the untouched model when no epoch ran).
    pub final_accuracy: f64,
    pub best_accuracy: f64,
    pub best_epoch: Option<usize>,
}

/// One probe of how much a single SGD step on a two-sample batch reduces that
/// batch's own loss (`delta_batch`) and its lower-loss member's loss
/// (`delta_min`). `dhat` is the member's value-sum difficulty.
#[derive(Debug, Clone, PartialEq)]
pub struct EfficacyRecord {
    pub l1: f64,
    pub l2: f64,
    pub dhat1: f64,
    pub dhat2: f64,
    pub delta_batch: f64,
    pub delta_min: f64,
}

/// Everything a run produces, ready for [`emit_outputs`].
#[derive(Debug, Clone)]
pub struct RunArtifacts {
    pub config: ExperimentConfig,
    pub sampler: SamplerKind,
    pub seed: u64,
    pub metrics: RunMetrics,
    pub tables: Vec<DifficultyTable>,
    pub plans: Vec<(usize, EpochPlan)>,
    pub efficacy: Vec<EfficacyRecord>,
    pub model: MicroModel,
}

/// Trains one `(sampler, seed)` run to completion.
pub fn run_experiment(
    cfg: &ExperimentConfig,
    sampler: &SamplerKind,
    seed: u64,
) -> Result<RunArtifacts> {
    cfg.validate()?;
    let (train, test) = cfg.dataset.build(seed)?;
    if train.num_classes < 2 {
        return Err(Error::Dataset("need at least 2 classes".into()));
    }

    let mut dims = vec![train.feature_dim];
    dims.extend_from_slice(&cfg.model.hidden_dims);
    dims.push(train.num_classes);
    let mut model = MicroModel::init(
        &dims,
        Head::Softmax,
        cfg.model.perturbation_layer,
        derive_seed(seed, "model-init", 0),
    )?;

    let epochs = cfg.optim.epochs;
    let pivot = cfg.optim.pivot_epoch.resolve(epochs);
    let batch_size = cfg.optim.batch_size.min(train.len());

    let mut per_epoch = Vec::with_capacity(epochs);
    let mut tables = Vec::new();
    let mut plans = Vec::with_capacity(epochs);
    let mut best: Option<(f64, usize)> = None;

    for epoch in 0..epochs {
        let table = match pivot {
            Some(p) if epoch >= p => {
                let pspec = PerturbationSpec {
                    count: cfg.uncertainty.disturbances,
                    gamma: cfg.uncertainty.gamma,
                    seed: derive_seed(seed, "uncertainty", epoch as u64),
                };
                Some(DifficultyTable::assess(&model, &train, &pspec, epoch)?)
            }
            _ => None,
        };

        let plan_seed = derive_seed(seed, "plan", epoch as u64);
        let mut plan = build_plan(sampler, table.as_ref(), train.len(), batch_size, plan_seed)?;
        if let Some(t) = &table {
            plan.annotate_difficulty(&t.d_vector())?;
            if batch_size == 2 {
                plan.annotate_types(&t.quadrants())?;
            }
        }

        let weights = sample_weights(sampler, table.as_ref())?;
        let train_loss =
            train_through_plan(&mut model, &train, &plan, cfg.optim.eta, weights.as_deref(), epoch)?;
        let test_accuracy = evaluate(&model, &test)?;

        if best.is_none_or(|(acc, _)| test_accuracy > acc) {
            best = Some((test_accuracy, epoch));
        }

        per_epoch.push(EpochMetrics {
            epoch,
            train_loss,
            test_accuracy,
            plan_variance: plan.variance,
            mb_counts: table
                .as_ref()
                .filter(|_| batch_size == 2)
                .map(|_| plan.mb_histogram()),
            mean_uncertainty: table.as_ref().map(DifficultyTable::mean_uncertainty),
            mean_loss: table.as_ref().map(DifficultyTable::mean_loss),
        });
        plans.push((epoch, plan));
        if let Some(t) = table {
            tables.push(t);
        }
    }

    let final_accuracy = match per_epoch.last() {
        Some(row) => row.test_accuracy,
        None => evaluate(&model, &test)?,
    };
    let (best_accuracy, best_epoch) = match best {
        Some((acc, epoch)) => (acc, Some(epoch)),
        None => (final_accuracy, None),
    };

    Ok(RunArtifacts {
        config: cfg.clone(),
        sampler: sampler.clone(),
        seed,
        metrics: RunMetrics { per_epoch, final_accuracy, best_accuracy, best_epoch },
        tables,
        plans,
        efficacy: Vec::new(),
        model,
    })
}

/// Turns the current difficulty table (when available) into the epoch's plan.
fn build_plan(
    sampler: &SamplerKind,
    table: Option<&DifficultyTable>,
    n: usize,
    batch_size: usize,
    seed: u64,
) -> Result<EpochPlan> {
    let Some(table) = table.filter(|_| sampler.uses_difficulty()) else {
        return scheduler::random_partition(n, batch_size, seed);
    };
    match sampler {
        SamplerKind::Random => unreachable!("random never consumes the table"),
        SamplerKind::Mombs => {
            let d = table.d_vector();
            if batch_size == 2 {
                scheduler::mirror_pairing(&d, seed)
            } else {
                scheduler::snake_partition(&d, batch_size, seed)
            }
        }
        SamplerKind::AntiMombs => {
            scheduler::contiguous_partition(&table.d_vector(), batch_size, seed)
        }
        SamplerKind::SclHard { .. } | SamplerKind::SclLinear { .. } => {
            scheduler::random_partition(n, batch_size, seed)
        }
        SamplerKind::Ohem { top_fraction, factor } => {
            let expanded = scheduler::ohem_expand(&table.losses(), *factor, *top_fraction, seed)?;
            scheduler::plan_from_ordered(&expanded, batch_size)
        }
    }
}

/// Per-sample loss weights for the self-paced kinds; the threshold is the
/// configured percentile of the current losses (floored away from zero so a
/// fully converged table still yields a valid threshold).
fn sample_weights(
    sampler: &SamplerKind,
    table: Option<&DifficultyTable>,
) -> Result<Option<Vec<f64>>> {
    let (pct, variant) = match sampler {
        SamplerKind::SclHard { percentile } => (*percentile, SclVariant::Hard),
        SamplerKind::SclLinear { percentile } => (*percentile, SclVariant::Linear),
        _ => return Ok(None),
    };
    let Some(table) = table else { return Ok(None) };
    let losses = table.losses();
    let lambda = scheduler::percentile(&losses, pct)?.max(1e-12);
    let weights = losses
        .iter()
        .map(|&l| scheduler::scl_weight(l, lambda, variant))
        .collect::<Result<Vec<f64>>>()?;
    Ok(Some(weights))
}

/// Runs the plan's batches in order: per batch, the update direction is the
/// mean of the members' (optionally weighted) gradients at the current
/// weights, applied with one SGD step.
fn train_through_plan(
    model: &mut MicroModel,
    train: &Dataset,
    plan: &EpochPlan,
    eta: f64,
    weights: Option<&[f64]>,
    epoch: usize,
) -> Result<f64> {
    let mut loss_sum = 0.0;
    let mut visited = 0usize;
    for (batch_id, batch) in plan.batches.iter().enumerate() {
        let mut grad = Gradients::zeros(model.param_count());
        for &i in &batch.members {
            let sample = &train.samples[i];
            let trace = model.forward(&sample.features)?;
            let loss = ce_loss(trace.output(), sample.label)?;
            if !loss.is_finite() {
                return Err(Error::Training(format!(
                    "non-finite loss {loss} at epoch {epoch}, batch {batch_id}, sample {i}"
                )));
            }
            let g = model.backward(&trace, sample.label)?;
            let w = weights.map_or(1.0, |w| w[i]);
            grad.axpy(w, &g)?;
            loss_sum += loss;
            visited += 1;
        }
        grad.scale(1.0 / batch.members.len() as f64);
        model.sgd_step(&grad, eta)?;
    }
    Ok(loss_sum / visited as f64)
}

/// Top-1 accuracy; argmax ties resolve to the smallest class index.
pub fn evaluate(model: &MicroModel, test: &Dataset) -> Result<f64> {
    if test.is_empty() {
        return Err(Error::Dataset("cannot evaluate on an empty test set".into()));
    }
    let mut correct = 0usize;
    for sample in &test.samples {
        if model.forward(&sample.features)?.predicted_class() == sample.label {
            correct += 1;
        }
    }
    Ok(correct as f64 / test.len() as f64)
}

/// Probes each two-sample batch of `plan` independently from the same
/// checkpoint: measure the members' losses and uncertainties, take one SGD
/// step on the batch alone, and record the batch and lower-loss-member loss
/// reductions. Probe steps never accumulate into `model`.
pub fn efficacy_probe(
    model: &MicroModel,
    data: &Dataset,
    plan: &EpochPlan,
    eta: f64,
    pspec: &PerturbationSpec,
) -> Result<Vec<EfficacyRecord>> {
    let mut records = Vec::with_capacity(plan.batches.len());
    for batch in &plan.batches {
        if batch.len() != 2 {
            return Err(Error::BatchSize(batch.len()));
        }
        let (a, b) = (batch.members[0], batch.members[1]);
        let (sa, sb) = (&data.samples[a], &data.samples[b]);

        let trace_a = model.forward(&sa.features)?;
        let trace_b = model.forward(&sb.features)?;
        let l1 = ce_loss(trace_a.output(), sa.label)?;
        let l2 = ce_loss(trace_b.output(), sb.label)?;
        let u1 = estimate_uncertainty(model, &sa.features, pspec)?;
        let u2 = estimate_uncertainty(model, &sb.features, pspec)?;

        let mut grad = model.backward(&trace_a, sa.label)?;
        grad.axpy(1.0, &model.backward(&trace_b, sb.label)?)?;
        grad.scale(0.5);
        let mut stepped = model.clone();
        stepped.sgd_step(&grad, eta)?;

        let l1_after = ce_loss(stepped.forward(&sa.features)?.output(), sa.label)?;
        let l2_after = ce_loss(stepped.forward(&sb.features)?.output(), sb.label)?;

        let delta_batch = 0.5 * (l1 + l2) - 0.5 * (l1_after + l2_after);
        // The lower-loss member; ties go to the smaller sample index.
        let min_is_a = l1 < l2 || (l1 == l2 && a <= b);
        let delta_min = if min_is_a { l1 - l1_after } else { l2 - l2_after };

        records.push(EfficacyRecord {
            l1,
            l2,
            dhat1: l1 + u1,
            dhat2: l2 + u2,
            delta_batch,
            delta_min,
        });
    }
    Ok(records)
}

/// Trains the random-sampler baseline for the configured epochs, then probes
/// a fresh random pairing of the training set from that checkpoint.
pub fn run_probe(cfg: &ExperimentConfig, seed: u64) -> Result<RunArtifacts> {
    let mut artifacts = run_experiment(cfg, &SamplerKind::Random, seed)?;
    let (train, _) = cfg.dataset.build(seed)?;
    let plan = scheduler::random_partition(train.len(), 2, derive_seed(seed, "probe-plan", 0))?;
    let pspec = PerturbationSpec {
        count: cfg.uncertainty.disturbances,
        gamma: cfg.uncertainty.gamma,
        seed: derive_seed(seed, "probe-uncertainty", 0),
    };
    artifacts.efficacy = efficacy_probe(&artifacts.model, &train, &plan, cfg.optim.eta, &pspec)?;
    Ok(artifacts)
}

/// One sampler's row of a multi-seed comparison.
#[derive(Debug, Clone, PartialEq)]
pub struct ComparisonRow {
    pub sampler: SamplerKind,
    /// Final-epoch accuracy per seed, in `seeds` order.
    pub final_accuracies: Vec<f64>,
    pub median: f64,
    pub iqr: f64,
    /// Median of the per-seed deltas against the random baseline.
    pub median_delta_vs_random: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Comparison {
    pub seeds: Vec<u64>,
    pub rows: Vec<ComparisonRow>,
}

impl Comparison {
    /// Paired per-seed deltas of `sampler` against the random baseline.
    pub fn deltas_vs_random(&self, sampler: &SamplerKind) -> Option<Vec<f64>> {
        let random = self.row(&SamplerKind::Random)?;
        let row = self.row(sampler)?;
        Some(
            row.final_accuracies
                .iter()
                .zip(&random.final_accuracies)
                .map(|(a, r)| a - r)
                .collect(),
        )
    }

    pub fn row(&self, sampler: &SamplerKind) -> Option<&ComparisonRow> {
        self.rows.iter().find(|r| &r.sampler == sampler)
    }

    /// Plain-text table, one sampler per row.
    pub fn to_text(&self) -> String {
        let mut out = format!(
            "{:<12} {:>10} {:>10} {:>18}\n",
            "sampler", "median", "iqr", "delta_vs_random"
        );
        for row in &self.rows {
            out.push_str(&format!(
                "{:<12} {:>10.4} {:>10.4} {:>18.4}\n",
                row.sampler.to_string(),
                row.median,
                row.iqr,
                row.median_delta_vs_random
            ));
        }
        out
    }
}

/// Runs every configured sampler over the shared seed list and summarizes
/// final accuracies. The random baseline must be among the samplers: the
/// paired deltas are measured against it.
pub fn compare_samplers(cfg: &ExperimentConfig) -> Result<Comparison> {
    cfg.validate()?;
    if cfg.samplers.len() < 2 {
        return Err(Error::Config("comparison needs at least two samplers".into()));
    }
    if !cfg.samplers.contains(&SamplerKind::Random) {
        return Err(Error::Config(
            "comparison needs the random baseline among the samplers".into(),
        ));
    }

    let mut accuracies: Vec<Vec<f64>> = Vec::with_capacity(cfg.samplers.len());
    for sampler in &cfg.samplers {
        let mut accs = Vec::with_capacity(cfg.seeds.len());
        for &seed in &cfg.seeds {
            accs.push(run_experiment(cfg, sampler, seed)?.metrics.final_accuracy);
        }
        accuracies.push(accs);
    }

    let random_idx = cfg
        .samplers
        .iter()
        .position(|s| *s == SamplerKind::Random)
        .expect("checked above");
    let random_accs = accuracies[random_idx].clone();

    let rows = cfg
        .samplers
        .iter()
        .zip(&accuracies)
        .map(|(sampler, accs)| {
            let deltas: Vec<f64> = accs.iter().zip(&random_accs).map(|(a, r)| a - r).collect();
            ComparisonRow {
                sampler: sampler.clone(),
                final_accuracies: accs.clone(),
                median: median(accs),
                iqr: iqr(accs),
                median_delta_vs_random: median(&deltas),
            }
        })
        .collect();

    Ok(Comparison { seeds: cfg.seeds.clone(), rows })
}

/// Median; even lengths average the middle two.
pub fn median(values: &[f64]) -> f64 {
    assert!(!values.is_empty(), "median of an empty slice");
    let mut sorted = values.to_vec();
    sorted.sort_by(|a, b| a.partial_cmp(b).expect("finite values"));
    let n = sorted.len();
    if n % 2 == 1 {
        sorted[n / 2]
    } else {
        0.5 * (sorted[n / 2 - 1] + sorted[n / 2])
    }
}

/// Interquartile range by Tukey's hinges: medians of the lower and upper
/// halves, excluding the middle element when the length is odd.
pub fn iqr(values: &[f64]) -> f64 {
    let mut sorted = values.to_vec();
    sorted.sort_by(|a, b| a.partial_cmp(b).expect("finite values"));
    let n = sorted.len();
    if n < 2 {
        return 0.0;
    }
    let lower = &sorted[..n / 2];
    let upper = &sorted[n.div_ceil(2)..];
    median(upper) - median(lower)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::data::{gen_balanced, BlobSpec};
    use crate::scheduler::random_partition;

    fn tiny_config() -> ExperimentConfig {
        ExperimentConfig {
            dataset: DatasetConfig::Balanced {
                num_classes: 3,
                feature_dim: 4,
                mean_spacing: 1.5,
                noise_scale: 0.5,
                per_class: 8,
                test_per_class: 8,
                seed: None,
            },
            model: ModelConfig { hidden_dims: vec![8], perturbation_layer: 0 },
            optim: OptimConfig {
                epochs: 6,
                batch_size: 2,
                pivot_epoch: PivotEpoch::At(2),
                ..OptimConfig::default()
            },
            uncertainty: UncertaintyConfig { disturbances: 4, ..UncertaintyConfig::default() },
            ..ExperimentConfig::default()
        }
    }

    type Row = (Vec<f64>, usize);

    fn dataset_from(rows: Vec<Row>) -> Dataset {
        let samples = rows
            .into_iter()
            .enumerate()
            .map(|(index, (features, label))| crate::data::TrainingSample {
                features,
                label,
                index,
            })
            .collect::<Vec<_>>();
        let num_classes = samples.iter().map(|s| s.label).max().unwrap() + 1;
        let feature_dim = samples[0].features.len();
        Dataset {
            samples,
            num_classes,
            feature_dim,
            provenance: "inline".into(),
            clean_labels: None,
        }
    }

    #[test]
    fn evaluate_memorizer_and_tie_break() {
        // A head-only model with a huge diagonal maps one-hot inputs to their
        // own class with near certainty.
        let mut model = MicroModel::init(&[3, 3], Head::Softmax, 0, 0).unwrap();
        let mut params = vec![0.0; model.param_count()];
        for c in 0..3 {
            params[c * 3 + c] = 50.0;
        }
        model.set_params(&params).unwrap();
        let rows: Vec<Row> = (0..3)
            .map(|c| {
                let mut x = vec![0.0; 3];
                x[c] = 1.0;
                (x, c)
            })
            .collect();
        let data = dataset_from(rows);
        assert_eq!(evaluate(&model, &data).unwrap(), 1.0);

        // A uniform-output model always predicts class 0, so accuracy is the
        // frequency of class 0.
        let mut flat = MicroModel::init(&[3, 3], Head::Softmax, 0, 0).unwrap();
        flat.set_params(&vec![0.0; flat.param_count()]).unwrap();
        let skew = dataset_from(vec![
            (vec![1.0, 0.0, 0.0], 0),
            (vec![0.0, 1.0, 0.0], 1),
            (vec![0.0, 0.0, 1.0], 2),
            (vec![0.5, 0.5, 0.0], 1),
        ]);
        assert_eq!(evaluate(&flat, &skew).unwrap(), 0.25);
    }

    #[test]
    fn random_guess_accuracy_is_near_one_over_c() {
        use rand::{Rng, SeedableRng};
        // Labels drawn independently of the features: any fixed model scores
        // 1/C per sample in expectation.
        let c = 10;
        let n = 10_000;
        let model = MicroModel::init(&[4, 6, c], Head::Softmax, 0, 99).unwrap();
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(5);
        let rows: Vec<Row> = (0..n)
            .map(|_| {
                let x: Vec<f64> = (0..4).map(|_| rng.random_range(-2.0..=2.0)).collect();
                let label = rng.random_range(0..c);
                (x, label)
            })
            .collect();
        let data = dataset_from(rows);
        let acc = evaluate(&model, &data).unwrap();
        let sigma = ((1.0 / c as f64) * (1.0 - 1.0 / c as f64) / n as f64).sqrt();
        assert!(
            (acc - 1.0 / c as f64).abs() < 3.0 * sigma,
            "accuracy {acc} too far from 1/{c}"
        );
    }

    #[test]
    fn probe_is_zero_at_eta_zero_and_for_perfect_predictions() {
        let blobs = BlobSpec {
            num_classes: 2,
            feature_dim: 3,
            mean_spacing: 1.5,
            noise_scale: 0.4,
            seed: 6,
        };
        let data = gen_balanced(&blobs, 6, 1).unwrap();
        let model = MicroModel::init(&[3, 5, 2], Head::Softmax, 0, 7).unwrap();
        let plan = random_partition(data.len(), 2, 3).unwrap();
        let pspec = PerturbationSpec { count: 2, gamma: 0.1, seed: 4 };

        let records = efficacy_probe(&model, &data, &plan, 0.0, &pspec).unwrap();
        assert!(records.iter().all(|r| r.delta_batch == 0.0 && r.delta_min == 0.0));

        // Near-perfect predictions: gradients vanish, so the deltas do too.
        let mut sharp = MicroModel::init(&[2, 2], Head::Softmax, 0, 1).unwrap();
        sharp.set_params(&[60.0, 0.0, -60.0, 0.0, 0.0, 0.0]).unwrap();
        let two = dataset_from(vec![(vec![1.0, 0.0], 0), (vec![-1.0, 0.0], 1)]);
        let plan2 = random_partition(2, 2, 0).unwrap();
        let recs = efficacy_probe(&sharp, &two, &plan2, 0.5, &pspec).unwrap();
        assert!(recs.iter().all(|r| r.delta_batch.abs() < 1e-9));

        // Probes reject batches that are not pairs.
        let bad = random_partition(6, 3, 0).unwrap();
        assert!(matches!(
            efficacy_probe(&model, &data, &bad, 0.1, &pspec),
            Err(Error::BatchSize(3))
        ));
    }

    #[test]
    fn run_is_deterministic_and_pivot_gates_assessment() {
        let cfg = tiny_config();
        let a = run_experiment(&cfg, &SamplerKind::Mombs, 11).unwrap();
        let b = run_experiment(&cfg, &SamplerKind::Mombs, 11).unwrap();
        assert_eq!(a.metrics, b.metrics);
        assert_eq!(a.model.params(), b.model.params());

        // Assessment starts exactly at the pivot.
        assert_eq!(a.tables.len(), cfg.optim.epochs - 2);
        assert!(a.metrics.per_epoch[0].plan_variance.is_none());
        assert!(a.metrics.per_epoch[1].mean_loss.is_none());
        assert!(a.metrics.per_epoch[2].plan_variance.is_some());
        assert!(a.metrics.per_epoch[2].mb_counts.is_some());

        // Histogram counts the size-2 batches.
        let n_pairs = a.plans[2].1.batches.iter().filter(|b| b.len() == 2).count();
        assert_eq!(
            a.metrics.per_epoch[2].mb_counts.unwrap().iter().sum::<usize>(),
            n_pairs
        );

        // Every plan visits every sample exactly once.
        for (epoch, plan) in &a.plans {
            assert!(plan.is_exact_partition(24), "epoch {epoch}");
        }
    }

    #[test]
    fn never_pivot_makes_all_samplers_identical_to_random() {
        let mut cfg = tiny_config();
        cfg.optim.pivot_epoch = PivotEpoch::Named(PivotName::Never);
        let random = run_experiment(&cfg, &SamplerKind::Random, 5).unwrap();
        let mombs = run_experiment(&cfg, &SamplerKind::Mombs, 5).unwrap();
        assert_eq!(random.metrics, mombs.metrics);
        assert_eq!(random.model.params(), mombs.model.params());
        assert!(random.tables.is_empty() && mombs.tables.is_empty());
    }

    #[test]
    fn zero_epochs_reports_the_initial_model() {
        let mut cfg = tiny_config();
        cfg.optim.epochs = 0;
        let artifacts = run_experiment(&cfg, &SamplerKind::Random, 3).unwrap();
        assert!(artifacts.metrics.per_epoch.is_empty());
        assert!(artifacts.metrics.best_epoch.is_none());
        assert!(artifacts.metrics.final_accuracy >= 0.0);
    }

    #[test]
    fn random_vs_random_comparison_has_zero_deltas() {
        let mut cfg = tiny_config();
        cfg.optim.epochs = 3;
        cfg.seeds = vec![1, 2, 3];
        cfg.samplers = vec![SamplerKind::Random, SamplerKind::Random];
        let cmp = compare_samplers(&cfg).unwrap();
        assert_eq!(cmp.rows.len(), 2);
        assert!(cmp.rows[1]
            .final_accuracies
            .iter()
            .zip(&cmp.rows[0].final_accuracies)
            .all(|(a, b)| a == b));
        assert_eq!(cmp.rows[1].median_delta_vs_random, 0.0);
        assert!(cmp.to_text().contains("sampler"));
    }

    #[test]
    fn comparison_requires_the_random_baseline() {
        let mut cfg = tiny_config();
        cfg.samplers = vec![SamplerKind::Mombs, SamplerKind::AntiMombs];
        assert!(compare_samplers(&cfg).is_err());
        cfg.samplers = vec![SamplerKind::Mombs];
        assert!(compare_samplers(&cfg).is_err());
    }

    #[test]
    fn scl_and_ohem_kinds_run_to_completion() {
        let mut cfg = tiny_config();
        cfg.optim.epochs = 4;
        for sampler in [
            SamplerKind::SclHard { percentile: 70.0 },
            SamplerKind::SclLinear { percentile: 70.0 },
            SamplerKind::Ohem { top_fraction: 0.25, factor: 2 },
        ] {
            let artifacts = run_experiment(&cfg, &sampler, 2).unwrap();
            assert_eq!(artifacts.metrics.per_epoch.len(), 4);
            // OHEM visits the hard quarter twice after the pivot.
            if matches!(sampler, SamplerKind::Ohem { .. }) {
                let (_, plan) = &artifacts.plans[3];
                assert_eq!(plan.num_slots(), 24 + (24f64 * 0.25).ceil() as usize);
            }
        }
    }

    #[test]
    fn median_and_iqr() {
        assert_eq!(median(&[3.0, 1.0, 2.0]), 2.0);
        assert_eq!(median(&[4.0, 1.0, 2.0, 3.0]), 2.5);
        assert_eq!(iqr(&[1.0, 2.0, 3.0, 4.0]), 2.0);
        assert_eq!(iqr(&[1.0, 2.0, 3.0, 4.0, 5.0]), 3.0);
        assert_eq!(iqr(&[1.0]), 0.0);
    }
}
