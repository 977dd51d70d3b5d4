//! Run artifact emission.
//!
//! One run directory holds:
//!
//! - `metrics.csv` — one row per epoch;
//! - `difficulty_epoch{k}.csv` — the assessment table of each assessed epoch;
//! - `plan_epoch{k}.csv` — the minibatch plan of every epoch;
//! - `efficacy.csv` — update-efficacy probe records (header-only when the run
//!   was not a probe);
//! - `config.toml` — the resolved configuration snapshot;
//! - `manifest.toml` — seed, sampler, crate version, and a wall-clock
//!   timestamp (the only field that varies between identical reruns).
//!
//! Floats are written in Rust's shortest round-trip form, so identical runs
//! emit identical bytes.

use std::fmt::Write as _;
use std::path::Path;
use std::time::{SystemTime, UNIX_EPOCH};

use crate::error::Result;

use super::{Comparison, EfficacyRecord, EpochMetrics, RunArtifacts};

const METRICS_HEADER: &str = "epoch,train_loss,test_accuracy,plan_variance,\
mb1,mb2,mb3,mb4,mb5,mb6,mb7,mb8,mb9,mb10,mean_uncertainty,mean_loss";

/// Writes every artifact of one run into `dir` (created if missing).
pub fn emit_outputs(artifacts: &RunArtifacts, dir: &Path) -> Result<()> {
    std::fs::create_dir_all(dir)?;

    std::fs::write(dir.join("metrics.csv"), metrics_csv(&artifacts.metrics.per_epoch))?;

    for table in &artifacts.tables {
        table.write_csv(&dir.join(format!("difficulty_epoch{}.csv", table.epoch)))?;
    }
    for (epoch, plan) in &artifacts.plans {
        std::fs::write(dir.join(format!("plan_epoch{epoch}.csv")), plan.to_csv(*epoch))?;
    }

    std::fs::write(dir.join("efficacy.csv"), efficacy_csv(&artifacts.efficacy))?;
    std::fs::write(dir.join("config.toml"), artifacts.config.to_toml_string()?)?;

    let timestamp = SystemTime::now()
        .duration_since(UNIX_EPOCH)
        .map(|d| d.as_secs())
        .unwrap_or(0);
    let manifest = format!(
        "seed = {}\nsampler = \"{}\"\nversion = \"{}\"\ntimestamp = {}\n",
        artifacts.seed,
        artifacts.sampler,
        env!("CARGO_PKG_VERSION"),
        timestamp
    );
    std::fs::write(dir.join("manifest.toml"), manifest)?;
    Ok(())
}

fn metrics_csv(rows: &[EpochMetrics]) -> String {
    let mut out = String::from(METRICS_HEADER);
    out.push('\n');
    for row in rows {
        let _ = write!(out, "{},{},{}", row.epoch, row.train_loss, row.test_accuracy);
        match row.plan_variance {
            Some(v) => {
                let _ = write!(out, ",{v}");
            }
            None => out.push(','),
        }
        match &row.mb_counts {
            Some(counts) => {
                for c in counts {
                    let _ = write!(out, ",{c}");
                }
            }
            None => out.push_str(&",".repeat(10)),
        }
        match row.mean_uncertainty {
            Some(v) => {
                let _ = write!(out, ",{v}");
            }
            None => out.push(','),
        }
        match row.mean_loss {
            Some(v) => {
                let _ = write!(out, ",{v}");
            }
            None => out.push(','),
        }
        out.push('\n');
    }
    out
}

fn efficacy_csv(records: &[EfficacyRecord]) -> String {
    let mut out = String::from("l1,l2,dhat1,dhat2,delta_lB,delta_lmin\n");
    for r in records {
        let _ = writeln!(
            out,
            "{},{},{},{},{},{}",
            r.l1, r.l2, r.dhat1, r.dhat2, r.delta_batch, r.delta_min
        );
    }
    out
}

/// Writes the sampler comparison summary as
/// `sampler,median,iqr,delta_vs_random` rows.
pub fn write_comparison_csv(cmp: &Comparison, path: &Path) -> Result<()> {
    let mut out = String::from("sampler,median,iqr,delta_vs_random\n");
    for row in &cmp.rows {
        let _ = writeln!(
            out,
            "{},{},{},{}",
            row.sampler, row.median, row.iqr, row.median_delta_vs_random
        );
    }
    std::fs::write(path, out)?;
    Ok(())
}

/// Writes the paired per-seed accuracy deltas against the random baseline:
/// one row per seed, one column per non-random sampler.
pub fn write_deltas_csv(cmp: &Comparison, path: &Path) -> Result<()> {
    let samplers: Vec<_> = cmp
        .rows
        .iter()
        .filter(|r| r.sampler != crate::scheduler::SamplerKind::Random)
        .map(|r| r.sampler.clone())
        .collect();
    let mut out = String::from("seed");
    for s in &samplers {
        let _ = write!(out, ",{s}");
    }
    out.push('\n');
    let deltas: Vec<Vec<f64>> = samplers
        .iter()
        .map(|s| cmp.deltas_vs_random(s).expect("sampler row exists"))
        .collect();
    for (i, seed) in cmp.seeds.iter().enumerate() {
        let _ = write!(out, "{seed}");
        for column in &deltas {
            let _ = write!(out, ",{}", column[i]);
        }
        out.push('\n');
    }
    std::fs::write(path, out)?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::harness::{
        run_experiment, run_probe, DatasetConfig, ExperimentConfig, ModelConfig, OptimConfig,
        PivotEpoch, UncertaintyConfig,
    };
    use crate::scheduler::SamplerKind;

    fn cfg() -> ExperimentConfig {
        ExperimentConfig {
            dataset: DatasetConfig::Balanced {
                num_classes: 3,
                feature_dim: 3,
                mean_spacing: 1.5,
                noise_scale: 0.5,
                per_class: 6,
                test_per_class: 6,
                seed: None,
            },
            model: ModelConfig { hidden_dims: vec![6], perturbation_layer: 0 },
            optim: OptimConfig {
                epochs: 4,
                batch_size: 2,
                pivot_epoch: PivotEpoch::At(2),
                ..OptimConfig::default()
            },
            uncertainty: UncertaintyConfig { disturbances: 3, ..UncertaintyConfig::default() },
            ..ExperimentConfig::default()
        }
    }

    fn read(dir: &Path, name: &str) -> String {
        std::fs::read_to_string(dir.join(name)).unwrap()
    }

    #[test]
    fn emitted_files_are_complete_and_reproducible() {
        let cfg = cfg();
        let artifacts = run_experiment(&cfg, &SamplerKind::Mombs, 7).unwrap();

        let dir_a = tempfile::tempdir().unwrap();
        let dir_b = tempfile::tempdir().unwrap();
        emit_outputs(&artifacts, dir_a.path()).unwrap();
        let rerun = run_experiment(&cfg, &SamplerKind::Mombs, 7).unwrap();
        emit_outputs(&rerun, dir_b.path()).unwrap();

        // metrics.csv has one row per epoch.
        let metrics = read(dir_a.path(), "metrics.csv");
        assert_eq!(metrics.lines().count(), 1 + cfg.optim.epochs);
        assert!(metrics.starts_with("epoch,train_loss,test_accuracy,plan_variance,mb1"));

        // Identical bytes for every file except the manifest timestamp.
        for name in ["metrics.csv", "efficacy.csv", "config.toml", "plan_epoch0.csv",
                     "plan_epoch3.csv", "difficulty_epoch2.csv", "difficulty_epoch3.csv"] {
            assert_eq!(read(dir_a.path(), name), read(dir_b.path(), name), "{name} differs");
        }
        let strip_ts = |s: String| -> String {
            s.lines().filter(|l| !l.starts_with("timestamp")).collect::<Vec<_>>().join("\n")
        };
        assert_eq!(
            strip_ts(read(dir_a.path(), "manifest.toml")),
            strip_ts(read(dir_b.path(), "manifest.toml"))
        );
    }

    #[test]
    fn emitted_csvs_round_trip_parse() {
        let cfg = cfg();
        let artifacts = run_probe(&cfg, 3).unwrap();
        let dir = tempfile::tempdir().unwrap();
        emit_outputs(&artifacts, dir.path()).unwrap();

        // Difficulty tables parse back exactly.
        for table in &artifacts.tables {
            let text = read(dir.path(), &format!("difficulty_epoch{}.csv", table.epoch));
            let parsed = crate::assessor::DifficultyTable::from_csv(&text, table.epoch).unwrap();
            assert_eq!(&parsed, table);
        }

        // Every CSV is rectangular and numeric where expected.
        for name in ["metrics.csv", "efficacy.csv"] {
            let text = read(dir.path(), name);
            let mut lines = text.lines();
            let width = lines.next().unwrap().split(',').count();
            for line in lines {
                assert_eq!(line.split(',').count(), width, "{name}: ragged row");
            }
        }
        let efficacy = read(dir.path(), "efficacy.csv");
        assert_eq!(efficacy.lines().count(), 1 + artifacts.efficacy.len());
        for line in efficacy.lines().skip(1) {
            for field in line.split(',') {
                field.parse::<f64>().unwrap();
            }
        }

        // Plan rows reference valid members and parse their sums.
        let plan0 = read(dir.path(), "plan_epoch0.csv");
        assert!(plan0.starts_with("epoch,batch_id,member_indices,d_sum,mb_type"));
        for line in plan0.lines().skip(1) {
            let fields: Vec<&str> = line.split(',').collect();
            assert_eq!(fields.len(), 5);
            for m in fields[2].split(';') {
                m.parse::<usize>().unwrap();
            }
        }

        // The config snapshot parses back to the original.
        let snapshot: ExperimentConfig = toml::from_str(&read(dir.path(), "config.toml")).unwrap();
        assert_eq!(snapshot, cfg);
    }
}
