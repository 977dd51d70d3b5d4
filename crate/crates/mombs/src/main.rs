//! Command-line driver for the minibatch-scheduling laboratory.

use std::path::PathBuf;

use anyhow::{bail, Context};
use clap::{Args, Parser, Subcommand};

use mombs::data::save_csv;
use mombs::harness::{
    compare_samplers, emit_outputs, run_experiment, run_probe, write_comparison_csv,
    write_deltas_csv, ExperimentConfig, PivotEpoch,
};
use mombs::scheduler::SamplerKind;

#[derive(Parser)]
#[command(name = "mombs", version, about = "Difficulty-aware minibatch scheduling experiments")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Train one sampler over the configured seeds and emit run artifacts.
    Run(CommonArgs),
    /// Run every configured sampler over shared seeds and summarize.
    Compare(CommonArgs),
    /// Train the random baseline, then probe per-batch update efficacy.
    Probe(CommonArgs),
    /// Generate the configured dataset and write train/test CSV files.
    GenData(CommonArgs),
}

#[derive(Args)]
struct CommonArgs {
    /// TOML configuration file; defaults apply when omitted.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Root seed (replaces the config's seed list).
    #[arg(long)]
    seed: Option<u64>,
    /// Output directory.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Sampler kind(s): random, mombs, anti-mombs, scl-hard, scl-linear, ohem.
    #[arg(long, value_delimiter = ',')]
    sampler: Option<Vec<SamplerKind>>,
    /// First difficulty-aware epoch: an integer, `auto`, or `never`.
    #[arg(long)]
    pivot_epoch: Option<PivotEpoch>,
    #[arg(long)]
    batch_size: Option<usize>,
    /// Half-width of the uniform feature-map noise.
    #[arg(long)]
    gamma: Option<f64>,
    /// Number of disturbance draws per uncertainty estimate.
    #[arg(long)]
    disturbances: Option<usize>,
    #[arg(long)]
    epochs: Option<usize>,
    /// SGD learning rate.
    #[arg(long)]
    eta: Option<f64>,
}

impl CommonArgs {
    fn resolve(&self) -> anyhow::Result<ExperimentConfig> {
        let mut cfg = match &self.config {
            Some(path) => ExperimentConfig::from_toml_path(path)
                .with_context(|| format!("loading {}", path.display()))?,
            None => ExperimentConfig::default(),
        };
        if let Some(seed) = self.seed {
            cfg.seeds = vec![seed];
        }
        if let Some(out) = &self.out {
            cfg.out = Some(out.clone());
        }
        if let Some(samplers) = &self.sampler {
            cfg.samplers = samplers.clone();
        }
        if let Some(p) = self.pivot_epoch {
            cfg.optim.pivot_epoch = p;
        }
        if let Some(b) = self.batch_size {
            cfg.optim.batch_size = b;
        }
        if let Some(g) = self.gamma {
            cfg.uncertainty.gamma = g;
        }
        if let Some(d) = self.disturbances {
            cfg.uncertainty.disturbances = d;
        }
        if let Some(e) = self.epochs {
            cfg.optim.epochs = e;
        }
        if let Some(eta) = self.eta {
            cfg.optim.eta = eta;
        }
        cfg.validate()?;
        Ok(cfg)
    }

    fn out_dir(&self, cfg: &ExperimentConfig, fallback: &str) -> PathBuf {
        cfg.out.clone().unwrap_or_else(|| PathBuf::from(fallback))
    }
}

fn main() -> anyhow::Result<()> {
    match Cli::parse().command {
        Command::Run(args) => {
            let cfg = args.resolve()?;
            let out = args.out_dir(&cfg, "runs/run");
            let sampler = cfg.samplers.first().expect("validated").clone();
            for &seed in &cfg.seeds {
                let artifacts = run_experiment(&cfg, &sampler, seed)?;
                let dir = if cfg.seeds.len() == 1 {
                    out.clone()
                } else {
                    out.join(format!("seed_{seed}"))
                };
                emit_outputs(&artifacts, &dir)?;
                println!(
                    "{sampler} seed {seed}: final accuracy {:.4}, best {:.4} (epoch {}) -> {}",
                    artifacts.metrics.final_accuracy,
                    artifacts.metrics.best_accuracy,
                    artifacts
                        .metrics
                        .best_epoch
                        .map_or_else(|| "-".into(), |e| e.to_string()),
                    dir.display()
                );
            }
        }
        Command::Compare(args) => {
            let cfg = args.resolve()?;
            if cfg.samplers.len() < 2 {
                bail!("compare needs at least two samplers (pass --sampler random,mombs,...)");
            }
            let out = args.out_dir(&cfg, "runs/compare");
            let cmp = compare_samplers(&cfg)?;
            std::fs::create_dir_all(&out)?;
            let csv_path = out.join("compare.csv");
            write_comparison_csv(&cmp, &csv_path)?;
            write_deltas_csv(&cmp, &out.join("deltas.csv"))?;
            print!("{}", cmp.to_text());
            println!("written: {}", csv_path.display());
        }
        Command::Probe(args) => {
            let cfg = args.resolve()?;
            let out = args.out_dir(&cfg, "runs/probe");
            for &seed in &cfg.seeds {
                let artifacts = run_probe(&cfg, seed)?;
                let dir = if cfg.seeds.len() == 1 {
                    out.clone()
                } else {
                    out.join(format!("seed_{seed}"))
                };
                emit_outputs(&artifacts, &dir)?;
                println!(
                    "probe seed {seed}: {} batches -> {}",
                    artifacts.efficacy.len(),
                    dir.display()
                );
            }
        }
        Command::GenData(args) => {
            let cfg = args.resolve()?;
            let out = args.out_dir(&cfg, "runs/data");
            std::fs::create_dir_all(&out)?;
            let seed = cfg.seeds[0];
            let (train, test) = cfg.dataset.build(seed)?;
            let train_path = out.join("train.csv");
            let test_path = out.join("test.csv");
            save_csv(&train, &train_path)?;
            save_csv(&test, &test_path)?;
            println!(
                "train: {} samples ({} classes) -> {}",
                train.len(),
                train.num_classes,
                train_path.display()
            );
            println!("test: {} samples -> {}", test.len(), test_path.display());
        }
    }
    Ok(())
}
