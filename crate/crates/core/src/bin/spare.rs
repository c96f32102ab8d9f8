use std::fs;
use std::path::{Path, PathBuf};

use anyhow::Context;
use clap::{Parser, Subcommand};
use serde::Serialize;

use spare::bench::bench;
use spare::stats::dataset_stats;
use spare::store::{ingest_with, load_schema, IngestOptions};
use spare::synth::{generate, Family, SyntheticSpec};
use spare::train::{evaluate, load_dataset, train_with, Checkpoint, SplitName, TrainConfig};

#[derive(Parser)]
#[command(name = "spare", version, about = "Single-pass relational models over CSV databases")]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Validate a schema and its CSV files and print table sizes.
    Ingest {
        #[arg(long)]
        schema: PathBuf,
        #[arg(long)]
        data: PathBuf,
        /// Turn dangling foreign keys into missing links instead of failing.
        #[arg(long)]
        lenient: bool,
    },
    /// Write a synthetic dataset (schema.json plus CSVs).
    Synth {
        #[arg(long)]
        family: Family,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        out: PathBuf,
        #[arg(long)]
        targets: Option<usize>,
        #[arg(long)]
        parents: Option<usize>,
        /// Flip probability, or target noise std for sum-regression.
        #[arg(long)]
        noise: Option<f64>,
        #[arg(long)]
        zipf: Option<f64>,
    },
    /// Train a model and write a checkpoint.
    Train {
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long)]
        data: PathBuf,
        #[arg(long)]
        out: PathBuf,
        /// Also write the metrics report here.
        #[arg(long)]
        report: Option<PathBuf>,
    },
    /// Score a checkpoint on one split.
    Evaluate {
        #[arg(long)]
        ckpt: PathBuf,
        #[arg(long)]
        data: PathBuf,
        #[arg(long, default_value = "test")]
        split: SplitName,
        #[arg(long)]
        report: Option<PathBuf>,
    },
    /// Time training and inference epochs against the message-passing baseline.
    Bench {
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long)]
        data: PathBuf,
        #[arg(long, default_value_t = 5)]
        runs: usize,
        #[arg(long, default_value_t = 1)]
        threads: usize,
    },
    /// Print table, graph and pruning statistics.
    Stats {
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long)]
        data: PathBuf,
    },
}

fn config(path: Option<&Path>) -> anyhow::Result<TrainConfig> {
    match path {
        Some(p) => TrainConfig::load(p).with_context(|| format!("loading config {}", p.display())),
        None => Ok(TrainConfig::default()),
    }
}

fn emit(value: &impl Serialize, file: Option<&Path>) -> anyhow::Result<()> {
    let text = serde_json::to_string_pretty(value)?;
    println!("{text}");
    if let Some(f) = file {
        fs::write(f, format!("{text}\n")).with_context(|| format!("writing {}", f.display()))?;
    }
    Ok(())
}

fn main() -> anyhow::Result<()> {
    match Cli::parse().cmd {
        Cmd::Ingest { schema, data, lenient } => {
            let schema = load_schema(&schema)?;
            let store = ingest_with(&schema, &data, IngestOptions { strict: !lenient })?;
            let tables: Vec<_> = store
                .schema
                .tables
                .iter()
                .map(|t| t.name.clone())
                .zip(store.row_counts())
                .collect();
            emit(
                &serde_json::json!({
                    "tables": tables,
                    "relations": store.num_relations(),
                    "targets": store.targets().len(),
                }),
                None,
            )?;
        }
        Cmd::Synth {
            family,
            seed,
            out,
            targets,
            parents,
            noise,
            zipf,
        } => {
            let mut spec = SyntheticSpec::new(family);
            if let Some(n) = targets {
                spec.targets = n;
            }
            spec.parents = parents;
            if let Some(p) = noise {
                spec.noise = p;
            }
            if let Some(z) = zipf {
                spec.zipf_exponent = z;
            }
            generate(&spec, seed)?.write(&out)?;
            eprintln!("wrote {}", out.display());
        }
        Cmd::Train {
            config: c,
            data,
            out,
            report,
        } => {
            let cfg = config(c.as_deref())?;
            let store = load_dataset(&data)?;
            let outcome = train_with(&cfg, &store, |log| {
                eprintln!(
                    "epoch {:>3}  loss {:.5}  val {}  {:.2}s",
                    log.epoch,
                    log.loss,
                    log.val.map_or("-".to_string(), |v| format!("{v:.5}")),
                    log.secs
                );
            })?;
            outcome.checkpoint.save(&out)?;
            let train_secs: f64 = outcome.timing.iter().map(|t| t.train_secs).sum();
            eprintln!("training time {train_secs:.2}s, checkpoint {}", out.display());
            emit(&outcome.report, report.as_deref())?;
        }
        Cmd::Evaluate {
            ckpt,
            data,
            split,
            report,
        } => {
            let ck = Checkpoint::load(&ckpt)?;
            let store = load_dataset(&data)?;
            emit(&evaluate(&ck, &store, split)?, report.as_deref())?;
        }
        Cmd::Bench {
            config: c,
            data,
            runs,
            threads,
        } => {
            let cfg = config(c.as_deref())?;
            let store = load_dataset(&data)?;
            emit(&bench(&cfg, &store, runs, threads)?, None)?;
        }
        Cmd::Stats { config: c, data } => {
            let cfg = config(c.as_deref())?;
            let store = load_dataset(&data)?;
            emit(&dataset_stats(&cfg, &store)?, None)?;
        }
    }
    Ok(())
}
