//! Train, save a checkpoint, load it back and score the test split.
//!
//!     cargo run --release --example checkpoint -- --out model.json

use std::path::PathBuf;

use clap::Parser;
use spare::synth::{generate, Family, SyntheticSpec};
use spare::train::{evaluate, predict_split, train, Checkpoint, SplitName, TrainConfig};

#[derive(Parser)]
struct Args {
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long, default_value_t = 10)]
    epochs: usize,
}

fn main() -> anyhow::Result<()> {
    let args = Args::parse();
    let store = generate(&SyntheticSpec::new(Family::RelationalSignal).with_targets(2000), 0)?.to_store()?;
    let mut cfg = TrainConfig::default();
    cfg.epochs = args.epochs;
    let outcome = train(&cfg, &store)?;

    let tmp = tempfile::tempdir()?;
    let path = args.out.unwrap_or_else(|| tmp.path().join("model.json"));
    outcome.checkpoint.save(&path)?;
    let ck = Checkpoint::load(&path)?;
    println!("{} parameters, {} registry keys in {}", ck.parameters.len(), ck.registry_keys.len(), path.display());

    let report = evaluate(&ck, &store, SplitName::Test)?;
    println!("test {} {:.4} (at training time {:.4})", report.metric, report.test.unwrap_or(f64::NAN), outcome.report.test.unwrap_or(f64::NAN));
    let (targets, preds) = predict_split(&ck, &store, SplitName::Test)?;
    for (t, p) in targets.iter().zip(&preds).take(5) {
        println!("  {:<8} logit {p:+.3}", store.describe(*t));
    }
    Ok(())
}
