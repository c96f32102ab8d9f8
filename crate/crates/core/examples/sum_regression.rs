//! Regression through two foreign keys, scored by NRMSE against the
//! constant-mean predictor.
//!
//!     cargo run --release --example sum_regression -- --targets 20000

use clap::Parser;
use spare::model::ModelKind;
use spare::synth::{generate, Family, SyntheticSpec};
use spare::train::{train, TrainConfig};

#[derive(Parser)]
struct Args {
    #[arg(long, default_value_t = 5000)]
    targets: usize,
    #[arg(long, default_value_t = 0.1)]
    noise: f64,
    #[arg(long, default_value_t = 30)]
    epochs: usize,
}

fn main() -> anyhow::Result<()> {
    let args = Args::parse();
    let spec = SyntheticSpec::new(Family::SumRegression)
        .with_targets(args.targets)
        .with_noise(args.noise);
    let store = generate(&spec, 0)?.to_store()?;
    for kind in [ModelKind::SpareGcn, ModelKind::SpareDeepsets, ModelKind::GnnBaseline, ModelKind::RootOnly] {
        let mut cfg = TrainConfig::default();
        cfg.model.kind = kind;
        cfg.epochs = args.epochs;
        let r = train(&cfg, &store)?.report;
        let cm = r.constant_mean.expect("regression");
        println!(
            "{kind:?}: test NRMSE {:.4} (constant mean {:.4}), best epoch {:?}",
            r.test.unwrap_or(f64::NAN),
            cm.test.unwrap_or(f64::NAN),
            r.best_epoch
        );
    }
    Ok(())
}
