//! Epoch time and message counts against the message-passing baseline.
//!
//!     cargo run --release --example bench -- --threads 1 --runs 5

use clap::Parser;
use spare::bench::bench;
use spare::synth::{generate, Family, SyntheticSpec};
use spare::train::TrainConfig;

#[derive(Parser)]
struct Args {
    #[arg(long, default_value_t = 5000)]
    targets: usize,
    #[arg(long, default_value_t = 5)]
    runs: usize,
    #[arg(long, default_value_t = 1)]
    threads: usize,
    /// Baseline message-passing rounds.
    #[arg(long, default_value_t = 2)]
    rounds: usize,
    #[arg(long)]
    no_prune: bool,
    /// Reverse links followed per tuple and relation; 0 follows all.
    #[arg(long, default_value_t = 16)]
    fanout: usize,
}

fn main() -> anyhow::Result<()> {
    let args = Args::parse();
    let store = generate(&SyntheticSpec::new(Family::Skewed).with_targets(args.targets), 0)?.to_store()?;
    let mut cfg = TrainConfig::default();
    cfg.model.rounds = args.rounds;
    cfg.prune.enabled = !args.no_prune;
    cfg.graph.fanout_cap = (args.fanout > 0).then_some(args.fanout);
    let b = bench(&cfg, &store, args.runs, args.threads)?;
    println!("messages per epoch: {} vs {} (ratio {:.4}; unpruned {:.4})",
        b.spare.train_counter.messages, b.baseline.train_counter.messages, b.message_ratio, b.message_ratio_unpruned);
    println!("state updates: {} vs {}", b.spare.train_counter.state_updates, b.baseline.train_counter.state_updates);
    println!("train epoch median {:.3}s vs {:.3}s, speedup {:.1}x",
        b.spare.train_epoch_median, b.baseline.train_epoch_median, b.train_speedup);
    println!("inference epoch median {:.3}s vs {:.3}s, speedup {:.1}x",
        b.spare.inference_epoch_median, b.baseline.inference_epoch_median, b.inference_speedup);
    if let Some(r) = b.reduction {
        println!("pruning kept {:.1}% of nodes and {:.1}% of edges", 100.0 * r.node_ratio, 100.0 * r.edge_ratio);
    }
    Ok(())
}
