//! Count repeated (tuple, depth) keys over training DAGs and prune them.
//!
//!     cargo run --release --example pruning -- --threshold 2 --fanout 16

use clap::Parser;
use spare::graph::{build_dag, GraphConfig};
use spare::prune::{count_occurrences, prune, reduction_stats, PruneConfig};
use spare::store::{split_targets, SplitRatios};
use spare::synth::{generate, Family, SyntheticSpec};

#[derive(Parser)]
struct Args {
    #[arg(long, default_value_t = 5000)]
    targets: usize,
    #[arg(long, default_value_t = 2)]
    threshold: u32,
    /// Reverse links followed per tuple and relation; 0 follows all.
    #[arg(long, default_value_t = 16)]
    fanout: usize,
    #[arg(long, default_value_t = 1.1)]
    zipf: f64,
}

fn main() -> anyhow::Result<()> {
    let args = Args::parse();
    let mut spec = SyntheticSpec::new(Family::Skewed).with_targets(args.targets);
    spec.zipf_exponent = args.zipf;
    let store = generate(&spec, 0)?.to_store()?;
    let split = split_targets(&store, SplitRatios::default(), 0)?;
    let graph = GraphConfig {
        fanout_cap: (args.fanout > 0).then_some(args.fanout),
        ..GraphConfig::default()
    };
    let occ = count_occurrences(&store, &split.train, &graph);
    println!("{} distinct keys over {} training DAGs", occ.len(), split.train.len());
    for (count, keys) in occ.histogram().iter().rev().take(8) {
        println!("  {keys:>6} keys seen {count} times");
    }

    let cfg = PruneConfig {
        threshold: Some(args.threshold),
        ..PruneConfig::default()
    };
    let rows = store.row_counts();
    let before: Vec<_> = split.train.iter().map(|&t| build_dag(&store, t, &graph)).collect();
    let after: Vec<_> = before.iter().map(|d| prune(d, &occ, &cfg, &rows)).collect();
    let r = reduction_stats(&before, &after)?;
    println!(
        "nodes {} -> {} ({:.3}), edges {} -> {} ({:.3})",
        r.nodes_before, r.nodes_after, r.node_ratio, r.edges_before, r.edges_after, r.edge_ratio
    );
    let marked = after.iter().flat_map(|d| d.vertices.iter()).filter(|v| v.marker.is_some()).count();
    println!("{marked} vertices now read a learned embedding");
    Ok(())
}
