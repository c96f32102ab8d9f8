//! Dataset and DAG statistics.

use serde::{Deserialize, Serialize};

use crate::error::Result;
use crate::graph::{build_dag, build_undirected};
use crate::prune::{count_occurrences, prune, reduction_stats, ReductionStats};
use crate::schedule::{build_schedule, sequential_depth};
use crate::store::{split_targets, Store};
use crate::train::TrainConfig;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TableSummary {
    pub name: String,
    pub rows: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SizeSummary {
    pub mean: f64,
    pub max: usize,
}

impl SizeSummary {
    fn of(xs: impl Iterator<Item = usize>) -> Self {
        let (mut n, mut sum, mut max) = (0usize, 0usize, 0usize);
        for x in xs {
            n += 1;
            sum += x;
            max = max.max(x);
        }
        SizeSummary {
            mean: if n == 0 { 0.0 } else { sum as f64 / n as f64 },
            max,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DatasetStats {
    pub tables: Vec<TableSummary>,
    pub relations: usize,
    pub targets: usize,
    pub split: [usize; 3],
    pub graph_vertices: SizeSummary,
    pub graph_edges: SizeSummary,
    pub dag_vertices: SizeSummary,
    pub dag_edges: SizeSummary,
    pub pruned_vertices: SizeSummary,
    pub pruned_edges: SizeSummary,
    pub sequential_depth: SizeSummary,
    pub occurrence_keys: usize,
    pub occurrence_histogram: std::collections::BTreeMap<u32, usize>,
    pub pruned_keys: usize,
    pub reduction: ReductionStats,
}

/// Statistics over the training targets of `cfg`'s split.
pub fn dataset_stats(cfg: &TrainConfig, store: &Store) -> Result<DatasetStats> {
    let split = split_targets(store, cfg.split, cfg.seed)?;
    let train = &split.train;
    let graphs: Vec<_> = train.iter().map(|&t| build_undirected(store, t, &cfg.graph)).collect();
    let dags: Vec<_> = train.iter().map(|&t| build_dag(store, t, &cfg.graph)).collect();
    let occ = count_occurrences(store, train, &cfg.graph);
    let rows = store.row_counts();
    let pruned: Vec<_> = dags.iter().map(|d| prune(d, &occ, &cfg.prune, &rows)).collect();
    let depths = pruned
        .iter()
        .map(|d| build_schedule([d]).map(|s| sequential_depth(&s)))
        .collect::<Result<Vec<_>>>()?;
    let keys: std::collections::BTreeSet<_> = pruned
        .iter()
        .flat_map(|d| d.vertices.iter().filter_map(|v| v.marker))
        .collect();
    Ok(DatasetStats {
        tables: store
            .schema
            .tables
            .iter()
            .zip(&rows)
            .map(|(t, &r)| TableSummary {
                name: t.name.clone(),
                rows: r,
            })
            .collect(),
        relations: store.num_relations(),
        targets: store.targets().len(),
        split: [split.train.len(), split.val.len(), split.test.len()],
        graph_vertices: SizeSummary::of(graphs.iter().map(|g| g.num_vertices())),
        graph_edges: SizeSummary::of(graphs.iter().map(|g| g.num_edges())),
        dag_vertices: SizeSummary::of(dags.iter().map(|d| d.num_vertices())),
        dag_edges: SizeSummary::of(dags.iter().map(|d| d.num_edges())),
        pruned_vertices: SizeSummary::of(pruned.iter().map(|d| d.num_vertices())),
        pruned_edges: SizeSummary::of(pruned.iter().map(|d| d.num_edges())),
        sequential_depth: SizeSummary::of(depths.into_iter()),
        occurrence_keys: occ.len(),
        occurrence_histogram: occ.histogram(),
        pruned_keys: keys.len(),
        reduction: reduction_stats(&dags, &pruned)?,
    })
}
