//! Relational DAG pruning.
//!
//! Tuples that are met at the same depth in many training DAGs are
//! replaced, together with everything that only reaches the root through
//! them, by a learnable embedding keyed by `(tuple, depth)`. Tuples of very
//! small tables are cut the same way.

use std::collections::{BTreeMap, BTreeSet, HashMap};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::graph::{build_dag, topological_order, DagVertex, EmbeddingKey, GraphConfig, TargetDag};
use crate::store::{Store, TupleRef};

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct OccurrenceMap {
    counts: BTreeMap<EmbeddingKey, u32>,
}

impl OccurrenceMap {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn get(&self, key: &EmbeddingKey) -> u32 {
        self.counts.get(key).copied().unwrap_or(0)
    }

    pub fn record(&mut self, key: EmbeddingKey) {
        *self.counts.entry(key).or_insert(0) += 1;
    }

    /// Count every non-root vertex of one DAG once.
    pub fn record_dag(&mut self, dag: &TargetDag) {
        for (i, v) in dag.vertices.iter().enumerate() {
            if i as u32 != dag.root && v.depth >= 1 {
                self.record(EmbeddingKey {
                    tuple: v.tuple,
                    depth: v.depth,
                });
            }
        }
    }

    pub fn len(&self) -> usize {
        self.counts.len()
    }

    pub fn is_empty(&self) -> bool {
        self.counts.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = (&EmbeddingKey, &u32)> {
        self.counts.iter()
    }

    /// Number of keys per occurrence count.
    pub fn histogram(&self) -> BTreeMap<u32, usize> {
        let mut h = BTreeMap::new();
        for &c in self.counts.values() {
            *h.entry(c).or_insert(0) += 1;
        }
        h
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PruneConfig {
    pub enabled: bool,
    /// Minimum occurrence count for a key to be pruned; `None` disables
    /// count-based pruning.
    pub threshold: Option<u32>,
    /// Tuples of tables with at most this many rows lose their sub-DAG.
    pub small_table_rows: usize,
}

impl Default for PruneConfig {
    fn default() -> Self {
        PruneConfig {
            enabled: true,
            threshold: Some(2),
            small_table_rows: 0,
        }
    }
}

impl PruneConfig {
    pub fn off() -> Self {
        PruneConfig {
            enabled: false,
            threshold: None,
            small_table_rows: 0,
        }
    }

    pub fn validate(&self) -> Result<()> {
        match self.threshold {
            Some(t) if t < 2 => Err(Error::Config(format!("prune threshold must be at least 2, got {t}"))),
            _ => Ok(()),
        }
    }

    pub(crate) fn is_small(&self, rows: usize) -> bool {
        self.enabled && rows <= self.small_table_rows
    }

    pub(crate) fn is_frequent(&self, count: u32) -> bool {
        self.enabled && self.threshold.is_some_and(|t| count >= t)
    }
}

pub fn count_occurrences(store: &Store, train_targets: &[TupleRef], graph_cfg: &GraphConfig) -> OccurrenceMap {
    let partial: Vec<OccurrenceMap> = train_targets
        .par_chunks(256)
        .map(|chunk| {
            let mut m = OccurrenceMap::new();
            for &t in chunk {
                m.record_dag(&build_dag(store, t, graph_cfg));
            }
            m
        })
        .collect();
    let mut occ = OccurrenceMap::new();
    for m in partial {
        for (k, c) in m.counts {
            *occ.counts.entry(k).or_insert(0) += c;
        }
    }
    occ
}

fn key_of(v: &DagVertex) -> EmbeddingKey {
    EmbeddingKey {
        tuple: v.tuple,
        depth: v.depth,
    }
}

/// Prune one DAG against training occurrence counts.
pub fn prune(dag: &TargetDag, occ: &OccurrenceMap, cfg: &PruneConfig, row_counts: &[usize]) -> TargetDag {
    prune_with(dag, |v| {
        cfg.is_frequent(occ.get(&key_of(v))) || cfg.is_small(row_counts[v.table()])
    })
}

/// Cut the incoming edges of every candidate vertex, then drop whatever no
/// longer reaches the root. Surviving candidates carry their key as marker.
/// The result does not depend on the order in which candidates are cut.
pub fn prune_with(dag: &TargetDag, is_candidate: impl Fn(&DagVertex) -> bool) -> TargetDag {
    let n = dag.vertices.len();
    let cand: Vec<bool> = dag
        .vertices
        .iter()
        .enumerate()
        .map(|(i, v)| i as u32 != dag.root && v.depth >= 1 && is_candidate(v))
        .collect();
    if !cand.iter().any(|&c| c) {
        return dag.clone();
    }

    let kept_edges: Vec<usize> = (0..dag.edges.len()).filter(|&k| !cand[dag.edges[k].dst as usize]).collect();
    let mut incoming = vec![Vec::new(); n];
    for &k in &kept_edges {
        incoming[dag.edges[k].dst as usize].push(dag.edges[k].src);
    }
    let mut alive = vec![false; n];
    alive[dag.root as usize] = true;
    let mut stack = vec![dag.root];
    while let Some(v) = stack.pop() {
        for &u in &incoming[v as usize] {
            if !alive[u as usize] {
                alive[u as usize] = true;
                stack.push(u);
            }
        }
    }

    let mut remap = vec![u32::MAX; n];
    let mut vertices = Vec::new();
    for (i, v) in dag.vertices.iter().enumerate() {
        if alive[i] {
            remap[i] = vertices.len() as u32;
            let mut v = *v;
            if cand[i] {
                v.marker = Some(key_of(&v));
            }
            vertices.push(v);
        }
    }
    let mut edges: Vec<_> = kept_edges
        .iter()
        .map(|&k| dag.edges[k])
        .filter(|e| alive[e.src as usize] && alive[e.dst as usize])
        .map(|mut e| {
            e.src = remap[e.src as usize];
            e.dst = remap[e.dst as usize];
            e
        })
        .collect();
    edges.sort_unstable();
    TargetDag {
        root: remap[dag.root as usize],
        vertices,
        edges,
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ReductionStats {
    pub nodes_before: usize,
    pub nodes_after: usize,
    pub edges_before: usize,
    pub edges_after: usize,
    pub node_ratio: f64,
    pub edge_ratio: f64,
}

pub fn reduction_stats(before: &[TargetDag], after: &[TargetDag]) -> Result<ReductionStats> {
    if before.len() != after.len() {
        return Err(Error::MismatchedLists(format!("{} vs {} DAGs", before.len(), after.len())));
    }
    if let Some(i) = (0..before.len()).find(|&i| before[i].root_tuple() != after[i].root_tuple()) {
        return Err(Error::MismatchedLists(format!("DAG {i} has different targets")));
    }
    let nb: usize = before.iter().map(TargetDag::num_vertices).sum();
    let na: usize = after.iter().map(TargetDag::num_vertices).sum();
    let eb: usize = before.iter().map(TargetDag::num_edges).sum();
    let ea: usize = after.iter().map(TargetDag::num_edges).sum();
    let ratio = |a: usize, b: usize| if b == 0 { 1.0 } else { a as f64 / b as f64 };
    Ok(ReductionStats {
        nodes_before: nb,
        nodes_after: na,
        edges_before: eb,
        edges_after: ea,
        node_ratio: ratio(na, nb),
        edge_ratio: ratio(ea, eb),
    })
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct SubDagViolation {
    pub key: EmbeddingKey,
    pub occurrences: usize,
    pub distinct_shapes: usize,
}

/// Shapes of the sub-DAGs above every vertex, as interned ids. Two vertices
/// share an id iff their sub-DAGs unfold to the same tree of
/// `(table, relation, direction, same-depth)` labels.
pub(crate) struct ShapeInterner {
    ids: HashMap<(u32, Vec<(u32, u8, bool, u32)>), u32>,
}

impl ShapeInterner {
    pub(crate) fn new() -> Self {
        ShapeInterner { ids: HashMap::new() }
    }

    pub(crate) fn shapes(&mut self, dag: &TargetDag) -> Vec<u32> {
        let order = topological_order(dag.vertices.len(), &dag.edges).expect("valid DAG");
        let inc = dag.in_edges();
        let mut shape = vec![u32::MAX; dag.vertices.len()];
        for v in order {
            let mut children: Vec<(u32, u8, bool, u32)> = inc[v as usize]
                .iter()
                .map(|&k| {
                    let e = &dag.edges[k as usize];
                    (e.relation, e.direction.index() as u8, dag.is_same_depth(e), shape[e.src as usize])
                })
                .collect();
            children.sort_unstable();
            let key = (dag.vertices[v as usize].tuple.table, children);
            let next = self.ids.len() as u32;
            shape[v as usize] = *self.ids.entry(key).or_insert(next);
        }
        shape
    }
}

/// Report every `(tuple, depth)` met at least twice whose sub-DAG shape is
/// not the same in all of its occurrences.
pub fn verify_subdag_identity(store: &Store, targets: &[TupleRef], graph_cfg: &GraphConfig) -> Vec<SubDagViolation> {
    let mut interner = ShapeInterner::new();
    let mut seen: BTreeMap<EmbeddingKey, (usize, BTreeSet<u32>)> = BTreeMap::new();
    for &t in targets {
        let dag = build_dag(store, t, graph_cfg);
        let shapes = interner.shapes(&dag);
        for (i, v) in dag.vertices.iter().enumerate() {
            if i as u32 == dag.root {
                continue;
            }
            let e = seen.entry(key_of(v)).or_default();
            e.0 += 1;
            e.1.insert(shapes[i]);
        }
    }
    seen.into_iter()
        .filter(|(_, (n, s))| *n >= 2 && s.len() > 1)
        .map(|(key, (occurrences, s))| SubDagViolation {
            key,
            occurrences,
            distinct_shapes: s.len(),
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fixtures;
    use crate::graph::validate_dag;

    fn edge_set(dag: &TargetDag) -> BTreeSet<(TupleRef, TupleRef)> {
        dag.edges
            .iter()
            .map(|e| (dag.vertices[e.src as usize].tuple, dag.vertices[e.dst as usize].tuple))
            .collect()
    }

    #[test]
    fn shared_airline_is_counted_twice() {
        let (store, f) = fixtures::fig1_pair();
        let occ = count_occurrences(&store, &[f.f1, f.f5], &GraphConfig::default());
        let a1 = EmbeddingKey { tuple: f.a1, depth: 1 };
        assert_eq!(occ.get(&a1), 2);
        assert_eq!(occ.get(&EmbeddingKey { tuple: f.p1, depth: 1 }), 1);
        assert!(count_occurrences(&store, &[], &GraphConfig::default()).is_empty());
    }

    #[test]
    fn threshold_two_replaces_airline_subdag() {
        let (store, f) = fixtures::fig1_graph();
        let cfg = GraphConfig::default();
        let occ = count_occurrences(&store, &[f.f1, f.f2], &cfg);
        assert_eq!(occ.get(&EmbeddingKey { tuple: f.a1, depth: 1 }), 2);
        assert_eq!(occ.histogram().get(&2), Some(&1));

        let dag = build_dag(&store, f.f1, &cfg);
        let pruned = prune(&dag, &occ, &PruneConfig::default(), &store.row_counts());
        let want: BTreeSet<_> = [
            (f.a1, f.f1),
            (f.p1, f.f1),
            (f.p2, f.f1),
            (f.f3, f.p1),
            (f.f3, f.p2),
            (f.f4, f.p1),
        ]
        .into();
        assert_eq!(edge_set(&pruned), want);
        let a1 = pruned.vertices.iter().find(|v| v.tuple == f.a1).unwrap();
        assert_eq!(a1.marker, Some(EmbeddingKey { tuple: f.a1, depth: 1 }));
        assert!(pruned.vertices.iter().all(|v| v.tuple != f.f2));
        assert!(validate_dag(&pruned).all_ok());

        let r = reduction_stats(&[dag], &[pruned]).unwrap();
        assert_eq!((r.nodes_before, r.nodes_after, r.edges_before, r.edges_after), (7, 6, 8, 6));
        assert_eq!(r.node_ratio, 6.0 / 7.0);
        assert_eq!(r.edge_ratio, 0.75);
    }

    #[test]
    fn no_threshold_no_small_tables_is_identity() {
        let (store, f) = fixtures::fig1_graph();
        let dag = build_dag(&store, f.f1, &GraphConfig::default());
        let mut occ = OccurrenceMap::new();
        occ.record_dag(&dag);
        occ.record_dag(&dag);
        let cfg = PruneConfig {
            enabled: true,
            threshold: None,
            small_table_rows: 0,
        };
        let out = prune(&dag, &occ, &cfg, &store.row_counts());
        assert_eq!(out, dag);
        let r = reduction_stats(std::slice::from_ref(&dag), &[out]).unwrap();
        assert_eq!((r.node_ratio, r.edge_ratio), (1.0, 1.0));
    }

    #[test]
    fn small_airport_table_cuts_below_airports() {
        let (store, f) = fixtures::fig1_graph();
        let dag = build_dag(&store, f.f1, &GraphConfig::default());
        let cfg = PruneConfig {
            enabled: true,
            threshold: None,
            small_table_rows: store.row_count(fixtures::AIRPORTS),
        };
        let out = prune(&dag, &OccurrenceMap::new(), &cfg, &store.row_counts());
        let want: BTreeSet<_> = [(f.a1, f.f1), (f.p1, f.f1), (f.p2, f.f1), (f.p1, f.a1), (f.f2, f.a1)].into();
        assert_eq!(edge_set(&out), want);
        for t in [f.p1, f.p2] {
            let v = out.vertices.iter().find(|v| v.tuple == t).unwrap();
            assert_eq!(v.marker, Some(EmbeddingKey { tuple: t, depth: 1 }));
        }
        assert!(out.vertices.iter().all(|v| v.tuple != f.f3 && v.tuple != f.f4));
    }

    #[test]
    fn threshold_below_two_is_a_config_error() {
        let cfg = PruneConfig {
            enabled: true,
            threshold: Some(1),
            small_table_rows: 0,
        };
        assert!(matches!(cfg.validate(), Err(Error::Config(_))));
        assert!(PruneConfig::default().validate().is_ok());
    }

    #[test]
    fn mismatched_lists() {
        let (store, f) = fixtures::fig1_graph();
        let a = build_dag(&store, f.f1, &GraphConfig::default());
        let b = build_dag(&store, f.f2, &GraphConfig::default());
        assert!(matches!(reduction_stats(&[a.clone()], &[]), Err(Error::MismatchedLists(_))));
        assert!(matches!(reduction_stats(&[a], &[b]), Err(Error::MismatchedLists(_))));
    }

    #[test]
    fn shared_airline_has_one_shape() {
        let (store, f) = fixtures::fig1_pair();
        assert!(verify_subdag_identity(&store, &[f.f1, f.f5], &GraphConfig::default()).is_empty());
    }
}
