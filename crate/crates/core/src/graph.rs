//! Per-target tuple graphs and their acyclic orientation.
//!
//! [`build_undirected`] runs a breadth-first traversal from the target over
//! foreign-key links and records every link between included tuples.
//! [`to_dag`] orients each link from the deeper tuple to the shallower one;
//! links between tuples of equal depth point from the tuple that is higher
//! in the global order to the lower one. The target is the only sink.

use std::collections::HashMap;
use std::fmt::Write as _;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::store::{Direction, Store, TupleRef};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct GraphConfig {
    pub max_depth: u32,
    /// Upper bound on reverse links followed per (tuple, relation).
    /// `None` follows all of them.
    pub fanout_cap: Option<usize>,
    pub seed: u64,
}

impl Default for GraphConfig {
    fn default() -> Self {
        GraphConfig {
            max_depth: 2,
            fanout_cap: None,
            seed: 0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct GraphVertex {
    pub tuple: TupleRef,
    pub depth: u32,
}

/// Undirected link `u -- v` with `u < v`; `direction` is seen from `u`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct GraphEdge {
    pub u: u32,
    pub v: u32,
    pub relation: u32,
    pub direction: Direction,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct UndirectedTupleGraph {
    pub target: TupleRef,
    /// Discovery order; the target is vertex 0.
    pub vertices: Vec<GraphVertex>,
    pub edges: Vec<GraphEdge>,
}

impl UndirectedTupleGraph {
    pub fn num_vertices(&self) -> usize {
        self.vertices.len()
    }

    pub fn num_edges(&self) -> usize {
        self.edges.len()
    }
}

/// Global tuple order: table index, then row index.
pub fn global_order(a: TupleRef, b: TupleRef) -> std::cmp::Ordering {
    debug_assert_ne!(a, b);
    a.cmp(&b)
}

fn mix(mut x: u64) -> u64 {
    // splitmix64 finalizer
    x = x.wrapping_add(0x9E37_79B9_7F4A_7C15);
    x = (x ^ (x >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    x = (x ^ (x >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    x ^ (x >> 31)
}

/// Seed for the fan-out sample of one (tuple, relation). Independent of the
/// target, so a tuple keeps the same sampled neighbors in every graph.
fn sample_seed(seed: u64, t: TupleRef, relation: usize) -> u64 {
    mix(mix(mix(seed) ^ ((t.table as u64) << 32 | t.row as u64)) ^ relation as u64)
}

pub fn build_undirected(store: &Store, target: TupleRef, cfg: &GraphConfig) -> UndirectedTupleGraph {
    assert!(store.contains(target), "target {target} outside the store");
    let mut index: HashMap<TupleRef, u32> = HashMap::new();
    let mut vertices = vec![GraphVertex { tuple: target, depth: 0 }];
    index.insert(target, 0);

    let mut frontier = vec![target];
    for depth in 0..cfg.max_depth {
        frontier.sort_unstable();
        let mut next = Vec::new();
        for &v in &frontier {
            let mut visit = |t: TupleRef| {
                if let std::collections::hash_map::Entry::Vacant(e) = index.entry(t) {
                    e.insert(vertices.len() as u32);
                    vertices.push(GraphVertex { tuple: t, depth: depth + 1 });
                    next.push(t);
                }
            };
            store.forward_links(v, |l| visit(l.tuple));
            for r in 0..store.num_relations() {
                let links: Vec<_> = store.reverse_links(v, r).collect();
                match cfg.fanout_cap {
                    Some(cap) if links.len() > cap => {
                        let mut rng = ChaCha8Rng::seed_from_u64(sample_seed(cfg.seed, v, r));
                        let mut picked = rand::seq::index::sample(&mut rng, links.len(), cap).into_vec();
                        picked.sort_unstable();
                        for i in picked {
                            visit(links[i].tuple);
                        }
                    }
                    _ => links.iter().for_each(|l| visit(l.tuple)),
                }
            }
        }
        if next.is_empty() {
            break;
        }
        frontier = next;
    }

    let mut edges = Vec::new();
    for (i, vx) in vertices.iter().enumerate() {
        store.forward_links(vx.tuple, |l| {
            if let Some(&j) = index.get(&l.tuple) {
                let i = i as u32;
                let (u, v, direction) = if i < j {
                    (i, j, Direction::Forward)
                } else {
                    (j, i, Direction::Reverse)
                };
                edges.push(GraphEdge {
                    u,
                    v,
                    relation: l.relation,
                    direction,
                });
            }
        });
    }
    edges.sort_unstable();

    UndirectedTupleGraph {
        target,
        vertices,
        edges,
    }
}

/// Key of a tuple's embedding: the tuple and the depth it was met at.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct EmbeddingKey {
    pub tuple: TupleRef,
    pub depth: u32,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct DagVertex {
    pub tuple: TupleRef,
    pub depth: u32,
    /// Set when the sub-DAG below this vertex was replaced by an embedding.
    pub marker: Option<EmbeddingKey>,
}

impl DagVertex {
    pub fn table(&self) -> usize {
        self.tuple.table as usize
    }
}

/// A message flows `src -> dst`. `direction` is seen from `src`: `Forward`
/// when `src` holds the foreign key.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct DagEdge {
    pub src: u32,
    pub dst: u32,
    pub relation: u32,
    pub direction: Direction,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TargetDag {
    pub root: u32,
    pub vertices: Vec<DagVertex>,
    pub edges: Vec<DagEdge>,
}

impl TargetDag {
    pub fn num_vertices(&self) -> usize {
        self.vertices.len()
    }

    pub fn num_edges(&self) -> usize {
        self.edges.len()
    }

    pub fn root_tuple(&self) -> TupleRef {
        self.vertices[self.root as usize].tuple
    }

    /// Incoming edge lists, indexed by destination vertex.
    pub fn in_edges(&self) -> Vec<Vec<u32>> {
        let mut inc = vec![Vec::new(); self.vertices.len()];
        for (k, e) in self.edges.iter().enumerate() {
            inc[e.dst as usize].push(k as u32);
        }
        inc
    }

    pub fn is_same_depth(&self, e: &DagEdge) -> bool {
        self.vertices[e.src as usize].depth == self.vertices[e.dst as usize].depth
    }

    /// Line-based dump, one `edge a.b -> c.d rel=<id>` per edge, sorted.
    pub fn to_text(&self) -> String {
        let mut lines: Vec<String> = self
            .edges
            .iter()
            .map(|e| {
                let s = self.vertices[e.src as usize].tuple;
                let d = self.vertices[e.dst as usize].tuple;
                format!("edge {s} -> {d} rel={}", e.relation)
            })
            .collect();
        lines.sort();
        let mut out = String::new();
        for l in lines {
            let _ = writeln!(out, "{l}");
        }
        out
    }
}

pub fn to_dag(g: &UndirectedTupleGraph) -> TargetDag {
    let vertices = g
        .vertices
        .iter()
        .map(|v| DagVertex {
            tuple: v.tuple,
            depth: v.depth,
            marker: None,
        })
        .collect::<Vec<_>>();
    let mut edges: Vec<DagEdge> = g
        .edges
        .iter()
        .map(|e| {
            let (a, b) = (&g.vertices[e.u as usize], &g.vertices[e.v as usize]);
            let u_is_src = a.depth > b.depth || (a.depth == b.depth && a.tuple > b.tuple);
            if u_is_src {
                DagEdge {
                    src: e.u,
                    dst: e.v,
                    relation: e.relation,
                    direction: e.direction,
                }
            } else {
                DagEdge {
                    src: e.v,
                    dst: e.u,
                    relation: e.relation,
                    direction: e.direction.flip(),
                }
            }
        })
        .collect();
    edges.sort_unstable();
    TargetDag {
        root: 0,
        vertices,
        edges,
    }
}

pub fn build_dag(store: &Store, target: TupleRef, cfg: &GraphConfig) -> TargetDag {
    to_dag(&build_undirected(store, target, cfg))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct ValidationReport {
    pub acyclic: bool,
    pub unique_sink_is_root: bool,
    pub edge_direction_rule_holds: bool,
    pub edge_count: usize,
}

impl ValidationReport {
    pub fn all_ok(&self) -> bool {
        self.acyclic && self.unique_sink_is_root && self.edge_direction_rule_holds
    }
}

/// Topological order by Kahn elimination, or `None` on a cycle.
pub(crate) fn topological_order(n: usize, edges: &[DagEdge]) -> Option<Vec<u32>> {
    let mut indeg = vec![0usize; n];
    let mut out = vec![Vec::new(); n];
    for e in edges {
        indeg[e.dst as usize] += 1;
        out[e.src as usize].push(e.dst);
    }
    let mut ready: Vec<u32> = (0..n as u32).filter(|&v| indeg[v as usize] == 0).collect();
    let mut order = Vec::with_capacity(n);
    while let Some(v) = ready.pop() {
        order.push(v);
        for &w in &out[v as usize] {
            indeg[w as usize] -= 1;
            if indeg[w as usize] == 0 {
                ready.push(w);
            }
        }
    }
    (order.len() == n).then_some(order)
}

pub fn validate_dag(dag: &TargetDag) -> ValidationReport {
    let n = dag.vertices.len();
    let in_bounds = dag.edges.iter().all(|e| (e.src as usize) < n && (e.dst as usize) < n);
    if !in_bounds || (dag.root as usize) >= n {
        return ValidationReport {
            acyclic: false,
            unique_sink_is_root: false,
            edge_direction_rule_holds: false,
            edge_count: dag.edges.len(),
        };
    }
    let acyclic = topological_order(n, &dag.edges).is_some();
    let mut outdeg = vec![0usize; n];
    for e in &dag.edges {
        outdeg[e.src as usize] += 1;
    }
    let sinks: Vec<usize> = (0..n).filter(|&v| outdeg[v] == 0).collect();
    let unique_sink_is_root = sinks == [dag.root as usize];
    let edge_direction_rule_holds = dag.edges.iter().all(|e| {
        let (s, d) = (&dag.vertices[e.src as usize], &dag.vertices[e.dst as usize]);
        s.depth > d.depth || (s.depth == d.depth && s.tuple > d.tuple)
    });
    ValidationReport {
        acyclic,
        unique_sink_is_root,
        edge_direction_rule_holds,
        edge_count: dag.edges.len(),
    }
}
