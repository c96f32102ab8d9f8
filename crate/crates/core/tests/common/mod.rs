//! Random stores and DAGs shared by the integration tests.
#![allow(dead_code)]

use rand::Rng;
use serde_json::json;

use spare::graph::{DagEdge, DagVertex, TargetDag};
use spare::store::{Direction, IngestOptions, Schema, Store, TupleRef};

pub struct StoreShape {
    pub tables: std::ops::RangeInclusive<usize>,
    pub relations: std::ops::RangeInclusive<usize>,
    pub rows: std::ops::RangeInclusive<usize>,
    pub classification: bool,
}

impl Default for StoreShape {
    fn default() -> Self {
        StoreShape {
            tables: 1..=5,
            relations: 0..=6,
            rows: 1..=20,
            classification: false,
        }
    }
}

/// Random schema and data. Relations pick both ends at random, so
/// self-references and cycles between tables are common.
pub fn random_store(rng: &mut impl Rng, shape: &StoreShape) -> Store {
    let nt = rng.random_range(shape.tables.clone());
    let nr = rng.random_range(shape.relations.clone());
    let rels: Vec<(usize, usize)> = (0..nr)
        .map(|_| (rng.random_range(0..nt), rng.random_range(0..nt)))
        .collect();
    let rows: Vec<usize> = (0..nt).map(|_| rng.random_range(shape.rows.clone())).collect();

    let mut tables = Vec::new();
    let mut records = Vec::new();
    for t in 0..nt {
        let mut cols = vec![json!({"name": "id", "kind": "categorical"})];
        let fks: Vec<usize> = (0..nr).filter(|&r| rels[r].0 == t).collect();
        for &r in &fks {
            cols.push(json!({"name": format!("fk{r}"), "kind": "categorical"}));
        }
        cols.push(json!({"name": "v", "kind": "numeric"}));
        cols.push(json!({"name": "c", "kind": "categorical"}));
        if t == 0 {
            cols.push(json!({"name": "y", "kind": "numeric"}));
        }
        tables.push(json!({
            "name": format!("t{t}"), "file": format!("t{t}.csv"),
            "primary_key": "id", "columns": cols
        }));
        let mut recs = Vec::new();
        for i in 0..rows[t] {
            let mut rec = vec![format!("r{i}")];
            for &r in &fks {
                let to = rels[r].1;
                rec.push(if rng.random_bool(0.8) {
                    format!("r{}", rng.random_range(0..rows[to]))
                } else {
                    String::new()
                });
            }
            rec.push(if rng.random_bool(0.9) {
                format!("{}", rng.random_range(-5.0..5.0))
            } else {
                String::new()
            });
            rec.push(["x", "y", "z"][rng.random_range(0..3)].to_string());
            if t == 0 {
                let y = if shape.classification {
                    format!("{}", (i % 2) as u8)
                } else {
                    format!("{}", rng.random_range(-3.0..3.0))
                };
                rec.push(y);
            }
            recs.push(rec);
        }
        records.push(recs);
    }
    let relations: Vec<_> = rels
        .iter()
        .enumerate()
        .map(|(r, &(f, t))| {
            json!({"from_table": format!("t{f}"), "from_column": format!("fk{r}"),
                   "to_table": format!("t{t}"), "to_column": "id"})
        })
        .collect();
    let task = if shape.classification { "binary_classification" } else { "regression" };
    let doc = json!({
        "tables": tables, "relations": relations,
        "target": {"table": "t0", "column": "y", "task": task}
    });
    let schema = Schema::from_json(&doc.to_string()).expect("random schema is valid");
    Store::from_records(schema, records, IngestOptions::default()).expect("random store ingests")
}

/// Random DAG over `n` vertices where every vertex reaches the root.
/// Vertex storage order is shuffled.
pub fn random_dag(rng: &mut impl Rng, n: usize, extra_edge_p: f64) -> TargetDag {
    use rand::seq::SliceRandom;
    let mut perm: Vec<u32> = (0..n as u32).collect();
    perm.shuffle(rng);
    let mut edges = Vec::new();
    for v in 1..n {
        let first = rng.random_range(0..v);
        for u in 0..v {
            if u == first || rng.random_bool(extra_edge_p) {
                edges.push(DagEdge {
                    src: perm[v],
                    dst: perm[u],
                    relation: rng.random_range(0..3),
                    direction: if rng.random_bool(0.5) { Direction::Forward } else { Direction::Reverse },
                });
            }
        }
    }
    edges.shuffle(rng);
    let mut vertices = vec![
        DagVertex {
            tuple: TupleRef::new(0, 0),
            depth: 0,
            marker: None
        };
        n
    ];
    for (i, &p) in perm.iter().enumerate() {
        vertices[p as usize] = DagVertex {
            tuple: TupleRef::new(i % 3, i),
            depth: i.min(1) as u32,
            marker: None,
        };
    }
    TargetDag {
        root: perm[0],
        vertices,
        edges,
    }
}

/// Longest path (in edges) ending at the root, by enumerating every path.
pub fn brute_longest_path(dag: &TargetDag) -> usize {
    fn longest_from(dag: &TargetDag, v: u32) -> usize {
        dag.edges
            .iter()
            .filter(|e| e.src == v)
            .map(|e| 1 + longest_from(dag, e.dst))
            .max()
            .unwrap_or(0)
    }
    (0..dag.vertices.len() as u32).map(|v| longest_from(dag, v)).max().unwrap_or(0)
}

/// End-to-end finite-difference check of one small random model: random
/// store, random widths, loss over a handful of training targets.
pub fn model_grad_check(
    kind: spare::model::ModelKind,
    seed: u64,
) -> spare::Result<(spare::autodiff::GradCheck, String)> {
    use rand::SeedableRng;
    use spare::autodiff::{grad_check, Tape};
    use spare::model::MessageCounter;
    use spare::train::{prepare, Runner, TrainConfig};

    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
    let shape = StoreShape {
        tables: 2..=3,
        relations: 1..=4,
        rows: 4..=10,
        classification: rng.random_bool(0.5),
    };
    let store = random_store(&mut rng, &shape);
    let mut cfg = TrainConfig::default();
    cfg.seed = seed;
    cfg.model.kind = kind;
    cfg.model.hidden = rng.random_range(2..=8);
    cfg.model.cat_dim = rng.random_range(1..=3);
    cfg.model.rel_dim = rng.random_range(1..=3);
    cfg.model.encoder_layers = rng.random_range(1..=2);
    cfg.model.head_layers = rng.random_range(1..=2);
    cfg.model.rounds = rng.random_range(1..=2);
    cfg.graph.max_depth = rng.random_range(1..=3);
    cfg.prune.threshold = Some(2);
    cfg.split.train = 0.8;
    cfg.split.val = 0.1;
    cfg.split.test = 0.1;
    let prepared = prepare(&store, &cfg)?;
    let runner = Runner::new(&cfg, &store, &prepared)?;
    let rows: Vec<usize> = (0..prepared.train.len().min(5)).collect();
    // Zero-initialized biases put relu inputs exactly on the kink whenever a
    // state row is all zeros; check at a random point instead.
    let mut ps = runner.params.clone();
    for p in ps.iter_mut() {
        for v in p.value.data_mut() {
            *v += rng.random_range(-0.1..0.1);
        }
    }
    let check = grad_check(&mut ps, 1e-6, |tape: &mut Tape, p| {
        let mut c = MessageCounter::default();
        let out = runner.forward_with(p, tape, &prepared.train, &rows, &prepared.features, &mut c)?;
        runner.loss(tape, out, &prepared.train, &rows)
    })?;
    let desc = format!(
        "tables={} relations={} task={:?} hidden={} depth={} registry={} scalars={}",
        store.num_tables(),
        store.num_relations(),
        store.schema.target.task,
        cfg.model.hidden,
        cfg.graph.max_depth,
        prepared.registry_keys.len(),
        check.checked
    );
    Ok((check, desc))
}
