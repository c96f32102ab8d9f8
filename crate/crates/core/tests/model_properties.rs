mod common;

use std::collections::BTreeSet;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use spare::autodiff::{ParameterSet, Tape};
use spare::fixtures::fig1_graph;
use spare::graph::{build_dag, build_undirected, GraphConfig, TargetDag};
use spare::model::{FeatureTable, MessageCounter, Model, ModelConfig, ModelKind};
use spare::prune::PruneConfig;
use spare::schedule::build_schedule;
use spare::store::{compute_feature_stats, IngestOptions, Schema, Store, TupleRef};
use spare::synth::{generate, Family, SyntheticSpec};
use spare::train::{prepare, Inputs, Prepared, Runner, TrainConfig};

use common::{random_store, StoreShape};

fn small_cfg(kind: ModelKind) -> TrainConfig {
    let mut cfg = TrainConfig::default();
    cfg.model.kind = kind;
    cfg.model.hidden = 6;
    cfg.model.cat_dim = 3;
    cfg.model.rel_dim = 3;
    cfg
}

fn outputs(runner: &Runner, prepared: &Prepared, rows: &[usize], features: &FeatureTable) -> (Vec<f64>, MessageCounter) {
    let mut tape = Tape::new();
    let mut c = MessageCounter::default();
    let out = runner.forward(&mut tape, &prepared.train, rows, features, &mut c).unwrap();
    (tape.value(out).data().to_vec(), c)
}

#[test]
fn message_counters_are_exact() {
    let mut rng = ChaCha8Rng::seed_from_u64(21);
    for _ in 0..40 {
        let store = random_store(&mut rng, &StoreShape { rows: 6..=15, ..StoreShape::default() });
        for kind in [ModelKind::SpareGcn, ModelKind::SpareDeepsets, ModelKind::GnnBaseline] {
            let mut cfg = small_cfg(kind);
            cfg.model.rounds = rng.random_range(1..=3);
            cfg.prune = if rng.random_bool(0.5) { PruneConfig::off() } else { PruneConfig::default() };
            let Ok(p) = prepare(&store, &cfg) else { continue };
            let r = Runner::new(&cfg, &store, &p).unwrap();
            let rows: Vec<usize> = (0..p.train.len()).collect();
            let (_, c) = outputs(&r, &p, &rows, &p.features);
            match &p.train.inputs {
                Inputs::Dags(d) => {
                    assert_eq!(c.messages, d.iter().map(|g| g.num_edges() as u64).sum::<u64>());
                    assert_eq!(c.state_updates, d.iter().map(|g| g.num_vertices() as u64).sum::<u64>());
                }
                Inputs::Graphs(g) => {
                    let t = cfg.model.rounds as u64;
                    assert_eq!(c.messages, 2 * t * g.iter().map(|g| g.num_edges() as u64).sum::<u64>());
                    assert_eq!(c.state_updates, t * g.iter().map(|g| g.num_vertices() as u64).sum::<u64>());
                }
                Inputs::Roots => unreachable!(),
            }
        }
    }
}

#[test]
fn fig1_target_dag_costs_eight_messages() {
    let (store, f) = fig1_graph();
    let dag = build_dag(&store, f.f1, &GraphConfig::default());
    assert_eq!((dag.num_vertices(), dag.num_edges()), (7, 8));
    let stats = compute_feature_stats(&store, &store.targets());
    let features = FeatureTable::build(&store, &stats);
    let mut ps = ParameterSet::new();
    let mut rng = ChaCha8Rng::seed_from_u64(0);
    let cfg = ModelConfig {
        hidden: 4,
        ..ModelConfig::default()
    };
    let Model::Spare(m) = Model::new(&cfg, &mut ps, &stats, store.num_relations(), vec![], &mut rng).unwrap() else {
        panic!("expected a single-pass model")
    };
    let s = build_schedule([&dag]).unwrap();
    let mut c = MessageCounter::default();
    let mut tape = Tape::new();
    m.forward(&mut tape, &ps, &s, &features, &mut c).unwrap();
    assert_eq!(c.messages, 8);
    assert_eq!(c.state_updates, 7);
}

#[test]
fn pruned_slot_reads_its_registry_row() {
    let data = generate(&SyntheticSpec::new(Family::RelationalSignal).with_targets(300), 2).unwrap();
    let store = data.to_store().unwrap();
    let cfg = small_cfg(ModelKind::SpareGcn);
    let p = prepare(&store, &cfg).unwrap();
    assert!(!p.registry_keys.is_empty());
    let r = Runner::new(&cfg, &store, &p).unwrap();
    let Model::Spare(m) = &r.model else { panic!() };
    let Inputs::Dags(dags) = &p.train.inputs else { panic!() };
    let batch: Vec<&TargetDag> = dags.iter().take(20).collect();
    let s = build_schedule(batch.iter().copied()).unwrap();
    let mut tape = Tape::new();
    let h0 = m.encode_nodes(&mut tape, &r.params, &s, &p.features).unwrap();
    let reg = r.params.value(m.registry.param.unwrap());
    let mut seen = 0;
    for (i, slot) in s.slots.iter().enumerate() {
        let Some(k) = slot.embedding else { continue };
        let (l, pos) = s.locate(i as u32);
        let row = m.registry.row(&k).unwrap() as usize;
        assert_eq!(tape.value(h0[l]).row_slice(pos), reg.row_slice(row));
        seen += 1;
    }
    assert!(seen > 0);
}

/// Two items pointing at two parents with identical attributes and
/// mirrored neighborhoods.
fn twin_store() -> Store {
    let schema = Schema::from_json(
        r#"{
      "tables": [
        { "name": "items", "file": "items.csv", "primary_key": "id",
          "columns": [ { "name": "id", "kind": "categorical" }, { "name": "pid", "kind": "categorical" },
                       { "name": "x", "kind": "numeric" }, { "name": "c", "kind": "categorical" },
                       { "name": "y", "kind": "numeric" } ] },
        { "name": "parents", "file": "parents.csv", "primary_key": "id",
          "columns": [ { "name": "id", "kind": "categorical" }, { "name": "w", "kind": "numeric" } ] }
      ],
      "relations": [ { "from_table": "items", "from_column": "pid", "to_table": "parents", "to_column": "id" } ],
      "target": { "table": "items", "column": "y", "task": "regression" }
    }"#,
    )
    .unwrap();
    let s = |v: &[&str]| v.iter().map(|x| x.to_string()).collect::<Vec<_>>();
    let items = vec![
        s(&["i0", "p0", "1.5", "a", "1"]),
        s(&["i1", "p1", "1.5", "a", "2"]),
        s(&["i2", "p0", "-0.5", "b", "3"]),
        s(&["i3", "p1", "-0.5", "b", "4"]),
        s(&["i4", "p0", "", "a", "5"]),
        s(&["i5", "p1", "", "a", "6"]),
    ];
    let parents = vec![s(&["p0", "7"]), s(&["p1", "7"])];
    Store::from_records(schema, vec![items, parents], IngestOptions::default()).unwrap()
}

#[test]
fn isomorphic_targets_predict_identically() {
    let store = twin_store();
    for kind in [ModelKind::SpareGcn, ModelKind::SpareDeepsets, ModelKind::GnnBaseline, ModelKind::RootOnly] {
        let mut cfg = small_cfg(kind);
        cfg.prune = PruneConfig::off();
        cfg.split.train = 1.0;
        cfg.split.val = 0.0;
        cfg.split.test = 0.0;
        let p = prepare(&store, &cfg).unwrap();
        let r = Runner::new(&cfg, &store, &p).unwrap();
        let rows: Vec<usize> = (0..p.train.len()).collect();
        let (out, _) = outputs(&r, &p, &rows, &p.features);
        let pos = |name: &str| {
            let row = store.tables[0].primary_keys.iter().position(|k| k == name).unwrap();
            p.train.targets.iter().position(|t| t.row as usize == row).unwrap()
        };
        for (a, b) in [("i0", "i1"), ("i2", "i3"), ("i4", "i5")] {
            assert_eq!(out[pos(a)].to_bits(), out[pos(b)].to_bits(), "{kind:?} {a} vs {b}");
        }
        // i0 and i2 share one tuple graph, so the mean readout of the
        // baseline cannot tell them apart
        if kind != ModelKind::GnnBaseline {
            assert_ne!(out[pos("i0")], out[pos("i2")], "{kind:?} ignores its input");
        }
    }
}

#[test]
fn batch_composition_does_not_change_outputs() {
    let data = generate(&SyntheticSpec::new(Family::RelationalSignal).with_targets(200), 4).unwrap();
    let store = data.to_store().unwrap();
    for kind in [ModelKind::SpareGcn, ModelKind::SpareDeepsets, ModelKind::GnnBaseline, ModelKind::RootOnly] {
        let cfg = small_cfg(kind);
        let p = prepare(&store, &cfg).unwrap();
        let r = Runner::new(&cfg, &store, &p).unwrap();
        let all: Vec<usize> = (0..p.train.len()).collect();
        let (full, _) = outputs(&r, &p, &all, &p.features);
        let mut rng = ChaCha8Rng::seed_from_u64(8);
        for _ in 0..10 {
            let mut rows: Vec<usize> = rand::seq::index::sample(&mut rng, all.len(), 7).into_vec();
            rows.push(rows[0]);
            let (part, _) = outputs(&r, &p, &rows, &p.features);
            for (k, &i) in rows.iter().enumerate() {
                assert_eq!(part[k].to_bits(), full[i].to_bits(), "{kind:?} row {i}");
            }
        }
    }
}

#[test]
fn row_order_of_the_store_does_not_matter() {
    // shuffle every table's rows; the prediction for each named target
    // must agree up to float reassociation
    let data = generate(&SyntheticSpec::new(Family::SumRegression).with_targets(120), 5).unwrap();
    let store = data.to_store().unwrap();
    let mut shuffled = data.tables.iter().map(|t| t.rows.clone()).collect::<Vec<_>>();
    let mut rng = ChaCha8Rng::seed_from_u64(9);
    for t in shuffled.iter_mut() {
        use rand::seq::SliceRandom;
        t.shuffle(&mut rng);
    }
    let other = Store::from_records(data.schema().unwrap(), shuffled, IngestOptions::default()).unwrap();
    for kind in [ModelKind::SpareGcn, ModelKind::SpareDeepsets, ModelKind::GnnBaseline] {
        let mut cfg = small_cfg(kind);
        cfg.prune = PruneConfig::off();
        cfg.split.train = 1.0;
        cfg.split.val = 0.0;
        cfg.split.test = 0.0;
        let run = |s: &Store| {
            let p = prepare(s, &cfg).unwrap();
            let r = Runner::new(&cfg, s, &p).unwrap();
            let rows: Vec<usize> = (0..p.train.len()).collect();
            let (out, _) = outputs(&r, &p, &rows, &p.features);
            let mut named: Vec<(String, f64)> = p
                .train
                .targets
                .iter()
                .zip(out)
                .map(|(t, o)| (s.tables[0].primary_keys[t.row as usize].clone(), o))
                .collect();
            named.sort_by(|a, b| a.0.cmp(&b.0));
            named
        };
        let (a, b) = (run(&store), run(&other));
        assert_eq!(a.len(), b.len());
        for ((ka, va), (kb, vb)) in a.iter().zip(&b) {
            assert_eq!(ka, kb);
            assert!((va - vb).abs() <= 1e-9 * (1.0 + va.abs()), "{kind:?} {ka}: {va} vs {vb}");
        }
    }
}

#[test]
fn outputs_depend_only_on_the_neighborhood() {
    let data = generate(&SyntheticSpec::new(Family::RelationalSignal).with_targets(300), 6).unwrap();
    let store = data.to_store().unwrap();
    for kind in [ModelKind::SpareGcn, ModelKind::SpareDeepsets, ModelKind::GnnBaseline] {
        let mut cfg = small_cfg(kind);
        cfg.prune = PruneConfig::off();
        let p = prepare(&store, &cfg).unwrap();
        let r = Runner::new(&cfg, &store, &p).unwrap();
        for row in [0usize, 5, 17] {
            let target = p.train.targets[row];
            let near: BTreeSet<TupleRef> = build_undirected(&store, target, &cfg.graph).vertices.iter().map(|v| v.tuple).collect();
            let (base, _) = outputs(&r, &p, &[row], &p.features);

            let mut far = p.features.clone();
            for (ti, rows) in far.tables.iter_mut().enumerate() {
                for (ri, fv) in rows.iter_mut().enumerate() {
                    if !near.contains(&TupleRef::new(ti, ri)) {
                        fv.numeric.iter_mut().for_each(|n| n.0 += 3.0);
                        fv.categorical.iter_mut().for_each(|c| *c = 0);
                    }
                }
            }
            let (moved, _) = outputs(&r, &p, &[row], &far);
            assert_eq!(base[0].to_bits(), moved[0].to_bits(), "{kind:?}: far tuples leaked in");

            let mut close = p.features.clone();
            let sib = *near.iter().find(|t| t.table == 0 && **t != target).unwrap();
            close.tables[0][sib.row as usize].numeric[0].0 += 3.0;
            let (moved, _) = outputs(&r, &p, &[row], &close);
            assert_ne!(base[0], moved[0], "{kind:?}: a depth-2 sibling has no effect");
        }
    }
}
