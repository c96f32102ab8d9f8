mod common;

use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use spare::graph::{build_dag, GraphConfig, TargetDag};
use spare::schedule::{build_schedule, height_rank, sequential_depth};
use spare::store::Direction;

use common::{brute_longest_path, random_dag, random_store, StoreShape};

type Link = (u32, u32, u32, u32, Direction);

fn dag_edges(d: u32, dag: &TargetDag) -> Vec<Link> {
    dag.edges.iter().map(|e| (d, e.src, e.dst, e.relation, e.direction)).collect()
}

fn replayed(dags: &[TargetDag]) -> Vec<Link> {
    let s = build_schedule(dags).unwrap();
    let mut out = Vec::new();
    let mut done = vec![false; s.num_slots()];
    let mut next = 0u32;
    s.replay(|slot, children, labels| {
        let me = next;
        next += 1;
        for (&c, l) in children.iter().zip(labels) {
            assert!(done[c as usize], "child slot {c} not computed before {me}");
            let cs = &s.slots[c as usize];
            assert_eq!(cs.dag, slot.dag);
            let dag = &dags[slot.dag as usize];
            let same = dag.vertices[cs.vertex as usize].depth == dag.vertices[slot.vertex as usize].depth;
            assert_eq!(l.same_depth, same);
            out.push((slot.dag, cs.vertex, slot.vertex, l.relation, l.direction));
        }
        done[me as usize] = true;
    });
    assert!(done.iter().all(|&d| d));
    out
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(300))]

    #[test]
    fn depth_and_replay_on_random_batches(seed in any::<u64>(), k in 1usize..5) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let dags: Vec<TargetDag> =
            (0..k).map(|_| { let n = rng.random_range(1..12); random_dag(&mut rng, n, 0.3) }).collect();
        let s = build_schedule(&dags).unwrap();
        let want_depth = dags.iter().map(brute_longest_path).max().unwrap() + 1;
        prop_assert_eq!(sequential_depth(&s), want_depth);
        prop_assert_eq!(s.num_slots(), dags.iter().map(|d| d.vertices.len()).sum::<usize>());
        prop_assert_eq!(s.num_edges, dags.iter().map(|d| d.edges.len()).sum::<usize>());
        for (d, dag) in dags.iter().enumerate() {
            let root = &s.slots[s.roots[d] as usize];
            prop_assert_eq!((root.dag, root.vertex), (d as u32, dag.root));
        }
        let mut want: Vec<Link> = dags.iter().enumerate().flat_map(|(d, g)| dag_edges(d as u32, g)).collect();
        let mut got = replayed(&dags);
        want.sort();
        got.sort();
        prop_assert_eq!(got, want);
    }
}

#[test]
fn heights_are_longest_incoming_paths() {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    for _ in 0..200 {
        let n = rng.random_range(1..10);
        let dag = random_dag(&mut rng, n, 0.4);
        let h = height_rank(&dag).unwrap();
        for (v, &hv) in h.iter().enumerate() {
            // brute force: longest path ending at v
            fn into(dag: &TargetDag, v: u32) -> u32 {
                dag.edges.iter().filter(|e| e.dst == v).map(|e| 1 + into(dag, e.src)).max().unwrap_or(0)
            }
            assert_eq!(hv, into(&dag, v as u32));
        }
    }
}

#[test]
fn store_dags_schedule_exactly() {
    let mut rng = ChaCha8Rng::seed_from_u64(6);
    for _ in 0..100 {
        let store = random_store(&mut rng, &StoreShape::default());
        let cfg = GraphConfig {
            max_depth: rng.random_range(1..=3),
            ..GraphConfig::default()
        };
        let dags: Vec<TargetDag> = store.targets().into_iter().take(6).map(|t| build_dag(&store, t, &cfg)).collect();
        let s = build_schedule(&dags).unwrap();
        let want = dags.iter().map(brute_longest_path).max().unwrap() + 1;
        assert_eq!(sequential_depth(&s), want);
        let mut w: Vec<Link> = dags.iter().enumerate().flat_map(|(d, g)| dag_edges(d as u32, g)).collect();
        let mut g = replayed(&dags);
        w.sort();
        g.sort();
        assert_eq!(g, w);
    }
}

#[test]
fn cycle_is_rejected() {
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let mut dag = random_dag(&mut rng, 3, 1.0);
    let e = dag.edges[0];
    dag.edges.push(spare::graph::DagEdge {
        src: e.dst,
        dst: e.src,
        ..e
    });
    assert!(matches!(build_schedule([&dag]), Err(spare::Error::CycleDetected)));
}
