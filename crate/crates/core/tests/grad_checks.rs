mod common;

use proptest::prelude::*;

use spare::autodiff::{ParameterSet, Tape, Tensor};
use spare::model::ModelKind;

fn check_kind(kind: ModelKind) {
    for seed in 0..12 {
        let (c, desc) = common::model_grad_check(kind, 100 + seed).unwrap();
        eprintln!("{kind:?} seed {seed}: {desc} max_rel_err={:.2e}", c.max_rel_error);
        assert!(c.checked > 0);
        assert!(c.max_rel_error < 1e-4, "{kind:?} seed {seed} ({desc}): {:?} {}", c.worst, c.max_rel_error);
    }
}

#[test]
fn spare_gcn_gradients() {
    check_kind(ModelKind::SpareGcn);
}

#[test]
fn spare_deepsets_gradients() {
    check_kind(ModelKind::SpareDeepsets);
}

#[test]
fn gnn_baseline_gradients() {
    check_kind(ModelKind::GnnBaseline);
}

#[test]
fn root_only_gradients() {
    check_kind(ModelKind::RootOnly);
}

proptest! {
    #[test]
    fn segment_sum_is_linear(
        rows in prop::collection::vec(prop::collection::vec(-5.0f64..5.0, 3), 1..10),
        other in prop::collection::vec(prop::collection::vec(-5.0f64..5.0, 3), 10),
        cuts in prop::collection::vec(0u32..10, 0..4),
        a in -3.0f64..3.0,
        b in -3.0f64..3.0,
    ) {
        let n = rows.len() as u32;
        let mut offsets: Vec<u32> = cuts.into_iter().map(|c| c.min(n)).collect();
        offsets.push(0);
        offsets.push(n);
        offsets.sort_unstable();
        let x = Tensor::from_rows(&rows).unwrap();
        let y = Tensor::from_rows(&other[..rows.len()]).unwrap();

        let mut t = Tape::new();
        let (xv, yv) = (t.constant(x), t.constant(y));
        let (sx, sy) = (t.scale(xv, a), t.scale(yv, b));
        let lin = t.add(sx, sy).unwrap();
        let lhs = t.segment_sum(lin, &offsets).unwrap();
        let gx = t.segment_sum(xv, &offsets).unwrap();
        let gy = t.segment_sum(yv, &offsets).unwrap();
        let (gx, gy) = (t.scale(gx, a), t.scale(gy, b));
        let rhs = t.add(gx, gy).unwrap();
        for (l, r) in t.value(lhs).data().iter().zip(t.value(rhs).data()) {
            prop_assert!((l - r).abs() <= 1e-9 * (1.0 + l.abs()));
        }
        prop_assert_eq!(t.value(lhs).shape(), (offsets.len() - 1, 3));
    }
}

#[test]
fn backward_is_deterministic() {
    use rand::SeedableRng;
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(3);
    let mut ps = ParameterSet::new();
    let w = ps.add_weight("w", 4, 3, &mut rng).unwrap();
    let run = |ps: &mut ParameterSet| -> Vec<f64> {
        let mut t = Tape::new();
        let x = t.constant(Tensor::from_rows(&[vec![1.0, -2.0, 0.5, 3.0], vec![0.1, 0.2, -0.3, 0.4]]).unwrap());
        let wv = t.param(ps, w);
        let h = t.matmul(x, wv).unwrap();
        let h = t.relu(h);
        let g = t.gather(&[h], vec![(0, 1), (0, 0), (0, 1)]).unwrap();
        let s = t.segment_mean(g, &[0, 2, 3]).unwrap();
        let l = t.sum(s);
        ps.zero_grads();
        t.backward(l, ps).unwrap();
        ps.grad(w).data().to_vec()
    };
    let a = run(&mut ps);
    let b = run(&mut ps);
    assert_eq!(a, b);
    assert!(a.iter().any(|&g| g != 0.0));
}
