mod common;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use spare::store::Store;
use spare::synth::{generate, Family, SyntheticSpec};
use spare::train::{evaluate, predict_split, train, Checkpoint, MissPolicy, SplitName, TrainConfig};
use spare::{model::ModelKind, Error};

use common::{random_store, StoreShape};

fn signal(n: usize, seed: u64) -> Store {
    generate(&SyntheticSpec::new(Family::RelationalSignal).with_targets(n), seed)
        .unwrap()
        .to_store()
        .unwrap()
}

fn quick(kind: ModelKind, epochs: usize) -> TrainConfig {
    let mut cfg = TrainConfig::default();
    cfg.model.kind = kind;
    cfg.model.hidden = 8;
    cfg.epochs = epochs;
    cfg
}

#[test]
fn checkpoint_round_trip_is_exact() {
    let store = signal(400, 1);
    let dir = tempfile::tempdir().unwrap();
    for kind in [ModelKind::SpareGcn, ModelKind::SpareDeepsets, ModelKind::GnnBaseline, ModelKind::RootOnly] {
        let out = train(&quick(kind, 3), &store).unwrap();
        let path = dir.path().join("ck.json");
        out.checkpoint.save(&path).unwrap();
        let back = Checkpoint::load(&path).unwrap();
        assert_eq!(back.to_json(), out.checkpoint.to_json());
        assert_eq!(back.parameters, out.checkpoint.parameters);
        for (which, want) in [(SplitName::Val, out.report.val), (SplitName::Test, out.report.test)] {
            let r = evaluate(&back, &store, which).unwrap();
            let got = match which {
                SplitName::Val => r.val,
                _ => r.test,
            };
            assert_eq!(got.map(f64::to_bits), want.map(f64::to_bits), "{kind:?} {which:?}");
        }
        let (t1, p1) = predict_split(&back, &store, SplitName::Test).unwrap();
        let (t2, p2) = predict_split(&out.checkpoint, &store, SplitName::Test).unwrap();
        assert_eq!(t1, t2);
        assert_eq!(p1, p2);
    }
}

#[test]
fn loss_falls_over_the_first_epochs() {
    let store = signal(5000, 0);
    let out = train(&quick(ModelKind::SpareGcn, 5), &store).unwrap();
    let c = &out.report.loss_curve;
    assert_eq!(c.len(), 5);
    assert!(c.windows(2).all(|w| w[1] < w[0]), "{c:?}");
}

#[test]
fn evaluating_on_another_schema_fails() {
    let store = signal(200, 2);
    let out = train(&quick(ModelKind::SpareGcn, 1), &store).unwrap();
    let other = generate(&SyntheticSpec::new(Family::SumRegression).with_targets(200), 2)
        .unwrap()
        .to_store()
        .unwrap();
    assert!(matches!(evaluate(&out.checkpoint, &other, SplitName::Test), Err(Error::SchemaMismatch(_))));
}

#[test]
fn single_class_labels_are_reported() {
    let mut data = generate(&SyntheticSpec::new(Family::RelationalSignal).with_targets(200), 3).unwrap();
    for r in data.tables[0].rows.iter_mut() {
        r[5] = "1".into();
    }
    let store = data.to_store().unwrap();
    assert!(matches!(train(&quick(ModelKind::RootOnly, 1), &store), Err(Error::SingleClass)));
}

#[test]
fn constant_regression_target_is_rejected() {
    let mut data = generate(&SyntheticSpec::new(Family::SumRegression).with_targets(100), 3).unwrap();
    for r in data.tables[0].rows.iter_mut() {
        r[4] = "2.5".into();
    }
    let store = data.to_store().unwrap();
    assert!(matches!(train(&quick(ModelKind::SpareGcn, 1), &store), Err(Error::ZeroStd)));
}

#[test]
fn epoch_cap_truncates_every_epoch() {
    let store = signal(600, 4);
    let mut cfg = quick(ModelKind::SpareGcn, 3);
    cfg.max_targets_per_epoch = 50;
    let out = train(&cfg, &store).unwrap();
    assert_eq!(out.report.targets_per_epoch, vec![50; 3]);
    let m = &out.report.train_messages_per_epoch;
    assert!(m.iter().all(|c| c.messages > 0));
}

#[test]
fn regression_report_carries_nrmse_and_baseline() {
    let store = generate(&SyntheticSpec::new(Family::SumRegression).with_targets(500), 5)
        .unwrap()
        .to_store()
        .unwrap();
    let out = train(&quick(ModelKind::SpareGcn, 2), &store).unwrap();
    let r = &out.report;
    assert_eq!(r.metric, "nrmse");
    let cm = r.constant_mean.unwrap();
    assert!((cm.train.unwrap() - 1.0).abs() < 1e-12);
    assert!(r.test.unwrap().is_finite());
    assert_eq!(r.sizes.train + r.sizes.val + r.sizes.test, 500);
}

#[test]
fn strict_policy_fails_only_on_unknown_keys() {
    let mut rng = ChaCha8Rng::seed_from_u64(31);
    let mut strict_errors = 0;
    for _ in 0..60 {
        let store = random_store(
            &mut rng,
            &StoreShape {
                rows: 8..=25,
                ..StoreShape::default()
            },
        );
        let mut cfg = quick(ModelKind::SpareGcn, 1);
        cfg.model.hidden = 4;
        cfg.graph.max_depth = 3;
        if train(&cfg, &store).is_err() {
            continue;
        }
        cfg.miss_policy = MissPolicy::Strict;
        match train(&cfg, &store) {
            Ok(_) => {}
            Err(Error::UnknownEmbeddingKey { .. }) => strict_errors += 1,
            Err(e) => panic!("unexpected {e}"),
        }
    }
    eprintln!("strict policy raised UnknownEmbeddingKey on {strict_errors} stores");
}

#[test]
fn config_rejects_unknown_fields_and_bad_values() {
    assert!(TrainConfig::from_json(r#"{"epochs": 3, "lr": 0.1}"#).is_err());
    assert!(TrainConfig::from_json(r#"{"prune": {"threshold": 1}}"#).is_err());
    assert!(TrainConfig::from_json(r#"{"batch_size": 0}"#).is_err());
    let c = TrainConfig::from_json(r#"{"model": {"kind": "gnn_baseline", "rounds": 3}, "seed": 9}"#).unwrap();
    assert_eq!((c.model.kind, c.model.rounds, c.seed), (ModelKind::GnnBaseline, 3, 9));
}

#[test]
fn shipped_configs_parse() {
    let dir = concat!(env!("CARGO_MANIFEST_DIR"), "/../../configs");
    let mut n = 0;
    for e in std::fs::read_dir(dir).unwrap() {
        let p = e.unwrap().path();
        if p.extension().is_some_and(|x| x == "json") {
            TrainConfig::load(&p).unwrap_or_else(|err| panic!("{}: {err}", p.display()));
            n += 1;
        }
    }
    assert!(n >= 5);
    assert_eq!(TrainConfig::load(format!("{dir}/default.json")).unwrap(), TrainConfig::default());
}
