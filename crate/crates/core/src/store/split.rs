use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::{Store, TupleRef};
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SplitRatios {
    pub train: f64,
    pub val: f64,
    pub test: f64,
}

impl Default for SplitRatios {
    fn default() -> Self {
        SplitRatios {
            train: 0.65,
            val: 0.15,
            test: 0.20,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Split {
    pub train: Vec<TupleRef>,
    pub val: Vec<TupleRef>,
    pub test: Vec<TupleRef>,
}

/// Seeded shuffle of all labelled targets. Validation and test sizes are
/// floored; the remainder goes to training. Each part is returned sorted.
pub fn split_targets(store: &Store, ratios: SplitRatios, seed: u64) -> Result<Split> {
    let SplitRatios { train, val, test } = ratios;
    let ok = [train, val, test].iter().all(|r| r.is_finite() && *r >= 0.0)
        && ((train + val + test) - 1.0).abs() <= 1e-9;
    if !ok {
        return Err(Error::BadRatios((train, val, test)));
    }
    let mut targets = store.targets();
    let n = targets.len();
    if n == 0 {
        return Err(Error::Config("target table has no labelled rows".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    targets.shuffle(&mut rng);

    let n_val = (n as f64 * val + 1e-9).floor() as usize;
    let n_test = (n as f64 * test + 1e-9).floor() as usize;
    let n_train = n - n_val - n_test;

    let mut test_part = targets.split_off(n_train + n_val);
    let mut val_part = targets.split_off(n_train);
    let mut train_part = targets;
    train_part.sort();
    val_part.sort();
    test_part.sort();
    Ok(Split {
        train: train_part,
        val: val_part,
        test: test_part,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::store::{IngestOptions, Schema};
    use std::collections::BTreeSet;

    fn store(n: usize) -> Store {
        let schema = Schema::from_json(
            r#"{
            "tables": [{ "name": "t", "file": "t.csv", "primary_key": "id",
                         "columns": [{"name": "id", "kind": "categorical"},
                                     {"name": "y", "kind": "numeric"}] }],
            "target": { "table": "t", "column": "y", "task": "regression" }
        }"#,
        )
        .unwrap();
        let recs = (0..n).map(|i| vec![format!("r{i}"), format!("{i}")]).collect();
        Store::from_records(schema, vec![recs], IngestOptions::default()).unwrap()
    }

    #[test]
    fn sizes_65_15_20() {
        let s = store(100);
        let sp = split_targets(&s, SplitRatios::default(), 7).unwrap();
        assert_eq!((sp.train.len(), sp.val.len(), sp.test.len()), (65, 15, 20));
    }

    #[test]
    fn seeded_and_partitioning() {
        let s = store(97);
        let a = split_targets(&s, SplitRatios::default(), 3).unwrap();
        let b = split_targets(&s, SplitRatios::default(), 3).unwrap();
        assert_eq!(a, b);
        let all: BTreeSet<_> = a.train.iter().chain(&a.val).chain(&a.test).copied().collect();
        assert_eq!(all.len(), 97);
        assert_eq!(a.val.len(), 14);
        assert_eq!(a.test.len(), 19);
        assert_eq!(a.train.len(), 64);
    }

    #[test]
    fn ratios_must_sum_to_one() {
        let s = store(10);
        let bad = SplitRatios {
            train: 0.5,
            val: 0.5,
            test: 0.5,
        };
        assert!(matches!(split_targets(&s, bad, 0), Err(Error::BadRatios(_))));
    }
}
