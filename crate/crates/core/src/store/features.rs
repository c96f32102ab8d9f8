//! Per-tuple feature vectors: standardized numerics with missing
//! indicators, and categorical vocabulary indices (0 = unknown/missing).

use serde::{Deserialize, Serialize};

use super::{Column, ColumnKind, Store, TupleRef};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NumericStats {
    pub mean: f64,
    pub std: f64,
}

impl NumericStats {
    /// Population statistics over the present values; all-missing gives 0/0.
    pub fn from_values(values: impl Iterator<Item = f64>) -> Self {
        let mut n = 0usize;
        let mut sum = 0.0;
        let mut xs = Vec::new();
        for v in values {
            n += 1;
            sum += v;
            xs.push(v);
        }
        if n == 0 {
            return NumericStats { mean: 0.0, std: 0.0 };
        }
        let mean = sum / n as f64;
        let var = xs.iter().map(|x| (x - mean) * (x - mean)).sum::<f64>() / n as f64;
        NumericStats { mean, std: var.sqrt() }
    }

    pub fn standardize(&self, v: f64) -> f64 {
        if self.std > 0.0 {
            (v - self.mean) / self.std
        } else {
            0.0
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NumericFeature {
    pub column: usize,
    pub name: String,
    pub stats: NumericStats,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CategoricalFeature {
    pub column: usize,
    pub name: String,
    /// Sorted known values; value `vocab[i]` encodes to index `i + 1`.
    pub vocab: Vec<String>,
}

impl CategoricalFeature {
    /// Vocabulary size including the reserved unknown slot.
    pub fn cardinality(&self) -> usize {
        self.vocab.len() + 1
    }

    pub fn index_of(&self, value: Option<&str>) -> u32 {
        match value {
            Some(v) => self
                .vocab
                .binary_search_by(|x| x.as_str().cmp(v))
                .map(|i| i as u32 + 1)
                .unwrap_or(0),
            None => 0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TableStats {
    pub table: String,
    pub numeric: Vec<NumericFeature>,
    pub categorical: Vec<CategoricalFeature>,
}

impl TableStats {
    /// Width of the dense numeric block: value and missing flag per column.
    pub fn numeric_width(&self) -> usize {
        2 * self.numeric.len()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FeatureStats {
    pub tables: Vec<TableStats>,
    /// Position of the target column within the target table's numeric block.
    pub target_slot: Option<usize>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct FeatureVector {
    /// `(standardized value, missing indicator)` per numeric column.
    pub numeric: Vec<(f64, f64)>,
    pub categorical: Vec<u32>,
}

impl FeatureVector {
    pub fn dense(&self) -> impl Iterator<Item = f64> + '_ {
        self.numeric.iter().flat_map(|&(v, m)| [v, m])
    }
}

/// Feature statistics over every row of every table. Only the target
/// column draws on the training targets alone, so held-out labels never
/// shape the encoding.
pub fn compute_feature_stats(store: &Store, train_targets: &[TupleRef]) -> FeatureStats {
    assert!(!train_targets.is_empty(), "feature statistics need a non-empty training split");
    let schema = &store.schema;
    let target_table = schema.target_table();
    let target_column = schema.target_column();
    let mut target_slot = None;

    let tables = schema
        .tables
        .iter()
        .enumerate()
        .map(|(ti, def)| {
            let data = &store.tables[ti];
            let mut numeric = Vec::new();
            let mut categorical = Vec::new();
            for (ci, c) in def.columns.iter().enumerate() {
                if schema.is_key_column(ti, &c.name) {
                    continue;
                }
                match (&data.columns[ci], c.kind) {
                    (Column::Numeric(values), ColumnKind::Numeric) => {
                        let stats = if ti == target_table && ci == target_column {
                            target_slot = Some(numeric.len());
                            NumericStats::from_values(
                                train_targets.iter().filter_map(|t| values[t.row as usize]),
                            )
                        } else {
                            NumericStats::from_values(values.iter().flatten().copied())
                        };
                        numeric.push(NumericFeature {
                            column: ci,
                            name: c.name.clone(),
                            stats,
                        });
                    }
                    (Column::Categorical { dictionary, .. }, ColumnKind::Categorical) => {
                        categorical.push(CategoricalFeature {
                            column: ci,
                            name: c.name.clone(),
                            vocab: dictionary.clone(),
                        });
                    }
                    _ => unreachable!("column storage follows declared kind"),
                }
            }
            TableStats {
                table: def.name.clone(),
                numeric,
                categorical,
            }
        })
        .collect();

    FeatureStats { tables, target_slot }
}

/// Encode one tuple. With `mask_target`, a tuple of the target table has
/// its target column encoded as missing.
pub fn encode_features(store: &Store, stats: &FeatureStats, t: TupleRef, mask_target: bool) -> FeatureVector {
    let ti = t.table as usize;
    let row = t.row as usize;
    let ts = &stats.tables[ti];
    let data = &store.tables[ti];
    let masked_slot = if mask_target && ti == store.schema.target_table() {
        stats.target_slot
    } else {
        None
    };

    let numeric = ts
        .numeric
        .iter()
        .enumerate()
        .map(|(slot, f)| {
            if Some(slot) == masked_slot {
                return (0.0, 1.0);
            }
            match data.columns[f.column].numeric(row) {
                Some(v) => (f.stats.standardize(v), 0.0),
                None => (0.0, 1.0),
            }
        })
        .collect();
    let categorical = ts
        .categorical
        .iter()
        .map(|f| f.index_of(data.columns[f.column].category(row)))
        .collect();
    FeatureVector { numeric, categorical }
}
