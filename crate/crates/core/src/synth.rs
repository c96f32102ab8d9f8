//! Synthetic relational datasets with a known answer.
//!
//! * `relational-signal`: each child row is a target whose label is its
//!   parent's hidden binary kind, flipped with probability `noise`. The
//!   child's own columns are pure noise.
//! * `sum-regression`: items link to one row of each of two parent
//!   tables; the target is `1.5 a.value - 1.0 b.value + N(0, noise²)`.
//! * `skewed`: relational-signal with Zipf-distributed parent popularity.

use std::fs;
use std::path::Path;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal, Zipf};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::store::{IngestOptions, Schema, Store};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Family {
    RelationalSignal,
    SumRegression,
    Skewed,
}

impl std::str::FromStr for Family {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "relational-signal" => Ok(Family::RelationalSignal),
            "sum-regression" => Ok(Family::SumRegression),
            "skewed" => Ok(Family::Skewed),
            _ => Err(Error::Config(format!(
                "unknown family `{s}` (relational-signal, sum-regression, skewed)"
            ))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SyntheticSpec {
    pub family: Family,
    pub targets: usize,
    /// Rows per parent table; `None` means `targets / 10`.
    pub parents: Option<usize>,
    /// Label flip probability, or target noise std for sum-regression.
    pub noise: f64,
    /// Zipf exponent for `skewed`.
    pub zipf_exponent: f64,
}

impl SyntheticSpec {
    pub fn new(family: Family) -> Self {
        SyntheticSpec {
            family,
            targets: 5000,
            parents: None,
            noise: match family {
                Family::SumRegression => 0.1,
                _ => 0.05,
            },
            zipf_exponent: 1.1,
        }
    }

    pub fn with_targets(mut self, n: usize) -> Self {
        self.targets = n;
        self
    }

    pub fn with_noise(mut self, noise: f64) -> Self {
        self.noise = noise;
        self
    }

    pub fn num_parents(&self) -> usize {
        self.parents.unwrap_or(self.targets / 10).max(1)
    }
}

pub struct TableRows {
    pub file: String,
    pub header: Vec<&'static str>,
    pub rows: Vec<Vec<String>>,
}

/// A generated dataset, not yet written anywhere.
pub struct SyntheticData {
    pub schema_json: String,
    pub tables: Vec<TableRows>,
}

const SIGNAL_SCHEMA: &str = r#"{
  "tables": [
    { "name": "children", "file": "children.csv", "primary_key": "child_id",
      "columns": [ { "name": "child_id", "kind": "categorical" },
                   { "name": "parent_id", "kind": "categorical" },
                   { "name": "x1", "kind": "numeric" },
                   { "name": "x2", "kind": "numeric" },
                   { "name": "tag", "kind": "categorical" },
                   { "name": "label", "kind": "numeric" } ] },
    { "name": "parents", "file": "parents.csv", "primary_key": "parent_id",
      "columns": [ { "name": "parent_id", "kind": "categorical" },
                   { "name": "kind", "kind": "categorical" },
                   { "name": "size", "kind": "numeric" } ] }
  ],
  "relations": [
    { "from_table": "children", "from_column": "parent_id", "to_table": "parents", "to_column": "parent_id" }
  ],
  "target": { "table": "children", "column": "label", "task": "binary_classification" }
}
"#;

const SUM_SCHEMA: &str = r#"{
  "tables": [
    { "name": "items", "file": "items.csv", "primary_key": "item_id",
      "columns": [ { "name": "item_id", "kind": "categorical" },
                   { "name": "a_id", "kind": "categorical" },
                   { "name": "b_id", "kind": "categorical" },
                   { "name": "x1", "kind": "numeric" },
                   { "name": "target", "kind": "numeric" } ] },
    { "name": "parents_a", "file": "parents_a.csv", "primary_key": "a_id",
      "columns": [ { "name": "a_id", "kind": "categorical" },
                   { "name": "value", "kind": "numeric" } ] },
    { "name": "parents_b", "file": "parents_b.csv", "primary_key": "b_id",
      "columns": [ { "name": "b_id", "kind": "categorical" },
                   { "name": "value", "kind": "numeric" } ] }
  ],
  "relations": [
    { "from_table": "items", "from_column": "a_id", "to_table": "parents_a", "to_column": "a_id" },
    { "from_table": "items", "from_column": "b_id", "to_table": "parents_b", "to_column": "b_id" }
  ],
  "target": { "table": "items", "column": "target", "task": "regression" }
}
"#;

fn num(v: f64) -> String {
    format!("{v}")
}

pub fn generate(spec: &SyntheticSpec, seed: u64) -> Result<SyntheticData> {
    if spec.targets == 0 {
        return Err(Error::Config("synthetic datasets need at least one target".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let std_normal = Normal::new(0.0, 1.0).expect("unit normal");
    let np = spec.num_parents();
    match spec.family {
        Family::RelationalSignal | Family::Skewed => {
            if !(0.0..=1.0).contains(&spec.noise) {
                return Err(Error::Config(format!("flip probability {} outside [0, 1]", spec.noise)));
            }
            let kinds: Vec<bool> = (0..np).map(|_| rng.random_bool(0.5)).collect();
            let parents = (0..np)
                .map(|i| {
                    let kind = if kinds[i] { "b" } else { "a" };
                    vec![format!("p{i}"), kind.to_string(), num(rng.random_range(1..100) as f64)]
                })
                .collect();
            let zipf = if spec.family == Family::Skewed {
                Some(Zipf::new(np as f64, spec.zipf_exponent).map_err(|e| Error::Config(format!("zipf: {e}")))?)
            } else {
                None
            };
            let tags = ["red", "green", "blue"];
            let children = (0..spec.targets)
                .map(|i| {
                    let p = match &zipf {
                        Some(z) => z.sample(&mut rng) as usize - 1,
                        None => rng.random_range(0..np),
                    };
                    let flip = rng.random_bool(spec.noise);
                    let label = kinds[p] ^ flip;
                    vec![
                        format!("c{i}"),
                        format!("p{p}"),
                        num(std_normal.sample(&mut rng)),
                        num(std_normal.sample(&mut rng)),
                        tags[rng.random_range(0..tags.len())].to_string(),
                        if label { "1" } else { "0" }.to_string(),
                    ]
                })
                .collect();
            Ok(SyntheticData {
                schema_json: SIGNAL_SCHEMA.to_string(),
                tables: vec![
                    TableRows {
                        file: "children.csv".into(),
                        header: vec!["child_id", "parent_id", "x1", "x2", "tag", "label"],
                        rows: children,
                    },
                    TableRows {
                        file: "parents.csv".into(),
                        header: vec!["parent_id", "kind", "size"],
                        rows: parents,
                    },
                ],
            })
        }
        Family::SumRegression => {
            let noise = Normal::new(0.0, spec.noise).map_err(|e| Error::Config(format!("noise: {e}")))?;
            let a: Vec<f64> = (0..np).map(|_| std_normal.sample(&mut rng)).collect();
            let b: Vec<f64> = (0..np).map(|_| std_normal.sample(&mut rng)).collect();
            let items = (0..spec.targets)
                .map(|i| {
                    let (ai, bi) = (rng.random_range(0..np), rng.random_range(0..np));
                    let y = 1.5 * a[ai] - 1.0 * b[bi] + noise.sample(&mut rng);
                    vec![
                        format!("i{i}"),
                        format!("a{ai}"),
                        format!("b{bi}"),
                        num(std_normal.sample(&mut rng)),
                        num(y),
                    ]
                })
                .collect();
            let parent_rows = |prefix: &str, v: &[f64]| -> Vec<Vec<String>> {
                v.iter().enumerate().map(|(i, &x)| vec![format!("{prefix}{i}"), num(x)]).collect()
            };
            Ok(SyntheticData {
                schema_json: SUM_SCHEMA.to_string(),
                tables: vec![
                    TableRows {
                        file: "items.csv".into(),
                        header: vec!["item_id", "a_id", "b_id", "x1", "target"],
                        rows: items,
                    },
                    TableRows {
                        file: "parents_a.csv".into(),
                        header: vec!["a_id", "value"],
                        rows: parent_rows("a", &a),
                    },
                    TableRows {
                        file: "parents_b.csv".into(),
                        header: vec!["b_id", "value"],
                        rows: parent_rows("b", &b),
                    },
                ],
            })
        }
    }
}

impl SyntheticData {
    pub fn schema(&self) -> Result<Schema> {
        Schema::from_json(&self.schema_json)
    }

    pub fn to_store(&self) -> Result<Store> {
        let records = self.tables.iter().map(|t| t.rows.clone()).collect();
        Store::from_records(self.schema()?, records, IngestOptions::default())
    }

    /// Write `schema.json` and one CSV per table into `dir`.
    pub fn write(&self, dir: &Path) -> Result<()> {
        fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
        let sp = dir.join("schema.json");
        fs::write(&sp, &self.schema_json).map_err(|e| Error::io(&sp, e))?;
        for t in &self.tables {
            let path = dir.join(&t.file);
            let mut w = csv::Writer::from_path(&path).map_err(|e| Error::io(&path, e.into()))?;
            let io = |e: csv::Error| Error::io(&path, e.into());
            w.write_record(&t.header).map_err(io)?;
            for r in &t.rows {
                w.write_record(r).map_err(io)?;
            }
            w.flush().map_err(|e| Error::io(&path, e))?;
        }
        Ok(())
    }
}
