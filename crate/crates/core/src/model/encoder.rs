use std::collections::HashMap;

use rand::Rng;

use crate::autodiff::{Activation, Mlp, ParamId, ParameterSet, Tape, Tensor, Var};
use crate::error::Result;
use crate::store::{encode_features, FeatureStats, FeatureVector, Store, TupleRef};

/// Encoded features of every tuple in a store. The target column is
/// always masked, so no label is visible through a neighboring tuple.
#[derive(Debug, Clone, PartialEq)]
pub struct FeatureTable {
    pub tables: Vec<Vec<FeatureVector>>,
}

impl FeatureTable {
    pub fn build(store: &Store, stats: &FeatureStats) -> Self {
        let tables = (0..store.num_tables())
            .map(|t| {
                (0..store.row_count(t))
                    .map(|r| encode_features(store, stats, TupleRef::new(t, r), true))
                    .collect()
            })
            .collect();
        FeatureTable { tables }
    }

    pub fn get(&self, t: TupleRef) -> &FeatureVector {
        &self.tables[t.table as usize][t.row as usize]
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TableEncoder {
    pub numeric_width: usize,
    /// One `cardinality x dim` embedding per categorical column.
    pub categorical: Vec<ParamId>,
    pub mlp: Mlp,
}

/// `MLP_T` for every table.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Encoders {
    pub tables: Vec<TableEncoder>,
    pub hidden: usize,
}

/// Encoder outputs for a set of distinct tuples: one var per table that
/// occurs, and where each tuple's row lives.
#[derive(Debug, Clone)]
pub struct Encoded {
    pub sources: Vec<Var>,
    pub index: HashMap<TupleRef, (u32, u32)>,
}

impl Encoded {
    pub fn locate(&self, t: TupleRef) -> (u32, u32) {
        self.index[&t]
    }
}

impl Encoders {
    pub fn new(
        params: &mut ParameterSet,
        stats: &FeatureStats,
        hidden: usize,
        cat_dim: usize,
        layers: usize,
        rng: &mut impl Rng,
    ) -> Result<Self> {
        let mut tables = Vec::new();
        for (ti, ts) in stats.tables.iter().enumerate() {
            let mut categorical = Vec::new();
            for (ci, c) in ts.categorical.iter().enumerate() {
                let emb: Vec<f64> = (0..c.cardinality() * cat_dim)
                    .map(|_| rng.random_range(-0.5..0.5))
                    .collect();
                categorical.push(params.add(
                    format!("enc.{ti}.cat{ci}"),
                    Tensor::from_vec(c.cardinality(), cat_dim, emb)?,
                )?);
            }
            let input = ts.numeric_width() + cat_dim * ts.categorical.len();
            let mut dims = vec![input];
            dims.extend(std::iter::repeat_n(hidden, layers.max(1)));
            let mlp = Mlp::new(params, &format!("enc.{ti}.mlp"), &dims, Activation::Identity, rng)?;
            tables.push(TableEncoder {
                numeric_width: ts.numeric_width(),
                categorical,
                mlp,
            });
        }
        Ok(Encoders { tables, hidden })
    }

    /// Encode distinct tuples, grouped by table in ascending tuple order.
    pub fn encode(
        &self,
        tape: &mut Tape,
        params: &ParameterSet,
        features: &FeatureTable,
        tuples: impl IntoIterator<Item = TupleRef>,
    ) -> Result<Encoded> {
        let mut by_table: Vec<Vec<TupleRef>> = vec![Vec::new(); self.tables.len()];
        for t in tuples {
            by_table[t.table as usize].push(t);
        }
        let mut sources = Vec::new();
        let mut index = HashMap::new();
        for (ti, mut ts) in by_table.into_iter().enumerate() {
            ts.sort_unstable();
            ts.dedup();
            if ts.is_empty() {
                continue;
            }
            let src = sources.len() as u32;
            for (r, &t) in ts.iter().enumerate() {
                index.insert(t, (src, r as u32));
            }
            sources.push(self.encode_table(tape, params, ti, ts.iter().map(|&t| features.get(t)))?);
        }
        Ok(Encoded { sources, index })
    }

    pub fn encode_table<'a>(
        &self,
        tape: &mut Tape,
        params: &ParameterSet,
        table: usize,
        rows: impl ExactSizeIterator<Item = &'a FeatureVector>,
    ) -> Result<Var> {
        let enc = &self.tables[table];
        let n = rows.len();
        let mut numeric = Vec::with_capacity(n * enc.numeric_width);
        let mut cats: Vec<Vec<(u32, u32)>> = vec![Vec::with_capacity(n); enc.categorical.len()];
        for fv in rows {
            numeric.extend(fv.dense());
            for (c, &code) in fv.categorical.iter().enumerate() {
                cats[c].push((0, code));
            }
        }
        let mut parts = vec![tape.constant(Tensor::from_vec(n, enc.numeric_width, numeric)?)];
        for (&emb, idx) in enc.categorical.iter().zip(cats) {
            let e = tape.param(params, emb);
            parts.push(tape.gather(&[e], idx)?);
        }
        let x = if parts.len() == 1 { parts[0] } else { tape.concat(&parts)? };
        enc.mlp.apply(tape, params, x)
    }
}

/// `[hidden, .., hidden, 1]` output MLP.
pub fn head(params: &mut ParameterSet, prefix: &str, hidden: usize, layers: usize, rng: &mut impl Rng) -> Result<Mlp> {
    let mut dims = vec![hidden; layers.max(1)];
    dims.push(1);
    Mlp::new(params, prefix, &dims, Activation::Identity, rng)
}
