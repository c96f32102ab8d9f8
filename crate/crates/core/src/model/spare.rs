//! One bottom-up pass over a batch schedule.

use std::collections::HashMap;

use rand::Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use super::encoder::{head, Encoders, FeatureTable};
use super::MessageCounter;
use crate::autodiff::{Activation, Mlp, ParamId, ParameterSet, Tape, Tensor, Var};
use crate::error::{Error, Result};
use crate::graph::EmbeddingKey;
use crate::schedule::{BatchSchedule, ChildLabel};
use crate::store::FeatureStats;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Aggregator {
    Gcn,
    Deepsets,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Kernel {
    Gcn { w_self: ParamId, bias: ParamId },
    Deepsets { child: Mlp, combine: Mlp },
}

/// Learnable `h_e` per pruned key, stored as rows of one matrix.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Registry {
    pub keys: Vec<EmbeddingKey>,
    pub param: Option<ParamId>,
    rows: HashMap<EmbeddingKey, u32>,
}

impl Registry {
    pub fn new(
        params: &mut ParameterSet,
        mut keys: Vec<EmbeddingKey>,
        hidden: usize,
        rng: &mut impl Rng,
    ) -> Result<Self> {
        keys.sort_unstable();
        keys.dedup();
        let rows = keys.iter().enumerate().map(|(i, &k)| (k, i as u32)).collect();
        let param = if keys.is_empty() {
            None
        } else {
            let normal = Normal::new(0.0, 1.0 / (hidden as f64).sqrt()).expect("positive std");
            let data = (0..keys.len() * hidden).map(|_| normal.sample(rng)).collect();
            Some(params.add("registry", Tensor::from_vec(keys.len(), hidden, data)?)?)
        };
        Ok(Registry { keys, param, rows })
    }

    pub fn contains(&self, key: &EmbeddingKey) -> bool {
        self.rows.contains_key(key)
    }

    pub fn row(&self, key: &EmbeddingKey) -> Option<u32> {
        self.rows.get(key).copied()
    }

    pub fn len(&self) -> usize {
        self.keys.len()
    }

    pub fn is_empty(&self) -> bool {
        self.keys.is_empty()
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SpareModel {
    pub encoders: Encoders,
    pub registry: Registry,
    /// `2R + 1` rows: `(relation, direction)` pairs, then the same-depth vector.
    pub relation_emb: ParamId,
    /// Projects `[h_child ; relation]` to the hidden width.
    pub w_child: ParamId,
    pub kernel: Kernel,
    pub head: Mlp,
    pub num_relations: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SpareDims {
    pub hidden: usize,
    pub cat_dim: usize,
    pub rel_dim: usize,
    pub encoder_layers: usize,
    pub head_layers: usize,
}

impl SpareModel {
    #[allow(clippy::too_many_arguments)]
    pub fn new(
        params: &mut ParameterSet,
        stats: &FeatureStats,
        num_relations: usize,
        aggregator: Aggregator,
        dims: SpareDims,
        registry_keys: Vec<EmbeddingKey>,
        rng: &mut impl Rng,
    ) -> Result<Self> {
        let h = dims.hidden;
        let encoders = Encoders::new(params, stats, h, dims.cat_dim, dims.encoder_layers, rng)?;
        let registry = Registry::new(params, registry_keys, h, rng)?;
        let rel: Vec<f64> = (0..(2 * num_relations + 1) * dims.rel_dim)
            .map(|_| rng.random_range(-0.5..0.5))
            .collect();
        let relation_emb = params.add("spare.rel", Tensor::from_vec(2 * num_relations + 1, dims.rel_dim, rel)?)?;
        let w_child = params.add_weight("spare.w_child", h + dims.rel_dim, h, rng)?;
        let kernel = match aggregator {
            Aggregator::Gcn => Kernel::Gcn {
                w_self: params.add_weight("spare.w_self", h, h, rng)?,
                bias: params.add_zeros("spare.b", 1, h)?,
            },
            Aggregator::Deepsets => Kernel::Deepsets {
                child: Mlp::new(params, "spare.child", &[h, h], Activation::Relu, rng)?,
                combine: Mlp::new(params, "spare.combine", &[2 * h, h], Activation::Relu, rng)?,
            },
        };
        let head = head(params, "spare.head", h, dims.head_layers, rng)?;
        Ok(SpareModel {
            encoders,
            registry,
            relation_emb,
            w_child,
            kernel,
            head,
            num_relations,
        })
    }

    pub fn hidden(&self) -> usize {
        self.encoders.hidden
    }

    /// `h⁰` for every slot, one var per level. Regular slots go through
    /// their table encoder, pruned slots read their registry row.
    pub fn encode_nodes(
        &self,
        tape: &mut Tape,
        params: &ParameterSet,
        schedule: &BatchSchedule,
        features: &FeatureTable,
    ) -> Result<Vec<Var>> {
        for s in &schedule.slots {
            if let Some(k) = &s.embedding {
                if !self.registry.contains(k) {
                    return Err(Error::UnknownEmbeddingKey {
                        tuple: k.tuple,
                        depth: k.depth,
                    });
                }
            }
        }
        let enc = self.encoders.encode(
            tape,
            params,
            features,
            schedule.slots.iter().filter(|s| s.embedding.is_none()).map(|s| s.tuple),
        )?;
        let mut sources = enc.sources.clone();
        let reg_src = sources.len() as u32;
        if let Some(p) = self.registry.param {
            sources.push(tape.param(params, p));
        }
        schedule
            .levels
            .iter()
            .map(|lv| {
                let idx = lv
                    .slots()
                    .map(|s| {
                        let slot = &schedule.slots[s as usize];
                        match &slot.embedding {
                            Some(k) => (reg_src, self.registry.row(k).expect("checked above")),
                            None => enc.locate(slot.tuple),
                        }
                    })
                    .collect();
                tape.gather(&sources, idx)
            })
            .collect()
    }

    fn relation_rows(&self, tape: &mut Tape, params: &ParameterSet, labels: &[ChildLabel]) -> Result<Var> {
        let emb = tape.param(params, self.relation_emb);
        let base = labels
            .iter()
            .map(|l| (0, l.relation * 2 + l.direction.index() as u32))
            .collect();
        let r = tape.gather(&[emb], base)?;
        if !labels.iter().any(|l| l.same_depth) {
            return Ok(r);
        }
        let zero = tape.constant(Tensor::zeros(1, tape.value(emb).cols()));
        let same = 2 * self.num_relations as u32;
        let extra = labels
            .iter()
            .map(|l| if l.same_depth { (0, same) } else { (1, 0) })
            .collect();
        let s = tape.gather(&[emb, zero], extra)?;
        tape.add(r, s)
    }

    /// Concatenate each child state with its relation embedding and project.
    pub fn project_children(
        &self,
        tape: &mut Tape,
        params: &ParameterSet,
        children: Var,
        labels: &[ChildLabel],
    ) -> Result<Var> {
        let r = self.relation_rows(tape, params, labels)?;
        let x = tape.concat(&[children, r])?;
        let w = tape.param(params, self.w_child);
        tape.matmul(x, w)
    }

    /// `h_v` from `h_v⁰` and the projected children, segmented per node.
    /// `projected = None` means no node of the level has children.
    pub fn aggregate_children(
        &self,
        tape: &mut Tape,
        params: &ParameterSet,
        h0: Var,
        projected: Option<Var>,
        offsets: &[u32],
    ) -> Result<Var> {
        match &self.kernel {
            Kernel::Gcn { w_self, bias } => gcn_combine(tape, params, *w_self, *bias, h0, projected, offsets),
            Kernel::Deepsets { child, combine } => {
                let agg = match projected {
                    Some(p) => {
                        let q = child.apply(tape, params, p)?;
                        tape.segment_sum(q, offsets)?
                    }
                    None => {
                        let n = tape.value(h0).rows();
                        tape.constant(Tensor::zeros(n, self.hidden()))
                    }
                };
                let x = tape.concat(&[h0, agg])?;
                combine.apply(tape, params, x)
            }
        }
    }

    /// Predictions (`dags x 1`) for every DAG of the schedule.
    pub fn forward(
        &self,
        tape: &mut Tape,
        params: &ParameterSet,
        schedule: &BatchSchedule,
        features: &FeatureTable,
        counter: &mut MessageCounter,
    ) -> Result<Var> {
        let h0 = self.encode_nodes(tape, params, schedule, features)?;
        let mut states: Vec<Var> = Vec::with_capacity(schedule.levels.len());
        for (l, lv) in schedule.levels.iter().enumerate() {
            let projected = if lv.children.is_empty() {
                None
            } else {
                let idx = lv
                    .children
                    .iter()
                    .map(|&c| {
                        let (cl, pos) = schedule.locate(c);
                        (cl as u32, pos as u32)
                    })
                    .collect();
                let ch = tape.gather(&states, idx)?;
                Some(self.project_children(tape, params, ch, &lv.labels)?)
            };
            states.push(self.aggregate_children(tape, params, h0[l], projected, &lv.offsets)?);
        }
        counter.messages += schedule.num_edges as u64;
        counter.state_updates += schedule.num_slots() as u64;

        let roots = schedule
            .roots
            .iter()
            .map(|&r| {
                let (l, p) = schedule.locate(r);
                (l as u32, p as u32)
            })
            .collect();
        let hr = tape.gather(&states, roots)?;
        self.head.apply(tape, params, hr)
    }
}

/// `relu(h0 · W_s + mean(projected) + b)`
pub fn gcn_combine(
    tape: &mut Tape,
    params: &ParameterSet,
    w_self: ParamId,
    bias: ParamId,
    h0: Var,
    projected: Option<Var>,
    offsets: &[u32],
) -> Result<Var> {
    let w = tape.param(params, w_self);
    let b = tape.param(params, bias);
    let mut x = tape.matmul(h0, w)?;
    if let Some(p) = projected {
        let m = tape.segment_mean(p, offsets)?;
        x = tape.add(x, m)?;
    }
    let x = tape.add_bias(x, b)?;
    Ok(tape.relu(x))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn col(v: &[f64]) -> Tensor {
        Tensor::from_vec(v.len(), 1, v.to_vec()).unwrap()
    }

    #[test]
    fn one_dimensional_gcn_by_hand() {
        let mut ps = ParameterSet::new();
        let ws = ps.add("ws", Tensor::scalar(1.0)).unwrap();
        let b = ps.add("b", Tensor::scalar(0.0)).unwrap();
        let mut t = Tape::new();
        let h0 = t.constant(col(&[1.0]));
        let p = t.constant(col(&[2.0, 4.0]));
        let h = gcn_combine(&mut t, &ps, ws, b, h0, Some(p), &[0, 2]).unwrap();
        assert_eq!(t.value(h).data(), &[4.0]);

        // leaf: relu(W_s h0 + b)
        let h0 = t.constant(col(&[-3.0, 2.5]));
        let h = gcn_combine(&mut t, &ps, ws, b, h0, None, &[0, 0, 0]).unwrap();
        assert_eq!(t.value(h).data(), &[0.0, 2.5]);
    }

    #[test]
    fn permuted_children_give_same_state() {
        let mut ps = ParameterSet::new();
        let ws = ps.add("ws", Tensor::scalar(0.5)).unwrap();
        let b = ps.add("b", Tensor::scalar(0.1)).unwrap();
        let mut t = Tape::new();
        let h0 = t.constant(col(&[1.0]));
        let p1 = t.constant(col(&[0.3, 0.7]));
        let p2 = t.constant(col(&[0.7, 0.3]));
        let a = gcn_combine(&mut t, &ps, ws, b, h0, Some(p1), &[0, 2]).unwrap();
        let c = gcn_combine(&mut t, &ps, ws, b, h0, Some(p2), &[0, 2]).unwrap();
        assert_eq!(t.value(a), t.value(c));
    }
}
