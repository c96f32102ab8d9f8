//! Models: the single-pass DAG model, the message-passing baseline and a
//! target-tuple-only ablation.

mod encoder;
mod gnn;
mod spare;

use rand::Rng;
use serde::{Deserialize, Serialize};

pub use encoder::{head, Encoded, Encoders, FeatureTable, TableEncoder};
pub use gnn::{mp_round, GnnBatch, GnnModel, RoundParams};
pub use spare::{gcn_combine, Aggregator, Kernel, Registry, SpareDims, SpareModel};

use crate::autodiff::{Mlp, ParameterSet, Tape, Var};
use crate::error::Result;
use crate::graph::EmbeddingKey;
use crate::store::{FeatureStats, TupleRef};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ModelKind {
    SpareGcn,
    SpareDeepsets,
    GnnBaseline,
    RootOnly,
}

impl ModelKind {
    pub fn is_spare(self) -> bool {
        matches!(self, ModelKind::SpareGcn | ModelKind::SpareDeepsets)
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct MessageCounter {
    pub messages: u64,
    pub state_updates: u64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ModelConfig {
    pub kind: ModelKind,
    pub hidden: usize,
    /// Width of each categorical embedding.
    pub cat_dim: usize,
    /// Width of relation-type embeddings.
    pub rel_dim: usize,
    pub encoder_layers: usize,
    pub head_layers: usize,
    /// Message-passing rounds of the baseline.
    pub rounds: usize,
}

impl Default for ModelConfig {
    fn default() -> Self {
        ModelConfig {
            kind: ModelKind::SpareGcn,
            hidden: 32,
            cat_dim: 8,
            rel_dim: 8,
            encoder_layers: 2,
            head_layers: 2,
            rounds: 2,
        }
    }
}

/// `head(MLP_T(x_target))`
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RootOnlyModel {
    pub encoders: Encoders,
    pub head: Mlp,
}

impl RootOnlyModel {
    pub fn forward(&self, tape: &mut Tape, params: &ParameterSet, targets: &[TupleRef], features: &FeatureTable) -> Result<Var> {
        let enc = self.encoders.encode(tape, params, features, targets.iter().copied())?;
        let idx = targets.iter().map(|&t| enc.locate(t)).collect();
        let h = tape.gather(&enc.sources, idx)?;
        self.head.apply(tape, params, h)
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Model {
    Spare(SpareModel),
    Gnn(GnnModel),
    RootOnly(RootOnlyModel),
}

impl Model {
    /// Build a model and register its parameters. Parameter creation order,
    /// and therefore the initial values, depend only on the arguments.
    pub fn new(
        cfg: &ModelConfig,
        params: &mut ParameterSet,
        stats: &FeatureStats,
        num_relations: usize,
        registry_keys: Vec<EmbeddingKey>,
        rng: &mut impl Rng,
    ) -> Result<Self> {
        Ok(match cfg.kind {
            ModelKind::SpareGcn | ModelKind::SpareDeepsets => {
                let agg = if cfg.kind == ModelKind::SpareGcn {
                    Aggregator::Gcn
                } else {
                    Aggregator::Deepsets
                };
                let dims = SpareDims {
                    hidden: cfg.hidden,
                    cat_dim: cfg.cat_dim,
                    rel_dim: cfg.rel_dim,
                    encoder_layers: cfg.encoder_layers,
                    head_layers: cfg.head_layers,
                };
                Model::Spare(SpareModel::new(params, stats, num_relations, agg, dims, registry_keys, rng)?)
            }
            ModelKind::GnnBaseline => Model::Gnn(GnnModel::new(
                params,
                stats,
                num_relations,
                cfg.hidden,
                cfg.cat_dim,
                cfg.rel_dim,
                cfg.encoder_layers,
                cfg.head_layers,
                cfg.rounds,
                rng,
            )?),
            ModelKind::RootOnly => {
                let encoders = Encoders::new(params, stats, cfg.hidden, cfg.cat_dim, cfg.encoder_layers, rng)?;
                let head = head(params, "root.head", cfg.hidden, cfg.head_layers, rng)?;
                Model::RootOnly(RootOnlyModel { encoders, head })
            }
        })
    }
}
