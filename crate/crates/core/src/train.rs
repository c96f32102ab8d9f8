//! Training, evaluation and checkpoints.

use std::collections::BTreeMap;
use std::fs;
use std::path::Path;
use std::time::Instant;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::autodiff::{Optimizer, OptimizerConfig, ParameterSet, SavedParam, Tape, Var};
use crate::error::{Error, Result};
use crate::graph::{build_dag, build_undirected, EmbeddingKey, GraphConfig, TargetDag, UndirectedTupleGraph};
use crate::metrics::{auroc, nrmse};
use crate::model::{FeatureTable, GnnBatch, MessageCounter, Model, ModelConfig, ModelKind};
use crate::prune::{prune, prune_with, reduction_stats, OccurrenceMap, PruneConfig, ReductionStats};
use crate::schedule::build_schedule;
use crate::store::{
    compute_feature_stats, ingest, load_schema, split_targets, FeatureStats, NumericStats, Split, SplitRatios, Store,
    Task, TupleRef,
};

/// What to do with a pruned key that has no trained embedding.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MissPolicy {
    /// Keep the sub-DAG and encode it like any other part of the DAG.
    #[default]
    Fallback,
    /// Fail with `UnknownEmbeddingKey`.
    Strict,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TrainConfig {
    pub model: ModelConfig,
    pub graph: GraphConfig,
    pub prune: PruneConfig,
    pub optimizer: OptimizerConfig,
    pub epochs: usize,
    pub max_targets_per_epoch: usize,
    pub batch_size: usize,
    pub seed: u64,
    pub split: SplitRatios,
    pub miss_policy: MissPolicy,
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig {
            model: ModelConfig::default(),
            graph: GraphConfig::default(),
            prune: PruneConfig::default(),
            optimizer: OptimizerConfig::default(),
            epochs: 30,
            max_targets_per_epoch: 100_000,
            batch_size: 64,
            seed: 0,
            split: SplitRatios::default(),
            miss_policy: MissPolicy::Fallback,
        }
    }
}

impl TrainConfig {
    pub fn from_json(text: &str) -> Result<Self> {
        let cfg: TrainConfig = serde_json::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_json(&text)
    }

    pub fn validate(&self) -> Result<()> {
        let m = &self.model;
        let positive = [
            ("model.hidden", m.hidden),
            ("model.cat_dim", m.cat_dim),
            ("model.rel_dim", m.rel_dim),
            ("model.encoder_layers", m.encoder_layers),
            ("model.head_layers", m.head_layers),
            ("model.rounds", m.rounds),
            ("epochs", self.epochs),
            ("max_targets_per_epoch", self.max_targets_per_epoch),
            ("batch_size", self.batch_size),
        ];
        for (name, v) in positive {
            if v == 0 {
                return Err(Error::Config(format!("`{name}` must be positive")));
            }
        }
        let lr = match self.optimizer {
            OptimizerConfig::Sgd { lr } | OptimizerConfig::Adam { lr, .. } => lr,
        };
        if !(lr > 0.0 && lr.is_finite()) {
            return Err(Error::Config(format!("learning rate must be positive, got {lr}")));
        }
        self.prune.validate()
    }

    /// Pruning only applies to the single-pass models.
    pub fn pruning_active(&self) -> bool {
        self.model.kind.is_spare() && self.prune.enabled
    }
}

/// Read `schema.json` and the CSV files it names from one directory.
pub fn load_dataset(dir: impl AsRef<Path>) -> Result<Store> {
    let dir = dir.as_ref();
    let schema = load_schema(dir.join("schema.json"))?;
    ingest(&schema, dir)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SplitName {
    Train,
    Val,
    Test,
}

impl std::str::FromStr for SplitName {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "train" => Ok(SplitName::Train),
            "val" => Ok(SplitName::Val),
            "test" => Ok(SplitName::Test),
            _ => Err(Error::Config(format!("unknown split `{s}` (train, val, test)"))),
        }
    }
}

/// Per-target model input.
#[derive(Debug, Clone)]
pub enum Inputs {
    Dags(Vec<TargetDag>),
    Graphs(Vec<UndirectedTupleGraph>),
    Roots,
}

#[derive(Debug, Clone)]
pub struct SplitData {
    pub targets: Vec<TupleRef>,
    /// Raw target values.
    pub labels: Vec<f64>,
    pub inputs: Inputs,
}

impl SplitData {
    pub fn len(&self) -> usize {
        self.targets.len()
    }

    pub fn is_empty(&self) -> bool {
        self.targets.is_empty()
    }

    pub fn num_edges(&self) -> usize {
        match &self.inputs {
            Inputs::Dags(d) => d.iter().map(TargetDag::num_edges).sum(),
            Inputs::Graphs(g) => g.iter().map(UndirectedTupleGraph::num_edges).sum(),
            Inputs::Roots => 0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PruneSummary {
    pub occurrence_keys: usize,
    /// Number of keys per occurrence count.
    pub histogram: BTreeMap<u32, usize>,
    pub registry_size: usize,
    pub reduction: Option<ReductionStats>,
}

/// Everything derived from the store before the first epoch.
#[derive(Debug, Clone)]
pub struct Prepared {
    pub split: Split,
    pub stats: FeatureStats,
    pub features: FeatureTable,
    pub target_stats: Option<NumericStats>,
    pub train: SplitData,
    pub val: SplitData,
    pub test: SplitData,
    pub registry_keys: Vec<EmbeddingKey>,
    pub summary: Option<PruneSummary>,
}

impl Prepared {
    pub fn split(&self, s: SplitName) -> &SplitData {
        match s {
            SplitName::Train => &self.train,
            SplitName::Val => &self.val,
            SplitName::Test => &self.test,
        }
    }
}

fn labels_of(store: &Store, targets: &[TupleRef]) -> Vec<f64> {
    targets
        .iter()
        .map(|t| store.target_value(t.row as usize).expect("split holds labelled targets"))
        .collect()
}

fn build_dags(store: &Store, targets: &[TupleRef], g: &GraphConfig) -> Vec<TargetDag> {
    targets.par_iter().map(|&t| build_dag(store, t, g)).collect()
}

fn prune_all(dags: &[TargetDag], f: impl Fn(&TargetDag) -> TargetDag + Sync + Send) -> Vec<TargetDag> {
    dags.par_iter().map(f).collect()
}

/// Held-out DAGs: either prune with the training rule, or only where a
/// trained embedding exists.
fn prune_heldout(
    store: &Store,
    dags: &[TargetDag],
    cfg: &TrainConfig,
    occ: &OccurrenceMap,
    registry: &std::collections::BTreeSet<EmbeddingKey>,
) -> Vec<TargetDag> {
    let rows = store.row_counts();
    match cfg.miss_policy {
        MissPolicy::Strict => prune_all(dags, |d| prune(d, occ, &cfg.prune, &rows)),
        MissPolicy::Fallback => prune_all(dags, |d| {
            prune_with(d, |v| {
                registry.contains(&EmbeddingKey {
                    tuple: v.tuple,
                    depth: v.depth,
                })
            })
        }),
    }
}

fn registry_of(dags: &[TargetDag]) -> Vec<EmbeddingKey> {
    let set: std::collections::BTreeSet<EmbeddingKey> = dags
        .iter()
        .flat_map(|d| d.vertices.iter().filter_map(|v| v.marker))
        .collect();
    set.into_iter().collect()
}

fn occurrences_from(dags: &[TargetDag]) -> OccurrenceMap {
    let mut occ = OccurrenceMap::new();
    for d in dags {
        occ.record_dag(d);
    }
    occ
}

pub fn prepare(store: &Store, cfg: &TrainConfig) -> Result<Prepared> {
    cfg.validate()?;
    let split = split_targets(store, cfg.split, cfg.seed)?;
    if split.train.is_empty() {
        return Err(Error::Config("the training split is empty".into()));
    }
    let stats = compute_feature_stats(store, &split.train);
    let features = FeatureTable::build(store, &stats);
    let task = store.schema.target.task;
    let [ytr, yva, yte] = [&split.train, &split.val, &split.test].map(|s| labels_of(store, s));
    let target_stats = match task {
        Task::Regression => {
            let s = NumericStats::from_values(ytr.iter().copied());
            if !(s.std > 0.0) {
                return Err(Error::ZeroStd);
            }
            Some(s)
        }
        Task::BinaryClassification => None,
    };

    let mut registry_keys = Vec::new();
    let mut summary = None;
    let (itr, iva, ite) = match cfg.model.kind {
        ModelKind::SpareGcn | ModelKind::SpareDeepsets => {
            let raw = build_dags(store, &split.train, &cfg.graph);
            let va = build_dags(store, &split.val, &cfg.graph);
            let te = build_dags(store, &split.test, &cfg.graph);
            if cfg.prune.enabled {
                let occ = occurrences_from(&raw);
                let rows = store.row_counts();
                let tr = prune_all(&raw, |d| prune(d, &occ, &cfg.prune, &rows));
                registry_keys = registry_of(&tr);
                let reg = registry_keys.iter().copied().collect();
                let va = prune_heldout(store, &va, cfg, &occ, &reg);
                let te = prune_heldout(store, &te, cfg, &occ, &reg);
                summary = Some(PruneSummary {
                    occurrence_keys: occ.len(),
                    histogram: occ.histogram(),
                    registry_size: registry_keys.len(),
                    reduction: Some(reduction_stats(&raw, &tr)?),
                });
                (Inputs::Dags(tr), Inputs::Dags(va), Inputs::Dags(te))
            } else {
                (Inputs::Dags(raw), Inputs::Dags(va), Inputs::Dags(te))
            }
        }
        ModelKind::GnnBaseline => {
            let g = |ts: &[TupleRef]| -> Vec<UndirectedTupleGraph> {
                ts.par_iter().map(|&t| build_undirected(store, t, &cfg.graph)).collect()
            };
            (
                Inputs::Graphs(g(&split.train)),
                Inputs::Graphs(g(&split.val)),
                Inputs::Graphs(g(&split.test)),
            )
        }
        ModelKind::RootOnly => (Inputs::Roots, Inputs::Roots, Inputs::Roots),
    };
    Ok(Prepared {
        train: SplitData {
            targets: split.train.clone(),
            labels: ytr,
            inputs: itr,
        },
        val: SplitData {
            targets: split.val.clone(),
            labels: yva,
            inputs: iva,
        },
        test: SplitData {
            targets: split.test.clone(),
            labels: yte,
            inputs: ite,
        },
        split,
        stats,
        features,
        target_stats,
        registry_keys,
        summary,
    })
}

/// A model with its parameters and output convention.
#[derive(Debug, Clone)]
pub struct Runner {
    pub model: Model,
    pub params: ParameterSet,
    pub task: Task,
    /// Regression outputs are standardized with these training stats.
    pub target_stats: Option<NumericStats>,
}

impl Runner {
    pub fn new(cfg: &TrainConfig, store: &Store, prepared: &Prepared) -> Result<Self> {
        let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed.wrapping_add(1));
        let mut params = ParameterSet::new();
        let model = Model::new(
            &cfg.model,
            &mut params,
            &prepared.stats,
            store.num_relations(),
            prepared.registry_keys.clone(),
            &mut rng,
        )?;
        Ok(Runner {
            model,
            params,
            task: store.schema.target.task,
            target_stats: prepared.target_stats,
        })
    }

    /// Raw model outputs (`batch x 1`) for the given rows of a split.
    pub fn forward(
        &self,
        tape: &mut Tape,
        data: &SplitData,
        rows: &[usize],
        features: &FeatureTable,
        counter: &mut MessageCounter,
    ) -> Result<Var> {
        self.forward_with(&self.params, tape, data, rows, features, counter)
    }

    /// As [`Runner::forward`], reading parameter values from `params`.
    pub fn forward_with(
        &self,
        params: &ParameterSet,
        tape: &mut Tape,
        data: &SplitData,
        rows: &[usize],
        features: &FeatureTable,
        counter: &mut MessageCounter,
    ) -> Result<Var> {
        match (&self.model, &data.inputs) {
            (Model::Spare(m), Inputs::Dags(dags)) => {
                let s = build_schedule(rows.iter().map(|&i| &dags[i]))?;
                m.forward(tape, params, &s, features, counter)
            }
            (Model::Gnn(m), Inputs::Graphs(gs)) => {
                let b = GnnBatch::new(rows.iter().map(|&i| &gs[i]));
                m.forward(tape, params, &b, features, counter)
            }
            (Model::RootOnly(m), Inputs::Roots) => {
                let ts: Vec<TupleRef> = rows.iter().map(|&i| data.targets[i]).collect();
                m.forward(tape, params, &ts, features)
            }
            _ => Err(Error::Config("model and prepared inputs do not match".into())),
        }
    }

    /// Training-scale label: standardized for regression.
    fn fit_label(&self, y: f64) -> f64 {
        match self.target_stats {
            Some(s) => (y - s.mean) / s.std,
            None => y,
        }
    }

    fn unfit(&self, out: f64) -> f64 {
        match self.target_stats {
            Some(s) => s.mean + s.std * out,
            None => out,
        }
    }

    pub fn loss(&self, tape: &mut Tape, out: Var, data: &SplitData, rows: &[usize]) -> Result<Var> {
        let y: Vec<f64> = rows.iter().map(|&i| self.fit_label(data.labels[i])).collect();
        match self.task {
            Task::Regression => tape.mse(out, &y),
            Task::BinaryClassification => tape.bce_with_logits(out, &y),
        }
    }

    /// Predictions in target units (regression) or logits (classification).
    pub fn predict(&self, data: &SplitData, features: &FeatureTable, batch: usize) -> Result<(Vec<f64>, MessageCounter)> {
        let mut counter = MessageCounter::default();
        let mut preds = Vec::with_capacity(data.len());
        let rows: Vec<usize> = (0..data.len()).collect();
        for chunk in rows.chunks(batch.max(1)) {
            let mut tape = Tape::new();
            let out = self.forward(&mut tape, data, chunk, features, &mut counter)?;
            preds.extend(tape.value(out).data().iter().map(|&v| self.unfit(v)));
        }
        Ok((preds, counter))
    }

    /// NRMSE (regression) or AUROC (classification) on a split.
    pub fn score(&self, data: &SplitData, features: &FeatureTable, batch: usize) -> Result<Option<f64>> {
        if data.is_empty() {
            return Ok(None);
        }
        let (p, _) = self.predict(data, features, batch)?;
        score_predictions(self.task, &p, &data.labels, self.target_stats).map(Some)
    }
}

pub fn score_predictions(task: Task, preds: &[f64], labels: &[f64], target_stats: Option<NumericStats>) -> Result<f64> {
    match task {
        Task::Regression => nrmse(preds, labels, target_stats.map_or(0.0, |s| s.std)),
        Task::BinaryClassification => auroc(preds, labels),
    }
}

pub fn metric_name(task: Task) -> &'static str {
    match task {
        Task::Regression => "nrmse",
        Task::BinaryClassification => "auroc",
    }
}

fn better(task: Task, new: f64, old: f64) -> bool {
    match task {
        Task::Regression => new < old,
        Task::BinaryClassification => new > old,
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SplitSizes {
    pub train: usize,
    pub val: usize,
    pub test: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricsReport {
    pub task: Task,
    pub model: ModelKind,
    pub metric: String,
    pub train: Option<f64>,
    pub val: Option<f64>,
    pub test: Option<f64>,
    /// NRMSE of always predicting the training mean (regression only).
    pub constant_mean: Option<SplitMetrics>,
    pub loss_curve: Vec<f64>,
    pub val_curve: Vec<f64>,
    pub best_epoch: Option<usize>,
    pub targets_per_epoch: Vec<usize>,
    pub train_messages_per_epoch: Vec<MessageCounter>,
    /// Counters of one inference pass (evaluation reports only).
    pub eval_messages: Option<MessageCounter>,
    pub sizes: SplitSizes,
    pub prune: Option<PruneSummary>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SplitMetrics {
    pub train: Option<f64>,
    pub val: Option<f64>,
    pub test: Option<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EpochTiming {
    pub train_secs: f64,
    pub eval_secs: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Checkpoint {
    pub config: TrainConfig,
    /// Pretty-printed schema the model was trained on.
    pub schema: String,
    pub feature_stats: FeatureStats,
    pub target_stats: Option<NumericStats>,
    pub registry_keys: Vec<EmbeddingKey>,
    pub prune: Option<PruneSummary>,
    pub parameters: Vec<SavedParam>,
}

impl Checkpoint {
    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("checkpoint serializes")
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        fs::write(path, self.to_json()).map_err(|e| Error::io(path, e))
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        serde_json::from_str(&text).map_err(|e| Error::json(path, e))
    }

    /// Rebuild the model and load the stored parameter values.
    pub fn runner(&self, store: &Store) -> Result<Runner> {
        self.check_schema(store)?;
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let mut params = ParameterSet::new();
        let model = Model::new(
            &self.config.model,
            &mut params,
            &self.feature_stats,
            store.num_relations(),
            self.registry_keys.clone(),
            &mut rng,
        )?;
        params.load(&self.parameters)?;
        Ok(Runner {
            model,
            params,
            task: store.schema.target.task,
            target_stats: self.target_stats,
        })
    }

    pub fn check_schema(&self, store: &Store) -> Result<()> {
        if store.schema.to_json() != self.schema {
            return Err(Error::SchemaMismatch("dataset schema differs from the trained schema".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct EpochLog {
    pub epoch: usize,
    pub loss: f64,
    pub val: Option<f64>,
    pub secs: f64,
}

/// A live training run: prepared data, model and optimizer state.
pub struct Session {
    pub cfg: TrainConfig,
    pub prepared: Prepared,
    pub runner: Runner,
    optimizer: Optimizer,
    rng: ChaCha8Rng,
    step: usize,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EpochStats {
    pub loss: f64,
    pub targets: usize,
    pub counter: MessageCounter,
}

impl Session {
    pub fn new(cfg: &TrainConfig, store: &Store) -> Result<Self> {
        let prepared = prepare(store, cfg)?;
        let runner = Runner::new(cfg, store, &prepared)?;
        Ok(Session {
            cfg: *cfg,
            optimizer: cfg.optimizer.build(),
            rng: ChaCha8Rng::seed_from_u64(cfg.seed.wrapping_add(2)),
            step: 0,
            prepared,
            runner,
        })
    }

    /// One pass over at most `max_targets_per_epoch` shuffled training targets.
    pub fn run_epoch(&mut self) -> Result<EpochStats> {
        let data = &self.prepared.train;
        let mut order: Vec<usize> = (0..data.len()).collect();
        order.shuffle(&mut self.rng);
        order.truncate(self.cfg.max_targets_per_epoch);
        let mut counter = MessageCounter::default();
        let mut total = 0.0;
        for rows in order.chunks(self.cfg.batch_size) {
            let mut tape = Tape::new();
            let out = self
                .runner
                .forward(&mut tape, data, rows, &self.prepared.features, &mut counter)?;
            let loss = self.runner.loss(&mut tape, out, data, rows)?;
            total += tape.value(loss).item() * rows.len() as f64;
            tape.backward(loss, &mut self.runner.params)?;
            self.step += 1;
            self.optimizer
                .step(&mut self.runner.params)
                .map_err(|e| match e {
                    Error::NonFiniteGradient { name } => Error::TrainingDiverged { step: self.step, name },
                    other => other,
                })?;
        }
        Ok(EpochStats {
            loss: total / order.len().max(1) as f64,
            targets: order.len(),
            counter,
        })
    }

    pub fn eval_batch(&self) -> usize {
        self.cfg.batch_size.max(256)
    }

    pub fn score(&self, split: SplitName) -> Result<Option<f64>> {
        self.runner
            .score(self.prepared.split(split), &self.prepared.features, self.eval_batch())
    }
}

pub struct TrainOutcome {
    pub checkpoint: Checkpoint,
    pub report: MetricsReport,
    pub timing: Vec<EpochTiming>,
}

pub fn train(cfg: &TrainConfig, store: &Store) -> Result<TrainOutcome> {
    train_with(cfg, store, |_| {})
}

/// Train, calling `on_epoch` after every epoch. The parameters with the
/// best validation metric are kept; without a validation split, the last.
pub fn train_with(cfg: &TrainConfig, store: &Store, mut on_epoch: impl FnMut(&EpochLog)) -> Result<TrainOutcome> {
    let mut s = Session::new(cfg, store)?;
    let task = s.runner.task;
    let mut loss_curve = Vec::new();
    let mut val_curve = Vec::new();
    let mut targets_per_epoch = Vec::new();
    let mut messages = Vec::new();
    let mut timing = Vec::new();
    let mut best: Option<(usize, f64, Vec<SavedParam>)> = None;

    for epoch in 0..cfg.epochs {
        let t0 = Instant::now();
        let st = s.run_epoch()?;
        let t1 = Instant::now();
        let val = s.score(SplitName::Val)?;
        let t2 = Instant::now();
        loss_curve.push(st.loss);
        targets_per_epoch.push(st.targets);
        messages.push(st.counter);
        if let Some(v) = val {
            val_curve.push(v);
            if best.as_ref().is_none_or(|b| better(task, v, b.1)) {
                best = Some((epoch, v, s.runner.params.save()));
            }
        }
        timing.push(EpochTiming {
            train_secs: (t1 - t0).as_secs_f64(),
            eval_secs: (t2 - t1).as_secs_f64(),
        });
        on_epoch(&EpochLog {
            epoch,
            loss: st.loss,
            val,
            secs: (t2 - t0).as_secs_f64(),
        });
    }
    let best_epoch = match best {
        Some((e, _, saved)) => {
            s.runner.params.load(&saved)?;
            Some(e)
        }
        None => cfg.epochs.checked_sub(1),
    };

    let p = &s.prepared;
    let constant_mean = p.target_stats.map(|ts| {
        let c = |d: &SplitData| {
            (!d.is_empty()).then(|| nrmse(&vec![ts.mean; d.len()], &d.labels, ts.std).expect("std checked"))
        };
        SplitMetrics {
            train: c(&p.train),
            val: c(&p.val),
            test: c(&p.test),
        }
    });
    let report = MetricsReport {
        task,
        model: cfg.model.kind,
        metric: metric_name(task).into(),
        train: s.score(SplitName::Train)?,
        val: s.score(SplitName::Val)?,
        test: s.score(SplitName::Test)?,
        constant_mean,
        loss_curve,
        val_curve,
        best_epoch,
        targets_per_epoch,
        train_messages_per_epoch: messages,
        eval_messages: None,
        sizes: SplitSizes {
            train: p.train.len(),
            val: p.val.len(),
            test: p.test.len(),
        },
        prune: p.summary.clone(),
    };
    let checkpoint = Checkpoint {
        config: *cfg,
        schema: store.schema.to_json(),
        feature_stats: p.stats.clone(),
        target_stats: p.target_stats,
        registry_keys: p.registry_keys.clone(),
        prune: p.summary.clone(),
        parameters: s.runner.params.save(),
    };
    Ok(TrainOutcome {
        checkpoint,
        report,
        timing,
    })
}

/// Inputs for one split of `store`, prepared the way a checkpoint's
/// training run prepared its held-out splits.
pub fn split_inputs(ckpt: &Checkpoint, store: &Store, which: SplitName) -> Result<SplitData> {
    let cfg = &ckpt.config;
    let split = split_targets(store, cfg.split, cfg.seed)?;
    let targets = match which {
        SplitName::Train => split.train.clone(),
        SplitName::Val => split.val.clone(),
        SplitName::Test => split.test.clone(),
    };
    let labels = labels_of(store, &targets);
    let inputs = match cfg.model.kind {
        ModelKind::SpareGcn | ModelKind::SpareDeepsets => {
            let dags = build_dags(store, &targets, &cfg.graph);
            if !cfg.prune.enabled {
                Inputs::Dags(dags)
            } else {
                let train_raw = build_dags(store, &split.train, &cfg.graph);
                let occ = occurrences_from(&train_raw);
                if which == SplitName::Train {
                    let rows = store.row_counts();
                    Inputs::Dags(prune_all(&dags, |d| prune(d, &occ, &cfg.prune, &rows)))
                } else {
                    let reg = ckpt.registry_keys.iter().copied().collect();
                    Inputs::Dags(prune_heldout(store, &dags, cfg, &occ, &reg))
                }
            }
        }
        ModelKind::GnnBaseline => Inputs::Graphs(
            targets
                .par_iter()
                .map(|&t| build_undirected(store, t, &cfg.graph))
                .collect(),
        ),
        ModelKind::RootOnly => Inputs::Roots,
    };
    Ok(SplitData { targets, labels, inputs })
}

/// Score a checkpoint on one split without changing any parameter.
pub fn evaluate(ckpt: &Checkpoint, store: &Store, which: SplitName) -> Result<MetricsReport> {
    let runner = ckpt.runner(store)?;
    let data = split_inputs(ckpt, store, which)?;
    let features = FeatureTable::build(store, &ckpt.feature_stats);
    let batch = ckpt.config.batch_size.max(256);
    let (preds, counter) = runner.predict(&data, &features, batch)?;
    let value = if data.is_empty() {
        None
    } else {
        Some(score_predictions(runner.task, &preds, &data.labels, runner.target_stats)?)
    };
    let mut r = MetricsReport {
        task: runner.task,
        model: ckpt.config.model.kind,
        metric: metric_name(runner.task).into(),
        train: None,
        val: None,
        test: None,
        constant_mean: None,
        loss_curve: Vec::new(),
        val_curve: Vec::new(),
        best_epoch: None,
        targets_per_epoch: Vec::new(),
        train_messages_per_epoch: Vec::new(),
        eval_messages: Some(counter),
        sizes: SplitSizes {
            train: 0,
            val: 0,
            test: 0,
        },
        prune: ckpt.prune.clone(),
    };
    match which {
        SplitName::Train => (r.train, r.sizes.train) = (value, data.len()),
        SplitName::Val => (r.val, r.sizes.val) = (value, data.len()),
        SplitName::Test => (r.test, r.sizes.test) = (value, data.len()),
    }
    Ok(r)
}

/// Predictions of a checkpoint on one split, in target order.
pub fn predict_split(ckpt: &Checkpoint, store: &Store, which: SplitName) -> Result<(Vec<TupleRef>, Vec<f64>)> {
    let runner = ckpt.runner(store)?;
    let data = split_inputs(ckpt, store, which)?;
    let features = FeatureTable::build(store, &ckpt.feature_stats);
    let (p, _) = runner.predict(&data, &features, ckpt.config.batch_size.max(256))?;
    Ok((data.targets, p))
}
