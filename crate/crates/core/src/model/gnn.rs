//! T rounds of undirected message passing with a mean readout.

use rand::Rng;

use super::encoder::{head, Encoders, FeatureTable};
use super::MessageCounter;
use crate::autodiff::{Mlp, ParamId, ParameterSet, Tape, Tensor, Var};
use crate::error::{Error, Result};
use crate::graph::UndirectedTupleGraph;
use crate::store::{FeatureStats, TupleRef};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct RoundParams {
    /// `[h_sender ; relation] -> hidden`
    pub w_msg: ParamId,
    pub w_self: ParamId,
    pub bias: ParamId,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct GnnModel {
    pub encoders: Encoders,
    /// `2R` rows, indexed by relation and direction as seen from the sender.
    pub relation_emb: ParamId,
    pub rounds: Vec<RoundParams>,
    pub head: Mlp,
}

/// Message plan for a batch of graphs. Vertices of each graph are laid out
/// in global order, so storage order inside the input graphs is irrelevant.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct GnnBatch {
    pub vertices: Vec<TupleRef>,
    /// Graph `g` owns vertices `graph_offsets[g] .. graph_offsets[g + 1]`.
    pub graph_offsets: Vec<u32>,
    /// Directed messages sorted by receiver; receiver `v` owns
    /// `senders[recv_offsets[v] .. recv_offsets[v + 1]]`.
    pub senders: Vec<u32>,
    pub labels: Vec<u32>,
    pub recv_offsets: Vec<u32>,
    pub num_edges: usize,
}

impl GnnBatch {
    pub fn new<'a>(graphs: impl IntoIterator<Item = &'a UndirectedTupleGraph>) -> Self {
        let mut b = GnnBatch {
            graph_offsets: vec![0],
            ..Default::default()
        };
        let mut msgs: Vec<(u32, u32, u32)> = Vec::new();
        for g in graphs {
            let base = b.vertices.len() as u32;
            let mut order: Vec<u32> = (0..g.vertices.len() as u32).collect();
            order.sort_by_key(|&i| g.vertices[i as usize].tuple);
            let mut pos = vec![0u32; order.len()];
            for (p, &i) in order.iter().enumerate() {
                pos[i as usize] = base + p as u32;
                b.vertices.push(g.vertices[i as usize].tuple);
            }
            for e in &g.edges {
                let (u, v) = (pos[e.u as usize], pos[e.v as usize]);
                let rel = e.relation * 2;
                msgs.push((v, u, rel + e.direction.index() as u32));
                msgs.push((u, v, rel + e.direction.flip().index() as u32));
            }
            b.num_edges += g.edges.len();
            b.graph_offsets.push(b.vertices.len() as u32);
        }
        msgs.sort_unstable();
        let mut recv_offsets = vec![0u32; b.vertices.len() + 1];
        for &(r, _, _) in &msgs {
            recv_offsets[r as usize + 1] += 1;
        }
        for i in 0..b.vertices.len() {
            recv_offsets[i + 1] += recv_offsets[i];
        }
        b.recv_offsets = recv_offsets;
        b.senders = msgs.iter().map(|m| m.1).collect();
        b.labels = msgs.iter().map(|m| m.2).collect();
        b
    }

    pub fn num_graphs(&self) -> usize {
        self.graph_offsets.len() - 1
    }
}

impl GnnModel {
    #[allow(clippy::too_many_arguments)]
    pub fn new(
        params: &mut ParameterSet,
        stats: &FeatureStats,
        num_relations: usize,
        hidden: usize,
        cat_dim: usize,
        rel_dim: usize,
        encoder_layers: usize,
        head_layers: usize,
        rounds: usize,
        rng: &mut impl Rng,
    ) -> Result<Self> {
        if rounds == 0 {
            return Err(Error::Config("gnn rounds must be at least 1".into()));
        }
        let encoders = Encoders::new(params, stats, hidden, cat_dim, encoder_layers, rng)?;
        let rel: Vec<f64> = (0..(2 * num_relations).max(1) * rel_dim)
            .map(|_| rng.random_range(-0.5..0.5))
            .collect();
        let relation_emb = params.add(
            "gnn.rel",
            Tensor::from_vec((2 * num_relations).max(1), rel_dim, rel)?,
        )?;
        let rounds = (0..rounds)
            .map(|t| {
                Ok(RoundParams {
                    w_msg: params.add_weight(format!("gnn.{t}.w_msg"), hidden + rel_dim, hidden, rng)?,
                    w_self: params.add_weight(format!("gnn.{t}.w_self"), hidden, hidden, rng)?,
                    bias: params.add_zeros(format!("gnn.{t}.b"), 1, hidden)?,
                })
            })
            .collect::<Result<_>>()?;
        let head = head(params, "gnn.head", hidden, head_layers, rng)?;
        Ok(GnnModel {
            encoders,
            relation_emb,
            rounds,
            head,
        })
    }

    pub fn encode(&self, tape: &mut Tape, params: &ParameterSet, batch: &GnnBatch, features: &FeatureTable) -> Result<Var> {
        let enc = self.encoders.encode(tape, params, features, batch.vertices.iter().copied())?;
        let idx = batch.vertices.iter().map(|&t| enc.locate(t)).collect();
        tape.gather(&enc.sources, idx)
    }

    pub fn forward(
        &self,
        tape: &mut Tape,
        params: &ParameterSet,
        batch: &GnnBatch,
        features: &FeatureTable,
        counter: &mut MessageCounter,
    ) -> Result<Var> {
        let mut h = self.encode(tape, params, batch, features)?;
        let rel = tape.param(params, self.relation_emb);
        for r in &self.rounds {
            h = mp_round(tape, params, r, rel, h, batch)?;
            counter.messages += 2 * batch.num_edges as u64;
            counter.state_updates += batch.vertices.len() as u64;
        }
        self.readout(tape, params, h, &batch.graph_offsets)
    }

    /// Mean over each graph's vertex states, then the head.
    pub fn readout(&self, tape: &mut Tape, params: &ParameterSet, h: Var, graph_offsets: &[u32]) -> Result<Var> {
        let pooled = tape.segment_mean(h, graph_offsets)?;
        self.head.apply(tape, params, pooled)
    }
}

/// `h'_v = relu(W_self h_v + mean_{w -> v} W_msg [h_w ; rel] + b)`
pub fn mp_round(
    tape: &mut Tape,
    params: &ParameterSet,
    round: &RoundParams,
    relation_emb: Var,
    h: Var,
    batch: &GnnBatch,
) -> Result<Var> {
    let ws = tape.param(params, round.w_self);
    let b = tape.param(params, round.bias);
    let mut x = tape.matmul(h, ws)?;
    if !batch.senders.is_empty() {
        let hs = tape.gather(&[h], batch.senders.iter().map(|&s| (0, s)).collect())?;
        let rs = tape.gather(&[relation_emb], batch.labels.iter().map(|&l| (0, l)).collect())?;
        let m = tape.concat(&[hs, rs])?;
        let wm = tape.param(params, round.w_msg);
        let m = tape.matmul(m, wm)?;
        let incoming = tape.segment_mean(m, &batch.recv_offsets)?;
        x = tape.add(x, incoming)?;
    }
    let x = tape.add_bias(x, b)?;
    Ok(tape.relu(x))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::{GraphEdge, GraphVertex};
    use crate::store::Direction;

    fn two_vertex() -> UndirectedTupleGraph {
        UndirectedTupleGraph {
            target: TupleRef::new(0, 0),
            vertices: vec![
                GraphVertex {
                    tuple: TupleRef::new(0, 0),
                    depth: 0,
                },
                GraphVertex {
                    tuple: TupleRef::new(1, 0),
                    depth: 1,
                },
            ],
            edges: vec![GraphEdge {
                u: 0,
                v: 1,
                relation: 0,
                direction: Direction::Forward,
            }],
        }
    }

    #[test]
    fn two_vertex_round_by_hand() {
        let mut ps = ParameterSet::new();
        // message = [h ; rel] · [1 ; 0]
        let r = RoundParams {
            w_msg: ps.add("wm", Tensor::from_vec(2, 1, vec![1.0, 0.0]).unwrap()).unwrap(),
            w_self: ps.add("ws", Tensor::scalar(1.0)).unwrap(),
            bias: ps.add("b", Tensor::scalar(0.0)).unwrap(),
        };
        let batch = GnnBatch::new([&two_vertex()]);
        assert_eq!(batch.senders, vec![1, 0]);
        let mut t = Tape::new();
        let rel = t.constant(Tensor::from_vec(2, 1, vec![0.25, -0.5]).unwrap());
        let h = t.constant(Tensor::from_vec(2, 1, vec![1.0, 2.0]).unwrap());
        let h1 = mp_round(&mut t, &ps, &r, rel, h, &batch).unwrap();
        assert_eq!(t.value(h1).data(), &[3.0, 3.0]);
    }

    #[test]
    fn storage_order_does_not_matter() {
        let g = two_vertex();
        let mut flipped = g.clone();
        flipped.vertices.swap(0, 1);
        flipped.edges[0] = GraphEdge {
            u: 0,
            v: 1,
            relation: 0,
            direction: Direction::Reverse,
        };
        assert_eq!(GnnBatch::new([&g]), GnnBatch::new([&flipped]));
    }
}
