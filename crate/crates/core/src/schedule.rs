//! Level-by-level execution plans for batches of DAGs.
//!
//! Every vertex is placed at its height (longest path from a leaf), so all
//! vertices of one level depend only on earlier levels and can be computed
//! together, across every DAG of the batch. Slots are numbered level-major;
//! children of each slot are stored as one contiguous segment.

use crate::error::{Error, Result};
use crate::graph::{topological_order, EmbeddingKey, TargetDag};
use crate::store::{Direction, TupleRef};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct Slot {
    pub dag: u32,
    pub vertex: u32,
    pub tuple: TupleRef,
    pub embedding: Option<EmbeddingKey>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct ChildLabel {
    pub relation: u32,
    pub direction: Direction,
    pub same_depth: bool,
}

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Level {
    /// Slots `start .. start + len` belong to this level.
    pub start: u32,
    pub len: u32,
    /// Flattened child slot indices; node `i` of the level owns
    /// `children[offsets[i] .. offsets[i + 1]]`.
    pub children: Vec<u32>,
    pub offsets: Vec<u32>,
    pub labels: Vec<ChildLabel>,
}

impl Level {
    pub fn slots(&self) -> std::ops::Range<u32> {
        self.start..self.start + self.len
    }

    pub fn children_of(&self, i: usize) -> &[u32] {
        &self.children[self.offsets[i] as usize..self.offsets[i + 1] as usize]
    }
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Hash)]
pub struct BatchSchedule {
    pub slots: Vec<Slot>,
    pub levels: Vec<Level>,
    /// Root slot of each DAG, in batch order.
    pub roots: Vec<u32>,
    pub num_edges: usize,
}

impl BatchSchedule {
    pub fn num_dags(&self) -> usize {
        self.roots.len()
    }

    pub fn num_slots(&self) -> usize {
        self.slots.len()
    }

    /// Level containing a slot, and its position within that level.
    pub fn locate(&self, slot: u32) -> (usize, usize) {
        let l = self.levels.partition_point(|lv| lv.start + lv.len <= slot);
        (l, (slot - self.levels[l].start) as usize)
    }

    /// Visit every slot in execution order with its child segment.
    pub fn replay(&self, mut visit: impl FnMut(&Slot, &[u32], &[ChildLabel])) {
        for lv in &self.levels {
            for (i, s) in lv.slots().enumerate() {
                let r = lv.offsets[i] as usize..lv.offsets[i + 1] as usize;
                visit(&self.slots[s as usize], &lv.children[r.clone()], &lv.labels[r]);
            }
        }
    }

    pub fn level_sizes(&self) -> Vec<usize> {
        self.levels.iter().map(|l| l.len as usize).collect()
    }
}

/// Height of every vertex: 0 without incoming edges, otherwise one more
/// than the highest child.
pub fn height_rank(dag: &TargetDag) -> Result<Vec<u32>> {
    let order = topological_order(dag.vertices.len(), &dag.edges).ok_or(Error::CycleDetected)?;
    let inc = dag.in_edges();
    let mut h = vec![0u32; dag.vertices.len()];
    for v in order {
        h[v as usize] = inc[v as usize]
            .iter()
            .map(|&k| h[dag.edges[k as usize].src as usize] + 1)
            .max()
            .unwrap_or(0);
    }
    Ok(h)
}

pub fn build_schedule<'a>(dags: impl IntoIterator<Item = &'a TargetDag>) -> Result<BatchSchedule> {
    let dags: Vec<&TargetDag> = dags.into_iter().collect();
    let heights = dags.iter().map(|d| height_rank(d)).collect::<Result<Vec<_>>>()?;
    let levels_needed = heights
        .iter()
        .flat_map(|h| h.iter().copied())
        .max()
        .map_or(0, |m| m as usize + 1);

    // (dag, vertex) per level, in batch order then vertex order
    let mut by_level: Vec<Vec<(u32, u32)>> = vec![Vec::new(); levels_needed];
    for (d, h) in heights.iter().enumerate() {
        for (v, &hv) in h.iter().enumerate() {
            by_level[hv as usize].push((d as u32, v as u32));
        }
    }

    let mut slot_of: Vec<Vec<u32>> = dags.iter().map(|d| vec![0; d.vertices.len()]).collect();
    let mut slots = Vec::new();
    for members in &by_level {
        for &(d, v) in members {
            slot_of[d as usize][v as usize] = slots.len() as u32;
            let vx = &dags[d as usize].vertices[v as usize];
            slots.push(Slot {
                dag: d,
                vertex: v,
                tuple: vx.tuple,
                embedding: vx.marker,
            });
        }
    }

    let incoming: Vec<Vec<Vec<u32>>> = dags.iter().map(|d| d.in_edges()).collect();
    let mut levels = Vec::with_capacity(levels_needed);
    let mut start = 0u32;
    let mut num_edges = 0;
    for members in &by_level {
        let mut children = Vec::new();
        let mut labels = Vec::new();
        let mut offsets = Vec::with_capacity(members.len() + 1);
        offsets.push(0u32);
        for &(d, v) in members {
            let dag = dags[d as usize];
            let mut seg: Vec<(TupleRef, u32, Direction, u32, bool)> = incoming[d as usize][v as usize]
                .iter()
                .map(|&k| {
                    let e = &dag.edges[k as usize];
                    (
                        dag.vertices[e.src as usize].tuple,
                        e.relation,
                        e.direction,
                        slot_of[d as usize][e.src as usize],
                        dag.is_same_depth(e),
                    )
                })
                .collect();
            seg.sort_unstable();
            for (_, relation, direction, slot, same_depth) in seg {
                children.push(slot);
                labels.push(ChildLabel {
                    relation,
                    direction,
                    same_depth,
                });
            }
            offsets.push(children.len() as u32);
        }
        num_edges += children.len();
        levels.push(Level {
            start,
            len: members.len() as u32,
            children,
            offsets,
            labels,
        });
        start += members.len() as u32;
    }

    let roots = dags
        .iter()
        .enumerate()
        .map(|(d, dag)| slot_of[d][dag.root as usize])
        .collect();
    Ok(BatchSchedule {
        slots,
        levels,
        roots,
        num_edges,
    })
}

/// Number of sequential steps: one per level.
pub fn sequential_depth(s: &BatchSchedule) -> usize {
    s.levels.len()
}
