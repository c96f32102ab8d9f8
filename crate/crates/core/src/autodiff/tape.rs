//! Reverse-mode tape. Every op appends a node holding its forward value;
//! `backward` walks the nodes in reverse and adds parameter gradients into
//! the [`ParameterSet`] they were bound from.

use std::collections::HashMap;

use super::params::{ParamId, ParameterSet};
use super::tensor::{matmul, matmul_nt_acc, matmul_tn_acc, Tensor};
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct Var(usize);

#[derive(Debug, Clone)]
enum Op {
    Constant,
    Param(ParamId),
    MatMul(Var, Var),
    AddBias(Var, Var),
    Add(Var, Var),
    Mul(Var, Var),
    Scale(Var, f64),
    Relu(Var),
    Concat(Vec<Var>),
    Gather { sources: Vec<Var>, index: Vec<(u32, u32)> },
    Segment { x: Var, offsets: Vec<u32>, mean: bool },
    Sum(Var),
    Mse { pred: Var, target: Vec<f64> },
    Bce { logits: Var, labels: Vec<f64> },
}

#[derive(Debug, Clone)]
struct Node {
    value: Tensor,
    op: Op,
}

#[derive(Debug, Default)]
pub struct Tape {
    nodes: Vec<Node>,
    bound: HashMap<ParamId, Var>,
}

fn segment_check(rows: usize, offsets: &[u32]) -> Result<()> {
    let ok = offsets.first() == Some(&0)
        && offsets.last().map(|&o| o as usize) == Some(rows)
        && offsets.windows(2).all(|w| w[0] <= w[1]);
    if ok {
        Ok(())
    } else {
        Err(Error::BadOffsets { rows })
    }
}

impl Tape {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    fn push(&mut self, value: Tensor, op: Op) -> Var {
        self.nodes.push(Node { value, op });
        Var(self.nodes.len() - 1)
    }

    pub fn value(&self, v: Var) -> &Tensor {
        &self.nodes[v.0].value
    }

    pub fn constant(&mut self, t: Tensor) -> Var {
        self.push(t, Op::Constant)
    }

    /// Bind a parameter; binding the same one twice returns the same var.
    pub fn param(&mut self, params: &ParameterSet, id: ParamId) -> Var {
        if let Some(&v) = self.bound.get(&id) {
            return v;
        }
        let v = self.push(params.value(id).clone(), Op::Param(id));
        self.bound.insert(id, v);
        v
    }

    pub fn matmul(&mut self, a: Var, b: Var) -> Result<Var> {
        let (av, bv) = (self.value(a), self.value(b));
        if av.cols() != bv.rows() {
            return Err(Error::shape(
                "matmul",
                format!("{:?} x {:?}", av.shape(), bv.shape()),
            ));
        }
        let out = matmul(av, bv);
        Ok(self.push(out, Op::MatMul(a, b)))
    }

    /// Adds a `1 x m` row to every row of `x`.
    pub fn add_bias(&mut self, x: Var, b: Var) -> Result<Var> {
        let (xv, bv) = (self.value(x), self.value(b));
        if bv.rows() != 1 || bv.cols() != xv.cols() {
            return Err(Error::shape(
                "add_bias",
                format!("{:?} + {:?}", xv.shape(), bv.shape()),
            ));
        }
        let mut out = xv.clone();
        for r in 0..out.rows() {
            for (o, &c) in out.row_slice_mut(r).iter_mut().zip(bv.data()) {
                *o += c;
            }
        }
        Ok(self.push(out, Op::AddBias(x, b)))
    }

    fn same_shape(&self, op: &'static str, a: Var, b: Var) -> Result<()> {
        let (sa, sb) = (self.value(a).shape(), self.value(b).shape());
        if sa != sb {
            return Err(Error::shape(op, format!("{sa:?} vs {sb:?}")));
        }
        Ok(())
    }

    pub fn add(&mut self, a: Var, b: Var) -> Result<Var> {
        self.same_shape("add", a, b)?;
        let mut out = self.value(a).clone();
        out.add_assign(self.value(b));
        Ok(self.push(out, Op::Add(a, b)))
    }

    /// Elementwise product.
    pub fn mul(&mut self, a: Var, b: Var) -> Result<Var> {
        self.same_shape("mul", a, b)?;
        let mut out = self.value(a).clone();
        for (o, &y) in out.data_mut().iter_mut().zip(self.value(b).data()) {
            *o *= y;
        }
        Ok(self.push(out, Op::Mul(a, b)))
    }

    pub fn scale(&mut self, x: Var, c: f64) -> Var {
        let mut out = self.value(x).clone();
        out.data_mut().iter_mut().for_each(|v| *v *= c);
        self.push(out, Op::Scale(x, c))
    }

    pub fn relu(&mut self, x: Var) -> Var {
        let mut out = self.value(x).clone();
        out.data_mut().iter_mut().for_each(|v| *v = v.max(0.0));
        self.push(out, Op::Relu(x))
    }

    /// Horizontal concatenation; all parts need the same row count.
    pub fn concat(&mut self, parts: &[Var]) -> Result<Var> {
        let rows = parts.first().map_or(0, |&p| self.value(p).rows());
        if parts.iter().any(|&p| self.value(p).rows() != rows) {
            return Err(Error::shape("concat", "row counts differ"));
        }
        let cols: usize = parts.iter().map(|&p| self.value(p).cols()).sum();
        let mut out = Tensor::zeros(rows, cols);
        for r in 0..rows {
            let dst = out.row_slice_mut(r);
            let mut c = 0;
            for &p in parts {
                let src = self.nodes[p.0].value.row_slice(r);
                dst[c..c + src.len()].copy_from_slice(src);
                c += src.len();
            }
        }
        Ok(self.push(out, Op::Concat(parts.to_vec())))
    }

    /// Row `i` of the output is row `index[i].1` of `sources[index[i].0]`.
    pub fn gather(&mut self, sources: &[Var], index: Vec<(u32, u32)>) -> Result<Var> {
        let cols = match sources.first() {
            Some(&s) => self.value(s).cols(),
            None if index.is_empty() => 0,
            None => return Err(Error::shape("gather", "no sources")),
        };
        if sources.iter().any(|&s| self.value(s).cols() != cols) {
            return Err(Error::shape("gather", "source widths differ"));
        }
        let mut out = Tensor::zeros(index.len(), cols);
        for (i, &(s, r)) in index.iter().enumerate() {
            let src = sources
                .get(s as usize)
                .map(|&v| &self.nodes[v.0].value)
                .filter(|t| (r as usize) < t.rows())
                .ok_or_else(|| Error::shape("gather", format!("index ({s}, {r}) out of range")))?;
            out.row_slice_mut(i).copy_from_slice(src.row_slice(r as usize));
        }
        Ok(self.push(
            out,
            Op::Gather {
                sources: sources.to_vec(),
                index,
            },
        ))
    }

    fn segment(&mut self, x: Var, offsets: &[u32], mean: bool) -> Result<Var> {
        let xv = self.value(x);
        segment_check(xv.rows(), offsets)?;
        let n = offsets.len() - 1;
        let mut out = Tensor::zeros(n, xv.cols());
        for s in 0..n {
            let (a, b) = (offsets[s] as usize, offsets[s + 1] as usize);
            let dst = out.row_slice_mut(s);
            for r in a..b {
                for (o, &v) in dst.iter_mut().zip(xv.row_slice(r)) {
                    *o += v;
                }
            }
            if mean && b > a {
                let k = (b - a) as f64;
                dst.iter_mut().for_each(|o| *o /= k);
            }
        }
        Ok(self.push(
            out,
            Op::Segment {
                x,
                offsets: offsets.to_vec(),
                mean,
            },
        ))
    }

    /// Sum of rows `offsets[s] .. offsets[s+1]` for each segment `s`.
    pub fn segment_sum(&mut self, x: Var, offsets: &[u32]) -> Result<Var> {
        self.segment(x, offsets, false)
    }

    /// Mean per segment; an empty segment yields a zero row.
    pub fn segment_mean(&mut self, x: Var, offsets: &[u32]) -> Result<Var> {
        self.segment(x, offsets, true)
    }

    /// Sum of all elements, as a `1 x 1` value.
    pub fn sum(&mut self, x: Var) -> Var {
        let s = self.value(x).data().iter().sum();
        self.push(Tensor::scalar(s), Op::Sum(x))
    }

    /// Mean squared error of an `n x 1` prediction.
    pub fn mse(&mut self, pred: Var, target: &[f64]) -> Result<Var> {
        let p = self.value(pred);
        if p.cols() != 1 || p.rows() != target.len() || target.is_empty() {
            return Err(Error::shape(
                "mse",
                format!("{:?} against {} targets", p.shape(), target.len()),
            ));
        }
        let s: f64 = p
            .data()
            .iter()
            .zip(target)
            .map(|(a, b)| (a - b) * (a - b))
            .sum();
        let v = s / target.len() as f64;
        Ok(self.push(
            Tensor::scalar(v),
            Op::Mse {
                pred,
                target: target.to_vec(),
            },
        ))
    }

    /// Mean binary cross-entropy on logits, labels in {0, 1}.
    pub fn bce_with_logits(&mut self, logits: Var, labels: &[f64]) -> Result<Var> {
        let z = self.value(logits);
        if z.cols() != 1 || z.rows() != labels.len() || labels.is_empty() {
            return Err(Error::shape(
                "bce",
                format!("{:?} against {} labels", z.shape(), labels.len()),
            ));
        }
        // max(z,0) - z*y + ln(1 + e^-|z|)
        let s: f64 = z
            .data()
            .iter()
            .zip(labels)
            .map(|(&z, &y)| z.max(0.0) - z * y + (-z.abs()).exp().ln_1p())
            .sum();
        let v = s / labels.len() as f64;
        Ok(self.push(
            Tensor::scalar(v),
            Op::Bce {
                logits,
                labels: labels.to_vec(),
            },
        ))
    }

    /// Backpropagate from a scalar and add parameter gradients into `params`.
    pub fn backward(&self, loss: Var, params: &mut ParameterSet) -> Result<()> {
        let lv = self.value(loss);
        if lv.shape() != (1, 1) {
            return Err(Error::NonScalarLoss {
                rows: lv.rows(),
                cols: lv.cols(),
            });
        }
        let mut grads: Vec<Option<Tensor>> = vec![None; loss.0 + 1];
        grads[loss.0] = Some(Tensor::scalar(1.0));

        for i in (0..=loss.0).rev() {
            let Some(g) = grads[i].take() else { continue };
            let node = &self.nodes[i];
            let acc = |v: Var, grads: &mut Vec<Option<Tensor>>, f: &dyn Fn(&mut Tensor)| {
                let slot = grads[v.0].get_or_insert_with(|| {
                    let (r, c) = self.nodes[v.0].value.shape();
                    Tensor::zeros(r, c)
                });
                f(slot);
            };
            match &node.op {
                Op::Constant => {}
                Op::Param(id) => params.grad_mut(*id).add_assign(&g),
                Op::MatMul(a, b) => {
                    let (av, bv) = (self.value(*a), self.value(*b));
                    acc(*a, &mut grads, &|s| matmul_nt_acc(&g, bv, s));
                    acc(*b, &mut grads, &|s| matmul_tn_acc(av, &g, s));
                }
                Op::AddBias(x, b) => {
                    acc(*x, &mut grads, &|s| s.add_assign(&g));
                    acc(*b, &mut grads, &|s| {
                        for r in 0..g.rows() {
                            for (o, &v) in s.data_mut().iter_mut().zip(g.row_slice(r)) {
                                *o += v;
                            }
                        }
                    });
                }
                Op::Add(a, b) => {
                    acc(*a, &mut grads, &|s| s.add_assign(&g));
                    acc(*b, &mut grads, &|s| s.add_assign(&g));
                }
                Op::Mul(a, b) => {
                    let (av, bv) = (self.value(*a), self.value(*b));
                    acc(*a, &mut grads, &|s| {
                        for ((o, &gv), &y) in s.data_mut().iter_mut().zip(g.data()).zip(bv.data()) {
                            *o += gv * y;
                        }
                    });
                    acc(*b, &mut grads, &|s| {
                        for ((o, &gv), &x) in s.data_mut().iter_mut().zip(g.data()).zip(av.data()) {
                            *o += gv * x;
                        }
                    });
                }
                Op::Scale(x, c) => acc(*x, &mut grads, &|s| {
                    for (o, &gv) in s.data_mut().iter_mut().zip(g.data()) {
                        *o += c * gv;
                    }
                }),
                Op::Relu(x) => {
                    let out = &node.value;
                    acc(*x, &mut grads, &|s| {
                        for ((o, &gv), &y) in s.data_mut().iter_mut().zip(g.data()).zip(out.data()) {
                            if y > 0.0 {
                                *o += gv;
                            }
                        }
                    });
                }
                Op::Concat(parts) => {
                    let mut c0 = 0;
                    for &p in parts {
                        let w = self.value(p).cols();
                        acc(p, &mut grads, &|s| {
                            for r in 0..g.rows() {
                                let src = &g.row_slice(r)[c0..c0 + w];
                                for (o, &v) in s.row_slice_mut(r).iter_mut().zip(src) {
                                    *o += v;
                                }
                            }
                        });
                        c0 += w;
                    }
                }
                Op::Gather { sources, index } => {
                    for (k, &src) in sources.iter().enumerate() {
                        acc(src, &mut grads, &|s| {
                            for (i, &(si, r)) in index.iter().enumerate() {
                                if si as usize == k {
                                    for (o, &v) in s.row_slice_mut(r as usize).iter_mut().zip(g.row_slice(i)) {
                                        *o += v;
                                    }
                                }
                            }
                        });
                    }
                }
                Op::Segment { x, offsets, mean } => acc(*x, &mut grads, &|s| {
                    for seg in 0..offsets.len() - 1 {
                        let (a, b) = (offsets[seg] as usize, offsets[seg + 1] as usize);
                        let k = if *mean && b > a { 1.0 / (b - a) as f64 } else { 1.0 };
                        let gr = g.row_slice(seg);
                        for r in a..b {
                            for (o, &v) in s.row_slice_mut(r).iter_mut().zip(gr) {
                                *o += k * v;
                            }
                        }
                    }
                }),
                Op::Sum(x) => {
                    let gv = g.item();
                    acc(*x, &mut grads, &|s| s.data_mut().iter_mut().for_each(|o| *o += gv));
                }
                Op::Mse { pred, target } => {
                    let p = self.value(*pred);
                    let k = 2.0 * g.item() / target.len() as f64;
                    acc(*pred, &mut grads, &|s| {
                        for ((o, &a), &b) in s.data_mut().iter_mut().zip(p.data()).zip(target) {
                            *o += k * (a - b);
                        }
                    });
                }
                Op::Bce { logits, labels } => {
                    let z = self.value(*logits);
                    let k = g.item() / labels.len() as f64;
                    acc(*logits, &mut grads, &|s| {
                        for ((o, &z), &y) in s.data_mut().iter_mut().zip(z.data()).zip(labels) {
                            *o += k * (sigmoid(z) - y);
                        }
                    });
                }
            }
        }
        Ok(())
    }
}

pub fn sigmoid(z: f64) -> f64 {
    if z >= 0.0 {
        1.0 / (1.0 + (-z).exp())
    } else {
        let e = z.exp();
        e / (1.0 + e)
    }
}
