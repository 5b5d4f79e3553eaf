//! Tape-based reverse-mode differentiation over batched matrices.
//!
//! Every op appends a node holding its forward value. `backward` walks the
//! tape in reverse and returns gradients for the parameters bound into the
//! graph. Constants (inputs, REINFORCE coefficients, masks) carry no gradient.

use super::params::{Gradients, ParamId, ParamStore};
use super::tensor::{gemm_nn, gemm_nt, gemm_tn, Tensor};
use crate::error::{Error, Result};

pub type NodeId = usize;

#[derive(Debug, Clone)]
enum Op {
    Constant,
    Param,
    MatMulT { x: NodeId, w: NodeId },
    AddBias { x: NodeId, b: NodeId },
    Add(NodeId, NodeId),
    Mul(NodeId, NodeId),
    Sigmoid(NodeId),
    Tanh(NodeId),
    Interpolate { z: NodeId, n: NodeId, h: NodeId },
    Embed { table: NodeId, idx: Vec<usize> },
    Broadcast { x: NodeId },
    SelectRows { new: NodeId, old: NodeId, mask: Vec<bool> },
    LogSoftmax { x: NodeId, blocks: Vec<(usize, usize)> },
    PickSum { x: NodeId, idx: Vec<Vec<usize>> },
    Entropy { logp: NodeId },
    WeightedSum { x: NodeId, weights: Vec<f64> },
    Scale { x: NodeId, factor: f64 },
}

impl Op {
    fn name(&self) -> &'static str {
        match self {
            Op::Constant => "constant",
            Op::Param => "param",
            Op::MatMulT { .. } => "matmul",
            Op::AddBias { .. } => "add_bias",
            Op::Add(..) => "add",
            Op::Mul(..) => "mul",
            Op::Sigmoid(_) => "sigmoid",
            Op::Tanh(_) => "tanh",
            Op::Interpolate { .. } => "interpolate",
            Op::Embed { .. } => "embed",
            Op::Broadcast { .. } => "broadcast",
            Op::SelectRows { .. } => "select_rows",
            Op::LogSoftmax { .. } => "log_softmax",
            Op::PickSum { .. } => "pick_sum",
            Op::Entropy { .. } => "entropy",
            Op::WeightedSum { .. } => "weighted_sum",
            Op::Scale { .. } => "scale",
        }
    }
}

struct Node {
    value: Tensor,
    op: Op,
    needs_grad: bool,
}

#[derive(Default)]
pub struct Graph {
    nodes: Vec<Node>,
    bound: Vec<Option<NodeId>>,
    non_finite: Option<&'static str>,
}

fn sigmoid(x: f64) -> f64 {
    if x >= 0.0 {
        1.0 / (1.0 + (-x).exp())
    } else {
        let e = x.exp();
        e / (1.0 + e)
    }
}

impl Graph {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn value(&self, id: NodeId) -> &Tensor {
        &self.nodes[id].value
    }

    /// Error if any op so far produced NaN or infinity.
    pub fn check_finite(&self) -> Result<()> {
        match self.non_finite {
            Some(op) => Err(Error::NonFinite(op)),
            None => Ok(()),
        }
    }

    fn push(&mut self, value: Tensor, op: Op) -> NodeId {
        if self.non_finite.is_none() && !value.is_finite() {
            self.non_finite = Some(op.name());
        }
        let needs_grad = match &op {
            Op::Constant => false,
            Op::Param => true,
            _ => self.parents(&op).iter().any(|&p| self.nodes[p].needs_grad),
        };
        self.nodes.push(Node { value, op, needs_grad });
        self.nodes.len() - 1
    }

    fn parents(&self, op: &Op) -> Vec<NodeId> {
        match *op {
            Op::Constant | Op::Param => vec![],
            Op::MatMulT { x, w } => vec![x, w],
            Op::AddBias { x, b } => vec![x, b],
            Op::Add(a, b) | Op::Mul(a, b) => vec![a, b],
            Op::Sigmoid(a) | Op::Tanh(a) => vec![a],
            Op::Interpolate { z, n, h } => vec![z, n, h],
            Op::Embed { table, .. } => vec![table],
            Op::Broadcast { x } => vec![x],
            Op::SelectRows { new, old, .. } => vec![new, old],
            Op::LogSoftmax { x, .. } | Op::PickSum { x, .. } => vec![x],
            Op::Entropy { logp } => vec![logp],
            Op::WeightedSum { x, .. } | Op::Scale { x, .. } => vec![x],
        }
    }

    pub fn constant(&mut self, value: Tensor) -> NodeId {
        self.push(value, Op::Constant)
    }

    /// Binds a stored parameter; repeated calls return the same node.
    pub fn param(&mut self, store: &ParamStore, id: ParamId) -> NodeId {
        if self.bound.len() < store.len() {
            self.bound.resize(store.len(), None);
        }
        if let Some(node) = self.bound[id] {
            return node;
        }
        let node = self.push(store.value(id).clone(), Op::Param);
        self.bound[id] = Some(node);
        node
    }

    /// `x · wᵀ` for `x: B×in`, `w: out×in`.
    pub fn matmul_t(&mut self, x: NodeId, w: NodeId) -> NodeId {
        let (xv, wv) = (&self.nodes[x].value, &self.nodes[w].value);
        assert_eq!(xv.cols(), wv.cols(), "matmul_t: input width {} vs weight width {}", xv.cols(), wv.cols());
        let mut out = Tensor::zeros(xv.rows(), wv.rows());
        gemm_nt(1.0, xv, wv, 0.0, &mut out);
        self.push(out, Op::MatMulT { x, w })
    }

    /// Adds a `1×n` bias row to every row of `x`.
    pub fn add_bias(&mut self, x: NodeId, b: NodeId) -> NodeId {
        let bv = self.nodes[b].value.clone();
        let mut out = self.nodes[x].value.clone();
        assert_eq!((1, out.cols()), bv.shape(), "add_bias shape");
        for r in 0..out.rows() {
            for (o, bb) in out.row_mut(r).iter_mut().zip(bv.data()) {
                *o += bb;
            }
        }
        self.push(out, Op::AddBias { x, b })
    }

    /// `x · wᵀ + b`.
    pub fn linear(&mut self, x: NodeId, w: NodeId, b: NodeId) -> NodeId {
        let y = self.matmul_t(x, w);
        self.add_bias(y, b)
    }

    pub fn add(&mut self, a: NodeId, b: NodeId) -> NodeId {
        let out = self.nodes[a].value.zip_map(&self.nodes[b].value, |x, y| x + y);
        self.push(out, Op::Add(a, b))
    }

    pub fn mul(&mut self, a: NodeId, b: NodeId) -> NodeId {
        let out = self.nodes[a].value.zip_map(&self.nodes[b].value, |x, y| x * y);
        self.push(out, Op::Mul(a, b))
    }

    pub fn sigmoid(&mut self, a: NodeId) -> NodeId {
        let out = self.nodes[a].value.map(sigmoid);
        self.push(out, Op::Sigmoid(a))
    }

    pub fn tanh(&mut self, a: NodeId) -> NodeId {
        let out = self.nodes[a].value.map(f64::tanh);
        self.push(out, Op::Tanh(a))
    }

    /// `n + z ∘ (h − n)`, i.e. `(1 − z) ∘ n + z ∘ h`.
    pub fn interpolate(&mut self, z: NodeId, n: NodeId, h: NodeId) -> NodeId {
        let (zv, nv, hv) = (&self.nodes[z].value, &self.nodes[n].value, &self.nodes[h].value);
        assert!(zv.shape() == nv.shape() && nv.shape() == hv.shape(), "interpolate shapes");
        let data = zv
            .data()
            .iter()
            .zip(nv.data())
            .zip(hv.data())
            .map(|((&z, &n), &h)| n + z * (h - n))
            .collect();
        let out = Tensor::from_vec(zv.rows(), zv.cols(), data).expect("shape");
        self.push(out, Op::Interpolate { z, n, h })
    }

    /// Row lookup: output row `b` is `table[idx[b]]`.
    pub fn embed(&mut self, table: NodeId, idx: &[usize]) -> NodeId {
        let t = &self.nodes[table].value;
        let mut out = Tensor::zeros(idx.len(), t.cols());
        for (b, &i) in idx.iter().enumerate() {
            assert!(i < t.rows(), "embedding index {i} out of range {}", t.rows());
            out.row_mut(b).copy_from_slice(t.row(i));
        }
        self.push(out, Op::Embed { table, idx: idx.to_vec() })
    }

    /// Repeats a `1×n` row `rows` times.
    pub fn broadcast(&mut self, x: NodeId, rows: usize) -> NodeId {
        let xv = &self.nodes[x].value;
        assert_eq!(xv.rows(), 1, "broadcast expects a row vector");
        let mut out = Tensor::zeros(rows, xv.cols());
        for r in 0..rows {
            out.row_mut(r).copy_from_slice(xv.data());
        }
        self.push(out, Op::Broadcast { x })
    }

    /// Row `b` from `new` where `mask[b]`, else from `old`.
    pub fn select_rows(&mut self, new: NodeId, old: NodeId, mask: &[bool]) -> NodeId {
        let (nv, ov) = (&self.nodes[new].value, &self.nodes[old].value);
        assert_eq!(nv.shape(), ov.shape(), "select_rows shapes");
        assert_eq!(mask.len(), nv.rows(), "select_rows mask length");
        let mut out = ov.clone();
        for (b, &m) in mask.iter().enumerate() {
            if m {
                out.row_mut(b).copy_from_slice(nv.row(b));
            }
        }
        self.push(out, Op::SelectRows { new, old, mask: mask.to_vec() })
    }

    /// Row-wise log-softmax over each `(offset, len)` column block.
    pub fn log_softmax_blocks(&mut self, x: NodeId, blocks: &[(usize, usize)]) -> NodeId {
        let mut out = self.nodes[x].value.clone();
        for r in 0..out.rows() {
            let row = out.row_mut(r);
            for &(o, l) in blocks {
                let block = &mut row[o..o + l];
                let max = block.iter().fold(f64::NEG_INFINITY, |m, &v| m.max(v));
                let lse = max + block.iter().map(|v| (v - max).exp()).sum::<f64>().ln();
                for v in block.iter_mut() {
                    *v -= lse;
                }
            }
        }
        self.push(out, Op::LogSoftmax { x, blocks: blocks.to_vec() })
    }

    pub fn log_softmax(&mut self, x: NodeId) -> NodeId {
        let cols = self.nodes[x].value.cols();
        self.log_softmax_blocks(x, &[(0, cols)])
    }

    /// `B×1`: row `b` holds `Σ_{j ∈ idx[b]} x[b, j]`.
    pub fn pick_sum(&mut self, x: NodeId, idx: Vec<Vec<usize>>) -> NodeId {
        let xv = &self.nodes[x].value;
        assert_eq!(idx.len(), xv.rows(), "pick_sum index rows");
        let data = idx
            .iter()
            .enumerate()
            .map(|(b, cols)| cols.iter().map(|&j| xv.get(b, j)).sum())
            .collect();
        let out = Tensor::from_vec(xv.rows(), 1, data).expect("shape");
        self.push(out, Op::PickSum { x, idx })
    }

    /// `B×1` Shannon entropy (nats) of each row given its log-probabilities.
    pub fn entropy(&mut self, logp: NodeId) -> NodeId {
        let lv = &self.nodes[logp].value;
        let data = (0..lv.rows())
            .map(|r| -lv.row(r).iter().map(|&l| l.exp() * l).sum::<f64>())
            .collect();
        let out = Tensor::from_vec(lv.rows(), 1, data).expect("shape");
        self.push(out, Op::Entropy { logp })
    }

    /// Scalar `Σ_b weights[b] · Σ_j x[b, j]`; the weights are constants.
    pub fn weighted_sum(&mut self, x: NodeId, weights: Vec<f64>) -> NodeId {
        let xv = &self.nodes[x].value;
        assert_eq!(weights.len(), xv.rows(), "weighted_sum weights");
        let s = (0..xv.rows()).map(|r| weights[r] * xv.row(r).iter().sum::<f64>()).sum();
        self.push(Tensor::row_vector(vec![s]), Op::WeightedSum { x, weights })
    }

    pub fn scale(&mut self, x: NodeId, factor: f64) -> NodeId {
        let out = self.nodes[x].value.map(|v| v * factor);
        self.push(out, Op::Scale { x, factor })
    }

    /// Gradients of the scalar node `loss` with respect to every parameter
    /// in `store`; parameters never bound into this graph get zeros.
    pub fn backward(&self, loss: NodeId, store: &ParamStore) -> Result<Gradients> {
        if loss >= self.nodes.len() {
            return Err(Error::shape("backward", format!("node {loss} was not recorded")));
        }
        if self.nodes[loss].value.shape() != (1, 1) {
            return Err(Error::shape("backward", "loss must be a 1x1 scalar"));
        }
        self.check_finite()?;
        let mut grads: Vec<Option<Tensor>> = vec![None; loss + 1];
        grads[loss] = Some(Tensor::filled(1, 1, 1.0));
        for id in (0..=loss).rev() {
            let Some(dy) = grads[id].take() else { continue };
            let node = &self.nodes[id];
            if !node.needs_grad {
                continue;
            }
            self.propagate(&node.op, id, &dy, &mut grads);
            grads[id] = Some(dy);
        }
        let mut out = Gradients::zeros_like(store);
        for (pid, slot) in self.bound.iter().enumerate() {
            if let Some(node) = slot {
                if let Some(g) = grads.get(*node).and_then(|g| g.as_ref()) {
                    out.tensors[pid].add_assign(g);
                }
            }
        }
        for t in &out.tensors {
            if !t.is_finite() {
                return Err(Error::NonFinite("backward"));
            }
        }
        Ok(out)
    }

    fn wants(&self, id: NodeId) -> bool {
        self.nodes[id].needs_grad
    }

    fn slot<'a>(&self, grads: &'a mut [Option<Tensor>], id: NodeId) -> &'a mut Tensor {
        let (r, c) = self.nodes[id].value.shape();
        grads[id].get_or_insert_with(|| Tensor::zeros(r, c))
    }

    fn accumulate(&self, grads: &mut [Option<Tensor>], id: NodeId, g: Tensor) {
        match &mut grads[id] {
            Some(t) => t.add_assign(&g),
            slot @ None => *slot = Some(g),
        }
    }

    fn propagate(&self, op: &Op, id: NodeId, dy: &Tensor, grads: &mut [Option<Tensor>]) {
        let y = &self.nodes[id].value;
        match op {
            Op::Constant | Op::Param => {}
            Op::MatMulT { x, w } => {
                if self.wants(*x) {
                    let wv = &self.nodes[*w].value;
                    gemm_nn(1.0, dy, wv, 1.0, self.slot(grads, *x));
                }
                if self.wants(*w) {
                    let xv = &self.nodes[*x].value;
                    gemm_tn(1.0, dy, xv, 1.0, self.slot(grads, *w));
                }
            }
            Op::AddBias { x, b } => {
                if self.wants(*b) {
                    let gb = self.slot(grads, *b);
                    for r in 0..dy.rows() {
                        for (g, d) in gb.data_mut().iter_mut().zip(dy.row(r)) {
                            *g += d;
                        }
                    }
                }
                if self.wants(*x) {
                    self.accumulate(grads, *x, dy.clone());
                }
            }
            Op::Add(a, b) => {
                for p in [*a, *b] {
                    if self.wants(p) {
                        self.accumulate(grads, p, dy.clone());
                    }
                }
            }
            Op::Mul(a, b) => {
                let (av, bv) = (&self.nodes[*a].value, &self.nodes[*b].value);
                if self.wants(*a) {
                    self.accumulate(grads, *a, dy.zip_map(bv, |d, v| d * v));
                }
                if self.wants(*b) {
                    self.accumulate(grads, *b, dy.zip_map(av, |d, v| d * v));
                }
            }
            Op::Sigmoid(a) => {
                if self.wants(*a) {
                    self.accumulate(grads, *a, dy.zip_map(y, |d, s| d * s * (1.0 - s)));
                }
            }
            Op::Tanh(a) => {
                if self.wants(*a) {
                    self.accumulate(grads, *a, dy.zip_map(y, |d, t| d * (1.0 - t * t)));
                }
            }
            Op::Interpolate { z, n, h } => {
                let (zv, nv, hv) = (&self.nodes[*z].value, &self.nodes[*n].value, &self.nodes[*h].value);
                if self.wants(*z) {
                    let diff = hv.zip_map(nv, |h, n| h - n);
                    self.accumulate(grads, *z, dy.zip_map(&diff, |d, e| d * e));
                }
                if self.wants(*n) {
                    self.accumulate(grads, *n, dy.zip_map(zv, |d, z| d * (1.0 - z)));
                }
                if self.wants(*h) {
                    self.accumulate(grads, *h, dy.zip_map(zv, |d, z| d * z));
                }
            }
            Op::Embed { table, idx } => {
                if self.wants(*table) {
                    let gt = self.slot(grads, *table);
                    for (b, &i) in idx.iter().enumerate() {
                        for (g, d) in gt.row_mut(i).iter_mut().zip(dy.row(b)) {
                            *g += d;
                        }
                    }
                }
            }
            Op::Broadcast { x } => {
                if self.wants(*x) {
                    let gx = self.slot(grads, *x);
                    for r in 0..dy.rows() {
                        for (g, d) in gx.data_mut().iter_mut().zip(dy.row(r)) {
                            *g += d;
                        }
                    }
                }
            }
            Op::SelectRows { new, old, mask } => {
                for (p, keep) in [(*new, true), (*old, false)] {
                    if self.wants(p) {
                        let mut g = dy.clone();
                        for (b, &m) in mask.iter().enumerate() {
                            if m != keep {
                                g.row_mut(b).fill(0.0);
                            }
                        }
                        self.accumulate(grads, p, g);
                    }
                }
            }
            Op::LogSoftmax { x, blocks } => {
                if self.wants(*x) {
                    let mut g = dy.clone();
                    for r in 0..g.rows() {
                        let yr = y.row(r);
                        let gr = g.row_mut(r);
                        for &(o, l) in blocks {
                            let total: f64 = gr[o..o + l].iter().sum();
                            for j in o..o + l {
                                gr[j] -= yr[j].exp() * total;
                            }
                        }
                    }
                    self.accumulate(grads, *x, g);
                }
            }
            Op::PickSum { x, idx } => {
                if self.wants(*x) {
                    let gx = self.slot(grads, *x);
                    for (b, cols) in idx.iter().enumerate() {
                        let d = dy.get(b, 0);
                        for &j in cols {
                            let v = gx.get(b, j);
                            gx.set(b, j, v + d);
                        }
                    }
                }
            }
            Op::Entropy { logp } => {
                if self.wants(*logp) {
                    let lv = &self.nodes[*logp].value;
                    let mut g = Tensor::zeros(lv.rows(), lv.cols());
                    for r in 0..lv.rows() {
                        let d = dy.get(r, 0);
                        for (gj, &l) in g.row_mut(r).iter_mut().zip(lv.row(r)) {
                            *gj = -d * l.exp() * (l + 1.0);
                        }
                    }
                    self.accumulate(grads, *logp, g);
                }
            }
            Op::WeightedSum { x, weights } => {
                if self.wants(*x) {
                    let d = dy.get(0, 0);
                    let xv = &self.nodes[*x].value;
                    let mut g = Tensor::zeros(xv.rows(), xv.cols());
                    for (r, w) in weights.iter().enumerate() {
                        g.row_mut(r).fill(d * w);
                    }
                    self.accumulate(grads, *x, g);
                }
            }
            Op::Scale { x, factor } => {
                if self.wants(*x) {
                    self.accumulate(grads, *x, dy.map(|d| d * factor));
                }
            }
        }
    }
}
