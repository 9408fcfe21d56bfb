//! Tape-based reverse-mode autodiff over dense 2-D arrays.
//!
//! Nodes are appended in evaluation order, so the reverse of the tape is a
//! valid topological order for backprop. Values are computed eagerly at
//! insertion; `backward` fills per-node gradients for every node on a path
//! from a grad-requiring leaf to the root.

use ndarray::{Array2, Axis};
use rand::Rng;
use rand_chacha::ChaCha8Rng;

use super::real::Real;
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct NodeId(usize);

enum Op<F: Real> {
    Leaf,
    Add(NodeId, NodeId),
    Sub(NodeId, NodeId),
    /// Element-wise product.
    Mul(NodeId, NodeId),
    Scale(NodeId, F),
    MatMul(NodeId, NodeId),
    Transpose(NodeId),
    ConcatRows(Vec<NodeId>),
    Sigmoid(NodeId),
    Tanh(NodeId),
    Relu(NodeId),
    LeakyRelu(NodeId, F),
    /// Row `row` of the parent as a column vector.
    TableRow(NodeId, usize),
    /// Matrix plus a column vector broadcast over columns.
    AddColBroadcast(NodeId, NodeId),
    /// Per-row maximum with cached argmax columns.
    RowMax(NodeId, Vec<usize>),
    /// Inverted dropout; the mask already carries the 1/keep scaling.
    Dropout(NodeId, Array2<F>),
    /// Softmax over the rows of a column vector, restricted to `mask`;
    /// entries outside the mask are exactly zero.
    MaskedSoftmax(NodeId, Vec<bool>),
    /// Cross-entropy of the gold row under the masked softmax of the parent
    /// logits. Caches the probability vector for the backward identity
    /// grad = p - onehot(gold).
    CeFromLogits { logits: NodeId, probs: Array2<F>, gold: usize },
    /// Single entry as a 1x1 node.
    PickRow(NodeId, usize),
}

struct Node<F: Real> {
    op: Op<F>,
    value: Array2<F>,
    needs_grad: bool,
}

pub struct Graph<F: Real> {
    nodes: Vec<Node<F>>,
    grads: Vec<Option<Array2<F>>>,
    dropout_rng: Option<ChaCha8Rng>,
}

impl<F: Real> Graph<F> {
    /// Evaluation-mode graph: dropout is the identity.
    pub fn new() -> Self {
        Graph { nodes: Vec::new(), grads: Vec::new(), dropout_rng: None }
    }

    /// Training-mode graph: dropout draws masks from `rng`.
    pub fn training(rng: ChaCha8Rng) -> Self {
        Graph { nodes: Vec::new(), grads: Vec::new(), dropout_rng: Some(rng) }
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    fn push(&mut self, op: Op<F>, value: Array2<F>, needs_grad: bool) -> NodeId {
        self.nodes.push(Node { op, value, needs_grad });
        self.grads.push(None);
        NodeId(self.nodes.len() - 1)
    }

    fn needs(&self, id: NodeId) -> bool {
        self.nodes[id.0].needs_grad
    }

    pub fn value(&self, id: NodeId) -> &Array2<F> {
        &self.nodes[id.0].value
    }

    pub fn grad(&self, id: NodeId) -> Option<&Array2<F>> {
        self.grads[id.0].as_ref()
    }

    pub fn scalar(&self, id: NodeId) -> F {
        let v = self.value(id);
        assert_eq!(v.dim(), (1, 1), "scalar node expected");
        v[(0, 0)]
    }

    pub fn leaf(&mut self, value: Array2<F>, requires_grad: bool) -> NodeId {
        self.push(Op::Leaf, value, requires_grad)
    }

    pub fn constant(&mut self, value: Array2<F>) -> NodeId {
        self.leaf(value, false)
    }

    pub fn add(&mut self, a: NodeId, b: NodeId) -> NodeId {
        let v = self.value(a) + self.value(b);
        let ng = self.needs(a) || self.needs(b);
        self.push(Op::Add(a, b), v, ng)
    }

    pub fn sub(&mut self, a: NodeId, b: NodeId) -> NodeId {
        let v = self.value(a) - self.value(b);
        let ng = self.needs(a) || self.needs(b);
        self.push(Op::Sub(a, b), v, ng)
    }

    pub fn mul(&mut self, a: NodeId, b: NodeId) -> NodeId {
        let v = self.value(a) * self.value(b);
        let ng = self.needs(a) || self.needs(b);
        self.push(Op::Mul(a, b), v, ng)
    }

    pub fn scale(&mut self, a: NodeId, c: F) -> NodeId {
        let v = self.value(a).mapv(|x| x * c);
        let ng = self.needs(a);
        self.push(Op::Scale(a, c), v, ng)
    }

    pub fn matmul(&mut self, a: NodeId, b: NodeId) -> NodeId {
        let v = self.value(a).dot(self.value(b));
        let ng = self.needs(a) || self.needs(b);
        self.push(Op::MatMul(a, b), v, ng)
    }

    pub fn transpose(&mut self, a: NodeId) -> NodeId {
        let v = self.value(a).t().to_owned();
        let ng = self.needs(a);
        self.push(Op::Transpose(a), v, ng)
    }

    pub fn concat_rows(&mut self, parts: &[NodeId]) -> NodeId {
        assert!(!parts.is_empty());
        let cols = self.value(parts[0]).ncols();
        let rows: usize = parts.iter().map(|&p| self.value(p).nrows()).sum();
        let mut v = Array2::zeros((rows, cols));
        let mut at = 0;
        for &p in parts {
            let pv = self.value(p);
            assert_eq!(pv.ncols(), cols, "concat_rows: column mismatch");
            v.slice_mut(ndarray::s![at..at + pv.nrows(), ..]).assign(pv);
            at += pv.nrows();
        }
        let ng = parts.iter().any(|&p| self.needs(p));
        self.push(Op::ConcatRows(parts.to_vec()), v, ng)
    }

    pub fn sigmoid(&mut self, a: NodeId) -> NodeId {
        let one = F::one();
        let v = self.value(a).mapv(|x| one / (one + (-x).exp()));
        let ng = self.needs(a);
        self.push(Op::Sigmoid(a), v, ng)
    }

    pub fn tanh(&mut self, a: NodeId) -> NodeId {
        let v = self.value(a).mapv(Real::tanh);
        let ng = self.needs(a);
        self.push(Op::Tanh(a), v, ng)
    }

    pub fn relu(&mut self, a: NodeId) -> NodeId {
        let z = F::zero();
        let v = self.value(a).mapv(|x| x.maximum(z));
        let ng = self.needs(a);
        self.push(Op::Relu(a), v, ng)
    }

    pub fn leaky_relu(&mut self, a: NodeId, slope: F) -> NodeId {
        let z = F::zero();
        let v = self.value(a).mapv(|x| if x > z { x } else { x * slope });
        let ng = self.needs(a);
        self.push(Op::LeakyRelu(a, slope), v, ng)
    }

    /// Row `row` of `a`, returned as a column vector (the usual embedding
    /// gather).
    pub fn table_row(&mut self, a: NodeId, row: usize) -> NodeId {
        let av = self.value(a);
        assert!(row < av.nrows(), "table_row {} out of {}", row, av.nrows());
        let v = av.row(row).insert_axis(Axis(1)).to_owned();
        let ng = self.needs(a);
        self.push(Op::TableRow(a, row), v, ng)
    }

    pub fn add_col_broadcast(&mut self, mat: NodeId, col: NodeId) -> NodeId {
        let m = self.value(mat);
        let c = self.value(col);
        assert_eq!(c.ncols(), 1);
        assert_eq!(c.nrows(), m.nrows());
        let v = m + c;
        let ng = self.needs(mat) || self.needs(col);
        self.push(Op::AddColBroadcast(mat, col), v, ng)
    }

    pub fn row_max(&mut self, a: NodeId) -> NodeId {
        let av = self.value(a);
        assert!(av.ncols() >= 1);
        let mut argmax = Vec::with_capacity(av.nrows());
        let mut v = Array2::zeros((av.nrows(), 1));
        for (r, row) in av.rows().into_iter().enumerate() {
            let (mut best_c, mut best) = (0usize, row[0]);
            for (c, &x) in row.iter().enumerate().skip(1) {
                if x > best {
                    best = x;
                    best_c = c;
                }
            }
            argmax.push(best_c);
            v[(r, 0)] = best;
        }
        let ng = self.needs(a);
        self.push(Op::RowMax(a, argmax), v, ng)
    }

    /// Identity in eval mode; in training mode zeroes entries with
    /// probability `p` and scales survivors by 1/(1-p).
    pub fn dropout(&mut self, a: NodeId, p: f64) -> NodeId {
        if p <= 0.0 || self.dropout_rng.is_none() {
            return a;
        }
        let keep = 1.0 - p;
        let scale = F::from_f64(1.0 / keep);
        let dim = self.nodes[a.0].value.dim();
        let rng = self.dropout_rng.as_mut().expect("checked above");
        let mask = Array2::from_shape_fn(dim, |_| {
            if rng.gen_bool(keep) {
                scale
            } else {
                F::zero()
            }
        });
        let v = &self.nodes[a.0].value * &mask;
        let ng = self.needs(a);
        self.push(Op::Dropout(a, mask), v, ng)
    }

    fn masked_probs(logits: &Array2<F>, mask: &[bool]) -> Array2<F> {
        assert_eq!(logits.ncols(), 1);
        assert_eq!(logits.nrows(), mask.len());
        assert!(mask.iter().any(|&m| m), "empty label mask");
        let mut max = None;
        for (i, &m) in mask.iter().enumerate() {
            if m {
                let x = logits[(i, 0)];
                max = Some(match max {
                    None => x,
                    Some(y) => x.maximum(y),
                });
            }
        }
        let max = max.unwrap();
        let mut probs = Array2::zeros(logits.dim());
        let mut denom = F::zero();
        for (i, &m) in mask.iter().enumerate() {
            if m {
                let e = (logits[(i, 0)] - max).exp();
                probs[(i, 0)] = e;
                denom = denom + e;
            }
        }
        probs.mapv_inplace(|x| x / denom);
        probs
    }

    /// Probabilities over the masked labels; zero outside the mask.
    pub fn masked_softmax(&mut self, logits: NodeId, mask: &[bool]) -> NodeId {
        let v = Self::masked_probs(self.value(logits), mask);
        let ng = self.needs(logits);
        self.push(Op::MaskedSoftmax(logits, mask.to_vec()), v, ng)
    }

    /// Cross-entropy loss -ln p[gold] under the masked softmax of `logits`,
    /// computed via log-sum-exp.
    pub fn ce_from_logits(&mut self, logits: NodeId, mask: &[bool], gold: usize) -> NodeId {
        assert!(mask[gold], "gold label outside domain mask");
        let lv = self.value(logits);
        let probs = Self::masked_probs(lv, mask);
        let mut max = F::from_f64(f64::NEG_INFINITY);
        for (i, &m) in mask.iter().enumerate() {
            if m {
                max = max.maximum(lv[(i, 0)]);
            }
        }
        let mut sum = F::zero();
        for (i, &m) in mask.iter().enumerate() {
            if m {
                sum = sum + (lv[(i, 0)] - max).exp();
            }
        }
        let loss = max + sum.ln() - lv[(gold, 0)];
        let ng = self.needs(logits);
        self.push(
            Op::CeFromLogits { logits, probs, gold },
            Array2::from_elem((1, 1), loss),
            ng,
        )
    }

    pub fn pick_row(&mut self, a: NodeId, row: usize) -> NodeId {
        let v = Array2::from_elem((1, 1), self.value(a)[(row, 0)]);
        let ng = self.needs(a);
        self.push(Op::PickRow(a, row), v, ng)
    }

    fn accumulate(grads: &mut [Option<Array2<F>>], id: NodeId, g: Array2<F>) {
        match &mut grads[id.0] {
            Some(acc) => *acc = &*acc + &g,
            slot @ None => *slot = Some(g),
        }
    }

    /// Reverse pass from a scalar root. Gradients of non-grad-requiring
    /// subtrees are skipped.
    pub fn backward(&mut self, root: NodeId) -> Result<()> {
        let rv = self.value(root);
        if rv.dim() != (1, 1) {
            return Err(Error::Numerical("backward root must be scalar".into()));
        }
        if !rv[(0, 0)].is_finite() {
            return Err(Error::Diverged(format!("non-finite loss {}", rv[(0, 0)])));
        }
        for g in self.grads.iter_mut() {
            *g = None;
        }
        self.grads[root.0] = Some(Array2::from_elem((1, 1), F::one()));

        for i in (0..=root.0).rev() {
            if !self.nodes[i].needs_grad {
                continue;
            }
            let Some(g) = self.grads[i].take() else { continue };
            // Reborrow piecemeal: node op/value are read-only here while
            // parent grads accumulate.
            let (done, _) = self.grads.split_at_mut(i);
            let node = &self.nodes[i];
            let mut acc = |id: NodeId, delta: Array2<F>| {
                debug_assert!(id.0 < i);
                if self.nodes[id.0].needs_grad {
                    Self::accumulate(done, id, delta);
                }
            };
            match &node.op {
                Op::Leaf => {}
                Op::Add(a, b) => {
                    acc(*a, g.clone());
                    acc(*b, g.clone());
                }
                Op::Sub(a, b) => {
                    acc(*a, g.clone());
                    acc(*b, g.mapv(|x| -x));
                }
                Op::Mul(a, b) => {
                    acc(*a, &g * &self.nodes[b.0].value);
                    acc(*b, &g * &self.nodes[a.0].value);
                }
                Op::Scale(a, c) => acc(*a, g.mapv(|x| x * *c)),
                Op::MatMul(a, b) => {
                    acc(*a, g.dot(&self.nodes[b.0].value.t()));
                    acc(*b, self.nodes[a.0].value.t().dot(&g));
                }
                Op::Transpose(a) => acc(*a, g.t().to_owned()),
                Op::ConcatRows(parts) => {
                    let mut at = 0;
                    for &p in parts {
                        let rows = self.nodes[p.0].value.nrows();
                        let slice = g.slice(ndarray::s![at..at + rows, ..]).to_owned();
                        acc(p, slice);
                        at += rows;
                    }
                }
                Op::Sigmoid(a) => {
                    let one = F::one();
                    let d = node.value.mapv(|s| s * (one - s));
                    acc(*a, &g * &d);
                }
                Op::Tanh(a) => {
                    let one = F::one();
                    let d = node.value.mapv(|t| one - t * t);
                    acc(*a, &g * &d);
                }
                Op::Relu(a) => {
                    let z = F::zero();
                    let d = node.value.mapv(|y| if y > z { F::one() } else { z });
                    acc(*a, &g * &d);
                }
                Op::LeakyRelu(a, slope) => {
                    let z = F::zero();
                    let d = self.nodes[a.0].value.mapv(|x| if x > z { F::one() } else { *slope });
                    acc(*a, &g * &d);
                }
                Op::TableRow(a, row) => {
                    let mut d = Array2::zeros(self.nodes[a.0].value.dim());
                    for (c, &x) in g.column(0).iter().enumerate() {
                        d[(*row, c)] = x;
                    }
                    acc(*a, d);
                }
                Op::AddColBroadcast(mat, col) => {
                    acc(*mat, g.clone());
                    acc(*col, g.sum_axis(Axis(1)).insert_axis(Axis(1)));
                }
                Op::RowMax(a, argmax) => {
                    let mut d = Array2::zeros(self.nodes[a.0].value.dim());
                    for (r, &c) in argmax.iter().enumerate() {
                        d[(r, c)] = g[(r, 0)];
                    }
                    acc(*a, d);
                }
                Op::Dropout(a, mask) => acc(*a, &g * mask),
                Op::MaskedSoftmax(a, mask) => {
                    // dL/dx_i = p_i (g_i - sum_j g_j p_j); p is zero outside
                    // the mask, which zeroes those entries automatically.
                    let p = &node.value;
                    let mut dot = F::zero();
                    for i in 0..p.nrows() {
                        dot = dot + g[(i, 0)] * p[(i, 0)];
                    }
                    let mut d = Array2::zeros(p.dim());
                    for (i, &m) in mask.iter().enumerate() {
                        if m {
                            d[(i, 0)] = p[(i, 0)] * (g[(i, 0)] - dot);
                        }
                    }
                    acc(*a, d);
                }
                Op::CeFromLogits { logits, probs, gold } => {
                    let gs = g[(0, 0)];
                    let mut d = probs.clone();
                    d[(*gold, 0)] = d[(*gold, 0)] - F::one();
                    d.mapv_inplace(|x| x * gs);
                    acc(*logits, d);
                }
                Op::PickRow(a, row) => {
                    let mut d = Array2::zeros(self.nodes[a.0].value.dim());
                    d[(*row, 0)] = g[(0, 0)];
                    acc(*a, d);
                }
            }
            self.grads[i] = Some(g);
        }
        Ok(())
    }
}

impl<F: Real> Default for Graph<F> {
    fn default() -> Self {
        Self::new()
    }
}
