//! Reverse-mode differentiation over [`Array`] values.
//!
//! A [`Graph`] is a tape rebuilt for every forward pass. Leaves are either
//! constant inputs or handles to entries of a [`ParamStore`]; calling
//! [`Graph::backward`] on a scalar node accumulates `∂loss/∂value` into the
//! gradient of every parameter the loss depends on.
//!
//! Every op checks its output for non-finite values and fails with an error
//! naming the op.

use std::collections::BTreeMap;
use std::sync::Arc;

use super::array::{gemm_acc, gemm_nt_acc, gemm_tn_acc, row_stats, Array};
use crate::error::{shape_err, Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct NodeId(usize);

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct ParamId(usize);

#[derive(Clone, Debug, PartialEq)]
pub struct Parameter {
    pub name: String,
    pub value: Array,
    pub gradient: Array,
}

/// Named parameters in insertion order.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct ParamStore {
    params: Vec<Parameter>,
    by_name: BTreeMap<String, usize>,
}

impl ParamStore {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn add(&mut self, name: impl Into<String>, value: Array) -> Result<ParamId> {
        let name = name.into();
        if self.by_name.contains_key(&name) {
            return Err(Error::Invalid(format!("duplicate parameter name {name}")));
        }
        let gradient = Array::zeros(value.shape());
        self.by_name.insert(name.clone(), self.params.len());
        self.params.push(Parameter {
            name,
            value,
            gradient,
        });
        Ok(ParamId(self.params.len() - 1))
    }

    pub fn id(&self, name: &str) -> Option<ParamId> {
        self.by_name.get(name).map(|&i| ParamId(i))
    }

    pub fn get(&self, id: ParamId) -> &Parameter {
        &self.params[id.0]
    }

    pub fn value(&self, id: ParamId) -> &Array {
        &self.params[id.0].value
    }

    pub fn by_name(&self, name: &str) -> Option<&Parameter> {
        self.id(name).map(|id| self.get(id))
    }

    pub fn set_value(&mut self, id: ParamId, value: Array) -> Result<()> {
        let p = &mut self.params[id.0];
        if p.value.shape() != value.shape() {
            return Err(shape_err(
                "set_value",
                format!("{}: {:?} vs {:?}", p.name, p.value.shape(), value.shape()),
            ));
        }
        p.value = value;
        Ok(())
    }

    pub fn len(&self) -> usize {
        self.params.len()
    }

    pub fn is_empty(&self) -> bool {
        self.params.is_empty()
    }

    pub fn ids(&self) -> impl Iterator<Item = ParamId> {
        (0..self.params.len()).map(ParamId)
    }

    pub fn iter(&self) -> impl Iterator<Item = &Parameter> {
        self.params.iter()
    }

    pub fn iter_mut(&mut self) -> impl Iterator<Item = &mut Parameter> {
        self.params.iter_mut()
    }

    pub fn zero_grad(&mut self) {
        for p in &mut self.params {
            p.gradient = Array::zeros(p.value.shape());
        }
    }

    pub fn num_values(&self) -> usize {
        self.params.iter().map(|p| p.value.len()).sum()
    }
}

/// Token grouping for attention and pooling:
/// token `t` of group `g` lives at row `base[g] + t * stride`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct GroupLayout {
    base: Vec<usize>,
    len: usize,
    stride: usize,
}

impl GroupLayout {
    pub fn contiguous(groups: usize, len: usize) -> Self {
        Self {
            base: (0..groups).map(|g| g * len).collect(),
            len,
            stride: 1,
        }
    }

    /// Rows ordered `(batch, frame, entity)`; one group per `(batch, frame)`.
    pub fn spatial(batch: usize, frames: usize, entities: usize) -> Self {
        Self::contiguous(batch * frames, entities)
    }

    /// Rows ordered `(batch, frame, entity)`; one group per `(batch, entity)`.
    pub fn temporal(batch: usize, frames: usize, entities: usize) -> Self {
        let mut base = Vec::with_capacity(batch * entities);
        for b in 0..batch {
            for e in 0..entities {
                base.push(b * frames * entities + e);
            }
        }
        Self {
            base,
            len: frames,
            stride: entities,
        }
    }

    pub fn groups(&self) -> usize {
        self.base.len()
    }

    pub fn len(&self) -> usize {
        self.len
    }

    pub fn is_empty(&self) -> bool {
        self.len == 0
    }

    #[inline]
    pub fn row(&self, g: usize, t: usize) -> usize {
        self.base[g] + t * self.stride
    }

    fn max_row(&self) -> usize {
        self.base
            .iter()
            .map(|b| b + self.len.saturating_sub(1) * self.stride)
            .max()
            .unwrap_or(0)
    }
}

#[derive(Debug)]
enum Op {
    Input,
    Param(ParamId),
    MatMul(NodeId, NodeId),
    Add(NodeId, NodeId),
    Sub(NodeId, NodeId),
    Mul(NodeId, NodeId),
    AddBias(NodeId, NodeId),
    Scale(NodeId, f64),
    GatherRows {
        table: NodeId,
        index: Vec<usize>,
    },
    LayerNorm {
        x: NodeId,
        gain: NodeId,
        bias: NodeId,
        xhat: Vec<f64>,
        inv_std: Vec<f64>,
    },
    Softmax(NodeId),
    Tanh(NodeId),
    Relu(NodeId),
    Attention {
        q: NodeId,
        k: NodeId,
        v: NodeId,
        layout: GroupLayout,
        mask: Arc<Vec<bool>>,
        heads: usize,
        probs: Vec<f64>,
    },
    MaskedSoftmax {
        scores: NodeId,
        layout: GroupLayout,
        mask: Arc<Vec<bool>>,
    },
    Pool {
        weights: NodeId,
        values: NodeId,
        layout: GroupLayout,
    },
    MaskedMse {
        pred: NodeId,
        target: Array,
        mask: Arc<Vec<bool>>,
        count: usize,
    },
    CrossEntropy {
        logits: NodeId,
        targets: Vec<usize>,
        probs: Vec<f64>,
        denom: f64,
    },
    Sum(NodeId),
}

struct Node {
    value: Array,
    op: Op,
    needs_grad: bool,
}

/// A single-use computation tape.
#[derive(Default)]
pub struct Graph {
    nodes: Vec<Node>,
}

impl Graph {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn value(&self, id: NodeId) -> &Array {
        &self.nodes[id.0].value
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    fn needs(&self, id: NodeId) -> bool {
        self.nodes[id.0].needs_grad
    }

    fn push(&mut self, value: Array, op: Op, name: &'static str, needs_grad: bool) -> Result<NodeId> {
        value.check_finite(name)?;
        self.nodes.push(Node {
            value,
            op,
            needs_grad,
        });
        Ok(NodeId(self.nodes.len() - 1))
    }

    pub fn input(&mut self, value: Array) -> Result<NodeId> {
        self.push(value, Op::Input, "input", false)
    }

    pub fn param(&mut self, store: &ParamStore, id: ParamId) -> Result<NodeId> {
        self.push(store.value(id).clone(), Op::Param(id), "param", true)
    }

    pub fn matmul(&mut self, a: NodeId, b: NodeId) -> Result<NodeId> {
        let (av, bv) = (self.value(a), self.value(b));
        if av.ndim() != 2 || bv.ndim() != 2 || av.shape()[1] != bv.shape()[0] {
            return Err(shape_err("matmul", format!("{:?} x {:?}", av.shape(), bv.shape())));
        }
        let (m, k, n) = (av.shape()[0], av.shape()[1], bv.shape()[1]);
        let mut out = vec![0.0; m * n];
        gemm_acc(av.data(), bv.data(), &mut out, m, k, n);
        let ng = self.needs(a) || self.needs(b);
        self.push(Array::from_parts(vec![m, n], out), Op::MatMul(a, b), "matmul", ng)
    }

    fn same_shape(&self, op: &'static str, a: NodeId, b: NodeId) -> Result<()> {
        if self.value(a).shape() != self.value(b).shape() {
            return Err(shape_err(
                op,
                format!("{:?} vs {:?}", self.value(a).shape(), self.value(b).shape()),
            ));
        }
        Ok(())
    }

    fn zip_with(&self, a: NodeId, b: NodeId, f: impl Fn(f64, f64) -> f64) -> Array {
        let (av, bv) = (self.value(a), self.value(b));
        let data = av.data().iter().zip(bv.data()).map(|(&x, &y)| f(x, y)).collect();
        Array::from_parts(av.shape().to_vec(), data)
    }

    pub fn add(&mut self, a: NodeId, b: NodeId) -> Result<NodeId> {
        self.same_shape("add", a, b)?;
        let v = self.zip_with(a, b, |x, y| x + y);
        let ng = self.needs(a) || self.needs(b);
        self.push(v, Op::Add(a, b), "add", ng)
    }

    pub fn sub(&mut self, a: NodeId, b: NodeId) -> Result<NodeId> {
        self.same_shape("sub", a, b)?;
        let v = self.zip_with(a, b, |x, y| x - y);
        let ng = self.needs(a) || self.needs(b);
        self.push(v, Op::Sub(a, b), "sub", ng)
    }

    pub fn mul(&mut self, a: NodeId, b: NodeId) -> Result<NodeId> {
        self.same_shape("mul", a, b)?;
        let v = self.zip_with(a, b, |x, y| x * y);
        let ng = self.needs(a) || self.needs(b);
        self.push(v, Op::Mul(a, b), "mul", ng)
    }

    /// `x[.., c] + bias[c]`, broadcasting over all leading axes.
    pub fn add_bias(&mut self, x: NodeId, bias: NodeId) -> Result<NodeId> {
        let (xv, bv) = (self.value(x), self.value(bias));
        let c = xv.last_dim();
        if bv.len() != c {
            return Err(shape_err("add_bias", format!("{:?} + {:?}", xv.shape(), bv.shape())));
        }
        let mut data = xv.to_vec();
        for row in data.chunks_mut(c) {
            for (v, b) in row.iter_mut().zip(bv.data()) {
                *v += b;
            }
        }
        let v = Array::from_parts(xv.shape().to_vec(), data);
        let ng = self.needs(x) || self.needs(bias);
        self.push(v, Op::AddBias(x, bias), "add_bias", ng)
    }

    pub fn scale(&mut self, x: NodeId, c: f64) -> Result<NodeId> {
        let v = self.value(x).map(|v| v * c);
        let ng = self.needs(x);
        self.push(v, Op::Scale(x, c), "scale", ng)
    }

    /// Rows of a 2-D `table` selected by `index`, shape `[index.len(), cols]`.
    pub fn gather_rows(&mut self, table: NodeId, index: Vec<usize>) -> Result<NodeId> {
        let tv = self.value(table);
        if tv.ndim() != 2 {
            return Err(shape_err("gather_rows", format!("table {:?}", tv.shape())));
        }
        let (rows, cols) = (tv.shape()[0], tv.shape()[1]);
        if let Some(&bad) = index.iter().find(|&&i| i >= rows) {
            return Err(shape_err("gather_rows", format!("row {bad} of {rows}")));
        }
        let mut data = Vec::with_capacity(index.len() * cols);
        for &i in &index {
            data.extend_from_slice(&tv.data()[i * cols..(i + 1) * cols]);
        }
        let v = Array::from_parts(vec![index.len(), cols], data);
        let ng = self.needs(table);
        self.push(v, Op::GatherRows { table, index }, "gather_rows", ng)
    }

    /// Layer normalization over the last axis.
    pub fn layer_norm(&mut self, x: NodeId, gain: NodeId, bias: NodeId, eps: f64) -> Result<NodeId> {
        let xv = self.value(x);
        let d = xv.last_dim();
        if d == 0 || self.value(gain).len() != d || self.value(bias).len() != d {
            return Err(shape_err("layer_norm", format!("x {:?}", xv.shape())));
        }
        let rows = xv.len() / d;
        let (g, b) = (self.value(gain).data(), self.value(bias).data());
        let mut out = vec![0.0; xv.len()];
        let mut xhat = vec![0.0; xv.len()];
        let mut inv_std = vec![0.0; rows];
        for r in 0..rows {
            let row = &xv.data()[r * d..(r + 1) * d];
            let (mean, is) = row_stats(row, eps);
            inv_std[r] = is;
            for j in 0..d {
                let h = (row[j] - mean) * is;
                xhat[r * d + j] = h;
                out[r * d + j] = h * g[j] + b[j];
            }
        }
        let v = Array::from_parts(xv.shape().to_vec(), out);
        let ng = self.needs(x) || self.needs(gain) || self.needs(bias);
        self.push(
            v,
            Op::LayerNorm {
                x,
                gain,
                bias,
                xhat,
                inv_std,
            },
            "layer_norm",
            ng,
        )
    }

    /// Softmax over the last axis.
    pub fn softmax(&mut self, x: NodeId) -> Result<NodeId> {
        let xv = self.value(x);
        let d = xv.last_dim();
        let mut out = Vec::with_capacity(xv.len());
        for row in xv.data().chunks(d) {
            out.extend(super::array::softmax_slice(row));
        }
        let v = Array::from_parts(xv.shape().to_vec(), out);
        let ng = self.needs(x);
        self.push(v, Op::Softmax(x), "softmax", ng)
    }

    pub fn tanh(&mut self, x: NodeId) -> Result<NodeId> {
        let v = self.value(x).map(f64::tanh);
        let ng = self.needs(x);
        self.push(v, Op::Tanh(x), "tanh", ng)
    }

    pub fn relu(&mut self, x: NodeId) -> Result<NodeId> {
        let v = self.value(x).map(|v| v.max(0.0));
        let ng = self.needs(x);
        self.push(v, Op::Relu(x), "relu", ng)
    }

    /// Multi-head scaled dot-product self-attention within each group of
    /// `layout`. Keys whose row is `false` in `key_mask` are excluded from
    /// the softmax (weight exactly zero). A group with no visible key
    /// produces zeros.
    pub fn attention(
        &mut self,
        q: NodeId,
        k: NodeId,
        v: NodeId,
        layout: &GroupLayout,
        key_mask: Arc<Vec<bool>>,
        heads: usize,
    ) -> Result<NodeId> {
        let (qv, kv, vv) = (self.value(q), self.value(k), self.value(v));
        if qv.shape() != kv.shape() || qv.shape() != vv.shape() || qv.ndim() != 2 {
            return Err(shape_err("attention", format!("q {:?} k {:?} v {:?}", qv.shape(), kv.shape(), vv.shape())));
        }
        let (rows, d) = (qv.shape()[0], qv.shape()[1]);
        if heads == 0 || d % heads != 0 {
            return Err(shape_err("attention", format!("width {d} not divisible by {heads} heads")));
        }
        if key_mask.len() != rows || (layout.groups() > 0 && layout.max_row() >= rows) {
            return Err(shape_err("attention", "layout or mask does not match rows"));
        }
        let dh = d / heads;
        let scale = 1.0 / (dh as f64).sqrt();
        let t_len = layout.len();
        let mut out = vec![0.0; rows * d];
        let mut probs = vec![0.0; layout.groups() * heads * t_len * t_len];
        let (qd, kd, vd) = (qv.data(), kv.data(), vv.data());
        let mut scores = vec![0.0; t_len];
        for g in 0..layout.groups() {
            for h in 0..heads {
                let off = h * dh;
                for t in 0..t_len {
                    let rq = layout.row(g, t);
                    let qrow = &qd[rq * d + off..rq * d + off + dh];
                    let mut max = f64::NEG_INFINITY;
                    for j in 0..t_len {
                        let rk = layout.row(g, j);
                        if !key_mask[rk] {
                            continue;
                        }
                        let krow = &kd[rk * d + off..rk * d + off + dh];
                        let s = qrow.iter().zip(krow).map(|(a, b)| a * b).sum::<f64>() * scale;
                        scores[j] = s;
                        max = max.max(s);
                    }
                    if max == f64::NEG_INFINITY {
                        continue;
                    }
                    let p = &mut probs[((g * heads + h) * t_len + t) * t_len..][..t_len];
                    let mut sum = 0.0;
                    for j in 0..t_len {
                        if key_mask[layout.row(g, j)] {
                            let e = (scores[j] - max).exp();
                            p[j] = e;
                            sum += e;
                        }
                    }
                    let dst = &mut out[rq * d + off..rq * d + off + dh];
                    for j in 0..t_len {
                        let rk = layout.row(g, j);
                        if !key_mask[rk] {
                            continue;
                        }
                        p[j] /= sum;
                        let w = p[j];
                        for (o, x) in dst.iter_mut().zip(&vd[rk * d + off..rk * d + off + dh]) {
                            *o += w * x;
                        }
                    }
                }
            }
        }
        let val = Array::from_parts(vec![rows, d], out);
        let ng = self.needs(q) || self.needs(k) || self.needs(v);
        self.push(
            val,
            Op::Attention {
                q,
                k,
                v,
                layout: layout.clone(),
                mask: key_mask,
                heads,
                probs,
            },
            "attention",
            ng,
        )
    }

    /// Softmax of per-row scalar scores within each group, restricted to
    /// rows flagged in `mask`. Masked rows receive weight 0.
    pub fn masked_softmax(&mut self, scores: NodeId, layout: &GroupLayout, mask: Arc<Vec<bool>>) -> Result<NodeId> {
        let sv = self.value(scores);
        if sv.len() != mask.len() || (layout.groups() > 0 && layout.max_row() >= sv.len()) {
            return Err(shape_err("masked_softmax", format!("scores {:?}", sv.shape())));
        }
        let mut out = vec![0.0; sv.len()];
        for g in 0..layout.groups() {
            let rows: Vec<usize> = (0..layout.len()).map(|t| layout.row(g, t)).filter(|&r| mask[r]).collect();
            if rows.is_empty() {
                return Err(Error::Invalid("masked_softmax: every token in a group is masked".into()));
            }
            let max = rows.iter().map(|&r| sv.data()[r]).fold(f64::NEG_INFINITY, f64::max);
            let mut sum = 0.0;
            for &r in &rows {
                let e = (sv.data()[r] - max).exp();
                out[r] = e;
                sum += e;
            }
            for &r in &rows {
                out[r] /= sum;
            }
        }
        let v = Array::from_parts(sv.shape().to_vec(), out);
        let ng = self.needs(scores);
        self.push(
            v,
            Op::MaskedSoftmax {
                scores,
                layout: layout.clone(),
                mask,
            },
            "masked_softmax",
            ng,
        )
    }

    /// Weighted sum of value rows within each group: `[groups, cols]`.
    pub fn pool(&mut self, weights: NodeId, values: NodeId, layout: &GroupLayout) -> Result<NodeId> {
        let (wv, vv) = (self.value(weights), self.value(values));
        if vv.ndim() != 2 || wv.len() != vv.shape()[0] {
            return Err(shape_err("pool", format!("weights {:?} values {:?}", wv.shape(), vv.shape())));
        }
        let c = vv.shape()[1];
        let mut out = vec![0.0; layout.groups() * c];
        for g in 0..layout.groups() {
            for t in 0..layout.len() {
                let r = layout.row(g, t);
                let w = wv.data()[r];
                if w == 0.0 {
                    continue;
                }
                for (o, x) in out[g * c..(g + 1) * c].iter_mut().zip(&vv.data()[r * c..(r + 1) * c]) {
                    *o += w * x;
                }
            }
        }
        let v = Array::from_parts(vec![layout.groups(), c], out);
        let ng = self.needs(weights) || self.needs(values);
        self.push(
            v,
            Op::Pool {
                weights,
                values,
                layout: layout.clone(),
            },
            "pool",
            ng,
        )
    }

    /// Mean of squared differences over the rows flagged in `mask`.
    pub fn masked_mse(&mut self, pred: NodeId, target: Array, mask: Arc<Vec<bool>>) -> Result<NodeId> {
        let pv = self.value(pred);
        if pv.shape() != target.shape() || mask.len() != pv.rows() {
            return Err(shape_err("masked_mse", format!("pred {:?} target {:?}", pv.shape(), target.shape())));
        }
        let c = pv.last_dim();
        let mut sum = 0.0;
        let mut count = 0;
        for (r, &on) in mask.iter().enumerate() {
            if !on {
                continue;
            }
            for j in r * c..(r + 1) * c {
                let e = pv.data()[j] - target.data()[j];
                sum += e * e;
            }
            count += c;
        }
        let value = if count == 0 { 0.0 } else { sum / count as f64 };
        let ng = self.needs(pred);
        self.push(
            Array::scalar(value),
            Op::MaskedMse {
                pred,
                target,
                mask,
                count,
            },
            "masked_mse",
            ng,
        )
    }

    /// `Σ_b (logsumexp(logits_b) − logits_b[target_b]) / denom`.
    pub fn cross_entropy(&mut self, logits: NodeId, targets: Vec<usize>, denom: f64) -> Result<NodeId> {
        let lv = self.value(logits);
        if lv.ndim() != 2 || lv.shape()[0] != targets.len() {
            return Err(shape_err("cross_entropy", format!("logits {:?}, {} targets", lv.shape(), targets.len())));
        }
        let c = lv.shape()[1];
        if targets.iter().any(|&t| t >= c) {
            return Err(shape_err("cross_entropy", format!("target outside {c} classes")));
        }
        let mut probs = Vec::with_capacity(lv.len());
        let mut total = 0.0;
        for (row, &t) in lv.data().chunks(c).zip(&targets) {
            let max = row.iter().copied().fold(f64::NEG_INFINITY, f64::max);
            let lse = max + row.iter().map(|v| (v - max).exp()).sum::<f64>().ln();
            total += lse - row[t];
            probs.extend(row.iter().map(|v| (v - lse).exp()));
        }
        let ng = self.needs(logits);
        self.push(
            Array::scalar(total / denom),
            Op::CrossEntropy {
                logits,
                targets,
                probs,
                denom,
            },
            "cross_entropy",
            ng,
        )
    }

    pub fn sum(&mut self, x: NodeId) -> Result<NodeId> {
        let s = self.value(x).data().iter().sum();
        let ng = self.needs(x);
        self.push(Array::scalar(s), Op::Sum(x), "sum", ng)
    }

    pub fn mean(&mut self, x: NodeId) -> Result<NodeId> {
        let n = self.value(x).len() as f64;
        let s = self.sum(x)?;
        self.scale(s, 1.0 / n)
    }

    /// Accumulates `∂loss/∂p` into `gradient` of every parameter reached.
    pub fn backward(&self, loss: NodeId, store: &mut ParamStore) -> Result<()> {
        if self.value(loss).len() != 1 {
            return Err(shape_err("backward", format!("loss shape {:?}", self.value(loss).shape())));
        }
        if !self.needs(loss) {
            return Err(Error::Detached("loss does not depend on any parameter".into()));
        }
        let mut grads: Vec<Option<Vec<f64>>> = (0..self.nodes.len()).map(|_| None).collect();
        grads[loss.0] = Some(vec![1.0]);

        for i in (0..=loss.0).rev() {
            let Some(g) = grads[i].take() else { continue };
            let node = &self.nodes[i];
            if !node.needs_grad {
                continue;
            }
            match &node.op {
                Op::Input => {}
                Op::Param(pid) => {
                    let p = &mut store.params[pid.0];
                    if p.gradient.shape() != p.value.shape() {
                        p.gradient = Array::zeros(p.value.shape());
                    }
                    for (dst, src) in p.gradient.data_mut().iter_mut().zip(&g) {
                        *dst += src;
                    }
                }
                Op::MatMul(a, b) => {
                    let (av, bv) = (self.value(*a), self.value(*b));
                    let (m, k, n) = (av.shape()[0], av.shape()[1], bv.shape()[1]);
                    if self.needs(*a) {
                        let buf = self.grad_buf(&mut grads, *a);
                        gemm_nt_acc(&g, bv.data(), buf, m, n, k);
                    }
                    if self.needs(*b) {
                        let buf = self.grad_buf(&mut grads, *b);
                        gemm_tn_acc(av.data(), &g, buf, m, k, n);
                    }
                }
                Op::Add(a, b) => {
                    self.acc(&mut grads, *a, &g, 1.0);
                    self.acc(&mut grads, *b, &g, 1.0);
                }
                Op::Sub(a, b) => {
                    self.acc(&mut grads, *a, &g, 1.0);
                    self.acc(&mut grads, *b, &g, -1.0);
                }
                Op::Mul(a, b) => {
                    if self.needs(*a) {
                        let bv = self.value(*b).data();
                        let buf = self.grad_buf(&mut grads, *a);
                        for j in 0..buf.len() {
                            buf[j] += g[j] * bv[j];
                        }
                    }
                    if self.needs(*b) {
                        let av = self.value(*a).data();
                        let buf = self.grad_buf(&mut grads, *b);
                        for j in 0..buf.len() {
                            buf[j] += g[j] * av[j];
                        }
                    }
                }
                Op::AddBias(x, bias) => {
                    self.acc(&mut grads, *x, &g, 1.0);
                    if self.needs(*bias) {
                        let c = self.value(*bias).len();
                        let buf = self.grad_buf(&mut grads, *bias);
                        for row in g.chunks(c) {
                            for (d, s) in buf.iter_mut().zip(row) {
                                *d += s;
                            }
                        }
                    }
                }
                Op::Scale(x, c) => self.acc(&mut grads, *x, &g, *c),
                Op::GatherRows { table, index } => {
                    if self.needs(*table) {
                        let cols = self.value(*table).shape()[1];
                        let buf = self.grad_buf(&mut grads, *table);
                        for (r, &i) in index.iter().enumerate() {
                            for j in 0..cols {
                                buf[i * cols + j] += g[r * cols + j];
                            }
                        }
                    }
                }
                Op::LayerNorm {
                    x,
                    gain,
                    bias,
                    xhat,
                    inv_std,
                } => {
                    let d = self.value(*x).last_dim();
                    let gv = self.value(*gain).data().to_vec();
                    if self.needs(*gain) {
                        let buf = self.grad_buf(&mut grads, *gain);
                        for (gr, xr) in g.chunks(d).zip(xhat.chunks(d)) {
                            for j in 0..d {
                                buf[j] += gr[j] * xr[j];
                            }
                        }
                    }
                    if self.needs(*bias) {
                        let buf = self.grad_buf(&mut grads, *bias);
                        for gr in g.chunks(d) {
                            for j in 0..d {
                                buf[j] += gr[j];
                            }
                        }
                    }
                    if self.needs(*x) {
                        let buf = self.grad_buf(&mut grads, *x);
                        let df = d as f64;
                        for (r, (gr, xr)) in g.chunks(d).zip(xhat.chunks(d)).enumerate() {
                            let mut m1 = 0.0;
                            let mut m2 = 0.0;
                            for j in 0..d {
                                let dh = gr[j] * gv[j];
                                m1 += dh;
                                m2 += dh * xr[j];
                            }
                            m1 /= df;
                            m2 /= df;
                            for j in 0..d {
                                let dh = gr[j] * gv[j];
                                buf[r * d + j] += inv_std[r] * (dh - m1 - xr[j] * m2);
                            }
                        }
                    }
                }
                Op::Softmax(x) => {
                    if self.needs(*x) {
                        let y = node.value.data();
                        let d = node.value.last_dim();
                        let buf = self.grad_buf(&mut grads, *x);
                        for r in 0..y.len() / d {
                            let s: f64 = (0..d).map(|j| g[r * d + j] * y[r * d + j]).sum();
                            for j in 0..d {
                                buf[r * d + j] += y[r * d + j] * (g[r * d + j] - s);
                            }
                        }
                    }
                }
                Op::Tanh(x) => {
                    if self.needs(*x) {
                        let y = node.value.data();
                        let buf = self.grad_buf(&mut grads, *x);
                        for j in 0..buf.len() {
                            buf[j] += g[j] * (1.0 - y[j] * y[j]);
                        }
                    }
                }
                Op::Relu(x) => {
                    if self.needs(*x) {
                        let y = node.value.data();
                        let buf = self.grad_buf(&mut grads, *x);
                        for j in 0..buf.len() {
                            if y[j] > 0.0 {
                                buf[j] += g[j];
                            }
                        }
                    }
                }
                Op::Attention {
                    q,
                    k,
                    v,
                    layout,
                    mask,
                    heads,
                    probs,
                } => self.attention_backward(&mut grads, &g, *q, *k, *v, layout, mask, *heads, probs),
                Op::MaskedSoftmax { scores, layout, mask } => {
                    if self.needs(*scores) {
                        let y = node.value.data();
                        let buf = self.grad_buf(&mut grads, *scores);
                        for grp in 0..layout.groups() {
                            let rows = (0..layout.len()).map(|t| layout.row(grp, t)).filter(|&r| mask[r]);
                            let s: f64 = rows.clone().map(|r| g[r] * y[r]).sum();
                            for r in rows {
                                buf[r] += y[r] * (g[r] - s);
                            }
                        }
                    }
                }
                Op::Pool {
                    weights,
                    values,
                    layout,
                } => {
                    let (wv, vv) = (self.value(*weights).data(), self.value(*values));
                    let c = vv.shape()[1];
                    if self.needs(*weights) {
                        let buf = self.grad_buf(&mut grads, *weights);
                        for grp in 0..layout.groups() {
                            for t in 0..layout.len() {
                                let r = layout.row(grp, t);
                                buf[r] += g[grp * c..(grp + 1) * c]
                                    .iter()
                                    .zip(&vv.data()[r * c..(r + 1) * c])
                                    .map(|(a, b)| a * b)
                                    .sum::<f64>();
                            }
                        }
                    }
                    if self.needs(*values) {
                        let buf = self.grad_buf(&mut grads, *values);
                        for grp in 0..layout.groups() {
                            for t in 0..layout.len() {
                                let r = layout.row(grp, t);
                                let w = wv[r];
                                if w == 0.0 {
                                    continue;
                                }
                                for j in 0..c {
                                    buf[r * c + j] += w * g[grp * c + j];
                                }
                            }
                        }
                    }
                }
                Op::MaskedMse {
                    pred,
                    target,
                    mask,
                    count,
                } => {
                    if *count > 0 && self.needs(*pred) {
                        let pv = self.value(*pred).data();
                        let c = self.value(*pred).last_dim();
                        let scale = 2.0 * g[0] / *count as f64;
                        let buf = self.grad_buf(&mut grads, *pred);
                        for (r, &on) in mask.iter().enumerate() {
                            if on {
                                for j in r * c..(r + 1) * c {
                                    buf[j] += scale * (pv[j] - target.data()[j]);
                                }
                            }
                        }
                    }
                }
                Op::CrossEntropy {
                    logits,
                    targets,
                    probs,
                    denom,
                } => {
                    if self.needs(*logits) {
                        let c = self.value(*logits).shape()[1];
                        let scale = g[0] / denom;
                        let buf = self.grad_buf(&mut grads, *logits);
                        for (b, &t) in targets.iter().enumerate() {
                            for j in 0..c {
                                let onehot = if j == t { 1.0 } else { 0.0 };
                                buf[b * c + j] += scale * (probs[b * c + j] - onehot);
                            }
                        }
                    }
                }
                Op::Sum(x) => {
                    if self.needs(*x) {
                        let buf = self.grad_buf(&mut grads, *x);
                        for v in buf.iter_mut() {
                            *v += g[0];
                        }
                    }
                }
            }
        }
        Ok(())
    }

    fn grad_buf<'a>(&self, grads: &'a mut [Option<Vec<f64>>], id: NodeId) -> &'a mut Vec<f64> {
        let n = self.nodes[id.0].value.len();
        grads[id.0].get_or_insert_with(|| vec![0.0; n])
    }

    fn acc(&self, grads: &mut [Option<Vec<f64>>], id: NodeId, g: &[f64], c: f64) {
        if !self.needs(id) {
            return;
        }
        let buf = self.grad_buf(grads, id);
        for (d, s) in buf.iter_mut().zip(g) {
            *d += c * s;
        }
    }

    #[allow(clippy::too_many_arguments)]
    fn attention_backward(
        &self,
        grads: &mut [Option<Vec<f64>>],
        g: &[f64],
        q: NodeId,
        k: NodeId,
        v: NodeId,
        layout: &GroupLayout,
        mask: &[bool],
        heads: usize,
        probs: &[f64],
    ) {
        let (qv, kv, vv) = (self.value(q), self.value(k), self.value(v));
        let (rows, d) = (qv.shape()[0], qv.shape()[1]);
        let dh = d / heads;
        let scale = 1.0 / (dh as f64).sqrt();
        let t_len = layout.len();
        let mut dq = vec![0.0; rows * d];
        let mut dk = vec![0.0; rows * d];
        let mut dv = vec![0.0; rows * d];
        let mut dp = vec![0.0; t_len];
        let (qd, kd, vd) = (qv.data(), kv.data(), vv.data());
        for grp in 0..layout.groups() {
            for h in 0..heads {
                let off = h * dh;
                for t in 0..t_len {
                    let rq = layout.row(grp, t);
                    let p = &probs[((grp * heads + h) * t_len + t) * t_len..][..t_len];
                    let go = &g[rq * d + off..rq * d + off + dh];
                    let mut s = 0.0;
                    for j in 0..t_len {
                        let rk = layout.row(grp, j);
                        if !mask[rk] || p[j] == 0.0 {
                            dp[j] = 0.0;
                            continue;
                        }
                        let vrow = &vd[rk * d + off..rk * d + off + dh];
                        dp[j] = go.iter().zip(vrow).map(|(a, b)| a * b).sum();
                        s += p[j] * dp[j];
                        for (dst, &x) in dv[rk * d + off..rk * d + off + dh].iter_mut().zip(go) {
                            *dst += p[j] * x;
                        }
                    }
                    for j in 0..t_len {
                        let rk = layout.row(grp, j);
                        if !mask[rk] || p[j] == 0.0 {
                            continue;
                        }
                        let ds = p[j] * (dp[j] - s) * scale;
                        for c in 0..dh {
                            dq[rq * d + off + c] += ds * kd[rk * d + off + c];
                            dk[rk * d + off + c] += ds * qd[rq * d + off + c];
                        }
                    }
                }
            }
        }
        self.acc(grads, q, &dq, 1.0);
        self.acc(grads, k, &dk, 1.0);
        self.acc(grads, v, &dv, 1.0);
    }
}
