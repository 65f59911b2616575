//! Reverse-mode differentiation over a tape of tensor-valued nodes.
//!
//! Nodes are appended in evaluation order, so a node's parents always have
//! smaller ids and the tape is a topological order of the (acyclic) graph.
//! [`Graph::backward`] walks it once in reverse.

use crate::error::{Error, Result};

use super::kernels;
use super::tensor::Tensor;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct NodeId(usize);

impl NodeId {
    pub fn index(self) -> usize {
        self.0
    }
}

#[derive(Debug)]
enum Op {
    Leaf,
    MatMul(NodeId, NodeId),
    Add(NodeId, NodeId),
    Sub(NodeId, NodeId),
    Mul(NodeId, NodeId),
    AddRow(NodeId, NodeId),
    Scale(NodeId, f64),
    Tanh(NodeId),
    Sigmoid(NodeId),
    Mask(NodeId, Vec<f64>),
    Reshape(NodeId),
    Gather { table: NodeId, indices: Vec<usize> },
    PadRows(NodeId),
    Conv1d { input: NodeId, weight: NodeId, bias: NodeId, width: usize },
    MaxPoolTime { input: NodeId, argmax: Vec<usize> },
    MeanRows(NodeId),
    Concat(Vec<NodeId>),
    Slice { input: NodeId, start: usize },
    Softmax { input: NodeId, tau: f64 },
    CrossEntropy { logits: NodeId, label: usize },
    Kl { p: NodeId, q: NodeId },
}

#[derive(Debug)]
struct Node {
    value: Tensor,
    op: Op,
    needs_grad: bool,
}

/// A single-threaded computation tape.
#[derive(Debug, Default)]
pub struct Graph {
    nodes: Vec<Node>,
    grads: Vec<Option<Tensor>>,
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

    /// Drops every node created after the first `len`, keeping earlier ids
    /// valid. Used to reuse bound parameters across independent forwards.
    pub fn truncate(&mut self, len: usize) {
        self.nodes.truncate(len);
        self.grads.clear();
    }

    fn push(&mut self, value: Tensor, op: Op, needs_grad: bool) -> NodeId {
        self.nodes.push(Node {
            value,
            op,
            needs_grad,
        });
        NodeId(self.nodes.len() - 1)
    }

    fn any_grad(&self, ids: &[NodeId]) -> bool {
        ids.iter().any(|id| self.nodes[id.0].needs_grad)
    }

    /// Differentiable input.
    pub fn param(&mut self, value: Tensor) -> NodeId {
        self.push(value, Op::Leaf, true)
    }

    /// Input that never receives a gradient.
    pub fn constant(&mut self, value: Tensor) -> NodeId {
        self.push(value, Op::Leaf, false)
    }

    pub fn value(&self, id: NodeId) -> &Tensor {
        &self.nodes[id.0].value
    }

    /// Gradient of the last [`backward`](Self::backward) target with respect
    /// to `id`. Zero-filled when no gradient reached the node.
    pub fn grad(&self, id: NodeId) -> Tensor {
        match self.grads.get(id.0) {
            Some(Some(g)) => g.clone(),
            _ => Tensor::zeros(self.nodes[id.0].value.shape()),
        }
    }

    pub fn take_grad(&mut self, id: NodeId) -> Tensor {
        match self.grads.get_mut(id.0).and_then(Option::take) {
            Some(g) => g,
            None => Tensor::zeros(self.nodes[id.0].value.shape()),
        }
    }

    fn same_shape(&self, op: &'static str, a: NodeId, b: NodeId) -> Result<()> {
        let (sa, sb) = (self.value(a).shape(), self.value(b).shape());
        if sa != sb {
            return Err(Error::dim(op, format!("{sa:?} vs {sb:?}")));
        }
        Ok(())
    }

    fn zip_map(&self, a: NodeId, b: NodeId, f: impl Fn(f64, f64) -> f64) -> Tensor {
        let (va, vb) = (self.value(a), self.value(b));
        let data = va.data().iter().zip(vb.data()).map(|(&x, &y)| f(x, y)).collect();
        Tensor::new(va.shape().to_vec(), data).expect("shape preserved")
    }

    fn map(&self, a: NodeId, f: impl Fn(f64) -> f64) -> Tensor {
        let va = self.value(a);
        let data = va.data().iter().map(|&x| f(x)).collect();
        Tensor::new(va.shape().to_vec(), data).expect("shape preserved")
    }

    pub fn matmul(&mut self, a: NodeId, b: NodeId) -> Result<NodeId> {
        let v = kernels::matmul(self.value(a), self.value(b))?;
        let g = self.any_grad(&[a, b]);
        Ok(self.push(v, Op::MatMul(a, b), g))
    }

    pub fn add(&mut self, a: NodeId, b: NodeId) -> Result<NodeId> {
        self.same_shape("add", a, b)?;
        let v = self.zip_map(a, b, |x, y| x + y);
        let g = self.any_grad(&[a, b]);
        Ok(self.push(v, Op::Add(a, b), g))
    }

    pub fn sub(&mut self, a: NodeId, b: NodeId) -> Result<NodeId> {
        self.same_shape("sub", a, b)?;
        let v = self.zip_map(a, b, |x, y| x - y);
        let g = self.any_grad(&[a, b]);
        Ok(self.push(v, Op::Sub(a, b), g))
    }

    /// Elementwise product.
    pub fn mul(&mut self, a: NodeId, b: NodeId) -> Result<NodeId> {
        self.same_shape("mul", a, b)?;
        let v = self.zip_map(a, b, |x, y| x * y);
        let g = self.any_grad(&[a, b]);
        Ok(self.push(v, Op::Mul(a, b), g))
    }

    /// Adds vector `row` (`[n]`) to every row of `m` (`[rows × n]`).
    pub fn add_row(&mut self, m: NodeId, row: NodeId) -> Result<NodeId> {
        let (vm, vr) = (self.value(m), self.value(row));
        if vm.shape().len() != 2 || vr.shape().len() != 1 || vm.cols() != vr.len() {
            return Err(Error::dim(
                "add_row",
                format!("{:?} + row {:?}", vm.shape(), vr.shape()),
            ));
        }
        let n = vr.len();
        let mut data = vm.data().to_vec();
        for (i, x) in data.iter_mut().enumerate() {
            *x += vr.data()[i % n];
        }
        let v = Tensor::new(vm.shape().to_vec(), data)?;
        let g = self.any_grad(&[m, row]);
        Ok(self.push(v, Op::AddRow(m, row), g))
    }

    pub fn scale(&mut self, a: NodeId, s: f64) -> NodeId {
        let v = self.map(a, |x| x * s);
        let g = self.any_grad(&[a]);
        self.push(v, Op::Scale(a, s), g)
    }

    pub fn tanh(&mut self, a: NodeId) -> NodeId {
        let v = self.map(a, f64::tanh);
        let g = self.any_grad(&[a]);
        self.push(v, Op::Tanh(a), g)
    }

    pub fn sigmoid(&mut self, a: NodeId) -> NodeId {
        let v = self.map(a, sigmoid);
        let g = self.any_grad(&[a]);
        self.push(v, Op::Sigmoid(a), g)
    }

    /// Multiplies by a constant mask of the same length (dropout).
    pub fn mask(&mut self, a: NodeId, mask: Vec<f64>) -> Result<NodeId> {
        if mask.len() != self.value(a).len() {
            return Err(Error::dim(
                "mask",
                format!("mask of {} for {:?}", mask.len(), self.value(a).shape()),
            ));
        }
        let va = self.value(a);
        let data = va.data().iter().zip(&mask).map(|(x, m)| x * m).collect();
        let v = Tensor::new(va.shape().to_vec(), data)?;
        let g = self.any_grad(&[a]);
        Ok(self.push(v, Op::Mask(a, mask), g))
    }

    pub fn reshape(&mut self, a: NodeId, shape: Vec<usize>) -> Result<NodeId> {
        let v = self.value(a).clone().reshaped(shape)?;
        let g = self.any_grad(&[a]);
        Ok(self.push(v, Op::Reshape(a), g))
    }

    /// Row lookup: `table[indices[i]]` for each `i`, giving `[n × d]`.
    pub fn gather(&mut self, table: NodeId, indices: &[usize]) -> Result<NodeId> {
        let t = self.value(table);
        if t.shape().len() != 2 {
            return Err(Error::dim("gather", format!("table shape {:?}", t.shape())));
        }
        let (rows, d) = (t.rows(), t.cols());
        let mut data = Vec::with_capacity(indices.len() * d);
        for &i in indices {
            if i >= rows {
                return Err(Error::dim(
                    "gather",
                    format!("index {i} out of range for table {:?}", t.shape()),
                ));
            }
            data.extend_from_slice(t.row(i));
        }
        let v = Tensor::new(vec![indices.len(), d], data)?;
        let g = self.any_grad(&[table]);
        Ok(self.push(
            v,
            Op::Gather {
                table,
                indices: indices.to_vec(),
            },
            g,
        ))
    }

    /// Appends zero rows until the sequence has at least `min_rows` rows.
    pub fn pad_rows(&mut self, a: NodeId, min_rows: usize) -> Result<NodeId> {
        let va = self.value(a);
        if va.shape().len() != 2 {
            return Err(Error::dim("pad_rows", format!("shape {:?}", va.shape())));
        }
        if va.rows() >= min_rows {
            return Ok(a);
        }
        let mut data = va.data().to_vec();
        data.resize(min_rows * va.cols(), 0.0);
        let v = Tensor::new(vec![min_rows, va.cols()], data)?;
        let g = self.any_grad(&[a]);
        Ok(self.push(v, Op::PadRows(a), g))
    }

    pub fn conv1d(&mut self, input: NodeId, weight: NodeId, bias: NodeId, width: usize) -> Result<NodeId> {
        let v = kernels::conv1d_same(self.value(input), self.value(weight), self.value(bias), width)?;
        let g = self.any_grad(&[input, weight, bias]);
        Ok(self.push(
            v,
            Op::Conv1d {
                input,
                weight,
                bias,
                width,
            },
            g,
        ))
    }

    pub fn max_pool_time(&mut self, input: NodeId) -> Result<NodeId> {
        let (v, argmax) = kernels::max_pool_time(self.value(input))?;
        let g = self.any_grad(&[input]);
        Ok(self.push(v, Op::MaxPoolTime { input, argmax }, g))
    }

    /// Column means of a `[rows × d]` matrix.
    pub fn mean_rows(&mut self, a: NodeId) -> Result<NodeId> {
        let va = self.value(a);
        if va.shape().len() != 2 || va.rows() == 0 {
            return Err(Error::degenerate("mean_rows", format!("shape {:?}", va.shape())));
        }
        let (r, d) = (va.rows(), va.cols());
        let mut out = vec![0.0; d];
        for i in 0..r {
            for (o, x) in out.iter_mut().zip(va.row(i)) {
                *o += x;
            }
        }
        let inv = 1.0 / r as f64;
        out.iter_mut().for_each(|o| *o *= inv);
        let g = self.any_grad(&[a]);
        Ok(self.push(Tensor::vector(out), Op::MeanRows(a), g))
    }

    /// Concatenates 1-D vectors.
    pub fn concat(&mut self, parts: &[NodeId]) -> Result<NodeId> {
        let mut data = Vec::new();
        for &p in parts {
            let v = self.value(p);
            if v.shape().len() != 1 {
                return Err(Error::dim("concat", format!("part shape {:?}", v.shape())));
            }
            data.extend_from_slice(v.data());
        }
        let g = self.any_grad(parts);
        Ok(self.push(Tensor::vector(data), Op::Concat(parts.to_vec()), g))
    }

    /// Contiguous sub-vector `[start, start + len)` of a 1-D vector.
    pub fn slice(&mut self, input: NodeId, start: usize, len: usize) -> Result<NodeId> {
        let v = self.value(input);
        if v.shape().len() != 1 || start + len > v.len() {
            return Err(Error::dim(
                "slice",
                format!("[{start}, {}) of {:?}", start + len, v.shape()),
            ));
        }
        let out = Tensor::vector(v.data()[start..start + len].to_vec());
        let g = self.any_grad(&[input]);
        Ok(self.push(out, Op::Slice { input, start }, g))
    }

    pub fn softmax_with_temperature(&mut self, logits: NodeId, tau: f64) -> Result<NodeId> {
        let v = self.value(logits);
        if v.shape().len() != 1 {
            return Err(Error::dim("softmax", format!("shape {:?}", v.shape())));
        }
        let p = kernels::softmax_with_temperature(v.data(), tau)?;
        let g = self.any_grad(&[logits]);
        Ok(self.push(Tensor::vector(p), Op::Softmax { input: logits, tau }, g))
    }

    pub fn cross_entropy(&mut self, logits: NodeId, label: usize) -> Result<NodeId> {
        let v = self.value(logits);
        if v.shape().len() != 1 {
            return Err(Error::dim("cross_entropy", format!("shape {:?}", v.shape())));
        }
        let loss = kernels::cross_entropy(v.data(), label)?;
        let g = self.any_grad(&[logits]);
        Ok(self.push(Tensor::scalar(loss), Op::CrossEntropy { logits, label }, g))
    }

    pub fn kl_divergence(&mut self, p: NodeId, q: NodeId) -> Result<NodeId> {
        let loss = kernels::kl_divergence(self.value(p).data(), self.value(q).data())?;
        let g = self.any_grad(&[p, q]);
        Ok(self.push(Tensor::scalar(loss), Op::Kl { p, q }, g))
    }

    /// Reverse sweep from the scalar `target`. Gradients are reset on entry.
    pub fn backward(&mut self, target: NodeId) -> Result<()> {
        let t = self.value(target);
        if t.len() != 1 {
            return Err(Error::dim(
                "backward",
                format!("target must be scalar, got {:?}", t.shape()),
            ));
        }
        let mut grads: Vec<Option<Tensor>> = Vec::with_capacity(self.nodes.len());
        grads.resize_with(self.nodes.len(), || None);
        let mut seed = Tensor::zeros(t.shape());
        seed.data_mut()[0] = 1.0;
        grads[target.0] = Some(seed);

        for i in (0..=target.0).rev() {
            let Some(gout) = grads[i].take() else { continue };
            if !self.nodes[i].needs_grad {
                grads[i] = Some(gout);
                continue;
            }
            self.propagate(i, &gout, &mut grads);
            grads[i] = Some(gout);
        }
        self.grads = grads;
        Ok(())
    }

    fn accumulate(&self, grads: &mut [Option<Tensor>], id: NodeId, delta: Tensor) {
        if !self.nodes[id.0].needs_grad {
            return;
        }
        match &mut grads[id.0] {
            Some(g) => g.add_assign(&delta),
            slot @ None => *slot = Some(delta),
        }
    }

    fn like(&self, id: NodeId, data: Vec<f64>) -> Tensor {
        Tensor::new(self.value(id).shape().to_vec(), data).expect("gradient shape")
    }

    fn propagate(&self, i: usize, gout: &Tensor, grads: &mut [Option<Tensor>]) {
        let out = &self.nodes[i].value;
        let go = gout.data();
        match &self.nodes[i].op {
            Op::Leaf => {}
            Op::MatMul(a, b) => {
                let (va, vb) = (self.value(*a), self.value(*b));
                let (m, k, n) = (va.rows(), va.cols(), vb.cols());
                if self.nodes[a.0].needs_grad {
                    let mut da = vec![0.0; m * k];
                    for r in 0..m {
                        let grow = &go[r * n..(r + 1) * n];
                        for p in 0..k {
                            let brow = vb.row(p);
                            da[r * k + p] = grow.iter().zip(brow).map(|(x, y)| x * y).sum();
                        }
                    }
                    self.accumulate(grads, *a, self.like(*a, da));
                }
                if self.nodes[b.0].needs_grad {
                    let mut db = vec![0.0; k * n];
                    for r in 0..m {
                        let grow = &go[r * n..(r + 1) * n];
                        for p in 0..k {
                            let av = va.get(r, p);
                            if av == 0.0 {
                                continue;
                            }
                            for (d, g) in db[p * n..(p + 1) * n].iter_mut().zip(grow) {
                                *d += av * g;
                            }
                        }
                    }
                    self.accumulate(grads, *b, self.like(*b, db));
                }
            }
            Op::Add(a, b) => {
                self.accumulate(grads, *a, gout.clone());
                self.accumulate(grads, *b, gout.clone());
            }
            Op::Sub(a, b) => {
                self.accumulate(grads, *a, gout.clone());
                let neg = go.iter().map(|g| -g).collect();
                self.accumulate(grads, *b, self.like(*b, neg));
            }
            Op::Mul(a, b) => {
                let (va, vb) = (self.value(*a).data(), self.value(*b).data());
                let da = go.iter().zip(vb).map(|(g, y)| g * y).collect();
                let db = go.iter().zip(va).map(|(g, x)| g * x).collect();
                self.accumulate(grads, *a, self.like(*a, da));
                self.accumulate(grads, *b, self.like(*b, db));
            }
            Op::AddRow(m, row) => {
                self.accumulate(grads, *m, gout.clone());
                let n = self.value(*row).len();
                let mut dr = vec![0.0; n];
                for (j, g) in go.iter().enumerate() {
                    dr[j % n] += g;
                }
                self.accumulate(grads, *row, Tensor::vector(dr));
            }
            Op::Scale(a, s) => {
                let d = go.iter().map(|g| g * s).collect();
                self.accumulate(grads, *a, self.like(*a, d));
            }
            Op::Tanh(a) => {
                let d = go.iter().zip(out.data()).map(|(g, y)| g * (1.0 - y * y)).collect();
                self.accumulate(grads, *a, self.like(*a, d));
            }
            Op::Sigmoid(a) => {
                let d = go.iter().zip(out.data()).map(|(g, y)| g * y * (1.0 - y)).collect();
                self.accumulate(grads, *a, self.like(*a, d));
            }
            Op::Mask(a, mask) => {
                let d = go.iter().zip(mask).map(|(g, m)| g * m).collect();
                self.accumulate(grads, *a, self.like(*a, d));
            }
            Op::Reshape(a) => {
                self.accumulate(grads, *a, self.like(*a, go.to_vec()));
            }
            Op::Gather { table, indices } => {
                let t = self.value(*table);
                let d = t.cols();
                let mut dt = vec![0.0; t.len()];
                for (r, &idx) in indices.iter().enumerate() {
                    for (x, g) in dt[idx * d..(idx + 1) * d].iter_mut().zip(&go[r * d..(r + 1) * d]) {
                        *x += g;
                    }
                }
                self.accumulate(grads, *table, self.like(*table, dt));
            }
            Op::PadRows(a) => {
                let n = self.value(*a).len();
                self.accumulate(grads, *a, self.like(*a, go[..n].to_vec()));
            }
            Op::Conv1d {
                input,
                weight,
                bias,
                width,
            } => self.conv_backward(*input, *weight, *bias, *width, go, grads),
            Op::MaxPoolTime { input, argmax } => {
                let vi = self.value(*input);
                let cols = vi.cols();
                let mut d = vec![0.0; vi.len()];
                for (c, &r) in argmax.iter().enumerate() {
                    d[r * cols + c] += go[c];
                }
                self.accumulate(grads, *input, self.like(*input, d));
            }
            Op::MeanRows(a) => {
                let va = self.value(*a);
                let (r, c) = (va.rows(), va.cols());
                let inv = 1.0 / r as f64;
                let mut d = Vec::with_capacity(r * c);
                for _ in 0..r {
                    d.extend(go.iter().map(|g| g * inv));
                }
                self.accumulate(grads, *a, self.like(*a, d));
            }
            Op::Concat(parts) => {
                let mut offset = 0;
                for p in parts {
                    let n = self.value(*p).len();
                    self.accumulate(grads, *p, self.like(*p, go[offset..offset + n].to_vec()));
                    offset += n;
                }
            }
            Op::Slice { input, start } => {
                let mut d = vec![0.0; self.value(*input).len()];
                d[*start..*start + go.len()].copy_from_slice(go);
                self.accumulate(grads, *input, self.like(*input, d));
            }
            Op::Softmax { input, tau } => {
                let y = out.data();
                let dot: f64 = go.iter().zip(y).map(|(g, p)| g * p).sum();
                let d = go.iter().zip(y).map(|(g, p)| p * (g - dot) / tau).collect();
                self.accumulate(grads, *input, self.like(*input, d));
            }
            Op::CrossEntropy { logits, label } => {
                let l = self.value(*logits).data();
                let lse = kernels::log_sum_exp(l);
                let g = go[0];
                let d = l
                    .iter()
                    .enumerate()
                    .map(|(j, &x)| g * ((x - lse).exp() - if j == *label { 1.0 } else { 0.0 }))
                    .collect();
                self.accumulate(grads, *logits, self.like(*logits, d));
            }
            Op::Kl { p, q } => {
                let (vp, vq) = (self.value(*p).data(), self.value(*q).data());
                let g = go[0];
                let dp = vp
                    .iter()
                    .zip(vq)
                    .map(|(&pi, &qi)| if pi == 0.0 { 0.0 } else { g * ((pi / qi).ln() + 1.0) })
                    .collect();
                let dq = vp
                    .iter()
                    .zip(vq)
                    .map(|(&pi, &qi)| if pi == 0.0 { 0.0 } else { -g * pi / qi })
                    .collect();
                self.accumulate(grads, *p, self.like(*p, dp));
                self.accumulate(grads, *q, self.like(*q, dq));
            }
        }
    }

    fn conv_backward(
        &self,
        input: NodeId,
        weight: NodeId,
        bias: NodeId,
        width: usize,
        go: &[f64],
        grads: &mut [Option<Tensor>],
    ) {
        let (x, w) = (self.value(input), self.value(weight));
        let (len, d) = (x.rows(), x.cols());
        let filters = w.cols();
        let left = (width - 1) / 2;
        let (xd, wd) = (x.data(), w.data());
        let need_x = self.nodes[input.0].needs_grad;
        let need_w = self.nodes[weight.0].needs_grad;
        let mut dx = vec![0.0; if need_x { x.len() } else { 0 }];
        let mut dw = vec![0.0; if need_w { w.len() } else { 0 }];
        for i in 0..len {
            let grow = &go[i * filters..(i + 1) * filters];
            for k in 0..width {
                let r = i + k;
                if r < left || r - left >= len {
                    continue;
                }
                let src = r - left;
                for c in 0..d {
                    let wi = (k * d + c) * filters;
                    if need_x {
                        let wrow = &wd[wi..wi + filters];
                        dx[src * d + c] += grow.iter().zip(wrow).map(|(g, w)| g * w).sum::<f64>();
                    }
                    if need_w {
                        let xv = xd[src * d + c];
                        if xv != 0.0 {
                            for (dwv, g) in dw[wi..wi + filters].iter_mut().zip(grow) {
                                *dwv += xv * g;
                            }
                        }
                    }
                }
            }
        }
        if need_x {
            self.accumulate(grads, input, self.like(input, dx));
        }
        if need_w {
            self.accumulate(grads, weight, self.like(weight, dw));
        }
        let mut db = vec![0.0; filters];
        for i in 0..len {
            for (b, g) in db.iter_mut().zip(&go[i * filters..(i + 1) * filters]) {
                *b += g;
            }
        }
        self.accumulate(grads, bias, Tensor::vector(db));
    }
}

pub(crate) fn sigmoid(x: f64) -> f64 {
    if x >= 0.0 {
        1.0 / (1.0 + (-x).exp())
    } else {
        let e = x.exp();
        e / (1.0 + e)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn matmul_backward_hand_values() {
        let mut g = Graph::new();
        let a = g.param(Tensor::matrix(&[&[1.0, 2.0]]).unwrap());
        let b = g.param(Tensor::matrix(&[&[3.0], &[4.0]]).unwrap());
        let c = g.matmul(a, b).unwrap();
        assert_eq!(g.value(c).data(), &[11.0]);
        g.backward(c).unwrap();
        assert_eq!(g.grad(a).data(), &[3.0, 4.0]);
        assert_eq!(g.grad(b).data(), &[1.0, 2.0]);
    }

    #[test]
    fn constants_receive_no_gradient() {
        let mut g = Graph::new();
        let x = g.param(Tensor::vector(vec![1.0, 2.0]));
        let t = g.constant(Tensor::vector(vec![3.0, 4.0]));
        let p = g.mul(x, t).unwrap();
        let s = g.reshape(p, vec![1, 2]).unwrap();
        let ones = g.constant(Tensor::matrix(&[&[1.0], &[1.0]]).unwrap());
        let y = g.matmul(s, ones).unwrap();
        g.backward(y).unwrap();
        assert_eq!(g.grad(x).data(), &[3.0, 4.0]);
        assert_eq!(g.grad(t).data(), &[0.0, 0.0]);
    }

    #[test]
    fn max_pool_ties_route_to_first_index() {
        let mut g = Graph::new();
        let x = g.param(Tensor::matrix(&[&[2.0], &[2.0], &[2.0]]).unwrap());
        let m = g.max_pool_time(x).unwrap();
        let y = g.reshape(m, vec![]).unwrap();
        g.backward(y).unwrap();
        assert_eq!(g.grad(x).data(), &[1.0, 0.0, 0.0]);
    }

    #[test]
    fn backward_requires_scalar() {
        let mut g = Graph::new();
        let x = g.param(Tensor::vector(vec![1.0, 2.0]));
        assert!(g.backward(x).is_err());
    }

    #[test]
    fn gather_rejects_out_of_range() {
        let mut g = Graph::new();
        let t = g.param(Tensor::zeros(&[3, 2]));
        assert!(g.gather(t, &[0, 3]).is_err());
    }

    #[test]
    fn reused_node_accumulates() {
        let mut g = Graph::new();
        let x = g.param(Tensor::scalar(3.0));
        let y = g.mul(x, x).unwrap();
        let z = g.add(y, x).unwrap();
        g.backward(z).unwrap();
        assert_eq!(g.grad(x).item(), 7.0);
    }
}
