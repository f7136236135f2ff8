//! Reverse-mode differentiation over a linear tape.
//!
//! Every operation appends a node whose parents already live on the tape, so
//! node order is a topological order and `backward` is a single reverse sweep.

use std::rc::Rc;

use super::tensor::{matmul_nt_into, matmul_tn_into, Tensor};
use crate::error::{Error, Result};

/// Handle to a node on a [`Tape`].
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct Var(usize);

impl Var {
    pub fn index(self) -> usize {
        self.0
    }
}

/// Row-to-segment assignment for grouped reductions.
///
/// Row `r` of the input belongs to segment `ids[r]`; segments may be empty.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Segments {
    ids: Vec<usize>,
    count: usize,
    sizes: Vec<usize>,
}

impl Segments {
    pub fn new(ids: Vec<usize>, count: usize) -> Result<Self> {
        let mut sizes = vec![0; count];
        for &s in &ids {
            if s >= count {
                return Err(Error::contract(format!(
                    "segment id {s} out of range for {count} segments"
                )));
            }
            sizes[s] += 1;
        }
        Ok(Self { ids, count, sizes })
    }

    /// Segments from per-segment row counts, rows laid out contiguously.
    pub fn from_sizes(sizes: &[usize]) -> Self {
        let ids = sizes
            .iter()
            .enumerate()
            .flat_map(|(s, &n)| std::iter::repeat(s).take(n))
            .collect();
        Self {
            ids,
            count: sizes.len(),
            sizes: sizes.to_vec(),
        }
    }

    pub fn ids(&self) -> &[usize] {
        &self.ids
    }

    pub fn count(&self) -> usize {
        self.count
    }

    pub fn size(&self, segment: usize) -> usize {
        self.sizes[segment]
    }

    pub fn rows(&self) -> usize {
        self.ids.len()
    }
}

#[derive(Debug)]
enum Op {
    Leaf,
    Constant,
    MatMul(Var, Var),
    Add(Var, Var),
    Sub(Var, Var),
    Mul(Var, Var),
    AddRow(Var, Var),
    Affine(Var, f64),
    Relu(Var),
    Sigmoid(Var),
    Cos(Var),
    Log(Var),
    Clamp(Var, f64, f64),
    Concat(Vec<Var>),
    SumRows(Var),
    MeanRows(Var),
    SumAll(Var),
    MeanAll(Var),
    RowDot(Var, Var),
    GatherRows(Var, Rc<Vec<usize>>),
    ScaleRows(Var, Rc<Vec<f64>>),
    SegmentSum(Var, Rc<Segments>),
    SegmentMean(Var, Rc<Segments>),
    SegmentSoftmax(Var, Rc<Segments>),
}

#[derive(Debug)]
struct Node {
    value: Tensor,
    op: Op,
    requires_grad: bool,
    grad: Option<Tensor>,
}

/// Records a computation and differentiates a scalar output of it.
#[derive(Debug, Default)]
pub struct Tape {
    nodes: Vec<Node>,
}

fn dim_err(op: &'static str, a: &Tensor, b: &Tensor) -> Error {
    Error::Dimension {
        op,
        lhs: a.shape().to_vec(),
        rhs: b.shape().to_vec(),
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

    /// A differentiable input; its gradient is accumulated by [`Tape::backward`].
    pub fn leaf(&mut self, value: Tensor) -> Var {
        self.push(value, Op::Leaf, true)
    }

    pub fn constant(&mut self, value: Tensor) -> Var {
        self.push(value, Op::Constant, false)
    }

    pub fn value(&self, v: Var) -> &Tensor {
        &self.nodes[v.0].value
    }

    /// Accumulated gradient of a leaf, zeros if nothing has flowed into it.
    pub fn grad(&self, v: Var) -> Tensor {
        let node = &self.nodes[v.0];
        node.grad
            .clone()
            .unwrap_or_else(|| Tensor::zeros(node.value.shape()))
    }

    pub fn zero_grads(&mut self) {
        for node in &mut self.nodes {
            node.grad = None;
        }
    }

    fn push(&mut self, value: Tensor, op: Op, requires_grad: bool) -> Var {
        self.nodes.push(Node {
            value,
            op,
            requires_grad,
            grad: None,
        });
        Var(self.nodes.len() - 1)
    }

    fn rg(&self, vars: &[Var]) -> bool {
        vars.iter().any(|v| self.nodes[v.0].requires_grad)
    }

    fn unary(&mut self, x: Var, value: Tensor, op: Op) -> Var {
        let rg = self.rg(&[x]);
        self.push(value, op, rg)
    }

    pub fn matmul(&mut self, a: Var, b: Var) -> Result<Var> {
        let value = self.value(a).matmul(self.value(b))?;
        let rg = self.rg(&[a, b]);
        Ok(self.push(value, Op::MatMul(a, b), rg))
    }

    fn zip_same(
        &mut self,
        op_name: &'static str,
        a: Var,
        b: Var,
        f: impl Fn(f64, f64) -> f64,
    ) -> Result<Tensor> {
        let (ta, tb) = (self.value(a), self.value(b));
        if ta.shape() != tb.shape() {
            return Err(dim_err(op_name, ta, tb));
        }
        let data = ta
            .data()
            .iter()
            .zip(tb.data())
            .map(|(&x, &y)| f(x, y))
            .collect();
        Tensor::new(ta.shape().to_vec(), data)
    }

    pub fn add(&mut self, a: Var, b: Var) -> Result<Var> {
        let value = self.zip_same("add", a, b, |x, y| x + y)?;
        let rg = self.rg(&[a, b]);
        Ok(self.push(value, Op::Add(a, b), rg))
    }

    pub fn sub(&mut self, a: Var, b: Var) -> Result<Var> {
        let value = self.zip_same("sub", a, b, |x, y| x - y)?;
        let rg = self.rg(&[a, b]);
        Ok(self.push(value, Op::Sub(a, b), rg))
    }

    pub fn mul(&mut self, a: Var, b: Var) -> Result<Var> {
        let value = self.zip_same("mul", a, b, |x, y| x * y)?;
        let rg = self.rg(&[a, b]);
        Ok(self.push(value, Op::Mul(a, b), rg))
    }

    /// `x[m x n] + bias[1 x n]` broadcast over rows.
    pub fn add_row(&mut self, x: Var, bias: Var) -> Result<Var> {
        let (tx, tb) = (self.value(x), self.value(bias));
        let (m, n) = tx.dims2("add_row")?;
        if tb.shape() != [1, n] {
            return Err(dim_err("add_row", tx, tb));
        }
        let mut data = tx.data().to_vec();
        for r in 0..m {
            for (o, &b) in data[r * n..(r + 1) * n].iter_mut().zip(tb.data()) {
                *o += b;
            }
        }
        let value = Tensor::new(vec![m, n], data)?;
        let rg = self.rg(&[x, bias]);
        Ok(self.push(value, Op::AddRow(x, bias), rg))
    }

    /// `scale * x + shift`.
    pub fn affine(&mut self, x: Var, scale: f64, shift: f64) -> Var {
        let value = self.value(x).map(|v| scale * v + shift);
        self.unary(x, value, Op::Affine(x, scale))
    }

    pub fn scale(&mut self, x: Var, scale: f64) -> Var {
        self.affine(x, scale, 0.0)
    }

    pub fn relu(&mut self, x: Var) -> Var {
        let value = self.value(x).map(|v| v.max(0.0));
        self.unary(x, value, Op::Relu(x))
    }

    pub fn sigmoid(&mut self, x: Var) -> Var {
        let value = self.value(x).map(sigmoid);
        self.unary(x, value, Op::Sigmoid(x))
    }

    pub fn cos(&mut self, x: Var) -> Var {
        let value = self.value(x).map(f64::cos);
        self.unary(x, value, Op::Cos(x))
    }

    pub fn log(&mut self, x: Var) -> Var {
        let value = self.value(x).map(f64::ln);
        self.unary(x, value, Op::Log(x))
    }

    /// Clamp into `[lo, hi]`; the gradient is zero where the bound is active.
    pub fn clamp(&mut self, x: Var, lo: f64, hi: f64) -> Var {
        let value = self.value(x).map(|v| v.clamp(lo, hi));
        self.unary(x, value, Op::Clamp(x, lo, hi))
    }

    /// Concatenate along the last axis; all leading dimensions must agree.
    pub fn concat(&mut self, parts: &[Var]) -> Result<Var> {
        let first = parts
            .first()
            .ok_or_else(|| Error::contract("concat of zero tensors"))?;
        let lead_shape = {
            let s = self.value(*first).shape();
            s[..s.len().saturating_sub(1)].to_vec()
        };
        let outer: usize = lead_shape.iter().product();
        let mut widths = Vec::with_capacity(parts.len());
        for &p in parts {
            let t = self.value(p);
            let s = t.shape();
            if s.is_empty() || s[..s.len() - 1] != lead_shape[..] {
                return Err(dim_err("concat", self.value(*first), t));
            }
            widths.push(s[s.len() - 1]);
        }
        let total: usize = widths.iter().sum();
        let mut data = Vec::with_capacity(outer * total);
        for o in 0..outer {
            for (&p, &w) in parts.iter().zip(&widths) {
                data.extend_from_slice(&self.value(p).data()[o * w..(o + 1) * w]);
            }
        }
        let mut shape = lead_shape;
        shape.push(total);
        let value = Tensor::new(shape, data)?;
        let rg = self.rg(parts);
        Ok(self.push(value, Op::Concat(parts.to_vec()), rg))
    }

    /// Column sums of `[m x n]`, giving `[1 x n]`.
    pub fn sum_rows(&mut self, x: Var) -> Result<Var> {
        let value = column_sums(self.value(x), "sum_rows")?;
        Ok(self.unary(x, value, Op::SumRows(x)))
    }

    /// Column means of `[m x n]`, giving `[1 x n]`. Zero rows gives zeros.
    pub fn mean_rows(&mut self, x: Var) -> Result<Var> {
        let m = self.value(x).dims2("mean_rows")?.0;
        let mut value = column_sums(self.value(x), "mean_rows")?;
        if m > 0 {
            for v in value.data_mut() {
                *v /= m as f64;
            }
        }
        Ok(self.unary(x, value, Op::MeanRows(x)))
    }

    pub fn sum_all(&mut self, x: Var) -> Var {
        let value = Tensor::scalar(self.value(x).data().iter().sum());
        self.unary(x, value, Op::SumAll(x))
    }

    pub fn mean_all(&mut self, x: Var) -> Result<Var> {
        let t = self.value(x);
        if t.numel() == 0 {
            return Err(Error::contract("mean of empty tensor"));
        }
        let value = Tensor::scalar(t.data().iter().sum::<f64>() / t.numel() as f64);
        Ok(self.unary(x, value, Op::MeanAll(x)))
    }

    /// Row-wise dot product of two `[m x n]` tensors, giving `[m x 1]`.
    pub fn row_dot(&mut self, a: Var, b: Var) -> Result<Var> {
        let (ta, tb) = (self.value(a), self.value(b));
        let (m, n) = ta.dims2("row_dot")?;
        if ta.shape() != tb.shape() {
            return Err(dim_err("row_dot", ta, tb));
        }
        let data = (0..m)
            .map(|r| {
                ta.data()[r * n..(r + 1) * n]
                    .iter()
                    .zip(&tb.data()[r * n..(r + 1) * n])
                    .map(|(x, y)| x * y)
                    .sum()
            })
            .collect();
        let value = Tensor::column(data);
        let rg = self.rg(&[a, b]);
        Ok(self.push(value, Op::RowDot(a, b), rg))
    }

    /// Rows of `x` selected by `index` (repeats allowed).
    pub fn gather_rows(&mut self, x: Var, index: Rc<Vec<usize>>) -> Result<Var> {
        let t = self.value(x);
        let (m, n) = t.dims2("gather_rows")?;
        let mut data = Vec::with_capacity(index.len() * n);
        for &r in index.iter() {
            if r >= m {
                return Err(Error::contract(format!(
                    "gather_rows index {r} out of range for {m} rows"
                )));
            }
            data.extend_from_slice(&t.data()[r * n..(r + 1) * n]);
        }
        let value = Tensor::new(vec![index.len(), n], data)?;
        Ok(self.unary(x, value, Op::GatherRows(x, index)))
    }

    /// Multiplies row `r` of `x` by the constant `weights[r]`.
    pub fn scale_rows(&mut self, x: Var, weights: Rc<Vec<f64>>) -> Result<Var> {
        let t = self.value(x);
        let (m, n) = t.dims2("scale_rows")?;
        if weights.len() != m {
            return Err(Error::Dimension {
                op: "scale_rows",
                lhs: t.shape().to_vec(),
                rhs: vec![weights.len()],
            });
        }
        let mut data = t.data().to_vec();
        for (r, &w) in weights.iter().enumerate() {
            for v in &mut data[r * n..(r + 1) * n] {
                *v *= w;
            }
        }
        let value = Tensor::new(vec![m, n], data)?;
        Ok(self.unary(x, value, Op::ScaleRows(x, weights)))
    }

    fn check_segments(&self, x: Var, seg: &Segments, op: &'static str) -> Result<(usize, usize)> {
        let t = self.value(x);
        let (m, n) = t.dims2(op)?;
        if m != seg.rows() {
            return Err(Error::Dimension {
                op,
                lhs: t.shape().to_vec(),
                rhs: vec![seg.rows()],
            });
        }
        Ok((m, n))
    }

    /// Sums the rows of each segment, giving `[segments x n]`.
    pub fn segment_sum(&mut self, x: Var, seg: Rc<Segments>) -> Result<Var> {
        let (_, n) = self.check_segments(x, &seg, "segment_sum")?;
        let value = segment_sums(self.value(x), &seg, n);
        Ok(self.unary(x, value, Op::SegmentSum(x, seg)))
    }

    /// Means over the rows of each segment; empty segments give zero rows.
    pub fn segment_mean(&mut self, x: Var, seg: Rc<Segments>) -> Result<Var> {
        let (_, n) = self.check_segments(x, &seg, "segment_mean")?;
        let mut value = segment_sums(self.value(x), &seg, n);
        for s in 0..seg.count() {
            let size = seg.size(s);
            if size > 0 {
                for v in &mut value.data_mut()[s * n..(s + 1) * n] {
                    *v /= size as f64;
                }
            }
        }
        Ok(self.unary(x, value, Op::SegmentMean(x, seg)))
    }

    /// Softmax over the rows of each segment, independently per column.
    pub fn segment_softmax(&mut self, x: Var, seg: Rc<Segments>) -> Result<Var> {
        let (m, n) = self.check_segments(x, &seg, "segment_softmax")?;
        let t = self.value(x);
        let mut maxes = vec![f64::NEG_INFINITY; seg.count() * n];
        for r in 0..m {
            let s = seg.ids()[r];
            for c in 0..n {
                let slot = &mut maxes[s * n + c];
                *slot = slot.max(t.data()[r * n + c]);
            }
        }
        let mut data = vec![0.0; m * n];
        let mut sums = vec![0.0; seg.count() * n];
        for r in 0..m {
            let s = seg.ids()[r];
            for c in 0..n {
                let e = (t.data()[r * n + c] - maxes[s * n + c]).exp();
                data[r * n + c] = e;
                sums[s * n + c] += e;
            }
        }
        for r in 0..m {
            let s = seg.ids()[r];
            for c in 0..n {
                data[r * n + c] /= sums[s * n + c];
            }
        }
        let value = Tensor::new(vec![m, n], data)?;
        Ok(self.unary(x, value, Op::SegmentSoftmax(x, seg)))
    }

    /// Fills leaf gradients with `d loss / d leaf`, adding to whatever the
    /// leaves already hold.
    pub fn backward(&mut self, loss: Var) -> Result<()> {
        if !self.nodes[loss.0].value.is_scalar() {
            return Err(Error::contract(format!(
                "backward needs a scalar loss, got shape {:?}",
                self.nodes[loss.0].value.shape()
            )));
        }
        let mut adj: Vec<Option<Tensor>> = (0..=loss.0).map(|_| None).collect();
        adj[loss.0] = Some(Tensor::ones(self.nodes[loss.0].value.shape()));

        for i in (0..=loss.0).rev() {
            let Some(g) = adj[i].take() else { continue };
            if !self.nodes[i].requires_grad {
                continue;
            }
            let node = &self.nodes[i];
            match &node.op {
                Op::Leaf => {
                    let node = &mut self.nodes[i];
                    match &mut node.grad {
                        Some(acc) => acc.add_assign(&g),
                        None => node.grad = Some(g),
                    }
                }
                Op::Constant => {}
                op => {
                    for (parent, contrib) in self.local_grads(op, &node.value, &g)? {
                        if !self.nodes[parent.0].requires_grad {
                            continue;
                        }
                        match &mut adj[parent.0] {
                            Some(acc) => acc.add_assign(&contrib),
                            slot @ None => *slot = Some(contrib),
                        }
                    }
                }
            }
        }
        Ok(())
    }

    fn needs(&self, v: Var) -> bool {
        self.nodes[v.0].requires_grad
    }

    fn local_grads(&self, op: &Op, out: &Tensor, g: &Tensor) -> Result<Vec<(Var, Tensor)>> {
        let val = |v: Var| &self.nodes[v.0].value;
        let mut res = Vec::with_capacity(2);
        match op {
            Op::Leaf | Op::Constant => {}
            Op::MatMul(a, b) => {
                let (m, k) = val(*a).dims2("matmul")?;
                let n = val(*b).cols();
                if self.needs(*a) {
                    let mut da = vec![0.0; m * k];
                    matmul_nt_into(g.data(), val(*b).data(), &mut da, m, n, k);
                    res.push((*a, Tensor::new(vec![m, k], da)?));
                }
                if self.needs(*b) {
                    let mut db = vec![0.0; k * n];
                    matmul_tn_into(val(*a).data(), g.data(), &mut db, m, k, n);
                    res.push((*b, Tensor::new(vec![k, n], db)?));
                }
            }
            Op::Add(a, b) => {
                res.push((*a, g.clone()));
                res.push((*b, g.clone()));
            }
            Op::Sub(a, b) => {
                res.push((*a, g.clone()));
                res.push((*b, g.map(|v| -v)));
            }
            Op::Mul(a, b) => {
                res.push((*a, zip(g, val(*b), |gv, bv| gv * bv)));
                res.push((*b, zip(g, val(*a), |gv, av| gv * av)));
            }
            Op::AddRow(x, bias) => {
                res.push((*x, g.clone()));
                if self.needs(*bias) {
                    res.push((*bias, column_sums(g, "add_row")?));
                }
            }
            Op::Affine(x, scale) => res.push((*x, g.map(|v| v * scale))),
            Op::Relu(x) => res.push((*x, zip(g, val(*x), |gv, xv| if xv > 0.0 { gv } else { 0.0 }))),
            Op::Sigmoid(x) => res.push((*x, zip(g, out, |gv, s| gv * s * (1.0 - s)))),
            Op::Cos(x) => res.push((*x, zip(g, val(*x), |gv, xv| -gv * xv.sin()))),
            Op::Log(x) => res.push((*x, zip(g, val(*x), |gv, xv| gv / xv))),
            Op::Clamp(x, lo, hi) => res.push((
                *x,
                zip(g, val(*x), |gv, xv| if xv > *lo && xv < *hi { gv } else { 0.0 }),
            )),
            Op::Concat(parts) => {
                let total = out.cols();
                let outer = out.numel() / total.max(1);
                let mut offset = 0;
                for &p in parts {
                    let pt = val(p);
                    let w = pt.cols();
                    if self.needs(p) {
                        let mut d = Vec::with_capacity(pt.numel());
                        for o in 0..outer {
                            d.extend_from_slice(&g.data()[o * total + offset..o * total + offset + w]);
                        }
                        res.push((p, Tensor::new(pt.shape().to_vec(), d)?));
                    }
                    offset += w;
                }
            }
            Op::SumRows(x) | Op::MeanRows(x) => {
                let (m, n) = val(*x).dims2("sum_rows")?;
                let scale = match op {
                    Op::MeanRows(_) if m > 0 => 1.0 / m as f64,
                    _ => 1.0,
                };
                let mut d = Vec::with_capacity(m * n);
                for _ in 0..m {
                    d.extend(g.data().iter().map(|v| v * scale));
                }
                res.push((*x, Tensor::new(vec![m, n], d)?));
            }
            Op::SumAll(x) | Op::MeanAll(x) => {
                let t = val(*x);
                let scale = match op {
                    Op::MeanAll(_) => 1.0 / t.numel() as f64,
                    _ => 1.0,
                };
                res.push((*x, Tensor::full(t.shape(), g.data()[0] * scale)));
            }
            Op::RowDot(a, b) => {
                let (m, n) = val(*a).dims2("row_dot")?;
                let scaled = |other: &Tensor| {
                    let mut d = other.data().to_vec();
                    for r in 0..m {
                        for v in &mut d[r * n..(r + 1) * n] {
                            *v *= g.data()[r];
                        }
                    }
                    Tensor::new(vec![m, n], d)
                };
                if self.needs(*a) {
                    res.push((*a, scaled(val(*b))?));
                }
                if self.needs(*b) {
                    res.push((*b, scaled(val(*a))?));
                }
            }
            Op::GatherRows(x, index) => {
                let (m, n) = val(*x).dims2("gather_rows")?;
                let mut d = vec![0.0; m * n];
                for (k, &r) in index.iter().enumerate() {
                    for (o, &gv) in d[r * n..(r + 1) * n].iter_mut().zip(&g.data()[k * n..(k + 1) * n]) {
                        *o += gv;
                    }
                }
                res.push((*x, Tensor::new(vec![m, n], d)?));
            }
            Op::ScaleRows(x, w) => {
                let n = g.cols();
                let mut d = g.data().to_vec();
                for (r, &wr) in w.iter().enumerate() {
                    for v in &mut d[r * n..(r + 1) * n] {
                        *v *= wr;
                    }
                }
                res.push((*x, Tensor::new(g.shape().to_vec(), d)?));
            }
            Op::SegmentSum(x, seg) | Op::SegmentMean(x, seg) => {
                let (m, n) = val(*x).dims2("segment_sum")?;
                let mean = matches!(op, Op::SegmentMean(..));
                let mut d = vec![0.0; m * n];
                for (r, &s) in seg.ids().iter().enumerate() {
                    let scale = if mean { 1.0 / seg.size(s) as f64 } else { 1.0 };
                    for (o, &gv) in d[r * n..(r + 1) * n].iter_mut().zip(&g.data()[s * n..(s + 1) * n]) {
                        *o = gv * scale;
                    }
                }
                res.push((*x, Tensor::new(vec![m, n], d)?));
            }
            Op::SegmentSoftmax(x, seg) => {
                let (m, n) = out.dims2("segment_softmax")?;
                let (y, gd) = (out.data(), g.data());
                let mut dots = vec![0.0; seg.count() * n];
                for r in 0..m {
                    let s = seg.ids()[r];
                    for c in 0..n {
                        dots[s * n + c] += y[r * n + c] * gd[r * n + c];
                    }
                }
                let mut d = vec![0.0; m * n];
                for r in 0..m {
                    let s = seg.ids()[r];
                    for c in 0..n {
                        d[r * n + c] = y[r * n + c] * (gd[r * n + c] - dots[s * n + c]);
                    }
                }
                res.push((*x, Tensor::new(vec![m, n], d)?));
            }
        }
        Ok(res)
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

fn zip(a: &Tensor, b: &Tensor, f: impl Fn(f64, f64) -> f64) -> Tensor {
    let data = a.data().iter().zip(b.data()).map(|(&x, &y)| f(x, y)).collect();
    Tensor::new(a.shape().to_vec(), data).expect("zip of equal shapes")
}

fn column_sums(t: &Tensor, op: &'static str) -> Result<Tensor> {
    let (m, n) = t.dims2(op)?;
    let mut out = vec![0.0; n];
    for r in 0..m {
        for (o, &v) in out.iter_mut().zip(&t.data()[r * n..(r + 1) * n]) {
            *o += v;
        }
    }
    Ok(Tensor::row(out))
}

fn segment_sums(t: &Tensor, seg: &Segments, n: usize) -> Tensor {
    let mut out = vec![0.0; seg.count() * n];
    for (r, &s) in seg.ids().iter().enumerate() {
        for (o, &v) in out[s * n..(s + 1) * n].iter_mut().zip(&t.data()[r * n..(r + 1) * n]) {
            *o += v;
        }
    }
    Tensor::new(vec![seg.count(), n], out).expect("segment sum shape")
}
