//! Reverse-mode automatic differentiation over dense tensors.
//!
//! A [`Graph`] is an append-only arena: every operation pushes a node whose
//! parents already exist, so node order is a topological order and the graph
//! is acyclic by construction. [`Graph::backward`] walks the arena in reverse
//! and accumulates vector-Jacobian products into each parent.
//!
//! One graph is built per training example and dropped after the update.
//! Parameter leaves borrow their tensors from the model, so building a graph
//! copies no weights.

use std::collections::BTreeMap;

use super::param::Param;
use super::tensor::{self, dot, matvec_raw, Tensor};
use crate::error::{Error, Result};

/// Handle to a node in a [`Graph`].
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Var(usize);

impl Var {
    pub fn index(self) -> usize {
        self.0
    }
}

/// Elementwise nonlinearities.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Pointwise {
    Sigmoid,
    Tanh,
    Relu,
    Log,
    Square,
    /// `ln(1 + e^x)`, used for numerically stable binary log-losses.
    Softplus,
}

impl Pointwise {
    fn apply(self, x: f64) -> f64 {
        match self {
            Pointwise::Sigmoid => tensor::sigmoid(x),
            Pointwise::Tanh => x.tanh(),
            Pointwise::Relu => x.max(0.0),
            Pointwise::Log => x.ln(),
            Pointwise::Square => x * x,
            Pointwise::Softplus => tensor::softplus(x),
        }
    }

    /// Derivative given the input `x` and the output `y`.
    fn derivative(self, x: f64, y: f64) -> f64 {
        match self {
            Pointwise::Sigmoid => y * (1.0 - y),
            Pointwise::Tanh => 1.0 - y * y,
            Pointwise::Relu => {
                if x > 0.0 {
                    1.0
                } else {
                    0.0
                }
            }
            Pointwise::Log => 1.0 / x,
            Pointwise::Square => 2.0 * x,
            Pointwise::Softplus => tensor::sigmoid(x),
        }
    }
}

#[derive(Clone, Debug)]
enum Op {
    Leaf,
    MatMul(Var, Var),
    MatVec(Var, Var),
    VecMat(Var, Var),
    Add(Var, Var),
    Sub(Var, Var),
    Mul(Var, Var),
    Scale(Var, f64),
    Pointwise(Var, Pointwise),
    Softmax(Var),
    LogSoftmax(Var),
    Concat(Vec<Var>),
    Slice(Var, usize),
    Stack(Vec<Var>),
    Sum(Var),
    Dot(Var, Var),
    Pick(Var, usize),
    Row(Var, usize),
}

enum Value<'a> {
    Owned(Tensor),
    Borrowed(&'a Tensor),
}

struct Node<'a> {
    value: Value<'a>,
    op: Op,
    requires_grad: bool,
}

impl Node<'_> {
    fn tensor(&self) -> &Tensor {
        match &self.value {
            Value::Owned(t) => t,
            Value::Borrowed(t) => t,
        }
    }
}

/// Computation graph for one forward/backward pass.
#[derive(Default)]
pub struct Graph<'a> {
    nodes: Vec<Node<'a>>,
    params: Vec<(String, Var)>,
}

impl<'a> Graph<'a> {
    pub fn new() -> Self {
        Graph {
            nodes: Vec::new(),
            params: Vec::new(),
        }
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    fn push(&mut self, value: Tensor, op: Op, requires_grad: bool) -> Var {
        self.nodes.push(Node {
            value: Value::Owned(value),
            op,
            requires_grad,
        });
        Var(self.nodes.len() - 1)
    }

    fn node(&self, v: Var) -> &Node<'a> {
        &self.nodes[v.0]
    }

    pub fn value(&self, v: Var) -> &Tensor {
        self.node(v).tensor()
    }

    pub fn data(&self, v: Var) -> &[f64] {
        self.value(v).data()
    }

    pub fn shape(&self, v: Var) -> &[usize] {
        self.value(v).shape()
    }

    pub fn requires_grad(&self, v: Var) -> bool {
        self.node(v).requires_grad
    }

    fn any_grad(&self, vars: &[Var]) -> bool {
        vars.iter().any(|v| self.node(*v).requires_grad)
    }

    /// A constant leaf; no gradient flows into it.
    pub fn constant(&mut self, value: Tensor) -> Var {
        self.push(value, Op::Leaf, false)
    }

    pub fn constant_ref(&mut self, value: &'a Tensor) -> Var {
        self.nodes.push(Node {
            value: Value::Borrowed(value),
            op: Op::Leaf,
            requires_grad: false,
        });
        Var(self.nodes.len() - 1)
    }

    /// An owned leaf that receives a gradient (used for inputs under test).
    pub fn input(&mut self, value: Tensor) -> Var {
        self.push(value, Op::Leaf, true)
    }

    /// A trainable parameter leaf, borrowed from the model and registered by name.
    pub fn param(&mut self, param: &'a Param) -> Var {
        self.nodes.push(Node {
            value: Value::Borrowed(param.value()),
            op: Op::Leaf,
            requires_grad: true,
        });
        let var = Var(self.nodes.len() - 1);
        self.params.push((param.name().to_string(), var));
        var
    }

    fn same_shape(&self, op: &'static str, a: Var, b: Var) -> Result<()> {
        if self.shape(a) != self.shape(b) {
            return Err(Error::Dimension {
                op,
                lhs: self.shape(a).to_vec(),
                rhs: self.shape(b).to_vec(),
            });
        }
        Ok(())
    }

    fn vector_len(&self, op: &'static str, v: Var) -> Result<usize> {
        match self.shape(v) {
            [n] => Ok(*n),
            other => Err(Error::Dimension {
                op,
                lhs: other.to_vec(),
                rhs: vec![],
            }),
        }
    }

    pub fn matmul(&mut self, a: Var, b: Var) -> Result<Var> {
        let out = tensor::matmul(self.value(a), self.value(b))?;
        let rg = self.any_grad(&[a, b]);
        Ok(self.push(out, Op::MatMul(a, b), rg))
    }

    /// `w · x` for a matrix `w` (`m×k`) and a vector `x` (`k`).
    pub fn matvec(&mut self, w: Var, x: Var) -> Result<Var> {
        let (m, k) = self.value(w).matrix_dims("matvec")?;
        let n = self.vector_len("matvec", x)?;
        if n != k {
            return Err(Error::Dimension {
                op: "matvec",
                lhs: self.shape(w).to_vec(),
                rhs: self.shape(x).to_vec(),
            });
        }
        let out = matvec_raw(self.data(w), m, k, self.data(x));
        let rg = self.any_grad(&[w, x]);
        Ok(self.push(Tensor::vector(out), Op::MatVec(w, x), rg))
    }

    /// `xᵀ · m` for a vector `x` (`n`) and a matrix `m` (`n×k`).
    pub fn vecmat(&mut self, x: Var, m: Var) -> Result<Var> {
        let n = self.vector_len("vecmat", x)?;
        let (rows, cols) = self.value(m).matrix_dims("vecmat")?;
        if rows != n {
            return Err(Error::Dimension {
                op: "vecmat",
                lhs: self.shape(x).to_vec(),
                rhs: self.shape(m).to_vec(),
            });
        }
        let mut out = vec![0.0; cols];
        let xs = self.data(x);
        let md = self.data(m);
        for (i, &xi) in xs.iter().enumerate() {
            for (o, &mv) in out.iter_mut().zip(&md[i * cols..(i + 1) * cols]) {
                *o += xi * mv;
            }
        }
        let rg = self.any_grad(&[x, m]);
        Ok(self.push(Tensor::vector(out), Op::VecMat(x, m), rg))
    }

    fn zip_with(&mut self, op: Op, a: Var, b: Var, f: impl Fn(f64, f64) -> f64) -> Var {
        let data = self
            .data(a)
            .iter()
            .zip(self.data(b))
            .map(|(x, y)| f(*x, *y))
            .collect();
        let shape = self.shape(a).to_vec();
        let rg = self.any_grad(&[a, b]);
        self.push(Tensor::new(shape, data).expect("zip_with shape"), op, rg)
    }

    pub fn add(&mut self, a: Var, b: Var) -> Result<Var> {
        self.same_shape("add", a, b)?;
        Ok(self.zip_with(Op::Add(a, b), a, b, |x, y| x + y))
    }

    pub fn sub(&mut self, a: Var, b: Var) -> Result<Var> {
        self.same_shape("sub", a, b)?;
        Ok(self.zip_with(Op::Sub(a, b), a, b, |x, y| x - y))
    }

    /// Elementwise (Hadamard) product.
    pub fn mul(&mut self, a: Var, b: Var) -> Result<Var> {
        self.same_shape("mul", a, b)?;
        Ok(self.zip_with(Op::Mul(a, b), a, b, |x, y| x * y))
    }

    pub fn scale(&mut self, a: Var, factor: f64) -> Var {
        let t = self.value(a);
        let out = Tensor::new(
            t.shape().to_vec(),
            t.data().iter().map(|x| x * factor).collect(),
        )
        .expect("scale shape");
        let rg = self.requires_grad(a);
        self.push(out, Op::Scale(a, factor), rg)
    }

    pub fn pointwise(&mut self, kind: Pointwise, a: Var) -> Result<Var> {
        let t = self.value(a);
        if kind == Pointwise::Log {
            if let Some(bad) = t.data().iter().find(|x| **x <= 0.0) {
                return Err(Error::Domain(format!("log of non-positive value {bad}")));
            }
        }
        let out = Tensor::new(
            t.shape().to_vec(),
            t.data().iter().map(|x| kind.apply(*x)).collect(),
        )
        .expect("pointwise shape");
        let rg = self.requires_grad(a);
        Ok(self.push(out, Op::Pointwise(a, kind), rg))
    }

    pub fn sigmoid(&mut self, a: Var) -> Var {
        self.pointwise(Pointwise::Sigmoid, a).expect("sigmoid is total")
    }

    pub fn tanh(&mut self, a: Var) -> Var {
        self.pointwise(Pointwise::Tanh, a).expect("tanh is total")
    }

    pub fn relu(&mut self, a: Var) -> Var {
        self.pointwise(Pointwise::Relu, a).expect("relu is total")
    }

    pub fn softplus(&mut self, a: Var) -> Var {
        self.pointwise(Pointwise::Softplus, a).expect("softplus is total")
    }

    pub fn square(&mut self, a: Var) -> Var {
        self.pointwise(Pointwise::Square, a).expect("square is total")
    }

    pub fn log(&mut self, a: Var) -> Result<Var> {
        self.pointwise(Pointwise::Log, a)
    }

    pub fn softmax(&mut self, a: Var) -> Result<Var> {
        self.vector_len("softmax", a)?;
        let out = tensor::softmax(self.data(a))?;
        let rg = self.requires_grad(a);
        Ok(self.push(Tensor::vector(out), Op::Softmax(a), rg))
    }

    pub fn log_softmax(&mut self, a: Var) -> Result<Var> {
        self.vector_len("log_softmax", a)?;
        let out = tensor::log_softmax(self.data(a))?;
        let rg = self.requires_grad(a);
        Ok(self.push(Tensor::vector(out), Op::LogSoftmax(a), rg))
    }

    /// Concatenates vectors end to end.
    pub fn concat(&mut self, parts: &[Var]) -> Result<Var> {
        if parts.is_empty() {
            return Err(Error::Domain("concat of zero vectors".into()));
        }
        let mut out = Vec::new();
        for p in parts {
            self.vector_len("concat", *p)?;
            out.extend_from_slice(self.data(*p));
        }
        let rg = self.any_grad(parts);
        Ok(self.push(Tensor::vector(out), Op::Concat(parts.to_vec()), rg))
    }

    /// `a[start..start + len]` of a vector.
    pub fn slice(&mut self, a: Var, start: usize, len: usize) -> Result<Var> {
        let n = self.vector_len("slice", a)?;
        if len == 0 || start + len > n {
            return Err(Error::Bounds {
                index: start + len,
                len: n,
            });
        }
        let out = self.data(a)[start..start + len].to_vec();
        let rg = self.requires_grad(a);
        Ok(self.push(Tensor::vector(out), Op::Slice(a, start), rg))
    }

    /// Stacks equal-length vectors as the rows of a matrix.
    pub fn stack(&mut self, rows: &[Var]) -> Result<Var> {
        if rows.is_empty() {
            return Err(Error::Domain("stack of zero rows".into()));
        }
        let cols = self.vector_len("stack", rows[0])?;
        let mut out = Vec::with_capacity(rows.len() * cols);
        for r in rows {
            let n = self.vector_len("stack", *r)?;
            if n != cols {
                return Err(Error::Dimension {
                    op: "stack",
                    lhs: vec![cols],
                    rhs: vec![n],
                });
            }
            out.extend_from_slice(self.data(*r));
        }
        let rg = self.any_grad(rows);
        let t = Tensor::matrix(rows.len(), cols, out)?;
        Ok(self.push(t, Op::Stack(rows.to_vec()), rg))
    }

    pub fn sum(&mut self, a: Var) -> Var {
        let s = self.data(a).iter().sum();
        let rg = self.requires_grad(a);
        self.push(Tensor::scalar(s), Op::Sum(a), rg)
    }

    pub fn dot(&mut self, a: Var, b: Var) -> Result<Var> {
        self.same_shape("dot", a, b)?;
        let s = dot(self.data(a), self.data(b));
        let rg = self.any_grad(&[a, b]);
        Ok(self.push(Tensor::scalar(s), Op::Dot(a, b), rg))
    }

    /// Element `i` of a vector, as a scalar.
    pub fn pick(&mut self, a: Var, i: usize) -> Result<Var> {
        let n = self.vector_len("pick", a)?;
        if i >= n {
            return Err(Error::Bounds { index: i, len: n });
        }
        let v = self.data(a)[i];
        let rg = self.requires_grad(a);
        Ok(self.push(Tensor::scalar(v), Op::Pick(a, i), rg))
    }

    /// Row `i` of a matrix, as a vector (embedding lookup).
    pub fn row(&mut self, m: Var, i: usize) -> Result<Var> {
        let (rows, _) = self.value(m).matrix_dims("row")?;
        if i >= rows {
            return Err(Error::Bounds { index: i, len: rows });
        }
        let out = self.value(m).row(i).to_vec();
        let rg = self.requires_grad(m);
        Ok(self.push(Tensor::vector(out), Op::Row(m, i), rg))
    }

    /// Runs reverse-mode differentiation from a scalar `loss`.
    ///
    /// Nodes that do not lie on a path to `loss` receive no gradient; the
    /// accessors on [`Gradients`] report zeros for them.
    pub fn backward(&self, loss: Var) -> Result<Gradients> {
        if !self.value(loss).is_scalar() {
            return Err(Error::Contract(format!(
                "backward needs a scalar loss, got shape {:?}",
                self.shape(loss)
            )));
        }
        let mut grads: Vec<Option<Vec<f64>>> = vec![None; loss.0 + 1];
        grads[loss.0] = Some(vec![1.0]);

        for i in (0..=loss.0).rev() {
            let node = &self.nodes[i];
            if !node.requires_grad {
                continue;
            }
            if matches!(node.op, Op::Leaf) {
                continue;
            }
            let Some(upstream) = grads[i].take() else {
                continue;
            };
            self.propagate(node, &upstream, &mut grads);
        }

        let shapes = grads
            .iter()
            .enumerate()
            .map(|(i, _)| self.nodes[i].tensor().shape().to_vec())
            .collect();
        Ok(Gradients {
            by_node: grads,
            shapes,
            params: self.params.clone(),
        })
    }

    fn propagate(&self, node: &Node<'a>, up: &[f64], grads: &mut [Option<Vec<f64>>]) {
        let mut acc = |v: Var, f: &mut dyn FnMut(&mut [f64])| {
            if !self.node(v).requires_grad {
                return;
            }
            let slot = grads[v.0].get_or_insert_with(|| vec![0.0; self.value(v).len()]);
            f(slot);
        };
        match &node.op {
            Op::Leaf => {}
            Op::MatMul(a, b) => {
                let (m, k) = self.value(*a).matrix_dims("matmul").unwrap();
                let n = self.shape(*b)[1];
                let ad = self.data(*a);
                let bd = self.data(*b);
                // dA = dY · Bᵀ, dB = Aᵀ · dY
                acc(*a, &mut |g| {
                    for i in 0..m {
                        for p in 0..k {
                            g[i * k + p] += dot(&up[i * n..(i + 1) * n], &bd[p * n..(p + 1) * n]);
                        }
                    }
                });
                acc(*b, &mut |g| {
                    for i in 0..m {
                        for p in 0..k {
                            let aip = ad[i * k + p];
                            for j in 0..n {
                                g[p * n + j] += aip * up[i * n + j];
                            }
                        }
                    }
                });
            }
            Op::MatVec(w, x) => {
                let (m, k) = self.value(*w).matrix_dims("matvec").unwrap();
                let wd = self.data(*w);
                let xd = self.data(*x);
                acc(*w, &mut |g| {
                    for i in 0..m {
                        let ui = up[i];
                        if ui == 0.0 {
                            continue;
                        }
                        for (gv, xv) in g[i * k..(i + 1) * k].iter_mut().zip(xd) {
                            *gv += ui * xv;
                        }
                    }
                });
                acc(*x, &mut |g| {
                    for i in 0..m {
                        let ui = up[i];
                        for (gv, wv) in g.iter_mut().zip(&wd[i * k..(i + 1) * k]) {
                            *gv += ui * wv;
                        }
                    }
                });
            }
            Op::VecMat(x, mat) => {
                let (rows, cols) = self.value(*mat).matrix_dims("vecmat").unwrap();
                let xd = self.data(*x);
                let md = self.data(*mat);
                acc(*x, &mut |g| {
                    for i in 0..rows {
                        g[i] += dot(&md[i * cols..(i + 1) * cols], up);
                    }
                });
                acc(*mat, &mut |g| {
                    for i in 0..rows {
                        for (gv, uv) in g[i * cols..(i + 1) * cols].iter_mut().zip(up) {
                            *gv += xd[i] * uv;
                        }
                    }
                });
            }
            Op::Add(a, b) => {
                acc(*a, &mut |g| add_into(g, up));
                acc(*b, &mut |g| add_into(g, up));
            }
            Op::Sub(a, b) => {
                acc(*a, &mut |g| add_into(g, up));
                acc(*b, &mut |g| {
                    for (gv, uv) in g.iter_mut().zip(up) {
                        *gv -= uv;
                    }
                });
            }
            Op::Mul(a, b) => {
                let ad = self.data(*a);
                let bd = self.data(*b);
                acc(*a, &mut |g| {
                    for ((gv, uv), bv) in g.iter_mut().zip(up).zip(bd) {
                        *gv += uv * bv;
                    }
                });
                acc(*b, &mut |g| {
                    for ((gv, uv), av) in g.iter_mut().zip(up).zip(ad) {
                        *gv += uv * av;
                    }
                });
            }
            Op::Scale(a, factor) => {
                acc(*a, &mut |g| {
                    for (gv, uv) in g.iter_mut().zip(up) {
                        *gv += uv * factor;
                    }
                });
            }
            Op::Pointwise(a, kind) => {
                let xs = self.data(*a);
                let ys = node.tensor().data();
                acc(*a, &mut |g| {
                    for i in 0..g.len() {
                        g[i] += up[i] * kind.derivative(xs[i], ys[i]);
                    }
                });
            }
            Op::Softmax(a) => {
                let ys = node.tensor().data();
                let s = dot(up, ys);
                acc(*a, &mut |g| {
                    for i in 0..g.len() {
                        g[i] += ys[i] * (up[i] - s);
                    }
                });
            }
            Op::LogSoftmax(a) => {
                let ys = node.tensor().data();
                let total: f64 = up.iter().sum();
                acc(*a, &mut |g| {
                    for i in 0..g.len() {
                        g[i] += up[i] - ys[i].exp() * total;
                    }
                });
            }
            Op::Concat(parts) => {
                let mut offset = 0;
                for p in parts {
                    let n = self.value(*p).len();
                    let seg = &up[offset..offset + n];
                    acc(*p, &mut |g| add_into(g, seg));
                    offset += n;
                }
            }
            Op::Slice(a, start) => {
                let start = *start;
                acc(*a, &mut |g| add_into(&mut g[start..start + up.len()], up));
            }
            Op::Stack(rows) => {
                let cols = node.tensor().shape()[1];
                for (r, v) in rows.iter().enumerate() {
                    let seg = &up[r * cols..(r + 1) * cols];
                    acc(*v, &mut |g| add_into(g, seg));
                }
            }
            Op::Sum(a) => {
                let u = up[0];
                acc(*a, &mut |g| g.iter_mut().for_each(|gv| *gv += u));
            }
            Op::Dot(a, b) => {
                let u = up[0];
                let ad = self.data(*a);
                let bd = self.data(*b);
                acc(*a, &mut |g| {
                    for (gv, bv) in g.iter_mut().zip(bd) {
                        *gv += u * bv;
                    }
                });
                acc(*b, &mut |g| {
                    for (gv, av) in g.iter_mut().zip(ad) {
                        *gv += u * av;
                    }
                });
            }
            Op::Pick(a, i) => {
                let i = *i;
                acc(*a, &mut |g| g[i] += up[0]);
            }
            Op::Row(m, i) => {
                let cols = self.shape(*m)[1];
                let i = *i;
                acc(*m, &mut |g| add_into(&mut g[i * cols..(i + 1) * cols], up));
            }
        }
    }
}

fn add_into(g: &mut [f64], up: &[f64]) {
    for (gv, uv) in g.iter_mut().zip(up) {
        *gv += uv;
    }
}

/// Result of [`Graph::backward`]: per-node gradients plus the named parameter leaves.
#[derive(Clone, Debug)]
pub struct Gradients {
    by_node: Vec<Option<Vec<f64>>>,
    shapes: Vec<Vec<usize>>,
    params: Vec<(String, Var)>,
}

impl Gradients {
    /// Gradient with respect to `v`, or `None` when no path reaches it.
    pub fn get(&self, v: Var) -> Option<&[f64]> {
        self.by_node.get(v.0).and_then(|g| g.as_deref())
    }

    /// Gradient with respect to `v`, with zeros for unreachable nodes.
    pub fn wrt(&self, v: Var) -> Vec<f64> {
        match self.get(v) {
            Some(g) => g.to_vec(),
            None => vec![0.0; self.shapes.get(v.0).map(|s| s.iter().product()).unwrap_or(0)],
        }
    }

    /// Owned gradients for every parameter leaf, keyed by parameter name.
    ///
    /// A parameter bound more than once would be reported under its last binding;
    /// models bind each parameter once per graph.
    pub fn into_param_grads(mut self) -> ParamGrads {
        let mut out = BTreeMap::new();
        for (name, var) in &self.params {
            let g = match self.by_node.get_mut(var.0).and_then(Option::take) {
                Some(g) => g,
                None => vec![0.0; self.shapes[var.0].iter().product()],
            };
            out.insert(name.clone(), g);
        }
        ParamGrads(out)
    }
}

/// Gradients for named parameters, detached from any graph.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct ParamGrads(pub BTreeMap<String, Vec<f64>>);

impl ParamGrads {
    pub fn get(&self, name: &str) -> Option<&[f64]> {
        self.0.get(name).map(Vec::as_slice)
    }

    pub fn iter(&self) -> impl Iterator<Item = (&str, &[f64])> {
        self.0.iter().map(|(k, v)| (k.as_str(), v.as_slice()))
    }

    pub fn global_norm(&self) -> f64 {
        self.0
            .values()
            .flat_map(|g| g.iter())
            .map(|v| v * v)
            .sum::<f64>()
            .sqrt()
    }

    /// Rescales all gradients so the global L2 norm is at most `max_norm`.
    /// Returns the norm before clipping.
    pub fn clip_global_norm(&mut self, max_norm: f64) -> f64 {
        let norm = self.global_norm();
        if norm > max_norm && norm > 0.0 {
            let factor = max_norm / norm;
            for g in self.0.values_mut() {
                g.iter_mut().for_each(|v| *v *= factor);
            }
        }
        norm
    }
}
