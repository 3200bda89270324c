//! A small reverse-mode tape over [`Tensor`] values.
//!
//! A [`Tape`] records one forward evaluation. Parameters are pulled from a
//! [`ParamStore`] by dotted name and become leaves; [`Tape::backward`] walks
//! the recorded nodes in reverse and returns a gradient for every node that
//! influenced the (scalar) root.

use std::collections::BTreeMap;

use ndarray::{s, Axis};

use crate::error::{shape_err, Error, Result};
use crate::tensor::{self, Tensor};

/// Flat map from dotted parameter names to arrays.
///
/// Convolution weights are `(C_out, C_in, k, k)`; per-channel vectors
/// (biases, norm scale/shift) are `(1, C, 1, 1)`.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct ParamStore {
    params: BTreeMap<String, Tensor>,
}

impl ParamStore {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn insert(&mut self, name: impl Into<String>, value: Tensor) {
        self.params.insert(name.into(), value);
    }

    pub fn get(&self, name: &str) -> Option<&Tensor> {
        self.params.get(name)
    }

    pub fn get_mut(&mut self, name: &str) -> Option<&mut Tensor> {
        self.params.get_mut(name)
    }

    pub fn iter(&self) -> impl Iterator<Item = (&String, &Tensor)> {
        self.params.iter()
    }

    pub fn iter_mut(&mut self) -> impl Iterator<Item = (&String, &mut Tensor)> {
        self.params.iter_mut()
    }

    pub fn names(&self) -> impl Iterator<Item = &String> {
        self.params.keys()
    }

    pub fn len(&self) -> usize {
        self.params.len()
    }

    pub fn is_empty(&self) -> bool {
        self.params.is_empty()
    }

    /// Total number of scalar parameters.
    pub fn num_scalars(&self) -> usize {
        self.params.values().map(|t| t.len()).sum()
    }

    /// Sets every parameter to zero.
    pub fn zero_all(&mut self) {
        for t in self.params.values_mut() {
            t.fill(0.0);
        }
    }

    /// Checks that `other` has exactly the same names and shapes; lists every mismatch.
    pub fn check_compatible(&self, other: &ParamStore) -> Result<()> {
        let mut bad = Vec::new();
        for (name, t) in &self.params {
            match other.params.get(name) {
                None => bad.push(format!("{name} (missing)")),
                Some(o) if o.dim() != t.dim() => {
                    bad.push(format!("{name} (expected {:?}, found {:?})", t.dim(), o.dim()))
                }
                _ => {}
            }
        }
        for name in other.params.keys() {
            if !self.params.contains_key(name) {
                bad.push(format!("{name} (unexpected)"));
            }
        }
        if bad.is_empty() {
            Ok(())
        } else {
            Err(Error::Checkpoint(format!(
                "incompatible parameters: {}",
                bad.join(", ")
            )))
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Var(usize);

enum Op {
    Leaf,
    Conv2d {
        x: Var,
        w: Var,
        b: Option<Var>,
        stride: usize,
        pad: usize,
    },
    Add(Var, Var),
    Mul(Var, Var),
    Scale(Var, f64),
    LeakyRelu(Var, f64),
    Sigmoid(Var),
    InstanceNorm {
        x: Var,
        gamma: Var,
        beta: Var,
        eps: f64,
    },
    Concat(Var, Var),
    GlobalAvgPool(Var),
    GlobalMaxPool(Var, Vec<usize>),
    ChannelMean(Var),
    ChannelMax(Var, Vec<usize>),
    Resize(Var),
    Sum(Var),
    /// Scalar computed outside the tape, with its local gradients already known.
    Fused(Vec<(Var, Tensor)>),
}

struct Node {
    value: Tensor,
    op: Op,
}

pub struct Tape<'s> {
    store: Option<&'s ParamStore>,
    nodes: Vec<Node>,
    param_vars: BTreeMap<String, Var>,
}

impl Default for Tape<'_> {
    fn default() -> Self {
        Self::new()
    }
}

impl<'s> Tape<'s> {
    /// A tape with no parameter store; only [`Tape::leaf`] inputs are available.
    pub fn new() -> Self {
        Tape {
            store: None,
            nodes: Vec::new(),
            param_vars: BTreeMap::new(),
        }
    }

    pub fn with_params(store: &'s ParamStore) -> Self {
        Tape {
            store: Some(store),
            ..Tape::new()
        }
    }

    fn push(&mut self, value: Tensor, op: Op) -> Var {
        self.nodes.push(Node { value, op });
        Var(self.nodes.len() - 1)
    }

    pub fn leaf(&mut self, value: Tensor) -> Var {
        self.push(value, Op::Leaf)
    }

    /// Leaf for the named parameter; repeated lookups return the same [`Var`].
    pub fn param(&mut self, name: &str) -> Result<Var> {
        if let Some(&v) = self.param_vars.get(name) {
            return Ok(v);
        }
        let value = self
            .store
            .and_then(|s| s.get(name))
            .ok_or_else(|| Error::Config(format!("unknown parameter `{name}`")))?
            .clone();
        let v = self.leaf(value);
        self.param_vars.insert(name.to_string(), v);
        Ok(v)
    }

    pub fn value(&self, v: Var) -> &Tensor {
        &self.nodes[v.0].value
    }

    pub fn shape(&self, v: Var) -> (usize, usize, usize, usize) {
        self.nodes[v.0].value.dim()
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn conv2d(&mut self, x: Var, w: Var, b: Option<Var>, stride: usize, pad: usize) -> Result<Var> {
        let value = tensor::conv2d(self.value(x), self.value(w), b.map(|b| self.value(b)), stride, pad)?;
        Ok(self.push(value, Op::Conv2d { x, w, b, stride, pad }))
    }

    pub fn add(&mut self, a: Var, b: Var) -> Result<Var> {
        if self.shape(a) != self.shape(b) {
            return Err(shape_err!("add: {:?} vs {:?}", self.shape(a), self.shape(b)));
        }
        let value = self.value(a) + self.value(b);
        Ok(self.push(value, Op::Add(a, b)))
    }

    /// Elementwise product; `b` may broadcast along any axis of length 1.
    pub fn mul(&mut self, a: Var, b: Var) -> Result<Var> {
        let (va, vb) = (self.value(a), self.value(b));
        if !tensor::broadcasts_to(vb.shape(), va.shape()) {
            return Err(shape_err!("mul: {:?} does not broadcast to {:?}", vb.dim(), va.dim()));
        }
        let value = va * &vb.broadcast(va.dim()).unwrap();
        Ok(self.push(value, Op::Mul(a, b)))
    }

    pub fn scale(&mut self, a: Var, factor: f64) -> Var {
        let value = self.value(a) * factor;
        self.push(value, Op::Scale(a, factor))
    }

    pub fn leaky_relu(&mut self, a: Var, slope: f64) -> Var {
        let value = self.value(a).mapv(|v| if v > 0.0 { v } else { slope * v });
        self.push(value, Op::LeakyRelu(a, slope))
    }

    pub fn relu(&mut self, a: Var) -> Var {
        self.leaky_relu(a, 0.0)
    }

    pub fn sigmoid(&mut self, a: Var) -> Var {
        let value = self.value(a).mapv(sigmoid);
        self.push(value, Op::Sigmoid(a))
    }

    pub fn instance_norm(&mut self, x: Var, gamma: Var, beta: Var, eps: f64) -> Result<Var> {
        let c = self.shape(x).1;
        if self.shape(gamma) != (1, c, 1, 1) || self.shape(beta) != (1, c, 1, 1) {
            return Err(shape_err!("instance_norm: affine params must be (1, {c}, 1, 1)"));
        }
        let value = tensor::instance_norm(self.value(x), self.value(gamma), self.value(beta), eps);
        Ok(self.push(value, Op::InstanceNorm { x, gamma, beta, eps }))
    }

    /// Concatenation along the channel axis.
    pub fn concat(&mut self, a: Var, b: Var) -> Result<Var> {
        let (sa, sb) = (self.shape(a), self.shape(b));
        if (sa.0, sa.2, sa.3) != (sb.0, sb.2, sb.3) {
            return Err(shape_err!("concat: {sa:?} vs {sb:?}"));
        }
        let value = ndarray::concatenate(Axis(1), &[self.value(a).view(), self.value(b).view()])
            .unwrap()
            .as_standard_layout()
            .into_owned();
        Ok(self.push(value, Op::Concat(a, b)))
    }

    /// Spatial mean per channel, `(N, C, 1, 1)`.
    pub fn global_avg_pool(&mut self, a: Var) -> Var {
        let (n, c, h, w) = self.shape(a);
        let v = self.value(a);
        let value = Tensor::from_shape_fn((n, c, 1, 1), |(s, ch, _, _)| {
            v.slice(s![s, ch, .., ..]).sum() / (h * w) as f64
        });
        self.push(value, Op::GlobalAvgPool(a))
    }

    /// Spatial max per channel, `(N, C, 1, 1)`; ties resolve to the first index.
    pub fn global_max_pool(&mut self, a: Var) -> Var {
        let (n, c, h, w) = self.shape(a);
        let v = self.value(a).as_slice().unwrap();
        let plane = h * w;
        let mut value = Tensor::zeros((n, c, 1, 1));
        let mut arg = Vec::with_capacity(n * c);
        for i in 0..n * c {
            let p = &v[i * plane..(i + 1) * plane];
            let (best, bv) = argmax(p);
            arg.push(i * plane + best);
            value.as_slice_mut().unwrap()[i] = bv;
        }
        self.push(value, Op::GlobalMaxPool(a, arg))
    }

    /// Mean over channels, `(N, 1, H, W)`.
    pub fn channel_mean(&mut self, a: Var) -> Var {
        let c = self.shape(a).1 as f64;
        let value = self.value(a).sum_axis(Axis(1)).insert_axis(Axis(1)) / c;
        self.push(value, Op::ChannelMean(a))
    }

    /// Max over channels, `(N, 1, H, W)`; ties resolve to the lowest channel.
    pub fn channel_max(&mut self, a: Var) -> Var {
        let (n, c, h, w) = self.shape(a);
        let v = self.value(a);
        let mut value = Tensor::zeros((n, 1, h, w));
        let mut arg = Vec::with_capacity(n * h * w);
        for s in 0..n {
            for y in 0..h {
                for x in 0..w {
                    let mut best = 0;
                    let mut bv = v[[s, 0, y, x]];
                    for ch in 1..c {
                        if v[[s, ch, y, x]] > bv {
                            bv = v[[s, ch, y, x]];
                            best = ch;
                        }
                    }
                    value[[s, 0, y, x]] = bv;
                    arg.push(best);
                }
            }
        }
        self.push(value, Op::ChannelMax(a, arg))
    }

    /// Bilinear resample to `out_h × out_w` (half-pixel centres).
    pub fn resize(&mut self, a: Var, out_h: usize, out_w: usize) -> Var {
        let value = tensor::resize_bilinear(self.value(a), out_h, out_w);
        self.push(value, Op::Resize(a))
    }

    /// Sum of all elements, as a `(1, 1, 1, 1)` scalar.
    pub fn sum(&mut self, a: Var) -> Var {
        let value = Tensor::from_elem((1, 1, 1, 1), self.value(a).sum());
        self.push(value, Op::Sum(a))
    }

    /// Records a scalar computed elsewhere together with `d value / d input` for each input.
    pub fn fused_scalar(&mut self, value: f64, local_grads: Vec<(Var, Tensor)>) -> Result<Var> {
        for (v, g) in &local_grads {
            if self.shape(*v) != g.dim() {
                return Err(shape_err!("fused gradient {:?} vs input {:?}", g.dim(), self.shape(*v)));
            }
        }
        Ok(self.push(Tensor::from_elem((1, 1, 1, 1), value), Op::Fused(local_grads)))
    }

    pub fn scalar(&self, v: Var) -> f64 {
        self.value(v).iter().next().copied().unwrap_or(0.0)
    }

    /// Reverse sweep from a scalar `root`.
    pub fn backward(&self, root: Var) -> Result<Grads> {
        if self.value(root).len() != 1 {
            return Err(shape_err!("backward root must be scalar, got {:?}", self.shape(root)));
        }
        let mut grads: Vec<Option<Tensor>> = vec![None; self.nodes.len()];
        grads[root.0] = Some(Tensor::ones((1, 1, 1, 1)));
        for i in (0..=root.0).rev() {
            let node = &self.nodes[i];
            if matches!(node.op, Op::Leaf) {
                continue;
            }
            let Some(g) = grads[i].take() else { continue };
            match &node.op {
                Op::Leaf => unreachable!(),
                Op::Conv2d { x, w, b, stride, pad } => {
                    let (gx, gw, gb) =
                        tensor::conv2d_backward(self.value(*x), self.value(*w), &g, *stride, *pad);
                    accumulate(&mut grads, *x, gx);
                    accumulate(&mut grads, *w, gw);
                    if let Some(b) = b {
                        accumulate(&mut grads, *b, gb);
                    }
                }
                Op::Add(a, b) => {
                    accumulate(&mut grads, *b, g.clone());
                    accumulate(&mut grads, *a, g);
                }
                Op::Mul(a, b) => {
                    let (va, vb) = (self.value(*a), self.value(*b));
                    let ga = &g * &vb.broadcast(va.dim()).unwrap();
                    let gb = tensor::reduce_to(&(&g * va), vb.dim());
                    accumulate(&mut grads, *a, ga);
                    accumulate(&mut grads, *b, gb);
                }
                Op::Scale(a, f) => accumulate(&mut grads, *a, g * *f),
                Op::LeakyRelu(a, slope) => {
                    let mut ga = g;
                    ga.zip_mut_with(self.value(*a), |gv, &x| {
                        if x <= 0.0 {
                            *gv *= slope
                        }
                    });
                    accumulate(&mut grads, *a, ga);
                }
                Op::Sigmoid(a) => {
                    let mut ga = g;
                    ga.zip_mut_with(&node.value, |gv, &y| *gv *= y * (1.0 - y));
                    accumulate(&mut grads, *a, ga);
                }
                Op::InstanceNorm { x, gamma, beta, eps } => {
                    let (gx, gg, gb) =
                        tensor::instance_norm_backward(self.value(*x), self.value(*gamma), &g, *eps);
                    accumulate(&mut grads, *x, gx);
                    accumulate(&mut grads, *gamma, gg);
                    accumulate(&mut grads, *beta, gb);
                }
                Op::Concat(a, b) => {
                    let ca = self.shape(*a).1;
                    let ga = g.slice(s![.., ..ca, .., ..]).to_owned();
                    let gb = g.slice(s![.., ca.., .., ..]).to_owned();
                    accumulate(&mut grads, *a, ga);
                    accumulate(&mut grads, *b, gb);
                }
                Op::GlobalAvgPool(a) => {
                    let dim = self.shape(*a);
                    let area = (dim.2 * dim.3) as f64;
                    let ga = (&g / area).broadcast(dim).unwrap().to_owned();
                    accumulate(&mut grads, *a, ga);
                }
                Op::GlobalMaxPool(a, arg) => {
                    let mut ga = Tensor::zeros(self.shape(*a));
                    let dst = ga.as_slice_mut().unwrap();
                    for (&idx, &gv) in arg.iter().zip(g.iter()) {
                        dst[idx] += gv;
                    }
                    accumulate(&mut grads, *a, ga);
                }
                Op::ChannelMean(a) => {
                    let dim = self.shape(*a);
                    let ga = (&g / dim.1 as f64).broadcast(dim).unwrap().to_owned();
                    accumulate(&mut grads, *a, ga);
                }
                Op::ChannelMax(a, arg) => {
                    let (n, c, h, w) = self.shape(*a);
                    let mut ga = Tensor::zeros((n, c, h, w));
                    let mut k = 0;
                    for s in 0..n {
                        for y in 0..h {
                            for x in 0..w {
                                ga[[s, arg[k], y, x]] += g[[s, 0, y, x]];
                                k += 1;
                            }
                        }
                    }
                    accumulate(&mut grads, *a, ga);
                }
                Op::Resize(a) => {
                    let (_, _, h, w) = self.shape(*a);
                    accumulate(&mut grads, *a, tensor::resize_bilinear_backward(&g, h, w));
                }
                Op::Sum(a) => {
                    let ga = Tensor::from_elem(self.shape(*a), g[[0, 0, 0, 0]]);
                    accumulate(&mut grads, *a, ga);
                }
                Op::Fused(locals) => {
                    let up = g[[0, 0, 0, 0]];
                    for (v, lg) in locals {
                        accumulate(&mut grads, *v, lg * up);
                    }
                }
            }
        }
        Ok(Grads {
            grads,
            params: self.param_vars.clone(),
        })
    }
}

fn accumulate(grads: &mut [Option<Tensor>], v: Var, g: Tensor) {
    match &mut grads[v.0] {
        Some(existing) => *existing += &g,
        slot @ None => *slot = Some(g),
    }
}

fn argmax(p: &[f64]) -> (usize, f64) {
    let mut best = 0;
    let mut bv = p[0];
    for (i, &v) in p.iter().enumerate().skip(1) {
        if v > bv {
            bv = v;
            best = i;
        }
    }
    (best, bv)
}

pub fn sigmoid(x: f64) -> f64 {
    if x >= 0.0 {
        1.0 / (1.0 + (-x).exp())
    } else {
        let e = x.exp();
        e / (1.0 + e)
    }
}

/// Gradients from one [`Tape::backward`] call.
pub struct Grads {
    grads: Vec<Option<Tensor>>,
    params: BTreeMap<String, Var>,
}

impl Grads {
    pub fn get(&self, v: Var) -> Option<&Tensor> {
        self.grads[v.0].as_ref()
    }

    /// Gradient for every parameter the tape touched; untouched-by-loss parameters get zeros.
    pub fn param_grads(&self, store: &ParamStore) -> BTreeMap<String, Tensor> {
        store
            .iter()
            .map(|(name, t)| {
                let g = self
                    .params
                    .get(name)
                    .and_then(|v| self.grads[v.0].clone())
                    .unwrap_or_else(|| Tensor::zeros(t.dim()));
                (name.clone(), g)
            })
            .collect()
    }
}
