//! Tape-based reverse-mode differentiation for the operations trainable
//! components need, plus a central finite-difference oracle.
//!
//! Nodes are appended in evaluation order, so every parent has a smaller id
//! than its children and a reverse sweep over ids is a reverse topological
//! order. Each node is visited once during [`Tape::backward`]; gradients from
//! fan-out are summed.

mod check;

pub use check::{finite_diff, grad_check, GradReport};

use crate::error::{Error, Result};
use crate::tensor::{
    self, conv2d, conv2d_grad_weight, transposed_conv2d, transposed_conv2d_to, Activation,
    ConvSpec, PoolMode, ResizeMode, Tensor,
};

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
    Constant,
    Conv2d {
        x: NodeId,
        w: NodeId,
        b: Option<NodeId>,
        spec: ConvSpec,
    },
    TransposedConv2d {
        x: NodeId,
        w: NodeId,
        b: Option<NodeId>,
        spec: ConvSpec,
    },
    Add(NodeId, NodeId),
    Sub(NodeId, NodeId),
    Mul(NodeId, NodeId),
    Scale(NodeId, f64),
    Offset(NodeId),
    /// `s · x` with `s` a scalar node.
    ScaleBy {
        x: NodeId,
        s: NodeId,
    },
    Act(NodeId, Activation),
    ResizeNearest(NodeId),
    Pool {
        x: NodeId,
        window: usize,
        mode: PoolMode,
    },
    Sum(NodeId),
    Mean(NodeId),
    /// Mean binary cross-entropy of `sigmoid(logits)` against fixed targets.
    BceWithLogits {
        logits: NodeId,
        target: Tensor,
    },
}

#[derive(Debug)]
struct Node {
    value: Tensor,
    op: Op,
    requires_grad: bool,
}

#[derive(Debug, Default)]
pub struct Tape {
    nodes: Vec<Node>,
}

/// Gradients of a scalar root with respect to every node that required one.
#[derive(Debug)]
pub struct Gradients {
    grads: Vec<Option<Tensor>>,
}

impl Gradients {
    pub fn get(&self, id: NodeId) -> Option<&Tensor> {
        self.grads.get(id.0).and_then(|g| g.as_ref())
    }

    /// Gradient of `id`, or zeros shaped like `like` when the root does not depend on it.
    pub fn wrt(&self, id: NodeId, like: &Tensor) -> Tensor {
        self.get(id)
            .cloned()
            .unwrap_or_else(|| Tensor::zeros(like.shape()))
    }

    pub fn take(&mut self, id: NodeId) -> Option<Tensor> {
        self.grads.get_mut(id.0).and_then(Option::take)
    }
}

fn softplus(z: f64) -> f64 {
    z.max(0.0) + (-z.abs()).exp().ln_1p()
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

    fn push(&mut self, value: Tensor, op: Op, parents: &[NodeId]) -> NodeId {
        let requires_grad = parents.iter().any(|p| self.nodes[p.0].requires_grad);
        self.nodes.push(Node {
            value,
            op,
            requires_grad,
        });
        NodeId(self.nodes.len() - 1)
    }

    /// A differentiable input.
    pub fn leaf(&mut self, value: Tensor) -> NodeId {
        self.nodes.push(Node {
            value,
            op: Op::Leaf,
            requires_grad: true,
        });
        NodeId(self.nodes.len() - 1)
    }

    /// An input that never receives a gradient.
    pub fn constant(&mut self, value: Tensor) -> NodeId {
        self.nodes.push(Node {
            value,
            op: Op::Constant,
            requires_grad: false,
        });
        NodeId(self.nodes.len() - 1)
    }

    pub fn value(&self, id: NodeId) -> &Tensor {
        &self.nodes[id.0].value
    }

    pub fn conv2d(&mut self, x: NodeId, w: NodeId, b: Option<NodeId>, spec: ConvSpec) -> Result<NodeId> {
        let value = conv2d(self.value(x), self.value(w), b.map(|b| self.value(b)), spec)?;
        let mut parents = vec![x, w];
        parents.extend(b);
        Ok(self.push(value, Op::Conv2d { x, w, b, spec }, &parents))
    }

    pub fn transposed_conv2d(&mut self, x: NodeId, w: NodeId, b: Option<NodeId>, spec: ConvSpec) -> Result<NodeId> {
        let value = transposed_conv2d(self.value(x), self.value(w), b.map(|b| self.value(b)), spec)?;
        let mut parents = vec![x, w];
        parents.extend(b);
        Ok(self.push(value, Op::TransposedConv2d { x, w, b, spec }, &parents))
    }

    pub fn add(&mut self, a: NodeId, b: NodeId) -> Result<NodeId> {
        let value = self.value(a).add(self.value(b))?;
        Ok(self.push(value, Op::Add(a, b), &[a, b]))
    }

    pub fn sub(&mut self, a: NodeId, b: NodeId) -> Result<NodeId> {
        let value = self.value(a).sub(self.value(b))?;
        Ok(self.push(value, Op::Sub(a, b), &[a, b]))
    }

    pub fn mul(&mut self, a: NodeId, b: NodeId) -> Result<NodeId> {
        let value = self.value(a).mul(self.value(b))?;
        Ok(self.push(value, Op::Mul(a, b), &[a, b]))
    }

    pub fn scale(&mut self, x: NodeId, s: f64) -> NodeId {
        let value = self.value(x).scale(s);
        self.push(value, Op::Scale(x, s), &[x])
    }

    /// `x + c` elementwise.
    pub fn offset(&mut self, x: NodeId, c: f64) -> NodeId {
        let value = self.value(x).map(|v| v + c);
        self.push(value, Op::Offset(x), &[x])
    }

    pub fn scale_by(&mut self, x: NodeId, s: NodeId) -> Result<NodeId> {
        let sv = self.value(s);
        if !sv.is_scalar() {
            return Err(Error::invalid("scale_by", "scale node must hold a single value"));
        }
        let value = self.value(x).scale(sv.item());
        Ok(self.push(value, Op::ScaleBy { x, s }, &[x, s]))
    }

    pub fn activation(&mut self, x: NodeId, kind: Activation) -> NodeId {
        let value = tensor::activate(self.value(x), kind);
        self.push(value, Op::Act(x, kind), &[x])
    }

    pub fn resize_nearest(&mut self, x: NodeId, new_h: usize, new_w: usize) -> Result<NodeId> {
        let value = tensor::resize(self.value(x), new_h, new_w, ResizeMode::Nearest)?;
        Ok(self.push(value, Op::ResizeNearest(x), &[x]))
    }

    pub fn pool(&mut self, x: NodeId, window: usize, mode: PoolMode) -> Result<NodeId> {
        let value = tensor::pool2d(self.value(x), window, mode)?;
        Ok(self.push(value, Op::Pool { x, window, mode }, &[x]))
    }

    pub fn sum(&mut self, x: NodeId) -> NodeId {
        let value = Tensor::scalar(self.value(x).sum());
        self.push(value, Op::Sum(x), &[x])
    }

    pub fn mean(&mut self, x: NodeId) -> NodeId {
        let value = Tensor::scalar(self.value(x).mean());
        self.push(value, Op::Mean(x), &[x])
    }

    /// Mean of `softplus(z) − t·z`, the numerically stable BCE of `sigmoid(z)` against `t`.
    pub fn bce_with_logits(&mut self, logits: NodeId, target: &Tensor) -> Result<NodeId> {
        let z = self.value(logits);
        z.ensure_same_shape(target, "bce_with_logits")?;
        let total: f64 = z
            .data()
            .iter()
            .zip(target.data())
            .map(|(&z, &t)| softplus(z) - t * z)
            .sum();
        let value = Tensor::scalar(total / z.len() as f64);
        Ok(self.push(
            value,
            Op::BceWithLogits {
                logits,
                target: target.clone(),
            },
            &[logits],
        ))
    }

    /// Propagates `∂root/∂node` to every node that requires a gradient.
    pub fn backward(&self, root: NodeId) -> Result<Gradients> {
        let rv = self.value(root);
        if !rv.is_scalar() {
            return Err(Error::invalid(
                "backward",
                format!("root must be scalar, has shape {:?}", rv.shape()),
            ));
        }
        let mut grads: Vec<Option<Tensor>> = vec![None; self.nodes.len()];
        grads[root.0] = Some(Tensor::ones(rv.shape()));
        for id in (0..=root.0).rev() {
            let node = &self.nodes[id];
            if !node.requires_grad {
                continue;
            }
            let Some(gy) = grads[id].take() else { continue };
            self.propagate(node, &gy, &mut grads)?;
            grads[id] = Some(gy);
        }
        for (g, n) in grads.iter_mut().zip(&self.nodes) {
            if !n.requires_grad {
                *g = None;
            }
        }
        Ok(Gradients { grads })
    }

    fn accumulate(&self, grads: &mut [Option<Tensor>], id: NodeId, g: Tensor) -> Result<()> {
        if !self.nodes[id.0].requires_grad {
            return Ok(());
        }
        match &mut grads[id.0] {
            Some(acc) => acc.add_assign(&g)?,
            slot @ None => *slot = Some(g.reshape(self.nodes[id.0].value.shape())?),
        }
        Ok(())
    }

    fn needs(&self, id: NodeId) -> bool {
        self.nodes[id.0].requires_grad
    }

    fn propagate(&self, node: &Node, gy: &Tensor, grads: &mut [Option<Tensor>]) -> Result<()> {
        match &node.op {
            Op::Leaf | Op::Constant => {}
            Op::Conv2d { x, w, b, spec } => {
                let xv = self.value(*x);
                let wv = self.value(*w);
                if self.needs(*x) {
                    let [_, _, h, wd] = xv.dims4();
                    let gx = transposed_conv2d_to(gy, wv, None, *spec, (h, wd))?;
                    self.accumulate(grads, *x, gx)?;
                }
                if self.needs(*w) {
                    let gw = conv2d_grad_weight(xv, gy, wv.shape(), *spec)?;
                    self.accumulate(grads, *w, gw)?;
                }
                if let Some(b) = b {
                    self.accumulate(grads, *b, channel_sums(gy))?;
                }
            }
            Op::TransposedConv2d { x, w, b, spec } => {
                let xv = self.value(*x);
                let wv = self.value(*w);
                if self.needs(*x) {
                    let gx = conv2d(gy, wv, None, *spec)?;
                    self.accumulate(grads, *x, gx)?;
                }
                if self.needs(*w) {
                    let gw = conv2d_grad_weight(gy, xv, wv.shape(), *spec)?;
                    self.accumulate(grads, *w, gw)?;
                }
                if let Some(b) = b {
                    self.accumulate(grads, *b, channel_sums(gy))?;
                }
            }
            Op::Add(a, b) => {
                self.accumulate(grads, *a, gy.clone())?;
                self.accumulate(grads, *b, gy.clone())?;
            }
            Op::Sub(a, b) => {
                self.accumulate(grads, *a, gy.clone())?;
                self.accumulate(grads, *b, gy.scale(-1.0))?;
            }
            Op::Mul(a, b) => {
                if self.needs(*a) {
                    self.accumulate(grads, *a, gy.mul(self.value(*b))?)?;
                }
                if self.needs(*b) {
                    self.accumulate(grads, *b, gy.mul(self.value(*a))?)?;
                }
            }
            Op::Scale(x, s) => self.accumulate(grads, *x, gy.scale(*s))?,
            Op::Offset(x) => self.accumulate(grads, *x, gy.clone())?,
            Op::ScaleBy { x, s } => {
                let sv = self.value(*s).item();
                if self.needs(*x) {
                    self.accumulate(grads, *x, gy.scale(sv))?;
                }
                if self.needs(*s) {
                    let gs = gy.dot(self.value(*x))?;
                    let shape = self.value(*s).shape().to_vec();
                    self.accumulate(grads, *s, Tensor::new(&shape, vec![gs])?)?;
                }
            }
            Op::Act(x, kind) => {
                let xv = self.value(*x);
                let gx = gy.zip_map(xv, "activation backward", |g, v| g * kind.derivative(v))?;
                self.accumulate(grads, *x, gx)?;
            }
            Op::ResizeNearest(x) => {
                let xv = self.value(*x);
                self.accumulate(grads, *x, resize_nearest_adjoint(gy, xv.dims4()))?;
            }
            Op::Pool { x, window, mode } => {
                let xv = self.value(*x);
                self.accumulate(grads, *x, pool_adjoint(gy, xv, *window, *mode))?;
            }
            Op::Sum(x) => {
                let g = gy.item();
                let shape = self.value(*x).shape().to_vec();
                self.accumulate(grads, *x, Tensor::full(&shape, g))?;
            }
            Op::Mean(x) => {
                let xv = self.value(*x);
                let g = gy.item() / xv.len() as f64;
                self.accumulate(grads, *x, Tensor::full(xv.shape(), g))?;
            }
            Op::BceWithLogits { logits, target } => {
                let z = self.value(*logits);
                let k = gy.item() / z.len() as f64;
                let gz = z.zip_map(target, "bce backward", |z, t| k * (tensor::sigmoid(z) - t))?;
                self.accumulate(grads, *logits, gz)?;
            }
        }
        Ok(())
    }
}

fn channel_sums(gy: &Tensor) -> Tensor {
    let [n, c, _, _] = gy.dims4();
    let mut out = vec![0.0; c];
    for ni in 0..n {
        for (ci, o) in out.iter_mut().enumerate() {
            *o += gy.plane(ni, ci).iter().sum::<f64>();
        }
    }
    Tensor::new(&[c], out).expect("positive channel count")
}

fn resize_nearest_adjoint(gy: &Tensor, src: [usize; 4]) -> Tensor {
    let [n, c, h, w] = src;
    let [_, _, oh, ow] = gy.dims4();
    let mut out = Tensor::zeros(&src);
    for ni in 0..n {
        for ci in 0..c {
            let g = gy.plane(ni, ci);
            let dst = out.plane_mut(ni, ci);
            for oy in 0..oh {
                let sy = tensor::nearest_source(oy, h, oh);
                for ox in 0..ow {
                    let sx = tensor::nearest_source(ox, w, ow);
                    dst[sy * w + sx] += g[oy * ow + ox];
                }
            }
        }
    }
    out
}

fn pool_adjoint(gy: &Tensor, x: &Tensor, window: usize, mode: PoolMode) -> Tensor {
    let [n, c, h, w] = x.dims4();
    let (oh, ow) = (h / window, w / window);
    let area = (window * window) as f64;
    let mut out = Tensor::zeros(&[n, c, h, w]);
    for ni in 0..n {
        for ci in 0..c {
            let src = x.plane(ni, ci);
            let g = gy.plane(ni, ci).to_vec();
            let dst = out.plane_mut(ni, ci);
            for oy in 0..oh {
                for ox in 0..ow {
                    let gv = g[oy * ow + ox];
                    match mode {
                        PoolMode::Avg => {
                            for dy in 0..window {
                                for dx in 0..window {
                                    dst[(oy * window + dy) * w + ox * window + dx] += gv / area;
                                }
                            }
                        }
                        PoolMode::Max => {
                            // first maximal element in scan order
                            let mut best = (oy * window) * w + ox * window;
                            for dy in 0..window {
                                for dx in 0..window {
                                    let i = (oy * window + dy) * w + ox * window + dx;
                                    if src[i] > src[best] {
                                        best = i;
                                    }
                                }
                            }
                            dst[best] += gv;
                        }
                    }
                }
            }
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::init;

    #[test]
    fn sum_gives_ones() {
        let mut t = Tape::new();
        let x = t.leaf(Tensor::from_fn4([1, 2, 3, 3], |_, c, y, x| (c + y + x) as f64));
        let s = t.sum(x);
        let g = t.backward(s).unwrap();
        assert_eq!(g.get(x).unwrap(), &Tensor::ones(&[1, 2, 3, 3]));
    }

    #[test]
    fn sum_of_squares_gives_two_x() {
        let mut rng = init::rng(3);
        let xv = init::normal(&[1, 1, 4, 5], 1.0, &mut rng);
        let mut t = Tape::new();
        let x = t.leaf(xv.clone());
        let sq = t.mul(x, x).unwrap();
        let s = t.sum(sq);
        let g = t.backward(s).unwrap();
        assert!(g.get(x).unwrap().max_abs_diff(&xv.scale(2.0)).unwrap() < 1e-15);
    }

    #[test]
    fn non_scalar_root_is_rejected() {
        let mut t = Tape::new();
        let x = t.leaf(Tensor::zeros(&[2, 2]));
        assert!(t.backward(x).is_err());
    }

    #[test]
    fn constants_get_no_gradient() {
        let mut t = Tape::new();
        let x = t.leaf(Tensor::ones(&[3]));
        let c = t.constant(Tensor::full(&[3], 2.0));
        let y = t.mul(x, c).unwrap();
        let s = t.sum(y);
        let g = t.backward(s).unwrap();
        assert!(g.get(c).is_none());
        assert_eq!(g.get(x).unwrap().data(), &[2.0, 2.0, 2.0]);
    }

    #[test]
    fn fan_out_accumulates() {
        let mut t = Tape::new();
        let x = t.leaf(Tensor::full(&[2], 3.0));
        let a = t.scale(x, 2.0);
        let b = t.add(a, x).unwrap();
        let s = t.sum(b);
        let g = t.backward(s).unwrap();
        assert_eq!(g.get(x).unwrap().data(), &[3.0, 3.0]);
    }
}
