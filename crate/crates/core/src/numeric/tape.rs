use std::cell::RefCell;

use super::tensor::matmul_raw;
use super::{NumericError, Result, Tensor};

/// Handle to a value recorded on a [`Tape`].
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Tv(pub(crate) usize);

type GradFn = Box<dyn Fn(&Tensor, &[Tensor], &Tensor) -> Vec<Tensor>>;

struct Node {
    value: Tensor,
    parents: Vec<usize>,
    /// Maps (output gradient, parent values, own value) to per-parent
    /// gradients. `None` for leaves and constants.
    grad_fn: Option<GradFn>,
}

/// A record of primitive operations forming an acyclic computation graph.
///
/// Nodes are appended in execution order, so reverse creation order is a
/// valid reverse-topological order: the backward pass visits each node
/// exactly once. A tape is intentionally `!Send`/`!Sync`; independent
/// computations use independent tapes.
#[derive(Default)]
pub struct Tape {
    nodes: RefCell<Vec<Node>>,
}

/// Gradients produced by [`Tape::backward`], indexed by tape handle.
pub struct Gradients {
    grads: Vec<Option<Tensor>>,
}

impl Gradients {
    pub fn wrt(&self, v: Tv) -> Option<&Tensor> {
        self.grads.get(v.0).and_then(|g| g.as_ref())
    }

    /// Gradient for a leaf that must be reachable from the loss.
    pub fn require(&self, v: Tv) -> Result<&Tensor> {
        self.wrt(v).ok_or(NumericError::DetachedTensor(v.0))
    }
}

impl Tape {
    pub fn new() -> Self {
        Self::default()
    }

    fn push(&self, value: Tensor, parents: Vec<usize>, grad_fn: Option<GradFn>) -> Tv {
        let mut nodes = self.nodes.borrow_mut();
        nodes.push(Node {
            value,
            parents,
            grad_fn,
        });
        Tv(nodes.len() - 1)
    }

    /// A differentiable leaf (parameter or input embedding).
    pub fn leaf(&self, value: Tensor) -> Tv {
        self.push(value, vec![], None)
    }

    /// A value that participates in the forward pass but never needs a
    /// gradient of its own (targets, precomputed constants).
    pub fn constant(&self, value: Tensor) -> Tv {
        self.push(value, vec![], None)
    }

    pub fn value(&self, v: Tv) -> Tensor {
        self.nodes.borrow()[v.0].value.clone()
    }

    pub fn shape(&self, v: Tv) -> Vec<usize> {
        self.nodes.borrow()[v.0].value.shape().to_vec()
    }

    // ---- primitive operations ------------------------------------------

    pub fn add(&self, a: Tv, b: Tv) -> Result<Tv> {
        let out = self.value(a).add(&self.value(b))?;
        Ok(self.push(
            out,
            vec![a.0, b.0],
            Some(Box::new(|g, _, _| vec![g.clone(), g.clone()])),
        ))
    }

    pub fn sub(&self, a: Tv, b: Tv) -> Result<Tv> {
        let out = self.value(a).sub(&self.value(b))?;
        Ok(self.push(
            out,
            vec![a.0, b.0],
            Some(Box::new(|g, _, _| vec![g.clone(), g.scale(-1.0)])),
        ))
    }

    pub fn mul(&self, a: Tv, b: Tv) -> Result<Tv> {
        let out = self.value(a).mul(&self.value(b))?;
        Ok(self.push(
            out,
            vec![a.0, b.0],
            Some(Box::new(|g, parents, _| {
                vec![
                    g.mul(&parents[1]).unwrap(),
                    g.mul(&parents[0]).unwrap(),
                ]
            })),
        ))
    }

    pub fn scale(&self, a: Tv, k: f64) -> Tv {
        let out = self.value(a).scale(k);
        self.push(
            out,
            vec![a.0],
            Some(Box::new(move |g, _, _| vec![g.scale(k)])),
        )
    }

    pub fn neg(&self, a: Tv) -> Tv {
        self.scale(a, -1.0)
    }

    /// Broadcast-add a length-`c` vector to every row of an `r×c` matrix.
    pub fn add_bias(&self, m: Tv, bias: Tv) -> Result<Tv> {
        let mv = self.value(m);
        let bv = self.value(bias);
        let (r, c) = (mv.rows(), mv.cols());
        if bv.len() != c {
            return Err(NumericError::ShapeMismatch {
                context: "add_bias".into(),
                lhs: mv.shape().to_vec(),
                rhs: bv.shape().to_vec(),
            });
        }
        let mut data = mv.data().to_vec();
        for i in 0..r {
            for j in 0..c {
                data[i * c + j] += bv.data()[j];
            }
        }
        let out = Tensor::new(mv.shape().to_vec(), data)?;
        Ok(self.push(
            out,
            vec![m.0, bias.0],
            Some(Box::new(move |g, _, _| {
                let mut bias_g = vec![0.0; c];
                for i in 0..r {
                    for j in 0..c {
                        bias_g[j] += g.data()[i * c + j];
                    }
                }
                vec![g.clone(), Tensor::new(vec![c], bias_g).unwrap()]
            })),
        ))
    }

    pub fn matmul(&self, a: Tv, b: Tv) -> Result<Tv> {
        let av = self.value(a);
        let bv = self.value(b);
        let (p, q, r) = (av.rows(), av.cols(), bv.cols());
        if bv.rows() != q {
            return Err(NumericError::ShapeMismatch {
                context: "matmul".into(),
                lhs: av.shape().to_vec(),
                rhs: bv.shape().to_vec(),
            });
        }
        let out = Tensor::new(vec![p, r], matmul_raw(av.data(), bv.data(), p, q, r))?;
        Ok(self.push(
            out,
            vec![a.0, b.0],
            Some(Box::new(move |g, parents, _| {
                let bt = parents[1].transpose();
                let at = parents[0].transpose();
                let ga = Tensor::new(vec![p, q], matmul_raw(g.data(), bt.data(), p, r, q)).unwrap();
                let gb = Tensor::new(vec![q, r], matmul_raw(at.data(), g.data(), q, p, r)).unwrap();
                vec![ga, gb]
            })),
        ))
    }

    pub fn transpose(&self, a: Tv) -> Tv {
        let out = self.value(a).transpose();
        self.push(
            out,
            vec![a.0],
            Some(Box::new(|g, _, _| vec![g.transpose()])),
        )
    }

    /// Row-wise layer normalization with learned scale and shift.
    pub fn layer_norm(&self, x: Tv, gamma: Tv, beta: Tv, eps: f64) -> Result<Tv> {
        let xv = self.value(x);
        let gv = self.value(gamma);
        let bv = self.value(beta);
        let (r, c) = (xv.rows(), xv.cols());
        if gv.len() != c || bv.len() != c {
            return Err(NumericError::ShapeMismatch {
                context: "layer_norm".into(),
                lhs: xv.shape().to_vec(),
                rhs: gv.shape().to_vec(),
            });
        }
        let mut normed = vec![0.0; r * c];
        let mut inv_std = vec![0.0; r];
        for i in 0..r {
            let row = &xv.data()[i * c..(i + 1) * c];
            let mean = row.iter().sum::<f64>() / c as f64;
            let var = row.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / c as f64;
            let inv = 1.0 / (var + eps).sqrt();
            inv_std[i] = inv;
            for j in 0..c {
                normed[i * c + j] = (row[j] - mean) * inv;
            }
        }
        let mut out = vec![0.0; r * c];
        for i in 0..r {
            for j in 0..c {
                out[i * c + j] = normed[i * c + j] * gv.data()[j] + bv.data()[j];
            }
        }
        let normed_t = Tensor::new(vec![r, c], normed)?;
        let out = Tensor::new(vec![r, c], out)?;
        Ok(self.push(
            out,
            vec![x.0, gamma.0, beta.0],
            Some(Box::new(move |g, parents, _| {
                let gamma = &parents[1];
                let mut gx = vec![0.0; r * c];
                let mut ggamma = vec![0.0; c];
                let mut gbeta = vec![0.0; c];
                for i in 0..r {
                    // gy = g ⊙ gamma for this row
                    let mut gy = vec![0.0; c];
                    let mut mean_gy = 0.0;
                    let mut mean_gy_xn = 0.0;
                    for j in 0..c {
                        let gij = g.data()[i * c + j];
                        gy[j] = gij * gamma.data()[j];
                        mean_gy += gy[j];
                        mean_gy_xn += gy[j] * normed_t.data()[i * c + j];
                        ggamma[j] += gij * normed_t.data()[i * c + j];
                        gbeta[j] += gij;
                    }
                    mean_gy /= c as f64;
                    mean_gy_xn /= c as f64;
                    for j in 0..c {
                        let xn = normed_t.data()[i * c + j];
                        gx[i * c + j] = inv_std[i] * (gy[j] - mean_gy - xn * mean_gy_xn);
                    }
                }
                vec![
                    Tensor::new(vec![r, c], gx).unwrap(),
                    Tensor::new(vec![c], ggamma).unwrap(),
                    Tensor::new(vec![c], gbeta).unwrap(),
                ]
            })),
        ))
    }

    /// Numerically stable row-wise softmax.
    pub fn softmax_rows(&self, x: Tv) -> Tv {
        let xv = self.value(x);
        let (r, c) = (xv.rows(), xv.cols());
        let mut out = vec![0.0; r * c];
        for i in 0..r {
            let row = &xv.data()[i * c..(i + 1) * c];
            let max = row.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
            let mut sum = 0.0;
            for j in 0..c {
                let e = (row[j] - max).exp();
                out[i * c + j] = e;
                sum += e;
            }
            for j in 0..c {
                out[i * c + j] /= sum;
            }
        }
        let out = Tensor::new(xv.shape().to_vec(), out).unwrap();
        self.push(
            out,
            vec![x.0],
            Some(Box::new(move |g, _, own| {
                let mut gx = vec![0.0; r * c];
                for i in 0..r {
                    let mut dot = 0.0;
                    for j in 0..c {
                        dot += g.data()[i * c + j] * own.data()[i * c + j];
                    }
                    for j in 0..c {
                        let s = own.data()[i * c + j];
                        gx[i * c + j] = (g.data()[i * c + j] - dot) * s;
                    }
                }
                vec![Tensor::new(own.shape().to_vec(), gx).unwrap()]
            })),
        )
    }

    /// GELU activation (tanh approximation).
    pub fn gelu(&self, x: Tv) -> Tv {
        const K: f64 = 0.797_884_560_802_865_4; // sqrt(2/pi)
        const C: f64 = 0.044715;
        let xv = self.value(x);
        let out = xv.map(|v| {
            let u = K * (v + C * v * v * v);
            0.5 * v * (1.0 + u.tanh())
        });
        self.push(
            out,
            vec![x.0],
            Some(Box::new(move |g, parents, _| {
                let x = &parents[0];
                let gx = x.zip(g, |v, gv| {
                    let u = K * (v + C * v * v * v);
                    let t = u.tanh();
                    let sech2 = 1.0 - t * t;
                    let du = K * (1.0 + 3.0 * C * v * v);
                    gv * (0.5 * (1.0 + t) + 0.5 * v * sech2 * du)
                });
                vec![gx.unwrap()]
            })),
        )
    }

    /// Inverted dropout with a fixed seed. `keep` is the keep-probability;
    /// `keep == 1.0` is the identity (used in inference mode).
    pub fn dropout(&self, x: Tv, keep: f64, seed: u64) -> Tv {
        let xv = self.value(x);
        if keep >= 1.0 {
            return self.push(
                xv,
                vec![x.0],
                Some(Box::new(|g, _, _| vec![g.clone()])),
            );
        }
        let mask = super::rng::bernoulli_mask(xv.len(), keep, seed);
        let inv = 1.0 / keep;
        let data: Vec<f64> = xv
            .data()
            .iter()
            .zip(mask.iter())
            .map(|(&v, &m)| if m { v * inv } else { 0.0 })
            .collect();
        let out = Tensor::new(xv.shape().to_vec(), data).unwrap();
        self.push(
            out,
            vec![x.0],
            Some(Box::new(move |g, _, _| {
                let data: Vec<f64> = g
                    .data()
                    .iter()
                    .zip(mask.iter())
                    .map(|(&v, &m)| if m { v * inv } else { 0.0 })
                    .collect();
                vec![Tensor::new(g.shape().to_vec(), data).unwrap()]
            })),
        )
    }

    /// Gather rows of an embedding table; the gradient scatter-adds back.
    pub fn embed_rows(&self, table: Tv, ids: &[u32]) -> Result<Tv> {
        let tv = self.value(table);
        let (v, d) = (tv.rows(), tv.cols());
        let ids = ids.to_vec();
        for &id in &ids {
            if id as usize >= v {
                return Err(NumericError::IndexOutOfRange {
                    index: id as usize,
                    size: v,
                });
            }
        }
        let mut out = Vec::with_capacity(ids.len() * d);
        for &id in &ids {
            out.extend_from_slice(&tv.data()[id as usize * d..(id as usize + 1) * d]);
        }
        let out = Tensor::new(vec![ids.len(), d], out)?;
        Ok(self.push(
            out,
            vec![table.0],
            Some(Box::new(move |g, _, _| {
                let mut gt = vec![0.0; v * d];
                for (i, &id) in ids.iter().enumerate() {
                    for j in 0..d {
                        gt[id as usize * d + j] += g.data()[i * d + j];
                    }
                }
                vec![Tensor::new(vec![v, d], gt).unwrap()]
            })),
        ))
    }

    pub fn slice_rows(&self, x: Tv, from: usize, to: usize) -> Result<Tv> {
        let xv = self.value(x);
        let (r, c) = (xv.rows(), xv.cols());
        let out = xv.slice_rows(from, to)?;
        Ok(self.push(
            out,
            vec![x.0],
            Some(Box::new(move |g, _, _| {
                let mut gx = vec![0.0; r * c];
                gx[from * c..to * c].copy_from_slice(g.data());
                vec![Tensor::new(vec![r, c], gx).unwrap()]
            })),
        ))
    }

    pub fn slice_cols(&self, x: Tv, from: usize, to: usize) -> Result<Tv> {
        let xv = self.value(x);
        let (r, c) = (xv.rows(), xv.cols());
        if to > c || from > to {
            return Err(NumericError::IndexOutOfRange { index: to, size: c });
        }
        let w = to - from;
        let mut out = vec![0.0; r * w];
        for i in 0..r {
            out[i * w..(i + 1) * w].copy_from_slice(&xv.data()[i * c + from..i * c + to]);
        }
        let out = Tensor::new(vec![r, w], out)?;
        Ok(self.push(
            out,
            vec![x.0],
            Some(Box::new(move |g, _, _| {
                let mut gx = vec![0.0; r * c];
                for i in 0..r {
                    gx[i * c + from..i * c + to].copy_from_slice(&g.data()[i * w..(i + 1) * w]);
                }
                vec![Tensor::new(vec![r, c], gx).unwrap()]
            })),
        ))
    }

    pub fn concat_cols(&self, parts: &[Tv]) -> Result<Tv> {
        let vals: Vec<Tensor> = parts.iter().map(|&p| self.value(p)).collect();
        let r = vals[0].rows();
        let widths: Vec<usize> = vals.iter().map(|v| v.cols()).collect();
        for v in &vals {
            if v.rows() != r {
                return Err(NumericError::ShapeMismatch {
                    context: "concat_cols".into(),
                    lhs: vals[0].shape().to_vec(),
                    rhs: v.shape().to_vec(),
                });
            }
        }
        let total: usize = widths.iter().sum();
        let mut out = vec![0.0; r * total];
        for i in 0..r {
            let mut off = 0;
            for (v, &w) in vals.iter().zip(widths.iter()) {
                out[i * total + off..i * total + off + w]
                    .copy_from_slice(&v.data()[i * w..(i + 1) * w]);
                off += w;
            }
        }
        let out = Tensor::new(vec![r, total], out)?;
        Ok(self.push(
            out,
            parts.iter().map(|p| p.0).collect(),
            Some(Box::new(move |g, _, _| {
                let mut grads = Vec::with_capacity(widths.len());
                let mut off = 0;
                for &w in &widths {
                    let mut gp = vec![0.0; r * w];
                    for i in 0..r {
                        gp[i * w..(i + 1) * w]
                            .copy_from_slice(&g.data()[i * total + off..i * total + off + w]);
                    }
                    grads.push(Tensor::new(vec![r, w], gp).unwrap());
                    off += w;
                }
                grads
            })),
        ))
    }

    pub fn concat_rows(&self, parts: &[Tv]) -> Result<Tv> {
        let vals: Vec<Tensor> = parts.iter().map(|&p| self.value(p)).collect();
        let c = vals[0].cols();
        let heights: Vec<usize> = vals.iter().map(|v| v.rows()).collect();
        for v in &vals {
            if v.cols() != c {
                return Err(NumericError::ShapeMismatch {
                    context: "concat_rows".into(),
                    lhs: vals[0].shape().to_vec(),
                    rhs: v.shape().to_vec(),
                });
            }
        }
        let total: usize = heights.iter().sum();
        let mut out = Vec::with_capacity(total * c);
        for v in &vals {
            out.extend_from_slice(v.data());
        }
        let out = Tensor::new(vec![total, c], out)?;
        Ok(self.push(
            out,
            parts.iter().map(|p| p.0).collect(),
            Some(Box::new(move |g, _, _| {
                let mut grads = Vec::with_capacity(heights.len());
                let mut off = 0;
                for &h in &heights {
                    grads.push(
                        Tensor::new(vec![h, c], g.data()[off * c..(off + h) * c].to_vec())
                            .unwrap(),
                    );
                    off += h;
                }
                grads
            })),
        ))
    }

    pub fn sum_all(&self, x: Tv) -> Tv {
        let xv = self.value(x);
        let out = Tensor::scalar(xv.sum());
        let shape = xv.shape().to_vec();
        self.push(
            out,
            vec![x.0],
            Some(Box::new(move |g, _, _| {
                vec![Tensor::full(&shape, g.data()[0])]
            })),
        )
    }

    pub fn mean_all(&self, x: Tv) -> Tv {
        let xv = self.value(x);
        let n = xv.len() as f64;
        let out = Tensor::scalar(xv.sum() / n);
        let shape = xv.shape().to_vec();
        self.push(
            out,
            vec![x.0],
            Some(Box::new(move |g, _, _| {
                vec![Tensor::full(&shape, g.data()[0] / n)]
            })),
        )
    }

    /// Mean squared error over all elements.
    pub fn mse_mean(&self, a: Tv, b: Tv) -> Result<Tv> {
        let diff = self.sub(a, b)?;
        let sq = self.mul(diff, diff)?;
        Ok(self.mean_all(sq))
    }

    /// Logits `L[i][w] = -||x_i - table_w||^2` used by the rounding objective.
    pub fn neg_sqdist_logits(&self, x: Tv, table: Tv) -> Result<Tv> {
        let xv = self.value(x);
        let tv = self.value(table);
        let (n, d) = (xv.rows(), xv.cols());
        let (v, d2) = (tv.rows(), tv.cols());
        if d != d2 {
            return Err(NumericError::ShapeMismatch {
                context: "neg_sqdist_logits".into(),
                lhs: xv.shape().to_vec(),
                rhs: tv.shape().to_vec(),
            });
        }
        let mut out = vec![0.0; n * v];
        for i in 0..n {
            for w in 0..v {
                let mut s = 0.0;
                for k in 0..d {
                    let diff = xv.data()[i * d + k] - tv.data()[w * d + k];
                    s += diff * diff;
                }
                out[i * v + w] = -s;
            }
        }
        let out = Tensor::new(vec![n, v], out)?;
        Ok(self.push(
            out,
            vec![x.0, table.0],
            Some(Box::new(move |g, parents, _| {
                let (x, t) = (&parents[0], &parents[1]);
                let mut gx = vec![0.0; n * d];
                let mut gt = vec![0.0; v * d];
                for i in 0..n {
                    for w in 0..v {
                        let go = g.data()[i * v + w];
                        if go == 0.0 {
                            continue;
                        }
                        for k in 0..d {
                            let diff = x.data()[i * d + k] - t.data()[w * d + k];
                            gx[i * d + k] += go * (-2.0 * diff);
                            gt[w * d + k] += go * (2.0 * diff);
                        }
                    }
                }
                vec![
                    Tensor::new(vec![n, d], gx).unwrap(),
                    Tensor::new(vec![v, d], gt).unwrap(),
                ]
            })),
        ))
    }

    /// Mean cross-entropy of row-wise softmax(logits) against target ids.
    pub fn cross_entropy_mean(&self, logits: Tv, targets: &[u32]) -> Result<Tv> {
        let lv = self.value(logits);
        let (n, v) = (lv.rows(), lv.cols());
        if targets.len() != n {
            return Err(NumericError::ShapeMismatch {
                context: "cross_entropy_mean".into(),
                lhs: vec![n],
                rhs: vec![targets.len()],
            });
        }
        let targets = targets.to_vec();
        let mut total = 0.0;
        let mut probs = vec![0.0; n * v];
        for i in 0..n {
            let row = &lv.data()[i * v..(i + 1) * v];
            let max = row.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
            let mut sum = 0.0;
            for w in 0..v {
                let e = (row[w] - max).exp();
                probs[i * v + w] = e;
                sum += e;
            }
            for w in 0..v {
                probs[i * v + w] /= sum;
            }
            total -= probs[i * v + targets[i] as usize].max(1e-300).ln();
        }
        let out = Tensor::scalar(total / n as f64);
        Ok(self.push(
            out,
            vec![logits.0],
            Some(Box::new(move |g, _, _| {
                let scale = g.data()[0] / n as f64;
                let mut gl = probs.clone();
                for i in 0..n {
                    gl[i * v + targets[i] as usize] -= 1.0;
                }
                for e in gl.iter_mut() {
                    *e *= scale;
                }
                vec![Tensor::new(vec![n, v], gl).unwrap()]
            })),
        ))
    }

    // ---- backward -------------------------------------------------------

    /// Reverse-mode sweep from a scalar loss. Returns gradients for every
    /// node reachable backwards from `loss`.
    pub fn backward(&self, loss: Tv) -> Result<Gradients> {
        let nodes = self.nodes.borrow();
        let loss_node = nodes
            .get(loss.0)
            .ok_or(NumericError::DetachedTensor(loss.0))?;
        if !loss_node.value.is_scalar() {
            return Err(NumericError::NotScalar(loss_node.value.shape().to_vec()));
        }
        let mut grads: Vec<Option<Tensor>> = vec![None; nodes.len()];
        grads[loss.0] = Some(Tensor::full(loss_node.value.shape(), 1.0));
        for id in (0..=loss.0).rev() {
            let Some(g) = grads[id].clone() else { continue };
            let node = &nodes[id];
            let Some(grad_fn) = &node.grad_fn else { continue };
            let parent_vals: Vec<Tensor> = node
                .parents
                .iter()
                .map(|&p| nodes[p].value.clone())
                .collect();
            let parent_grads = grad_fn(&g, &parent_vals, &node.value);
            debug_assert_eq!(parent_grads.len(), node.parents.len());
            for (&pid, pg) in node.parents.iter().zip(parent_grads.into_iter()) {
                grads[pid] = Some(match grads[pid].take() {
                    Some(acc) => acc.add(&pg)?,
                    None => pg,
                });
            }
        }
        Ok(Gradients { grads })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn square_gradient() {
        let tape = Tape::new();
        let x = tape.leaf(Tensor::scalar(3.0));
        let y = tape.mul(x, x).unwrap();
        let grads = tape.backward(y).unwrap();
        assert_eq!(grads.require(x).unwrap().item().unwrap(), 6.0);
    }

    #[test]
    fn backward_requires_scalar() {
        let tape = Tape::new();
        let x = tape.leaf(Tensor::zeros(&[2, 2]));
        assert!(matches!(
            tape.backward(x),
            Err(NumericError::NotScalar(_))
        ));
    }

    #[test]
    fn detached_leaf_has_no_gradient() {
        let tape = Tape::new();
        let x = tape.leaf(Tensor::scalar(1.0));
        let unused = tape.leaf(Tensor::scalar(5.0));
        let y = tape.mul(x, x).unwrap();
        let grads = tape.backward(y).unwrap();
        assert!(matches!(
            grads.require(unused),
            Err(NumericError::DetachedTensor(_))
        ));
    }

    #[test]
    fn softmax_single_key_returns_value_row() {
        // Attention over a single key must return that value row exactly.
        let tape = Tape::new();
        let q = tape.leaf(Tensor::from_rows(&[vec![0.3, -1.2]]).unwrap());
        let k = tape.leaf(Tensor::from_rows(&[vec![2.0, 0.5]]).unwrap());
        let v = tape.leaf(Tensor::from_rows(&[vec![7.0, -3.0]]).unwrap());
        let out = super::super::ops::softmax_attention(&tape, q, k, v).unwrap();
        let val = tape.value(out);
        assert_eq!(val.data(), &[7.0, -3.0]);
    }

    #[test]
    fn layer_norm_of_constant_row_is_shift() {
        let tape = Tape::new();
        let x = tape.leaf(Tensor::from_rows(&[vec![4.0; 6]]).unwrap());
        let gamma = tape.leaf(Tensor::full(&[6], 1.0));
        let beta = tape.leaf(Tensor::zeros(&[6]));
        let out = tape.layer_norm(x, gamma, beta, 1e-5).unwrap();
        // zero variance: normalized values collapse to zero before scale/shift
        for v in tape.value(out).data() {
            assert!(v.abs() < 1e-9);
        }
    }
}
