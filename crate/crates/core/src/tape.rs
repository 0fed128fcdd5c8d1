//! Reverse-mode differentiation over the small set of tensor operations used
//! to evaluate diagrams and score masked words.
//!
//! Nodes are appended in evaluation order, so walking them backwards is a
//! valid topological order for accumulating adjoints. Leaves are either
//! constants (deltas from cups and caps) or rows of an encoding matrix; the
//! gradients of the latter are scattered into a flat parameter buffer laid
//! out like [`Model::offsets`](crate::semantics::Model::offsets).

use crate::semantics::Model;
use crate::tensor::Tensor;

pub type NodeId = usize;

#[derive(Clone, Debug)]
enum Op {
    Const,
    Row {
        matrix: usize,
        row: usize,
    },
    Contract {
        a: NodeId,
        b: NodeId,
        pairs: Vec<(usize, usize)>,
    },
    Trace {
        a: NodeId,
        i: usize,
        j: usize,
    },
    Permute {
        a: NodeId,
        perm: Vec<usize>,
    },
    Logits {
        matrix: usize,
        v: NodeId,
    },
    SoftmaxXent {
        logits: NodeId,
        gold: usize,
    },
}

struct Node {
    op: Op,
    value: Tensor,
}

pub struct Tape<'m> {
    model: &'m Model,
    nodes: Vec<Node>,
}

/// Log-sum-exp with max subtraction.
pub fn log_sum_exp(xs: &[f64]) -> f64 {
    let max = xs.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if max == f64::NEG_INFINITY || max.is_nan() {
        return max;
    }
    max + xs.iter().map(|x| (x - max).exp()).sum::<f64>().ln()
}

pub fn softmax(xs: &[f64]) -> Vec<f64> {
    let max = xs.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let exps: Vec<f64> = xs.iter().map(|x| (x - max).exp()).collect();
    let total: f64 = exps.iter().sum();
    exps.into_iter().map(|e| e / total).collect()
}

impl<'m> Tape<'m> {
    pub fn new(model: &'m Model) -> Self {
        Tape {
            model,
            nodes: Vec::new(),
        }
    }

    fn push(&mut self, op: Op, value: Tensor) -> NodeId {
        self.nodes.push(Node { op, value });
        self.nodes.len() - 1
    }

    pub fn value(&self, id: NodeId) -> &Tensor {
        &self.nodes[id].value
    }

    pub fn constant(&mut self, t: Tensor) -> NodeId {
        self.push(Op::Const, t)
    }

    /// Row `row` of matrix number `matrix`, reshaped to `shape`.
    pub fn row(&mut self, matrix: usize, row: usize, shape: Vec<usize>) -> NodeId {
        let m = self.model.matrix_at(matrix);
        let value =
            Tensor::new(shape, m.row(row).to_vec()).expect("row shape matches column count");
        self.push(Op::Row { matrix, row }, value)
    }

    pub fn contract(&mut self, a: NodeId, b: NodeId, pairs: Vec<(usize, usize)>) -> NodeId {
        let value = Tensor::contract(self.value(a), self.value(b), &pairs);
        self.push(Op::Contract { a, b, pairs }, value)
    }

    pub fn trace(&mut self, a: NodeId, i: usize, j: usize) -> NodeId {
        let value = self.value(a).trace(i, j);
        self.push(Op::Trace { a, i, j }, value)
    }

    pub fn permute(&mut self, a: NodeId, perm: Vec<usize>) -> NodeId {
        let value = self.value(a).permute(&perm);
        self.push(Op::Permute { a, perm }, value)
    }

    /// `E · v` with `v` flattened row-major.
    pub fn logits(&mut self, matrix: usize, v: NodeId) -> NodeId {
        let m = self.model.matrix_at(matrix);
        let vv = self.value(v).data();
        assert_eq!(vv.len(), m.cols(), "covector length");
        let data = (0..m.rows())
            .map(|r| m.row(r).iter().zip(vv).map(|(a, b)| a * b).sum())
            .collect();
        let value = Tensor::new(vec![m.rows()], data).expect("logit shape");
        self.push(Op::Logits { matrix, v }, value)
    }

    /// `−log softmax(logits)[gold]`, fused.
    pub fn softmax_xent(&mut self, logits: NodeId, gold: usize) -> NodeId {
        let l = self.value(logits).data();
        let value = Tensor::scalar(log_sum_exp(l) - l[gold]);
        self.push(Op::SoftmaxXent { logits, gold }, value)
    }

    /// Accumulates `d root / d θ` into `grad`, which is laid out like
    /// [`Model::offsets`]. `root` must be a scalar.
    pub fn backward(&self, root: NodeId, grad: &mut [f64]) {
        assert!(self.value(root).len() == 1, "backward from a non-scalar");
        let offsets = self.model.offsets();
        let mut adj: Vec<Option<Tensor>> = vec![None; self.nodes.len()];
        adj[root] = Some(Tensor::new(self.value(root).shape().to_vec(), vec![1.0]).unwrap());
        for id in (0..=root).rev() {
            let Some(d) = adj[id].take() else { continue };
            match &self.nodes[id].op {
                Op::Const => {}
                Op::Row { matrix, row } => {
                    let cols = self.model.matrix_at(*matrix).cols();
                    let start = offsets[*matrix] + row * cols;
                    for (g, x) in grad[start..start + cols].iter_mut().zip(d.data()) {
                        *g += x;
                    }
                }
                Op::Contract { a, b, pairs } => {
                    let (ta, tb) = (self.value(*a), self.value(*b));
                    let free_a: Vec<usize> = (0..ta.rank())
                        .filter(|k| !pairs.iter().any(|p| p.0 == *k))
                        .collect();
                    let free_b: Vec<usize> = (0..tb.rank())
                        .filter(|k| !pairs.iter().any(|p| p.1 == *k))
                        .collect();

                    let da_pairs: Vec<(usize, usize)> = free_b
                        .iter()
                        .enumerate()
                        .map(|(m, &k)| (free_a.len() + m, k))
                        .collect();
                    let da = Tensor::contract(&d, tb, &da_pairs);
                    // axes: free_a, then b's paired axes ascending (as their a partners)
                    let mut b_paired: Vec<(usize, usize)> =
                        pairs.iter().map(|&(x, y)| (y, x)).collect();
                    b_paired.sort();
                    let layout: Vec<usize> = free_a
                        .iter()
                        .copied()
                        .chain(b_paired.iter().map(|p| p.1))
                        .collect();
                    accumulate(&mut adj[*a], reorder(da, &layout));

                    let db_pairs: Vec<(usize, usize)> =
                        free_a.iter().enumerate().map(|(m, &k)| (k, m)).collect();
                    let db = Tensor::contract(ta, &d, &db_pairs);
                    let mut a_paired: Vec<(usize, usize)> = pairs.clone();
                    a_paired.sort();
                    let layout: Vec<usize> = a_paired
                        .iter()
                        .map(|p| p.1)
                        .chain(free_b.iter().copied())
                        .collect();
                    accumulate(&mut adj[*b], reorder(db, &layout));
                }
                Op::Trace { a, i, j } => {
                    let dim = self.value(*a).shape()[*i];
                    accumulate(&mut adj[*a], d.untrace(*i, *j, dim));
                }
                Op::Permute { a, perm } => {
                    let mut inverse = vec![0; perm.len()];
                    for (k, &p) in perm.iter().enumerate() {
                        inverse[p] = k;
                    }
                    accumulate(&mut adj[*a], d.permute(&inverse));
                }
                Op::Logits { matrix, v } => {
                    let m = self.model.matrix_at(*matrix);
                    let vv = self.value(*v);
                    let start = offsets[*matrix];
                    let mut dv = vec![0.0; m.cols()];
                    for (r, &dl) in d.data().iter().enumerate() {
                        let g = &mut grad[start + r * m.cols()..start + (r + 1) * m.cols()];
                        for (c, (gc, &x)) in g.iter_mut().zip(vv.data()).enumerate() {
                            *gc += dl * x;
                            dv[c] += dl * m.row(r)[c];
                        }
                    }
                    let dv = Tensor::new(vv.shape().to_vec(), dv).unwrap();
                    accumulate(&mut adj[*v], dv);
                }
                Op::SoftmaxXent { logits, gold } => {
                    let seed = d.data()[0];
                    let mut p = softmax(self.value(*logits).data());
                    p[*gold] -= 1.0;
                    p.iter_mut().for_each(|x| *x *= seed);
                    let dl = Tensor::new(vec![p.len()], p).unwrap();
                    accumulate(&mut adj[*logits], dl);
                }
            }
        }
    }
}

/// `t`'s axis `k` corresponds to input axis `layout[k]`; put them back in
/// input order.
fn reorder(t: Tensor, layout: &[usize]) -> Tensor {
    let mut perm = vec![0; layout.len()];
    for (k, &axis) in layout.iter().enumerate() {
        perm[axis] = k;
    }
    t.permute(&perm)
}

fn accumulate(slot: &mut Option<Tensor>, t: Tensor) {
    match slot {
        Some(acc) => {
            for (a, b) in acc.data_mut().iter_mut().zip(t.data()) {
                *a += b;
            }
        }
        None => *slot = Some(t),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn softmax_is_shift_invariant() {
        let l = [1.0, -2.0, 0.5];
        let p = softmax(&l);
        let q = softmax(&l.map(|x| x + 1000.0));
        assert!((p.iter().sum::<f64>() - 1.0).abs() < 1e-12);
        for (a, b) in p.iter().zip(&q) {
            assert!((a - b).abs() < 1e-12);
        }
        assert!(softmax(&[1e308, 1e308])
            .iter()
            .all(|x| (x - 0.5).abs() < 1e-12));
    }
}
