//! Dense row-major tensors and the handful of kernels diagram evaluation needs.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Tensor {
    shape: Vec<usize>,
    data: Vec<f64>,
}

fn strides(shape: &[usize]) -> Vec<usize> {
    let mut s = vec![1; shape.len()];
    for k in (0..shape.len().saturating_sub(1)).rev() {
        s[k] = s[k + 1] * shape[k + 1];
    }
    s
}

impl Tensor {
    pub fn new(shape: Vec<usize>, data: Vec<f64>) -> Result<Tensor> {
        let expected = shape.iter().product::<usize>();
        if expected != data.len() {
            return Err(Error::LengthMismatch {
                expected,
                found: data.len(),
            });
        }
        Ok(Tensor { shape, data })
    }

    pub fn scalar(value: f64) -> Tensor {
        Tensor {
            shape: Vec::new(),
            data: vec![value],
        }
    }

    pub fn zeros(shape: Vec<usize>) -> Tensor {
        let n = shape.iter().product();
        Tensor {
            shape,
            data: vec![0.0; n],
        }
    }

    /// The `dim × dim` identity, i.e. the Kronecker delta on two axes.
    pub fn delta(dim: usize) -> Tensor {
        let mut t = Tensor::zeros(vec![dim, dim]);
        for i in 0..dim {
            t.data[i * dim + i] = 1.0;
        }
        t
    }

    pub fn shape(&self) -> &[usize] {
        &self.shape
    }

    pub fn rank(&self) -> usize {
        self.shape.len()
    }

    pub fn data(&self) -> &[f64] {
        &self.data
    }

    pub fn data_mut(&mut self) -> &mut [f64] {
        &mut self.data
    }

    pub fn into_data(self) -> Vec<f64> {
        self.data
    }

    pub fn len(&self) -> usize {
        self.data.len()
    }

    pub fn is_empty(&self) -> bool {
        self.data.is_empty()
    }

    pub fn reshape(mut self, shape: Vec<usize>) -> Result<Tensor> {
        let expected = shape.iter().product::<usize>();
        if expected != self.data.len() {
            return Err(Error::LengthMismatch {
                expected,
                found: self.data.len(),
            });
        }
        self.shape = shape;
        Ok(self)
    }

    /// Output axis `k` is input axis `perm[k]`.
    pub fn permute(&self, perm: &[usize]) -> Tensor {
        assert_eq!(perm.len(), self.rank(), "permutation rank");
        if perm.iter().enumerate().all(|(k, &p)| k == p) {
            return self.clone();
        }
        let in_strides = strides(&self.shape);
        let shape: Vec<usize> = perm.iter().map(|&p| self.shape[p]).collect();
        let src_strides: Vec<usize> = perm.iter().map(|&p| in_strides[p]).collect();
        let mut data = Vec::with_capacity(self.data.len());
        let mut index = vec![0usize; shape.len()];
        let mut offset = 0usize;
        for _ in 0..self.data.len() {
            data.push(self.data[offset]);
            for k in (0..shape.len()).rev() {
                index[k] += 1;
                offset += src_strides[k];
                if index[k] < shape[k] {
                    break;
                }
                offset -= src_strides[k] * shape[k];
                index[k] = 0;
            }
        }
        Tensor { shape, data }
    }

    /// Sums over the diagonal of axes `i` and `j`, removing both.
    pub fn trace(&self, i: usize, j: usize) -> Tensor {
        assert!(i != j && self.shape[i] == self.shape[j], "trace axes");
        let (i, j) = (i.min(j), i.max(j));
        let rest: Vec<usize> = (0..self.rank()).filter(|&k| k != i && k != j).collect();
        let moved = self.permute(&[rest.clone(), vec![i, j]].concat());
        let d = self.shape[i];
        let shape: Vec<usize> = rest.iter().map(|&k| self.shape[k]).collect();
        let block = d * d;
        let data = moved
            .data
            .chunks(block)
            .map(|c| (0..d).map(|k| c[k * d + k]).sum())
            .collect();
        Tensor { shape, data }
    }

    /// Adjoint of [`Tensor::trace`]: places `self` on the diagonal of two new
    /// axes of size `dim`, inserted so that they end up at positions `i` and `j`.
    pub fn untrace(&self, i: usize, j: usize, dim: usize) -> Tensor {
        let (i, j) = (i.min(j), i.max(j));
        let rank = self.rank() + 2;
        let mut out = Tensor::zeros({
            let mut s = self.shape.clone();
            s.push(dim);
            s.push(dim);
            s
        });
        let block = dim * dim;
        for (c, &v) in out.data.chunks_mut(block).zip(&self.data) {
            for k in 0..dim {
                c[k * dim + k] = v;
            }
        }
        // axes are currently [rest..., i, j]; move them into place
        let mut order: Vec<usize> = Vec::with_capacity(rank);
        let mut r = 0;
        for k in 0..rank {
            if k == i {
                order.push(rank - 2);
            } else if k == j {
                order.push(rank - 1);
            } else {
                order.push(r);
                r += 1;
            }
        }
        out.permute(&order)
    }

    /// Tensor contraction along `pairs` of (axis of `a`, axis of `b`). The
    /// result has `a`'s free axes followed by `b`'s free axes, in order.
    pub fn contract(a: &Tensor, b: &Tensor, pairs: &[(usize, usize)]) -> Tensor {
        let paired_a: Vec<usize> = pairs.iter().map(|p| p.0).collect();
        let paired_b: Vec<usize> = pairs.iter().map(|p| p.1).collect();
        for &(x, y) in pairs {
            assert_eq!(a.shape[x], b.shape[y], "contracted axes differ in size");
        }
        let free_a: Vec<usize> = (0..a.rank()).filter(|k| !paired_a.contains(k)).collect();
        let free_b: Vec<usize> = (0..b.rank()).filter(|k| !paired_b.contains(k)).collect();
        let lhs = a.permute(&[free_a.clone(), paired_a].concat());
        let rhs = b.permute(&[paired_b, free_b.clone()].concat());
        let m: usize = free_a.iter().map(|&k| a.shape[k]).product();
        let n: usize = free_b.iter().map(|&k| b.shape[k]).product();
        let inner: usize = pairs.iter().map(|p| a.shape[p.0]).product();
        let mut data = vec![0.0; m * n];
        for row in 0..m {
            let l = &lhs.data[row * inner..(row + 1) * inner];
            let out = &mut data[row * n..(row + 1) * n];
            for (k, &lv) in l.iter().enumerate() {
                if lv == 0.0 {
                    continue;
                }
                let r = &rhs.data[k * n..(k + 1) * n];
                for (o, &rv) in out.iter_mut().zip(r) {
                    *o += lv * rv;
                }
            }
        }
        let shape = free_a
            .iter()
            .map(|&k| a.shape[k])
            .chain(free_b.iter().map(|&k| b.shape[k]))
            .collect();
        Tensor { shape, data }
    }

    pub fn outer(a: &Tensor, b: &Tensor) -> Tensor {
        Tensor::contract(a, b, &[])
    }

    pub fn max_abs_diff(&self, other: &Tensor) -> f64 {
        assert_eq!(self.shape, other.shape, "shape mismatch");
        self.data
            .iter()
            .zip(&other.data)
            .map(|(x, y)| (x - y).abs())
            .fold(0.0, f64::max)
    }
}
