//! Masked-word loss, its gradient, Adam, and orthogonal initialisation.

use nalgebra::DMatrix;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::error::{Error, Result};
use crate::grammar::MaskedExample;
use crate::rigid::PregroupType;
use crate::semantics::{eval_hole_on, Model};
use crate::tape::Tape;

/// Flat view of every encoding-matrix entry, matrices in type order.
#[derive(Clone, Debug, PartialEq)]
pub struct ParamVector {
    pub values: Vec<f64>,
    pub layout: Vec<Segment>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct Segment {
    pub ty: PregroupType,
    pub offset: usize,
    pub extent: usize,
}

impl ParamVector {
    pub fn pack(model: &Model) -> ParamVector {
        let mut values = Vec::with_capacity(model.param_count());
        let layout = model
            .matrices()
            .iter()
            .map(|m| {
                let offset = values.len();
                values.extend_from_slice(m.values());
                Segment {
                    ty: m.ty().clone(),
                    offset,
                    extent: m.values().len(),
                }
            })
            .collect();
        ParamVector { values, layout }
    }

    /// Writes the values back into a model with the same layout.
    pub fn unpack_into(&self, model: &mut Model) -> Result<()> {
        if self.values.len() != model.param_count() {
            return Err(Error::LengthMismatch {
                expected: model.param_count(),
                found: self.values.len(),
            });
        }
        for seg in &self.layout {
            let m = model.matrix_mut(&seg.ty)?;
            if m.values().len() != seg.extent {
                return Err(Error::LengthMismatch {
                    expected: m.values().len(),
                    found: seg.extent,
                });
            }
            m.values_mut()
                .copy_from_slice(&self.values[seg.offset..seg.offset + seg.extent]);
        }
        Ok(())
    }

    fn zeros_like(model: &Model) -> ParamVector {
        let mut p = ParamVector::pack(model);
        p.values.iter_mut().for_each(|v| *v = 0.0);
        p
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct LossConfig {
    pub l1_weight: f64,
    pub l2_weight: f64,
}

impl Default for LossConfig {
    fn default() -> Self {
        LossConfig {
            l1_weight: 1e-1,
            l2_weight: 5e-2,
        }
    }
}

impl LossConfig {
    pub fn validate(&self) -> Result<()> {
        for (name, w) in [("l1", self.l1_weight), ("l2", self.l2_weight)] {
            if !w.is_finite() || w < 0.0 {
                return Err(Error::Config(format!(
                    "{name} weight must be finite and ≥ 0, got {w}"
                )));
            }
        }
        Ok(())
    }
}

fn check_finite(model: &Model) -> Result<()> {
    for m in model.matrices() {
        if let Some(r) = (0..m.rows()).find(|&r| m.row(r).iter().any(|x| !x.is_finite())) {
            return Err(Error::NonFinite(format!(
                "parameter of `{}` for word `{}`",
                m.ty(),
                m.words()[r]
            )));
        }
    }
    Ok(())
}

fn regulariser(model: &Model, cfg: &LossConfig) -> f64 {
    model
        .matrices()
        .iter()
        .flat_map(|m| m.values())
        .map(|&x| cfg.l1_weight * x.abs() + cfg.l2_weight * x * x)
        .sum()
}

/// Cross-entropy of one example, with its parameter gradient added into `grad`.
fn example_loss(model: &Model, ex: &MaskedExample, grad: Option<&mut [f64]>) -> Result<f64> {
    let mut tape = Tape::new(model);
    let v = eval_hole_on(&mut tape, model, ex)?;
    let m = model.matrix_index(&ex.hole_type)?;
    let gold =
        model
            .matrix_at(m)
            .index_of(&ex.gold)
            .ok_or_else(|| Error::WordNotInTypeVocabulary {
                word: ex.gold.clone(),
                ty: ex.hole_type.clone(),
            })?;
    let logits = tape.logits(m, v);
    let ce = tape.softmax_xent(logits, gold);
    if let Some(grad) = grad {
        tape.backward(ce, grad);
    }
    Ok(tape.value(ce).data()[0])
}

#[cfg(feature = "parallel")]
fn per_example<T: Send>(
    batch: &[MaskedExample],
    f: impl Fn(&MaskedExample) -> Result<T> + Sync + Send,
) -> Result<Vec<T>> {
    use rayon::prelude::*;
    batch.par_iter().map(f).collect()
}

#[cfg(not(feature = "parallel"))]
fn per_example<T>(
    batch: &[MaskedExample],
    f: impl Fn(&MaskedExample) -> Result<T>,
) -> Result<Vec<T>> {
    batch.iter().map(f).collect()
}

/// `Σ −log p(gold | d_i) + l1·Σ|θ| + l2·Σθ²`.
pub fn loss(model: &Model, batch: &[MaskedExample], cfg: &LossConfig) -> Result<f64> {
    check_finite(model)?;
    let terms = per_example(batch, |ex| example_loss(model, ex, None))?;
    let total = terms.iter().sum::<f64>() + regulariser(model, cfg);
    if !total.is_finite() {
        return Err(Error::NonFinite("loss".into()));
    }
    Ok(total)
}

/// Loss and its exact gradient. Per-example contributions may be computed in
/// parallel but are summed in batch order, so the result is reproducible.
pub fn loss_and_grad(
    model: &Model,
    batch: &[MaskedExample],
    cfg: &LossConfig,
) -> Result<(f64, ParamVector)> {
    check_finite(model)?;
    let d = model.param_count();
    let parts = per_example(batch, |ex| {
        let mut g = vec![0.0; d];
        let l = example_loss(model, ex, Some(&mut g))?;
        Ok((l, g))
    })?;
    let mut grad = ParamVector::zeros_like(model);
    let mut total = 0.0;
    for (l, g) in parts {
        total += l;
        for (acc, x) in grad.values.iter_mut().zip(g) {
            *acc += x;
        }
    }
    for (acc, &x) in grad.values.iter_mut().zip(&ParamVector::pack(model).values) {
        // subgradient of |x| at 0 is 0
        let sign = if x > 0.0 {
            1.0
        } else if x < 0.0 {
            -1.0
        } else {
            0.0
        };
        *acc += cfg.l1_weight * sign + 2.0 * cfg.l2_weight * x;
    }
    total += regulariser(model, cfg);
    if !total.is_finite() || grad.values.iter().any(|g| !g.is_finite()) {
        return Err(Error::NonFinite("loss or gradient".into()));
    }
    Ok((total, grad))
}

pub fn grad(model: &Model, batch: &[MaskedExample], cfg: &LossConfig) -> Result<ParamVector> {
    loss_and_grad(model, batch, cfg).map(|(_, g)| g)
}

#[derive(Clone, Debug, PartialEq)]
pub struct AdamState {
    pub first_moment: Vec<f64>,
    pub second_moment: Vec<f64>,
    pub step_count: u64,
    pub lr: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub epsilon: f64,
}

impl AdamState {
    pub fn new(len: usize, lr: f64) -> AdamState {
        AdamState {
            first_moment: vec![0.0; len],
            second_moment: vec![0.0; len],
            step_count: 0,
            lr,
            beta1: 0.9,
            beta2: 0.999,
            epsilon: 1e-8,
        }
    }

    /// One bias-corrected Adam update of `params` in place.
    pub fn update(&mut self, params: &mut [f64], grad: &[f64]) -> Result<()> {
        for len in [params.len(), grad.len()] {
            if len != self.first_moment.len() {
                return Err(Error::LengthMismatch {
                    expected: self.first_moment.len(),
                    found: len,
                });
            }
        }
        self.step_count += 1;
        let t = self.step_count as i32;
        let c1 = 1.0 - self.beta1.powi(t);
        let c2 = 1.0 - self.beta2.powi(t);
        for (((p, &g), m), v) in params
            .iter_mut()
            .zip(grad)
            .zip(&mut self.first_moment)
            .zip(&mut self.second_moment)
        {
            *m = self.beta1 * *m + (1.0 - self.beta1) * g;
            *v = self.beta2 * *v + (1.0 - self.beta2) * g * g;
            let m_hat = *m / c1;
            let v_hat = *v / c2;
            *p -= self.lr * m_hat / (v_hat.sqrt() + self.epsilon);
        }
        Ok(())
    }
}

pub fn adam_step(
    state: &AdamState,
    params: &ParamVector,
    g: &ParamVector,
) -> Result<(AdamState, ParamVector)> {
    let mut state = state.clone();
    let mut params = params.clone();
    state.update(&mut params.values, &g.values)?;
    Ok((state, params))
}

/// A seeded Gaussian matrix replaced by `U Vᵀ` from its thin SVD: rows are
/// orthonormal when `rows ≤ cols`, columns otherwise. Row-major.
pub fn svd_init(seed: u64, rows: usize, cols: usize) -> Vec<f64> {
    if rows == 0 || cols == 0 {
        return Vec::new();
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let gaussian: Vec<f64> = (0..rows * cols)
        .map(|_| StandardNormal.sample(&mut rng))
        .collect();
    let m = DMatrix::from_row_slice(rows, cols, &gaussian);
    let svd = m.svd(true, true);
    let u = svd.u.expect("left singular vectors requested");
    let v_t = svd.v_t.expect("right singular vectors requested");
    let q = u * v_t;
    let mut out = Vec::with_capacity(rows * cols);
    for r in 0..rows {
        out.extend(q.row(r).iter());
    }
    out
}
