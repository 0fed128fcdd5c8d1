//! The functor from grammar diagrams to real vector spaces.
//!
//! Each basic type gets a dimension (the same for all of its adjoints), a
//! pregroup type `t` gets the product of its simples' dimensions, and every
//! lexicon type owns an encoding matrix `E_t` with one row per word of `V_t`.
//! A word triangle is sent to its row of `E_t` (one axis per simple type,
//! row-major), cups and caps to the Kronecker delta.
//!
//! Diagrams are evaluated by folding layers left to right into a factored
//! environment: a list of pending tensors with labelled axes. Identity wires
//! are never materialised; a cup either traces one factor, contracts two
//! factors along one axis, or renames an axis onto a wire that is still an
//! open domain wire.
//!
//! The public [`eval`] gives one axis per open wire of dimension greater than
//! one, domain wires first; wires of dimension one (such as `s` when
//! `F(s) = 1`) carry no axis, so a sentence evaluates to a scalar.

use std::collections::BTreeMap;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grammar::{Lexicon, MaskedExample};
use crate::rigid::{BasicType, Diagram, Generator, PregroupType};
use crate::tape::{softmax, NodeId, Tape};
use crate::tensor::Tensor;

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct DimMap(BTreeMap<BasicType, usize>);

impl Default for DimMap {
    /// `s = 1`, `n = 7`, `p = 7`.
    fn default() -> Self {
        DimMap(
            [("s", 1), ("n", 7), ("p", 7)]
                .into_iter()
                .map(|(b, d)| (BasicType::new(b).unwrap(), d))
                .collect(),
        )
    }
}

impl DimMap {
    pub fn new(dims: BTreeMap<BasicType, usize>) -> Result<DimMap> {
        if let Some((b, _)) = dims.iter().find(|(_, &d)| d == 0) {
            return Err(Error::Config(format!(
                "dimension of `{b}` must be positive"
            )));
        }
        Ok(DimMap(dims))
    }

    pub fn from_lexicon(lexicon: &Lexicon) -> Result<DimMap> {
        DimMap::new(lexicon.dims().clone())
    }

    pub fn with_override(mut self, base: BasicType, dim: usize) -> Result<DimMap> {
        if dim == 0 {
            return Err(Error::Config(format!(
                "dimension of `{base}` must be positive"
            )));
        }
        self.0.insert(base, dim);
        Ok(self)
    }

    pub fn get(&self, base: &BasicType) -> Result<usize> {
        self.0
            .get(base)
            .copied()
            .ok_or_else(|| Error::UnknownBasicType(base.to_string()))
    }

    /// Per-simple dimensions of `t`.
    pub fn shape_of(&self, t: &PregroupType) -> Result<Vec<usize>> {
        t.simples().iter().map(|s| self.get(&s.base)).collect()
    }

    pub fn dim_of(&self, t: &PregroupType) -> Result<usize> {
        Ok(self.shape_of(t)?.iter().product())
    }

    pub fn iter(&self) -> impl Iterator<Item = (&BasicType, usize)> {
        self.0.iter().map(|(b, &d)| (b, d))
    }
}

pub fn dim_of(dims: &DimMap, t: &PregroupType) -> Result<usize> {
    dims.dim_of(t)
}

/// `E_t`: one row per word of `V_t` (lexicographic), `F(t)` columns.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EncodingMatrix {
    #[serde(rename = "type")]
    ty: PregroupType,
    words: Vec<String>,
    cols: usize,
    values: Vec<f64>,
}

impl EncodingMatrix {
    pub fn new(
        ty: PregroupType,
        words: Vec<String>,
        cols: usize,
        values: Vec<f64>,
    ) -> Result<Self> {
        if words.windows(2).any(|w| w[0] >= w[1]) {
            return Err(Error::Config(format!(
                "words of `{ty}` must be strictly increasing"
            )));
        }
        if values.len() != words.len() * cols {
            return Err(Error::LengthMismatch {
                expected: words.len() * cols,
                found: values.len(),
            });
        }
        Ok(EncodingMatrix {
            ty,
            words,
            cols,
            values,
        })
    }

    pub fn ty(&self) -> &PregroupType {
        &self.ty
    }

    pub fn words(&self) -> &[String] {
        &self.words
    }

    pub fn rows(&self) -> usize {
        self.words.len()
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn values_mut(&mut self) -> &mut [f64] {
        &mut self.values
    }

    pub fn row(&self, r: usize) -> &[f64] {
        &self.values[r * self.cols..(r + 1) * self.cols]
    }

    pub fn row_mut(&mut self, r: usize) -> &mut [f64] {
        &mut self.values[r * self.cols..(r + 1) * self.cols]
    }

    pub fn index_of(&self, word: &str) -> Option<usize> {
        self.words.binary_search_by(|w| w.as_str().cmp(word)).ok()
    }
}

/// Dimension map plus one encoding matrix per lexicon type.
#[derive(Clone, Debug, PartialEq)]
pub struct Model {
    dims: DimMap,
    matrices: Vec<EncodingMatrix>,
    offsets: Vec<usize>,
}

impl Model {
    /// Matrices must have distinct types; they are stored in type order.
    pub fn new(dims: DimMap, mut matrices: Vec<EncodingMatrix>) -> Result<Model> {
        matrices.sort_by(|a, b| a.ty.cmp(&b.ty));
        if let Some(w) = matrices.windows(2).find(|w| w[0].ty == w[1].ty) {
            return Err(Error::Config(format!("duplicate matrix for `{}`", w[0].ty)));
        }
        for m in &matrices {
            let f = dims.dim_of(&m.ty)?;
            if f != m.cols {
                return Err(Error::LengthMismatch {
                    expected: f,
                    found: m.cols,
                });
            }
        }
        let mut offsets = Vec::with_capacity(matrices.len() + 1);
        let mut total = 0;
        for m in &matrices {
            offsets.push(total);
            total += m.values.len();
        }
        offsets.push(total);
        Ok(Model {
            dims,
            matrices,
            offsets,
        })
    }

    /// A model with every encoding matrix filled by `init(type, rows, cols)`.
    pub fn from_lexicon(
        lexicon: &Lexicon,
        dims: DimMap,
        mut init: impl FnMut(&PregroupType, usize, usize) -> Vec<f64>,
    ) -> Result<Model> {
        let matrices = lexicon
            .types()
            .into_iter()
            .map(|t| {
                let words = lexicon.vocabulary(&t);
                let cols = dims.dim_of(&t)?;
                let values = init(&t, words.len(), cols);
                EncodingMatrix::new(t, words, cols, values)
            })
            .collect::<Result<Vec<_>>>()?;
        Model::new(dims, matrices)
    }

    pub fn zeros(lexicon: &Lexicon, dims: DimMap) -> Result<Model> {
        Model::from_lexicon(lexicon, dims, |_, r, c| vec![0.0; r * c])
    }

    pub fn dims(&self) -> &DimMap {
        &self.dims
    }

    pub fn matrices(&self) -> &[EncodingMatrix] {
        &self.matrices
    }

    pub fn matrix_at(&self, index: usize) -> &EncodingMatrix {
        &self.matrices[index]
    }

    pub fn matrix_index(&self, t: &PregroupType) -> Result<usize> {
        self.matrices
            .binary_search_by(|m| m.ty.cmp(t))
            .map_err(|_| Error::MissingType(t.clone()))
    }

    pub fn matrix(&self, t: &PregroupType) -> Result<&EncodingMatrix> {
        Ok(&self.matrices[self.matrix_index(t)?])
    }

    pub fn matrix_mut(&mut self, t: &PregroupType) -> Result<&mut EncodingMatrix> {
        let i = self.matrix_index(t)?;
        Ok(&mut self.matrices[i])
    }

    /// Start of each matrix in the flat parameter layout, plus the total.
    pub fn offsets(&self) -> &[usize] {
        &self.offsets
    }

    /// `D = Σ_t |V_t|·F(t)`.
    pub fn param_count(&self) -> usize {
        *self.offsets.last().unwrap()
    }

    fn locate(&self, word: &str, t: &PregroupType) -> Result<(usize, usize)> {
        let m = self
            .matrix_index(t)
            .map_err(|_| Error::WordNotInTypeVocabulary {
                word: word.into(),
                ty: t.clone(),
            })?;
        let r = self.matrices[m]
            .index_of(word)
            .ok_or_else(|| Error::WordNotInTypeVocabulary {
                word: word.into(),
                ty: t.clone(),
            })?;
        Ok((m, r))
    }

    /// `F(w, t) = w ; E_t`, a vector of length `F(t)`.
    pub fn word_vector(&self, word: &str, t: &PregroupType) -> Result<Tensor> {
        let (m, r) = self.locate(word, t)?;
        let row = self.matrices[m].row(r).to_vec();
        Tensor::new(vec![row.len()], row)
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        std::fs::write(path, self.to_json()?)?;
        Ok(())
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Model> {
        Model::from_json(&std::fs::read_to_string(path)?)
    }

    pub fn to_json(&self) -> Result<String> {
        let file = Checkpoint {
            version: CHECKPOINT_VERSION,
            dims: self.dims.clone(),
            matrices: self.matrices.clone(),
        };
        let mut text = serde_json::to_string_pretty(&file)?;
        text.push('\n');
        Ok(text)
    }

    pub fn from_json(text: &str) -> Result<Model> {
        let file: Checkpoint = serde_json::from_str(text)?;
        if file.version != CHECKPOINT_VERSION {
            return Err(Error::CheckpointVersion(file.version));
        }
        Model::new(file.dims, file.matrices)
    }
}

pub const CHECKPOINT_VERSION: u32 = 1;

#[derive(Serialize, Deserialize)]
struct Checkpoint {
    version: u32,
    dims: DimMap,
    matrices: Vec<EncodingMatrix>,
}

type Label = usize;

struct Factor {
    node: NodeId,
    labels: Vec<Label>,
}

/// Layer-by-layer contraction state.
struct Fold<'t, 'm> {
    tape: &'t mut Tape<'m>,
    factors: Vec<Factor>,
    wires: Vec<Label>,
    dims: Vec<usize>,
}

impl<'t, 'm> Fold<'t, 'm> {
    fn fresh(&mut self, dim: usize) -> Label {
        self.dims.push(dim);
        self.dims.len() - 1
    }

    fn find(&self, label: Label) -> Option<(usize, usize)> {
        self.factors.iter().enumerate().find_map(|(f, factor)| {
            factor
                .labels
                .iter()
                .position(|&l| l == label)
                .map(|a| (f, a))
        })
    }

    fn delta(&mut self, a: Label, b: Label) {
        let node = self.tape.constant(Tensor::delta(self.dims[a]));
        self.factors.push(Factor {
            node,
            labels: vec![a, b],
        });
    }

    fn cup(&mut self, at: usize) {
        let (a, b) = (self.wires[at], self.wires[at + 1]);
        self.wires.drain(at..at + 2);
        match (self.find(a), self.find(b)) {
            (Some((fa, xa)), Some((fb, xb))) if fa == fb => {
                let node = self.tape.trace(self.factors[fa].node, xa, xb);
                let factor = &mut self.factors[fa];
                factor.node = node;
                factor.labels.retain(|&l| l != a && l != b);
            }
            (Some((fa, xa)), Some((fb, xb))) => {
                let (first, second) = (fa.min(fb), fa.max(fb));
                let pairs = if fa < fb {
                    vec![(xa, xb)]
                } else {
                    vec![(xb, xa)]
                };
                let node =
                    self.tape
                        .contract(self.factors[first].node, self.factors[second].node, pairs);
                let second = self.factors.remove(second);
                let factor = &mut self.factors[first];
                factor.labels.extend(second.labels);
                factor.labels.retain(|&l| l != a && l != b);
                factor.node = node;
            }
            // `b` is still an open domain wire: the cup bends `a`'s axis onto it.
            (Some((fa, xa)), None) => self.factors[fa].labels[xa] = b,
            (None, Some((fb, xb))) => self.factors[fb].labels[xb] = a,
            (None, None) => self.delta(a, b),
        }
    }

    fn finish(mut self, dom: Vec<Label>) -> NodeId {
        let mut cod = std::mem::take(&mut self.wires);
        for wire in cod.iter_mut() {
            if self.find(*wire).is_none() {
                // a domain wire running straight through to the codomain
                let copy = self.fresh(self.dims[*wire]);
                self.delta(*wire, copy);
                *wire = copy;
            }
        }
        let mut factors = self.factors.into_iter();
        let (mut node, mut labels) = match factors.next() {
            Some(f) => (f.node, f.labels),
            None => (self.tape.constant(Tensor::scalar(1.0)), Vec::new()),
        };
        for f in factors {
            node = self.tape.contract(node, f.node, Vec::new());
            labels.extend(f.labels);
        }
        let order: Vec<Label> = dom.into_iter().chain(cod).collect();
        let perm: Vec<usize> = order
            .iter()
            .map(|l| {
                labels
                    .iter()
                    .position(|x| x == l)
                    .expect("every open wire is an axis")
            })
            .collect();
        self.tape.permute(node, perm)
    }
}

/// Records the evaluation of `d` on `tape`; the result has one axis per
/// domain wire followed by one per codomain wire.
pub(crate) fn eval_on(tape: &mut Tape<'_>, model: &Model, d: &Diagram) -> Result<NodeId> {
    d.validate()?;
    let dims = &model.dims;
    let mut fold = Fold {
        tape,
        factors: Vec::new(),
        wires: Vec::new(),
        dims: Vec::new(),
    };
    let dom: Vec<Label> = dims
        .shape_of(&d.dom)?
        .into_iter()
        .map(|dim| fold.fresh(dim))
        .collect();
    fold.wires = dom.clone();
    for layer in &d.layers {
        let at = layer.left.len();
        match &layer.generator {
            Generator::Word { word, cod } => {
                let (m, r) = model.locate(word, cod)?;
                let shape = dims.shape_of(cod)?;
                let labels: Vec<Label> = shape.iter().map(|&k| fold.fresh(k)).collect();
                let node = fold.tape.row(m, r, shape);
                fold.wires.splice(at..at, labels.iter().copied());
                fold.factors.push(Factor { node, labels });
            }
            Generator::Cup { base, .. } => {
                dims.get(base)?;
                fold.cup(at);
            }
            Generator::Cap { base, .. } => {
                let dim = dims.get(base)?;
                let (a, b) = (fold.fresh(dim), fold.fresh(dim));
                fold.delta(a, b);
                fold.wires.splice(at..at, [a, b]);
            }
        }
    }
    Ok(fold.finish(dom))
}

/// `F(d)`, with axes for the domain wires followed by the codomain wires;
/// wires of dimension one are dropped.
pub fn eval(model: &Model, d: &Diagram) -> Result<Tensor> {
    let mut tape = Tape::new(model);
    let node = eval_on(&mut tape, model, d)?;
    let value = tape.value(node).clone();
    let shape = value.shape().iter().copied().filter(|&k| k != 1).collect();
    value.reshape(shape)
}

pub(crate) fn eval_hole_on(
    tape: &mut Tape<'_>,
    model: &Model,
    ex: &MaskedExample,
) -> Result<NodeId> {
    let s = model.dims.dim_of(&ex.hole_diagram.cod)?;
    if s != 1 {
        return Err(Error::SentenceDimension(s));
    }
    eval_on(tape, model, &ex.hole_diagram)
}

/// The meaning covector `v : F(t_i) → 1` of a hole diagram, flattened.
pub fn eval_hole(model: &Model, ex: &MaskedExample) -> Result<Tensor> {
    let mut tape = Tape::new(model);
    let node = eval_hole_on(&mut tape, model, ex)?;
    let v = tape.value(node).clone();
    let n = v.len();
    v.reshape(vec![n])
}

/// `softmax(E_t · v)` over `V_t`, in the matrix's row order.
pub fn predict(model: &Model, ex: &MaskedExample) -> Result<Vec<f64>> {
    let mut tape = Tape::new(model);
    let v = eval_hole_on(&mut tape, model, ex)?;
    let m = model.matrix_index(&ex.hole_type)?;
    let logits = tape.logits(m, v);
    Ok(softmax(tape.value(logits).data()))
}
