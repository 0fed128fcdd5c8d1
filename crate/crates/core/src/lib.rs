//! Functorial language models.
//!
//! Sentences are parsed with a pregroup grammar into string diagrams of the
//! free rigid category ([`rigid`], [`grammar`]). A trainable functor sends
//! those diagrams to tensor contractions over real vector spaces
//! ([`semantics`]): each lexicon type `t` owns an encoding matrix `E_t`
//! whose rows are word vectors. Removing one word from a parsed sentence
//! leaves a hole diagram whose value is a covector `v`, and
//! `softmax(E_t · v)` is a distribution over the words that could fill the
//! hole. The matrices are fit by reverse-mode gradients of the masked-word
//! cross-entropy with Adam ([`optim`]); [`harness`] ties this together into
//! training and evaluation runs over masked-sentence corpora.

pub mod data;
pub mod error;
pub mod grammar;
pub mod harness;
pub mod optim;
pub mod rigid;
pub mod semantics;
mod tape;
pub mod tensor;

pub use error::{Error, Result};
pub use grammar::{
    make_hole, parse, reduce, resolve_masked, Lexicon, MaskedExample, MaskedLine, Parse,
};
pub use rigid::{BasicType, Diagram, Generator, Layer, PregroupType, SimpleType};
pub use semantics::{eval, eval_hole, predict, DimMap, EncodingMatrix, Model};
pub use tensor::Tensor;
