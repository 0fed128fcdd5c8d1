use thiserror::Error;

use crate::rigid::PregroupType;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("interface mismatch: {left} does not match {right}")]
    InterfaceMismatch {
        left: PregroupType,
        right: PregroupType,
    },
    #[error("invalid diagram: {0}")]
    InvalidDiagram(String),
    #[error("cannot parse type {text:?}: {reason}")]
    TypeSyntax { text: String, reason: String },
    #[error("unknown basic type `{0}`")]
    UnknownBasicType(String),
    #[error("unknown word `{0}`")]
    UnknownWord(String),
    #[error("no parse for `{0}`")]
    Unparsable(String),
    #[error("index {index} out of range for sentence of length {len}")]
    IndexOutOfRange { index: usize, len: usize },
    #[error("word `{word}` is not in the vocabulary of type `{ty}`")]
    WordNotInTypeVocabulary { word: String, ty: PregroupType },
    #[error("no encoding matrix for type `{0}`")]
    MissingType(PregroupType),
    #[error("sentence type must have dimension 1, found {0}")]
    SentenceDimension(usize),
    #[error("length mismatch: expected {expected}, found {found}")]
    LengthMismatch { expected: usize, found: usize },
    #[error("non-finite value: {0}")]
    NonFinite(String),
    #[error("invalid configuration: {0}")]
    Config(String),
    #[error("invalid lexicon: {0}")]
    Lexicon(String),
    #[error("line {lineno}: malformed masked line {line:?}")]
    MalformedLine { lineno: usize, line: String },
    #[error("line {lineno}: {source}")]
    AtLine {
        lineno: usize,
        #[source]
        source: Box<Error>,
    },
    #[error("{} bad lines in {path}:\n{}", .errors.len(), list_errors(.errors))]
    BadLines { path: String, errors: Vec<Error> },
    #[error("unsupported checkpoint version {0}")]
    CheckpointVersion(u32),
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
    #[error(transparent)]
    Toml(#[from] toml::de::Error),
}

fn list_errors(errors: &[Error]) -> String {
    errors
        .iter()
        .map(|e| format!("  {e}"))
        .collect::<Vec<_>>()
        .join("\n")
}

impl Error {
    /// Process exit code: 1 for data and configuration errors, 2 for numerical failures.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::NonFinite(_) => 2,
            _ => 1,
        }
    }
}
