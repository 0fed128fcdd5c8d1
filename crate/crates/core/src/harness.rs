//! Corpus ingestion, training runs, evaluation reports and parse listings.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};
use crate::grammar::{parse, resolve_masked, Lexicon, MaskedExample, MaskedLine};
use crate::optim::{loss, loss_and_grad, svd_init, AdamState, LossConfig, ParamVector};
use crate::rigid::{BasicType, PregroupType};
use crate::semantics::{predict, DimMap, Model};

#[derive(Clone, Debug)]
pub struct CorpusEntry {
    pub raw: String,
    pub line: MaskedLine,
    pub example: MaskedExample,
}

#[derive(Clone, Debug)]
pub struct Corpus {
    pub source: String,
    pub entries: Vec<CorpusEntry>,
}

impl Corpus {
    /// Parses one masked line per non-blank line, collecting every failure.
    pub fn parse(text: &str, source: &str, lexicon: &Lexicon) -> Result<Corpus> {
        let mut entries = Vec::new();
        let mut errors = Vec::new();
        for (i, raw) in text.lines().enumerate() {
            let lineno = i + 1;
            if raw.trim().is_empty() {
                continue;
            }
            let Ok(line) = raw.parse::<MaskedLine>() else {
                errors.push(Error::MalformedLine {
                    lineno,
                    line: raw.to_string(),
                });
                continue;
            };
            match resolve_masked(&line, lexicon) {
                Ok(example) => entries.push(CorpusEntry {
                    raw: raw.to_string(),
                    line,
                    example,
                }),
                Err(e) => errors.push(Error::AtLine {
                    lineno,
                    source: Box::new(e),
                }),
            }
        }
        if !errors.is_empty() {
            return Err(Error::BadLines {
                path: source.to_string(),
                errors,
            });
        }
        Ok(Corpus {
            source: source.to_string(),
            entries,
        })
    }

    pub fn examples(&self) -> Vec<MaskedExample> {
        self.entries.iter().map(|e| e.example.clone()).collect()
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn to_text(&self) -> String {
        self.entries
            .iter()
            .map(|e| format!("{}\n", e.line))
            .collect()
    }
}

pub fn load_corpus(path: impl AsRef<Path>, lexicon: &Lexicon) -> Result<Corpus> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path)?;
    Corpus::parse(&text, &path.display().to_string(), lexicon)
}

#[derive(Clone, Debug, PartialEq)]
pub struct TrainConfig {
    pub seed: u64,
    pub epochs: usize,
    pub lr: f64,
    pub loss: LossConfig,
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig {
            seed: 0,
            epochs: 500,
            lr: 5e-2,
            loss: LossConfig::default(),
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        self.loss.validate()?;
        if !self.lr.is_finite() || self.lr <= 0.0 {
            return Err(Error::Config(format!(
                "learning rate must be positive, got {}",
                self.lr
            )));
        }
        Ok(())
    }
}

/// Everything a command-line training run needs.
#[derive(Clone, Debug)]
pub struct RunConfig {
    pub lexicon: PathBuf,
    pub train: PathBuf,
    pub dims: Vec<(BasicType, usize)>,
    pub out: PathBuf,
    pub train_cfg: TrainConfig,
}

/// Seed for one type's matrix: a hash of the run seed and the type's notation,
/// so types do not share or shift each other's random streams.
pub fn type_seed(seed: u64, t: &PregroupType) -> u64 {
    let mut h = Sha256::new();
    h.update(seed.to_le_bytes());
    h.update(t.to_string().as_bytes());
    let digest = h.finalize();
    u64::from_le_bytes(digest[..8].try_into().unwrap())
}

pub fn init_model(lexicon: &Lexicon, dims: DimMap, seed: u64) -> Result<Model> {
    Model::from_lexicon(lexicon, dims, |t, rows, cols| {
        svd_init(type_seed(seed, t), rows, cols)
    })
}

#[derive(Clone, Debug)]
pub struct TrainOutcome {
    pub model: Model,
    /// Loss before each update.
    pub history: Vec<f64>,
    pub final_loss: f64,
}

/// Full-batch Adam on the masked-word loss.
pub fn train_model(
    mut model: Model,
    batch: &[MaskedExample],
    cfg: &TrainConfig,
) -> Result<TrainOutcome> {
    cfg.validate()?;
    let mut params = ParamVector::pack(&model);
    let mut adam = AdamState::new(params.len(), cfg.lr);
    let mut history = Vec::with_capacity(cfg.epochs);
    for _ in 0..cfg.epochs {
        let (l, g) = loss_and_grad(&model, batch, &cfg.loss)?;
        history.push(l);
        adam.update(&mut params.values, &g.values)?;
        params.unpack_into(&mut model)?;
    }
    let final_loss = loss(&model, batch, &cfg.loss)?;
    Ok(TrainOutcome {
        model,
        history,
        final_loss,
    })
}

pub fn dims_for(lexicon: &Lexicon, overrides: &[(BasicType, usize)]) -> Result<DimMap> {
    let mut dims = DimMap::from_lexicon(lexicon)?;
    for (b, d) in overrides {
        if !lexicon.dims().contains_key(b) {
            return Err(Error::UnknownBasicType(b.to_string()));
        }
        dims = dims.with_override(b.clone(), *d)?;
    }
    Ok(dims)
}

/// Loads inputs, trains from the seeded initialisation and writes the checkpoint.
pub fn train(cfg: &RunConfig) -> Result<TrainOutcome> {
    let lexicon = Lexicon::load(&cfg.lexicon)?;
    let corpus = load_corpus(&cfg.train, &lexicon)?;
    let dims = dims_for(&lexicon, &cfg.dims)?;
    let model = init_model(&lexicon, dims, cfg.train_cfg.seed)?;
    let outcome = train_model(model, &corpus.examples(), &cfg.train_cfg)?;
    outcome.model.save(&cfg.out)?;
    Ok(outcome)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Prediction {
    pub word: String,
    pub probability: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Record {
    pub line: String,
    pub gold: String,
    pub predicted: String,
    pub correct: bool,
    pub ranked: Vec<Prediction>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EvalReport {
    pub records: Vec<Record>,
    pub correct: usize,
    pub total: usize,
    pub top1_accuracy: f64,
}

/// The full distribution over `V_t`, most probable first; ties keep the
/// lexicographic row order.
pub fn ranked_predictions(model: &Model, ex: &MaskedExample) -> Result<Vec<Prediction>> {
    let probs = predict(model, ex)?;
    let words = model.matrix(&ex.hole_type)?.words();
    let mut ranked: Vec<Prediction> = words
        .iter()
        .zip(probs)
        .map(|(w, p)| Prediction {
            word: w.clone(),
            probability: p,
        })
        .collect();
    ranked.sort_by(|a, b| b.probability.total_cmp(&a.probability));
    Ok(ranked)
}

fn record(model: &Model, entry: &CorpusEntry, top_k: usize) -> Result<Record> {
    let mut ranked = ranked_predictions(model, &entry.example)?;
    let predicted = ranked[0].word.clone();
    ranked.truncate(top_k.max(1));
    Ok(Record {
        line: entry.line.to_string(),
        gold: entry.example.gold.clone(),
        correct: predicted == entry.example.gold,
        predicted,
        ranked,
    })
}

pub fn evaluate(model: &Model, corpus: &Corpus, top_k: usize) -> Result<EvalReport> {
    #[cfg(feature = "parallel")]
    let records: Result<Vec<Record>> = {
        use rayon::prelude::*;
        corpus
            .entries
            .par_iter()
            .map(|e| record(model, e, top_k))
            .collect()
    };
    #[cfg(not(feature = "parallel"))]
    let records: Result<Vec<Record>> = corpus
        .entries
        .iter()
        .map(|e| record(model, e, top_k))
        .collect();
    let records = records?;
    let correct = records.iter().filter(|r| r.correct).count();
    let total = records.len();
    Ok(EvalReport {
        records,
        correct,
        total,
        top1_accuracy: if total == 0 {
            0.0
        } else {
            correct as f64 / total as f64
        },
    })
}

/// `word (0.60), other (0.35)`, skipping entries that round below a cent.
pub fn format_predictions(ranked: &[Prediction]) -> String {
    ranked
        .iter()
        .filter(|p| p.probability >= 0.005)
        .map(|p| format!("{} ({:.2})", p.word, p.probability))
        .collect::<Vec<_>>()
        .join(", ")
}

impl EvalReport {
    pub fn to_text(&self) -> String {
        let mut out = String::new();
        for r in &self.records {
            let shown = r
                .ranked
                .iter()
                .map(|p| format!("{} ({:.2})", p.word, p.probability))
                .collect::<Vec<_>>()
                .join(", ");
            let mark = if r.correct { "ok" } else { "miss" };
            let _ = writeln!(
                out,
                "{} [{mark}]\nTarget: {}\nPrediction: {shown}\n",
                r.line, r.gold
            );
        }
        let _ = writeln!(
            out,
            "accuracy: {:.4} ({}/{})",
            self.top1_accuracy, self.correct, self.total
        );
        out
    }

    pub fn to_json(&self) -> Result<String> {
        let mut s = serde_json::to_string_pretty(self)?;
        s.push('\n');
        Ok(s)
    }
}

/// `Target:` / `Prediction:` lines for one masked sentence.
pub fn predict_line(model: &Model, line: &str, lexicon: &Lexicon, top_k: usize) -> Result<String> {
    let masked: MaskedLine = line.parse().map_err(|_| Error::MalformedLine {
        lineno: 1,
        line: line.to_string(),
    })?;
    let ex = resolve_masked(&masked, lexicon)?;
    let mut ranked = ranked_predictions(model, &ex)?;
    ranked.truncate(top_k.max(1));
    Ok(format!(
        "Target: {}\nPrediction: {}\n",
        ex.gold,
        format_predictions(&ranked)
    ))
}

/// Entry choices and cups of every parse, or `no parse`.
pub fn parse_listing<S: AsRef<str>>(words: &[S], lexicon: &Lexicon) -> Result<String> {
    let parses = parse(words, lexicon)?;
    if parses.is_empty() {
        return Ok("no parse\n".into());
    }
    let mut out = String::new();
    for (k, p) in parses.iter().enumerate() {
        let _ = writeln!(out, "parse {}:", k + 1);
        for (w, t) in p.words.iter().zip(&p.entry_choice) {
            let _ = writeln!(out, "  {w} : {t}");
        }
        let cups = p
            .matching
            .iter()
            .map(|(i, j)| format!("({i},{j})"))
            .collect::<Vec<_>>()
            .join(" ");
        let _ = writeln!(out, "  cups: {cups}");
    }
    Ok(out)
}
