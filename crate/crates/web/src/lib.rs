//! Browser bindings for the funlm demo page.
//!
//! The Rust side returns JSON strings; `www/index.html` draws them. Everything
//! here also works natively, which is how it is tested.

use funlm::harness::{evaluate, init_model, ranked_predictions, Corpus, Prediction, TrainConfig};
use funlm::optim::{loss_and_grad, AdamState, ParamVector};
use funlm::{resolve_masked, DimMap, Lexicon, MaskedExample, MaskedLine, Model};
use serde::Serialize;
use wasm_bindgen::prelude::*;

#[derive(Debug, Serialize)]
pub struct WordView {
    pub word: String,
    #[serde(rename = "type")]
    pub ty: String,
    /// One label per wire, e.g. `n`, `n.r`, `s`.
    pub wires: Vec<String>,
}

#[derive(Debug, Serialize)]
pub struct ParseView {
    pub words: Vec<WordView>,
    /// Wire index pairs joined by cups, wires numbered left to right.
    pub cups: Vec<(usize, usize)>,
    /// Wires left open; for a sentence this is the single `s` wire.
    pub open: Vec<usize>,
}

pub fn parse_views(sentence: &str, lexicon: &Lexicon) -> funlm::Result<Vec<ParseView>> {
    let words: Vec<&str> = sentence.split_whitespace().collect();
    let parses = funlm::parse(&words, lexicon)?;
    Ok(parses
        .into_iter()
        .map(|p| {
            let width = p.flat_type().len();
            let open = (0..width)
                .filter(|k| !p.matching.iter().any(|&(i, j)| i == *k || j == *k))
                .collect();
            let words = p
                .words
                .iter()
                .zip(&p.entry_choice)
                .map(|(w, t)| WordView {
                    word: w.clone(),
                    ty: t.to_string(),
                    wires: t.simples().iter().map(simple_label).collect(),
                })
                .collect();
            ParseView {
                words,
                cups: p.matching,
                open,
            }
        })
        .collect())
}

fn simple_label(s: &funlm::SimpleType) -> String {
    funlm::PregroupType::from_simples(vec![s.clone()]).to_string()
}

#[derive(Debug, Serialize)]
pub struct Score {
    pub line: String,
    pub predicted: String,
    pub correct: bool,
}

#[derive(Debug, Serialize)]
pub struct Scores {
    pub correct: usize,
    pub total: usize,
    pub accuracy: f64,
    pub lines: Vec<Score>,
}

/// A model trained one chunk of epochs at a time, so the page can redraw
/// between chunks.
pub struct Session {
    lexicon: Lexicon,
    batch: Vec<MaskedExample>,
    test: Corpus,
    model: Model,
    params: ParamVector,
    adam: AdamState,
    cfg: TrainConfig,
    epoch: usize,
}

impl Session {
    pub fn new(seed: u64) -> funlm::Result<Session> {
        let lexicon = Lexicon::shipped();
        let batch = Corpus::parse(funlm::data::TRAIN, "train", &lexicon)?.examples();
        let test = Corpus::parse(funlm::data::TEST, "test", &lexicon)?;
        let model = init_model(&lexicon, DimMap::from_lexicon(&lexicon)?, seed)?;
        let cfg = TrainConfig {
            seed,
            ..TrainConfig::default()
        };
        let params = ParamVector::pack(&model);
        let adam = AdamState::new(params.len(), cfg.lr);
        Ok(Session {
            lexicon,
            batch,
            test,
            model,
            params,
            adam,
            cfg,
            epoch: 0,
        })
    }

    /// Runs up to `epochs` more Adam steps, stopping at the configured total.
    /// Returns the loss before the last step taken.
    pub fn step(&mut self, epochs: usize) -> funlm::Result<f64> {
        let mut last = f64::NAN;
        for _ in 0..epochs.min(self.cfg.epochs - self.epoch) {
            let (l, g) = loss_and_grad(&self.model, &self.batch, &self.cfg.loss)?;
            self.adam.update(&mut self.params.values, &g.values)?;
            self.params.unpack_into(&mut self.model)?;
            self.epoch += 1;
            last = l;
        }
        Ok(last)
    }

    pub fn epoch(&self) -> usize {
        self.epoch
    }

    pub fn total_epochs(&self) -> usize {
        self.cfg.epochs
    }

    pub fn model(&self) -> &Model {
        &self.model
    }

    pub fn predict(&self, line: &str) -> funlm::Result<Vec<Prediction>> {
        let masked: MaskedLine = line.parse().map_err(|_| funlm::Error::MalformedLine {
            lineno: 1,
            line: line.to_string(),
        })?;
        ranked_predictions(&self.model, &resolve_masked(&masked, &self.lexicon)?)
    }

    pub fn scores(&self) -> funlm::Result<Scores> {
        let report = evaluate(&self.model, &self.test, 1)?;
        Ok(Scores {
            correct: report.correct,
            total: report.total,
            accuracy: report.top1_accuracy,
            lines: report
                .records
                .into_iter()
                .map(|r| Score {
                    line: r.line,
                    predicted: r.predicted,
                    correct: r.correct,
                })
                .collect(),
        })
    }

    pub fn test_lines(&self) -> Vec<String> {
        self.test
            .entries
            .iter()
            .map(|e| e.line.to_string())
            .collect()
    }
}

fn js_err(e: impl std::fmt::Display) -> JsValue {
    JsValue::from_str(&e.to_string())
}

fn to_json<T: Serialize>(v: &T) -> Result<String, JsValue> {
    serde_json::to_string(v).map_err(js_err)
}

/// Parses of a sentence under the shipped lexicon, as JSON.
#[wasm_bindgen]
pub fn parse(sentence: &str) -> Result<String, JsValue> {
    to_json(&parse_views(sentence, &Lexicon::shipped()).map_err(js_err)?)
}

#[wasm_bindgen]
pub struct Trainer(Session);

#[wasm_bindgen]
impl Trainer {
    #[wasm_bindgen(constructor)]
    pub fn new(seed: u32) -> Result<Trainer, JsValue> {
        Session::new(seed.into()).map(Trainer).map_err(js_err)
    }

    pub fn step(&mut self, epochs: usize) -> Result<f64, JsValue> {
        self.0.step(epochs).map_err(js_err)
    }

    pub fn epoch(&self) -> usize {
        self.0.epoch()
    }

    #[wasm_bindgen(js_name = totalEpochs)]
    pub fn total_epochs(&self) -> usize {
        self.0.total_epochs()
    }

    /// Ranked predictions for a line such as `cat ? fish (eats)`, as JSON.
    pub fn predict(&self, line: &str) -> Result<String, JsValue> {
        to_json(&self.0.predict(line).map_err(js_err)?)
    }

    /// Top-1 results on the held-out lines, as JSON.
    pub fn scores(&self) -> Result<String, JsValue> {
        to_json(&self.0.scores().map_err(js_err)?)
    }

    #[wasm_bindgen(js_name = testLines)]
    pub fn test_lines(&self) -> Result<String, JsValue> {
        to_json(&self.0.test_lines())
    }
}
