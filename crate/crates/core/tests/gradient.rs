//! Analytic gradients against central finite differences.

mod common;

use common::{gradient_batch, gradient_check, gradient_world};
use funlm::grammar::{parse, MaskedExample};
use funlm::optim::{grad, LossConfig};
use funlm::{make_hole, BasicType, DimMap, Lexicon, Model, PregroupType};
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use std::collections::BTreeMap;

fn ty(s: &str) -> PregroupType {
    s.parse().unwrap()
}

fn check(model: &Model, batch: &[MaskedExample], cfg: &LossConfig, coords: &[usize]) {
    let (worst, k) = gradient_check(model, batch, cfg, coords);
    assert!(worst < 1e-4, "coordinate {k}: relative error {worst:e}");
}

#[test]
fn cross_entropy_gradient_matches_finite_differences() {
    // No regularisers: |θ| is not differentiable at 0 and would only blur the check.
    let cfg = LossConfig {
        l1_weight: 0.0,
        l2_weight: 0.0,
    };
    for seed in 0..10 {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let (lex, model) = gradient_world(&mut rng);
        let batch = gradient_batch(&lex, &mut rng, 3);
        let coords: Vec<usize> = (0..model.param_count()).collect();
        check(&model, &batch, &cfg, &coords);
    }
}

#[test]
fn regularised_gradient_matches_on_random_coordinates() {
    let cfg = LossConfig::default();
    let mut rng = ChaCha8Rng::seed_from_u64(99);
    let (lex, model) = gradient_world(&mut rng);
    let batch = gradient_batch(&lex, &mut rng, 3);
    let mut coords: Vec<usize> = (0..model.param_count()).collect();
    coords.shuffle(&mut rng);
    coords.truncate(20);
    check(&model, &batch, &cfg, &coords);
}

#[test]
fn shipped_model_gradient_on_sampled_coordinates() {
    let lex = Lexicon::shipped();
    let model = funlm::harness::init_model(&lex, DimMap::default(), 7).unwrap();
    let corpus = funlm::harness::Corpus::parse(funlm::data::TRAIN, "train", &lex).unwrap();
    let batch: Vec<MaskedExample> = corpus.examples().into_iter().take(12).collect();
    let cfg = LossConfig::default();
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let mut coords: Vec<usize> = (0..model.param_count()).collect();
    coords.shuffle(&mut rng);
    coords.truncate(40);
    check(&model, &batch, &cfg, &coords);
}

#[test]
fn logit_gradient_is_softmax_minus_one_hot() {
    // Three words of type n with identity rows in 3 dims; the hole covector is
    // the subject vector, so d loss / d E_n[r] at the gold row gets −v and the
    // others p_r·v, plus the subject row's own contribution.
    let mut dims = BTreeMap::new();
    dims.insert(BasicType::new("n").unwrap(), 3);
    dims.insert(BasicType::new("s").unwrap(), 1);
    let mut entries = BTreeMap::new();
    for w in ["a", "b", "c"] {
        entries.insert(w.to_string(), vec![ty("n")]);
    }
    entries.insert("v".to_string(), vec![ty("n.r s")]);
    let lex = Lexicon::new(BasicType::new("s").unwrap(), dims, entries).unwrap();
    let mut model = Model::zeros(&lex, DimMap::from_lexicon(&lex).unwrap()).unwrap();
    model
        .matrix_mut(&ty("n"))
        .unwrap()
        .values_mut()
        .copy_from_slice(&[1.0, 0.0, 0.0, 0.0, 1.0, 0.0, 0.0, 0.0, 1.0]);
    model
        .matrix_mut(&ty("n.r s"))
        .unwrap()
        .values_mut()
        .copy_from_slice(&[0.2, -0.4, 0.9]);
    // hole on the subject: v = verb vector, logits = E_n v = verb vector
    let p = parse(&["b", "v"], &lex).unwrap().remove(0);
    let ex = make_hole(&p, 0).unwrap();
    let cfg = LossConfig {
        l1_weight: 0.0,
        l2_weight: 0.0,
    };
    let g = grad(&model, &[ex], &cfg).unwrap();
    let logits = [0.2f64, -0.4, 0.9];
    let z: f64 = logits.iter().map(|x| x.exp()).sum();
    let dlogits: Vec<f64> = logits
        .iter()
        .enumerate()
        .map(|(i, x)| x.exp() / z - if i == 1 { 1.0 } else { 0.0 })
        .collect();
    // d loss / d verb = E_nᵀ dlogits = dlogits (identity rows)
    let verb_offset = model.offsets()[model.matrix_index(&ty("n.r s")).unwrap()];
    for (got, want) in g.values[verb_offset..verb_offset + 3].iter().zip(&dlogits) {
        assert!((got - want).abs() < 1e-12);
    }
}
