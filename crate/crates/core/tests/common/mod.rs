//! Independent oracles shared by the integration suites.
#![allow(dead_code)]

use std::collections::BTreeMap;

use funlm::grammar::{make_hole, parse, MaskedExample, Matching};
use funlm::optim::{grad, loss, LossConfig, ParamVector};
use funlm::{BasicType, Diagram, DimMap, Lexicon, Model, PregroupType, SimpleType, Tensor};
use rand::seq::SliceRandom;
use rand::Rng;

/// Every (entry choice, matching) pair reducing `words` to the sentence type,
/// by exhaustive enumeration of partial matchings over cup-compatible pairs.
pub fn brute_force_parses(words: &[&str], lexicon: &Lexicon) -> Vec<(Vec<PregroupType>, Matching)> {
    let options: Vec<Vec<PregroupType>> = words
        .iter()
        .map(|w| lexicon.entries(w).unwrap().to_vec())
        .collect();
    let mut out = Vec::new();
    let mut choices: Vec<Vec<PregroupType>> = vec![Vec::new()];
    for opts in &options {
        choices = choices
            .into_iter()
            .flat_map(|prefix| {
                opts.iter().map(move |t| {
                    let mut p = prefix.clone();
                    p.push(t.clone());
                    p
                })
            })
            .collect();
    }
    let target = lexicon.sentence_type();
    for choice in choices {
        let flat: Vec<SimpleType> = choice.iter().flat_map(|t| t.simples().to_vec()).collect();
        let mut all = Vec::new();
        enumerate_matchings(&flat, 0, &mut vec![None; flat.len()], &mut all);
        for m in all {
            if is_valid_reduction(&flat, &m, target.simples()) {
                let mut m = m;
                m.sort_by_key(|&(i, j)| (j, i));
                out.push((choice.clone(), m));
            }
        }
    }
    out
}

fn enumerate_matchings(
    types: &[SimpleType],
    pos: usize,
    partner: &mut Vec<Option<usize>>,
    out: &mut Vec<Matching>,
) {
    if pos == types.len() {
        let m = partner
            .iter()
            .enumerate()
            .filter_map(|(i, p)| p.filter(|&j| j > i).map(|j| (i, j)))
            .collect();
        out.push(m);
        return;
    }
    if partner[pos].is_some() {
        enumerate_matchings(types, pos + 1, partner, out);
        return;
    }
    // leave unmatched
    enumerate_matchings(types, pos + 1, partner, out);
    for j in pos + 1..types.len() {
        if partner[j].is_none() && types[pos].cups_with(&types[j]) {
            partner[pos] = Some(j);
            partner[j] = Some(pos);
            enumerate_matchings(types, pos + 1, partner, out);
            partner[pos] = None;
            partner[j] = None;
        }
    }
}

/// No crossing cups, no open wire trapped under a cup, and the open wires
/// spell `target`.
pub fn is_valid_reduction(types: &[SimpleType], m: &Matching, target: &[SimpleType]) -> bool {
    for &(i, j) in m {
        if !types[i].cups_with(&types[j]) {
            return false;
        }
        for &(k, l) in m {
            if i < k && k < j && j < l {
                return false;
            }
        }
    }
    let matched: Vec<bool> = (0..types.len())
        .map(|p| m.iter().any(|&(i, j)| i == p || j == p))
        .collect();
    for (p, &is_matched) in matched.iter().enumerate() {
        if !is_matched && m.iter().any(|&(i, j)| i < p && p < j) {
            return false;
        }
    }
    let open: Vec<&SimpleType> = (0..types.len())
        .filter(|&p| !matched[p])
        .map(|p| &types[p])
        .collect();
    open.len() == target.len() && open.iter().zip(target).all(|(a, b)| *a == b)
}

pub fn is_planar(m: &Matching) -> bool {
    m.iter()
        .all(|&(i, j)| m.iter().all(|&(k, l)| !(i < k && k < j && j < l)))
}

/// Two basic types of dimensions 2 and 3 and a handful of word types.
pub fn small_world<R: Rng>(rng: &mut R) -> (Lexicon, Model) {
    let x = BasicType::new("x").unwrap();
    let y = BasicType::new("y").unwrap();
    let s = BasicType::new("s").unwrap();
    let mut dims = BTreeMap::new();
    dims.insert(x.clone(), 2);
    dims.insert(y.clone(), 3);
    dims.insert(s.clone(), 1);
    let types = ["x", "y.r", "x.l y", "x y.l", "s", "y x.r"];
    let mut entries = BTreeMap::new();
    for (k, t) in types.iter().enumerate() {
        for w in 0..2 {
            entries.insert(format!("w{k}{w}"), vec![t.parse::<PregroupType>().unwrap()]);
        }
    }
    let lex = Lexicon::new(s, dims, entries).unwrap();
    let model = Model::from_lexicon(&lex, DimMap::from_lexicon(&lex).unwrap(), |_, r, c| {
        (0..r * c).map(|_| rng.gen_range(-1.0..1.0)).collect()
    })
    .unwrap();
    (lex, model)
}

pub fn random_type<R: Rng>(rng: &mut R, max_len: usize) -> PregroupType {
    let len = rng.gen_range(0..=max_len);
    let simples = (0..len)
        .map(|_| {
            let base = BasicType::new(if rng.gen_bool(0.5) { "x" } else { "y" }).unwrap();
            SimpleType::new(base, rng.gen_range(-2..=2))
        })
        .collect();
    PregroupType::from_simples(simples)
}

/// A random diagram out of `dom` built from word boxes, cups and caps, kept
/// to at most `max_wires` open wires.
pub fn random_diagram<R: Rng>(
    rng: &mut R,
    lex: &Lexicon,
    dom: &PregroupType,
    max_wires: usize,
) -> Diagram {
    let mut d = Diagram::identity(dom);
    let words: Vec<&str> = lex.words().collect();
    for _ in 0..rng.gen_range(0..5) {
        let width = d.cod.len();
        let cups: Vec<usize> = (0..width.saturating_sub(1))
            .filter(|&i| d.cod.simples()[i].cups_with(&d.cod.simples()[i + 1]))
            .collect();
        // cups need a compatible adjacent pair, so take one whenever possible
        let choice = if cups.is_empty() {
            rng.gen_range(1..3)
        } else {
            rng.gen_range(0..3)
        };
        if choice == 0 || (!cups.is_empty() && rng.gen_bool(0.5)) {
            d = d.then_cup_at(*cups.choose(rng).unwrap()).unwrap();
            continue;
        }
        let at = rng.gen_range(0..=width);
        let (left, right) = split(&d.cod, at);
        let piece = if choice == 1 {
            let w = words.choose(rng).unwrap();
            Diagram::word(*w, &lex.entries(w).unwrap()[0])
        } else {
            let base = BasicType::new(if rng.gen_bool(0.5) { "x" } else { "y" }).unwrap();
            Diagram::cap(&base, rng.gen_range(-1..=1))
        };
        if width + piece.cod.len() > max_wires {
            continue;
        }
        d = d.compose(&piece.whisker(&left, &right)).unwrap();
    }
    d
}

pub fn split(t: &PregroupType, at: usize) -> (PregroupType, PregroupType) {
    let s = t.simples();
    (
        PregroupType::from_simples(s[..at].to_vec()),
        PregroupType::from_simples(s[at..].to_vec()),
    )
}

/// Contracts the last `k` axes of `a` with the first `k` axes of `b`.
pub fn contract_interface(a: &Tensor, b: &Tensor, k: usize) -> Tensor {
    let offset = a.rank() - k;
    let pairs: Vec<(usize, usize)> = (0..k).map(|m| (offset + m, m)).collect();
    Tensor::contract(a, b, &pairs)
}

pub const FD_STEP: f64 = 1e-5;

/// A random little lexicon over the shipped grammar shapes, with small dims.
pub fn gradient_world<R: Rng>(rng: &mut R) -> (Lexicon, Model) {
    let mut dims = BTreeMap::new();
    dims.insert(BasicType::new("n").unwrap(), rng.gen_range(1..=4));
    dims.insert(BasicType::new("p").unwrap(), rng.gen_range(1..=4));
    dims.insert(BasicType::new("s").unwrap(), 1);
    let shapes = ["n", "n.r s", "n.r s n.l", "n.r s p.l", "p n.l"];
    let mut entries: BTreeMap<String, Vec<PregroupType>> = BTreeMap::new();
    for (k, shape) in shapes.iter().enumerate() {
        for w in 0..rng.gen_range(2..=5) {
            entries.insert(format!("w{k}_{w}"), vec![shape.parse().unwrap()]);
        }
    }
    let lex = Lexicon::new(BasicType::new("s").unwrap(), dims, entries).unwrap();
    let model = Model::from_lexicon(&lex, DimMap::from_lexicon(&lex).unwrap(), |_, r, c| {
        (0..r * c).map(|_| rng.gen_range(-1.5..1.5)).collect()
    })
    .unwrap();
    (lex, model)
}

/// Intransitive, transitive and prepositional sentences with a random hole.
pub fn gradient_batch<R: Rng>(lex: &Lexicon, rng: &mut R, size: usize) -> Vec<MaskedExample> {
    let pick = |shape: &str, rng: &mut R| {
        lex.vocabulary(&shape.parse().unwrap())
            .choose(rng)
            .unwrap()
            .clone()
    };
    (0..size)
        .map(|_| {
            let words: Vec<String> = match rng.gen_range(0..3) {
                0 => vec![pick("n", rng), pick("n.r s", rng)],
                1 => vec![pick("n", rng), pick("n.r s n.l", rng), pick("n", rng)],
                _ => vec![
                    pick("n", rng),
                    pick("n.r s p.l", rng),
                    pick("p n.l", rng),
                    pick("n", rng),
                ],
            };
            let p = parse(&words, lex).unwrap().remove(0);
            let hole = rng.gen_range(0..words.len());
            make_hole(&p, hole).unwrap()
        })
        .collect()
}

pub fn finite_difference(
    model: &Model,
    batch: &[MaskedExample],
    cfg: &LossConfig,
    k: usize,
) -> f64 {
    let base = ParamVector::pack(model);
    let at = |delta: f64| {
        let mut p = base.clone();
        p.values[k] += delta;
        let mut m = model.clone();
        p.unpack_into(&mut m).unwrap();
        loss(&m, batch, cfg).unwrap()
    };
    (at(FD_STEP) - at(-FD_STEP)) / (2.0 * FD_STEP)
}

/// `|a − b| / max(|a|, |b|)`, with the denominator floored at 1e-8 so that
/// coordinates whose gradient vanishes compare absolutely.
pub fn relative_error(a: f64, b: f64) -> f64 {
    (a - b).abs() / a.abs().max(b.abs()).max(1e-8)
}

/// Worst relative error over `coords`, with the offending coordinate.
pub fn gradient_check(
    model: &Model,
    batch: &[MaskedExample],
    cfg: &LossConfig,
    coords: &[usize],
) -> (f64, usize) {
    let analytic = grad(model, batch, cfg).unwrap();
    coords
        .iter()
        .map(|&k| {
            (
                relative_error(analytic.values[k], finite_difference(model, batch, cfg, k)),
                k,
            )
        })
        .fold((0.0, 0), |acc, x| if x.0 > acc.0 { x } else { acc })
}
