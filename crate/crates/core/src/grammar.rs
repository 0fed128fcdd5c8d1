//! Pregroup lexicons, planar cup-reduction parsing and hole diagrams.

use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::fmt;
use std::path::Path;
use std::str::FromStr;

use serde::Deserialize;

use crate::error::{Error, Result};
use crate::rigid::{BasicType, Diagram, PregroupType};

/// Maximum number of parses returned for one sentence.
pub const DEFAULT_PARSE_CAP: usize = 64;

/// Pairs `(i, j)`, `i < j`, over a flattened simple-type sequence, sorted by
/// right endpoint so that applying the cups in order always finds the two
/// wires adjacent (innermost cups first, then left to right).
pub type Matching = Vec<(usize, usize)>;

#[derive(Clone, Debug, PartialEq)]
pub struct Lexicon {
    sentence: BasicType,
    dims: BTreeMap<BasicType, usize>,
    entries: BTreeMap<String, Vec<PregroupType>>,
}

#[derive(Deserialize)]
struct LexiconFile {
    sentence: String,
    dims: BTreeMap<String, usize>,
    words: BTreeMap<String, Vec<String>>,
}

impl Lexicon {
    /// Builds a lexicon, checking that every entry only uses declared basic types.
    pub fn new(
        sentence: BasicType,
        dims: BTreeMap<BasicType, usize>,
        entries: BTreeMap<String, Vec<PregroupType>>,
    ) -> Result<Lexicon> {
        if !dims.contains_key(&sentence) {
            return Err(Error::Lexicon(format!(
                "sentence type `{sentence}` is not declared"
            )));
        }
        for (word, types) in &entries {
            if word.is_empty() || word.chars().any(char::is_whitespace) || word == "?" {
                return Err(Error::Lexicon(format!("invalid word {word:?}")));
            }
            if types.is_empty() {
                return Err(Error::Lexicon(format!("word `{word}` has no types")));
            }
            let mut seen = BTreeSet::new();
            for t in types {
                if !seen.insert(t) {
                    return Err(Error::Lexicon(format!(
                        "word `{word}` lists type `{t}` twice"
                    )));
                }
                for s in t.simples() {
                    if !dims.contains_key(&s.base) {
                        return Err(Error::UnknownBasicType(s.base.to_string()));
                    }
                }
            }
        }
        Ok(Lexicon {
            sentence,
            dims,
            entries,
        })
    }

    pub fn from_toml(text: &str) -> Result<Lexicon> {
        let file: LexiconFile = toml::from_str(text)?;
        let dims = file
            .dims
            .into_iter()
            .map(|(name, d)| Ok((BasicType::new(name)?, d)))
            .collect::<Result<BTreeMap<_, _>>>()?;
        let entries = file
            .words
            .into_iter()
            .map(|(word, types)| {
                let types = types
                    .iter()
                    .map(|t| t.parse())
                    .collect::<Result<Vec<PregroupType>>>()?;
                Ok((word, types))
            })
            .collect::<Result<BTreeMap<_, _>>>()?;
        Lexicon::new(BasicType::new(file.sentence)?, dims, entries)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Lexicon> {
        Lexicon::from_toml(&std::fs::read_to_string(path)?)
    }

    /// The lexicon shipped with the crate for the animal corpus.
    pub fn shipped() -> Lexicon {
        Lexicon::from_toml(crate::data::LEXICON).expect("shipped lexicon is valid")
    }

    pub fn sentence(&self) -> &BasicType {
        &self.sentence
    }

    pub fn sentence_type(&self) -> PregroupType {
        PregroupType::basic(&self.sentence)
    }

    /// Declared basic types with their default dimensions.
    pub fn dims(&self) -> &BTreeMap<BasicType, usize> {
        &self.dims
    }

    pub fn entries(&self, word: &str) -> Result<&[PregroupType]> {
        self.entries
            .get(word)
            .map(Vec::as_slice)
            .ok_or_else(|| Error::UnknownWord(word.to_string()))
    }

    pub fn words(&self) -> impl Iterator<Item = &str> {
        self.entries.keys().map(String::as_str)
    }

    /// Every type that occurs in some entry, in type order.
    pub fn types(&self) -> Vec<PregroupType> {
        self.entries
            .values()
            .flatten()
            .cloned()
            .collect::<BTreeSet<_>>()
            .into_iter()
            .collect()
    }

    /// `V_t`: the words having `t` among their entries, lexicographically.
    pub fn vocabulary(&self, t: &PregroupType) -> Vec<String> {
        self.entries
            .iter()
            .filter(|(_, types)| types.contains(t))
            .map(|(w, _)| w.clone())
            .collect()
    }
}

/// All planar matchings of `typeseq` whose cups are well-typed and whose
/// unmatched positions spell `target`.
pub fn reduce(typeseq: &PregroupType, target: &PregroupType) -> Vec<Matching> {
    reduce_capped(typeseq, target, usize::MAX)
}

pub fn reduce_capped(typeseq: &PregroupType, target: &PregroupType, cap: usize) -> Vec<Matching> {
    let mut reducer = Reducer {
        types: typeseq.simples(),
        target: target.simples(),
        cap,
        full: HashMap::new(),
        spell: HashMap::new(),
    };
    let mut out = reducer.spell(0, 0);
    for m in &mut out {
        m.sort_by_key(|&(i, j)| (j, i));
    }
    out.sort();
    out.dedup();
    out.truncate(cap);
    out
}

struct Reducer<'a> {
    types: &'a [crate::rigid::SimpleType],
    target: &'a [crate::rigid::SimpleType],
    cap: usize,
    full: HashMap<(usize, usize), Vec<Matching>>,
    spell: HashMap<(usize, usize), Vec<Matching>>,
}

impl Reducer<'_> {
    /// Complete reductions of `types[lo..hi]` to the unit.
    fn full(&mut self, lo: usize, hi: usize) -> Vec<Matching> {
        if lo == hi {
            return vec![Vec::new()];
        }
        if (hi - lo) % 2 == 1 {
            return Vec::new();
        }
        if let Some(cached) = self.full.get(&(lo, hi)) {
            return cached.clone();
        }
        let mut out = Vec::new();
        'outer: for k in (lo + 1..hi).step_by(2) {
            if !self.types[lo].cups_with(&self.types[k]) {
                continue;
            }
            let inner = self.full(lo + 1, k);
            if inner.is_empty() {
                continue;
            }
            let rest = self.full(k + 1, hi);
            for a in &inner {
                for b in &rest {
                    let mut m = Vec::with_capacity(1 + a.len() + b.len());
                    m.extend_from_slice(a);
                    m.push((lo, k));
                    m.extend_from_slice(b);
                    out.push(m);
                    if out.len() >= self.cap {
                        break 'outer;
                    }
                }
            }
        }
        self.full.insert((lo, hi), out.clone());
        out
    }

    /// Reductions of `types[pos..]` leaving exactly `target[idx..]` unmatched.
    /// Unmatched wires must sit outside every cup to reach the codomain.
    fn spell(&mut self, pos: usize, idx: usize) -> Vec<Matching> {
        let n = self.types.len();
        if idx == self.target.len() {
            return self.full(pos, n);
        }
        if let Some(cached) = self.spell.get(&(pos, idx)) {
            return cached.clone();
        }
        let mut out = Vec::new();
        'outer: for u in (pos..n).step_by(2) {
            if self.types[u] != self.target[idx] {
                continue;
            }
            let before = self.full(pos, u);
            if before.is_empty() {
                continue;
            }
            let after = self.spell(u + 1, idx + 1);
            for a in &before {
                for b in &after {
                    let mut m = a.clone();
                    m.extend_from_slice(b);
                    out.push(m);
                    if out.len() >= self.cap {
                        break 'outer;
                    }
                }
            }
        }
        self.spell.insert((pos, idx), out.clone());
        out
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Parse {
    pub words: Vec<String>,
    pub entry_choice: Vec<PregroupType>,
    pub matching: Matching,
    pub diagram: Diagram,
}

impl Parse {
    /// The concatenation of the chosen entry types.
    pub fn flat_type(&self) -> PregroupType {
        self.entry_choice
            .iter()
            .fold(PregroupType::unit(), |acc, t| acc.tensor(t))
    }
}

/// Triangles (or identities for holes) tensored left to right, then the cups
/// of `matching` in order.
fn sentence_diagram(
    slots: &[(Option<&str>, &PregroupType)],
    matching: &Matching,
) -> Result<Diagram> {
    let mut diagram = Diagram::identity(&PregroupType::unit());
    for (word, t) in slots {
        let piece = match word {
            Some(w) => Diagram::word(*w, t),
            None => Diagram::identity(t),
        };
        diagram = diagram.tensor(&piece);
    }
    // Track original positions of the wires still open.
    let mut alive: Vec<usize> = (0..diagram.cod.len()).collect();
    for &(i, j) in matching {
        let at = alive
            .iter()
            .position(|&p| p == i)
            .ok_or_else(|| Error::InvalidDiagram(format!("cup ({i}, {j}) reuses a wire")))?;
        if alive.get(at + 1) != Some(&j) {
            return Err(Error::InvalidDiagram(format!(
                "cup ({i}, {j}) is not planar at this point"
            )));
        }
        diagram = diagram.then_cup_at(at)?;
        alive.drain(at..at + 2);
    }
    Ok(diagram)
}

/// Enumerates entry choices (first word most significant, each in lexicon
/// order) times reductions to the sentence type, up to `cap` parses.
pub fn parse_capped<S: AsRef<str>>(
    words: &[S],
    lexicon: &Lexicon,
    cap: usize,
) -> Result<Vec<Parse>> {
    let options = words
        .iter()
        .map(|w| lexicon.entries(w.as_ref()))
        .collect::<Result<Vec<_>>>()?;
    let target = lexicon.sentence_type();
    let mut parses = Vec::new();
    let mut choice = vec![0usize; words.len()];
    loop {
        let types: Vec<&PregroupType> = choice.iter().zip(&options).map(|(&c, o)| &o[c]).collect();
        let flat = types
            .iter()
            .fold(PregroupType::unit(), |acc, t| acc.tensor(t));
        for matching in reduce_capped(&flat, &target, cap - parses.len()) {
            let slots: Vec<_> = words
                .iter()
                .zip(&types)
                .map(|(w, t)| (Some(w.as_ref()), *t))
                .collect();
            let diagram = sentence_diagram(&slots, &matching)?;
            parses.push(Parse {
                words: words.iter().map(|w| w.as_ref().to_string()).collect(),
                entry_choice: types.iter().map(|t| (*t).clone()).collect(),
                matching,
                diagram,
            });
        }
        if parses.len() >= cap {
            break;
        }
        // odometer, last word fastest
        let mut k = words.len();
        loop {
            if k == 0 {
                return Ok(parses);
            }
            k -= 1;
            choice[k] += 1;
            if choice[k] < options[k].len() {
                break;
            }
            choice[k] = 0;
        }
    }
    Ok(parses)
}

pub fn parse<S: AsRef<str>>(words: &[S], lexicon: &Lexicon) -> Result<Vec<Parse>> {
    parse_capped(words, lexicon, DEFAULT_PARSE_CAP)
}

/// A parsed sentence with one word replaced by the identity on its type.
#[derive(Clone, Debug, PartialEq)]
pub struct MaskedExample {
    pub words: Vec<String>,
    pub hole_index: usize,
    pub gold: String,
    pub hole_type: PregroupType,
    pub hole_diagram: Diagram,
}

impl MaskedExample {
    /// The sentence with `?` at the hole.
    pub fn masked_words(&self) -> Vec<&str> {
        self.words
            .iter()
            .enumerate()
            .map(|(i, w)| {
                if i == self.hole_index {
                    "?"
                } else {
                    w.as_str()
                }
            })
            .collect()
    }
}

pub fn make_hole(parse: &Parse, i: usize) -> Result<MaskedExample> {
    if i >= parse.words.len() {
        return Err(Error::IndexOutOfRange {
            index: i,
            len: parse.words.len(),
        });
    }
    let slots: Vec<_> = parse
        .words
        .iter()
        .zip(&parse.entry_choice)
        .enumerate()
        .map(|(k, (w, t))| ((k != i).then_some(w.as_str()), t))
        .collect();
    Ok(MaskedExample {
        words: parse.words.clone(),
        hole_index: i,
        gold: parse.words[i].clone(),
        hole_type: parse.entry_choice[i].clone(),
        hole_diagram: sentence_diagram(&slots, &parse.matching)?,
    })
}

/// A corpus line such as `cat ? fish (eats)`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct MaskedLine {
    pub tokens: Vec<String>,
    pub hole: usize,
    pub gold: String,
}

impl MaskedLine {
    pub fn completed(&self) -> Vec<&str> {
        self.tokens
            .iter()
            .enumerate()
            .map(|(i, t)| {
                if i == self.hole {
                    self.gold.as_str()
                } else {
                    t.as_str()
                }
            })
            .collect()
    }
}

impl FromStr for MaskedLine {
    type Err = ();

    fn from_str(line: &str) -> std::result::Result<Self, ()> {
        let line = line.trim();
        let open = line.rfind(" (").ok_or(())?;
        let gold = line[open + 2..].strip_suffix(')').ok_or(())?;
        if gold.is_empty() || gold.contains(|c: char| c.is_whitespace() || c == '(' || c == ')') {
            return Err(());
        }
        let tokens: Vec<String> = line[..open].split(' ').map(str::to_string).collect();
        if tokens
            .iter()
            .any(|t| t.is_empty() || t.contains(['(', ')']))
        {
            return Err(());
        }
        let mut holes = tokens.iter().enumerate().filter(|(_, t)| *t == "?");
        let hole = holes.next().ok_or(())?.0;
        if holes.next().is_some() {
            return Err(());
        }
        Ok(MaskedLine {
            tokens,
            hole,
            gold: gold.to_string(),
        })
    }
}

impl fmt::Display for MaskedLine {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} ({})", self.tokens.join(" "), self.gold)
    }
}

/// Fills the hole with the gold word, parses, and opens the hole again in
/// the first parse.
pub fn resolve_masked(line: &MaskedLine, lexicon: &Lexicon) -> Result<MaskedExample> {
    let words = line.completed();
    let parses = parse_capped(&words, lexicon, 1)?;
    let first = parses
        .first()
        .ok_or_else(|| Error::Unparsable(line.to_string()))?;
    make_hole(first, line.hole)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn ty(s: &str) -> PregroupType {
        s.parse().unwrap()
    }

    fn words(s: &str) -> Vec<&str> {
        s.split_whitespace().collect()
    }

    #[test]
    fn reduce_examples() {
        assert_eq!(reduce(&ty("n n.r s"), &ty("s")), vec![vec![(0, 1)]]);
        assert_eq!(
            reduce(&ty("s"), &ty("s")),
            vec![Vec::<(usize, usize)>::new()]
        );
        assert!(reduce(&ty("n n"), &ty("s")).is_empty());
        // nested cups come out innermost first
        assert_eq!(
            reduce(&ty("n n s.l.l s.l n.r"), &ty("n")),
            vec![vec![(2, 3), (1, 4)]]
        );
        assert_eq!(
            reduce(&ty("s.l n n.r s"), &ty("")),
            vec![vec![(1, 2), (0, 3)]]
        );
    }

    #[test]
    fn shipped_lexicon_vocabularies() {
        let lex = Lexicon::shipped();
        assert_eq!(lex.vocabulary(&ty("n")).len(), 14);
        assert_eq!(
            lex.vocabulary(&ty("n.r s n.l")),
            vec!["bites", "chases", "eats", "flees"]
        );
        assert_eq!(
            lex.vocabulary(&ty("p n.l")),
            vec!["after", "at", "in", "on"]
        );
        assert_eq!(lex.types().len(), 5);
    }

    #[test]
    fn parse_examples() {
        let lex = Lexicon::shipped();
        let p = parse(&words("cat meows"), &lex).unwrap();
        assert_eq!(p.len(), 1);
        assert_eq!(p[0].matching, vec![(0, 1)]);

        let p = parse(&words("cat eats fish"), &lex).unwrap();
        assert_eq!(p.len(), 1);
        assert_eq!(p[0].entry_choice[1], ty("n.r s n.l"));
        assert_eq!(p[0].matching, vec![(0, 1), (3, 4)]);
        assert_eq!(p[0].diagram.dom, PregroupType::unit());
        assert_eq!(p[0].diagram.cod, ty("s"));
        p[0].diagram.validate().unwrap();

        let p = parse(&words("seal swims in water"), &lex).unwrap();
        assert_eq!(p.len(), 1);
        assert_eq!(p[0].entry_choice[1], ty("n.r s p.l"));
        assert_eq!(p[0].entry_choice[2], ty("p n.l"));

        assert!(parse(&words("cat"), &lex).unwrap().is_empty());
        assert!(matches!(
            parse(&words("cat purrs"), &lex),
            Err(Error::UnknownWord(w)) if w == "purrs"
        ));
    }

    #[test]
    fn holes() {
        let lex = Lexicon::shipped();
        let p = &parse(&words("cat eats fish"), &lex).unwrap()[0];
        let ex = make_hole(p, 1).unwrap();
        assert_eq!(ex.hole_type, ty("n.r s n.l"));
        assert_eq!(ex.gold, "eats");
        assert_eq!(ex.hole_diagram.dom, ty("n.r s n.l"));
        assert_eq!(ex.hole_diagram.cod, ty("s"));
        ex.hole_diagram.validate().unwrap();
        assert!(matches!(
            make_hole(p, 3),
            Err(Error::IndexOutOfRange { index: 3, len: 3 })
        ));

        let p = &parse(&words("mouse squeaks"), &lex).unwrap()[0];
        assert_eq!(make_hole(p, 1).unwrap().hole_type, ty("n.r s"));

        let p = &parse(&words("cat chases after mouse"), &lex).unwrap()[0];
        let ex = make_hole(p, 2).unwrap();
        assert_eq!((ex.hole_type, ex.gold.as_str()), (ty("p n.l"), "after"));
    }

    #[test]
    fn masked_lines() {
        let lex = Lexicon::shipped();
        let line: MaskedLine = "? runs after mouse (cat)".parse().unwrap();
        assert_eq!(line.hole, 0);
        let ex = resolve_masked(&line, &lex).unwrap();
        assert_eq!(ex.hole_type, ty("n"));
        assert_eq!(ex.hole_diagram.dom, ty("n"));

        let ex = resolve_masked(&"whale eats ? (krill)".parse().unwrap(), &lex).unwrap();
        assert_eq!(ex.hole_type, ty("n"));
        assert_eq!(ex.masked_words(), vec!["whale", "eats", "?"]);

        assert!(matches!(
            resolve_masked(&"cat cat ? (dog)".parse().unwrap(), &lex),
            Err(Error::Unparsable(_))
        ));

        for bad in [
            "cat ? fish",
            "cat fish (eats)",
            "cat ? ? (eats)",
            "cat  ? (eats)",
            "? (a b)",
        ] {
            assert!(bad.parse::<MaskedLine>().is_err(), "{bad}");
        }
        let text = "dog chases ? fox (after)";
        assert_eq!(text.parse::<MaskedLine>().unwrap().to_string(), text);
    }

    #[test]
    fn lexicon_validation() {
        let bad = "sentence = \"s\"\n[dims]\ns = 1\n[words]\ncat = [\"n\"]\n";
        assert!(matches!(Lexicon::from_toml(bad), Err(Error::UnknownBasicType(b)) if b == "n"));
        let bad = "sentence = \"q\"\n[dims]\ns = 1\n[words]\n";
        assert!(Lexicon::from_toml(bad).is_err());
    }
}
