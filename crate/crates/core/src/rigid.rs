//! Free rigid monoidal category over a set of basic types.
//!
//! Objects are [`PregroupType`]s: sequences of basic types carrying an
//! adjoint index `z` (`z < 0` left adjoints, `z > 0` right adjoints).
//! Arrows are [`Diagram`]s kept in a one-box-per-layer normal form: every
//! layer is a generator whiskered by a left and a right context. Equality of
//! diagrams is structural; no interchange or snake rewriting is performed.
//!
//! The textual notation writes adjoints as repeated `.l` / `.r` suffixes and
//! separates simple types by spaces, so a transitive verb is `n.r s n.l`.
//! The monoidal unit is the empty string.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::error::{Error, Result};

#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct BasicType(String);

impl BasicType {
    pub fn new(name: impl Into<String>) -> Result<Self> {
        let name = name.into();
        if name.is_empty() || name.contains('.') || name.chars().any(char::is_whitespace) {
            return Err(Error::TypeSyntax {
                text: name,
                reason: "basic type names are non-empty and contain no dots or spaces".into(),
            });
        }
        Ok(BasicType(name))
    }

    pub fn name(&self) -> &str {
        &self.0
    }
}

impl fmt::Display for BasicType {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

/// A basic type with its winding number.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct SimpleType {
    pub base: BasicType,
    pub z: i32,
}

impl SimpleType {
    pub fn new(base: BasicType, z: i32) -> Self {
        SimpleType { base, z }
    }

    /// Whether `self` followed by `other` can be cancelled by a cup.
    pub fn cups_with(&self, other: &SimpleType) -> bool {
        self.base == other.base && other.z == self.z + 1
    }
}

impl fmt::Display for SimpleType {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.base.name())?;
        let mark = if self.z < 0 { ".l" } else { ".r" };
        for _ in 0..self.z.unsigned_abs() {
            f.write_str(mark)?;
        }
        Ok(())
    }
}

impl FromStr for SimpleType {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let mut parts = s.split('.');
        let base = BasicType::new(parts.next().unwrap_or_default())?;
        let mut z = 0i32;
        for mark in parts {
            let step = match mark {
                "l" => -1,
                "r" => 1,
                _ => {
                    return Err(Error::TypeSyntax {
                        text: s.into(),
                        reason: format!("unknown adjoint mark `.{mark}`"),
                    })
                }
            };
            if z != 0 && z.signum() != step {
                return Err(Error::TypeSyntax {
                    text: s.into(),
                    reason: "cannot mix left and right adjoint marks".into(),
                });
            }
            z += step;
        }
        Ok(SimpleType { base, z })
    }
}

/// An object of the free rigid category. The empty sequence is the unit.
#[derive(Clone, Debug, Default, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct PregroupType(Vec<SimpleType>);

impl PregroupType {
    pub fn unit() -> Self {
        PregroupType(Vec::new())
    }

    pub fn from_simples(simples: Vec<SimpleType>) -> Self {
        PregroupType(simples)
    }

    /// The plain basic type `x` with `z = 0`.
    pub fn basic(base: &BasicType) -> Self {
        PregroupType(vec![SimpleType::new(base.clone(), 0)])
    }

    pub fn simples(&self) -> &[SimpleType] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_unit(&self) -> bool {
        self.0.is_empty()
    }

    pub fn is_empty(&self) -> bool {
        self.is_unit()
    }

    pub fn tensor(&self, other: &PregroupType) -> PregroupType {
        let mut simples = self.0.clone();
        simples.extend_from_slice(&other.0);
        PregroupType(simples)
    }

    fn shifted_reverse(&self, dz: i32) -> PregroupType {
        PregroupType(
            self.0
                .iter()
                .rev()
                .map(|s| SimpleType::new(s.base.clone(), s.z + dz))
                .collect(),
        )
    }

    pub fn left_adjoint(&self) -> PregroupType {
        self.shifted_reverse(-1)
    }

    pub fn right_adjoint(&self) -> PregroupType {
        self.shifted_reverse(1)
    }

    fn slice(&self, range: std::ops::Range<usize>) -> PregroupType {
        PregroupType(self.0[range].to_vec())
    }
}

pub fn left_adjoint(t: &PregroupType) -> PregroupType {
    t.left_adjoint()
}

pub fn right_adjoint(t: &PregroupType) -> PregroupType {
    t.right_adjoint()
}

impl fmt::Display for PregroupType {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (i, s) in self.0.iter().enumerate() {
            if i > 0 {
                f.write_str(" ")?;
            }
            write!(f, "{s}")?;
        }
        Ok(())
    }
}

impl FromStr for PregroupType {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        s.split_whitespace()
            .map(SimpleType::from_str)
            .collect::<Result<Vec<_>>>()
            .map(PregroupType)
    }
}

impl From<SimpleType> for PregroupType {
    fn from(s: SimpleType) -> Self {
        PregroupType(vec![s])
    }
}

impl Serialize for PregroupType {
    fn serialize<S: Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        serializer.collect_str(self)
    }
}

impl<'de> Deserialize<'de> for PregroupType {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> std::result::Result<Self, D::Error> {
        let text = String::deserialize(deserializer)?;
        text.parse().map_err(serde::de::Error::custom)
    }
}

impl Serialize for BasicType {
    fn serialize<S: Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        serializer.serialize_str(&self.0)
    }
}

impl<'de> Deserialize<'de> for BasicType {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> std::result::Result<Self, D::Error> {
        let text = String::deserialize(deserializer)?;
        BasicType::new(text).map_err(serde::de::Error::custom)
    }
}

/// The generating boxes: word triangles, cups and caps.
#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Generator {
    Word { word: String, cod: PregroupType },
    Cup { base: BasicType, z: i32 },
    Cap { base: BasicType, z: i32 },
}

impl Generator {
    fn pair(base: &BasicType, z: i32) -> PregroupType {
        PregroupType(vec![
            SimpleType::new(base.clone(), z),
            SimpleType::new(base.clone(), z + 1),
        ])
    }

    pub fn dom(&self) -> PregroupType {
        match self {
            Generator::Word { .. } | Generator::Cap { .. } => PregroupType::unit(),
            Generator::Cup { base, z } => Self::pair(base, *z),
        }
    }

    /// A cap is the unit of the adjunction `(x, z) ⊣ (x, z + 1)`, so its
    /// codomain is `(x, z + 1)(x, z)`; that is the orientation in which both
    /// snakes can be closed off by a cup.
    pub fn cod(&self) -> PregroupType {
        match self {
            Generator::Word { cod, .. } => cod.clone(),
            Generator::Cup { .. } => PregroupType::unit(),
            Generator::Cap { base, z } => PregroupType(vec![
                SimpleType::new(base.clone(), z + 1),
                SimpleType::new(base.clone(), *z),
            ]),
        }
    }
}

/// One box whiskered by the wires to its left and right.
#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Layer {
    pub left: PregroupType,
    #[serde(rename = "box")]
    pub generator: Generator,
    pub right: PregroupType,
}

impl Layer {
    pub fn dom(&self) -> PregroupType {
        self.left.tensor(&self.generator.dom()).tensor(&self.right)
    }

    pub fn cod(&self) -> PregroupType {
        self.left.tensor(&self.generator.cod()).tensor(&self.right)
    }
}

/// A progressive planar string diagram, one box per layer.
#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Diagram {
    pub dom: PregroupType,
    pub cod: PregroupType,
    pub layers: Vec<Layer>,
}

impl Diagram {
    pub fn identity(t: &PregroupType) -> Diagram {
        Diagram {
            dom: t.clone(),
            cod: t.clone(),
            layers: Vec::new(),
        }
    }

    fn single(generator: Generator) -> Diagram {
        Diagram {
            dom: generator.dom(),
            cod: generator.cod(),
            layers: vec![Layer {
                left: PregroupType::unit(),
                generator,
                right: PregroupType::unit(),
            }],
        }
    }

    pub fn word(word: impl Into<String>, t: &PregroupType) -> Diagram {
        Diagram::single(Generator::Word {
            word: word.into(),
            cod: t.clone(),
        })
    }

    pub fn cup(base: &BasicType, z: i32) -> Diagram {
        Diagram::single(Generator::Cup {
            base: base.clone(),
            z,
        })
    }

    pub fn cap(base: &BasicType, z: i32) -> Diagram {
        Diagram::single(Generator::Cap {
            base: base.clone(),
            z,
        })
    }

    /// Sequential composition `self ; other`.
    pub fn compose(&self, other: &Diagram) -> Result<Diagram> {
        if self.cod != other.dom {
            return Err(Error::InterfaceMismatch {
                left: self.cod.clone(),
                right: other.dom.clone(),
            });
        }
        let mut layers = self.layers.clone();
        layers.extend_from_slice(&other.layers);
        Ok(Diagram {
            dom: self.dom.clone(),
            cod: other.cod.clone(),
            layers,
        })
    }

    /// Monoidal product. `self`'s layers come first, whiskered on the right by
    /// `other.dom`; then `other`'s layers, whiskered on the left by `self.cod`.
    pub fn tensor(&self, other: &Diagram) -> Diagram {
        let first = self.layers.iter().map(|l| Layer {
            left: l.left.clone(),
            generator: l.generator.clone(),
            right: l.right.tensor(&other.dom),
        });
        let second = other.layers.iter().map(|l| Layer {
            left: self.cod.tensor(&l.left),
            generator: l.generator.clone(),
            right: l.right.clone(),
        });
        Diagram {
            dom: self.dom.tensor(&other.dom),
            cod: self.cod.tensor(&other.cod),
            layers: first.chain(second).collect(),
        }
    }

    /// Whisker on both sides: `left ⊗ self ⊗ right`.
    pub fn whisker(&self, left: &PregroupType, right: &PregroupType) -> Diagram {
        Diagram::identity(left)
            .tensor(self)
            .tensor(&Diagram::identity(right))
    }

    /// Checks that each layer's domain is the running codomain before it.
    pub fn validate(&self) -> Result<()> {
        let mut running = self.dom.clone();
        for (i, layer) in self.layers.iter().enumerate() {
            let dom = layer.dom();
            if dom != running {
                return Err(Error::InvalidDiagram(format!(
                    "layer {i} expects `{dom}` but receives `{running}`"
                )));
            }
            running = layer.cod();
        }
        if running != self.cod {
            return Err(Error::InvalidDiagram(format!(
                "layers end at `{running}` but codomain is `{}`",
                self.cod
            )));
        }
        Ok(())
    }

    /// Applies one cup to the adjacent positions `i, i + 1` of the codomain.
    pub fn then_cup_at(&self, i: usize) -> Result<Diagram> {
        let simples = self.cod.simples();
        if i + 1 >= simples.len() || !simples[i].cups_with(&simples[i + 1]) {
            return Err(Error::InvalidDiagram(format!(
                "no cup at position {i} of `{}`",
                self.cod
            )));
        }
        let cup = Diagram::cup(&simples[i].base, simples[i].z)
            .whisker(&self.cod.slice(0..i), &self.cod.slice(i + 2..simples.len()));
        self.compose(&cup)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn ty(s: &str) -> PregroupType {
        s.parse().unwrap()
    }

    fn n() -> BasicType {
        BasicType::new("n").unwrap()
    }

    #[test]
    fn adjoint_examples() {
        assert_eq!(ty("n").left_adjoint(), ty("n.l"));
        assert_eq!(ty("n").right_adjoint(), ty("n.r"));
        assert_eq!(PregroupType::unit().left_adjoint(), PregroupType::unit());
        assert_eq!(PregroupType::unit().right_adjoint(), PregroupType::unit());
        assert_eq!(ty("n.r s").left_adjoint(), ty("s.l n"));
        let t = ty("n s n.l");
        assert_eq!(t.left_adjoint().right_adjoint(), t);
    }

    #[test]
    fn notation_round_trip() {
        for text in ["n.r s n.l", "x.l.l y.r.r.r", "", "s"] {
            assert_eq!(ty(text).to_string(), text);
        }
        assert_eq!(ty("n.l.l").simples()[0].z, -2);
        assert!("n.l.r".parse::<PregroupType>().is_err());
        assert!("n.x".parse::<PregroupType>().is_err());
        assert!(".l".parse::<PregroupType>().is_err());
    }

    #[test]
    fn identity_and_units() {
        let cat = Diagram::word("cat", &ty("n"));
        assert_eq!(cat.compose(&Diagram::identity(&ty("n"))).unwrap(), cat);
        assert_eq!(Diagram::identity(&ty("")).compose(&cat).unwrap(), cat);
        let id = Diagram::identity(&ty("n.r s"));
        assert_eq!(id.dom, ty("n.r s"));
        assert_eq!(id.cod, ty("n.r s"));
        assert!(id.layers.is_empty());
    }

    #[test]
    fn compose_mismatch_reports_both_types() {
        let cat = Diagram::word("cat", &ty("n"));
        let dog = Diagram::word("dog", &ty("n"));
        match cat.compose(&dog) {
            Err(Error::InterfaceMismatch { left, right }) => {
                assert_eq!(left, ty("n"));
                assert_eq!(right, PregroupType::unit());
            }
            other => panic!("expected mismatch, got {other:?}"),
        }
    }

    #[test]
    fn tensor_examples() {
        let id = Diagram::identity(&ty("n")).tensor(&Diagram::identity(&ty("s")));
        assert_eq!(id, Diagram::identity(&ty("n s")));
        let d = Diagram::word("cat", &ty("n"));
        assert_eq!(d.tensor(&Diagram::identity(&PregroupType::unit())), d);
        let two = d.tensor(&Diagram::word("fish", &ty("n")));
        assert_eq!(two.cod, ty("n n"));
        assert_eq!(two.layers[1].left, ty("n"));
        two.validate().unwrap();
    }

    #[test]
    fn cup_and_cap_shapes() {
        let c = Diagram::cup(&n(), 0);
        assert_eq!((c.dom.clone(), c.cod.clone()), (ty("n n.r"), ty("")));
        let c = Diagram::cup(&n(), -1);
        assert_eq!(c.dom, ty("n.l n"));
        let c = Diagram::cap(&n(), 0);
        assert_eq!((c.dom.clone(), c.cod.clone()), (ty(""), ty("n.r n")));
    }

    #[test]
    fn word_boxes() {
        let eats = Diagram::word("eats", &ty("n.r s n.l"));
        assert_eq!(eats.dom, PregroupType::unit());
        assert_eq!(
            eats.cod.simples().iter().map(|s| s.z).collect::<Vec<_>>(),
            vec![1, 0, -1]
        );
        let empty = Diagram::word("", &PregroupType::unit());
        assert!(empty.dom.is_unit() && empty.cod.is_unit());
    }

    #[test]
    fn snake_interfaces() {
        // n -> n n.r n -> n
        let snake = Diagram::identity(&ty("n"))
            .tensor(&Diagram::cap(&n(), 0))
            .then_cup_at(0)
            .unwrap();
        assert_eq!((snake.dom.clone(), snake.cod.clone()), (ty("n"), ty("n")));
        snake.validate().unwrap();
        // n.r -> n.r n n.r -> n.r
        let snake = Diagram::cap(&n(), 0)
            .tensor(&Diagram::identity(&ty("n.r")))
            .then_cup_at(1)
            .unwrap();
        assert_eq!(
            (snake.dom.clone(), snake.cod.clone()),
            (ty("n.r"), ty("n.r"))
        );
        snake.validate().unwrap();
        // no cup between n.r and n
        assert!(Diagram::cap(&n(), 0).then_cup_at(0).is_err());
    }

    #[test]
    fn validate_rejects_broken_chain() {
        let mut d = Diagram::word("cat", &ty("n"));
        d.cod = ty("s");
        assert!(d.validate().is_err());
    }

    #[test]
    fn diagram_json_round_trip() {
        let d = Diagram::word("cat", &ty("n"))
            .tensor(&Diagram::word("meows", &ty("n.r s")))
            .then_cup_at(0)
            .unwrap();
        let text = serde_json::to_string_pretty(&d).unwrap();
        let back: Diagram = serde_json::from_str(&text).unwrap();
        assert_eq!(back, d);
        assert_eq!(serde_json::to_string_pretty(&back).unwrap(), text);
    }
}
