//! Lexicon and corpus files shipped with the crate.

pub const LEXICON: &str = include_str!("../data/lexicon.toml");
pub const TRAIN: &str = include_str!("../data/train.txt");
pub const TEST: &str = include_str!("../data/test.txt");
