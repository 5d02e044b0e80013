//! Anonymised token n-gram features.
//!
//! A program is viewed as its token sequence with every identifier replaced
//! by `ID`. The vocabulary is the set of contiguous n-grams seen in a set of
//! seed programs, in first-occurrence order, and a program is encoded as the
//! presence bit of each vocabulary gram.

use std::collections::HashMap;
use std::fmt::Write as _;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::minilang::{program_tokens, Program, Token, TokenKind};

pub const ANONYMOUS_IDENT: &str = "ID";
pub const DEFAULT_NGRAM: usize = 3;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum FeatureError {
    #[error("no program has at least {n} tokens")]
    EmptyVocab { n: usize },
    #[error("n-gram length must be at least 1")]
    ZeroGramLength,
    #[error("no programs given")]
    NoPrograms,
    #[error("vocabulary line {line}: expected {expected} tab-separated tokens, found {found}")]
    BadVocabLine {
        line: usize,
        expected: usize,
        found: usize,
    },
}

pub fn anonymize(tokens: &[Token]) -> Vec<Token> {
    tokens
        .iter()
        .map(|t| {
            if t.kind == TokenKind::Ident {
                Token::new(TokenKind::Ident, ANONYMOUS_IDENT, t.position)
            } else {
                t.clone()
            }
        })
        .collect()
}

/// Anonymised token texts of a program.
pub fn token_texts(program: &Program) -> Vec<String> {
    anonymize(&program_tokens(program))
        .into_iter()
        .map(|t| t.text)
        .collect()
}

pub type Gram = Vec<String>;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(from = "VocabRepr", into = "VocabRepr")]
pub struct FeatureVocab {
    n: usize,
    grams: Vec<Gram>,
    index: HashMap<Gram, usize>,
}

#[derive(Serialize, Deserialize)]
struct VocabRepr {
    n: usize,
    grams: Vec<Gram>,
}

impl From<VocabRepr> for FeatureVocab {
    fn from(r: VocabRepr) -> Self {
        let index = r
            .grams
            .iter()
            .enumerate()
            .map(|(i, g)| (g.clone(), i))
            .collect();
        FeatureVocab {
            n: r.n,
            grams: r.grams,
            index,
        }
    }
}

impl From<FeatureVocab> for VocabRepr {
    fn from(v: FeatureVocab) -> Self {
        VocabRepr {
            n: v.n,
            grams: v.grams,
        }
    }
}

impl FeatureVocab {
    /// Builds the vocabulary from already-anonymised token sequences.
    pub fn from_sequences<S: AsRef<[String]>>(
        sequences: &[S],
        n: usize,
    ) -> Result<Self, FeatureError> {
        if n == 0 {
            return Err(FeatureError::ZeroGramLength);
        }
        if sequences.is_empty() {
            return Err(FeatureError::NoPrograms);
        }
        let mut grams = Vec::new();
        let mut index = HashMap::new();
        for seq in sequences {
            for w in seq.as_ref().windows(n) {
                if !index.contains_key(w) {
                    index.insert(w.to_vec(), grams.len());
                    grams.push(w.to_vec());
                }
            }
        }
        if grams.is_empty() {
            return Err(FeatureError::EmptyVocab { n });
        }
        Ok(FeatureVocab { n, grams, index })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn len(&self) -> usize {
        self.grams.len()
    }

    pub fn is_empty(&self) -> bool {
        self.grams.is_empty()
    }

    pub fn grams(&self) -> &[Gram] {
        &self.grams
    }

    pub fn position(&self, gram: &[String]) -> Option<usize> {
        self.index.get(gram).copied()
    }

    /// Presence encoding of a token sequence; grams outside the vocabulary
    /// are ignored.
    pub fn encode_sequence(&self, tokens: &[String]) -> FeatureVector {
        let mut bits = vec![false; self.grams.len()];
        for w in tokens.windows(self.n) {
            if let Some(&i) = self.index.get(w) {
                bits[i] = true;
            }
        }
        FeatureVector { bits }
    }

    /// One gram per line, token texts separated by tabs.
    pub fn to_text(&self) -> String {
        let mut out = String::new();
        for g in &self.grams {
            let _ = writeln!(out, "{}", g.join("\t"));
        }
        out
    }

    pub fn from_text(text: &str) -> Result<Self, FeatureError> {
        let mut seqs: Vec<Gram> = Vec::new();
        let mut n = None;
        for (i, line) in text.lines().enumerate() {
            if line.is_empty() {
                continue;
            }
            let gram: Gram = line.split('\t').map(str::to_string).collect();
            let expected = *n.get_or_insert(gram.len());
            if gram.len() != expected {
                return Err(FeatureError::BadVocabLine {
                    line: i + 1,
                    expected,
                    found: gram.len(),
                });
            }
            seqs.push(gram);
        }
        let n = n.ok_or(FeatureError::EmptyVocab { n: 0 })?;
        Self::from_sequences(&seqs, n)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct FeatureVector {
    pub bits: Vec<bool>,
}

impl FeatureVector {
    pub fn len(&self) -> usize {
        self.bits.len()
    }

    pub fn is_empty(&self) -> bool {
        self.bits.is_empty()
    }

    /// Indices of the set bits, ascending.
    pub fn active(&self) -> Vec<u32> {
        self.bits
            .iter()
            .enumerate()
            .filter(|(_, &b)| b)
            .map(|(i, _)| i as u32)
            .collect()
    }

    pub fn hamming(&self, other: &FeatureVector) -> usize {
        self.bits
            .iter()
            .zip(&other.bits)
            .filter(|(a, b)| a != b)
            .count()
    }
}

impl From<Vec<bool>> for FeatureVector {
    fn from(bits: Vec<bool>) -> Self {
        FeatureVector { bits }
    }
}

pub fn build_vocab(programs: &[Program], n: usize) -> Result<FeatureVocab, FeatureError> {
    let seqs: Vec<Vec<String>> = programs.iter().map(token_texts).collect();
    FeatureVocab::from_sequences(&seqs, n)
}

pub fn encode(program: &Program, vocab: &FeatureVocab) -> FeatureVector {
    vocab.encode_sequence(&token_texts(program))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::minilang::{parse, tokenize, Position};

    fn chars(s: &str) -> Vec<String> {
        s.chars().map(|c| c.to_string()).collect()
    }

    #[test]
    fn anonymize_replaces_identifiers_only() {
        let toks = tokenize("ans = x").unwrap();
        let anon = anonymize(&toks);
        let texts: Vec<_> = anon.iter().map(|t| (t.kind, t.text.as_str())).collect();
        assert_eq!(
            texts,
            [
                (TokenKind::Ident, "ID"),
                (TokenKind::Operator, "="),
                (TokenKind::Ident, "ID")
            ]
        );
        assert!(anonymize(&[]).is_empty());
        let lit = [Token::new(TokenKind::IntLiteral, "7", Position::default())];
        assert_eq!(anonymize(&lit), lit);
    }

    #[test]
    fn vocab_of_abcd() {
        let v = FeatureVocab::from_sequences(&[chars("abcd")], 3).unwrap();
        assert_eq!(v.grams(), &[chars("abc"), chars("bcd")]);
    }

    #[test]
    fn worked_example_vector() {
        let v = FeatureVocab::from_sequences(&[chars("abc"), chars("bcd"), chars("cde")], 3)
            .unwrap();
        assert_eq!(v.grams(), &[chars("abc"), chars("bcd"), chars("cde")]);
        assert_eq!(
            v.encode_sequence(&chars("abcd")).bits,
            vec![true, true, false]
        );
        assert_eq!(v.encode_sequence(&chars("xyz")).bits, vec![false; 3]);
    }

    #[test]
    fn duplicate_programs_do_not_grow_vocab() {
        let one = FeatureVocab::from_sequences(&[chars("abcde")], 3).unwrap();
        let two = FeatureVocab::from_sequences(&[chars("abcde"), chars("abcde")], 3).unwrap();
        assert_eq!(one, two);
    }

    #[test]
    fn short_programs_give_empty_vocab() {
        assert_eq!(
            FeatureVocab::from_sequences(&[chars("ab"), chars("cd")], 3),
            Err(FeatureError::EmptyVocab { n: 3 })
        );
        assert_eq!(
            FeatureVocab::from_sequences(&[chars("ab")], 0),
            Err(FeatureError::ZeroGramLength)
        );
    }

    #[test]
    fn renamed_programs_encode_identically() {
        let a = parse("read(n); int ans = n * n; print(ans);").unwrap();
        let b = parse("read(q); int r = q * q; print(r);").unwrap();
        assert_eq!(token_texts(&a), token_texts(&b));
        let v = build_vocab(&[a.clone()], 3).unwrap();
        assert_eq!(encode(&a, &v), encode(&b, &v));
        assert!(encode(&a, &v).bits.iter().all(|&b| b));
    }

    #[test]
    fn literals_are_kept() {
        let a = parse("read(n); print(n + 1);").unwrap();
        let b = parse("read(n); print(n + 2);").unwrap();
        assert_ne!(token_texts(&a), token_texts(&b));
    }

    #[test]
    fn vocab_text_round_trip() {
        let p = parse(r#"read(n); if (n > 1) print("a b"); else print("x\ty");"#).unwrap();
        let v = build_vocab(&[p], 3).unwrap();
        let text = v.to_text();
        assert_eq!(FeatureVocab::from_text(&text).unwrap(), v);
        assert!(text.lines().all(|l| l.split('\t').count() == 3));
    }
}
