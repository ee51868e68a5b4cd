//! Tokenization and feature hashing for short social-media texts.
//!
//! Features are unigram and (optionally) bigram counts hashed into a fixed
//! number of buckets with 64-bit FNV-1a, then L2-normalized. A bigram `(a, b)`
//! hashes the bytes of `a`, a single `0x1f` separator byte, then the bytes of
//! `b`, so it never collides by construction with the unigram `"a b"`.
//! Hashing is unsigned.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub const DEFAULT_DIM: usize = 1 << 18;

const FNV_OFFSET: u64 = 0xcbf2_9ce4_8422_2325;
const FNV_PRIME: u64 = 0x0000_0100_0000_01b3;
const BIGRAM_SEPARATOR: u8 = 0x1f;

/// Sparse feature vector with entries sorted by index.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SparseVector {
    dim: usize,
    entries: Vec<(u32, f64)>,
}

impl SparseVector {
    pub fn zeros(dim: usize) -> Self {
        Self {
            dim,
            entries: Vec::new(),
        }
    }

    /// Build from `(index, weight)` pairs. Duplicate indices are summed and
    /// zero weights dropped.
    pub fn from_pairs(dim: usize, pairs: impl IntoIterator<Item = (u32, f64)>) -> Result<Self> {
        let mut acc: BTreeMap<u32, f64> = BTreeMap::new();
        for (i, w) in pairs {
            if i as usize >= dim {
                return Err(Error::DimensionMismatch {
                    expected: dim,
                    got: i as usize + 1,
                });
            }
            if !w.is_finite() {
                return Err(Error::NonFinite("sparse vector entry"));
            }
            *acc.entry(i).or_default() += w;
        }
        Ok(Self {
            dim,
            entries: acc.into_iter().filter(|&(_, w)| w != 0.0).collect(),
        })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn entries(&self) -> &[(u32, f64)] {
        &self.entries
    }

    pub fn nnz(&self) -> usize {
        self.entries.len()
    }

    pub fn norm(&self) -> f64 {
        self.entries.iter().map(|(_, w)| w * w).sum::<f64>().sqrt()
    }

    pub fn normalized(mut self) -> Self {
        let norm = self.norm();
        if norm > 0.0 {
            for (_, w) in &mut self.entries {
                *w /= norm;
            }
        }
        self
    }
}

/// Lowercased word tokens. Runs of letters and digits form words (an
/// apostrophe between two word characters stays inside the word), every other
/// non-space character is its own token, and `<name>` placeholders such as
/// `<url>` or `<user>` survive as a single token.
pub fn tokenize(text: &str) -> Vec<String> {
    let chars: Vec<char> = text.chars().collect();
    let mut tokens = Vec::new();
    let mut word = String::new();
    let flush = |word: &mut String, tokens: &mut Vec<String>| {
        if !word.is_empty() {
            tokens.push(std::mem::take(word));
        }
    };
    let mut i = 0;
    while i < chars.len() {
        let c = chars[i];
        if c == '<' {
            if let Some(len) = placeholder_len(&chars[i..]) {
                flush(&mut word, &mut tokens);
                let tok: String = chars[i..i + len].iter().collect();
                tokens.push(tok.to_lowercase());
                i += len;
                continue;
            }
        }
        if c.is_alphanumeric() || c == '_' {
            word.extend(c.to_lowercase());
        } else if c == '\'' && !word.is_empty() && chars.get(i + 1).is_some_and(|n| n.is_alphanumeric()) {
            word.push(c);
        } else {
            flush(&mut word, &mut tokens);
            if !c.is_whitespace() {
                tokens.push(c.to_lowercase().collect());
            }
        }
        i += 1;
    }
    flush(&mut word, &mut tokens);
    tokens
}

fn placeholder_len(chars: &[char]) -> Option<usize> {
    let close = chars.iter().take(32).position(|&c| c == '>')?;
    let inner = &chars[1..close];
    (!inner.is_empty() && inner.iter().all(|c| c.is_ascii_alphabetic() || *c == '_'))
        .then_some(close + 1)
}

fn fnv1a(state: u64, bytes: &[u8]) -> u64 {
    bytes
        .iter()
        .fold(state, |h, &b| (h ^ u64::from(b)).wrapping_mul(FNV_PRIME))
}

/// Feature hashing configuration.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct FeatureHasher {
    pub dim: usize,
    /// 1 for unigrams only, 2 for unigrams plus bigrams.
    pub ngram_order: usize,
}

impl Default for FeatureHasher {
    fn default() -> Self {
        Self {
            dim: DEFAULT_DIM,
            ngram_order: 2,
        }
    }
}

impl FeatureHasher {
    pub fn new(dim: usize, ngram_order: usize) -> Result<Self> {
        if dim < 2 || dim > u32::MAX as usize {
            return Err(Error::Config(format!("feature dimension {dim} out of range")));
        }
        if !(1..=2).contains(&ngram_order) {
            return Err(Error::Config(format!(
                "n-gram order must be 1 or 2, got {ngram_order}"
            )));
        }
        Ok(Self { dim, ngram_order })
    }

    pub fn unigram_bucket(&self, token: &str) -> u32 {
        (fnv1a(FNV_OFFSET, token.as_bytes()) % self.dim as u64) as u32
    }

    pub fn bigram_bucket(&self, first: &str, second: &str) -> u32 {
        let h = fnv1a(FNV_OFFSET, first.as_bytes());
        let h = fnv1a(h, &[BIGRAM_SEPARATOR]);
        (fnv1a(h, second.as_bytes()) % self.dim as u64) as u32
    }

    /// Raw hashed n-gram counts before normalization.
    pub fn counts<S: AsRef<str>>(&self, tokens: &[S]) -> SparseVector {
        let unigrams = tokens.iter().map(|t| (self.unigram_bucket(t.as_ref()), 1.0));
        let bigrams = (self.ngram_order >= 2)
            .then(|| {
                tokens
                    .windows(2)
                    .map(|w| (self.bigram_bucket(w[0].as_ref(), w[1].as_ref()), 1.0))
            })
            .into_iter()
            .flatten();
        SparseVector::from_pairs(self.dim, unigrams.chain(bigrams))
            .expect("hashed buckets are always in range")
    }

    pub fn featurize<S: AsRef<str>>(&self, tokens: &[S]) -> SparseVector {
        self.counts(tokens).normalized()
    }

    pub fn featurize_text(&self, text: &str) -> SparseVector {
        self.featurize(&tokenize(text))
    }
}

/// Hash `tokens` into `dim` buckets with unigrams and bigrams.
pub fn featurize<S: AsRef<str>>(tokens: &[S], dim: usize) -> Result<SparseVector> {
    Ok(FeatureHasher::new(dim, 2)?.featurize(tokens))
}
