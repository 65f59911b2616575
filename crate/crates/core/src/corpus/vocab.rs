use std::collections::HashMap;

use sha2::{Digest, Sha256};

use crate::error::{Error, Result};

use super::sample::{Corpus, Split};
use super::tokenize::tokenize;
use super::window::WindowedView;

pub const PAD: usize = 0;
pub const UNK: usize = 1;

/// Token → index map with reserved padding (0) and unknown (1) slots.
#[derive(Clone, Debug, PartialEq)]
pub struct Vocabulary {
    tokens: Vec<String>,
    index: HashMap<String, usize>,
    min_freq: usize,
    dim: usize,
}

impl Vocabulary {
    /// Total size including the two reserved slots.
    pub fn len(&self) -> usize {
        self.tokens.len() + 2
    }

    pub fn is_empty(&self) -> bool {
        self.tokens.is_empty()
    }

    pub fn min_freq(&self) -> usize {
        self.min_freq
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    /// Learned tokens in index order, starting at index 2.
    pub fn tokens(&self) -> &[String] {
        &self.tokens
    }

    pub fn contains(&self, token: &str) -> bool {
        self.index.contains_key(token)
    }

    pub fn lookup(&self, token: &str) -> usize {
        self.index.get(token).copied().unwrap_or(UNK)
    }

    /// Hex SHA-256 over the ordered token list and settings.
    pub fn hash(&self) -> String {
        let mut h = Sha256::new();
        h.update(format!("min_freq={};dim={}\n", self.min_freq, self.dim));
        for t in &self.tokens {
            h.update(t.as_bytes());
            h.update(b"\n");
        }
        h.finalize().iter().map(|b| format!("{b:02x}")).collect()
    }
}

/// Builds a vocabulary from the train split only, keeping tokens seen at
/// least `min_freq` times, ordered by descending count then lexicographically.
pub fn build_vocab(corpus: &Corpus, min_freq: usize, dim: usize) -> Result<Vocabulary> {
    if min_freq == 0 {
        return Err(Error::Parameter("min_freq must be ≥ 1".into()));
    }
    if dim == 0 {
        return Err(Error::Parameter("embedding dimension must be ≥ 1".into()));
    }
    let mut counts: HashMap<String, usize> = HashMap::new();
    let mut any = false;
    for sample in corpus.split(Split::Train) {
        any = true;
        for doc in &sample.documents {
            for tok in tokenize(&doc.text) {
                *counts.entry(tok).or_default() += 1;
            }
        }
    }
    if !any {
        return Err(Error::Corpus("cannot build a vocabulary from an empty train split".into()));
    }
    let mut kept: Vec<(String, usize)> = counts.into_iter().filter(|(_, c)| *c >= min_freq).collect();
    kept.sort_by(|a, b| b.1.cmp(&a.1).then_with(|| a.0.cmp(&b.0)));
    let tokens: Vec<String> = kept.into_iter().map(|(t, _)| t).collect();
    let index = tokens.iter().enumerate().map(|(i, t)| (t.clone(), i + 2)).collect();
    Ok(Vocabulary {
        tokens,
        index,
        min_freq,
        dim,
    })
}

/// Caps applied when turning a view into token ids.
#[derive(Clone, Copy, Debug, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct EncodeLimits {
    /// Keeps the latest documents of the window.
    pub max_docs: usize,
    /// Keeps the earliest tokens of each document.
    pub max_tokens_per_doc: usize,
}

impl Default for EncodeLimits {
    fn default() -> Self {
        Self {
            max_docs: 64,
            max_tokens_per_doc: 256,
        }
    }
}

/// Token ids per document, chronological.
#[derive(Clone, Debug, PartialEq, Eq, Default)]
pub struct EncodedView {
    pub docs: Vec<Vec<usize>>,
}

impl EncodedView {
    /// All documents concatenated in order.
    pub fn concatenated(&self) -> Vec<usize> {
        self.docs.iter().flatten().copied().collect()
    }
}

pub fn encode_view(view: &WindowedView<'_>, vocab: &Vocabulary, limits: EncodeLimits) -> EncodedView {
    let skip = view.documents.len().saturating_sub(limits.max_docs);
    let docs = view.documents[skip..]
        .iter()
        .map(|d| {
            tokenize(&d.text)
                .iter()
                .take(limits.max_tokens_per_doc)
                .map(|t| vocab.lookup(t))
                .collect::<Vec<_>>()
        })
        .filter(|ids| !ids.is_empty())
        .collect();
    EncodedView { docs }
}
