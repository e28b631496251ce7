//! Hashed bag-of-tokens embedding with TF-IDF weighting.

use std::collections::{BTreeMap, HashSet};

use serde::{Deserialize, Serialize};

use crate::seed::fnv1a;

pub const DEFAULT_EMBED_DIMS: usize = 1024;

/// Identifiers and numeric literals; everything else separates tokens.
pub fn tokenize(text: &str) -> impl Iterator<Item = &str> + '_ {
    text.split(|c: char| !(c.is_ascii_alphanumeric() || c == '_'))
        .filter(|t| !t.is_empty())
}

pub fn token_bucket(token: &str, dims: usize) -> usize {
    (fnv1a(token.as_bytes()) % dims as u64) as usize
}

/// Document frequencies over a reference set of documents (the training
/// release).
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct DocumentFrequency {
    documents: u64,
    counts: BTreeMap<String, u64>,
}

impl DocumentFrequency {
    pub fn from_documents<'a>(docs: impl IntoIterator<Item = &'a str>) -> Self {
        let mut table = Self::default();
        for doc in docs {
            table.add_document(doc);
        }
        table
    }

    pub fn add_document(&mut self, doc: &str) {
        self.documents += 1;
        let unique: HashSet<&str> = tokenize(doc).collect();
        for tok in unique {
            *self.counts.entry(tok.to_string()).or_insert(0) += 1;
        }
    }

    pub fn documents(&self) -> u64 {
        self.documents
    }

    pub fn df(&self, token: &str) -> u64 {
        self.counts.get(token).copied().unwrap_or(0)
    }

    /// Smoothed inverse document frequency `ln((1+N)/(1+df)) + 1`.
    pub fn idf(&self, token: &str) -> f64 {
        ((1.0 + self.documents as f64) / (1.0 + self.df(token) as f64)).ln() + 1.0
    }
}

/// Embed cleaned source text into `dims` buckets. The result is L2-normalised
/// unless no token was found.
pub fn embed_tokens(cleaned: &str, dims: usize, table: &DocumentFrequency) -> Vec<f64> {
    assert!(dims >= 1, "embedding dimension must be positive");
    let mut tf: BTreeMap<&str, u32> = BTreeMap::new();
    for tok in tokenize(cleaned) {
        *tf.entry(tok).or_insert(0) += 1;
    }
    let mut v = vec![0.0; dims];
    for (tok, count) in tf {
        v[token_bucket(tok, dims)] += f64::from(count) * table.idf(tok);
    }
    let norm = v.iter().map(|x| x * x).sum::<f64>().sqrt();
    if norm > 0.0 {
        v.iter_mut().for_each(|x| *x /= norm);
    }
    v
}
