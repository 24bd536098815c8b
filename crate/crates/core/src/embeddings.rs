//! Pre-trained word vectors and the similarity primitives built on them.

use std::collections::HashMap;
use std::path::{Path, PathBuf};

use thiserror::Error;

use crate::text;

#[derive(Debug, Error)]
pub enum VectorError {
    #[error("failed to read {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },
    #[error("vector file has no entries")]
    Empty,
}

/// Token → dense vector map with a fixed dimension.
#[derive(Debug, Clone, Default)]
pub struct WordVectorStore {
    dim: usize,
    vectors: HashMap<String, Vec<f64>>,
}

impl WordVectorStore {
    /// Builds a store from in-memory entries. Tokens are lowercased; the
    /// first occurrence of a token wins. Panics if dimensions disagree.
    pub fn from_entries<I, S>(entries: I) -> Self
    where
        I: IntoIterator<Item = (S, Vec<f64>)>,
        S: AsRef<str>,
    {
        let mut store = WordVectorStore::default();
        for (tok, v) in entries {
            if store.vectors.is_empty() {
                store.dim = v.len();
            }
            assert_eq!(v.len(), store.dim, "dimension mismatch for {:?}", tok.as_ref());
            store.vectors.entry(tok.as_ref().to_lowercase()).or_insert(v);
        }
        store
    }

    /// Parses `token v1 v2 ... vd` lines; `d` is fixed by the first line.
    pub fn parse(text: &str) -> Result<Self, VectorError> {
        let mut store = WordVectorStore::default();
        for (i, line) in text.lines().enumerate() {
            let mut fields = line.split_whitespace();
            let Some(token) = fields.next() else { continue };
            let values: Vec<f64> = fields
                .map(|f| {
                    f.parse::<f64>().map_err(|_| VectorError::Parse {
                        line: i + 1,
                        message: format!("bad component {f:?}"),
                    })
                })
                .collect::<Result<_, _>>()?;
            if store.dim == 0 {
                if values.is_empty() {
                    return Err(VectorError::Parse {
                        line: i + 1,
                        message: "token has no components".into(),
                    });
                }
                store.dim = values.len();
            } else if values.len() != store.dim {
                return Err(VectorError::Parse {
                    line: i + 1,
                    message: format!("expected {} components, found {}", store.dim, values.len()),
                });
            }
            store.vectors.entry(token.to_lowercase()).or_insert(values);
        }
        if store.vectors.is_empty() {
            return Err(VectorError::Empty);
        }
        Ok(store)
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn len(&self) -> usize {
        self.vectors.len()
    }

    pub fn is_empty(&self) -> bool {
        self.vectors.is_empty()
    }

    pub fn get(&self, token: &str) -> Option<&[f64]> {
        self.vectors
            .get(token)
            .or_else(|| self.vectors.get(&token.to_lowercase()))
            .map(Vec::as_slice)
    }

    /// Cosine similarity of two tokens; 0 when either is unknown or zero.
    pub fn cosine(&self, w1: &str, w2: &str) -> f64 {
        match (self.get(w1), self.get(w2)) {
            (Some(a), Some(b)) => cosine_vectors(a, b),
            _ => 0.0,
        }
    }

    /// Mean of the vectors of the in-vocabulary tokens of `text`; the zero
    /// vector when none are known.
    pub fn sentence_vector(&self, text: &str) -> Vec<f64> {
        let mut sum = vec![0.0; self.dim];
        let mut n = 0usize;
        for w in text::words(text) {
            if let Some(v) = self.vectors.get(&w) {
                for (s, x) in sum.iter_mut().zip(v) {
                    *s += x;
                }
                n += 1;
            }
        }
        if n > 0 {
            for s in &mut sum {
                *s /= n as f64;
            }
        }
        sum
    }
}

/// Cosine of two equal-length vectors; 0 if either has zero norm.
pub fn cosine_vectors(a: &[f64], b: &[f64]) -> f64 {
    let dot: f64 = a.iter().zip(b).map(|(x, y)| x * y).sum();
    let na = a.iter().map(|x| x * x).sum::<f64>().sqrt();
    let nb = b.iter().map(|x| x * x).sum::<f64>().sqrt();
    if na == 0.0 || nb == 0.0 {
        return 0.0;
    }
    (dot / (na * nb)).clamp(-1.0, 1.0)
}

pub fn load_vectors(path: &Path) -> Result<WordVectorStore, VectorError> {
    let text = std::fs::read_to_string(path).map_err(|source| VectorError::Io {
        path: path.to_path_buf(),
        source,
    })?;
    WordVectorStore::parse(&text)
}
