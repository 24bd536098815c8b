//! Question datasets with gold queries and answers.

use std::collections::BTreeSet;
use std::path::{Path, PathBuf};

use serde::Deserialize;
use thiserror::Error;

use crate::catalog::{self, CatalogError, PatternCatalog, PatternId};
use crate::query_graph::{QueryGraph, Slot};

#[derive(Debug, Error)]
pub enum DatasetError {
    #[error("failed to read {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("dataset is not valid JSON: {0}")]
    Json(#[from] serde_json::Error),
    #[error("entry {id}: {message}")]
    Entry { id: String, message: String },
}

#[derive(Debug, Deserialize)]
#[serde(untagged)]
enum RawId {
    Text(String),
    Number(i64),
}

#[derive(Debug, Deserialize)]
struct RawEntry {
    id: RawId,
    question: String,
    #[serde(default)]
    query: Vec<String>,
    #[serde(default)]
    answers: Vec<String>,
    #[serde(default)]
    entity: Option<String>,
    #[serde(default)]
    pattern: Option<u32>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct DatasetEntry {
    pub id: String,
    pub question: String,
    pub gold_query: Option<QueryGraph>,
    pub gold_answers: BTreeSet<String>,
    pub gold_pattern: Option<PatternId>,
    pub gold_entity: Option<String>,
}

/// An entry left out of the dataset, with the reason.
#[derive(Debug, Clone, PartialEq)]
pub struct Exclusion {
    pub id: String,
    pub reason: String,
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct Dataset {
    pub entries: Vec<DatasetEntry>,
    pub excluded: Vec<Exclusion>,
}

/// The topic entity of a gold query: the first IRI constant at a leaf of
/// the residual structure, else the class of a type annotation.
pub fn gold_entity_of(q: &QueryGraph, type_predicate: &str) -> Option<String> {
    let (positions, edges) = catalog::residual_positions(q, type_predicate);
    let degree = |i: usize| edges.iter().filter(|&&(a, b)| a == i || b == i).count();
    let leaf = (0..positions.len())
        .filter(|&i| positions.len() == 1 || degree(i) == 1)
        .filter_map(|i| match &q.nodes[positions[i]] {
            Slot::Constant(t) if !t.is_literal() => Some(t.text.clone()),
            _ => None,
        })
        .next();
    leaf.or_else(|| {
        catalog::type_annotations(q, type_predicate)
            .into_iter()
            .find_map(|(_, slot)| slot.constant().filter(|t| !t.is_literal()).map(|t| t.text.clone()))
    })
}

fn strip_iri(s: &str) -> String {
    let s = s.trim();
    s.strip_prefix('<').and_then(|s| s.strip_suffix('>')).unwrap_or(s).to_string()
}

/// Parses a JSON array of `{id, question, query, answers}` records.
pub fn parse_dataset(text: &str, catalog: &PatternCatalog, type_predicate: &str) -> Result<Dataset, DatasetError> {
    let raw: Vec<RawEntry> = serde_json::from_str(text)?;
    let mut out = Dataset::default();
    for r in raw {
        let id = match r.id {
            RawId::Text(s) => s,
            RawId::Number(n) => n.to_string(),
        };
        let err = |message: String| DatasetError::Entry {
            id: id.clone(),
            message,
        };
        if r.question.trim().is_empty() {
            return Err(err("empty question".into()));
        }
        let gold_query = if r.query.is_empty() {
            None
        } else {
            Some(QueryGraph::from_edge_list(&r.query).map_err(|e| err(e.to_string()))?)
        };
        let mut gold_pattern = match r.pattern {
            Some(p) if !catalog.contains(PatternId(p)) => return Err(err(format!("pattern p{p} not in catalog"))),
            Some(p) => Some(PatternId(p)),
            None => None,
        };
        if let (None, Some(q)) = (gold_pattern, &gold_query) {
            match catalog.derive_pattern(q, type_predicate) {
                Ok(p) => gold_pattern = Some(p),
                Err(e @ (CatalogError::TooLarge { .. } | CatalogError::NoPattern(_))) => {
                    log::warn!("excluding entry {id}: {e}");
                    out.excluded.push(Exclusion { id, reason: e.to_string() });
                    continue;
                }
                Err(e) => return Err(err(e.to_string())),
            }
        }
        let gold_entity = r
            .entity
            .map(|e| strip_iri(&e))
            .or_else(|| gold_query.as_ref().and_then(|q| gold_entity_of(q, type_predicate)));
        out.entries.push(DatasetEntry {
            id,
            question: r.question,
            gold_query,
            gold_answers: r.answers.iter().map(|a| strip_iri(a)).collect(),
            gold_pattern,
            gold_entity,
        });
    }
    Ok(out)
}

pub fn load_dataset(path: &Path, catalog: &PatternCatalog, type_predicate: &str) -> Result<Dataset, DatasetError> {
    let text = std::fs::read_to_string(path).map_err(|source| DatasetError::Io {
        path: path.to_path_buf(),
        source,
    })?;
    parse_dataset(&text, catalog, type_predicate)
}

/// `(question, gold pattern)` pairs for classifier training.
pub fn training_pairs(ds: &Dataset) -> Vec<(String, PatternId)> {
    ds.entries
        .iter()
        .filter_map(|e| e.gold_pattern.map(|p| (e.question.clone(), p)))
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::kg::RDF_TYPE;

    fn parse(text: &str) -> Dataset {
        parse_dataset(text, &PatternCatalog::default(), RDF_TYPE).unwrap()
    }

    #[test]
    fn empty_array() {
        assert_eq!(parse("[]"), Dataset::default());
    }

    #[test]
    fn derives_pattern_and_entity() {
        let ds = parse(r#"[{"id": 1, "question": "Who directed X?", "query": ["?x|<http://o/director>|<http://r/X>"], "answers": ["<http://r/A>"]}]"#);
        let e = &ds.entries[0];
        assert_eq!(e.id, "1");
        assert_eq!(e.gold_pattern, Some(PatternId(1)));
        assert_eq!(e.gold_entity.as_deref(), Some("http://r/X"));
        assert!(e.gold_answers.contains("http://r/A"));
    }

    #[test]
    fn type_only_query_uses_class() {
        let q = format!(r#"[{{"id": "a", "question": "Give me all films", "query": ["?x|<{RDF_TYPE}>|<http://o/Film>"]}}]"#);
        let e = &parse(&q).entries[0];
        assert_eq!(e.gold_pattern, Some(PatternId(0)));
        assert_eq!(e.gold_entity.as_deref(), Some("http://o/Film"));
    }

    #[test]
    fn oversized_queries_are_excluded() {
        let ds = parse(r#"[{"id": "big", "question": "q", "query": ["?a|<p>|?b", "?b|<p>|?c", "?c|<p>|?d", "?d|<p>|?e"]}]"#);
        assert!(ds.entries.is_empty());
        assert_eq!(ds.excluded[0].id, "big");
    }

    #[test]
    fn errors_name_the_entry() {
        let err = parse_dataset(r#"[{"id": "x", "question": "q", "query": ["bad"]}]"#, &PatternCatalog::default(), RDF_TYPE);
        assert!(matches!(err, Err(DatasetError::Entry { id, .. }) if id == "x"));
    }
}
