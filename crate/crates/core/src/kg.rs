//! In-memory knowledge graph with its lookup indices.
//!
//! Nodes and predicates are interned; all indices are built once at load
//! time and the graph is immutable afterwards.

use std::collections::{BTreeSet, HashMap, HashSet};
use std::fmt;
use std::path::{Path, PathBuf};

use thiserror::Error;

use crate::text::{self, levenshtein, normalize};

pub const RDF_TYPE: &str = "http://www.w3.org/1999/02/22-rdf-syntax-ns#type";

#[derive(Debug, Error)]
pub enum KgError {
    #[error("failed to read {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("{file}:{line}: {message}")]
    Parse {
        file: String,
        line: usize,
        message: String,
    },
}

/// Index of an interned node (entity IRI or literal).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct NodeId(pub u32);

/// Index of an interned predicate IRI.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct PredicateId(pub u32);

impl NodeId {
    pub fn index(self) -> usize {
        self.0 as usize
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum TermKind {
    Iri,
    Literal,
}

/// The value behind a [`NodeId`].
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Term {
    pub kind: TermKind,
    /// Full IRI (without angle brackets) or literal lexical form.
    pub text: String,
    pub datatype: Option<String>,
}

impl Term {
    pub fn iri(iri: impl Into<String>) -> Self {
        Term {
            kind: TermKind::Iri,
            text: iri.into(),
            datatype: None,
        }
    }

    pub fn literal(text: impl Into<String>, datatype: Option<String>) -> Self {
        Term {
            kind: TermKind::Literal,
            text: text.into(),
            datatype,
        }
    }

    pub fn is_literal(&self) -> bool {
        self.kind == TermKind::Literal
    }
}

impl fmt::Display for Term {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match (self.kind, &self.datatype) {
            (TermKind::Iri, _) => write!(f, "<{}>", self.text),
            (TermKind::Literal, None) => write!(f, "\"{}\"", escape_literal(&self.text)),
            (TermKind::Literal, Some(dt)) => {
                write!(f, "\"{}\"^^<{}>", escape_literal(&self.text), dt)
            }
        }
    }
}

fn escape_literal(s: &str) -> String {
    let mut out = String::with_capacity(s.len());
    for c in s.chars() {
        match c {
            '"' => out.push_str("\\\""),
            '\\' => out.push_str("\\\\"),
            '\n' => out.push_str("\\n"),
            '\r' => out.push_str("\\r"),
            '\t' => out.push_str("\\t"),
            c => out.push(c),
        }
    }
    out
}

#[derive(Debug, Clone)]
pub struct KgConfig {
    /// Predicate whose triples populate the type index.
    pub type_predicate: String,
    /// Edit-distance gate used by [`KnowledgeGraph::lookup_candidates`].
    pub max_label_distance: usize,
}

impl Default for KgConfig {
    fn default() -> Self {
        KgConfig {
            type_predicate: RDF_TYPE.to_string(),
            max_label_distance: 2,
        }
    }
}

/// Accumulates triples and side data, then freezes them into a [`KnowledgeGraph`].
#[derive(Debug, Default)]
pub struct GraphBuilder {
    config: KgConfig,
    triples: Vec<(Term, String, Term)>,
    labels: HashMap<String, String>,
    counts: Option<HashMap<String, f64>>,
}

impl GraphBuilder {
    pub fn new(config: KgConfig) -> Self {
        GraphBuilder {
            config,
            ..Default::default()
        }
    }

    pub fn add(&mut self, subject: Term, predicate: impl Into<String>, object: Term) -> &mut Self {
        debug_assert!(!subject.is_literal(), "literal subject");
        self.triples.push((subject, predicate.into(), object));
        self
    }

    /// Convenience for `<s> <p> <o>` with IRI object.
    pub fn iri(&mut self, s: &str, p: &str, o: &str) -> &mut Self {
        self.add(Term::iri(s), p, Term::iri(o))
    }

    pub fn literal(&mut self, s: &str, p: &str, value: &str, datatype: Option<&str>) -> &mut Self {
        self.add(Term::iri(s), p, Term::literal(value, datatype.map(str::to_string)))
    }

    pub fn label(&mut self, iri: &str, label: &str) -> &mut Self {
        self.labels.insert(iri.to_string(), label.to_string());
        self
    }

    pub fn count(&mut self, iri: &str, count: f64) -> &mut Self {
        self.counts
            .get_or_insert_with(HashMap::new)
            .insert(iri.to_string(), count);
        self
    }

    pub fn build(self) -> KnowledgeGraph {
        KnowledgeGraph::from_parts(self)
    }
}

/// Immutable triple store. Safe to share across threads.
#[derive(Debug, Clone)]
pub struct KnowledgeGraph {
    config: KgConfig,
    terms: Vec<Term>,
    term_ids: HashMap<Term, NodeId>,
    predicates: Vec<String>,
    predicate_ids: HashMap<String, PredicateId>,
    triples: Vec<(NodeId, PredicateId, NodeId)>,
    triple_set: HashSet<(NodeId, PredicateId, NodeId)>,
    out_index: Vec<Vec<(PredicateId, NodeId)>>,
    in_index: Vec<Vec<(PredicateId, NodeId)>>,
    labels: Vec<Option<String>>,
    label_index: HashMap<String, Vec<NodeId>>,
    prominence: Vec<f64>,
    types: Vec<Vec<NodeId>>,
    type_predicate: Option<PredicateId>,
}

impl KnowledgeGraph {
    pub fn builder() -> GraphBuilder {
        GraphBuilder::new(KgConfig::default())
    }

    pub fn empty() -> Self {
        GraphBuilder::default().build()
    }

    fn from_parts(parts: GraphBuilder) -> Self {
        let GraphBuilder {
            config,
            triples: raw,
            labels: label_overrides,
            counts,
        } = parts;

        let mut terms = Vec::new();
        let mut term_ids = HashMap::new();
        let mut predicates = Vec::new();
        let mut predicate_ids = HashMap::new();
        let mut intern = |t: Term| -> NodeId {
            *term_ids.entry(t.clone()).or_insert_with(|| {
                terms.push(t);
                NodeId((terms.len() - 1) as u32)
            })
        };
        let mut encoded = BTreeSet::new();
        for (s, p, o) in raw {
            let s = intern(s);
            let o = intern(o);
            let p = *predicate_ids.entry(p.clone()).or_insert_with(|| {
                predicates.push(p);
                PredicateId((predicates.len() - 1) as u32)
            });
            encoded.insert((s, p, o));
        }
        let triples: Vec<_> = encoded.into_iter().collect();

        let n = terms.len();
        let mut out_index = vec![Vec::new(); n];
        let mut in_index = vec![Vec::new(); n];
        for &(s, p, o) in &triples {
            out_index[s.index()].push((p, o));
            in_index[o.index()].push((p, s));
        }
        for list in out_index.iter_mut().chain(in_index.iter_mut()) {
            list.sort_unstable();
        }

        let type_predicate = predicate_ids.get(&config.type_predicate).copied();
        let mut types = vec![Vec::new(); n];
        if let Some(tp) = type_predicate {
            for &(s, p, o) in &triples {
                if p == tp {
                    types[s.index()].push(o);
                }
            }
        }

        let mut labels = vec![None; n];
        let mut label_index: HashMap<String, Vec<NodeId>> = HashMap::new();
        for (i, term) in terms.iter().enumerate() {
            if term.is_literal() {
                continue;
            }
            let label = match label_overrides.get(&term.text) {
                Some(l) => normalize(l),
                None => text::label_from_iri(&term.text),
            };
            if label.is_empty() {
                continue;
            }
            label_index.entry(label.clone()).or_default().push(NodeId(i as u32));
            labels[i] = Some(label);
        }

        let prominence = (0..n)
            .map(|i| match &counts {
                Some(c) => c.get(&terms[i].text).copied().unwrap_or(0.0),
                None => (out_index[i].len() + in_index[i].len()) as f64,
            })
            .collect();

        let triple_set = triples.iter().copied().collect();
        KnowledgeGraph {
            config,
            terms,
            term_ids,
            predicates,
            predicate_ids,
            triples,
            triple_set,
            out_index,
            in_index,
            labels,
            label_index,
            prominence,
            types,
            type_predicate,
        }
    }

    pub fn config(&self) -> &KgConfig {
        &self.config
    }

    pub fn node_count(&self) -> usize {
        self.terms.len()
    }

    pub fn triple_count(&self) -> usize {
        self.triples.len()
    }

    pub fn predicate_count(&self) -> usize {
        self.predicates.len()
    }

    pub fn nodes(&self) -> impl Iterator<Item = NodeId> + '_ {
        (0..self.terms.len() as u32).map(NodeId)
    }

    pub fn entities(&self) -> impl Iterator<Item = NodeId> + '_ {
        self.nodes().filter(|&n| !self.term(n).is_literal())
    }

    pub fn triples(&self) -> &[(NodeId, PredicateId, NodeId)] {
        &self.triples
    }

    pub fn term(&self, n: NodeId) -> &Term {
        &self.terms[n.index()]
    }

    pub fn node_id(&self, term: &Term) -> Option<NodeId> {
        self.term_ids.get(term).copied()
    }

    pub fn iri_id(&self, iri: &str) -> Option<NodeId> {
        self.node_id(&Term::iri(iri))
    }

    pub fn predicate_iri(&self, p: PredicateId) -> &str {
        &self.predicates[p.0 as usize]
    }

    pub fn predicate_id(&self, iri: &str) -> Option<PredicateId> {
        self.predicate_ids.get(iri).copied()
    }

    pub fn type_predicate(&self) -> Option<PredicateId> {
        self.type_predicate
    }

    pub fn contains(&self, s: NodeId, p: PredicateId, o: NodeId) -> bool {
        self.triple_set.contains(&(s, p, o))
    }

    /// `(predicate, object)` pairs with `n` as subject, sorted.
    pub fn outgoing(&self, n: NodeId) -> &[(PredicateId, NodeId)] {
        self.out_index.get(n.index()).map_or(&[], Vec::as_slice)
    }

    /// `(predicate, subject)` pairs with `n` as object, sorted.
    pub fn incoming(&self, n: NodeId) -> &[(PredicateId, NodeId)] {
        self.in_index.get(n.index()).map_or(&[], Vec::as_slice)
    }

    /// Normalized label of an entity node, `None` for literals.
    pub fn label(&self, n: NodeId) -> Option<&str> {
        self.labels.get(n.index()).and_then(|l| l.as_deref())
    }

    pub fn prominence(&self, n: NodeId) -> f64 {
        self.prominence.get(n.index()).copied().unwrap_or(0.0)
    }

    pub fn types_of(&self, n: NodeId) -> &[NodeId] {
        self.types.get(n.index()).map_or(&[], Vec::as_slice)
    }

    pub fn has_type(&self, n: NodeId, class: NodeId) -> bool {
        self.types_of(n).contains(&class)
    }

    /// Whether some node is typed with `n`.
    pub fn is_class(&self, n: NodeId) -> bool {
        match self.type_predicate {
            Some(tp) => self.incoming(n).iter().any(|&(p, _)| p == tp),
            None => false,
        }
    }

    pub fn instances_of(&self, class: NodeId) -> impl Iterator<Item = NodeId> + '_ {
        let tp = self.type_predicate;
        self.incoming(class)
            .iter()
            .filter(move |&&(p, _)| Some(p) == tp)
            .map(|&(_, s)| s)
    }

    /// Entities with the given exact normalized label.
    pub fn entities_labeled(&self, normalized_label: &str) -> &[NodeId] {
        self.label_index
            .get(normalized_label)
            .map_or(&[], Vec::as_slice)
    }

    /// Ordering used for candidate lists: higher prominence first, then IRI.
    pub fn prominence_order(&self, a: NodeId, b: NodeId) -> std::cmp::Ordering {
        self.prominence(b)
            .total_cmp(&self.prominence(a))
            .then_with(|| self.term(a).text.cmp(&self.term(b).text))
    }

    /// Candidate entities for a surface phrase.
    ///
    /// An entity qualifies when its label contains every token of the
    /// normalized phrase, or lies within the configured edit distance of it.
    /// The result is ordered by [`Self::prominence_order`]; position `i`
    /// (from 1) is the candidate's rank.
    pub fn lookup_candidates(&self, phrase: &str) -> Vec<NodeId> {
        let phrase = normalize(phrase);
        if phrase.is_empty() {
            return Vec::new();
        }
        let tokens: Vec<&str> = phrase.split(' ').collect();
        let max = self.config.max_label_distance;
        let plen = phrase.chars().count();
        let mut found: Vec<NodeId> = Vec::new();
        for (label, ids) in &self.label_index {
            let contains_all = {
                let label_tokens: HashSet<&str> = label.split(' ').collect();
                tokens.iter().all(|t| label_tokens.contains(t))
            };
            let close = contains_all
                || (label.chars().count().abs_diff(plen) <= max
                    && levenshtein(label, &phrase) <= max);
            if close {
                found.extend(ids.iter().copied());
            }
        }
        found.sort_by(|&a, &b| self.prominence_order(a, b));
        found.dedup();
        found
    }

    /// Deterministic textual dump of every index, for comparing graphs.
    pub fn dump(&self) -> String {
        let mut lines = Vec::new();
        for n in self.nodes() {
            let t = self.term(n);
            for &(p, o) in self.outgoing(n) {
                lines.push(format!("out {t} {} {}", self.predicate_iri(p), self.term(o)));
            }
            for &(p, s) in self.incoming(n) {
                lines.push(format!("in {t} {} {}", self.predicate_iri(p), self.term(s)));
            }
            if let Some(l) = self.label(n) {
                lines.push(format!("label {t} {l}"));
            }
            lines.push(format!("prominence {t} {}", self.prominence(n)));
            for &c in self.types_of(n) {
                lines.push(format!("type {t} {}", self.term(c)));
            }
        }
        lines.sort();
        lines.join("\n")
    }
}

/// Parses one N-Triples-subset line. Returns `Ok(None)` for blank and
/// comment lines.
pub fn parse_ntriple_line(line: &str) -> Result<Option<(Term, String, Term)>, String> {
    let line = line.trim();
    if line.is_empty() || line.starts_with('#') {
        return Ok(None);
    }
    let mut rest = line;
    let subject = take_iri(&mut rest).map_err(|e| format!("subject: {e}"))?;
    let predicate = take_iri(&mut rest).map_err(|e| format!("predicate: {e}"))?;
    rest = rest.trim_start();
    let object = if rest.starts_with('<') {
        Term::iri(take_iri(&mut rest).map_err(|e| format!("object: {e}"))?)
    } else if rest.starts_with('"') {
        take_literal(&mut rest).map_err(|e| format!("object: {e}"))?
    } else {
        return Err(format!("object: expected IRI or literal, found {:?}", first_word(rest)));
    };
    let rest = rest.trim();
    if rest != "." {
        return Err(format!("expected terminating '.', found {rest:?}"));
    }
    Ok(Some((Term::iri(subject), predicate, object)))
}

fn first_word(s: &str) -> &str {
    s.split_whitespace().next().unwrap_or("")
}

fn take_iri(rest: &mut &str) -> Result<String, String> {
    let s = rest.trim_start();
    if !s.starts_with('<') {
        return Err(format!("expected '<', found {:?}", first_word(s)));
    }
    let end = s.find('>').ok_or("unterminated IRI")?;
    let iri = &s[1..end];
    if iri.is_empty() {
        return Err("empty IRI".into());
    }
    if iri.contains(char::is_whitespace) {
        return Err(format!("whitespace in IRI {iri:?}"));
    }
    *rest = &s[end + 1..];
    Ok(iri.to_string())
}

fn take_literal(rest: &mut &str) -> Result<Term, String> {
    let s = *rest;
    let mut value = String::new();
    let mut chars = s.char_indices().skip(1);
    let close = loop {
        let Some((i, c)) = chars.next() else {
            return Err("unterminated literal".into());
        };
        match c {
            '"' => break i,
            '\\' => match chars.next() {
                Some((_, 'n')) => value.push('\n'),
                Some((_, 't')) => value.push('\t'),
                Some((_, 'r')) => value.push('\r'),
                Some((_, '"')) => value.push('"'),
                Some((_, '\\')) => value.push('\\'),
                Some((_, other)) => return Err(format!("unsupported escape \\{other}")),
                None => return Err("unterminated literal".into()),
            },
            c => value.push(c),
        }
    };
    let mut after = &s[close + 1..];
    let mut datatype = None;
    if let Some(dt) = after.strip_prefix("^^") {
        after = dt;
        datatype = Some(take_iri(&mut after).map_err(|e| format!("datatype: {e}"))?);
    } else if let Some(tagged) = after.strip_prefix('@') {
        // language tags are accepted and dropped
        let end = tagged
            .find(|c: char| !(c.is_ascii_alphanumeric() || c == '-'))
            .unwrap_or(tagged.len());
        after = &tagged[end..];
    }
    *rest = after;
    Ok(Term::literal(value, datatype))
}

fn read(path: &Path) -> Result<String, KgError> {
    std::fs::read_to_string(path).map_err(|source| KgError::Io {
        path: path.to_path_buf(),
        source,
    })
}

fn parse_error(path: &Path, line: usize, message: impl Into<String>) -> KgError {
    KgError::Parse {
        file: path.display().to_string(),
        line,
        message: message.into(),
    }
}

/// Splits a `<iri>\tvalue` side-file line.
fn parse_side_line<'a>(path: &Path, n: usize, line: &'a str) -> Result<(&'a str, &'a str), KgError> {
    let (iri, value) = line
        .split_once('\t')
        .ok_or_else(|| parse_error(path, n, "expected <iri>\\tvalue"))?;
    let iri = iri.trim();
    let iri = iri
        .strip_prefix('<')
        .and_then(|i| i.strip_suffix('>'))
        .unwrap_or(iri);
    Ok((iri, value.trim()))
}

/// Loads a graph from an N-Triples-subset file plus optional label and
/// count side files.
pub fn load_ntriples(
    path: &Path,
    labels_path: Option<&Path>,
    counts_path: Option<&Path>,
    config: KgConfig,
) -> Result<KnowledgeGraph, KgError> {
    let mut builder = GraphBuilder::new(config);
    for (i, line) in read(path)?.lines().enumerate() {
        match parse_ntriple_line(line) {
            Ok(Some((s, p, o))) => {
                builder.add(s, p, o);
            }
            Ok(None) => {}
            Err(message) => return Err(parse_error(path, i + 1, message)),
        }
    }
    if let Some(lp) = labels_path {
        for (i, line) in read(lp)?.lines().enumerate() {
            if line.trim().is_empty() || line.starts_with('#') {
                continue;
            }
            let (iri, label) = parse_side_line(lp, i + 1, line)?;
            builder.label(iri, label);
        }
    }
    if let Some(cp) = counts_path {
        builder.counts.get_or_insert_with(HashMap::new);
        for (i, line) in read(cp)?.lines().enumerate() {
            if line.trim().is_empty() || line.starts_with('#') {
                continue;
            }
            let (iri, count) = parse_side_line(cp, i + 1, line)?;
            let count: u64 = count
                .parse()
                .map_err(|_| parse_error(cp, i + 1, format!("bad count {count:?}")))?;
            builder.count(iri, count as f64);
        }
    }
    Ok(builder.build())
}
