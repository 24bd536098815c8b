//! Entity linking: detected phrases are extended to recover truncated
//! mentions, then graph candidates are scored against them.

use std::collections::{BTreeSet, HashMap};
use std::path::{Path, PathBuf};

use thiserror::Error;

use crate::embeddings::{cosine_vectors, WordVectorStore};
use crate::kg::{KnowledgeGraph, NodeId};
use crate::text::{self, Token};

pub use crate::text::levenshtein;

pub const DEFAULT_THETA: usize = 6;

#[derive(Debug, Error, PartialEq)]
pub enum LinkError {
    #[error("no entity phrase detected in the question")]
    NoPhrase,
    #[error("no candidate entity for any detected phrase")]
    NoCandidates,
    #[error("entity is not in the candidate list")]
    NotCandidate,
    #[error("matching weights must be non-negative with a positive sum")]
    BadWeights,
}

#[derive(Debug, Error)]
pub enum EvidenceError {
    #[error("failed to read {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("line {line}: expected <iri>\\ttext")]
    Parse { line: usize },
}

/// A token span of the question.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Phrase {
    pub text: String,
    /// Token offsets `[start, end)`.
    pub start: usize,
    pub end: usize,
}

impl Phrase {
    pub fn from_tokens(question: &str, tokens: &[Token<'_>], start: usize, end: usize) -> Self {
        Phrase {
            text: question[tokens[start].start..tokens[end - 1].end].to_string(),
            start,
            end,
        }
    }

    pub fn word_count(&self) -> usize {
        self.end - self.start
    }

    pub fn contains(&self, other: &Phrase) -> bool {
        self.start <= other.start && other.end <= self.end
    }

    fn overlaps(&self, other: &Phrase) -> bool {
        self.start < other.end && other.start < self.end
    }
}

/// Finds entity phrases in a question.
pub trait MentionDetector: Send + Sync {
    fn detect(&self, question: &str, g: &KnowledgeGraph) -> Vec<Phrase>;
}

/// Capitalized runs plus exact label matches from the graph.
///
/// Class labels are only consulted, with singular forms, when nothing else
/// is found, so that "give me all films" still yields a phrase.
#[derive(Debug, Clone, Copy)]
pub struct HeuristicDetector {
    pub max_span: usize,
}

impl Default for HeuristicDetector {
    fn default() -> Self {
        HeuristicDetector {
            max_span: DEFAULT_THETA,
        }
    }
}

impl HeuristicDetector {
    fn gazetteer(&self, question: &str, tokens: &[Token<'_>], g: &KnowledgeGraph, classes: bool) -> Vec<Phrase> {
        let mut out = Vec::new();
        for start in 0..tokens.len() {
            for end in (start + 1..=tokens.len().min(start + self.max_span)).rev() {
                if (start..end).all(|i| text::is_function_word(tokens[i].text)) {
                    continue;
                }
                let span = Phrase::from_tokens(question, tokens, start, end);
                let norm = text::normalize(&span.text);
                let hit = |label: &str| {
                    g.entities_labeled(label)
                        .iter()
                        .any(|&n| g.is_class(n) == classes)
                };
                let matched = if classes {
                    let mut words: Vec<String> = norm.split(' ').map(str::to_string).collect();
                    let last = words.pop().unwrap_or_default();
                    words.push(text::singular(&last));
                    hit(&norm) || hit(&words.join(" "))
                } else {
                    hit(&norm)
                };
                if matched {
                    out.push(span);
                    break;
                }
            }
        }
        out
    }
}

/// Longer spans win on overlap; equal lengths keep the earlier span.
fn resolve_overlaps(mut spans: Vec<Phrase>) -> Vec<Phrase> {
    spans.sort_by(|a, b| b.word_count().cmp(&a.word_count()).then(a.start.cmp(&b.start)));
    let mut kept: Vec<Phrase> = Vec::new();
    for s in spans {
        if !kept.iter().any(|k| k.overlaps(&s)) {
            kept.push(s);
        }
    }
    kept.sort_by_key(|p| p.start);
    kept
}

impl MentionDetector for HeuristicDetector {
    fn detect(&self, question: &str, g: &KnowledgeGraph) -> Vec<Phrase> {
        let tokens = text::tokenize(question);
        let mut spans: Vec<Phrase> = text::capitalized_runs(&tokens)
            .into_iter()
            .map(|(s, e)| Phrase::from_tokens(question, &tokens, s, e))
            .collect();
        spans.extend(self.gazetteer(question, &tokens, g, false));
        if spans.is_empty() {
            spans.extend(self.gazetteer(question, &tokens, g, true));
        }
        resolve_overlaps(spans)
    }
}

pub fn detect_mentions(question: &str, g: &KnowledgeGraph) -> Vec<Phrase> {
    HeuristicDetector::default().detect(question, g)
}

/// A base phrase and every containing span of at most `theta` words.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PhraseExtensionSet {
    pub base: Phrase,
    pub members: BTreeSet<Phrase>,
}

pub fn extend_phrase(phr: &Phrase, question: &str, theta: usize) -> PhraseExtensionSet {
    let tokens = text::tokenize(question);
    let mut members = BTreeSet::new();
    members.insert(phr.clone());
    for start in 0..=phr.start {
        for end in phr.end..=tokens.len() {
            if end - start <= theta {
                members.insert(Phrase::from_tokens(question, &tokens, start, end));
            }
        }
    }
    PhraseExtensionSet {
        base: phr.clone(),
        members,
    }
}

/// `1 / rank(e)` with ranks counted from 1.
pub fn importance(e: NodeId, candidates: &[NodeId]) -> Result<f64, LinkError> {
    candidates
        .iter()
        .position(|&c| c == e)
        .map(|i| 1.0 / (i + 1) as f64)
        .ok_or(LinkError::NotCandidate)
}

/// `1 / (lev + 1)` over normalized strings.
pub fn label_similarity(a: &str, b: &str) -> f64 {
    1.0 / (levenshtein(&text::normalize(a), &text::normalize(b)) + 1) as f64
}

pub fn string_similarity(phr: &str, e: NodeId, g: &KnowledgeGraph) -> f64 {
    label_similarity(phr, g.label(e).unwrap_or(""))
}

/// Per-entity evidence sentences.
#[derive(Debug, Clone, Default)]
pub struct EvidenceStore {
    sentences: HashMap<String, Vec<String>>,
}

/// Splits on `.`, `?` or `!` followed by whitespace.
pub fn split_sentences(text: &str) -> Vec<String> {
    let mut out = Vec::new();
    let mut current = String::new();
    let mut chars = text.chars().peekable();
    while let Some(c) = chars.next() {
        current.push(c);
        if matches!(c, '.' | '?' | '!') && chars.peek().is_some_and(|n| n.is_whitespace()) {
            let s = current.trim();
            if !s.is_empty() {
                out.push(s.to_string());
            }
            current.clear();
        }
    }
    let s = current.trim();
    if !s.is_empty() {
        out.push(s.to_string());
    }
    out
}

impl EvidenceStore {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn add(&mut self, iri: &str, text: &str) -> &mut Self {
        self.sentences
            .entry(iri.to_string())
            .or_default()
            .extend(split_sentences(text));
        self
    }

    /// Parses `<iri>\ttext` lines; repeated IRIs accumulate.
    pub fn parse(text: &str) -> Result<Self, EvidenceError> {
        let mut store = EvidenceStore::new();
        for (i, line) in text.lines().enumerate() {
            if line.trim().is_empty() || line.starts_with('#') {
                continue;
            }
            let (iri, body) = line.split_once('\t').ok_or(EvidenceError::Parse { line: i + 1 })?;
            let iri = iri.trim().trim_start_matches('<').trim_end_matches('>');
            if iri.is_empty() {
                return Err(EvidenceError::Parse { line: i + 1 });
            }
            store.add(iri, body);
        }
        Ok(store)
    }

    pub fn sentences(&self, iri: &str) -> &[String] {
        self.sentences.get(iri).map_or(&[], Vec::as_slice)
    }

    pub fn len(&self) -> usize {
        self.sentences.len()
    }

    pub fn is_empty(&self) -> bool {
        self.sentences.is_empty()
    }
}

pub fn load_evidence(path: &Path) -> Result<EvidenceStore, EvidenceError> {
    let text = std::fs::read_to_string(path).map_err(|source| EvidenceError::Io {
        path: path.to_path_buf(),
        source,
    })?;
    EvidenceStore::parse(&text)
}

/// Best cosine between the question and any evidence sentence of `iri`.
pub fn evidence_relevance(q: &str, iri: &str, ev: &EvidenceStore, store: &WordVectorStore) -> f64 {
    let qv = store.sentence_vector(q);
    ev.sentences(iri)
        .iter()
        .map(|s| cosine_vectors(&qv, &store.sentence_vector(s)))
        .reduce(f64::max)
        .unwrap_or(0.0)
}

/// Normalized `(imp, sim, rel)` weights.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MatchWeights {
    pub imp: f64,
    pub sim: f64,
    pub rel: f64,
}

impl MatchWeights {
    pub fn new(imp: f64, sim: f64, rel: f64) -> Result<Self, LinkError> {
        let sum = imp + sim + rel;
        if [imp, sim, rel].iter().any(|w| w.is_nan() || *w < 0.0) || !sum.is_finite() || sum <= 0.0 {
            return Err(LinkError::BadWeights);
        }
        Ok(MatchWeights {
            imp: imp / sum,
            sim: sim / sum,
            rel: rel / sum,
        })
    }
}

impl Default for MatchWeights {
    fn default() -> Self {
        MatchWeights {
            imp: 1.0 / 3.0,
            sim: 1.0 / 3.0,
            rel: 1.0 / 3.0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MatchScore {
    pub imp: f64,
    pub sim: f64,
    pub rel: f64,
    pub total: f64,
    pub weights: MatchWeights,
}

pub fn matching_score(imp: f64, sim: f64, rel: f64, weights: MatchWeights) -> MatchScore {
    MatchScore {
        imp,
        sim,
        rel,
        total: weights.imp * imp + weights.sim * sim + weights.rel * rel,
        weights,
    }
}

/// String the similarity term is computed against.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum SimAnchor {
    /// The detected phrase itself.
    #[default]
    Base,
    /// The closest member of the phrase's extension set.
    BestMember,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LinkConfig {
    pub theta: usize,
    pub weights: MatchWeights,
    pub sim_anchor: SimAnchor,
}

impl Default for LinkConfig {
    fn default() -> Self {
        LinkConfig {
            theta: DEFAULT_THETA,
            weights: MatchWeights::default(),
            sim_anchor: SimAnchor::Base,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct LinkedEntity {
    pub entity: NodeId,
    pub phrase: Phrase,
    pub score: MatchScore,
    /// Every detected phrase with its extensions.
    pub extensions: Vec<PhraseExtensionSet>,
}

/// Candidates pooled over all members, in prominence order.
pub fn pooled_candidates(px: &PhraseExtensionSet, g: &KnowledgeGraph) -> Vec<NodeId> {
    let mut pool: Vec<NodeId> = px
        .members
        .iter()
        .flat_map(|m| g.lookup_candidates(&m.text))
        .collect::<BTreeSet<_>>()
        .into_iter()
        .collect();
    pool.sort_by(|&a, &b| g.prominence_order(a, b));
    pool
}

pub fn link(
    question: &str,
    g: &KnowledgeGraph,
    ev: &EvidenceStore,
    store: &WordVectorStore,
    config: &LinkConfig,
) -> Result<LinkedEntity, LinkError> {
    let detector = HeuristicDetector {
        max_span: config.theta.max(1),
    };
    link_with(&detector, question, g, ev, store, config)
}

pub fn link_with(
    detector: &dyn MentionDetector,
    question: &str,
    g: &KnowledgeGraph,
    ev: &EvidenceStore,
    store: &WordVectorStore,
    config: &LinkConfig,
) -> Result<LinkedEntity, LinkError> {
    let phrases = detector.detect(question, g);
    if phrases.is_empty() {
        return Err(LinkError::NoPhrase);
    }
    let extensions: Vec<PhraseExtensionSet> = phrases
        .iter()
        .map(|p| extend_phrase(p, question, config.theta.max(p.word_count())))
        .collect();

    let mut best: Option<(NodeId, &Phrase, MatchScore)> = None;
    for px in &extensions {
        let pool = pooled_candidates(px, g);
        for (i, &e) in pool.iter().enumerate() {
            let imp = 1.0 / (i + 1) as f64;
            let label = g.label(e).unwrap_or("");
            let sim = match config.sim_anchor {
                SimAnchor::Base => label_similarity(&px.base.text, label),
                SimAnchor::BestMember => px
                    .members
                    .iter()
                    .map(|m| label_similarity(&m.text, label))
                    .fold(0.0, f64::max),
            };
            let rel = evidence_relevance(question, &g.term(e).text, ev, store);
            let score = matching_score(imp, sim, rel, config.weights);
            let better = match &best {
                None => true,
                Some((b, _, bs)) => {
                    score.total > bs.total
                        || (score.total == bs.total && g.prominence_order(e, *b).is_lt())
                }
            };
            if better {
                best = Some((e, &px.base, score));
            }
        }
    }
    let (entity, phrase, score) = best.ok_or(LinkError::NoCandidates)?;
    Ok(LinkedEntity {
        entity,
        phrase: phrase.clone(),
        score,
        extensions,
    })
}
