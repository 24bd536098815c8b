//! Query-graph construction guided by a structural pattern, and constraint
//! detection and augmentation.

use std::collections::{BTreeMap, BTreeSet, HashMap, HashSet};
use std::path::{Path, PathBuf};

use thiserror::Error;

use crate::catalog::StructuralQueryPattern;
use crate::embeddings::WordVectorStore;
use crate::executor::{self, numeric_value};
use crate::kg::{KnowledgeGraph, NodeId, PredicateId, RDF_TYPE};
use crate::linker::PhraseExtensionSet;
use crate::query_graph::{CompareOp, Constraint, ConstraintKind, QueryEdge, QueryGraph, Slot, SortDirection};
use crate::text;

pub const DEFAULT_LAMBDA: f64 = 0.5;

#[derive(Debug, Error, PartialEq)]
pub enum BuildError {
    #[error("no candidate relation at position {position}")]
    NoRelation { position: usize },
    #[error("no compatible placement for the entity in pattern {0}")]
    NoPlacement(String),
    #[error("the single-node pattern needs a class entity")]
    NotAClass,
    #[error("query graph would contain no variable")]
    NoVariable,
    #[error("constraint {0:?} needs numeric or date values")]
    ConstraintInapplicable(ConstraintKind),
    #[error("query graph is not fully labeled")]
    Unlabeled,
}

#[derive(Debug, Error)]
pub enum LexiconError {
    #[error("failed to read {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },
}

#[derive(Debug, Clone, PartialEq)]
pub struct BuilderConfig {
    pub lambda: f64,
    pub type_predicate: String,
    /// Edit distance under which a frontier node counts as mentioned.
    pub mention_distance: usize,
}

impl Default for BuilderConfig {
    fn default() -> Self {
        BuilderConfig {
            lambda: DEFAULT_LAMBDA,
            type_predicate: RDF_TYPE.to_string(),
            mention_distance: 2,
        }
    }
}

/// Function words ignored when scoring relations.
pub fn is_stop_word(w: &str) -> bool {
    let w = w.to_lowercase();
    text::ARTICLES.contains(&w.as_str()) || text::AUXILIARIES.contains(&w.as_str()) || text::WH_WORDS.contains(&w.as_str())
}

pub fn question_terms(q: &str) -> Vec<String> {
    text::words(q).into_iter().filter(|w| !is_stop_word(w)).collect()
}

/// Words of a relation's local name, e.g. `dateOfBirth` → date, of, birth.
pub fn relation_words(r: &str) -> Vec<String> {
    text::split_identifier(text::local_name(r))
}

/// Sum over question/relation word pairs of
/// `λ·cos(q_i, r_j) + (1 − λ) / (lev(q_i, r_j) + 1)`.
pub fn relation_relevance(q: &str, r: &str, store: &WordVectorStore, lambda: f64) -> f64 {
    relevance_of_terms(&question_terms(q), &relation_words(r), store, lambda)
}

fn relevance_of_terms(qs: &[String], rs: &[String], store: &WordVectorStore, lambda: f64) -> f64 {
    let mut total = 0.0;
    for qi in qs {
        for rj in rs {
            total += lambda * store.cosine(qi, rj) + (1.0 - lambda) / (text::levenshtein(qi, rj) + 1) as f64;
        }
    }
    total
}

/// Memoized relevance of every predicate for one question.
struct Relevance<'a> {
    terms: Vec<String>,
    store: &'a WordVectorStore,
    lambda: f64,
    cache: HashMap<PredicateId, f64>,
}

impl<'a> Relevance<'a> {
    fn new(q: &str, store: &'a WordVectorStore, lambda: f64) -> Self {
        Relevance {
            terms: question_terms(q),
            store,
            lambda,
            cache: HashMap::new(),
        }
    }

    fn score(&mut self, g: &KnowledgeGraph, p: PredicateId) -> f64 {
        if let Some(&s) = self.cache.get(&p) {
            return s;
        }
        let s = relevance_of_terms(&self.terms, &relation_words(g.predicate_iri(p)), self.store, self.lambda);
        self.cache.insert(p, s);
        s
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Placement {
    pub position: usize,
    /// The entity has the relation directions the position needs.
    pub compatible: bool,
}

fn non_type<'g>(g: &'g KnowledgeGraph, adj: &'g [(PredicateId, NodeId)]) -> impl Iterator<Item = &'g (PredicateId, NodeId)> {
    let tp = g.type_predicate();
    adj.iter().filter(move |(p, _)| Some(*p) != tp)
}

/// Leaf positions of `p` with their direction compatibility for `e`.
pub fn placement_candidates(p: &StructuralQueryPattern, e: NodeId, g: &KnowledgeGraph) -> Vec<Placement> {
    p.non_intermediate_positions()
        .into_iter()
        .map(|position| {
            let needs_out = p.out_degree(position) > 0;
            let needs_in = p.in_degree(position) > 0;
            let compatible = (!needs_out || non_type(g, g.outgoing(e)).next().is_some())
                && (!needs_in || non_type(g, g.incoming(e)).next().is_some());
            Placement { position, compatible }
        })
        .collect()
}

/// Frontier bookkeeping during extension.
#[derive(Debug, Clone, Default)]
pub struct ExtensionState {
    /// Unlabeled positions adjacent to labeled ones.
    pub ns: BTreeSet<usize>,
    /// Candidate KG nodes per labeled position.
    pub cn: BTreeMap<usize, Vec<NodeId>>,
    pub labeled: BTreeSet<usize>,
}

impl ExtensionState {
    fn refresh(&mut self, p: &StructuralQueryPattern) {
        self.ns = p
            .edges
            .iter()
            .flat_map(|&(a, b)| [(a, b), (b, a)])
            .filter(|(x, y)| self.labeled.contains(x) && !self.labeled.contains(y))
            .map(|(_, y)| y)
            .collect();
    }
}

/// Surface strings used to decide whether a KG node is mentioned.
pub fn mention_strings(extensions: &[PhraseExtensionSet]) -> Vec<String> {
    let mut out: Vec<String> = extensions
        .iter()
        .flat_map(|px| px.members.iter().map(|m| text::normalize(&m.text)))
        .collect();
    out.sort();
    out.dedup();
    out
}

fn mentioned(g: &KnowledgeGraph, n: NodeId, mentions: &[String], max: usize) -> bool {
    match g.label(n) {
        Some(label) => mentions.iter().any(|m| text::levenshtein(label, m) <= max),
        None => false,
    }
}

fn most_prominent(g: &KnowledgeGraph, nodes: impl IntoIterator<Item = NodeId>) -> Option<NodeId> {
    nodes.into_iter().min_by(|&a, &b| g.prominence_order(a, b))
}

/// Inputs shared by every extension attempt for one question.
pub struct ExtendContext<'a> {
    pub question: &'a str,
    pub g: &'a KnowledgeGraph,
    pub store: &'a WordVectorStore,
    pub config: &'a BuilderConfig,
    /// Detected phrases and their extensions, normalized.
    pub mentions: &'a [String],
}

struct Candidate {
    edge: usize,
    predicate: PredicateId,
    score: f64,
}

/// Grounds pattern `p` with `e` at `position`.
pub fn extend_at(ctx: &ExtendContext<'_>, e: NodeId, p: &StructuralQueryPattern, position: usize) -> Result<QueryGraph, BuildError> {
    let g = ctx.g;
    if p.node_count == 1 {
        return single_node(g, e);
    }
    let mut rel = Relevance::new(ctx.question, ctx.store, ctx.config.lambda);
    // mentions the topic entity already accounts for
    let mentions: Vec<String> = ctx
        .mentions
        .iter()
        .filter(|m| !g.label(e).is_some_and(|l| text::levenshtein(l, m) <= ctx.config.mention_distance))
        .cloned()
        .collect();
    let mut q = QueryGraph::skeleton(p.node_count, &p.edges);
    let mut state = ExtensionState::default();
    let mut witness: Vec<Option<NodeId>> = vec![None; p.node_count];
    let mut used: HashSet<(NodeId, PredicateId, NodeId)> = HashSet::new();
    let mut first_variables: Vec<usize> = Vec::new();

    q.nodes[position] = Slot::Constant(g.term(e).clone());
    witness[position] = Some(e);
    state.cn.insert(position, vec![e]);
    state.labeled.insert(position);
    state.refresh(p);

    while !state.ns.is_empty() {
        // relations pooled over every frontier edge
        let mut candidates: Vec<Candidate> = Vec::new();
        let mut seen: HashSet<(usize, PredicateId)> = HashSet::new();
        for (idx, &(a, b)) in p.edges.iter().enumerate() {
            let (inner, outgoing) = match (state.labeled.contains(&a), state.labeled.contains(&b)) {
                (true, false) => (a, true),
                (false, true) => (b, false),
                _ => continue,
            };
            for &n in &state.cn[&inner] {
                let adj = if outgoing { g.outgoing(n) } else { g.incoming(n) };
                for &(pred, far) in non_type(g, adj) {
                    let triple = if outgoing { (n, pred, far) } else { (far, pred, n) };
                    if used.contains(&triple) || !seen.insert((idx, pred)) {
                        continue;
                    }
                    candidates.push(Candidate {
                        edge: idx,
                        predicate: pred,
                        score: rel.score(g, pred),
                    });
                }
            }
        }
        let Some(best) = candidates.into_iter().min_by(|x, y| {
            y.score
                .total_cmp(&x.score)
                .then_with(|| g.predicate_iri(x.predicate).cmp(g.predicate_iri(y.predicate)))
                .then(x.edge.cmp(&y.edge))
        }) else {
            return Err(BuildError::NoRelation {
                position: *state.ns.iter().next().unwrap(),
            });
        };

        let (a, b) = p.edges[best.edge];
        let outgoing = state.labeled.contains(&a);
        let (inner, far_pos) = if outgoing { (a, b) } else { (b, a) };
        let far_of = |n: NodeId| -> Vec<(NodeId, (NodeId, PredicateId, NodeId))> {
            let adj = if outgoing { g.outgoing(n) } else { g.incoming(n) };
            adj.iter()
                .filter(|&&(pr, _)| pr == best.predicate)
                .map(|&(_, f)| (f, if outgoing { (n, best.predicate, f) } else { (f, best.predicate, n) }))
                .filter(|(_, t)| !used.contains(t))
                .collect()
        };
        let pairs: Vec<(NodeId, NodeId, (NodeId, PredicateId, NodeId))> = state.cn[&inner]
            .iter()
            .flat_map(|&n| far_of(n).into_iter().map(move |(f, t)| (n, f, t)))
            .collect();
        q.edges[best.edge].predicate = Some(g.predicate_iri(best.predicate).to_string());
        let named = most_prominent(
            g,
            pairs
                .iter()
                .map(|&(_, f, _)| f)
                .filter(|&f| mentioned(g, f, &mentions, ctx.config.mention_distance)),
        );
        let source = match named {
            Some(f) => most_prominent(g, pairs.iter().filter(|&&(_, x, _)| x == f).map(|&(n, _, _)| n)),
            None => most_prominent(g, pairs.iter().map(|&(n, _, _)| n)),
        }
        .expect("chosen relation has a source");
        witness[inner] = Some(source);
        state.cn.insert(inner, vec![source]);
        for (_, _, t) in &pairs {
            used.insert(*t);
        }
        let mut far_nodes: Vec<NodeId> = pairs.iter().filter(|&&(n, _, _)| n == source).map(|&(_, f, _)| f).collect();
        far_nodes.dedup();

        match named {
            Some(n) => {
                q.nodes[far_pos] = Slot::Constant(g.term(n).clone());
                witness[far_pos] = Some(n);
                state.cn.insert(far_pos, vec![n]);
            }
            None => {
                q.nodes[far_pos] = Slot::Variable(format!("v{far_pos}"));
                first_variables.push(far_pos);
                state.cn.insert(far_pos, far_nodes);
            }
        }
        state.labeled.insert(far_pos);
        state.refresh(p);
    }

    if first_variables.is_empty() {
        return Err(BuildError::NoVariable);
    }
    for (pos, w) in witness.iter_mut().enumerate() {
        if w.is_none() {
            *w = most_prominent(g, state.cn[&pos].iter().copied());
        }
    }
    let leaves = p.non_intermediate_positions();
    q.return_position = first_variables
        .iter()
        .copied()
        .find(|v| leaves.contains(v))
        .or(first_variables.first().copied());
    q.witness = Some(witness.into_iter().map(|w| w.expect("every position grounded")).collect());
    Ok(q)
}

fn single_node(g: &KnowledgeGraph, e: NodeId) -> Result<QueryGraph, BuildError> {
    if !g.is_class(e) {
        return Err(BuildError::NotAClass);
    }
    let instance = most_prominent(g, g.instances_of(e)).ok_or(BuildError::NotAClass)?;
    Ok(QueryGraph {
        nodes: vec![Slot::Variable("v0".into())],
        edges: Vec::new(),
        return_position: Some(0),
        constraints: vec![Constraint::new(
            ConstraintKind::AnswerType {
                class: g.term(e).text.clone(),
            },
            (0, 0),
        )],
        witness: Some(vec![instance]),
    })
}

/// Relevance of the best relation the entity offers at `position` as a
/// first step; `None` when it offers none.
fn first_step_score(ctx: &ExtendContext<'_>, rel: &mut Relevance<'_>, e: NodeId, p: &StructuralQueryPattern, position: usize) -> Option<f64> {
    let g = ctx.g;
    let mut best: Option<f64> = None;
    for &(a, b) in &p.edges {
        let adj = if a == position {
            g.outgoing(e)
        } else if b == position {
            g.incoming(e)
        } else {
            continue;
        };
        for &(pred, _) in non_type(g, adj) {
            let s = rel.score(g, pred);
            best = Some(best.map_or(s, |b: f64| b.max(s)));
        }
    }
    best
}

/// Compatible placements, most promising first.
pub fn ordered_placements(ctx: &ExtendContext<'_>, e: NodeId, p: &StructuralQueryPattern) -> Vec<usize> {
    let mut rel = Relevance::new(ctx.question, ctx.store, ctx.config.lambda);
    let mut scored: Vec<(f64, usize)> = placement_candidates(p, e, ctx.g)
        .into_iter()
        .filter(|pl| pl.compatible)
        .map(|pl| {
            let s = if p.node_count == 1 {
                0.0
            } else {
                first_step_score(ctx, &mut rel, e, p, pl.position).unwrap_or(f64::NEG_INFINITY)
            };
            (s, pl.position)
        })
        .collect();
    scored.sort_by(|x, y| y.0.total_cmp(&x.0).then(x.1.cmp(&y.1)));
    scored.into_iter().map(|(_, pos)| pos).collect()
}

/// Tries every compatible placement in order and returns the first
/// successful grounding, or the last failure.
pub fn extend(ctx: &ExtendContext<'_>, e: NodeId, p: &StructuralQueryPattern) -> Result<QueryGraph, BuildError> {
    let mut last = BuildError::NoPlacement(p.id.to_string());
    for position in ordered_placements(ctx, e, p) {
        match extend_at(ctx, e, p, position) {
            Ok(q) => return Ok(q),
            Err(err) => {
                log::debug!("placement {position} of {} failed: {err}", p.id);
                last = err;
            }
        }
    }
    Err(last)
}

/// Pattern-free greedy expansion: up to `max_edges` argmax-relevance
/// relations pooled over every grounded position, in either direction.
pub fn expand_unguided(ctx: &ExtendContext<'_>, e: NodeId, max_edges: usize) -> Result<QueryGraph, BuildError> {
    let g = ctx.g;
    let mut rel = Relevance::new(ctx.question, ctx.store, ctx.config.lambda);
    let mut q = QueryGraph {
        nodes: vec![Slot::Constant(g.term(e).clone())],
        edges: Vec::new(),
        return_position: None,
        constraints: Vec::new(),
        witness: None,
    };
    let mut witness = vec![e];
    let mut used: HashSet<(NodeId, PredicateId, NodeId)> = HashSet::new();
    for _ in 0..max_edges {
        let mut best: Option<(f64, usize, PredicateId, bool)> = None;
        for (pos, &n) in witness.iter().enumerate() {
            for (outgoing, adj) in [(true, g.outgoing(n)), (false, g.incoming(n))] {
                for &(pred, far) in non_type(g, adj) {
                    let t = if outgoing { (n, pred, far) } else { (far, pred, n) };
                    if used.contains(&t) {
                        continue;
                    }
                    let s = rel.score(g, pred);
                    let better = match best {
                        None => true,
                        Some((bs, bp, bpred, _)) => {
                            s > bs || (s == bs && (g.predicate_iri(pred), pos) < (g.predicate_iri(bpred), bp))
                        }
                    };
                    if better {
                        best = Some((s, pos, pred, outgoing));
                    }
                }
            }
        }
        let Some((_, pos, pred, outgoing)) = best else { break };
        let n = witness[pos];
        let adj = if outgoing { g.outgoing(n) } else { g.incoming(n) };
        let fars: Vec<NodeId> = adj.iter().filter(|&&(p, _)| p == pred).map(|&(_, f)| f).collect();
        for &f in &fars {
            used.insert(if outgoing { (n, pred, f) } else { (f, pred, n) });
        }
        let named = most_prominent(g, fars.iter().copied().filter(|&f| mentioned(g, f, ctx.mentions, ctx.config.mention_distance)));
        let new_pos = q.nodes.len();
        match named {
            Some(f) => {
                q.nodes.push(Slot::Constant(g.term(f).clone()));
                witness.push(f);
            }
            None => {
                q.nodes.push(Slot::Variable(format!("v{new_pos}")));
                witness.push(most_prominent(g, fars).expect("relation has an endpoint"));
            }
        }
        let (from, to) = if outgoing { (pos, new_pos) } else { (new_pos, pos) };
        q.edges.push(QueryEdge {
            from,
            to,
            predicate: Some(g.predicate_iri(pred).to_string()),
        });
    }
    let first = q.variable_positions().next();
    q.return_position = first;
    if q.return_position.is_none() {
        return Err(BuildError::NoVariable);
    }
    q.witness = Some(witness);
    Ok(q)
}

/// One lexicon rule; `keyword` may span several words.
#[derive(Debug, Clone, PartialEq)]
pub struct LexiconEntry {
    pub keyword: Vec<String>,
    pub rule: LexiconRule,
}

#[derive(Debug, Clone, PartialEq)]
pub enum LexiconRule {
    Ordinal(SortDirection, usize),
    Aggregation,
    /// Followed by a number.
    Comparative(CompareOp),
    /// Noun naming an answer class.
    AnswerType(String),
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct ConstraintLexicon {
    pub entries: Vec<LexiconEntry>,
}

const ORDINALS: &[(&str, SortDirection)] = &[
    ("highest", SortDirection::Desc),
    ("tallest", SortDirection::Desc),
    ("largest", SortDirection::Desc),
    ("biggest", SortDirection::Desc),
    ("longest", SortDirection::Desc),
    ("greatest", SortDirection::Desc),
    ("deepest", SortDirection::Desc),
    ("most", SortDirection::Desc),
    ("latest", SortDirection::Desc),
    ("last", SortDirection::Desc),
    ("youngest", SortDirection::Desc),
    ("newest", SortDirection::Desc),
    ("lowest", SortDirection::Asc),
    ("smallest", SortDirection::Asc),
    ("shortest", SortDirection::Asc),
    ("least", SortDirection::Asc),
    ("fewest", SortDirection::Asc),
    ("first", SortDirection::Asc),
    ("earliest", SortDirection::Asc),
    ("oldest", SortDirection::Asc),
];

const COMPARATIVES: &[(&str, CompareOp)] = &[
    ("more than", CompareOp::Gt),
    ("greater than", CompareOp::Gt),
    ("larger than", CompareOp::Gt),
    ("bigger than", CompareOp::Gt),
    ("higher than", CompareOp::Gt),
    ("taller than", CompareOp::Gt),
    ("longer than", CompareOp::Gt),
    ("over", CompareOp::Gt),
    ("less than", CompareOp::Lt),
    ("fewer than", CompareOp::Lt),
    ("smaller than", CompareOp::Lt),
    ("lower than", CompareOp::Lt),
    ("shorter than", CompareOp::Lt),
    ("under", CompareOp::Lt),
    ("at least", CompareOp::Ge),
    ("at most", CompareOp::Le),
];

impl ConstraintLexicon {
    pub fn builtin() -> Self {
        let words = |k: &str| k.split(' ').map(str::to_string).collect::<Vec<_>>();
        let mut entries = vec![
            LexiconEntry {
                keyword: words("how many"),
                rule: LexiconRule::Aggregation,
            },
            LexiconEntry {
                keyword: words("number of"),
                rule: LexiconRule::Aggregation,
            },
        ];
        entries.extend(ORDINALS.iter().map(|&(k, d)| LexiconEntry {
            keyword: words(k),
            rule: LexiconRule::Ordinal(d, 1),
        }));
        entries.extend(COMPARATIVES.iter().map(|&(k, op)| LexiconEntry {
            keyword: words(k),
            rule: LexiconRule::Comparative(op),
        }));
        ConstraintLexicon { entries }
    }

    /// Adds `noun → class` rules for every class in the graph, keyed by
    /// the singular form of its label.
    pub fn with_classes(mut self, g: &KnowledgeGraph) -> Self {
        let mut classes: Vec<NodeId> = g.nodes().filter(|&n| g.is_class(n)).collect();
        classes.sort_by(|&a, &b| g.prominence_order(a, b));
        for c in classes {
            let Some(label) = g.label(c) else { continue };
            let mut keyword: Vec<String> = label.split(' ').map(str::to_string).collect();
            if let Some(last) = keyword.last_mut() {
                *last = text::singular(last);
            }
            self.entries.push(LexiconEntry {
                keyword,
                rule: LexiconRule::AnswerType(g.term(c).text.clone()),
            });
        }
        self
    }

    /// Parses `keyword\tkind\tparams` lines. Kinds: `ordinal` (`asc|desc,n`),
    /// `aggregation`, `comparative` (`lt|gt|le|ge`), `answer-type` (class IRI).
    pub fn parse(text: &str) -> Result<Self, LexiconError> {
        let mut entries = Vec::new();
        for (i, line) in text.lines().enumerate() {
            if line.trim().is_empty() || line.starts_with('#') {
                continue;
            }
            let err = |message: String| LexiconError::Parse { line: i + 1, message };
            let fields: Vec<&str> = line.split('\t').map(str::trim).collect();
            let (keyword, kind, params) = match fields.as_slice() {
                [k, kind] => (*k, *kind, ""),
                [k, kind, params] => (*k, *kind, *params),
                _ => return Err(err("expected keyword\\tkind\\tparams".into())),
            };
            let keyword = text::words(keyword);
            if keyword.is_empty() {
                return Err(err("empty keyword".into()));
            }
            let rule = match kind {
                "aggregation" => LexiconRule::Aggregation,
                "ordinal" => {
                    let (dir, limit) = params.split_once(',').unwrap_or((params, "1"));
                    let dir = match dir.trim() {
                        "asc" => SortDirection::Asc,
                        "desc" => SortDirection::Desc,
                        other => return Err(err(format!("bad direction {other:?}"))),
                    };
                    let limit = limit.trim().parse().map_err(|_| err(format!("bad limit {limit:?}")))?;
                    LexiconRule::Ordinal(dir, limit)
                }
                "comparative" => LexiconRule::Comparative(match params {
                    "lt" | "<" => CompareOp::Lt,
                    "gt" | ">" => CompareOp::Gt,
                    "le" | "<=" => CompareOp::Le,
                    "ge" | ">=" => CompareOp::Ge,
                    other => return Err(err(format!("bad operator {other:?}"))),
                }),
                "answer-type" => {
                    if params.is_empty() {
                        return Err(err("answer-type needs a class IRI".into()));
                    }
                    LexiconRule::AnswerType(params.trim_start_matches('<').trim_end_matches('>').to_string())
                }
                other => return Err(err(format!("unknown kind {other:?}"))),
            };
            entries.push(LexiconEntry { keyword, rule });
        }
        Ok(ConstraintLexicon { entries })
    }

    pub fn extend(&mut self, other: ConstraintLexicon) {
        self.entries.extend(other.entries);
    }
}

pub fn load_lexicon(path: &Path) -> Result<ConstraintLexicon, LexiconError> {
    let text = std::fs::read_to_string(path).map_err(|source| LexiconError::Io {
        path: path.to_path_buf(),
        source,
    })?;
    ConstraintLexicon::parse(&text)
}

fn matches_at(words: &[String], at: usize, keyword: &[String]) -> bool {
    words.len() >= at + keyword.len() && words[at..at + keyword.len()] == *keyword
}

fn parse_number(word: &str) -> Option<f64> {
    numeric_value(&crate::kg::Term::literal(word.replace(',', ""), None))
}

/// Words after which a class noun names the expected answer type.
const TYPE_CUES: &[&str] = &["which", "what", "many", "all", "every"];

/// Rule-based constraint detection against a lexicon.
pub fn detect_constraints_with(q: &str, lexicon: &ConstraintLexicon) -> Vec<Constraint> {
    let words: Vec<String> = text::words(q);
    let singular: Vec<String> = words.iter().map(|w| text::singular(w)).collect();
    let mut out: Vec<Constraint> = Vec::new();
    let push = |c: Constraint, out: &mut Vec<Constraint>| {
        if !out.iter().any(|o| o.kind == c.kind) {
            out.push(c);
        }
    };
    let superlative_at = |i: usize| {
        lexicon
            .entries
            .iter()
            .any(|e| matches!(e.rule, LexiconRule::Ordinal(..)) && matches_at(&words, i, &e.keyword))
    };
    for i in 0..words.len() {
        for entry in &lexicon.entries {
            let len = entry.keyword.len();
            match &entry.rule {
                LexiconRule::Aggregation if matches_at(&words, i, &entry.keyword) => {
                    push(Constraint::new(ConstraintKind::Aggregation, (i, i + len)), &mut out);
                }
                LexiconRule::Ordinal(direction, limit) if matches_at(&words, i, &entry.keyword) => {
                    push(
                        Constraint::new(
                            ConstraintKind::Ordinal {
                                direction: *direction,
                                limit: *limit,
                                attribute: None,
                            },
                            (i, i + len),
                        ),
                        &mut out,
                    );
                }
                LexiconRule::Comparative(op) if matches_at(&words, i, &entry.keyword) => {
                    if let Some(value) = words.get(i + len).and_then(|w| parse_number(w)) {
                        push(
                            Constraint::new(
                                ConstraintKind::Comparative {
                                    op: *op,
                                    value,
                                    attribute: None,
                                },
                                (i, i + len + 1),
                            ),
                            &mut out,
                        );
                    }
                }
                LexiconRule::AnswerType(class) => {
                    let cued = i > 0 && (TYPE_CUES.contains(&words[i - 1].as_str()) || superlative_at(i - 1));
                    let leading = i > 0 && i <= 2 && TYPE_CUES[..2].contains(&words[0].as_str());
                    if (cued || leading) && matches_at(&singular, i, &entry.keyword) && !out.iter().any(|c| matches!(c.kind, ConstraintKind::AnswerType { .. })) {
                        push(Constraint::new(ConstraintKind::AnswerType { class: class.clone() }, (i, i + len)), &mut out);
                    }
                }
                _ => {}
            }
        }
    }
    out.sort_by_key(|c| c.span);
    out
}

/// Detection with the built-in lexicon.
pub fn detect_constraints(q: &str) -> Vec<Constraint> {
    detect_constraints_with(q, &ConstraintLexicon::builtin())
}

/// Predicate whose numeric objects best fit the question, over `answers`.
fn resolve_attribute(q: &str, answers: &[NodeId], g: &KnowledgeGraph, store: &WordVectorStore, lambda: f64) -> Option<Option<String>> {
    if !answers.is_empty() && answers.iter().all(|&a| numeric_value(g.term(a)).is_some()) {
        return Some(None);
    }
    let mut preds: BTreeSet<PredicateId> = BTreeSet::new();
    for &a in answers {
        for &(p, o) in g.outgoing(a) {
            if numeric_value(g.term(o)).is_some() {
                preds.insert(p);
            }
        }
    }
    let mut rel = Relevance::new(q, store, lambda);
    let best = preds
        .into_iter()
        .map(|p| (rel.score(g, p), p))
        .min_by(|x, y| y.0.total_cmp(&x.0).then_with(|| g.predicate_iri(x.1).cmp(g.predicate_iri(y.1))))?;
    Some(Some(g.predicate_iri(best.1).to_string()))
}

/// Attaches constraints to a fully labeled query graph, resolving the
/// compared attribute of ordinal and comparative constraints.
pub fn augment(
    query: &QueryGraph,
    constraints: &[Constraint],
    question: &str,
    g: &KnowledgeGraph,
    store: &WordVectorStore,
    config: &BuilderConfig,
) -> Result<QueryGraph, BuildError> {
    if !query.is_fully_labeled() {
        return Err(BuildError::Unlabeled);
    }
    let mut out = query.clone();
    if constraints.is_empty() {
        return Ok(out);
    }
    let needs_attribute = constraints.iter().any(|c| {
        matches!(
            c.kind,
            ConstraintKind::Ordinal { attribute: None, .. } | ConstraintKind::Comparative { attribute: None, .. }
        )
    });
    let attribute = if needs_attribute {
        let mut bare = query.clone();
        bare.constraints.clear();
        let answers = executor::execute(&bare, g).map_err(|_| BuildError::Unlabeled)?;
        Some(resolve_attribute(question, answers.nodes(), g, store, config.lambda))
    } else {
        None
    };
    for c in constraints {
        let mut c = c.clone();
        match &mut c.kind {
            ConstraintKind::Ordinal { attribute: slot @ None, .. } | ConstraintKind::Comparative { attribute: slot @ None, .. } => {
                match attribute.clone().flatten() {
                    Some(resolved) => *slot = resolved,
                    None => return Err(BuildError::ConstraintInapplicable(c.kind.clone())),
                }
            }
            _ => {}
        }
        if !out.constraints.iter().any(|o| o.kind == c.kind) {
            out.constraints.push(c);
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::catalog::{PatternCatalog, PatternId};

    const O: &str = "http://dbpedia.org/ontology/";
    const R: &str = "http://dbpedia.org/resource/";

    fn pattern(n: usize, edges: &[(usize, usize)]) -> StructuralQueryPattern {
        StructuralQueryPattern::new(PatternId(99), n, edges.to_vec())
    }

    fn ctx<'a>(question: &'a str, g: &'a KnowledgeGraph, store: &'a WordVectorStore, config: &'a BuilderConfig, mentions: &'a [String]) -> ExtendContext<'a> {
        ExtendContext {
            question,
            g,
            store,
            config,
            mentions,
        }
    }

    #[test]
    fn relevance_boundaries() {
        let empty = WordVectorStore::default();
        assert_eq!(relation_relevance("birth", "http://x/birth", &empty, 0.0), 1.0);
        assert_eq!(relation_relevance("unknown words", "http://x/birthPlace", &empty, 1.0), 0.0);
        assert_eq!(relation_words("http://x/dateOfBirth"), ["date", "of", "birth"]);
        assert_eq!(question_terms("Who is the director of X?"), ["director", "of", "x"]);
    }

    #[test]
    fn placements_follow_directions() {
        let mut b = KnowledgeGraph::builder();
        b.iri("a", "p", "e").iri("b", "q", "e").iri("c", "r", "e");
        let g = b.build();
        let e = g.iri_id("e").unwrap();
        let chain = pattern(3, &[(0, 1), (1, 2)]);
        let got = placement_candidates(&chain, e, &g);
        assert_eq!(
            got,
            vec![
                Placement { position: 0, compatible: false },
                Placement { position: 2, compatible: true }
            ]
        );
        let single = pattern(1, &[]);
        assert_eq!(placement_candidates(&single, e, &g), vec![Placement { position: 0, compatible: true }]);
    }

    #[test]
    fn placements_are_never_intermediate() {
        let g = KnowledgeGraph::empty();
        for p in PatternCatalog::default().patterns() {
            for pl in placement_candidates(p, NodeId(0), &g) {
                assert!(p.node_count == 1 || p.degree(pl.position) == 1);
            }
        }
    }

    #[test]
    fn forced_single_edge() {
        let mut b = KnowledgeGraph::builder();
        b.iri("http://x/e", "http://x/p", "http://x/b");
        let g = b.build();
        let store = WordVectorStore::default();
        let cfg = BuilderConfig::default();
        let e = g.iri_id("http://x/e").unwrap();
        let q = extend(&ctx("What is E?", &g, &store, &cfg, &[]), e, &pattern(2, &[(0, 1)])).unwrap();
        assert_eq!(q.nodes[1], Slot::Variable("v1".into()));
        assert_eq!(q.edges[0].predicate.as_deref(), Some("http://x/p"));
        assert_eq!(q.return_position, Some(1));
        assert_eq!(q.witness, Some(vec![e, g.iri_id("http://x/b").unwrap()]));
    }

    #[test]
    fn relation_choice_by_words() {
        let mut b = KnowledgeGraph::builder();
        b.iri("http://x/e", "http://x/birthPlace", "http://x/b")
            .iri("http://x/e", "http://x/spouse", "http://x/c");
        let g = b.build();
        let store = WordVectorStore::default();
        let cfg = BuilderConfig {
            lambda: 0.0,
            ..Default::default()
        };
        let e = g.iri_id("http://x/e").unwrap();
        let q = extend(&ctx("What is the birth place of E?", &g, &store, &cfg, &[]), e, &pattern(2, &[(0, 1)])).unwrap();
        assert_eq!(q.edges[0].predicate.as_deref(), Some("http://x/birthPlace"));
    }

    fn same_birthday() -> KnowledgeGraph {
        let mut b = KnowledgeGraph::builder();
        let date = "http://www.w3.org/2001/XMLSchema#date";
        b.literal(&format!("{R}Rachel_Stevens"), &format!("{O}birthDate"), "1978-04-09", Some(date))
            .literal(&format!("{R}Lee_Ryan"), &format!("{O}birthDate"), "1978-04-09", Some(date))
            .iri(&format!("{R}Rachel_Stevens"), &format!("{O}occupation"), &format!("{R}Singer"))
            .iri(&format!("{R}Lee_Ryan"), RDF_TYPE, &format!("{O}Artist"));
        b.build()
    }

    #[test]
    fn convergent_pattern_recovered() {
        let g = same_birthday();
        let store = WordVectorStore::default();
        let cfg = BuilderConfig::default();
        let e = g.iri_id(&format!("{R}Rachel_Stevens")).unwrap();
        let convergent = pattern(3, &[(0, 1), (2, 1)]);
        let q = extend(&ctx("Which artists were born on the same date as Rachel Stevens?", &g, &store, &cfg, &["rachel stevens".into()]), e, &convergent).unwrap();
        assert_eq!(q.nodes[0], Slot::Constant(g.term(e).clone()));
        assert!(q.edges.iter().all(|e| e.predicate.as_deref() == Some(&format!("{O}birthDate")[..])));
        assert_eq!(q.return_position, Some(2));
        let answers = executor::execute(&q, &g).unwrap();
        assert!(answers.nodes().contains(&g.iri_id(&format!("{R}Lee_Ryan")).unwrap()));
    }

    #[test]
    fn dead_end_is_an_error() {
        let mut b = KnowledgeGraph::builder();
        b.iri("http://x/e", "http://x/p", "http://x/b");
        let g = b.build();
        let store = WordVectorStore::default();
        let cfg = BuilderConfig::default();
        let e = g.iri_id("http://x/e").unwrap();
        let err = extend_at(&ctx("q", &g, &store, &cfg, &[]), e, &pattern(3, &[(0, 1), (1, 2)]), 0);
        assert_eq!(err, Err(BuildError::NoRelation { position: 2 }));
    }

    #[test]
    fn single_node_needs_a_class() {
        let g = same_birthday();
        let store = WordVectorStore::default();
        let cfg = BuilderConfig::default();
        let c = ctx("Give me all artists", &g, &store, &cfg, &[]);
        let artist = g.iri_id(&format!("{O}Artist")).unwrap();
        let q = extend(&c, artist, &pattern(1, &[])).unwrap();
        assert_eq!(executor::execute(&q, &g).unwrap().nodes(), [g.iri_id(&format!("{R}Lee_Ryan")).unwrap()]);
        let lee = g.iri_id(&format!("{R}Lee_Ryan")).unwrap();
        assert_eq!(extend(&c, lee, &pattern(1, &[])), Err(BuildError::NotAClass));
    }

    #[test]
    fn constraint_rules() {
        let kinds = |q: &str| detect_constraints(q).into_iter().map(|c| c.kind).collect::<Vec<_>>();
        assert_eq!(
            kinds("What is the highest mountain in Italy?"),
            vec![ConstraintKind::Ordinal {
                direction: SortDirection::Desc,
                limit: 1,
                attribute: None
            }]
        );
        assert_eq!(kinds("How many films did Robert Zemeckis direct?"), vec![ConstraintKind::Aggregation]);
        assert!(kinds("Who directed Philadelphia?").is_empty());
        assert_eq!(
            kinds("Which mountains are higher than 4,700 metres?"),
            vec![ConstraintKind::Comparative {
                op: CompareOp::Gt,
                value: 4700.0,
                attribute: None
            }]
        );
        assert!(kinds("Who has more than one child?").is_empty());
    }

    #[test]
    fn answer_type_from_class_nouns() {
        let g = same_birthday();
        let lex = ConstraintLexicon::builtin().with_classes(&g);
        let artist = format!("{O}Artist");
        for q in ["Which artists were born with Rachel Stevens?", "How many artists are there?", "Give me all artists"] {
            let found = detect_constraints_with(q, &lex);
            assert!(found.iter().any(|c| c.kind == ConstraintKind::AnswerType { class: artist.clone() }), "{q}");
        }
        assert!(detect_constraints_with("Who is an artist?", &lex).is_empty());
    }

    #[test]
    fn lexicon_file() {
        let lex = ConstraintLexicon::parse("highest\tordinal\tdesc,1\nhow many\taggregation\nover\tcomparative\tgt\nfilm\tanswer-type\t<http://x/Film>\n").unwrap();
        assert_eq!(lex.entries.len(), 4);
        assert_eq!(lex.entries[1].keyword, ["how", "many"]);
        assert!(ConstraintLexicon::parse("x\tordinal\tup,1\n").is_err());
        assert!(ConstraintLexicon::parse("x\tweird\n").is_err());
    }

    fn mountains() -> KnowledgeGraph {
        let mut b = KnowledgeGraph::builder();
        for (m, h) in [("Everest", "8848"), ("Blanc", "4810"), ("Rosa", "4634")] {
            b.iri(&format!("{R}{m}"), &format!("{O}locatedIn"), &format!("{R}Range"))
                .literal(&format!("{R}{m}"), &format!("{O}elevation"), h, None)
                .literal(&format!("{R}{m}"), &format!("{O}prominence"), "1", None);
        }
        b.build()
    }

    #[test]
    fn augment_resolves_attribute() {
        let g = mountains();
        let store = WordVectorStore::parse("highest 1 0\nelevation 1 0\nprominence 0 1\n").unwrap();
        let cfg = BuilderConfig::default();
        let q = QueryGraph::from_edge_list(&[format!("?m|<{O}locatedIn>|<{R}Range>")]).unwrap();
        let question = "What is the highest mountain in the Range?";
        assert_eq!(augment(&q, &[], question, &g, &store, &cfg).unwrap(), q);
        let cs = detect_constraints(question);
        let aq = augment(&q, &cs, question, &g, &store, &cfg).unwrap();
        assert_eq!(
            executor::execute(&aq, &g).unwrap().nodes(),
            [g.iri_id(&format!("{R}Everest")).unwrap()]
        );
    }

    #[test]
    fn augment_rejects_non_numeric() {
        let mut b = KnowledgeGraph::builder();
        b.iri("http://x/a", "http://x/p", "http://x/b");
        let g = b.build();
        let q = QueryGraph::from_edge_list(&["?x|<http://x/p>|<http://x/b>"]).unwrap();
        let cs = detect_constraints("Which is the highest?");
        let err = augment(&q, &cs, "Which is the highest?", &g, &WordVectorStore::default(), &BuilderConfig::default());
        assert!(matches!(err, Err(BuildError::ConstraintInapplicable(_))));
    }

    #[test]
    fn unguided_expansion_uses_budget() {
        let g = same_birthday();
        let store = WordVectorStore::default();
        let cfg = BuilderConfig::default();
        let e = g.iri_id(&format!("{R}Rachel_Stevens")).unwrap();
        let q = expand_unguided(&ctx("When was Rachel Stevens born?", &g, &store, &cfg, &[]), e, 3).unwrap();
        assert!(q.edges.len() <= 3);
        assert!(executor::execute(&q, &g).unwrap().nodes().contains(&q.witness.as_ref().unwrap()[q.return_position.unwrap()]));
    }
}
