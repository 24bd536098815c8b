#![allow(dead_code)]

use std::collections::HashMap;
use std::path::PathBuf;

use rand::seq::SliceRandom;
use rand::Rng;

use sqpqa::catalog::StructuralQueryPattern;
use sqpqa::harness::{self, Resources, Settings};
use sqpqa::kg::{KnowledgeGraph, NodeId, Term, RDF_TYPE};
use sqpqa::query_graph::{CompareOp, Constraint, ConstraintKind, QueryEdge, QueryGraph, Slot, SortDirection};

pub const NS: &str = "http://t/";
pub const XSD_INT: &str = "http://www.w3.org/2001/XMLSchema#integer";

pub fn fixture(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("fixtures").join(name)
}

pub fn fixture_settings() -> Settings {
    Settings {
        kg: Some(fixture("mini_kg.nt")),
        labels: Some(fixture("labels.tsv")),
        vectors: Some(fixture("vectors.txt")),
        evidence: Some(fixture("evidence.tsv")),
        train_data: Some(fixture("mini_train.json")),
        ..Settings::default()
    }
}

pub fn fixture_resources() -> Resources {
    harness::load_resources(&fixture_settings()).expect("fixture resources load")
}

pub fn node(i: usize) -> String {
    format!("{NS}n{i}")
}

pub fn pred(i: usize) -> String {
    format!("{NS}p{i}")
}

pub fn class(i: usize) -> String {
    format!("{NS}C{i}")
}

/// A random graph over at most `max_nodes` entity nodes plus some typed
/// and literal extras.
pub fn random_kg<R: Rng>(rng: &mut R, max_nodes: usize, density: f64) -> KnowledgeGraph {
    let n = rng.gen_range(2..=max_nodes.max(2));
    let preds = rng.gen_range(1..=4);
    let triples = ((n as f64) * density).ceil() as usize + rng.gen_range(0..=n);
    let mut b = KnowledgeGraph::builder();
    for _ in 0..triples {
        let s = rng.gen_range(0..n);
        let o = rng.gen_range(0..n);
        b.iri(&node(s), &pred(rng.gen_range(0..preds)), &node(o));
    }
    for i in 0..n {
        if rng.gen_bool(0.3) {
            b.iri(&node(i), RDF_TYPE, &class(rng.gen_range(0..2)));
        }
        if rng.gen_bool(0.2) {
            let v = rng.gen_range(0..5).to_string();
            b.literal(&node(i), &format!("{NS}value"), &v, Some(XSD_INT));
        }
    }
    b.build()
}

/// Random labeling of `pattern` against `g`, with optional constraints.
pub fn random_query<R: Rng>(rng: &mut R, g: &KnowledgeGraph, pattern: &StructuralQueryPattern) -> QueryGraph {
    let nodes: Vec<NodeId> = g.nodes().collect();
    let preds: Vec<String> = (0..g.predicate_count())
        .map(|i| g.predicate_iri(sqpqa::kg::PredicateId(i as u32)).to_string())
        .collect();
    let mut slots: Vec<Slot> = (0..pattern.node_count)
        .map(|i| {
            if rng.gen_bool(0.3) && !nodes.is_empty() {
                Slot::Constant(g.term(*nodes.choose(rng).unwrap()).clone())
            } else {
                Slot::Variable(format!("v{i}"))
            }
        })
        .collect();
    let ret = rng.gen_range(0..pattern.node_count);
    slots[ret] = Slot::Variable(format!("v{ret}"));
    // a literal constant as subject is malformed; keep subjects non-literal
    for &(a, _) in &pattern.edges {
        if matches!(&slots[a], Slot::Constant(t) if t.is_literal()) {
            slots[a] = Slot::Variable(format!("v{a}"));
        }
    }
    let edges = pattern
        .edges
        .iter()
        .map(|&(from, to)| QueryEdge {
            from,
            to,
            predicate: Some(if rng.gen_bool(0.05) || preds.is_empty() {
                format!("{NS}missing")
            } else {
                preds.choose(rng).unwrap().clone()
            }),
        })
        .collect();
    let mut constraints = Vec::new();
    if rng.gen_bool(0.15) {
        constraints.push(Constraint::new(ConstraintKind::AnswerType { class: class(rng.gen_range(0..2)) }, (0, 0)));
    }
    if rng.gen_bool(0.1) {
        let attribute = rng.gen_bool(0.7).then(|| format!("{NS}value"));
        constraints.push(Constraint::new(
            ConstraintKind::Comparative {
                op: *[CompareOp::Gt, CompareOp::Lt, CompareOp::Ge, CompareOp::Le]
                    .choose(rng)
                    .unwrap(),
                value: rng.gen_range(0..5) as f64,
                attribute,
            },
            (0, 0),
        ));
    }
    if rng.gen_bool(0.1) {
        let attribute = rng.gen_bool(0.7).then(|| format!("{NS}value"));
        constraints.push(Constraint::new(
            ConstraintKind::Ordinal {
                direction: if rng.gen_bool(0.5) { SortDirection::Asc } else { SortDirection::Desc },
                limit: rng.gen_range(1..=3),
                attribute,
            },
            (0, 0),
        ));
    }
    if rng.gen_bool(0.1) {
        constraints.push(Constraint::new(ConstraintKind::Aggregation, (0, 0)));
    }
    QueryGraph {
        nodes: slots,
        edges,
        return_position: Some(ret),
        constraints,
        witness: None,
    }
}

/// Memoized recursive edit distance over chars.
pub fn levenshtein_oracle(a: &str, b: &str) -> usize {
    fn go(a: &[char], b: &[char], memo: &mut HashMap<(usize, usize), usize>) -> usize {
        if a.is_empty() {
            return b.len();
        }
        if b.is_empty() {
            return a.len();
        }
        if let Some(&d) = memo.get(&(a.len(), b.len())) {
            return d;
        }
        let sub = go(&a[1..], &b[1..], memo) + usize::from(a[0] != b[0]);
        let del = go(&a[1..], b, memo) + 1;
        let ins = go(a, &b[1..], memo) + 1;
        let d = sub.min(del).min(ins);
        memo.insert((a.len(), b.len()), d);
        d
    }
    let a: Vec<char> = a.chars().collect();
    let b: Vec<char> = b.chars().collect();
    go(&a, &b, &mut HashMap::new())
}

pub fn random_word<R: Rng>(rng: &mut R, alphabet: &[char], max_len: usize) -> String {
    let n = rng.gen_range(0..=max_len);
    (0..n).map(|_| *alphabet.choose(rng).unwrap()).collect()
}

pub fn cosine_oracle(a: &[f64], b: &[f64]) -> f64 {
    let mut dot = 0.0;
    let mut na = 0.0;
    let mut nb = 0.0;
    for i in 0..a.len() {
        dot += a[i] * b[i];
        na += a[i] * a[i];
        nb += b[i] * b[i];
    }
    if na == 0.0 || nb == 0.0 {
        0.0
    } else {
        dot / (na.sqrt() * nb.sqrt())
    }
}

pub fn iri_term(s: &str) -> Term {
    Term::iri(s)
}
