//! Query-graph evaluation by backtracking search, plus an exhaustive twin
//! used as a test oracle.

use std::collections::BTreeSet;

use chrono::NaiveDate;
use thiserror::Error;

use crate::kg::{KnowledgeGraph, NodeId, PredicateId, Term};
use crate::query_graph::{ConstraintKind, QueryGraph, Slot, SortDirection};

#[derive(Debug, Error, PartialEq, Eq)]
pub enum ExecError {
    #[error("position {0} is unlabeled")]
    UnlabeledNode(usize),
    #[error("edge {0} has no predicate")]
    UnlabeledEdge(usize),
    #[error("query graph has no return position")]
    NoReturn,
}

/// Variable binding semantics.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Semantics {
    /// Distinct positions may bind the same node.
    #[default]
    Homomorphic,
    /// Distinct positions bind distinct nodes.
    Injective,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum AnswerSet {
    /// Distinct answers in ascending id order, or in rank order after an
    /// ordinal constraint.
    Nodes(Vec<NodeId>),
    Count(usize),
}

impl AnswerSet {
    pub fn is_empty(&self) -> bool {
        matches!(self, AnswerSet::Nodes(n) if n.is_empty())
    }

    pub fn nodes(&self) -> &[NodeId] {
        match self {
            AnswerSet::Nodes(n) => n,
            AnswerSet::Count(_) => &[],
        }
    }

    /// Answers as strings: term text for nodes, the decimal count otherwise.
    pub fn to_strings(&self, g: &KnowledgeGraph) -> BTreeSet<String> {
        match self {
            AnswerSet::Nodes(n) => n.iter().map(|&n| g.term(n).text.clone()).collect(),
            AnswerSet::Count(c) => BTreeSet::from([c.to_string()]),
        }
    }
}

/// Numeric reading of a literal: a plain number, or a date as days since
/// the Unix epoch.
pub fn numeric_value(term: &Term) -> Option<f64> {
    if !term.is_literal() {
        return None;
    }
    let text = term.text.trim();
    if let Ok(v) = text.parse::<f64>() {
        return v.is_finite().then_some(v);
    }
    let date = NaiveDate::parse_from_str(text, "%Y-%m-%d").ok()?;
    let epoch = NaiveDate::from_ymd_opt(1970, 1, 1)?;
    Some((date - epoch).num_days() as f64)
}

/// Value compared by ordinal and comparative constraints: the node itself
/// when `attribute` is `None`, else the largest numeric object of that
/// predicate.
pub fn attribute_value(g: &KnowledgeGraph, n: NodeId, attribute: Option<&str>) -> Option<f64> {
    match attribute {
        None => numeric_value(g.term(n)),
        Some(iri) => {
            let p = g.predicate_id(iri)?;
            g.outgoing(n)
                .iter()
                .filter(|&&(q, _)| q == p)
                .filter_map(|&(_, o)| numeric_value(g.term(o)))
                .reduce(f64::max)
        }
    }
}

/// Query graph resolved against the graph's ids.
struct Compiled {
    /// `Some(id)` for constants; `None` for variables.
    fixed: Vec<Option<NodeId>>,
    edges: Vec<(usize, PredicateId, usize)>,
    ret: usize,
}

/// `Ok(None)` when some constant or predicate is absent from the graph, so
/// the answer is necessarily empty.
fn compile(q: &QueryGraph, g: &KnowledgeGraph) -> Result<Option<Compiled>, ExecError> {
    for (i, s) in q.nodes.iter().enumerate() {
        if *s == Slot::Unlabeled {
            return Err(ExecError::UnlabeledNode(i));
        }
    }
    for (i, e) in q.edges.iter().enumerate() {
        if e.predicate.is_none() {
            return Err(ExecError::UnlabeledEdge(i));
        }
    }
    let ret = q.return_position.ok_or(ExecError::NoReturn)?;
    if ret >= q.nodes.len() {
        return Err(ExecError::NoReturn);
    }
    let mut fixed = Vec::with_capacity(q.nodes.len());
    for s in &q.nodes {
        match s {
            Slot::Constant(t) => match g.node_id(t) {
                Some(id) => fixed.push(Some(id)),
                None => return Ok(None),
            },
            _ => fixed.push(None),
        }
    }
    let mut edges = Vec::with_capacity(q.edges.len());
    for e in &q.edges {
        match g.predicate_id(e.predicate.as_deref().unwrap_or_default()) {
            Some(p) => edges.push((e.from, p, e.to)),
            None => return Ok(None),
        }
    }
    Ok(Some(Compiled { fixed, edges, ret }))
}

fn injective_ok(assign: &[Option<NodeId>]) -> bool {
    let bound: Vec<NodeId> = assign.iter().flatten().copied().collect();
    let distinct: BTreeSet<NodeId> = bound.iter().copied().collect();
    distinct.len() == bound.len()
}

/// Nodes position `v` may take given the already bound neighbours; `None`
/// when no edge links `v` to a bound position.
fn domain(c: &Compiled, g: &KnowledgeGraph, assign: &[Option<NodeId>], v: usize) -> Option<Vec<NodeId>> {
    let mut dom: Option<Vec<NodeId>> = None;
    for &(s, p, o) in &c.edges {
        let next: Vec<NodeId> = if s == v && o != v {
            let Some(b) = assign[o] else { continue };
            g.incoming(b).iter().filter(|&&(q, _)| q == p).map(|&(_, n)| n).collect()
        } else if o == v && s != v {
            let Some(b) = assign[s] else { continue };
            g.outgoing(b).iter().filter(|&&(q, _)| q == p).map(|&(_, n)| n).collect()
        } else {
            continue;
        };
        dom = Some(match dom {
            None => next,
            Some(d) => d.into_iter().filter(|n| next.contains(n)).collect(),
        });
    }
    dom.map(|mut d| {
        d.sort_unstable();
        d.dedup();
        d
    })
}

fn consistent(c: &Compiled, g: &KnowledgeGraph, assign: &[Option<NodeId>]) -> bool {
    c.edges.iter().all(|&(s, p, o)| match (assign[s], assign[o]) {
        (Some(a), Some(b)) => g.contains(a, p, b),
        _ => true,
    })
}

fn search(
    c: &Compiled,
    g: &KnowledgeGraph,
    semantics: Semantics,
    assign: &mut Vec<Option<NodeId>>,
    out: &mut BTreeSet<NodeId>,
) {
    let open: Vec<usize> = (0..assign.len()).filter(|&i| assign[i].is_none()).collect();
    if open.is_empty() {
        if let Some(n) = assign[c.ret] {
            out.insert(n);
        }
        return;
    }
    // most constrained first; unconstrained positions range over all nodes
    let (v, dom) = open
        .iter()
        .map(|&v| (v, domain(c, g, assign, v)))
        .min_by_key(|(v, d)| (d.as_ref().map_or(usize::MAX, Vec::len), *v))
        .expect("open positions");
    let dom = dom.unwrap_or_else(|| g.nodes().collect());
    for n in dom {
        assign[v] = Some(n);
        if consistent(c, g, assign) && (semantics == Semantics::Homomorphic || injective_ok(assign)) {
            search(c, g, semantics, assign, out);
        }
    }
    assign[v] = None;
}

fn apply_constraints(q: &QueryGraph, g: &KnowledgeGraph, answers: BTreeSet<NodeId>) -> AnswerSet {
    let mut answers: Vec<NodeId> = answers.into_iter().collect();
    let kinds = |pred: fn(&ConstraintKind) -> bool| q.constraints.iter().map(|c| &c.kind).filter(move |k| pred(k));

    for k in kinds(|k| matches!(k, ConstraintKind::Comparative { .. })) {
        if let ConstraintKind::Comparative { op, value, attribute } = k {
            answers.retain(|&a| attribute_value(g, a, attribute.as_deref()).is_some_and(|v| op.holds(v, *value)));
        }
    }
    for k in kinds(|k| matches!(k, ConstraintKind::AnswerType { .. })) {
        if let ConstraintKind::AnswerType { class } = k {
            match g.iri_id(class) {
                Some(cls) => answers.retain(|&a| g.has_type(a, cls)),
                None => answers.clear(),
            }
        }
    }
    for k in kinds(|k| matches!(k, ConstraintKind::Ordinal { .. })) {
        if let ConstraintKind::Ordinal { direction, limit, attribute } = k {
            let mut valued: Vec<(f64, NodeId)> = answers
                .iter()
                .filter_map(|&a| attribute_value(g, a, attribute.as_deref()).map(|v| (v, a)))
                .collect();
            valued.sort_by(|x, y| {
                let ord = x.0.total_cmp(&y.0);
                let ord = if *direction == SortDirection::Desc { ord.reverse() } else { ord };
                ord.then_with(|| g.term(x.1).text.cmp(&g.term(y.1).text))
            });
            valued.truncate(*limit);
            answers = valued.into_iter().map(|(_, a)| a).collect();
        }
    }
    if q.constraints.iter().any(|c| c.kind == ConstraintKind::Aggregation) {
        return AnswerSet::Count(answers.len());
    }
    AnswerSet::Nodes(answers)
}

pub fn execute(q: &QueryGraph, g: &KnowledgeGraph) -> Result<AnswerSet, ExecError> {
    execute_with(q, g, Semantics::default())
}

pub fn execute_with(q: &QueryGraph, g: &KnowledgeGraph, semantics: Semantics) -> Result<AnswerSet, ExecError> {
    let mut found = BTreeSet::new();
    if let Some(c) = compile(q, g)? {
        let mut assign = c.fixed.clone();
        if consistent(&c, g, &assign) && (semantics == Semantics::Homomorphic || injective_ok(&assign)) {
            search(&c, g, semantics, &mut assign, &mut found);
        }
    }
    Ok(apply_constraints(q, g, found))
}

pub fn brute_force_execute(q: &QueryGraph, g: &KnowledgeGraph) -> Result<AnswerSet, ExecError> {
    brute_force_execute_with(q, g, Semantics::default())
}

/// Tries every assignment of graph nodes to the variables.
pub fn brute_force_execute_with(
    q: &QueryGraph,
    g: &KnowledgeGraph,
    semantics: Semantics,
) -> Result<AnswerSet, ExecError> {
    let mut found = BTreeSet::new();
    if let Some(c) = compile(q, g)? {
        let vars: Vec<usize> = (0..c.fixed.len()).filter(|&i| c.fixed[i].is_none()).collect();
        let all: Vec<NodeId> = g.nodes().collect();
        let mut digits = vec![0usize; vars.len()];
        if !all.is_empty() || vars.is_empty() {
            loop {
                let mut assign = c.fixed.clone();
                for (&v, &d) in vars.iter().zip(&digits) {
                    assign[v] = Some(all[d]);
                }
                let ok = c
                    .edges
                    .iter()
                    .all(|&(s, p, o)| g.contains(assign[s].unwrap(), p, assign[o].unwrap()));
                if ok && (semantics == Semantics::Homomorphic || injective_ok(&assign)) {
                    found.insert(assign[c.ret].unwrap());
                }
                // odometer increment
                let mut i = 0;
                while i < digits.len() {
                    digits[i] += 1;
                    if digits[i] < all.len() {
                        break;
                    }
                    digits[i] = 0;
                    i += 1;
                }
                if i == digits.len() {
                    break;
                }
            }
        }
    }
    Ok(apply_constraints(q, g, found))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::query_graph::{CompareOp, Constraint};

    fn fan_in() -> KnowledgeGraph {
        let mut b = KnowledgeGraph::builder();
        b.iri("A", "p", "B").iri("C", "p", "B").iri("C", "q", "D");
        b.build()
    }

    fn ids(g: &KnowledgeGraph, names: &[&str]) -> Vec<NodeId> {
        let mut v: Vec<NodeId> = names.iter().map(|n| g.iri_id(n).unwrap()).collect();
        v.sort();
        v
    }

    fn both(q: &QueryGraph, g: &KnowledgeGraph) -> AnswerSet {
        let a = execute(q, g).unwrap();
        assert_eq!(a, brute_force_execute(q, g).unwrap());
        a
    }

    #[test]
    fn two_subject_fan_in() {
        let g = fan_in();
        let q = QueryGraph::from_edge_list(&["?x|<p>|<B>"]).unwrap();
        assert_eq!(both(&q, &g), AnswerSet::Nodes(ids(&g, &["A", "C"])));
    }

    #[test]
    fn absent_constant_or_predicate_is_empty() {
        let g = fan_in();
        for q in ["?x|<p>|<Z>", "?x|<zz>|<B>", "<A>|<q>|?x"] {
            let q = QueryGraph::from_edge_list(&[q]).unwrap();
            assert!(both(&q, &g).is_empty());
        }
    }

    #[test]
    fn unlabeled_inputs_are_rejected() {
        let g = fan_in();
        let q = QueryGraph::skeleton(2, &[(0, 1)]);
        assert_eq!(execute(&q, &g), Err(ExecError::UnlabeledNode(0)));
        let mut q = QueryGraph::from_edge_list(&["?x|<p>|<B>"]).unwrap();
        q.edges[0].predicate = None;
        assert_eq!(execute(&q, &g), Err(ExecError::UnlabeledEdge(0)));
    }

    #[test]
    fn type_constrained_single_variable() {
        let mut b = KnowledgeGraph::builder();
        b.iri("F1", crate::kg::RDF_TYPE, "Film")
            .iri("F2", crate::kg::RDF_TYPE, "Film")
            .iri("P", crate::kg::RDF_TYPE, "Person");
        let g = b.build();
        let q = QueryGraph {
            nodes: vec![Slot::Variable("x".into())],
            edges: vec![],
            return_position: Some(0),
            constraints: vec![Constraint::new(ConstraintKind::AnswerType { class: "Film".into() }, (0, 1))],
            witness: None,
        };
        assert_eq!(both(&q, &g), AnswerSet::Nodes(ids(&g, &["F1", "F2"])));
    }

    #[test]
    fn injective_forbids_shared_bindings() {
        let mut b = KnowledgeGraph::builder();
        b.iri("A", "p", "B");
        let g = b.build();
        let q = QueryGraph::from_edge_list(&["?x|<p>|?y", "?z|<p>|?y"]).unwrap();
        assert_eq!(both(&q, &g), AnswerSet::Nodes(ids(&g, &["A"])));
        let iso = execute_with(&q, &g, Semantics::Injective).unwrap();
        assert!(iso.is_empty());
        assert_eq!(iso, brute_force_execute_with(&q, &g, Semantics::Injective).unwrap());
    }

    fn mountains() -> KnowledgeGraph {
        let mut b = KnowledgeGraph::builder();
        for (m, h) in [("Everest", "8848"), ("Blanc", "4810"), ("Rosa", "4634")] {
            b.iri(m, "type", "Mountain").literal(m, "elevation", h, None);
        }
        b.iri("Lake", "type", "Mountain");
        b.build()
    }

    fn with(kinds: Vec<ConstraintKind>) -> QueryGraph {
        let mut q = QueryGraph::from_edge_list(&["?m|<type>|<Mountain>"]).unwrap();
        q.constraints = kinds.into_iter().map(|k| Constraint::new(k, (0, 0))).collect();
        q
    }

    #[test]
    fn ordinal_picks_extreme() {
        let g = mountains();
        let q = with(vec![ConstraintKind::Ordinal {
            direction: SortDirection::Desc,
            limit: 1,
            attribute: Some("elevation".into()),
        }]);
        assert_eq!(both(&q, &g), AnswerSet::Nodes(ids(&g, &["Everest"])));
        let q = with(vec![ConstraintKind::Ordinal {
            direction: SortDirection::Asc,
            limit: 2,
            attribute: Some("elevation".into()),
        }]);
        let rosa = g.iri_id("Rosa").unwrap();
        let blanc = g.iri_id("Blanc").unwrap();
        assert_eq!(both(&q, &g), AnswerSet::Nodes(vec![rosa, blanc]));
    }

    #[test]
    fn comparative_then_count() {
        let g = mountains();
        let q = with(vec![
            ConstraintKind::Aggregation,
            ConstraintKind::Comparative {
                op: CompareOp::Gt,
                value: 4700.0,
                attribute: Some("elevation".into()),
            },
        ]);
        assert_eq!(both(&q, &g), AnswerSet::Count(2));
        let q = with(vec![ConstraintKind::Aggregation]);
        assert_eq!(both(&q, &g), AnswerSet::Count(4));
    }

    #[test]
    fn dates_are_numeric() {
        let d = Term::literal("1970-01-11", None);
        assert_eq!(numeric_value(&d), Some(10.0));
        assert_eq!(numeric_value(&Term::literal("4.5", None)), Some(4.5));
        assert_eq!(numeric_value(&Term::literal("tall", None)), None);
        assert_eq!(numeric_value(&Term::iri("4")), None);
    }
}
