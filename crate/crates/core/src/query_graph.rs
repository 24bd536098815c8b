//! Query graphs: labeled instances of a structural query pattern.

use std::collections::HashMap;
use std::fmt;

use thiserror::Error;

use crate::kg::{NodeId, Term};

/// Label carried by a query-graph position.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub enum Slot {
    Unlabeled,
    Variable(String),
    Constant(Term),
}

impl Slot {
    pub fn is_variable(&self) -> bool {
        matches!(self, Slot::Variable(_))
    }

    pub fn constant(&self) -> Option<&Term> {
        match self {
            Slot::Constant(t) => Some(t),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct QueryEdge {
    pub from: usize,
    pub to: usize,
    /// Predicate IRI, `None` while unlabeled.
    pub predicate: Option<String>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SortDirection {
    Asc,
    Desc,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CompareOp {
    Lt,
    Gt,
    Le,
    Ge,
}

impl CompareOp {
    pub fn holds(self, lhs: f64, rhs: f64) -> bool {
        match self {
            CompareOp::Lt => lhs < rhs,
            CompareOp::Gt => lhs > rhs,
            CompareOp::Le => lhs <= rhs,
            CompareOp::Ge => lhs >= rhs,
        }
    }

    pub fn symbol(self) -> &'static str {
        match self {
            CompareOp::Lt => "<",
            CompareOp::Gt => ">",
            CompareOp::Le => "<=",
            CompareOp::Ge => ">=",
        }
    }
}

/// The four constraint categories attached after a query graph is built.
///
/// `attribute` on ordinal and comparative constraints names the predicate
/// whose numeric or date value is compared; `None` compares the answer
/// itself. It is resolved during augmentation.
#[derive(Debug, Clone, PartialEq)]
pub enum ConstraintKind {
    AnswerType {
        class: String,
    },
    Ordinal {
        direction: SortDirection,
        limit: usize,
        attribute: Option<String>,
    },
    Aggregation,
    Comparative {
        op: CompareOp,
        value: f64,
        attribute: Option<String>,
    },
}

#[derive(Debug, Clone, PartialEq)]
pub struct Constraint {
    pub kind: ConstraintKind,
    /// Token offsets `[start, end)` of the trigger in the question.
    pub span: (usize, usize),
}

impl Constraint {
    pub fn new(kind: ConstraintKind, span: (usize, usize)) -> Self {
        Constraint { kind, span }
    }
}

/// A query graph over pattern positions `0..nodes.len()`.
#[derive(Debug, Clone, PartialEq)]
pub struct QueryGraph {
    pub nodes: Vec<Slot>,
    pub edges: Vec<QueryEdge>,
    /// Position whose bindings are projected as answers.
    pub return_position: Option<usize>,
    pub constraints: Vec<Constraint>,
    /// KG node for every position, recorded while the graph was grounded.
    pub witness: Option<Vec<NodeId>>,
}

#[derive(Debug, Error, PartialEq, Eq)]
pub enum QueryParseError {
    #[error("edge {index}: expected S|P|O, found {text:?}")]
    Shape { index: usize, text: String },
    #[error("edge {index}: bad term {text:?}")]
    Term { index: usize, text: String },
    #[error("edge {index}: predicate must be an IRI, found {text:?}")]
    Predicate { index: usize, text: String },
    #[error("literal {0:?} used as a subject")]
    LiteralSubject(String),
    #[error("query has no edges")]
    Empty,
}

impl QueryGraph {
    /// An unlabeled copy of a pattern structure.
    pub fn skeleton(node_count: usize, edges: &[(usize, usize)]) -> Self {
        QueryGraph {
            nodes: vec![Slot::Unlabeled; node_count],
            edges: edges
                .iter()
                .map(|&(from, to)| QueryEdge {
                    from,
                    to,
                    predicate: None,
                })
                .collect(),
            return_position: None,
            constraints: Vec::new(),
            witness: None,
        }
    }

    pub fn node_count(&self) -> usize {
        self.nodes.len()
    }

    pub fn structure(&self) -> Vec<(usize, usize)> {
        self.edges.iter().map(|e| (e.from, e.to)).collect()
    }

    pub fn is_fully_labeled(&self) -> bool {
        self.nodes.iter().all(|n| *n != Slot::Unlabeled)
            && self.edges.iter().all(|e| e.predicate.is_some())
    }

    pub fn variable_positions(&self) -> impl Iterator<Item = usize> + '_ {
        self.nodes
            .iter()
            .enumerate()
            .filter(|(_, s)| s.is_variable())
            .map(|(i, _)| i)
    }

    /// Parses the dataset edge-list form: one `S|P|O` string per edge,
    /// `?name` for variables, `<iri>` (or a bare IRI) for entities and
    /// `"lexical"` / `"lexical"^^<datatype>` for literals. Equal terms share
    /// a position. The return position is the first variable that appears.
    pub fn from_edge_list<S: AsRef<str>>(edges: &[S]) -> Result<Self, QueryParseError> {
        if edges.is_empty() {
            return Err(QueryParseError::Empty);
        }
        let mut positions: HashMap<Slot, usize> = HashMap::new();
        let mut nodes = Vec::new();
        let mut out = Vec::new();
        for (index, raw) in edges.iter().enumerate() {
            let raw = raw.as_ref();
            let parts: Vec<&str> = raw.split('|').map(str::trim).collect();
            let [s, p, o] = parts.as_slice() else {
                return Err(QueryParseError::Shape {
                    index,
                    text: raw.to_string(),
                });
            };
            let subject = parse_slot(s).ok_or_else(|| QueryParseError::Term {
                index,
                text: s.to_string(),
            })?;
            if let Slot::Constant(t) = &subject {
                if t.is_literal() {
                    return Err(QueryParseError::LiteralSubject(t.text.clone()));
                }
            }
            let predicate = match parse_slot(p) {
                Some(Slot::Constant(t)) if !t.is_literal() => t.text,
                _ => {
                    return Err(QueryParseError::Predicate {
                        index,
                        text: p.to_string(),
                    })
                }
            };
            let object = parse_slot(o).ok_or_else(|| QueryParseError::Term {
                index,
                text: o.to_string(),
            })?;
            let mut position = |slot: Slot| {
                *positions.entry(slot.clone()).or_insert_with(|| {
                    nodes.push(slot);
                    nodes.len() - 1
                })
            };
            let from = position(subject);
            let to = position(object);
            out.push(QueryEdge {
                from,
                to,
                predicate: Some(predicate),
            });
        }
        let return_position = nodes.iter().position(Slot::is_variable);
        Ok(QueryGraph {
            nodes,
            edges: out,
            return_position,
            constraints: Vec::new(),
            witness: None,
        })
    }
}

fn parse_slot(text: &str) -> Option<Slot> {
    let text = text.trim();
    if let Some(name) = text.strip_prefix('?') {
        return (!name.is_empty()).then(|| Slot::Variable(name.to_string()));
    }
    if let Some(inner) = text.strip_prefix('<').and_then(|t| t.strip_suffix('>')) {
        return (!inner.is_empty()).then(|| Slot::Constant(Term::iri(inner)));
    }
    if let Some(body) = text.strip_prefix('"') {
        let close = body.rfind('"')?;
        let value = &body[..close];
        let rest = &body[close + 1..];
        let datatype = if rest.is_empty() {
            None
        } else {
            let dt = rest.strip_prefix("^^")?;
            Some(dt.trim_start_matches('<').trim_end_matches('>').to_string())
        };
        return Some(Slot::Constant(Term::literal(value, datatype)));
    }
    if text.contains(':') && !text.contains(char::is_whitespace) {
        return Some(Slot::Constant(Term::iri(text)));
    }
    None
}

impl fmt::Display for Slot {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Slot::Unlabeled => write!(f, "_"),
            Slot::Variable(v) => write!(f, "?{v}"),
            Slot::Constant(t) => write!(f, "{t}"),
        }
    }
}

impl fmt::Display for QueryGraph {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let ret = self
            .return_position
            .map(|p| self.nodes[p].to_string())
            .unwrap_or_else(|| "-".into());
        write!(f, "SELECT {ret} WHERE {{")?;
        if self.edges.is_empty() {
            write!(f, " {}", self.nodes.first().map(ToString::to_string).unwrap_or_default())?;
        }
        for e in &self.edges {
            let p = e
                .predicate
                .as_deref()
                .map(|p| format!("<{p}>"))
                .unwrap_or_else(|| "_".into());
            write!(f, " {} {} {} .", self.nodes[e.from], p, self.nodes[e.to])?;
        }
        write!(f, " }}")?;
        for c in &self.constraints {
            match &c.kind {
                ConstraintKind::AnswerType { class } => write!(f, " TYPE <{class}>")?,
                ConstraintKind::Ordinal {
                    direction,
                    limit,
                    attribute,
                } => write!(
                    f,
                    " ORDER {:?} BY {} LIMIT {limit}",
                    direction,
                    attribute.as_deref().unwrap_or("value")
                )?,
                ConstraintKind::Aggregation => write!(f, " COUNT")?,
                ConstraintKind::Comparative {
                    op,
                    value,
                    attribute,
                } => write!(
                    f,
                    " FILTER {} {} {value}",
                    attribute.as_deref().unwrap_or("value"),
                    op.symbol()
                )?,
            }
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_edge_list() {
        let q = QueryGraph::from_edge_list(&[
            "<http://x/Philadelphia> | <http://x/director> | ?d",
            "?d|<http://x/birthPlace>|?p",
        ])
        .unwrap();
        assert_eq!(q.node_count(), 3);
        assert_eq!(q.structure(), vec![(0, 1), (1, 2)]);
        assert_eq!(q.return_position, Some(1));
        assert!(q.is_fully_labeled());
    }

    #[test]
    fn literal_objects_and_bare_iris() {
        let q = QueryGraph::from_edge_list(&[
            r#"dbr:Rachel_Stevens|dbo:birthDate|"1978-04-09"^^<http://www.w3.org/2001/XMLSchema#date>"#,
        ])
        .unwrap();
        let lit = q.nodes[1].constant().unwrap();
        assert!(lit.is_literal());
        assert_eq!(lit.text, "1978-04-09");
        assert_eq!(q.return_position, None);
    }

    #[test]
    fn rejects_bad_edges() {
        assert_eq!(
            QueryGraph::from_edge_list::<&str>(&[]),
            Err(QueryParseError::Empty)
        );
        assert!(matches!(
            QueryGraph::from_edge_list(&["?x|?p|<a>"]),
            Err(QueryParseError::Predicate { .. })
        ));
        assert!(matches!(
            QueryGraph::from_edge_list(&["?x <p> <a>"]),
            Err(QueryParseError::Shape { .. })
        ));
        assert!(matches!(
            QueryGraph::from_edge_list(&["\"v\"|<p>|?x"]),
            Err(QueryParseError::LiteralSubject(_))
        ));
    }

    #[test]
    fn skeleton_is_unlabeled() {
        let q = QueryGraph::skeleton(2, &[(0, 1)]);
        assert!(!q.is_fully_labeled());
        assert_eq!(q.variable_positions().count(), 0);
    }
}
