//! Structural query patterns: unlabeled directed trees that sketch the
//! shape of a query graph, and the catalog that enumerates them.

use std::collections::{BTreeMap, BTreeSet, HashSet};
use std::fmt;
use std::path::{Path, PathBuf};

use itertools::Itertools;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::query_graph::{QueryGraph, Slot};

pub const DEFAULT_MAX_NODES: usize = 4;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(transparent)]
pub struct PatternId(pub u32);

impl fmt::Display for PatternId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "p{}", self.0)
    }
}

#[derive(Debug, Error)]
pub enum CatalogError {
    #[error("failed to read {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },
    #[error("pattern {id}: {reason}")]
    Invalid { id: PatternId, reason: String },
    #[error("patterns {first} and {second} are isomorphic")]
    Isomorphic { first: PatternId, second: PatternId },
    #[error("pattern id {0} used twice")]
    DuplicateId(PatternId),
    #[error("query structure has {nodes} nodes, more than the catalog limit of {max}")]
    TooLarge { nodes: usize, max: usize },
    #[error("no catalog pattern matches: {0}")]
    NoPattern(String),
}

/// An unlabeled directed tree over nodes `0..node_count`.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct StructuralQueryPattern {
    pub id: PatternId,
    pub node_count: usize,
    pub edges: Vec<(usize, usize)>,
}

type Canonical = (usize, Vec<(usize, usize)>);

/// Lexicographically smallest sorted edge list over all relabelings.
fn canonical_form(node_count: usize, edges: &[(usize, usize)]) -> Canonical {
    let best = (0..node_count)
        .permutations(node_count)
        .map(|perm| {
            let mut relabeled: Vec<_> = edges.iter().map(|&(a, b)| (perm[a], perm[b])).collect();
            relabeled.sort_unstable();
            relabeled
        })
        .min()
        .unwrap_or_default();
    (node_count, best)
}

fn enumeration_key(node_count: usize, edges: &[(usize, usize)]) -> (usize, bool, usize) {
    let out = |v: usize| edges.iter().filter(|e| e.0 == v).count();
    let inn = |v: usize| edges.iter().filter(|e| e.1 == v).count();
    let max_degree = (0..node_count).map(|v| out(v) + inn(v)).max().unwrap_or(0);
    let directed_path = (0..node_count).all(|v| out(v) <= 1 && inn(v) <= 1);
    let inner_out = (0..node_count).filter(|&v| out(v) + inn(v) >= 2).map(out).sum();
    (max_degree, !directed_path, inner_out)
}

/// Checks that `edges` form a connected directed tree with no self loops
/// or parallel edges.
fn tree_violation(node_count: usize, edges: &[(usize, usize)]) -> Option<String> {
    if node_count == 0 {
        return Some("pattern has no nodes".into());
    }
    if edges.len() + 1 != node_count {
        return Some(format!(
            "{} edges over {node_count} nodes; a tree needs {}",
            edges.len(),
            node_count - 1
        ));
    }
    let mut seen = HashSet::new();
    for &(a, b) in edges {
        if a >= node_count || b >= node_count {
            return Some(format!("edge {a}->{b} references a missing node"));
        }
        if a == b {
            return Some(format!("self loop at {a}"));
        }
        if !seen.insert((a.min(b), a.max(b))) {
            return Some(format!("parallel edges between {a} and {b}"));
        }
    }
    // n-1 distinct edges: acyclic iff connected
    let mut parent: Vec<usize> = (0..node_count).collect();
    fn find(parent: &mut [usize], x: usize) -> usize {
        let mut r = x;
        while parent[r] != r {
            r = parent[r];
        }
        parent[x] = r;
        r
    }
    for &(a, b) in edges {
        let (ra, rb) = (find(&mut parent, a), find(&mut parent, b));
        if ra == rb {
            return Some("cycle in undirected structure".into());
        }
        parent[ra] = rb;
    }
    None
}

impl StructuralQueryPattern {
    pub fn new(id: PatternId, node_count: usize, edges: Vec<(usize, usize)>) -> Self {
        StructuralQueryPattern {
            id,
            node_count,
            edges,
        }
    }

    pub fn validate(&self, max_nodes: usize) -> Result<(), CatalogError> {
        if self.node_count > max_nodes {
            return Err(CatalogError::Invalid {
                id: self.id,
                reason: format!("{} nodes exceeds the limit of {max_nodes}", self.node_count),
            });
        }
        match tree_violation(self.node_count, &self.edges) {
            Some(reason) => Err(CatalogError::Invalid { id: self.id, reason }),
            None => Ok(()),
        }
    }

    fn canonical(&self) -> Canonical {
        canonical_form(self.node_count, &self.edges)
    }

    pub fn out_degree(&self, node: usize) -> usize {
        self.edges.iter().filter(|e| e.0 == node).count()
    }

    pub fn in_degree(&self, node: usize) -> usize {
        self.edges.iter().filter(|e| e.1 == node).count()
    }

    pub fn degree(&self, node: usize) -> usize {
        self.out_degree(node) + self.in_degree(node)
    }

    /// Positions the linked entity may occupy: the tree's leaves, or the
    /// only node of a single-node pattern.
    pub fn non_intermediate_positions(&self) -> Vec<usize> {
        if self.node_count == 1 {
            return vec![0];
        }
        (0..self.node_count).filter(|&n| self.degree(n) == 1).collect()
    }

    /// Directed isomorphism; edge directions must be preserved.
    pub fn is_isomorphic(&self, other: &StructuralQueryPattern) -> bool {
        self.node_count == other.node_count
            && self.edges.len() == other.edges.len()
            && self.canonical() == other.canonical()
    }
}

impl fmt::Display for StructuralQueryPattern {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} {}", self.id.0, self.node_count)?;
        if !self.edges.is_empty() {
            let edges = self.edges.iter().map(|(a, b)| format!("{a}->{b}")).join(",");
            write!(f, " {edges}")?;
        }
        Ok(())
    }
}

/// Ordered, validated set of pairwise non-isomorphic patterns.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PatternCatalog {
    patterns: Vec<StructuralQueryPattern>,
    max_nodes: usize,
}

impl PatternCatalog {
    pub fn new(patterns: Vec<StructuralQueryPattern>, max_nodes: usize) -> Result<Self, CatalogError> {
        let mut ids = HashSet::new();
        let mut forms: BTreeMap<Canonical, PatternId> = BTreeMap::new();
        for p in &patterns {
            p.validate(max_nodes)?;
            if !ids.insert(p.id) {
                return Err(CatalogError::DuplicateId(p.id));
            }
            if let Some(&first) = forms.get(&p.canonical()) {
                return Err(CatalogError::Isomorphic {
                    first,
                    second: p.id,
                });
            }
            forms.insert(p.canonical(), p.id);
        }
        Ok(PatternCatalog {
            patterns,
            max_nodes,
        })
    }

    /// Every non-isomorphic directed tree with `1..=max_nodes` nodes. Within a
    /// node count, paths precede stars and the directed path leads; ties go
    /// to fewer outgoing edges at inner nodes. Ids follow that order.
    pub fn enumerate(max_nodes: usize) -> Self {
        let mut forms = BTreeSet::new();
        for n in 1..=max_nodes {
            let pairs: Vec<(usize, usize)> = (0..n)
                .cartesian_product(0..n)
                .filter(|(a, b)| a != b)
                .collect();
            for edges in pairs.into_iter().combinations(n - 1) {
                if tree_violation(n, &edges).is_none() {
                    forms.insert(canonical_form(n, &edges));
                }
            }
        }
        let mut forms: Vec<Canonical> = forms.into_iter().collect();
        forms.sort_by_cached_key(|(n, edges)| (*n, enumeration_key(*n, edges), (*n, edges.clone())));
        let patterns = forms
            .into_iter()
            .enumerate()
            .map(|(i, (n, edges))| StructuralQueryPattern::new(PatternId(i as u32), n, edges))
            .collect();
        PatternCatalog {
            patterns,
            max_nodes,
        }
    }

    pub fn patterns(&self) -> &[StructuralQueryPattern] {
        &self.patterns
    }

    pub fn len(&self) -> usize {
        self.patterns.len()
    }

    pub fn is_empty(&self) -> bool {
        self.patterns.is_empty()
    }

    pub fn max_nodes(&self) -> usize {
        self.max_nodes
    }

    pub fn ids(&self) -> impl Iterator<Item = PatternId> + '_ {
        self.patterns.iter().map(|p| p.id)
    }

    pub fn get(&self, id: PatternId) -> Option<&StructuralQueryPattern> {
        self.patterns.iter().find(|p| p.id == id)
    }

    pub fn contains(&self, id: PatternId) -> bool {
        self.get(id).is_some()
    }

    /// Catalog pattern isomorphic to the given structure.
    pub fn find(&self, node_count: usize, edges: &[(usize, usize)]) -> Option<PatternId> {
        let form = canonical_form(node_count, edges);
        self.patterns
            .iter()
            .find(|p| p.node_count == node_count && p.canonical() == form)
            .map(|p| p.id)
    }

    /// Parses `id node_count from->to,from->to,...` lines. Blank lines and
    /// `#` comments are skipped.
    pub fn parse(text: &str, max_nodes: usize) -> Result<Self, CatalogError> {
        let mut patterns = Vec::new();
        for (i, line) in text.lines().enumerate() {
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let err = |message: String| CatalogError::Parse {
                line: i + 1,
                message,
            };
            let fields: Vec<&str> = line.split_whitespace().collect();
            if !(2..=3).contains(&fields.len()) {
                return Err(err(format!("expected `id node_count [edges]`, found {line:?}")));
            }
            let id: u32 = fields[0]
                .parse()
                .map_err(|_| err(format!("bad pattern id {:?}", fields[0])))?;
            let node_count: usize = fields[1]
                .parse()
                .map_err(|_| err(format!("bad node count {:?}", fields[1])))?;
            let mut edges = Vec::new();
            if let Some(list) = fields.get(2) {
                for e in list.split(',').filter(|e| !e.is_empty()) {
                    let (a, b) = e
                        .split_once("->")
                        .ok_or_else(|| err(format!("bad edge {e:?}")))?;
                    let a = a.parse().map_err(|_| err(format!("bad edge {e:?}")))?;
                    let b = b.parse().map_err(|_| err(format!("bad edge {e:?}")))?;
                    edges.push((a, b));
                }
            }
            patterns.push(StructuralQueryPattern::new(PatternId(id), node_count, edges));
        }
        PatternCatalog::new(patterns, max_nodes)
    }

    pub fn to_text(&self) -> String {
        self.patterns.iter().map(|p| format!("{p}\n")).collect()
    }

    /// Derives the pattern of a labeled query graph. Type edges are dropped
    /// and the largest component holding a variable is matched, unlabeled,
    /// against the catalog.
    pub fn derive_pattern(&self, g: &QueryGraph, type_predicate: &str) -> Result<PatternId, CatalogError> {
        let (node_count, edges) = residual_structure(g, type_predicate);
        if node_count > self.max_nodes {
            return Err(CatalogError::TooLarge {
                nodes: node_count,
                max: self.max_nodes,
            });
        }
        if let Some(reason) = tree_violation(node_count, &edges) {
            return Err(CatalogError::NoPattern(reason));
        }
        self.find(node_count, &edges)
            .ok_or_else(|| CatalogError::NoPattern(format!("{node_count} nodes, edges {edges:?}")))
    }
}

impl Default for PatternCatalog {
    fn default() -> Self {
        PatternCatalog::enumerate(DEFAULT_MAX_NODES)
    }
}

/// Structure left after removing type edges, as `(node_count, edges)` over
/// renumbered positions. Also used to locate the surviving positions.
pub fn residual_positions(g: &QueryGraph, type_predicate: &str) -> (Vec<usize>, Vec<(usize, usize)>) {
    let kept_edges: Vec<(usize, usize)> = g
        .edges
        .iter()
        .filter(|e| e.predicate.as_deref() != Some(type_predicate))
        .map(|e| (e.from, e.to))
        .collect();

    let n = g.nodes.len();
    let mut component = vec![usize::MAX; n];
    let mut components: Vec<Vec<usize>> = Vec::new();
    for start in 0..n {
        if component[start] != usize::MAX {
            continue;
        }
        let id = components.len();
        let mut members = vec![start];
        component[start] = id;
        let mut i = 0;
        while i < members.len() {
            let v = members[i];
            for &(a, b) in &kept_edges {
                let other = if a == v {
                    b
                } else if b == v {
                    a
                } else {
                    continue;
                };
                if component[other] == usize::MAX {
                    component[other] = id;
                    members.push(other);
                }
            }
            i += 1;
        }
        members.sort_unstable();
        components.push(members);
    }

    let has_var = |c: &Vec<usize>| c.iter().any(|&p| g.nodes[p].is_variable());
    let has_return = |c: &Vec<usize>| g.return_position.is_some_and(|r| c.contains(&r));
    let any_var = components.iter().any(has_var);
    // largest, then holding the return variable, then earliest
    let chosen = components
        .iter()
        .filter(|c| !any_var || has_var(c))
        .max_by(|a, b| {
            a.len()
                .cmp(&b.len())
                .then(has_return(a).cmp(&has_return(b)))
                .then(b[0].cmp(&a[0]))
        })
        .cloned()
        .unwrap_or_default();

    let edges = kept_edges
        .into_iter()
        .filter(|(a, _)| chosen.contains(a))
        .map(|(a, b)| {
            (
                chosen.iter().position(|&x| x == a).unwrap(),
                chosen.iter().position(|&x| x == b).unwrap(),
            )
        })
        .collect();
    (chosen, edges)
}

fn residual_structure(g: &QueryGraph, type_predicate: &str) -> (usize, Vec<(usize, usize)>) {
    let (positions, edges) = residual_positions(g, type_predicate);
    (positions.len(), edges)
}

/// Loads and validates a catalog file.
pub fn load_catalog(path: &Path, max_nodes: usize) -> Result<PatternCatalog, CatalogError> {
    let text = std::fs::read_to_string(path).map_err(|source| CatalogError::Io {
        path: path.to_path_buf(),
        source,
    })?;
    PatternCatalog::parse(&text, max_nodes)
}

/// Type edges hanging off the residual structure, as `(position, class)`.
pub fn type_annotations<'a>(g: &'a QueryGraph, type_predicate: &str) -> Vec<(usize, &'a Slot)> {
    g.edges
        .iter()
        .filter(|e| e.predicate.as_deref() == Some(type_predicate))
        .map(|e| (e.from, &g.nodes[e.to]))
        .collect()
}
