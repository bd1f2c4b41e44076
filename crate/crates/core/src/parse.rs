//! Plain-text graph format.
//!
//! One declaration per line, `#` starts a comment:
//!
//! ```text
//! node 1
//! node 2
//! edge 1 -> 2
//! edge 2 -- 3
//! ```
//!
//! Node ids are arbitrary non-negative integers; they are mapped to the
//! dense internal ids `1..=N` in ascending order. Edges referencing
//! undeclared nodes are rejected unless auto-declaration is enabled.

use std::collections::BTreeSet;
use std::fmt;

use thiserror::Error;

use crate::graph::{ChainGraph, Vertex};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ParseError {
    #[error("line {line}: expected `node <id>` or `edge <a> -- <b>` / `edge <a> -> <b>`, got `{text}`")]
    Malformed { line: usize, text: String },
    #[error("line {line}: `{token}` is not a valid node id")]
    BadNodeId { line: usize, token: String },
    #[error("line {line}: node {id} declared twice")]
    DuplicateNode { line: usize, id: u64 },
    #[error("line {line}: node {id} used in an edge but never declared")]
    UndeclaredNode { line: usize, id: u64 },
    #[error("line {line}: self-loop at node {id}")]
    SelfLoop { line: usize, id: u64 },
    #[error("line {line}: a second edge between {a} and {b}")]
    DuplicateEdge { line: usize, a: u64, b: u64 },
}

/// A chain graph together with the original node labels. Internal vertex
/// `v` corresponds to `labels[v - 1]`; labels are sorted ascending.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LabeledGraph {
    pub labels: Vec<u64>,
    pub graph: ChainGraph,
}

impl LabeledGraph {
    /// Internal vertex id for an external label.
    pub fn vertex_of(&self, label: u64) -> Option<Vertex> {
        self.labels.binary_search(&label).ok().map(|p| p + 1)
    }

    /// External label of an internal vertex id.
    pub fn label_of(&self, v: Vertex) -> u64 {
        self.labels[v - 1]
    }

    /// Graphs whose labels are already `1..=N` keep their ids unchanged.
    pub fn is_identity_labeled(&self) -> bool {
        self.labels.iter().enumerate().all(|(k, &l)| l == (k + 1) as u64)
    }
}

impl fmt::Display for LabeledGraph {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", to_text(self))
    }
}

enum RawEdge {
    Undirected(u64, u64),
    Directed(u64, u64),
}

/// Parse the text format. With `auto_declare`, nodes first seen in an edge
/// are declared implicitly.
pub fn parse_graph(text: &str, auto_declare: bool) -> Result<LabeledGraph, ParseError> {
    let mut nodes: BTreeSet<u64> = BTreeSet::new();
    let mut pairs: BTreeSet<(u64, u64)> = BTreeSet::new();
    let mut edges: Vec<RawEdge> = Vec::new();

    for (idx, raw_line) in text.lines().enumerate() {
        let line = idx + 1;
        let content = raw_line.split('#').next().unwrap_or("").trim();
        if content.is_empty() {
            continue;
        }
        let tokens: Vec<&str> = content.split_whitespace().collect();
        let parse_id = |token: &str| -> Result<u64, ParseError> {
            token.parse().map_err(|_| ParseError::BadNodeId { line, token: token.to_string() })
        };
        match tokens.as_slice() {
            ["node", id] => {
                let id = parse_id(id)?;
                if !nodes.insert(id) {
                    return Err(ParseError::DuplicateNode { line, id });
                }
            }
            ["edge", a, kind @ ("--" | "->"), b] => {
                let a = parse_id(a)?;
                let b = parse_id(b)?;
                if a == b {
                    return Err(ParseError::SelfLoop { line, id: a });
                }
                for id in [a, b] {
                    if !nodes.contains(&id) {
                        if auto_declare {
                            nodes.insert(id);
                        } else {
                            return Err(ParseError::UndeclaredNode { line, id });
                        }
                    }
                }
                if !pairs.insert((a.min(b), a.max(b))) {
                    return Err(ParseError::DuplicateEdge { line, a: a.min(b), b: a.max(b) });
                }
                edges.push(match *kind {
                    "--" => RawEdge::Undirected(a, b),
                    _ => RawEdge::Directed(a, b),
                });
            }
            _ => {
                return Err(ParseError::Malformed { line, text: content.to_string() });
            }
        }
    }

    let labels: Vec<u64> = nodes.into_iter().collect();
    let dense = |id: u64| -> Vertex { labels.binary_search(&id).expect("declared above") + 1 };
    let mut und: Vec<(Vertex, Vertex)> = Vec::new();
    let mut dir: Vec<(Vertex, Vertex)> = Vec::new();
    for edge in &edges {
        match *edge {
            RawEdge::Undirected(a, b) => und.push((dense(a), dense(b))),
            RawEdge::Directed(t, h) => dir.push((dense(t), dense(h))),
        }
    }
    let graph = ChainGraph::new(labels.len(), und, dir).expect("dense ids by construction");
    Ok(LabeledGraph { labels, graph })
}

/// Render a graph back into the text format.
pub fn to_text(lg: &LabeledGraph) -> String {
    let mut out = String::new();
    for &label in &lg.labels {
        out.push_str(&format!("node {label}\n"));
    }
    for (a, b) in lg.graph.undirected_edges() {
        out.push_str(&format!("edge {} -- {}\n", lg.label_of(a), lg.label_of(b)));
    }
    for (t, h) in lg.graph.directed_edges() {
        out.push_str(&format!("edge {} -> {}\n", lg.label_of(t), lg.label_of(h)));
    }
    out
}
