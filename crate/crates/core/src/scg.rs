//! Source code graphs.
//!
//! Nodes are category labels, not token occurrences, so the graphs of all
//! fragments of one commit side merge by label under [`union_graphs`].
//! Edges are directed and carry a multiplicity.

use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};

use crate::patch::{split_changes, CommitPatch};
use crate::syntax::{parse_fragment, CategoryTree, Node};

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct SourceCodeGraph {
    nodes: BTreeSet<String>,
    edges: BTreeMap<(String, String), u64>,
}

impl SourceCodeGraph {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn add_node(&mut self, label: impl Into<String>) {
        self.nodes.insert(label.into());
    }

    /// Adds `multiplicity` parallel edges; endpoints are inserted as nodes.
    /// A zero multiplicity only inserts the endpoints.
    pub fn add_edge(&mut self, src: impl Into<String>, dst: impl Into<String>, multiplicity: u64) {
        let (src, dst) = (src.into(), dst.into());
        self.nodes.insert(src.clone());
        self.nodes.insert(dst.clone());
        if multiplicity > 0 {
            *self.edges.entry((src, dst)).or_insert(0) += multiplicity;
        }
    }

    pub fn nodes(&self) -> impl ExactSizeIterator<Item = &str> {
        self.nodes.iter().map(String::as_str)
    }

    /// Distinct edges in lexicographic `(src, dst)` order with multiplicities.
    pub fn edges(&self) -> impl ExactSizeIterator<Item = (&str, &str, u64)> {
        self.edges
            .iter()
            .map(|((s, d), m)| (s.as_str(), d.as_str(), *m))
    }

    pub fn node_count(&self) -> usize {
        self.nodes.len()
    }

    pub fn distinct_edge_count(&self) -> usize {
        self.edges.len()
    }

    pub fn multiplicity(&self, src: &str, dst: &str) -> u64 {
        self.edges
            .get(&(src.to_string(), dst.to_string()))
            .copied()
            .unwrap_or(0)
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    /// Integer-indexed view: nodes in sorted label order, edges as
    /// `(src, dst, multiplicity)`.
    pub fn indexed(&self) -> (Vec<&str>, Vec<(usize, usize, u64)>) {
        let labels: Vec<&str> = self.nodes().collect();
        let index: BTreeMap<&str, usize> = labels.iter().enumerate().map(|(i, l)| (*l, i)).collect();
        let edges = self
            .edges()
            .map(|(s, d, m)| (index[s], index[d], m))
            .collect();
        (labels, edges)
    }
}

pub fn tree_to_graph(tree: &CategoryTree) -> SourceCodeGraph {
    fn visit(node: &Node, g: &mut SourceCodeGraph) {
        g.add_node(node.label.as_str());
        for child in &node.children {
            g.add_edge(node.label.as_str(), child.label.as_str(), 1);
        }
        for pair in node.children.windows(2) {
            g.add_edge(pair[0].label.as_str(), pair[1].label.as_str(), 1);
        }
        for child in &node.children {
            visit(child, g);
        }
    }
    let mut g = SourceCodeGraph::new();
    visit(&tree.root, &mut g);
    g
}

pub fn union_graphs<'a>(graphs: impl IntoIterator<Item = &'a SourceCodeGraph>) -> SourceCodeGraph {
    let mut out = SourceCodeGraph::new();
    for g in graphs {
        out.nodes.extend(g.nodes.iter().cloned());
        for (k, m) in &g.edges {
            *out.edges.entry(k.clone()).or_insert(0) += m;
        }
    }
    out
}

/// The merged graph of a list of fragments.
pub fn fragments_graph<S: AsRef<str>>(fragments: &[S]) -> SourceCodeGraph {
    let graphs: Vec<SourceCodeGraph> = fragments
        .iter()
        .map(|f| tree_to_graph(&parse_fragment(f.as_ref())))
        .collect();
    union_graphs(&graphs)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum Side {
    #[serde(rename = "A")]
    Added,
    #[serde(rename = "D")]
    Deleted,
}

impl Side {
    pub fn tag(self) -> &'static str {
        match self {
            Side::Added => "A",
            Side::Deleted => "D",
        }
    }
}

/// Graphs of both sides of a commit; a side without changed lines is `None`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CommitGraphs {
    pub added: Option<SourceCodeGraph>,
    pub deleted: Option<SourceCodeGraph>,
}

pub fn commit_graphs(patch: &CommitPatch) -> CommitGraphs {
    let split = split_changes(patch);
    let side = |frags: &[String]| (!frags.is_empty()).then(|| fragments_graph(frags));
    CommitGraphs {
        added: side(&split.added),
        deleted: side(&split.deleted),
    }
}

/// One line of the graphs JSONL file.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct GraphRecord {
    pub commit_id: String,
    pub side: Side,
    pub nodes: Vec<String>,
    pub edges: Vec<(String, String, u64)>,
}

#[derive(Debug, thiserror::Error)]
pub enum GraphRecordError {
    #[error("edge {0} -> {1} has an endpoint missing from the node list")]
    DanglingEdge(String, String),
    #[error("edge {0} -> {1} has zero multiplicity")]
    ZeroMultiplicity(String, String),
}

impl GraphRecord {
    pub fn new(commit_id: &str, side: Side, g: &SourceCodeGraph) -> Self {
        GraphRecord {
            commit_id: commit_id.to_string(),
            side,
            nodes: g.nodes().map(String::from).collect(),
            edges: g
                .edges()
                .map(|(s, d, m)| (s.to_string(), d.to_string(), m))
                .collect(),
        }
    }

    pub fn to_graph(&self) -> Result<SourceCodeGraph, GraphRecordError> {
        let mut g = SourceCodeGraph::new();
        for n in &self.nodes {
            g.add_node(n.clone());
        }
        for (s, d, m) in &self.edges {
            if !g.nodes.contains(s) || !g.nodes.contains(d) {
                return Err(GraphRecordError::DanglingEdge(s.clone(), d.clone()));
            }
            if *m == 0 {
                return Err(GraphRecordError::ZeroMultiplicity(s.clone(), d.clone()));
            }
            g.add_edge(s.clone(), d.clone(), *m);
        }
        Ok(g)
    }

    pub fn to_json_line(&self) -> String {
        serde_json::to_string(self).expect("graph records always serialize")
    }
}
