// SPDX-License-Identifier: Apache-2.0

//! Whole-transaction paths and their validation.

use crate::graph::{EdgeKind, FuncId, LowLevelRevert, NodeId, NodeKind, ReachableMetrics, Tcfg};
use serde::{Deserialize, Serialize};
use std::fmt;
use thiserror::Error;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Terminal {
    Exit,
    Revert,
}

impl fmt::Display for Terminal {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Terminal::Exit => "exit",
            Terminal::Revert => "revert",
        })
    }
}

/// A node sequence from a transaction entry to the exit or revert node of
/// the same frame, together with its edge-count vector.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct WholeTxPath {
    pub nodes: Vec<NodeId>,
    /// Occurrences of each edge of the reachable subgraph, in its order.
    pub vector: Vec<u32>,
    pub terminal: Terminal,
}

impl WholeTxPath {
    /// Validates `nodes` and computes its vector over `metrics`.
    pub fn new(g: &Tcfg, nodes: Vec<NodeId>, metrics: &ReachableMetrics) -> Result<Self, PathError> {
        let terminal = validate_wtp(g, &nodes)?;
        if nodes[0] != metrics.entry {
            return Err(PathError::WrongEntry(nodes[0]));
        }
        let vector = path_vector(g, &nodes, metrics)?;
        Ok(WholeTxPath {
            nodes,
            vector,
            terminal,
        })
    }

    /// Edges traversed, in order.
    pub fn edges<'a>(&'a self, g: &'a Tcfg) -> impl Iterator<Item = usize> + 'a {
        self.nodes.windows(2).map(move |w| {
            g.find_edge(w[0], w[1])
                .expect("validated paths only step along edges")
        })
    }

    /// Compact rendering, e.g. `Entry[Dao.withdrawFunds] n2:call@L12 ...`.
    pub fn render(&self, g: &Tcfg) -> String {
        let parts: Vec<String> = self.nodes.iter().map(|&n| g.describe(n)).collect();
        parts.join(" ")
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ViolationKind {
    Empty,
    /// The first node is not a transaction entry.
    NotTransactionEntry,
    /// Consecutive nodes are not joined by an edge.
    NotAnEdge,
    /// A frame closes into a return-site that does not pair with its call.
    UnmatchedReturn,
    /// A cascading revert does not lead into the calling frame.
    UnmatchedCascade,
    /// An intra-procedural step leaves the current frame's function.
    FrameMismatch,
    /// The path continues after the entry frame closed.
    TrailingNodes,
    /// The path ends with frames still open, or not at an exit/revert.
    Unterminated,
}

#[derive(Debug, Clone, PartialEq, Eq, Error, Serialize, Deserialize)]
#[error("invalid whole-transaction path at index {index}: {kind:?}")]
pub struct Violation {
    pub index: usize,
    pub kind: ViolationKind,
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum PathError {
    #[error(transparent)]
    Invalid(#[from] Violation),
    #[error("path traverses edge {edge} outside the reachable subgraph (index {index})")]
    OutsideSubgraph { index: usize, edge: usize },
    #[error("path starts at node {0}, not at the subgraph's entry")]
    WrongEntry(NodeId),
}

/// One open call frame: the function and the call-site that opened it.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct Frame {
    pub func: FuncId,
    pub call_site: Option<NodeId>,
}

/// Applies the frame discipline to the step `u -> v` along edge kind
/// `kind`; `u` is the current node and `frames` the open frames.
pub(crate) fn apply_step(
    g: &Tcfg,
    frames: &mut Vec<Frame>,
    u: NodeId,
    v: NodeId,
    kind: EdgeKind,
) -> Result<(), ViolationKind> {
    let top = *frames.last().ok_or(ViolationKind::TrailingNodes)?;
    let (un, vn) = (g.node(u), g.node(v));
    if un.func != top.func {
        return Err(ViolationKind::FrameMismatch);
    }
    match kind {
        EdgeKind::Flow | EdgeKind::Revert => {
            if vn.func != top.func {
                return Err(ViolationKind::FrameMismatch);
            }
        }
        EdgeKind::Call => frames.push(Frame {
            func: vn.func,
            call_site: Some(u),
        }),
        EdgeKind::Return => {
            frames.pop();
            if frames.is_empty() {
                return Err(ViolationKind::TrailingNodes);
            }
            let cs = top.call_site.ok_or(ViolationKind::UnmatchedReturn)?;
            if g.return_site(cs) != Some(v) {
                return Err(ViolationKind::UnmatchedReturn);
            }
            if un.kind == NodeKind::Revert
                && !(g.functions[un.func].is_ext
                    && g.config.lowlevel_revert == LowLevelRevert::ReturnFalse)
            {
                return Err(ViolationKind::UnmatchedReturn);
            }
        }
        EdgeKind::CascadingRevert => {
            frames.pop();
            let caller = frames.last().ok_or(ViolationKind::TrailingNodes)?;
            if caller.func != vn.func {
                return Err(ViolationKind::UnmatchedCascade);
            }
        }
    }
    Ok(())
}

/// The terminal reached when `n` closes the only open frame.
pub(crate) fn closes_entry_frame(g: &Tcfg, frames: &[Frame], n: NodeId) -> Option<Terminal> {
    if frames.len() != 1 || g.node(n).func != frames[0].func {
        return None;
    }
    match g.node(n).kind {
        NodeKind::Exit => Some(Terminal::Exit),
        NodeKind::Revert => Some(Terminal::Revert),
        _ => None,
    }
}

/// Checks that `nodes` is a whole-transaction path: it starts at a
/// transaction entry, steps along edges, keeps calls, returns and
/// cascading reverts balanced, and ends exactly when the entry frame closes.
pub fn validate_wtp(g: &Tcfg, nodes: &[NodeId]) -> Result<Terminal, Violation> {
    let fail = |index, kind| Violation { index, kind };
    let first = *nodes.first().ok_or(fail(0, ViolationKind::Empty))?;
    if !g.is_transaction_entry(first) {
        return Err(fail(0, ViolationKind::NotTransactionEntry));
    }
    let mut frames = vec![Frame {
        func: g.node(first).func,
        call_site: None,
    }];
    for (i, w) in nodes.windows(2).enumerate() {
        let (u, v) = (w[0], w[1]);
        if v >= g.nodes.len() {
            return Err(fail(i + 1, ViolationKind::NotAnEdge));
        }
        if closes_entry_frame(g, &frames, u).is_some() {
            return Err(fail(i + 1, ViolationKind::TrailingNodes));
        }
        let edge = g
            .find_edge(u, v)
            .ok_or(fail(i + 1, ViolationKind::NotAnEdge))?;
        apply_step(g, &mut frames, u, v, g.edge(edge).kind).map_err(|k| fail(i + 1, k))?;
    }
    let last = nodes.len() - 1;
    closes_entry_frame(g, &frames, nodes[last]).ok_or(fail(last, ViolationKind::Unterminated))
}

/// Edge-count vector of `nodes` over the reachable edge set of `metrics`.
pub fn path_vector(
    g: &Tcfg,
    nodes: &[NodeId],
    metrics: &ReachableMetrics,
) -> Result<Vec<u32>, PathError> {
    let mut v = vec![0u32; metrics.edges.len()];
    for (i, w) in nodes.windows(2).enumerate() {
        let edge = g.find_edge(w[0], w[1]).ok_or(Violation {
            index: i + 1,
            kind: ViolationKind::NotAnEdge,
        })?;
        let slot = metrics
            .edge_index(edge)
            .ok_or(PathError::OutsideSubgraph { index: i, edge })?;
        v[slot] += 1;
    }
    Ok(v)
}
