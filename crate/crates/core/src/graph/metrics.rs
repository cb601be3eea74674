// SPDX-License-Identifier: Apache-2.0

//! Reachable subgraphs and their cyclomatic numbers.

use super::{EdgeKind, FuncId, GraphError, NodeId, NodeKind, Tcfg};
use serde::{Deserialize, Serialize};
use std::collections::{BTreeSet, VecDeque};

/// The part of the graph a transaction starting at `entry` can touch.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ReachableMetrics {
    pub entry: NodeId,
    /// Reachable nodes, ascending.
    pub nodes: Vec<NodeId>,
    /// Edges with both endpoints reachable, ascending.
    pub edges: Vec<EdgeId>,
    /// Reachable nodes without an outgoing edge in the subgraph.
    pub sinks: usize,
    pub cyclomatic: usize,
}

use super::EdgeId;

impl ReachableMetrics {
    /// Position of `edge` in the reachable edge index space.
    pub fn edge_index(&self, edge: EdgeId) -> Option<usize> {
        self.edges.binary_search(&edge).ok()
    }

    pub fn contains_node(&self, n: NodeId) -> bool {
        self.nodes.binary_search(&n).is_ok()
    }
}

/// Per-function facts: whether a frame of the function can close normally
/// or by reverting.
#[derive(Debug, Clone)]
pub(crate) struct Summaries {
    pub exits: Vec<bool>,
    pub reverts: Vec<bool>,
}

/// Nodes of `f` reachable from its entry within one frame, using callee
/// summaries at call-sites, plus the functions called on the way.
fn intra_reach(g: &Tcfg, f: FuncId, s: &Summaries) -> (BTreeSet<NodeId>, BTreeSet<FuncId>) {
    let mut seen = BTreeSet::new();
    let mut called = BTreeSet::new();
    let mut queue = VecDeque::from([g.functions[f].entry]);
    seen.insert(g.functions[f].entry);
    let own_revert = g.functions[f].revert;
    while let Some(u) = queue.pop_front() {
        let mut next = Vec::new();
        match g.nodes[u].kind {
            NodeKind::Exit | NodeKind::Revert => {}
            NodeKind::CallSite => {
                let callee_entry = g.out_edges(u)
                    .iter()
                    .map(|&e| g.edge(e))
                    .find(|e| e.kind == EdgeKind::Call)
                    .map(|e| e.to);
                if let Some(entry) = callee_entry {
                    let callee = g.nodes[entry].func;
                    called.insert(callee);
                    let ret = g.return_site(u);
                    if s.exits[callee] {
                        next.extend(ret);
                    }
                    if s.reverts[callee] {
                        if let Some(r) = g.functions[callee].revert {
                            for &e in g.out_edges(r) {
                                let edge = g.edge(e);
                                let into_caller = edge.kind == EdgeKind::CascadingRevert
                                    && Some(edge.to) == own_revert;
                                let resumes = edge.kind == EdgeKind::Return && Some(edge.to) == ret;
                                if into_caller || resumes {
                                    next.push(edge.to);
                                }
                            }
                        }
                    }
                }
            }
            _ => {
                for &e in g.out_edges(u) {
                    let edge = g.edge(e);
                    if matches!(edge.kind, EdgeKind::Flow | EdgeKind::Revert) {
                        next.push(edge.to);
                    }
                }
            }
        }
        for v in next {
            if seen.insert(v) {
                queue.push_back(v);
            }
        }
    }
    (seen, called)
}

pub(crate) fn summaries(g: &Tcfg) -> Summaries {
    let n = g.functions.len();
    let mut s = Summaries {
        exits: vec![false; n],
        reverts: vec![false; n],
    };
    loop {
        let mut changed = false;
        for f in 0..n {
            let (seen, _) = intra_reach(g, f, &s);
            let exits = seen.contains(&g.functions[f].exit);
            let reverts = g.functions[f].revert.is_some_and(|r| seen.contains(&r));
            if exits != s.exits[f] || reverts != s.reverts[f] {
                s.exits[f] |= exits;
                s.reverts[f] |= reverts;
                changed = true;
            }
        }
        if !changed {
            return s;
        }
    }
}

/// Subgraph reachable from a transaction entry along call/return-matched
/// paths, and its cyclomatic number.
///
/// The cyclomatic number is `|E'| - |V'| + 2` after merging every sink of
/// the subgraph into one terminal node, i.e. `|E'| - |V'| + 1 + sinks`
/// when there is at least one sink.
pub fn reachable_metrics(g: &Tcfg, n: NodeId) -> Result<ReachableMetrics, GraphError> {
    if !g.is_transaction_entry(n) {
        return Err(GraphError::NotTransactionEntry(n));
    }
    let s = summaries(g);
    let mut nodes = BTreeSet::new();
    let mut done = BTreeSet::new();
    let mut work = vec![g.nodes[n].func];
    while let Some(f) = work.pop() {
        if !done.insert(f) {
            continue;
        }
        let (seen, called) = intra_reach(g, f, &s);
        nodes.extend(seen);
        work.extend(called.into_iter().filter(|c| !done.contains(c)));
    }
    let edges: Vec<EdgeId> = g
        .edges
        .iter()
        .filter(|e| nodes.contains(&e.from) && nodes.contains(&e.to))
        .map(|e| e.id)
        .collect();
    let with_out: BTreeSet<NodeId> = edges.iter().map(|&e| g.edge(e).from).collect();
    let sinks = nodes.iter().filter(|v| !with_out.contains(v)).count();
    let terminals = sinks.max(1);
    let cyclomatic = edges.len() + 1 + terminals - nodes.len();
    Ok(ReachableMetrics {
        entry: n,
        nodes: nodes.into_iter().collect(),
        edges,
        sinks,
        cyclomatic,
    })
}
