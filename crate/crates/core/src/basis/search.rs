// SPDX-License-Identifier: Apache-2.0

//! Bounded best-first search for whole-transaction paths.
//!
//! Candidates are ordered by the number of predicate visits, then by the
//! node sequence itself, so results are deterministic. Every cycle of a
//! graph passes through a call edge or an intra-procedural back edge, and
//! both are budgeted per path, so the state space is finite.

use super::path::{apply_step, closes_entry_frame, Frame};
use crate::graph::{EdgeId, EdgeKind, NodeId, NodeKind, Tcfg};
use serde::{Deserialize, Serialize};
use std::cmp::Reverse;
use std::collections::{BTreeMap, BinaryHeap, HashSet};

/// Per-path traversal limits.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Budgets {
    /// Traversals allowed per call edge.
    pub per_call_edge: u8,
    /// Traversals allowed per intra-procedural back edge.
    pub per_back_edge: u8,
    /// Search states expanded before giving up.
    pub max_states: usize,
}

impl Default for Budgets {
    fn default() -> Self {
        Budgets {
            per_call_edge: 2,
            per_back_edge: 2,
            max_states: 2_000_000,
        }
    }
}

/// Open frames plus budget consumption at some point of a path.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct CallContext {
    pub frames: Vec<Frame>,
    /// Traversals so far of each budgeted edge, by slot.
    counts: Vec<u8>,
}

impl CallContext {
    pub fn depth(&self) -> usize {
        self.frames.len()
    }
}

pub struct PathSearch<'g> {
    g: &'g Tcfg,
    budgets: Budgets,
    /// Call edges and back edges, mapped to their counter slot.
    slots: BTreeMap<EdgeId, usize>,
}

impl<'g> PathSearch<'g> {
    pub fn new(g: &'g Tcfg, budgets: Budgets) -> Self {
        let slots = g
            .edges
            .iter()
            .filter(|e| e.kind == EdgeKind::Call || e.back)
            .enumerate()
            .map(|(slot, e)| (e.id, slot))
            .collect();
        PathSearch { g, budgets, slots }
    }

    fn initial(&self, entry: NodeId) -> Option<CallContext> {
        if !self.g.is_transaction_entry(entry) {
            return None;
        }
        Some(CallContext {
            frames: vec![Frame {
                func: self.g.node(entry).func,
                call_site: None,
            }],
            counts: vec![0; self.slots.len()],
        })
    }

    /// Legal one-step extensions from `u` in context `ctx`, by target id.
    pub fn successors(&self, u: NodeId, ctx: &CallContext) -> Vec<(NodeId, CallContext)> {
        if closes_entry_frame(self.g, &ctx.frames, u).is_some() {
            return Vec::new();
        }
        let mut out = Vec::new();
        for &e in self.g.out_edges(u) {
            let edge = self.g.edge(e);
            let mut next = ctx.clone();
            if let Some(&slot) = self.slots.get(&e) {
                let limit = if edge.kind == EdgeKind::Call {
                    self.budgets.per_call_edge
                } else {
                    self.budgets.per_back_edge
                };
                if next.counts[slot] >= limit {
                    continue;
                }
                next.counts[slot] += 1;
            }
            if apply_step(self.g, &mut next.frames, u, edge.to, edge.kind).is_ok() {
                out.push((edge.to, next));
            }
        }
        out
    }

    /// Context after following `prefix`, or `None` when the prefix is not
    /// a legal start of a whole-transaction path within the budgets.
    pub fn replay(&self, prefix: &[NodeId]) -> Option<CallContext> {
        let mut ctx = self.initial(*prefix.first()?)?;
        for w in prefix.windows(2) {
            ctx = self
                .successors(w[0], &ctx)
                .into_iter()
                .find(|(v, _)| *v == w[1])?
                .1;
        }
        Some(ctx)
    }

    /// Cheapest completion of `prefix` into a whole-transaction path.
    pub fn complete(&self, prefix: &[NodeId]) -> Option<Vec<NodeId>> {
        let ctx = self.replay(prefix)?;
        self.complete_in(prefix, ctx)
    }

    /// Like [`PathSearch::complete`], with `ctx` the context reached by
    /// `prefix` (as returned by [`PathSearch::replay`]).
    pub fn complete_in(&self, prefix: &[NodeId], ctx: CallContext) -> Option<Vec<NodeId>> {
        if prefix.is_empty() {
            return None;
        }
        let cost = prefix
            .iter()
            .filter(|&&n| self.g.node(n).kind == NodeKind::Pred)
            .count();
        let mut heap = BinaryHeap::new();
        heap.push(Reverse((cost, prefix.to_vec(), ctx)));
        let mut closed: HashSet<(NodeId, CallContext)> = HashSet::new();
        while let Some(Reverse((cost, seq, ctx))) = heap.pop() {
            let u = *seq.last().expect("sequences are never empty");
            if closes_entry_frame(self.g, &ctx.frames, u).is_some() {
                return Some(seq);
            }
            if closed.len() >= self.budgets.max_states {
                return None;
            }
            if !closed.insert((u, ctx.clone())) {
                continue;
            }
            for (v, next) in self.successors(u, &ctx) {
                if closed.contains(&(v, next.clone())) {
                    continue;
                }
                let mut s = seq.clone();
                s.push(v);
                let c = cost + usize::from(self.g.node(v).kind == NodeKind::Pred);
                heap.push(Reverse((c, s, next)));
            }
        }
        None
    }
}

/// The whole-transaction path from `entry` with the fewest predicate
/// visits, ties broken by the smallest node sequence.
pub fn baseline_path(g: &Tcfg, entry: NodeId, budgets: Budgets) -> Option<Vec<NodeId>> {
    PathSearch::new(g, budgets).complete(&[entry])
}

/// Cheapest whole-transaction path beginning with `prefix`, if any exists
/// within the budgets.
pub fn complete_from_prefix(g: &Tcfg, prefix: &[NodeId], budgets: Budgets) -> Option<Vec<NodeId>> {
    PathSearch::new(g, budgets).complete(prefix)
}
