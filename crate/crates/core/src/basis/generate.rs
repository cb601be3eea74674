// SPDX-License-Identifier: Apache-2.0

//! Basis path set generation.

use super::path::{PathError, WholeTxPath};
use super::rank::Echelon;
use super::search::{Budgets, CallContext, PathSearch};
use crate::graph::{reachable_metrics, EdgeId, GraphError, NodeId, Tcfg};
use serde::{Deserialize, Serialize};
use std::collections::{BTreeSet, HashMap};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum BasisError {
    #[error(transparent)]
    Graph(#[from] GraphError),
    #[error("no whole-transaction path from node {0} within the budgets")]
    NoBaseline(NodeId),
    #[error(transparent)]
    Path(#[from] PathError),
}

/// Linearly independent whole-transaction paths from one entry.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct BasisPathSet {
    pub entry: NodeId,
    pub entry_name: String,
    pub cyclomatic: usize,
    /// The set reached `cyclomatic` paths.
    pub complete: bool,
    /// Edge index space of every path vector.
    pub edges: Vec<EdgeId>,
    pub paths: Vec<WholeTxPath>,
}

impl BasisPathSet {
    pub fn vectors(&self) -> impl Iterator<Item = &[u32]> {
        self.paths.iter().map(|p| p.vector.as_slice())
    }
}

struct Generator<'g> {
    g: &'g Tcfg,
    search: PathSearch<'g>,
    memo: HashMap<Vec<NodeId>, Option<Vec<NodeId>>>,
}

impl Generator<'_> {
    fn complete(&mut self, prefix: Vec<NodeId>, ctx: CallContext) -> Option<Vec<NodeId>> {
        if let Some(hit) = self.memo.get(&prefix) {
            return hit.clone();
        }
        let result = self.search.complete_in(&prefix, ctx);
        self.memo.insert(prefix, result.clone());
        result
    }

    /// First completion that branches off `base` and is independent of
    /// `ech`. With `fresh_only`, the branching edge must be unused by `used`.
    fn branch_off(
        &mut self,
        base: &[NodeId],
        ech: &Echelon,
        used: &BTreeSet<EdgeId>,
        fresh_only: bool,
        to_path: &dyn Fn(Vec<NodeId>) -> Option<WholeTxPath>,
    ) -> Option<WholeTxPath> {
        let mut ctx = self.search.replay(&base[..1])?;
        for i in 0..base.len() - 1 {
            let succ = self.search.successors(base[i], &ctx);
            for (w, next) in &succ {
                if *w == base[i + 1] {
                    continue;
                }
                let edge = self.g.find_edge(base[i], *w)?;
                if fresh_only && used.contains(&edge) {
                    continue;
                }
                let mut prefix = base[..=i].to_vec();
                prefix.push(*w);
                let Some(nodes) = self.complete(prefix, next.clone()) else {
                    continue;
                };
                if let Some(p) = to_path(nodes) {
                    if !ech.spans(&p.vector) {
                        return Some(p);
                    }
                }
            }
            ctx = succ.into_iter().find(|(v, _)| *v == base[i + 1])?.1;
        }
        None
    }
}

/// Builds a basis path set for `entry`.
///
/// Starting from the path with the fewest predicate visits, each round
/// takes the most recent path, finds the earliest node with an outgoing
/// edge no path uses yet, and completes the alternative as cheaply as
/// possible. A candidate is kept only if it raises the rank. When the most
/// recent path offers nothing, earlier paths are tried as bases, first with
/// unused edges only and then with any alternative edge. Generation stops
/// at the cyclomatic number or when no base yields an independent path.
pub fn generate_wtpbs(g: &Tcfg, entry: NodeId, budgets: Budgets) -> Result<BasisPathSet, BasisError> {
    let metrics = reachable_metrics(g, entry)?;
    let mut gen = Generator {
        g,
        search: PathSearch::new(g, budgets),
        memo: HashMap::new(),
    };
    let baseline = gen.search.complete(&[entry]).ok_or(BasisError::NoBaseline(entry))?;
    let first = WholeTxPath::new(g, baseline, &metrics)?;
    let mut ech = Echelon::new();
    ech.insert(&first.vector);
    let mut used: BTreeSet<EdgeId> = first.edges(g).collect();
    let mut paths = vec![first];
    let to_path = |nodes: Vec<NodeId>| WholeTxPath::new(g, nodes, &metrics).ok();
    let mut current = 0;
    while paths.len() < metrics.cyclomatic {
        let order: Vec<usize> = std::iter::once(current)
            .chain((0..paths.len()).filter(|&b| b != current))
            .collect();
        let mut found = None;
        'passes: for fresh_only in [true, false] {
            for &b in &order {
                let base = paths[b].nodes.clone();
                if let Some(p) = gen.branch_off(&base, &ech, &used, fresh_only, &to_path) {
                    found = Some(p);
                    break 'passes;
                }
            }
        }
        let Some(p) = found else { break };
        ech.insert(&p.vector);
        used.extend(p.edges(g));
        paths.push(p);
        current = paths.len() - 1;
    }
    Ok(BasisPathSet {
        entry,
        entry_name: g.functions[g.node(entry).func].name.clone(),
        cyclomatic: metrics.cyclomatic,
        complete: paths.len() == metrics.cyclomatic,
        edges: metrics.edges,
        paths,
    })
}
