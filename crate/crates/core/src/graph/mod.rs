// SPDX-License-Identifier: Apache-2.0

//! Transaction control flow graphs.
//!
//! One graph spans every contract of a dapp. Each function contributes an
//! entry, an exit, its statement and predicate nodes, call-site/return-site
//! pairs for calls, and a revert node when it may revert. Low-level calls
//! to unknown code enter a virtual function `ext` that loops through every
//! exposed state-changing function of the dapp.
//!
//! Nodes carry the operation they perform so the interpreter can walk the
//! graph directly; an execution trace is therefore a node sequence of this
//! graph by construction.

mod build;
mod dot;
mod metrics;
mod revert;

pub use build::build_tcfg;
pub use dot::export_dot;
pub use metrics::{reachable_metrics, ReachableMetrics};
pub use revert::compute_may_revert;

use crate::frontend::{AssignOp, Expr, Span, Type};
use serde::{Deserialize, Serialize};
use std::collections::BTreeMap;
use thiserror::Error;

pub type NodeId = usize;
pub type EdgeId = usize;
pub type FuncId = usize;

/// Name of the virtual function standing in for unknown external code.
pub const EXT: &str = "ext";

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum GraphError {
    #[error("call to undeclared function `{0}`")]
    UndeclaredCallee(String),
    #[error("node {0} is not a transaction entry")]
    NotTransactionEntry(NodeId),
    #[error("no function named `{0}`")]
    UnknownFunction(String),
    #[error("malformed graph: {0}")]
    Malformed(String),
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum LowLevelRevert {
    /// A revert inside unknown code re-throws into the low-level caller.
    #[default]
    Cascade,
    /// A revert inside unknown code makes the low-level call return false.
    ReturnFalse,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Arithmetic {
    /// Modulo 2^256; division by zero and out-of-range array reads yield zero.
    #[default]
    Wrap,
    /// Overflow, underflow, division by zero and out-of-range indexing revert.
    Checked,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct GraphConfig {
    pub lowlevel_revert: LowLevelRevert,
    pub arithmetic: Arithmetic,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum NodeKind {
    Entry { transaction: bool },
    Exit,
    Expr,
    Pred,
    Revert,
    CallSite,
    ReturnSite,
}

impl NodeKind {
    pub fn tag(self) -> &'static str {
        match self {
            NodeKind::Entry { .. } => "entry",
            NodeKind::Exit => "exit",
            NodeKind::Expr => "expr",
            NodeKind::Pred => "pred",
            NodeKind::Revert => "revert",
            NodeKind::CallSite => "call",
            NodeKind::ReturnSite => "ret",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum EdgeKind {
    Flow,
    Call,
    Return,
    Revert,
    CascadingRevert,
}

/// Where a call's result goes once the callee returns.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ReturnDest {
    Discard,
    Temp(String),
    Declare { name: String, ty: Type },
    Assign { target: Expr },
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CallTarget {
    /// Call within the current contract.
    Internal { func: FuncId },
    /// Message call into another deployed contract.
    External { func: FuncId },
    /// Low-level call into unknown code.
    LowLevel { target: Expr, value: Option<Expr> },
    /// Call made by unknown code into an exposed function.
    Dispatch { func: FuncId },
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum NodeOp {
    None,
    Declare { name: String, ty: Type, init: Option<Expr> },
    /// Evaluates into a compiler temporary.
    Temp { name: String, value: Expr },
    Assign { target: Expr, op: AssignOp, value: Expr },
    Eval(Expr),
    Return(Option<Expr>),
    Revert,
    Log(String),
    /// Placeholder for an empty branch or loop body.
    Skip,
    Branch(Expr),
    Require(Expr),
    /// The dispatcher of `ext`.
    Dispatch,
    Call { target: CallTarget, args: Vec<Expr> },
    Bind { dest: ReturnDest, call_site: NodeId },
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Node {
    pub id: NodeId,
    pub kind: NodeKind,
    pub func: FuncId,
    pub span: Option<Span>,
    pub label: String,
    pub op: NodeOp,
}

impl Node {
    /// Statement or predicate of the program under test.
    pub fn is_statement(&self, g: &Tcfg) -> bool {
        matches!(self.kind, NodeKind::Expr | NodeKind::Pred)
            && !matches!(self.op, NodeOp::Skip)
            && !g.functions[self.func].is_ext
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Edge {
    pub id: EdgeId,
    pub from: NodeId,
    pub to: NodeId,
    pub kind: EdgeKind,
    pub label: Option<String>,
    /// Closes an intra-procedural loop.
    pub back: bool,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FunctionInfo {
    pub id: FuncId,
    /// `Contract.function`, or `ext`.
    pub name: String,
    pub contract: Option<String>,
    pub function: String,
    pub entry: NodeId,
    pub exit: NodeId,
    pub revert: Option<NodeId>,
    pub transaction_entry: bool,
    pub is_ext: bool,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
struct TcfgRepr {
    config: GraphConfig,
    functions: Vec<FunctionInfo>,
    nodes: Vec<Node>,
    edges: Vec<Edge>,
}

/// A dapp-wide transaction control flow graph. Ids are dense and assigned
/// deterministically from the source.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(try_from = "TcfgRepr", into = "TcfgRepr")]
pub struct Tcfg {
    pub config: GraphConfig,
    pub functions: Vec<FunctionInfo>,
    pub nodes: Vec<Node>,
    pub edges: Vec<Edge>,
    out: Vec<Vec<EdgeId>>,
    call_pairs: BTreeMap<NodeId, NodeId>,
}

impl From<Tcfg> for TcfgRepr {
    fn from(g: Tcfg) -> Self {
        TcfgRepr {
            config: g.config,
            functions: g.functions,
            nodes: g.nodes,
            edges: g.edges,
        }
    }
}

impl TryFrom<TcfgRepr> for Tcfg {
    type Error = GraphError;
    fn try_from(r: TcfgRepr) -> Result<Self, GraphError> {
        Tcfg::from_parts(r.config, r.functions, r.nodes, r.edges)
    }
}

impl Tcfg {
    pub(crate) fn from_parts(
        config: GraphConfig,
        functions: Vec<FunctionInfo>,
        nodes: Vec<Node>,
        edges: Vec<Edge>,
    ) -> Result<Self, GraphError> {
        let n = nodes.len();
        for (i, node) in nodes.iter().enumerate() {
            if node.id != i || node.func >= functions.len() {
                return Err(GraphError::Malformed(format!("bad node record {i}")));
            }
        }
        let mut out = vec![Vec::new(); n];
        for (i, e) in edges.iter().enumerate() {
            if e.id != i || e.from >= n || e.to >= n {
                return Err(GraphError::Malformed(format!("bad edge record {i}")));
            }
            out[e.from].push(i);
        }
        for list in &mut out {
            list.sort_by_key(|&e| edges[e].to);
        }
        let mut call_pairs = BTreeMap::new();
        for node in &nodes {
            if let NodeOp::Bind { call_site, .. } = node.op {
                if call_site >= n {
                    return Err(GraphError::Malformed(format!("bad call pairing at {}", node.id)));
                }
                call_pairs.insert(call_site, node.id);
            }
        }
        for f in &functions {
            let ok = f.entry < n && f.exit < n && f.revert.is_none_or(|r| r < n);
            if !ok {
                return Err(GraphError::Malformed(format!("bad function record {}", f.name)));
            }
        }
        Ok(Tcfg {
            config,
            functions,
            nodes,
            edges,
            out,
            call_pairs,
        })
    }

    pub fn node(&self, id: NodeId) -> &Node {
        &self.nodes[id]
    }

    pub fn edge(&self, id: EdgeId) -> &Edge {
        &self.edges[id]
    }

    /// Outgoing edges of `n`, ordered by target id.
    pub fn out_edges(&self, n: NodeId) -> &[EdgeId] {
        &self.out[n]
    }

    pub fn find_edge(&self, from: NodeId, to: NodeId) -> Option<EdgeId> {
        self.out[from].iter().copied().find(|&e| self.edges[e].to == to)
    }

    /// The return-site paired with a call-site.
    pub fn return_site(&self, call_site: NodeId) -> Option<NodeId> {
        self.call_pairs.get(&call_site).copied()
    }

    /// The call-site paired with a return-site.
    pub fn call_site_of(&self, return_site: NodeId) -> Option<NodeId> {
        match self.nodes[return_site].op {
            NodeOp::Bind { call_site, .. } => Some(call_site),
            _ => None,
        }
    }

    pub fn function_named(&self, name: &str) -> Option<&FunctionInfo> {
        self.functions.iter().find(|f| f.name == name)
    }

    /// Looks a function up by `Contract.function` or by a bare function
    /// name when that name is unique.
    pub fn resolve_function(&self, name: &str) -> Result<&FunctionInfo, GraphError> {
        if let Some(f) = self.function_named(name) {
            return Ok(f);
        }
        let mut matches = self.functions.iter().filter(|f| f.function == name);
        match (matches.next(), matches.next()) {
            (Some(f), None) => Ok(f),
            _ => Err(GraphError::UnknownFunction(name.to_string())),
        }
    }

    pub fn ext(&self) -> Option<&FunctionInfo> {
        self.functions.iter().find(|f| f.is_ext)
    }

    pub fn transaction_entries(&self) -> Vec<NodeId> {
        self.functions
            .iter()
            .filter(|f| f.transaction_entry)
            .map(|f| f.entry)
            .collect()
    }

    pub fn is_transaction_entry(&self, n: NodeId) -> bool {
        n < self.nodes.len() && matches!(self.nodes[n].kind, NodeKind::Entry { transaction: true })
    }

    /// Short human-readable name, e.g. `Exit[Dao.withdrawFunds]` or `n12:L4`.
    pub fn describe(&self, n: NodeId) -> String {
        let node = &self.nodes[n];
        let f = &self.functions[node.func].name;
        match node.kind {
            NodeKind::Entry { .. } => format!("Entry[{f}]"),
            NodeKind::Exit => format!("Exit[{f}]"),
            NodeKind::Revert => format!("Revert[{f}]"),
            kind => match node.span {
                Some(s) => format!("n{n}:{}@L{}", kind.tag(), s.line),
                None => format!("n{n}:{}", kind.tag()),
            },
        }
    }

    /// Count of nodes by kind tag.
    pub fn kind_counts(&self) -> BTreeMap<&'static str, usize> {
        let mut m = BTreeMap::new();
        for n in &self.nodes {
            *m.entry(n.kind.tag()).or_insert(0) += 1;
        }
        m
    }

    /// Checks the endpoint and out-degree invariants of every node and edge.
    pub fn check_invariants(&self) -> Result<(), GraphError> {
        let bad = |m: String| Err(GraphError::Malformed(m));
        for e in &self.edges {
            let (from, to) = (self.nodes[e.from].kind, self.nodes[e.to].kind);
            let ok = match e.kind {
                EdgeKind::Call => {
                    from == NodeKind::CallSite && matches!(to, NodeKind::Entry { .. })
                }
                EdgeKind::Return => {
                    to == NodeKind::ReturnSite
                        && (from == NodeKind::Exit
                            || (from == NodeKind::Revert
                                && self.functions[self.nodes[e.from].func].is_ext
                                && self.config.lowlevel_revert == LowLevelRevert::ReturnFalse))
                }
                EdgeKind::Revert => {
                    matches!(from, NodeKind::Expr | NodeKind::Pred) && to == NodeKind::Revert
                }
                EdgeKind::CascadingRevert => from == NodeKind::Revert && to == NodeKind::Revert,
                EdgeKind::Flow => {
                    !matches!(from, NodeKind::Exit | NodeKind::Revert | NodeKind::CallSite)
                        && self.nodes[e.from].func == self.nodes[e.to].func
                }
            };
            if !ok {
                return bad(format!("edge {} has illegal endpoints for {:?}", e.id, e.kind));
            }
        }
        for node in &self.nodes {
            let outs: Vec<&Edge> = self.out[node.id].iter().map(|&e| &self.edges[e]).collect();
            let count = |k: EdgeKind| outs.iter().filter(|e| e.kind == k).count();
            match node.kind {
                NodeKind::Expr => {
                    if count(EdgeKind::Flow) != 1 || count(EdgeKind::Revert) > 1 || outs.len() > 2 {
                        return bad(format!("expr node {} has wrong out-degree", node.id));
                    }
                }
                NodeKind::Pred => {
                    let mut labels: Vec<&str> =
                        outs.iter().filter_map(|e| e.label.as_deref()).collect();
                    labels.sort_unstable();
                    labels.dedup();
                    let min = if matches!(node.op, NodeOp::Dispatch) { 1 } else { 2 };
                    if outs.len() < min || labels.len() != outs.len() {
                        return bad(format!("pred node {} lacks distinct branches", node.id));
                    }
                }
                NodeKind::CallSite => {
                    if outs.len() != 1 || count(EdgeKind::Call) != 1 {
                        return bad(format!("call-site {} needs exactly one call edge", node.id));
                    }
                    let Some(ret) = self.return_site(node.id) else {
                        return bad(format!("call-site {} has no return-site", node.id));
                    };
                    let incoming = self
                        .edges
                        .iter()
                        .filter(|e| e.to == ret && e.kind == EdgeKind::Return)
                        .count();
                    if incoming == 0 {
                        return bad(format!("return-site {ret} has no return edge"));
                    }
                }
                _ => {}
            }
        }
        for f in &self.functions {
            let entries = self
                .nodes
                .iter()
                .filter(|n| n.func == f.id && matches!(n.kind, NodeKind::Entry { .. }))
                .count();
            let exits = self
                .nodes
                .iter()
                .filter(|n| n.func == f.id && n.kind == NodeKind::Exit)
                .count();
            let reverts = self
                .nodes
                .iter()
                .filter(|n| n.func == f.id && n.kind == NodeKind::Revert)
                .count();
            if entries != 1 || exits != 1 || reverts > 1 || (reverts == 1) != f.revert.is_some() {
                return bad(format!("function {} has malformed entry/exit/revert", f.name));
            }
        }
        Ok(())
    }
}
