// SPDX-License-Identifier: Apache-2.0

//! Lowering of resolved MiniSol functions into the transaction graph.

use super::revert::{compute_may_revert, expr_may_fault};
use super::*;
use crate::frontend::pretty::expr as show;
use crate::frontend::visit::walk_expr;
use crate::frontend::{
    Block, Callee, ContractDecl, DappModel, ExprKind, FunctionDecl, FunctionKind, Stmt, StmtKind,
};
use std::collections::BTreeSet;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
enum Ref {
    Local(FuncId, usize),
    Entry(FuncId),
    Exit(FuncId),
    Revert(FuncId),
}

struct RawEdge {
    from: Ref,
    to: Ref,
    kind: EdgeKind,
    label: Option<String>,
    back: bool,
}

struct LocalNode {
    kind: NodeKind,
    op: NodeOp,
    span: Option<Span>,
    label: String,
}

struct FuncPlan {
    name: String,
    contract: Option<String>,
    function: String,
    has_revert: bool,
    transaction_entry: bool,
    span: Option<Span>,
}

/// Builds the dapp-wide graph.
///
/// Node ids are assigned function by function in declaration order; within
/// a function the entry comes first, then body nodes in evaluation order,
/// then the exit and, when present, the revert node. The virtual `ext`
/// function comes last. Edge ids follow `(from, to)` order.
pub fn build_tcfg(model: &DappModel, config: &GraphConfig) -> Result<Tcfg, GraphError> {
    let may = compute_may_revert(model, config);
    let mut plans = Vec::new();
    for c in &model.unit.contracts {
        for f in &c.functions {
            let name = format!("{}.{}", c.name, f.name);
            let exposed_writer = f.visibility.is_exposed() && !f.mutability.is_read_only();
            plans.push(FuncPlan {
                has_revert: may[&name],
                name,
                contract: Some(c.name.clone()),
                function: f.name.clone(),
                transaction_entry: f.kind != FunctionKind::Ordinary || exposed_writer,
                span: Some(f.span),
            });
        }
    }
    let ext_id = may.get(EXT).map(|&has_revert| {
        plans.push(FuncPlan {
            name: EXT.to_string(),
            contract: None,
            function: EXT.to_string(),
            has_revert,
            transaction_entry: false,
            span: None,
        });
        plans.len() - 1
    });

    let mut locals: Vec<Vec<LocalNode>> = Vec::new();
    let mut raw_edges = Vec::new();
    let mut fid = 0;
    for c in &model.unit.contracts {
        for f in &c.functions {
            let mut lw = Lowering {
                config,
                plans: &plans,
                fid,
                ext: ext_id,
                contract: c,
                nodes: Vec::new(),
                edges: Vec::new(),
                pending: Vec::new(),
                temps: 0,
                span: f.span,
            };
            lw.function(f)?;
            locals.push(lw.nodes);
            raw_edges.extend(lw.edges);
            fid += 1;
        }
    }
    if let Some(ext) = ext_id {
        let (nodes, edges) = lower_ext(model, config, &plans, ext);
        locals.push(nodes);
        raw_edges.extend(edges);
    }

    // Global numbering.
    let mut entry = Vec::new();
    let mut exit = Vec::new();
    let mut revert = Vec::new();
    let mut local_base = Vec::new();
    let mut next = 0usize;
    for (i, plan) in plans.iter().enumerate() {
        entry.push(next);
        local_base.push(next + 1);
        next += 1 + locals[i].len();
        exit.push(next);
        next += 1;
        if plan.has_revert {
            revert.push(Some(next));
            next += 1;
        } else {
            revert.push(None);
        }
    }
    let resolve = |r: Ref| -> Result<NodeId, GraphError> {
        match r {
            Ref::Local(f, i) => Ok(local_base[f] + i),
            Ref::Entry(f) => Ok(entry[f]),
            Ref::Exit(f) => Ok(exit[f]),
            Ref::Revert(f) => revert[f].ok_or_else(|| {
                GraphError::Malformed(format!("{} has no revert node", plans[f].name))
            }),
        }
    };

    let mut nodes = Vec::with_capacity(next);
    for (i, plan) in plans.iter().enumerate() {
        nodes.push(Node {
            id: entry[i],
            kind: NodeKind::Entry {
                transaction: plan.transaction_entry,
            },
            func: i,
            span: plan.span,
            label: format!("entry {}", plan.name),
            op: NodeOp::None,
        });
        for (j, ln) in locals[i].iter().enumerate() {
            let op = match &ln.op {
                NodeOp::Bind { dest, call_site } => NodeOp::Bind {
                    dest: dest.clone(),
                    call_site: local_base[i] + call_site,
                },
                other => other.clone(),
            };
            nodes.push(Node {
                id: local_base[i] + j,
                kind: ln.kind,
                func: i,
                span: ln.span,
                label: ln.label.clone(),
                op,
            });
        }
        nodes.push(Node {
            id: exit[i],
            kind: NodeKind::Exit,
            func: i,
            span: plan.span,
            label: format!("exit {}", plan.name),
            op: NodeOp::None,
        });
        if let Some(r) = revert[i] {
            nodes.push(Node {
                id: r,
                kind: NodeKind::Revert,
                func: i,
                span: plan.span,
                label: format!("revert {}", plan.name),
                op: NodeOp::None,
            });
        }
    }

    let mut resolved = Vec::with_capacity(raw_edges.len());
    let mut seen = BTreeSet::new();
    for e in raw_edges {
        let (from, to) = (resolve(e.from)?, resolve(e.to)?);
        if !seen.insert((from, to)) {
            // Several call sites share one cascade edge between two revert nodes.
            if e.kind == EdgeKind::CascadingRevert {
                continue;
            }
            return Err(GraphError::Malformed(format!("parallel edges {from}->{to}")));
        }
        resolved.push((from, to, e.kind, e.label, e.back));
    }
    resolved.sort_by_key(|e| (e.0, e.1));
    let edges = resolved
        .into_iter()
        .enumerate()
        .map(|(id, (from, to, kind, label, back))| Edge {
            id,
            from,
            to,
            kind,
            label,
            back,
        })
        .collect();

    let functions = plans
        .iter()
        .enumerate()
        .map(|(i, p)| FunctionInfo {
            id: i,
            name: p.name.clone(),
            contract: p.contract.clone(),
            function: p.function.clone(),
            entry: entry[i],
            exit: exit[i],
            revert: revert[i],
            transaction_entry: p.transaction_entry,
            is_ext: Some(i) == ext_id,
        })
        .collect();
    Tcfg::from_parts(*config, functions, nodes, edges)
}

fn lower_ext(
    model: &DappModel,
    config: &GraphConfig,
    plans: &[FuncPlan],
    ext: FuncId,
) -> (Vec<LocalNode>, Vec<RawEdge>) {
    let mut nodes = vec![LocalNode {
        kind: NodeKind::Pred,
        op: NodeOp::Dispatch,
        span: None,
        label: "dispatch".into(),
    }];
    let b = Ref::Local(ext, 0);
    let flow = |from, to, label: Option<String>| RawEdge {
        from,
        to,
        kind: EdgeKind::Flow,
        label,
        back: false,
    };
    let mut edges = vec![
        flow(Ref::Entry(ext), b, None),
        flow(b, Ref::Exit(ext), Some("exit".into())),
    ];
    if config.lowlevel_revert == LowLevelRevert::ReturnFalse {
        edges.push(RawEdge {
            from: b,
            to: Ref::Revert(ext),
            kind: EdgeKind::Revert,
            label: Some("agent-revert".into()),
            back: false,
        });
    }
    for c in &model.contracts {
        for f in &c.state_changing {
            let name = format!("{}.{}", c.name, f.name);
            let g = plans
                .iter()
                .position(|p| p.name == name)
                .expect("every exposed function has a plan");
            let cs = nodes.len();
            nodes.push(LocalNode {
                kind: NodeKind::CallSite,
                op: NodeOp::Call {
                    target: CallTarget::Dispatch { func: g },
                    args: Vec::new(),
                },
                span: None,
                label: format!("call {name}"),
            });
            nodes.push(LocalNode {
                kind: NodeKind::ReturnSite,
                op: NodeOp::Bind {
                    dest: ReturnDest::Discard,
                    call_site: cs,
                },
                span: None,
                label: format!("ret {name}"),
            });
            let (call, ret) = (Ref::Local(ext, cs), Ref::Local(ext, cs + 1));
            edges.push(flow(b, call, Some(name)));
            edges.push(RawEdge {
                from: call,
                to: Ref::Entry(g),
                kind: EdgeKind::Call,
                label: None,
                back: false,
            });
            edges.push(RawEdge {
                from: Ref::Exit(g),
                to: ret,
                kind: EdgeKind::Return,
                label: None,
                back: false,
            });
            edges.push(flow(ret, b, None));
            if plans[g].has_revert {
                edges.push(RawEdge {
                    from: Ref::Revert(g),
                    to: Ref::Revert(ext),
                    kind: EdgeKind::CascadingRevert,
                    label: None,
                    back: false,
                });
            }
        }
    }
    (nodes, edges)
}

struct Lowering<'a> {
    config: &'a GraphConfig,
    plans: &'a [FuncPlan],
    fid: FuncId,
    ext: Option<FuncId>,
    contract: &'a ContractDecl,
    nodes: Vec<LocalNode>,
    edges: Vec<RawEdge>,
    /// Flow edges waiting for the next node: source and branch label.
    pending: Vec<(Ref, Option<String>)>,
    temps: usize,
    span: Span,
}

impl Lowering<'_> {
    fn function(&mut self, f: &FunctionDecl) -> Result<(), GraphError> {
        self.pending = vec![(Ref::Entry(self.fid), None)];
        self.block(&f.body)?;
        let exit = Ref::Exit(self.fid);
        self.connect_pending(exit, false);
        Ok(())
    }

    fn func_id(&self, contract: &str, function: &str) -> Result<FuncId, GraphError> {
        let name = format!("{contract}.{function}");
        self.plans
            .iter()
            .position(|p| p.name == name)
            .ok_or(GraphError::UndeclaredCallee(name))
    }

    fn edge(&mut self, from: Ref, to: Ref, kind: EdgeKind, label: Option<&str>) {
        self.edges.push(RawEdge {
            from,
            to,
            kind,
            label: label.map(str::to_string),
            back: false,
        });
    }

    fn connect_pending(&mut self, to: Ref, back: bool) {
        for (from, label) in std::mem::take(&mut self.pending) {
            self.edges.push(RawEdge {
                from,
                to,
                kind: EdgeKind::Flow,
                label,
                back,
            });
        }
    }

    /// Appends a node reached by every pending flow edge.
    fn emit(&mut self, kind: NodeKind, op: NodeOp, label: String) -> Ref {
        let r = Ref::Local(self.fid, self.nodes.len());
        self.nodes.push(LocalNode {
            kind,
            op,
            span: Some(self.span),
            label,
        });
        self.connect_pending(r, false);
        r
    }

    /// Emits an expression node, adding its revert edge when evaluation
    /// can fail.
    fn emit_expr(&mut self, op: NodeOp, label: String, exprs: &[&Expr], compound: bool) -> Ref {
        let r = self.emit(NodeKind::Expr, op, label);
        let transfer = exprs.iter().any(|e| contains_transfer(e));
        let checked = self.config.arithmetic == Arithmetic::Checked;
        let fault = (checked && compound)
            || exprs
                .iter()
                .any(|e| expr_may_fault(e, self.contract, self.config.arithmetic));
        if transfer || fault {
            let label = if transfer { "transfer-failed" } else { "fault" };
            self.edge(r, Ref::Revert(self.fid), EdgeKind::Revert, Some(label));
        }
        self.pending = vec![(r, None)];
        r
    }

    fn emit_pred(&mut self, op: NodeOp, label: String, cond: &Expr) -> Ref {
        let r = self.emit(NodeKind::Pred, op, label);
        let is_require = matches!(self.nodes.last().map(|n| &n.op), Some(NodeOp::Require(_)));
        if is_require {
            self.edge(r, Ref::Revert(self.fid), EdgeKind::Revert, Some("false"));
        } else if expr_may_fault(cond, self.contract, self.config.arithmetic) {
            self.edge(r, Ref::Revert(self.fid), EdgeKind::Revert, Some("fault"));
        }
        r
    }

    fn fresh_temp(&mut self) -> String {
        let t = format!("$t{}", self.temps);
        self.temps += 1;
        t
    }

    /// Moves every call out of `e` into call/return pairs, returning the
    /// expression with calls replaced by temporaries.
    fn lift(&mut self, e: &Expr) -> Result<Expr, GraphError> {
        let kind = match &e.kind {
            ExprKind::Call(
                Callee::Internal(_) | Callee::External { .. } | Callee::LowLevel { .. },
                _,
            ) => {
                let t = self.fresh_temp();
                self.call(e, ReturnDest::Temp(t.clone()))?;
                ExprKind::Ident(t)
            }
            ExprKind::Call(Callee::Push(base), args) => {
                let base = self.lift(base)?;
                let args = self.lift_all(args)?;
                ExprKind::Call(Callee::Push(Box::new(base)), args)
            }
            ExprKind::Call(Callee::Transfer(base), args) => {
                let base = self.lift(base)?;
                let args = self.lift_all(args)?;
                ExprKind::Call(Callee::Transfer(Box::new(base)), args)
            }
            ExprKind::Not(inner) => ExprKind::Not(Box::new(self.lift(inner)?)),
            ExprKind::Binary(op, l, r) => {
                let l = self.lift(l)?;
                let r = self.lift(r)?;
                ExprKind::Binary(*op, Box::new(l), Box::new(r))
            }
            ExprKind::Index(b, i) => {
                let b = self.lift(b)?;
                let i = self.lift(i)?;
                ExprKind::Index(Box::new(b), Box::new(i))
            }
            ExprKind::Member(b, m) => ExprKind::Member(Box::new(self.lift(b)?), m.clone()),
            other => other.clone(),
        };
        Ok(Expr::new(kind, e.span))
    }

    fn lift_all(&mut self, es: &[Expr]) -> Result<Vec<Expr>, GraphError> {
        es.iter().map(|e| self.lift(e)).collect()
    }

    /// A call argument: lifted, and evaluated into a temporary first when
    /// its evaluation can fail, so that call-sites never revert.
    fn lift_arg(&mut self, e: &Expr) -> Result<Expr, GraphError> {
        let lifted = self.lift(e)?;
        if !expr_may_fault(&lifted, self.contract, self.config.arithmetic) {
            return Ok(lifted);
        }
        let t = self.fresh_temp();
        let label = format!("{t} = {}", show(&lifted));
        self.emit_expr(
            NodeOp::Temp {
                name: t.clone(),
                value: lifted.clone(),
            },
            label,
            &[&lifted],
            false,
        );
        Ok(Expr::new(ExprKind::Ident(t), e.span))
    }

    /// Emits the call/return pair for a direct call expression.
    fn call(&mut self, e: &Expr, dest: ReturnDest) -> Result<(), GraphError> {
        let ExprKind::Call(callee, args) = &e.kind else {
            unreachable!("call() on a non-call expression");
        };
        let (target, callee_fid, text) = match callee {
            Callee::Internal(name) => {
                let func = self.func_id(&self.contract.name, name)?;
                (CallTarget::Internal { func }, func, name.clone())
            }
            Callee::External { contract, function } => {
                let func = self.func_id(contract, function)?;
                (CallTarget::External { func }, func, format!("{contract}.{function}"))
            }
            Callee::LowLevel { target, value } => {
                let target = self.lift_arg(target)?;
                let value = value.as_deref().map(|v| self.lift_arg(v)).transpose()?;
                let ext = self
                    .ext
                    .ok_or_else(|| GraphError::Malformed("low-level call without ext".into()))?;
                let text = format!("{}.call", show(&target));
                (CallTarget::LowLevel { target, value }, ext, text)
            }
            Callee::Push(_) | Callee::Transfer(_) => unreachable!("not a graph call"),
        };
        let args = args
            .iter()
            .map(|a| self.lift_arg(a))
            .collect::<Result<Vec<_>, _>>()?;
        let shown: Vec<String> = args.iter().map(show).collect();
        let label = format!("call {text}({})", shown.join(", "));
        let low_level = matches!(target, CallTarget::LowLevel { .. });
        let cs = self.emit(NodeKind::CallSite, NodeOp::Call { target, args }, label);
        let Ref::Local(_, cs_index) = cs else {
            unreachable!()
        };
        self.edge(cs, Ref::Entry(callee_fid), EdgeKind::Call, None);
        self.pending.clear();
        let rs = self.emit(
            NodeKind::ReturnSite,
            NodeOp::Bind {
                dest,
                call_site: cs_index,
            },
            format!("ret {text}"),
        );
        self.edge(Ref::Exit(callee_fid), rs, EdgeKind::Return, None);
        let return_false = self.config.lowlevel_revert == LowLevelRevert::ReturnFalse;
        if low_level && return_false {
            self.edge(Ref::Revert(callee_fid), rs, EdgeKind::Return, None);
        } else if self.plans[callee_fid].has_revert {
            self.edge(
                Ref::Revert(callee_fid),
                Ref::Revert(self.fid),
                EdgeKind::CascadingRevert,
                None,
            );
        }
        self.pending = vec![(rs, None)];
        Ok(())
    }

    fn block(&mut self, b: &Block) -> Result<(), GraphError> {
        for s in &b.stmts {
            self.stmt(s)?;
        }
        Ok(())
    }

    /// A branch or loop body; an empty one still gets a node so that two
    /// branches never share an edge.
    fn body(&mut self, b: &Block) -> Result<(), GraphError> {
        let before = self.nodes.len();
        self.block(b)?;
        if self.nodes.len() == before && !self.pending.is_empty() {
            self.emit_expr(NodeOp::Skip, "skip".into(), &[], false);
        }
        Ok(())
    }

    fn stmt(&mut self, s: &Stmt) -> Result<(), GraphError> {
        if self.pending.is_empty() {
            // Unreachable statement.
            return Ok(());
        }
        let saved = self.span;
        self.span = s.span;
        let result = self.stmt_inner(s);
        self.span = saved;
        result
    }

    fn stmt_inner(&mut self, s: &Stmt) -> Result<(), GraphError> {
        match &s.kind {
            StmtKind::VarDecl { ty, name, init } => match init {
                Some(e) if is_graph_call(e) => self.call(
                    e,
                    ReturnDest::Declare {
                        name: name.clone(),
                        ty: ty.clone(),
                    },
                ),
                _ => {
                    let init = init.as_ref().map(|e| self.lift(e)).transpose()?;
                    let label = match &init {
                        Some(e) => format!("{ty} {name} = {}", show(e)),
                        None => format!("{ty} {name}"),
                    };
                    let exprs: Vec<&Expr> = init.iter().collect();
                    let op = NodeOp::Declare {
                        name: name.clone(),
                        ty: ty.clone(),
                        init: init.clone(),
                    };
                    self.emit_expr(op, label, &exprs, false);
                    Ok(())
                }
            },
            StmtKind::Assign { target, op, value } => {
                if *op == AssignOp::Assign
                    && matches!(target.kind, ExprKind::Ident(_))
                    && is_graph_call(value)
                {
                    return self.call(
                        value,
                        ReturnDest::Assign {
                            target: target.clone(),
                        },
                    );
                }
                let target = self.lift(target)?;
                let value = self.lift(value)?;
                let label = format!("{} {} {}", show(&target), op.symbol(), show(&value));
                let node_op = NodeOp::Assign {
                    target: target.clone(),
                    op: *op,
                    value: value.clone(),
                };
                self.emit_expr(node_op, label, &[&target, &value], *op != AssignOp::Assign);
                Ok(())
            }
            StmtKind::Expr(e) => {
                if is_graph_call(e) {
                    return self.call(e, ReturnDest::Discard);
                }
                let e = self.lift(e)?;
                self.emit_expr(NodeOp::Eval(e.clone()), show(&e), &[&e], false);
                Ok(())
            }
            StmtKind::If {
                cond,
                then_block,
                else_block,
            } => {
                let c = self.lift(cond)?;
                let label = format!("if ({})", show(&c));
                let p = self.emit_pred(NodeOp::Branch(c.clone()), label, &c);
                self.pending = vec![(p, Some("true".into()))];
                self.body(then_block)?;
                let then_out = std::mem::take(&mut self.pending);
                self.pending = vec![(p, Some("false".into()))];
                if let Some(b) = else_block {
                    self.block(b)?;
                }
                self.pending.extend(then_out);
                Ok(())
            }
            StmtKind::While { cond, body } => self.lower_loop(cond, body, None),
            StmtKind::For {
                init,
                cond,
                update,
                body,
            } => {
                if let Some(i) = init {
                    self.stmt(i)?;
                }
                let always = Expr::new(ExprKind::Lit(crate::frontend::Literal::Bool(true)), s.span);
                let cond = cond.as_ref().unwrap_or(&always);
                self.lower_loop(cond, body, update.as_deref())
            }
            StmtKind::Return(value) => {
                let value = value.as_ref().map(|e| self.lift(e)).transpose()?;
                let label = match &value {
                    Some(e) => format!("return {}", show(e)),
                    None => "return".into(),
                };
                let exprs: Vec<&Expr> = value.iter().collect();
                self.emit_expr(NodeOp::Return(value.clone()), label, &exprs, false);
                let exit = Ref::Exit(self.fid);
                self.connect_pending(exit, false);
                Ok(())
            }
            StmtKind::Require(cond) => {
                let c = self.lift(cond)?;
                let label = format!("require({})", show(&c));
                let p = self.emit_pred(NodeOp::Require(c.clone()), label, &c);
                self.pending = vec![(p, Some("true".into()))];
                Ok(())
            }
            StmtKind::Revert => {
                self.emit_expr(NodeOp::Revert, "revert()".into(), &[], false);
                let revert = Ref::Revert(self.fid);
                self.connect_pending(revert, false);
                Ok(())
            }
            StmtKind::Log(text) => {
                self.emit_expr(NodeOp::Log(text.clone()), format!("log(\"{text}\")"), &[], false);
                Ok(())
            }
            StmtKind::Block(b) => self.block(b),
        }
    }

    /// `while (cond) body`, with `update` appended to the body for `for`.
    fn lower_loop(&mut self, cond: &Expr, body: &Block, update: Option<&Stmt>) -> Result<(), GraphError> {
        let header = Ref::Local(self.fid, self.nodes.len());
        let c = self.lift(cond)?;
        let label = format!("while ({})", show(&c));
        let p = self.emit_pred(NodeOp::Branch(c.clone()), label, &c);
        self.pending = vec![(p, Some("true".into()))];
        match update {
            Some(u) => {
                self.block(body)?;
                self.stmt(u)?;
                if self.pending == vec![(p, Some("true".to_string()))] {
                    self.emit_expr(NodeOp::Skip, "skip".into(), &[], false);
                }
            }
            None => self.body(body)?,
        }
        self.connect_pending(header, true);
        self.pending = vec![(p, Some("false".into()))];
        Ok(())
    }
}

fn is_graph_call(e: &Expr) -> bool {
    matches!(
        e.kind,
        ExprKind::Call(
            Callee::Internal(_) | Callee::External { .. } | Callee::LowLevel { .. },
            _
        )
    )
}

fn contains_transfer(e: &Expr) -> bool {
    let mut found = false;
    walk_expr(e, &mut |sub: &Expr| {
        if matches!(sub.kind, ExprKind::Call(Callee::Transfer(_), _)) {
            found = true;
        }
    });
    found
}
