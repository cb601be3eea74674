// SPDX-License-Identifier: Apache-2.0

//! Which functions may end in a revert.

use super::{Arithmetic, GraphConfig, LowLevelRevert, EXT};
use crate::frontend::visit::{stmt_exprs, walk_expr, walk_stmts};
use crate::frontend::{
    AssignOp, Callee, ContractDecl, DappModel, Expr, ExprKind, Stmt, StmtKind, Type,
};
use std::collections::{BTreeMap, BTreeSet};

/// True when evaluating `e` can fail under `arith`: checked arithmetic or
/// an out-of-range array index.
pub(crate) fn expr_may_fault(e: &Expr, contract: &ContractDecl, arith: Arithmetic) -> bool {
    if arith == Arithmetic::Wrap {
        return false;
    }
    let mut fault = false;
    walk_expr(e, &mut |sub: &Expr| match &sub.kind {
        ExprKind::Binary(op, ..) if op.is_arithmetic() => fault = true,
        ExprKind::Index(base, _) if is_array(base, contract) => fault = true,
        _ => {}
    });
    fault
}

pub(crate) fn is_array(base: &Expr, contract: &ContractDecl) -> bool {
    match &base.kind {
        ExprKind::Ident(name) => contract
            .state_var(name)
            .is_some_and(|v| matches!(v.ty, Type::Array(_))),
        _ => false,
    }
}

/// True when the statement itself (not nested statements) can revert.
pub(crate) fn stmt_reverts_directly(s: &Stmt, contract: &ContractDecl, arith: Arithmetic) -> bool {
    let own = match &s.kind {
        StmtKind::Require(_) | StmtKind::Revert => true,
        StmtKind::Assign { op, .. } => arith == Arithmetic::Checked && *op != AssignOp::Assign,
        _ => false,
    };
    own || stmt_exprs(s).into_iter().any(|e| {
        let mut transfer = false;
        walk_expr(e, &mut |sub: &Expr| {
            if matches!(sub.kind, ExprKind::Call(Callee::Transfer(_), _)) {
                transfer = true;
            }
        });
        transfer || expr_may_fault(e, contract, arith)
    })
}

/// Least fixpoint of "may revert" over the call graph, keyed by
/// `Contract.function`; the virtual `ext` is included when some function
/// makes a low-level call.
pub fn compute_may_revert(model: &DappModel, config: &GraphConfig) -> BTreeMap<String, bool> {
    let mut direct: BTreeMap<String, bool> = BTreeMap::new();
    let mut callees: BTreeMap<String, BTreeSet<String>> = BTreeMap::new();
    let mut any_low_level = false;

    for c in &model.unit.contracts {
        for f in &c.functions {
            let name = format!("{}.{}", c.name, f.name);
            let mut reverts = false;
            let mut calls = BTreeSet::new();
            walk_stmts(&f.body, &mut |s: &Stmt| {
                reverts |= stmt_reverts_directly(s, c, config.arithmetic);
                for e in stmt_exprs(s) {
                    walk_expr(e, &mut |sub: &Expr| {
                        if let ExprKind::Call(callee, _) = &sub.kind {
                            match callee {
                                Callee::Internal(g) => {
                                    calls.insert(format!("{}.{g}", c.name));
                                }
                                Callee::External { contract, function } => {
                                    calls.insert(format!("{contract}.{function}"));
                                }
                                Callee::LowLevel { .. } => {
                                    any_low_level = true;
                                    if config.lowlevel_revert == LowLevelRevert::Cascade {
                                        calls.insert(EXT.to_string());
                                    }
                                }
                                Callee::Push(_) | Callee::Transfer(_) => {}
                            }
                        }
                    });
                }
            });
            direct.insert(name.clone(), reverts);
            callees.insert(name, calls);
        }
    }
    if any_low_level {
        direct.insert(
            EXT.to_string(),
            config.lowlevel_revert == LowLevelRevert::ReturnFalse,
        );
        let targets = model
            .contracts
            .iter()
            .flat_map(|c| c.state_changing.iter().map(move |f| format!("{}.{}", c.name, f.name)))
            .collect();
        callees.insert(EXT.to_string(), targets);
    }

    let mut may = direct;
    loop {
        let mut changed = false;
        for (f, cs) in &callees {
            if !may[f] && cs.iter().any(|g| may.get(g).copied().unwrap_or(false)) {
                may.insert(f.clone(), true);
                changed = true;
            }
        }
        if !changed {
            return may;
        }
    }
}
