// SPDX-License-Identifier: Apache-2.0

//! Generic traversals over statement and expression trees.

use super::ast::*;

/// Calls `f` on every expression in `block`, children before parents.
pub fn for_each_expr_mut(block: &mut Block, f: &mut impl FnMut(&mut Expr)) {
    for stmt in &mut block.stmts {
        stmt_exprs_mut(stmt, f);
    }
}

fn stmt_exprs_mut(stmt: &mut Stmt, f: &mut impl FnMut(&mut Expr)) {
    match &mut stmt.kind {
        StmtKind::VarDecl { init, .. } => {
            if let Some(e) = init {
                expr_mut(e, f);
            }
        }
        StmtKind::Assign { target, value, .. } => {
            expr_mut(target, f);
            expr_mut(value, f);
        }
        StmtKind::Expr(e) | StmtKind::Require(e) | StmtKind::Return(Some(e)) => expr_mut(e, f),
        StmtKind::If {
            cond,
            then_block,
            else_block,
        } => {
            expr_mut(cond, f);
            for_each_expr_mut(then_block, f);
            if let Some(b) = else_block {
                for_each_expr_mut(b, f);
            }
        }
        StmtKind::While { cond, body } => {
            expr_mut(cond, f);
            for_each_expr_mut(body, f);
        }
        StmtKind::For {
            init,
            cond,
            update,
            body,
        } => {
            if let Some(s) = init {
                stmt_exprs_mut(s, f);
            }
            if let Some(c) = cond {
                expr_mut(c, f);
            }
            if let Some(s) = update {
                stmt_exprs_mut(s, f);
            }
            for_each_expr_mut(body, f);
        }
        StmtKind::Block(b) => for_each_expr_mut(b, f),
        StmtKind::Return(None) | StmtKind::Revert | StmtKind::Log(_) => {}
    }
}

/// Calls `f` on `expr` and all of its subexpressions, children first.
pub fn expr_mut(expr: &mut Expr, f: &mut impl FnMut(&mut Expr)) {
    match &mut expr.kind {
        ExprKind::Not(e) | ExprKind::Member(e, _) => expr_mut(e, f),
        ExprKind::Binary(_, l, r) | ExprKind::Index(l, r) => {
            expr_mut(l, f);
            expr_mut(r, f);
        }
        ExprKind::Call(callee, args) => {
            match callee {
                Callee::Push(e) | Callee::Transfer(e) => expr_mut(e, f),
                Callee::LowLevel { target, value } => {
                    expr_mut(target, f);
                    if let Some(v) = value {
                        expr_mut(v, f);
                    }
                }
                Callee::Internal(_) | Callee::External { .. } => {}
            }
            for a in args {
                expr_mut(a, f);
            }
        }
        ExprKind::Lit(_)
        | ExprKind::Ident(_)
        | ExprKind::MsgSender
        | ExprKind::MsgValue
        | ExprKind::Now
        | ExprKind::This => {}
    }
    f(expr);
}

/// Calls `f` on every expression reachable from `expr`, parents first.
pub fn walk_expr<'a>(expr: &'a Expr, f: &mut impl FnMut(&'a Expr)) {
    f(expr);
    match &expr.kind {
        ExprKind::Not(e) | ExprKind::Member(e, _) => walk_expr(e, f),
        ExprKind::Binary(_, l, r) | ExprKind::Index(l, r) => {
            walk_expr(l, f);
            walk_expr(r, f);
        }
        ExprKind::Call(callee, args) => {
            match callee {
                Callee::Push(e) | Callee::Transfer(e) => walk_expr(e, f),
                Callee::LowLevel { target, value } => {
                    walk_expr(target, f);
                    if let Some(v) = value {
                        walk_expr(v, f);
                    }
                }
                Callee::Internal(_) | Callee::External { .. } => {}
            }
            for a in args {
                walk_expr(a, f);
            }
        }
        _ => {}
    }
}

/// Calls `f` on every statement in `block`, including nested ones and the
/// init/update clauses of `for`, parents first.
pub fn walk_stmts<'a>(block: &'a Block, f: &mut impl FnMut(&'a Stmt)) {
    for stmt in &block.stmts {
        walk_stmt(stmt, f);
    }
}

pub fn walk_stmt<'a>(stmt: &'a Stmt, f: &mut impl FnMut(&'a Stmt)) {
    f(stmt);
    match &stmt.kind {
        StmtKind::If {
            then_block,
            else_block,
            ..
        } => {
            walk_stmts(then_block, f);
            if let Some(b) = else_block {
                walk_stmts(b, f);
            }
        }
        StmtKind::While { body, .. } => walk_stmts(body, f),
        StmtKind::For {
            init, update, body, ..
        } => {
            if let Some(s) = init {
                walk_stmt(s, f);
            }
            if let Some(s) = update {
                walk_stmt(s, f);
            }
            walk_stmts(body, f);
        }
        StmtKind::Block(b) => walk_stmts(b, f),
        _ => {}
    }
}

/// Expressions owned directly by `stmt` (not by nested statements).
pub fn stmt_exprs(stmt: &Stmt) -> Vec<&Expr> {
    match &stmt.kind {
        StmtKind::VarDecl { init, .. } => init.iter().collect(),
        StmtKind::Assign { target, value, .. } => vec![target, value],
        StmtKind::Expr(e) | StmtKind::Require(e) | StmtKind::Return(Some(e)) => vec![e],
        StmtKind::If { cond, .. } | StmtKind::While { cond, .. } => vec![cond],
        StmtKind::For { cond, .. } => cond.iter().collect(),
        StmtKind::Return(None) | StmtKind::Revert | StmtKind::Log(_) | StmtKind::Block(_) => {
            Vec::new()
        }
    }
}

/// Name of the storage or local variable at the root of an lvalue path.
pub fn lvalue_root(expr: &Expr) -> Option<&str> {
    match &expr.kind {
        ExprKind::Ident(name) => Some(name),
        ExprKind::Index(base, _) => lvalue_root(base),
        _ => None,
    }
}
