// SPDX-License-Identifier: Apache-2.0

//! Enumeration of single-site mutants.
//!
//! Sites are visited per contract and function in declaration order; within
//! a function, operator sites come first (expressions children-first, then
//! compound assignments), then identifier sites, then statements. A
//! candidate is kept only if the mutated unit pretty-prints, re-parses and
//! builds a dapp model.

use super::{MutantDescriptor, Mutant, MutationOperator};
use crate::frontend::pretty::{expr as expr_text, simple_stmt};
use crate::frontend::visit::{for_each_expr_mut, walk_stmts};
use crate::frontend::{
    build_dapp_model, parse_source, pretty_print, AccountRole, AssignOp, BinOp, Block, ExprKind, FunctionDecl,
    SourceUnit, Span, Stmt, StmtKind, Type,
};
use std::collections::{BTreeMap, BTreeSet};

/// Identifier replacements kept per site.
pub const MAX_VARIABLE_REPLACEMENTS: usize = 3;

const ARITHMETIC: [BinOp; 4] = [BinOp::Add, BinOp::Sub, BinOp::Mul, BinOp::Div];
const COMPARISON: [BinOp; 6] = [BinOp::Lt, BinOp::Le, BinOp::Gt, BinOp::Ge, BinOp::Eq, BinOp::Ne];
const COMPOUND: [AssignOp; 4] = [AssignOp::Add, AssignOp::Sub, AssignOp::Mul, AssignOp::Div];

fn swaps(op: BinOp) -> Vec<BinOp> {
    let group: &[BinOp] = if ARITHMETIC.contains(&op) {
        &ARITHMETIC
    } else if COMPARISON.contains(&op) {
        &COMPARISON
    } else {
        &[]
    };
    group.iter().copied().filter(|&o| o != op).collect()
}

/// Statement rendering for descriptors; compound statements show only
/// their header.
pub(crate) fn stmt_text(s: &Stmt) -> String {
    match &s.kind {
        StmtKind::If { cond, .. } => format!("if ({}) {{ .. }}", expr_text(cond)),
        StmtKind::While { cond, .. } => format!("while ({}) {{ .. }}", expr_text(cond)),
        StmtKind::For { init, cond, update, .. } => format!(
            "for ({}; {}; {}) {{ .. }}",
            init.as_deref().map(simple_stmt).unwrap_or_default(),
            cond.as_ref().map(expr_text).unwrap_or_default(),
            update.as_deref().map(simple_stmt).unwrap_or_default()
        ),
        StmtKind::Block(_) => "{ .. }".to_string(),
        StmtKind::Return(None) => "return;".to_string(),
        StmtKind::Return(Some(e)) => format!("return {};", expr_text(e)),
        StmtKind::Require(e) => format!("require({});", expr_text(e)),
        StmtKind::Revert => "revert();".to_string(),
        StmtKind::Log(t) => format!("log(\"{t}\");"),
        StmtKind::VarDecl { .. } | StmtKind::Assign { .. } | StmtKind::Expr(_) => format!("{};", simple_stmt(s)),
    }
}

/// Calls `f` on every statement of `block` and its nested blocks, parents
/// first; `for` clauses are not visited.
fn for_each_stmt_mut(block: &mut Block, f: &mut impl FnMut(&mut Stmt)) {
    for s in &mut block.stmts {
        f(s);
        match &mut s.kind {
            StmtKind::If {
                then_block,
                else_block,
                ..
            } => {
                for_each_stmt_mut(then_block, f);
                if let Some(b) = else_block {
                    for_each_stmt_mut(b, f);
                }
            }
            StmtKind::While { body, .. } | StmtKind::For { body, .. } => for_each_stmt_mut(body, f),
            StmtKind::Block(b) => for_each_stmt_mut(b, f),
            _ => {}
        }
    }
}

/// Calls `f` on `block` and every nested block, parents first.
fn for_each_block_mut(block: &mut Block, f: &mut impl FnMut(&mut Block)) {
    f(block);
    for s in &mut block.stmts {
        match &mut s.kind {
            StmtKind::If {
                then_block,
                else_block,
                ..
            } => {
                for_each_block_mut(then_block, f);
                if let Some(b) = else_block {
                    for_each_block_mut(b, f);
                }
            }
            StmtKind::While { body, .. } | StmtKind::For { body, .. } => for_each_block_mut(body, f),
            StmtKind::Block(b) => for_each_block_mut(b, f),
            _ => {}
        }
    }
}

/// One candidate edit of a function body.
#[derive(Debug, Clone)]
enum Edit {
    BinOp { site: usize, to: BinOp },
    AssignOp { site: usize, to: AssignOp },
    Ident { site: usize, to: String },
    Omit { block: usize, index: usize },
}

/// Applies `edit` to `body`, returning the span, original and replacement
/// fragments of the edited site.
fn apply(body: &mut Block, edit: &Edit) -> Option<(Span, String, String)> {
    let mut out = None;
    match edit {
        Edit::BinOp { site, to } => {
            let mut n = 0;
            for_each_expr_mut(body, &mut |e| {
                if let ExprKind::Binary(op, ..) = &e.kind {
                    if swaps(*op).is_empty() {
                        return;
                    }
                    if n == *site {
                        let before = expr_text(e);
                        if let ExprKind::Binary(op, ..) = &mut e.kind {
                            *op = *to;
                        }
                        out = Some((e.span, before, expr_text(e)));
                    }
                    n += 1;
                }
            });
        }
        Edit::AssignOp { site, to } => {
            let mut n = 0;
            for_each_stmt_mut(body, &mut |s| {
                if let StmtKind::Assign { op, .. } = &s.kind {
                    if !COMPOUND.contains(op) {
                        return;
                    }
                    if n == *site {
                        let before = stmt_text(s);
                        if let StmtKind::Assign { op, .. } = &mut s.kind {
                            *op = *to;
                        }
                        out = Some((s.span, before, stmt_text(s)));
                    }
                    n += 1;
                }
            });
        }
        Edit::Ident { site, to } => {
            let mut n = 0;
            for_each_expr_mut(body, &mut |e| {
                if let ExprKind::Ident(name) = &mut e.kind {
                    if n == *site {
                        let before = name.clone();
                        *name = to.clone();
                        out = Some((e.span, before, to.clone()));
                    }
                    n += 1;
                }
            });
        }
        Edit::Omit { block, index } => {
            let mut n = 0;
            for_each_block_mut(body, &mut |b| {
                if n == *block && *index < b.stmts.len() {
                    let s = b.stmts.remove(*index);
                    out = Some((s.span, stmt_text(&s), String::new()));
                }
                n += 1;
            });
        }
    }
    out
}

/// Identifier sites of `body` in visit order.
fn ident_sites(body: &Block) -> Vec<String> {
    let mut body = body.clone();
    let mut names = Vec::new();
    for_each_expr_mut(&mut body, &mut |e| {
        if let ExprKind::Ident(name) = &e.kind {
            names.push(name.clone());
        }
    });
    names
}

/// Variables declared anywhere in `f`, plus the contract's state variables,
/// with every type each name is declared at.
fn variable_types(unit: &SourceUnit, contract: usize, f: &FunctionDecl) -> BTreeMap<String, BTreeSet<Type>> {
    let mut types: BTreeMap<String, BTreeSet<Type>> = BTreeMap::new();
    for v in &unit.contracts[contract].state_vars {
        types.entry(v.name.clone()).or_default().insert(v.ty.clone());
    }
    for p in &f.params {
        types.entry(p.name.clone()).or_default().insert(p.ty.clone());
    }
    walk_stmts(&f.body, &mut |s: &Stmt| {
        if let StmtKind::VarDecl { ty, name, .. } = &s.kind {
            types.entry(name.clone()).or_default().insert(ty.clone());
        }
    });
    types
}

fn candidate_edits(unit: &SourceUnit, contract: usize, function: usize, operators: &[MutationOperator]) -> Vec<(MutationOperator, Vec<Edit>)> {
    let f = &unit.contracts[contract].functions[function];
    let mut body = f.body.clone();
    let mut out = Vec::new();
    if operators.contains(&MutationOperator::OperatorReplacement) {
        let mut ops = Vec::new();
        for_each_expr_mut(&mut body, &mut |e| {
            if let ExprKind::Binary(op, ..) = &e.kind {
                if !swaps(*op).is_empty() {
                    ops.push(*op);
                }
            }
        });
        for (site, op) in ops.into_iter().enumerate() {
            let edits = swaps(op).into_iter().map(|to| Edit::BinOp { site, to }).collect();
            out.push((MutationOperator::OperatorReplacement, edits));
        }
        let mut assigns = Vec::new();
        for_each_stmt_mut(&mut body, &mut |s| {
            if let StmtKind::Assign { op, .. } = &s.kind {
                if COMPOUND.contains(op) {
                    assigns.push(*op);
                }
            }
        });
        for (site, op) in assigns.into_iter().enumerate() {
            let edits = COMPOUND
                .iter()
                .filter(|&&o| o != op)
                .map(|&to| Edit::AssignOp { site, to })
                .collect();
            out.push((MutationOperator::OperatorReplacement, edits));
        }
    }
    if operators.contains(&MutationOperator::VariableReplacement) {
        let types = variable_types(unit, contract, f);
        for (site, name) in ident_sites(&f.body).into_iter().enumerate() {
            let Some(own) = types.get(&name) else {
                continue;
            };
            // BTreeMap order is smallest name first.
            let edits = types
                .iter()
                .filter(|(other, tys)| **other != name && !tys.is_disjoint(own))
                .map(|(other, _)| Edit::Ident {
                    site,
                    to: other.clone(),
                })
                .collect();
            out.push((MutationOperator::VariableReplacement, edits));
        }
    }
    if operators.contains(&MutationOperator::StatementOmission) {
        let mut blocks = Vec::new();
        for_each_block_mut(&mut body, &mut |b| {
            blocks.push(b.stmts.iter().map(|s| s.kind.is_declaration()).collect::<Vec<_>>());
        });
        for (block, decls) in blocks.into_iter().enumerate() {
            for (index, is_decl) in decls.into_iter().enumerate() {
                if !is_decl {
                    out.push((MutationOperator::StatementOmission, vec![Edit::Omit { block, index }]));
                }
            }
        }
    }
    out
}

/// Whether `text` is a valid program: it parses, resolves, type-checks and
/// yields a dapp model.
pub(crate) fn compiles(text: &str) -> bool {
    let probe = [AccountRole::new("probe", 0u64)];
    parse_source(text).is_ok_and(|u| build_dapp_model(&u, &probe).is_ok())
}

/// Every valid single-site mutant of `unit` under `operators`, numbered
/// `m0001`, `m0002`, .. in enumeration order.
pub fn generate_mutants(unit: &SourceUnit, operators: &[MutationOperator]) -> Vec<Mutant> {
    let original = pretty_print(unit);
    let mut out = Vec::new();
    for (ci, c) in unit.contracts.iter().enumerate() {
        for (fi, f) in c.functions.iter().enumerate() {
            for (operator, edits) in candidate_edits(unit, ci, fi, operators) {
                let cap = match operator {
                    MutationOperator::VariableReplacement => MAX_VARIABLE_REPLACEMENTS,
                    _ => usize::MAX,
                };
                let mut kept = 0;
                for edit in edits {
                    if kept == cap {
                        break;
                    }
                    let mut mutated = unit.clone();
                    let body = &mut mutated.contracts[ci].functions[fi].body;
                    let Some((span, before, after)) = apply(body, &edit) else {
                        continue;
                    };
                    let source = pretty_print(&mutated);
                    if source == original || !compiles(&source) {
                        continue;
                    }
                    kept += 1;
                    out.push(Mutant {
                        descriptor: MutantDescriptor {
                            id: format!("m{:04}", out.len() + 1),
                            operator,
                            contract: c.name.clone(),
                            function: f.name.clone(),
                            location: span,
                            original: before,
                            replacement: after,
                            equivalent: false,
                            note: None,
                        },
                        source,
                    });
                }
            }
        }
    }
    out
}
