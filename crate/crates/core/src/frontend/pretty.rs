// SPDX-License-Identifier: Apache-2.0

//! Canonical MiniSol rendering of a syntax tree.
//!
//! Re-parsing the output yields the same tree up to spans. `x++` is printed
//! as `x += 1`, which is what the parser produces for it.

use super::ast::*;
use std::fmt::Write;

pub fn pretty_print(unit: &SourceUnit) -> String {
    let mut p = Printer::default();
    for (i, c) in unit.contracts.iter().enumerate() {
        if i > 0 {
            p.out.push('\n');
        }
        p.contract(c);
    }
    p.out
}

#[derive(Default)]
struct Printer {
    out: String,
    indent: usize,
}

impl Printer {
    fn line(&mut self, text: &str) {
        for _ in 0..self.indent {
            self.out.push_str("    ");
        }
        self.out.push_str(text);
        self.out.push('\n');
    }

    fn contract(&mut self, c: &ContractDecl) {
        self.line(&format!("contract {} {{", c.name));
        self.indent += 1;
        for v in &c.state_vars {
            let vis = if v.public { " public" } else { "" };
            self.line(&format!("{}{} {};", v.ty, vis, v.name));
        }
        for f in &c.functions {
            self.function(f);
        }
        self.indent -= 1;
        self.line("}");
    }

    fn function(&mut self, f: &FunctionDecl) {
        let params: Vec<String> = f
            .params
            .iter()
            .map(|p| format!("{} {}", p.ty, p.name))
            .collect();
        let mut head = match f.kind {
            FunctionKind::Ordinary => format!("function {}(", f.name),
            FunctionKind::Constructor => "constructor(".to_string(),
            FunctionKind::Fallback => "fallback(".to_string(),
        };
        head.push_str(&params.join(", "));
        head.push(')');
        write!(head, " {}", f.visibility.keyword()).unwrap();
        match f.mutability {
            Mutability::StateChanging => {}
            Mutability::View => head.push_str(" view"),
            Mutability::Pure => head.push_str(" pure"),
            Mutability::Payable => head.push_str(" payable"),
        }
        if !f.returns.is_empty() {
            let rets: Vec<String> = f.returns.iter().map(Type::to_string).collect();
            write!(head, " returns ({})", rets.join(", ")).unwrap();
        }
        head.push_str(" {");
        self.line(&head);
        self.block_body(&f.body);
        self.line("}");
    }

    fn block_body(&mut self, b: &Block) {
        self.indent += 1;
        for s in &b.stmts {
            self.stmt(s);
        }
        self.indent -= 1;
    }

    fn stmt(&mut self, s: &Stmt) {
        match &s.kind {
            StmtKind::If {
                cond,
                then_block,
                else_block,
            } => {
                self.line(&format!("if ({}) {{", expr(cond)));
                self.block_body(then_block);
                match else_block {
                    Some(b) => {
                        self.line("} else {");
                        self.block_body(b);
                        self.line("}");
                    }
                    None => self.line("}"),
                }
            }
            StmtKind::While { cond, body } => {
                self.line(&format!("while ({}) {{", expr(cond)));
                self.block_body(body);
                self.line("}");
            }
            StmtKind::For {
                init,
                cond,
                update,
                body,
            } => {
                let init = init.as_deref().map(simple_stmt).unwrap_or_default();
                let cond = cond.as_ref().map(expr).unwrap_or_default();
                let update = update.as_deref().map(simple_stmt).unwrap_or_default();
                self.line(&format!("for ({init}; {cond}; {update}) {{"));
                self.block_body(body);
                self.line("}");
            }
            StmtKind::Block(b) => {
                self.line("{");
                self.block_body(b);
                self.line("}");
            }
            StmtKind::Return(None) => self.line("return;"),
            StmtKind::Return(Some(e)) => self.line(&format!("return {};", expr(e))),
            StmtKind::Require(e) => self.line(&format!("require({});", expr(e))),
            StmtKind::Revert => self.line("revert();"),
            StmtKind::Log(text) => self.line(&format!("log(\"{text}\");")),
            StmtKind::VarDecl { .. } | StmtKind::Assign { .. } | StmtKind::Expr(_) => {
                self.line(&format!("{};", simple_stmt(s)))
            }
        }
    }
}

/// A declaration, assignment or call without the trailing `;`.
pub(crate) fn simple_stmt(s: &Stmt) -> String {
    match &s.kind {
        StmtKind::VarDecl { ty, name, init } => match init {
            Some(e) => format!("{ty} {name} = {}", expr(e)),
            None => format!("{ty} {name}"),
        },
        StmtKind::Assign { target, op, value } => {
            format!("{} {} {}", expr(target), op.symbol(), expr(value))
        }
        StmtKind::Expr(e) => expr(e),
        other => unreachable!("not a simple statement: {other:?}"),
    }
}

pub(crate) fn expr(e: &Expr) -> String {
    match &e.kind {
        ExprKind::Lit(Literal::Number(n)) => n.clone(),
        ExprKind::Lit(Literal::Bool(b)) => b.to_string(),
        ExprKind::Lit(Literal::String(s)) => format!("\"{s}\""),
        ExprKind::Lit(Literal::ZeroAddress) => "address(0)".into(),
        ExprKind::Ident(name) => name.clone(),
        ExprKind::MsgSender => "msg.sender".into(),
        ExprKind::MsgValue => "msg.value".into(),
        ExprKind::Now => "now".into(),
        ExprKind::This => "this".into(),
        ExprKind::Not(inner) => format!("!{}", postfix_operand(inner)),
        ExprKind::Binary(op, l, r) => {
            let prec = op.precedence();
            let left = match &l.kind {
                ExprKind::Binary(lop, ..) if lop.precedence() < prec => format!("({})", expr(l)),
                _ => expr(l),
            };
            // Left associativity: an equal-precedence right operand needs parentheses.
            let right = match &r.kind {
                ExprKind::Binary(rop, ..) if rop.precedence() <= prec => format!("({})", expr(r)),
                _ => expr(r),
            };
            format!("{left} {} {right}", op.symbol())
        }
        ExprKind::Index(base, idx) => format!("{}[{}]", postfix_operand(base), expr(idx)),
        ExprKind::Member(base, name) => format!("{}.{name}", postfix_operand(base)),
        ExprKind::Call(callee, args) => {
            let args: Vec<String> = args.iter().map(expr).collect();
            let args = args.join(", ");
            match callee {
                Callee::Internal(name) => format!("{name}({args})"),
                Callee::External { contract, function } => format!("{contract}.{function}({args})"),
                Callee::Push(base) => format!("{}.push({args})", postfix_operand(base)),
                Callee::Transfer(base) => format!("{}.transfer({args})", postfix_operand(base)),
                Callee::LowLevel { target, value } => match value {
                    Some(v) => format!("{}.call.value({})()", postfix_operand(target), expr(v)),
                    None => format!("{}.call()", postfix_operand(target)),
                },
            }
        }
    }
}

fn postfix_operand(e: &Expr) -> String {
    match e.kind {
        ExprKind::Binary(..) | ExprKind::Not(_) => format!("({})", expr(e)),
        _ => expr(e),
    }
}
