// SPDX-License-Identifier: Apache-2.0

//! Recursive descent parser for MiniSol.

use super::ast::*;
use super::lexer::{tokenize, Tok, Token};
use super::FrontendError;

type PResult<T> = Result<T, FrontendError>;

/// Parses source text into an unresolved syntax tree.
pub fn parse_syntax(src: &str) -> PResult<SourceUnit> {
    let tokens = tokenize(src)?;
    let mut parser = Parser { tokens, pos: 0 };
    let mut contracts = Vec::new();
    while !parser.at_eof() {
        contracts.push(parser.contract()?);
    }
    Ok(SourceUnit { contracts })
}

struct Parser {
    tokens: Vec<Token>,
    pos: usize,
}

impl Parser {
    fn peek(&self) -> &Tok {
        &self.tokens[self.pos].tok
    }

    fn peek_at(&self, n: usize) -> &Tok {
        let idx = (self.pos + n).min(self.tokens.len() - 1);
        &self.tokens[idx].tok
    }

    fn span(&self) -> Span {
        self.tokens[self.pos].span
    }

    fn at_eof(&self) -> bool {
        matches!(self.peek(), Tok::Eof)
    }

    fn bump(&mut self) -> Token {
        let t = self.tokens[self.pos].clone();
        if self.pos + 1 < self.tokens.len() {
            self.pos += 1;
        }
        t
    }

    fn is_punct(&self, p: &str) -> bool {
        matches!(self.peek(), Tok::Punct(q) if *q == p)
    }

    fn is_kw(&self, k: &str) -> bool {
        matches!(self.peek(), Tok::Keyword(q) if *q == k)
    }

    fn eat_punct(&mut self, p: &str) -> bool {
        if self.is_punct(p) {
            self.bump();
            true
        } else {
            false
        }
    }

    fn eat_kw(&mut self, k: &str) -> bool {
        if self.is_kw(k) {
            self.bump();
            true
        } else {
            false
        }
    }

    fn error<T>(&self, expected: impl Into<String>) -> PResult<T> {
        Err(FrontendError::Syntax {
            span: self.span(),
            expected: expected.into(),
            found: self.peek().to_string(),
        })
    }

    fn expect_punct(&mut self, p: &str) -> PResult<Span> {
        if self.is_punct(p) {
            Ok(self.bump().span)
        } else {
            self.error(format!("`{p}`"))
        }
    }

    fn expect_kw(&mut self, k: &str) -> PResult<Span> {
        if self.is_kw(k) {
            Ok(self.bump().span)
        } else {
            self.error(format!("`{k}`"))
        }
    }

    fn ident(&mut self) -> PResult<String> {
        match self.peek().clone() {
            Tok::Ident(name) => {
                self.bump();
                Ok(name)
            }
            _ => self.error("identifier"),
        }
    }

    fn contract(&mut self) -> PResult<ContractDecl> {
        let span = self.expect_kw("contract")?;
        let name = self.ident()?;
        self.expect_punct("{")?;
        let mut state_vars = Vec::new();
        let mut functions = Vec::new();
        while !self.is_punct("}") {
            if self.is_kw("function") || self.is_kw("constructor") || self.is_kw("fallback") {
                functions.push(self.function()?);
            } else if self.starts_type() {
                state_vars.push(self.state_var()?);
            } else {
                return self.error("state variable or function declaration");
            }
        }
        self.expect_punct("}")?;
        Ok(ContractDecl {
            name,
            state_vars,
            functions,
            span,
        })
    }

    fn starts_type(&self) -> bool {
        matches!(
            self.peek(),
            Tok::Keyword("uint" | "uint256" | "bool" | "address" | "string" | "mapping")
        )
    }

    fn ty(&mut self) -> PResult<Type> {
        let mut ty = match self.peek() {
            Tok::Keyword("uint" | "uint256") => {
                self.bump();
                Type::Uint
            }
            Tok::Keyword("bool") => {
                self.bump();
                Type::Bool
            }
            Tok::Keyword("address") => {
                self.bump();
                self.eat_kw("payable");
                Type::Address
            }
            Tok::Keyword("string") => {
                self.bump();
                Type::String
            }
            Tok::Keyword("mapping") => {
                self.bump();
                self.expect_punct("(")?;
                let key = self.ty()?;
                self.expect_punct("=>")?;
                let value = self.ty()?;
                self.expect_punct(")")?;
                Type::Mapping(Box::new(key), Box::new(value))
            }
            _ => return self.error("type"),
        };
        while self.is_punct("[") && matches!(self.peek_at(1), Tok::Punct("]")) {
            self.bump();
            self.bump();
            ty = Type::Array(Box::new(ty));
        }
        Ok(ty)
    }

    fn state_var(&mut self) -> PResult<StateVarDecl> {
        let span = self.span();
        let ty = self.ty()?;
        let mut public = false;
        loop {
            if self.eat_kw("public") {
                public = true;
            } else if !(self.eat_kw("private") || self.eat_kw("internal")) {
                break;
            }
        }
        let name = self.ident()?;
        self.expect_punct(";")?;
        Ok(StateVarDecl {
            name,
            ty,
            public,
            span,
        })
    }

    fn function(&mut self) -> PResult<FunctionDecl> {
        let span = self.span();
        let (kind, name) = if self.eat_kw("constructor") {
            (FunctionKind::Constructor, "constructor".to_string())
        } else if self.eat_kw("fallback") {
            (FunctionKind::Fallback, "fallback".to_string())
        } else {
            self.expect_kw("function")?;
            (FunctionKind::Ordinary, self.ident()?)
        };
        self.expect_punct("(")?;
        let mut params = Vec::new();
        if !self.is_punct(")") {
            loop {
                let ty = self.ty()?;
                let pname = self.ident()?;
                params.push(Param { name: pname, ty });
                if !self.eat_punct(",") {
                    break;
                }
            }
        }
        self.expect_punct(")")?;

        let mut visibility = None;
        let mut mutability = None;
        let mut returns = Vec::new();
        loop {
            let vis = match self.peek() {
                Tok::Keyword("public") => Some(Visibility::Public),
                Tok::Keyword("external") => Some(Visibility::External),
                Tok::Keyword("internal") => Some(Visibility::Internal),
                Tok::Keyword("private") => Some(Visibility::Private),
                _ => None,
            };
            if let Some(v) = vis {
                if visibility.is_some() {
                    return self.error("at most one visibility specifier");
                }
                self.bump();
                visibility = Some(v);
                continue;
            }
            let m = match self.peek() {
                Tok::Keyword("view") => Some(Mutability::View),
                Tok::Keyword("pure") => Some(Mutability::Pure),
                Tok::Keyword("payable") => Some(Mutability::Payable),
                _ => None,
            };
            if let Some(m) = m {
                if mutability.is_some() {
                    return self.error("at most one mutability specifier");
                }
                self.bump();
                mutability = Some(m);
                continue;
            }
            if self.eat_kw("returns") {
                self.expect_punct("(")?;
                loop {
                    returns.push(self.ty()?);
                    // Named return values are accepted and ignored.
                    if matches!(self.peek(), Tok::Ident(_)) {
                        self.bump();
                    }
                    if !self.eat_punct(",") {
                        break;
                    }
                }
                self.expect_punct(")")?;
                continue;
            }
            break;
        }
        let default_vis = match kind {
            FunctionKind::Fallback => Visibility::External,
            _ => Visibility::Public,
        };
        let body = self.block()?;
        Ok(FunctionDecl {
            name,
            kind,
            params,
            returns,
            visibility: visibility.unwrap_or(default_vis),
            mutability: mutability.unwrap_or(Mutability::StateChanging),
            body,
            span,
        })
    }

    fn block(&mut self) -> PResult<Block> {
        let span = self.expect_punct("{")?;
        let mut stmts = Vec::new();
        while !self.is_punct("}") {
            if self.at_eof() {
                return self.error("`}`");
            }
            stmts.push(self.stmt()?);
        }
        self.expect_punct("}")?;
        Ok(Block { stmts, span })
    }

    /// A statement body; a bare statement is wrapped into a block.
    fn body(&mut self) -> PResult<Block> {
        if self.is_punct("{") {
            self.block()
        } else {
            let span = self.span();
            let stmt = self.stmt()?;
            Ok(Block {
                stmts: vec![stmt],
                span,
            })
        }
    }

    fn stmt(&mut self) -> PResult<Stmt> {
        let span = self.span();
        let kind = match self.peek() {
            Tok::Punct("{") => StmtKind::Block(self.block()?),
            Tok::Keyword("if") => {
                self.bump();
                self.expect_punct("(")?;
                let cond = self.expr()?;
                self.expect_punct(")")?;
                let then_block = self.body()?;
                let else_block = if self.eat_kw("else") {
                    if self.is_kw("if") {
                        let nested_span = self.span();
                        let nested = self.stmt()?;
                        Some(Block {
                            stmts: vec![nested],
                            span: nested_span,
                        })
                    } else {
                        Some(self.body()?)
                    }
                } else {
                    None
                };
                StmtKind::If {
                    cond,
                    then_block,
                    else_block,
                }
            }
            Tok::Keyword("while") => {
                self.bump();
                self.expect_punct("(")?;
                let cond = self.expr()?;
                self.expect_punct(")")?;
                StmtKind::While {
                    cond,
                    body: self.body()?,
                }
            }
            Tok::Keyword("for") => {
                self.bump();
                self.expect_punct("(")?;
                let init = if self.is_punct(";") {
                    None
                } else {
                    Some(Box::new(self.simple_stmt()?))
                };
                self.expect_punct(";")?;
                let cond = if self.is_punct(";") {
                    None
                } else {
                    Some(self.expr()?)
                };
                self.expect_punct(";")?;
                let update = if self.is_punct(")") {
                    None
                } else {
                    Some(Box::new(self.simple_stmt()?))
                };
                self.expect_punct(")")?;
                StmtKind::For {
                    init,
                    cond,
                    update,
                    body: self.body()?,
                }
            }
            Tok::Keyword("return") => {
                self.bump();
                let value = if self.is_punct(";") {
                    None
                } else {
                    Some(self.expr()?)
                };
                self.expect_punct(";")?;
                StmtKind::Return(value)
            }
            Tok::Keyword("require") => {
                self.bump();
                self.expect_punct("(")?;
                let cond = self.expr()?;
                self.expect_punct(")")?;
                self.expect_punct(";")?;
                StmtKind::Require(cond)
            }
            Tok::Keyword("revert") => {
                self.bump();
                self.expect_punct("(")?;
                self.expect_punct(")")?;
                self.expect_punct(";")?;
                StmtKind::Revert
            }
            Tok::Keyword("log") => {
                self.bump();
                self.expect_punct("(")?;
                let text = match self.peek().clone() {
                    Tok::Str(s) => {
                        self.bump();
                        s
                    }
                    _ => return self.error("string literal"),
                };
                self.expect_punct(")")?;
                self.expect_punct(";")?;
                StmtKind::Log(text)
            }
            _ => {
                let s = self.simple_stmt()?;
                self.expect_punct(";")?;
                return Ok(s);
            }
        };
        Ok(Stmt { kind, span })
    }

    /// Declaration, assignment, increment or call; no trailing `;`.
    fn simple_stmt(&mut self) -> PResult<Stmt> {
        let span = self.span();
        let is_decl = self.starts_type()
            && !(self.is_kw("address") && matches!(self.peek_at(1), Tok::Punct("(")));
        if is_decl {
            let ty = self.ty()?;
            let name = self.ident()?;
            let init = if self.eat_punct("=") {
                Some(self.expr()?)
            } else {
                None
            };
            return Ok(Stmt {
                kind: StmtKind::VarDecl { ty, name, init },
                span,
            });
        }
        let target = self.expr()?;
        let op = match self.peek() {
            Tok::Punct("=") => Some(AssignOp::Assign),
            Tok::Punct("+=") => Some(AssignOp::Add),
            Tok::Punct("-=") => Some(AssignOp::Sub),
            Tok::Punct("*=") => Some(AssignOp::Mul),
            Tok::Punct("/=") => Some(AssignOp::Div),
            _ => None,
        };
        if let Some(op) = op {
            self.bump();
            let value = self.expr()?;
            return Ok(Stmt {
                kind: StmtKind::Assign { target, op, value },
                span,
            });
        }
        if self.is_punct("++") || self.is_punct("--") {
            let op_span = self.bump().span;
            let op = if matches!(self.tokens[self.pos - 1].tok, Tok::Punct("++")) {
                AssignOp::Add
            } else {
                AssignOp::Sub
            };
            let one = Expr::new(ExprKind::Lit(Literal::Number("1".into())), op_span);
            return Ok(Stmt {
                kind: StmtKind::Assign {
                    target,
                    op,
                    value: one,
                },
                span,
            });
        }
        Ok(Stmt {
            kind: StmtKind::Expr(target),
            span,
        })
    }

    pub fn expr(&mut self) -> PResult<Expr> {
        self.binary(1)
    }

    fn binop(&self) -> Option<BinOp> {
        Some(match self.peek() {
            Tok::Punct("||") => BinOp::Or,
            Tok::Punct("&&") => BinOp::And,
            Tok::Punct("==") => BinOp::Eq,
            Tok::Punct("!=") => BinOp::Ne,
            Tok::Punct("<") => BinOp::Lt,
            Tok::Punct("<=") => BinOp::Le,
            Tok::Punct(">") => BinOp::Gt,
            Tok::Punct(">=") => BinOp::Ge,
            Tok::Punct("+") => BinOp::Add,
            Tok::Punct("-") => BinOp::Sub,
            Tok::Punct("*") => BinOp::Mul,
            Tok::Punct("/") => BinOp::Div,
            Tok::Punct("%") => BinOp::Mod,
            _ => return None,
        })
    }

    // Precedence climbing; all binary operators are left associative.
    fn binary(&mut self, min_prec: u8) -> PResult<Expr> {
        let mut lhs = self.unary()?;
        while let Some(op) = self.binop() {
            let prec = op.precedence();
            if prec < min_prec {
                break;
            }
            let span = lhs.span;
            self.bump();
            let rhs = self.binary(prec + 1)?;
            lhs = Expr::new(ExprKind::Binary(op, Box::new(lhs), Box::new(rhs)), span);
        }
        Ok(lhs)
    }

    fn unary(&mut self) -> PResult<Expr> {
        if self.is_punct("!") {
            let span = self.bump().span;
            let inner = self.unary()?;
            return Ok(Expr::new(ExprKind::Not(Box::new(inner)), span));
        }
        let base = self.primary()?;
        self.postfix(base)
    }

    fn primary(&mut self) -> PResult<Expr> {
        let span = self.span();
        let kind = match self.peek().clone() {
            Tok::Number(n) => {
                self.bump();
                ExprKind::Lit(Literal::Number(n))
            }
            Tok::Str(s) => {
                self.bump();
                ExprKind::Lit(Literal::String(s))
            }
            Tok::Keyword("true") => {
                self.bump();
                ExprKind::Lit(Literal::Bool(true))
            }
            Tok::Keyword("false") => {
                self.bump();
                ExprKind::Lit(Literal::Bool(false))
            }
            Tok::Keyword("now") => {
                self.bump();
                ExprKind::Now
            }
            Tok::Keyword("this") => {
                self.bump();
                ExprKind::This
            }
            Tok::Keyword("msg") => {
                self.bump();
                self.expect_punct(".")?;
                match self.peek().clone() {
                    Tok::Ident(ref m) if m == "sender" => {
                        self.bump();
                        ExprKind::MsgSender
                    }
                    Tok::Ident(ref m) if m == "value" => {
                        self.bump();
                        ExprKind::MsgValue
                    }
                    _ => return self.error("`sender` or `value`"),
                }
            }
            Tok::Keyword("address") => {
                self.bump();
                self.expect_punct("(")?;
                let kind = match self.peek().clone() {
                    Tok::Number(n) if n.chars().all(|c| c == '0') => {
                        self.bump();
                        ExprKind::Lit(Literal::ZeroAddress)
                    }
                    Tok::Keyword("this") => {
                        self.bump();
                        ExprKind::This
                    }
                    _ => return self.error("`0` or `this`"),
                };
                self.expect_punct(")")?;
                kind
            }
            Tok::Punct("(") => {
                self.bump();
                let inner = self.expr()?;
                self.expect_punct(")")?;
                return Ok(inner);
            }
            Tok::Ident(name) => {
                self.bump();
                if self.is_punct("(") {
                    let args = self.args()?;
                    ExprKind::Call(Callee::Internal(name), args)
                } else {
                    ExprKind::Ident(name)
                }
            }
            _ => return self.error("expression"),
        };
        Ok(Expr::new(kind, span))
    }

    fn args(&mut self) -> PResult<Vec<Expr>> {
        self.expect_punct("(")?;
        let mut args = Vec::new();
        if !self.is_punct(")") {
            loop {
                args.push(self.expr()?);
                if !self.eat_punct(",") {
                    break;
                }
            }
        }
        self.expect_punct(")")?;
        Ok(args)
    }

    fn postfix(&mut self, mut base: Expr) -> PResult<Expr> {
        loop {
            let span = base.span;
            if self.eat_punct("[") {
                let index = self.expr()?;
                self.expect_punct("]")?;
                base = Expr::new(ExprKind::Index(Box::new(base), Box::new(index)), span);
                continue;
            }
            if !self.eat_punct(".") {
                return Ok(base);
            }
            let member = self.ident()?;
            base = match member.as_str() {
                "push" if self.is_punct("(") => {
                    let args = self.args()?;
                    Expr::new(ExprKind::Call(Callee::Push(Box::new(base)), args), span)
                }
                "transfer" if self.is_punct("(") => {
                    let args = self.args()?;
                    Expr::new(ExprKind::Call(Callee::Transfer(Box::new(base)), args), span)
                }
                "call" => {
                    let value = if self.eat_punct(".") {
                        let v = self.ident()?;
                        if v != "value" {
                            return Err(FrontendError::Syntax {
                                span: self.tokens[self.pos - 1].span,
                                expected: "`value`".into(),
                                found: format!("identifier `{v}`"),
                            });
                        }
                        self.expect_punct("(")?;
                        let amount = self.expr()?;
                        self.expect_punct(")")?;
                        Some(Box::new(amount))
                    } else {
                        None
                    };
                    self.expect_punct("(")?;
                    self.expect_punct(")")?;
                    Expr::new(
                        ExprKind::Call(
                            Callee::LowLevel {
                                target: Box::new(base),
                                value,
                            },
                            Vec::new(),
                        ),
                        span,
                    )
                }
                _ if self.is_punct("(") => match &base.kind {
                    ExprKind::Ident(contract) => {
                        let contract = contract.clone();
                        let args = self.args()?;
                        Expr::new(
                            ExprKind::Call(
                                Callee::External {
                                    contract,
                                    function: member,
                                },
                                args,
                            ),
                            span,
                        )
                    }
                    _ => return self.error("member access"),
                },
                _ => Expr::new(ExprKind::Member(Box::new(base), member), span),
            };
        }
    }
}
