// SPDX-License-Identifier: Apache-2.0

//! Name resolution and type checking.

use super::ast::*;
use super::visit::for_each_expr_mut;
use super::FrontendError;
use crate::word::Word;
use std::collections::{BTreeMap, BTreeSet};

type CResult<T> = Result<T, FrontendError>;

pub(super) fn check_unit(unit: &mut SourceUnit) -> CResult<()> {
    let mut contract_names = BTreeSet::new();
    for c in &unit.contracts {
        if !contract_names.insert(c.name.clone()) {
            return Err(FrontendError::Duplicate {
                what: "contract",
                name: c.name.clone(),
                span: c.span,
            });
        }
    }
    normalise_contract_transfers(unit, &contract_names);

    let unit: &SourceUnit = unit;
    for c in &unit.contracts {
        check_declarations(c, &contract_names)?;
    }
    for c in &unit.contracts {
        for f in &c.functions {
            let mut checker = FnChecker {
                unit,
                contract: c,
                function: f,
                scopes: vec![BTreeMap::new()],
            };
            checker.check()?;
        }
    }
    Ok(())
}

/// `C.transfer(a, b)` parses like an ether transfer; rewrite it when `C`
/// names a contract. Variables cannot share names with contracts, so the
/// rewrite is unambiguous.
fn normalise_contract_transfers(unit: &mut SourceUnit, contracts: &BTreeSet<String>) {
    for c in &mut unit.contracts {
        for f in &mut c.functions {
            for_each_expr_mut(&mut f.body, &mut |e: &mut Expr| {
                if let ExprKind::Call(Callee::Transfer(base), _) = &e.kind {
                    if let ExprKind::Ident(name) = &base.kind {
                        if contracts.contains(name) {
                            let contract = name.clone();
                            if let ExprKind::Call(callee, _) = &mut e.kind {
                                *callee = Callee::External {
                                    contract,
                                    function: "transfer".into(),
                                };
                            }
                        }
                    }
                }
            });
        }
    }
}

fn type_error<T>(span: Span, message: impl Into<String>) -> CResult<T> {
    Err(FrontendError::Type {
        span,
        message: message.into(),
    })
}

fn check_storage_type(ty: &Type, span: Span) -> CResult<()> {
    match ty {
        Type::Uint | Type::Bool | Type::Address => Ok(()),
        Type::Array(elem) if elem.is_scalar() => Ok(()),
        Type::Mapping(k, v) if k.is_scalar() && v.is_scalar() => Ok(()),
        other => type_error(span, format!("unsupported state variable type `{other}`")),
    }
}

fn check_value_type(ty: &Type, span: Span, what: &str) -> CResult<()> {
    if ty.is_scalar() {
        Ok(())
    } else {
        type_error(span, format!("{what} must have a scalar type, found `{ty}`"))
    }
}

fn check_declarations(c: &ContractDecl, contracts: &BTreeSet<String>) -> CResult<()> {
    let mut names = BTreeSet::new();
    for v in &c.state_vars {
        if contracts.contains(&v.name) {
            return Err(FrontendError::Duplicate {
                what: "name (contract)",
                name: v.name.clone(),
                span: v.span,
            });
        }
        if !names.insert(v.name.clone()) {
            return Err(FrontendError::Duplicate {
                what: "state variable",
                name: v.name.clone(),
                span: v.span,
            });
        }
        check_storage_type(&v.ty, v.span)?;
    }
    let mut fn_names = BTreeSet::new();
    for f in &c.functions {
        if !fn_names.insert(f.name.clone()) {
            let what = match f.kind {
                FunctionKind::Constructor => "constructor",
                FunctionKind::Fallback => "fallback",
                FunctionKind::Ordinary => "function",
            };
            return Err(FrontendError::Duplicate {
                what,
                name: f.name.clone(),
                span: f.span,
            });
        }
        if names.contains(&f.name) {
            return Err(FrontendError::Duplicate {
                what: "name (state variable)",
                name: f.name.clone(),
                span: f.span,
            });
        }
        if f.kind == FunctionKind::Fallback && (!f.params.is_empty() || !f.returns.is_empty()) {
            return type_error(f.span, "fallback takes no parameters and returns nothing");
        }
        if f.kind == FunctionKind::Constructor && !f.returns.is_empty() {
            return type_error(f.span, "constructor returns nothing");
        }
        if f.returns.len() > 1 {
            return type_error(f.span, "at most one return value is supported");
        }
        for r in &f.returns {
            check_value_type(r, f.span, "return value")?;
        }
        let mut params = BTreeSet::new();
        for p in &f.params {
            check_value_type(&p.ty, f.span, "parameter")?;
            if !params.insert(p.name.clone()) {
                return Err(FrontendError::Duplicate {
                    what: "parameter",
                    name: p.name.clone(),
                    span: f.span,
                });
            }
            if names.contains(&p.name) || contracts.contains(&p.name) {
                return Err(FrontendError::Duplicate {
                    what: "name (shadows a declaration)",
                    name: p.name.clone(),
                    span: f.span,
                });
            }
        }
    }
    Ok(())
}

struct FnChecker<'a> {
    unit: &'a SourceUnit,
    contract: &'a ContractDecl,
    function: &'a FunctionDecl,
    scopes: Vec<BTreeMap<String, Type>>,
}

impl FnChecker<'_> {
    fn check(&mut self) -> CResult<()> {
        for p in &self.function.params {
            self.scopes[0].insert(p.name.clone(), p.ty.clone());
        }
        let body = &self.function.body;
        self.block(body)
    }

    fn lookup(&self, name: &str) -> Option<Type> {
        for scope in self.scopes.iter().rev() {
            if let Some(t) = scope.get(name) {
                return Some(t.clone());
            }
        }
        self.contract.state_var(name).map(|v| v.ty.clone())
    }

    fn declare(&mut self, name: &str, ty: Type, span: Span) -> CResult<()> {
        let taken = self.lookup(name).is_some()
            || self.unit.contract(name).is_some()
            || self.contract.function(name).is_some();
        if taken {
            return Err(FrontendError::Duplicate {
                what: "variable",
                name: name.to_string(),
                span,
            });
        }
        self.scopes
            .last_mut()
            .expect("scope stack is never empty")
            .insert(name.to_string(), ty);
        Ok(())
    }

    fn block(&mut self, block: &Block) -> CResult<()> {
        self.scopes.push(BTreeMap::new());
        for s in &block.stmts {
            self.stmt(s)?;
        }
        self.scopes.pop();
        Ok(())
    }

    fn expect_type(&mut self, e: &Expr, want: &Type, context: &str) -> CResult<()> {
        match self.expr(e)? {
            Some(t) if &t == want => Ok(()),
            Some(t) => type_error(e.span, format!("{context}: expected `{want}`, found `{t}`")),
            None => type_error(e.span, format!("{context}: expected `{want}`, found no value")),
        }
    }

    fn value(&mut self, e: &Expr) -> CResult<Type> {
        match self.expr(e)? {
            Some(t) => Ok(t),
            None => type_error(e.span, "expression has no value"),
        }
    }

    fn stmt(&mut self, s: &Stmt) -> CResult<()> {
        match &s.kind {
            StmtKind::VarDecl { ty, name, init } => {
                check_value_type(ty, s.span, "local variable")?;
                if let Some(e) = init {
                    self.expect_type(e, ty, "initializer")?;
                }
                self.declare(name, ty.clone(), s.span)
            }
            StmtKind::Assign { target, op, value } => {
                let tt = self.lvalue(target)?;
                if *op != AssignOp::Assign && tt != Type::Uint {
                    return type_error(
                        s.span,
                        format!("`{}` needs a `uint256` target, found `{tt}`", op.symbol()),
                    );
                }
                self.expect_type(value, &tt, "assignment")
            }
            StmtKind::Expr(e) => {
                if !matches!(e.kind, ExprKind::Call(..)) {
                    return type_error(e.span, "expression statement must be a call");
                }
                self.expr(e).map(|_| ())
            }
            StmtKind::If {
                cond,
                then_block,
                else_block,
            } => {
                self.expect_type(cond, &Type::Bool, "condition")?;
                self.block(then_block)?;
                if let Some(b) = else_block {
                    self.block(b)?;
                }
                Ok(())
            }
            StmtKind::While { cond, body } => {
                self.expect_type(cond, &Type::Bool, "loop condition")?;
                self.block(body)
            }
            StmtKind::For {
                init,
                cond,
                update,
                body,
            } => {
                self.scopes.push(BTreeMap::new());
                if let Some(i) = init {
                    self.stmt(i)?;
                }
                if let Some(c) = cond {
                    self.expect_type(c, &Type::Bool, "loop condition")?;
                }
                if let Some(u) = update {
                    if u.kind.is_declaration() {
                        return type_error(u.span, "loop update cannot declare a variable");
                    }
                    self.stmt(u)?;
                }
                self.block(body)?;
                self.scopes.pop();
                Ok(())
            }
            StmtKind::Return(value) => match (value, self.function.returns.first()) {
                (None, None) => Ok(()),
                (Some(e), Some(ty)) => {
                    let ty = ty.clone();
                    self.expect_type(e, &ty, "return value")
                }
                (None, Some(ty)) => type_error(s.span, format!("missing return value of `{ty}`")),
                (Some(e), None) => type_error(e.span, "function returns nothing"),
            },
            StmtKind::Require(e) => self.expect_type(e, &Type::Bool, "require"),
            StmtKind::Revert | StmtKind::Log(_) => Ok(()),
            StmtKind::Block(b) => self.block(b),
        }
    }

    /// Type of an assignable location.
    fn lvalue(&mut self, e: &Expr) -> CResult<Type> {
        let ty = match &e.kind {
            ExprKind::Ident(_) | ExprKind::Index(..) => self.value(e)?,
            _ => return type_error(e.span, "expression is not assignable"),
        };
        if !ty.is_scalar() {
            return type_error(e.span, format!("cannot assign a whole `{ty}`"));
        }
        Ok(ty)
    }

    fn expr(&mut self, e: &Expr) -> CResult<Option<Type>> {
        let ty = match &e.kind {
            ExprKind::Lit(Literal::Number(n)) => {
                if Word::parse_decimal(n).is_none() {
                    return type_error(e.span, format!("literal {n} does not fit in 256 bits"));
                }
                Type::Uint
            }
            ExprKind::Lit(Literal::Bool(_)) => Type::Bool,
            ExprKind::Lit(Literal::String(_)) => {
                return type_error(e.span, "string literals are only allowed in `log`")
            }
            ExprKind::Lit(Literal::ZeroAddress) | ExprKind::MsgSender | ExprKind::This => {
                Type::Address
            }
            ExprKind::MsgValue | ExprKind::Now => Type::Uint,
            ExprKind::Ident(name) => match self.lookup(name) {
                Some(t) => t,
                None => {
                    return Err(FrontendError::Unresolved {
                        what: "identifier",
                        name: name.clone(),
                        span: e.span,
                    })
                }
            },
            ExprKind::Not(inner) => {
                self.expect_type(inner, &Type::Bool, "operand of `!`")?;
                Type::Bool
            }
            ExprKind::Binary(op, l, r) => {
                let lt = self.value(l)?;
                let rt = self.value(r)?;
                let ok = match op {
                    BinOp::And | BinOp::Or => lt == Type::Bool && rt == Type::Bool,
                    BinOp::Eq | BinOp::Ne => lt == rt && lt.is_scalar(),
                    _ => lt == Type::Uint && rt == Type::Uint,
                };
                if !ok {
                    return type_error(
                        e.span,
                        format!("operator `{}` cannot combine `{lt}` and `{rt}`", op.symbol()),
                    );
                }
                if op.is_arithmetic() {
                    Type::Uint
                } else {
                    Type::Bool
                }
            }
            ExprKind::Index(base, idx) => match self.value(base)? {
                Type::Array(elem) => {
                    self.expect_type(idx, &Type::Uint, "array index")?;
                    *elem
                }
                Type::Mapping(k, v) => {
                    self.expect_type(idx, &k, "mapping key")?;
                    *v
                }
                other => return type_error(e.span, format!("cannot index `{other}`")),
            },
            ExprKind::Member(base, name) => match (self.value(base)?, name.as_str()) {
                (Type::Array(_), "length") | (Type::Address, "balance") => Type::Uint,
                (t, _) => return type_error(e.span, format!("`{t}` has no member `{name}`")),
            },
            ExprKind::Call(callee, args) => return self.call(e, callee, args),
        };
        Ok(Some(ty))
    }

    fn check_args(&mut self, e: &Expr, params: &[Param], args: &[Expr]) -> CResult<()> {
        if params.len() != args.len() {
            return type_error(
                e.span,
                format!("expected {} argument(s), found {}", params.len(), args.len()),
            );
        }
        for (p, a) in params.iter().zip(args) {
            self.expect_type(a, &p.ty, "argument")?;
        }
        Ok(())
    }

    fn call(&mut self, e: &Expr, callee: &Callee, args: &[Expr]) -> CResult<Option<Type>> {
        match callee {
            Callee::Internal(name) => {
                let target = self
                    .contract
                    .function(name)
                    .filter(|f| f.kind == FunctionKind::Ordinary)
                    .ok_or_else(|| FrontendError::Unresolved {
                        what: "function",
                        name: name.clone(),
                        span: e.span,
                    })?;
                self.check_args(e, &target.params, args)?;
                Ok(target.returns.first().cloned())
            }
            Callee::External { contract, function } => {
                let c = self
                    .unit
                    .contract(contract)
                    .ok_or_else(|| FrontendError::Unresolved {
                        what: "contract",
                        name: contract.clone(),
                        span: e.span,
                    })?;
                let target = c
                    .function(function)
                    .filter(|f| f.kind == FunctionKind::Ordinary && f.visibility.is_exposed())
                    .ok_or_else(|| FrontendError::Unresolved {
                        what: "external function",
                        name: format!("{contract}.{function}"),
                        span: e.span,
                    })?;
                self.check_args(e, &target.params, args)?;
                Ok(target.returns.first().cloned())
            }
            Callee::Push(base) => {
                let elem = match self.value(base)? {
                    Type::Array(elem) => *elem,
                    other => return type_error(e.span, format!("cannot push onto `{other}`")),
                };
                if !matches!(base.kind, ExprKind::Ident(_)) {
                    return type_error(e.span, "push target must be a state array");
                }
                let params = [Param {
                    name: "value".into(),
                    ty: elem,
                }];
                self.check_args(e, &params, args)?;
                Ok(None)
            }
            Callee::Transfer(base) => {
                self.expect_type(base, &Type::Address, "transfer recipient")?;
                let params = [Param {
                    name: "amount".into(),
                    ty: Type::Uint,
                }];
                self.check_args(e, &params, args)?;
                Ok(None)
            }
            Callee::LowLevel { target, value } => {
                self.expect_type(target, &Type::Address, "call target")?;
                if let Some(v) = value {
                    self.expect_type(v, &Type::Uint, "call value")?;
                }
                if !args.is_empty() {
                    return type_error(e.span, "low-level call takes no arguments");
                }
                Ok(Some(Type::Bool))
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use crate::frontend::{parse_source, Callee, ExprKind, FrontendError, StmtKind};

    fn err(src: &str) -> FrontendError {
        parse_source(src).expect_err("source should be rejected")
    }

    #[test]
    fn rejects_duplicates() {
        assert!(matches!(
            err("contract A {} contract A {}"),
            FrontendError::Duplicate { what: "contract", .. }
        ));
        assert!(matches!(
            err("contract A { function f() public {} function f() public {} }"),
            FrontendError::Duplicate { what: "function", .. }
        ));
        assert!(matches!(
            err("contract A { constructor() public {} constructor() public {} }"),
            FrontendError::Duplicate { what: "constructor", .. }
        ));
        assert!(matches!(
            err("contract A { uint x; function f() public { uint x = 1; } }"),
            FrontendError::Duplicate { .. }
        ));
    }

    #[test]
    fn sibling_scopes_may_reuse_names() {
        parse_source(
            "contract A { function f(bool b) public { if (b) { uint t = 1; } else { uint t = 2; } } }",
        )
        .unwrap();
    }

    #[test]
    fn rejects_unresolved_names() {
        assert!(matches!(
            err("contract A { function f() public { y = 1; } }"),
            FrontendError::Unresolved { name, .. } if name == "y"
        ));
        assert!(matches!(
            err("contract A { function f() public { g(); } }"),
            FrontendError::Unresolved { what: "function", .. }
        ));
        assert!(matches!(
            err("contract A { function f() public { B.g(); } }"),
            FrontendError::Unresolved { what: "contract", .. }
        ));
    }

    #[test]
    fn rejects_type_errors() {
        assert!(matches!(
            err("contract A { bool b; function f() public { b = 1; } }"),
            FrontendError::Type { .. }
        ));
        assert!(matches!(
            err("contract A { function g(uint a) internal {} function f() public { g(); } }"),
            FrontendError::Type { .. }
        ));
        assert!(matches!(
            err("contract A { function f() public { require(1); } }"),
            FrontendError::Type { .. }
        ));
        assert!(matches!(
            err("contract A { fallback(uint a) external {} }"),
            FrontendError::Type { .. }
        ));
    }

    #[test]
    fn contract_transfer_becomes_external_call() {
        let unit = parse_source(
            "contract T { function transfer(address to, uint v) public {} }
             contract U { function f() public { T.transfer(msg.sender, 1); msg.sender.transfer(2); } }",
        )
        .unwrap();
        let body = &unit.contracts[1].functions[0].body;
        let callee = |i: usize| match &body.stmts[i].kind {
            StmtKind::Expr(e) => match &e.kind {
                ExprKind::Call(c, _) => c.clone(),
                _ => unreachable!(),
            },
            _ => unreachable!(),
        };
        assert!(matches!(callee(0), Callee::External { ref function, .. } if function == "transfer"));
        assert!(matches!(callee(1), Callee::Transfer(_)));
    }
}
