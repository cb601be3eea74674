// SPDX-License-Identifier: Apache-2.0

//! Syntax tree for MiniSol sources.

use serde::{Deserialize, Serialize};
use std::fmt;

/// 1-based line/column of the first character of a construct.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct Span {
    pub line: u32,
    pub col: u32,
}

impl Span {
    pub fn new(line: u32, col: u32) -> Self {
        Span { line, col }
    }
}

impl fmt::Display for Span {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}:{}", self.line, self.col)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Type {
    Uint,
    Bool,
    Address,
    String,
    Array(Box<Type>),
    Mapping(Box<Type>, Box<Type>),
}

impl Type {
    pub fn is_scalar(&self) -> bool {
        matches!(self, Type::Uint | Type::Bool | Type::Address)
    }
}

impl fmt::Display for Type {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Type::Uint => f.write_str("uint256"),
            Type::Bool => f.write_str("bool"),
            Type::Address => f.write_str("address"),
            Type::String => f.write_str("string"),
            Type::Array(elem) => write!(f, "{elem}[]"),
            Type::Mapping(k, v) => write!(f, "mapping({k} => {v})"),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Visibility {
    Public,
    External,
    Internal,
    Private,
}

impl Visibility {
    pub fn is_exposed(self) -> bool {
        matches!(self, Visibility::Public | Visibility::External)
    }

    pub fn keyword(self) -> &'static str {
        match self {
            Visibility::Public => "public",
            Visibility::External => "external",
            Visibility::Internal => "internal",
            Visibility::Private => "private",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Mutability {
    StateChanging,
    View,
    Pure,
    Payable,
}

impl Mutability {
    pub fn is_read_only(self) -> bool {
        matches!(self, Mutability::View | Mutability::Pure)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FunctionKind {
    Ordinary,
    Constructor,
    Fallback,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BinOp {
    Add,
    Sub,
    Mul,
    Div,
    Mod,
    Lt,
    Le,
    Gt,
    Ge,
    Eq,
    Ne,
    And,
    Or,
}

impl BinOp {
    pub fn symbol(self) -> &'static str {
        match self {
            BinOp::Add => "+",
            BinOp::Sub => "-",
            BinOp::Mul => "*",
            BinOp::Div => "/",
            BinOp::Mod => "%",
            BinOp::Lt => "<",
            BinOp::Le => "<=",
            BinOp::Gt => ">",
            BinOp::Ge => ">=",
            BinOp::Eq => "==",
            BinOp::Ne => "!=",
            BinOp::And => "&&",
            BinOp::Or => "||",
        }
    }

    /// Binding strength; higher binds tighter.
    pub fn precedence(self) -> u8 {
        match self {
            BinOp::Or => 1,
            BinOp::And => 2,
            BinOp::Eq | BinOp::Ne => 3,
            BinOp::Lt | BinOp::Le | BinOp::Gt | BinOp::Ge => 4,
            BinOp::Add | BinOp::Sub => 5,
            BinOp::Mul | BinOp::Div | BinOp::Mod => 6,
        }
    }

    pub fn is_arithmetic(self) -> bool {
        matches!(self, BinOp::Add | BinOp::Sub | BinOp::Mul | BinOp::Div | BinOp::Mod)
    }

    pub fn is_comparison(self) -> bool {
        matches!(
            self,
            BinOp::Lt | BinOp::Le | BinOp::Gt | BinOp::Ge | BinOp::Eq | BinOp::Ne
        )
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AssignOp {
    Assign,
    Add,
    Sub,
    Mul,
    Div,
}

impl AssignOp {
    pub fn symbol(self) -> &'static str {
        match self {
            AssignOp::Assign => "=",
            AssignOp::Add => "+=",
            AssignOp::Sub => "-=",
            AssignOp::Mul => "*=",
            AssignOp::Div => "/=",
        }
    }

    pub fn binop(self) -> Option<BinOp> {
        match self {
            AssignOp::Assign => None,
            AssignOp::Add => Some(BinOp::Add),
            AssignOp::Sub => Some(BinOp::Sub),
            AssignOp::Mul => Some(BinOp::Mul),
            AssignOp::Div => Some(BinOp::Div),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Literal {
    /// Decimal digits, kept textual so 256-bit constants survive round trips.
    Number(String),
    Bool(bool),
    String(String),
    ZeroAddress,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Expr {
    pub kind: ExprKind,
    pub span: Span,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ExprKind {
    Lit(Literal),
    Ident(String),
    MsgSender,
    MsgValue,
    Now,
    This,
    Not(Box<Expr>),
    Binary(BinOp, Box<Expr>, Box<Expr>),
    Index(Box<Expr>, Box<Expr>),
    /// `.length` on arrays, `.balance` on addresses.
    Member(Box<Expr>, String),
    Call(Callee, Vec<Expr>),
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Callee {
    /// `f(..)` within the current contract.
    Internal(String),
    /// `C.f(..)` on the deployed instance of contract `C`.
    External { contract: String, function: String },
    /// `arr.push(v)`
    Push(Box<Expr>),
    /// `addr.transfer(v)`
    Transfer(Box<Expr>),
    /// `addr.call.value(v)()` / `addr.call()`
    LowLevel { target: Box<Expr>, value: Option<Box<Expr>> },
}

impl Expr {
    pub fn new(kind: ExprKind, span: Span) -> Self {
        Expr { kind, span }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Block {
    pub stmts: Vec<Stmt>,
    pub span: Span,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Stmt {
    pub kind: StmtKind,
    pub span: Span,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum StmtKind {
    VarDecl {
        ty: Type,
        name: String,
        init: Option<Expr>,
    },
    Assign {
        target: Expr,
        op: AssignOp,
        value: Expr,
    },
    Expr(Expr),
    If {
        cond: Expr,
        then_block: Block,
        else_block: Option<Block>,
    },
    While {
        cond: Expr,
        body: Block,
    },
    For {
        init: Option<Box<Stmt>>,
        cond: Option<Expr>,
        update: Option<Box<Stmt>>,
        body: Block,
    },
    Return(Option<Expr>),
    Require(Expr),
    Revert,
    Log(String),
    Block(Block),
}

impl StmtKind {
    pub fn is_declaration(&self) -> bool {
        matches!(self, StmtKind::VarDecl { .. })
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Param {
    pub name: String,
    pub ty: Type,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FunctionDecl {
    pub name: String,
    pub kind: FunctionKind,
    pub params: Vec<Param>,
    pub returns: Vec<Type>,
    pub visibility: Visibility,
    pub mutability: Mutability,
    pub body: Block,
    pub span: Span,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct StateVarDecl {
    pub name: String,
    pub ty: Type,
    pub public: bool,
    pub span: Span,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ContractDecl {
    pub name: String,
    pub state_vars: Vec<StateVarDecl>,
    pub functions: Vec<FunctionDecl>,
    pub span: Span,
}

impl ContractDecl {
    pub fn function(&self, name: &str) -> Option<&FunctionDecl> {
        self.functions.iter().find(|f| f.name == name)
    }

    pub fn state_var(&self, name: &str) -> Option<&StateVarDecl> {
        self.state_vars.iter().find(|v| v.name == name)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct SourceUnit {
    pub contracts: Vec<ContractDecl>,
}

impl SourceUnit {
    pub fn contract(&self, name: &str) -> Option<&ContractDecl> {
        self.contracts.iter().find(|c| c.name == name)
    }

    /// Copy with every span zeroed, for structural comparison.
    pub fn without_spans(&self) -> SourceUnit {
        let mut unit = self.clone();
        for c in &mut unit.contracts {
            c.span = Span::default();
            for v in &mut c.state_vars {
                v.span = Span::default();
            }
            for f in &mut c.functions {
                f.span = Span::default();
                strip_block(&mut f.body);
            }
        }
        unit
    }
}

fn strip_block(block: &mut Block) {
    block.span = Span::default();
    for stmt in &mut block.stmts {
        strip_stmt(stmt);
    }
}

fn strip_stmt(stmt: &mut Stmt) {
    stmt.span = Span::default();
    match &mut stmt.kind {
        StmtKind::VarDecl { init, .. } => {
            if let Some(e) = init {
                strip_expr(e);
            }
        }
        StmtKind::Assign { target, value, .. } => {
            strip_expr(target);
            strip_expr(value);
        }
        StmtKind::Expr(e) | StmtKind::Require(e) | StmtKind::Return(Some(e)) => strip_expr(e),
        StmtKind::If {
            cond,
            then_block,
            else_block,
        } => {
            strip_expr(cond);
            strip_block(then_block);
            if let Some(b) = else_block {
                strip_block(b);
            }
        }
        StmtKind::While { cond, body } => {
            strip_expr(cond);
            strip_block(body);
        }
        StmtKind::For {
            init,
            cond,
            update,
            body,
        } => {
            if let Some(s) = init {
                strip_stmt(s);
            }
            if let Some(c) = cond {
                strip_expr(c);
            }
            if let Some(s) = update {
                strip_stmt(s);
            }
            strip_block(body);
        }
        StmtKind::Block(b) => strip_block(b),
        StmtKind::Return(None) | StmtKind::Revert | StmtKind::Log(_) => {}
    }
}

fn strip_expr(expr: &mut Expr) {
    expr.span = Span::default();
    match &mut expr.kind {
        ExprKind::Not(e) => strip_expr(e),
        ExprKind::Binary(_, l, r) | ExprKind::Index(l, r) => {
            strip_expr(l);
            strip_expr(r);
        }
        ExprKind::Member(e, _) => strip_expr(e),
        ExprKind::Call(callee, args) => {
            match callee {
                Callee::Push(e) | Callee::Transfer(e) => strip_expr(e),
                Callee::LowLevel { target, value } => {
                    strip_expr(target);
                    if let Some(v) = value {
                        strip_expr(v);
                    }
                }
                Callee::Internal(_) | Callee::External { .. } => {}
            }
            for a in args {
                strip_expr(a);
            }
        }
        ExprKind::Lit(_)
        | ExprKind::Ident(_)
        | ExprKind::MsgSender
        | ExprKind::MsgValue
        | ExprKind::Now
        | ExprKind::This => {}
    }
}
