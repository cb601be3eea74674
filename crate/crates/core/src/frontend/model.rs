// SPDX-License-Identifier: Apache-2.0

//! The resolved application model: account roles plus classified contracts.

use super::ast::*;
use super::visit::{lvalue_root, walk_expr, walk_stmts};
use super::FrontendError;
use crate::word::Word;
use serde::{Deserialize, Serialize};
use std::collections::BTreeSet;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FunctionSig {
    pub name: String,
    pub params: Vec<Param>,
    pub returns: Vec<Type>,
    pub visibility: Visibility,
    pub mutability: Mutability,
    pub kind: FunctionKind,
}

impl FunctionSig {
    fn of(f: &FunctionDecl) -> Self {
        FunctionSig {
            name: f.name.clone(),
            params: f.params.clone(),
            returns: f.returns.clone(),
            visibility: f.visibility,
            mutability: f.mutability,
            kind: f.kind,
        }
    }
}

/// A contract's interface, split by how its functions can be invoked.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ContractModel {
    pub name: String,
    /// Exposed state-changing functions, in declaration order.
    pub state_changing: Vec<FunctionSig>,
    /// Exposed view/pure functions, in declaration order.
    pub read_only: Vec<FunctionSig>,
    pub constructor: Option<FunctionSig>,
    pub fallback: Option<FunctionSig>,
    pub internal: Vec<FunctionSig>,
    /// Ether held before deployment.
    pub ether: Word,
}

impl ContractModel {
    pub fn is_state_changing(&self, function: &str) -> bool {
        self.state_changing.iter().any(|f| f.name == function)
    }

    pub fn is_read_only(&self, function: &str) -> bool {
        self.read_only.iter().any(|f| f.name == function)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct AccountRole {
    pub name: String,
    pub balance: Word,
}

impl AccountRole {
    pub fn new(name: impl Into<String>, balance: impl Into<Word>) -> Self {
        AccountRole {
            name: name.into(),
            balance: balance.into(),
        }
    }

    /// Parses `name:balance`; a bare name gets `default_balance`.
    pub fn parse(spec: &str, default_balance: &Word) -> Result<Self, FrontendError> {
        let (name, balance) = match spec.split_once(':') {
            Some((n, b)) => {
                let balance = Word::parse_decimal(b.trim()).ok_or_else(|| {
                    FrontendError::Accounts(format!("bad balance in account `{spec}`"))
                })?;
                (n.trim(), balance)
            }
            None => (spec.trim(), default_balance.clone()),
        };
        let valid = !name.is_empty()
            && name.chars().all(|c| c.is_ascii_alphanumeric() || c == '_')
            && !name.starts_with(|c: char| c.is_ascii_digit());
        if !valid {
            return Err(FrontendError::Accounts(format!("bad account name `{name}`")));
        }
        Ok(AccountRole {
            name: name.to_string(),
            balance,
        })
    }
}

/// Account roles plus contract models, together with the resolved source
/// the models were derived from.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct DappModel {
    pub accounts: Vec<AccountRole>,
    pub contracts: Vec<ContractModel>,
    #[serde(skip)]
    pub unit: SourceUnit,
}

impl DappModel {
    pub fn contract(&self, name: &str) -> Option<&ContractModel> {
        self.contracts.iter().find(|c| c.name == name)
    }

    pub fn account(&self, name: &str) -> Option<&AccountRole> {
        self.accounts.iter().find(|a| a.name == name)
    }

    pub fn decl(&self, contract: &str) -> Option<&ContractDecl> {
        self.unit.contract(contract)
    }

    pub fn function_decl(&self, contract: &str, function: &str) -> Option<&FunctionDecl> {
        self.decl(contract)?.function(function)
    }
}

pub fn build_dapp_model(
    unit: &SourceUnit,
    accounts: &[AccountRole],
) -> Result<DappModel, FrontendError> {
    if accounts.is_empty() {
        return Err(FrontendError::Accounts("at least one account role is required".into()));
    }
    let mut names = BTreeSet::new();
    for a in accounts {
        if unit.contract(&a.name).is_some() {
            return Err(FrontendError::Accounts(format!(
                "account `{}` clashes with a contract name",
                a.name
            )));
        }
        if !names.insert(a.name.as_str()) {
            return Err(FrontendError::Accounts(format!("duplicate account `{}`", a.name)));
        }
    }

    let mut contracts = Vec::new();
    for c in &unit.contracts {
        let mut model = ContractModel {
            name: c.name.clone(),
            state_changing: Vec::new(),
            read_only: Vec::new(),
            constructor: None,
            fallback: None,
            internal: Vec::new(),
            ether: Word::zero(),
        };
        for f in &c.functions {
            if f.mutability.is_read_only() {
                check_read_only(unit, c, f)?;
            }
            let sig = FunctionSig::of(f);
            match f.kind {
                FunctionKind::Constructor => model.constructor = Some(sig),
                FunctionKind::Fallback => model.fallback = Some(sig),
                FunctionKind::Ordinary if !f.visibility.is_exposed() => model.internal.push(sig),
                FunctionKind::Ordinary if f.mutability.is_read_only() => model.read_only.push(sig),
                FunctionKind::Ordinary => model.state_changing.push(sig),
            }
        }
        contracts.push(model);
    }
    Ok(DappModel {
        accounts: accounts.to_vec(),
        contracts,
        unit: unit.clone(),
    })
}

fn check_read_only(unit: &SourceUnit, c: &ContractDecl, f: &FunctionDecl) -> Result<(), FrontendError> {
    let fail = |span: Span, message: String| FrontendError::ReadOnlyWrite {
        contract: c.name.clone(),
        function: f.name.clone(),
        span,
        message,
    };
    let callee_writes = |contract: &ContractDecl, name: &str| {
        contract
            .function(name)
            .is_some_and(|g| !g.mutability.is_read_only())
    };
    let mut result = Ok(());
    walk_stmts(&f.body, &mut |s: &Stmt| {
        if result.is_err() {
            return;
        }
        if let StmtKind::Assign { target, .. } = &s.kind {
            if let Some(root) = lvalue_root(target) {
                if c.state_var(root).is_some() {
                    result = Err(fail(s.span, format!("assigns state variable `{root}`")));
                    return;
                }
            }
        }
        for e in super::visit::stmt_exprs(s) {
            walk_expr(e, &mut |e: &Expr| {
                if result.is_err() {
                    return;
                }
                let ExprKind::Call(callee, _) = &e.kind else {
                    return;
                };
                let message = match callee {
                    Callee::Push(_) => Some("pushes onto a state array".to_string()),
                    Callee::Transfer(_) => Some("transfers ether".to_string()),
                    Callee::LowLevel { .. } => Some("makes a low-level call".to_string()),
                    Callee::Internal(name) if callee_writes(c, name) => {
                        Some(format!("calls state-changing `{name}`"))
                    }
                    Callee::External { contract, function } => unit
                        .contract(contract)
                        .filter(|target| callee_writes(target, function))
                        .map(|_| format!("calls state-changing `{contract}.{function}`")),
                    Callee::Internal(_) => None,
                };
                if let Some(m) = message {
                    result = Err(fail(e.span, m));
                }
            });
        }
    });
    result
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::frontend::parse_source;

    fn alice() -> Vec<AccountRole> {
        vec![AccountRole::new("alice", 100u64)]
    }

    #[test]
    fn constructor_only_contract() {
        let unit = parse_source("contract A { uint x; constructor() public { x = 1; } }").unwrap();
        let m = build_dapp_model(&unit, &alice()).unwrap();
        let c = &m.contracts[0];
        assert!(c.state_changing.is_empty());
        assert!(c.constructor.is_some());
    }

    #[test]
    fn view_writing_state_is_rejected() {
        let unit =
            parse_source("contract A { uint x; function f() public view { x = 1; } }").unwrap();
        let err = build_dapp_model(&unit, &alice()).unwrap_err();
        assert!(matches!(err, FrontendError::ReadOnlyWrite { .. }));

        let unit = parse_source(
            "contract A { function f() public view { msg.sender.transfer(1); } }",
        )
        .unwrap();
        assert!(build_dapp_model(&unit, &alice()).is_err());
    }

    #[test]
    fn view_with_locals_is_accepted() {
        let unit = parse_source(
            "contract A { uint x; function f() public view returns (uint) { uint y = x; y = y + 1; return y; } }",
        )
        .unwrap();
        let m = build_dapp_model(&unit, &alice()).unwrap();
        assert_eq!(m.contracts[0].read_only.len(), 1);
    }

    #[test]
    fn account_config_errors() {
        let unit = parse_source("contract A {}").unwrap();
        assert!(build_dapp_model(&unit, &[]).is_err());
        assert!(build_dapp_model(&unit, &[AccountRole::new("A", 1u64)]).is_err());
        let twice = [AccountRole::new("a", 1u64), AccountRole::new("a", 2u64)];
        assert!(build_dapp_model(&unit, &twice).is_err());
    }

    #[test]
    fn account_role_parsing() {
        let d = Word::from(7u64);
        assert_eq!(
            AccountRole::parse("bob:12", &d).unwrap(),
            AccountRole::new("bob", 12u64)
        );
        assert_eq!(AccountRole::parse("carol", &d).unwrap().balance, d);
        assert!(AccountRole::parse("1x:3", &d).is_err());
        assert!(AccountRole::parse("x:abc", &d).is_err());
    }
}
