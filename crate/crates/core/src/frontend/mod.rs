// SPDX-License-Identifier: Apache-2.0

//! MiniSol front end: lexing, parsing, name resolution and the dapp model.
//!
//! The grammar is documented in `docs/minisol.md`. [`parse_source`] is the
//! entry point for text; [`build_dapp_model`] attaches account roles and
//! classifies every function.

pub mod ast;
mod check;
mod lexer;
mod model;
mod parser;
pub(crate) mod pretty;
pub mod visit;

pub use ast::*;
pub use model::{build_dapp_model, AccountRole, ContractModel, DappModel, FunctionSig};
pub use pretty::pretty_print;

use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum FrontendError {
    #[error("syntax error at {span}: expected {expected}, found {found}")]
    Syntax {
        span: Span,
        expected: String,
        found: String,
    },
    #[error("duplicate {what} `{name}` at {span}")]
    Duplicate {
        what: &'static str,
        name: String,
        span: Span,
    },
    #[error("unresolved {what} `{name}` at {span}")]
    Unresolved {
        what: &'static str,
        name: String,
        span: Span,
    },
    #[error("type error at {span}: {message}")]
    Type { span: Span, message: String },
    #[error("read-only function `{contract}.{function}` modifies state at {span}: {message}")]
    ReadOnlyWrite {
        contract: String,
        function: String,
        span: Span,
        message: String,
    },
    #[error("invalid account configuration: {0}")]
    Accounts(String),
}

impl FrontendError {
    /// Source position of the diagnostic, when it has one.
    pub fn span(&self) -> Option<Span> {
        match self {
            FrontendError::Syntax { span, .. }
            | FrontendError::Duplicate { span, .. }
            | FrontendError::Unresolved { span, .. }
            | FrontendError::Type { span, .. }
            | FrontendError::ReadOnlyWrite { span, .. } => Some(*span),
            FrontendError::Accounts(_) => None,
        }
    }
}

/// Parses and resolves MiniSol source text.
///
/// The returned unit has every identifier resolved and every expression
/// type-checked; `C.transfer(..)` on a contract name is normalised to an
/// external call.
pub fn parse_source(text: &str) -> Result<SourceUnit, FrontendError> {
    let mut unit = parser::parse_syntax(text)?;
    check::check_unit(&mut unit)?;
    Ok(unit)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn minimal_unit() {
        let unit = parse_source("contract T { uint x; function f() public { x = 1; } }").unwrap();
        assert_eq!(unit.contracts.len(), 1);
        let c = &unit.contracts[0];
        assert_eq!(c.state_vars.len(), 1);
        assert_eq!(c.functions.len(), 1);
        assert_eq!(c.functions[0].visibility, Visibility::Public);
    }

    #[test]
    fn unterminated_parameter_list_reports_position() {
        let err = parse_source("contract T { function f( }").unwrap_err();
        match err {
            FrontendError::Syntax { span, found, .. } => {
                assert_eq!(span, Span::new(1, 26));
                assert_eq!(found, "`}`");
            }
            other => panic!("unexpected error {other}"),
        }
    }
}
