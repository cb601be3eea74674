// SPDX-License-Identifier: Apache-2.0

//! Failures of a command, classified by exit status.

use crate::basis::BasisError;
use crate::executor::ExecError;
use crate::frontend::FrontendError;
use crate::graph::GraphError;
use crate::interactions::InteractionError;
use crate::mutation::{ExperimentError, ManifestError};
use std::fmt;

#[derive(Debug)]
pub(crate) struct CliError {
    code: i32,
    message: String,
}

impl CliError {
    pub(crate) fn usage(message: impl Into<String>) -> Self {
        CliError {
            code: 1,
            message: message.into(),
        }
    }

    pub(crate) fn input(message: impl Into<String>) -> Self {
        CliError {
            code: 2,
            message: message.into(),
        }
    }

    pub(crate) fn internal(message: impl Into<String>) -> Self {
        CliError {
            code: 3,
            message: format!("internal invariant violated: {}", message.into()),
        }
    }

    pub(crate) fn code(&self) -> i32 {
        self.code
    }

    pub(crate) fn exec(test: &str, e: ExecError) -> Self {
        let message = format!("test `{test}`: {e}");
        match e {
            ExecError::Internal(_) | ExecError::Trace(_) => CliError::internal(message),
            ExecError::Graph(g) if graph_is_internal(&g) => CliError::internal(message),
            _ => CliError::input(message),
        }
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.message)
    }
}

fn graph_is_internal(e: &GraphError) -> bool {
    matches!(e, GraphError::Malformed(_) | GraphError::NotTransactionEntry(_))
}

impl From<FrontendError> for CliError {
    fn from(e: FrontendError) -> Self {
        CliError::input(e.to_string())
    }
}

impl From<GraphError> for CliError {
    fn from(e: GraphError) -> Self {
        if graph_is_internal(&e) {
            CliError::internal(e.to_string())
        } else {
            CliError::input(e.to_string())
        }
    }
}

impl From<BasisError> for CliError {
    fn from(e: BasisError) -> Self {
        match e {
            BasisError::Graph(g) => g.into(),
            BasisError::NoBaseline(_) => CliError::input(e.to_string()),
            BasisError::Path(_) => CliError::internal(e.to_string()),
        }
    }
}

impl From<InteractionError> for CliError {
    fn from(e: InteractionError) -> Self {
        match e {
            InteractionError::ZeroLength => CliError::usage(e.to_string()),
            InteractionError::TooMany { .. } | InteractionError::UnknownRequirement(_) => CliError::input(e.to_string()),
            InteractionError::Basis(b) => b.into(),
            InteractionError::MissingBasis(_) | InteractionError::UnknownPath { .. } => {
                CliError::internal(e.to_string())
            }
        }
    }
}

impl From<ManifestError> for CliError {
    fn from(e: ManifestError) -> Self {
        CliError::input(e.to_string())
    }
}

impl From<ExperimentError> for CliError {
    fn from(e: ExperimentError) -> Self {
        match e {
            ExperimentError::Coverage(c) => c.into(),
            other => CliError::input(other.to_string()),
        }
    }
}
