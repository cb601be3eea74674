// SPDX-License-Identifier: Apache-2.0

//! Single-fault mutants and the three-way detection experiment.
//!
//! Mutant sources are pretty-printed from the mutated syntax tree, so they
//! differ from `pretty_print(original)` at exactly one site. Comments of
//! the input file do not survive.

mod experiment;
mod generate;
mod random;

pub use experiment::{
    observe_suite, run_experiment, ExperimentError, ExperimentReport, ExperimentSuite, KillEvidence, MutantResult, Observation,
    Program, ProgramError, SuiteKind, SuiteSummary, TxObservation,
};
pub use generate::{generate_mutants, MAX_VARIABLE_REPLACEMENTS};
pub use random::{random_suite, random_test_case, search_suite, RandomTestConfig, SearchError, SearchGoal};

use crate::frontend::{parse_source, Span};
use serde::{Deserialize, Serialize};
use std::fmt;
use std::path::Path;
use thiserror::Error;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum MutationOperator {
    OperatorReplacement,
    VariableReplacement,
    StatementOmission,
    /// A statement moved elsewhere; only written by hand.
    StatementRelocation,
}

impl MutationOperator {
    /// The operators [`generate_mutants`] enumerates.
    pub const GENERATED: [MutationOperator; 3] = [
        MutationOperator::OperatorReplacement,
        MutationOperator::VariableReplacement,
        MutationOperator::StatementOmission,
    ];

    pub fn name(self) -> &'static str {
        match self {
            MutationOperator::OperatorReplacement => "operator-replacement",
            MutationOperator::VariableReplacement => "variable-replacement",
            MutationOperator::StatementOmission => "statement-omission",
            MutationOperator::StatementRelocation => "statement-relocation",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        [
            MutationOperator::OperatorReplacement,
            MutationOperator::VariableReplacement,
            MutationOperator::StatementOmission,
            MutationOperator::StatementRelocation,
        ]
        .into_iter()
        .find(|o| o.name() == s)
    }
}

impl fmt::Display for MutationOperator {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct MutantDescriptor {
    pub id: String,
    pub operator: MutationOperator,
    pub contract: String,
    pub function: String,
    /// Position of the mutated site in the original source.
    pub location: Span,
    pub original: String,
    /// Empty for statement omission.
    pub replacement: String,
    /// Set by hand after inspection; generation never sets it.
    #[serde(default)]
    pub equivalent: bool,
    /// Free-form annotation, such as why a mutant is equivalent.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub note: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Mutant {
    pub descriptor: MutantDescriptor,
    pub source: String,
}

#[derive(Debug, Error)]
pub enum ManifestError {
    #[error("cannot read `{path}`: {message}")]
    Io { path: String, message: String },
    #[error("malformed manifest: {0}")]
    Json(#[from] serde_json::Error),
    #[error("manifest names mutant `{0}`, which generation does not produce")]
    UnknownMutant(String),
    #[error("mutant `{id}` no longer matches its manifest entry: {detail}")]
    Drift { id: String, detail: String },
    #[error("hand-written mutant `{0}` does not compile")]
    Invalid(String),
    #[error("duplicate mutant id `{0}`")]
    Duplicate(String),
}

/// A hand-written mutant; its source lives next to the manifest.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ManualMutant {
    #[serde(flatten)]
    pub descriptor: MutantDescriptor,
    pub file: String,
}

/// The mutant set of an experiment: generated mutants picked by id, with
/// their descriptors pinned so that enumeration drift is caught, plus
/// hand-written ones.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct MutantManifest {
    #[serde(default)]
    pub generated: Vec<MutantDescriptor>,
    #[serde(default)]
    pub manual: Vec<ManualMutant>,
}

impl MutantManifest {
    /// Resolves the manifest against the mutants `generate_mutants` yields
    /// for `original`; manual sources are read relative to `dir`.
    pub fn resolve(&self, generated: &[Mutant], dir: &Path) -> Result<Vec<Mutant>, ManifestError> {
        let mut out: Vec<Mutant> = Vec::new();
        for want in &self.generated {
            let found = generated
                .iter()
                .find(|m| m.descriptor.id == want.id)
                .ok_or_else(|| ManifestError::UnknownMutant(want.id.clone()))?;
            let mut have = found.descriptor.clone();
            have.equivalent = want.equivalent;
            have.note = want.note.clone();
            if &have != want {
                return Err(ManifestError::Drift {
                    id: want.id.clone(),
                    detail: format!(
                        "expected `{}` -> `{}` in {}.{}, generated `{}` -> `{}` in {}.{}",
                        want.original,
                        want.replacement,
                        want.contract,
                        want.function,
                        have.original,
                        have.replacement,
                        have.contract,
                        have.function
                    ),
                });
            }
            out.push(Mutant {
                descriptor: have,
                source: found.source.clone(),
            });
        }
        for m in &self.manual {
            let path = dir.join(&m.file);
            let source = std::fs::read_to_string(&path).map_err(|e| ManifestError::Io {
                path: path.display().to_string(),
                message: e.to_string(),
            })?;
            if parse_source(&source).is_err() || !generate::compiles(&source) {
                return Err(ManifestError::Invalid(m.descriptor.id.clone()));
            }
            out.push(Mutant {
                descriptor: m.descriptor.clone(),
                source,
            });
        }
        let mut seen = std::collections::BTreeSet::new();
        for m in &out {
            if !seen.insert(m.descriptor.id.as_str()) {
                return Err(ManifestError::Duplicate(m.descriptor.id.clone()));
            }
        }
        Ok(out)
    }
}

/// Evenly spaced picks from `mutants`: `count` ids at indices
/// `floor(i * len / count)`.
pub fn sample_evenly(mutants: &[Mutant], count: usize) -> Vec<&Mutant> {
    if count == 0 || mutants.is_empty() {
        return Vec::new();
    }
    let count = count.min(mutants.len());
    (0..count).map(|i| &mutants[i * mutants.len() / count]).collect()
}
