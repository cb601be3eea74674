// SPDX-License-Identifier: Apache-2.0

//! Bounded transaction interactions and the coverage requirements built
//! from them.
//!
//! A tuple names who calls which exposed state-changing function and
//! whether the transaction succeeds or reverts. A requirement of length `k`
//! is a sequence of `k` tuples, repetition allowed, each paired with one
//! basis path of the called function whose terminal matches the outcome.
//!
//! Requirements are ordered lexicographically by their slot sequence
//! `((t1, p1), .., (tk, pk))`, where `t` indexes the tuple list and `p` the
//! function's basis path set.

use crate::basis::{generate_wtpbs, BasisError, BasisPathSet, Budgets, Terminal};
use crate::frontend::DappModel;
use crate::graph::Tcfg;
use num_bigint::BigUint;
use serde::{Deserialize, Serialize};
use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use thiserror::Error;

/// Refuses to materialise requirement sets larger than this.
pub const MAX_REQUIREMENTS: usize = 5_000_000;

#[derive(Debug, Error)]
pub enum InteractionError {
    #[error("no basis path set for `{0}`")]
    MissingBasis(String),
    #[error("interaction length must be at least 1")]
    ZeroLength,
    #[error("{count} requirements exceed the limit of {MAX_REQUIREMENTS}")]
    TooMany { count: BigUint },
    #[error("`{function}` has no basis path {index}")]
    UnknownPath { function: String, index: usize },
    #[error("unknown requirement id {0} in infeasibility annotations")]
    UnknownRequirement(usize),
    #[error(transparent)]
    Basis(#[from] BasisError),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Outcome {
    Success,
    Revert,
}

impl Outcome {
    pub fn terminal(self) -> Terminal {
        match self {
            Outcome::Success => Terminal::Exit,
            Outcome::Revert => Terminal::Revert,
        }
    }

    pub fn of_terminal(t: Terminal) -> Self {
        match t {
            Terminal::Exit => Outcome::Success,
            Terminal::Revert => Outcome::Revert,
        }
    }
}

impl fmt::Display for Outcome {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Outcome::Success => "success",
            Outcome::Revert => "revert",
        })
    }
}

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct TxTuple {
    pub account: String,
    pub contract: String,
    pub function: String,
    pub outcome: Outcome,
}

impl TxTuple {
    /// `Contract.function`, the key of the function's basis path set.
    pub fn qualified(&self) -> String {
        format!("{}.{}", self.contract, self.function)
    }
}

impl fmt::Display for TxTuple {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "({}, {}, {}, {})",
            self.account, self.contract, self.function, self.outcome
        )
    }
}

/// One requirement: tuple indices into the set's tuple list and, per slot,
/// the index of the designated path in that function's basis path set.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CoverageRequirement {
    pub id: usize,
    pub tuples: Vec<usize>,
    pub paths: Vec<usize>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RequirementSet {
    pub k: usize,
    pub tuples: Vec<TxTuple>,
    /// Basis path indices compatible with each tuple's outcome.
    pub choices: Vec<Vec<usize>>,
    pub requirements: Vec<CoverageRequirement>,
}

impl RequirementSet {
    pub fn total(&self) -> usize {
        self.requirements.len()
    }

    /// `(a, C, f, o)@p ; ...` rendering of one requirement.
    pub fn describe(&self, r: &CoverageRequirement) -> String {
        let parts: Vec<String> = r
            .tuples
            .iter()
            .zip(&r.paths)
            .map(|(&t, &p)| format!("{}@p{}", self.tuples[t], p))
            .collect();
        parts.join(" ; ")
    }
}

/// Basis path sets keyed by `Contract.function`.
pub type Bases = BTreeMap<String, BasisPathSet>;

/// Basis path sets for every transaction entry of `g`.
pub fn generate_all_bases(g: &Tcfg, budgets: Budgets) -> Result<Bases, BasisError> {
    let mut out = Bases::new();
    for entry in g.transaction_entries() {
        let set = generate_wtpbs(g, entry, budgets)?;
        out.insert(set.entry_name.clone(), set);
    }
    Ok(out)
}

/// Indices of the paths in `basis` whose terminal matches `outcome`.
pub fn compatible_paths(basis: &BasisPathSet, outcome: Outcome) -> Vec<usize> {
    basis
        .paths
        .iter()
        .enumerate()
        .filter(|(_, p)| p.terminal == outcome.terminal())
        .map(|(i, _)| i)
        .collect()
}

fn basis_for<'b>(bases: &'b Bases, t: &TxTuple) -> Result<&'b BasisPathSet, InteractionError> {
    let key = t.qualified();
    bases.get(&key).ok_or(InteractionError::MissingBasis(key))
}

/// All tuples over accounts, exposed state-changing functions and outcomes
/// that at least one basis path can realise. Ordered by account, then
/// contract and function in declaration order, then outcome.
pub fn enumerate_tuples(model: &DappModel, bases: &Bases) -> Result<Vec<TxTuple>, InteractionError> {
    let mut out = Vec::new();
    for account in &model.accounts {
        for c in &model.contracts {
            for f in &c.state_changing {
                for outcome in [Outcome::Success, Outcome::Revert] {
                    let t = TxTuple {
                        account: account.name.clone(),
                        contract: c.name.clone(),
                        function: f.name.clone(),
                        outcome,
                    };
                    if !compatible_paths(basis_for(bases, &t)?, outcome).is_empty() {
                        out.push(t);
                    }
                }
            }
        }
    }
    Ok(out)
}

/// Closed form `(sum of compatible path counts) ^ k`.
pub fn count_requirements(tuples: &[TxTuple], bases: &Bases, k: usize) -> Result<BigUint, InteractionError> {
    let mut per_slot = 0usize;
    for t in tuples {
        per_slot += compatible_paths(basis_for(bases, t)?, t.outcome).len();
    }
    let k = u32::try_from(k).map_err(|_| InteractionError::TooMany {
        count: BigUint::from(usize::MAX),
    })?;
    Ok(BigUint::from(per_slot).pow(k))
}

/// Every length-`k` requirement over `tuples`, in lexicographic order.
pub fn enumerate_requirements(
    tuples: &[TxTuple],
    bases: &Bases,
    k: usize,
) -> Result<RequirementSet, InteractionError> {
    if k == 0 {
        return Err(InteractionError::ZeroLength);
    }
    let count = count_requirements(tuples, bases, k)?;
    if count > BigUint::from(MAX_REQUIREMENTS) {
        return Err(InteractionError::TooMany { count });
    }
    let choices: Vec<Vec<usize>> = tuples
        .iter()
        .map(|t| Ok(compatible_paths(basis_for(bases, t)?, t.outcome)))
        .collect::<Result<_, InteractionError>>()?;
    let slots: Vec<(usize, usize)> = choices
        .iter()
        .enumerate()
        .flat_map(|(t, ps)| ps.iter().map(move |&p| (t, p)))
        .collect();
    let mut requirements = Vec::new();
    let mut digits = vec![0usize; k];
    'odometer: while !slots.is_empty() {
        requirements.push(CoverageRequirement {
            id: requirements.len(),
            tuples: digits.iter().map(|&d| slots[d].0).collect(),
            paths: digits.iter().map(|&d| slots[d].1).collect(),
        });
        for pos in (0..k).rev() {
            digits[pos] += 1;
            if digits[pos] < slots.len() {
                continue 'odometer;
            }
            digits[pos] = 0;
        }
        break;
    }
    Ok(RequirementSet {
        k,
        tuples: tuples.to_vec(),
        choices,
        requirements,
    })
}

/// One requirement excluded from the achievable denominator.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct InfeasibleEntry {
    pub id: usize,
    pub reason: String,
}

/// Requirements judged infeasible by inspection, with reasons.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct InfeasibleAnnotations {
    pub infeasible: Vec<InfeasibleEntry>,
}

impl InfeasibleAnnotations {
    pub fn ids(&self) -> BTreeSet<usize> {
        self.infeasible.iter().map(|e| e.id).collect()
    }

    /// Rejects ids that do not name a requirement of `set`.
    pub fn check(&self, set: &RequirementSet) -> Result<(), InteractionError> {
        match self.infeasible.iter().find(|e| e.id >= set.total()) {
            Some(e) => Err(InteractionError::UnknownRequirement(e.id)),
            None => Ok(()),
        }
    }
}
