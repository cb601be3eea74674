// SPDX-License-Identifier: Apache-2.0

//! Requirement and statement coverage of executed test suites.
//!
//! A test covers a requirement when some window of `k` consecutive
//! transactions of the test matches the requirement slot by slot: same
//! account, contract, function and outcome, and a trace equal to the
//! designated basis path. Deployment transactions never take part in
//! windows.

use crate::basis::BasisPathSet;
use crate::executor::{Execution, TxRecord};
use crate::graph::{NodeId, Tcfg};
use crate::interactions::{Bases, CoverageRequirement, InfeasibleAnnotations, InteractionError, RequirementSet};
use serde::{Deserialize, Serialize};
use std::collections::{BTreeMap, BTreeSet};
use std::fmt::Write;

/// How a trace is compared with a basis path.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum MatchMode {
    /// Node sequences are equal.
    #[default]
    Exact,
    /// Edge-count vectors are equal.
    EdgeVector,
}

fn edge_vector(g: &Tcfg, basis: &BasisPathSet, trace: &[NodeId]) -> Option<Vec<u32>> {
    let mut v = vec![0u32; basis.edges.len()];
    for w in trace.windows(2) {
        let e = g.find_edge(w[0], w[1])?;
        v[basis.edges.binary_search(&e).ok()?] += 1;
    }
    Some(v)
}

/// Whether one record realises slot `(tuple, path)` of `set`.
fn slot_matches(
    g: &Tcfg,
    set: &RequirementSet,
    bases: &Bases,
    mode: MatchMode,
    rec: &TxRecord,
    tuple: usize,
    path: usize,
) -> Result<bool, InteractionError> {
    let t = &set.tuples[tuple];
    if rec.account != t.account || rec.contract != t.contract || rec.function != t.function || rec.outcome != t.outcome {
        return Ok(false);
    }
    let key = t.qualified();
    let basis = bases.get(&key).ok_or_else(|| InteractionError::MissingBasis(key.clone()))?;
    let p = basis.paths.get(path).ok_or(InteractionError::UnknownPath {
        function: key,
        index: path,
    })?;
    Ok(match mode {
        MatchMode::Exact => rec.trace == p.nodes,
        MatchMode::EdgeVector => edge_vector(g, basis, &rec.trace).is_some_and(|v| v == p.vector),
    })
}

/// Per record of one test, the `(tuple, path)` slots it realises.
fn matched_slots(
    g: &Tcfg,
    set: &RequirementSet,
    bases: &Bases,
    mode: MatchMode,
    records: &[TxRecord],
) -> Result<Vec<BTreeSet<(usize, usize)>>, InteractionError> {
    let mut out = Vec::with_capacity(records.len());
    for rec in records {
        let mut slots = BTreeSet::new();
        for (t, paths) in set.choices.iter().enumerate() {
            for &p in paths {
                if slot_matches(g, set, bases, mode, rec, t, p)? {
                    slots.insert((t, p));
                }
            }
        }
        out.push(slots);
    }
    Ok(out)
}

fn first_window(r: &CoverageRequirement, matched: &[BTreeSet<(usize, usize)>]) -> Option<usize> {
    let k = r.tuples.len();
    if matched.len() < k {
        return None;
    }
    (0..=matched.len() - k).find(|&i| {
        (0..k).all(|j| matched[i + j].contains(&(r.tuples[j], r.paths[j])))
    })
}

/// Smallest offset of a window of `records` covering `r`.
pub fn requirement_covered(
    g: &Tcfg,
    set: &RequirementSet,
    bases: &Bases,
    mode: MatchMode,
    r: &CoverageRequirement,
    records: &[TxRecord],
) -> Result<Option<usize>, InteractionError> {
    let k = r.tuples.len();
    if records.len() < k {
        return Ok(None);
    }
    'windows: for i in 0..=records.len() - k {
        for j in 0..k {
            if !slot_matches(g, set, bases, mode, &records[i + j], r.tuples[j], r.paths[j])? {
                continue 'windows;
            }
        }
        return Ok(Some(i));
    }
    Ok(None)
}

/// Ids of every requirement of `set` that some window of `records` covers.
///
/// Relies on the enumeration order of requirements: the id of
/// `((t1, p1), .., (tk, pk))` is its index in base `S`, where `S` is the
/// number of slots and each digit the slot's position in tuple-then-path
/// order.
pub fn covered_requirements(
    g: &Tcfg,
    set: &RequirementSet,
    bases: &Bases,
    mode: MatchMode,
    records: &[TxRecord],
) -> Result<BTreeSet<usize>, InteractionError> {
    let slot_index: BTreeMap<(usize, usize), usize> = set
        .choices
        .iter()
        .enumerate()
        .flat_map(|(t, ps)| ps.iter().map(move |&p| (t, p)))
        .enumerate()
        .map(|(i, slot)| (slot, i))
        .collect();
    let base = slot_index.len();
    let matched = matched_slots(g, set, bases, mode, records)?;
    let mut out = BTreeSet::new();
    let k = set.k;
    if k == 0 || matched.len() < k {
        return Ok(out);
    }
    for i in 0..=matched.len() - k {
        let mut ids = vec![0usize];
        for slots in &matched[i..i + k] {
            let mut next = Vec::with_capacity(ids.len() * slots.len());
            for id in &ids {
                for s in slots {
                    next.push(id * base + slot_index[s]);
                }
            }
            ids = next;
        }
        out.extend(ids);
    }
    Ok(out)
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RequirementStatus {
    Covered { test: String, offset: usize },
    Uncovered,
    Infeasible { reason: String },
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct StatementCoverage {
    pub visited: usize,
    pub total: usize,
    pub unvisited: Vec<NodeId>,
}

impl StatementCoverage {
    pub fn percent(&self) -> f64 {
        percent(self.visited, self.total)
    }
}

fn percent(num: usize, den: usize) -> f64 {
    if den == 0 {
        100.0
    } else {
        100.0 * num as f64 / den as f64
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CoverageReport {
    pub k: usize,
    pub mode: MatchMode,
    pub total: usize,
    pub covered: usize,
    pub infeasible: usize,
    pub uncovered: usize,
    /// Annotated infeasible yet covered by the suite; counted as covered.
    pub contradicted_annotations: Vec<usize>,
    pub statuses: Vec<RequirementStatus>,
    pub statement: StatementCoverage,
}

impl CoverageReport {
    pub fn raw_percent(&self) -> f64 {
        percent(self.covered, self.total)
    }

    /// Coverage over requirements not annotated infeasible.
    pub fn adjusted_percent(&self) -> f64 {
        percent(self.covered, self.total - self.infeasible)
    }

    /// Human-readable summary table.
    pub fn table(&self, set: &RequirementSet) -> String {
        let mut out = String::new();
        writeln!(out, "k-bounded transaction coverage (k = {}, match = {:?})", self.k, self.mode).unwrap();
        writeln!(out, "{:<28}{:>10}", "requirements", self.total).unwrap();
        writeln!(out, "{:<28}{:>10}", "covered", self.covered).unwrap();
        writeln!(out, "{:<28}{:>10}", "annotated infeasible", self.infeasible).unwrap();
        writeln!(out, "{:<28}{:>10}", "uncovered", self.uncovered).unwrap();
        writeln!(out, "{:<28}{:>9.1}%", "coverage (raw)", self.raw_percent()).unwrap();
        writeln!(out, "{:<28}{:>9.1}%", "coverage (feasible)", self.adjusted_percent()).unwrap();
        writeln!(
            out,
            "{:<28}{:>4}/{:<4}{:>6.1}%",
            "statement coverage",
            self.statement.visited,
            self.statement.total,
            self.statement.percent()
        )
        .unwrap();
        for (r, status) in set.requirements.iter().zip(&self.statuses) {
            let s = match status {
                RequirementStatus::Covered { test, offset } => format!("covered by {test}@{offset}"),
                RequirementStatus::Uncovered => "UNCOVERED".to_string(),
                RequirementStatus::Infeasible { reason } => format!("infeasible: {reason}"),
            };
            writeln!(out, "  r{:<5} {:<40} {}", r.id, s, set.describe(r)).unwrap();
        }
        out
    }
}

/// Expression and predicate nodes outside `ext`, visited or not by `suite`.
pub fn measure_statement_coverage(g: &Tcfg, suite: &[Execution]) -> StatementCoverage {
    let statements: BTreeSet<NodeId> = g
        .nodes
        .iter()
        .filter(|n| n.is_statement(g))
        .map(|n| n.id)
        .collect();
    let mut visited = BTreeSet::new();
    for ex in suite {
        for rec in ex.prologue.iter().chain(&ex.records) {
            visited.extend(rec.trace.iter().filter(|n| statements.contains(n)));
        }
    }
    StatementCoverage {
        visited: visited.len(),
        total: statements.len(),
        unvisited: statements.difference(&visited).copied().collect(),
    }
}

/// Marks every requirement of `set` covered, uncovered or infeasible.
pub fn measure_coverage(
    g: &Tcfg,
    set: &RequirementSet,
    bases: &Bases,
    suite: &[Execution],
    annotations: &InfeasibleAnnotations,
    mode: MatchMode,
) -> Result<CoverageReport, InteractionError> {
    annotations.check(set)?;
    let reasons: BTreeMap<usize, &str> = annotations
        .infeasible
        .iter()
        .map(|e| (e.id, e.reason.as_str()))
        .collect();
    let matched: Vec<Vec<BTreeSet<(usize, usize)>>> = suite
        .iter()
        .map(|ex| matched_slots(g, set, bases, mode, &ex.records))
        .collect::<Result<_, _>>()?;
    let mut statuses = Vec::with_capacity(set.total());
    let mut contradicted = Vec::new();
    let (mut covered, mut infeasible) = (0, 0);
    for r in &set.requirements {
        let hit = suite
            .iter()
            .zip(&matched)
            .find_map(|(ex, m)| first_window(r, m).map(|offset| (ex.name.clone(), offset)));
        let status = match (hit, reasons.get(&r.id)) {
            (Some((test, offset)), annotated) => {
                if annotated.is_some() {
                    contradicted.push(r.id);
                }
                covered += 1;
                RequirementStatus::Covered { test, offset }
            }
            (None, Some(reason)) => {
                infeasible += 1;
                RequirementStatus::Infeasible {
                    reason: reason.to_string(),
                }
            }
            (None, None) => RequirementStatus::Uncovered,
        };
        statuses.push(status);
    }
    Ok(CoverageReport {
        k: set.k,
        mode,
        total: set.total(),
        covered,
        infeasible,
        uncovered: set.total() - covered - infeasible,
        contradicted_annotations: contradicted,
        statuses,
        statement: measure_statement_coverage(g, suite),
    })
}
