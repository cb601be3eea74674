// SPDX-License-Identifier: Apache-2.0

//! Running test suites against mutants and comparing observable behaviour
//! with the unmutated program.
//!
//! What a test observes: per transaction its outcome, return values and
//! logs; after the last transaction, every ether balance, every public
//! state variable over a small key domain, and every exposed view/pure
//! function over the same domain. Traces are not observable.

use super::{Mutant, MutationOperator};
use crate::coverage::{covered_requirements, measure_statement_coverage, MatchMode};
use crate::executor::{
    call_view, execute_test_case, Execution, Slot, TestCase, TestSuite, Value, ViewOutcome, WorldState, ZERO_ADDRESS,
};
use crate::frontend::{build_dapp_model, parse_source, AccountRole, DappModel, FrontendError, Type};
use crate::graph::{build_tcfg, GraphConfig, GraphError, Tcfg};
use crate::interactions::{Bases, InteractionError, Outcome, RequirementSet};
use crate::Word;
use serde::{Deserialize, Serialize};
use std::collections::{BTreeMap, BTreeSet};
use std::fmt::{self, Write};
use thiserror::Error;

/// Argument combinations tried per view function.
pub const MAX_PROBE_CALLS: usize = 64;

#[derive(Debug, Error)]
pub enum ProgramError {
    #[error(transparent)]
    Frontend(#[from] FrontendError),
    #[error(transparent)]
    Graph(#[from] GraphError),
}

/// A compiled program: model plus graph under one configuration.
#[derive(Debug, Clone)]
pub struct Program {
    pub model: DappModel,
    pub graph: Tcfg,
    pub config: GraphConfig,
}

impl Program {
    pub fn from_source(text: &str, accounts: &[AccountRole], config: GraphConfig) -> Result<Self, ProgramError> {
        let unit = parse_source(text)?;
        let model = build_dapp_model(&unit, accounts)?;
        let graph = build_tcfg(&model, &config)?;
        Ok(Program { model, graph, config })
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TxObservation {
    pub account: String,
    pub call: String,
    pub outcome: Outcome,
    pub returns: Vec<Value>,
    pub logs: Vec<String>,
}

/// Everything one test observes of a program.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Observation {
    pub test: String,
    /// Set when the test could not run to completion.
    pub error: Option<String>,
    pub records: Vec<TxObservation>,
    pub probes: BTreeMap<String, String>,
}

fn address_domain(model: &DappModel) -> Vec<Value> {
    let mut out: Vec<Value> = model.accounts.iter().map(|a| Value::Address(a.name.clone())).collect();
    out.extend(model.contracts.iter().map(|c| Value::Address(c.name.clone())));
    out.push(Value::Address(ZERO_ADDRESS.into()));
    out
}

fn domain(model: &DappModel, ty: &Type) -> Vec<Value> {
    match ty {
        Type::Address => address_domain(model),
        Type::Bool => vec![Value::Bool(false), Value::Bool(true)],
        _ => (0u64..3).map(|n| Value::Uint(Word::from(n))).collect(),
    }
}

fn render_view(r: Result<ViewOutcome, crate::executor::ExecError>) -> String {
    match r {
        Ok(ViewOutcome::Returned(Some(v))) => v.to_string(),
        Ok(ViewOutcome::Returned(None)) => "()".into(),
        Ok(ViewOutcome::Reverted) => "revert".into(),
        Err(e) => format!("error: {e}"),
    }
}

/// Post-test probes of `state`, keyed by a readable description.
fn probe_state(p: &Program, state: &WorldState) -> BTreeMap<String, String> {
    let mut out = BTreeMap::new();
    for a in address_domain(&p.model) {
        let Value::Address(name) = &a else { continue };
        out.insert(format!("balance({a})"), state.balance(name).to_string());
    }
    for c in &p.model.contracts {
        let Some(storage) = state.storage.get(&c.name) else {
            continue;
        };
        let Some(decl) = p.model.decl(&c.name) else {
            continue;
        };
        for v in decl.state_vars.iter().filter(|v| v.public) {
            let key = format!("{}.{}", c.name, v.name);
            match (storage.get(&v.name), &v.ty) {
                (Some(Slot::Scalar(x)), _) => {
                    out.insert(key, x.to_string());
                }
                (Some(Slot::Array(xs)), _) => {
                    out.insert(format!("{key}.length"), xs.len().to_string());
                    for (i, x) in xs.iter().enumerate() {
                        out.insert(format!("{key}[{i}]"), x.to_string());
                    }
                }
                (Some(Slot::Mapping(m)), Type::Mapping(kt, vt)) => {
                    for k in domain(&p.model, kt) {
                        let x = m.get(&k).cloned().unwrap_or_else(|| Value::zero_of(vt));
                        out.insert(format!("{key}[{k}]"), x.to_string());
                    }
                }
                _ => {}
            }
        }
        for f in &c.read_only {
            let domains: Vec<Vec<Value>> = f.params.iter().map(|q| domain(&p.model, &q.ty)).collect();
            for args in combinations(&domains).into_iter().take(MAX_PROBE_CALLS) {
                let shown: Vec<String> = args.iter().map(Value::to_string).collect();
                let key = format!("{}.{}({})", c.name, f.name, shown.join(", "));
                let r = call_view(&p.model, &p.graph, state, &c.name, &f.name, args);
                out.insert(key, render_view(r));
            }
        }
    }
    out
}

fn combinations(domains: &[Vec<Value>]) -> Vec<Vec<Value>> {
    let mut out = vec![Vec::new()];
    for d in domains {
        let mut next = Vec::new();
        for prefix in &out {
            for v in d {
                let mut c = prefix.clone();
                c.push(v.clone());
                next.push(c);
                if next.len() >= MAX_PROBE_CALLS {
                    break;
                }
            }
        }
        out = next;
    }
    out
}

fn observe(p: &Program, t: &TestCase) -> (Observation, Option<Execution>) {
    match execute_test_case(&p.model, &p.graph, t) {
        Ok(ex) => {
            let records = ex
                .records
                .iter()
                .map(|r| TxObservation {
                    account: r.account.clone(),
                    call: format!("{}.{}", r.contract, r.function),
                    outcome: r.outcome,
                    returns: r.returns.clone(),
                    logs: r.logs.clone(),
                })
                .collect();
            let obs = Observation {
                test: t.name.clone(),
                error: None,
                records,
                probes: probe_state(p, &ex.state),
            };
            (obs, Some(ex))
        }
        Err(e) => (
            Observation {
                test: t.name.clone(),
                error: Some(e.to_string()),
                records: Vec::new(),
                probes: BTreeMap::new(),
            },
            None,
        ),
    }
}

/// Observations of every test of `suite` on `p`.
pub fn observe_suite(p: &Program, suite: &TestSuite) -> Vec<Observation> {
    suite.tests.iter().map(|t| observe(p, t).0).collect()
}

/// A concrete observable difference between a mutant and the original.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct KillEvidence {
    pub test: String,
    /// `step N (account, C.f)`, a probe key, or `execution`.
    pub location: String,
    /// `outcome`, `returns`, `logs`, `probe` or `execution`.
    pub field: String,
    pub expected: String,
    pub actual: String,
}

impl fmt::Display for KillEvidence {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "{}: {} {} expected `{}`, got `{}`",
            self.test, self.location, self.field, self.expected, self.actual
        )
    }
}

fn show_values(vs: &[Value]) -> String {
    vs.iter().map(Value::to_string).collect::<Vec<_>>().join(", ")
}

/// First difference between `expected` and `actual`, if any.
fn difference(expected: &Observation, actual: &Observation) -> Option<KillEvidence> {
    let evidence = |location: String, field: &str, e: String, a: String| KillEvidence {
        test: expected.test.clone(),
        location,
        field: field.into(),
        expected: e,
        actual: a,
    };
    if let Some(err) = &actual.error {
        return Some(evidence("execution".into(), "execution", "completes".into(), err.clone()));
    }
    for (i, (e, a)) in expected.records.iter().zip(&actual.records).enumerate() {
        let at = format!("step {i} ({}, {})", e.account, e.call);
        if e.outcome != a.outcome {
            return Some(evidence(at, "outcome", e.outcome.to_string(), a.outcome.to_string()));
        }
        if e.returns != a.returns {
            return Some(evidence(at, "returns", show_values(&e.returns), show_values(&a.returns)));
        }
        if e.logs != a.logs {
            return Some(evidence(at, "logs", e.logs.join(", "), a.logs.join(", ")));
        }
    }
    if expected.records.len() != actual.records.len() {
        return Some(evidence(
            "execution".into(),
            "records",
            expected.records.len().to_string(),
            actual.records.len().to_string(),
        ));
    }
    let keys: BTreeSet<&String> = expected.probes.keys().chain(actual.probes.keys()).collect();
    for k in keys {
        let e = expected.probes.get(k);
        let a = actual.probes.get(k);
        if e != a {
            let show = |x: Option<&String>| x.cloned().unwrap_or_else(|| "<absent>".into());
            return Some(evidence(k.clone(), "probe", show(e), show(a)));
        }
    }
    None
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SuiteKind {
    KBounded,
    Statement,
    Random,
}

impl SuiteKind {
    /// Row label of the comparison table.
    pub fn label(self) -> &'static str {
        match self {
            SuiteKind::KBounded => "k-bounded transaction coverage",
            SuiteKind::Statement => "Statement coverage",
            SuiteKind::Random => "Random",
        }
    }
}

#[derive(Debug, Error)]
pub enum ExperimentError {
    #[error("test `{test}` fails on the original program: {message}")]
    Oracle { test: String, message: String },
    #[error("oracle does not match the {kind:?} suite: {detail}")]
    OracleMismatch { kind: SuiteKind, detail: String },
    #[error("mutant `{id}` does not compile: {source}")]
    Mutant {
        id: String,
        #[source]
        source: ProgramError,
    },
    #[error(transparent)]
    Coverage(#[from] InteractionError),
}

/// One suite with the observations the original program yields on it.
#[derive(Debug, Clone)]
pub struct ExperimentSuite {
    pub kind: SuiteKind,
    pub suite: TestSuite,
    pub oracle: Vec<Observation>,
    executions: Vec<Execution>,
}

impl ExperimentSuite {
    /// Records the oracle of `suite` on the original program; every test
    /// must run to completion.
    pub fn record(kind: SuiteKind, original: &Program, suite: TestSuite) -> Result<Self, ExperimentError> {
        let mut oracle = Vec::new();
        let mut executions = Vec::new();
        for t in &suite.tests {
            let (obs, ex) = observe(original, t);
            match ex {
                Some(ex) => executions.push(ex),
                None => {
                    return Err(ExperimentError::Oracle {
                        test: t.name.clone(),
                        message: obs.error.unwrap_or_default(),
                    })
                }
            }
            oracle.push(obs);
        }
        Ok(ExperimentSuite {
            kind,
            suite,
            oracle,
            executions,
        })
    }

    /// Pairs `suite` with an oracle recorded elsewhere.
    pub fn with_oracle(
        kind: SuiteKind,
        original: &Program,
        suite: TestSuite,
        oracle: Vec<Observation>,
    ) -> Result<Self, ExperimentError> {
        let fresh = Self::record(kind, original, suite)?;
        if fresh.oracle.len() != oracle.len() {
            return Err(ExperimentError::OracleMismatch {
                kind,
                detail: format!("{} tests but {} observations", fresh.oracle.len(), oracle.len()),
            });
        }
        for (have, want) in fresh.oracle.iter().zip(&oracle) {
            if have != want {
                return Err(ExperimentError::OracleMismatch {
                    kind,
                    detail: format!("test `{}` observes differently", want.test),
                });
            }
        }
        Ok(fresh)
    }

    pub fn transactions(&self) -> usize {
        self.suite.tests.iter().map(|t| t.steps.len()).sum()
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct MutantResult {
    pub id: String,
    pub operator: MutationOperator,
    pub site: String,
    pub original: String,
    pub replacement: String,
    pub equivalent: bool,
    /// First difference per suite; `None` when the suite misses the mutant.
    pub kills: BTreeMap<SuiteKind, Option<KillEvidence>>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SuiteSummary {
    pub kind: SuiteKind,
    pub tests: usize,
    pub transactions: usize,
    /// Non-equivalent mutants killed.
    pub detected: usize,
    /// Non-equivalent mutants.
    pub considered: usize,
    pub requirements_covered: usize,
    pub requirements_total: usize,
    pub statements_visited: usize,
    pub statements_total: usize,
}

impl SuiteSummary {
    pub fn percent(&self) -> f64 {
        if self.considered == 0 {
            0.0
        } else {
            100.0 * self.detected as f64 / self.considered as f64
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentReport {
    pub k: usize,
    pub seed: Option<u64>,
    pub suites: Vec<SuiteSummary>,
    pub mutants: Vec<MutantResult>,
    /// Flagged equivalent but killed by some suite.
    pub contradicted_equivalence: Vec<String>,
}

impl ExperimentReport {
    pub fn summary(&self, kind: SuiteKind) -> Option<&SuiteSummary> {
        self.suites.iter().find(|s| s.kind == kind)
    }

    /// Comparison table plus per-mutant detail.
    pub fn table(&self) -> String {
        let mut out = String::new();
        writeln!(out, "{:<34}{:>30}{:>24}", "Testing method", "#. of logic faults detected", "%. of detected faults")
            .unwrap();
        for s in &self.suites {
            writeln!(out, "{:<34}{:>30}{:>23.1}%", s.kind.label(), s.detected, s.percent()).unwrap();
        }
        let equivalent: Vec<&str> = self
            .mutants
            .iter()
            .filter(|m| m.equivalent)
            .map(|m| m.id.as_str())
            .collect();
        writeln!(out).unwrap();
        let considered = self.mutants.len() - equivalent.len();
        writeln!(out, "mutants: {} ({} considered)", self.mutants.len(), considered).unwrap();
        if !equivalent.is_empty() {
            writeln!(out, "equivalent, excluded: {}", equivalent.join(", ")).unwrap();
        }
        if !self.contradicted_equivalence.is_empty() {
            writeln!(out, "flagged equivalent but killed: {}", self.contradicted_equivalence.join(", ")).unwrap();
        }
        match self.seed {
            Some(seed) => writeln!(out, "random suite seed: {seed}").unwrap(),
            None => writeln!(out, "random suite seed: none").unwrap(),
        }
        writeln!(out).unwrap();
        writeln!(
            out,
            "{:<14}{:>6}{:>12}{:>20}{:>20}",
            "suite", "tests", "txs", "requirements", "statements"
        )
        .unwrap();
        for s in &self.suites {
            writeln!(
                out,
                "{:<14}{:>6}{:>12}{:>20}{:>20}",
                format!("{:?}", s.kind).to_lowercase(),
                s.tests,
                s.transactions,
                format!("{}/{}", s.requirements_covered, s.requirements_total),
                format!("{}/{}", s.statements_visited, s.statements_total)
            )
            .unwrap();
        }
        writeln!(out).unwrap();
        for m in &self.mutants {
            let marks: Vec<String> = m
                .kills
                .iter()
                .map(|(k, e)| format!("{}={}", format!("{k:?}").to_lowercase(), if e.is_some() { "killed" } else { "alive" }))
                .collect();
            writeln!(
                out,
                "{} {:<22} {:<28} `{}` -> `{}` {}{}",
                m.id,
                m.operator.name(),
                m.site,
                m.original,
                m.replacement,
                marks.join(" "),
                if m.equivalent { " (equivalent)" } else { "" }
            )
            .unwrap();
        }
        out
    }
}

fn run_mutant(
    original: &Program,
    suites: &[ExperimentSuite],
    mutant: &Mutant,
) -> Result<MutantResult, ExperimentError> {
    let d = &mutant.descriptor;
    let p = Program::from_source(&mutant.source, &original.model.accounts, original.config).map_err(|source| {
        ExperimentError::Mutant {
            id: d.id.clone(),
            source,
        }
    })?;
    let mut kills = BTreeMap::new();
    for s in suites {
        let evidence = s
            .suite
            .tests
            .iter()
            .zip(&s.oracle)
            .find_map(|(t, expected)| difference(expected, &observe(&p, t).0));
        kills.insert(s.kind, evidence);
    }
    Ok(MutantResult {
        id: d.id.clone(),
        operator: d.operator,
        site: format!("{}.{}@{}", d.contract, d.function, d.location),
        original: d.original.clone(),
        replacement: d.replacement.clone(),
        equivalent: d.equivalent,
        kills,
    })
}

/// Runs every suite against every mutant.
///
/// Mutants run on worker threads; the report lists them in input order and
/// does not depend on scheduling.
pub fn run_experiment(
    original: &Program,
    set: &RequirementSet,
    bases: &Bases,
    mode: MatchMode,
    suites: &[ExperimentSuite],
    mutants: &[Mutant],
    seed: Option<u64>,
) -> Result<ExperimentReport, ExperimentError> {
    for s in suites {
        if s.oracle.len() != s.suite.tests.len() {
            return Err(ExperimentError::OracleMismatch {
                kind: s.kind,
                detail: format!("{} tests but {} observations", s.suite.tests.len(), s.oracle.len()),
            });
        }
    }
    let workers = std::thread::available_parallelism().map_or(1, |n| n.get()).min(mutants.len().max(1));
    let chunk = mutants.len().div_ceil(workers).max(1);
    let results: Vec<Result<MutantResult, ExperimentError>> = std::thread::scope(|scope| {
        let handles: Vec<_> = mutants
            .chunks(chunk)
            .map(|ms| scope.spawn(move || ms.iter().map(|m| run_mutant(original, suites, m)).collect::<Vec<_>>()))
            .collect();
        handles
            .into_iter()
            .flat_map(|h| h.join().expect("mutant worker panicked"))
            .collect()
    });
    let results: Vec<MutantResult> = results.into_iter().collect::<Result<_, _>>()?;

    let mut summaries = Vec::new();
    for s in suites {
        let mut covered = BTreeSet::new();
        for ex in &s.executions {
            covered.extend(covered_requirements(&original.graph, set, bases, mode, &ex.records)?);
        }
        let stmt = measure_statement_coverage(&original.graph, &s.executions);
        let considered: Vec<&MutantResult> = results.iter().filter(|m| !m.equivalent).collect();
        summaries.push(SuiteSummary {
            kind: s.kind,
            tests: s.suite.tests.len(),
            transactions: s.transactions(),
            detected: considered.iter().filter(|m| m.kills[&s.kind].is_some()).count(),
            considered: considered.len(),
            requirements_covered: covered.len(),
            requirements_total: set.total(),
            statements_visited: stmt.visited,
            statements_total: stmt.total,
        });
    }
    let contradicted_equivalence = results
        .iter()
        .filter(|m| m.equivalent && m.kills.values().any(Option::is_some))
        .map(|m| m.id.clone())
        .collect();
    Ok(ExperimentReport {
        k: set.k,
        seed,
        suites: summaries,
        mutants: results,
        contradicted_equivalence,
    })
}
