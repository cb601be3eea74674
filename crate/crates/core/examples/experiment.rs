// SPDX-License-Identifier: Apache-2.0

//! The bundled mutation experiment on SharkPool: k-bounded and statement
//! suites from the fixtures, a size-matched random suite, and the kill
//! table. The `experiment` command runs the same pipeline.
//!
//! cargo run --release --example experiment -- [seed]

use std::path::Path;
use txbasis::basis::Budgets;
use txbasis::coverage::MatchMode;
use txbasis::executor::TestSuite;
use txbasis::frontend::{parse_source, AccountRole};
use txbasis::graph::GraphConfig;
use txbasis::interactions::{enumerate_requirements, enumerate_tuples, generate_all_bases};
use txbasis::mutation::{
    generate_mutants, random_suite, run_experiment, ExperimentSuite, MutantManifest, MutationOperator, Program,
    RandomTestConfig, SuiteKind,
};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let seed: u64 = std::env::args().nth(1).map_or(Ok(42), |s| s.parse())?;
    let dir = Path::new(env!("CARGO_MANIFEST_DIR")).join("fixtures/experiment");
    let read = |name: &str| std::fs::read_to_string(dir.join(name));
    let src = read("sharkpool.msol")?;
    let accounts = [AccountRole::new("alice", 100u64), AccountRole::new("bob", 100u64)];
    let p = Program::from_source(&src, &accounts, GraphConfig::default())?;
    let bases = generate_all_bases(&p.graph, Budgets::default())?;
    let set = enumerate_requirements(&enumerate_tuples(&p.model, &bases)?, &bases, 2)?;

    let manifest: MutantManifest = serde_json::from_str(&read("mutants.json")?)?;
    let generated = generate_mutants(&parse_source(&src)?, &MutationOperator::GENERATED);
    let mutants = manifest.resolve(&generated, &dir)?;

    let kb: TestSuite = serde_json::from_str(&read("kbounded.json")?)?;
    let st: TestSuite = serde_json::from_str(&read("statement.json")?)?;
    let shape: Vec<usize> = kb.tests.iter().map(|t| t.steps.len()).collect();
    let rs = random_suite(&p.model, &RandomTestConfig::for_model(&p.model), seed, &shape);
    let suites = [
        ExperimentSuite::record(SuiteKind::KBounded, &p, kb)?,
        ExperimentSuite::record(SuiteKind::Statement, &p, st)?,
        ExperimentSuite::record(SuiteKind::Random, &p, rs)?,
    ];
    let report = run_experiment(&p, &set, &bases, MatchMode::Exact, &suites, &mutants, Some(seed))?;
    print!("{}", report.table());
    Ok(())
}
