// SPDX-License-Identifier: Apache-2.0

//! Coverage-directed suite construction for the experiment fixture.
//!
//! Draws seeded random tests and keeps the shortest witness of every
//! k = 2 requirement (k-bounded suite) and of every statement (statement
//! suite). With `--write` the suites replace the frozen fixtures.
//!
//! cargo run --example search_suites -- [--write]

use std::path::Path;
use txbasis::basis::Budgets;
use txbasis::coverage::MatchMode;
use txbasis::frontend::AccountRole;
use txbasis::graph::GraphConfig;
use txbasis::interactions::{enumerate_requirements, enumerate_tuples, generate_all_bases};
use txbasis::mutation::{search_suite, Program, RandomTestConfig, SearchGoal};

const CANDIDATES: usize = 5000;
const KBOUNDED_SEED: u64 = 1;
const STATEMENT_SEED: u64 = 2;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let dir = Path::new(env!("CARGO_MANIFEST_DIR")).join("fixtures/experiment");
    let src = std::fs::read_to_string(dir.join("sharkpool.msol"))?;
    let accounts = [AccountRole::new("alice", 100u64), AccountRole::new("bob", 100u64)];
    let p = Program::from_source(&src, &accounts, GraphConfig::default())?;
    let bases = generate_all_bases(&p.graph, Budgets::default())?;
    let tuples = enumerate_tuples(&p.model, &bases)?;
    let set = enumerate_requirements(&tuples, &bases, 2)?;
    let cfg = RandomTestConfig::for_model(&p.model);

    let kb = search_suite(&p, &set, &bases, MatchMode::Exact, &cfg, KBOUNDED_SEED, CANDIDATES, SearchGoal::Requirements, "kb")?;
    let st = search_suite(&p, &set, &bases, MatchMode::Exact, &cfg, STATEMENT_SEED, CANDIDATES, SearchGoal::Statements, "stmt")?;
    let txs = |s: &txbasis::executor::TestSuite| s.tests.iter().map(|t| t.steps.len()).sum::<usize>();
    println!("k-bounded suite: {} tests, {} transactions", kb.tests.len(), txs(&kb));
    println!("statement suite: {} tests, {} transactions", st.tests.len(), txs(&st));

    if std::env::args().any(|a| a == "--write") {
        std::fs::write(dir.join("kbounded.json"), serde_json::to_string_pretty(&kb)? + "\n")?;
        std::fs::write(dir.join("statement.json"), serde_json::to_string_pretty(&st)? + "\n")?;
        println!("fixtures written to {}", dir.display());
    }
    Ok(())
}
