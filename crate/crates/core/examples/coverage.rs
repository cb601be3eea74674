// SPDX-License-Identifier: Apache-2.0

//! Measures k = 2 coverage of the hand-built Vault suite against its
//! infeasibility annotations, then statement coverage of the same runs.
//!
//! cargo run --example coverage

use std::path::Path;
use txbasis::basis::Budgets;
use txbasis::coverage::{measure_coverage, MatchMode};
use txbasis::executor::{execute_test_case, Execution, TestSuite};
use txbasis::frontend::AccountRole;
use txbasis::graph::GraphConfig;
use txbasis::interactions::{enumerate_requirements, enumerate_tuples, generate_all_bases, InfeasibleAnnotations};
use txbasis::mutation::Program;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let dir = Path::new(env!("CARGO_MANIFEST_DIR")).join("fixtures");
    let read = |name: &str| std::fs::read_to_string(dir.join(name));
    let accounts = [AccountRole::new("alice", 100u64), AccountRole::new("bob", 100u64)];
    let p = Program::from_source(&read("vault.msol")?, &accounts, GraphConfig::default())?;
    let bases = generate_all_bases(&p.graph, Budgets::default())?;
    let set = enumerate_requirements(&enumerate_tuples(&p.model, &bases)?, &bases, 2)?;
    let suite: TestSuite = serde_json::from_str(&read("vault_k2.json")?)?;
    let notes: InfeasibleAnnotations = serde_json::from_str(&read("vault_infeasible.json")?)?;
    let runs = suite
        .tests
        .iter()
        .map(|t| execute_test_case(&p.model, &p.graph, t))
        .collect::<Result<Vec<Execution>, _>>()?;
    let report = measure_coverage(&p.graph, &set, &bases, &runs, &notes, MatchMode::Exact)?;
    print!("{}", report.table(&set));
    Ok(())
}
