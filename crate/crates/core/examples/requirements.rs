// SPDX-License-Identifier: Apache-2.0

//! k-bounded requirements of the DAO fixture with two accounts: the tuple
//! set, the closed-form count for k = 1..=3, and the first k = 2
//! requirements.
//!
//! cargo run --example requirements

use txbasis::basis::Budgets;
use txbasis::frontend::AccountRole;
use txbasis::graph::GraphConfig;
use txbasis::interactions::{count_requirements, enumerate_requirements, enumerate_tuples, generate_all_bases};
use txbasis::mutation::Program;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let src = std::fs::read_to_string(concat!(env!("CARGO_MANIFEST_DIR"), "/fixtures/dao.msol"))?;
    let accounts = [AccountRole::new("alice", 100u64), AccountRole::new("bob", 100u64)];
    let p = Program::from_source(&src, &accounts, GraphConfig::default())?;
    let bases = generate_all_bases(&p.graph, Budgets::default())?;
    let tuples = enumerate_tuples(&p.model, &bases)?;
    for (i, t) in tuples.iter().enumerate() {
        println!("u{i} {t}");
    }
    for k in 1..=3 {
        println!("k={k}: {} requirements", count_requirements(&tuples, &bases, k)?);
    }
    let set = enumerate_requirements(&tuples, &bases, 2)?;
    for r in set.requirements.iter().take(8) {
        let slots: Vec<String> = r
            .tuples
            .iter()
            .zip(&r.paths)
            .map(|(&t, &pi)| format!("{} via p{pi}", set.tuples[t]))
            .collect();
        println!("r{} {}", r.id, slots.join(" ; "));
    }
    Ok(())
}
