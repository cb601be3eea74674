// SPDX-License-Identifier: Apache-2.0

//! Basis path sets of the FishToken fixture: for each transaction entry,
//! the cyclomatic number and every generated path as a node list.
//!
//! cargo run --example basis

use txbasis::basis::Budgets;
use txbasis::graph::GraphConfig;
use txbasis::interactions::generate_all_bases;
use txbasis::mutation::Program;
use txbasis::frontend::AccountRole;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let src = std::fs::read_to_string(concat!(env!("CARGO_MANIFEST_DIR"), "/fixtures/fishtoken.msol"))?;
    let p = Program::from_source(&src, &[AccountRole::new("alice", 100u64)], GraphConfig::default())?;
    for (name, set) in generate_all_bases(&p.graph, Budgets::default())? {
        println!("{name}: cyclomatic {}, {} paths, complete {}", set.cyclomatic, set.paths.len(), set.complete);
        for (i, path) in set.paths.iter().enumerate() {
            let nodes: Vec<String> = path.nodes.iter().map(|n| n.to_string()).collect();
            println!("  p{i} {:?} {}", path.terminal, nodes.join(" "));
        }
    }
    Ok(())
}
