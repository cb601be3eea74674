// SPDX-License-Identifier: Apache-2.0

//! Parses the DAO fixture, builds its transaction control flow graph and
//! prints per-entry metrics followed by the DOT rendering.
//!
//! cargo run --example tcfg

use txbasis::frontend::{build_dapp_model, parse_source, AccountRole};
use txbasis::graph::{build_tcfg, export_dot, reachable_metrics, GraphConfig};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let src = std::fs::read_to_string(concat!(env!("CARGO_MANIFEST_DIR"), "/fixtures/dao.msol"))?;
    let unit = parse_source(&src)?;
    let model = build_dapp_model(&unit, &[AccountRole::new("alice", 100u64)])?;
    let g = build_tcfg(&model, &GraphConfig::default())?;
    println!("{} nodes, {} edges", g.nodes.len(), g.edges.len());
    for f in g.functions.iter().filter(|f| f.transaction_entry) {
        let m = reachable_metrics(&g, f.entry)?;
        println!("{:<20} reachable {:>2} nodes {:>2} edges, cyclomatic {}", f.name, m.nodes.len(), m.edges.len(), m.cyclomatic);
    }
    print!("{}", export_dot(&g));
    Ok(())
}
