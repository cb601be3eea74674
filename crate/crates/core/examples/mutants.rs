// SPDX-License-Identifier: Apache-2.0

//! Mutant generation on the experiment fixture.
//!
//! Lists every generated mutant, then prints a manifest of 21 evenly
//! spaced picks, the shape of the bundled `mutants.json` before
//! equivalence flags and hand-written mutants were added.
//!
//! cargo run --example mutants

use std::path::Path;
use txbasis::frontend::parse_source;
use txbasis::mutation::{generate_mutants, sample_evenly, MutantManifest, MutationOperator};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let dir = Path::new(env!("CARGO_MANIFEST_DIR")).join("fixtures/experiment");
    let unit = parse_source(&std::fs::read_to_string(dir.join("sharkpool.msol"))?)?;
    let mutants = generate_mutants(&unit, &MutationOperator::GENERATED);
    for m in &mutants {
        let d = &m.descriptor;
        println!(
            "{} {:<22} {}.{}@{} `{}` -> `{}`",
            d.id, d.operator, d.contract, d.function, d.location, d.original, d.replacement
        );
    }
    let manifest = MutantManifest {
        generated: sample_evenly(&mutants, 21).into_iter().map(|m| m.descriptor.clone()).collect(),
        manual: Vec::new(),
    };
    println!("{}", serde_json::to_string_pretty(&manifest)?);
    Ok(())
}
