// SPDX-License-Identifier: Apache-2.0

//! Executes a reentrancy scenario on the DAO fixture: alice deposits, then
//! withdraws while her agent reenters withdrawFunds once. Prints each
//! transaction record and the final balances.
//!
//! cargo run --example run

use txbasis::executor::{execute_test_case, AgentAction, AgentScript, Arg, Deploy, TestCase, TestStep, Value};
use txbasis::frontend::AccountRole;
use txbasis::graph::GraphConfig;
use txbasis::mutation::Program;
use txbasis::Word;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let src = std::fs::read_to_string(concat!(env!("CARGO_MANIFEST_DIR"), "/fixtures/dao.msol"))?;
    let p = Program::from_source(&src, &[AccountRole::new("alice", 100u64)], GraphConfig::default())?;
    let mut t = TestCase::new("reenter");
    t.deploy.push(Deploy::new("alice", "Dao"));
    t.steps.push(TestStep::new("alice", "Dao", "depositFunds").with_value(10u64));
    t.steps.push(TestStep::new("alice", "Dao", "withdrawFunds").with_args([Arg::Uint(Word::from(5u64))]));
    let mut agent = AgentScript::new("alice");
    agent.actions.push(AgentAction {
        contract: "Dao".into(),
        function: "withdrawFunds".into(),
        args: vec![Value::Uint(Word::from(5u64))],
        value: Word::zero(),
    });
    t.agents.push(agent);
    let ex = execute_test_case(&p.model, &p.graph, &t)?;
    for r in &ex.records {
        println!("{} {}.{} value {} -> {} ({} nodes)", r.account, r.contract, r.function, r.value, r.outcome, r.trace.len());
    }
    println!("alice {} wei, Dao {} wei", ex.state.balance("alice"), ex.state.balance("Dao"));
    Ok(())
}
