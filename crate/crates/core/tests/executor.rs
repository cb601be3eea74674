// SPDX-License-Identifier: Apache-2.0

mod common;

use common::*;
use txbasis::basis::{validate_wtp, Budgets};
use txbasis::executor::{
    execute_test_case, project_trace, AgentAction, AgentFinal, AgentScript, Arg, Deploy, ExecError, Slot,
    TestCase, TestStep, Value, WorldState,
};
use txbasis::graph::{Arithmetic, GraphConfig, LowLevelRevert, NodeKind};
use txbasis::interactions::{generate_all_bases, Outcome};
use txbasis::mutation::Program;
use txbasis::Word;

fn mapping(state: &WorldState, contract: &str, var: &str, key: &str) -> Word {
    match &state.storage[contract][var] {
        Slot::Mapping(m) => m
            .get(&Value::Address(key.into()))
            .and_then(Value::as_uint)
            .cloned()
            .unwrap_or_default(),
        other => panic!("{var} is {other:?}"),
    }
}

fn dao_case(name: &str, steps: Vec<TestStep>) -> TestCase {
    let mut t = TestCase::new(name);
    t.deploy.push(Deploy::new("alice", "Dao"));
    t.steps = steps;
    t
}

fn deposit(v: u64) -> TestStep {
    TestStep::new("alice", "Dao", "depositFunds").with_value(v)
}

fn withdraw(v: u64) -> TestStep {
    TestStep::new("alice", "Dao", "withdrawFunds").with_args([Arg::Uint(Word::from(v))])
}

fn return_false() -> GraphConfig {
    GraphConfig {
        lowlevel_revert: LowLevelRevert::ReturnFalse,
        ..GraphConfig::default()
    }
}

fn enters(p: &Program, trace: &[usize], function: &str) -> bool {
    trace[1..].iter().any(|&n| {
        let node = p.graph.node(n);
        node.kind == NodeKind::Entry { transaction: true } && p.graph.functions[node.func].function == function
    })
}

#[test]
fn deposit_credits_the_sender() {
    let p = program("dao.msol", GraphConfig::default());
    let ex = execute_test_case(&p.model, &p.graph, &dao_case("d", vec![deposit(5)])).unwrap();
    assert_eq!(ex.records[0].outcome, Outcome::Success);
    assert_eq!(mapping(&ex.state, "Dao", "balances", "alice"), Word::from(5u64));
    assert_eq!(ex.state.balance("alice"), Word::from(95u64));
    assert_eq!(ex.state.balance("Dao"), Word::from(5u64));
}

#[test]
fn withdraw_without_agent_takes_the_shortest_basis_path() {
    let p = program("dao.msol", GraphConfig::default());
    let ex = execute_test_case(&p.model, &p.graph, &dao_case("w", vec![deposit(5), withdraw(5)])).unwrap();
    let r = &ex.records[1];
    assert_eq!(r.outcome, Outcome::Success);
    assert_eq!(mapping(&ex.state, "Dao", "balances", "alice"), Word::zero());
    assert_eq!(ex.state.balance("alice"), Word::from(100u64));
    let bases = generate_all_bases(&p.graph, Budgets::default()).unwrap();
    assert_eq!(r.trace, bases["Dao.withdrawFunds"].paths[0].nodes);
}

#[test]
fn failing_agent_reverts_withdraw_under_return_false() {
    let p = program("dao.msol", return_false());
    let mut t = dao_case("w", vec![deposit(5), withdraw(5)]);
    let mut agent = AgentScript::new("alice");
    agent.finally = AgentFinal::Revert;
    t.agents.push(agent);
    let ex = execute_test_case(&p.model, &p.graph, &t).unwrap();
    assert_eq!(ex.records[1].outcome, Outcome::Revert);
    assert_eq!(mapping(&ex.state, "Dao", "balances", "alice"), Word::from(5u64));
    assert_eq!(ex.state.balance("alice"), Word::from(95u64));
    assert_eq!(validate_wtp(&p.graph, &ex.records[1].trace), Ok(txbasis::basis::Terminal::Revert));
}

#[test]
fn failing_agent_needs_return_false() {
    let p = program("dao.msol", GraphConfig::default());
    let mut t = dao_case("w", vec![withdraw(0)]);
    let mut agent = AgentScript::new("alice");
    agent.finally = AgentFinal::Revert;
    t.agents.push(agent);
    assert!(matches!(
        execute_test_case(&p.model, &p.graph, &t),
        Err(ExecError::AgentRevertNeedsReturnFalse(_))
    ));
}

#[test]
fn reentrant_withdraw_is_a_valid_path() {
    let p = program("dao.msol", GraphConfig::default());
    let mut t = dao_case("re", vec![deposit(10), withdraw(5)]);
    let mut agent = AgentScript::new("alice");
    agent.actions.push(AgentAction {
        contract: "Dao".into(),
        function: "withdrawFunds".into(),
        args: vec![Value::Uint(Word::from(5u64))],
        value: Word::zero(),
    });
    t.agents.push(agent);
    let ex = execute_test_case(&p.model, &p.graph, &t).unwrap();
    let r = &ex.records[1];
    assert_eq!(r.outcome, Outcome::Success);
    assert!(enters(&p, &r.trace, "withdrawFunds"));
    assert_eq!(validate_wtp(&p.graph, &r.trace), Ok(txbasis::basis::Terminal::Exit));
    assert_eq!(mapping(&ex.state, "Dao", "balances", "alice"), Word::zero());
    assert_eq!(ex.state.balance("alice"), Word::from(100u64));
}

#[test]
fn unset_mapping_keys_read_as_zero() {
    let p = program(
        "dao.msol",
        GraphConfig {
            arithmetic: Arithmetic::Checked,
            ..GraphConfig::default()
        },
    );
    let bob = |v: u64| TestStep::new("bob", "Dao", "withdrawFunds").with_args([Arg::Uint(Word::from(v))]);
    let ex = execute_test_case(&p.model, &p.graph, &dao_case("z", vec![deposit(3), bob(0), bob(1)])).unwrap();
    let Slot::Mapping(m) = &ex.state.storage["Dao"]["balances"] else {
        panic!("balances is a mapping");
    };
    assert!(m
        .get(&Value::Address("bob".into()))
        .is_none_or(|v| *v == Value::Uint(Word::zero())));
    // 0 - 0 passes the checked subtraction, 0 - 1 does not.
    assert_eq!(ex.records[1].outcome, Outcome::Success);
    assert_eq!(ex.records[2].outcome, Outcome::Revert);
}

#[test]
fn references_must_name_earlier_steps() {
    let p = program("dao.msol", GraphConfig::default());
    let t = dao_case(
        "r",
        vec![TestStep::new("alice", "Dao", "withdrawFunds").with_args([Arg::ReturnOf(0)])],
    );
    assert!(matches!(
        execute_test_case(&p.model, &p.graph, &t),
        Err(ExecError::BadReference { step: 0, .. })
    ));
}

#[test]
fn agents_only_call_exposed_functions() {
    let p = program("dao.msol", GraphConfig::default());
    let mut t = dao_case("a", vec![withdraw(0)]);
    let mut agent = AgentScript::new("alice");
    agent.actions.push(AgentAction {
        contract: "Dao".into(),
        function: "_withdrawFunds".into(),
        args: vec![Value::Uint(Word::zero())],
        value: Word::zero(),
    });
    t.agents.push(agent);
    assert!(matches!(
        execute_test_case(&p.model, &p.graph, &t),
        Err(ExecError::NotCallable { .. })
    ));
}

#[test]
fn non_payable_rejects_value() {
    let p = program("dao.msol", GraphConfig::default());
    let t = dao_case("np", vec![withdraw(0).with_value(1u64)]);
    assert!(matches!(execute_test_case(&p.model, &p.graph, &t), Err(ExecError::NotPayable(_))));
}

#[test]
fn checked_underflow_reverts() {
    let p = program(
        "dao.msol",
        GraphConfig {
            arithmetic: Arithmetic::Checked,
            ..GraphConfig::default()
        },
    );
    let fund = TestStep::new("bob", "Dao", "depositFunds").with_value(5u64);
    let ex = execute_test_case(&p.model, &p.graph, &dao_case("u", vec![fund, withdraw(1)])).unwrap();
    // The call pays out first; the ledger update then underflows.
    assert_eq!(ex.records[1].outcome, Outcome::Revert);
    assert_eq!(ex.state.balance("alice"), Word::from(100u64));
    assert_eq!(ex.state.balance("Dao"), Word::from(5u64));
}

#[test]
fn random_traces_project_to_valid_paths() {
    let mut rng = rng(11);
    for (i, rel) in FIXTURES.iter().cycle().take(8).enumerate() {
        let p = program(rel, both_modes()[i % 2]);
        for n in 0..50 {
            let t = random_case(&p, &mut rng, &format!("t{n}"));
            let ex = execute_test_case(&p.model, &p.graph, &t).unwrap();
            // Deploys of contracts without a constructor run no code.
            for r in ex.prologue.iter().filter(|r| !r.trace.is_empty()).chain(&ex.records) {
                let path = project_trace(&p.graph, r).unwrap();
                assert_eq!(path.terminal, r.outcome.terminal(), "{rel} {}", t.name);
            }
        }
    }
}

#[test]
fn reverted_transactions_restore_state_and_ether_is_conserved() {
    let p = program(
        "dao.msol",
        GraphConfig {
            arithmetic: Arithmetic::Checked,
            ..GraphConfig::default()
        },
    );
    let mut rng = rng(12);
    let mut reverted = 0;
    for n in 0..200 {
        let t = random_case(&p, &mut rng, &format!("t{n}"));
        let full = execute_test_case(&p.model, &p.graph, &t).unwrap();
        let mut before = {
            let mut head = t.clone();
            head.steps.clear();
            execute_test_case(&p.model, &p.graph, &head).unwrap().state
        };
        let total = before.total_ether();
        for i in 0..t.steps.len() {
            let mut upto = t.clone();
            upto.steps.truncate(i + 1);
            let after = execute_test_case(&p.model, &p.graph, &upto).unwrap().state;
            if full.records[i].outcome == Outcome::Revert {
                reverted += 1;
                assert_eq!(after, before, "{} step {i}", t.name);
            }
            assert_eq!(after.total_ether(), total, "{} step {i}", t.name);
            before = after;
        }
    }
    assert!(reverted > 0);
}

#[test]
fn execution_is_deterministic() {
    let p = program("experiment/sharkpool.msol", GraphConfig::default());
    let mut rng = rng(13);
    for n in 0..20 {
        let t = random_case(&p, &mut rng, &format!("t{n}"));
        let a = execute_test_case(&p.model, &p.graph, &t).unwrap();
        let b = execute_test_case(&p.model, &p.graph, &t).unwrap();
        assert_eq!(serde_json::to_string(&a).unwrap(), serde_json::to_string(&b).unwrap());
    }
}
