// SPDX-License-Identifier: Apache-2.0

//! Seeded random test cases and coverage-directed selection among them.

use super::experiment::Program;
use crate::coverage::{covered_requirements, MatchMode};
use crate::executor::{
    execute_test_case, AgentAction, AgentScript, Arg, Deploy, ExecError, TestCase, TestStep, TestSuite, Value,
    ZERO_ADDRESS,
};
use crate::frontend::{DappModel, FunctionSig, Mutability, Type};
use crate::interactions::{Bases, InteractionError, RequirementSet};
use crate::Word;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use std::collections::{BTreeMap, BTreeSet};
use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RandomTestConfig {
    /// Run before the steps of every generated test.
    pub deploy: Vec<Deploy>,
    pub min_steps: usize,
    pub max_steps: usize,
    /// Upper bound of random `uint` arguments and values.
    pub max_uint: u64,
    /// Chance, in percent, that a test attaches one agent script.
    pub agent_percent: u32,
}

impl RandomTestConfig {
    /// Deploys every contract from the first account.
    pub fn for_model(model: &DappModel) -> Self {
        let deployer = model.accounts.first().map(|a| a.name.clone()).unwrap_or_default();
        RandomTestConfig {
            deploy: model.contracts.iter().map(|c| Deploy::new(&deployer, &c.name)).collect(),
            min_steps: 1,
            max_steps: 4,
            max_uint: 20,
            agent_percent: 50,
        }
    }
}

fn addresses(model: &DappModel) -> Vec<String> {
    let mut out: Vec<String> = model.accounts.iter().map(|a| a.name.clone()).collect();
    out.extend(model.contracts.iter().map(|c| c.name.clone()));
    out.push(ZERO_ADDRESS.into());
    out
}

fn random_value(rng: &mut ChaCha8Rng, model: &DappModel, cfg: &RandomTestConfig, ty: &Type) -> Value {
    match ty {
        Type::Bool => Value::Bool(rng.random_bool(0.5)),
        Type::Address => {
            let all = addresses(model);
            Value::Address(all[rng.random_range(0..all.len())].clone())
        }
        _ => Value::Uint(Word::from(rng.random_range(0..=cfg.max_uint))),
    }
}

fn entries(model: &DappModel) -> Vec<(String, FunctionSig)> {
    model
        .contracts
        .iter()
        .flat_map(|c| c.state_changing.iter().map(move |f| (c.name.clone(), f.clone())))
        .collect()
}

/// One random test with `steps` transactions.
///
/// Values sent by each account never exceed its initial balance, so a
/// transaction cannot fail for lack of funds. An agent runs one or two
/// actions, whose values are drawn regardless of what the agent holds.
pub fn random_test_case(
    model: &DappModel,
    cfg: &RandomTestConfig,
    rng: &mut ChaCha8Rng,
    name: &str,
    steps: usize,
) -> TestCase {
    let mut t = TestCase::new(name);
    t.deploy = cfg.deploy.clone();
    let fns = entries(model);
    if fns.is_empty() || model.accounts.is_empty() {
        return t;
    }
    let mut budget: BTreeMap<&str, Word> = model.accounts.iter().map(|a| (a.name.as_str(), a.balance.clone())).collect();
    for d in &cfg.deploy {
        if let Some(b) = budget.get_mut(d.account.as_str()) {
            *b = b.checked_sub(&d.value).unwrap_or_default();
        }
    }
    for _ in 0..steps {
        let account = &model.accounts[rng.random_range(0..model.accounts.len())].name;
        let (contract, f) = &fns[rng.random_range(0..fns.len())];
        let args: Vec<Arg> = f
            .params
            .iter()
            .map(|p| Arg::from(random_value(rng, model, cfg, &p.ty)))
            .collect();
        let mut step = TestStep::new(account, contract, &f.name).with_args(args);
        if f.mutability == Mutability::Payable {
            let have = budget[account.as_str()].clone();
            let cap = have.to_u64().map_or(cfg.max_uint, |h| h.min(cfg.max_uint));
            let v = Word::from(rng.random_range(0..=cap));
            budget.insert(account, have.checked_sub(&v).unwrap_or_default());
            step = step.with_value(v);
        }
        t.steps.push(step);
    }
    if rng.random_range(0..100) < cfg.agent_percent {
        let owner = &model.accounts[rng.random_range(0..model.accounts.len())].name;
        let mut agent = AgentScript::new(owner);
        for _ in 0..rng.random_range(1..=2) {
            let (contract, f) = &fns[rng.random_range(0..fns.len())];
            let args = f.params.iter().map(|p| random_value(rng, model, cfg, &p.ty)).collect();
            let value = if f.mutability == Mutability::Payable && rng.random_bool(0.5) {
                Word::from(rng.random_range(1..=cfg.max_uint.max(1)))
            } else {
                Word::zero()
            };
            agent.actions.push(AgentAction {
                contract: contract.clone(),
                function: f.name.clone(),
                args,
                value,
            });
        }
        t.agents.push(agent);
    }
    t
}

/// Random tests named `random-001`, .., one per entry of `shape`, each
/// with that many transactions.
pub fn random_suite(model: &DappModel, cfg: &RandomTestConfig, seed: u64, shape: &[usize]) -> TestSuite {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    TestSuite {
        tests: shape
            .iter()
            .enumerate()
            .map(|(i, &n)| random_test_case(model, cfg, &mut rng, &format!("random-{:03}", i + 1), n))
            .collect(),
    }
}

/// What a coverage-directed search maximises.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SearchGoal {
    /// k-bounded requirements of the given set.
    Requirements,
    /// Statement nodes.
    Statements,
}

#[derive(Debug, Error)]
pub enum SearchError {
    #[error(transparent)]
    Exec(#[from] ExecError),
    #[error(transparent)]
    Coverage(#[from] InteractionError),
}

/// Draws `candidates` random tests and keeps, for every goal element some
/// candidate covers, the shortest candidate covering it (ties to the
/// earlier one).
///
/// Kept tests are ordered by the smallest element they witness and renamed
/// `{prefix}-001`, ...
#[allow(clippy::too_many_arguments)]
pub fn search_suite(
    p: &Program,
    set: &RequirementSet,
    bases: &Bases,
    mode: MatchMode,
    cfg: &RandomTestConfig,
    seed: u64,
    candidates: usize,
    goal: SearchGoal,
    prefix: &str,
) -> Result<TestSuite, SearchError> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut pool: Vec<(TestCase, BTreeSet<usize>)> = Vec::new();
    for i in 0..candidates {
        let steps = rng.random_range(cfg.min_steps..=cfg.max_steps.max(cfg.min_steps));
        let t = random_test_case(&p.model, cfg, &mut rng, &format!("candidate-{i}"), steps);
        let ex = execute_test_case(&p.model, &p.graph, &t)?;
        let covers: BTreeSet<usize> = match goal {
            SearchGoal::Requirements => covered_requirements(&p.graph, set, bases, mode, &ex.records)?,
            SearchGoal::Statements => ex
                .prologue
                .iter()
                .chain(&ex.records)
                .flat_map(|r| r.trace.iter())
                .filter(|n| p.graph.node(**n).is_statement(&p.graph))
                .copied()
                .collect(),
        };
        pool.push((t, covers));
    }
    // Shortest witness per element, ties to the earlier candidate.
    let mut witness: BTreeMap<usize, usize> = BTreeMap::new();
    for (i, (t, covers)) in pool.iter().enumerate() {
        for &e in covers {
            let better = witness
                .get(&e)
                .is_none_or(|&w| t.steps.len() < pool[w].0.steps.len());
            if better {
                witness.insert(e, i);
            }
        }
    }
    let mut picked: Vec<usize> = Vec::new();
    for &i in witness.values() {
        if !picked.contains(&i) {
            picked.push(i);
        }
    }
    let tests = picked
        .iter()
        .enumerate()
        .map(|(n, &i)| {
            let mut t = pool[i].0.clone();
            t.name = format!("{prefix}-{:03}", n + 1);
            t
        })
        .collect();
    Ok(TestSuite { tests })
}
