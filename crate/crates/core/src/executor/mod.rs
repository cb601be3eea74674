// SPDX-License-Identifier: Apache-2.0

//! Deterministic execution of test cases.
//!
//! The interpreter walks the transaction graph itself: every node it
//! arrives at is appended to the transaction's trace, so traces are node
//! sequences of the same graph the basis paths come from.
//!
//! Semantics in brief:
//! - no gas; transactions run strictly in submission order;
//! - a reverted transaction restores the world state it started from and
//!   drops its logs;
//! - `msg.value` moves from the sender to the contract before the body
//!   runs, and only payable functions accept it;
//! - a low-level call moves its value to the target first, then runs the
//!   target's agent script, if any; targets without a script, including
//!   deployed contracts, return success immediately;
//! - a low-level call whose value exceeds the caller's balance returns
//!   false without running the target;
//! - under return-false lowering, a revert inside the callee rolls back the
//!   callee's effects, including the value moved, and yields false;
//! - `addr.transfer(v)` only credits `addr`, it never runs code.

mod interp;
mod state;

pub use state::{Slot, Value, WorldState, ZERO_ADDRESS};

use crate::basis::{PathError, WholeTxPath};
use crate::frontend::DappModel;
use crate::graph::{reachable_metrics, GraphError, NodeId, ReachableMetrics, Tcfg};
use crate::interactions::Outcome;
use crate::Word;
use interp::Interp;
use serde::{Deserialize, Serialize};
use std::collections::BTreeMap;
use thiserror::Error;

/// Node arrivals allowed per transaction.
pub const MAX_STEPS: usize = 1_000_000;
/// Nested calls allowed per transaction.
pub const MAX_DEPTH: usize = 256;

#[derive(Debug, Error)]
pub enum ExecError {
    #[error("unknown account `{0}`")]
    UnknownAccount(String),
    #[error("unknown contract `{0}`")]
    UnknownContract(String),
    #[error("`{contract}.{function}` cannot be called as a transaction")]
    NotCallable { contract: String, function: String },
    #[error("step {step}: {message}")]
    BadReference { step: usize, message: String },
    #[error("`{function}` expects {expected} argument(s), got {found}")]
    Arity {
        function: String,
        expected: usize,
        found: usize,
    },
    #[error("`{function}` argument {index}: expected `{expected}`, got {found}")]
    ArgType {
        function: String,
        index: usize,
        expected: String,
        found: String,
    },
    #[error("contract `{0}` is not deployed")]
    Undeployed(String),
    #[error("contract `{0}` is already deployed")]
    AlreadyDeployed(String),
    #[error("`{0}` is not payable")]
    NotPayable(String),
    #[error("`{0}` cannot afford the value sent")]
    InsufficientFunds(String),
    #[error("agent `{0}` may only revert under return-false lowering")]
    AgentRevertNeedsReturnFalse(String),
    #[error("transaction exceeded {MAX_STEPS} steps")]
    StepLimit,
    #[error("transaction exceeded call depth {MAX_DEPTH}")]
    DepthLimit,
    /// The interpreter and the graph disagree.
    #[error("internal invariant violated: {0}")]
    Internal(String),
    #[error(transparent)]
    Graph(#[from] GraphError),
    #[error("trace does not project to a whole-transaction path: {0}")]
    Trace(#[from] PathError),
}

/// A transaction argument.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Arg {
    Uint(Word),
    Bool(bool),
    Address(String),
    /// The return value of an earlier step.
    ReturnOf(usize),
    /// The result of a read-only call evaluated just before the step.
    View {
        contract: String,
        function: String,
        #[serde(default)]
        args: Vec<Value>,
    },
}

impl From<Value> for Arg {
    fn from(v: Value) -> Self {
        match v {
            Value::Uint(w) => Arg::Uint(w),
            Value::Bool(b) => Arg::Bool(b),
            Value::Address(a) => Arg::Address(a),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TestStep {
    pub account: String,
    pub contract: String,
    pub function: String,
    #[serde(default)]
    pub value: Word,
    #[serde(default)]
    pub args: Vec<Arg>,
}

impl TestStep {
    pub fn new(account: &str, contract: &str, function: &str) -> Self {
        TestStep {
            account: account.into(),
            contract: contract.into(),
            function: function.into(),
            value: Word::zero(),
            args: Vec::new(),
        }
    }

    pub fn with_value(mut self, value: impl Into<Word>) -> Self {
        self.value = value.into();
        self
    }

    pub fn with_args(mut self, args: impl IntoIterator<Item = Arg>) -> Self {
        self.args = args.into_iter().collect();
        self
    }
}

/// Deploys a contract, running its constructor when it declares one.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Deploy {
    pub account: String,
    pub contract: String,
    #[serde(default)]
    pub value: Word,
    #[serde(default)]
    pub args: Vec<Value>,
}

impl Deploy {
    pub fn new(account: &str, contract: &str) -> Self {
        Deploy {
            account: account.into(),
            contract: contract.into(),
            value: Word::zero(),
            args: Vec::new(),
        }
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum AgentFinal {
    #[default]
    Succeed,
    Revert,
}

/// A call the agent makes back into the dapp.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct AgentAction {
    pub contract: String,
    pub function: String,
    #[serde(default)]
    pub args: Vec<Value>,
    #[serde(default)]
    pub value: Word,
}

fn one() -> u32 {
    1
}

/// Behaviour of the code at `address` when it receives a low-level call.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct AgentScript {
    pub address: String,
    #[serde(default)]
    pub actions: Vec<AgentAction>,
    /// Nested invocations of this agent that run the actions; deeper ones
    /// return success at once.
    #[serde(default = "one")]
    pub max_depth: u32,
    #[serde(default)]
    pub finally: AgentFinal,
}

impl AgentScript {
    pub fn new(address: &str) -> Self {
        AgentScript {
            address: address.into(),
            actions: Vec::new(),
            max_depth: 1,
            finally: AgentFinal::Succeed,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TestCase {
    pub name: String,
    /// Initial account balances; accounts left out start with the balance
    /// their role declares.
    #[serde(default)]
    pub balances: BTreeMap<String, Word>,
    /// Deployment prologue, executed before the steps.
    #[serde(default)]
    pub deploy: Vec<Deploy>,
    pub steps: Vec<TestStep>,
    #[serde(default)]
    pub agents: Vec<AgentScript>,
}

impl TestCase {
    pub fn new(name: &str) -> Self {
        TestCase {
            name: name.into(),
            balances: BTreeMap::new(),
            deploy: Vec::new(),
            steps: Vec::new(),
            agents: Vec::new(),
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct TestSuite {
    pub tests: Vec<TestCase>,
}

/// One executed transaction.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TxRecord {
    pub account: String,
    pub contract: String,
    pub function: String,
    pub value: Word,
    pub outcome: Outcome,
    pub inputs: Vec<Value>,
    pub returns: Vec<Value>,
    pub logs: Vec<String>,
    pub trace: Vec<NodeId>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Execution {
    pub name: String,
    /// Deployment transactions.
    pub prologue: Vec<TxRecord>,
    /// One record per step.
    pub records: Vec<TxRecord>,
    pub state: WorldState,
}

/// Result of a read-only call.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ViewOutcome {
    Returned(Option<Value>),
    Reverted,
}

/// Runs `t` from a state where nothing is deployed.
pub fn execute_test_case(model: &DappModel, g: &Tcfg, t: &TestCase) -> Result<Execution, ExecError> {
    let mut balances = BTreeMap::new();
    for a in &model.accounts {
        balances.insert(a.name.clone(), a.balance.clone());
    }
    for (name, b) in &t.balances {
        if model.account(name).is_none() {
            return Err(ExecError::UnknownAccount(name.clone()));
        }
        balances.insert(name.clone(), b.clone());
    }
    let mut it = Interp::new(model, g, &t.agents, WorldState::new(balances))?;
    let mut prologue = Vec::new();
    for d in &t.deploy {
        prologue.push(it.deploy(d)?);
    }
    let mut records: Vec<TxRecord> = Vec::new();
    for (i, step) in t.steps.iter().enumerate() {
        let mut args = Vec::with_capacity(step.args.len());
        for a in &step.args {
            args.push(resolve_arg(&mut it, &records, i, a)?);
        }
        records.push(it.transact(step, args)?);
    }
    Ok(Execution {
        name: t.name.clone(),
        prologue,
        records,
        state: it.into_world(),
    })
}

fn resolve_arg(it: &mut Interp, records: &[TxRecord], step: usize, a: &Arg) -> Result<Value, ExecError> {
    let bad = |message: String| ExecError::BadReference { step, message };
    Ok(match a {
        Arg::Uint(w) => Value::Uint(w.clone()),
        Arg::Bool(b) => Value::Bool(*b),
        Arg::Address(s) => Value::Address(s.clone()),
        Arg::ReturnOf(j) => {
            let r = records
                .get(*j)
                .filter(|_| *j < step)
                .ok_or_else(|| bad(format!("return_of {j} does not name an earlier step")))?;
            r.returns
                .first()
                .cloned()
                .ok_or_else(|| bad(format!("step {j} returned nothing")))?
        }
        Arg::View {
            contract,
            function,
            args,
        } => match it.view(contract, function, args.clone())? {
            ViewOutcome::Returned(Some(v)) => v,
            other => return Err(bad(format!("view {contract}.{function} gave {other:?}"))),
        },
    })
}

/// Evaluates a read-only function against `state`.
pub fn call_view(
    model: &DappModel,
    g: &Tcfg,
    state: &WorldState,
    contract: &str,
    function: &str,
    args: Vec<Value>,
) -> Result<ViewOutcome, ExecError> {
    let mut it = Interp::new(model, g, &[], state.clone())?;
    it.view(contract, function, args)
}

/// The record's trace as a whole-transaction path over `metrics`, which
/// must belong to the record's entry.
pub fn project_trace_with(g: &Tcfg, r: &TxRecord, metrics: &ReachableMetrics) -> Result<WholeTxPath, ExecError> {
    let p = WholeTxPath::new(g, r.trace.clone(), metrics)?;
    if Outcome::of_terminal(p.terminal) != r.outcome {
        return Err(ExecError::Internal(format!(
            "trace ends in {} but the transaction outcome is {}",
            p.terminal, r.outcome
        )));
    }
    Ok(p)
}

/// The record's trace as a validated whole-transaction path.
pub fn project_trace(g: &Tcfg, r: &TxRecord) -> Result<WholeTxPath, ExecError> {
    let entry = *r
        .trace
        .first()
        .ok_or_else(|| ExecError::Internal("empty trace".into()))?;
    let metrics = reachable_metrics(g, entry)?;
    project_trace_with(g, r, &metrics)
}
