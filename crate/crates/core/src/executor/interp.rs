// SPDX-License-Identifier: Apache-2.0

//! Graph-walking interpreter.

use super::state::{Slot, Value, WorldState, ZERO_ADDRESS};
use super::{AgentFinal, AgentScript, Deploy, ExecError, TestStep, TxRecord, ViewOutcome, MAX_DEPTH, MAX_STEPS};
use crate::frontend::{
    AssignOp, BinOp, Callee, DappModel, Expr, ExprKind, FunctionDecl, Literal, Mutability, Type,
};
use crate::graph::{
    Arithmetic, CallTarget, EdgeKind, FuncId, LowLevelRevert, NodeId, NodeKind, NodeOp, ReturnDest, Tcfg,
};
use crate::interactions::Outcome;
use crate::Word;
use std::collections::BTreeMap;

/// How a function frame closed.
enum Done {
    Returned(Option<Value>),
    Reverted,
}

/// Why evaluation stopped early.
enum Stop {
    /// Checked arithmetic, indexing or a transfer failed; the node's revert
    /// edge is taken.
    Fault,
    Error(ExecError),
}

impl From<ExecError> for Stop {
    fn from(e: ExecError) -> Self {
        Stop::Error(e)
    }
}

type Eval<T> = Result<T, Stop>;

struct Frame {
    this: String,
    sender: String,
    value: Word,
    locals: BTreeMap<String, Value>,
}

fn internal<T>(msg: impl Into<String>) -> Result<T, ExecError> {
    Err(ExecError::Internal(msg.into()))
}

pub(super) struct Interp<'a> {
    model: &'a DappModel,
    g: &'a Tcfg,
    agents: &'a [AgentScript],
    world: WorldState,
    logs: Vec<String>,
    trace: Vec<NodeId>,
    steps: usize,
    depth: usize,
    agent_depth: BTreeMap<String, u32>,
    now: Word,
    transactions: u64,
    /// Call-site of `ext` dispatching into each function.
    dispatch: BTreeMap<FuncId, NodeId>,
}

impl<'a> Interp<'a> {
    pub fn new(
        model: &'a DappModel,
        g: &'a Tcfg,
        agents: &'a [AgentScript],
        world: WorldState,
    ) -> Result<Self, ExecError> {
        let mut dispatch = BTreeMap::new();
        for n in &g.nodes {
            if let NodeOp::Call {
                target: CallTarget::Dispatch { func },
                ..
            } = n.op
            {
                dispatch.insert(func, n.id);
            }
        }
        let it = Interp {
            model,
            g,
            agents,
            world,
            logs: Vec::new(),
            trace: Vec::new(),
            steps: 0,
            depth: 0,
            agent_depth: BTreeMap::new(),
            now: Word::zero(),
            transactions: 0,
            dispatch,
        };
        for a in agents {
            if a.finally == AgentFinal::Revert && g.config.lowlevel_revert != LowLevelRevert::ReturnFalse {
                return Err(ExecError::AgentRevertNeedsReturnFalse(a.address.clone()));
            }
            for act in &a.actions {
                let known = model
                    .contract(&act.contract)
                    .ok_or_else(|| ExecError::UnknownContract(act.contract.clone()))?
                    .is_state_changing(&act.function);
                if !known {
                    return Err(ExecError::NotCallable {
                        contract: act.contract.clone(),
                        function: act.function.clone(),
                    });
                }
                it.check_args(&act.contract, &act.function, &act.args)?;
            }
        }
        Ok(it)
    }

    pub fn into_world(self) -> WorldState {
        self.world
    }

    fn decl(&self, contract: &str, function: &str) -> Result<&'a FunctionDecl, ExecError> {
        self.model
            .function_decl(contract, function)
            .ok_or_else(|| ExecError::NotCallable {
                contract: contract.into(),
                function: function.into(),
            })
    }

    fn func_id(&self, contract: &str, function: &str) -> Result<FuncId, ExecError> {
        Ok(self.g.resolve_function(&format!("{contract}.{function}"))?.id)
    }

    fn check_args(&self, contract: &str, function: &str, args: &[Value]) -> Result<(), ExecError> {
        let decl = self.decl(contract, function)?;
        let name = format!("{contract}.{function}");
        if decl.params.len() != args.len() {
            return Err(ExecError::Arity {
                function: name,
                expected: decl.params.len(),
                found: args.len(),
            });
        }
        for (i, (p, a)) in decl.params.iter().zip(args).enumerate() {
            if !a.has_type(&p.ty) {
                return Err(ExecError::ArgType {
                    function: name,
                    index: i,
                    expected: p.ty.to_string(),
                    found: a.to_string(),
                });
            }
        }
        Ok(())
    }

    fn begin_transaction(&mut self) {
        self.transactions += 1;
        self.now = Word::from(self.transactions);
        self.logs.clear();
        self.trace.clear();
        self.steps = 0;
        self.depth = 0;
        self.agent_depth.clear();
    }

    pub fn deploy(&mut self, d: &Deploy) -> Result<TxRecord, ExecError> {
        let c = self
            .model
            .contract(&d.contract)
            .ok_or_else(|| ExecError::UnknownContract(d.contract.clone()))?;
        if self.model.account(&d.account).is_none() {
            return Err(ExecError::UnknownAccount(d.account.clone()));
        }
        if self.world.deployed.contains(&d.contract) {
            return Err(ExecError::AlreadyDeployed(d.contract.clone()));
        }
        self.begin_transaction();
        let snapshot = self.world.clone();
        self.world.deploy(self.model, &d.contract);
        let mut record = TxRecord {
            account: d.account.clone(),
            contract: d.contract.clone(),
            function: "constructor".into(),
            value: d.value.clone(),
            outcome: Outcome::Success,
            inputs: d.args.clone(),
            returns: Vec::new(),
            logs: Vec::new(),
            trace: Vec::new(),
        };
        let Some(ctor) = &c.constructor else {
            if !d.value.is_zero() {
                return Err(ExecError::NotPayable(format!("{}.constructor", d.contract)));
            }
            if !d.args.is_empty() {
                return Err(ExecError::Arity {
                    function: format!("{}.constructor", d.contract),
                    expected: 0,
                    found: d.args.len(),
                });
            }
            return Ok(record);
        };
        self.check_args(&d.contract, &ctor.name, &d.args)?;
        let func = self.func_id(&d.contract, &ctor.name)?;
        let done = self.invoke(func, &d.contract, &d.account, &d.value, d.args.clone())?;
        record.function = ctor.name.clone();
        self.finish(&mut record, done, snapshot);
        Ok(record)
    }

    pub fn transact(&mut self, step: &TestStep, args: Vec<Value>) -> Result<TxRecord, ExecError> {
        if self.model.account(&step.account).is_none() {
            return Err(ExecError::UnknownAccount(step.account.clone()));
        }
        let c = self
            .model
            .contract(&step.contract)
            .ok_or_else(|| ExecError::UnknownContract(step.contract.clone()))?;
        let is_fallback = c.fallback.as_ref().is_some_and(|f| f.name == step.function);
        if !c.is_state_changing(&step.function) && !is_fallback {
            return Err(ExecError::NotCallable {
                contract: step.contract.clone(),
                function: step.function.clone(),
            });
        }
        if !self.world.deployed.contains(&step.contract) {
            return Err(ExecError::Undeployed(step.contract.clone()));
        }
        self.check_args(&step.contract, &step.function, &args)?;
        let func = self.func_id(&step.contract, &step.function)?;
        self.begin_transaction();
        let snapshot = self.world.clone();
        let done = self.invoke(func, &step.contract, &step.account, &step.value, args.clone())?;
        let mut record = TxRecord {
            account: step.account.clone(),
            contract: step.contract.clone(),
            function: step.function.clone(),
            value: step.value.clone(),
            outcome: Outcome::Success,
            inputs: args,
            returns: Vec::new(),
            logs: Vec::new(),
            trace: Vec::new(),
        };
        self.finish(&mut record, done, snapshot);
        Ok(record)
    }

    fn finish(&mut self, record: &mut TxRecord, done: Done, snapshot: WorldState) {
        match done {
            Done::Returned(v) => {
                record.returns = v.into_iter().collect();
                record.logs = std::mem::take(&mut self.logs);
            }
            Done::Reverted => {
                self.world = snapshot;
                self.logs.clear();
                record.outcome = Outcome::Revert;
            }
        }
        record.trace = std::mem::take(&mut self.trace);
    }

    /// Read-only call; leaves world, trace and logs untouched.
    pub fn view(&mut self, contract: &str, function: &str, args: Vec<Value>) -> Result<ViewOutcome, ExecError> {
        let c = self
            .model
            .contract(contract)
            .ok_or_else(|| ExecError::UnknownContract(contract.into()))?;
        if !c.is_read_only(function) {
            return Err(ExecError::NotCallable {
                contract: contract.into(),
                function: function.into(),
            });
        }
        if !self.world.deployed.contains(contract) {
            return Err(ExecError::Undeployed(contract.into()));
        }
        self.check_args(contract, function, &args)?;
        let func = self.func_id(contract, function)?;
        let saved = (self.world.clone(), self.trace.len(), self.logs.len(), self.steps, self.depth);
        let done = self.run_function(func, contract, ZERO_ADDRESS, &Word::zero(), args);
        self.world = saved.0;
        self.trace.truncate(saved.1);
        self.logs.truncate(saved.2);
        self.steps = saved.3;
        self.depth = saved.4;
        Ok(match done? {
            Done::Returned(v) => ViewOutcome::Returned(v),
            Done::Reverted => ViewOutcome::Reverted,
        })
    }

    /// Moves `value` into the callee and runs it.
    fn invoke(&mut self, func: FuncId, this: &str, sender: &str, value: &Word, args: Vec<Value>) -> Result<Done, ExecError> {
        if !value.is_zero() {
            let info = &self.g.functions[func];
            let decl = self.decl(this, &info.function)?;
            if decl.mutability != Mutability::Payable {
                return Err(ExecError::NotPayable(info.name.clone()));
            }
            if !self.world.move_ether(sender, this, value) {
                return Err(ExecError::InsufficientFunds(sender.into()));
            }
        }
        self.run_function(func, this, sender, value, args)
    }

    fn arrive(&mut self, n: NodeId) -> Result<(), ExecError> {
        self.trace.push(n);
        self.steps += 1;
        if self.steps > MAX_STEPS {
            return Err(ExecError::StepLimit);
        }
        Ok(())
    }

    fn next(&self, n: NodeId, pick: impl Fn(EdgeKind, Option<&str>) -> bool) -> Result<NodeId, ExecError> {
        self.g
            .out_edges(n)
            .iter()
            .map(|&e| self.g.edge(e))
            .find(|e| pick(e.kind, e.label.as_deref()))
            .map(|e| e.to)
            .ok_or_else(|| ExecError::Internal(format!("no matching edge out of node {n}")))
    }

    fn next_flow(&self, n: NodeId) -> Result<NodeId, ExecError> {
        self.next(n, |k, _| k == EdgeKind::Flow)
    }

    fn next_branch(&self, n: NodeId, taken: bool) -> Result<NodeId, ExecError> {
        let want = if taken { "true" } else { "false" };
        self.next(n, |_, l| l == Some(want))
    }

    fn next_revert(&self, n: NodeId) -> Result<NodeId, ExecError> {
        self.next(n, |k, _| k == EdgeKind::Revert)
    }

    fn run_function(
        &mut self,
        func: FuncId,
        this: &str,
        sender: &str,
        value: &Word,
        args: Vec<Value>,
    ) -> Result<Done, ExecError> {
        self.depth += 1;
        if self.depth > MAX_DEPTH {
            return Err(ExecError::DepthLimit);
        }
        let info = &self.g.functions[func];
        let decl = self.decl(this, &info.function)?;
        let mut frame = Frame {
            this: this.into(),
            sender: sender.into(),
            value: value.clone(),
            locals: decl.params.iter().map(|p| p.name.clone()).zip(args).collect(),
        };
        let mut ret = None;
        let mut n = info.entry;
        self.arrive(n)?;
        let done = loop {
            let node = self.g.node(n);
            if node.func != func {
                return internal(format!("walked out of function {func} into node {n}"));
            }
            n = match node.kind {
                NodeKind::Exit => break Done::Returned(ret),
                NodeKind::Revert => break Done::Reverted,
                NodeKind::CallSite => match self.call(&mut frame, n)? {
                    Some(rs) => rs,
                    None => {
                        let r = self.g.functions[func]
                            .revert
                            .ok_or_else(|| ExecError::Internal(format!("callee reverted into {}", info.name)))?;
                        self.arrive(r)?;
                        break Done::Reverted;
                    }
                },
                _ => match self.step(&mut frame, n, &mut ret) {
                    Ok(next) => next,
                    Err(Stop::Fault) => self.next_revert(n)?,
                    Err(Stop::Error(e)) => return Err(e),
                },
            };
            self.arrive(n)?;
        };
        self.depth -= 1;
        Ok(done)
    }

    /// Executes a non-call node and picks its successor.
    fn step(&mut self, frame: &mut Frame, n: NodeId, ret: &mut Option<Value>) -> Eval<NodeId> {
        let node = self.g.node(n);
        match &node.op {
            NodeOp::None | NodeOp::Skip | NodeOp::Revert => {}
            NodeOp::Declare { name, ty, init } => {
                let v = match init {
                    Some(e) => self.eval(frame, e)?,
                    None => Value::zero_of(ty),
                };
                frame.locals.insert(name.clone(), v);
            }
            NodeOp::Temp { name, value } => {
                let v = self.eval(frame, value)?;
                frame.locals.insert(name.clone(), v);
            }
            NodeOp::Assign { target, op, value } => self.assign(frame, target, *op, value)?,
            NodeOp::Eval(e) => self.effect(frame, e)?,
            NodeOp::Return(e) => {
                *ret = e.as_ref().map(|e| self.eval(frame, e)).transpose()?;
            }
            NodeOp::Log(text) => self.logs.push(text.clone()),
            NodeOp::Branch(c) | NodeOp::Require(c) => {
                let taken = self.eval_bool(frame, c)?;
                return Ok(self.next_branch(n, taken)?);
            }
            // Bound when the callee returned.
            NodeOp::Bind { .. } => {}
            NodeOp::Dispatch | NodeOp::Call { .. } => {
                return Err(Stop::Error(ExecError::Internal(format!("unexpected op at node {n}"))))
            }
        }
        Ok(self.next_flow(n)?)
    }

    /// Runs the call at call-site `cs`. Returns the return-site reached, or
    /// `None` when the callee's revert cascades into this frame.
    fn call(&mut self, frame: &mut Frame, cs: NodeId) -> Result<Option<NodeId>, ExecError> {
        let NodeOp::Call { target, args } = &self.g.node(cs).op else {
            return internal(format!("call-site {cs} carries no call"));
        };
        let rs = self
            .g
            .return_site(cs)
            .ok_or_else(|| ExecError::Internal(format!("call-site {cs} has no return-site")))?;
        let mut argv = Vec::with_capacity(args.len());
        for a in args {
            argv.push(self.eval_total(frame, a)?);
        }
        let done = match target {
            CallTarget::Internal { func } => {
                let (this, sender, value) = (frame.this.clone(), frame.sender.clone(), frame.value.clone());
                self.run_function(*func, &this, &sender, &value, argv)?
            }
            CallTarget::External { func } => {
                let callee = self.g.functions[*func]
                    .contract
                    .clone()
                    .ok_or_else(|| ExecError::Internal("external call into ext".into()))?;
                if !self.world.deployed.contains(&callee) {
                    return Err(ExecError::Undeployed(callee));
                }
                let this = frame.this.clone();
                self.run_function(*func, &callee, &this, &Word::zero(), argv)?
            }
            CallTarget::LowLevel { target, value } => {
                let to = match self.eval_total(frame, target)? {
                    Value::Address(a) => a,
                    other => return internal(format!("low-level call to non-address {other}")),
                };
                let amount = match value {
                    Some(v) => match self.eval_total(frame, v)? {
                        Value::Uint(w) => w,
                        other => return internal(format!("low-level call value {other}")),
                    },
                    None => Word::zero(),
                };
                let ext = self
                    .g
                    .ext()
                    .ok_or_else(|| ExecError::Internal("low-level call without ext".into()))?
                    .id;
                let this = frame.this.clone();
                self.low_level(ext, &this, &to, &amount)?
            }
            CallTarget::Dispatch { .. } => return internal("dispatch outside ext"),
        };
        let Done::Returned(v) = done else {
            return Ok(None);
        };
        if let NodeOp::Bind { dest, .. } = &self.g.node(rs).op {
            self.bind(frame, dest, v)?;
        }
        Ok(Some(rs))
    }

    fn bind(&mut self, frame: &mut Frame, dest: &ReturnDest, v: Option<Value>) -> Result<(), ExecError> {
        if matches!(dest, ReturnDest::Discard) {
            return Ok(());
        }
        let Some(v) = v else {
            return internal("callee returned no value to bind");
        };
        match dest {
            ReturnDest::Discard => {}
            ReturnDest::Temp(name) | ReturnDest::Declare { name, .. } => {
                frame.locals.insert(name.clone(), v);
            }
            ReturnDest::Assign { target } => match &target.kind {
                ExprKind::Ident(name) => self.write_ident(frame, name, v)?,
                _ => return internal("call result assigned to a non-identifier"),
            },
        }
        Ok(())
    }

    /// Runs unknown code at `to` through the `ext` subgraph.
    fn low_level(&mut self, ext: FuncId, from: &str, to: &str, amount: &Word) -> Result<Done, ExecError> {
        let info = &self.g.functions[ext];
        let (entry, exit, revert) = (info.entry, info.exit, info.revert);
        let return_false = self.g.config.lowlevel_revert == LowLevelRevert::ReturnFalse;
        let snapshot = (self.world.clone(), self.logs.len());
        self.depth += 1;
        if self.depth > MAX_DEPTH {
            return Err(ExecError::DepthLimit);
        }
        self.arrive(entry)?;
        let b = self.next_flow(entry)?;
        self.arrive(b)?;
        let fail = |it: &mut Self| -> Result<Done, ExecError> {
            let r = revert.ok_or_else(|| ExecError::Internal("ext has no revert node".into()))?;
            it.arrive(r)?;
            it.world = snapshot.0.clone();
            it.logs.truncate(snapshot.1);
            it.depth -= 1;
            Ok(Done::Returned(Some(Value::Bool(false))))
        };
        let succeed = |it: &mut Self, ok: bool| -> Result<Done, ExecError> {
            it.arrive(exit)?;
            it.depth -= 1;
            Ok(Done::Returned(Some(Value::Bool(ok))))
        };
        if !self.world.move_ether(from, to, amount) {
            return if return_false { fail(self) } else { succeed(self, false) };
        }
        let script = self
            .agents
            .iter()
            .find(|a| a.address == to && !self.world.deployed.contains(to));
        let Some(script) = script else {
            return succeed(self, true);
        };
        let level = self.agent_depth.get(to).copied().unwrap_or(0) + 1;
        if level > script.max_depth {
            return succeed(self, true);
        }
        self.agent_depth.insert(to.into(), level);
        for act in &script.actions {
            let func = self.func_id(&act.contract, &act.function)?;
            let cs = *self
                .dispatch
                .get(&func)
                .ok_or_else(|| ExecError::Internal(format!("ext cannot dispatch to {}", act.function)))?;
            self.arrive(cs)?;
            if !self.world.deployed.contains(&act.contract) {
                return Err(ExecError::Undeployed(act.contract.clone()));
            }
            match self.invoke(func, &act.contract, to, &act.value, act.args.clone())? {
                Done::Returned(_) => {
                    let rs = self
                        .g
                        .return_site(cs)
                        .ok_or_else(|| ExecError::Internal("dispatch without return-site".into()))?;
                    self.arrive(rs)?;
                    self.arrive(b)?;
                }
                Done::Reverted => {
                    self.agent_depth.insert(to.into(), level - 1);
                    if return_false {
                        return fail(self);
                    }
                    let r = revert.ok_or_else(|| ExecError::Internal("ext has no revert node".into()))?;
                    self.arrive(r)?;
                    self.depth -= 1;
                    return Ok(Done::Reverted);
                }
            }
        }
        self.agent_depth.insert(to.into(), level - 1);
        match script.finally {
            AgentFinal::Succeed => succeed(self, true),
            AgentFinal::Revert => fail(self),
        }
    }

    // Expressions.

    fn arith(&self, op: BinOp, a: &Word, b: &Word) -> Eval<Word> {
        let checked = self.g.config.arithmetic == Arithmetic::Checked;
        let r = match op {
            BinOp::Add if checked => a.checked_add(b),
            BinOp::Sub if checked => a.checked_sub(b),
            BinOp::Mul if checked => a.checked_mul(b),
            BinOp::Div if checked => a.checked_div(b),
            BinOp::Mod if checked => a.checked_rem(b),
            BinOp::Add => Some(a.wrapping_add(b)),
            BinOp::Sub => Some(a.wrapping_sub(b)),
            BinOp::Mul => Some(a.wrapping_mul(b)),
            BinOp::Div => Some(a.wrapping_div(b)),
            BinOp::Mod => Some(a.wrapping_rem(b)),
            _ => return Err(ExecError::Internal(format!("`{}` is not arithmetic", op.symbol())).into()),
        };
        r.ok_or(Stop::Fault)
    }

    fn var_type(&self, contract: &str, name: &str) -> Option<&'a Type> {
        self.model.decl(contract)?.state_var(name).map(|v| &v.ty)
    }

    fn slot(&self, contract: &str, name: &str) -> Result<&Slot, ExecError> {
        self.world
            .storage
            .get(contract)
            .and_then(|s| s.get(name))
            .ok_or_else(|| ExecError::Internal(format!("no storage for {contract}.{name}")))
    }

    fn slot_mut(&mut self, contract: &str, name: &str) -> Result<&mut Slot, ExecError> {
        self.world
            .storage
            .get_mut(contract)
            .and_then(|s| s.get_mut(name))
            .ok_or_else(|| ExecError::Internal(format!("no storage for {contract}.{name}")))
    }

    /// Evaluation that must not fault.
    fn eval_total(&mut self, frame: &Frame, e: &Expr) -> Result<Value, ExecError> {
        match self.eval(frame, e) {
            Ok(v) => Ok(v),
            Err(Stop::Fault) => internal("call argument faulted at a call-site"),
            Err(Stop::Error(err)) => Err(err),
        }
    }

    fn eval_bool(&mut self, frame: &Frame, e: &Expr) -> Eval<bool> {
        match self.eval(frame, e)? {
            Value::Bool(b) => Ok(b),
            other => Err(ExecError::Internal(format!("expected bool, got {other}")).into()),
        }
    }

    fn eval_uint(&mut self, frame: &Frame, e: &Expr) -> Eval<Word> {
        match self.eval(frame, e)? {
            Value::Uint(w) => Ok(w),
            other => Err(ExecError::Internal(format!("expected uint, got {other}")).into()),
        }
    }

    fn eval_address(&mut self, frame: &Frame, e: &Expr) -> Eval<String> {
        match self.eval(frame, e)? {
            Value::Address(a) => Ok(a),
            other => Err(ExecError::Internal(format!("expected address, got {other}")).into()),
        }
    }

    fn state_name(e: &Expr) -> Eval<&str> {
        match &e.kind {
            ExprKind::Ident(name) => Ok(name),
            _ => Err(ExecError::Internal("indexed expression is not a state variable".into()).into()),
        }
    }

    fn eval(&mut self, frame: &Frame, e: &Expr) -> Eval<Value> {
        Ok(match &e.kind {
            ExprKind::Lit(Literal::Number(n)) => Value::Uint(
                Word::parse_decimal(n).ok_or_else(|| ExecError::Internal(format!("bad literal {n}")))?,
            ),
            ExprKind::Lit(Literal::Bool(b)) => Value::Bool(*b),
            ExprKind::Lit(Literal::ZeroAddress) => Value::Address(ZERO_ADDRESS.into()),
            ExprKind::Lit(Literal::String(_)) => {
                return Err(ExecError::Internal("string literal in expression".into()).into())
            }
            ExprKind::Ident(name) => match frame.locals.get(name) {
                Some(v) => v.clone(),
                None => match self.slot(&frame.this, name)? {
                    Slot::Scalar(v) => v.clone(),
                    _ => return Err(ExecError::Internal(format!("`{name}` is not a scalar")).into()),
                },
            },
            ExprKind::MsgSender => Value::Address(frame.sender.clone()),
            ExprKind::MsgValue => Value::Uint(frame.value.clone()),
            ExprKind::Now => Value::Uint(self.now.clone()),
            ExprKind::This => Value::Address(frame.this.clone()),
            ExprKind::Not(inner) => Value::Bool(!self.eval_bool(frame, inner)?),
            ExprKind::Binary(BinOp::And, l, r) => {
                Value::Bool(self.eval_bool(frame, l)? && self.eval_bool(frame, r)?)
            }
            ExprKind::Binary(BinOp::Or, l, r) => {
                Value::Bool(self.eval_bool(frame, l)? || self.eval_bool(frame, r)?)
            }
            ExprKind::Binary(op, l, r) if op.is_arithmetic() => {
                let a = self.eval_uint(frame, l)?;
                let b = self.eval_uint(frame, r)?;
                Value::Uint(self.arith(*op, &a, &b)?)
            }
            ExprKind::Binary(op @ (BinOp::Eq | BinOp::Ne), l, r) => {
                let a = self.eval(frame, l)?;
                let b = self.eval(frame, r)?;
                Value::Bool((a == b) == (*op == BinOp::Eq))
            }
            ExprKind::Binary(op, l, r) => {
                let a = self.eval_uint(frame, l)?;
                let b = self.eval_uint(frame, r)?;
                Value::Bool(match op {
                    BinOp::Lt => a < b,
                    BinOp::Le => a <= b,
                    BinOp::Gt => a > b,
                    BinOp::Ge => a >= b,
                    _ => return Err(ExecError::Internal(format!("operator {}", op.symbol())).into()),
                })
            }
            ExprKind::Index(base, idx) => {
                let name = Self::state_name(base)?;
                let key = self.eval(frame, idx)?;
                self.read_index(&frame.this, name, &key)?
            }
            ExprKind::Member(base, member) => match member.as_str() {
                "length" => {
                    let name = Self::state_name(base)?;
                    match self.slot(&frame.this, name)? {
                        Slot::Array(items) => Value::Uint(Word::from(items.len())),
                        _ => return Err(ExecError::Internal(format!("`{name}` is not an array")).into()),
                    }
                }
                "balance" => {
                    let a = self.eval_address(frame, base)?;
                    Value::Uint(self.world.balance(&a))
                }
                other => return Err(ExecError::Internal(format!("unknown member `{other}`")).into()),
            },
            ExprKind::Call(..) => {
                return Err(ExecError::Internal("call left inside an expression".into()).into())
            }
        })
    }

    fn read_index(&self, contract: &str, name: &str, key: &Value) -> Eval<Value> {
        let ty = self
            .var_type(contract, name)
            .ok_or_else(|| ExecError::Internal(format!("unknown state variable `{name}`")))?;
        Ok(match (self.slot(contract, name)?, ty) {
            (Slot::Mapping(m), Type::Mapping(_, v)) => m.get(key).cloned().unwrap_or_else(|| Value::zero_of(v)),
            (Slot::Array(items), Type::Array(elem)) => {
                let i = key.as_uint().and_then(Word::to_usize);
                match i.and_then(|i| items.get(i)) {
                    Some(v) => v.clone(),
                    None if self.g.config.arithmetic == Arithmetic::Checked => return Err(Stop::Fault),
                    None => Value::zero_of(elem),
                }
            }
            _ => return Err(ExecError::Internal(format!("`{name}` cannot be indexed")).into()),
        })
    }

    fn write_ident(&mut self, frame: &mut Frame, name: &str, v: Value) -> Result<(), ExecError> {
        if let Some(slot) = frame.locals.get_mut(name) {
            *slot = v;
            return Ok(());
        }
        let this = frame.this.clone();
        match self.slot_mut(&this, name)? {
            Slot::Scalar(s) => *s = v,
            _ => return internal(format!("`{name}` is not a scalar")),
        }
        Ok(())
    }

    fn assign(&mut self, frame: &mut Frame, target: &Expr, op: AssignOp, value: &Expr) -> Eval<()> {
        let key = match &target.kind {
            ExprKind::Index(_, idx) => Some(self.eval(frame, idx)?),
            _ => None,
        };
        let rhs = self.eval(frame, value)?;
        let new = match op.binop() {
            None => rhs,
            Some(bin) => {
                let old = match (&target.kind, &key) {
                    (ExprKind::Index(base, _), Some(k)) => self.read_index(&frame.this, Self::state_name(base)?, k)?,
                    _ => self.eval(frame, target)?,
                };
                let (Value::Uint(a), Value::Uint(b)) = (old, rhs) else {
                    return Err(ExecError::Internal("compound assignment on non-uint".into()).into());
                };
                Value::Uint(self.arith(bin, &a, &b)?)
            }
        };
        match (&target.kind, key) {
            (ExprKind::Ident(name), None) => self.write_ident(frame, name, new)?,
            (ExprKind::Index(base, _), Some(k)) => {
                let name = Self::state_name(base)?;
                let checked = self.g.config.arithmetic == Arithmetic::Checked;
                let this = frame.this.clone();
                match self.slot_mut(&this, name)? {
                    Slot::Mapping(m) => {
                        m.insert(k, new);
                    }
                    Slot::Array(items) => match k.as_uint().and_then(Word::to_usize) {
                        Some(i) if i < items.len() => items[i] = new,
                        _ if checked => return Err(Stop::Fault),
                        _ => {}
                    },
                    Slot::Scalar(_) => return Err(ExecError::Internal(format!("`{name}` is not indexable")).into()),
                }
            }
            _ => return Err(ExecError::Internal("unsupported assignment target".into()).into()),
        }
        Ok(())
    }

    /// Statement-level expression: `push` and `transfer`.
    fn effect(&mut self, frame: &mut Frame, e: &Expr) -> Eval<()> {
        match &e.kind {
            ExprKind::Call(Callee::Push(base), args) => {
                let name = Self::state_name(base)?;
                let [arg] = args.as_slice() else {
                    return Err(ExecError::Internal("push takes one argument".into()).into());
                };
                let v = self.eval(frame, arg)?;
                let this = frame.this.clone();
                match self.slot_mut(&this, name)? {
                    Slot::Array(items) => items.push(v),
                    _ => return Err(ExecError::Internal(format!("`{name}` is not an array")).into()),
                }
            }
            ExprKind::Call(Callee::Transfer(base), args) => {
                let to = self.eval_address(frame, base)?;
                let [arg] = args.as_slice() else {
                    return Err(ExecError::Internal("transfer takes one argument".into()).into());
                };
                let amount = self.eval_uint(frame, arg)?;
                if !self.world.move_ether(&frame.this, &to, &amount) {
                    return Err(Stop::Fault);
                }
            }
            _ => {
                self.eval(frame, e)?;
            }
        }
        Ok(())
    }
}
