// SPDX-License-Identifier: Apache-2.0

//! Shared fixtures and brute-force oracles for the integration tests.
//!
//! The oracles here are written against the raw graph records, not the
//! library's own path search or elimination, so agreement is meaningful.

#![allow(dead_code)]

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use std::collections::BTreeMap;
use std::path::PathBuf;
use txbasis::executor::{AgentFinal, TestCase};
use txbasis::frontend::AccountRole;
use txbasis::graph::{EdgeKind, GraphConfig, LowLevelRevert, NodeId, NodeKind, NodeOp, Tcfg};
use txbasis::basis::{BasisPathSet, Budgets, Terminal, WholeTxPath};
use txbasis::coverage::MatchMode;
use txbasis::executor::TestSuite;
use txbasis::frontend::parse_source;
use txbasis::interactions::{
    compatible_paths, enumerate_requirements, enumerate_tuples, generate_all_bases, Bases, Outcome, TxTuple,
};
use txbasis::mutation::{
    generate_mutants, random_suite, random_test_case, run_experiment, ExperimentReport, ExperimentSuite, Mutant,
    MutantManifest, MutationOperator, Program, RandomTestConfig, SuiteKind,
};

/// Every bundled single-file fixture, relative to `fixtures/`.
pub const FIXTURES: [&str; 4] = ["fishtoken.msol", "dao.msol", "vault.msol", "experiment/sharkpool.msol"];

pub fn fixture_path(rel: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("fixtures").join(rel)
}

pub fn fixture(rel: &str) -> String {
    std::fs::read_to_string(fixture_path(rel)).unwrap_or_else(|e| panic!("{rel}: {e}"))
}

pub fn accounts() -> Vec<AccountRole> {
    vec![AccountRole::new("alice", 100u64), AccountRole::new("bob", 100u64)]
}

pub fn program(rel: &str, config: GraphConfig) -> Program {
    Program::from_source(&fixture(rel), &accounts(), config).unwrap_or_else(|e| panic!("{rel}: {e}"))
}

pub fn both_modes() -> [GraphConfig; 2] {
    [
        GraphConfig::default(),
        GraphConfig {
            lowlevel_revert: LowLevelRevert::ReturnFalse,
            ..GraphConfig::default()
        },
    ]
}

/// Entry node of the transaction function `Contract.function`.
pub fn entry_of(g: &Tcfg, name: &str) -> NodeId {
    g.functions
        .iter()
        .find(|f| f.name == name)
        .unwrap_or_else(|| panic!("no function {name}"))
        .entry
}

/// Traversal limits of [`enumerate_wtps`].
#[derive(Debug, Clone, Copy)]
pub struct Bounds {
    pub per_call_edge: u32,
    pub per_back_edge: u32,
    /// Give up beyond this many paths.
    pub cap: usize,
}

impl Default for Bounds {
    fn default() -> Self {
        Bounds {
            per_call_edge: 2,
            per_back_edge: 2,
            cap: 200_000,
        }
    }
}

struct Walk<'g> {
    g: &'g Tcfg,
    adj: Vec<Vec<usize>>,
    bounds: Bounds,
    used: Vec<u32>,
    path: Vec<NodeId>,
    frames: Vec<(usize, Option<NodeId>)>,
    out: Vec<Vec<NodeId>>,
    overflow: bool,
}

impl Walk<'_> {
    fn bind_target(&self, n: NodeId) -> Option<NodeId> {
        match self.g.nodes[n].op {
            NodeOp::Bind { call_site, .. } => Some(call_site),
            _ => None,
        }
    }

    fn go(&mut self, u: NodeId) {
        if self.overflow {
            return;
        }
        let node = &self.g.nodes[u];
        if self.frames.len() == 1 && node.func == self.frames[0].0 && matches!(node.kind, NodeKind::Exit | NodeKind::Revert)
        {
            if self.out.len() == self.bounds.cap {
                self.overflow = true;
            } else {
                self.out.push(self.path.clone());
            }
            return;
        }
        for i in 0..self.adj[u].len() {
            let e = &self.g.edges[self.adj[u][i]];
            let v = e.to;
            let limit = match e.kind {
                EdgeKind::Call => Some(self.bounds.per_call_edge),
                _ if e.back => Some(self.bounds.per_back_edge),
                _ => None,
            };
            if limit.is_some_and(|l| self.used[e.id] >= l) {
                continue;
            }
            let saved = self.frames.clone();
            let top = *self.frames.last().unwrap();
            let ok = match e.kind {
                EdgeKind::Flow | EdgeKind::Revert => self.g.nodes[v].func == top.0,
                EdgeKind::Call => {
                    self.frames.push((self.g.nodes[v].func, Some(u)));
                    true
                }
                EdgeKind::Return => {
                    self.frames.pop();
                    !self.frames.is_empty() && top.1.is_some() && self.bind_target(v) == top.1
                }
                EdgeKind::CascadingRevert => {
                    self.frames.pop();
                    self.frames.last().is_some_and(|c| c.0 == self.g.nodes[v].func)
                }
            };
            if ok {
                self.used[e.id] += 1;
                self.path.push(v);
                self.go(v);
                self.path.pop();
                self.used[e.id] -= 1;
            }
            self.frames = saved;
        }
    }
}

/// Every whole-transaction path from `entry` within `bounds`, or `None`
/// when there are more than `bounds.cap`.
pub fn enumerate_wtps(g: &Tcfg, entry: NodeId, bounds: Bounds) -> Option<Vec<Vec<NodeId>>> {
    let mut adj = vec![Vec::new(); g.nodes.len()];
    for e in &g.edges {
        adj[e.from].push(e.id);
    }
    let mut w = Walk {
        g,
        adj,
        bounds,
        used: vec![0; g.edges.len()],
        path: vec![entry],
        frames: vec![(g.nodes[entry].func, None)],
        out: Vec::new(),
        overflow: false,
    };
    w.go(entry);
    (!w.overflow).then_some(w.out)
}

/// Edge-count vector of `nodes` over `edges`, computed from the raw edge list.
pub fn edge_vector(g: &Tcfg, nodes: &[NodeId], edges: &[usize]) -> Vec<u32> {
    let index: BTreeMap<usize, usize> = edges.iter().enumerate().map(|(i, &e)| (e, i)).collect();
    let mut v = vec![0u32; edges.len()];
    for w in nodes.windows(2) {
        let e = g
            .edges
            .iter()
            .find(|e| e.from == w[0] && e.to == w[1])
            .expect("consecutive nodes are joined by an edge");
        v[index[&e.id]] += 1;
    }
    v
}

pub fn pred_visits(g: &Tcfg, nodes: &[NodeId]) -> usize {
    nodes.iter().filter(|&&n| g.nodes[n].kind == NodeKind::Pred).count()
}

const P: u64 = (1 << 61) - 1;

fn mulmod(a: u64, b: u64) -> u64 {
    ((a as u128 * b as u128) % P as u128) as u64
}

fn powmod(mut a: u64, mut e: u64) -> u64 {
    let mut r = 1;
    while e > 0 {
        if e & 1 == 1 {
            r = mulmod(r, a);
        }
        a = mulmod(a, a);
        e >>= 1;
    }
    r
}

/// Rank over GF(2^61 - 1). For small nonnegative integer vectors this
/// equals the rational rank unless a minor happens to vanish mod p.
pub fn rank_mod_p(rows: &[Vec<u32>]) -> usize {
    let mut m: Vec<Vec<u64>> = rows.iter().map(|r| r.iter().map(|&x| x as u64 % P).collect()).collect();
    let cols = m.first().map_or(0, Vec::len);
    let mut rank = 0;
    for c in 0..cols {
        let Some(piv) = (rank..m.len()).find(|&r| m[r][c] != 0) else {
            continue;
        };
        m.swap(rank, piv);
        let inv = powmod(m[rank][c], P - 2);
        for r in 0..m.len() {
            if r != rank && m[r][c] != 0 {
                let f = mulmod(m[r][c], inv);
                for j in c..cols {
                    let sub = mulmod(f, m[rank][j]);
                    m[r][j] = (m[r][j] + P - sub) % P;
                }
            }
        }
        rank += 1;
    }
    rank
}

/// Every `(tuples, paths)` sequence of length `k` by nested loops.
pub fn brute_requirements(choices: &[Vec<usize>], k: usize) -> Vec<(Vec<usize>, Vec<usize>)> {
    let mut out = vec![(Vec::new(), Vec::new())];
    for _ in 0..k {
        let mut next = Vec::new();
        for (ts, ps) in &out {
            for (t, c) in choices.iter().enumerate() {
                for &p in c {
                    let (mut ts, mut ps) = (ts.clone(), ps.clone());
                    ts.push(t);
                    ps.push(p);
                    next.push((ts, ps));
                }
            }
        }
        out = next;
    }
    out
}

/// A random small test case: the library generator, with agents
/// sometimes reentering twice and, under return-false lowering, sometimes
/// failing after their actions.
pub fn random_case(p: &Program, rng: &mut ChaCha8Rng, name: &str) -> TestCase {
    let cfg = RandomTestConfig {
        max_steps: 5,
        ..RandomTestConfig::for_model(&p.model)
    };
    let steps = rng.random_range(1..=cfg.max_steps);
    let mut t = random_test_case(&p.model, &cfg, rng, name, steps);
    for a in &mut t.agents {
        a.max_depth = rng.random_range(1..=2);
        if p.config.lowlevel_revert == LowLevelRevert::ReturnFalse && rng.random_bool(0.3) {
            a.finally = AgentFinal::Revert;
        }
    }
    t
}

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// The resolved mutant set of the bundled experiment.
pub fn bundled_mutants() -> Vec<Mutant> {
    let unit = parse_source(&fixture("experiment/sharkpool.msol")).unwrap();
    let generated = generate_mutants(&unit, &MutationOperator::GENERATED);
    let manifest: MutantManifest = serde_json::from_str(&fixture("experiment/mutants.json")).unwrap();
    manifest.resolve(&generated, &fixture_path("experiment")).unwrap()
}

/// The bundled experiment at k = 2, as the `experiment` command runs it.
pub fn bundled_experiment(seed: u64) -> ExperimentReport {
    let p = program("experiment/sharkpool.msol", GraphConfig::default());
    let bases = generate_all_bases(&p.graph, Budgets::default()).unwrap();
    let tuples = enumerate_tuples(&p.model, &bases).unwrap();
    let set = enumerate_requirements(&tuples, &bases, 2).unwrap();
    let kb: TestSuite = serde_json::from_str(&fixture("experiment/kbounded.json")).unwrap();
    let st: TestSuite = serde_json::from_str(&fixture("experiment/statement.json")).unwrap();
    let shape: Vec<usize> = kb.tests.iter().map(|t| t.steps.len()).collect();
    let rs = random_suite(&p.model, &RandomTestConfig::for_model(&p.model), seed, &shape);
    let suites = [
        ExperimentSuite::record(SuiteKind::KBounded, &p, kb).unwrap(),
        ExperimentSuite::record(SuiteKind::Statement, &p, st).unwrap(),
        ExperimentSuite::record(SuiteKind::Random, &p, rs).unwrap(),
    ];
    run_experiment(&p, &set, &bases, MatchMode::Exact, &suites, &bundled_mutants(), Some(seed)).unwrap()
}

pub fn synthetic_basis(name: &str, terminals: &[Terminal]) -> BasisPathSet {
    BasisPathSet {
        entry: 0,
        entry_name: name.into(),
        cyclomatic: terminals.len(),
        complete: true,
        edges: Vec::new(),
        paths: terminals
            .iter()
            .map(|&terminal| WholeTxPath {
                nodes: Vec::new(),
                vector: Vec::new(),
                terminal,
            })
            .collect(),
    }
}

/// Tuples over `accounts` x functions x outcomes that some path realises.
pub fn synthetic_tuples(accounts: usize, bases: &Bases) -> Vec<TxTuple> {
    let mut out = Vec::new();
    for a in 0..accounts {
        for (name, set) in bases {
            for outcome in [Outcome::Success, Outcome::Revert] {
                if !compatible_paths(set, outcome).is_empty() {
                    let (contract, function) = name.split_once('.').unwrap();
                    out.push(TxTuple {
                        account: format!("a{a}"),
                        contract: contract.into(),
                        function: function.into(),
                        outcome,
                    });
                }
            }
        }
    }
    out
}
