// SPDX-License-Identifier: Apache-2.0

//! Acceptance criteria 1 to 9, one pass/fail line each. Runs without the
//! libtest harness so the report reads top to bottom.

mod common;

use common::*;
use num_bigint::BigUint;
use rand::Rng;
use serde::Deserialize;
use std::collections::{BTreeMap, BTreeSet};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::Path;
use std::process::Command;
use std::time::{Duration, Instant};
use txbasis::basis::{generate_wtpbs, span_contains, validate_wtp, vector_rank, Budgets, Terminal};
use txbasis::coverage::{measure_coverage, MatchMode};
use txbasis::executor::{execute_test_case, project_trace, Execution, TestSuite};
use txbasis::graph::{reachable_metrics, Arithmetic, GraphConfig, NodeKind, Tcfg};
use txbasis::interactions::{
    count_requirements, enumerate_requirements, enumerate_tuples, generate_all_bases, Bases, InfeasibleAnnotations,
    Outcome,
};
use txbasis::mutation::{SuiteKind, SuiteSummary};

type Check = Result<String, String>;

macro_rules! ensure {
    ($cond:expr, $($msg:tt)+) => {
        if !$cond {
            return Err(format!($($msg)+));
        }
    };
}

fn calls_into(g: &Tcfg, path: &[usize], function: &str) -> bool {
    path.iter().any(|&n| {
        let node = g.node(n);
        node.kind == NodeKind::Entry { transaction: true } && g.functions[node.func].function == function
    })
}

fn c1_fishtoken() -> Check {
    let p = program("fishtoken.msol", GraphConfig::default());
    for name in ["FishToken.transfer", "FishToken.issueTokens"] {
        let entry = entry_of(&p.graph, name);
        let m = reachable_metrics(&p.graph, entry).map_err(|e| e.to_string())?;
        ensure!(m.cyclomatic == 5, "{name}: cyclomatic {}", m.cyclomatic);
        let set = generate_wtpbs(&p.graph, entry, Budgets::default()).map_err(|e| e.to_string())?;
        ensure!(set.paths.len() == 5 && set.complete, "{name}: {} paths, complete={}", set.paths.len(), set.complete);
    }
    Ok("transfer and issueTokens: cyclomatic 5, 5 paths, complete".into())
}

fn c2_dao() -> Check {
    let p = program("dao.msol", GraphConfig::default());
    let g = &p.graph;
    let entry = entry_of(g, "Dao.withdrawFunds");
    let m = reachable_metrics(g, entry).map_err(|e| e.to_string())?;
    ensure!(m.cyclomatic == 5, "cyclomatic {}", m.cyclomatic);
    let set = generate_wtpbs(g, entry, Budgets::default()).map_err(|e| e.to_string())?;
    ensure!(set.paths.len() == 5, "{} paths", set.paths.len());
    let f = |name: &str| g.functions.iter().find(|f| f.name == name).unwrap();
    let (w, i, ext) = (f("Dao.withdrawFunds"), f("Dao._withdrawFunds"), g.ext().unwrap());
    let chain = [ext.revert.unwrap(), i.revert.unwrap(), w.revert.unwrap()];
    let via_deposit = set.paths.iter().filter(|p| calls_into(g, &p.nodes, "depositFunds")).count();
    let reentrant = set.paths.iter().filter(|p| calls_into(g, &p.nodes[1..], "withdrawFunds")).count();
    let reverting = set.paths.iter().filter(|p| p.terminal == Terminal::Revert).count();
    let cascading = set.paths.iter().filter(|p| p.nodes.windows(3).any(|x| x == chain)).count();
    ensure!(via_deposit >= 1, "no path through depositFunds");
    ensure!(reentrant >= 1, "no reentrant path");
    ensure!(reverting >= 1, "no revert-terminal path");
    ensure!(cascading >= 1, "no cascading revert chain");
    Ok(format!(
        "cyclomatic 5, 5 paths: {via_deposit} via depositFunds, {reentrant} reentrant, {reverting} reverting, {cascading} cascading"
    ))
}

fn c3_span() -> Check {
    let (mut entries, mut complete, mut checked) = (0, 0, 0);
    for rel in FIXTURES {
        let p = program(rel, GraphConfig::default());
        let g = &p.graph;
        for (name, set) in generate_all_bases(g, Budgets::default()).map_err(|e| e.to_string())? {
            entries += 1;
            ensure!(vector_rank(set.vectors()) == set.paths.len(), "{rel} {name}: dependent paths");
            if !set.complete {
                continue;
            }
            complete += 1;
            let all = enumerate_wtps(g, set.entry, Bounds::default())
                .ok_or_else(|| format!("{rel} {name}: too many bounded paths"))?;
            for nodes in &all {
                let v = edge_vector(g, nodes, &set.edges);
                ensure!(span_contains(set.vectors(), &v), "{rel} {name}: {nodes:?} outside the span");
                checked += 1;
            }
        }
    }
    Ok(format!("{entries} entries independent, {complete} complete, {checked} bounded paths in their span"))
}

fn c4_grammar() -> Check {
    let mut paths = 0;
    for rel in FIXTURES {
        for config in both_modes() {
            let p = program(rel, config);
            for (name, set) in generate_all_bases(&p.graph, Budgets::default()).map_err(|e| e.to_string())? {
                for path in &set.paths {
                    ensure!(validate_wtp(&p.graph, &path.nodes) == Ok(path.terminal), "{rel} {name}: invalid path");
                    paths += 1;
                }
            }
        }
    }
    let programs: Vec<_> = FIXTURES
        .iter()
        .flat_map(|rel| both_modes().map(|c| (rel, program(rel, c))))
        .collect();
    let mut rng = rng(4);
    let mut traces = 0;
    for n in 0..1000 {
        let (rel, p) = &programs[n % programs.len()];
        let t = random_case(p, &mut rng, &format!("t{n}"));
        let ex = execute_test_case(&p.model, &p.graph, &t).map_err(|e| format!("{rel} t{n}: {e}"))?;
        for r in ex.prologue.iter().filter(|r| !r.trace.is_empty()).chain(&ex.records) {
            let path = project_trace(&p.graph, r).map_err(|e| format!("{rel} t{n}: {e}"))?;
            ensure!(path.terminal == r.outcome.terminal(), "{rel} t{n}: terminal mismatch");
            traces += 1;
        }
    }
    Ok(format!("{paths} basis paths and {traces} traces from 1000 cases valid"))
}

fn c5_counting() -> Check {
    let mut rng = rng(5);
    for case in 0..100 {
        let accounts = rng.random_range(1..=2);
        let k = rng.random_range(1..=3);
        let mut bases = Bases::new();
        for f in 0..rng.random_range(1..=3) {
            let terminals: Vec<Terminal> = (0..rng.random_range(1..=3))
                .map(|_| if rng.random_bool(0.4) { Terminal::Revert } else { Terminal::Exit })
                .collect();
            let name = format!("C.f{f}");
            bases.insert(name.clone(), synthetic_basis(&name, &terminals));
        }
        let tuples = synthetic_tuples(accounts, &bases);
        let set = enumerate_requirements(&tuples, &bases, k).map_err(|e| e.to_string())?;
        let closed = count_requirements(&tuples, &bases, k).map_err(|e| e.to_string())?;
        let brute = brute_requirements(&set.choices, k);
        ensure!(
            BigUint::from(set.total()) == closed && set.total() == brute.len(),
            "case {case}: {} enumerated, {closed} closed form, {} brute force",
            set.total(),
            brute.len()
        );
        for (r, (ts, ps)) in set.requirements.iter().zip(&brute) {
            ensure!(&r.tuples == ts && &r.paths == ps, "case {case}: requirement {} out of order", r.id);
        }
    }
    Ok("100 instances agree".into())
}

fn c6_rollback() -> Check {
    let p = program(
        "dao.msol",
        GraphConfig {
            arithmetic: Arithmetic::Checked,
            ..GraphConfig::default()
        },
    );
    let mut rng = rng(6);
    let (mut reverted, mut txs) = (0, 0);
    for n in 0..1000 {
        let t = random_case(&p, &mut rng, &format!("t{n}"));
        let run = |steps: usize| {
            let mut head = t.clone();
            head.steps.truncate(steps);
            execute_test_case(&p.model, &p.graph, &head).map_err(|e| format!("t{n}: {e}"))
        };
        let full = run(t.steps.len())?;
        let mut before = run(0)?.state;
        let total = before.total_ether();
        for i in 0..t.steps.len() {
            let after = run(i + 1)?.state;
            txs += 1;
            if full.records[i].outcome == Outcome::Revert {
                reverted += 1;
                ensure!(after == before, "t{n} step {i}: revert changed the state");
            }
            ensure!(after.total_ether() == total, "t{n} step {i}: ether not conserved");
            before = after;
        }
    }
    ensure!(reverted > 0, "no transaction reverted");
    Ok(format!("1000 cases, {txs} transactions, {reverted} reverted and rolled back"))
}

fn c7_vault() -> Check {
    let p = program("vault.msol", GraphConfig::default());
    let bases = generate_all_bases(&p.graph, Budgets::default()).map_err(|e| e.to_string())?;
    let tuples = enumerate_tuples(&p.model, &bases).map_err(|e| e.to_string())?;
    let set = enumerate_requirements(&tuples, &bases, 2).map_err(|e| e.to_string())?;
    let suite: TestSuite = serde_json::from_str(&fixture("vault_k2.json")).map_err(|e| e.to_string())?;
    let notes: InfeasibleAnnotations =
        serde_json::from_str(&fixture("vault_infeasible.json")).map_err(|e| e.to_string())?;
    let runs: Vec<Execution> = suite
        .tests
        .iter()
        .map(|t| execute_test_case(&p.model, &p.graph, t).map_err(|e| e.to_string()))
        .collect::<Result<_, _>>()?;
    let measure = |runs: &[Execution]| {
        measure_coverage(&p.graph, &set, &bases, runs, &notes, MatchMode::Exact).map_err(|e| e.to_string())
    };
    let full = measure(&runs)?;
    ensure!(full.adjusted_percent() == 100.0, "adjusted coverage {:.1}%", full.adjusted_percent());
    ensure!(full.contradicted_annotations.is_empty(), "annotations contradicted");
    for i in 0..runs.len() {
        let mut rest = runs.clone();
        rest.remove(i);
        let less = measure(&rest)?;
        ensure!(less.covered < full.covered, "dropping {} keeps coverage", runs[i].name);
    }
    Ok(format!(
        "{} covered + {} infeasible of {}; each of {} tests needed",
        full.covered,
        full.infeasible,
        full.total,
        runs.len()
    ))
}

#[derive(Deserialize)]
struct Golden {
    k: usize,
    seed: u64,
    considered: usize,
    detected: BTreeMap<SuiteKind, usize>,
    kills: BTreeMap<String, BTreeSet<SuiteKind>>,
}

fn c8_experiment() -> Check {
    let golden: Golden =
        serde_json::from_str(&fixture("experiment/golden.json")).map_err(|e| e.to_string())?;
    let report = bundled_experiment(golden.seed);
    ensure!(report.k == golden.k, "k {}", report.k);
    let s = |kind| report.summary(kind).cloned().ok_or_else(|| format!("no {kind:?} row"));
    let (kb, st, rd): (SuiteSummary, SuiteSummary, SuiteSummary) =
        (s(SuiteKind::KBounded)?, s(SuiteKind::Statement)?, s(SuiteKind::Random)?);
    ensure!(kb.detected >= rd.detected, "k-bounded {} < random {}", kb.detected, rd.detected);
    ensure!(kb.detected > st.detected, "k-bounded {} <= statement {}", kb.detected, st.detected);
    ensure!(kb.considered == golden.considered, "considered {}", kb.considered);
    for row in [&kb, &st, &rd] {
        ensure!(golden.detected.get(&row.kind) == Some(&row.detected), "{:?} detected {}", row.kind, row.detected);
    }
    let kills: BTreeMap<String, BTreeSet<SuiteKind>> = report
        .mutants
        .iter()
        .map(|m| (m.id.clone(), m.kills.iter().filter(|(_, e)| e.is_some()).map(|(k, _)| *k).collect()))
        .collect();
    ensure!(kills == golden.kills, "per-mutant kills differ from the golden file");
    Ok(format!(
        "k-bounded {}/{n} ({:.1}%), random {}/{n} ({:.1}%), statement {}/{n} ({:.1}%)",
        kb.detected,
        kb.percent(),
        rd.detected,
        rd.percent(),
        st.detected,
        st.percent(),
        n = kb.considered
    ))
}

fn cli_bytes(args: &[&str], out_dir: Option<&Path>) -> Result<Vec<u8>, String> {
    let out = Command::new(env!("CARGO_BIN_EXE_txbasis"))
        .current_dir(env!("CARGO_MANIFEST_DIR"))
        .args(args)
        .output()
        .map_err(|e| e.to_string())?;
    ensure!(out.status.success(), "{args:?}: {}", String::from_utf8_lossy(&out.stderr));
    let mut bytes = out.stdout;
    if let Some(dir) = out_dir {
        let mut files: Vec<_> = std::fs::read_dir(dir).map_err(|e| e.to_string())?.flatten().map(|e| e.path()).collect();
        files.sort();
        for f in files {
            bytes.extend(f.file_name().unwrap().to_string_lossy().bytes());
            bytes.extend(std::fs::read(&f).map_err(|e| e.to_string())?);
        }
    }
    Ok(bytes)
}

fn c9_determinism() -> Check {
    let tmp = tempfile::tempdir().map_err(|e| e.to_string())?;
    let runs = tmp.path().join("runs.json");
    let runs_bytes = cli_bytes(&["run", "fixtures/vault.msol", "--tests", "fixtures/vault_k2.json"], None)?;
    std::fs::write(&runs, &runs_bytes).map_err(|e| e.to_string())?;
    let runs = runs.to_str().unwrap();
    let shark = "fixtures/experiment/sharkpool.msol";
    let commands: Vec<Vec<&str>> = vec![
        vec!["parse", "fixtures/fishtoken.msol"],
        vec!["tcfg", "fixtures/dao.msol"],
        vec!["tcfg", "fixtures/dao.msol", "--lowlevel-revert", "return-false", "--arithmetic", "checked"],
        vec!["basis", shark],
        vec!["requirements", "fixtures/dao.msol", "-k", "3"],
        vec!["run", "fixtures/vault.msol", "--tests", "fixtures/vault_k2.json"],
        vec!["coverage", "fixtures/vault.msol", "--runs", runs, "--infeasible", "fixtures/vault_infeasible.json"],
        vec!["coverage", "fixtures/vault.msol", "--tests", "fixtures/vault_k2.json", "--format", "json"],
        vec!["stmt-coverage", "fixtures/vault.msol", "--runs", runs],
        vec![
            "experiment",
            shark,
            "--manifest",
            "fixtures/experiment/mutants.json",
            "--kbounded",
            "fixtures/experiment/kbounded.json",
            "--statement",
            "fixtures/experiment/statement.json",
        ],
    ];
    for args in &commands {
        ensure!(cli_bytes(args, None)? == cli_bytes(args, None)?, "{args:?} differs between runs");
    }
    let dir = tmp.path().join("mutants");
    let mutate = || {
        let _ = std::fs::remove_dir_all(&dir);
        cli_bytes(&["mutate", shark, "--out", dir.to_str().unwrap()], Some(&dir))
    };
    ensure!(mutate()? == mutate()?, "mutate output differs between runs");
    let dots = [tmp.path().join("a.dot"), tmp.path().join("b.dot")];
    for d in &dots {
        cli_bytes(&["tcfg", shark, "--dot", d.to_str().unwrap()], None)?;
    }
    let read = |p: &Path| std::fs::read(p).map_err(|e| e.to_string());
    ensure!(read(&dots[0])? == read(&dots[1])?, "DOT output differs between runs");
    Ok(format!("{} commands repeated byte-identically", commands.len() + 2))
}

fn main() {
    let criteria: [(&str, fn() -> Check, Duration); 9] = [
        ("1 FishToken cyclomatic and basis", c1_fishtoken, Duration::from_secs(1)),
        ("2 DAO withdraw basis shapes", c2_dao, Duration::from_secs(1)),
        ("3 independence and spanning", c3_span, Duration::from_secs(30)),
        ("4 grammar validity", c4_grammar, Duration::from_secs(60)),
        ("5 requirement counting", c5_counting, Duration::from_secs(30)),
        ("6 rollback and conservation", c6_rollback, Duration::from_secs(60)),
        ("7 coverage semantics", c7_vault, Duration::from_secs(60)),
        ("8 experiment direction", c8_experiment, Duration::from_secs(120)),
        ("9 CLI determinism", c9_determinism, Duration::from_secs(120)),
    ];
    std::panic::set_hook(Box::new(|_| {}));
    let mut failed = 0;
    for (name, check, limit) in criteria {
        let start = Instant::now();
        let result = catch_unwind(AssertUnwindSafe(check)).unwrap_or_else(|e| {
            Err(e
                .downcast_ref::<String>()
                .cloned()
                .or_else(|| e.downcast_ref::<&str>().map(|s| s.to_string()))
                .unwrap_or_else(|| "panicked".into()))
        });
        let took = start.elapsed();
        let result = match result {
            Ok(_) if took > limit => Err(format!("took {took:.2?}, limit {limit:?}")),
            r => r,
        };
        match result {
            Ok(detail) => println!("PASS  criterion {name}: {detail} [{took:.2?}]"),
            Err(why) => {
                failed += 1;
                println!("FAIL  criterion {name}: {why} [{took:.2?}]");
            }
        }
    }
    println!("{} of 9 criteria passed", 9 - failed);
    if failed > 0 {
        std::process::exit(1);
    }
}
