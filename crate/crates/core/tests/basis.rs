// SPDX-License-Identifier: Apache-2.0

mod common;

use common::*;
use txbasis::basis::{
    baseline_path, complete_from_prefix, generate_wtpbs, span_contains, validate_wtp, vector_rank, Budgets, Terminal,
    ViolationKind, WholeTxPath,
};
use txbasis::graph::{reachable_metrics, EdgeKind, GraphConfig, NodeKind, Tcfg};
use txbasis::interactions::generate_all_bases;

fn calls_into(g: &Tcfg, path: &[usize], function: &str) -> bool {
    path.iter().any(|&n| {
        let node = g.node(n);
        node.kind == NodeKind::Entry { transaction: true } && g.functions[node.func].function == function
    })
}

#[test]
fn every_generated_path_validates_with_its_terminal() {
    for rel in FIXTURES {
        for config in both_modes() {
            let p = program(rel, config);
            for (name, set) in generate_all_bases(&p.graph, Budgets::default()).unwrap() {
                for path in &set.paths {
                    assert_eq!(validate_wtp(&p.graph, &path.nodes), Ok(path.terminal), "{rel} {name}");
                    let sum: u32 = path.vector.iter().sum();
                    assert_eq!(sum as usize, path.nodes.len() - 1, "{rel} {name}");
                }
            }
        }
    }
}

#[test]
fn bases_are_independent_and_no_larger_than_cyclomatic() {
    for rel in FIXTURES {
        for config in both_modes() {
            let p = program(rel, config);
            for (name, set) in generate_all_bases(&p.graph, Budgets::default()).unwrap() {
                let rows: Vec<Vec<u32>> = set.paths.iter().map(|p| p.vector.clone()).collect();
                assert_eq!(vector_rank(set.vectors()), set.paths.len(), "{rel} {name}");
                assert_eq!(rank_mod_p(&rows), set.paths.len(), "{rel} {name}");
                assert!(set.paths.len() <= set.cyclomatic, "{rel} {name}");
                assert_eq!(set.complete, set.paths.len() == set.cyclomatic, "{rel} {name}");
            }
        }
    }
}

#[test]
fn complete_bases_span_every_bounded_path() {
    for rel in FIXTURES {
        for config in both_modes() {
            let p = program(rel, config);
            let g = &p.graph;
            for (name, set) in generate_all_bases(g, Budgets::default()).unwrap() {
                if !set.complete {
                    continue;
                }
                let Some(all) = enumerate_wtps(g, set.entry, Bounds::default()) else {
                    panic!("{rel} {name}: too many bounded paths to enumerate");
                };
                let basis: Vec<Vec<u32>> = set.paths.iter().map(|p| p.vector.clone()).collect();
                let r = rank_mod_p(&basis);
                for nodes in &all {
                    assert!(validate_wtp(g, nodes).is_ok(), "{rel} {name}: oracle path rejected");
                    let v = edge_vector(g, nodes, &set.edges);
                    assert!(span_contains(set.vectors(), &v), "{rel} {name}: {nodes:?} outside the span");
                    let mut ext = basis.clone();
                    ext.push(v);
                    assert_eq!(rank_mod_p(&ext), r, "{rel} {name}: oracle disagrees on span");
                }
            }
        }
    }
}

#[test]
fn baseline_has_fewest_predicate_visits() {
    for rel in ["fishtoken.msol", "dao.msol", "vault.msol"] {
        for config in both_modes() {
            let p = program(rel, config);
            let g = &p.graph;
            for entry in g.transaction_entries() {
                let base = baseline_path(g, entry, Budgets::default()).unwrap();
                let all = enumerate_wtps(g, entry, Bounds::default()).unwrap();
                let least = all.iter().map(|n| pred_visits(g, n)).min().unwrap();
                assert_eq!(pred_visits(g, &base), least, "{rel} entry {entry}");
            }
        }
    }
}

#[test]
fn generation_is_deterministic() {
    for rel in FIXTURES {
        let a = program(rel, GraphConfig::default());
        let b = program(rel, GraphConfig::default());
        let x = serde_json::to_string(&generate_all_bases(&a.graph, Budgets::default()).unwrap()).unwrap();
        let y = serde_json::to_string(&generate_all_bases(&b.graph, Budgets::default()).unwrap()).unwrap();
        assert_eq!(x, y, "{rel}");
    }
}

#[test]
fn fishtoken_entries_have_five_paths() {
    let p = program("fishtoken.msol", GraphConfig::default());
    for name in ["FishToken.transfer", "FishToken.issueTokens"] {
        let set = generate_wtpbs(&p.graph, entry_of(&p.graph, name), Budgets::default()).unwrap();
        assert_eq!(set.cyclomatic, 5, "{name}");
        assert_eq!(set.paths.len(), 5, "{name}");
        assert!(set.complete, "{name}");
    }
}

#[test]
fn fishtoken_transfer_loop_cycle_and_two_iterations() {
    let p = program("fishtoken.msol", GraphConfig::default());
    let g = &p.graph;
    let entry = entry_of(g, "FishToken.transfer");
    let m = reachable_metrics(g, entry).unwrap();
    let set = generate_wtpbs(g, entry, Budgets::default()).unwrap();
    let back = g
        .edges
        .iter()
        .find(|e| e.back && g.functions[g.node(e.from).func].function == "determineNewShark")
        .unwrap();
    let count = |n: &[usize]| n.windows(2).filter(|w| w[0] == back.from && w[1] == back.to).count();
    let all = enumerate_wtps(g, entry, Bounds::default()).unwrap();
    // Paths that differ only in running the shark loop zero or one times.
    let one = all.iter().find(|n| count(n) == 1).unwrap();
    let zero = strip_loop(one, back.to);
    assert!(all.contains(&zero));
    let vz = WholeTxPath::new(g, zero, &m).unwrap().vector;
    let vo = WholeTxPath::new(g, one.clone(), &m).unwrap().vector;
    let diff: Vec<i64> = vo.iter().zip(&vz).map(|(a, b)| *a as i64 - *b as i64).collect();
    // The difference is one trip around the loop: every edge once, a cycle.
    let cycle: Vec<usize> = diff
        .iter()
        .enumerate()
        .filter(|(_, d)| **d != 0)
        .map(|(i, _)| m.edges[i])
        .collect();
    assert!(diff.iter().all(|d| *d == 0 || *d == 1), "{diff:?}");
    assert!(cycle.contains(&back.id));
    for &e in &cycle {
        let to = g.edge(e).to;
        assert_eq!(cycle.iter().filter(|&&f| g.edge(f).from == to).count(), 1);
    }
    let two = all.iter().find(|n| count(n) == 2).unwrap();
    let v2 = WholeTxPath::new(g, two.clone(), &m).unwrap().vector;
    assert!(span_contains(set.vectors(), &v2));
}

/// `n` with the segment between its first two visits of `head` cut out.
fn strip_loop(n: &[usize], head: usize) -> Vec<usize> {
    let mut at = n.iter().enumerate().filter(|(_, &x)| x == head).map(|(i, _)| i);
    match (at.next(), at.next()) {
        (Some(i), Some(j)) => [&n[..i], &n[j..]].concat(),
        _ => n.to_vec(),
    }
}

#[test]
fn dao_withdraw_basis_has_the_expected_shapes() {
    let p = program("dao.msol", GraphConfig::default());
    let g = &p.graph;
    let set = generate_wtpbs(g, entry_of(g, "Dao.withdrawFunds"), Budgets::default()).unwrap();
    assert_eq!(set.cyclomatic, 5);
    assert_eq!(set.paths.len(), 5);
    let f = |name: &str| g.functions.iter().find(|f| f.name == name).unwrap();
    let (w, i, ext) = (f("Dao.withdrawFunds"), f("Dao._withdrawFunds"), g.ext().unwrap());
    assert!(set.paths.iter().any(|p| calls_into(g, &p.nodes, "depositFunds")));
    assert!(set.paths.iter().any(|p| calls_into(g, &p.nodes[1..], "withdrawFunds")));
    assert!(set.paths.iter().any(|p| p.terminal == Terminal::Revert));
    let chain = [ext.revert.unwrap(), i.revert.unwrap(), w.revert.unwrap()];
    assert!(set.paths.iter().any(|p| p.nodes.windows(3).any(|x| x == chain)));
    // The shortest path: ext exits at once and the require passes.
    let first = &set.paths[0];
    assert_eq!(first.terminal, Terminal::Exit);
    assert!(first.nodes.contains(&ext.entry) && first.nodes.contains(&ext.exit));
    assert!(!calls_into(g, &first.nodes[1..], "withdrawFunds") && !calls_into(g, &first.nodes, "depositFunds"));
}

#[test]
fn completion_from_a_failed_require_unwinds_both_frames() {
    let p = program("dao.msol", GraphConfig::default());
    let g = &p.graph;
    let base = baseline_path(g, entry_of(g, "Dao.withdrawFunds"), Budgets::default()).unwrap();
    let i = g.functions.iter().find(|f| f.name == "Dao._withdrawFunds").unwrap();
    let req = *base
        .iter()
        .find(|&&n| g.node(n).kind == NodeKind::Pred && g.node(n).func == i.id)
        .unwrap();
    let cut = base.iter().position(|&n| n == req).unwrap();
    let mut prefix = base[..=cut].to_vec();
    prefix.push(i.revert.unwrap());
    let done = complete_from_prefix(g, &prefix, Budgets::default()).unwrap();
    let w = g.functions.iter().find(|f| f.name == "Dao.withdrawFunds").unwrap();
    assert_eq!(done[done.len() - 2..], [i.revert.unwrap(), w.revert.unwrap()]);
    assert_eq!(validate_wtp(g, &done), Ok(Terminal::Revert));
}

#[test]
fn validation_rejects_malformed_paths() {
    let p = program("dao.msol", GraphConfig::default());
    let g = &p.graph;
    let base = baseline_path(g, entry_of(g, "Dao.withdrawFunds"), Budgets::default()).unwrap();
    assert_eq!(validate_wtp(g, &[]).unwrap_err().kind, ViolationKind::Empty);
    let inner = g.functions.iter().find(|f| f.name == "Dao._withdrawFunds").unwrap();
    assert_eq!(validate_wtp(g, &[inner.entry]).unwrap_err().kind, ViolationKind::NotTransactionEntry);
    assert_eq!(
        validate_wtp(g, &base[..base.len() - 1]).unwrap_err().kind,
        ViolationKind::Unterminated
    );
    let mut skip = base.clone();
    skip.remove(1);
    assert_eq!(validate_wtp(g, &skip).unwrap_err().kind, ViolationKind::NotAnEdge);
    let mut trailing = base.clone();
    trailing.push(base[0]);
    assert_eq!(validate_wtp(g, &trailing).unwrap_err().kind, ViolationKind::TrailingNodes);
}

#[test]
fn return_into_the_wrong_site_is_unmatched() {
    // addToParticipants is called from transfer and from issueTokens, so its
    // exit has a return edge into each caller; only one pairs with the call.
    let p = program("fishtoken.msol", GraphConfig::default());
    let g = &p.graph;
    let add = g.functions.iter().find(|f| f.name == "FishToken.addToParticipants").unwrap();
    let issue = g.functions.iter().find(|f| f.name == "FishToken.issueTokens").unwrap();
    let base = baseline_path(g, entry_of(g, "FishToken.transfer"), Budgets::default()).unwrap();
    let at = base.iter().position(|&n| n == add.exit).unwrap() + 1;
    let wrong = g
        .edges
        .iter()
        .find(|e| e.kind == EdgeKind::Return && e.from == add.exit && g.node(e.to).func == issue.id)
        .unwrap();
    let mut bad = base[..at].to_vec();
    bad.push(wrong.to);
    let v = validate_wtp(g, &bad).unwrap_err();
    assert_eq!((v.index, v.kind), (at, ViolationKind::UnmatchedReturn));
}
