// SPDX-License-Identifier: Apache-2.0

mod common;

use common::*;
use proptest::prelude::*;
use txbasis::frontend::{build_dapp_model, parse_source, AccountRole};
use txbasis::graph::{
    build_tcfg, compute_may_revert, export_dot, reachable_metrics, Arithmetic, EdgeKind, GraphConfig, LowLevelRevert,
    NodeKind, NodeOp, Tcfg,
};

fn graph_of(src: &str, config: GraphConfig) -> Tcfg {
    let unit = parse_source(src).unwrap();
    let model = build_dapp_model(&unit, &[AccountRole::new("a", 10u64)]).unwrap();
    build_tcfg(&model, &config).unwrap()
}

fn cyclomatic(g: &Tcfg, name: &str) -> usize {
    reachable_metrics(g, entry_of(g, name)).unwrap().cyclomatic
}

#[test]
fn fixture_graphs_satisfy_structural_invariants() {
    for rel in FIXTURES {
        for config in both_modes() {
            let p = program(rel, config);
            let g = &p.graph;
            g.check_invariants().unwrap();
            for (i, n) in g.nodes.iter().enumerate() {
                assert_eq!(n.id, i);
            }
            for (i, e) in g.edges.iter().enumerate() {
                assert_eq!(e.id, i);
                let (a, b) = (g.node(e.from).kind, g.node(e.to).kind);
                match e.kind {
                    EdgeKind::Call => assert!(a == NodeKind::CallSite && matches!(b, NodeKind::Entry { .. })),
                    EdgeKind::Return => assert!(matches!(a, NodeKind::Exit | NodeKind::Revert) && b == NodeKind::ReturnSite),
                    EdgeKind::Revert => assert!(matches!(a, NodeKind::Expr | NodeKind::Pred) && b == NodeKind::Revert),
                    EdgeKind::CascadingRevert => assert!(a == NodeKind::Revert && b == NodeKind::Revert),
                    EdgeKind::Flow => assert_eq!(g.node(e.from).func, g.node(e.to).func),
                }
            }
            for n in &g.nodes {
                let outs: Vec<_> = g.out_edges(n.id).iter().map(|&e| g.edge(e)).collect();
                match n.kind {
                    NodeKind::Expr => {
                        assert_eq!(outs.iter().filter(|e| e.kind == EdgeKind::Flow).count(), 1, "{rel} n{}", n.id)
                    }
                    NodeKind::Pred if !matches!(n.op, NodeOp::Dispatch) => {
                        let mut labels: Vec<_> = outs.iter().map(|e| e.label.clone().unwrap()).collect();
                        labels.sort();
                        labels.dedup();
                        assert!(labels.len() >= 2 && labels.len() == outs.len(), "{rel} n{}", n.id);
                    }
                    NodeKind::CallSite => {
                        assert_eq!(outs.len(), 1);
                        assert_eq!(outs[0].kind, EdgeKind::Call);
                    }
                    _ => {}
                }
            }
            // Return-sites take one return edge, plus the revert of `ext`
            // under return-false lowering.
            for n in g.nodes.iter().filter(|n| n.kind == NodeKind::ReturnSite) {
                let ins: Vec<_> = g.edges.iter().filter(|e| e.to == n.id && e.kind == EdgeKind::Return).collect();
                let from_exit = ins.iter().filter(|e| g.node(e.from).kind == NodeKind::Exit).count();
                let cs = g.call_site_of(n.id).unwrap();
                let callee = g.edge(g.out_edges(cs)[0]).to;
                let callee = &g.functions[g.node(callee).func];
                assert_eq!(from_exit, 1, "{rel} n{}", n.id);
                let expect = if callee.is_ext && g.config.lowlevel_revert == LowLevelRevert::ReturnFalse { 2 } else { 1 };
                assert_eq!(ins.len(), expect, "{rel} n{}", n.id);
            }
        }
    }
}

#[test]
fn revert_nodes_follow_may_revert() {
    for rel in FIXTURES {
        for config in both_modes() {
            let p = program(rel, config);
            let may = compute_may_revert(&p.model, &config);
            for f in &p.graph.functions {
                assert_eq!(f.revert.is_some(), may[&f.name], "{rel} {}", f.name);
            }
        }
    }
}

#[test]
fn dao_may_revert() {
    let p = program("dao.msol", GraphConfig::default());
    let may = compute_may_revert(&p.model, &GraphConfig::default());
    assert!(may["Dao._withdrawFunds"]);
    assert!(may["Dao.withdrawFunds"]);
    assert!(!may["Dao.depositFunds"]);
}

#[test]
fn may_revert_crosses_mutual_recursion() {
    let src = "contract R { uint n;
        function f(uint x) internal { require(x < 9); if (x > 0) { g(x - 1); } }
        function g(uint x) internal { if (x > 0) { f(x - 1); } }
        function run(uint x) public { g(x); } }";
    let unit = parse_source(src).unwrap();
    let model = build_dapp_model(&unit, &[AccountRole::new("a", 1u64)]).unwrap();
    let may = compute_may_revert(&model, &GraphConfig::default());
    assert!(may["R.f"] && may["R.g"] && may["R.run"]);
}

#[test]
fn checked_arithmetic_adds_fault_edges() {
    let p = program("dao.msol", GraphConfig { arithmetic: Arithmetic::Checked, ..GraphConfig::default() });
    let may = compute_may_revert(&p.model, &p.config);
    assert!(may["Dao.depositFunds"]);
}

#[test]
fn ext_dispatches_to_every_exposed_function() {
    let p = program("dao.msol", GraphConfig::default());
    let g = &p.graph;
    let ext = g.ext().unwrap();
    let sites: Vec<_> = g
        .nodes
        .iter()
        .filter(|n| n.func == ext.id && n.kind == NodeKind::CallSite)
        .collect();
    let exposed: usize = p.model.contracts.iter().map(|c| c.state_changing.len()).sum();
    assert_eq!(sites.len(), exposed);
    assert_eq!(g.nodes.iter().filter(|n| n.func == ext.id && n.kind == NodeKind::ReturnSite).count(), exposed);
    let dispatch = g.nodes.iter().find(|n| matches!(n.op, NodeOp::Dispatch)).unwrap();
    assert_eq!(g.out_edges(dispatch.id).len(), exposed + 1);
}

#[test]
fn paper_cyclomatic_values() {
    let dao = program("dao.msol", GraphConfig::default());
    assert_eq!(cyclomatic(&dao.graph, "Dao.withdrawFunds"), 5);
    let m = reachable_metrics(&dao.graph, entry_of(&dao.graph, "Dao.withdrawFunds")).unwrap();
    assert_eq!((m.nodes.len(), m.edges.len()), (24, 27));
    let fish = program("fishtoken.msol", GraphConfig::default());
    assert_eq!(cyclomatic(&fish.graph, "FishToken.transfer"), 5);
    assert_eq!(cyclomatic(&fish.graph, "FishToken.issueTokens"), 5);
}

#[test]
fn graph_and_dot_are_deterministic() {
    for rel in FIXTURES {
        let a = program(rel, GraphConfig::default());
        let b = program(rel, GraphConfig::default());
        assert_eq!(a.graph, b.graph);
        assert_eq!(export_dot(&a.graph), export_dot(&b.graph));
        assert!(export_dot(&a.graph).starts_with("digraph"));
        let json = serde_json::to_string(&a.graph).unwrap();
        let back: Tcfg = serde_json::from_str(&json).unwrap();
        assert_eq!(back, a.graph);
    }
}

#[derive(Debug, Clone)]
enum Shape {
    Step,
    If(Vec<Shape>, Vec<Shape>),
    Require,
    While(Vec<Shape>),
}

fn decisions(body: &[Shape]) -> usize {
    body.iter()
        .map(|s| match s {
            Shape::Step => 0,
            Shape::Require => 1,
            Shape::If(a, b) => 1 + decisions(a) + decisions(b),
            Shape::While(b) => 1 + decisions(b),
        })
        .sum()
}

fn render(body: &[Shape], depth: usize, out: &mut String) {
    for s in body {
        match s {
            Shape::Step => out.push_str("x = x + 1; "),
            Shape::Require => out.push_str("require(x != 7); "),
            Shape::If(a, b) => {
                out.push_str("if (x > 3) { ");
                render(a, depth + 1, out);
                out.push_str("} else { ");
                render(b, depth + 1, out);
                out.push_str("} ");
            }
            Shape::While(b) => {
                out.push_str(&format!("while (c{depth} < 2) {{ c{depth} = c{depth} + 1; "));
                render(b, depth + 1, out);
                out.push_str("} ");
            }
        }
    }
}

fn shape() -> impl Strategy<Value = Vec<Shape>> {
    let leaf = prop_oneof![Just(Shape::Step), Just(Shape::Require)];
    let node = leaf.prop_recursive(3, 16, 3, |inner| {
        prop_oneof![
            2 => Just(Shape::Step),
            1 => Just(Shape::Require),
            1 => (prop::collection::vec(inner.clone(), 0..3), prop::collection::vec(inner.clone(), 0..3))
                .prop_map(|(a, b)| Shape::If(a, b)),
            1 => prop::collection::vec(inner, 0..3).prop_map(Shape::While),
        ]
    });
    prop::collection::vec(node, 0..4)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(128))]

    #[test]
    fn call_free_function_has_decisions_plus_one(body in shape()) {
        let mut text = String::new();
        render(&body, 0, &mut text);
        let src = format!(
            "contract P {{ uint x; uint c0; uint c1; uint c2; uint c3; function f() public {{ {text} }} }}"
        );
        let g = graph_of(&src, GraphConfig::default());
        prop_assert_eq!(cyclomatic(&g, "P.f"), decisions(&body) + 1, "{}", src);
    }
}
