// SPDX-License-Identifier: Apache-2.0

mod common;

use common::*;
use num_bigint::BigUint;
use proptest::prelude::*;
use txbasis::basis::{Budgets, Terminal};
use txbasis::frontend::{build_dapp_model, parse_source, AccountRole};
use txbasis::graph::GraphConfig;
use txbasis::interactions::{
    compatible_paths, count_requirements, enumerate_requirements, enumerate_tuples, generate_all_bases, Bases,
    InteractionError, Outcome, TxTuple,
};

#[test]
fn dao_with_one_account_has_three_tuples() {
    let unit = parse_source(&fixture("dao.msol")).unwrap();
    let model = build_dapp_model(&unit, &[AccountRole::new("a", 10u64)]).unwrap();
    let g = txbasis::graph::build_tcfg(&model, &GraphConfig::default()).unwrap();
    let bases = generate_all_bases(&g, Budgets::default()).unwrap();
    let tuples = enumerate_tuples(&model, &bases).unwrap();
    let names: Vec<String> = tuples.iter().map(|t| t.to_string()).collect();
    assert_eq!(
        names,
        [
            "(a, Dao, depositFunds, success)",
            "(a, Dao, withdrawFunds, success)",
            "(a, Dao, withdrawFunds, revert)"
        ]
    );
}

#[test]
fn two_one_one_squared_is_sixteen() {
    let mut bases = Bases::new();
    bases.insert("C.f".into(), synthetic_basis("C.f", &[Terminal::Exit, Terminal::Exit]));
    bases.insert("C.g".into(), synthetic_basis("C.g", &[Terminal::Exit, Terminal::Revert]));
    let tuples = synthetic_tuples(1, &bases);
    let per: Vec<usize> = tuples.iter().map(|t| compatible_paths(&bases[&t.qualified()], t.outcome).len()).collect();
    assert_eq!(per, [2, 1, 1]);
    assert_eq!(count_requirements(&tuples, &bases, 2).unwrap(), BigUint::from(16u32));
    let set = enumerate_requirements(&tuples, &bases, 2).unwrap();
    assert_eq!(set.total(), 16);
    assert_eq!(brute_requirements(&set.choices, 2).len(), 16);
}

#[test]
fn zero_length_is_rejected() {
    let mut bases = Bases::new();
    bases.insert("C.f".into(), synthetic_basis("C.f", &[Terminal::Exit]));
    let tuples = synthetic_tuples(1, &bases);
    assert!(matches!(enumerate_requirements(&tuples, &bases, 0), Err(InteractionError::ZeroLength)));
}

#[test]
fn missing_basis_is_reported() {
    let bases = Bases::new();
    let t = TxTuple {
        account: "a".into(),
        contract: "C".into(),
        function: "f".into(),
        outcome: Outcome::Success,
    };
    assert!(matches!(count_requirements(&[t], &bases, 1), Err(InteractionError::MissingBasis(_))));
}

#[test]
fn fixture_requirements_match_closed_form_and_terminals() {
    for rel in FIXTURES {
        let p = program(rel, GraphConfig::default());
        let bases = generate_all_bases(&p.graph, Budgets::default()).unwrap();
        let tuples = enumerate_tuples(&p.model, &bases).unwrap();
        for k in 1..=2 {
            let set = enumerate_requirements(&tuples, &bases, k).unwrap();
            assert_eq!(BigUint::from(set.total()), count_requirements(&tuples, &bases, k).unwrap(), "{rel} k={k}");
            for r in &set.requirements {
                assert_eq!(r.tuples.len(), k);
                for (&t, &pi) in r.tuples.iter().zip(&r.paths) {
                    let t = &set.tuples[t];
                    assert_eq!(bases[&t.qualified()].paths[pi].terminal, t.outcome.terminal());
                }
            }
        }
    }
}

fn instance() -> impl Strategy<Value = (usize, Vec<Vec<bool>>, usize)> {
    let function = prop::collection::vec(any::<bool>(), 1..4);
    (1usize..3, prop::collection::vec(function, 1..4), 1usize..4)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(100))]

    #[test]
    fn enumeration_matches_brute_force_and_closed_form((accounts, functions, k) in instance()) {
        let mut bases = Bases::new();
        for (i, reverts) in functions.iter().enumerate() {
            let name = format!("C.f{i}");
            let terminals: Vec<Terminal> =
                reverts.iter().map(|&r| if r { Terminal::Revert } else { Terminal::Exit }).collect();
            bases.insert(name.clone(), synthetic_basis(&name, &terminals));
        }
        let tuples = synthetic_tuples(accounts, &bases);
        let set = enumerate_requirements(&tuples, &bases, k).unwrap();
        let brute = brute_requirements(&set.choices, k);
        prop_assert_eq!(set.total(), brute.len());
        prop_assert_eq!(BigUint::from(brute.len()), count_requirements(&tuples, &bases, k).unwrap());
        for (r, (ts, ps)) in set.requirements.iter().zip(&brute) {
            prop_assert_eq!(&r.tuples, ts);
            prop_assert_eq!(&r.paths, ps);
        }
        for (i, r) in set.requirements.iter().enumerate() {
            prop_assert_eq!(r.id, i);
        }
    }
}
