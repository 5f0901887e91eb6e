use std::collections::BTreeSet;

use num_rational::BigRational;
use proptest::prelude::*;

use qsl::expect::{eval_expectation, free_vars_expectation};
use qsl::lawbench::{catalog, replay_witness, run_law_suite, run_law_suite_with, select_laws, DebugHooks, Gen, GenSpec, ProgramFeatures};
use qsl::operational::{expected_reward, Machine, OracleOptions, Opt};
use qsl::parse::{parse_expectation, parse_program, parse_sl};
use qsl::state::{disjoint_union, enumerate_heaps, enumerate_states, heap_partitions};
use qsl::syntax::{eval_arith, eval_guard};
use qsl::{DomainConfig, ExtQ, Heap, Program, ProgState, Q, Stack};

fn spec() -> GenSpec {
    GenSpec::default()
}

fn small_q() -> impl Strategy<Value = Q> {
    (-40i64..40, 1i64..12).prop_map(|(n, d)| Q::new(n, d))
}

fn ext_q() -> impl Strategy<Value = ExtQ> {
    prop_oneof![
        1 => Just(ExtQ::Inf),
        6 => (0i64..40, 1i64..12).prop_map(|(n, d)| ExtQ::ratio(n, d)),
    ]
}

fn big(q: &Q) -> BigRational {
    q.to_big()
}

fn heap_strategy() -> impl Strategy<Value = Heap> {
    proptest::collection::btree_map(1i64..=5, -1i64..=4, 0..=5).prop_map(|cells| {
        let pairs: Vec<(i64, i64)> = cells.into_iter().collect();
        Heap::from_cells(&pairs)
    })
}

fn children(c: &Program) -> Vec<&Program> {
    match c {
        Program::Seq(a, b) | Program::Ite(_, a, b) | Program::PChoice(a, _, b) => vec![a, b],
        Program::While(_, body) => vec![body],
        _ => Vec::new(),
    }
}

fn all_subprograms<'a>(c: &'a Program, out: &mut Vec<&'a Program>) {
    out.push(c);
    for child in children(c) {
        all_subprograms(child, out);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    #[test]
    fn q_arithmetic_matches_big_rationals(a in small_q(), b in small_q()) {
        prop_assert_eq!(big(&a.add(&b)), big(&a) + big(&b));
        prop_assert_eq!(big(&a.sub(&b)), big(&a) - big(&b));
        prop_assert_eq!(big(&a.mul(&b)), big(&a) * big(&b));
        prop_assert_eq!(a.cmp(&b), big(&a).cmp(&big(&b)));
        if !b.is_zero() {
            prop_assert_eq!(big(&a.div(&b)), big(&a) / big(&b));
        }
    }

    #[test]
    fn q_survives_overflowing_integers(a in any::<i64>(), b in any::<i64>()) {
        let (qa, qb) = (Q::from_int(a), Q::from_int(b));
        prop_assert_eq!(big(&qa.add(&qb)), big(&qa) + big(&qb));
        prop_assert_eq!(big(&qa.mul(&qb)), big(&qa) * big(&qb));
    }

    #[test]
    fn extended_semiring_laws(a in ext_q(), b in ext_q(), c in ext_q()) {
        prop_assert_eq!(a.add(&b), b.add(&a));
        prop_assert_eq!(a.mul(&b), b.mul(&a));
        prop_assert_eq!(a.add(&b).add(&c), a.add(&b.add(&c)));
        prop_assert_eq!(a.mul(&b).mul(&c), a.mul(&b.mul(&c)));
        prop_assert_eq!(a.mul(&b.add(&c)), a.mul(&b).add(&a.mul(&c)));
        prop_assert_eq!(a.mul(&ExtQ::zero()), ExtQ::zero());
        prop_assert_eq!(a.max_of(&b) >= a.min_of(&b), true);
        // monus is the least d with a <= b + d
        let d = a.monus(&b);
        prop_assert!(b.add(&d) >= a);
    }

    #[test]
    fn ext_q_json_round_trips(a in ext_q()) {
        let text = serde_json::to_string(&a).unwrap();
        let back: ExtQ = serde_json::from_str(&text).unwrap();
        prop_assert_eq!(back, a);
    }

    #[test]
    fn programs_round_trip_through_the_printer(seed in any::<u64>()) {
        let spec = GenSpec { allow_loops: true, ..spec() };
        let c = Gen::new(&spec, seed).program(5);
        prop_assert_eq!(parse_program(&c.to_string()).unwrap(), c);
    }

    #[test]
    fn expectations_round_trip_through_the_printer(seed in any::<u64>()) {
        let e = Gen::new(&spec(), seed).expectation(3);
        prop_assert_eq!(parse_expectation(&e.to_string()).unwrap(), e);
    }

    #[test]
    fn formulas_round_trip_through_the_printer(seed in any::<u64>()) {
        let phi = Gen::new(&spec(), seed).formula(3);
        prop_assert_eq!(parse_sl(&phi.to_string()).unwrap(), phi);
    }

    #[test]
    fn modified_vars_grow_towards_the_root(seed in any::<u64>()) {
        let spec = GenSpec { allow_loops: true, ..spec() };
        let c = Gen::new(&spec, seed).program(5);
        let mut subs = Vec::new();
        all_subprograms(&c, &mut subs);
        for parent in subs {
            let modified = parent.modified_vars();
            for child in children(parent) {
                prop_assert!(child.modified_vars().is_subset(&modified));
            }
        }
    }

    #[test]
    fn arithmetic_is_deterministic(seed in any::<u64>(), x in -1i64..=4, y in -1i64..=4) {
        let spec = spec();
        let mut g = Gen::new(&spec, seed);
        let e = g.arith();
        let b = g.guard(2);
        let stack = Stack::from_pairs(&[("x", x), ("y", y)]);
        prop_assert_eq!(eval_arith(&e, &stack).ok(), eval_arith(&e, &stack).ok());
        prop_assert_eq!(eval_guard(&b, &stack).ok(), eval_guard(&b, &stack).ok());
    }

    #[test]
    fn partitions_rebuild_the_heap(h in heap_strategy()) {
        let parts = heap_partitions(&h);
        prop_assert_eq!(parts.len(), 1usize << h.len());
        let firsts: BTreeSet<Heap> = parts.iter().map(|(a, _)| a.clone()).collect();
        prop_assert_eq!(firsts.len(), parts.len());
        for (a, b) in &parts {
            prop_assert_eq!(&disjoint_union(a, b).unwrap(), &h);
        }
    }

    #[test]
    fn heap_inclusion_is_a_partial_order(a in heap_strategy(), b in heap_strategy(), c in heap_strategy()) {
        prop_assert!(a.is_subheap_of(&a));
        if a.is_subheap_of(&b) && b.is_subheap_of(&a) {
            prop_assert_eq!(&a, &b);
        }
        if a.is_subheap_of(&b) && b.is_subheap_of(&c) {
            prop_assert!(a.is_subheap_of(&c));
        }
        if a.is_subheap_of(&b) {
            prop_assert_eq!(disjoint_union(&a, &a.complement_in(&b)).unwrap(), b);
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(40))]

    #[test]
    fn transitions_are_distributions(seed in any::<u64>()) {
        let cfg = DomainConfig::tiny();
        let spec = GenSpec { allow_loops: true, ..spec() };
        let c = Gen::new(&spec, seed).program(4);
        let machine = Machine::new(&c, &cfg).unwrap();
        let mut pending: Vec<_> = enumerate_states(&cfg, 2)
            .iter()
            .step_by(37)
            .filter_map(|st| machine.initial(st).ok())
            .collect();
        let mut steps = 0;
        while let Some(conf) = pending.pop() {
            steps += 1;
            if steps > 300 {
                break;
            }
            let Ok(transitions) = machine.step(&conf) else { continue };
            let actions: BTreeSet<u64> = transitions.iter().map(|t| t.action).collect();
            for action in &actions {
                let total = transitions.iter().filter(|t| t.action == *action).fold(Q::zero(), |acc, t| acc.add(&t.prob));
                prop_assert_eq!(total, Q::one());
            }
            if actions.len() > 1 || actions.iter().any(|a| *a != 0) {
                prop_assert!(machine.render_control(&conf.control).contains("new"), "{}", machine.render_control(&conf.control));
            }
            pending.extend(transitions.into_iter().map(|t| t.target));
        }
    }

    #[test]
    fn demonic_reward_is_below_angelic(seed in any::<u64>()) {
        let cfg = DomainConfig::tiny();
        let spec = spec();
        let mut g = Gen::new(&spec, seed);
        let c = g.program(3);
        let post = g.expectation(2);
        let inits: Vec<ProgState> = enumerate_states(&cfg, 2).into_iter().step_by(23).collect();
        let options = OracleOptions::for_config(&cfg);
        let low = expected_reward(Opt::Min, &c, &post, &inits, &cfg, &options).unwrap();
        let high = expected_reward(Opt::Max, &c, &post, &inits, &cfg, &options).unwrap();
        for (l, h) in low.values.iter().zip(&high.values) {
            if let (Ok(l), Ok(h)) = (l, h) {
                prop_assert!(l <= h);
            }
        }
    }

    #[test]
    fn evaluation_ignores_unused_variables(seed in any::<u64>(), pick in 0usize..500) {
        let cfg = DomainConfig::tiny().with_vars(&["x", "y", "z"]);
        let e = Gen::new(&spec(), seed).expectation(2);
        prop_assume!(!free_vars_expectation(&e).contains("z"));
        let heaps = enumerate_heaps(&cfg, 2);
        let heap = heaps[pick % heaps.len()].clone();
        let base = Stack::from_pairs(&[("x", 1), ("y", 2), ("z", 0)]);
        let moved = base.with("z", 3);
        prop_assert_eq!(
            eval_expectation(&e, &ProgState::new(base, heap.clone()), &cfg).ok(),
            eval_expectation(&e, &ProgState::new(moved, heap), &cfg).ok()
        );
    }
}

#[test]
fn law_reports_are_reproducible() {
    let laws = select_laws(&["sepcon.*".to_string(), "wp.monotone".to_string()]).unwrap();
    let strip = |mut v: serde_json::Value| {
        for law in v["laws"].as_array_mut().unwrap() {
            law.as_object_mut().unwrap().remove("elapsed_ms");
        }
        serde_json::to_string(&v).unwrap()
    };
    let spec = GenSpec { seed: 11, ..spec() };
    let a = serde_json::to_value(run_law_suite(&laws, &spec, 15).unwrap()).unwrap();
    let b = serde_json::to_value(run_law_suite(&laws, &spec, 15).unwrap()).unwrap();
    assert_eq!(strip(a), strip(b));
}

#[test]
fn broken_sepcon_is_caught_and_witnesses_replay() {
    let laws = select_laws(&["sepcon.*".to_string(), "sepimp.*".to_string()]).unwrap();
    let spec = GenSpec { seed: 5, ..spec() };
    let hooks = DebugHooks { broken_sepcon: true };
    let report = run_law_suite_with(&laws, &spec, 30, hooks).unwrap();
    assert!(report.total_violations > 0);
    let witnesses: Vec<_> = report.laws.iter().flat_map(|l| &l.witnesses).collect();
    assert!(!witnesses.is_empty());
    for w in witnesses {
        assert!(replay_witness(w, &spec, hooks).unwrap(), "{w:?}");
    }
}

#[test]
fn known_refutation_witness_replays() {
    let laws = select_laws(&["list.ls_split_upper".to_string()]).unwrap();
    let spec = GenSpec { seed: 1, ..spec() };
    let report = run_law_suite(&laws, &spec, 20).unwrap();
    let w = report.laws[0].witnesses.first().expect("cyclic heaps refute the split bound");
    assert!(replay_witness(w, &spec, DebugHooks::default()).unwrap());
    assert_eq!(catalog().iter().filter(|l| l.known_refutation.is_some()).count(), 1);
}

#[test]
fn loop_free_generation_respects_features() {
    let spec = spec();
    for seed in 0..200 {
        let c = Gen::new(&spec, seed).program_with(4, ProgramFeatures { probabilistic: false, alloc: false, loops: false });
        assert!(!c.has_loops() && !c.has_alloc() && !c.is_probabilistic(), "{c}");
    }
}
