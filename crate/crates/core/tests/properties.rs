//! Property tests for the core invariants: closure of the value grammar
//! under substitution, clock containment, now-heap membership, and type
//! preservation of emitted values on fuzzed programs.

use std::collections::BTreeSet;

use asyncratt::driver::{compile_default, default_buffer, default_cfg};
use asyncratt::input::value_has_type;
use asyncratt::reactive::MachineState;
use asyncratt::store::Store;
use asyncratt::syntax::{contains_location, is_stable, is_value, subst, Ix, Name, Term, TypeExpr};
use asyncratt::verify::{gen_events, gen_program};
use proptest::prelude::*;
use rand::rngs::StdRng;
use rand::SeedableRng;

/// Closed values of the machine grammar.
fn arb_closed_value() -> impl Strategy<Value = Term> {
    let leaf = prop_oneof![
        Just(Term::Unit),
        Just(Term::Zero),
        (0u64..20).prop_map(Term::nat),
        proptest::num::f64::NORMAL.prop_map(Term::FloatLit),
        Just(Term::lam("z", Term::var("z"))),
        Just(Term::boxed(Term::Zero)),
        Just(Term::Await(Name::new("up"))),
    ];
    leaf.prop_recursive(3, 24, 2, |inner| {
        prop_oneof![
            (inner.clone(), inner.clone()).prop_map(|(a, b)| Term::pair(a, b)),
            inner.clone().prop_map(|a| Term::inj(Ix::I1, a)),
            inner.clone().prop_map(|a| Term::inj(Ix::I2, a)),
            inner.clone().prop_map(Term::into),
            inner.prop_map(Term::suc),
        ]
    })
}

/// Values that may mention the free variable `h`.
fn arb_open_value() -> impl Strategy<Value = Term> {
    let leaf = prop_oneof![
        Just(Term::var("h")),
        Just(Term::Unit),
        Just(Term::Zero),
        Just(Term::lam("z", Term::app(Term::var("z"), Term::var("h")))),
    ];
    leaf.prop_recursive(3, 24, 2, |inner| {
        prop_oneof![
            (inner.clone(), inner.clone()).prop_map(|(a, b)| Term::pair(a, b)),
            inner.clone().prop_map(|a| Term::inj(Ix::I2, a)),
            inner.clone().prop_map(Term::into),
            inner.prop_map(Term::suc),
        ]
    })
}

proptest! {
    #[test]
    fn value_grammar_closed_under_substitution(
        w in arb_open_value(),
        v in arb_closed_value(),
    ) {
        prop_assert!(is_value(&w));
        let out = subst(&w, &v, &Name::new("h"));
        prop_assert!(is_value(&out));
    }
}

#[test]
fn stable_emitted_values_contain_no_locations_and_inhabit_their_types() {
    // emitted batch entries are value-typed, hence stable: they must carry
    // no heap references and must inhabit the declared output types
    let mut rng = StdRng::seed_from_u64(31);
    for _ in 0..8 {
        let src = gen_program(&mut rng, 5);
        let events = gen_events(&mut rng, 30);
        let compiled = compile_default(&src).unwrap();
        let gamma = compiled.elab.gamma_out();
        for (name, ty) in &gamma {
            assert!(is_stable(ty), "output types are value types, hence stable");
            let _ = name;
        }
        let batches = compiled.run(default_buffer(&compiled), &events).unwrap();
        for batch in &batches {
            for (name, v) in batch {
                let (_, ty) = gamma.iter().find(|(n, _)| n == name).unwrap();
                assert!(value_has_type(v, ty), "ill-typed emission on `{name}`");
                assert!(!contains_location(v), "location leaked into `{name}`");
            }
        }
    }
}

#[test]
fn allocated_clocks_stay_within_the_push_channels() {
    let mut rng = StdRng::seed_from_u64(77);
    for _ in 0..6 {
        let src = gen_program(&mut rng, 5);
        let events = gen_events(&mut rng, 25);
        let compiled = compile_default(&src).unwrap();
        let push: BTreeSet<Name> = compiled.elab.delta.push_channels().into_iter().collect();
        let mut machine = compiled
            .machine(default_buffer(&compiled), default_cfg())
            .unwrap();
        machine.init().unwrap();
        for e in &events {
            machine.step(e.clone()).unwrap();
            for loc in machine.live_locations() {
                assert!(
                    loc.clock.iter().all(|c| push.contains(c)),
                    "clock {:?} escapes dom_p",
                    loc.clock
                );
            }
        }
    }
}

#[test]
fn now_heap_only_holds_waiters_on_the_current_channel() {
    let compiled = compile_default(include_str!("../../../programs/gui.art")).unwrap();
    let mut machine = compiled
        .machine(default_buffer(&compiled), default_cfg())
        .unwrap();
    machine.init().unwrap();
    for ch in ["up", "toggle", "up"] {
        machine
            .step_input(asyncratt::reactive::InputEvent {
                channel: Name::new(ch),
                value: Term::Unit,
            })
            .unwrap();
        match machine.state() {
            MachineState::Running {
                store: Store::Two { now, channel, .. },
                ..
            } => {
                assert!(now.all_wait_on(channel));
            }
            other => panic!("expected a two-heap store, got {other:?}"),
        }
        machine.step_output().unwrap();
    }
}

#[test]
fn output_types_are_checked_as_value_types() {
    let src = "inputs\n  up : p Unit\noutputs\n  f : Nat -> Nat = const (\\n. n)\n";
    let err = compile_default(src).unwrap_err();
    assert!(err.to_string().contains("NotValueType"), "{err}");
    let _ = TypeExpr::Nat;
}
