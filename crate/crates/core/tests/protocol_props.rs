mod common;

use std::collections::BTreeSet;

use common::*;
use icpsdl::lang::{parse_configuration, parse_global, parse_local};
use icpsdl::protocol::{Action, Direction, LocalProtocol};
use proptest::prelude::*;

const ROLES: [&str; 3] = ["a", "b", "c"];

fn arb_local() -> impl Strategy<Value = LocalProtocol> {
    (any::<u64>(), 0..3usize, 1..6usize)
        .prop_map(|(seed, me, depth)| random_local(&mut rng(seed), ROLES[me], &ROLES, depth, &mut Vec::new()))
}

fn arb_action() -> impl Strategy<Value = Action> {
    (
        0..3usize,
        any::<bool>(),
        prop::sample::select(vec!["x", "y", "L1", "L2"]),
    )
        .prop_map(|(peer, send, payload)| {
            if send {
                Action::send(p(ROLES[peer]), m(payload))
            } else {
                Action::receive(p(ROLES[peer]), m(payload))
            }
        })
}

fn same_set(a: &[LocalProtocol], b: &[LocalProtocol]) -> bool {
    a.iter().all(|x| b.contains(x)) && b.iter().all(|x| a.contains(x))
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(256))]

    #[test]
    fn generated_locals_are_well_formed(t in arb_local()) {
        prop_assert!(t.validate().is_ok(), "{t}");
        prop_assert!(t.size() >= 1);
    }

    #[test]
    fn local_print_parse_round_trip(t in arb_local()) {
        let back = parse_local(&t.to_string()).map_err(|e| TestCaseError::fail(format!("{t}: {e}")))?;
        prop_assert_eq!(back, t);
    }

    #[test]
    fn global_print_parse_round_trip(seed in any::<u64>()) {
        let g = random_global(&mut rng(seed), 6);
        let back = parse_global(&g.to_string()).map_err(|e| TestCaseError::fail(format!("{g}: {e}")))?;
        prop_assert_eq!(back, g);
    }

    #[test]
    fn configuration_print_parse_round_trip(seed in any::<u64>()) {
        let c = random_configuration(&mut rng(seed));
        let back = parse_configuration(&c.to_string()).map_err(|e| TestCaseError::fail(format!("{c}: {e}")))?;
        prop_assert_eq!(back, c);
    }

    #[test]
    fn unfolding_does_not_change_transitions(t in arb_local(), a in arb_action()) {
        if let LocalProtocol::Rec(label, body) = &t {
            let unfolded = body.substitute(&t, label);
            let mut actions = t.initial_actions();
            actions.push(a);
            for a in &actions {
                prop_assert!(same_set(&unfolded.local_step(a), &t.local_step(a)), "{t} on {a}");
            }
        }
    }

    #[test]
    fn substitution_adds_only_the_replacement_peers(t in arb_local(), q in arb_local(), label in prop::sample::select(vec!["r0", "r1", "t"])) {
        let out = t.substitute(&q, &l(label));
        let allowed: BTreeSet<_> = t.participants().union(&q.participants()).cloned().collect();
        prop_assert!(out.participants().is_subset(&allowed));
    }

    #[test]
    fn transitions_are_deterministic(t in arb_local(), a in arb_action()) {
        prop_assert!(t.local_step(&a).len() <= 1);
        for a in t.initial_actions() {
            prop_assert_eq!(t.local_step(&a).len(), 1, "{} on {}", t, a);
        }
    }
}

#[test]
fn choice_steps_follow_each_branch() {
    let t = parse_local("u!signal { ON: end } or { OFF: c!x. end }").unwrap();
    assert_eq!(t.local_step(&Action::send(p("u"), m("ON"))), vec![LocalProtocol::End]);
    assert_eq!(
        t.local_step(&Action::send(p("u"), m("OFF"))),
        vec![LocalProtocol::send(p("c"), m("x"), LocalProtocol::End)]
    );
    assert!(t.local_step(&Action::receive(p("u"), m("ON"))).is_empty());
    assert_eq!(t.choices()[0].direction, Direction::Send);
}

#[test]
fn unguarded_and_unbound_terms_are_rejected_by_the_parser() {
    assert!(parse_local("t. t").is_err());
    assert!(parse_local("a!x. t").is_err());
    assert!(parse_local("u!signal { ON: end } or { ON: end }").is_err());
}
