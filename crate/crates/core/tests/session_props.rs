mod common;

use std::collections::BTreeSet;

use common::*;
use icpsdl::lang::{parse_configuration, parse_global};
use icpsdl::session::{compose, is_deadlock_free, is_live, project, project_all, LocalConfiguration};
use proptest::prelude::*;

const BUDGET: usize = 50_000;

fn domain(c: &LocalConfiguration) -> BTreeSet<String> {
    c.participants().map(|q| q.to_string()).collect()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    #[test]
    fn projections_are_live(seed in any::<u64>()) {
        let (g, c) = random_projectable_global(&mut rng(seed), 8);
        let v = is_live(&c, BUDGET);
        prop_assert!(v.holds(), "{}: {}", g, v);
    }

    #[test]
    fn compose_inverts_project_on_canonical_globals(seed in any::<u64>()) {
        let (_, c) = random_projectable_global(&mut rng(seed), 8);
        let g = compose(&c).map_err(|e| TestCaseError::fail(e.to_string()))?;
        let roles: Vec<_> = c.participants().cloned().collect();
        let c2 = project(&g, &roles).map_err(|e| TestCaseError::fail(e.to_string()))?;
        prop_assert_eq!(&c2, &c);
        prop_assert_eq!(compose(&c2).map_err(|e| TestCaseError::fail(e.to_string()))?, g);
    }

    #[test]
    fn project_inverts_compose(seed in any::<u64>()) {
        let c = random_configuration(&mut rng(seed));
        if let Ok(g) = compose(&c) {
            let roles: Vec<_> = c.participants().cloned().collect();
            let back = project(&g, &roles).map_err(|e| TestCaseError::fail(format!("{g}: {e}")))?;
            prop_assert_eq!(back, c);
        }
    }

    #[test]
    fn liveness_implies_deadlock_freedom(seed in any::<u64>()) {
        let c = random_configuration(&mut rng(seed));
        if is_live(&c, BUDGET).holds() {
            prop_assert!(is_deadlock_free(&c, BUDGET).holds(), "{}", c);
        }
    }

    #[test]
    fn composable_configurations_are_live(seed in any::<u64>()) {
        let c = random_configuration(&mut rng(seed));
        if compose(&c).is_ok() {
            prop_assert!(is_live(&c, BUDGET).holds(), "{}", c);
        }
    }

    #[test]
    fn communication_preserves_the_domain(seed in any::<u64>()) {
        let mut c = random_configuration(&mut rng(seed));
        let before = domain(&c);
        for _ in 0..10 {
            let Some(a) = c.enabled().into_iter().next() else { break };
            c = c.comm_step(&a).expect("enabled actions step");
            prop_assert_eq!(domain(&c), before.clone());
        }
    }
}

#[test]
fn fig3_pair_composes_and_projects() {
    let lconfig = parse_configuration(
        "local {
           s1 = loop. t.tank_mass!flow. loop
           s2 = loop. t.tank_mass!flow. loop
           t.tank_mass = loop. s1?flow. s2?flow. controller!head. loop
           controller = loop. t.tank_mass?head. u!signal { ON: loop } or { OFF: loop }
           u = loop. controller?signal { ON: loop } or { OFF: loop }
         }",
    )
    .unwrap();
    let gconfig = parse_global(
        "loop. s1->t.tank_mass:flow. s2->t.tank_mass:flow. t.tank_mass->controller:head.
         controller->u:signal { OFF: loop } or { ON: loop }",
    )
    .unwrap();
    assert_eq!(compose(&lconfig).unwrap(), gconfig);
    assert_eq!(project_all(&gconfig).unwrap(), lconfig);
    assert!(is_live(&lconfig, BUDGET).holds());
}

#[test]
fn mismatched_payload_fails_composition_and_liveness() {
    let c = parse_configuration("local { a = b!x. end  b = a?y. end }").unwrap();
    assert!(compose(&c).is_err());
    assert!(is_live(&c, BUDGET).is_violated());
    assert!(is_deadlock_free(&c, BUDGET).is_violated());
}

#[test]
fn starved_role_is_deadlock_free_but_not_live() {
    let c = parse_configuration("local { s = t. c!flow. t  c = t. s?flow. t  e = c!head. end }").unwrap();
    assert!(is_deadlock_free(&c, BUDGET).holds());
    assert!(is_live(&c, BUDGET).is_violated());
    assert!(compose(&c).is_err());
}

#[test]
fn budget_is_reported_when_exhausted() {
    let c = chain(40);
    let v = is_live(&c, 3);
    assert!(!v.holds() && !v.is_violated(), "{v}");
}
