use std::collections::BTreeSet;

use caseplan::abstraction::{abstract_atoms_of, verify_abstraction};
use caseplan::domain::{applicable_instantiations, execute_plan, State};
use caseplan::logic::{Atom, ProofBudget, Term};
use caseplan::toy::{counting_fixture, cube_fixture};

fn val(e: &str, b: i64) -> Atom {
    Atom::new("val", vec![Term::constant(e), Term::Int(b)])
}

fn cube_state(bits: [i64; 3]) -> State {
    State::new(vec![
        val("e1", bits[0]),
        val("e2", bits[1]),
        val("e3", bits[2]),
    ])
}

#[test]
fn counting_golden_case_executes() {
    let fx = counting_fixture();
    let case = &fx.cases["counting_golden"];
    let states = execute_plan(case, &fx.concrete, ProofBudget::default()).unwrap();
    assert_eq!(states.len(), 9);
    assert_eq!(
        states[8],
        State::new(vec![Atom::new("value", vec![Term::Int(8)])])
    );
}

#[test]
fn counting_golden_abstraction_verifies() {
    let fx = counting_fixture();
    let ca = &fx.abstract_cases["counting_ca"];
    let ok = verify_abstraction(
        ca,
        &fx.cases["counting_golden"],
        &ca.alpha,
        &ca.beta,
        &fx.concrete,
        &fx.abstract_dom,
        &fx.theory,
        ProofBudget::default(),
    )
    .unwrap();
    assert!(ok);
}

#[test]
fn counting_value_12_has_no_abstraction() {
    let fx = counting_fixture();
    let state = State::new(vec![Atom::new("value", vec![Term::Int(12)])]);
    let atoms = abstract_atoms_of(
        &state,
        &fx.abstract_dom,
        &fx.concrete.rules,
        &fx.theory,
        ProofBudget::default(),
    )
    .unwrap();
    assert!(atoms.is_empty());
}

#[test]
fn cube_golden_case_executes_through_known_path() {
    let fx = cube_fixture();
    let case = &fx.cases["cube_golden"];
    let states = execute_plan(case, &fx.concrete, ProofBudget::default()).unwrap();
    let expected = [
        [0, 0, 0],
        [0, 1, 0],
        [1, 1, 0],
        [1, 1, 1],
        [1, 0, 1],
        [0, 0, 1],
    ];
    assert_eq!(states.len(), 6);
    for (s, bits) in states.iter().zip(expected.iter()) {
        assert_eq!(*s, cube_state(*bits));
    }
}

/// The manipulation guards of the cube's six operators on all eight states:
/// e1 iff e2 xor e3; e2 iff e1 = e3; e3 iff e1 or e2.
#[test]
fn cube_guards_match_truth_conditions_on_all_states() {
    let fx = cube_fixture();
    for mask in 0..8u8 {
        let bits = [
            (mask >> 2 & 1) as i64,
            (mask >> 1 & 1) as i64,
            (mask & 1) as i64,
        ];
        let state = cube_state(bits);
        let want = [
            bits[1] != bits[2],
            bits[0] == bits[2],
            bits[0] == 1 || bits[1] == 1,
        ];
        for (k, manipulable) in want.iter().enumerate() {
            for dir in ["add", "del"] {
                let name = format!("{}_e{}", dir, k + 1);
                let schema = fx
                    .concrete
                    .operator(caseplan::logic::Sym::new(&name))
                    .unwrap();
                let ops = applicable_instantiations(
                    &state,
                    schema,
                    &fx.concrete.rules,
                    ProofBudget::default(),
                )
                .unwrap();
                let polarity_ok = (dir == "add" && bits[k] == 0) || (dir == "del" && bits[k] == 1);
                assert_eq!(
                    !ops.is_empty(),
                    *manipulable && polarity_ok,
                    "operator {} on state {:?}",
                    name,
                    bits
                );
            }
        }
    }
}

/// Each of the eight states derives exactly one of a1..a4.
#[test]
fn cube_theory_partitions_the_states() {
    let fx = cube_fixture();
    for mask in 0..8u8 {
        let bits = [
            (mask >> 2 & 1) as i64,
            (mask >> 1 & 1) as i64,
            (mask & 1) as i64,
        ];
        let atoms = abstract_atoms_of(
            &cube_state(bits),
            &fx.abstract_dom,
            &fx.concrete.rules,
            &fx.theory,
            ProofBudget::default(),
        )
        .unwrap();
        let partition: Vec<&Atom> = atoms
            .iter()
            .filter(|a| ["a1", "a2", "a3", "a4"].contains(&a.pred.as_str()))
            .collect();
        assert_eq!(partition.len(), 1, "state {:?} derives {:?}", bits, atoms);
    }
}

#[test]
fn cube_known_supersets() {
    let fx = cube_fixture();
    let abs = |bits: [i64; 3]| -> BTreeSet<String> {
        abstract_atoms_of(
            &cube_state(bits),
            &fx.abstract_dom,
            &fx.concrete.rules,
            &fx.theory,
            ProofBudget::default(),
        )
        .unwrap()
        .iter()
        .map(|a| a.to_string())
        .collect()
    };
    let set =
        |names: &[&str]| -> BTreeSet<String> { names.iter().map(|s| s.to_string()).collect() };
    assert_eq!(abs([1, 1, 1]), set(&["a3", "a5", "a6"]));
    assert_eq!(abs([0, 0, 0]), set(&["a1"]));
    assert_eq!(abs([1, 1, 0]), set(&["a2", "a5"]));
    assert_eq!(abs([0, 1, 0]), set(&["a1", "a5"]));
    assert_eq!(abs([1, 0, 0]), set(&["a4"]));
}

#[test]
fn cube_golden_abstractions_verify() {
    let fx = cube_fixture();
    for name in ["cube_ca1", "cube_ca2"] {
        let ca = &fx.abstract_cases[name];
        let ok = verify_abstraction(
            ca,
            &fx.cases["cube_golden"],
            &ca.alpha,
            &ca.beta,
            &fx.concrete,
            &fx.abstract_dom,
            &fx.theory,
            ProofBudget::default(),
        )
        .unwrap();
        assert!(ok, "golden abstraction {} does not verify", name);
    }
}

#[test]
fn cube_ca1_with_wrong_beta_fails_verification() {
    let fx = cube_fixture();
    let ca = &fx.abstract_cases["cube_ca1"];
    let bad_beta = vec![0, 1, 3, 5];
    let ok = verify_abstraction(
        ca,
        &fx.cases["cube_golden"],
        &ca.alpha,
        &bad_beta,
        &fx.concrete,
        &fx.abstract_dom,
        &fx.theory,
        ProofBudget::default(),
    )
    .unwrap();
    assert!(!ok);
}
