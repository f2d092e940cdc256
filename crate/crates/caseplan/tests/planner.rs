use caseplan::abstraction::{pabs, PabsBudgets};
use caseplan::domain::{execute_plan, goal_satisfied, PlanningCase, Problem, State};
use caseplan::logic::{Atom, ProofBudget, Term};
use caseplan::planner::{
    is_applicable, reconstruct, refine_dfid, retrieve, solve_hierarchical, solve_pure,
    solve_with_cases, CaseBase, SearchBudget, SolveError, TheoryContext,
};
use caseplan::toy::{counting_fixture, cube_fixture, FixtureBundle};

fn ctx(fx: &FixtureBundle) -> TheoryContext<'_> {
    TheoryContext {
        concrete: &fx.concrete,
        abstract_dom: &fx.abstract_dom,
        theory: &fx.theory,
    }
}

fn assert_solves(
    problem: &Problem,
    plan: &[caseplan::domain::InstantiatedOperator],
    fx: &FixtureBundle,
) {
    let case = PlanningCase {
        problem: problem.clone(),
        plan: plan.to_vec(),
    };
    let states = execute_plan(&case, &fx.concrete, ProofBudget::default()).unwrap();
    assert!(goal_satisfied(states.last().unwrap(), &problem.goal));
}

#[test]
fn pure_search_solves_counting_in_eight_steps() {
    let fx = counting_fixture();
    let problem = &fx.problems["counting_0_8"];
    let solution = solve_pure(problem, &fx.concrete, SearchBudget::default()).unwrap();
    assert_eq!(solution.plan.len(), 8);
    assert_solves(problem, &solution.plan, &fx);
}

#[test]
fn pure_search_solves_cube_x_in_five_steps() {
    let fx = cube_fixture();
    let problem = &fx.problems["cube_x"];
    let solution = solve_pure(problem, &fx.concrete, SearchBudget::default()).unwrap();
    // 001 is five guarded flips away from 000; DFID finds a shortest plan.
    assert_eq!(solution.plan.len(), 5);
    assert_solves(problem, &solution.plan, &fx);
}

#[test]
fn pure_search_reports_unsolved_with_expansion_count() {
    let fx = counting_fixture();
    let problem = Problem {
        initial: State::new(vec![Atom::new("value", vec![Term::Int(0)])]),
        goal: State::new(vec![Atom::new("value", vec![Term::Int(-1)])]),
    };
    let budget = SearchBudget {
        deep_max: 10,
        ..SearchBudget::default()
    };
    match solve_pure(&problem, &fx.concrete, budget) {
        Err(SolveError::Unsolved { expansions }) => assert!(expansions > 0),
        other => panic!("expected Unsolved, got {:?}", other.map(|s| s.plan.len())),
    }
}

#[test]
fn pure_search_respects_the_expansion_budget() {
    let fx = counting_fixture();
    let problem = &fx.problems["counting_0_8"];
    let budget = SearchBudget {
        max_expansions: 5,
        ..SearchBudget::default()
    };
    match solve_pure(problem, &fx.concrete, budget) {
        Err(SolveError::BudgetExceeded { expansions }) => assert!(expansions > 5),
        other => panic!(
            "expected BudgetExceeded, got {:?}",
            other.map(|s| s.plan.len())
        ),
    }
}

#[test]
fn cube_ca1_is_applicable_to_y_but_ca2_is_not() {
    let fx = cube_fixture();
    let problem = &fx.problems["cube_y"];
    let ca1 = &fx.abstract_cases["cube_ca1"];
    let ca2 = &fx.abstract_cases["cube_ca2"];
    assert!(is_applicable(ca1, problem, &ctx(&fx), ProofBudget::default()).unwrap());
    assert!(!is_applicable(ca2, problem, &ctx(&fx), ProofBudget::default()).unwrap());
}

#[test]
fn retrieve_returns_only_applicable_cases_in_base_order() {
    let fx = cube_fixture();
    let mut base = CaseBase::new();
    base.insert("cube_ca2".into(), fx.abstract_cases["cube_ca2"].clone());
    base.insert("cube_ca1".into(), fx.abstract_cases["cube_ca1"].clone());
    let hits = retrieve(
        &base,
        &fx.problems["cube_y"],
        &ctx(&fx),
        ProofBudget::default(),
    )
    .unwrap();
    let names: Vec<&str> = hits.iter().map(|(n, _)| n.as_str()).collect();
    assert_eq!(names, vec!["cube_ca1"]);
}

#[test]
fn case_base_orders_by_descending_plan_length_and_dedupes() {
    let fx = cube_fixture();
    let learned = pabs(
        &fx.cases["cube_golden"],
        &fx.concrete,
        &fx.abstract_dom,
        &fx.theory,
        PabsBudgets::default(),
    )
    .unwrap();
    let mut base = CaseBase::new();
    for (i, case) in learned.iter().enumerate() {
        base.insert(format!("c{}", i), case.clone());
    }
    let before = base.len();
    for (i, case) in learned.iter().enumerate() {
        base.insert(format!("dup{}", i), case.clone());
    }
    assert_eq!(base.len(), before, "duplicate keys must not grow the base");
    let lengths: Vec<usize> = base.iter().map(|(_, c)| c.plan.len()).collect();
    let mut sorted = lengths.clone();
    sorted.sort_by(|a, b| b.cmp(a));
    assert_eq!(lengths, sorted);
}

#[test]
fn refining_ca1_on_y_splits_into_known_segments() {
    let fx = cube_fixture();
    let problem = &fx.problems["cube_y"];
    let ca1 = &fx.abstract_cases["cube_ca1"];
    let (states, alpha) = reconstruct(ca1, &fx.abstract_dom, ProofBudget::default()).unwrap();
    let solution = refine_dfid(
        &problem.initial,
        &states[1..states.len() - 1],
        &alpha,
        &problem.goal,
        &ctx(&fx),
        SearchBudget::default(),
    )
    .unwrap();
    // 000 ->2 110 (a2) ->1 111 (a3) ->2 100 (a4 and the concrete goal).
    assert_eq!(solution.stats.segment_lengths, vec![2, 1, 2]);
    assert_eq!(solution.plan.len(), 5);
    assert_solves(problem, &solution.plan, &fx);
    assert_eq!(
        solution.stats.segment_expansions.iter().sum::<u64>(),
        solution.stats.expansions
    );
}

#[test]
fn case_based_solving_uses_ca1_for_y() {
    let fx = cube_fixture();
    let mut base = CaseBase::new();
    base.insert("cube_ca1".into(), fx.abstract_cases["cube_ca1"].clone());
    base.insert("cube_ca2".into(), fx.abstract_cases["cube_ca2"].clone());
    let problem = &fx.problems["cube_y"];
    let solution = solve_with_cases(problem, &base, &ctx(&fx), SearchBudget::default()).unwrap();
    assert_eq!(solution.stats.case_used.as_deref(), Some("cube_ca1"));
    assert_solves(problem, &solution.plan, &fx);
}

/// Replay guarantee: a problem whose solution a case was learned from is
/// solvable again with that case base.
#[test]
fn learned_cases_replay_their_source_problems() {
    for fx in [cube_fixture(), counting_fixture()] {
        for case in fx.cases.values() {
            let learned = pabs(
                case,
                &fx.concrete,
                &fx.abstract_dom,
                &fx.theory,
                PabsBudgets::default(),
            )
            .unwrap();
            let mut base = CaseBase::new();
            for (i, c) in learned.iter().enumerate() {
                base.insert(format!("c{}", i), c.clone());
            }
            let solution =
                solve_with_cases(&case.problem, &base, &ctx(&fx), SearchBudget::default()).unwrap();
            assert_solves(&case.problem, &solution.plan, &fx);
        }
    }
}

#[test]
fn hierarchical_solving_counts_to_eight_via_the_abstract_plan() {
    let fx = counting_fixture();
    let problem = &fx.problems["counting_0_8"];
    let solution = solve_hierarchical(problem, &ctx(&fx), SearchBudget::default()).unwrap();
    assert_eq!(solution.plan.len(), 8);
    assert_solves(problem, &solution.plan, &fx);
    // The abstract plan low -> medium -> high has one intermediate state,
    // splitting the search into two four-step halves.
    assert_eq!(solution.stats.segment_lengths, vec![4, 4]);
}

#[test]
fn hierarchical_solving_handles_the_cube() {
    let fx = cube_fixture();
    let budget = SearchBudget {
        deep_max: 6,
        ..SearchBudget::default()
    };
    for name in ["cube_y", "cube_z"] {
        let problem = &fx.problems[name];
        let solution = solve_hierarchical(problem, &ctx(&fx), budget).unwrap();
        assert_solves(problem, &solution.plan, &fx);
    }
}

/// For the goal 001 every abstract goal state needs both a4 and a6, which
/// forces a6 into the image; the intermediate image {a3} then has no
/// concrete counterpart (every a3 state also derives a6), so every abstract
/// plan fails to refine and the solver falls back to pure search.
#[test]
fn hierarchical_solving_falls_back_to_pure_search_on_cube_x() {
    let fx = cube_fixture();
    let budget = SearchBudget {
        deep_max: 5,
        ..SearchBudget::default()
    };
    let problem = &fx.problems["cube_x"];
    let solution = solve_hierarchical(problem, &ctx(&fx), budget).unwrap();
    assert!(solution.stats.refinement_failures > 0);
    assert_eq!(solution.plan.len(), 5);
    assert_solves(problem, &solution.plan, &fx);
}

#[test]
fn solving_is_deterministic() {
    let fx = cube_fixture();
    let problem = &fx.problems["cube_x"];
    let a = solve_pure(problem, &fx.concrete, SearchBudget::default()).unwrap();
    let b = solve_pure(problem, &fx.concrete, SearchBudget::default()).unwrap();
    assert_eq!(a.plan, b.plan);
    assert_eq!(a.stats.expansions, b.stats.expansions);
    let hb = SearchBudget {
        deep_max: 6,
        ..SearchBudget::default()
    };
    let problem = &fx.problems["cube_y"];
    let h1 = solve_hierarchical(problem, &ctx(&fx), hb).unwrap();
    let h2 = solve_hierarchical(problem, &ctx(&fx), hb).unwrap();
    assert_eq!(h1.plan, h2.plan);
    assert_eq!(h1.stats.expansions, h2.stats.expansions);
}

#[test]
fn empty_case_base_falls_back_to_pure_search() {
    let fx = cube_fixture();
    let base = CaseBase::new();
    let problem = &fx.problems["cube_x"];
    let solution = solve_with_cases(problem, &base, &ctx(&fx), SearchBudget::default()).unwrap();
    assert_eq!(solution.stats.case_used, None);
    assert_eq!(solution.plan.len(), 5);
}
