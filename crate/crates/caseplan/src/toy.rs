//! The two bundled pedagogical domains: counting (an integer counter with a
//! qualitative-level abstraction) and the 3-bit cube (guarded bit flips with
//! a partition abstraction). The fixture files under `fixtures/` are the
//! single source of truth; the constructors parse them.

use std::collections::BTreeMap;

use crate::abstraction::{AbstractCase, AbstractionTheory};
use crate::domain::{Domain, OperatorSchema, PlanningCase, Problem};
use crate::dsl;
use crate::logic::{Atom, Sym, Term};

/// A parsed fixture: both domain levels, the abstraction theory, and the
/// named problems and golden cases.
pub struct FixtureBundle {
    pub concrete: Domain,
    pub abstract_dom: Domain,
    pub theory: AbstractionTheory,
    pub problems: BTreeMap<String, Problem>,
    pub cases: BTreeMap<String, PlanningCase>,
    pub abstract_cases: BTreeMap<String, AbstractCase>,
}

fn parse_bundle(
    concrete_src: &str,
    abstract_src: &str,
    theory_src: &str,
    problem_srcs: &[&str],
    case_srcs: &[&str],
    abstract_case_srcs: &[&str],
) -> FixtureBundle {
    let concrete = dsl::parse_domain(concrete_src).expect("bundled concrete domain invalid");
    let abstract_dom = dsl::parse_domain(abstract_src).expect("bundled abstract domain invalid");
    let theory =
        dsl::parse_theory(theory_src, &concrete, &abstract_dom).expect("bundled theory invalid");
    let mut problems = BTreeMap::new();
    for src in problem_srcs {
        let (name, p) = dsl::parse_problem(src, &concrete).expect("bundled problem invalid");
        problems.insert(name, p);
    }
    let mut cases = BTreeMap::new();
    for src in case_srcs {
        let (name, c, _) = dsl::parse_case(src, &concrete).expect("bundled case invalid");
        cases.insert(name, c);
    }
    let mut abstract_cases = BTreeMap::new();
    for src in abstract_case_srcs {
        let (name, c, meta) =
            dsl::parse_case(src, &abstract_dom).expect("bundled abstract case invalid");
        abstract_cases.insert(
            name,
            AbstractCase {
                problem: c.problem,
                plan: c.plan,
                alpha: meta.alpha.into_iter().collect(),
                beta: meta.beta,
                source: meta.source,
            },
        );
    }
    FixtureBundle {
        concrete,
        abstract_dom,
        theory,
        problems,
        cases,
        abstract_cases,
    }
}

/// The counting fixture: essential `value/1`, one `inc` operator, and the
/// qualitative levels low/medium/high as the abstract domain.
pub fn counting_fixture() -> FixtureBundle {
    parse_bundle(
        include_str!("../fixtures/counting.pdom"),
        include_str!("../fixtures/counting_abs.pdom"),
        include_str!("../fixtures/counting.pabs"),
        &[include_str!("../fixtures/counting_0_8.pprob")],
        &[include_str!("../fixtures/counting_golden.pcase")],
        &[include_str!("../fixtures/counting_ca.pcase")],
    )
}

/// The cube fixture: explicit-polarity bits with manipulation guards, the
/// a1..a6 abstraction, the golden five-step case, and the problems X
/// (000 to 001), Y (000 to 100), and Z (011 to 101).
pub fn cube_fixture() -> FixtureBundle {
    parse_bundle(
        include_str!("../fixtures/cube.pdom"),
        include_str!("../fixtures/cube_abs.pdom"),
        include_str!("../fixtures/cube.pabs"),
        &[
            include_str!("../fixtures/cube_x.pprob"),
            include_str!("../fixtures/cube_y.pprob"),
            include_str!("../fixtures/cube_z.pprob"),
        ],
        &[include_str!("../fixtures/cube_golden.pcase")],
        &[
            include_str!("../fixtures/cube_ca1.pcase"),
            include_str!("../fixtures/cube_ca2.pcase"),
        ],
    )
}

/// Every bundled fixture source, for corpus-wide DSL tests.
pub fn fixture_corpus() -> Vec<(&'static str, &'static str)> {
    vec![
        ("counting.pdom", include_str!("../fixtures/counting.pdom")),
        (
            "counting_abs.pdom",
            include_str!("../fixtures/counting_abs.pdom"),
        ),
        ("counting.pabs", include_str!("../fixtures/counting.pabs")),
        (
            "counting_0_8.pprob",
            include_str!("../fixtures/counting_0_8.pprob"),
        ),
        (
            "counting_golden.pcase",
            include_str!("../fixtures/counting_golden.pcase"),
        ),
        (
            "counting_ca.pcase",
            include_str!("../fixtures/counting_ca.pcase"),
        ),
        ("cube.pdom", include_str!("../fixtures/cube.pdom")),
        ("cube_abs.pdom", include_str!("../fixtures/cube_abs.pdom")),
        ("cube.pabs", include_str!("../fixtures/cube.pabs")),
        ("cube_x.pprob", include_str!("../fixtures/cube_x.pprob")),
        ("cube_y.pprob", include_str!("../fixtures/cube_y.pprob")),
        ("cube_z.pprob", include_str!("../fixtures/cube_z.pprob")),
        (
            "cube_golden.pcase",
            include_str!("../fixtures/cube_golden.pcase"),
        ),
        ("cube_ca1.pcase", include_str!("../fixtures/cube_ca1.pcase")),
        ("cube_ca2.pcase", include_str!("../fixtures/cube_ca2.pcase")),
    ]
}

/// Adds `k` inert distractor operators to a copy of the counting concrete
/// domain. Each distractor sets a one-off marker atom, so it is applicable
/// (inflating the branching factor) but never helps reach a counting goal.
pub fn counting_with_distractors(concrete: &Domain, k: usize) -> Domain {
    let mut domain = concrete.clone();
    domain.essentials.push((Sym::new("marker"), 1));
    for i in 0..k {
        let tag = Term::constant(&format!("m{}", i));
        domain.operators.push(OperatorSchema {
            name: Sym::new(&format!("distract_{}", i)),
            params: vec![],
            pre: vec![Atom::new(
                "naf",
                vec![Term::comp("marker", vec![tag.clone()])],
            )],
            add: vec![Atom::new("marker", vec![tag])],
            del: vec![],
        });
    }
    domain
}
