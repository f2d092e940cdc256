//! Shared test helpers: a naive bottom-up (fixpoint) evaluator used as an
//! independent oracle for the SLD engine on function-free programs, and a
//! generator of random stratified Datalog programs.

#![allow(dead_code)]

use std::collections::BTreeSet;

use caseplan::logic::{Atom, HornClause, Program, Subst, Term};
use rand::Rng;

fn match_term(pat: &Term, val: &Term, s: &mut Subst) -> bool {
    match pat {
        Term::Var(name, g) => match s.get(&(*name, *g)) {
            Some(bound) => bound == val,
            None => {
                s.bind((*name, *g), val.clone());
                true
            }
        },
        _ => pat == val,
    }
}

fn match_atom(pat: &Atom, val: &Atom, s: &Subst) -> Option<Subst> {
    if pat.pred != val.pred || pat.args.len() != val.args.len() {
        return None;
    }
    let mut s = s.clone();
    for (p, v) in pat.args.iter().zip(val.args.iter()) {
        if !match_term(&s.apply(p), v, &mut s) {
            return None;
        }
    }
    Some(s)
}

/// Least Herbrand model of a function-free program, computed by naive
/// fixpoint iteration. Rules must be range-restricted (head variables all
/// occur in the body).
pub fn bottom_up_model(program: &Program) -> BTreeSet<Atom> {
    let mut model: BTreeSet<Atom> = program.state().iter().cloned().collect();
    for c in program.clauses() {
        if c.body.is_empty() {
            assert!(c.head.is_ground(), "non-ground fact {}", c.head);
            model.insert(c.head.clone());
        }
    }
    loop {
        let mut added = false;
        for c in program.clauses() {
            if c.body.is_empty() {
                continue;
            }
            let mut frontier = vec![Subst::new()];
            for b in &c.body {
                let mut next = Vec::new();
                for s in &frontier {
                    for fact in model.iter() {
                        if let Some(s2) = match_atom(b, fact, s) {
                            next.push(s2);
                        }
                    }
                }
                frontier = next;
            }
            for s in frontier {
                let h = s.apply_atom(&c.head);
                assert!(h.is_ground(), "rule not range-restricted: {}", c);
                if model.insert(h) {
                    added = true;
                }
            }
        }
        if !added {
            return model;
        }
    }
}

/// All answers to a goal conjunction against the least model, as tuples of
/// bindings for the goal's variables in first-occurrence order.
pub fn bottom_up_answers(program: &Program, goals: &[Atom]) -> BTreeSet<Vec<Term>> {
    let model = bottom_up_model(program);
    let mut vars = Vec::new();
    for g in goals {
        for v in g.vars() {
            if !vars.contains(&v) {
                vars.push(v);
            }
        }
    }
    let mut frontier = vec![Subst::new()];
    for g in goals {
        let mut next = Vec::new();
        for s in &frontier {
            for fact in model.iter() {
                if let Some(s2) = match_atom(g, fact, s) {
                    next.push(s2);
                }
            }
        }
        frontier = next;
    }
    frontier
        .into_iter()
        .map(|s| {
            vars.iter()
                .map(|(n, g)| s.apply(&Term::Var(*n, *g)))
                .collect()
        })
        .collect()
}

/// Answers from the SLD engine in the same tuple form as
/// [`bottom_up_answers`], for direct comparison.
pub fn sld_answers(
    program: &Program,
    goals: &[Atom],
    budget: caseplan::logic::ProofBudget,
) -> BTreeSet<Vec<Term>> {
    let mut vars = Vec::new();
    for g in goals {
        for v in g.vars() {
            if !vars.contains(&v) {
                vars.push(v);
            }
        }
    }
    caseplan::logic::sld_prove(program, goals, budget)
        .expect("sld_prove failed")
        .into_iter()
        .map(|(s, _)| {
            vars.iter()
                .map(|(n, g)| s.apply(&Term::Var(*n, *g)))
                .collect()
        })
        .collect()
}

/// A random stratified, range-restricted Datalog program plus a random goal.
/// Stratification (body predicates strictly lower than the head predicate)
/// guarantees SLD termination without a budget.
pub fn random_datalog(rng: &mut impl Rng) -> (Program, Vec<Atom>) {
    let n_preds = rng.gen_range(2..=8);
    let preds: Vec<(String, usize)> = (0..n_preds)
        .map(|i| (format!("p{}", i), rng.gen_range(1..=2)))
        .collect();
    let consts = ["a", "b", "c", "d", "e"];
    let mut clauses = Vec::new();
    let n_facts = rng.gen_range(1..=20);
    for _ in 0..n_facts {
        let (name, arity) = &preds[rng.gen_range(0..preds.len())];
        let args = (0..*arity)
            .map(|_| Term::constant(consts[rng.gen_range(0..consts.len())]))
            .collect();
        clauses.push(HornClause::fact(Atom::new(name, args)));
    }
    let n_rules = rng.gen_range(0..=8);
    let var_names = ["X", "Y", "Z"];
    for _ in 0..n_rules {
        let hi = rng.gen_range(1..preds.len().max(2)).min(preds.len() - 1);
        if hi == 0 {
            continue;
        }
        let body_len = rng.gen_range(1..=3);
        let mut body = Vec::new();
        let mut body_vars: Vec<&str> = Vec::new();
        for _ in 0..body_len {
            let bi = rng.gen_range(0..hi);
            let (name, arity) = &preds[bi];
            let args = (0..*arity)
                .map(|_| {
                    if rng.gen_bool(0.7) {
                        let v = var_names[rng.gen_range(0..var_names.len())];
                        if !body_vars.contains(&v) {
                            body_vars.push(v);
                        }
                        Term::var(v)
                    } else {
                        Term::constant(consts[rng.gen_range(0..consts.len())])
                    }
                })
                .collect();
            body.push(Atom::new(name, args));
        }
        let (hname, harity) = &preds[hi];
        let head_args = (0..*harity)
            .map(|_| {
                if !body_vars.is_empty() && rng.gen_bool(0.8) {
                    Term::var(body_vars[rng.gen_range(0..body_vars.len())])
                } else {
                    Term::constant(consts[rng.gen_range(0..consts.len())])
                }
            })
            .collect();
        clauses.push(HornClause {
            head: Atom::new(hname, head_args),
            body,
        });
    }
    let program = Program::new(Vec::new(), clauses);
    let (gname, garity) = &preds[rng.gen_range(0..preds.len())];
    let goal_args = (0..*garity)
        .map(|i| {
            if rng.gen_bool(0.7) {
                Term::var(var_names[i % var_names.len()])
            } else {
                Term::constant(consts[rng.gen_range(0..consts.len())])
            }
        })
        .collect();
    (program, vec![Atom::new(gname, goal_args)])
}
