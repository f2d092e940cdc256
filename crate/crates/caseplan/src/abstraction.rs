//! The four-phase learner that maps one concrete planning case to the
//! complete set of its abstract cases under a generic abstraction theory:
//!
//! 1. execute the concrete plan to obtain the state sequence;
//! 2. abstract every concrete state into a superset of derivable abstract
//!    atoms;
//! 3. build the graph of all abstract state transitions between any two
//!    (not necessarily adjacent) sequence positions;
//! 4. search the graph for sound paths, each of which yields an abstract
//!    case together with its abstraction image and sequence map.
//!
//! The module also provides a brute-force enumeration of all case
//! abstractions straight from the defining conditions, used as an oracle to
//! test that the learner's output is exactly the set of abstractions, and
//! the join/lift constructions for combining abstract domains.

use std::collections::BTreeSet;

use thiserror::Error;

use crate::domain::{
    self, apply, execute_plan, instantiate, Domain, DomainError, InstantiatedOperator,
    PlanningCase, Problem, State,
};
use crate::logic::{
    essential_leaves, sld_prove, unify_terms, Atom, Derivation, HornClause, LogicError, Program,
    ProofBudget, Subst, Sym, Term,
};

/// The generic abstraction theory: Horn rules with abstract-essential heads
/// whose bodies may mix concrete and abstract vocabulary.
pub type AbstractionTheory = Vec<HornClause>;

/// An abstraction image α*: the set of ground abstract essential atoms that
/// induces the state abstraction mapping.
pub type AbstractionImage = BTreeSet<Atom>;

/// A sequence map β: strictly increasing indices into the concrete state
/// sequence with β(0) = 0 and β(m) = n.
pub type SequenceMap = Vec<usize>;

#[derive(Error, Debug, Clone, PartialEq, Eq)]
pub enum AbstractionError {
    #[error("phase {phase}: {source}")]
    Domain { phase: u8, source: DomainError },
    #[error("phase {phase}: {source}")]
    Logic { phase: u8, source: LogicError },
    #[error("abstraction of a state produced the non-ground atom {0}")]
    NonGroundAbstraction(String),
    #[error("operator {0}: graph edge leaves parameters unbound")]
    FreeParameters(String),
    #[error("path count cap exceeded ({0} paths)")]
    PathCapExceeded(usize),
    #[error("symbol clash between domains: {0}")]
    SymbolClash(String),
    #[error("oracle size cap exceeded: {0}")]
    CapsExceeded(String),
}

/// One edge of the transition graph: the abstract operator instance is
/// applicable at sequence position `i` (with proof) and its added atoms all
/// occur in the superset state at position `j`.
#[derive(Clone, Debug)]
pub struct Edge {
    pub i: usize,
    pub j: usize,
    pub op: InstantiatedOperator,
    /// Abstract essential state atoms at the leaves of the proof.
    pub leaves: BTreeSet<Atom>,
    pub proof: Derivation,
}

#[derive(Clone, Debug, Default)]
pub struct TransitionGraph {
    /// Number of concrete states (n + 1 for a plan of length n).
    pub nodes: usize,
    pub edges: Vec<Edge>,
}

/// An abstract case: an abstract problem and plan, plus the provenance
/// needed to reconstruct how it abstracts its source case.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct AbstractCase {
    pub problem: Problem,
    pub plan: Vec<InstantiatedOperator>,
    pub alpha: AbstractionImage,
    pub beta: SequenceMap,
    pub source: Option<String>,
}

impl AbstractCase {
    /// Identity for deduplication: stored cases are keyed by problem and
    /// plan only.
    pub fn key(&self) -> (Problem, Vec<InstantiatedOperator>) {
        (self.problem.clone(), self.plan.clone())
    }
}

/// Phase 1: the concrete state sequence s_0..s_n.
pub fn phase1_states(
    case: &PlanningCase,
    concrete: &Domain,
    budget: ProofBudget,
) -> Result<Vec<State>, AbstractionError> {
    execute_plan(case, concrete, budget)
        .map_err(|source| AbstractionError::Domain { phase: 1, source })
}

fn fresh_goal(pred: Sym, arity: usize) -> Atom {
    Atom {
        pred,
        args: (0..arity).map(|k| Term::var(&format!("Q{}", k))).collect(),
    }
}

/// All derivable ground abstract essential atoms of one concrete state.
pub fn abstract_atoms_of(
    state: &State,
    abstract_dom: &Domain,
    concrete_rules: &[HornClause],
    theory: &AbstractionTheory,
    budget: ProofBudget,
) -> Result<BTreeSet<Atom>, AbstractionError> {
    let mut clauses = concrete_rules.to_vec();
    clauses.extend(theory.iter().cloned());
    let program = Program::new(state.atoms.iter().cloned(), clauses);
    let mut out = BTreeSet::new();
    for (pred, arity) in &abstract_dom.essentials {
        let goal = fresh_goal(*pred, *arity);
        let answers = sld_prove(&program, std::slice::from_ref(&goal), budget)
            .map_err(|source| AbstractionError::Logic { phase: 2, source })?;
        for (s, _) in answers {
            let atom = s.apply_atom(&goal);
            if !atom.is_ground() {
                return Err(AbstractionError::NonGroundAbstraction(atom.to_string()));
            }
            out.insert(atom);
        }
    }
    Ok(out)
}

/// Phase 2: the superset abstraction of every concrete state.
pub fn phase2_supersets(
    states: &[State],
    abstract_dom: &Domain,
    concrete_rules: &[HornClause],
    theory: &AbstractionTheory,
    budget: ProofBudget,
) -> Result<Vec<State>, AbstractionError> {
    states
        .iter()
        .map(|s| abstract_atoms_of(s, abstract_dom, concrete_rules, theory, budget).map(State::new))
        .collect()
}

/// Enumerates every extension of `base` that matches each add atom against
/// some element of `target`, in deterministic order.
fn match_adds(adds: &[Atom], target: &State, base: &Subst, out: &mut Vec<Subst>) {
    let Some((first, rest)) = adds.split_first() else {
        out.push(base.clone());
        return;
    };
    for cand in &target.atoms {
        if cand.pred != first.pred || cand.args.len() != first.args.len() {
            continue;
        }
        let mut s = base.clone();
        let ok = first
            .args
            .iter()
            .zip(cand.args.iter())
            .all(|(a, b)| unify_terms(a, b, &mut s));
        if ok {
            match_adds(rest, target, &s, out);
        }
    }
}

/// Phase 3: the complete abstract transition graph over the supersets.
pub fn phase3_graph(
    supersets: &[State],
    abstract_dom: &Domain,
    budget: ProofBudget,
) -> Result<TransitionGraph, AbstractionError> {
    let n = supersets.len();
    let mut edges = Vec::new();
    let mut seen: BTreeSet<(usize, usize, InstantiatedOperator, Vec<Atom>)> = BTreeSet::new();
    let abstract_essentials = abstract_dom.essential_preds();
    for (i, s_i) in supersets.iter().enumerate() {
        for schema in &abstract_dom.operators {
            let program = Program::new(s_i.atoms.iter().cloned(), abstract_dom.rules.clone());
            let answers = sld_prove(&program, &schema.pre, budget)
                .map_err(|source| AbstractionError::Logic { phase: 3, source })?;
            for (sigma, proof) in &answers {
                let adds: Vec<Atom> = schema.add.iter().map(|a| sigma.apply_atom(a)).collect();
                for (j, s_j) in supersets.iter().enumerate().skip(i + 1) {
                    let mut thetas = Vec::new();
                    match_adds(&adds, s_j, sigma, &mut thetas);
                    for theta in thetas {
                        let args: Vec<Term> = schema
                            .params
                            .iter()
                            .map(|p| theta.apply(&Term::Var(*p, 0)))
                            .collect();
                        if args.iter().any(|t| !t.is_ground()) {
                            return Err(AbstractionError::FreeParameters(
                                schema.name.as_str().to_owned(),
                            ));
                        }
                        let op = instantiate(schema, &args)
                            .map_err(|source| AbstractionError::Domain { phase: 3, source })?;
                        let leaves = essential_leaves(proof, &abstract_essentials);
                        let key = (i, j, op.clone(), leaves.iter().cloned().collect());
                        if seen.insert(key) {
                            edges.push(Edge {
                                i,
                                j,
                                op,
                                leaves,
                                proof: proof.clone(),
                            });
                        }
                    }
                }
            }
        }
    }
    Ok(TransitionGraph { nodes: n, edges })
}

/// One abstract state transition on image-restricted states: the operator's
/// precondition is provable from the restricted source state (plus the
/// abstract rules) and the transition equation yields exactly the restricted
/// target state.
fn transition_holds(
    from: &State,
    to: &State,
    op: &InstantiatedOperator,
    abstract_dom: &Domain,
    budget: ProofBudget,
) -> Result<bool, AbstractionError> {
    let ok = domain::is_applicable(from, op, &abstract_dom.rules, budget)
        .map_err(|source| AbstractionError::Domain { phase: 4, source })?;
    Ok(ok && apply(from, op) == *to)
}

fn restrict(s: &State, alpha: &AbstractionImage) -> State {
    State {
        atoms: s.atoms.intersection(alpha).cloned().collect(),
    }
}

/// Phase 4: depth-first search for sound paths through the transition
/// graph. Each completed path (ending at the final state index) is emitted
/// as an abstract case; duplicates by ⟨problem, plan⟩ are dropped.
pub fn phase4_paths(
    supersets: &[State],
    graph: &TransitionGraph,
    abstract_dom: &Domain,
    budget: ProofBudget,
    path_cap: usize,
) -> Result<Vec<AbstractCase>, AbstractionError> {
    let n = supersets.len() - 1;
    let mut out: Vec<AbstractCase> = Vec::new();
    let mut keys: BTreeSet<(Problem, Vec<InstantiatedOperator>)> = BTreeSet::new();
    let mut paths_seen = 0usize;

    struct Frame {
        beta: Vec<usize>,
        plan: Vec<InstantiatedOperator>,
        alpha: AbstractionImage,
    }

    let emit = |alpha: &AbstractionImage,
                beta: &[usize],
                plan: &[InstantiatedOperator],
                out: &mut Vec<AbstractCase>,
                keys: &mut BTreeSet<(Problem, Vec<InstantiatedOperator>)>| {
        let problem = Problem {
            initial: restrict(&supersets[0], alpha),
            goal: restrict(&supersets[n], alpha),
        };
        if keys.insert((problem.clone(), plan.to_vec())) {
            out.push(AbstractCase {
                problem,
                plan: plan.to_vec(),
                alpha: alpha.clone(),
                beta: beta.to_vec(),
                source: None,
            });
        }
    };

    if n == 0 {
        emit(&BTreeSet::new(), &[0], &[], &mut out, &mut keys);
        return Ok(out);
    }

    let mut stack = vec![Frame {
        beta: vec![0],
        plan: Vec::new(),
        alpha: BTreeSet::new(),
    }];
    while let Some(frame) = stack.pop() {
        let at = *frame.beta.last().unwrap();
        // Reverse edge order so the stack pops edges in declaration order.
        for edge in graph.edges.iter().rev().filter(|e| e.i == at) {
            paths_seen += 1;
            if paths_seen > path_cap {
                return Err(AbstractionError::PathCapExceeded(paths_seen));
            }
            let mut alpha = frame.alpha.clone();
            alpha.extend(edge.leaves.iter().cloned());
            alpha.extend(edge.op.add.iter().cloned());
            // Every prior transition must still hold on states restricted
            // to the grown image, and the new transition must hold.
            let mut beta = frame.beta.clone();
            beta.push(edge.j);
            let mut plan = frame.plan.clone();
            plan.push(edge.op.clone());
            let mut sound = true;
            for (nu, op) in plan.iter().enumerate() {
                let from = restrict(&supersets[beta[nu]], &alpha);
                let to = restrict(&supersets[beta[nu + 1]], &alpha);
                if !transition_holds(&from, &to, op, abstract_dom, budget)? {
                    sound = false;
                    break;
                }
            }
            if !sound {
                continue;
            }
            if edge.j == n {
                emit(&alpha, &beta, &plan, &mut out, &mut keys);
            } else {
                stack.push(Frame { beta, plan, alpha });
            }
        }
    }
    Ok(out)
}

/// Budgets for one learner run.
#[derive(Clone, Copy, Debug)]
pub struct PabsBudgets {
    pub proof: ProofBudget,
    pub path_cap: usize,
}

impl Default for PabsBudgets {
    fn default() -> PabsBudgets {
        PabsBudgets {
            proof: ProofBudget::default(),
            path_cap: 10_000,
        }
    }
}

/// The complete learner: phases 1-4 composed. Returns every abstract case
/// of the concrete case under the theory, deduplicated by ⟨problem, plan⟩.
pub fn pabs(
    case: &PlanningCase,
    concrete: &Domain,
    abstract_dom: &Domain,
    theory: &AbstractionTheory,
    budgets: PabsBudgets,
) -> Result<Vec<AbstractCase>, AbstractionError> {
    check_symbol_disjoint(concrete, abstract_dom)?;
    let states = phase1_states(case, concrete, budgets.proof)?;
    let supersets = phase2_supersets(
        &states,
        abstract_dom,
        &concrete.rules,
        theory,
        budgets.proof,
    )?;
    let graph = phase3_graph(&supersets, abstract_dom, budgets.proof)?;
    phase4_paths(
        &supersets,
        &graph,
        abstract_dom,
        budgets.proof,
        budgets.path_cap,
    )
}

fn check_symbol_disjoint(concrete: &Domain, abstract_dom: &Domain) -> Result<(), AbstractionError> {
    for (p, _) in &concrete.essentials {
        if abstract_dom.is_essential(*p) {
            return Err(AbstractionError::SymbolClash(p.as_str().to_owned()));
        }
    }
    for o in &concrete.operators {
        if abstract_dom.operator(o.name).is_some() {
            return Err(AbstractionError::SymbolClash(o.name.as_str().to_owned()));
        }
    }
    Ok(())
}

/// Checks the defining conditions of a case abstraction directly: the
/// concrete plan executes, β is well-formed, the abstract plan executes on
/// image-restricted states, and at every β(j) the induced abstraction of
/// the concrete state equals the j-th abstract state.
#[allow(clippy::too_many_arguments)]
pub fn verify_abstraction(
    abstract_case: &AbstractCase,
    concrete_case: &PlanningCase,
    alpha: &AbstractionImage,
    beta: &SequenceMap,
    concrete: &Domain,
    abstract_dom: &Domain,
    theory: &AbstractionTheory,
    budget: ProofBudget,
) -> Result<bool, AbstractionError> {
    let Ok(states) = execute_plan(concrete_case, concrete, budget) else {
        return Ok(false);
    };
    let n = states.len() - 1;
    let m = abstract_case.plan.len();
    if beta.len() != m + 1
        || beta.first() != Some(&0)
        || beta.last() != Some(&n)
        || beta.windows(2).any(|w| w[0] >= w[1])
    {
        return Ok(false);
    }
    // Abstract state sequence from the case's own problem and plan.
    let mut abs_states = vec![abstract_case.problem.initial.clone()];
    for op in &abstract_case.plan {
        let current = abs_states.last().unwrap();
        match domain::is_applicable(current, op, &abstract_dom.rules, budget) {
            Ok(true) => {}
            Ok(false) => return Ok(false),
            Err(source) => return Err(AbstractionError::Domain { phase: 0, source }),
        }
        abs_states.push(apply(current, op));
    }
    if *abs_states.last().unwrap() != abstract_case.problem.goal {
        return Ok(false);
    }
    for (j, abs_state) in abs_states.iter().enumerate() {
        let derivable = abstract_atoms_of(
            &states[beta[j]],
            abstract_dom,
            &concrete.rules,
            theory,
            budget,
        )?;
        let image: BTreeSet<Atom> = derivable.intersection(alpha).cloned().collect();
        if image != abs_state.atoms {
            return Ok(false);
        }
    }
    Ok(true)
}

/// Size caps for the brute-force oracle.
#[derive(Clone, Copy, Debug)]
pub struct OracleCaps {
    pub max_plan_len: usize,
    pub max_alpha_atoms: usize,
}

impl Default for OracleCaps {
    fn default() -> OracleCaps {
        OracleCaps {
            max_plan_len: 8,
            max_alpha_atoms: 10,
        }
    }
}

fn monotone_betas(n: usize) -> Vec<Vec<usize>> {
    if n == 0 {
        return vec![vec![0]];
    }
    let inner: Vec<usize> = (1..n).collect();
    let mut out = Vec::new();
    for mask in 0..(1u32 << inner.len()) {
        let mut beta = vec![0];
        for (k, &idx) in inner.iter().enumerate() {
            if mask & (1 << k) != 0 {
                beta.push(idx);
            }
        }
        beta.push(n);
        out.push(beta);
    }
    out.sort();
    out
}

fn plans_between(
    restricted: &[State],
    abstract_dom: &Domain,
    budget: ProofBudget,
    step: usize,
    prefix: &mut Vec<InstantiatedOperator>,
    out: &mut Vec<Vec<InstantiatedOperator>>,
) -> Result<(), AbstractionError> {
    if step + 1 == restricted.len() {
        out.push(prefix.clone());
        return Ok(());
    }
    let from = &restricted[step];
    let to = &restricted[step + 1];
    for schema in &abstract_dom.operators {
        let ops = domain::applicable_instantiations(from, schema, &abstract_dom.rules, budget)
            .map_err(|source| AbstractionError::Domain { phase: 0, source })?;
        for op in ops {
            if apply(from, &op) == *to {
                prefix.push(op);
                plans_between(restricted, abstract_dom, budget, step + 1, prefix, out)?;
                prefix.pop();
            }
        }
    }
    Ok(())
}

/// Enumerates every case abstraction of a small concrete case directly from
/// the defining conditions: all subsets of the derivable abstract atoms as
/// the image, all strictly monotone sequence maps, and all abstract plans
/// that execute on the image-restricted states. Deduplicated by
/// ⟨problem, plan⟩.
pub fn brute_force_abstractions(
    case: &PlanningCase,
    concrete: &Domain,
    abstract_dom: &Domain,
    theory: &AbstractionTheory,
    budget: ProofBudget,
    caps: OracleCaps,
) -> Result<Vec<AbstractCase>, AbstractionError> {
    let states = phase1_states(case, concrete, budget)?;
    let n = states.len() - 1;
    if n > caps.max_plan_len {
        return Err(AbstractionError::CapsExceeded(format!(
            "plan length {} exceeds oracle cap {}",
            n, caps.max_plan_len
        )));
    }
    let supersets = phase2_supersets(&states, abstract_dom, &concrete.rules, theory, budget)?;
    let universe: Vec<Atom> = supersets
        .iter()
        .flat_map(|s| s.atoms.iter().cloned())
        .collect::<BTreeSet<_>>()
        .into_iter()
        .collect();
    if universe.len() > caps.max_alpha_atoms {
        return Err(AbstractionError::CapsExceeded(format!(
            "{} derivable abstract atoms exceed oracle cap {}",
            universe.len(),
            caps.max_alpha_atoms
        )));
    }
    let betas = monotone_betas(n);
    let mut out: Vec<AbstractCase> = Vec::new();
    let mut keys: BTreeSet<(Problem, Vec<InstantiatedOperator>)> = BTreeSet::new();
    for mask in 0..(1u64 << universe.len()) {
        let alpha: AbstractionImage = universe
            .iter()
            .enumerate()
            .filter(|(k, _)| mask & (1 << *k) != 0)
            .map(|(_, a)| a.clone())
            .collect();
        for beta in &betas {
            let restricted: Vec<State> = beta
                .iter()
                .map(|&i| restrict(&supersets[i], &alpha))
                .collect();
            let mut plans = Vec::new();
            plans_between(
                &restricted,
                abstract_dom,
                budget,
                0,
                &mut Vec::new(),
                &mut plans,
            )?;
            for plan in plans {
                let candidate = AbstractCase {
                    problem: Problem {
                        initial: restricted[0].clone(),
                        goal: restricted[restricted.len() - 1].clone(),
                    },
                    plan: plan.clone(),
                    alpha: alpha.clone(),
                    beta: beta.clone(),
                    source: None,
                };
                if verify_abstraction(
                    &candidate,
                    case,
                    &alpha,
                    beta,
                    concrete,
                    abstract_dom,
                    theory,
                    budget,
                )? && keys.insert(candidate.key())
                {
                    out.push(candidate);
                }
            }
        }
    }
    Ok(out)
}

/// Componentwise union of two abstract domains. The operands must be
/// symbol-disjoint; with `rename` set, clashing symbols in the second
/// operand get a `_2` suffix (in its essentials, rules, and operators).
pub fn join_domains(d1: &Domain, d2: &Domain, rename: bool) -> Result<Domain, AbstractionError> {
    let clashes: Vec<Sym> = d2
        .essentials
        .iter()
        .map(|(p, _)| *p)
        .filter(|p| d1.is_essential(*p) || d1.rules.iter().any(|r| r.head.pred == *p))
        .collect();
    let op_clashes: Vec<Sym> = d2
        .operators
        .iter()
        .map(|o| o.name)
        .filter(|n| d1.operator(*n).is_some())
        .collect();
    let mut d2 = d2.clone();
    if !clashes.is_empty() || !op_clashes.is_empty() {
        if !rename {
            let all: Vec<String> = clashes
                .iter()
                .chain(op_clashes.iter())
                .map(|s| s.as_str().to_owned())
                .collect();
            return Err(AbstractionError::SymbolClash(all.join(", ")));
        }
        let renamed = |s: Sym| -> Sym {
            if clashes.contains(&s) {
                Sym::new(&format!("{}_2", s))
            } else {
                s
            }
        };
        let rename_atom = |a: &Atom| Atom {
            pred: renamed(a.pred),
            args: a.args.clone(),
        };
        d2.essentials = d2
            .essentials
            .iter()
            .map(|(p, a)| (renamed(*p), *a))
            .collect();
        d2.rules = d2
            .rules
            .iter()
            .map(|r| HornClause {
                head: rename_atom(&r.head),
                body: r.body.iter().map(&rename_atom).collect(),
            })
            .collect();
        d2.operators = d2
            .operators
            .iter()
            .map(|o| {
                let mut o2 = o.clone();
                if op_clashes.contains(&o.name) {
                    o2.name = Sym::new(&format!("{}_2", o.name));
                }
                o2.pre = o2.pre.iter().map(&rename_atom).collect();
                o2.add = o2.add.iter().map(&rename_atom).collect();
                o2.del = o2.del.iter().map(&rename_atom).collect();
                o2
            })
            .collect();
    }
    Ok(Domain {
        name: Sym::new(&format!("{}_{}", d1.name, d2.name)),
        essentials: d1
            .essentials
            .iter()
            .cloned()
            .chain(d2.essentials.iter().cloned())
            .collect(),
        rules: d1
            .rules
            .iter()
            .cloned()
            .chain(d2.rules.iter().cloned())
            .collect(),
        operators: d1
            .operators
            .iter()
            .cloned()
            .chain(d2.operators.iter().cloned())
            .collect(),
    })
}

/// Collapses a multi-level hierarchy D_0..D_l with theories A_1..A_l (each
/// A_i defining level i in terms of level i-1) into a two-level pair: the
/// concrete level D_0 and the union of all higher levels with the combined
/// theory.
pub fn lift_hierarchy(
    levels: &[Domain],
    theories: &[AbstractionTheory],
) -> Result<(Domain, Domain, AbstractionTheory), AbstractionError> {
    assert!(levels.len() >= 2 && theories.len() == levels.len() - 1);
    let concrete = levels[0].clone();
    let mut joined = levels[1].clone();
    for level in &levels[2..] {
        joined = join_domains(&joined, level, false)?;
    }
    let theory: AbstractionTheory = theories.iter().flatten().cloned().collect();
    Ok((concrete, joined, theory))
}
