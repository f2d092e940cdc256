//! Problem solving: pure depth-first iterative-deepening (DFID) search,
//! abstract-case applicability and retrieval, DFID refinement of abstract
//! cases into concrete plans, and hierarchical planning over the abstract
//! domain.
//!
//! Refinement decomposes a problem along an abstract case's state sequence:
//! each segment is solved by iterative deepening up to `deep_max`, where the
//! segment goal is an EXACT match of the state's derivable abstract atoms
//! restricted to the case's abstraction image (every atom of the segment
//! goal provable, every other image atom unprovable). The final segment
//! targets the concrete goal with a subset test. Backtracking across
//! segments arises from the recursive search structure.

use std::collections::{BTreeSet, HashMap};
use std::rc::Rc;
use std::time::{Duration, Instant};

use thiserror::Error;

use crate::abstraction::{
    abstract_atoms_of, AbstractCase, AbstractionError, AbstractionImage, AbstractionTheory,
};
use crate::domain::{
    self, applicable_instantiations, apply, goal_satisfied, Domain, DomainError,
    InstantiatedOperator, Problem, State,
};
use crate::logic::{LogicError, ProofBudget};

#[derive(Error, Debug, Clone, PartialEq, Eq)]
pub enum SolveError {
    #[error("no solution within the depth limit ({expansions} expansions)")]
    Unsolved { expansions: u64 },
    #[error("search budget exhausted ({expansions} expansions)")]
    BudgetExceeded { expansions: u64 },
    #[error("corrupt abstract case: {0}")]
    CorruptCase(String),
    #[error(transparent)]
    Abstraction(#[from] AbstractionError),
    #[error(transparent)]
    Domain(#[from] DomainError),
    #[error(transparent)]
    Logic(#[from] LogicError),
}

/// Limits on one solver run. Node expansions are the primary, reproducible
/// limit; the wall-clock limit is advisory.
#[derive(Clone, Copy, Debug)]
pub struct SearchBudget {
    pub max_expansions: u64,
    pub deep_max: u32,
    pub wall_limit: Option<Duration>,
    pub proof: ProofBudget,
}

impl Default for SearchBudget {
    fn default() -> SearchBudget {
        SearchBudget {
            max_expansions: 2_000_000,
            deep_max: 30,
            wall_limit: None,
            proof: ProofBudget::default(),
        }
    }
}

/// Statistics of one solver run.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct SolveStats {
    pub expansions: u64,
    /// Expansions spent in each refinement segment of the successful
    /// refinement (abstract segments first, final concrete segment last).
    pub segment_expansions: Vec<u64>,
    /// Concrete plan length of each segment of the successful refinement.
    pub segment_lengths: Vec<usize>,
    /// Name of the abstract case whose refinement succeeded.
    pub case_used: Option<String>,
    /// Cases whose refinement was attempted and failed.
    pub refinement_failures: u64,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Solution {
    pub plan: Vec<InstantiatedOperator>,
    pub stats: SolveStats,
}

/// An ordered store of abstract cases, kept in descending plan-length order
/// (stable for equal lengths), without duplicate ⟨problem, plan⟩ entries.
#[derive(Clone, Debug, Default)]
pub struct CaseBase {
    cases: Vec<(String, AbstractCase)>,
}

impl CaseBase {
    pub fn new() -> CaseBase {
        CaseBase::default()
    }

    pub fn insert(&mut self, name: String, case: AbstractCase) {
        if self.cases.iter().any(|(_, c)| c.key() == case.key()) {
            return;
        }
        let pos = self
            .cases
            .iter()
            .position(|(_, c)| c.plan.len() < case.plan.len())
            .unwrap_or(self.cases.len());
        self.cases.insert(pos, (name, case));
    }

    pub fn iter(&self) -> impl Iterator<Item = &(String, AbstractCase)> {
        self.cases.iter()
    }

    pub fn len(&self) -> usize {
        self.cases.len()
    }

    pub fn is_empty(&self) -> bool {
        self.cases.is_empty()
    }
}

/// The context an abstraction-aware solver works in: both domain levels and
/// the generic abstraction theory.
#[derive(Clone, Copy)]
pub struct TheoryContext<'a> {
    pub concrete: &'a Domain,
    pub abstract_dom: &'a Domain,
    pub theory: &'a AbstractionTheory,
}

/// The full abstraction of a concrete state: all derivable ground abstract
/// essential atoms.
pub fn abstract_state_of(
    state: &State,
    ctx: &TheoryContext,
    budget: ProofBudget,
) -> Result<State, AbstractionError> {
    abstract_atoms_of(
        state,
        ctx.abstract_dom,
        &ctx.concrete.rules,
        ctx.theory,
        budget,
    )
    .map(State::new)
}

/// Re-executes an abstract case's plan from its initial state, returning
/// the full abstract state sequence s_0..s_m and the abstraction image α*
/// (the union of all those states).
pub fn reconstruct(
    case: &AbstractCase,
    abstract_dom: &Domain,
    budget: ProofBudget,
) -> Result<(Vec<State>, AbstractionImage), SolveError> {
    let mut states = vec![case.problem.initial.clone()];
    for op in &case.plan {
        let current = states.last().unwrap();
        if !domain::is_applicable(current, op, &abstract_dom.rules, budget)? {
            return Err(SolveError::CorruptCase(format!(
                "abstract operator {} not applicable during reconstruction",
                op
            )));
        }
        states.push(apply(current, op));
    }
    if *states.last().unwrap() != case.problem.goal {
        return Err(SolveError::CorruptCase(
            "abstract plan does not reach the stored goal".into(),
        ));
    }
    let alpha: AbstractionImage = states
        .iter()
        .flat_map(|s| s.atoms.iter().cloned())
        .collect();
    Ok((states, alpha))
}

/// The applicability test: abstract both problem endpoints and compare them,
/// restricted to the case's image, with the case's endpoints.
pub fn is_applicable(
    case: &AbstractCase,
    problem: &Problem,
    ctx: &TheoryContext,
    budget: ProofBudget,
) -> Result<bool, SolveError> {
    let (states, alpha) = reconstruct(case, ctx.abstract_dom, budget)?;
    let s_i_a = abstract_state_of(&problem.initial, ctx, budget)?;
    let s_g_a = abstract_state_of(&problem.goal, ctx, budget)?;
    let restrict = |s: &State| -> BTreeSet<_> { s.atoms.intersection(&alpha).cloned().collect() };
    Ok(restrict(&s_i_a) == states[0].atoms && restrict(&s_g_a) == states[states.len() - 1].atoms)
}

/// Yields the applicable cases for a problem in case-base order (descending
/// plan length): a cheap pre-selection on the abstracted endpoints first,
/// then the full applicability test.
pub fn retrieve<'a>(
    case_base: &'a CaseBase,
    problem: &Problem,
    ctx: &TheoryContext<'a>,
    budget: ProofBudget,
) -> Result<Vec<&'a (String, AbstractCase)>, SolveError> {
    let s_i_a = abstract_state_of(&problem.initial, ctx, budget)?;
    let s_g_a = abstract_state_of(&problem.goal, ctx, budget)?;
    let mut out = Vec::new();
    for entry in case_base.iter() {
        let case = &entry.1;
        if !case.problem.initial.atoms.is_subset(&s_i_a.atoms)
            || !case.problem.goal.atoms.is_subset(&s_g_a.atoms)
        {
            continue;
        }
        if is_applicable(case, problem, ctx, budget)? {
            out.push(entry);
        }
    }
    Ok(out)
}

struct RefineCtx<'a> {
    ctx: TheoryContext<'a>,
    goals: &'a [State],
    alpha: &'a AbstractionImage,
    concrete_goal: &'a State,
    budget: SearchBudget,
    expansions: u64,
    seg_expansions: Vec<u64>,
    plan: Vec<InstantiatedOperator>,
    boundaries: Vec<(usize, usize)>,
    start: Instant,
    // Proofs depend only on the state, so applicable instances and derivable
    // abstract atoms are cached per state across depth bounds and segments.
    // Expansion counting is unaffected: a node counts when it is visited,
    // not when its successors are computed.
    ops_cache: HashMap<State, Rc<Vec<InstantiatedOperator>>>,
    image_cache: HashMap<State, Rc<BTreeSet<crate::logic::Atom>>>,
}

impl RefineCtx<'_> {
    fn expand(&mut self, segment: usize) -> Result<(), SolveError> {
        self.expansions += 1;
        while self.seg_expansions.len() <= segment {
            self.seg_expansions.push(0);
        }
        self.seg_expansions[segment] += 1;
        if self.expansions > self.budget.max_expansions {
            return Err(SolveError::BudgetExceeded {
                expansions: self.expansions,
            });
        }
        if let Some(limit) = self.budget.wall_limit {
            if self.start.elapsed() > limit {
                return Err(SolveError::BudgetExceeded {
                    expansions: self.expansions,
                });
            }
        }
        Ok(())
    }

    /// Exact-match abstract segment goal: the state's derivable abstract
    /// atoms restricted to the image equal the segment goal.
    fn segment_goal_met(&mut self, state: &State, segment: usize) -> Result<bool, SolveError> {
        if segment == self.goals.len() {
            return Ok(goal_satisfied(state, self.concrete_goal));
        }
        let derivable = match self.image_cache.get(state) {
            Some(cached) => Rc::clone(cached),
            None => {
                let computed = Rc::new(abstract_atoms_of(
                    state,
                    self.ctx.abstract_dom,
                    &self.ctx.concrete.rules,
                    self.ctx.theory,
                    self.budget.proof,
                )?);
                self.image_cache.insert(state.clone(), Rc::clone(&computed));
                computed
            }
        };
        let image: BTreeSet<_> = derivable.intersection(self.alpha).cloned().collect();
        Ok(image == self.goals[segment].atoms)
    }

    /// Solves segment `segment` starting at `state` by iterative deepening,
    /// recursing into the following segments on every candidate boundary
    /// state. Returns true when the whole remaining problem is solved.
    fn search_segment(&mut self, state: &State, segment: usize) -> Result<bool, SolveError> {
        for bound in 0..=self.budget.deep_max {
            let mut path = vec![state.clone()];
            if self.dfs(state, bound, segment, &mut path)? {
                return Ok(true);
            }
        }
        Ok(false)
    }

    fn dfs(
        &mut self,
        state: &State,
        remaining: u32,
        segment: usize,
        path: &mut Vec<State>,
    ) -> Result<bool, SolveError> {
        if remaining == 0 {
            if !self.segment_goal_met(state, segment)? {
                return Ok(false);
            }
            self.boundaries.push((segment, self.plan.len()));
            if segment == self.goals.len() {
                return Ok(true);
            }
            if self.search_segment(state, segment + 1)? {
                return Ok(true);
            }
            self.boundaries.pop();
            return Ok(false);
        }
        self.expand(segment)?;
        let ops = self.applicable_ops(state)?;
        for op in ops.iter() {
            let next = apply(state, op);
            if path.contains(&next) {
                continue;
            }
            path.push(next);
            self.plan.push(op.clone());
            let next_ref = path.last().unwrap().clone();
            if self.dfs(&next_ref, remaining - 1, segment, path)? {
                return Ok(true);
            }
            self.plan.pop();
            path.pop();
        }
        Ok(false)
    }

    /// The applicable operator instances of a state, in schema order,
    /// memoized per state.
    fn applicable_ops(
        &mut self,
        state: &State,
    ) -> Result<Rc<Vec<InstantiatedOperator>>, SolveError> {
        if let Some(cached) = self.ops_cache.get(state) {
            return Ok(Rc::clone(cached));
        }
        let concrete = self.ctx.concrete;
        let mut all = Vec::new();
        for schema in &concrete.operators {
            all.extend(applicable_instantiations(
                state,
                schema,
                &concrete.rules,
                self.budget.proof,
            )?);
        }
        let all = Rc::new(all);
        self.ops_cache.insert(state.clone(), Rc::clone(&all));
        Ok(all)
    }
}

/// DFID refinement: solve a sequence of abstract segment goals (exact match
/// under the image) followed by the concrete goal (subset test), with
/// per-segment iterative deepening and backtracking between segments.
pub fn refine_dfid(
    initial: &State,
    goals: &[State],
    alpha: &AbstractionImage,
    concrete_goal: &State,
    ctx: &TheoryContext,
    budget: SearchBudget,
) -> Result<Solution, SolveError> {
    let mut rc = RefineCtx {
        ctx: *ctx,
        goals,
        alpha,
        concrete_goal,
        budget,
        expansions: 0,
        seg_expansions: Vec::new(),
        plan: Vec::new(),
        boundaries: Vec::new(),
        start: Instant::now(),
        ops_cache: HashMap::new(),
        image_cache: HashMap::new(),
    };
    if rc.search_segment(initial, 0)? {
        let mut boundaries = rc.boundaries.clone();
        boundaries.sort();
        let mut segment_lengths = Vec::new();
        let mut prev = 0usize;
        for (_, len) in &boundaries {
            segment_lengths.push(len - prev);
            prev = *len;
        }
        Ok(Solution {
            plan: rc.plan,
            stats: SolveStats {
                expansions: rc.expansions,
                segment_expansions: rc.seg_expansions,
                segment_lengths,
                case_used: None,
                refinement_failures: 0,
            },
        })
    } else {
        Err(SolveError::Unsolved {
            expansions: rc.expansions,
        })
    }
}

/// Pure DFID search in the concrete domain: refinement with no abstract
/// goals and an empty image.
pub fn solve_pure(
    problem: &Problem,
    domain: &Domain,
    budget: SearchBudget,
) -> Result<Solution, SolveError> {
    let empty_theory: AbstractionTheory = Vec::new();
    let ctx = TheoryContext {
        concrete: domain,
        abstract_dom: domain,
        theory: &empty_theory,
    };
    refine_dfid(
        &problem.initial,
        &[],
        &BTreeSet::new(),
        &problem.goal,
        &ctx,
        budget,
    )
}

/// Case-based solving: retrieve applicable cases in order, refine the first
/// that succeeds, and fall back to pure search when no case refines. The
/// expansion budget is shared across all attempts.
pub fn solve_with_cases(
    problem: &Problem,
    case_base: &CaseBase,
    ctx: &TheoryContext,
    budget: SearchBudget,
) -> Result<Solution, SolveError> {
    let candidates = retrieve(case_base, problem, ctx, budget.proof)?;
    let mut spent = 0u64;
    let mut failures = 0u64;
    for (name, case) in candidates {
        let (states, alpha) = reconstruct(case, ctx.abstract_dom, budget.proof)?;
        // Only the intermediate abstract states guide the search; the final
        // segment aims directly at the concrete goal.
        let goals = &states[1..states.len() - 1];
        let mut inner = budget;
        inner.max_expansions = budget.max_expansions.saturating_sub(spent);
        match refine_dfid(&problem.initial, goals, &alpha, &problem.goal, ctx, inner) {
            Ok(mut solution) => {
                solution.stats.expansions += spent;
                solution.stats.case_used = Some(name.clone());
                solution.stats.refinement_failures = failures;
                return Ok(solution);
            }
            Err(SolveError::Unsolved { expansions }) => {
                spent += expansions;
                failures += 1;
            }
            Err(SolveError::BudgetExceeded { expansions }) => {
                return Err(SolveError::BudgetExceeded {
                    expansions: spent + expansions,
                })
            }
            Err(e) => return Err(e),
        }
    }
    let mut inner = budget;
    inner.max_expansions = budget.max_expansions.saturating_sub(spent);
    match solve_pure(problem, ctx.concrete, inner) {
        Ok(mut solution) => {
            solution.stats.expansions += spent;
            solution.stats.refinement_failures = failures;
            Ok(solution)
        }
        Err(SolveError::Unsolved { expansions }) => Err(SolveError::Unsolved {
            expansions: spent + expansions,
        }),
        Err(SolveError::BudgetExceeded { expansions }) => Err(SolveError::BudgetExceeded {
            expansions: spent + expansions,
        }),
        Err(e) => Err(e),
    }
}

struct HierCtx<'a> {
    ctx: TheoryContext<'a>,
    s_g_a: State,
    problem: &'a Problem,
    budget: SearchBudget,
    expansions: u64,
    failures: u64,
    result: Option<Solution>,
}

impl HierCtx<'_> {
    fn expand(&mut self) -> Result<(), SolveError> {
        self.expansions += 1;
        if self.expansions > self.budget.max_expansions {
            return Err(SolveError::BudgetExceeded {
                expansions: self.expansions,
            });
        }
        Ok(())
    }

    fn dfs(
        &mut self,
        state: &State,
        remaining: u32,
        path: &mut Vec<State>,
        plan: &mut Vec<InstantiatedOperator>,
    ) -> Result<bool, SolveError> {
        if remaining == 0 {
            if !goal_satisfied(state, &self.s_g_a) {
                return Ok(false);
            }
            // Treat the found abstract plan as a transient case: its
            // intermediate states give the segment goals, the union of all
            // its states the image; the last segment aims at the concrete
            // goal directly.
            let goals: Vec<State> = path[1..path.len().max(2) - 1].to_vec();
            let alpha: AbstractionImage =
                path.iter().flat_map(|s| s.atoms.iter().cloned()).collect();
            let mut inner = self.budget;
            inner.max_expansions = self.budget.max_expansions.saturating_sub(self.expansions);
            match refine_dfid(
                &self.problem.initial,
                &goals,
                &alpha,
                &self.problem.goal,
                &self.ctx,
                inner,
            ) {
                Ok(mut solution) => {
                    solution.stats.expansions += self.expansions;
                    solution.stats.refinement_failures = self.failures;
                    self.result = Some(solution);
                    Ok(true)
                }
                Err(SolveError::Unsolved { expansions }) => {
                    self.expansions += expansions;
                    self.failures += 1;
                    Ok(false)
                }
                Err(SolveError::BudgetExceeded { expansions }) => Err(SolveError::BudgetExceeded {
                    expansions: self.expansions + expansions,
                }),
                Err(e) => Err(e),
            }
        } else {
            self.expand()?;
            let abstract_dom = self.ctx.abstract_dom;
            for schema in &abstract_dom.operators {
                let ops = applicable_instantiations(
                    state,
                    schema,
                    &abstract_dom.rules,
                    self.budget.proof,
                )?;
                for op in ops {
                    let next = apply(state, &op);
                    if path.contains(&next) {
                        continue;
                    }
                    path.push(next);
                    plan.push(op);
                    let next_ref = path.last().unwrap().clone();
                    if self.dfs(&next_ref, remaining - 1, path, plan)? {
                        return Ok(true);
                    }
                    plan.pop();
                    path.pop();
                }
            }
            Ok(false)
        }
    }
}

/// Hierarchical solving: DFID-search the abstract domain from the
/// abstracted initial state (shortest abstract plans first), refine each
/// found abstract plan as a transient case, backtrack to the next abstract
/// plan on refinement failure, and fall back to pure search when the
/// abstract space is exhausted.
pub fn solve_hierarchical(
    problem: &Problem,
    ctx: &TheoryContext,
    budget: SearchBudget,
) -> Result<Solution, SolveError> {
    let s_i_a = abstract_state_of(&problem.initial, ctx, budget.proof)?;
    let s_g_a = abstract_state_of(&problem.goal, ctx, budget.proof)?;
    let mut hc = HierCtx {
        ctx: *ctx,
        s_g_a,
        problem,
        budget,
        expansions: 0,
        failures: 0,
        result: None,
    };
    for bound in 0..=budget.deep_max {
        let mut path = vec![s_i_a.clone()];
        let mut plan = Vec::new();
        if hc.dfs(&s_i_a, bound, &mut path, &mut plan)? {
            return Ok(hc.result.unwrap());
        }
    }
    let mut inner = budget;
    inner.max_expansions = budget.max_expansions.saturating_sub(hc.expansions);
    match solve_pure(problem, ctx.concrete, inner) {
        Ok(mut solution) => {
            solution.stats.expansions += hc.expansions;
            solution.stats.refinement_failures = hc.failures;
            Ok(solution)
        }
        Err(SolveError::Unsolved { expansions }) => Err(SolveError::Unsolved {
            expansions: hc.expansions + expansions,
        }),
        Err(SolveError::BudgetExceeded { expansions }) => Err(SolveError::BudgetExceeded {
            expansions: hc.expansions + expansions,
        }),
        Err(e) => Err(e),
    }
}
