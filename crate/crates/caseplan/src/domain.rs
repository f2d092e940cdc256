//! The STRIPS-style domain formalism: states as sets of ground essential
//! atoms, operator schemas with precondition/add/delete lists, instantiation,
//! applicability via SLD proof of the precondition, state transition, and
//! plan execution.

use std::collections::BTreeSet;
use std::fmt;

use thiserror::Error;

use crate::logic::{
    is_builtin, sld_prove, Atom, HornClause, LogicError, Program, ProofBudget, Subst, Sym, Term,
};

#[derive(Error, Debug, Clone, PartialEq, Eq)]
pub enum DomainError {
    #[error("operator {op}: expected {expected} arguments, got {got}")]
    ArityMismatch {
        op: String,
        expected: usize,
        got: usize,
    },
    #[error("operator {op}: non-ground argument")]
    NonGroundArg { op: String },
    #[error("unknown operator {0}")]
    UnknownOperator(String),
    #[error("operator {op}: parameters not determined by the precondition proof")]
    FreeParameters { op: String },
    #[error("operator not applicable at plan index {index}: {op}")]
    NotApplicable { index: usize, op: String },
    #[error("goal state not reached by plan execution")]
    GoalNotReached,
    #[error(transparent)]
    Logic(#[from] LogicError),
}

/// An operator schema ⟨Pre, Add, Del⟩ over parameters x1..xn, with the
/// variable restrictions params ⊇ vars(pre) ⊇ vars(del) and
/// params ⊇ vars(add).
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct OperatorSchema {
    pub name: Sym,
    pub params: Vec<Sym>,
    pub pre: Vec<Atom>,
    pub add: Vec<Atom>,
    pub del: Vec<Atom>,
}

impl OperatorSchema {
    /// Checks the variable restrictions. Returns a list of violation
    /// messages; empty means well-formed.
    pub fn check_var_scopes(&self) -> Vec<String> {
        let mut out = Vec::new();
        let params: BTreeSet<Sym> = self.params.iter().copied().collect();
        let mut pre_vars = BTreeSet::new();
        for atom in &self.pre {
            for (name, _) in atom.vars() {
                pre_vars.insert(name);
                if !params.contains(&name) {
                    out.push(format!(
                        "operator {}: precondition variable {} is not a parameter",
                        self.name, name
                    ));
                }
            }
        }
        for atom in &self.del {
            for (name, _) in atom.vars() {
                if !pre_vars.contains(&name) {
                    out.push(format!(
                        "operator {}: delete-list variable {} does not occur in the precondition",
                        self.name, name
                    ));
                }
            }
        }
        for atom in &self.add {
            for (name, _) in atom.vars() {
                if !params.contains(&name) {
                    out.push(format!(
                        "operator {}: add-list variable {} is not a parameter",
                        self.name, name
                    ));
                }
            }
        }
        out
    }
}

/// A ground instance of an operator schema.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct InstantiatedOperator {
    pub name: Sym,
    pub args: Vec<Term>,
    pub pre: Vec<Atom>,
    pub add: BTreeSet<Atom>,
    pub del: BTreeSet<Atom>,
}

impl fmt::Display for InstantiatedOperator {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.args.is_empty() {
            return write!(f, "{}", self.name);
        }
        write!(f, "{}(", self.name)?;
        for (i, t) in self.args.iter().enumerate() {
            if i > 0 {
                write!(f, ",")?;
            }
            write!(f, "{}", t)?;
        }
        write!(f, ")")
    }
}

/// A finite set of ground essential atoms, canonically ordered.
#[derive(Clone, Debug, Default, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct State {
    pub atoms: BTreeSet<Atom>,
}

impl State {
    pub fn new(atoms: impl IntoIterator<Item = Atom>) -> State {
        State {
            atoms: atoms.into_iter().collect(),
        }
    }

    pub fn is_empty(&self) -> bool {
        self.atoms.is_empty()
    }
}

impl fmt::Display for State {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{{")?;
        for (i, a) in self.atoms.iter().enumerate() {
            if i > 0 {
                write!(f, ", ")?;
            }
            write!(f, "{}", a)?;
        }
        write!(f, "}}")
    }
}

/// A problem description ⟨initial, goal⟩.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Problem {
    pub initial: State,
    pub goal: State,
}

/// A concrete planning case: a problem plus a plan that solves it.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct PlanningCase {
    pub problem: Problem,
    pub plan: Vec<InstantiatedOperator>,
}

/// A domain of problem solving: essential predicate signatures, Horn rules,
/// and operator schemas. The language is implicit in the symbols used.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Domain {
    pub name: Sym,
    pub essentials: Vec<(Sym, usize)>,
    pub rules: Vec<HornClause>,
    pub operators: Vec<OperatorSchema>,
}

impl Domain {
    pub fn is_essential(&self, pred: Sym) -> bool {
        self.essentials.iter().any(|(p, _)| *p == pred)
    }

    pub fn essential_preds(&self) -> BTreeSet<Sym> {
        self.essentials.iter().map(|(p, _)| *p).collect()
    }

    pub fn operator(&self, name: Sym) -> Option<&OperatorSchema> {
        self.operators.iter().find(|o| o.name == name)
    }

    /// Semantic well-formedness: no rule head uses an essential predicate,
    /// names are unique, arities consistent, operator variable scopes hold.
    pub fn check(&self) -> Vec<String> {
        let mut out = Vec::new();
        let mut seen = BTreeSet::new();
        for (p, _) in &self.essentials {
            if !seen.insert(*p) {
                out.push(format!("duplicate essential predicate {}", p));
            }
        }
        for r in &self.rules {
            if self.is_essential(r.head.pred) {
                out.push(format!(
                    "rule head {} uses the essential predicate {}",
                    r.head, r.head.pred
                ));
            }
        }
        let mut op_names = BTreeSet::new();
        for o in &self.operators {
            if !op_names.insert(o.name) {
                out.push(format!("duplicate operator name {}", o.name));
            }
            out.extend(o.check_var_scopes());
            for atom in o.add.iter().chain(o.del.iter()) {
                match self.essentials.iter().find(|(p, _)| *p == atom.pred) {
                    None => out.push(format!(
                        "operator {}: effect atom {} is not essential",
                        o.name, atom
                    )),
                    Some((_, arity)) if atom.args.len() != *arity => out.push(format!(
                        "operator {}: effect atom {} has wrong arity",
                        o.name, atom
                    )),
                    _ => {}
                }
            }
        }
        out
    }
}

/// Applies the substitution {x_i -> t_i} to a schema's lists. All arguments
/// must be ground.
pub fn instantiate(
    schema: &OperatorSchema,
    args: &[Term],
) -> Result<InstantiatedOperator, DomainError> {
    if args.len() != schema.params.len() {
        return Err(DomainError::ArityMismatch {
            op: schema.name.as_str().to_owned(),
            expected: schema.params.len(),
            got: args.len(),
        });
    }
    if args.iter().any(|t| !t.is_ground()) {
        return Err(DomainError::NonGroundArg {
            op: schema.name.as_str().to_owned(),
        });
    }
    let mut s = Subst::new();
    for (p, t) in schema.params.iter().zip(args.iter()) {
        s.bind((*p, 0), t.clone());
    }
    Ok(InstantiatedOperator {
        name: schema.name,
        args: args.to_vec(),
        pre: schema.pre.iter().map(|a| s.apply_atom(a)).collect(),
        add: schema.add.iter().map(|a| s.apply_atom(a)).collect(),
        del: schema.del.iter().map(|a| s.apply_atom(a)).collect(),
    })
}

/// All ground instantiations of a schema whose precondition is provable
/// from the state together with the rules. Every schema parameter must be
/// determined by the proof (parameters occur in the precondition, possibly
/// through built-ins).
pub fn applicable_instantiations(
    state: &State,
    schema: &OperatorSchema,
    rules: &[HornClause],
    budget: ProofBudget,
) -> Result<Vec<InstantiatedOperator>, DomainError> {
    let program = Program::new(state.atoms.iter().cloned(), rules.to_vec());
    let answers = sld_prove(&program, &schema.pre, budget)?;
    let mut seen = BTreeSet::new();
    let mut out = Vec::new();
    for (s, _) in answers {
        let args: Vec<Term> = schema
            .params
            .iter()
            .map(|p| s.apply(&Term::Var(*p, 0)))
            .collect();
        if args.iter().any(|t| !t.is_ground()) {
            return Err(DomainError::FreeParameters {
                op: schema.name.as_str().to_owned(),
            });
        }
        if seen.insert(args.clone()) {
            out.push(instantiate(schema, &args)?);
        }
    }
    Ok(out)
}

/// True when the instantiated operator's (ground) precondition is provable
/// from the state together with the rules.
pub fn is_applicable(
    state: &State,
    op: &InstantiatedOperator,
    rules: &[HornClause],
    budget: ProofBudget,
) -> Result<bool, DomainError> {
    let program = Program::new(state.atoms.iter().cloned(), rules.to_vec());
    Ok(!sld_prove(&program, &op.pre, budget)?.is_empty())
}

/// The state transition s2 = (s1 \ Del) ∪ Add. Set semantics: an atom both
/// deleted and added ends up present.
pub fn apply(state: &State, op: &InstantiatedOperator) -> State {
    let mut atoms = state.atoms.clone();
    for d in &op.del {
        atoms.remove(d);
    }
    for a in &op.add {
        debug_assert!(a.is_ground());
        atoms.insert(a.clone());
    }
    State { atoms }
}

/// Goal test: every goal atom holds in the state (subset test).
pub fn goal_satisfied(state: &State, goal: &State) -> bool {
    goal.atoms.is_subset(&state.atoms)
}

/// Executes a case's plan in the domain, returning the full state sequence
/// s_0..s_n. Fails when an operator is inapplicable at some index or the
/// goal is not contained in the final state.
pub fn execute_plan(
    case: &PlanningCase,
    domain: &Domain,
    budget: ProofBudget,
) -> Result<Vec<State>, DomainError> {
    let mut states = vec![case.problem.initial.clone()];
    for (i, op) in case.plan.iter().enumerate() {
        // Re-derive the instance from the schema so corrupted effect lists
        // in stored cases cannot smuggle in unsound transitions.
        let schema = domain
            .operator(op.name)
            .ok_or_else(|| DomainError::UnknownOperator(op.name.as_str().to_owned()))?;
        let inst = instantiate(schema, &op.args)?;
        let current = states.last().unwrap();
        if !is_applicable(current, &inst, &domain.rules, budget)? {
            return Err(DomainError::NotApplicable {
                index: i,
                op: inst.to_string(),
            });
        }
        states.push(apply(current, &inst));
    }
    if !goal_satisfied(states.last().unwrap(), &case.problem.goal) {
        return Err(DomainError::GoalNotReached);
    }
    Ok(states)
}

/// True when the atom's predicate is a built-in (and hence may appear in
/// preconditions and rule bodies but never in states or effect lists).
pub fn is_builtin_atom(atom: &Atom) -> bool {
    is_builtin(atom.pred.as_str()) || atom.pred.as_str() == "naf"
}
