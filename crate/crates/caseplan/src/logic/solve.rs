use std::collections::BTreeSet;

use thiserror::Error;

use super::builtin::{eval_builtin, is_builtin};
use super::program::Program;
use super::term::{Atom, Subst, Sym, Term};
use super::unify::unify_atoms;

#[derive(Error, Debug, Clone, PartialEq, Eq)]
pub enum LogicError {
    #[error("proof budget exceeded")]
    BudgetExceeded,
    #[error("instantiation error: {0}")]
    Instantiation(String),
    #[error("type error: {0}")]
    Type(String),
}

/// Caps on the SLD search so that nonterminating theories become a
/// detectable error instead of a hang.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct ProofBudget {
    pub max_steps: u64,
    pub max_depth: u32,
}

impl Default for ProofBudget {
    fn default() -> ProofBudget {
        ProofBudget {
            max_steps: 100_000,
            max_depth: 200,
        }
    }
}

/// One node of a derivation tree. Inner nodes record the clause resolved
/// against; leaves record a state atom, a program fact, a satisfied
/// built-in, or a successful negation-as-failure check.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum DerivationNode {
    Rule {
        goal: Atom,
        clause: usize,
        children: Vec<DerivationNode>,
    },
    StateAtom {
        atom: Atom,
    },
    Fact {
        atom: Atom,
        clause: usize,
    },
    Builtin {
        atom: Atom,
    },
    Naf {
        atom: Atom,
    },
}

impl DerivationNode {
    fn resolve(&self, s: &Subst) -> DerivationNode {
        match self {
            DerivationNode::Rule {
                goal,
                clause,
                children,
            } => DerivationNode::Rule {
                goal: s.apply_atom(goal),
                clause: *clause,
                children: children.iter().map(|c| c.resolve(s)).collect(),
            },
            DerivationNode::StateAtom { atom } => DerivationNode::StateAtom {
                atom: s.apply_atom(atom),
            },
            DerivationNode::Fact { atom, clause } => DerivationNode::Fact {
                atom: s.apply_atom(atom),
                clause: *clause,
            },
            DerivationNode::Builtin { atom } => DerivationNode::Builtin {
                atom: s.apply_atom(atom),
            },
            DerivationNode::Naf { atom } => DerivationNode::Naf {
                atom: s.apply_atom(atom),
            },
        }
    }

    fn leaves_into<'a>(&'a self, out: &mut Vec<(&'a Atom, bool)>) {
        match self {
            DerivationNode::Rule { children, .. } => {
                for c in children {
                    c.leaves_into(out);
                }
            }
            DerivationNode::StateAtom { atom } => out.push((atom, true)),
            DerivationNode::Fact { atom, .. } => out.push((atom, false)),
            DerivationNode::Builtin { atom } | DerivationNode::Naf { atom } => {
                out.push((atom, false))
            }
        }
    }
}

/// A full derivation of a goal conjunction: one tree per goal literal.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Derivation {
    pub goals: Vec<Atom>,
    pub roots: Vec<DerivationNode>,
}

/// The leaves of a derivation that are state atoms over one of the given
/// essential predicates.
pub fn essential_leaves(derivation: &Derivation, essentials: &BTreeSet<Sym>) -> BTreeSet<Atom> {
    let mut leaves = Vec::new();
    for r in &derivation.roots {
        r.leaves_into(&mut leaves);
    }
    leaves
        .into_iter()
        .filter(|(a, from_state)| *from_state && essentials.contains(&a.pred))
        .map(|(a, _)| a.clone())
        .collect()
}

struct Ctx<'a> {
    program: &'a Program,
    budget: ProofBudget,
    steps: u64,
    rename_gen: u32,
}

impl Ctx<'_> {
    fn step(&mut self) -> Result<(), LogicError> {
        self.steps += 1;
        if self.steps > self.budget.max_steps {
            Err(LogicError::BudgetExceeded)
        } else {
            Ok(())
        }
    }
}

fn term_to_atom(t: &Term) -> Result<Atom, LogicError> {
    match t {
        Term::Const(c) => Ok(Atom {
            pred: *c,
            args: vec![],
        }),
        Term::Comp(f, args) => Ok(Atom {
            pred: *f,
            args: args.clone(),
        }),
        _ => Err(LogicError::Type(format!(
            "naf argument {} does not encode an atom",
            t
        ))),
    }
}

fn prove_one(
    ctx: &mut Ctx,
    goal: &Atom,
    subst: &Subst,
    depth: u32,
    out: &mut Vec<(Subst, DerivationNode)>,
) -> Result<(), LogicError> {
    let goal = subst.apply_atom(goal);
    if depth >= ctx.budget.max_depth {
        return Err(LogicError::BudgetExceeded);
    }
    let pred = goal.pred.as_str();
    if is_builtin(pred) {
        ctx.step()?;
        for s in eval_builtin(&goal, subst)? {
            let atom = s.apply_atom(&goal);
            out.push((s, DerivationNode::Builtin { atom }));
        }
        return Ok(());
    }
    if pred == "naf" {
        ctx.step()?;
        let inner: Vec<Atom> = goal
            .args
            .iter()
            .map(term_to_atom)
            .collect::<Result<_, _>>()?;
        if inner.iter().any(|a| !a.is_ground()) {
            return Err(LogicError::Instantiation(format!(
                "naf goal {} not ground",
                goal
            )));
        }
        let remaining = ProofBudget {
            max_steps: ctx.budget.max_steps.saturating_sub(ctx.steps).max(1),
            max_depth: ctx.budget.max_depth,
        };
        let answers = sld_prove(ctx.program, &inner, remaining)?;
        if answers.is_empty() {
            out.push((subst.clone(), DerivationNode::Naf { atom: goal }));
        }
        return Ok(());
    }
    for &i in ctx.program.state_candidates(goal.pred) {
        ctx.step()?;
        let fact = &ctx.program.state()[i];
        let mut s = subst.clone();
        if unify_atoms(&goal, fact, &mut s) {
            out.push((s, DerivationNode::StateAtom { atom: fact.clone() }));
        }
    }
    for &i in ctx.program.clause_candidates(goal.pred) {
        ctx.step()?;
        let clause = &ctx.program.clauses()[i];
        ctx.rename_gen += 1;
        let gen = ctx.rename_gen;
        let head = clause.head.rename(gen);
        let mut s = subst.clone();
        if !unify_atoms(&goal, &head, &mut s) {
            continue;
        }
        if clause.body.is_empty() {
            let atom = s.apply_atom(&head);
            out.push((s, DerivationNode::Fact { atom, clause: i }));
            continue;
        }
        let body: Vec<Atom> = clause.body.iter().map(|a| a.rename(gen)).collect();
        let mut sub = Vec::new();
        prove_conj(ctx, &body, &s, depth + 1, &mut sub)?;
        for (s2, children) in sub {
            let goal = s2.apply_atom(&goal);
            out.push((
                s2,
                DerivationNode::Rule {
                    goal,
                    clause: i,
                    children,
                },
            ));
        }
    }
    Ok(())
}

fn prove_conj(
    ctx: &mut Ctx,
    goals: &[Atom],
    subst: &Subst,
    depth: u32,
    out: &mut Vec<(Subst, Vec<DerivationNode>)>,
) -> Result<(), LogicError> {
    let Some((first, rest)) = goals.split_first() else {
        out.push((subst.clone(), Vec::new()));
        return Ok(());
    };
    let mut firsts = Vec::new();
    prove_one(ctx, first, subst, depth, &mut firsts)?;
    for (s1, node) in firsts {
        let mut tails = Vec::new();
        prove_conj(ctx, rest, &s1, depth, &mut tails)?;
        for (s2, mut nodes) in tails {
            nodes.insert(0, node.clone());
            out.push((s2, nodes));
        }
    }
    Ok(())
}

/// Proves a goal conjunction by SLD resolution with leftmost literal
/// selection; state atoms are tried before clauses, clauses in declaration
/// order. Returns every answer substitution (restricted to the goal's
/// variables) paired with its derivation, in a deterministic order.
pub fn sld_prove(
    program: &Program,
    goals: &[Atom],
    budget: ProofBudget,
) -> Result<Vec<(Subst, Derivation)>, LogicError> {
    let mut ctx = Ctx {
        program,
        budget,
        steps: 0,
        rename_gen: 0,
    };
    let mut raw = Vec::new();
    prove_conj(&mut ctx, goals, &Subst::new(), 0, &mut raw)?;
    let mut goal_vars = Vec::new();
    for g in goals {
        for v in g.vars() {
            if !goal_vars.contains(&v) {
                goal_vars.push(v);
            }
        }
    }
    Ok(raw
        .into_iter()
        .map(|(s, nodes)| {
            let roots = nodes.iter().map(|n| n.resolve(&s)).collect();
            (
                s.restrict(&goal_vars),
                Derivation {
                    goals: goals.to_vec(),
                    roots,
                },
            )
        })
        .collect())
}
