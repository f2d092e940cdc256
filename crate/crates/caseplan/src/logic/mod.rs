//! First-order terms, unification, and a budgeted SLD-resolution engine over
//! Horn programs with a small set of evaluable built-in predicates.
//!
//! The engine uses leftmost literal selection and clause declaration order,
//! enumerates every answer substitution deterministically, and records a
//! derivation tree for each answer. The occurs check is enabled. A
//! [`ProofBudget`] converts nonterminating theories into a detectable
//! [`LogicError::BudgetExceeded`] error, which is distinct from an empty
//! answer set.
//!
//! Built-in predicates: `sum/3`, `diff/3`, `lt/2`, `le/2`, `eq/2`, `neq/2`,
//! and the bounded ground negation `naf/N`.

mod builtin;
mod program;
mod solve;
mod term;
mod unify;

pub use builtin::{eval_builtin, is_builtin};
pub use program::{HornClause, Program};
pub use solve::{essential_leaves, sld_prove, Derivation, DerivationNode, LogicError, ProofBudget};
pub use term::{Atom, Subst, Sym, Term, VarId};
pub use unify::{unify, unify_atoms, unify_terms};
