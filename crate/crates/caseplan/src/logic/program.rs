use std::collections::{BTreeSet, HashMap};
use std::fmt;

use super::term::{Atom, Sym};

/// A Horn clause `head :- body`. Facts have an empty body.
#[derive(Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Debug)]
pub struct HornClause {
    pub head: Atom,
    pub body: Vec<Atom>,
}

impl HornClause {
    pub fn fact(head: Atom) -> HornClause {
        HornClause {
            head,
            body: Vec::new(),
        }
    }
}

impl fmt::Display for HornClause {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.head)?;
        if !self.body.is_empty() {
            write!(f, " :- ")?;
            for (i, a) in self.body.iter().enumerate() {
                if i > 0 {
                    write!(f, ", ")?;
                }
                write!(f, "{}", a)?;
            }
        }
        write!(f, ".")
    }
}

/// A Horn program: a set of ground state atoms plus a sequence of clauses.
/// State atoms are kept separate from clause facts so derivation leaves can
/// record which atoms of a proof came from the current state.
///
/// Resolution tries state atoms first (in canonical order), then clauses in
/// declaration order.
#[derive(Clone, Debug, Default)]
pub struct Program {
    state: Vec<Atom>,
    clauses: Vec<HornClause>,
    by_pred: HashMap<Sym, (Vec<usize>, Vec<usize>)>,
}

impl Program {
    pub fn new(state: impl IntoIterator<Item = Atom>, clauses: Vec<HornClause>) -> Program {
        let state: Vec<Atom> = state
            .into_iter()
            .collect::<BTreeSet<Atom>>()
            .into_iter()
            .collect();
        let mut by_pred: HashMap<Sym, (Vec<usize>, Vec<usize>)> = HashMap::new();
        for (i, a) in state.iter().enumerate() {
            debug_assert!(a.is_ground(), "state atom {} not ground", a);
            by_pred.entry(a.pred).or_default().0.push(i);
        }
        for (i, c) in clauses.iter().enumerate() {
            by_pred.entry(c.head.pred).or_default().1.push(i);
        }
        Program {
            state,
            clauses,
            by_pred,
        }
    }

    pub fn state(&self) -> &[Atom] {
        &self.state
    }

    pub fn clauses(&self) -> &[HornClause] {
        &self.clauses
    }

    pub(crate) fn state_candidates(&self, pred: Sym) -> &[usize] {
        self.by_pred.get(&pred).map(|p| &p.0[..]).unwrap_or(&[])
    }

    pub(crate) fn clause_candidates(&self, pred: Sym) -> &[usize] {
        self.by_pred.get(&pred).map(|p| &p.1[..]).unwrap_or(&[])
    }
}
