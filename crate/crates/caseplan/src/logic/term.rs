use std::collections::{BTreeMap, HashSet};
use std::fmt;
use std::sync::Mutex;

use once_cell::sync::Lazy;

static INTERNER: Lazy<Mutex<HashSet<&'static str>>> = Lazy::new(|| Mutex::new(HashSet::new()));

/// An interned symbol. Cheap to copy and compare; ordered by name so that
/// derived orderings on terms and atoms are lexicographic and stable.
#[derive(Clone, Copy)]
pub struct Sym(&'static str);

impl Sym {
    pub fn new(name: &str) -> Sym {
        let mut set = INTERNER.lock().unwrap();
        if let Some(s) = set.get(name) {
            return Sym(s);
        }
        let leaked: &'static str = Box::leak(name.to_owned().into_boxed_str());
        set.insert(leaked);
        Sym(leaked)
    }

    pub fn as_str(&self) -> &'static str {
        self.0
    }
}

impl PartialEq for Sym {
    fn eq(&self, other: &Sym) -> bool {
        std::ptr::eq(self.0, other.0) || self.0 == other.0
    }
}
impl Eq for Sym {}
impl PartialOrd for Sym {
    fn partial_cmp(&self, other: &Sym) -> Option<std::cmp::Ordering> {
        Some(self.cmp(other))
    }
}
impl Ord for Sym {
    fn cmp(&self, other: &Sym) -> std::cmp::Ordering {
        self.0.cmp(other.0)
    }
}
impl std::hash::Hash for Sym {
    fn hash<H: std::hash::Hasher>(&self, state: &mut H) {
        self.0.hash(state)
    }
}
impl fmt::Debug for Sym {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}
impl fmt::Display for Sym {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

/// A variable identity: source name plus a renaming generation. Generation 0
/// is the variable as written; higher generations are fresh copies created
/// when clauses are standardized apart.
pub type VarId = (Sym, u32);

#[derive(Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Debug)]
pub enum Term {
    Var(Sym, u32),
    Int(i64),
    Const(Sym),
    Comp(Sym, Vec<Term>),
}

impl Term {
    pub fn var(name: &str) -> Term {
        Term::Var(Sym::new(name), 0)
    }

    pub fn constant(name: &str) -> Term {
        Term::Const(Sym::new(name))
    }

    pub fn comp(functor: &str, args: Vec<Term>) -> Term {
        Term::Comp(Sym::new(functor), args)
    }

    pub fn is_ground(&self) -> bool {
        match self {
            Term::Var(..) => false,
            Term::Int(_) | Term::Const(_) => true,
            Term::Comp(_, args) => args.iter().all(Term::is_ground),
        }
    }

    pub fn vars_into(&self, out: &mut Vec<VarId>) {
        match self {
            Term::Var(s, g) => {
                if !out.contains(&(*s, *g)) {
                    out.push((*s, *g));
                }
            }
            Term::Int(_) | Term::Const(_) => {}
            Term::Comp(_, args) => {
                for a in args {
                    a.vars_into(out);
                }
            }
        }
    }

    pub(crate) fn rename(&self, gen: u32) -> Term {
        match self {
            Term::Var(s, _) => Term::Var(*s, gen),
            Term::Int(_) | Term::Const(_) => self.clone(),
            Term::Comp(f, args) => Term::Comp(*f, args.iter().map(|a| a.rename(gen)).collect()),
        }
    }
}

impl fmt::Display for Term {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Term::Var(s, 0) => write!(f, "{}", s),
            Term::Var(s, g) => write!(f, "{}#{}", s, g),
            Term::Int(i) => write!(f, "{}", i),
            Term::Const(s) => write!(f, "{}", s),
            Term::Comp(functor, args) => {
                write!(f, "{}(", functor)?;
                for (i, a) in args.iter().enumerate() {
                    if i > 0 {
                        write!(f, ",")?;
                    }
                    write!(f, "{}", a)?;
                }
                write!(f, ")")
            }
        }
    }
}

#[derive(Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Debug)]
pub struct Atom {
    pub pred: Sym,
    pub args: Vec<Term>,
}

impl Atom {
    pub fn new(pred: &str, args: Vec<Term>) -> Atom {
        Atom {
            pred: Sym::new(pred),
            args,
        }
    }

    pub fn is_ground(&self) -> bool {
        self.args.iter().all(Term::is_ground)
    }

    pub fn vars(&self) -> Vec<VarId> {
        let mut out = Vec::new();
        for a in &self.args {
            a.vars_into(&mut out);
        }
        out
    }

    pub(crate) fn rename(&self, gen: u32) -> Atom {
        Atom {
            pred: self.pred,
            args: self.args.iter().map(|t| t.rename(gen)).collect(),
        }
    }
}

impl fmt::Display for Atom {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.args.is_empty() {
            return write!(f, "{}", self.pred);
        }
        write!(f, "{}(", self.pred)?;
        for (i, a) in self.args.iter().enumerate() {
            if i > 0 {
                write!(f, ",")?;
            }
            write!(f, "{}", a)?;
        }
        write!(f, ")")
    }
}

/// An idempotent substitution: a finite map from variables to terms. No
/// binding maps a variable to itself, and no right-hand side mentions a
/// bound variable.
#[derive(Clone, Default, PartialEq, Eq, Debug)]
pub struct Subst {
    map: BTreeMap<VarId, Term>,
}

impl Subst {
    pub fn new() -> Subst {
        Subst::default()
    }

    pub fn is_empty(&self) -> bool {
        self.map.is_empty()
    }

    pub fn get(&self, v: &VarId) -> Option<&Term> {
        self.map.get(v)
    }

    pub fn iter(&self) -> impl Iterator<Item = (&VarId, &Term)> {
        self.map.iter()
    }

    pub fn apply(&self, t: &Term) -> Term {
        match t {
            Term::Var(s, g) => self
                .map
                .get(&(*s, *g))
                .cloned()
                .unwrap_or_else(|| t.clone()),
            Term::Int(_) | Term::Const(_) => t.clone(),
            Term::Comp(f, args) => Term::Comp(*f, args.iter().map(|a| self.apply(a)).collect()),
        }
    }

    pub fn apply_atom(&self, a: &Atom) -> Atom {
        Atom {
            pred: a.pred,
            args: a.args.iter().map(|t| self.apply(t)).collect(),
        }
    }

    /// Binds `v` to `t`, composing with the existing bindings so the result
    /// stays idempotent. `t` must not contain `v` (the caller runs the
    /// occurs check).
    pub fn bind(&mut self, v: VarId, t: Term) {
        let t = self.apply(&t);
        if t == Term::Var(v.0, v.1) {
            return;
        }
        let single = {
            let mut m = BTreeMap::new();
            m.insert(v, t.clone());
            Subst { map: m }
        };
        for rhs in self.map.values_mut() {
            *rhs = single.apply(rhs);
        }
        self.map.insert(v, t);
    }

    /// Restricts the substitution to the given variables.
    pub fn restrict(&self, vars: &[VarId]) -> Subst {
        Subst {
            map: self
                .map
                .iter()
                .filter(|(v, _)| vars.contains(v))
                .map(|(v, t)| (*v, t.clone()))
                .collect(),
        }
    }
}

impl fmt::Display for Subst {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{{")?;
        for (i, ((s, g), t)) in self.map.iter().enumerate() {
            if i > 0 {
                write!(f, ", ")?;
            }
            if *g == 0 {
                write!(f, "{}->{}", s, t)?;
            } else {
                write!(f, "{}#{}->{}", s, g, t)?;
            }
        }
        write!(f, "}}")
    }
}
