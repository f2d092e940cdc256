use super::term::{Atom, Subst, Term, VarId};

fn occurs(v: &VarId, t: &Term) -> bool {
    match t {
        Term::Var(s, g) => (*s, *g) == *v,
        Term::Int(_) | Term::Const(_) => false,
        Term::Comp(_, args) => args.iter().any(|a| occurs(v, a)),
    }
}

/// Extends `subst` so that `a` and `b` become equal, or returns false when
/// they cannot be unified. Occurs check enabled.
pub fn unify_terms(a: &Term, b: &Term, subst: &mut Subst) -> bool {
    let a = subst.apply(a);
    let b = subst.apply(b);
    match (&a, &b) {
        (Term::Var(x, gx), Term::Var(y, gy)) if (x, gx) == (y, gy) => true,
        (Term::Var(x, g), t) | (t, Term::Var(x, g)) => {
            if occurs(&(*x, *g), t) {
                false
            } else {
                subst.bind((*x, *g), t.clone());
                true
            }
        }
        (Term::Int(i), Term::Int(j)) => i == j,
        (Term::Const(c), Term::Const(d)) => c == d,
        (Term::Comp(f, fa), Term::Comp(g, ga)) if f == g && fa.len() == ga.len() => fa
            .iter()
            .zip(ga.iter())
            .all(|(x, y)| unify_terms(x, y, subst)),
        _ => false,
    }
}

/// Extends `subst` to unify two atoms.
pub fn unify_atoms(a: &Atom, b: &Atom, subst: &mut Subst) -> bool {
    a.pred == b.pred
        && a.args.len() == b.args.len()
        && a.args
            .iter()
            .zip(b.args.iter())
            .all(|(x, y)| unify_terms(x, y, subst))
}

/// Returns a most general unifier of two atoms when one exists. The result
/// is idempotent.
pub fn unify(a: &Atom, b: &Atom) -> Option<Subst> {
    let mut s = Subst::new();
    if unify_atoms(a, b, &mut s) {
        Some(s)
    } else {
        None
    }
}
