use super::solve::LogicError;
use super::term::{Atom, Subst, Term};
use super::unify::unify_terms;

const BUILTINS: &[&str] = &["sum", "diff", "lt", "le", "eq", "neq"];

/// True for the evaluable predicates, excluding `naf` (which the resolution
/// engine handles itself because it needs the program).
pub fn is_builtin(pred: &str) -> bool {
    BUILTINS.contains(&pred)
}

fn as_int(atom: &Atom, t: &Term) -> Result<Option<i64>, LogicError> {
    match t {
        Term::Int(i) => Ok(Some(*i)),
        Term::Var(..) => Ok(None),
        _ => Err(LogicError::Type(format!(
            "non-integer argument {} in built-in {}",
            t, atom
        ))),
    }
}

fn arith(
    atom: &Atom,
    bindings: &Subst,
    f: impl Fn(i64, i64) -> i64,     // c from (a, b)
    inv_a: impl Fn(i64, i64) -> i64, // a from (b, c)
    inv_b: impl Fn(i64, i64) -> i64, // b from (a, c)
) -> Result<Vec<Subst>, LogicError> {
    if atom.args.len() != 3 {
        return Err(LogicError::Type(format!(
            "{} expects 3 arguments",
            atom.pred
        )));
    }
    let args: Vec<Term> = atom.args.iter().map(|t| bindings.apply(t)).collect();
    let a = as_int(atom, &args[0])?;
    let b = as_int(atom, &args[1])?;
    let c = as_int(atom, &args[2])?;
    let (va, vb, vc) = match (a, b, c) {
        (Some(a), Some(b), _) => (a, b, f(a, b)),
        (Some(a), None, Some(c)) => (a, inv_b(a, c), c),
        (None, Some(b), Some(c)) => (inv_a(b, c), b, c),
        _ => {
            return Err(LogicError::Instantiation(format!(
                "built-in {} needs at least two ground arguments",
                atom
            )))
        }
    };
    let mut s = bindings.clone();
    if unify_terms(&args[0], &Term::Int(va), &mut s)
        && unify_terms(&args[1], &Term::Int(vb), &mut s)
        && unify_terms(&args[2], &Term::Int(vc), &mut s)
    {
        Ok(vec![s])
    } else {
        Ok(vec![])
    }
}

fn compare(
    atom: &Atom,
    bindings: &Subst,
    ints_only: bool,
    f: impl Fn(&Term, &Term) -> bool,
) -> Result<Vec<Subst>, LogicError> {
    if atom.args.len() != 2 {
        return Err(LogicError::Type(format!(
            "{} expects 2 arguments",
            atom.pred
        )));
    }
    let a = bindings.apply(&atom.args[0]);
    let b = bindings.apply(&atom.args[1]);
    if !a.is_ground() || !b.is_ground() {
        return Err(LogicError::Instantiation(format!(
            "built-in {} needs ground arguments",
            atom
        )));
    }
    if ints_only {
        as_int(atom, &a)?;
        as_int(atom, &b)?;
    }
    if f(&a, &b) {
        Ok(vec![bindings.clone()])
    } else {
        Ok(vec![])
    }
}

/// Evaluates a built-in atom under the current bindings, returning every
/// extended substitution that satisfies it.
pub fn eval_builtin(atom: &Atom, bindings: &Subst) -> Result<Vec<Subst>, LogicError> {
    match atom.pred.as_str() {
        "sum" => arith(atom, bindings, |a, b| a + b, |b, c| c - b, |a, c| c - a),
        "diff" => arith(atom, bindings, |a, b| a - b, |b, c| c + b, |a, c| a - c),
        "lt" => compare(atom, bindings, true, |a, b| a < b),
        "le" => compare(atom, bindings, true, |a, b| a <= b),
        "eq" => compare(atom, bindings, false, |a, b| a == b),
        "neq" => compare(atom, bindings, false, |a, b| a != b),
        other => Err(LogicError::Type(format!("unknown built-in {}", other))),
    }
}
