use std::collections::{BTreeMap, BTreeSet};

use super::{all_var_names, term_free_vars, Formula, LogicError, TcAtom, Term, Var};

/// Capture-avoiding substitution of free variables.
///
/// Bound variables that would capture a free variable of an incoming term
/// are renamed by appending primes (`x` becomes `x'`).
pub fn substitute(phi: &Formula, binding: &BTreeMap<Var, Term>) -> Result<Formula, LogicError> {
    check_sorts(binding)?;
    Ok(subst_formula(phi, binding))
}

pub fn substitute_term(t: &Term, binding: &BTreeMap<Var, Term>) -> Result<Term, LogicError> {
    check_sorts(binding)?;
    Ok(subst_term(t, binding))
}

fn check_sorts(binding: &BTreeMap<Var, Term>) -> Result<(), LogicError> {
    for (v, t) in binding {
        if t.sort() != Some(v.sort) {
            return Err(LogicError::SortMismatch {
                var: v.name.clone(),
                expected: v.sort,
                term: t.to_string(),
            });
        }
    }
    Ok(())
}

/// `base` decorated with primes until it avoids every name in `avoid`.
pub fn fresh_name(base: &str, avoid: &BTreeSet<String>) -> String {
    let mut name = format!("{base}'");
    while avoid.contains(&name) {
        name.push('\'');
    }
    name
}

/// Renames the given bound variables of a binder so they avoid `avoid`,
/// returning the new variables and the renaming map for the body.
pub fn rename_bound(
    vars: &[Var],
    avoid: &BTreeSet<String>,
) -> (Vec<Var>, BTreeMap<Var, Term>) {
    let mut taken = avoid.clone();
    let mut renaming = BTreeMap::new();
    let mut out = Vec::with_capacity(vars.len());
    for v in vars {
        if taken.contains(&v.name) {
            let nv = Var {
                name: fresh_name(&v.name, &taken),
                sort: v.sort,
            };
            taken.insert(nv.name.clone());
            renaming.insert(v.clone(), Term::Var(nv.clone()));
            out.push(nv);
        } else {
            taken.insert(v.name.clone());
            out.push(v.clone());
        }
    }
    (out, renaming)
}

/// Prepares a binder for substitution: drops shadowed entries and renames
/// bound variables that would capture incoming free variables.
fn enter_binder(
    vars: &[Var],
    bodies: &[&Formula],
    map: &BTreeMap<Var, Term>,
) -> Option<(Vec<Var>, BTreeMap<Var, Term>)> {
    let mut inner: BTreeMap<Var, Term> = map
        .iter()
        .filter(|(k, _)| !vars.iter().any(|v| v.name == k.name))
        .map(|(k, v)| (k.clone(), v.clone()))
        .collect();
    // Only bindings for variables actually free in the body matter.
    let mut free = BTreeSet::new();
    for b in bodies {
        free.extend(b.free_vars());
    }
    inner.retain(|k, _| free.contains(k));
    if inner.is_empty() {
        return None;
    }
    let incoming: BTreeSet<String> = inner
        .values()
        .flat_map(|t| term_free_vars(t).into_iter().map(|v| v.name))
        .collect();
    if !vars.iter().any(|v| incoming.contains(&v.name)) {
        return Some((vars.to_vec(), inner));
    }
    let mut avoid = incoming.clone();
    for b in bodies {
        avoid.extend(all_var_names(b));
    }
    avoid.extend(inner.keys().map(|k| k.name.clone()));
    let clashing: Vec<Var> = vars.iter().filter(|v| incoming.contains(&v.name)).cloned().collect();
    let mut new_vars = Vec::with_capacity(vars.len());
    let mut taken = avoid.clone();
    taken.extend(vars.iter().map(|v| v.name.clone()));
    for v in vars {
        if clashing.contains(v) {
            let nv = Var {
                name: fresh_name(&v.name, &taken),
                sort: v.sort,
            };
            taken.insert(nv.name.clone());
            inner.insert(v.clone(), Term::Var(nv.clone()));
            new_vars.push(nv);
        } else {
            new_vars.push(v.clone());
        }
    }
    Some((new_vars, inner))
}

pub(crate) fn subst_term(t: &Term, map: &BTreeMap<Var, Term>) -> Term {
    match t {
        Term::Var(v) => map.get(v).cloned().unwrap_or_else(|| t.clone()),
        Term::Const(_) | Term::NumVar(_) => t.clone(),
        Term::App(f, args) => Term::App(f.clone(), args.iter().map(|a| subst_term(a, map)).collect()),
        Term::Count(vs, body) => match enter_binder(vs, &[body], map) {
            None => t.clone(),
            Some((nvs, inner)) => Term::Count(nvs, Box::new(subst_formula(body, &inner))),
        },
    }
}

pub(crate) fn subst_formula(f: &Formula, map: &BTreeMap<Var, Term>) -> Formula {
    if map.is_empty() {
        return f.clone();
    }
    match f {
        Formula::True | Formula::False => f.clone(),
        Formula::Atom(p, args) => Formula::Atom(p.clone(), args.iter().map(|t| subst_term(t, map)).collect()),
        Formula::Eq(a, b) => Formula::Eq(subst_term(a, map), subst_term(b, map)),
        Formula::Cmp { op, lhs, rhs } => Formula::Cmp {
            op: *op,
            lhs: subst_term(lhs, map),
            rhs: rhs.clone(),
        },
        Formula::Not(g) => Formula::not(subst_formula(g, map)),
        Formula::Frozen(g) => Formula::frozen(subst_formula(g, map)),
        Formula::And(gs) => Formula::And(gs.iter().map(|g| subst_formula(g, map)).collect()),
        Formula::Or(gs) => Formula::Or(gs.iter().map(|g| subst_formula(g, map)).collect()),
        Formula::Imply(a, b) => Formula::imply(subst_formula(a, map), subst_formula(b, map)),
        Formula::Iff(a, b) => Formula::iff(subst_formula(a, map), subst_formula(b, map)),
        Formula::Forall(vs, g) | Formula::Exists(vs, g) => match enter_binder(vs, &[g], map) {
            None => f.clone(),
            Some((nvs, inner)) => {
                let body = Box::new(subst_formula(g, &inner));
                if matches!(f, Formula::Forall(..)) {
                    Formula::Forall(nvs, body)
                } else {
                    Formula::Exists(nvs, body)
                }
            }
        },
        Formula::Tc(tc) => {
            let left = tc.left.iter().map(|t| subst_term(t, map)).collect();
            let right = tc.right.iter().map(|t| subst_term(t, map)).collect();
            let bound: Vec<Var> = tc.from.iter().chain(&tc.to).cloned().collect();
            let (from, to, body) = match enter_binder(&bound, &[&tc.body], map) {
                None => (tc.from.clone(), tc.to.clone(), tc.body.clone()),
                Some((nvs, inner)) => {
                    let k = tc.from.len();
                    (nvs[..k].to_vec(), nvs[k..].to_vec(), subst_formula(&tc.body, &inner))
                }
            };
            Formula::Tc(Box::new(TcAtom {
                from,
                to,
                body,
                left,
                right,
            }))
        }
        Formula::Poss(t) => Formula::Poss(subst_term(t, map)),
        Formula::After(t, g) => Formula::after(subst_term(t, map), subst_formula(g, map)),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::logic::{CmpOp, Bound};

    fn on(a: Term, b: Term) -> Formula {
        Formula::atom("on", vec![a, b])
    }

    fn bind(pairs: &[(&str, Term)]) -> BTreeMap<Var, Term> {
        pairs.iter().map(|(v, t)| (Var::object(*v), t.clone())).collect()
    }

    #[test]
    fn direct_replacement() {
        let f = on(Term::var("x"), Term::var("y"));
        let g = substitute(&f, &bind(&[("x", Term::constant("A"))])).unwrap();
        assert_eq!(g, on(Term::constant("A"), Term::var("y")));
    }

    #[test]
    fn capture_avoiding_rename() {
        let f = Formula::exists(vec![Var::object("x")], on(Term::var("x"), Term::var("y")));
        let g = substitute(&f, &bind(&[("y", Term::var("x"))])).unwrap();
        let expected = Formula::exists(
            vec![Var::object("x'")],
            on(Term::var("x'"), Term::var("x")),
        );
        assert_eq!(g, expected);
    }

    #[test]
    fn tc_arguments_are_ordinary_positions() {
        let tc = |l: Term| {
            Formula::Tc(Box::new(TcAtom {
                from: vec![Var::object("u")],
                to: vec![Var::object("v")],
                body: on(Term::var("u"), Term::var("v")),
                left: vec![l],
                right: vec![Term::constant("C")],
            }))
        };
        let g = substitute(&tc(Term::var("x")), &bind(&[("x", Term::constant("B"))])).unwrap();
        assert_eq!(g, tc(Term::constant("B")));
    }

    #[test]
    fn bound_occurrences_are_untouched() {
        let f = Formula::forall(vec![Var::object("x")], on(Term::var("x"), Term::var("x")));
        let g = substitute(&f, &bind(&[("x", Term::constant("A"))])).unwrap();
        assert_eq!(f, g);
    }

    #[test]
    fn count_binder_is_respected() {
        let f = Formula::Cmp {
            op: CmpOp::Eq,
            lhs: Term::Count(vec![Var::object("x")], Box::new(on(Term::var("x"), Term::var("y")))),
            rhs: Bound::Int(0),
        };
        let g = substitute(&f, &bind(&[("y", Term::var("x"))])).unwrap();
        assert!(g.free_vars().iter().any(|v| v.name == "x"));
        assert_eq!(g.free_vars().len(), 1);
    }

    #[test]
    fn sort_mismatch_is_an_error() {
        let f = on(Term::var("x"), Term::var("y"));
        let mut b = BTreeMap::new();
        b.insert(Var::object("x"), Term::App("mt".into(), vec![Term::constant("A")]));
        assert!(matches!(substitute(&f, &b), Err(LogicError::SortMismatch { .. })));
    }
}
