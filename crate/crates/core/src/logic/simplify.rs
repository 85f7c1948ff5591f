use std::collections::BTreeMap;

use super::subst::subst_formula;
use super::{Formula, TcAtom, Term, Var};

/// Simplification under the unique-names axioms for actions and constants.
///
/// Equalities between action terms are decomposed argument-wise (or become
/// `false` for distinct action functions), distinct constants are unequal,
/// boolean constants are propagated, vacuous quantifiers are dropped and
/// one-point equalities under quantifiers are eliminated. The rewrite is
/// iterated to a fixpoint, so the function is idempotent.
pub fn una_simplify(phi: &Formula) -> Formula {
    let mut cur = phi.clone();
    loop {
        let next = simp(&cur);
        if next == cur {
            return next;
        }
        cur = next;
    }
}

fn simp_term(t: &Term) -> Term {
    match t {
        Term::Count(vs, body) => Term::Count(vs.clone(), Box::new(simp(body))),
        Term::App(f, args) => Term::App(f.clone(), args.iter().map(simp_term).collect()),
        other => other.clone(),
    }
}

fn simp_eq(a: Term, b: Term) -> Formula {
    if a == b {
        return Formula::True;
    }
    match (&a, &b) {
        (Term::App(f, xs), Term::App(g, ys)) => {
            if f != g || xs.len() != ys.len() {
                Formula::False
            } else {
                mk_and(
                    xs.iter()
                        .zip(ys)
                        .map(|(x, y)| simp_eq(x.clone(), y.clone()))
                        .collect(),
                )
            }
        }
        (Term::Const(c), Term::Const(d)) if c != d => Formula::False,
        // Orient variables to the left.
        (Term::Const(_) | Term::App(..), Term::Var(_)) => Formula::Eq(b, a),
        _ => Formula::Eq(a, b),
    }
}

fn is_negation_of(a: &Formula, b: &Formula) -> bool {
    matches!(a, Formula::Not(x) if **x == *b) || matches!(b, Formula::Not(y) if **y == *a)
}

fn mk_and(parts: Vec<Formula>) -> Formula {
    let mut out: Vec<Formula> = Vec::new();
    for p in parts {
        match p {
            Formula::True => {}
            Formula::False => return Formula::False,
            Formula::And(inner) => {
                for q in inner {
                    if !out.contains(&q) {
                        out.push(q);
                    }
                }
            }
            q => {
                if !out.contains(&q) {
                    out.push(q);
                }
            }
        }
    }
    for (i, a) in out.iter().enumerate() {
        if out[i + 1..].iter().any(|b| is_negation_of(a, b)) {
            return Formula::False;
        }
    }
    match out.len() {
        0 => Formula::True,
        1 => out.pop().unwrap(),
        _ => Formula::And(out),
    }
}

fn mk_or(parts: Vec<Formula>) -> Formula {
    let mut out: Vec<Formula> = Vec::new();
    for p in parts {
        match p {
            Formula::False => {}
            Formula::True => return Formula::True,
            Formula::Or(inner) => {
                for q in inner {
                    if !out.contains(&q) {
                        out.push(q);
                    }
                }
            }
            q => {
                if !out.contains(&q) {
                    out.push(q);
                }
            }
        }
    }
    for (i, a) in out.iter().enumerate() {
        if out[i + 1..].iter().any(|b| is_negation_of(a, b)) {
            return Formula::True;
        }
    }
    match out.len() {
        0 => Formula::False,
        1 => out.pop().unwrap(),
        _ => Formula::Or(out),
    }
}

fn mk_not(f: Formula) -> Formula {
    match f {
        Formula::True => Formula::False,
        Formula::False => Formula::True,
        Formula::Not(g) => *g,
        // A negated conjunction of equalities, as produced by unique names,
        // reads better as a disjunction of disequalities.
        Formula::And(gs) if gs.iter().all(|g| matches!(g, Formula::Eq(..))) => {
            mk_or(gs.into_iter().map(Formula::not).collect())
        }
        g => Formula::not(g),
    }
}

/// Finds `v = t` (or `t = v`) among `lits` with `v` in `vars` and `v` not
/// free in `t`; returns the literal index, the variable and the term.
fn find_definition(vars: &[Var], lits: &[Formula], negated: bool) -> Option<(usize, Var, Term)> {
    for (i, lit) in lits.iter().enumerate() {
        let eq = match (lit, negated) {
            (Formula::Eq(a, b), false) => Some((a, b)),
            (Formula::Not(inner), true) => match &**inner {
                Formula::Eq(a, b) => Some((a, b)),
                _ => None,
            },
            _ => None,
        };
        let Some((a, b)) = eq else { continue };
        for (x, t) in [(a, b), (b, a)] {
            if let Term::Var(v) = x {
                if vars.contains(v) && !super::term_free_vars(t).contains(v) && t.sort() == Some(v.sort) {
                    return Some((i, v.clone(), t.clone()));
                }
            }
        }
    }
    None
}

fn mk_quant(forall: bool, vars: Vec<Var>, body: Formula) -> Formula {
    let free = body.free_vars();
    let vars: Vec<Var> = vars.into_iter().filter(|v| free.contains(v)).collect();
    if vars.is_empty() {
        return body;
    }
    // One-point rule: ∃x. x=t ∧ φ ≡ φ[t/x] and ∀x. x≠t ∨ φ ≡ φ[t/x].
    let lits: Vec<Formula> = match (&body, forall) {
        (Formula::And(cs), false) => cs.clone(),
        (Formula::Or(cs), true) => cs.clone(),
        (Formula::Imply(a, b), true) => {
            let mut v: Vec<Formula> = a.conjuncts().into_iter().map(Formula::not).collect();
            v.push((**b).clone());
            v
        }
        (other, _) => vec![other.clone()],
    };
    if let Some((i, v, t)) = find_definition(&vars, &lits, forall) {
        let mut map = BTreeMap::new();
        map.insert(v.clone(), t);
        let rest: Vec<Formula> = lits
            .iter()
            .enumerate()
            .filter(|(j, _)| *j != i)
            .map(|(_, l)| subst_formula(l, &map))
            .collect();
        let new_body = if forall { mk_or(rest) } else { mk_and(rest) };
        let remaining: Vec<Var> = vars.into_iter().filter(|w| *w != v).collect();
        return mk_quant(forall, remaining, new_body);
    }
    if forall {
        Formula::Forall(vars, Box::new(body))
    } else {
        Formula::Exists(vars, Box::new(body))
    }
}

fn simp(f: &Formula) -> Formula {
    match f {
        Formula::True | Formula::False => f.clone(),
        Formula::Atom(p, args) => Formula::Atom(p.clone(), args.iter().map(simp_term).collect()),
        Formula::Eq(a, b) => simp_eq(simp_term(a), simp_term(b)),
        Formula::Cmp { op, lhs, rhs } => Formula::Cmp {
            op: *op,
            lhs: simp_term(lhs),
            rhs: rhs.clone(),
        },
        Formula::Not(g) => mk_not(simp(g)),
        Formula::And(gs) => mk_and(gs.iter().map(simp).collect()),
        Formula::Or(gs) => mk_or(gs.iter().map(simp).collect()),
        Formula::Imply(a, b) => {
            let (a, b) = (simp(a), simp(b));
            match (&a, &b) {
                (Formula::False, _) | (_, Formula::True) => Formula::True,
                (Formula::True, _) => b,
                (_, Formula::False) => mk_not(a),
                _ if a == b => Formula::True,
                _ => Formula::imply(a, b),
            }
        }
        Formula::Iff(a, b) => {
            let (a, b) = (simp(a), simp(b));
            match (&a, &b) {
                _ if a == b => Formula::True,
                (Formula::True, _) => b,
                (_, Formula::True) => a,
                (Formula::False, _) => mk_not(b),
                (_, Formula::False) => mk_not(a),
                _ => Formula::iff(a, b),
            }
        }
        Formula::Forall(vs, g) => mk_quant(true, vs.clone(), simp(g)),
        Formula::Exists(vs, g) => mk_quant(false, vs.clone(), simp(g)),
        Formula::Tc(tc) => {
            let left: Vec<Term> = tc.left.iter().map(simp_term).collect();
            let right: Vec<Term> = tc.right.iter().map(simp_term).collect();
            if left == right {
                // Reflexive closure.
                return Formula::True;
            }
            let body = simp(&tc.body);
            if body == Formula::False {
                return mk_and(left.into_iter().zip(right).map(|(l, r)| simp_eq(l, r)).collect());
            }
            Formula::Tc(Box::new(TcAtom {
                from: tc.from.clone(),
                to: tc.to.clone(),
                body,
                left,
                right,
            }))
        }
        Formula::Poss(t) => Formula::Poss(simp_term(t)),
        Formula::After(t, g) => Formula::after(simp_term(t), simp(g)),
        Formula::Frozen(g) => match simp(g) {
            Formula::True => Formula::True,
            Formula::False => Formula::False,
            inner => Formula::frozen(inner),
        },
    }
}

/// Negation normal form. Implications are eliminated; equivalences are kept
/// (negation is pushed into their right-hand side).
pub fn nnf(phi: &Formula) -> Formula {
    pos(phi)
}

fn nnf_term(t: &Term) -> Term {
    match t {
        Term::Count(vs, body) => Term::Count(vs.clone(), Box::new(pos(body))),
        Term::App(f, args) => Term::App(f.clone(), args.iter().map(nnf_term).collect()),
        other => other.clone(),
    }
}

fn nnf_tc(tc: &TcAtom) -> Formula {
    Formula::Tc(Box::new(TcAtom {
        from: tc.from.clone(),
        to: tc.to.clone(),
        body: pos(&tc.body),
        left: tc.left.iter().map(nnf_term).collect(),
        right: tc.right.iter().map(nnf_term).collect(),
    }))
}

fn leaf(f: &Formula) -> Formula {
    match f {
        Formula::Atom(p, args) => Formula::Atom(p.clone(), args.iter().map(nnf_term).collect()),
        Formula::Eq(a, b) => Formula::Eq(nnf_term(a), nnf_term(b)),
        Formula::Cmp { op, lhs, rhs } => Formula::Cmp {
            op: *op,
            lhs: nnf_term(lhs),
            rhs: rhs.clone(),
        },
        Formula::Tc(tc) => nnf_tc(tc),
        Formula::Poss(t) => Formula::Poss(nnf_term(t)),
        other => other.clone(),
    }
}

fn pos(f: &Formula) -> Formula {
    match f {
        Formula::Not(g) => neg(g),
        Formula::And(gs) => Formula::And(gs.iter().map(pos).collect()),
        Formula::Or(gs) => Formula::Or(gs.iter().map(pos).collect()),
        Formula::Imply(a, b) => Formula::Or(vec![neg(a), pos(b)]),
        Formula::Iff(a, b) => Formula::iff(pos(a), pos(b)),
        Formula::Forall(vs, g) => Formula::Forall(vs.clone(), Box::new(pos(g))),
        Formula::Exists(vs, g) => Formula::Exists(vs.clone(), Box::new(pos(g))),
        Formula::After(t, g) => Formula::after(nnf_term(t), pos(g)),
        Formula::Frozen(g) => Formula::frozen(pos(g)),
        other => leaf(other),
    }
}

fn neg(f: &Formula) -> Formula {
    match f {
        Formula::True => Formula::False,
        Formula::False => Formula::True,
        Formula::Not(g) => pos(g),
        Formula::And(gs) => Formula::Or(gs.iter().map(neg).collect()),
        Formula::Or(gs) => Formula::And(gs.iter().map(neg).collect()),
        Formula::Imply(a, b) => Formula::And(vec![pos(a), neg(b)]),
        Formula::Iff(a, b) => Formula::iff(pos(a), neg(b)),
        Formula::Forall(vs, g) => Formula::Exists(vs.clone(), Box::new(neg(g))),
        Formula::Exists(vs, g) => Formula::Forall(vs.clone(), Box::new(neg(g))),
        // Situation markers commute with negation.
        Formula::After(t, g) => Formula::after(nnf_term(t), neg(g)),
        Formula::Frozen(g) => Formula::frozen(neg(g)),
        other => Formula::not(leaf(other)),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn app(f: &str, args: &[Term]) -> Term {
        Term::App(f.into(), args.to_vec())
    }

    fn c(n: &str) -> Term {
        Term::constant(n)
    }

    #[test]
    fn reflexive_action_equality_is_true() {
        let t = app("unstack", &[c("A"), c("B")]);
        assert_eq!(una_simplify(&Formula::Eq(t.clone(), t)), Formula::True);
    }

    #[test]
    fn distinct_action_functions_are_unequal() {
        let f = Formula::Eq(
            app("unstack", &[Term::var("x"), Term::var("y")]),
            app("mt", &[Term::var("z")]),
        );
        assert_eq!(una_simplify(&f), Formula::False);
    }

    #[test]
    fn conjunction_with_refuted_action_equality_collapses() {
        let t = app("unstack", &[c("A"), c("B")]);
        let f = Formula::And(vec![
            Formula::atom("on", vec![c("A"), c("B")]),
            Formula::not(Formula::Eq(t.clone(), t)),
        ]);
        assert_eq!(una_simplify(&f), Formula::False);
    }

    #[test]
    fn argumentwise_decomposition_orients_variables_left() {
        let f = Formula::Eq(
            app("unstack", &[c("A"), c("B")]),
            app("unstack", &[Term::var("x"), Term::var("y")]),
        );
        assert_eq!(
            una_simplify(&f),
            Formula::And(vec![
                Formula::Eq(Term::var("x"), c("A")),
                Formula::Eq(Term::var("y"), c("B")),
            ])
        );
    }

    #[test]
    fn one_point_rule_under_exists() {
        let a = Var::action("a");
        let f = Formula::exists(
            vec![Var::object("x1"), Var::object("y1")],
            Formula::And(vec![
                Formula::Eq(Term::Var(a.clone()), app("unstack", &[Term::var("x1"), Term::var("y1")])),
                Formula::Eq(Term::var("x"), Term::var("x1")),
                Formula::Eq(Term::var("y"), Term::var("y1")),
            ]),
        );
        assert_eq!(
            una_simplify(&f),
            Formula::Eq(Term::Var(a), app("unstack", &[Term::var("x"), Term::var("y")]))
        );
    }

    #[test]
    fn nnf_pushes_negation_through_quantifiers() {
        let f = Formula::not(Formula::exists(
            vec![Var::object("x")],
            Formula::imply(Formula::atom("p", vec![Term::var("x")]), Formula::False),
        ));
        let g = nnf(&f);
        assert_eq!(
            g,
            Formula::Forall(
                vec![Var::object("x")],
                Box::new(Formula::And(vec![
                    Formula::atom("p", vec![Term::var("x")]),
                    Formula::True
                ]))
            )
        );
    }
}
