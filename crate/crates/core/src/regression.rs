//! One-step regression and its extensions over iteration-free programs.

use std::collections::{BTreeMap, BTreeSet, HashMap};

use thiserror::Error;

use crate::bat::{BasicActionTheory, BatError};
use crate::golog::Program;
use crate::logic::{
    self, fresh_name, una_simplify, Formula, LogicError, TcAtom, Term, Var,
};

#[derive(Debug, Error)]
pub enum RegressionError {
    #[error(transparent)]
    Bat(#[from] BatError),
    #[error(transparent)]
    Logic(#[from] LogicError),
    #[error("cannot regress {0}: not a low-level formula")]
    NotLowLevel(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
enum Mode {
    Exists,
    Forall,
}

pub struct RegressionContext<'a> {
    pub theory: &'a BasicActionTheory,
    memo: HashMap<(Mode, Formula, Program), Formula>,
}

impl<'a> RegressionContext<'a> {
    pub fn new(theory: &'a BasicActionTheory) -> Self {
        RegressionContext {
            theory,
            memo: HashMap::new(),
        }
    }

    /// `R_D`: eliminates every pending action and every `poss` atom.
    pub fn regress_step(&mut self, phi: &Formula) -> Result<Formula, RegressionError> {
        let mut err = None;
        let out = phi.map_children(&mut |f| match f {
            Formula::After(alpha, psi) => Some(
                self.regress_step(psi)
                    .and_then(|inner| self.under(alpha, &inner))
                    .unwrap_or_else(|e| {
                        err.get_or_insert(e);
                        Formula::False
                    }),
            ),
            Formula::Poss(alpha) => Some(self.poss(alpha).unwrap_or_else(|e| {
                err.get_or_insert(e);
                Formula::False
            })),
            _ => None,
        });
        match err {
            Some(e) => Err(e),
            None => Ok(una_simplify(&out)),
        }
    }

    fn poss(&self, alpha: &Term) -> Result<Formula, RegressionError> {
        match alpha {
            Term::App(name, args) => Ok(self.theory.precondition(name, args)?),
            other => Err(RegressionError::NotLowLevel(format!("(poss {other})"))),
        }
    }

    /// Regresses a situation-free formula through one action: each fluent atom
    /// outside `frozen` is replaced by its successor-state instance.
    pub fn under(&self, alpha: &Term, phi: &Formula) -> Result<Formula, RegressionError> {
        let fv: BTreeSet<String> = logic::term_free_vars(alpha).into_iter().map(|v| v.name).collect();
        let out = self.under_rec(alpha, &fv, phi)?;
        Ok(una_simplify(&out))
    }

    fn under_rec(&self, alpha: &Term, fv: &BTreeSet<String>, f: &Formula) -> Result<Formula, RegressionError> {
        let rec = |g: &Formula| self.under_rec(alpha, fv, g);
        Ok(match f {
            Formula::True | Formula::False | Formula::Eq(..) | Formula::Frozen(_) => f.clone(),
            Formula::Atom(p, args) => {
                if !self.theory.symbols.fluents.contains_key(p) {
                    return Err(RegressionError::NotLowLevel(f.to_string()));
                }
                self.theory.ssa(p)?.instantiate(args, alpha)?
            }
            Formula::Cmp { op, lhs, rhs } => match lhs {
                Term::Count(vs, body) => {
                    let (vs, body) = avoid_clash(vs, body, fv)?;
                    Formula::Cmp {
                        op: *op,
                        lhs: Term::Count(vs, Box::new(rec(&body)?)),
                        rhs: rhs.clone(),
                    }
                }
                _ => return Err(RegressionError::NotLowLevel(f.to_string())),
            },
            Formula::Not(g) => Formula::not(rec(g)?),
            Formula::And(gs) => Formula::And(gs.iter().map(rec).collect::<Result<_, _>>()?),
            Formula::Or(gs) => Formula::Or(gs.iter().map(rec).collect::<Result<_, _>>()?),
            Formula::Imply(a, b) => Formula::imply(rec(a)?, rec(b)?),
            Formula::Iff(a, b) => Formula::iff(rec(a)?, rec(b)?),
            Formula::Forall(vs, g) => {
                let (vs, g) = avoid_clash(vs, g, fv)?;
                Formula::Forall(vs, Box::new(rec(&g)?))
            }
            Formula::Exists(vs, g) => {
                let (vs, g) = avoid_clash(vs, g, fv)?;
                Formula::Exists(vs, Box::new(rec(&g)?))
            }
            Formula::Tc(tc) => {
                let bound: Vec<Var> = tc.from.iter().chain(&tc.to).cloned().collect();
                let (bound, body) = avoid_clash(&bound, &tc.body, fv)?;
                let k = tc.from.len();
                Formula::Tc(Box::new(TcAtom {
                    from: bound[..k].to_vec(),
                    to: bound[k..].to_vec(),
                    body: rec(&body)?,
                    left: tc.left.clone(),
                    right: tc.right.clone(),
                }))
            }
            Formula::Poss(_) | Formula::After(..) => {
                return Err(RegressionError::NotLowLevel(f.to_string()))
            }
        })
    }

    /// `R^E[φ, δ]`: holds iff some execution of `δ` ends in a state where `φ` holds.
    pub fn regress_exist(&mut self, phi: &Formula, delta: &Program) -> Result<Formula, RegressionError> {
        self.regress_prog(Mode::Exists, phi, delta)
    }

    /// `R^U[φ, δ]`: holds iff every execution of `δ` ends in a state where `φ` holds.
    pub fn regress_univ(&mut self, phi: &Formula, delta: &Program) -> Result<Formula, RegressionError> {
        self.regress_prog(Mode::Forall, phi, delta)
    }

    /// `pre(δ) = R^E[true, δ]`.
    pub fn exec_condition(&mut self, delta: &Program) -> Result<Formula, RegressionError> {
        self.regress_exist(&Formula::True, delta)
    }

    fn regress_prog(&mut self, mode: Mode, phi: &Formula, delta: &Program) -> Result<Formula, RegressionError> {
        let key = (mode, phi.clone(), delta.clone());
        if let Some(r) = self.memo.get(&key) {
            return Ok(r.clone());
        }
        let out = match delta {
            Program::Act(name, args) => {
                let alpha = Term::App(name.clone(), args.clone());
                let pre = self.poss(&alpha)?;
                let post = self.under(&alpha, phi)?;
                match mode {
                    Mode::Exists => Formula::And(vec![pre, post]),
                    Mode::Forall => Formula::imply(pre, post),
                }
            }
            Program::Test(psi) => match mode {
                Mode::Exists => Formula::And(vec![psi.clone(), phi.clone()]),
                Mode::Forall => Formula::imply(psi.clone(), phi.clone()),
            },
            Program::Seq(ps) => {
                let mut acc = phi.clone();
                for p in ps.iter().rev() {
                    acc = self.regress_prog(mode, &acc, p)?;
                }
                acc
            }
            Program::Choice(a, b) => {
                let ra = self.regress_prog(mode, phi, a)?;
                let rb = self.regress_prog(mode, phi, b)?;
                match mode {
                    Mode::Exists => Formula::Or(vec![ra, rb]),
                    Mode::Forall => Formula::And(vec![ra, rb]),
                }
            }
            Program::Pick(vs, body) => {
                // Picked variables must not capture free variables of φ.
                let fv: BTreeSet<String> = phi.free_vars().into_iter().map(|v| v.name).collect();
                let mut avoid = fv.clone();
                avoid.extend(body.all_var_names());
                avoid.extend(logic::all_var_names(phi));
                let mut renaming = BTreeMap::new();
                let mut new_vars = Vec::new();
                for v in vs {
                    if fv.contains(&v.name) {
                        let nv = Var {
                            name: fresh_name(&v.name, &avoid),
                            sort: v.sort,
                        };
                        avoid.insert(nv.name.clone());
                        renaming.insert(v.clone(), Term::Var(nv.clone()));
                        new_vars.push(nv);
                    } else {
                        new_vars.push(v.clone());
                    }
                }
                let body = body.substitute(&renaming)?;
                let r = self.regress_prog(mode, phi, &body)?;
                match mode {
                    Mode::Exists => Formula::exists(new_vars, r),
                    Mode::Forall => Formula::forall(new_vars, r),
                }
            }
        };
        let out = una_simplify(&out);
        self.memo.insert(key, out.clone());
        Ok(out)
    }
}

/// Renames binder variables whose names occur in `fv`.
fn avoid_clash(
    vs: &[Var],
    body: &Formula,
    fv: &BTreeSet<String>,
) -> Result<(Vec<Var>, Formula), LogicError> {
    if !vs.iter().any(|v| fv.contains(&v.name)) {
        return Ok((vs.to_vec(), body.clone()));
    }
    let mut avoid = fv.clone();
    avoid.extend(logic::all_var_names(body));
    avoid.extend(vs.iter().map(|v| v.name.clone()));
    let mut renaming = BTreeMap::new();
    let mut out = Vec::new();
    for v in vs {
        if fv.contains(&v.name) {
            let nv = Var {
                name: fresh_name(&v.name, &avoid),
                sort: v.sort,
            };
            avoid.insert(nv.name.clone());
            renaming.insert(v.clone(), Term::Var(nv.clone()));
            out.push(nv);
        } else {
            out.push(v.clone());
        }
    }
    Ok((out, logic::substitute(body, &renaming)?))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::bat::compile_domain;
    use crate::golog::read_program;
    use crate::logic::{alpha_eq, read_formula, Scope};
    use crate::sexpr::parse_one;

    const CLEAR_A: &str = r#"
    (domain clear-a
      (:constants A B C)
      (:predicates (on ?x ?y) (clear ?x) (ontable ?x) (holding ?x))
      (:action unstack :parameters (?x ?y)
        :precondition (and (clear ?x) (on ?x ?y) (forall (?z) (not (holding ?z))))
        :effect (and (holding ?x) (clear ?y) (not (on ?x ?y))))
      (:action mt :parameters (?x)
        :precondition (and (clear ?x) (not (ontable ?x)))
        :effect (and (ontable ?x) (not (holding ?x)))))
    "#;

    fn f(bat: &BasicActionTheory, text: &str) -> Formula {
        read_formula(&parse_one(text).unwrap(), &mut Scope::new(&bat.symbols)).unwrap()
    }

    fn p(bat: &BasicActionTheory, text: &str) -> Program {
        read_program(&parse_one(text).unwrap(), &mut Scope::new(&bat.symbols)).unwrap()
    }

    #[test]
    fn tc_regression_through_unstack() {
        let bat = compile_domain(CLEAR_A).unwrap();
        let mut ctx = RegressionContext::new(&bat);
        let phi = f(&bat, "(forall (x) (after (unstack A B) (tc (x y) (on x y) x C)))");
        let got = ctx.regress_step(&phi).unwrap();
        let want = f(
            &bat,
            "(forall (x) (tc (x y) (and (on x y) (or (not (= x A)) (not (= y B)))) x C))",
        );
        assert!(alpha_eq(&got, &want), "{got}");
    }

    #[test]
    fn poss_becomes_precondition() {
        let bat = compile_domain(CLEAR_A).unwrap();
        let mut ctx = RegressionContext::new(&bat);
        let got = ctx.regress_step(&f(&bat, "(poss (mt B))")).unwrap();
        assert_eq!(got, f(&bat, "(and (clear B) (not (ontable B)))"));
    }

    #[test]
    fn deleted_atom_regresses_to_false() {
        let bat = compile_domain(CLEAR_A).unwrap();
        let mut ctx = RegressionContext::new(&bat);
        let got = ctx.regress_step(&f(&bat, "(after (unstack A B) (on A B))")).unwrap();
        assert_eq!(got, Formula::False);
    }

    #[test]
    fn test_and_choice_clauses() {
        let bat = compile_domain(CLEAR_A).unwrap();
        let mut ctx = RegressionContext::new(&bat);
        let phi = f(&bat, "(clear A)");
        let psi = f(&bat, "(ontable B)");
        let got = ctx.regress_exist(&phi, &Program::Test(psi.clone())).unwrap();
        assert_eq!(got, Formula::And(vec![psi.clone(), phi.clone()]));
        let got = ctx.regress_univ(&phi, &Program::Test(psi.clone())).unwrap();
        assert_eq!(got, Formula::imply(psi.clone(), phi.clone()));
        let d1 = Program::Test(psi.clone());
        let d2 = Program::Act("mt".into(), vec![Term::constant("B")]);
        let choice = Program::Choice(Box::new(d1.clone()), Box::new(d2.clone()));
        let got = ctx.regress_exist(&phi, &choice).unwrap();
        let r1 = ctx.regress_exist(&phi, &d1).unwrap();
        let r2 = ctx.regress_exist(&phi, &d2).unwrap();
        assert_eq!(got, una_simplify(&Formula::Or(vec![r1, r2])));
    }

    #[test]
    fn exec_condition_of_mt() {
        let bat = compile_domain(CLEAR_A).unwrap();
        let mut ctx = RegressionContext::new(&bat);
        let got = ctx
            .exec_condition(&Program::Act("mt".into(), vec![Term::var("x")]))
            .unwrap();
        let st = &bat.symbols;
        let want = read_formula(
            &parse_one("(and (clear x) (not (ontable x)))").unwrap(),
            &mut Scope::with_vars(st, &[Var::object("x")]),
        )
        .unwrap();
        assert_eq!(got, want);
        let got = ctx.exec_condition(&Program::Test(f(&bat, "(clear A)"))).unwrap();
        assert_eq!(got, f(&bat, "(clear A)"));
    }

    #[test]
    fn pick_renames_away_from_free_variables() {
        let bat = compile_domain(CLEAR_A).unwrap();
        let mut ctx = RegressionContext::new(&bat);
        let phi = f(&bat, "(forall (x) (holding x))");
        let Formula::Forall(_, body) = phi else { unreachable!() };
        let prog = p(&bat, "(pick (x) (act mt x))");
        let got = ctx.regress_exist(&body, &prog).unwrap();
        let fv: Vec<_> = got.free_vars().into_iter().map(|v| v.name).collect();
        assert_eq!(fv, ["x"]);
    }

    #[test]
    fn universal_of_true_through_tests_is_true() {
        let bat = compile_domain(CLEAR_A).unwrap();
        let mut ctx = RegressionContext::new(&bat);
        let prog = p(&bat, "(choice (test (clear A)) (pick (x) (test (holding x))))");
        assert_eq!(ctx.regress_univ(&Formula::True, &prog).unwrap(), Formula::True);
    }

    #[test]
    fn frozen_parts_are_left_alone() {
        let bat = compile_domain(CLEAR_A).unwrap();
        let ctx = RegressionContext::new(&bat);
        let alpha = Term::App("unstack".into(), vec![Term::constant("A"), Term::constant("B")]);
        let frozen = Formula::frozen(f(&bat, "(on A B)"));
        assert_eq!(ctx.under(&alpha, &frozen).unwrap(), frozen);
        let mixed = Formula::And(vec![frozen.clone(), f(&bat, "(clear B)")]);
        assert_eq!(ctx.under(&alpha, &mixed).unwrap(), frozen);
    }
}
