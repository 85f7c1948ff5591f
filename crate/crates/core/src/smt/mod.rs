//! SMT-LIB2 encoding of verification tasks.
//!
//! Validity of a task is checked as unsatisfiability of its negation over
//! uninterpreted symbols. Transitive-closure atoms become fresh predicates
//! constrained by first-order axioms that hold of the genuine reflexive
//! transitive closure, so `unsat` is sound; `sat` on a task with closure
//! atoms may be spurious and is re-checked against the finite-model oracle.

mod driver;
mod model;

use std::collections::{BTreeMap, BTreeSet};
use std::fmt::Write as _;

use thiserror::Error;

pub use driver::{run_solver, SolverConfig, SolverStatus, SolverVerdict};
pub use model::{classify, parse_model, Classification, ModelError, TaskResult};

use crate::logic::{self, canonical, Formula, Sort, SymbolTable, TcAtom, Term, Var};
use crate::vcgen::VerificationTask;

#[derive(Debug, Error)]
pub enum SmtError {
    #[error("task {0} still contains a counting atom")]
    ResidualCount(String),
    #[error("task {id} contains {what}, which has no first-order encoding")]
    Unencodable { id: String, what: String },
}

/// How many closure axioms to emit per fresh predicate.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum AxiomLevel {
    /// Reflexivity, base, step, transitivity, first/last-step
    /// decomposition and the pairwise split lemma.
    Basic,
    /// `Basic` plus unary invariance instances of minimality for every
    /// unary abstraction harvested from the task.
    #[default]
    Full,
}

/// A fresh predicate standing for one closure body.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TcObligation {
    pub name: String,
    /// Free variables of the body other than the closure variables.
    pub params: Vec<Var>,
    pub from: Vec<Var>,
    pub to: Vec<Var>,
    pub body: Formula,
    /// Number of minimality instances emitted.
    pub minimality_instances: usize,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Encoding {
    pub script: String,
    pub obligations: Vec<TcObligation>,
}

impl Encoding {
    pub fn has_tc(&self) -> bool {
        !self.obligations.is_empty()
    }
}

fn is_simple_symbol(s: &str) -> bool {
    const RESERVED: &[&str] = &[
        "and", "or", "not", "=>", "=", "ite", "forall", "exists", "let", "true", "false", "distinct", "xor", "par", "_",
        "!", "as", "Bool", "Obj",
    ];
    !s.is_empty()
        && !s.starts_with(|c: char| c.is_ascii_digit())
        && s.chars().all(|c| c.is_ascii_alphanumeric() || "~@$%^&*_-+<>.?/".contains(c))
        && !RESERVED.contains(&s)
}

/// Symbol for a fluent or constant name.
fn sym(name: &str) -> String {
    if is_simple_symbol(name) {
        name.to_string()
    } else {
        format!("|{name}|")
    }
}

/// Symbol for a variable; the `?` prefix keeps variables apart from
/// fluents and constants.
fn var_sym(v: &Var) -> String {
    format!("?{}", v.name.replace('\'', "!p"))
}

fn sorted_binders(vs: &[Var]) -> String {
    vs.iter().map(|v| format!("({} Obj)", var_sym(v))).collect::<Vec<_>>().join(" ")
}

struct Encoder<'a> {
    id: &'a str,
    level: AxiomLevel,
    preds: Vec<TcObligation>,
    by_key: BTreeMap<Formula, usize>,
}

impl<'a> Encoder<'a> {
    fn term(&self, t: &Term) -> Result<String, SmtError> {
        match t {
            Term::Var(v) if v.sort == Sort::Object => Ok(var_sym(v)),
            Term::Const(c) => Ok(sym(c)),
            Term::Count(..) => Err(SmtError::ResidualCount(self.id.to_string())),
            other => Err(SmtError::Unencodable {
                id: self.id.to_string(),
                what: format!("the term {other}"),
            }),
        }
    }

    fn app(&self, head: &str, args: &[String]) -> String {
        if args.is_empty() {
            head.to_string()
        } else {
            format!("({head} {})", args.join(" "))
        }
    }

    fn tc_pred(&mut self, tc: &TcAtom) -> Result<usize, SmtError> {
        let closure_vars: Vec<Var> = tc.from.iter().chain(&tc.to).cloned().collect();
        let key = canonical(&Formula::Forall(closure_vars.clone(), Box::new(tc.body.clone())));
        if let Some(&i) = self.by_key.get(&key) {
            return Ok(i);
        }
        // Register nested closures first so their predicates are declared
        // before they are used in this body's axioms.
        self.formula(&tc.body)?;
        let bound: BTreeSet<Var> = closure_vars.iter().cloned().collect();
        let params: Vec<Var> = tc.body.free_vars().into_iter().filter(|v| !bound.contains(v)).collect();
        let i = self.preds.len();
        self.preds.push(TcObligation {
            name: format!("tc!{i}"),
            params,
            from: tc.from.clone(),
            to: tc.to.clone(),
            body: tc.body.clone(),
            minimality_instances: 0,
        });
        self.by_key.insert(key, i);
        Ok(i)
    }

    fn formula(&mut self, f: &Formula) -> Result<String, SmtError> {
        Ok(match f {
            Formula::True => "true".into(),
            Formula::False => "false".into(),
            Formula::Atom(p, args) => {
                let args = args.iter().map(|t| self.term(t)).collect::<Result<Vec<_>, _>>()?;
                self.app(&sym(p), &args)
            }
            Formula::Eq(a, b) => format!("(= {} {})", self.term(a)?, self.term(b)?),
            Formula::Not(g) => format!("(not {})", self.formula(g)?),
            Formula::And(gs) | Formula::Or(gs) if gs.is_empty() => {
                if matches!(f, Formula::And(_)) { "true".into() } else { "false".into() }
            }
            Formula::And(gs) | Formula::Or(gs) => {
                let op = if matches!(f, Formula::And(_)) { "and" } else { "or" };
                let parts = gs.iter().map(|g| self.formula(g)).collect::<Result<Vec<_>, _>>()?;
                if parts.len() == 1 {
                    parts.into_iter().next().unwrap()
                } else {
                    format!("({op} {})", parts.join(" "))
                }
            }
            Formula::Imply(a, b) => format!("(=> {} {})", self.formula(a)?, self.formula(b)?),
            Formula::Iff(a, b) => {
                let (a, b) = (self.formula(a)?, self.formula(b)?);
                format!("(and (=> {a} {b}) (=> {b} {a}))")
            }
            Formula::Forall(vs, g) | Formula::Exists(vs, g) => {
                let q = if matches!(f, Formula::Forall(..)) { "forall" } else { "exists" };
                if let Some(v) = vs.iter().find(|v| v.sort != Sort::Object) {
                    return Err(SmtError::Unencodable {
                        id: self.id.to_string(),
                        what: format!("a quantifier over the action variable {}", v.name),
                    });
                }
                format!("({q} ({}) {})", sorted_binders(vs), self.formula(g)?)
            }
            Formula::Tc(tc) => {
                let i = self.tc_pred(tc)?;
                let mut args: Vec<String> = self.preds[i].params.iter().map(var_sym).collect();
                for t in tc.left.iter().chain(&tc.right) {
                    args.push(self.term(t)?);
                }
                self.app(&self.preds[i].name.clone(), &args)
            }
            Formula::Cmp { .. } => return Err(SmtError::ResidualCount(self.id.to_string())),
            Formula::Poss(_) | Formula::After(..) | Formula::Frozen(_) => {
                return Err(SmtError::Unencodable {
                    id: self.id.to_string(),
                    what: "a situation marker".into(),
                })
            }
        })
    }

    /// `χ(xs, ys)` for predicate `i`, renaming its closure variables.
    fn chi(&mut self, i: usize, xs: &[Var], ys: &[Var]) -> Result<String, SmtError> {
        let p = &self.preds[i];
        let mut map = BTreeMap::new();
        for (v, w) in p.from.iter().zip(xs).chain(p.to.iter().zip(ys)) {
            map.insert(v.clone(), Term::Var(w.clone()));
        }
        let body = logic::substitute(&p.body, &map).expect("object variables only");
        self.formula(&body)
    }

    fn p(&self, i: usize, xs: &[Var], ys: &[Var]) -> String {
        let p = &self.preds[i];
        let args: Vec<String> = p.params.iter().chain(xs).chain(ys).map(var_sym).collect();
        self.app(&p.name, &args)
    }

    /// Fresh tuples of closure variables for predicate `i`, named apart
    /// from its parameters.
    fn tuples(&self, i: usize, n: usize) -> Vec<Vec<Var>> {
        let p = &self.preds[i];
        let k = p.from.len();
        (0..n)
            .map(|j| {
                (0..k)
                    .map(|l| Var::object(format!("{}{}!{i}", ["x", "y", "z", "w"][j], if k == 1 { String::new() } else { l.to_string() })))
                    .collect()
            })
            .collect()
    }

    fn forall(vars: &[&[Var]], body: String) -> String {
        let all: Vec<Var> = vars.iter().flat_map(|v| v.iter().cloned()).collect();
        if all.is_empty() {
            body
        } else {
            format!("(forall ({}) {body})", sorted_binders(&all))
        }
    }

    fn tuple_eq(xs: &[Var], ys: &[Var]) -> String {
        let parts: Vec<String> = xs.iter().zip(ys).map(|(x, y)| format!("(= {} {})", var_sym(x), var_sym(y))).collect();
        if parts.len() == 1 {
            parts.into_iter().next().unwrap()
        } else {
            format!("(and {})", parts.join(" "))
        }
    }

    fn axioms(&mut self, i: usize, harvested: &[Formula], out: &mut String) -> Result<(), SmtError> {
        let t = self.tuples(i, 3);
        let (x, y, z) = (&t[0], &t[1], &t[2]);
        let params = self.preds[i].params.clone();
        let pv: &[Var] = &params;
        let name = self.preds[i].name.clone();
        let _ = writeln!(out, "; {name}: closure of {}", self.preds[i].body);
        let mut ax = Vec::new();
        ax.push(Self::forall(&[pv, x], self.p(i, x, x)));
        let chi_xy = self.chi(i, x, y)?;
        ax.push(Self::forall(&[pv, x, y], format!("(=> {chi_xy} {})", self.p(i, x, y))));
        let chi_yz = self.chi(i, y, z)?;
        ax.push(Self::forall(
            &[pv, x, y, z],
            format!("(=> (and {} {chi_yz}) {})", self.p(i, x, y), self.p(i, x, z)),
        ));
        ax.push(Self::forall(
            &[pv, x, y, z],
            format!("(=> (and {} {}) {})", self.p(i, x, y), self.p(i, y, z), self.p(i, x, z)),
        ));
        // A non-trivial path has a last and a first step.
        ax.push(Self::forall(
            &[pv, x, z],
            format!(
                "(=> {} (or {} (exists ({}) (and {} {chi_yz}))))",
                self.p(i, x, z),
                Self::tuple_eq(x, z),
                sorted_binders(y),
                self.p(i, x, y)
            ),
        ));
        let chi_xy2 = self.chi(i, x, y)?;
        ax.push(Self::forall(
            &[pv, x, z],
            format!(
                "(=> {} (or {} (exists ({}) (and {chi_xy2} {}))))",
                self.p(i, x, z),
                Self::tuple_eq(x, z),
                sorted_binders(y),
                self.p(i, y, z)
            ),
        ));
        let mut minimality = 0;
        if self.level == AxiomLevel::Full && self.preds[i].from.len() == 1 {
            for theta in harvested {
                let at = |v: &Var| {
                    logic::substitute(theta, &BTreeMap::from([(w_hole(), Term::Var(v.clone()))])).expect("object variable")
                };
                let (tx, ty, tz) = (at(&x[0]), at(&y[0]), at(&z[0]));
                let (sx, sy, sz) = (self.formula(&tx)?, self.formula(&ty)?, self.formula(&tz)?);
                // Forward: θ preserved along χ-steps is preserved along paths.
                ax.push(Self::forall(
                    &[pv],
                    format!(
                        "(=> {} {})",
                        Self::forall(&[y, z], format!("(=> (and {sy} {chi_yz}) {sz})")),
                        Self::forall(&[x, z], format!("(=> (and {} {sx}) {sz})", self.p(i, x, z)))
                    ),
                ));
                // Backward.
                ax.push(Self::forall(
                    &[pv],
                    format!(
                        "(=> {} {})",
                        Self::forall(&[y, z], format!("(=> (and {sz} {chi_yz}) {sy})")),
                        Self::forall(&[x, z], format!("(=> (and {} {sz}) {sx})", self.p(i, x, z)))
                    ),
                ));
                minimality += 2;
            }
        }
        for a in &ax {
            let _ = writeln!(out, "(assert {a})");
        }
        self.preds[i].minimality_instances = minimality;
        Ok(())
    }

    /// Path split between two closures of the same arity: a path of `i`
    /// either is a path of `j` or has a first step outside `j`'s body.
    fn split(&mut self, i: usize, j: usize, out: &mut String) -> Result<(), SmtError> {
        let t = self.tuples(i, 4);
        let (x, y, z, w) = (&t[0], &t[1], &t[2], &t[3]);
        let pi = self.preds[i].params.clone();
        let pj: Vec<Var> = self.preds[j].params.iter().filter(|v| !pi.contains(v)).cloned().collect();
        let chi_i = self.chi(i, y, w)?;
        let chi_j = self.chi(j, y, w)?;
        let mut yw = y.clone();
        yw.extend(w.iter().cloned());
        let ax = Self::forall(
            &[&pi, &pj, x, z],
            format!(
                "(=> {} (or {} (exists ({}) (and {} {chi_i} (not {chi_j}) {}))))",
                self.p(i, x, z),
                self.p(j, x, z),
                sorted_binders(&yw),
                self.p(j, x, y),
                self.p(i, w, z)
            ),
        );
        let _ = writeln!(out, "(assert {ax})");
        self.preds[i].minimality_instances += 1;
        Ok(())
    }
}

/// Placeholder variable for harvested unary abstractions.
fn w_hole() -> Var {
    Var::object("!w")
}

/// Unary abstractions `θ(w)` of the task: unary atoms, projections of
/// binary atoms and equalities with constants.
fn harvest_unary(task: &Formula, symbols: &SymbolTable) -> Vec<Formula> {
    let w = Term::Var(w_hole());
    let mut out = BTreeSet::new();
    let mut atoms = BTreeSet::new();
    task.any(&mut |f| {
        if let Formula::Atom(p, args) = f {
            atoms.insert((p.clone(), args.len()));
        }
        if let Formula::Tc(tc) = f {
            tc.body.any(&mut |g| {
                if let Formula::Atom(p, args) = g {
                    atoms.insert((p.clone(), args.len()));
                }
                false
            });
        }
        false
    });
    for (p, n) in atoms {
        match n {
            1 => {
                out.insert(Formula::atom(&p, vec![w.clone()]));
            }
            2 => {
                let u = Var::object("!u");
                out.insert(Formula::exists(vec![u.clone()], Formula::atom(&p, vec![w.clone(), Term::Var(u.clone())])));
                out.insert(Formula::exists(vec![u.clone()], Formula::atom(&p, vec![Term::Var(u), w.clone()])));
            }
            _ => {}
        }
    }
    for c in &symbols.constants {
        out.insert(Formula::Eq(w.clone(), Term::constant(c)));
    }
    out.into_iter().collect()
}

/// Writes the validity query for `task`: declarations, distinctness of
/// constants, closure axioms, the negated task and `check-sat`.
pub fn encode(task: &VerificationTask, symbols: &SymbolTable, level: AxiomLevel) -> Result<Encoding, SmtError> {
    if task.formula.contains_count() {
        return Err(SmtError::ResidualCount(task.id.clone()));
    }
    let mut enc = Encoder {
        id: &task.id,
        level,
        preds: Vec::new(),
        by_key: BTreeMap::new(),
    };
    let goal = enc.formula(&task.formula)?;
    let harvested = if level == AxiomLevel::Full {
        harvest_unary(&task.formula, symbols)
    } else {
        Vec::new()
    };
    let mut axioms = String::new();
    for i in 0..enc.preds.len() {
        enc.axioms(i, &harvested, &mut axioms)?;
    }
    let n = enc.preds.len();
    for i in 0..n {
        for j in 0..n {
            if i != j && enc.preds[i].from.len() == enc.preds[j].from.len() {
                enc.split(i, j, &mut axioms)?;
            }
        }
    }

    let mut s = String::new();
    let _ = writeln!(s, "; {}", task.id);
    let _ = writeln!(s, "; {}", task.provenance);
    s.push_str("(set-option :produce-models true)\n(set-logic UF)\n(declare-sort Obj 0)\n");
    for c in &symbols.constants {
        let _ = writeln!(s, "(declare-fun {} () Obj)", sym(c));
    }
    if symbols.constants.len() > 1 {
        let cs: Vec<String> = symbols.constants.iter().map(|c| sym(c)).collect();
        let _ = writeln!(s, "(assert (distinct {}))", cs.join(" "));
    }
    for (f, arity) in &symbols.fluents {
        let _ = writeln!(s, "(declare-fun {} ({}) Bool)", sym(f), vec!["Obj"; *arity].join(" "));
    }
    for p in &enc.preds {
        let arity = p.params.len() + 2 * p.from.len();
        let _ = writeln!(s, "(declare-fun {} ({}) Bool)", p.name, vec!["Obj"; arity].join(" "));
    }
    s.push_str(&axioms);
    let _ = writeln!(s, "(assert (not {goal}))");
    s.push_str("(check-sat)\n");
    Ok(Encoding {
        script: s,
        obligations: enc.preds,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::vcgen::{TaskKind, TaskSemantics};

    fn task(f: Formula) -> VerificationTask {
        VerificationTask {
            id: "t".into(),
            kind: TaskKind::Init,
            formula: f,
            provenance: "test".into(),
            semantics: TaskSemantics::Direct,
        }
    }

    fn symbols() -> SymbolTable {
        let mut st = SymbolTable::default();
        st.add_fluent("on", 2).unwrap();
        st.add_fluent("clear", 1).unwrap();
        st.add_constant("A").unwrap();
        st.add_constant("B").unwrap();
        st
    }

    #[test]
    fn true_task_asserts_not_true() {
        let e = encode(&task(Formula::True), &symbols(), AxiomLevel::Basic).unwrap();
        assert!(e.script.contains("(assert (not true))"));
        assert!(e.script.contains("(assert (distinct A B))"));
        assert!(e.script.ends_with("(check-sat)\n"));
        assert!(!e.has_tc());
    }

    #[test]
    fn closures_share_one_predicate_per_body() {
        let read = |t: &str| {
            crate::logic::read_formula(&crate::sexpr::parse_one(t).unwrap(), &mut crate::logic::Scope::new(&symbols()))
                .unwrap()
        };
        let f = read("(imply (tc (u v) (on u v) A B) (tc (p q) (on p q) B A))");
        let e = encode(&task(f), &symbols(), AxiomLevel::Basic).unwrap();
        assert_eq!(e.obligations.len(), 1);
        assert!(e.script.contains("(tc!0 A B)"));
        assert!(e.script.contains("(tc!0 B A)"));
    }

    #[test]
    fn primed_variables_are_legal_symbols() {
        assert_eq!(var_sym(&Var::object("x''")), "?x!p!p");
        assert_eq!(sym("and"), "|and|");
        assert_eq!(sym("at-robby"), "at-robby");
    }

    #[test]
    fn residual_count_is_rejected() {
        let f = Formula::Cmp {
            op: crate::logic::CmpOp::Eq,
            lhs: Term::Count(vec![Var::object("x")], Box::new(Formula::True)),
            rhs: crate::logic::Bound::Int(0),
        };
        assert!(matches!(encode(&task(f), &symbols(), AxiomLevel::Basic), Err(SmtError::ResidualCount(_))));
    }
}
