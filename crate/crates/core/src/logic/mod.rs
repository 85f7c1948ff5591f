//! First-order formulas with equality, counting terms and transitive closure.
//!
//! Formulas are situation-suppressed. Two internal-only constructors carry
//! situation information during regression: [`Formula::After`] marks a
//! subformula evaluated after a pending action, and [`Formula::Frozen`]
//! pins a subformula to the situation a program started in.

mod read;
mod simplify;
mod subst;

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use thiserror::Error;

pub use read::{read_formula, read_term, Scope, RESERVED};
pub use simplify::{nnf, una_simplify};
pub use subst::{fresh_name, rename_bound, substitute, substitute_term};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Sort {
    Object,
    Action,
}

impl fmt::Display for Sort {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Sort::Object => write!(f, "object"),
            Sort::Action => write!(f, "action"),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Var {
    pub name: String,
    pub sort: Sort,
}

impl Var {
    pub fn object(name: impl Into<String>) -> Self {
        Var {
            name: name.into(),
            sort: Sort::Object,
        }
    }

    pub fn action(name: impl Into<String>) -> Self {
        Var {
            name: name.into(),
            sort: Sort::Action,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Term {
    Var(Var),
    Const(String),
    /// Application of an action function.
    App(String, Vec<Term>),
    /// `#x̄.φ`: the number of tuples satisfying the body.
    Count(Vec<Var>, Box<Formula>),
    /// A high-level numeric variable; only meaningful before refinement.
    NumVar(String),
}

impl Term {
    pub fn var(name: &str) -> Term {
        Term::Var(Var::object(name))
    }

    pub fn constant(name: &str) -> Term {
        Term::Const(name.to_string())
    }

    /// Sort of a term, or `None` for numeric terms.
    pub fn sort(&self) -> Option<Sort> {
        match self {
            Term::Var(v) => Some(v.sort),
            Term::Const(_) => Some(Sort::Object),
            Term::App(..) => Some(Sort::Action),
            Term::Count(..) | Term::NumVar(_) => None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum CmpOp {
    Eq,
    Gt,
}

/// Right-hand side of a numeric comparison: a literal, or a symbolic value
/// `k + offset` with `offset ∈ {-1, 0, 1}`.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Bound {
    Int(u64),
    Sym { name: String, offset: i8 },
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct TcAtom {
    pub from: Vec<Var>,
    pub to: Vec<Var>,
    pub body: Formula,
    pub left: Vec<Term>,
    pub right: Vec<Term>,
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Formula {
    True,
    False,
    Atom(String, Vec<Term>),
    Eq(Term, Term),
    Cmp { op: CmpOp, lhs: Term, rhs: Bound },
    Not(Box<Formula>),
    And(Vec<Formula>),
    Or(Vec<Formula>),
    Imply(Box<Formula>, Box<Formula>),
    Iff(Box<Formula>, Box<Formula>),
    Forall(Vec<Var>, Box<Formula>),
    Exists(Vec<Var>, Box<Formula>),
    Tc(Box<TcAtom>),
    Poss(Term),
    /// The body holds after executing the pending action.
    After(Term, Box<Formula>),
    /// The body refers to the origin situation and is opaque to regression.
    Frozen(Box<Formula>),
}

#[derive(Debug, Clone, Error, PartialEq, Eq)]
pub enum LogicError {
    #[error("sort mismatch: variable {var} of sort {expected} bound to {term}")]
    SortMismatch {
        var: String,
        expected: Sort,
        term: String,
    },
    #[error("duplicate symbol {0}")]
    DuplicateSymbol(String),
}

impl Formula {
    pub fn atom(pred: &str, args: Vec<Term>) -> Formula {
        Formula::Atom(pred.to_string(), args)
    }

    pub fn not(f: Formula) -> Formula {
        Formula::Not(Box::new(f))
    }

    pub fn and(fs: Vec<Formula>) -> Formula {
        Formula::And(fs)
    }

    pub fn or(fs: Vec<Formula>) -> Formula {
        Formula::Or(fs)
    }

    pub fn imply(a: Formula, b: Formula) -> Formula {
        Formula::Imply(Box::new(a), Box::new(b))
    }

    pub fn iff(a: Formula, b: Formula) -> Formula {
        Formula::Iff(Box::new(a), Box::new(b))
    }

    pub fn forall(vars: Vec<Var>, body: Formula) -> Formula {
        if vars.is_empty() {
            body
        } else {
            Formula::Forall(vars, Box::new(body))
        }
    }

    pub fn exists(vars: Vec<Var>, body: Formula) -> Formula {
        if vars.is_empty() {
            body
        } else {
            Formula::Exists(vars, Box::new(body))
        }
    }

    pub fn frozen(f: Formula) -> Formula {
        Formula::Frozen(Box::new(f))
    }

    pub fn after(action: Term, f: Formula) -> Formula {
        Formula::After(action, Box::new(f))
    }

    /// Free variables. TC designated variables and count-bound variables are
    /// bound within their bodies.
    pub fn free_vars(&self) -> BTreeSet<Var> {
        let mut out = BTreeSet::new();
        collect_free_formula(self, &mut Vec::new(), &mut out);
        out
    }

    pub fn is_closed(&self) -> bool {
        self.free_vars().is_empty()
    }

    /// True if any subformula or subterm satisfies `pred`.
    pub fn any(&self, pred: &mut dyn FnMut(&Formula) -> bool) -> bool {
        if pred(self) {
            return true;
        }
        let mut found = false;
        self.for_each_child(&mut |child| {
            if !found {
                found = child.any(pred);
            }
        });
        found
    }

    /// Visits direct child formulas, including bodies nested inside terms.
    pub fn for_each_child(&self, visit: &mut dyn FnMut(&Formula)) {
        fn terms(ts: &[Term], visit: &mut dyn FnMut(&Formula)) {
            for t in ts {
                term_children(t, visit);
            }
        }
        fn term_children(t: &Term, visit: &mut dyn FnMut(&Formula)) {
            match t {
                Term::Count(_, body) => visit(body),
                Term::App(_, args) => terms(args, visit),
                _ => {}
            }
        }
        match self {
            Formula::True | Formula::False => {}
            Formula::Atom(_, args) => terms(args, visit),
            Formula::Eq(a, b) => {
                term_children(a, visit);
                term_children(b, visit);
            }
            Formula::Cmp { lhs, .. } => term_children(lhs, visit),
            Formula::Not(f) | Formula::Frozen(f) => visit(f),
            Formula::And(fs) | Formula::Or(fs) => fs.iter().for_each(&mut *visit),
            Formula::Imply(a, b) | Formula::Iff(a, b) => {
                visit(a);
                visit(b);
            }
            Formula::Forall(_, f) | Formula::Exists(_, f) => visit(f),
            Formula::Tc(tc) => {
                visit(&tc.body);
                terms(&tc.left, visit);
                terms(&tc.right, visit);
            }
            Formula::Poss(t) => term_children(t, visit),
            Formula::After(t, f) => {
                term_children(t, visit);
                visit(f);
            }
        }
    }

    pub fn contains_count(&self) -> bool {
        self.any(&mut |f| match f {
            Formula::Cmp { .. } => true,
            Formula::Atom(_, args) => args.iter().any(|t| matches!(t, Term::Count(..))),
            Formula::Eq(a, b) => matches!(a, Term::Count(..)) || matches!(b, Term::Count(..)),
            _ => false,
        })
    }

    pub fn contains_tc(&self) -> bool {
        self.any(&mut |f| matches!(f, Formula::Tc(_)))
    }

    /// True if regression-only constructors (`Poss`, `After`, `Frozen`) remain.
    pub fn contains_situation_markers(&self) -> bool {
        self.any(&mut |f| matches!(f, Formula::Poss(_) | Formula::After(..) | Formula::Frozen(_)))
    }

    /// Removes every `Frozen` wrapper, keeping the wrapped formula.
    pub fn strip_frozen(&self) -> Formula {
        self.map_children(&mut |f| match f {
            Formula::Frozen(inner) => Some(inner.strip_frozen()),
            _ => None,
        })
    }

    /// Bottom-up rebuild where `rewrite` may replace a node outright (returning
    /// `Some`); otherwise children are rebuilt recursively.
    pub fn map_children(&self, rewrite: &mut dyn FnMut(&Formula) -> Option<Formula>) -> Formula {
        if let Some(r) = rewrite(self) {
            return r;
        }
        let term = |t: &Term, rw: &mut dyn FnMut(&Formula) -> Option<Formula>| map_term(t, rw);
        match self {
            Formula::True => Formula::True,
            Formula::False => Formula::False,
            Formula::Atom(p, args) => {
                Formula::Atom(p.clone(), args.iter().map(|t| term(t, rewrite)).collect())
            }
            Formula::Eq(a, b) => Formula::Eq(term(a, rewrite), term(b, rewrite)),
            Formula::Cmp { op, lhs, rhs } => Formula::Cmp {
                op: *op,
                lhs: term(lhs, rewrite),
                rhs: rhs.clone(),
            },
            Formula::Not(f) => Formula::not(f.map_children(rewrite)),
            Formula::And(fs) => Formula::And(fs.iter().map(|f| f.map_children(rewrite)).collect()),
            Formula::Or(fs) => Formula::Or(fs.iter().map(|f| f.map_children(rewrite)).collect()),
            Formula::Imply(a, b) => Formula::imply(a.map_children(rewrite), b.map_children(rewrite)),
            Formula::Iff(a, b) => Formula::iff(a.map_children(rewrite), b.map_children(rewrite)),
            Formula::Forall(vs, f) => Formula::Forall(vs.clone(), Box::new(f.map_children(rewrite))),
            Formula::Exists(vs, f) => Formula::Exists(vs.clone(), Box::new(f.map_children(rewrite))),
            Formula::Tc(tc) => Formula::Tc(Box::new(TcAtom {
                from: tc.from.clone(),
                to: tc.to.clone(),
                body: tc.body.map_children(rewrite),
                left: tc.left.iter().map(|t| term(t, rewrite)).collect(),
                right: tc.right.iter().map(|t| term(t, rewrite)).collect(),
            })),
            Formula::Poss(t) => Formula::Poss(term(t, rewrite)),
            Formula::After(t, f) => Formula::after(term(t, rewrite), f.map_children(rewrite)),
            Formula::Frozen(f) => Formula::frozen(f.map_children(rewrite)),
        }
    }

    /// Splits a top-level conjunction into its conjuncts.
    pub fn conjuncts(&self) -> Vec<Formula> {
        match self {
            Formula::And(fs) => fs.iter().flat_map(|f| f.conjuncts()).collect(),
            Formula::True => vec![],
            f => vec![f.clone()],
        }
    }

    /// Number of nodes; used to bound random generation and as a size metric.
    pub fn size(&self) -> usize {
        let mut n = 1;
        self.for_each_child(&mut |c| n += c.size());
        n
    }
}

fn map_term(t: &Term, rewrite: &mut dyn FnMut(&Formula) -> Option<Formula>) -> Term {
    match t {
        Term::Count(vs, body) => Term::Count(vs.clone(), Box::new(body.map_children(rewrite))),
        Term::App(f, args) => Term::App(f.clone(), args.iter().map(|a| map_term(a, rewrite)).collect()),
        other => other.clone(),
    }
}

pub(crate) fn collect_free_term(t: &Term, bound: &mut Vec<Var>, out: &mut BTreeSet<Var>) {
    match t {
        Term::Var(v) => {
            if !bound.contains(v) {
                out.insert(v.clone());
            }
        }
        Term::Const(_) | Term::NumVar(_) => {}
        Term::App(_, args) => args.iter().for_each(|a| collect_free_term(a, bound, out)),
        Term::Count(vs, body) => {
            let n = bound.len();
            bound.extend(vs.iter().cloned());
            collect_free_formula(body, bound, out);
            bound.truncate(n);
        }
    }
}

pub(crate) fn collect_free_formula(f: &Formula, bound: &mut Vec<Var>, out: &mut BTreeSet<Var>) {
    match f {
        Formula::True | Formula::False => {}
        Formula::Atom(_, args) => args.iter().for_each(|t| collect_free_term(t, bound, out)),
        Formula::Eq(a, b) => {
            collect_free_term(a, bound, out);
            collect_free_term(b, bound, out);
        }
        Formula::Cmp { lhs, .. } => collect_free_term(lhs, bound, out),
        Formula::Not(g) | Formula::Frozen(g) => collect_free_formula(g, bound, out),
        Formula::And(gs) | Formula::Or(gs) => gs.iter().for_each(|g| collect_free_formula(g, bound, out)),
        Formula::Imply(a, b) | Formula::Iff(a, b) => {
            collect_free_formula(a, bound, out);
            collect_free_formula(b, bound, out);
        }
        Formula::Forall(vs, g) | Formula::Exists(vs, g) => {
            let n = bound.len();
            bound.extend(vs.iter().cloned());
            collect_free_formula(g, bound, out);
            bound.truncate(n);
        }
        Formula::Tc(tc) => {
            let n = bound.len();
            bound.extend(tc.from.iter().cloned());
            bound.extend(tc.to.iter().cloned());
            collect_free_formula(&tc.body, bound, out);
            bound.truncate(n);
            tc.left.iter().chain(&tc.right).for_each(|t| collect_free_term(t, bound, out));
        }
        Formula::Poss(t) => collect_free_term(t, bound, out),
        Formula::After(t, g) => {
            collect_free_term(t, bound, out);
            collect_free_formula(g, bound, out);
        }
    }
}

/// Free variables of a term.
pub fn term_free_vars(t: &Term) -> BTreeSet<Var> {
    let mut out = BTreeSet::new();
    collect_free_term(t, &mut Vec::new(), &mut out);
    out
}

/// Every variable name occurring anywhere (free or bound) in the formula.
pub fn all_var_names(f: &Formula) -> BTreeSet<String> {
    fn term(t: &Term, out: &mut BTreeSet<String>) {
        match t {
            Term::Var(v) => {
                out.insert(v.name.clone());
            }
            Term::App(_, args) => args.iter().for_each(|a| term(a, out)),
            Term::Count(vs, body) => {
                out.extend(vs.iter().map(|v| v.name.clone()));
                formula(body, out);
            }
            _ => {}
        }
    }
    fn formula(f: &Formula, out: &mut BTreeSet<String>) {
        match f {
            Formula::Atom(_, args) => args.iter().for_each(|t| term(t, out)),
            Formula::Eq(a, b) => {
                term(a, out);
                term(b, out);
            }
            Formula::Cmp { lhs, .. } => term(lhs, out),
            Formula::Forall(vs, g) | Formula::Exists(vs, g) => {
                out.extend(vs.iter().map(|v| v.name.clone()));
                formula(g, out);
            }
            Formula::Tc(tc) => {
                out.extend(tc.from.iter().chain(&tc.to).map(|v| v.name.clone()));
                formula(&tc.body, out);
                tc.left.iter().chain(&tc.right).for_each(|t| term(t, out));
            }
            Formula::Poss(t) => term(t, out),
            Formula::After(t, g) => {
                term(t, out);
                formula(g, out);
            }
            other => other.for_each_child(&mut |c| formula(c, out)),
        }
    }
    let mut out = BTreeSet::new();
    formula(f, &mut out);
    out
}

/// Declared non-logical symbols of a low-level theory.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct SymbolTable {
    /// Relational fluents with their arity.
    pub fluents: BTreeMap<String, usize>,
    /// Action functions with their arity.
    pub actions: BTreeMap<String, usize>,
    /// Rigid object constants, pairwise distinct.
    pub constants: BTreeSet<String>,
}

impl SymbolTable {
    pub fn add_fluent(&mut self, name: &str, arity: usize) -> Result<(), LogicError> {
        self.check_fresh(name)?;
        self.fluents.insert(name.to_string(), arity);
        Ok(())
    }

    pub fn add_action(&mut self, name: &str, arity: usize) -> Result<(), LogicError> {
        self.check_fresh(name)?;
        self.actions.insert(name.to_string(), arity);
        Ok(())
    }

    pub fn add_constant(&mut self, name: &str) -> Result<(), LogicError> {
        self.check_fresh(name)?;
        self.constants.insert(name.to_string());
        Ok(())
    }

    fn check_fresh(&self, name: &str) -> Result<(), LogicError> {
        if self.fluents.contains_key(name)
            || self.actions.contains_key(name)
            || self.constants.contains(name)
        {
            Err(LogicError::DuplicateSymbol(name.to_string()))
        } else {
            Ok(())
        }
    }
}

/// Alpha-equivalence up to renaming of bound variables and symmetry of `=`.
pub fn alpha_eq(a: &Formula, b: &Formula) -> bool {
    canonical(a) == canonical(b)
}

/// A normal form for comparing formulas up to associativity and
/// commutativity of `and`/`or`, merging of nested quantifiers of the same
/// kind and renaming of bound variables.
pub fn normalize(f: &Formula) -> Formula {
    fn go(f: &Formula) -> Formula {
        let key = |g: &Formula| canonical(g).to_string();
        match f {
            Formula::And(gs) | Formula::Or(gs) => {
                let is_and = matches!(f, Formula::And(_));
                let mut flat = Vec::new();
                for g in gs.iter().map(go) {
                    match g {
                        Formula::And(hs) if is_and => flat.extend(hs),
                        Formula::Or(hs) if !is_and => flat.extend(hs),
                        other => flat.push(other),
                    }
                }
                flat.sort_by_key(key);
                flat.dedup_by(|a, b| key(a) == key(b));
                if flat.len() == 1 {
                    return flat.pop().unwrap();
                }
                if is_and {
                    Formula::And(flat)
                } else {
                    Formula::Or(flat)
                }
            }
            Formula::Forall(vs, g) | Formula::Exists(vs, g) => {
                let is_all = matches!(f, Formula::Forall(..));
                let mut vars = vs.clone();
                let mut body = go(g);
                loop {
                    match body {
                        Formula::Forall(ws, h) if is_all => {
                            vars.extend(ws);
                            body = *h;
                        }
                        Formula::Exists(ws, h) if !is_all => {
                            vars.extend(ws);
                            body = *h;
                        }
                        other => {
                            body = other;
                            break;
                        }
                    }
                }
                if is_all {
                    Formula::Forall(vars, Box::new(body))
                } else {
                    Formula::Exists(vars, Box::new(body))
                }
            }
            other => other.map_children(&mut |c| if std::ptr::eq(c, other) { None } else { Some(go(c)) }),
        }
    }
    // Child order depends on the names of enclosing binders, which
    // `canonical` changes, so repeat until the result is stable.
    let mut cur = canonical(&go(f));
    for _ in 0..8 {
        let next = canonical(&go(&cur));
        if next == cur {
            break;
        }
        cur = next;
    }
    cur
}

/// Renames bound variables to positional names and orients equalities, so
/// that alpha-equivalent formulas become structurally equal.
pub fn canonical(f: &Formula) -> Formula {
    let mut counter = 0usize;
    canon_formula(f, &mut Vec::new(), &mut counter)
}

fn canon_var(v: &Var, env: &[(Var, Var)]) -> Var {
    env.iter()
        .rev()
        .find(|(from, _)| from == v)
        .map(|(_, to)| to.clone())
        .unwrap_or_else(|| v.clone())
}

fn canon_bind(vs: &[Var], env: &mut Vec<(Var, Var)>, counter: &mut usize) -> Vec<Var> {
    vs.iter()
        .map(|v| {
            let nv = Var {
                name: format!("!b{counter}"),
                sort: v.sort,
            };
            *counter += 1;
            env.push((v.clone(), nv.clone()));
            nv
        })
        .collect()
}

fn canon_term(t: &Term, env: &mut Vec<(Var, Var)>, counter: &mut usize) -> Term {
    match t {
        Term::Var(v) => Term::Var(canon_var(v, env)),
        Term::App(f, args) => Term::App(f.clone(), args.iter().map(|a| canon_term(a, env, counter)).collect()),
        Term::Count(vs, body) => {
            let n = env.len();
            let nvs = canon_bind(vs, env, counter);
            let b = canon_formula(body, env, counter);
            env.truncate(n);
            Term::Count(nvs, Box::new(b))
        }
        other => other.clone(),
    }
}

fn canon_formula(f: &Formula, env: &mut Vec<(Var, Var)>, counter: &mut usize) -> Formula {
    match f {
        Formula::Eq(a, b) => {
            let (a, b) = (canon_term(a, env, counter), canon_term(b, env, counter));
            if a <= b {
                Formula::Eq(a, b)
            } else {
                Formula::Eq(b, a)
            }
        }
        Formula::Atom(p, args) => Formula::Atom(p.clone(), args.iter().map(|t| canon_term(t, env, counter)).collect()),
        Formula::Cmp { op, lhs, rhs } => Formula::Cmp {
            op: *op,
            lhs: canon_term(lhs, env, counter),
            rhs: rhs.clone(),
        },
        Formula::Forall(vs, g) | Formula::Exists(vs, g) => {
            let n = env.len();
            let nvs = canon_bind(vs, env, counter);
            let body = canon_formula(g, env, counter);
            env.truncate(n);
            if matches!(f, Formula::Forall(..)) {
                Formula::Forall(nvs, Box::new(body))
            } else {
                Formula::Exists(nvs, Box::new(body))
            }
        }
        Formula::Tc(tc) => {
            let left = tc.left.iter().map(|t| canon_term(t, env, counter)).collect();
            let right = tc.right.iter().map(|t| canon_term(t, env, counter)).collect();
            let n = env.len();
            let from = canon_bind(&tc.from, env, counter);
            let to = canon_bind(&tc.to, env, counter);
            let body = canon_formula(&tc.body, env, counter);
            env.truncate(n);
            Formula::Tc(Box::new(TcAtom {
                from,
                to,
                body,
                left,
                right,
            }))
        }
        Formula::Poss(t) => Formula::Poss(canon_term(t, env, counter)),
        Formula::After(t, g) => Formula::after(canon_term(t, env, counter), canon_formula(g, env, counter)),
        Formula::Not(g) => Formula::not(canon_formula(g, env, counter)),
        Formula::Frozen(g) => Formula::frozen(canon_formula(g, env, counter)),
        Formula::And(gs) => Formula::And(gs.iter().map(|g| canon_formula(g, env, counter)).collect()),
        Formula::Or(gs) => Formula::Or(gs.iter().map(|g| canon_formula(g, env, counter)).collect()),
        Formula::Imply(a, b) => Formula::imply(canon_formula(a, env, counter), canon_formula(b, env, counter)),
        Formula::Iff(a, b) => Formula::iff(canon_formula(a, env, counter), canon_formula(b, env, counter)),
        Formula::True => Formula::True,
        Formula::False => Formula::False,
    }
}

fn write_vars(f: &mut fmt::Formatter<'_>, vs: &[Var]) -> fmt::Result {
    write!(f, "(")?;
    for (i, v) in vs.iter().enumerate() {
        if i > 0 {
            write!(f, " ")?;
        }
        write!(f, "{}", v.name)?;
    }
    write!(f, ")")
}

fn write_terms(f: &mut fmt::Formatter<'_>, ts: &[Term]) -> fmt::Result {
    for t in ts {
        write!(f, " {t}")?;
    }
    Ok(())
}

impl fmt::Display for Term {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Term::Var(v) => write!(f, "{}", v.name),
            Term::Const(c) => write!(f, "{c}"),
            Term::NumVar(n) => write!(f, "{n}"),
            Term::App(name, args) => {
                write!(f, "({name}")?;
                write_terms(f, args)?;
                write!(f, ")")
            }
            Term::Count(vs, body) => {
                write!(f, "(count ")?;
                write_vars(f, vs)?;
                write!(f, " {body})")
            }
        }
    }
}

impl fmt::Display for Bound {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Bound::Int(i) => write!(f, "{i}"),
            Bound::Sym { name, offset: 0 } => write!(f, "{name}"),
            Bound::Sym { name, offset } if *offset > 0 => write!(f, "(+ {name} {offset})"),
            Bound::Sym { name, offset } => write!(f, "(- {name} {})", -offset),
        }
    }
}

impl fmt::Display for Formula {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let list = |f: &mut fmt::Formatter<'_>, head: &str, fs: &[Formula]| -> fmt::Result {
            write!(f, "({head}")?;
            for g in fs {
                write!(f, " {g}")?;
            }
            write!(f, ")")
        };
        match self {
            Formula::True => write!(f, "true"),
            Formula::False => write!(f, "false"),
            Formula::Atom(p, args) if args.is_empty() => write!(f, "({p})"),
            Formula::Atom(p, args) => {
                write!(f, "({p}")?;
                write_terms(f, args)?;
                write!(f, ")")
            }
            Formula::Eq(a, b) => write!(f, "(= {a} {b})"),
            Formula::Cmp { op, lhs, rhs } => {
                let o = match op {
                    CmpOp::Eq => "=",
                    CmpOp::Gt => ">",
                };
                write!(f, "({o} {lhs} {rhs})")
            }
            Formula::Not(g) => write!(f, "(not {g})"),
            Formula::And(gs) => list(f, "and", gs),
            Formula::Or(gs) => list(f, "or", gs),
            Formula::Imply(a, b) => write!(f, "(imply {a} {b})"),
            Formula::Iff(a, b) => write!(f, "(iff {a} {b})"),
            Formula::Forall(vs, g) => {
                write!(f, "(forall ")?;
                write_vars(f, vs)?;
                write!(f, " {g})")
            }
            Formula::Exists(vs, g) => {
                write!(f, "(exists ")?;
                write_vars(f, vs)?;
                write!(f, " {g})")
            }
            Formula::Tc(tc) => {
                write!(f, "(tc (")?;
                // k = 1 uses the flat `(x y)` form; wider tuples nest.
                if tc.from.len() == 1 {
                    write!(f, "{} {}", tc.from[0].name, tc.to[0].name)?;
                } else {
                    write_vars(f, &tc.from)?;
                    write!(f, " ")?;
                    write_vars(f, &tc.to)?;
                }
                write!(f, ") {}", tc.body)?;
                if tc.left.len() == 1 {
                    write!(f, " {} {})", tc.left[0], tc.right[0])
                } else {
                    write!(f, " (")?;
                    for (i, t) in tc.left.iter().enumerate() {
                        write!(f, "{}{t}", if i > 0 { " " } else { "" })?;
                    }
                    write!(f, ") (")?;
                    for (i, t) in tc.right.iter().enumerate() {
                        write!(f, "{}{t}", if i > 0 { " " } else { "" })?;
                    }
                    write!(f, "))")
                }
            }
            Formula::Poss(t) => write!(f, "(poss {t})"),
            Formula::After(t, g) => write!(f, "(after {t} {g})"),
            Formula::Frozen(g) => write!(f, "(frozen {g})"),
        }
    }
}
