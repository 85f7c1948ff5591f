//! Iteration-free Golog programs and refinement mappings.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use thiserror::Error;

use crate::logic::{
    self, read_formula, read_term, Formula, LogicError, Scope, SymbolTable, Term, Var,
};
use crate::sexpr::{self, SExpr, SyntaxError};

#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Program {
    Act(String, Vec<Term>),
    Test(Formula),
    Seq(Vec<Program>),
    Choice(Box<Program>, Box<Program>),
    Pick(Vec<Var>, Box<Program>),
}

#[derive(Debug, Error)]
pub enum MappingError {
    #[error(transparent)]
    Syntax(#[from] SyntaxError),
    #[error(transparent)]
    Logic(#[from] LogicError),
    #[error("no refinement for high-level symbol {0}")]
    Unmapped(String),
    #[error("high-level action {name} expects {expected} arguments, got {got}")]
    Arity {
        name: String,
        expected: usize,
        got: usize,
    },
}

impl Program {
    pub fn free_vars(&self) -> BTreeSet<Var> {
        match self {
            Program::Act(_, args) => args.iter().flat_map(logic::term_free_vars).collect(),
            Program::Test(f) => f.free_vars(),
            Program::Seq(ps) => ps.iter().flat_map(|p| p.free_vars()).collect(),
            Program::Choice(a, b) => {
                let mut s = a.free_vars();
                s.extend(b.free_vars());
                s
            }
            Program::Pick(vs, p) => {
                let mut s = p.free_vars();
                for v in vs {
                    s.remove(v);
                }
                s
            }
        }
    }

    /// Every variable name occurring in the program, bound or free.
    pub fn all_var_names(&self) -> BTreeSet<String> {
        match self {
            Program::Act(_, args) => args
                .iter()
                .flat_map(|t| logic::all_var_names(&Formula::Atom(String::new(), vec![t.clone()])))
                .collect(),
            Program::Test(f) => logic::all_var_names(f),
            Program::Seq(ps) => ps.iter().flat_map(|p| p.all_var_names()).collect(),
            Program::Choice(a, b) => {
                let mut s = a.all_var_names();
                s.extend(b.all_var_names());
                s
            }
            Program::Pick(vs, p) => {
                let mut s = p.all_var_names();
                s.extend(vs.iter().map(|v| v.name.clone()));
                s
            }
        }
    }

    /// Capture-avoiding substitution of free object variables.
    pub fn substitute(&self, map: &BTreeMap<Var, Term>) -> Result<Program, LogicError> {
        if map.is_empty() {
            return Ok(self.clone());
        }
        Ok(match self {
            Program::Act(a, args) => Program::Act(
                a.clone(),
                args.iter()
                    .map(|t| logic::substitute_term(t, map))
                    .collect::<Result<_, _>>()?,
            ),
            Program::Test(f) => Program::Test(logic::substitute(f, map)?),
            Program::Seq(ps) => Program::Seq(
                ps.iter().map(|p| p.substitute(map)).collect::<Result<_, _>>()?,
            ),
            Program::Choice(a, b) => Program::Choice(
                Box::new(a.substitute(map)?),
                Box::new(b.substitute(map)?),
            ),
            Program::Pick(vs, p) => {
                let mut inner: BTreeMap<Var, Term> = map
                    .iter()
                    .filter(|(k, _)| !vs.contains(k))
                    .map(|(k, v)| (k.clone(), v.clone()))
                    .collect();
                let incoming: BTreeSet<String> = inner
                    .values()
                    .flat_map(|t| logic::term_free_vars(t).into_iter().map(|v| v.name))
                    .collect();
                let mut avoid = incoming.clone();
                avoid.extend(p.all_var_names());
                let mut new_vars = Vec::new();
                for v in vs {
                    if incoming.contains(&v.name) {
                        let nv = Var {
                            name: logic::fresh_name(&v.name, &avoid),
                            sort: v.sort,
                        };
                        avoid.insert(nv.name.clone());
                        inner.insert(v.clone(), Term::Var(nv.clone()));
                        new_vars.push(nv);
                    } else {
                        new_vars.push(v.clone());
                    }
                }
                Program::Pick(new_vars, Box::new(p.substitute(&inner)?))
            }
        })
    }
}

impl fmt::Display for Program {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Program::Act(a, args) => {
                write!(f, "(act {a}")?;
                for t in args {
                    write!(f, " {t}")?;
                }
                write!(f, ")")
            }
            Program::Test(phi) => write!(f, "(test {phi})"),
            Program::Seq(ps) => {
                write!(f, "(seq")?;
                for p in ps {
                    write!(f, " {p}")?;
                }
                write!(f, ")")
            }
            Program::Choice(a, b) => write!(f, "(choice {a} {b})"),
            Program::Pick(vs, p) => {
                write!(f, "(pick (")?;
                for (i, v) in vs.iter().enumerate() {
                    write!(f, "{}{}", if i > 0 { " " } else { "" }, v.name)?;
                }
                write!(f, ") {p})")
            }
        }
    }
}

pub fn read_program(e: &SExpr, scope: &mut Scope<'_>) -> Result<Program, SyntaxError> {
    let items = e.expect_list("program")?;
    let head = e
        .head()
        .ok_or_else(|| SyntaxError::new(e.pos(), "expected program"))?;
    let args = &items[1..];
    match head {
        "act" => {
            let name = args
                .first()
                .and_then(|a| a.as_symbol())
                .ok_or_else(|| SyntaxError::new(e.pos(), "act expects an action name"))?;
            let arity = *scope
                .symbols
                .actions
                .get(name)
                .ok_or_else(|| SyntaxError::new(args[0].pos(), format!("undeclared action {name}")))?;
            if args.len() - 1 != arity {
                return Err(SyntaxError::new(
                    e.pos(),
                    format!("action {name} expects {arity} arguments, got {}", args.len() - 1),
                ));
            }
            let terms = args[1..]
                .iter()
                .map(|t| read_term(t, scope))
                .collect::<Result<Vec<_>, _>>()?;
            if let Some(t) = terms.iter().find(|t| !matches!(t, Term::Var(_) | Term::Const(_))) {
                return Err(SyntaxError::new(e.pos(), format!("action argument {t} is not an object term")));
            }
            Ok(Program::Act(name.to_string(), terms))
        }
        "test" => {
            if args.len() != 1 {
                return Err(SyntaxError::new(e.pos(), "test expects one formula"));
            }
            Ok(Program::Test(read_formula(&args[0], scope)?))
        }
        "seq" => Ok(Program::Seq(
            args.iter()
                .map(|p| read_program(p, scope))
                .collect::<Result<_, _>>()?,
        )),
        "choice" => {
            if args.len() < 2 {
                return Err(SyntaxError::new(e.pos(), "choice expects at least two programs"));
            }
            let mut ps = args
                .iter()
                .map(|p| read_program(p, scope))
                .collect::<Result<Vec<_>, _>>()?;
            let mut acc = ps.pop().unwrap();
            while let Some(p) = ps.pop() {
                acc = Program::Choice(Box::new(p), Box::new(acc));
            }
            Ok(acc)
        }
        "pick" => {
            if args.len() != 2 {
                return Err(SyntaxError::new(e.pos(), "pick expects (pick (vars) program)"));
            }
            let vars = scope.read_binders(&args[0])?;
            let mark = scope.push(&vars);
            let body = read_program(&args[1], scope);
            scope.pop(mark);
            Ok(Program::Pick(vars, Box::new(body?)))
        }
        "star" | "while" | "iter" => Err(SyntaxError::new(
            e.pos(),
            "iteration is not allowed in refinement programs",
        )),
        other => Err(SyntaxError::new(e.pos(), format!("unknown program construct {other}"))),
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ActionRefinement {
    pub params: Vec<Var>,
    pub program: Program,
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct RefinementMapping {
    pub prop_map: BTreeMap<String, Formula>,
    /// Each entry is a `Term::Count`.
    pub num_map: BTreeMap<String, Term>,
    pub action_map: BTreeMap<String, ActionRefinement>,
}

impl RefinementMapping {
    /// `m(φ)` for a high-level formula whose boolean features are 0-ary atoms
    /// and whose numeric variables are `Term::NumVar`.
    pub fn map_formula(&self, phi: &Formula) -> Result<Formula, MappingError> {
        let mut err = None;
        let out = phi.map_children(&mut |f| match f {
            Formula::Atom(name, args) if args.is_empty() => match self.prop_map.get(name) {
                Some(g) => Some(g.clone()),
                None => {
                    err.get_or_insert(MappingError::Unmapped(name.clone()));
                    Some(Formula::False)
                }
            },
            Formula::Atom(name, _) => {
                err.get_or_insert(MappingError::Unmapped(name.clone()));
                Some(Formula::False)
            }
            Formula::Cmp { op, lhs: Term::NumVar(n), rhs } => match self.num_map.get(n) {
                Some(c) => Some(Formula::Cmp {
                    op: *op,
                    lhs: c.clone(),
                    rhs: rhs.clone(),
                }),
                None => {
                    err.get_or_insert(MappingError::Unmapped(n.clone()));
                    Some(Formula::False)
                }
            },
            _ => None,
        });
        match err {
            Some(e) => Err(e),
            None => Ok(out),
        }
    }

    /// `m(A(t̄))` with the formal parameters replaced by `args`.
    pub fn map_action(&self, name: &str, args: &[Term]) -> Result<Program, MappingError> {
        let r = self
            .action_map
            .get(name)
            .ok_or_else(|| MappingError::Unmapped(name.to_string()))?;
        if r.params.len() != args.len() {
            return Err(MappingError::Arity {
                name: name.to_string(),
                expected: r.params.len(),
                got: args.len(),
            });
        }
        let map = r.params.iter().cloned().zip(args.iter().cloned()).collect();
        Ok(r.program.substitute(&map)?)
    }

    /// The count body `(x, φ(x))` of a numeric variable's refinement.
    pub fn count_of(&self, n: &str) -> Result<(&[Var], &Formula), MappingError> {
        match self.num_map.get(n) {
            Some(Term::Count(vs, body)) => Ok((vs, body)),
            _ => Err(MappingError::Unmapped(n.to_string())),
        }
    }
}

/// Parses a mapping file against the low-level symbol table.
pub fn parse_mapping(text: &str, symbols: &SymbolTable) -> Result<RefinementMapping, MappingError> {
    let top = sexpr::parse_one(text)?;
    if top.head() != Some("map") {
        return Err(SyntaxError::new(top.pos(), "expected (map …)").into());
    }
    let mut m = RefinementMapping::default();
    for entry in &top.as_list().unwrap()[1..] {
        let items = entry.expect_list("mapping entry")?;
        let key = entry.head().unwrap_or("");
        let name = items
            .get(1)
            .and_then(|n| n.as_symbol())
            .ok_or_else(|| SyntaxError::new(entry.pos(), "expected a high-level symbol name"))?
            .to_string();
        let dup = m.prop_map.contains_key(&name)
            || m.num_map.contains_key(&name)
            || m.action_map.contains_key(&name);
        if dup {
            return Err(SyntaxError::new(entry.pos(), format!("duplicate mapping for {name}")).into());
        }
        match key {
            ":fluent" => {
                if items.len() != 3 {
                    return Err(SyntaxError::new(entry.pos(), "expected (:fluent NAME formula)").into());
                }
                let f = read_formula(&items[2], &mut Scope::new(symbols))?;
                m.prop_map.insert(name, f);
            }
            ":num" => {
                if items.len() != 3 {
                    return Err(SyntaxError::new(entry.pos(), "expected (:num NAME (count …))").into());
                }
                let t = read_term(&items[2], &mut Scope::new(symbols))?;
                if !matches!(t, Term::Count(..)) {
                    return Err(SyntaxError::new(items[2].pos(), "numeric refinement must be a count term").into());
                }
                m.num_map.insert(name, t);
            }
            ":action" => {
                let (params, prog) = match items.len() {
                    3 => (Vec::new(), &items[2]),
                    4 => (Scope::new(symbols).read_binders(&items[2])?, &items[3]),
                    _ => {
                        return Err(SyntaxError::new(entry.pos(), "expected (:action NAME (params) program)").into())
                    }
                };
                let program = read_program(prog, &mut Scope::with_vars(symbols, &params))?;
                m.action_map.insert(name, ActionRefinement { params, program });
            }
            other => {
                return Err(SyntaxError::new(entry.pos(), format!("unknown mapping entry {other}")).into())
            }
        }
    }
    Ok(m)
}
