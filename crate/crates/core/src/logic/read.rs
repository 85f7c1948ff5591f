//! Reading formulas and terms from S-expressions.
//!
//! A symbol denotes a variable when it is bound by an enclosing quantifier,
//! count, TC, pick or parameter list; otherwise it must be a declared
//! constant. A leading `?` is accepted and ignored on variable names.

use crate::sexpr::{SExpr, SyntaxError};

use super::{Bound, CmpOp, Formula, SymbolTable, TcAtom, Term, Var};

pub const RESERVED: &[&str] = &[
    "and", "or", "not", "imply", "iff", "forall", "exists", "tc", "count", "true", "false", "poss",
    "after", "frozen", "=", ">",
];

pub struct Scope<'a> {
    pub symbols: &'a SymbolTable,
    bound: Vec<Var>,
}

pub fn strip_var(name: &str) -> &str {
    name.strip_prefix('?').unwrap_or(name)
}

impl<'a> Scope<'a> {
    pub fn new(symbols: &'a SymbolTable) -> Self {
        Scope {
            symbols,
            bound: Vec::new(),
        }
    }

    pub fn with_vars(symbols: &'a SymbolTable, vars: &[Var]) -> Self {
        Scope {
            symbols,
            bound: vars.to_vec(),
        }
    }

    fn lookup(&self, name: &str) -> Option<&Var> {
        self.bound.iter().rev().find(|v| v.name == name)
    }

    /// Reads a `(?x ?y …)` binder list.
    pub fn read_binders(&self, e: &SExpr) -> Result<Vec<Var>, SyntaxError> {
        let items = e.expect_list("variable list")?;
        let mut out: Vec<Var> = Vec::new();
        for item in items {
            let raw = item.expect_symbol("variable")?;
            let name = strip_var(raw);
            if RESERVED.contains(&name) {
                return Err(SyntaxError::new(item.pos(), format!("reserved word {name} used as variable")));
            }
            if out.iter().any(|v| v.name == name) {
                return Err(SyntaxError::new(item.pos(), format!("variable {name} bound twice")));
            }
            out.push(Var::object(name));
        }
        Ok(out)
    }

    pub fn push(&mut self, vars: &[Var]) -> usize {
        let n = self.bound.len();
        self.bound.extend(vars.iter().cloned());
        n
    }

    pub fn pop(&mut self, mark: usize) {
        self.bound.truncate(mark);
    }
}

pub fn read_term(e: &SExpr, scope: &mut Scope<'_>) -> Result<Term, SyntaxError> {
    match e {
        SExpr::Symbol(raw, pos) => {
            let name = strip_var(raw);
            if let Some(v) = scope.lookup(name) {
                return Ok(Term::Var(v.clone()));
            }
            if raw.starts_with('?') {
                return Err(SyntaxError::new(*pos, format!("unbound variable {raw}")));
            }
            if scope.symbols.constants.contains(name) {
                Ok(Term::Const(name.to_string()))
            } else {
                Err(SyntaxError::new(*pos, format!("undeclared constant {name}")))
            }
        }
        SExpr::Int(i, pos) => Err(SyntaxError::new(*pos, format!("integer {i} is not a term"))),
        SExpr::List(items, pos) => {
            let head = items
                .first()
                .and_then(|h| h.as_symbol())
                .ok_or_else(|| SyntaxError::new(*pos, "expected function application"))?;
            if head == "count" {
                if items.len() != 3 {
                    return Err(SyntaxError::new(*pos, "count expects (count (vars) formula)"));
                }
                let vars = scope.read_binders(&items[1])?;
                let mark = scope.push(&vars);
                let body = read_formula(&items[2], scope);
                scope.pop(mark);
                return Ok(Term::Count(vars, Box::new(body?)));
            }
            match scope.symbols.actions.get(head) {
                Some(&arity) => {
                    if items.len() - 1 != arity {
                        return Err(SyntaxError::new(
                            *pos,
                            format!("action {head} expects {arity} arguments, got {}", items.len() - 1),
                        ));
                    }
                    let args = items[1..]
                        .iter()
                        .map(|a| read_term(a, scope))
                        .collect::<Result<Vec<_>, _>>()?;
                    Ok(Term::App(head.to_string(), args))
                }
                None => Err(SyntaxError::new(*pos, format!("undeclared function {head}"))),
            }
        }
    }
}

fn read_int(e: &SExpr) -> Result<u64, SyntaxError> {
    match e {
        SExpr::Int(i, _) if *i >= 0 => Ok(*i as u64),
        other => Err(SyntaxError::new(
            other.pos(),
            format!("expected a non-negative integer, found {other}"),
        )),
    }
}

fn is_count_expr(e: &SExpr) -> bool {
    e.head() == Some("count")
}

pub fn read_formula(e: &SExpr, scope: &mut Scope<'_>) -> Result<Formula, SyntaxError> {
    let (items, pos) = match e {
        SExpr::Symbol(s, pos) => {
            return match s.as_str() {
                "true" => Ok(Formula::True),
                "false" => Ok(Formula::False),
                name => match scope.symbols.fluents.get(name) {
                    Some(0) => Ok(Formula::Atom(name.to_string(), vec![])),
                    _ => Err(SyntaxError::new(*pos, format!("expected formula, found {name}"))),
                },
            }
        }
        SExpr::Int(i, pos) => return Err(SyntaxError::new(*pos, format!("expected formula, found {i}"))),
        SExpr::List(items, pos) => (items, *pos),
    };
    let head = items
        .first()
        .and_then(|h| h.as_symbol())
        .ok_or_else(|| SyntaxError::new(pos, "expected formula"))?;
    let args = &items[1..];
    let arity = |n: usize| -> Result<(), SyntaxError> {
        if args.len() == n {
            Ok(())
        } else {
            Err(SyntaxError::new(pos, format!("{head} expects {n} arguments, got {}", args.len())))
        }
    };
    match head {
        "not" => {
            arity(1)?;
            Ok(Formula::not(read_formula(&args[0], scope)?))
        }
        "and" | "or" => {
            let parts = args
                .iter()
                .map(|a| read_formula(a, scope))
                .collect::<Result<Vec<_>, _>>()?;
            Ok(if head == "and" {
                Formula::And(parts)
            } else {
                Formula::Or(parts)
            })
        }
        "imply" | "iff" => {
            arity(2)?;
            let a = read_formula(&args[0], scope)?;
            let b = read_formula(&args[1], scope)?;
            Ok(if head == "imply" {
                Formula::imply(a, b)
            } else {
                Formula::iff(a, b)
            })
        }
        "forall" | "exists" => {
            arity(2)?;
            let vars = scope.read_binders(&args[0])?;
            let mark = scope.push(&vars);
            let body = read_formula(&args[1], scope);
            scope.pop(mark);
            let body = Box::new(body?);
            Ok(if head == "forall" {
                Formula::Forall(vars, body)
            } else {
                Formula::Exists(vars, body)
            })
        }
        "tc" => {
            arity(4)?;
            let vs = args[0].expect_list("TC variable pair")?;
            let (from, to) = if vs.len() == 2 && vs.iter().all(|v| v.as_symbol().is_some()) {
                let both = scope.read_binders(&args[0])?;
                (vec![both[0].clone()], vec![both[1].clone()])
            } else if vs.len() == 2 {
                let from = scope.read_binders(&vs[0])?;
                let to = scope.read_binders(&vs[1])?;
                if from.len() != to.len() || from.is_empty() {
                    return Err(SyntaxError::new(args[0].pos(), "TC tuples must have equal non-zero length"));
                }
                (from, to)
            } else {
                return Err(SyntaxError::new(args[0].pos(), "expected (x y) or ((x…) (y…))"));
            };
            let k = from.len();
            let all: Vec<Var> = from.iter().chain(&to).cloned().collect();
            if all.iter().enumerate().any(|(i, v)| all[i + 1..].contains(v)) {
                return Err(SyntaxError::new(args[0].pos(), "TC variables must be distinct"));
            }
            let mark = scope.push(&all);
            let body = read_formula(&args[1], scope);
            scope.pop(mark);
            let body = body?;
            let read_tuple = |e: &SExpr, scope: &mut Scope<'_>| -> Result<Vec<Term>, SyntaxError> {
                if k == 1 {
                    Ok(vec![read_term(e, scope)?])
                } else {
                    let items = e.expect_list("term tuple")?;
                    if items.len() != k {
                        return Err(SyntaxError::new(e.pos(), format!("expected {k} terms")));
                    }
                    items.iter().map(|t| read_term(t, scope)).collect()
                }
            };
            let left = read_tuple(&args[2], scope)?;
            let right = read_tuple(&args[3], scope)?;
            Ok(Formula::Tc(Box::new(TcAtom {
                from,
                to,
                body,
                left,
                right,
            })))
        }
        "=" | ">" => {
            arity(2)?;
            if is_count_expr(&args[0]) || head == ">" {
                let lhs = read_term(&args[0], scope)?;
                if !matches!(lhs, Term::Count(..)) {
                    return Err(SyntaxError::new(args[0].pos(), "comparison expects a count expression"));
                }
                let rhs = Bound::Int(read_int(&args[1])?);
                let op = if head == "=" { CmpOp::Eq } else { CmpOp::Gt };
                return Ok(Formula::Cmp { op, lhs, rhs });
            }
            Ok(Formula::Eq(read_term(&args[0], scope)?, read_term(&args[1], scope)?))
        }
        "poss" => {
            arity(1)?;
            let t = read_term(&args[0], scope)?;
            if !matches!(t, Term::App(..)) {
                return Err(SyntaxError::new(args[0].pos(), "poss expects an action term"));
            }
            Ok(Formula::Poss(t))
        }
        "after" => {
            arity(2)?;
            let t = read_term(&args[0], scope)?;
            if !matches!(t, Term::App(..)) {
                return Err(SyntaxError::new(args[0].pos(), "after expects an action term"));
            }
            Ok(Formula::after(t, read_formula(&args[1], scope)?))
        }
        "frozen" => {
            arity(1)?;
            Ok(Formula::frozen(read_formula(&args[0], scope)?))
        }
        "count" => Err(SyntaxError::new(pos, "count is a term, not a formula")),
        pred => match scope.symbols.fluents.get(pred) {
            Some(&n) => {
                arity(n)?;
                let terms = args
                    .iter()
                    .map(|a| read_term(a, scope))
                    .collect::<Result<Vec<_>, _>>()?;
                Ok(Formula::Atom(pred.to_string(), terms))
            }
            None => Err(SyntaxError::new(pos, format!("undeclared predicate {pred}"))),
        },
    }
}
