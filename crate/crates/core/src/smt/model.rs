//! Reading solver models back as finite states, and verdict classification.

use std::collections::BTreeMap;

use serde::Serialize;
use thiserror::Error;

use super::{Encoding, SolverStatus, SolverVerdict};
use crate::bat::BasicActionTheory;
use crate::oracle::{Evaluator, FiniteInstance, GroundState};
use crate::vcgen::{TaskKind, VerificationTask};

#[derive(Debug, Error, PartialEq, Eq)]
pub enum ModelError {
    #[error("malformed model: {0}")]
    Malformed(String),
    #[error("model uses an unsupported construct: {0}")]
    Unsupported(String),
}

#[derive(Debug, Clone, PartialEq, Eq)]
enum Tok {
    Open,
    Close,
    Atom(String),
}

#[derive(Debug, Clone, PartialEq, Eq)]
enum M {
    Atom(String),
    List(Vec<M>),
}

fn tokenize(text: &str) -> Vec<Tok> {
    let mut out = Vec::new();
    let mut chars = text.chars().peekable();
    while let Some(c) = chars.next() {
        match c {
            '(' => out.push(Tok::Open),
            ')' => out.push(Tok::Close),
            ';' => {
                while chars.peek().is_some_and(|&c| c != '\n') {
                    chars.next();
                }
            }
            '|' => {
                let mut s = String::new();
                for c in chars.by_ref() {
                    if c == '|' {
                        break;
                    }
                    s.push(c);
                }
                out.push(Tok::Atom(s));
            }
            c if c.is_whitespace() => {}
            c => {
                let mut s = String::from(c);
                while let Some(&c) = chars.peek() {
                    if c.is_whitespace() || c == '(' || c == ')' || c == ';' {
                        break;
                    }
                    s.push(c);
                    chars.next();
                }
                out.push(Tok::Atom(s));
            }
        }
    }
    out
}

fn parse(toks: &[Tok]) -> Result<Vec<M>, ModelError> {
    let mut stack: Vec<Vec<M>> = vec![Vec::new()];
    for t in toks {
        match t {
            Tok::Open => stack.push(Vec::new()),
            Tok::Close => {
                let done = stack.pop().filter(|_| !stack.is_empty()).ok_or_else(|| ModelError::Malformed("unbalanced )".into()))?;
                stack.last_mut().unwrap().push(M::List(done));
            }
            Tok::Atom(a) => stack.last_mut().unwrap().push(M::Atom(a.clone())),
        }
    }
    if stack.len() != 1 {
        return Err(ModelError::Malformed("unbalanced (".into()));
    }
    Ok(stack.pop().unwrap())
}

#[derive(Debug, Clone, PartialEq, Eq)]
enum Val {
    Bool(bool),
    Obj(String),
}

/// A first-order model as printed by the solver.
#[derive(Debug, Clone, Default)]
pub struct SolverModel {
    universe: Vec<String>,
    defs: BTreeMap<String, (Vec<String>, M)>,
}

/// Parses a `(get-model)` answer.
pub fn parse_model(text: &str) -> Result<SolverModel, ModelError> {
    let items = parse(&tokenize(text))?;
    let body = match items.as_slice() {
        [M::List(xs)] => xs.clone(),
        // Some solvers print the definitions without the outer list.
        _ => items,
    };
    let mut m = SolverModel::default();
    for item in body {
        let M::List(xs) = item else { continue };
        match xs.as_slice() {
            [M::Atom(kw), M::Atom(name), M::List(args), M::Atom(sort)] if kw == "declare-fun" && args.is_empty() => {
                if sort == "Obj" {
                    m.universe.push(name.clone());
                }
            }
            [M::Atom(kw), M::Atom(name), M::List(params), _sort, body] if kw == "define-fun" => {
                let mut ps = Vec::new();
                for p in params {
                    match p {
                        M::List(pv) if matches!(pv.first(), Some(M::Atom(_))) => {
                            let M::Atom(n) = &pv[0] else { unreachable!() };
                            ps.push(n.clone());
                        }
                        _ => return Err(ModelError::Malformed(format!("parameter list of {name}"))),
                    }
                }
                m.defs.insert(name.clone(), (ps, body.clone()));
            }
            _ => {}
        }
    }
    Ok(m)
}

impl SolverModel {
    fn eval(&self, e: &M, env: &[(String, Val)], depth: usize) -> Result<Val, ModelError> {
        if depth > 200 {
            return Err(ModelError::Unsupported("deeply nested definitions".into()));
        }
        let bool_of = |v: Val| match v {
            Val::Bool(b) => Ok(b),
            Val::Obj(o) => Err(ModelError::Malformed(format!("{o} used as a Boolean"))),
        };
        match e {
            M::Atom(a) => match a.as_str() {
                "true" => Ok(Val::Bool(true)),
                "false" => Ok(Val::Bool(false)),
                _ => {
                    if let Some((_, v)) = env.iter().rev().find(|(n, _)| n == a) {
                        return Ok(v.clone());
                    }
                    if let Some((ps, body)) = self.defs.get(a) {
                        if ps.is_empty() {
                            return self.eval(body, &[], depth + 1);
                        }
                    }
                    if self.universe.contains(a) {
                        return Ok(Val::Obj(a.clone()));
                    }
                    Err(ModelError::Unsupported(format!("unknown symbol {a}")))
                }
            },
            M::List(xs) => {
                let Some(M::Atom(head)) = xs.first() else {
                    return Err(ModelError::Unsupported("non-symbol head".into()));
                };
                let args = &xs[1..];
                let ev = |x: &M| self.eval(x, env, depth + 1);
                match head.as_str() {
                    "ite" if args.len() == 3 => {
                        if bool_of(ev(&args[0])?)? {
                            ev(&args[1])
                        } else {
                            ev(&args[2])
                        }
                    }
                    "and" => {
                        for a in args {
                            if !bool_of(ev(a)?)? {
                                return Ok(Val::Bool(false));
                            }
                        }
                        Ok(Val::Bool(true))
                    }
                    "or" => {
                        for a in args {
                            if bool_of(ev(a)?)? {
                                return Ok(Val::Bool(true));
                            }
                        }
                        Ok(Val::Bool(false))
                    }
                    "not" if args.len() == 1 => Ok(Val::Bool(!bool_of(ev(&args[0])?)?)),
                    "=>" if args.len() == 2 => Ok(Val::Bool(!bool_of(ev(&args[0])?)? || bool_of(ev(&args[1])?)?)),
                    "xor" if args.len() == 2 => Ok(Val::Bool(bool_of(ev(&args[0])?)? != bool_of(ev(&args[1])?)?)),
                    "=" if args.len() >= 2 => {
                        let first = ev(&args[0])?;
                        for a in &args[1..] {
                            if ev(a)? != first {
                                return Ok(Val::Bool(false));
                            }
                        }
                        Ok(Val::Bool(true))
                    }
                    "distinct" => {
                        let vals = args.iter().map(ev).collect::<Result<Vec<_>, _>>()?;
                        let all = vals.iter().enumerate().all(|(i, v)| !vals[..i].contains(v));
                        Ok(Val::Bool(all))
                    }
                    "let" if args.len() == 2 => {
                        let M::List(binds) = &args[0] else {
                            return Err(ModelError::Malformed("let bindings".into()));
                        };
                        let mut env2 = env.to_vec();
                        for b in binds {
                            match b {
                                M::List(p) if p.len() == 2 => {
                                    let M::Atom(n) = &p[0] else {
                                        return Err(ModelError::Malformed("let binding".into()));
                                    };
                                    env2.push((n.clone(), ev(&p[1])?));
                                }
                                _ => return Err(ModelError::Malformed("let binding".into())),
                            }
                        }
                        self.eval(&args[1], &env2, depth + 1)
                    }
                    f => {
                        let Some((ps, body)) = self.defs.get(f) else {
                            return Err(ModelError::Unsupported(format!("application of {f}")));
                        };
                        if ps.len() != args.len() {
                            return Err(ModelError::Malformed(format!("arity of {f}")));
                        }
                        let mut env2 = Vec::new();
                        for (p, a) in ps.iter().zip(args) {
                            env2.push((p.clone(), ev(a)?));
                        }
                        self.eval(body, &env2, depth + 1)
                    }
                }
            }
        }
    }

    /// The model as a finite instance of `theory`: universe elements that
    /// interpret constants take the constant's name.
    pub fn to_instance(&self, theory: &BasicActionTheory) -> Result<FiniteInstance, ModelError> {
        let mut universe = self.universe.clone();
        let mut names: BTreeMap<String, String> = BTreeMap::new();
        for c in &theory.symbols.constants {
            match self.eval(&M::Atom(c.clone()), &[], 0) {
                Ok(Val::Obj(o)) => {
                    if !universe.contains(&o) {
                        universe.push(o.clone());
                    }
                    names.insert(o, c.clone());
                }
                Ok(Val::Bool(_)) => return Err(ModelError::Malformed(format!("constant {c} is Boolean"))),
                Err(_) => {
                    // Unconstrained constant: give it an element of its own.
                    let o = format!("{c}!fresh");
                    universe.push(o.clone());
                    names.insert(o, c.clone());
                }
            }
        }
        if universe.is_empty() {
            universe.push("o!0".into());
        }
        let objects: Vec<String> = universe
            .iter()
            .enumerate()
            .map(|(i, o)| names.get(o).cloned().unwrap_or_else(|| format!("o{i}")))
            .collect();
        let mut state = GroundState::default();
        for (f, &arity) in &theory.symbols.fluents {
            let Some((ps, _)) = self.defs.get(f) else { continue };
            if ps.len() != arity {
                return Err(ModelError::Malformed(format!("arity of {f}")));
            }
            let n = universe.len();
            let total = n.checked_pow(arity as u32).filter(|&t| t <= 1 << 20).ok_or_else(|| ModelError::Unsupported("model too large".into()))?;
            for code in 0..total {
                let mut idx = Vec::with_capacity(arity);
                let mut c = code;
                for _ in 0..arity {
                    idx.push(c % n);
                    c /= n;
                }
                idx.reverse();
                let call = if arity == 0 {
                    M::Atom(f.clone())
                } else {
                    let mut xs = vec![M::Atom(f.clone())];
                    xs.extend(idx.iter().map(|&i| M::Atom(universe[i].clone())));
                    M::List(xs)
                };
                if self.eval(&call, &[], 0)? == Val::Bool(true) {
                    state.insert(f, idx);
                }
            }
        }
        let mut inst = FiniteInstance::new(objects);
        inst.init = state;
        Ok(inst)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum Classification {
    Valid,
    Refuted,
    Unknown,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct TaskResult {
    pub id: String,
    pub kind: TaskKind,
    pub provenance: String,
    pub classification: Classification,
    /// The solver said `sat` but the model is not a genuine counterexample
    /// under the true closure semantics.
    pub downgraded: bool,
    pub verdict: SolverVerdict,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub counterexample: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub note: Option<String>,
}

/// Turns a solver verdict into a task classification. A `sat` answer on a
/// task with closure predicates is only trusted once the oracle confirms the
/// model falsifies the task under genuine closure semantics.
pub fn classify(task: &VerificationTask, enc: &Encoding, verdict: SolverVerdict, theory: &BasicActionTheory) -> TaskResult {
    let mut r = TaskResult {
        id: task.id.clone(),
        kind: task.kind,
        provenance: task.provenance.clone(),
        classification: Classification::Unknown,
        downgraded: false,
        verdict,
        counterexample: None,
        note: None,
    };
    match r.verdict.status {
        SolverStatus::Unsat => r.classification = Classification::Valid,
        SolverStatus::Sat => {
            let checked = r
                .verdict
                .model
                .as_deref()
                .ok_or_else(|| "solver printed no model".to_string())
                .and_then(|text| parse_model(text).map_err(|e| e.to_string()))
                .and_then(|m| m.to_instance(theory).map_err(|e| e.to_string()))
                .and_then(|inst| {
                    let ev = Evaluator::new(theory, &inst);
                    let holds = ev.eval(&task.formula, &inst.init).map_err(|e| e.to_string())?;
                    Ok((inst, holds))
                });
            match checked {
                Ok((inst, false)) => {
                    r.classification = Classification::Refuted;
                    r.counterexample = Some(format!(
                        "objects ({}) state {}",
                        inst.objects.join(" "),
                        inst.init.display(&inst.objects)
                    ));
                }
                Ok((_, true)) if enc.has_tc() => {
                    r.downgraded = true;
                    r.note = Some("solver model is spurious under genuine closure semantics".into());
                }
                Ok((_, true)) => {
                    // Without closure atoms the model is a first-order
                    // countermodel even if our reading of it disagrees.
                    r.classification = Classification::Refuted;
                    r.note = Some("countermodel could not be replayed".into());
                }
                Err(e) if enc.has_tc() => {
                    r.downgraded = true;
                    r.note = Some(format!("countermodel not confirmed: {e}"));
                }
                Err(e) => {
                    r.classification = Classification::Refuted;
                    r.note = Some(format!("countermodel could not be replayed: {e}"));
                }
            }
        }
        SolverStatus::Unknown | SolverStatus::Timeout | SolverStatus::Error => {}
    }
    r
}

#[cfg(test)]
mod tests {
    use super::*;

    const MODEL: &str = "(\n  ;; universe for Obj:\n  (declare-fun Obj!val!1 () Obj)\n  (declare-fun Obj!val!0 () Obj)\n  \
        (forall ((x Obj)) (or (= x Obj!val!1) (= x Obj!val!0)))\n  (define-fun A () Obj Obj!val!0)\n  \
        (define-fun k!3 ((x!0 Obj)) Obj (ite (= x!0 Obj!val!1) Obj!val!1 Obj!val!0))\n  \
        (define-fun on ((x!0 Obj) (x!1 Obj)) Bool (let ((a!1 (k!3 x!0))) (and (= a!1 Obj!val!1) (= x!1 A))))\n)";

    #[test]
    fn reads_nested_definitions() {
        let bat = crate::bat::compile_domain(
            "(domain d (:constants A) (:predicates (on ?x ?y) (clear ?x)) (:init (clear A)) (:goal (clear A)))",
        )
        .unwrap();
        let inst = parse_model(MODEL).unwrap().to_instance(&bat).unwrap();
        assert_eq!(inst.objects, ["o0", "A"]);
        assert!(inst.init.holds("on", &[0, 1]));
        assert_eq!(inst.init.len(), 1);
    }

    #[test]
    fn rejects_unbalanced() {
        assert!(parse_model("((define-fun A () Obj x)").is_err());
    }
}
