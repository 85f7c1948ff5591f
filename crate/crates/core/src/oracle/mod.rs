//! Brute-force finite-model semantics: formula evaluation with genuine
//! counting and transitive closure, STRIPS transitions and program
//! executions over a small explicit universe.

pub mod families;

use std::collections::{BTreeMap, BTreeSet, VecDeque};

use thiserror::Error;

use crate::bat::{ActionSchema, BasicActionTheory, BatError};
use crate::golog::Program;
use crate::logic::{Bound, CmpOp, Formula, Term, Var};
use crate::sexpr::{self, SExpr, SyntaxError};
use crate::vcgen::{TaskSemantics, VerificationTask};

#[derive(Debug, Error)]
pub enum OracleError {
    #[error("unbound variable {0}")]
    Unbound(String),
    #[error("constant {0} is not an object of the instance")]
    UnknownConstant(String),
    #[error("cannot evaluate {0}")]
    Unsupported(String),
    #[error(transparent)]
    Bat(#[from] BatError),
    #[error(transparent)]
    Syntax(#[from] SyntaxError),
    #[error("instance initial state violates the domain's initial formula")]
    InitViolated,
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct GroundState {
    /// Fluent name to the set of argument tuples it holds of; no empty sets.
    atoms: BTreeMap<String, BTreeSet<Vec<usize>>>,
}

impl GroundState {
    pub fn holds(&self, pred: &str, args: &[usize]) -> bool {
        self.atoms.get(pred).is_some_and(|s| s.contains(args))
    }

    pub fn insert(&mut self, pred: &str, args: Vec<usize>) {
        self.atoms.entry(pred.to_string()).or_default().insert(args);
    }

    pub fn remove(&mut self, pred: &str, args: &[usize]) {
        if let Some(s) = self.atoms.get_mut(pred) {
            s.remove(args);
            if s.is_empty() {
                self.atoms.remove(pred);
            }
        }
    }

    pub fn iter(&self) -> impl Iterator<Item = (&str, &[usize])> {
        self.atoms
            .iter()
            .flat_map(|(p, s)| s.iter().map(move |a| (p.as_str(), a.as_slice())))
    }

    pub fn len(&self) -> usize {
        self.atoms.values().map(BTreeSet::len).sum()
    }

    pub fn is_empty(&self) -> bool {
        self.atoms.is_empty()
    }

    pub fn display(&self, objects: &[String]) -> String {
        let parts: Vec<String> = self
            .iter()
            .map(|(p, args)| {
                let a: Vec<&str> = args.iter().map(|i| objects[*i].as_str()).collect();
                if a.is_empty() {
                    format!("({p})")
                } else {
                    format!("({p} {})", a.join(" "))
                }
            })
            .collect();
        parts.join(" ")
    }
}

/// An explicit universe. Constants denote the object with the same name.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FiniteInstance {
    pub objects: Vec<String>,
    pub init: GroundState,
}

impl FiniteInstance {
    pub fn new(objects: Vec<String>) -> Self {
        FiniteInstance {
            objects,
            init: GroundState::default(),
        }
    }

    pub fn index(&self, name: &str) -> Option<usize> {
        self.objects.iter().position(|o| o == name)
    }

    pub fn with_atom(mut self, pred: &str, args: &[&str]) -> Self {
        let idx = args
            .iter()
            .map(|a| self.index(a).unwrap_or_else(|| panic!("unknown object {a}")))
            .collect();
        self.init.insert(pred, idx);
        self
    }

    pub fn size(&self) -> usize {
        self.objects.len()
    }

    /// Checks that every domain constant is an object and the initial
    /// state satisfies the domain's initial formula.
    pub fn check_init(&self, theory: &BasicActionTheory) -> Result<(), OracleError> {
        for c in &theory.symbols.constants {
            if self.index(c).is_none() {
                return Err(OracleError::UnknownConstant(c.clone()));
            }
        }
        if Evaluator::new(theory, self).eval(&theory.init, &self.init)? {
            Ok(())
        } else {
            Err(OracleError::InitViolated)
        }
    }
}

/// Parses `(instance (:objects a b …) (:init (p a b) …))`.
pub fn parse_instance(text: &str, theory: &BasicActionTheory) -> Result<FiniteInstance, OracleError> {
    let top = sexpr::parse_one(text)?;
    if top.head() != Some("instance") {
        return Err(SyntaxError::new(top.pos(), "expected (instance …)").into());
    }
    let mut objects = Vec::new();
    let mut atoms: Vec<&SExpr> = Vec::new();
    for s in &top.as_list().unwrap()[1..] {
        let list = s.expect_list("instance section")?;
        match s.head() {
            Some(":objects") => {
                for o in &list[1..] {
                    objects.push(o.expect_symbol("object")?.to_string());
                }
            }
            Some(":init") => atoms.extend(&list[1..]),
            _ => return Err(SyntaxError::new(s.pos(), format!("unknown instance section {s}")).into()),
        }
    }
    let mut inst = FiniteInstance::new(objects);
    for a in atoms {
        let (pred, args) = match a {
            SExpr::Symbol(p, _) => (p.as_str(), &[][..]),
            SExpr::List(items, pos) => (
                items
                    .first()
                    .and_then(|h| h.as_symbol())
                    .ok_or_else(|| SyntaxError::new(*pos, "expected ground atom"))?,
                &items[1..],
            ),
            SExpr::Int(_, pos) => return Err(SyntaxError::new(*pos, "expected ground atom").into()),
        };
        match theory.symbols.fluents.get(pred) {
            Some(&n) if n == args.len() => {}
            _ => return Err(SyntaxError::new(a.pos(), format!("bad ground atom {a}")).into()),
        }
        let mut idx = Vec::new();
        for arg in args {
            let name = arg.expect_symbol("object")?;
            idx.push(
                inst.index(name)
                    .ok_or_else(|| SyntaxError::new(arg.pos(), format!("unknown object {name}")))?,
            );
        }
        inst.init.insert(pred, idx);
    }
    Ok(inst)
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Value {
    Obj(usize),
    Act(String, Vec<usize>),
}

pub type GroundAction = (String, Vec<usize>);

/// Evaluation of formulas and programs over one instance.
pub struct Evaluator<'a> {
    pub theory: &'a BasicActionTheory,
    pub instance: &'a FiniteInstance,
    consts: BTreeMap<&'a str, usize>,
}

type Env = Vec<(Var, Value)>;

impl<'a> Evaluator<'a> {
    pub fn new(theory: &'a BasicActionTheory, instance: &'a FiniteInstance) -> Self {
        let consts = instance
            .objects
            .iter()
            .enumerate()
            .map(|(i, o)| (o.as_str(), i))
            .collect();
        Evaluator {
            theory,
            instance,
            consts,
        }
    }

    fn n(&self) -> usize {
        self.instance.objects.len()
    }

    /// Evaluates a closed formula; `frozen` parts refer to the same state.
    pub fn eval(&self, phi: &Formula, state: &GroundState) -> Result<bool, OracleError> {
        self.eval_in(phi, state, state, &mut Vec::new())
    }

    /// Evaluates with `frozen` parts read from `origin`.
    pub fn eval_with_origin(
        &self,
        phi: &Formula,
        state: &GroundState,
        origin: &GroundState,
    ) -> Result<bool, OracleError> {
        self.eval_in(phi, state, origin, &mut Vec::new())
    }

    /// Evaluates a formula with free variables bound by `env`.
    pub fn eval_env(
        &self,
        phi: &Formula,
        state: &GroundState,
        origin: &GroundState,
        env: &mut Vec<(Var, Value)>,
    ) -> Result<bool, OracleError> {
        self.eval_in(phi, state, origin, env)
    }

    fn term(&self, t: &Term, env: &Env) -> Result<Value, OracleError> {
        match t {
            Term::Var(v) => env
                .iter()
                .rev()
                .find(|(w, _)| w == v)
                .map(|(_, val)| val.clone())
                .ok_or_else(|| OracleError::Unbound(v.name.clone())),
            Term::Const(c) => self
                .consts
                .get(c.as_str())
                .map(|i| Value::Obj(*i))
                .ok_or_else(|| OracleError::UnknownConstant(c.clone())),
            Term::App(f, args) => {
                let mut idx = Vec::with_capacity(args.len());
                for a in args {
                    idx.push(self.obj(a, env)?);
                }
                Ok(Value::Act(f.clone(), idx))
            }
            Term::Count(..) | Term::NumVar(_) => Err(OracleError::Unsupported(t.to_string())),
        }
    }

    fn obj(&self, t: &Term, env: &Env) -> Result<usize, OracleError> {
        match self.term(t, env)? {
            Value::Obj(i) => Ok(i),
            Value::Act(..) => Err(OracleError::Unsupported(format!("action term {t} in object position"))),
        }
    }

    /// Calls `f` for every assignment of `vars` to objects; stops early when
    /// `f` returns `Some`.
    fn for_assignments<T>(
        &self,
        vars: &[Var],
        env: &mut Env,
        f: &mut dyn FnMut(&mut Env) -> Result<Option<T>, OracleError>,
    ) -> Result<Option<T>, OracleError> {
        if vars.is_empty() {
            return f(env);
        }
        for i in 0..self.n() {
            env.push((vars[0].clone(), Value::Obj(i)));
            let r = self.for_assignments(&vars[1..], env, f);
            env.pop();
            if let Some(x) = r? {
                return Ok(Some(x));
            }
        }
        Ok(None)
    }

    fn count(
        &self,
        vars: &[Var],
        body: &Formula,
        state: &GroundState,
        origin: &GroundState,
        env: &mut Env,
    ) -> Result<u64, OracleError> {
        let mut c = 0u64;
        self.for_assignments::<()>(vars, env, &mut |env| {
            if self.eval_in(body, state, origin, env)? {
                c += 1;
            }
            Ok(None)
        })?;
        Ok(c)
    }

    fn tuples(&self, k: usize) -> Vec<Vec<usize>> {
        let mut out = vec![vec![]];
        for _ in 0..k {
            out = out
                .into_iter()
                .flat_map(|t| {
                    (0..self.n()).map(move |i| {
                        let mut t = t.clone();
                        t.push(i);
                        t
                    })
                })
                .collect();
        }
        out
    }

    /// Edge relation of a TC body on k-tuples.
    pub fn tc_edges(
        &self,
        tc: &crate::logic::TcAtom,
        state: &GroundState,
        origin: &GroundState,
        env: &mut Env,
    ) -> Result<BTreeMap<Vec<usize>, Vec<Vec<usize>>>, OracleError> {
        let k = tc.from.len();
        let tuples = self.tuples(k);
        let mut edges: BTreeMap<Vec<usize>, Vec<Vec<usize>>> = BTreeMap::new();
        for u in &tuples {
            for v in &tuples {
                let mark = env.len();
                for (var, i) in tc.from.iter().zip(u) {
                    env.push((var.clone(), Value::Obj(*i)));
                }
                for (var, i) in tc.to.iter().zip(v) {
                    env.push((var.clone(), Value::Obj(*i)));
                }
                let r = self.eval_in(&tc.body, state, origin, env);
                env.truncate(mark);
                if r? {
                    edges.entry(u.clone()).or_default().push(v.clone());
                }
            }
        }
        Ok(edges)
    }

    fn eval_in(
        &self,
        phi: &Formula,
        state: &GroundState,
        origin: &GroundState,
        env: &mut Env,
    ) -> Result<bool, OracleError> {
        Ok(match phi {
            Formula::True => true,
            Formula::False => false,
            Formula::Atom(p, args) => {
                let mut idx = Vec::with_capacity(args.len());
                for a in args {
                    idx.push(self.obj(a, env)?);
                }
                state.holds(p, &idx)
            }
            Formula::Eq(a, b) => self.term(a, env)? == self.term(b, env)?,
            Formula::Cmp { op, lhs, rhs } => {
                let Term::Count(vs, body) = lhs else {
                    return Err(OracleError::Unsupported(phi.to_string()));
                };
                let Bound::Int(k) = rhs else {
                    return Err(OracleError::Unsupported(phi.to_string()));
                };
                let c = self.count(vs, body, state, origin, env)?;
                match op {
                    CmpOp::Eq => c == *k,
                    CmpOp::Gt => c > *k,
                }
            }
            Formula::Not(g) => !self.eval_in(g, state, origin, env)?,
            Formula::And(gs) => {
                for g in gs {
                    if !self.eval_in(g, state, origin, env)? {
                        return Ok(false);
                    }
                }
                true
            }
            Formula::Or(gs) => {
                for g in gs {
                    if self.eval_in(g, state, origin, env)? {
                        return Ok(true);
                    }
                }
                false
            }
            Formula::Imply(a, b) => !self.eval_in(a, state, origin, env)? || self.eval_in(b, state, origin, env)?,
            Formula::Iff(a, b) => self.eval_in(a, state, origin, env)? == self.eval_in(b, state, origin, env)?,
            Formula::Forall(vs, g) => self
                .for_assignments(vs, env, &mut |env| {
                    Ok(if self.eval_in(g, state, origin, env)? { None } else { Some(()) })
                })?
                .is_none(),
            Formula::Exists(vs, g) => self
                .for_assignments(vs, env, &mut |env| {
                    Ok(if self.eval_in(g, state, origin, env)? { Some(()) } else { None })
                })?
                .is_some(),
            Formula::Tc(tc) => {
                let mut src = Vec::new();
                for t in &tc.left {
                    src.push(self.obj(t, env)?);
                }
                let mut dst = Vec::new();
                for t in &tc.right {
                    dst.push(self.obj(t, env)?);
                }
                let edges = self.tc_edges(tc, state, origin, env)?;
                reaches(&edges, &src, &dst)
            }
            Formula::Poss(alpha) => match self.term(alpha, env)? {
                Value::Act(name, args) => self.poss(&(name, args), state)?,
                Value::Obj(_) => return Err(OracleError::Unsupported(phi.to_string())),
            },
            Formula::After(alpha, g) => match self.term(alpha, env)? {
                Value::Act(name, args) => {
                    let next = self.apply_effects(&(name, args), state)?;
                    self.eval_in(g, &next, origin, env)?
                }
                Value::Obj(_) => return Err(OracleError::Unsupported(phi.to_string())),
            },
            Formula::Frozen(g) => self.eval_in(g, origin, origin, env)?,
        })
    }

    fn schema(&self, name: &str) -> Result<&'a ActionSchema, OracleError> {
        Ok(self.theory.action(name)?)
    }

    pub fn poss(&self, a: &GroundAction, state: &GroundState) -> Result<bool, OracleError> {
        let schema = self.schema(&a.0)?;
        let mut env: Env = schema
            .params
            .iter()
            .cloned()
            .zip(a.1.iter().map(|i| Value::Obj(*i)))
            .collect();
        self.eval_in(&schema.precondition, state, state, &mut env)
    }

    /// STRIPS transition ignoring the precondition: deletes, then adds.
    pub fn apply_effects(&self, a: &GroundAction, state: &GroundState) -> Result<GroundState, OracleError> {
        let schema = self.schema(&a.0)?;
        let env: Env = schema
            .params
            .iter()
            .cloned()
            .zip(a.1.iter().map(|i| Value::Obj(*i)))
            .collect();
        let mut next = state.clone();
        for d in &schema.del {
            let idx = d.args.iter().map(|t| self.obj(t, &env)).collect::<Result<Vec<_>, _>>()?;
            next.remove(&d.fluent, &idx);
        }
        for ad in &schema.add {
            let idx = ad.args.iter().map(|t| self.obj(t, &env)).collect::<Result<Vec<_>, _>>()?;
            next.insert(&ad.fluent, idx);
        }
        Ok(next)
    }

    /// The successor state, or `None` when the action is not possible.
    pub fn step(&self, a: &GroundAction, state: &GroundState) -> Result<Option<GroundState>, OracleError> {
        if self.poss(a, state)? {
            Ok(Some(self.apply_effects(a, state)?))
        } else {
            Ok(None)
        }
    }

    pub fn ground_actions(&self) -> Vec<GroundAction> {
        let mut out = Vec::new();
        for (name, schema) in &self.theory.actions {
            for t in self.tuples(schema.params.len()) {
                out.push((name.clone(), t));
            }
        }
        out
    }

    /// Terminal states of all executions of `program` from `state`.
    pub fn executions(&self, state: &GroundState, program: &Program) -> Result<BTreeSet<GroundState>, OracleError> {
        self.exec_env(state, program, &mut Vec::new())
    }

    pub fn exec_env(
        &self,
        state: &GroundState,
        program: &Program,
        env: &mut Env,
    ) -> Result<BTreeSet<GroundState>, OracleError> {
        let mut out = BTreeSet::new();
        match program {
            Program::Act(name, args) => {
                let idx = args.iter().map(|t| self.obj(t, env)).collect::<Result<Vec<_>, _>>()?;
                if let Some(next) = self.step(&(name.clone(), idx), state)? {
                    out.insert(next);
                }
            }
            Program::Test(f) => {
                if self.eval_in(f, state, state, env)? {
                    out.insert(state.clone());
                }
            }
            Program::Seq(ps) => {
                let mut frontier = BTreeSet::from([state.clone()]);
                for p in ps {
                    let mut next = BTreeSet::new();
                    for s in &frontier {
                        next.extend(self.exec_env(s, p, env)?);
                    }
                    frontier = next;
                }
                out = frontier;
            }
            Program::Choice(a, b) => {
                out.extend(self.exec_env(state, a, env)?);
                out.extend(self.exec_env(state, b, env)?);
            }
            Program::Pick(vs, body) => {
                self.for_assignments::<()>(vs, env, &mut |env| {
                    out.extend(self.exec_env(state, body, env)?);
                    Ok(None)
                })?;
            }
        }
        Ok(out)
    }

    /// Some execution of `program` ends in a state satisfying `phi`
    /// (with `frozen` parts read from the start state).
    pub fn some_execution_satisfies(
        &self,
        state: &GroundState,
        program: &Program,
        phi: &Formula,
        env: &mut Env,
    ) -> Result<bool, OracleError> {
        for s in self.exec_env(state, program, env)? {
            if self.eval_in(phi, &s, state, env)? {
                return Ok(true);
            }
        }
        Ok(false)
    }

    pub fn all_executions_satisfy(
        &self,
        state: &GroundState,
        program: &Program,
        phi: &Formula,
        env: &mut Env,
    ) -> Result<bool, OracleError> {
        for s in self.exec_env(state, program, env)? {
            if !self.eval_in(phi, &s, state, env)? {
                return Ok(false);
            }
        }
        Ok(true)
    }

    /// States reachable by low-level actions within `depth` steps.
    pub fn reachable(&self, depth: usize) -> Result<Vec<GroundState>, OracleError> {
        let actions = self.ground_actions();
        self.bfs(depth, |s| {
            let mut out = Vec::new();
            for a in &actions {
                if let Some(n) = self.step(a, s)? {
                    out.push(n);
                }
            }
            Ok(out)
        })
    }

    /// States reachable by executing any of `programs` (closed) repeatedly.
    pub fn reachable_via(&self, programs: &[Program], depth: usize) -> Result<Vec<GroundState>, OracleError> {
        self.bfs(depth, |s| {
            let mut out = Vec::new();
            for p in programs {
                out.extend(self.executions(s, p)?);
            }
            Ok(out)
        })
    }

    fn bfs(
        &self,
        depth: usize,
        mut succ: impl FnMut(&GroundState) -> Result<Vec<GroundState>, OracleError>,
    ) -> Result<Vec<GroundState>, OracleError> {
        let mut seen = BTreeSet::from([self.instance.init.clone()]);
        let mut order = vec![self.instance.init.clone()];
        let mut queue = VecDeque::from([(self.instance.init.clone(), 0usize)]);
        while let Some((s, d)) = queue.pop_front() {
            if d >= depth {
                continue;
            }
            for n in succ(&s)? {
                if seen.insert(n.clone()) {
                    order.push(n.clone());
                    queue.push_back((n, d + 1));
                }
            }
        }
        Ok(order)
    }
}

/// Reflexive transitive closure membership by breadth-first search.
pub fn reaches(edges: &BTreeMap<Vec<usize>, Vec<Vec<usize>>>, src: &[usize], dst: &[usize]) -> bool {
    if src == dst {
        return true;
    }
    let mut seen = BTreeSet::from([src.to_vec()]);
    let mut queue = VecDeque::from([src.to_vec()]);
    while let Some(u) = queue.pop_front() {
        for v in edges.get(&u).into_iter().flatten() {
            if v.as_slice() == dst {
                return true;
            }
            if seen.insert(v.clone()) {
                queue.push_back(v.clone());
            }
        }
    }
    false
}

/// Reflexive transitive closure of a relation on `0..n` by Warshall's
/// algorithm; an independent implementation used to cross-check `reaches`.
pub fn warshall(n: usize, rel: &[(usize, usize)]) -> Vec<Vec<bool>> {
    let mut m = vec![vec![false; n]; n];
    for (i, row) in m.iter_mut().enumerate() {
        row[i] = true;
    }
    for &(a, b) in rel {
        m[a][b] = true;
    }
    for k in 0..n {
        for i in 0..n {
            if m[i][k] {
                for j in 0..n {
                    if m[k][j] {
                        m[i][j] = true;
                    }
                }
            }
        }
    }
    m
}

/// Outcome of a bounded validity check.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Validity {
    pub valid: bool,
    pub checked_states: usize,
    pub witness: Option<Witness>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Witness {
    pub instance: usize,
    pub objects: Vec<String>,
    pub state: GroundState,
}

impl std::fmt::Display for Witness {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(
            f,
            "objects ({}) state {}",
            self.objects.join(" "),
            self.state.display(&self.objects)
        )
    }
}

/// Which states of each instance a validity check ranges over.
#[derive(Debug, Clone)]
pub enum StateSpace<'p> {
    /// Reachable by low-level actions within the depth bound.
    LowLevel,
    /// Reachable by executing the given closed programs.
    Programs(&'p [Program]),
}

/// Checks `phi` in every state reachable within `depth` (default
/// `3·|universe|`) of every instance.
pub fn check_validity_finite(
    theory: &BasicActionTheory,
    phi: &Formula,
    instances: &[FiniteInstance],
    space: &StateSpace<'_>,
    depth: Option<usize>,
) -> Result<Validity, OracleError> {
    let mut checked = 0;
    for (i, inst) in instances.iter().enumerate() {
        let ev = Evaluator::new(theory, inst);
        let d = depth.unwrap_or(3 * inst.size());
        let states = match space {
            StateSpace::LowLevel => ev.reachable(d)?,
            StateSpace::Programs(ps) => ev.reachable_via(ps, d)?,
        };
        for s in states {
            checked += 1;
            if !ev.eval(phi, &s)? {
                return Ok(Validity {
                    valid: false,
                    checked_states: checked,
                    witness: Some(Witness {
                        instance: i,
                        objects: inst.objects.clone(),
                        state: s,
                    }),
                });
            }
        }
    }
    Ok(Validity {
        valid: true,
        checked_states: checked,
        witness: None,
    })
}

/// Result of comparing a task formula with its direct semantics.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CrossCheck {
    /// The task formula held in every checked state.
    pub holds: bool,
    /// The task formula and its semantics agreed in every checked state.
    pub agrees: bool,
    pub checked_states: usize,
    pub witness: Option<Witness>,
}

/// Evaluates a generated task both as a formula and through program
/// executions, in every state of `space` of every instance.
pub fn cross_check_task(
    theory: &BasicActionTheory,
    task: &VerificationTask,
    instances: &[FiniteInstance],
    space: &StateSpace<'_>,
    depth: Option<usize>,
) -> Result<CrossCheck, OracleError> {
    let mut out = CrossCheck {
        holds: true,
        agrees: true,
        checked_states: 0,
        witness: None,
    };
    for (i, inst) in instances.iter().enumerate() {
        let ev = Evaluator::new(theory, inst);
        let d = depth.unwrap_or(3 * inst.size());
        let states = match space {
            StateSpace::LowLevel => ev.reachable(d)?,
            StateSpace::Programs(ps) => ev.reachable_via(ps, d)?,
        };
        for s in states {
            out.checked_states += 1;
            let by_formula = ev.eval(&task.formula, &s)?;
            let by_semantics = match &task.semantics {
                TaskSemantics::Direct => by_formula,
                TaskSemantics::Exec { guard, program, hl_pre } => {
                    !ev.eval(guard, &s)? || ev.executions(&s, program)?.is_empty() != ev.eval(hl_pre, &s)?
                }
                TaskSemantics::Effect { guard, program, target } => {
                    !ev.eval(guard, &s)? || ev.all_executions_satisfy(&s, program, target, &mut Vec::new())?
                }
            };
            out.holds &= by_formula;
            out.agrees &= by_formula == by_semantics;
            if (!by_formula || by_formula != by_semantics) && out.witness.is_none() {
                out.witness = Some(Witness {
                    instance: i,
                    objects: inst.objects.clone(),
                    state: s,
                });
            }
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::bat::compile_domain;
    use crate::golog::read_program;
    use crate::logic::{read_formula, Scope};
    use crate::sexpr::parse_one;

    const CLEAR_A: &str = r#"
    (domain clear-a
      (:constants A)
      (:predicates (on ?x ?y) (clear ?x) (ontable ?x) (holding ?x))
      (:action unstack :parameters (?x ?y)
        :precondition (and (clear ?x) (on ?x ?y) (forall (?z) (not (holding ?z))))
        :effect (and (holding ?x) (clear ?y) (not (on ?x ?y))))
      (:action mt :parameters (?x)
        :precondition (and (clear ?x) (not (ontable ?x)))
        :effect (and (ontable ?x) (not (holding ?x))))
      (:init (ontable A)))
    "#;

    fn tower() -> FiniteInstance {
        FiniteInstance::new(vec!["A".into(), "B".into(), "C".into()])
            .with_atom("on", &["C", "B"])
            .with_atom("on", &["B", "A"])
            .with_atom("ontable", &["A"])
            .with_atom("clear", &["C"])
    }

    fn f(bat: &BasicActionTheory, text: &str) -> Formula {
        read_formula(&parse_one(text).unwrap(), &mut Scope::new(&bat.symbols)).unwrap()
    }

    #[test]
    fn tc_and_count_on_tower() {
        let bat = compile_domain(CLEAR_A).unwrap();
        let inst = tower();
        let ev = Evaluator::new(&bat, &inst);
        let above = "(exists (z) (and (on x z) (tc (u v) (on u v) z A)))";
        assert!(ev.eval(&f(&bat, &format!("(exists (x) (and (on x A) {above}))")), &inst.init).unwrap());
        // C and B are above A.
        let two = f(&bat, &format!("(= (count (x) {above}) 2)"));
        assert!(ev.eval(&two, &inst.init).unwrap());
        let single = FiniteInstance::new(vec!["A".into()]).with_atom("ontable", &["A"]);
        let ev = Evaluator::new(&bat, &single);
        assert!(ev.eval(&f(&bat, &format!("(= (count (x) {above}) 0)")), &single.init).unwrap());
    }

    #[test]
    fn step_applies_strips_effects() {
        let bat = compile_domain(CLEAR_A).unwrap();
        let inst = tower();
        let ev = Evaluator::new(&bat, &inst);
        let next = ev.step(&("unstack".into(), vec![2, 1]), &inst.init).unwrap().unwrap();
        assert!(next.holds("holding", &[2]));
        assert!(!next.holds("on", &[2, 1]));
        assert!(next.holds("clear", &[1]));
        assert!(ev.step(&("mt".into(), vec![0]), &inst.init).unwrap().is_none());
    }

    #[test]
    fn executions_of_tests_and_dead_branches() {
        let bat = compile_domain(CLEAR_A).unwrap();
        let inst = tower();
        let ev = Evaluator::new(&bat, &inst);
        let st = &bat.symbols;
        let prog = |t: &str| read_program(&parse_one(t).unwrap(), &mut Scope::new(st)).unwrap();
        assert_eq!(ev.executions(&inst.init, &prog("(test true)")).unwrap().len(), 1);
        let d = prog("(pick (x y) (act unstack x y))");
        let with_dead = prog("(choice (pick (x y) (act unstack x y)) (seq (test false) (pick (x y) (act unstack x y))))");
        assert_eq!(ev.executions(&inst.init, &d).unwrap(), ev.executions(&inst.init, &with_dead).unwrap());
    }

    #[test]
    fn bfs_closure_matches_warshall() {
        use rand::{RngExt, SeedableRng};
        let mut rng = rand::rngs::StdRng::seed_from_u64(7);
        for _ in 0..200 {
            let n = rng.random_range(1..6);
            let rel: Vec<(usize, usize)> = (0..rng.random_range(0..10))
                .map(|_| (rng.random_range(0..n), rng.random_range(0..n)))
                .collect();
            let mut edges: BTreeMap<Vec<usize>, Vec<Vec<usize>>> = BTreeMap::new();
            for &(a, b) in &rel {
                edges.entry(vec![a]).or_default().push(vec![b]);
            }
            let m = warshall(n, &rel);
            for i in 0..n {
                for j in 0..n {
                    assert_eq!(reaches(&edges, &[i], &[j]), m[i][j]);
                }
            }
        }
    }

    #[test]
    fn validity_with_witness() {
        let bat = compile_domain(CLEAR_A).unwrap();
        let inst = tower();
        let ok = check_validity_finite(&bat, &Formula::True, std::slice::from_ref(&inst), &StateSpace::LowLevel, None).unwrap();
        assert!(ok.valid);
        let bad = f(&bat, "(not (exists (x) (holding x)))");
        let r = check_validity_finite(&bat, &bad, &[inst], &StateSpace::LowLevel, Some(2)).unwrap();
        assert!(!r.valid);
        assert!(r.witness.unwrap().state.iter().any(|(p, _)| p == "holding"));
    }

    #[test]
    fn instance_file_parses_and_checks_init() {
        let bat = compile_domain(CLEAR_A).unwrap();
        let inst = parse_instance("(instance (:objects A B) (:init (on B A) (ontable A) (clear B)))", &bat).unwrap();
        assert!(inst.init.holds("on", &[1, 0]));
        inst.check_init(&bat).unwrap();
        let bad = parse_instance("(instance (:objects A) (:init (clear A)))", &bat).unwrap();
        assert!(matches!(bad.check_init(&bat), Err(OracleError::InitViolated)));
        assert!(parse_instance("(instance (:objects A) (:init (on A)))", &bat).is_err());
    }
}
