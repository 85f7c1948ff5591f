#![allow(dead_code)]

use std::path::PathBuf;

use rand::rngs::StdRng;
use rand::RngExt;

use soundabs::bat::BasicActionTheory;
use soundabs::golog::Program;
use soundabs::logic::{Bound, CmpOp, Formula, TcAtom, Term, Var};
use soundabs::oracle::families::{candidates, Family};
use soundabs::oracle::{Evaluator, FiniteInstance, GroundState};
use soundabs::pipeline::{InputTexts, Inputs};

pub const DOMAINS: [&str; 7] = ["clear-a", "get-last", "find-a", "corner", "gripper", "logistics", "on-ab"];

pub fn corpus_dir(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../corpus").join(name)
}

pub struct Texts {
    pub domain: String,
    pub qnp: String,
    pub map: String,
    pub constraints: String,
}

impl Texts {
    pub fn load(name: &str) -> Texts {
        let dir = corpus_dir(name);
        let read = |f: &str| std::fs::read_to_string(dir.join(f)).unwrap();
        Texts {
            domain: read("domain.sexp"),
            qnp: read("qnp.sexp"),
            map: read("map.sexp"),
            constraints: read("constraints.sexp"),
        }
    }

    pub fn inputs(&self) -> Inputs {
        Inputs::from_texts(&InputTexts {
            domain: &self.domain,
            qnp: &self.qnp,
            mapping: &self.map,
            constraints: &self.constraints,
        })
        .unwrap()
    }
}

pub fn load(name: &str) -> Inputs {
    Texts::load(name).inputs()
}

/// Random formulas, programs and states over one theory.
pub struct Gen<'a> {
    pub theory: &'a BasicActionTheory,
    pub rng: StdRng,
    fresh: usize,
    /// Allow `frozen` subformulas.
    pub frozen: bool,
}

impl<'a> Gen<'a> {
    pub fn new(theory: &'a BasicActionTheory, rng: StdRng) -> Self {
        Gen {
            theory,
            rng,
            fresh: 0,
            frozen: false,
        }
    }

    fn pick<T: Clone>(&mut self, xs: &[T]) -> T {
        xs[self.rng.random_range(0..xs.len())].clone()
    }

    fn coin(&mut self, percent: u32) -> bool {
        self.rng.random_range(0..100) < percent
    }

    pub fn fresh_var(&mut self) -> Var {
        self.fresh += 1;
        Var::object(format!("v{}", self.fresh))
    }

    fn term(&mut self, scope: &[Var]) -> Term {
        let consts: Vec<String> = self.theory.symbols.constants.iter().cloned().collect();
        if !scope.is_empty() && (consts.is_empty() || self.coin(75)) {
            Term::Var(self.pick(scope))
        } else if !consts.is_empty() {
            Term::Const(self.pick(&consts))
        } else {
            // No terms available: callers bind a variable first.
            Term::Var(Var::object("unbound"))
        }
    }

    fn has_terms(&self, scope: &[Var]) -> bool {
        !scope.is_empty() || !self.theory.symbols.constants.is_empty()
    }

    fn atom(&mut self, scope: &[Var]) -> Formula {
        let fluents: Vec<(String, usize)> = self.theory.symbols.fluents.iter().map(|(k, v)| (k.clone(), *v)).collect();
        if !self.has_terms(scope) {
            return self.pick(&[Formula::True, Formula::False]);
        }
        if self.coin(15) {
            return Formula::Eq(self.term(scope), self.term(scope));
        }
        let (name, arity) = self.pick(&fluents);
        let args = (0..arity).map(|_| self.term(scope)).collect();
        Formula::Atom(name, args)
    }

    fn binary_fluents(&self) -> Vec<String> {
        self.theory.symbols.fluents.iter().filter(|(_, a)| **a == 2).map(|(k, _)| k.clone()).collect()
    }

    pub fn formula(&mut self, scope: &mut Vec<Var>, depth: usize) -> Formula {
        if depth == 0 || self.coin(20) {
            return self.atom(scope);
        }
        let f = match self.rng.random_range(0..11) {
            0 => Formula::not(self.formula(scope, depth - 1)),
            1 | 2 => Formula::And(vec![self.formula(scope, depth - 1), self.formula(scope, depth - 1)]),
            3 => Formula::Or(vec![self.formula(scope, depth - 1), self.formula(scope, depth - 1)]),
            4 => Formula::imply(self.formula(scope, depth - 1), self.formula(scope, depth - 1)),
            5 => Formula::iff(self.formula(scope, depth - 1), self.formula(scope, depth - 1)),
            6 | 7 => {
                let v = self.fresh_var();
                scope.push(v.clone());
                let body = self.formula(scope, depth - 1);
                scope.pop();
                if self.coin(50) {
                    Formula::forall(vec![v], body)
                } else {
                    Formula::exists(vec![v], body)
                }
            }
            8 => self.tc(scope, depth),
            9 => {
                let v = self.fresh_var();
                scope.push(v.clone());
                let body = self.formula(scope, depth - 1);
                scope.pop();
                Formula::Cmp {
                    op: if self.coin(50) { CmpOp::Eq } else { CmpOp::Gt },
                    lhs: Term::Count(vec![v], Box::new(body)),
                    rhs: Bound::Int(0),
                }
            }
            _ => self.atom(scope),
        };
        if self.frozen && self.coin(15) {
            Formula::frozen(f)
        } else {
            f
        }
    }

    fn tc(&mut self, scope: &mut Vec<Var>, depth: usize) -> Formula {
        let bins = self.binary_fluents();
        if bins.is_empty() || !self.has_terms(scope) {
            return self.atom(scope);
        }
        let rel = self.pick(&bins);
        let (u, v) = (self.fresh_var(), self.fresh_var());
        let edge = Formula::atom(&rel, vec![Term::Var(u.clone()), Term::Var(v.clone())]);
        let body = if self.coin(40) {
            scope.push(u.clone());
            scope.push(v.clone());
            let extra = self.formula(scope, depth.saturating_sub(2));
            scope.pop();
            scope.pop();
            Formula::And(vec![edge, extra])
        } else {
            edge
        };
        Formula::Tc(Box::new(TcAtom {
            from: vec![u],
            to: vec![v],
            body,
            left: vec![self.term(scope)],
            right: vec![self.term(scope)],
        }))
    }

    /// A closed formula: a random body under a random quantifier prefix.
    pub fn closed_formula(&mut self, depth: usize) -> Formula {
        let n = self.rng.random_range(0..3usize);
        let vars: Vec<Var> = (0..n).map(|_| self.fresh_var()).collect();
        let mut scope = vars.clone();
        let body = self.formula(&mut scope, depth);
        self.quantify(vars, body)
    }

    fn quantify(&mut self, vars: Vec<Var>, body: Formula) -> Formula {
        vars.into_iter().rev().fold(body, |acc, v| {
            if self.coin(50) {
                Formula::forall(vec![v], acc)
            } else {
                Formula::exists(vec![v], acc)
            }
        })
    }

    pub fn action_term(&mut self, scope: &[Var]) -> Term {
        let acts: Vec<(String, usize)> = self.theory.symbols.actions.iter().map(|(k, v)| (k.clone(), *v)).collect();
        let (name, arity) = self.pick(&acts);
        Term::App(name, (0..arity).map(|_| self.term(scope)).collect())
    }

    /// A closed formula with one or two pending actions, optionally
    /// conjoined with the executability of the first.
    pub fn pending_formula(&mut self, depth: usize) -> Formula {
        let vars: Vec<Var> = (0..self.rng.random_range(1..4usize)).map(|_| self.fresh_var()).collect();
        let mut scope = vars.clone();
        let alpha = self.action_term(&scope);
        let inner = self.formula(&mut scope, depth);
        let inner = if self.coin(25) {
            let beta = self.action_term(&scope);
            Formula::after(beta, inner)
        } else {
            inner
        };
        let mut body = Formula::after(alpha.clone(), inner);
        if self.coin(30) {
            body = Formula::And(vec![Formula::Poss(alpha), body]);
        }
        self.quantify(vars, body)
    }

    pub fn program(&mut self, scope: &mut Vec<Var>, depth: usize) -> Program {
        if !self.has_terms(scope) || (depth > 0 && self.coin(25)) {
            let v = self.fresh_var();
            scope.push(v.clone());
            let body = self.program(scope, depth.saturating_sub(1));
            scope.pop();
            return Program::Pick(vec![v], Box::new(body));
        }
        if depth == 0 {
            return self.act_or_test(scope);
        }
        match self.rng.random_range(0..4) {
            0 => self.act_or_test(scope),
            1 | 2 => {
                let n = self.rng.random_range(2..4usize);
                Program::Seq((0..n).map(|_| self.program(scope, depth - 1)).collect())
            }
            _ => Program::Choice(Box::new(self.program(scope, depth - 1)), Box::new(self.program(scope, depth - 1))),
        }
    }

    fn act_or_test(&mut self, scope: &mut Vec<Var>) -> Program {
        if self.coin(65) {
            let Term::App(name, args) = self.action_term(scope) else { unreachable!() };
            Program::Act(name, args)
        } else {
            let saved = self.frozen;
            self.frozen = false;
            let t = self.formula(scope, 1);
            self.frozen = saved;
            Program::Test(t)
        }
    }

    pub fn closed_program(&mut self, depth: usize) -> Program {
        let mut scope = Vec::new();
        self.program(&mut scope, depth)
    }

    /// A random instance of `family` and a state reached from it by up to
    /// `steps` executable low-level actions.
    pub fn instance_and_state(&mut self, family: Family, bound: usize, steps: usize) -> (FiniteInstance, GroundState) {
        let all = candidates(family, self.theory, bound);
        let inst = self.pick(&all);
        let ev = Evaluator::new(self.theory, &inst);
        let actions = ev.ground_actions();
        let mut s = inst.init.clone();
        for _ in 0..self.rng.random_range(0..=steps) {
            let mut options = Vec::new();
            for a in &actions {
                if let Some(n) = ev.step(a, &s).unwrap() {
                    options.push(n);
                }
            }
            if options.is_empty() {
                break;
            }
            s = self.pick(&options);
        }
        (inst, s)
    }
}
