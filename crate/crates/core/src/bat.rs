//! Compilation of STRIPS-like domains into basic action theories.

use std::collections::{BTreeMap, BTreeSet};

use thiserror::Error;

use crate::logic::{
    self, read_formula, una_simplify, Formula, LogicError, Scope, SymbolTable, Term, Var,
};
use crate::sexpr::{self, keyword_pairs, SExpr, SyntaxError};

#[derive(Debug, Error)]
pub enum BatError {
    #[error(transparent)]
    Syntax(#[from] SyntaxError),
    #[error(transparent)]
    Logic(#[from] LogicError),
    #[error("unknown action {0}")]
    UnknownAction(String),
    #[error("unknown fluent {0}")]
    UnknownFluent(String),
    #[error("{name} expects {expected} arguments, got {got}")]
    Arity {
        name: String,
        expected: usize,
        got: usize,
    },
}

/// A ground or lifted effect literal `P(t̄)`.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct EffectAtom {
    pub fluent: String,
    pub args: Vec<Term>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ActionSchema {
    pub name: String,
    pub params: Vec<Var>,
    pub precondition: Formula,
    pub add: Vec<EffectAtom>,
    pub del: Vec<EffectAtom>,
}

/// `P(x̄, do(a, s)) ≡ γ⁺(x̄, a) ∨ (P(x̄, s) ∧ ¬γ⁻(x̄, a))`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SuccessorStateAxiom {
    pub fluent: String,
    pub params: Vec<Var>,
    pub action_var: Var,
    pub positive: Formula,
    pub negative: Formula,
}

impl SuccessorStateAxiom {
    pub fn body(&self) -> Formula {
        let current = Formula::Atom(
            self.fluent.clone(),
            self.params.iter().cloned().map(Term::Var).collect(),
        );
        una_simplify(&Formula::Or(vec![
            self.positive.clone(),
            Formula::And(vec![current, Formula::not(self.negative.clone())]),
        ]))
    }

    /// The body with the fluent parameters bound to `args` and the action
    /// variable bound to `action`, simplified under unique names.
    pub fn instantiate(&self, args: &[Term], action: &Term) -> Result<Formula, LogicError> {
        let mut map = BTreeMap::new();
        for (p, t) in self.params.iter().zip(args) {
            map.insert(p.clone(), t.clone());
        }
        map.insert(self.action_var.clone(), action.clone());
        Ok(una_simplify(&logic::substitute(&self.body(), &map)?))
    }
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct StateConstraintSet {
    pub formulas: Vec<Formula>,
}

impl StateConstraintSet {
    /// Conjunction of all constraints; `true` when empty.
    pub fn conjunction(&self) -> Formula {
        constraint_conjunction(self)
    }
}

pub fn constraint_conjunction(sc: &StateConstraintSet) -> Formula {
    match sc.formulas.len() {
        0 => Formula::True,
        1 => sc.formulas[0].clone(),
        _ => Formula::And(sc.formulas.clone()),
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BasicActionTheory {
    pub name: String,
    pub symbols: SymbolTable,
    /// Declared parameter names of each fluent, used for SSA parameters.
    pub fluent_params: BTreeMap<String, Vec<Var>>,
    pub actions: BTreeMap<String, ActionSchema>,
    pub ssas: BTreeMap<String, SuccessorStateAxiom>,
    pub init: Formula,
    pub goal: Formula,
    pub constraints: StateConstraintSet,
}

impl BasicActionTheory {
    pub fn action(&self, name: &str) -> Result<&ActionSchema, BatError> {
        self.actions
            .get(name)
            .ok_or_else(|| BatError::UnknownAction(name.to_string()))
    }

    pub fn ssa(&self, fluent: &str) -> Result<&SuccessorStateAxiom, BatError> {
        self.ssas
            .get(fluent)
            .ok_or_else(|| BatError::UnknownFluent(fluent.to_string()))
    }

    /// `Π_A(t̄)`.
    pub fn precondition(&self, name: &str, args: &[Term]) -> Result<Formula, BatError> {
        let schema = self.action(name)?;
        if schema.params.len() != args.len() {
            return Err(BatError::Arity {
                name: name.to_string(),
                expected: schema.params.len(),
                got: args.len(),
            });
        }
        let map = schema.params.iter().cloned().zip(args.iter().cloned()).collect();
        Ok(logic::substitute(&schema.precondition, &map)?)
    }

    pub fn with_constraints(mut self, constraints: StateConstraintSet) -> Self {
        self.constraints = constraints;
        self
    }
}

fn read_params(e: &SExpr, symbols: &SymbolTable) -> Result<Vec<Var>, SyntaxError> {
    Scope::new(symbols).read_binders(e)
}

fn read_effect(
    e: &SExpr,
    scope: &mut Scope<'_>,
    add: &mut Vec<EffectAtom>,
    del: &mut Vec<EffectAtom>,
) -> Result<(), SyntaxError> {
    match e.head() {
        Some("and") => {
            for item in &e.as_list().unwrap()[1..] {
                read_effect(item, scope, add, del)?;
            }
            Ok(())
        }
        Some("when") | Some("forall") => Err(SyntaxError::new(
            e.pos(),
            "conditional and quantified effects are not supported",
        )),
        Some("not") => {
            let items = e.as_list().unwrap();
            if items.len() != 2 {
                return Err(SyntaxError::new(e.pos(), "not expects one argument"));
            }
            del.push(read_effect_atom(&items[1], scope)?);
            Ok(())
        }
        _ => {
            add.push(read_effect_atom(e, scope)?);
            Ok(())
        }
    }
}

fn read_effect_atom(e: &SExpr, scope: &mut Scope<'_>) -> Result<EffectAtom, SyntaxError> {
    match read_formula(e, scope)? {
        Formula::Atom(fluent, args) => Ok(EffectAtom { fluent, args }),
        other => Err(SyntaxError::new(
            e.pos(),
            format!("effect must be a fluent literal, found {other}"),
        )),
    }
}

/// Parses and compiles a domain file into a basic action theory.
pub fn compile_domain(text: &str) -> Result<BasicActionTheory, BatError> {
    let top = sexpr::parse_one(text)?;
    let items = top.expect_list("domain")?;
    if top.head() != Some("domain") || items.len() < 2 {
        return Err(SyntaxError::new(top.pos(), "expected (domain NAME …)").into());
    }
    let name = items[1].expect_symbol("domain name")?.to_string();
    let sections = &items[2..];

    let mut symbols = SymbolTable::default();
    let mut fluent_params = BTreeMap::new();
    fn section<'s>(sections: &'s [SExpr], key: &'s str) -> impl Iterator<Item = &'s SExpr> {
        sections.iter().filter(move |s| s.head() == Some(key))
    }

    for s in sections {
        let key = s.head().unwrap_or("");
        if ![":constants", ":predicates", ":action", ":init", ":goal"].contains(&key) {
            return Err(SyntaxError::new(s.pos(), format!("unknown domain section {s}")).into());
        }
    }
    for s in section(sections, ":constants") {
        for c in &s.as_list().unwrap()[1..] {
            let n = c.expect_symbol("constant")?;
            if n.starts_with('?') || logic_reserved(n) {
                return Err(SyntaxError::new(c.pos(), format!("illegal constant name {n}")).into());
            }
            symbols
                .add_constant(n)
                .map_err(|e| SyntaxError::new(c.pos(), e.to_string()))?;
        }
    }
    for s in section(sections, ":predicates") {
        for p in &s.as_list().unwrap()[1..] {
            let decl = p.expect_list("predicate declaration")?;
            let pname = decl
                .first()
                .and_then(|h| h.as_symbol())
                .ok_or_else(|| SyntaxError::new(p.pos(), "expected (NAME ?x …)"))?;
            if logic_reserved(pname) {
                return Err(SyntaxError::new(p.pos(), format!("reserved word {pname}")).into());
            }
            let params = read_params(&SExpr::List(decl[1..].to_vec(), p.pos()), &symbols)?;
            symbols
                .add_fluent(pname, params.len())
                .map_err(|e| SyntaxError::new(p.pos(), e.to_string()))?;
            fluent_params.insert(pname.to_string(), params);
        }
    }
    // Action signatures first, so preconditions may mention action terms.
    let mut raw_actions = Vec::new();
    for s in section(sections, ":action") {
        let list = s.as_list().unwrap();
        let aname = list
            .get(1)
            .and_then(|n| n.as_symbol())
            .ok_or_else(|| SyntaxError::new(s.pos(), "expected action name"))?;
        let kw = keyword_pairs(&list[2..])?;
        let mut params = Vec::new();
        let mut pre = None;
        let mut eff = None;
        for (k, v) in kw {
            match k {
                ":parameters" => params = read_params(v, &symbols)?,
                ":precondition" => pre = Some(v),
                ":effect" => eff = Some(v),
                other => {
                    return Err(SyntaxError::new(v.pos(), format!("unknown action field {other}")).into())
                }
            }
        }
        symbols
            .add_action(aname, params.len())
            .map_err(|e| SyntaxError::new(s.pos(), e.to_string()))?;
        raw_actions.push((aname.to_string(), params, pre, eff));
    }

    let mut actions = BTreeMap::new();
    for (aname, params, pre, eff) in raw_actions {
        let mut scope = Scope::with_vars(&symbols, &params);
        let precondition = match pre {
            Some(p) => read_formula(p, &mut scope)?,
            None => Formula::True,
        };
        let (mut add, mut del) = (Vec::new(), Vec::new());
        if let Some(e) = eff {
            read_effect(e, &mut scope, &mut add, &mut del)?;
        }
        actions.insert(
            aname.clone(),
            ActionSchema {
                name: aname,
                params,
                precondition,
                add,
                del,
            },
        );
    }

    let read_closed = |key: &str| -> Result<Formula, BatError> {
        match section(sections, key).last() {
            None => Ok(Formula::True),
            Some(s) => {
                let list = s.as_list().unwrap();
                let parts = list[1..]
                    .iter()
                    .map(|f| read_formula(f, &mut Scope::new(&symbols)))
                    .collect::<Result<Vec<_>, _>>()?;
                Ok(match parts.len() {
                    0 => Formula::True,
                    1 => parts.into_iter().next().unwrap(),
                    _ => Formula::And(parts),
                })
            }
        }
    };
    let init = read_closed(":init")?;
    let goal = read_closed(":goal")?;

    let ssas = build_ssas(&symbols, &fluent_params, &actions);
    Ok(BasicActionTheory {
        name,
        symbols,
        fluent_params,
        actions,
        ssas,
        init,
        goal,
        constraints: StateConstraintSet::default(),
    })
}

fn logic_reserved(name: &str) -> bool {
    crate::logic::RESERVED.contains(&name)
}

/// Reiter's closed-form successor-state axioms for STRIPS effects.
fn build_ssas(
    symbols: &SymbolTable,
    fluent_params: &BTreeMap<String, Vec<Var>>,
    actions: &BTreeMap<String, ActionSchema>,
) -> BTreeMap<String, SuccessorStateAxiom> {
    let mut out = BTreeMap::new();
    for fluent in symbols.fluents.keys() {
        let params = fluent_params[fluent].clone();
        let mut taken: BTreeSet<String> = params.iter().map(|v| v.name.clone()).collect();
        let action_var = Var::action(if taken.contains("a") {
            logic::fresh_name("a", &taken)
        } else {
            "a".to_string()
        });
        taken.insert(action_var.name.clone());
        let gamma = |select: fn(&ActionSchema) -> &Vec<EffectAtom>| -> Formula {
            let mut disjuncts = Vec::new();
            for schema in actions.values() {
                for eff in select(schema).iter().filter(|e| &e.fluent == fluent) {
                    // Rename action parameters away from the fluent parameters.
                    let (fresh, renaming) = logic::rename_bound(&schema.params, &taken);
                    let mut conj = vec![Formula::Eq(
                        Term::Var(action_var.clone()),
                        Term::App(schema.name.clone(), fresh.iter().cloned().map(Term::Var).collect()),
                    )];
                    for (p, t) in params.iter().zip(&eff.args) {
                        let t = logic::substitute_term(t, &renaming).expect("object terms");
                        conj.push(Formula::Eq(Term::Var(p.clone()), t));
                    }
                    disjuncts.push(Formula::exists(fresh, Formula::And(conj)));
                }
            }
            una_simplify(&Formula::Or(disjuncts))
        };
        let positive = gamma(|s| &s.add);
        let negative = gamma(|s| &s.del);
        out.insert(
            fluent.clone(),
            SuccessorStateAxiom {
                fluent: fluent.clone(),
                params,
                action_var,
                positive,
                negative,
            },
        );
    }
    out
}

/// Parses a constraints file `(constraints formula …)` against a theory.
pub fn parse_constraints(text: &str, symbols: &SymbolTable) -> Result<StateConstraintSet, BatError> {
    let top = sexpr::parse_one(text)?;
    if top.head() != Some("constraints") {
        return Err(SyntaxError::new(top.pos(), "expected (constraints formula …)").into());
    }
    let formulas = top.as_list().unwrap()[1..]
        .iter()
        .map(|f| read_formula(f, &mut Scope::new(symbols)))
        .collect::<Result<Vec<_>, _>>()?;
    Ok(StateConstraintSet { formulas })
}
