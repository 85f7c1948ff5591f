//! Verification-condition generation for QNP abstractions.
//!
//! Every task is a closed first-order formula with transitive closure whose
//! validity establishes one clause of the soundness condition. Counting
//! atoms are eliminated and `frozen` markers (which pin a subformula to the
//! situation before the refinement program runs) are erased once the
//! post-state parts have been regressed.

use std::collections::BTreeMap;
use std::fmt;

use serde::Serialize;
use thiserror::Error;

use crate::bat::BasicActionTheory;
use crate::golog::{MappingError, Program, RefinementMapping};
use crate::logic::{self, nnf, una_simplify, Bound, CmpOp, Formula, Term, Var};
use crate::qnp::{hl_ssa_literals, BoolEffect, EffectDescriptor, NumEffect, QnpProblem};
use crate::regression::{RegressionContext, RegressionError};

#[derive(Debug, Error)]
pub enum VcError {
    #[error(transparent)]
    Mapping(#[from] MappingError),
    #[error(transparent)]
    Regression(#[from] RegressionError),
    #[error("unsupported counting form {0}; only comparisons of a count with 0 are allowed")]
    Counting(String),
    #[error("numeric variable {0} must count a single variable")]
    MultiVariableCount(String),
    #[error("refinement mapping mismatch: {0}")]
    Coverage(String),
    #[error("internal error: task {id} is not a closed count-free formula: {formula}")]
    Malformed { id: String, formula: String },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum TaskKind {
    Init,
    Exec,
    BoolEffect,
    NumEffect,
    Goal,
}

impl fmt::Display for TaskKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            TaskKind::Init => "init",
            TaskKind::Exec => "exec",
            TaskKind::BoolEffect => "bool-effect",
            TaskKind::NumEffect => "num-effect",
            TaskKind::Goal => "goal",
        };
        f.write_str(s)
    }
}

/// What a task means before regression, for finite-model cross-checks.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum TaskSemantics {
    /// The task formula itself is the property.
    Direct,
    /// In every state where `guard` holds, some execution of `program`
    /// exists iff `hl_pre` holds.
    Exec { guard: Formula, program: Program, hl_pre: Formula },
    /// In every state where `guard` holds, every execution of `program`
    /// ends in a state satisfying `target` (`frozen` = the start state).
    Effect { guard: Formula, program: Program, target: Formula },
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct VerificationTask {
    pub id: String,
    pub kind: TaskKind,
    pub formula: Formula,
    pub provenance: String,
    pub semantics: TaskSemantics,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TaskSuite {
    pub tasks: Vec<VerificationTask>,
    pub constraints: Formula,
}

/// `(= #x.φ 0)` becomes `¬∃x.φ` and `(> #x.φ 0)` becomes `∃x.φ`.
pub fn eliminate_counting(phi: &Formula) -> Result<Formula, VcError> {
    let mut err = None;
    let out = phi.map_children(&mut |f| match f {
        Formula::Cmp { op, lhs: Term::Count(vs, body), rhs: Bound::Int(0) } => {
            let body = match eliminate_counting(body) {
                Ok(b) => b,
                Err(e) => {
                    err.get_or_insert(e);
                    return Some(Formula::False);
                }
            };
            let ex = Formula::exists(vs.clone(), body);
            Some(match op {
                CmpOp::Eq => Formula::not(ex),
                CmpOp::Gt => ex,
            })
        }
        Formula::Cmp { .. } => {
            err.get_or_insert(VcError::Counting(f.to_string()));
            Some(Formula::False)
        }
        _ => None,
    });
    match err {
        Some(e) => Err(e),
        None => Ok(out),
    }
}

/// The relation between the counts of `φ` before (`frozen`) and after a
/// program: exactly one object enters (`Inc`), exactly one leaves (`Dec`),
/// or the extension is unchanged (`Frame`).
pub fn build_psi(x: &Var, phi: &Formula, direction: NumEffect) -> Result<Formula, VcError> {
    let mut avoid = logic::all_var_names(phi);
    avoid.insert(x.name.clone());
    let y = Var::object(logic::fresh_name(&x.name, &avoid));
    let phi_y = logic::substitute(phi, &BTreeMap::from([(x.clone(), Term::Var(y.clone()))]))
        .map_err(RegressionError::from)?;
    let fr = Formula::frozen;
    let not = Formula::not;
    let eq = Formula::Eq(Term::Var(x.clone()), Term::Var(y.clone()));
    let xs = vec![x.clone()];
    let xy = vec![x.clone(), y.clone()];
    Ok(match direction {
        NumEffect::Inc => Formula::And(vec![
            Formula::exists(xs.clone(), Formula::And(vec![phi.clone(), not(fr(phi.clone()))])),
            Formula::forall(xs, Formula::imply(fr(phi.clone()), phi.clone())),
            Formula::forall(
                xy,
                Formula::imply(
                    Formula::And(vec![
                        not(fr(phi.clone())),
                        phi.clone(),
                        not(fr(phi_y.clone())),
                        phi_y,
                    ]),
                    eq,
                ),
            ),
        ]),
        NumEffect::Dec => Formula::And(vec![
            Formula::exists(xs.clone(), Formula::And(vec![fr(phi.clone()), not(phi.clone())])),
            Formula::forall(xs, Formula::imply(phi.clone(), fr(phi.clone()))),
            Formula::forall(
                xy,
                Formula::imply(
                    Formula::And(vec![
                        fr(phi.clone()),
                        not(phi.clone()),
                        fr(phi_y.clone()),
                        not(phi_y),
                    ]),
                    eq,
                ),
            ),
        ]),
        NumEffect::Frame => Formula::forall(xs, Formula::iff(phi.clone(), fr(phi.clone()))),
    })
}

fn check_coverage(qnp: &QnpProblem, m: &RefinementMapping) -> Result<(), VcError> {
    let missing = |kind: &str, name: &str| VcError::Coverage(format!("no refinement for {kind} {name}"));
    for b in &qnp.bools {
        if !m.prop_map.contains_key(b) {
            return Err(missing("boolean feature", b));
        }
    }
    for n in &qnp.nums {
        if !m.num_map.contains_key(n) {
            return Err(missing("numeric variable", n));
        }
    }
    for a in &qnp.actions {
        match m.action_map.get(&a.name) {
            None => return Err(missing("action", &a.name)),
            Some(r) if !r.params.is_empty() => {
                return Err(VcError::Coverage(format!(
                    "action {} is parameterless in the abstraction but its refinement takes parameters",
                    a.name
                )))
            }
            Some(_) => {}
        }
    }
    for k in m.prop_map.keys() {
        if !qnp.bools.contains(k) {
            return Err(VcError::Coverage(format!("{k} is not a boolean feature of the abstraction")));
        }
    }
    for k in m.num_map.keys() {
        if !qnp.nums.contains(k) {
            return Err(VcError::Coverage(format!("{k} is not a numeric variable of the abstraction")));
        }
    }
    for k in m.action_map.keys() {
        if qnp.action(k).is_none() {
            return Err(VcError::Coverage(format!("{k} is not an action of the abstraction")));
        }
    }
    Ok(())
}

fn finish(id: String, kind: TaskKind, raw: Formula, provenance: &str, semantics: TaskSemantics) -> Result<VerificationTask, VcError> {
    let f = eliminate_counting(&raw.strip_frozen())?;
    let f = nnf(&una_simplify(&f));
    if !f.is_closed() || f.contains_count() || f.contains_situation_markers() {
        return Err(VcError::Malformed {
            id,
            formula: f.to_string(),
        });
    }
    Ok(VerificationTask {
        id,
        kind,
        formula: f,
        provenance: provenance.to_string(),
        semantics,
    })
}

pub fn gen_task_init(bat: &BasicActionTheory, qnp: &QnpProblem, m: &RefinementMapping) -> Result<VerificationTask, VcError> {
    let hl = eliminate_counting(&m.map_formula(&qnp.init_formula())?)?;
    finish(
        "task1:init".into(),
        TaskKind::Init,
        Formula::imply(bat.init.clone(), hl),
        "initial state: the low-level initial formula entails the refined abstract initial state",
        TaskSemantics::Direct,
    )
}

pub fn gen_task_goal(bat: &BasicActionTheory, qnp: &QnpProblem, m: &RefinementMapping) -> Result<VerificationTask, VcError> {
    let hl = eliminate_counting(&m.map_formula(&qnp.goal_formula())?)?;
    finish(
        "task5:goal".into(),
        TaskKind::Goal,
        Formula::imply(Formula::And(vec![bat.constraints.conjunction(), hl]), bat.goal.clone()),
        "goal: under the state constraints the refined abstract goal entails the low-level goal",
        TaskSemantics::Direct,
    )
}

pub fn gen_task_exec(
    bat: &BasicActionTheory,
    qnp: &QnpProblem,
    m: &RefinementMapping,
    action: &str,
) -> Result<VerificationTask, VcError> {
    let a = qnp
        .action(action)
        .ok_or_else(|| VcError::Coverage(format!("unknown abstract action {action}")))?;
    let program = m.map_action(action, &[])?;
    let mut ctx = RegressionContext::new(bat);
    let pre_ll = ctx.exec_condition(&program)?;
    let hl_pre = eliminate_counting(&m.map_formula(&a.pre_formula())?)?;
    let d_sc = bat.constraints.conjunction();
    finish(
        format!("task2:{action}"),
        TaskKind::Exec,
        Formula::imply(d_sc.clone(), Formula::iff(pre_ll, hl_pre.clone())),
        "executability: the refinement is executable exactly when the abstract precondition holds",
        TaskSemantics::Exec { guard: d_sc, program, hl_pre },
    )
}

pub fn gen_task_booleff(
    bat: &BasicActionTheory,
    _qnp: &QnpProblem,
    m: &RefinementMapping,
    action: &str,
    feature: &str,
    effect: BoolEffect,
) -> Result<VerificationTask, VcError> {
    let program = m.map_action(action, &[])?;
    let mf = m.map_formula(&Formula::Atom(feature.to_string(), vec![]))?;
    let mf = eliminate_counting(&mf)?;
    let mut ctx = RegressionContext::new(bat);
    let pre_ll = ctx.exec_condition(&program)?;
    let (post, target) = match effect {
        BoolEffect::SetTrue => (ctx.regress_univ(&mf, &program)?, mf.clone()),
        BoolEffect::SetFalse => {
            let neg = Formula::not(mf.clone());
            (ctx.regress_univ(&neg, &program)?, neg)
        }
        BoolEffect::Frame => {
            let keep_true = Formula::imply(mf.clone(), ctx.regress_univ(&mf, &program)?);
            let neg = Formula::not(mf.clone());
            let keep_false = Formula::imply(neg.clone(), ctx.regress_univ(&neg, &program)?);
            let target = Formula::And(vec![
                Formula::imply(Formula::frozen(mf.clone()), mf.clone()),
                Formula::imply(Formula::frozen(neg.clone()), neg),
            ]);
            (Formula::And(vec![keep_true, keep_false]), target)
        }
    };
    let guard = Formula::And(vec![bat.constraints.conjunction(), pre_ll]);
    let what = match effect {
        BoolEffect::SetTrue => "makes it true",
        BoolEffect::SetFalse => "makes it false",
        BoolEffect::Frame => "leaves it unchanged",
    };
    finish(
        format!("task3:{action}:{feature}"),
        TaskKind::BoolEffect,
        Formula::imply(guard.clone(), post),
        &format!("boolean effect on {feature}: every execution of the refinement {what}"),
        TaskSemantics::Effect { guard, program, target },
    )
}

pub fn gen_task_numeff(
    bat: &BasicActionTheory,
    _qnp: &QnpProblem,
    m: &RefinementMapping,
    action: &str,
    num: &str,
    effect: NumEffect,
) -> Result<VerificationTask, VcError> {
    let (vs, body) = m.count_of(num)?;
    if vs.len() != 1 {
        return Err(VcError::MultiVariableCount(num.to_string()));
    }
    let body = eliminate_counting(body)?;
    let psi = build_psi(&vs[0], &body, effect)?;
    let program = m.map_action(action, &[])?;
    let mut ctx = RegressionContext::new(bat);
    let pre_ll = ctx.exec_condition(&program)?;
    let post = ctx.regress_univ(&psi, &program)?;
    let guard = Formula::And(vec![bat.constraints.conjunction(), pre_ll]);
    let what = match effect {
        NumEffect::Inc => "increases it by exactly one",
        NumEffect::Dec => "decreases it by exactly one",
        NumEffect::Frame => "leaves it unchanged",
    };
    finish(
        format!("task4:{action}:{num}"),
        TaskKind::NumEffect,
        Formula::imply(guard.clone(), post),
        &format!("numeric effect on {num}: every execution of the refinement {what}"),
        TaskSemantics::Effect { guard, program, target: psi },
    )
}

/// All tasks: init, one executability task per action, one task per
/// (action, boolean) and (action, numeric) pair, and the goal task.
pub fn generate_tasks(bat: &BasicActionTheory, qnp: &QnpProblem, m: &RefinementMapping) -> Result<TaskSuite, VcError> {
    check_coverage(qnp, m)?;
    let mut tasks = vec![gen_task_init(bat, qnp, m)?];
    for a in &qnp.actions {
        tasks.push(gen_task_exec(bat, qnp, m, &a.name)?);
    }
    for a in &qnp.actions {
        let effects = hl_ssa_literals(qnp, a);
        for b in &qnp.bools {
            let EffectDescriptor::Bool(e) = effects[b] else { unreachable!() };
            tasks.push(gen_task_booleff(bat, qnp, m, &a.name, b, e)?);
        }
    }
    for a in &qnp.actions {
        let effects = hl_ssa_literals(qnp, a);
        for n in &qnp.nums {
            let EffectDescriptor::Num(e) = effects[n] else { unreachable!() };
            tasks.push(gen_task_numeff(bat, qnp, m, &a.name, n, e)?);
        }
    }
    tasks.push(gen_task_goal(bat, qnp, m)?);
    Ok(TaskSuite {
        tasks,
        constraints: bat.constraints.conjunction(),
    })
}

/// Expected number of tasks for an abstraction.
pub fn expected_task_count(qnp: &QnpProblem) -> usize {
    let o = qnp.actions.len();
    2 + o + qnp.bools.len() * o + qnp.nums.len() * o
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::logic::{read_formula, Scope};
    use crate::sexpr::parse_one;

    #[test]
    fn counting_elimination() {
        let mut st = logic::SymbolTable::default();
        st.add_fluent("p", 1).unwrap();
        let read = |t: &str| read_formula(&parse_one(t).unwrap(), &mut Scope::new(&st)).unwrap();
        assert_eq!(
            eliminate_counting(&read("(= (count (x) (p x)) 0)")).unwrap(),
            read("(not (exists (x) (p x)))")
        );
        assert_eq!(
            eliminate_counting(&read("(imply (> (count (x) (p x)) 0) true)")).unwrap(),
            read("(imply (exists (x) (p x)) true)")
        );
        assert!(eliminate_counting(&read("(= (count (x) (p x)) 2)")).is_err());
    }

    #[test]
    fn psi_inc_shape() {
        let x = Var::object("x");
        let phi = Formula::atom("p", vec![Term::var("x")]);
        let psi = build_psi(&x, &phi, NumEffect::Inc).unwrap();
        assert_eq!(
            psi.to_string(),
            "(and (exists (x) (and (p x) (not (frozen (p x))))) \
             (forall (x) (imply (frozen (p x)) (p x))) \
             (forall (x x') (imply (and (not (frozen (p x))) (p x) (not (frozen (p x'))) (p x')) (= x x'))))"
        );
    }

    #[test]
    fn psi_with_unchanged_extension_is_unsatisfiable() {
        let x = Var::object("x");
        let phi = Formula::atom("p", vec![Term::var("x")]);
        for dir in [NumEffect::Inc, NumEffect::Dec] {
            let psi = build_psi(&x, &phi, dir).unwrap().strip_frozen();
            assert_eq!(una_simplify(&psi), Formula::False, "{dir:?}");
        }
    }

    pub(crate) fn load(dir: &str) -> (BasicActionTheory, QnpProblem, RefinementMapping) {
        let root = format!("{}/../../corpus/{dir}", env!("CARGO_MANIFEST_DIR"));
        let read = |f: &str| std::fs::read_to_string(format!("{root}/{f}")).unwrap();
        let bat = crate::bat::compile_domain(&read("domain.sexp")).unwrap();
        let cs = crate::bat::parse_constraints(&read("constraints.sexp"), &bat.symbols).unwrap();
        let bat = bat.with_constraints(cs);
        let qnp = crate::qnp::parse_qnp(&read("qnp.sexp")).unwrap();
        let map = crate::golog::parse_mapping(&read("map.sexp"), &bat.symbols).unwrap();
        (bat, qnp, map)
    }

    #[test]
    fn clear_a_tasks_agree_with_semantics() {
        check_corpus_domain("clear-a", 8);
    }

    #[test]
    fn corpus_tasks_agree_with_semantics() {
        for (d, n) in [("get-last", 8), ("find-a", 8), ("corner", 8), ("gripper", 22), ("logistics", 18), ("on-ab", 22)] {
            check_corpus_domain(d, n);
        }
    }

    fn check_corpus_domain(dir: &str, expected: usize) {
        let (bat, qnp, map) = load(dir);
        let suite = generate_tasks(&bat, &qnp, &map).unwrap();
        assert_eq!(suite.tasks.len(), expected_task_count(&qnp));
        assert_eq!(suite.tasks.len(), expected, "{dir}");
        let programs: Vec<Program> = qnp.actions.iter().map(|a| map.map_action(&a.name, &[]).unwrap()).collect();
        let insts = crate::oracle::families::instances(&bat, Some(4)).unwrap();
        assert!(!insts.is_empty(), "{dir}");
        let space = crate::oracle::StateSpace::Programs(&programs);
        let dsc = crate::oracle::check_validity_finite(&bat, &suite.constraints, &insts, &space, None).unwrap();
        assert!(dsc.valid, "{dir} constraints violated: {:?}", dsc.witness.map(|w| w.to_string()));
        for t in &suite.tasks {
            let cc = crate::oracle::cross_check_task(&bat, t, &insts, &space, None).unwrap();
            let w = cc.witness.as_ref().map(|w| w.to_string());
            assert!(cc.agrees, "{dir} {} disagrees at {w:?}", t.id);
            assert!(cc.holds, "{dir} {} fails at {w:?}", t.id);
        }
    }
}
