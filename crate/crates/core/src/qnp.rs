//! Qualitative numerical planning problems.

use std::collections::BTreeMap;
use std::fmt;

use crate::logic::{Bound, CmpOp, Formula, Term};
use crate::sexpr::{self, keyword_pairs, SExpr, SyntaxError};

#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Literal {
    Bool { name: String, value: bool },
    /// `n = 0` when `zero`, otherwise `n > 0`.
    Num { name: String, zero: bool },
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Effect {
    Bool { name: String, value: bool },
    Inc(String),
    Dec(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BoolEffect {
    SetTrue,
    SetFalse,
    Frame,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum NumEffect {
    Inc,
    Dec,
    Frame,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum EffectDescriptor {
    Bool(BoolEffect),
    Num(NumEffect),
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct QnpAction {
    pub name: String,
    pub pre: Vec<Literal>,
    pub effects: Vec<Effect>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct QnpProblem {
    pub name: String,
    pub bools: Vec<String>,
    pub nums: Vec<String>,
    pub init: Vec<Literal>,
    pub goal: Vec<Literal>,
    pub actions: Vec<QnpAction>,
}

impl Literal {
    pub fn to_formula(&self) -> Formula {
        match self {
            Literal::Bool { name, value } => {
                let a = Formula::Atom(name.clone(), vec![]);
                if *value {
                    a
                } else {
                    Formula::not(a)
                }
            }
            Literal::Num { name, zero } => Formula::Cmp {
                op: if *zero { CmpOp::Eq } else { CmpOp::Gt },
                lhs: Term::NumVar(name.clone()),
                rhs: Bound::Int(0),
            },
        }
    }
}

/// Conjunction of literals as a high-level formula; `true` when empty.
pub fn literals_formula(lits: &[Literal]) -> Formula {
    match lits.len() {
        0 => Formula::True,
        1 => lits[0].to_formula(),
        _ => Formula::And(lits.iter().map(Literal::to_formula).collect()),
    }
}

impl fmt::Display for Literal {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Literal::Bool { name, value: true } => write!(f, "{name}"),
            Literal::Bool { name, value: false } => write!(f, "(not {name})"),
            Literal::Num { name, zero: true } => write!(f, "(= {name} 0)"),
            Literal::Num { name, zero: false } => write!(f, "(> {name} 0)"),
        }
    }
}

impl fmt::Display for Effect {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Effect::Bool { name, value: true } => write!(f, "{name}"),
            Effect::Bool { name, value: false } => write!(f, "(not {name})"),
            Effect::Inc(n) => write!(f, "(inc {n})"),
            Effect::Dec(n) => write!(f, "(dec {n})"),
        }
    }
}

fn join<T: fmt::Display>(items: &[T]) -> String {
    items.iter().map(|i| i.to_string()).collect::<Vec<_>>().join(" ")
}

impl fmt::Display for QnpProblem {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "(qnp {}", self.name)?;
        writeln!(f, "  (:bools {})", self.bools.join(" "))?;
        writeln!(f, "  (:nums {})", self.nums.join(" "))?;
        writeln!(f, "  (:init {})", join(&self.init))?;
        writeln!(f, "  (:goal {})", join(&self.goal))?;
        for a in &self.actions {
            writeln!(
                f,
                "  (:action {} :pre ({}) :eff ({}))",
                a.name,
                join(&a.pre),
                join(&a.effects)
            )?;
        }
        write!(f, ")")
    }
}

impl QnpProblem {
    pub fn action(&self, name: &str) -> Option<&QnpAction> {
        self.actions.iter().find(|a| a.name == name)
    }

    pub fn init_formula(&self) -> Formula {
        literals_formula(&self.init)
    }

    pub fn goal_formula(&self) -> Formula {
        literals_formula(&self.goal)
    }
}

impl QnpAction {
    pub fn pre_formula(&self) -> Formula {
        literals_formula(&self.pre)
    }
}

/// Effect descriptor for every symbol of the problem under action `a`.
pub fn hl_ssa_literals(q: &QnpProblem, a: &QnpAction) -> BTreeMap<String, EffectDescriptor> {
    let mut out = BTreeMap::new();
    for b in &q.bools {
        out.insert(b.clone(), EffectDescriptor::Bool(BoolEffect::Frame));
    }
    for n in &q.nums {
        out.insert(n.clone(), EffectDescriptor::Num(NumEffect::Frame));
    }
    for e in &a.effects {
        let (k, d) = match e {
            Effect::Bool { name, value: true } => (name, EffectDescriptor::Bool(BoolEffect::SetTrue)),
            Effect::Bool { name, value: false } => (name, EffectDescriptor::Bool(BoolEffect::SetFalse)),
            Effect::Inc(n) => (n, EffectDescriptor::Num(NumEffect::Inc)),
            Effect::Dec(n) => (n, EffectDescriptor::Num(NumEffect::Dec)),
        };
        out.insert(k.clone(), d);
    }
    out
}

struct Symbols<'a> {
    bools: &'a [String],
    nums: &'a [String],
}

impl Symbols<'_> {
    fn bool_name(&self, e: &SExpr) -> Result<String, SyntaxError> {
        let n = e.expect_symbol("boolean feature")?;
        if self.bools.iter().any(|b| b == n) {
            Ok(n.to_string())
        } else {
            Err(SyntaxError::new(e.pos(), format!("unknown boolean feature {n}")))
        }
    }

    fn num_name(&self, e: &SExpr) -> Result<String, SyntaxError> {
        let n = e.expect_symbol("numeric variable")?;
        if self.nums.iter().any(|b| b == n) {
            Ok(n.to_string())
        } else {
            Err(SyntaxError::new(e.pos(), format!("unknown numeric variable {n}")))
        }
    }

    fn literal(&self, e: &SExpr) -> Result<Literal, SyntaxError> {
        if let SExpr::Symbol(..) = e {
            return Ok(Literal::Bool {
                name: self.bool_name(e)?,
                value: true,
            });
        }
        let items = e.expect_list("literal")?;
        match (e.head(), items.len()) {
            (Some("not"), 2) => Ok(Literal::Bool {
                name: self.bool_name(&items[1])?,
                value: false,
            }),
            (Some(op @ ("=" | ">")), 3) if matches!(items[2], SExpr::Int(0, _)) => Ok(Literal::Num {
                name: self.num_name(&items[1])?,
                zero: op == "=",
            }),
            _ => Err(SyntaxError::new(
                e.pos(),
                format!("malformed literal {e}; expected F, (not F), (= n 0) or (> n 0)"),
            )),
        }
    }

    fn effect(&self, e: &SExpr) -> Result<Effect, SyntaxError> {
        if let SExpr::Symbol(..) = e {
            return Ok(Effect::Bool {
                name: self.bool_name(e)?,
                value: true,
            });
        }
        let items = e.expect_list("effect")?;
        match (e.head(), items.len()) {
            (Some("not"), 2) => Ok(Effect::Bool {
                name: self.bool_name(&items[1])?,
                value: false,
            }),
            (Some("inc"), 2) => Ok(Effect::Inc(self.num_name(&items[1])?)),
            (Some("dec"), 2) => Ok(Effect::Dec(self.num_name(&items[1])?)),
            _ => Err(SyntaxError::new(
                e.pos(),
                format!("malformed effect {e}; expected F, (not F), (inc n) or (dec n)"),
            )),
        }
    }
}

fn names(e: &SExpr) -> Result<Vec<String>, SyntaxError> {
    e.as_list().unwrap()[1..]
        .iter()
        .map(|s| s.expect_symbol("name").map(str::to_string))
        .collect()
}

pub fn parse_qnp(text: &str) -> Result<QnpProblem, SyntaxError> {
    let top = sexpr::parse_one(text)?;
    let items = top.expect_list("qnp")?;
    if top.head() != Some("qnp") || items.len() < 2 {
        return Err(SyntaxError::new(top.pos(), "expected (qnp NAME …)"));
    }
    let name = items[1].expect_symbol("qnp name")?.to_string();
    let sections = &items[2..];
    let mut bools = Vec::new();
    let mut nums = Vec::new();
    for s in sections {
        match s.head() {
            Some(":bools") => bools.extend(names(s)?),
            Some(":nums") => nums.extend(names(s)?),
            Some(":init" | ":goal" | ":action") => {}
            _ => return Err(SyntaxError::new(s.pos(), format!("unknown qnp section {s}"))),
        }
    }
    let mut seen = std::collections::BTreeSet::new();
    for n in bools.iter().chain(&nums) {
        if !seen.insert(n.clone()) {
            return Err(SyntaxError::new(top.pos(), format!("duplicate symbol {n}")));
        }
    }
    let sym = Symbols {
        bools: &bools,
        nums: &nums,
    };
    let mut init = Vec::new();
    let mut goal = Vec::new();
    let mut actions: Vec<QnpAction> = Vec::new();
    for s in sections {
        let list = s.as_list().unwrap();
        match s.head() {
            Some(":init") => {
                for l in &list[1..] {
                    init.push(sym.literal(l)?);
                }
            }
            Some(":goal") => {
                for l in &list[1..] {
                    goal.push(sym.literal(l)?);
                }
            }
            Some(":action") => {
                let aname = list
                    .get(1)
                    .and_then(|n| n.as_symbol())
                    .ok_or_else(|| SyntaxError::new(s.pos(), "expected action name"))?
                    .to_string();
                if actions.iter().any(|a| a.name == aname) || seen.contains(&aname) {
                    return Err(SyntaxError::new(s.pos(), format!("duplicate symbol {aname}")));
                }
                let mut pre = Vec::new();
                let mut effects = Vec::new();
                for (k, v) in keyword_pairs(&list[2..])? {
                    let vs = v.expect_list(k)?;
                    match k {
                        ":pre" => {
                            for l in vs {
                                pre.push(sym.literal(l)?);
                            }
                        }
                        ":eff" => {
                            for e in vs {
                                effects.push(sym.effect(e)?);
                            }
                        }
                        other => {
                            return Err(SyntaxError::new(v.pos(), format!("unknown action field {other}")))
                        }
                    }
                }
                check_effects(&aname, &effects, s)?;
                actions.push(QnpAction {
                    name: aname,
                    pre,
                    effects,
                });
            }
            _ => {}
        }
    }
    Ok(QnpProblem {
        name,
        bools,
        nums,
        init,
        goal,
        actions,
    })
}

fn check_effects(action: &str, effects: &[Effect], at: &SExpr) -> Result<(), SyntaxError> {
    let mut seen: BTreeMap<&str, &Effect> = BTreeMap::new();
    for e in effects {
        let key = match e {
            Effect::Bool { name, .. } | Effect::Inc(name) | Effect::Dec(name) => name.as_str(),
        };
        if let Some(prev) = seen.insert(key, e) {
            if prev != e {
                return Err(SyntaxError::new(
                    at.pos(),
                    format!("action {action} has conflicting effects {prev} and {e}"),
                ));
            }
        }
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    pub const CLEAR_A_QNP: &str = r#"
    (qnp clear-a
      (:bools H)
      (:nums n)
      (:init (> n 0) (not H))
      (:goal (= n 0))
      (:action pickabove :pre ((not H) (> n 0)) :eff (H (dec n)))
      (:action putaside :pre (H) :eff ((not H))))
    "#;

    #[test]
    fn parses_clear_a() {
        let q = parse_qnp(CLEAR_A_QNP).unwrap();
        assert_eq!(q.bools, ["H"]);
        assert_eq!(q.nums, ["n"]);
        assert_eq!(q.init_formula().to_string(), "(and (> n 0) (not (H)))");
        assert_eq!(q.goal_formula().to_string(), "(= n 0)");
        let pa = q.action("pickabove").unwrap();
        assert_eq!(pa.pre.len(), 2);
        assert_eq!(
            pa.effects,
            vec![
                Effect::Bool { name: "H".into(), value: true },
                Effect::Dec("n".into())
            ]
        );
    }

    #[test]
    fn effect_descriptors() {
        let q = parse_qnp(CLEAR_A_QNP).unwrap();
        let d = hl_ssa_literals(&q, q.action("pickabove").unwrap());
        assert_eq!(d["H"], EffectDescriptor::Bool(BoolEffect::SetTrue));
        assert_eq!(d["n"], EffectDescriptor::Num(NumEffect::Dec));
        let d = hl_ssa_literals(&q, q.action("putaside").unwrap());
        assert_eq!(d["H"], EffectDescriptor::Bool(BoolEffect::SetFalse));
        assert_eq!(d["n"], EffectDescriptor::Num(NumEffect::Frame));
        let idle = QnpAction { name: "idle".into(), pre: vec![], effects: vec![] };
        assert!(hl_ssa_literals(&q, &idle)
            .values()
            .all(|d| matches!(d, EffectDescriptor::Bool(BoolEffect::Frame) | EffectDescriptor::Num(NumEffect::Frame))));
    }

    #[test]
    fn rejects_inc_and_dec_together() {
        let text = CLEAR_A_QNP.replace("(H (dec n))", "((inc n) (dec n))");
        assert!(parse_qnp(&text).unwrap_err().msg.contains("conflicting"));
    }

    #[test]
    fn rejects_unknown_and_malformed() {
        assert!(parse_qnp(&CLEAR_A_QNP.replace("(:goal (= n 0))", "(:goal (= m 0))")).is_err());
        assert!(parse_qnp(&CLEAR_A_QNP.replace("(:goal (= n 0))", "(:goal (= n 1))")).is_err());
    }

    #[test]
    fn print_parse_round_trip() {
        let q = parse_qnp(CLEAR_A_QNP).unwrap();
        let again = parse_qnp(&q.to_string()).unwrap();
        assert_eq!(q, again);
        assert_eq!(parse_qnp(&again.to_string()).unwrap(), again);
    }
}
