//! Bundled instance generators for the corpus domains.
//!
//! Each generator yields candidate initial states up to a size bound; the
//! candidates are then filtered by the domain's own initial formula, so a
//! family only fixes the shape of the universe.

use std::collections::BTreeSet;

use super::{FiniteInstance, OracleError};
use crate::bat::BasicActionTheory;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Family {
    /// Blocks-world towers.
    Blocks,
    /// Singly linked lists.
    Lists,
    /// Square grids with numbered coordinates.
    Grids,
    Gripper,
    Logistics,
}

impl Family {
    pub fn for_domain(name: &str) -> Option<Family> {
        Some(match name {
            "clear-a" | "on-ab" => Family::Blocks,
            "get-last" | "find-a" => Family::Lists,
            "corner" => Family::Grids,
            "gripper" => Family::Gripper,
            "logistics" => Family::Logistics,
            _ => return None,
        })
    }

    /// Default size bound used by the bundled checks.
    pub fn default_bound(self) -> usize {
        match self {
            Family::Blocks | Family::Lists => 4,
            Family::Grids => 3,
            Family::Gripper | Family::Logistics => 5,
        }
    }
}

fn with_fillers(constants: &[String], prefix: &str, n: usize) -> Vec<String> {
    let mut objs: Vec<String> = constants.to_vec();
    let mut i = 1;
    while objs.len() < n {
        objs.push(format!("{prefix}{i}"));
        i += 1;
    }
    objs
}

fn has(theory: &BasicActionTheory, fluent: &str) -> bool {
    theory.symbols.fluents.contains_key(fluent)
}

fn blocks(theory: &BasicActionTheory, bound: usize) -> Vec<FiniteInstance> {
    let consts: Vec<String> = theory.symbols.constants.iter().cloned().collect();
    let mut out = Vec::new();
    for n in consts.len().max(1)..=bound {
        let objs = with_fillers(&consts, "b", n);
        // below[i] = Some(j) puts block i on block j.
        let mut below: Vec<Option<usize>> = vec![None; n];
        loop {
            if is_forest(&below) {
                let mut inst = FiniteInstance::new(objs.clone());
                for (i, b) in below.iter().enumerate() {
                    match b {
                        Some(j) => inst.init.insert("on", vec![i, *j]),
                        None => inst.init.insert("ontable", vec![i]),
                    }
                    if !below.contains(&Some(i)) {
                        inst.init.insert("clear", vec![i]);
                    }
                }
                if has(theory, "handempty") {
                    inst.init.insert("handempty", vec![]);
                }
                out.push(inst);
            }
            if !next_assignment(&mut below, n) {
                break;
            }
        }
    }
    out
}

fn next_assignment(below: &mut [Option<usize>], n: usize) -> bool {
    for slot in below.iter_mut() {
        *slot = match *slot {
            None => Some(0),
            Some(j) if j + 1 < n => Some(j + 1),
            Some(_) => None,
        };
        if slot.is_some() {
            return true;
        }
    }
    false
}

fn is_forest(below: &[Option<usize>]) -> bool {
    let mut targets = BTreeSet::new();
    for (i, b) in below.iter().enumerate() {
        if let Some(j) = b {
            if *j == i || !targets.insert(*j) {
                return false;
            }
        }
    }
    // Acyclic: following `below` from any block reaches the table.
    (0..below.len()).all(|start| {
        let mut cur = start;
        for _ in 0..=below.len() {
            match below[cur] {
                None => return true,
                Some(j) => cur = j,
            }
        }
        false
    })
}

fn permutations(n: usize) -> Vec<Vec<usize>> {
    if n == 0 {
        return vec![vec![]];
    }
    let mut out = Vec::new();
    for p in permutations(n - 1) {
        for pos in 0..=p.len() {
            let mut q = p.clone();
            q.insert(pos, n - 1);
            out.push(q);
        }
    }
    out
}

fn lists(theory: &BasicActionTheory, bound: usize) -> Vec<FiniteInstance> {
    let consts: Vec<String> = theory.symbols.constants.iter().cloned().collect();
    let mut out = Vec::new();
    for n in consts.len().max(1)..=bound {
        let objs = with_fillers(&consts, "c", n);
        for order in permutations(n) {
            for start in 0..n {
                let mut inst = FiniteInstance::new(objs.clone());
                for w in order.windows(2) {
                    inst.init.insert("next", vec![w[0], w[1]]);
                }
                inst.init.insert("at", vec![start]);
                out.push(inst);
            }
        }
    }
    out
}

const NUMBERS: [&str; 5] = ["zero", "one", "two", "three", "four"];

fn grids(_theory: &BasicActionTheory, bound: usize) -> Vec<FiniteInstance> {
    let mut out = Vec::new();
    for k in 1..=bound.min(NUMBERS.len()) {
        let objs: Vec<String> = NUMBERS[..k].iter().map(|s| s.to_string()).collect();
        for c in 0..k {
            for r in 0..k {
                let mut inst = FiniteInstance::new(objs.clone());
                for i in 1..k {
                    inst.init.insert("pred", vec![i - 1, i]);
                }
                inst.init.insert("at", vec![c, r]);
                out.push(inst);
            }
        }
    }
    out
}

fn gripper(_theory: &BasicActionTheory, bound: usize) -> Vec<FiniteInstance> {
    let mut out = Vec::new();
    for grippers in 1..=2usize {
        for balls in 1..=bound.saturating_sub(2 + grippers) {
            let mut objs = vec!["rooma".to_string(), "roomb".to_string()];
            objs.extend((1..=grippers).map(|i| format!("g{i}")));
            objs.extend((1..=balls).map(|i| format!("ball{i}")));
            // Each ball starts in room A or room B.
            for mask in 0..(1usize << balls) {
                let mut inst = FiniteInstance::new(objs.clone());
                inst.init.insert("at-robby", vec![0]);
                for g in 0..grippers {
                    inst.init.insert("gripper", vec![2 + g]);
                    inst.init.insert("free", vec![2 + g]);
                }
                for b in 0..balls {
                    let idx = 2 + grippers + b;
                    inst.init.insert("ball", vec![idx]);
                    inst.init.insert("at", vec![idx, (mask >> b) & 1]);
                }
                out.push(inst);
            }
        }
    }
    out
}

fn logistics(_theory: &BasicActionTheory, bound: usize) -> Vec<FiniteInstance> {
    let mut out = Vec::new();
    for pkgs in 1..=bound.saturating_sub(2) {
        let mut objs = vec!["orig".to_string(), "dest".to_string()];
        objs.extend((1..=pkgs).map(|i| format!("p{i}")));
        for mask in 0..(1usize << pkgs) {
            let mut inst = FiniteInstance::new(objs.clone());
            inst.init.insert("truck-at", vec![0]);
            for p in 0..pkgs {
                inst.init.insert("pkg", vec![2 + p]);
                inst.init.insert("at-pkg", vec![2 + p, (mask >> p) & 1]);
            }
            out.push(inst);
        }
    }
    out
}

/// Candidate initial states of `family` up to `bound` objects, before
/// filtering by the initial formula.
pub fn candidates(family: Family, theory: &BasicActionTheory, bound: usize) -> Vec<FiniteInstance> {
    match family {
        Family::Blocks => blocks(theory, bound),
        Family::Lists => lists(theory, bound),
        Family::Grids => grids(theory, bound),
        Family::Gripper => gripper(theory, bound),
        Family::Logistics => logistics(theory, bound),
    }
}

/// Instances of the theory's family whose initial state satisfies the
/// theory's initial formula.
pub fn instances(theory: &BasicActionTheory, bound: Option<usize>) -> Result<Vec<FiniteInstance>, OracleError> {
    let family = Family::for_domain(&theory.name)
        .ok_or_else(|| OracleError::Unsupported(format!("no instance family for domain {}", theory.name)))?;
    let bound = bound.unwrap_or(family.default_bound());
    let mut out = Vec::new();
    for inst in candidates(family, theory, bound) {
        match inst.check_init(theory) {
            Ok(()) => out.push(inst),
            Err(OracleError::InitViolated) | Err(OracleError::UnknownConstant(_)) => {}
            Err(e) => return Err(e),
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn forests_of_three_blocks() {
        // Ordered forests of linear towers on 3 labelled blocks: 13.
        let mut below = vec![None; 3];
        let mut count = 0;
        loop {
            if is_forest(&below) {
                count += 1;
            }
            if !next_assignment(&mut below, 3) {
                break;
            }
        }
        assert_eq!(count, 13);
    }

    #[test]
    fn permutation_count() {
        assert_eq!(permutations(4).len(), 24);
        let set: BTreeSet<_> = permutations(4).into_iter().collect();
        assert_eq!(set.len(), 24);
    }
}
