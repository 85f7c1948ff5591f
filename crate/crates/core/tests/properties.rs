mod common;

use std::collections::BTreeMap;

use proptest::prelude::*;
use rand::rngs::StdRng;
use rand::SeedableRng;

use common::{load, Gen};
use soundabs::logic::{normalize, nnf, substitute, una_simplify, Formula, Term};
use soundabs::oracle::families::Family;
use soundabs::oracle::Evaluator;
use soundabs::pipeline::Inputs;
use soundabs::regression::RegressionContext;

const DOMAINS: [(&str, Family); 3] = [("clear-a", Family::Blocks), ("get-last", Family::Lists), ("corner", Family::Grids)];

fn setup(seed: u64) -> (Inputs, Family) {
    let (d, f) = DOMAINS[(seed % 3) as usize];
    (load(d), f)
}

fn bound(f: Family) -> usize {
    if f == Family::Grids {
        3
    } else {
        4
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(150))]

    #[test]
    fn simplifiers_preserve_truth(seed in any::<u64>()) {
        let (inputs, family) = setup(seed);
        let mut g = Gen::new(&inputs.theory, StdRng::seed_from_u64(seed));
        let phi = g.closed_formula(4);
        let (inst, s) = g.instance_and_state(family, bound(family), 3);
        let ev = Evaluator::new(&inputs.theory, &inst);
        let truth = ev.eval(&phi, &s).unwrap();
        let una = una_simplify(&phi);
        prop_assert_eq!(ev.eval(&una, &s).unwrap(), truth, "una {}", una);
        prop_assert_eq!(una_simplify(&una), una.clone());
        let n = nnf(&una);
        prop_assert_eq!(ev.eval(&n, &s).unwrap(), truth, "nnf {}", n);
        let norm = normalize(&n);
        prop_assert_eq!(ev.eval(&norm, &s).unwrap(), truth, "normalize {}", norm);
        prop_assert_eq!(normalize(&norm), norm);
    }

    #[test]
    fn substitution_closes_and_matches_instantiation(seed in any::<u64>()) {
        let inputs = load("clear-a");
        let mut g = Gen::new(&inputs.theory, StdRng::seed_from_u64(seed));
        let x = g.fresh_var();
        let mut scope = vec![x.clone()];
        let body = g.formula(&mut scope, 3);
        let binding = BTreeMap::from([(x.clone(), Term::constant("A"))]);
        let inst_body = substitute(&body, &binding).unwrap();
        prop_assert!(!inst_body.free_vars().contains(&x));
        // A ∀ over a single witness domain element agrees with the instance.
        let (inst, s) = g.instance_and_state(Family::Blocks, 3, 2);
        let ev = Evaluator::new(&inputs.theory, &inst);
        if inst_body.is_closed() {
            let guarded = Formula::forall(vec![x.clone()], Formula::imply(Formula::Eq(Term::Var(x), Term::constant("A")), body));
            prop_assert_eq!(ev.eval(&guarded, &s).unwrap(), ev.eval(&inst_body, &s).unwrap());
        }
    }

    #[test]
    fn universal_and_existential_regression_are_dual(seed in any::<u64>()) {
        let (inputs, family) = setup(seed);
        let mut g = Gen::new(&inputs.theory, StdRng::seed_from_u64(seed));
        g.frozen = true;
        let phi = g.closed_formula(2);
        let delta = g.closed_program(2);
        let (inst, s) = g.instance_and_state(family, bound(family), 2);
        let ev = Evaluator::new(&inputs.theory, &inst);
        let mut ctx = RegressionContext::new(&inputs.theory);
        let u = ctx.regress_univ(&phi, &delta).unwrap();
        let e = ctx.regress_exist(&Formula::not(phi), &delta).unwrap();
        prop_assert_eq!(ev.eval(&u, &s).unwrap(), !ev.eval(&e, &s).unwrap());
    }

    #[test]
    fn successor_state_axioms_match_effects(seed in any::<u64>()) {
        // Regressing each ground fluent through an executable ground action
        // predicts the successor state computed from the add and delete lists.
        let (inputs, family) = setup(seed);
        let th = &inputs.theory;
        let mut g = Gen::new(th, StdRng::seed_from_u64(seed));
        let (inst, s) = g.instance_and_state(family, bound(family), 3);
        let ev = Evaluator::new(th, &inst);
        let mut ctx = RegressionContext::new(th);
        for a in ev.ground_actions() {
            let Some(next) = ev.step(&a, &s).unwrap() else { continue };
            let (name, args) = (&a.0, &a.1);
            let alpha = Term::App(name.clone(), args.iter().map(|i| Term::constant(&inst.objects[*i])).collect());
            for (fluent, arity) in &th.symbols.fluents {
                let tuples = tuples(inst.objects.len(), *arity);
                for t in tuples {
                    let atom = Formula::atom(fluent, t.iter().map(|i| Term::constant(&inst.objects[*i])).collect());
                    let r = ctx.regress_step(&Formula::after(alpha.clone(), atom)).unwrap();
                    prop_assert_eq!(ev.eval(&r, &s).unwrap(), next.holds(fluent, &t), "{} after {}", fluent, alpha);
                }
            }
        }
    }
}

fn tuples(n: usize, k: usize) -> Vec<Vec<usize>> {
    (0..k).fold(vec![Vec::new()], |acc, _| {
        acc.into_iter().flat_map(|p| (0..n).map(move |i| [p.clone(), vec![i]].concat())).collect()
    })
}
