mod common;

use cctree::lp::upper::{
    answer_premise_restricted_general, assemble_upper_lp, build_j_constraints, build_minexpr_triples, objective_var,
    raw_operand_counts, variable_names,
};
use cctree::lp::{solve_exact, subsume, Constraint, LinExpr, LinearProgram, MinExpr, Sense};
use cctree::model::{check_kb, prob_of};
use cctree::oracle::{construct_positive_model, rescale_model};
use cctree::planner;
use cctree::propagation::answer_premise_restricted_exact;
use cctree::rational::{ratio, zero, Rational};
use cctree::tree::{orient_at, rooted_complete, ConstraintTree, QueryKind};
use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn tree(seed: u64, n: usize, exact: bool) -> ConstraintTree {
    common::random_tree(&mut ChaCha8Rng::seed_from_u64(seed), n, exact)
}

proptest! {
    #![proptest_config(ProptestConfig { cases: 48, failure_persistence: None, ..ProptestConfig::default() })]

    #[test]
    fn strata_follow_the_orientation(seed in any::<u64>(), n in 2usize..30, root_pick in any::<usize>()) {
        let t = tree(seed, n, true);
        let ot = orient_at(&t, root_pick % n);
        let mut seen = vec![false; n];
        for &v in ot.order() {
            for &c in ot.children(v) {
                prop_assert!(seen[c], "child after parent in the order");
                prop_assert!(ot.stratum(c) < ot.stratum(v));
            }
            prop_assert!(ot.stratum(v) > 0 || ot.is_leaf(v));
            seen[v] = true;
        }
        prop_assert_eq!(*ot.order().last().unwrap(), ot.root());
        prop_assert_eq!(ot.scope_size(ot.root()), n);
        let leaves: Vec<usize> = (0..n).filter(|&v| v != ot.root() && t.is_leaf(v)).collect();
        if n > 1 {
            prop_assert_eq!(ot.leaf_closure(ot.root()), leaves);
        }
    }

    #[test]
    fn operand_counts_stay_within_bounds(seed in any::<u64>(), n in 2usize..40) {
        let t = tree(seed, n, false);
        let ot = orient_at(&t, 0);
        let s2 = |s: u128| s * s;
        for (v, &(a, b, g)) in raw_operand_counts(&ot, true).iter().enumerate() {
            let s = ot.scope_size(v) as u128;
            prop_assert!(a <= s2(s) && b <= s && g <= s2(s2(s)), "node {v}: ({a}, {b}, {g}) with scope {s}");
        }
        let counts = assemble_upper_lp(&ot).counts;
        prop_assert_eq!(counts.j_constraints, 2 * n);
        prop_assert!(counts.generated() <= counts.upper_limit());
        prop_assert!(counts.after_subsumption() as u128 <= counts.generated());
    }

    #[test]
    fn subsumption_keeps_pointwise_minimum(seed in any::<u64>(), n in 2usize..9, point in prop::collection::vec(0i64..=40, 9)) {
        let t = tree(seed, n, false);
        let ot = orient_at(&t, 0);
        let p: Vec<Rational> = point.iter().map(|&k| ratio(k, 20)).collect();
        for triple in build_minexpr_triples(&ot, false) {
            for m in [&triple.alpha, &triple.beta, &triple.gamma] {
                let pruned = subsume(m);
                prop_assert!(pruned.len() <= m.len());
                prop_assert_eq!(pruned.eval(&p), m.eval(&p));
            }
        }
    }

    #[test]
    fn subsumption_keeps_the_lp_optimum(seed in any::<u64>(), n in 2usize..8) {
        let t = tree(seed, n, false);
        let ot = orient_at(&t, 0);
        let raw = build_minexpr_triples(&ot, false).swap_remove(0);
        let x = LinExpr::var(objective_var(&ot));
        let mut lp = LinearProgram::new(variable_names(&t), Sense::Maximize, x.clone());
        for e in MinExpr::union([&raw.alpha, &raw.gamma]).operands() {
            lp.push(Constraint::le(&x, e));
        }
        lp.constraints.extend(build_j_constraints(&ot));
        let unpruned = solve_exact(&lp).unwrap();
        let pruned = assemble_upper_lp(&ot).solve().unwrap();
        prop_assert_eq!(unpruned.value, pruned.value);
    }

    #[test]
    fn exact_and_general_engines_agree_on_exact_trees(seed in any::<u64>(), n in 2usize..12) {
        let t = tree(seed, n, true);
        let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0xa5a5);
        let q = common::random_query(&mut rng, &t, QueryKind::PremiseRestricted).unwrap();
        let exact = planner::answer(&t, &q).unwrap();
        prop_assert!(exact.lower() <= exact.upper());
        let premise = t.nodes_of(&q.premise).unwrap()[0];
        let rooted = rooted_complete(&t, premise, &t.nodes_of(&q.conclusion).unwrap());
        if rooted {
            let direct = answer_premise_restricted_exact(&t, &q).unwrap();
            let general = answer_premise_restricted_general(&t, &q).unwrap();
            prop_assert!(direct.same_bounds(&exact));
            prop_assert!(general.same_bounds(&exact), "exact {} vs general {}", exact, general);
        }
    }

    #[test]
    fn answers_are_ordered_probabilities(seed in any::<u64>(), n in 2usize..10, exact in any::<bool>(), kind in 0usize..3) {
        let t = tree(seed, n, exact);
        let kind = [QueryKind::PremiseRestricted, QueryKind::StronglyConclusionRestricted, QueryKind::General][kind];
        let mut rng = ChaCha8Rng::seed_from_u64(seed.rotate_left(7));
        if let Some(q) = common::random_query(&mut rng, &t, kind) {
            let a = planner::answer(&t, &q).unwrap();
            prop_assert!(!a.empty_consequence);
            prop_assert!(&zero() <= a.lower() && a.lower() <= a.upper() && a.upper() <= &ratio(1, 1));
        }
    }

    #[test]
    fn positive_models_survive_rescaling(seed in any::<u64>(), n in 2usize..10, exact in any::<bool>(), k in 1i64..=100) {
        let t = tree(seed, n, exact);
        let pr = construct_positive_model(&t).unwrap();
        let all = t.event_of(&(0..n).collect::<Vec<_>>());
        prop_assert!(check_kb(&pr, t.kb()).unwrap().is_empty());
        prop_assert!(prob_of(&pr, &all).unwrap() > zero());
        let s = ratio(k, 100);
        let scaled = rescale_model(&pr, &s).unwrap();
        prop_assert!(check_kb(&scaled, t.kb()).unwrap().is_empty());
        prop_assert_eq!(prob_of(&scaled, &all).unwrap(), prob_of(&pr, &all).unwrap() * &s);
    }
}
