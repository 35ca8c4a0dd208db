//! Random trees and queries shared by the integration tests.
#![allow(dead_code)]

use cctree::model::{ConditionalConstraint, KnowledgeBase};
use cctree::rational::{ratio, Rational};
use cctree::tree::{validate_query, ConstraintTree, Query, QueryKind};
use cctree::validate_tree;
use rand::seq::SliceRandom;
use rand::Rng;

pub fn name(i: usize) -> String {
    format!("E{i}")
}

/// A value in `{1/20, …, 20/20}`.
fn grid<R: Rng>(rng: &mut R) -> i64 {
    rng.gen_range(1..=20)
}

fn interval<R: Rng>(rng: &mut R, exact: bool) -> (Rational, Rational) {
    let a = grid(rng);
    if exact {
        (ratio(a, 20), ratio(a, 20))
    } else {
        let b = grid(rng);
        (ratio(a.min(b), 20), ratio(a.max(b), 20))
    }
}

/// Random labelled tree on `n ≥ 2` nodes with positive lower bounds on every edge.
pub fn random_tree<R: Rng>(rng: &mut R, n: usize, exact: bool) -> ConstraintTree {
    let mut cs = Vec::new();
    for c in 1..n {
        let p = rng.gen_range(0..c);
        let (f0, f1) = interval(rng, exact);
        let (b0, b1) = interval(rng, exact);
        cs.push(ConditionalConstraint::between(&name(c), &name(p), f0, f1).unwrap());
        cs.push(ConditionalConstraint::between(&name(p), &name(c), b0, b1).unwrap());
    }
    validate_tree(&KnowledgeBase::from_constraints(cs).unwrap()).unwrap()
}

fn query_of(t: &ConstraintTree, conclusion: &[usize], premise: &[usize]) -> Query {
    let names = |v: &[usize]| v.iter().map(|&i| t.name(i).to_string()).collect::<Vec<_>>();
    Query::named(&names(conclusion), &names(premise)).unwrap()
}

/// A random valid query of the requested class, if one turns up within a few hundred draws.
pub fn random_query<R: Rng>(rng: &mut R, t: &ConstraintTree, kind: QueryKind) -> Option<Query> {
    let n = t.node_count();
    for _ in 0..400 {
        let mut nodes: Vec<usize> = (0..n).collect();
        nodes.shuffle(rng);
        let (e_len, f_len) = match kind {
            QueryKind::PremiseRestricted => (1, rng.gen_range(1..n)),
            QueryKind::StronglyConclusionRestricted => {
                if n < 3 {
                    return None;
                }
                (rng.gen_range(2..n), 1)
            }
            QueryKind::General => {
                if n < 4 {
                    return None;
                }
                let e = rng.gen_range(2..n - 1);
                (e, rng.gen_range(2..=n - e))
            }
        };
        let premise = &nodes[..e_len];
        let conclusion = &nodes[e_len..e_len + f_len];
        let q = query_of(t, conclusion, premise);
        if matches!(validate_query(t, &q), Ok(c) if c.kind == kind) {
            return Some(q);
        }
    }
    None
}
