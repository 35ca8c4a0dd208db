//! Deterministic chain and complete binary trees for benchmarks and scaling tests.

use crate::error::Result;
use crate::model::{ConditionalConstraint, KnowledgeBase};
use crate::rational::{ratio, Rational};
use crate::tree::{validate_tree, ConstraintTree, Query};

/// Edge values cycled along the edges.
fn edge_value(i: usize) -> Rational {
    const VALUES: [(i64, i64); 4] = [(1, 2), (3, 4), (9, 10), (17, 20)];
    let (p, q) = VALUES[i % VALUES.len()];
    ratio(p, q)
}

fn interval(value: Rational, exact: bool) -> (Rational, Rational) {
    if exact {
        (value.clone(), value)
    } else {
        (&value - ratio(1, 10), value)
    }
}

fn node_name(prefix: char, i: usize, width: usize) -> String {
    format!("{prefix}{i:0width$}")
}

/// `(child|parent)` and `(parent|child)` both take the cycled value of the edge;
/// with `exact` off they become intervals of width 1/10 below it.
fn tree_from_parents(prefix: char, n: usize, parent: impl Fn(usize) -> usize, exact: bool) -> Result<ConstraintTree> {
    let width = n.to_string().len();
    let mut constraints = Vec::with_capacity(2 * n);
    for c in 1..n {
        let p = parent(c);
        let (cn, pn) = (node_name(prefix, c, width), node_name(prefix, p, width));
        let (lo, hi) = interval(edge_value(c), exact);
        constraints.push(ConditionalConstraint::between(&cn, &pn, lo.clone(), hi.clone())?);
        constraints.push(ConditionalConstraint::between(&pn, &cn, lo, hi)?);
    }
    validate_tree(&KnowledgeBase::from_constraints(constraints)?)
}

/// Path `C0 – C1 – … – C(n−1)`, for `n ≥ 2`.
pub fn chain(n: usize, exact: bool) -> Result<ConstraintTree> {
    tree_from_parents('C', n, |c| c - 1, exact)
}

/// Complete binary tree in heap order: node `i` has children `2i + 1` and `2i + 2`.
pub fn binary(n: usize, exact: bool) -> Result<ConstraintTree> {
    tree_from_parents('B', n, |c| (c - 1) / 2, exact)
}

/// `∃(leaves|first node)`: premise-restricted and complete for both shapes.
pub fn leaves_given_root(t: &ConstraintTree) -> Result<Query> {
    let root = t.name(0).clone();
    let leaves: Vec<String> = t
        .leaves()
        .into_iter()
        .filter(|&v| v != 0)
        .map(|v| t.name(v).to_string())
        .collect();
    Query::named(&leaves, &[root.name().to_string()])
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::tree::{rooted_complete, validate_query, QueryKind};

    #[test]
    fn shapes() {
        let c = chain(5, true).unwrap();
        assert_eq!((c.node_count(), c.leaves().len()), (5, 2));
        assert!(c.is_exact());
        let b = binary(15, false).unwrap();
        assert_eq!((b.node_count(), b.leaves().len()), (15, 8));
        assert!(!b.is_exact());
        for t in [c, b] {
            let q = leaves_given_root(&t).unwrap();
            let class = validate_query(&t, &q).unwrap();
            assert_eq!(class.kind, QueryKind::PremiseRestricted);
            let others = t.nodes_of(&q.conclusion).unwrap();
            assert!(rooted_complete(&t, 0, &others));
        }
    }
}
