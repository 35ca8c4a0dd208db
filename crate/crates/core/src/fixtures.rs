//! Reference trees used by tests, benches and the CLI.

use crate::model::{ConditionalConstraint, KnowledgeBase};
use crate::rational::{int, parse_rational, ratio, Rational};
use crate::tree::{validate_tree, ConstraintTree};

fn pair(parent: &str, child: &str, forward: &str, backward: &str) -> [ConditionalConstraint; 2] {
    let p = |s: &str| parse_rational(s).expect("fixture literal");
    [
        ConditionalConstraint::point(child, parent, p(forward)).expect("fixture constraint"),
        ConditionalConstraint::point(parent, child, p(backward)).expect("fixture constraint"),
    ]
}

fn build(constraints: Vec<ConditionalConstraint>) -> ConstraintTree {
    validate_tree(&KnowledgeBase::from_constraints(constraints).expect("fixture kb")).expect("fixture tree")
}

/// Exact nine-node tree `M–N–O`, `O–{P, Q, R}`, `P–{S, T, U}`.
pub fn kb_l() -> ConstraintTree {
    build(kb_l_constraints())
}

pub fn kb_l_constraints() -> Vec<ConditionalConstraint> {
    [
        pair("M", "N", "0.35", "0.85"),
        pair("N", "O", "0.55", "1"),
        pair("O", "Q", "0.95", "0.95"),
        pair("O", "R", "0.95", "0.15"),
        pair("O", "P", "0.85", "0.95"),
        pair("P", "S", "0.85", "0.95"),
        pair("P", "T", "0.85", "0.95"),
        pair("P", "U", "0.85", "1"),
    ]
    .into_iter()
    .flatten()
    .collect()
}

/// `O` with leaves `Q` and `R`: `(Q|O) = (O|Q) = 0.95`, `(R|O) = 0.95`, `(O|R) = 0.15`.
pub fn star() -> ConstraintTree {
    build(
        [pair("O", "Q", "0.95", "0.95"), pair("O", "R", "0.95", "0.15")]
            .into_iter()
            .flatten()
            .collect(),
    )
}

/// The interval-valued nine-node tree with the same shape as [`kb_l`].
///
/// Forward intervals are read off the published J constraints. Only lower
/// backward endpoints affect answers; the upper ones are set to 1.
pub fn right_tree() -> ConstraintTree {
    let edge = |parent: &str, child: &str, f: (Rational, Rational), b: Rational| {
        vec![
            ConditionalConstraint::between(child, parent, f.0, f.1).expect("fixture constraint"),
            ConditionalConstraint::between(parent, child, b, int(1)).expect("fixture constraint"),
        ]
    };
    let r = ratio;
    let mut cs = Vec::new();
    cs.extend(edge("M", "N", (r(3, 10), r(2, 5)), r(4, 5)));
    cs.extend(edge("N", "O", (r(1, 2), r(3, 5)), int(1)));
    cs.extend(edge("O", "P", (r(4, 5), r(9, 10)), r(9, 10)));
    cs.extend(edge("O", "Q", (r(9, 10), int(1)), r(9, 10)));
    cs.extend(edge("O", "R", (r(9, 10), int(1)), r(1, 10)));
    cs.extend(edge("P", "S", (r(4, 5), r(9, 10)), int(1)));
    cs.extend(edge("P", "T", (r(4, 5), r(9, 10)), int(1)));
    cs.extend(edge("P", "U", (r(4, 5), r(9, 10)), int(1)));
    build(cs)
}
