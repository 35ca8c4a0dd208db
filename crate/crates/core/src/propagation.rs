//! Bottom-up bound propagation over an oriented tree.
//!
//! Every node gets its values from its children by one of three rules:
//! LEAF, CHAINING (one child) or FUSION (several children, each first
//! chained). Lower bounds use lower interval endpoints and are valid for any
//! tree; the upper triple needs an exact tree.

use std::fmt;

use num_traits::{One, Signed, Zero};

use crate::error::{Error, Result};
use crate::model::{BasicEvent, TightAnswer};
use crate::rational::{format_decimal, int, Rational};
use crate::tree::{
    implies_exists, orient_at, rooted_complete, validate_query, ConstraintTree, OrientedTree, Query, QueryKind,
};

/// Least upper bounds of `Pr(B·L)/Pr(B)`, `Pr(¬B·L)/Pr(B)` and `Pr(L)/Pr(B)`
/// for a node `B` and the leaves `L` below it.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct UpperTriple {
    pub alpha2: Rational,
    pub beta2: Rational,
    pub gamma2: Rational,
}

impl UpperTriple {
    pub fn leaf() -> Self {
        UpperTriple {
            alpha2: Rational::one(),
            beta2: Rational::zero(),
            gamma2: Rational::one(),
        }
    }

    /// `α2 ≤ γ2`, `β2 ≤ γ2` and `γ2 ≤ α2 + β2`.
    pub fn is_consistent(&self) -> bool {
        self.alpha2 <= self.gamma2 && self.beta2 <= self.gamma2 && self.gamma2 <= &self.alpha2 + &self.beta2
    }
}

/// Greatest lower bounds of `Pr(B·L)/Pr(B)` and, when positive, of `Pr(B·L)/Pr(L)`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct LowerValue {
    pub alpha1: Rational,
    pub delta1: Option<Rational>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Rule {
    Leaf,
    Chaining,
    Fusion,
}

impl fmt::Display for Rule {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Rule::Leaf => "LEAF",
            Rule::Chaining => "CHAINING",
            Rule::Fusion => "FUSION",
        })
    }
}

fn min_of<'a>(values: impl IntoIterator<Item = &'a Rational>) -> Rational {
    values.into_iter().min().expect("nonempty").clone()
}

/// `max(0, u·(1 + (α1c − 1)/v))`
pub fn chain_alpha1(u: &Rational, v: &Rational, child: &Rational) -> Rational {
    let value = u + u / v * (child - Rational::one());
    value.max(Rational::zero())
}

/// `max(0, 1 − k + Σ α1_i)`
pub fn fuse_alpha1(chained: &[Rational]) -> Rational {
    let k = int(chained.len() as i64);
    let sum: Rational = chained.iter().sum();
    (Rational::one() - k + sum).max(Rational::zero())
}

pub fn chain_upper(u: &Rational, v: &Rational, child: &UpperTriple) -> UpperTriple {
    let one = Rational::one();
    let k = u / v;
    let gamma2 = &k * &child.gamma2;
    let k_beta = &k * &child.beta2;
    let alpha2 = min_of([&one, &gamma2, &(&one - u + &k * &child.alpha2), &(u + &k_beta)]);
    let beta2 = min_of([&(k_beta + k - u), &gamma2]);
    UpperTriple { alpha2, beta2, gamma2 }
}

/// FUSION with the cross term `min_{i≠j}(α2_i + β2_j)` replaced by `α2 + β2`.
pub fn fuse_upper(chained: &[UpperTriple]) -> UpperTriple {
    let alpha2 = min_of(chained.iter().map(|t| &t.alpha2));
    let beta2 = min_of(chained.iter().map(|t| &t.beta2));
    let gamma2 = min_of(chained.iter().map(|t| &t.gamma2)).min(&alpha2 + &beta2);
    UpperTriple { alpha2, beta2, gamma2 }
}

/// `δc·(1 + (v1 − 1)/α1c)`
pub fn chain_delta1(v: &Rational, child_alpha1: &Rational, child_delta1: &Rational) -> Rational {
    child_delta1 * (Rational::one() + (v - Rational::one()) / child_alpha1)
}

/// `(1 + min_i α1_i·(1/δ_i − 1) / (1 − k + Σ α1_i))⁻¹` over chained values.
pub fn fuse_delta1(chained: &[(Rational, Rational)]) -> Rational {
    let alphas: Vec<Rational> = chained.iter().map(|(a, _)| a.clone()).collect();
    let denom = fuse_alpha1(&alphas);
    let slack = chained
        .iter()
        .map(|(a, d)| a * (d.recip() - Rational::one()))
        .min()
        .expect("nonempty");
    (Rational::one() + slack / denom).recip()
}

/// Node-level α1 for every node, computed bottom-up from lower endpoints.
pub fn h1_alpha_all(ot: &OrientedTree<'_>) -> Vec<Rational> {
    let mut alpha = vec![Rational::zero(); ot.tree().node_count()];
    for &b in ot.order() {
        alpha[b] = node_alpha1(ot, b, &alpha, &mut Vec::new());
    }
    alpha
}

fn node_alpha1(ot: &OrientedTree<'_>, b: usize, alpha: &[Rational], chained: &mut Vec<Rational>) -> Rational {
    let children = ot.children(b);
    chained.clear();
    chained.extend(
        children
            .iter()
            .map(|&c| chain_alpha1(&ot.forward(c).lower, &ot.backward(c).lower, &alpha[c])),
    );
    match children.len() {
        0 => Rational::one(),
        1 => chained.pop().expect("one child"),
        _ => fuse_alpha1(chained),
    }
}

/// α1 at `node`: greatest lower bound of `Pr(node·L)/Pr(node)` over the leaves `L` below it.
pub fn h1_alpha(ot: &OrientedTree<'_>, node: &BasicEvent) -> Result<Rational> {
    let b = ot.tree().node(node)?;
    Ok(h1_alpha_all(ot).swap_remove(b))
}

fn require_exact(t: &ConstraintTree) -> Result<()> {
    if t.is_exact() {
        Ok(())
    } else {
        Err(Error::Precondition(
            "upper-bound propagation needs an exact tree".into(),
        ))
    }
}

/// Node-level upper triples for every node of an exact tree.
pub fn h2_all(ot: &OrientedTree<'_>) -> Result<Vec<UpperTriple>> {
    require_exact(ot.tree())?;
    let mut values: Vec<Option<UpperTriple>> = vec![None; ot.tree().node_count()];
    for &b in ot.order() {
        let chained: Vec<UpperTriple> = ot
            .children(b)
            .iter()
            .map(|&c| {
                chain_upper(
                    &ot.forward(c).lower,
                    &ot.backward(c).lower,
                    values[c].as_ref().expect("child first"),
                )
            })
            .collect();
        values[b] = Some(match chained.len() {
            0 => UpperTriple::leaf(),
            1 => chained.into_iter().next().expect("one child"),
            _ => fuse_upper(&chained),
        });
    }
    Ok(values.into_iter().map(|v| v.expect("every node visited")).collect())
}

pub fn h2_triple(ot: &OrientedTree<'_>, node: &BasicEvent) -> Result<UpperTriple> {
    let b = ot.tree().node(node)?;
    Ok(h2_all(ot)?.swap_remove(b))
}

/// Node-level α1 and δ1 for every node; δ1 is present exactly where α1 > 0.
pub fn h1_delta_all(ot: &OrientedTree<'_>) -> Vec<LowerValue> {
    let alpha = h1_alpha_all(ot);
    let mut delta: Vec<Option<Rational>> = vec![None; alpha.len()];
    for &b in ot.order() {
        if !alpha[b].is_positive() {
            continue;
        }
        let children = ot.children(b);
        delta[b] = Some(match children.len() {
            0 => Rational::one(),
            1 => {
                let c = children[0];
                chain_delta1(
                    &ot.backward(c).lower,
                    &alpha[c],
                    delta[c].as_ref().expect("positive α1 below"),
                )
            }
            _ => {
                let chained: Vec<(Rational, Rational)> = children
                    .iter()
                    .map(|&c| {
                        let (u, v) = (&ot.forward(c).lower, &ot.backward(c).lower);
                        let d = delta[c].as_ref().expect("positive α1 below");
                        (chain_alpha1(u, v, &alpha[c]), chain_delta1(v, &alpha[c], d))
                    })
                    .collect();
                fuse_delta1(&chained)
            }
        });
    }
    alpha
        .into_iter()
        .zip(delta)
        .map(|(alpha1, delta1)| LowerValue { alpha1, delta1 })
        .collect()
}

/// δ1 at `node`: greatest lower bound of `Pr(node·L)/Pr(L)`. Needs α1 > 0 there.
pub fn h1_delta(ot: &OrientedTree<'_>, node: &BasicEvent) -> Result<Rational> {
    let b = ot.tree().node(node)?;
    h1_delta_all(ot)
        .swap_remove(b)
        .delta1
        .ok_or_else(|| Error::Precondition(format!("α1 at {node} is 0, so δ1 is undefined")))
}

/// One line of the propagation table: the bounds at `node` with respect to the leaves `scope`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct PropagationRow {
    pub stratum: usize,
    pub node: BasicEvent,
    pub scope: Vec<BasicEvent>,
    pub alpha1: Rational,
    pub upper: UpperTriple,
    pub rule: Rule,
}

impl fmt::Display for PropagationRow {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let scope: Vec<&str> = self.scope.iter().map(|e| e.name()).collect();
        let sep = if scope.iter().all(|s| s.chars().count() == 1) {
            ""
        } else {
            " "
        };
        write!(
            f,
            "{}\t{}\t{}\t{}\t{}\t{}\t{}\t({})",
            self.stratum,
            self.node,
            scope.join(sep),
            format_decimal(&self.alpha1, 4),
            format_decimal(&self.upper.alpha2, 4),
            format_decimal(&self.upper.beta2, 4),
            format_decimal(&self.upper.gamma2, 4),
            self.rule
        )
    }
}

pub const TABLE_HEADER: &str = "strata\tB\tD\tα1\tα2\tβ2\tγ2";

/// Every LEAF, CHAINING and FUSION step of an exact tree in processing
/// order: by stratum, then node name, with a node's per-child chaining rows
/// before its fusion row.
pub fn propagation_table(ot: &OrientedTree<'_>) -> Result<Vec<PropagationRow>> {
    let upper = h2_all(ot)?;
    Ok(table_from(ot, &h1_alpha_all(ot), &upper))
}

fn table_from(ot: &OrientedTree<'_>, alpha: &[Rational], upper: &[UpperTriple]) -> Vec<PropagationRow> {
    let t = ot.tree();
    let mut below: Vec<Vec<usize>> = vec![Vec::new(); t.node_count()];
    let mut rows = Vec::new();
    for &b in ot.order() {
        let children = ot.children(b);
        below[b] = match children {
            [] => vec![b],
            [c] => std::mem::take(&mut below[*c]),
            _ => {
                let mut all: Vec<usize> = children.iter().flat_map(|&c| below[c].iter().copied()).collect();
                all.sort_unstable();
                all
            }
        };
        let leaves = |v: usize| below[v].iter().map(|&l| t.name(l).clone()).collect::<Vec<_>>();
        let row = |scope, alpha1, upper, rule| PropagationRow {
            stratum: ot.stratum(b),
            node: t.name(b).clone(),
            scope,
            alpha1,
            upper,
            rule,
        };
        match children.len() {
            0 => rows.push(row(
                vec![t.name(b).clone()],
                alpha[b].clone(),
                upper[b].clone(),
                Rule::Leaf,
            )),
            1 => rows.push(row(leaves(b), alpha[b].clone(), upper[b].clone(), Rule::Chaining)),
            _ => {
                for &c in children {
                    let (u, v) = (&ot.forward(c).lower, &ot.backward(c).lower);
                    rows.push(row(
                        leaves(c),
                        chain_alpha1(u, v, &alpha[c]),
                        chain_upper(u, v, &upper[c]),
                        Rule::Chaining,
                    ));
                }
                rows.push(row(leaves(b), alpha[b].clone(), upper[b].clone(), Rule::Fusion));
            }
        }
    }
    rows
}

/// Tables longer than this keep only their head and tail in traces.
pub const TRACE_ROWS: usize = 200;

fn table_trace(rows: &[PropagationRow]) -> Vec<String> {
    let mut out = vec![TABLE_HEADER.to_string()];
    if rows.len() <= TRACE_ROWS {
        out.extend(rows.iter().map(|r| r.to_string()));
    } else {
        let half = TRACE_ROWS / 2;
        out.extend(rows[..half].iter().map(|r| r.to_string()));
        out.push(format!("... {} rows omitted ...", rows.len() - TRACE_ROWS));
        out.extend(rows[rows.len() - half..].iter().map(|r| r.to_string()));
    }
    out
}

/// The premise node, provided the leaves seen from it are exactly the conclusion.
pub(crate) fn premise_restricted_root(t: &ConstraintTree, q: &Query) -> Result<usize> {
    let class = validate_query(t, q)?;
    let e = t.nodes_of(&q.premise)?[0];
    if class.kind != QueryKind::PremiseRestricted || !rooted_complete(t, e, &t.nodes_of(&q.conclusion)?) {
        return Err(Error::Precondition(format!(
            "{q} is not a premise-restricted complete query"
        )));
    }
    Ok(e)
}

/// Tight answer `[α1(E), α2(E)]` on an exact tree for a premise-restricted
/// query whose conclusion is the leaf set seen from `E`.
pub fn answer_premise_restricted_exact(t: &ConstraintTree, q: &Query) -> Result<TightAnswer> {
    require_exact(t)?;
    let root = premise_restricted_root(t, q)?;
    let ot = orient_at(t, root);
    answer_rooted_exact(&ot, q)
}

/// Exact-engine answer for the orientation's root, whose leaves are taken as the conclusion.
pub(crate) fn answer_rooted_exact(ot: &OrientedTree<'_>, q: &Query) -> Result<TightAnswer> {
    let alpha = h1_alpha_all(ot);
    let upper = h2_all(ot)?;
    let rows = table_from(ot, &alpha, &upper);
    let mut trace = vec![format!(
        "premise-restricted {q}: exact propagation rooted at {}",
        ot.tree().name(ot.root())
    )];
    trace.extend(table_trace(&rows));
    let root = ot.root();
    Ok(TightAnswer::new(alpha[root].clone(), upper[root].alpha2.clone())?.with_trace(trace))
}

/// Strongly conclusion-restricted `(F|E)` on any tree, where `E` is the leaf
/// set seen from `F` (so `F` may be an inner node). The lower
/// bound comes from δ1 at `F`, or from certain implication when α1 vanishes;
/// the upper bound is always 1.
pub fn answer_strongly_conclusion_restricted(t: &ConstraintTree, q: &Query) -> Result<TightAnswer> {
    let class = validate_query(t, q)?;
    let f = t.nodes_of(&q.conclusion)?[0];
    if class.kind != QueryKind::StronglyConclusionRestricted || !rooted_complete(t, f, &t.nodes_of(&q.premise)?) {
        return Err(Error::Precondition(format!(
            "{q} is not a strongly conclusion-restricted complete query"
        )));
    }
    answer_rooted_conclusion(t, f, q)
}

pub(crate) fn answer_rooted_conclusion(t: &ConstraintTree, f: usize, q: &Query) -> Result<TightAnswer> {
    let ot = orient_at(t, f);
    let values = h1_delta_all(&ot);
    let LowerValue { alpha1, delta1 } = &values[f];
    let fname = t.name(f);
    let mut trace = vec![format!(
        "conclusion-restricted {q}: α1 of ({}|{fname}) = {}",
        q.premise,
        format_decimal(alpha1, 4)
    )];
    let lower = if let Some(delta) = delta1 {
        trace.push(format!(
            "case u1 > 0: lower bound δ1 at {fname} = {}",
            format_decimal(delta, 4)
        ));
        delta.clone()
    } else if implies_exists(t, &q.premise, fname)? {
        trace.push(format!("case u1 = 0 with {} ⇒ {fname}: lower bound 1", q.premise));
        Rational::one()
    } else {
        trace.push("case u1 = 0 without certain implication: lower bound 0".to_string());
        Rational::zero()
    };
    Ok(TightAnswer::new(lower, Rational::one())?.with_trace(trace))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fixtures;
    use crate::model::{ConditionalConstraint, KnowledgeBase};
    use crate::rational::{parse_rational, ratio};
    use crate::tree::{orient, validate_tree};

    fn ev(name: &str) -> BasicEvent {
        BasicEvent::new(name).unwrap()
    }

    fn near(r: &Rational, expected: &str) -> bool {
        let diff = r - parse_rational(expected).unwrap();
        diff.abs() <= ratio(2, 10_000)
    }

    #[test]
    fn fig2_node_values() {
        let t = fixtures::kb_l();
        let ot = orient(&t, &ev("M")).unwrap();
        assert_eq!(h1_alpha(&ot, &ev("S")).unwrap(), Rational::one());
        assert_eq!(h1_alpha(&ot, &ev("P")).unwrap(), ratio(11, 20));
        assert!(near(&h1_alpha(&ot, &ev("M")).unwrap(), "0.0169"));
        let o = h2_triple(&ot, &ev("O")).unwrap();
        assert!(near(&o.alpha2, "0.7605") && near(&o.beta2, "0.0447") && near(&o.gamma2, "0.7605"));
    }

    #[test]
    fn chaining_rows_above_one() {
        let t = fixtures::kb_l();
        let ot = orient(&t, &ev("M")).unwrap();
        let rows = propagation_table(&ot).unwrap();
        let row = rows
            .iter()
            .find(|r| r.node.name() == "O" && r.scope == vec![ev("R")])
            .unwrap();
        assert!(
            near(&row.upper.alpha2, "0.95") && near(&row.upper.beta2, "5.3833") && near(&row.upper.gamma2, "6.3333")
        );
        let row = rows
            .iter()
            .find(|r| r.node.name() == "P" && r.scope == vec![ev("U")])
            .unwrap();
        assert_eq!(
            row.upper,
            UpperTriple {
                alpha2: ratio(17, 20),
                beta2: Rational::zero(),
                gamma2: ratio(17, 20)
            }
        );
        assert_eq!(rows.len(), 15);
        assert!(rows.iter().all(|r| r.upper.is_consistent()));
    }

    #[test]
    fn premise_restricted_exact_answers() {
        let t = fixtures::kb_l();
        let a = answer_premise_restricted_exact(
            &t,
            &crate::tree::Query::named(&["Q", "R", "S", "T", "U"], &["M"]).unwrap(),
        )
        .unwrap();
        assert_eq!(format_decimal(a.lower(), 4), "0.0169");
        assert_eq!(format_decimal(a.upper(), 4), "0.1722");

        let sub = t
            .restrict(
                &["O", "P", "S", "T", "U"]
                    .iter()
                    .map(|n| t.node_named(n).unwrap())
                    .collect(),
            )
            .unwrap();
        let a = answer_premise_restricted_exact(&sub, &Query::named(&["S", "T", "U"], &["O"]).unwrap()).unwrap();
        assert_eq!(format_decimal(a.lower(), 4), "0.4474");
        assert_eq!(format_decimal(a.upper(), 4), "0.7605");
    }

    #[test]
    fn two_node_tree_collapses_to_forward_value() {
        let kb = KnowledgeBase::from_constraints(vec![
            ConditionalConstraint::point("C", "B", ratio(2, 7)).unwrap(),
            ConditionalConstraint::point("B", "C", ratio(3, 5)).unwrap(),
        ])
        .unwrap();
        let t = validate_tree(&kb).unwrap();
        let a = answer_premise_restricted_exact(&t, &Query::named(&["C"], &["B"]).unwrap()).unwrap();
        assert_eq!((a.lower(), a.upper()), (&ratio(2, 7), &ratio(2, 7)));
    }

    #[test]
    fn upper_triple_needs_exact_tree() {
        let t = fixtures::right_tree();
        let ot = orient(&t, &ev("M")).unwrap();
        assert!(matches!(h2_triple(&ot, &ev("M")), Err(Error::Precondition(_))));
        assert!(h1_alpha(&ot, &ev("M")).is_ok());
    }

    #[test]
    fn star_delta() {
        let t = fixtures::star();
        let ot = orient(&t, &ev("O")).unwrap();
        assert_eq!(h1_delta(&ot, &ev("O")).unwrap(), ratio(18, 19));
        assert_eq!(h1_delta(&ot, &ev("Q")).unwrap(), Rational::one());
        let a = answer_strongly_conclusion_restricted(&t, &Query::named(&["O"], &["Q", "R"]).unwrap()).unwrap();
        assert_eq!((a.lower(), a.upper()), (&ratio(18, 19), &Rational::one()));
    }

    #[test]
    fn fig2_subtree_delta() {
        let t = fixtures::kb_l();
        let sub = t
            .restrict(
                &["M", "N", "O", "Q", "R"]
                    .iter()
                    .map(|n| t.node_named(n).unwrap())
                    .collect(),
            )
            .unwrap();
        let ot = orient(&sub, &ev("O")).unwrap();
        assert!(near(&h1_delta(&ot, &ev("O")).unwrap(), "0.9262"));
        assert_eq!(h1_delta(&ot, &ev("N")).unwrap(), ratio(7, 20));
    }

    fn certain_star(q_given_o: Rational) -> ConstraintTree {
        // O–Q, O–R where α1 at O vanishes: 1 − 2 + α_Q + α_R ≤ 0
        let kb = KnowledgeBase::from_constraints(vec![
            ConditionalConstraint::point("Q", "O", ratio(1, 2)).unwrap(),
            ConditionalConstraint::point("O", "Q", q_given_o).unwrap(),
            ConditionalConstraint::point("R", "O", ratio(1, 2)).unwrap(),
            ConditionalConstraint::point("O", "R", ratio(1, 2)).unwrap(),
        ])
        .unwrap();
        validate_tree(&kb).unwrap()
    }

    #[test]
    fn conclusion_restricted_degenerate_cases() {
        let q = Query::named(&["O"], &["Q", "R"]).unwrap();
        let a = answer_strongly_conclusion_restricted(&certain_star(Rational::one()), &q).unwrap();
        assert_eq!((a.lower(), a.upper()), (&Rational::one(), &Rational::one()));
        let a = answer_strongly_conclusion_restricted(&certain_star(ratio(1, 2)), &q).unwrap();
        assert_eq!((a.lower(), a.upper()), (&Rational::zero(), &Rational::one()));
    }

    #[test]
    fn delta_undefined_at_zero_alpha() {
        let t = certain_star(ratio(1, 2));
        let ot = orient(&t, &ev("O")).unwrap();
        assert_eq!(h1_alpha(&ot, &ev("O")).unwrap(), Rational::zero());
        assert!(matches!(h1_delta(&ot, &ev("O")), Err(Error::Precondition(_))));
    }

    #[test]
    fn wrong_query_class_rejected() {
        let t = fixtures::kb_l();
        let q = Query::named(&["O"], &["Q", "R", "S", "T", "U"]).unwrap();
        assert!(answer_premise_restricted_exact(&t, &q).is_err());
        let q = Query::named(&["Q", "R", "S", "T", "U"], &["M"]).unwrap();
        assert!(answer_strongly_conclusion_restricted(&t, &q).is_err());
    }
}
