//! Least upper bounds on general trees via a linear program.
//!
//! Each node `G` gets a variable `x_G` standing for `Pr(G)/Pr(E)` along one
//! choice of forward probabilities; the J constraints pin `x_E = 1` and keep
//! every child within its forward interval of the parent. The min-expressions
//! Jα, Jβ, Jγ are built bottom-up, and the operands of Jα and Jγ at the root
//! become upper bounds on the objective `x`.

use num_traits::One;

use crate::error::{Error, Result};
use crate::lp::expr::{subsume, LinExpr, MinExpr};
use crate::lp::program::{Constraint, LinearProgram, LpOutcome, LpStatus, Relation, Sense};
use crate::lp::simplex::solve_exact_rowgen;
use crate::model::TightAnswer;
use crate::propagation::{h1_alpha_all, premise_restricted_root};
use crate::rational::{format_decimal, format_rational, Rational};
use crate::tree::{orient_at, ConstraintTree, OrientedTree, Query};

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct MinTriple {
    pub alpha: MinExpr,
    pub beta: MinExpr,
    pub gamma: MinExpr,
}

/// LP variable of node `v`; the objective variable `x` comes after all nodes.
pub fn node_var(v: usize) -> usize {
    v
}

pub fn objective_var(ot: &OrientedTree<'_>) -> usize {
    ot.tree().node_count()
}

pub fn variable_names(t: &ConstraintTree) -> Vec<String> {
    t.names()
        .iter()
        .map(|e| format!("x_{e}"))
        .chain(std::iter::once("x".to_string()))
        .collect()
}

/// `1 ≤ x_E ≤ 1` plus `u1·x_G ≤ x_H ≤ u2·x_G` for every arrow `G → H`; 2n inequalities.
pub fn build_j_constraints(ot: &OrientedTree<'_>) -> Vec<Constraint> {
    let root = LinExpr::var(node_var(ot.root()));
    let mut out = vec![
        Constraint::new(root.clone(), Relation::Ge, Rational::one()),
        Constraint::new(root, Relation::Le, Rational::one()),
    ];
    let mut nodes: Vec<usize> = ot.order().iter().copied().filter(|&v| v != ot.root()).collect();
    nodes.reverse();
    for h in nodes {
        let g = ot.parent(h).expect("non-root");
        let iv = ot.forward(h);
        let (xg, xh) = (LinExpr::var(node_var(g)), LinExpr::var(node_var(h)));
        out.push(Constraint::le(&xg.scale(&iv.lower), &xh));
        out.push(Constraint::le(&xh, &xg.scale(&iv.upper)));
    }
    out
}

fn chain_triple(b: usize, c: usize, child_is_leaf: bool, v: &Rational, child: &MinTriple) -> MinTriple {
    let inv = v.recip();
    let (xb, xc) = (LinExpr::var(node_var(b)), LinExpr::var(node_var(c)));
    let alpha = if child_is_leaf {
        MinExpr::single(xc.clone())
    } else {
        let via_beta = child.beta.operands().iter().map(|e| xc.add(&e.scale(&inv)));
        let via_alpha = child.alpha.operands().iter().map(|e| xb.sub(&xc).add(&e.scale(&inv)));
        MinExpr::from_operands(std::iter::once(xb.clone()).chain(via_beta).chain(via_alpha))
    };
    let lead = xc.scale(&((Rational::one() - v) / v));
    MinTriple {
        alpha,
        beta: child.beta.map(|e| lead.add(&e.scale(&inv))),
        gamma: child.gamma.map(|e| e.scale(&inv)),
    }
}

fn fuse_triples(chained: &[MinTriple]) -> MinTriple {
    let alpha = MinExpr::union(chained.iter().map(|t| &t.alpha));
    let beta = MinExpr::union(chained.iter().map(|t| &t.beta));
    let mut gamma: Vec<LinExpr> = chained
        .iter()
        .flat_map(|t| t.gamma.operands().iter().cloned())
        .collect();
    for (i, ti) in chained.iter().enumerate() {
        for (j, tj) in chained.iter().enumerate() {
            if i != j {
                for a in ti.alpha.operands() {
                    gamma.extend(tj.beta.operands().iter().map(|b| a.add(b)));
                }
            }
        }
    }
    MinTriple {
        alpha,
        beta,
        gamma: MinExpr::from_operands(gamma),
    }
}

/// Jα, Jβ, Jγ at every node, bottom-up, using lower backward endpoints.
/// With `prune`, each node's sets are reduced by [`subsume`] before use,
/// which leaves the root minimum unchanged on the J-feasible region.
pub fn build_minexpr_triples(ot: &OrientedTree<'_>, prune: bool) -> Vec<MinTriple> {
    let n = ot.tree().node_count();
    let mut values: Vec<Option<MinTriple>> = vec![None; n];
    for &b in ot.order() {
        let children = ot.children(b);
        let chained: Vec<MinTriple> = children
            .iter()
            .map(|&c| {
                let child = values[c].as_ref().expect("child first");
                chain_triple(b, c, ot.is_leaf(c), &ot.backward(c).lower, child)
            })
            .collect();
        let mut triple = match chained.len() {
            0 => {
                let xb = LinExpr::var(node_var(b));
                MinTriple {
                    alpha: MinExpr::single(xb.clone()),
                    beta: MinExpr::single(LinExpr::zero()),
                    gamma: MinExpr::single(xb),
                }
            }
            1 => chained.into_iter().next().expect("one child"),
            _ => fuse_triples(&chained),
        };
        if prune {
            triple = MinTriple {
                alpha: subsume(&triple.alpha),
                beta: subsume(&triple.beta),
                gamma: subsume(&triple.gamma),
            };
        }
        values[b] = Some(triple);
    }
    values.into_iter().map(|v| v.expect("every node visited")).collect()
}

/// Operand counts of Jα, Jβ, Jγ per node as generated, before any
/// deduplication or subsumption. Without `leaf_collapse`, chaining onto a
/// leaf counts all three Jα operands instead of the single `x_C`.
pub fn raw_operand_counts(ot: &OrientedTree<'_>, leaf_collapse: bool) -> Vec<(u128, u128, u128)> {
    let mut counts = vec![(0u128, 0u128, 0u128); ot.tree().node_count()];
    for &b in ot.order() {
        let chained: Vec<(u128, u128, u128)> = ot
            .children(b)
            .iter()
            .map(|&c| {
                let (a, be, g) = counts[c];
                let a = if leaf_collapse && ot.is_leaf(c) { 1 } else { 1 + be + a };
                (a, be, g)
            })
            .collect();
        counts[b] = match chained.len() {
            0 => (1, 1, 1),
            1 => chained[0],
            _ => {
                let a = chained.iter().map(|t| t.0).sum();
                let be = chained.iter().map(|t| t.1).sum();
                let mut g: u128 = chained.iter().map(|t| t.2).sum();
                for (i, ti) in chained.iter().enumerate() {
                    for (j, tj) in chained.iter().enumerate() {
                        if i != j {
                            g += ti.0 * tj.1;
                        }
                    }
                }
                (a, be, g)
            }
        };
    }
    counts
}

/// Sizes of the generated upper-bound program.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct LpCounts {
    pub nodes: usize,
    pub j_constraints: usize,
    /// Operands of Jα and Jγ at the root as generated.
    pub raw_bounds: u128,
    /// Bound inequalities after subsumption.
    pub bounds: usize,
}

impl LpCounts {
    /// J constraints plus generated bound inequalities.
    pub fn generated(&self) -> u128 {
        self.j_constraints as u128 + self.raw_bounds
    }

    /// J constraints plus bound inequalities that survive subsumption.
    pub fn after_subsumption(&self) -> usize {
        self.j_constraints + self.bounds
    }

    /// `2n + n² + n⁴`
    pub fn upper_limit(&self) -> u128 {
        let n = self.nodes as u128;
        2 * n + n * n + n.pow(4)
    }
}

#[derive(Clone, Debug)]
pub struct UpperLp {
    pub program: LinearProgram,
    pub bounds: Vec<LinExpr>,
    pub counts: LpCounts,
}

impl UpperLp {
    /// Exact optimum, starting from the J constraints and one bound.
    pub fn solve(&self) -> Result<LpOutcome> {
        let first_bound = self.bounds.len().min(1);
        let seed: Vec<usize> = (0..first_bound)
            .chain(self.bounds.len()..self.program.constraints.len())
            .collect();
        solve_exact_rowgen(&self.program, &seed)
    }
}

/// `maximize x` subject to `x ≤ e` for each operand `e` of the subsumed Jα
/// and Jγ at the root, and the J constraints.
pub fn assemble_upper_lp(ot: &OrientedTree<'_>) -> UpperLp {
    let t = ot.tree();
    let triples = build_minexpr_triples(ot, true);
    let root = &triples[ot.root()];
    let mut bounds: Vec<LinExpr> = MinExpr::union([&root.alpha, &root.gamma]).into_operands();
    bounds.sort();
    let (raw_a, _, raw_g) = raw_operand_counts(ot, true)[ot.root()];
    let x = LinExpr::var(objective_var(ot));
    let mut program = LinearProgram::new(variable_names(t), Sense::Maximize, x.clone());
    for e in &bounds {
        program.push(Constraint::le(&x, e));
    }
    let j = build_j_constraints(ot);
    let counts = LpCounts {
        nodes: t.node_count(),
        j_constraints: j.len(),
        raw_bounds: raw_a + raw_g,
        bounds: bounds.len(),
    };
    program.constraints.extend(j);
    UpperLp {
        program,
        bounds,
        counts,
    }
}

/// `[α1(E), X2]` for a premise-restricted query whose conclusion is the leaf
/// set seen from `E`, on any tree.
pub fn answer_premise_restricted_general(t: &ConstraintTree, q: &Query) -> Result<TightAnswer> {
    let root = premise_restricted_root(t, q)?;
    answer_rooted_general(&orient_at(t, root), q)
}

pub(crate) fn answer_rooted_general(ot: &OrientedTree<'_>, q: &Query) -> Result<TightAnswer> {
    let lower = h1_alpha_all(ot).swap_remove(ot.root());
    let lp = assemble_upper_lp(ot);
    let out = lp.solve()?;
    if out.status != LpStatus::Optimal {
        return Err(Error::MalformedLp(format!("upper-bound program is {:?}", out.status)));
    }
    let upper = out.value.expect("optimal value");
    let c = &lp.counts;
    let trace = vec![
        format!(
            "premise-restricted {q}: general engine rooted at {}",
            ot.tree().name(ot.root())
        ),
        format!(
            "lower bound α1 = {} (~{})",
            format_rational(&lower),
            format_decimal(&lower, 4)
        ),
        format!(
            "upper bound LP: {} variables, {} J constraints, {} generated bound inequalities, {} after subsumption",
            lp.program.var_count(),
            c.j_constraints,
            c.raw_bounds,
            c.bounds
        ),
        format!(
            "LP optimum = {} (~{})",
            format_rational(&upper),
            format_decimal(&upper, 4)
        ),
    ];
    let mut answer = TightAnswer::new(lower, upper)?.with_trace(trace);
    answer.approximate = out.approximate;
    Ok(answer)
}

/// Upper-bound program for a premise-restricted query, for dumping.
pub fn upper_lp_for(t: &ConstraintTree, q: &Query) -> Result<UpperLp> {
    let root = premise_restricted_root(t, q)?;
    Ok(assemble_upper_lp(&orient_at(t, root)))
}

/// Value of the root minimum `min(Jα, Jγ)` at a point, for tests.
pub fn root_bound_at(triples: &[MinTriple], root: usize, point: &[Rational]) -> Rational {
    let r = &triples[root];
    r.alpha.eval(point).min(r.gamma.eval(point))
}
