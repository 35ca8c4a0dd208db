//! Ground truth over atomic events: the classical linear program with one
//! variable per world, positive models of trees, and the 3-colorability encoding.

use std::collections::{BTreeMap, BTreeSet};
use std::sync::Arc;

use num_traits::{One, Zero};

use crate::error::{Error, Result};
use crate::lp::expr::LinExpr;
use crate::lp::program::{Constraint, LinearProgram, LpOutcome, LpStatus, Relation, Sense};
use crate::lp::simplex::{solve_float, solve_lp};
use crate::model::{
    BasicEvent, ConditionalConstraint, ConjunctiveEvent, Domain, Interpretation, KnowledgeBase, TightAnswer,
};
use crate::rational::{format_decimal, ratio, Probability, Rational};
use crate::tree::{orient_at, ConstraintTree, Query};

/// Largest event count for which the classical program is built.
pub const WORLD_CAP: usize = 20;

/// Programs over at most this many worlds are solved exactly.
pub const EXACT_WORLDS: u64 = 4096;

fn domain_for(kb: &KnowledgeBase, extra: &[&ConjunctiveEvent], cap: usize) -> Result<Arc<Domain>> {
    let mut events: BTreeSet<BasicEvent> = kb.events().clone();
    for e in extra {
        events.extend(e.atoms().cloned());
    }
    if events.len() > cap {
        return Err(Error::WorldCap {
            events: events.len(),
            cap,
        });
    }
    Ok(Arc::new(Domain::new(events)?))
}

/// `Σ x_A` over the worlds `A` that satisfy every atom in `mask`.
fn mass_of(worlds: u64, mask: u64) -> LinExpr {
    LinExpr::from_terms(
        (0..worlds)
            .filter(|a| a & mask == mask)
            .map(|a| (a as usize, Rational::one())),
    )
}

fn world_names(domain: &Domain) -> Vec<String> {
    let n = domain.len();
    (0..domain.world_count())
        .map(|a| {
            let bits: String = (0..n).map(|i| if a >> i & 1 == 1 { '1' } else { '0' }).collect();
            format!("w{bits}")
        })
        .collect()
}

fn constraint_rows(domain: &Domain, kb: &KnowledgeBase) -> Result<Vec<Constraint>> {
    let worlds = domain.world_count();
    let mut rows = Vec::with_capacity(2 * kb.constraints().len());
    for c in kb.constraints() {
        let g = domain.mask(&c.premise)?;
        let gh = g | domain.mask(&c.conclusion)?;
        let (pg, pgh) = (mass_of(worlds, g), mass_of(worlds, gh));
        rows.push(Constraint::le(&pg.scale(c.lower.value()), &pgh));
        rows.push(Constraint::le(&pgh, &pg.scale(c.upper.value())));
    }
    Ok(rows)
}

/// Optimizes `Pr(EF)` subject to `Pr(E) = 1` and the constraints of `kb`,
/// over one nonnegative variable per world.
pub fn build_classical_lp(kb: &KnowledgeBase, q: &Query, sense: Sense) -> Result<LinearProgram> {
    build_classical_lp_capped(kb, q, sense, WORLD_CAP)
}

pub fn build_classical_lp_capped(kb: &KnowledgeBase, q: &Query, sense: Sense, cap: usize) -> Result<LinearProgram> {
    let domain = domain_for(kb, &[&q.premise, &q.conclusion], cap)?;
    let worlds = domain.world_count();
    let e = domain.mask(&q.premise)?;
    let ef = e | domain.mask(&q.conclusion)?;
    let mut lp = LinearProgram::new(world_names(&domain), sense, mass_of(worlds, ef));
    lp.push(Constraint::new(mass_of(worlds, e), Relation::Eq, Rational::one()));
    lp.constraints.extend(constraint_rows(&domain, kb)?);
    Ok(lp)
}

/// Inequalities of a program, counting an equation as two.
pub fn inequality_count(lp: &LinearProgram) -> usize {
    lp.constraints
        .iter()
        .map(|c| if c.relation == Relation::Eq { 2 } else { 1 })
        .sum()
}

fn solve_by_size(lp: &LinearProgram) -> Result<LpOutcome> {
    if lp.var_count() as u64 <= EXACT_WORLDS {
        solve_lp(lp)
    } else {
        solve_float(lp)
    }
}

/// Tight answer by the classical program; `[1, 0]` when no model gives `E`
/// positive probability.
pub fn oracle_answer(kb: &KnowledgeBase, q: &Query) -> Result<TightAnswer> {
    oracle_answer_capped(kb, q, WORLD_CAP)
}

pub fn oracle_answer_capped(kb: &KnowledgeBase, q: &Query, cap: usize) -> Result<TightAnswer> {
    let min = build_classical_lp_capped(kb, q, Sense::Minimize, cap)?;
    let max = build_classical_lp_capped(kb, q, Sense::Maximize, cap)?;
    let header = format!(
        "oracle: classical program over {} worlds with {} inequalities",
        min.var_count(),
        inequality_count(&min)
    );
    let lo = solve_by_size(&min)?;
    if lo.status == LpStatus::Infeasible {
        let mut a =
            TightAnswer::empty_consequence().with_trace(vec![header, "oracle: Pr(E) = 0 in every model".into()]);
        a.approximate = lo.approximate;
        return Ok(a);
    }
    let hi = solve_by_size(&max)?;
    let (Some(l), Some(u)) = (lo.value, hi.value) else {
        return Err(Error::MalformedLp("classical program has no optimum".into()));
    };
    let trace = vec![
        header,
        format!(
            "oracle: minimum {} and maximum {}",
            format_decimal(&l, 4),
            format_decimal(&u, 4)
        ),
    ];
    let approximate = lo.approximate || hi.approximate;
    let (l, u) = if approximate { clamp_float_bounds(l, u) } else { (l, u) };
    let mut a = TightAnswer::new(l, u)?.with_trace(trace);
    a.approximate = approximate;
    Ok(a)
}

/// Float optima can land a rounding step outside `[0, 1]` or cross each other.
fn clamp_float_bounds(l: Rational, u: Rational) -> (Rational, Rational) {
    let unit = |x: Rational| x.max(Rational::zero()).min(Rational::one());
    let (l, u) = (unit(l), unit(u));
    if l > u {
        (u.clone(), u)
    } else {
        (l, u)
    }
}

fn feasible(domain: &Domain, kb: &KnowledgeBase, anchor: u64) -> Result<bool> {
    let worlds = domain.world_count();
    let mut lp = LinearProgram::new(world_names(domain), Sense::Maximize, LinExpr::zero());
    lp.push(Constraint::new(mass_of(worlds, anchor), Relation::Eq, Rational::one()));
    lp.constraints.extend(constraint_rows(domain, kb)?);
    Ok(solve_by_size(&lp)?.status == LpStatus::Optimal)
}

/// Some probability distribution satisfies every constraint. The all-false
/// world alone satisfies any knowledge base without `⊤` premises.
pub fn satisfiable(kb: &KnowledgeBase) -> Result<bool> {
    let domain = domain_for(kb, &[], WORLD_CAP)?;
    feasible(&domain, kb, 0)
}

/// Some model gives `premise` positive probability, i.e. `∃(premise|premise)` has answer `[1, 1]`.
pub fn satisfiable_given(kb: &KnowledgeBase, premise: &ConjunctiveEvent) -> Result<bool> {
    let domain = domain_for(kb, &[premise], WORLD_CAP)?;
    let mask = domain.mask(premise)?;
    feasible(&domain, kb, mask)
}

/// `Pr_s(A) = s·Pr(A)` for every world except the all-false one, which takes the rest.
pub fn rescale_model(pr: &Interpretation, s: &Rational) -> Result<Interpretation> {
    if *s < Rational::zero() || *s > Rational::one() {
        return Err(Error::OutOfRange(s.to_string()));
    }
    let mut masses: Vec<(u64, Rational)> = pr.masses().iter().map(|(&a, m)| (a, m * s)).collect();
    masses.push((0, Rational::one() - s));
    Interpretation::new(pr.domain().clone(), masses)
}

/// Model of a single edge with `Pr(C|B) = u`, `Pr(B|C) = v`, both positive,
/// as masses of `(B̄C̄, BC̄, B̄C, BC)`.
pub fn edge_model(u: &Rational, v: &Rational) -> [Rational; 4] {
    let uv = u * v;
    let total = u + v;
    [&uv / &total, (v - &uv) / &total, (u - &uv) / &total, uv / total]
}

/// Builds a model of the tree in which every event holds together with
/// positive probability. Lower endpoints are used as exact values.
pub fn construct_positive_model(t: &ConstraintTree) -> Result<Interpretation> {
    let domain = domain_for(t.kb(), &[], WORLD_CAP)?;
    let bit = |v: usize| -> Result<u64> { Ok(1u64 << domain.position(t.name(v))?) };
    let ot = orient_at(t, 0);
    let mut current: BTreeMap<u64, Rational> = BTreeMap::from([(bit(0)?, Rational::one())]);
    for &c in ot.order().iter().rev().skip(1) {
        let b = ot.parent(c).expect("non-root");
        let (bb, cb) = (bit(b)?, bit(c)?);
        let u = &ot.forward(c).lower;
        let v = &ot.backward(c).lower;
        let mut edge = edge_model(u, v);
        let p1: Rational = current.iter().filter(|(a, _)| *a & bb != 0).map(|(_, m)| m).sum();
        let p2 = &edge[1] + &edge[3];
        if p1 > p2 {
            let s = &p2 / &p1;
            for m in current.values_mut() {
                *m *= &s;
            }
            *current.entry(0).or_insert_with(Rational::zero) += Rational::one() - s;
        } else if p2 > p1 {
            let s = &p1 / &p2;
            for m in edge.iter_mut() {
                *m *= &s;
            }
            edge[0] += Rational::one() - s;
        }
        // Pr(A, c) = Pr1(A)·Pr2(b(A), c)/Pr2(b(A))
        let pb = &edge[1] + &edge[3];
        let pnb = &edge[0] + &edge[2];
        let mut next = BTreeMap::new();
        for (a, m) in current {
            let (with_c, without_c, marginal) = if a & bb != 0 {
                (&edge[3], &edge[1], &pb)
            } else {
                (&edge[2], &edge[0], &pnb)
            };
            for (world, part) in [(a | cb, with_c), (a, without_c)] {
                let mass = &m * part / marginal;
                if !mass.is_zero() {
                    next.insert(world, mass);
                }
            }
        }
        current = next;
    }
    let pr = Interpretation::new(domain, current)?;
    debug_assert!(crate::model::check_kb(&pr, t.kb())?.is_empty());
    Ok(pr)
}

/// Finite undirected graph without self-loops.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct Graph {
    vertices: BTreeSet<String>,
    edges: BTreeSet<(String, String)>,
}

impl Graph {
    pub fn new() -> Self {
        Graph::default()
    }

    pub fn add_vertex(&mut self, v: &str) -> Result<()> {
        BasicEvent::new(format!("B_{v}_1"))?;
        self.vertices.insert(v.to_string());
        Ok(())
    }

    pub fn add_edge(&mut self, a: &str, b: &str) -> Result<()> {
        for v in [a, b] {
            if !self.vertices.contains(v) {
                return Err(Error::UnknownEvent(v.to_string()));
            }
        }
        if a == b {
            return Err(Error::Precondition(format!("self-loop at {a}")));
        }
        let (x, y) = if a < b { (a, b) } else { (b, a) };
        self.edges.insert((x.to_string(), y.to_string()));
        Ok(())
    }

    pub fn vertices(&self) -> &BTreeSet<String> {
        &self.vertices
    }

    pub fn edges(&self) -> &BTreeSet<(String, String)> {
        &self.edges
    }

    /// Complete graph on `k` vertices named `v1 … vk`.
    pub fn complete(k: usize) -> Self {
        let mut g = Graph::new();
        let names: Vec<String> = (1..=k).map(|i| format!("v{i}")).collect();
        for v in &names {
            g.add_vertex(v).expect("valid name");
        }
        for i in 0..k {
            for j in i + 1..k {
                g.add_edge(&names[i], &names[j]).expect("declared");
            }
        }
        g
    }

    /// `v <name>` and `e <name> <name>` lines; `#` starts a comment.
    pub fn parse(text: &str) -> Result<Self> {
        let mut g = Graph::new();
        for (i, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("");
            let words: Vec<&str> = line.split_whitespace().collect();
            let err = |message: String| Error::Parse {
                line: i + 1,
                column: 1,
                message,
            };
            match words.as_slice() {
                [] => {}
                ["v", name] => g.add_vertex(name).map_err(|e| err(e.to_string()))?,
                ["e", a, b] => g.add_edge(a, b).map_err(|e| err(e.to_string()))?,
                _ => {
                    return Err(err(format!(
                        "expected `v <name>` or `e <name> <name>`, found `{}`",
                        line.trim()
                    )))
                }
            }
        }
        Ok(g)
    }

    /// Brute-force search over all colorings.
    pub fn is_3_colorable(&self) -> bool {
        let names: Vec<&String> = self.vertices.iter().collect();
        let index: BTreeMap<&String, usize> = names.iter().enumerate().map(|(i, v)| (*v, i)).collect();
        let edges: Vec<(usize, usize)> = self.edges.iter().map(|(a, b)| (index[a], index[b])).collect();
        let n = names.len();
        let mut color = vec![0u8; n];
        let total = 3u64.pow(n as u32);
        (0..total).any(|mut code| {
            for c in color.iter_mut() {
                *c = (code % 3) as u8;
                code /= 3;
            }
            edges.iter().all(|&(a, b)| color[a] != color[b])
        })
    }
}

fn color_event(v: &str, i: usize) -> BasicEvent {
    BasicEvent::new(format!("B_{v}_{i}")).expect("checked when the vertex was added")
}

/// Knowledge base that has a model with `Pr(B) > 0` iff `g` is 3-colorable.
pub fn encode_3col(g: &Graph) -> KnowledgeBase {
    let b = BasicEvent::new("B").expect("valid name");
    let basic = |e: &BasicEvent| ConjunctiveEvent::basic(e.clone());
    let point = |value: Rational| Probability::new(value).expect("unit interval");
    let constraint = |h: &BasicEvent, g: &BasicEvent, value: Rational| {
        ConditionalConstraint::new(basic(h), basic(g), point(value.clone()), point(value)).expect("point interval")
    };
    let mut events = vec![b.clone()];
    let mut constraints = Vec::new();
    for v in g.vertices() {
        let colors: Vec<BasicEvent> = (1..=3).map(|i| color_event(v, i)).collect();
        for c in &colors {
            constraints.push(constraint(&b, c, Rational::one()));
            constraints.push(constraint(c, &b, ratio(1, 3)));
        }
        for i in 0..3 {
            for j in i + 1..3 {
                constraints.push(constraint(&colors[j], &colors[i], Rational::zero()));
            }
        }
        events.extend(colors);
    }
    for (u, v) in g.edges() {
        for i in 1..=3 {
            constraints.push(constraint(&color_event(v, i), &color_event(u, i), Rational::zero()));
        }
    }
    KnowledgeBase::new(events, constraints).expect("events declared")
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fixtures;
    use crate::model::{check_kb, prob_of};
    use crate::rational::int;

    fn tweety() -> KnowledgeBase {
        KnowledgeBase::from_constraints(vec![
            ConditionalConstraint::point("bird", "ostrich", int(1)).unwrap(),
            ConditionalConstraint::new(
                ConjunctiveEvent::basic(BasicEvent::new("bird").unwrap()),
                ConjunctiveEvent::Top,
                Probability::new(ratio(9, 10)).unwrap(),
                Probability::one(),
            )
            .unwrap(),
            ConditionalConstraint::between("ostrich", "bird", ratio(4, 5), int(1)).unwrap(),
        ])
        .unwrap()
    }

    #[test]
    fn tweety_answer() {
        let q = Query::new(
            ConjunctiveEvent::from_names(&["ostrich"]).unwrap(),
            ConjunctiveEvent::Top,
        )
        .unwrap();
        let lp = build_classical_lp(&tweety(), &q, Sense::Minimize).unwrap();
        assert_eq!(lp.var_count(), 4);
        let a = oracle_answer(&tweety(), &q).unwrap();
        assert_eq!((a.lower(), a.upper()), (&ratio(18, 25), &int(1)));
        assert!(!a.approximate);
    }

    #[test]
    fn kb_l_program_size_and_answer() {
        let t = fixtures::kb_l();
        let q = Query::named(&["Q", "R", "S", "T", "U"], &["M"]).unwrap();
        let lp = build_classical_lp(t.kb(), &q, Sense::Maximize).unwrap();
        assert_eq!((lp.var_count(), inequality_count(&lp)), (512, 34));
        let a = oracle_answer(t.kb(), &q).unwrap();
        assert_eq!(format_decimal(a.lower(), 4), "0.0169");
        assert_eq!(format_decimal(a.upper(), 4), "0.1722");
    }

    #[test]
    fn empty_consequence() {
        let kb = KnowledgeBase::from_constraints(vec![ConditionalConstraint::new(
            ConjunctiveEvent::from_names(&["B"]).unwrap(),
            ConjunctiveEvent::Top,
            Probability::zero(),
            Probability::zero(),
        )
        .unwrap()])
        .unwrap();
        let a = oracle_answer(&kb, &Query::named(&["C"], &["B"]).unwrap()).unwrap();
        assert!(a.empty_consequence);
        assert_eq!((a.lower(), a.upper()), (&int(1), &int(0)));
    }

    #[test]
    fn cap_enforced() {
        let t = fixtures::kb_l();
        let q = Query::named(&["Q"], &["M"]).unwrap();
        assert!(matches!(
            build_classical_lp_capped(t.kb(), &q, Sense::Maximize, 8),
            Err(Error::WorldCap { events: 9, cap: 8 })
        ));
    }

    #[test]
    fn positive_models() {
        for t in [fixtures::kb_l(), fixtures::right_tree(), fixtures::star()] {
            let pr = construct_positive_model(&t).unwrap();
            assert!(check_kb(&pr, t.kb()).unwrap().is_empty());
            let all = ConjunctiveEvent::new(t.names().iter().cloned()).unwrap();
            assert!(prob_of(&pr, &all).unwrap() > Rational::zero());
        }
    }

    #[test]
    fn single_edge_and_rescaling() {
        let kb = KnowledgeBase::from_constraints(vec![
            ConditionalConstraint::point("C", "B", int(1)).unwrap(),
            ConditionalConstraint::point("B", "C", int(1)).unwrap(),
        ])
        .unwrap();
        let t = crate::tree::validate_tree(&kb).unwrap();
        let pr = construct_positive_model(&t).unwrap();
        let expected: BTreeMap<u64, Rational> = BTreeMap::from([(0, ratio(1, 2)), (3, ratio(1, 2))]);
        assert_eq!(pr.masses(), &expected);

        let half = rescale_model(&pr, &ratio(1, 2)).unwrap();
        assert_eq!(half.masses(), &BTreeMap::from([(0, ratio(3, 4)), (3, ratio(1, 4))]));
        assert!(check_kb(&half, &kb).unwrap().is_empty());
        assert_eq!(rescale_model(&pr, &int(1)).unwrap(), pr);
        assert_eq!(
            rescale_model(&pr, &int(0)).unwrap(),
            Interpretation::trivial(pr.domain().clone())
        );
        assert!(rescale_model(&pr, &ratio(3, 2)).is_err());
    }

    #[test]
    fn three_coloring_encoding() {
        let empty = encode_3col(&Graph::new());
        assert_eq!(empty.events().len(), 1);
        assert!(empty.constraints().is_empty());

        let triangle = encode_3col(&Graph::complete(3));
        assert_eq!((triangle.events().len(), triangle.constraints().len()), (10, 36));
        let k4 = encode_3col(&Graph::complete(4));
        assert_eq!((k4.events().len(), k4.constraints().len()), (13, 54));

        let b = ConjunctiveEvent::from_names(&["B"]).unwrap();
        assert!(satisfiable_given(&triangle, &b).unwrap());
        // the all-false world satisfies every conditional constraint
        assert!(satisfiable(&triangle).unwrap());
    }

    #[test]
    fn graph_parsing() {
        let g = Graph::parse("# square\nv a\nv b\nv c\nv d\ne a b\ne b c\ne c d\ne d a\n").unwrap();
        assert_eq!(g.edges().len(), 4);
        assert!(g.is_3_colorable());
        assert!(!Graph::complete(4).is_3_colorable());
        assert!(matches!(
            Graph::parse("v a\ne a z\n"),
            Err(Error::Parse { line: 2, .. })
        ));
        assert!(Graph::parse("v a\ne a a\n").is_err());
        assert!(Graph::parse("x y\n").is_err());
    }
}
