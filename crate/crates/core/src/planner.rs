//! The full answering pipeline: reduce to a complete query, then dispatch on
//! its class, splitting general queries at an articulation node.

use std::fmt;

use num_traits::{One, Zero};

use crate::error::{Error, Result};
use crate::lp::upper::answer_premise_restricted_general;
use crate::lp::upper::answer_rooted_general;
use crate::model::{BasicEvent, ConjunctiveEvent, TightAnswer};
use crate::propagation::{
    answer_premise_restricted_exact, answer_rooted_conclusion, answer_rooted_exact,
    answer_strongly_conclusion_restricted, h1_alpha, h2_triple,
};
use crate::rational::{format_decimal, Rational};
use crate::tree::{
    implies_all, orient, orient_at, reduce_to_complete, split_at_articulation, validate_query, ConstraintTree,
    Interval, Query, QueryKind,
};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Engine {
    Exact,
    General,
}

impl fmt::Display for Engine {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Engine::Exact => "exact propagation",
            Engine::General => "linear program",
        })
    }
}

/// How the conclusion side of a split was answered.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum SplitRoute {
    ClosedForm,
    SyntheticEdge {
        node: BasicEvent,
    },
    /// `u1 = 0`, `v1 = 1` and `G ⇒ F`.
    Certain,
    Vacuous,
}

#[derive(Clone, Debug, PartialEq, Eq)]
#[allow(clippy::large_enum_variant)]
pub enum Step {
    Reduce {
        removed: Vec<BasicEvent>,
        synonyms: Vec<(BasicEvent, BasicEvent)>,
    },
    PremiseRestricted {
        engine: Engine,
        query: Query,
    },
    ConclusionRestricted {
        query: Query,
    },
    Split {
        articulation: BasicEvent,
        /// `∃(E|G)` on the premise side.
        u: Interval,
        /// `∃(G|E)` on the premise side.
        v: Interval,
        route: SplitRoute,
    },
}

#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct Plan {
    pub steps: Vec<Step>,
}

/// Tight answer to `q` on `t`.
pub fn answer(t: &ConstraintTree, q: &Query) -> Result<TightAnswer> {
    plan_and_answer(t, q).map(|(_, a)| a)
}

pub fn plan_and_answer(t: &ConstraintTree, q: &Query) -> Result<(Plan, TightAnswer)> {
    validate_query(t, q)?;
    let reduction = reduce_to_complete(t, q)?;
    let mut plan = Plan::default();
    let mut trace = vec![format!("query {q} on {} nodes", t.node_count())];
    if !reduction.is_identity() {
        trace.extend(reduction.trace());
        plan.steps.push(Step::Reduce {
            removed: reduction.removed.clone(),
            synonyms: reduction.synonyms.clone(),
        });
    }
    let (t, q) = (&reduction.tree, &reduction.query);
    let class = validate_query(t, q)?;
    debug_assert!(class.complete);
    let sub = match class.kind {
        QueryKind::PremiseRestricted => {
            let engine = if t.is_exact() { Engine::Exact } else { Engine::General };
            plan.steps.push(Step::PremiseRestricted {
                engine,
                query: q.clone(),
            });
            match engine {
                Engine::Exact => answer_premise_restricted_exact(t, q)?,
                Engine::General => answer_premise_restricted_general(t, q)?,
            }
        }
        QueryKind::StronglyConclusionRestricted => {
            plan.steps.push(Step::ConclusionRestricted { query: q.clone() });
            answer_strongly_conclusion_restricted(t, q)?
        }
        QueryKind::General => answer_split(t, q, &mut plan)?,
    };
    trace.extend(sub.trace.iter().cloned());
    let mut out = TightAnswer::new(sub.lower().clone(), sub.upper().clone())?.with_trace(trace);
    out.approximate = sub.approximate;
    Ok((plan, out))
}

fn premise_side_answers(t1: &ConstraintTree, g: &BasicEvent, q: &Query) -> Result<(TightAnswer, TightAnswer)> {
    let gi = t1.node(g)?;
    let g_event = ConjunctiveEvent::basic(g.clone());
    let to_e = Query::new(q.premise.clone(), g_event.clone())?;
    let ot = orient_at(t1, gi);
    let u = if t1.is_exact() {
        answer_rooted_exact(&ot, &to_e)?
    } else {
        answer_rooted_general(&ot, &to_e)?
    };
    let to_g = Query::new(g_event, q.premise.clone())?;
    let v = answer_rooted_conclusion(t1, gi, &to_g)?;
    Ok((u, v))
}

fn answer_split(t: &ConstraintTree, q: &Query, plan: &mut Plan) -> Result<TightAnswer> {
    let split = split_at_articulation(t, q)?;
    let g = &split.articulation;
    let (t1, t2) = (&split.premise_side, &split.conclusion_side);
    let mut trace = vec![format!(
        "split at G = {g}: premise side {} nodes, conclusion side {} nodes",
        t1.node_count(),
        t2.node_count()
    )];
    let (ua, va) = premise_side_answers(t1, g, q)?;
    trace.extend(ua.trace.iter().map(|l| format!("  {l}")));
    trace.extend(va.trace.iter().map(|l| format!("  {l}")));
    let u = Interval::new(ua.lower().clone(), ua.upper().clone());
    let v = Interval::new(va.lower().clone(), va.upper().clone());
    trace.push(format!(
        "u = ({}|{g}) in [{}, {}], v = ({g}|{}) in [{}, {}]",
        q.premise,
        format_decimal(&u.lower, 4),
        format_decimal(&u.upper, 4),
        q.premise,
        format_decimal(&v.lower, 4),
        format_decimal(&v.upper, 4)
    ));
    let mut approximate = ua.approximate;

    let (route, lower, upper) = if u.lower.is_zero() {
        if v.lower.is_one() && implies_all(t, g, &q.conclusion)? {
            trace.push(format!("case u1 = 0, v1 = 1, {g} ⇒ {}: answer [1, 1]", q.conclusion));
            (SplitRoute::Certain, Rational::one(), Rational::one())
        } else {
            trace.push("case u1 = 0 otherwise: answer [0, 1]".to_string());
            (SplitRoute::Vacuous, Rational::zero(), Rational::one())
        }
    } else {
        if v.lower.is_zero() {
            return Err(Error::Precondition(format!("u1 > 0 but v1 = 0 at {g}")));
        }
        if t.is_exact() {
            let ot = orient(t2, g)?;
            let s1 = h1_alpha(&ot, g)?;
            let h = h2_triple(&ot, g)?;
            let (lo, hi) = closed_form_split_exact(&u.lower, &v.lower, &s1, &h.alpha2, &h.gamma2)?;
            trace.push(format!(
                "case u1 > 0, exact closed form with s1 = {}, s2 = {}, t2 = {}",
                format_decimal(&s1, 4),
                format_decimal(&h.alpha2, 4),
                format_decimal(&h.gamma2, 4)
            ));
            (SplitRoute::ClosedForm, lo, hi)
        } else {
            let a = split_via_synthetic_edge(t2, g, &q.conclusion, &u, &v)?;
            let node = a.1;
            trace.push(format!(
                "case u1 > 0, synthetic edge {g} - {node} on the conclusion side"
            ));
            trace.extend(a.0.trace.iter().map(|l| format!("  {l}")));
            approximate |= a.0.approximate;
            (
                SplitRoute::SyntheticEdge { node },
                a.0.lower().clone(),
                a.0.upper().clone(),
            )
        }
    };
    plan.steps.push(Step::Split {
        articulation: g.clone(),
        u,
        v,
        route,
    });
    let mut out = TightAnswer::new(lower, upper)?.with_trace(trace);
    out.approximate = approximate;
    Ok(out)
}

/// Answers `∃(F|B)` on the conclusion side extended by a fresh node `B` with
/// `(B|G)[u1, u2]` and `(G|B)[v1, v2]`, using the linear-program engine.
pub fn split_via_synthetic_edge(
    t2: &ConstraintTree,
    g: &BasicEvent,
    conclusion: &ConjunctiveEvent,
    u: &Interval,
    v: &Interval,
) -> Result<(TightAnswer, BasicEvent)> {
    if u.lower.is_zero() || v.lower.is_zero() {
        return Err(Error::Precondition("synthetic edge needs u1 > 0 and v1 > 0".into()));
    }
    let b = t2.fresh_name(g.name());
    let ext = t2.extend(g, &b, u.clone(), v.clone())?;
    let q = Query::new(conclusion.clone(), ConjunctiveEvent::basic(b.clone()))?;
    Ok((answer_premise_restricted_general(&ext, &q)?, b))
}

/// `[max(0, v1 − v1/u1 + v1·s1/u1), min(1, 1 − v1 + v1·s2/u1, t2/(t2 − s2 + u1))]`
pub fn closed_form_split_exact(
    u1: &Rational,
    v1: &Rational,
    s1: &Rational,
    s2: &Rational,
    t2: &Rational,
) -> Result<(Rational, Rational)> {
    if u1.is_zero() {
        return Err(Error::Precondition("closed form needs u1 > 0".into()));
    }
    let one = Rational::one();
    let lower = (v1 - v1 / u1 + v1 * s1 / u1).max(Rational::zero());
    let denom = t2 - s2 + u1;
    assert!(denom > Rational::zero(), "t2 - s2 + u1 must be positive");
    let upper = one.clone().min(&one - v1 + v1 * s2 / u1).min(t2 / denom);
    Ok((lower, upper))
}

/// The answer followed by its trace.
pub fn explain(answer: &TightAnswer) -> String {
    let mut out = format!("answer {answer}");
    if answer.approximate {
        out.push_str(" (approximate)");
    }
    out.push('\n');
    for line in &answer.trace {
        out.push_str(line);
        out.push('\n');
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fixtures;
    use crate::rational::{parse_rational, ratio};

    fn q(c: &[&str], p: &[&str]) -> Query {
        Query::named(c, p).unwrap()
    }

    #[test]
    fn premise_restricted_dispatch() {
        let (plan, a) = plan_and_answer(&fixtures::kb_l(), &q(&["Q", "R", "S", "T", "U"], &["M"])).unwrap();
        assert_eq!(format_decimal(a.lower(), 4), "0.0169");
        assert_eq!(format_decimal(a.upper(), 4), "0.1722");
        assert!(matches!(
            plan.steps[..],
            [Step::PremiseRestricted {
                engine: Engine::Exact,
                ..
            }]
        ));
    }

    #[test]
    fn split_on_kb_l() {
        let (plan, a) = plan_and_answer(&fixtures::kb_l(), &q(&["S", "T", "U"], &["M", "Q", "R"])).unwrap();
        assert_eq!(format_decimal(a.lower(), 4), "0.1102");
        assert_eq!(a.upper(), &Rational::one());
        match &plan.steps[..] {
            [Step::Split {
                articulation, route, ..
            }] => {
                assert_eq!(articulation.name(), "O");
                assert_eq!(route, &SplitRoute::ClosedForm);
            }
            other => panic!("unexpected plan {other:?}"),
        }
        assert!(explain(&a).contains("G = O"));
    }

    #[test]
    fn closed_form_examples() {
        let p = |s: &str| parse_rational(s).unwrap();
        let (lo, hi) = closed_form_split_exact(
            &p("0.627273"),
            &p("0.926174"),
            &p("0.447368"),
            &p("0.760526"),
            &p("0.760526"),
        )
        .unwrap();
        assert_eq!(format_decimal(&lo, 6), "0.110208");
        assert_eq!(hi, Rational::one());

        let one = Rational::one();
        let (lo, hi) = closed_form_split_exact(&ratio(1, 3), &ratio(2, 5), &one, &one, &one).unwrap();
        assert_eq!((lo, hi), (ratio(2, 5), one.clone()));

        let s = ratio(3, 7);
        let (lo, hi) = closed_form_split_exact(&one, &one, &s, &s, &s).unwrap();
        assert_eq!((lo, hi), (s.clone(), s));

        assert!(closed_form_split_exact(&Rational::zero(), &one, &one, &one, &one).is_err());
    }

    #[test]
    fn closed_form_agrees_with_synthetic_edge() {
        let t = fixtures::kb_l();
        let query = q(&["S", "T", "U"], &["M", "Q", "R"]);
        let split = split_at_articulation(&t, &query).unwrap();
        let g = split.articulation.clone();
        let (ua, va) = premise_side_answers(&split.premise_side, &g, &query).unwrap();
        let u = Interval::new(ua.lower().clone(), ua.upper().clone());
        let v = Interval::new(va.lower().clone(), va.upper().clone());
        let (via_edge, _) = split_via_synthetic_edge(&split.conclusion_side, &g, &query.conclusion, &u, &v).unwrap();
        let closed = answer(&t, &query).unwrap();
        assert!(closed.same_bounds(&via_edge));
    }

    #[test]
    fn star_conclusion_restricted() {
        let a = answer(&fixtures::star(), &q(&["O"], &["Q", "R"])).unwrap();
        assert_eq!((a.lower(), a.upper()), (&ratio(18, 19), &Rational::one()));
    }

    #[test]
    fn reduction_step_recorded() {
        let (plan, _) = plan_and_answer(&fixtures::kb_l(), &q(&["O"], &["Q", "R", "S", "T", "U"])).unwrap();
        assert!(matches!(plan.steps[0], Step::Reduce { .. }));
    }

    #[test]
    fn deterministic() {
        let t = fixtures::right_tree();
        let query = q(&["S", "T", "U"], &["M", "Q", "R"]);
        let a = answer(&t, &query).unwrap();
        let b = answer(&t, &query).unwrap();
        assert_eq!(a, b);
    }
}
