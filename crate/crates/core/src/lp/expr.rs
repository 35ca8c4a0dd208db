//! Sparse linear expressions and min-expressions over per-node variables.

use std::collections::HashSet;
use std::fmt;

use num_traits::{One, Signed, Zero};

use crate::rational::{format_rational, Rational};

/// `Σ c_v · x_v` with nonzero coefficients sorted by variable index.
#[derive(Clone, Debug, Default, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct LinExpr {
    terms: Vec<(usize, Rational)>,
}

impl LinExpr {
    /// The empty expression, standing for the constant 0.
    pub fn zero() -> Self {
        LinExpr { terms: Vec::new() }
    }

    pub fn var(v: usize) -> Self {
        LinExpr::term(v, Rational::one())
    }

    pub fn term(v: usize, c: Rational) -> Self {
        if c.is_zero() {
            LinExpr::zero()
        } else {
            LinExpr { terms: vec![(v, c)] }
        }
    }

    pub fn from_terms(terms: impl IntoIterator<Item = (usize, Rational)>) -> Self {
        terms
            .into_iter()
            .fold(LinExpr::zero(), |acc, (v, c)| acc.add(&LinExpr::term(v, c)))
    }

    pub fn terms(&self) -> &[(usize, Rational)] {
        &self.terms
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn coeff(&self, v: usize) -> Rational {
        match self.terms.binary_search_by_key(&v, |(w, _)| *w) {
            Ok(i) => self.terms[i].1.clone(),
            Err(_) => Rational::zero(),
        }
    }

    pub fn scale(&self, k: &Rational) -> Self {
        if k.is_zero() {
            return LinExpr::zero();
        }
        LinExpr {
            terms: self.terms.iter().map(|(v, c)| (*v, c * k)).collect(),
        }
    }

    pub fn add(&self, other: &LinExpr) -> Self {
        let (a, b) = (&self.terms, &other.terms);
        let mut terms = Vec::with_capacity(a.len() + b.len());
        let (mut i, mut j) = (0, 0);
        while i < a.len() || j < b.len() {
            if j == b.len() || (i < a.len() && a[i].0 < b[j].0) {
                terms.push(a[i].clone());
                i += 1;
            } else if i == a.len() || b[j].0 < a[i].0 {
                terms.push(b[j].clone());
                j += 1;
            } else {
                let c = &a[i].1 + &b[j].1;
                if !c.is_zero() {
                    terms.push((a[i].0, c));
                }
                i += 1;
                j += 1;
            }
        }
        LinExpr { terms }
    }

    pub fn sub(&self, other: &LinExpr) -> Self {
        self.add(&other.scale(&-Rational::one()))
    }

    pub fn eval(&self, point: &[Rational]) -> Rational {
        self.terms.iter().map(|(v, c)| c * &point[*v]).sum()
    }

    /// Every coefficient of `self` is at most the matching one of `other`,
    /// so `self ≤ other` for all nonnegative variables.
    pub fn dominated_by(&self, other: &LinExpr) -> bool {
        let (a, b) = (&self.terms, &other.terms);
        let (mut i, mut j) = (0, 0);
        loop {
            match (a.get(i), b.get(j)) {
                (None, None) => return true,
                (Some((_, c)), None) => {
                    if c.is_positive() {
                        return false;
                    }
                    i += 1;
                }
                (None, Some((_, d))) => {
                    if d.is_negative() {
                        return false;
                    }
                    j += 1;
                }
                (Some((v, c)), Some((w, d))) => {
                    if v < w {
                        if c.is_positive() {
                            return false;
                        }
                        i += 1;
                    } else if w < v {
                        if d.is_negative() {
                            return false;
                        }
                        j += 1;
                    } else {
                        if c > d {
                            return false;
                        }
                        i += 1;
                        j += 1;
                    }
                }
            }
        }
    }

    /// Renders with `names[v]` for variable `v`, e.g. `x_M - x_N + 5/4 x_O`.
    pub fn render(&self, names: &[String]) -> String {
        if self.terms.is_empty() {
            return "0".to_string();
        }
        let mut out = String::new();
        for (k, (v, c)) in self.terms.iter().enumerate() {
            let neg = c.is_negative();
            let mag = c.abs();
            if k == 0 {
                if neg {
                    out.push('-');
                }
            } else {
                out.push_str(if neg { " - " } else { " + " });
            }
            if !mag.is_one() {
                out.push_str(&format_rational(&mag));
                out.push(' ');
            }
            out.push_str(&names[*v]);
        }
        out
    }
}

impl fmt::Display for LinExpr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let top = self.terms.last().map_or(0, |(v, _)| v + 1);
        let names: Vec<String> = (0..top).map(|v| format!("x{v}")).collect();
        f.write_str(&self.render(&names))
    }
}

/// Pointwise minimum of its operands; duplicate-free.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct MinExpr {
    operands: Vec<LinExpr>,
}

impl MinExpr {
    pub fn single(e: LinExpr) -> Self {
        MinExpr { operands: vec![e] }
    }

    pub fn from_operands(operands: impl IntoIterator<Item = LinExpr>) -> Self {
        let mut seen = HashSet::new();
        MinExpr {
            operands: operands.into_iter().filter(|e| seen.insert(e.clone())).collect(),
        }
    }

    pub fn operands(&self) -> &[LinExpr] {
        &self.operands
    }

    pub fn into_operands(self) -> Vec<LinExpr> {
        self.operands
    }

    pub fn len(&self) -> usize {
        self.operands.len()
    }

    pub fn is_empty(&self) -> bool {
        self.operands.is_empty()
    }

    pub fn map(&self, f: impl Fn(&LinExpr) -> LinExpr) -> Self {
        MinExpr::from_operands(self.operands.iter().map(f))
    }

    pub fn union<'a>(parts: impl IntoIterator<Item = &'a MinExpr>) -> Self {
        MinExpr::from_operands(parts.into_iter().flat_map(|m| m.operands.iter().cloned()))
    }

    pub fn eval(&self, point: &[Rational]) -> Rational {
        self.operands
            .iter()
            .map(|e| e.eval(point))
            .min()
            .expect("nonempty min-expression")
    }
}

/// Sign pattern of an expression as bitsets, used to skip hopeless dominance checks.
struct Signature {
    pos: Vec<u64>,
    neg: Vec<u64>,
}

impl Signature {
    fn of(e: &LinExpr, words: usize) -> Self {
        let mut s = Signature {
            pos: vec![0; words],
            neg: vec![0; words],
        };
        for (v, c) in e.terms() {
            let set = if c.is_positive() { &mut s.pos } else { &mut s.neg };
            set[v / 64] |= 1 << (v % 64);
        }
        s
    }

    fn subset(a: &[u64], b: &[u64]) -> bool {
        a.iter().zip(b).all(|(x, y)| x & !y == 0)
    }

    /// Necessary condition for `self` to be dominated by `other`.
    fn may_be_dominated_by(&self, other: &Signature) -> bool {
        Signature::subset(&self.pos, &other.pos) && Signature::subset(&other.neg, &self.neg)
    }
}

/// Drops every operand that is coefficient-wise at least some other operand.
/// Over nonnegative variables the pointwise minimum is unchanged.
pub fn subsume(m: &MinExpr) -> MinExpr {
    let ops = m.operands();
    let words = ops
        .iter()
        .filter_map(|e| e.terms().last().map(|(v, _)| v / 64 + 1))
        .max()
        .unwrap_or(1);
    let sigs: Vec<Signature> = ops.iter().map(|e| Signature::of(e, words)).collect();
    // Fewer terms first: likely dominators are checked early.
    let mut order: Vec<usize> = (0..ops.len()).collect();
    order.sort_by(|&a, &b| {
        ops[a]
            .terms()
            .len()
            .cmp(&ops[b].terms().len())
            .then(ops[a].cmp(&ops[b]))
    });
    let mut kept: Vec<usize> = Vec::new();
    for &i in &order {
        if kept
            .iter()
            .any(|&k| sigs[k].may_be_dominated_by(&sigs[i]) && ops[k].dominated_by(&ops[i]))
        {
            continue;
        }
        kept.retain(|&k| !(sigs[i].may_be_dominated_by(&sigs[k]) && ops[i].dominated_by(&ops[k])));
        kept.push(i);
    }
    kept.sort_unstable();
    MinExpr {
        operands: kept.into_iter().map(|i| ops[i].clone()).collect(),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rational::{int, ratio};

    #[test]
    fn arithmetic() {
        let e = LinExpr::var(0).add(&LinExpr::term(2, ratio(1, 2)));
        let f = LinExpr::var(2).scale(&ratio(1, 2));
        assert_eq!(e.sub(&f), LinExpr::var(0));
        assert!(e.sub(&e).is_zero());
        assert_eq!(e.coeff(2), ratio(1, 2));
        assert_eq!(e.coeff(1), int(0));
        assert_eq!(e.eval(&[int(2), int(7), int(4)]), int(4));
    }

    #[test]
    fn rendering() {
        let names: Vec<String> = ["x_M", "x_N", "x_O"].iter().map(|s| s.to_string()).collect();
        let e = LinExpr::from_terms([(0, int(1)), (1, int(-1)), (2, ratio(5, 4))]);
        assert_eq!(e.render(&names), "x_M - x_N + 5/4 x_O");
        assert_eq!(LinExpr::term(1, ratio(-1, 4)).render(&names), "-1/4 x_N");
        assert_eq!(LinExpr::zero().render(&names), "0");
    }

    #[test]
    fn dominance() {
        let b = LinExpr::var(0);
        let bc = LinExpr::var(0).add(&LinExpr::var(1));
        assert!(b.dominated_by(&bc));
        assert!(!bc.dominated_by(&b));
        let m = subsume(&MinExpr::from_operands([bc.clone(), b.clone()]));
        assert_eq!(m.operands(), std::slice::from_ref(&b));

        let half = LinExpr::term(0, ratio(1, 2)).add(&LinExpr::var(1));
        let m = MinExpr::from_operands([b.clone(), half]);
        assert_eq!(subsume(&m), m);

        // negative coefficients: x_0 - x_1 is below x_0
        let d = LinExpr::var(0).sub(&LinExpr::var(1));
        assert_eq!(
            subsume(&MinExpr::from_operands([b.clone(), d.clone()])).operands(),
            &[d]
        );
        // the zero expression is below anything with nonnegative coefficients
        assert_eq!(
            subsume(&MinExpr::from_operands([b, LinExpr::zero()])).operands(),
            &[LinExpr::zero()]
        );
    }

    #[test]
    fn duplicates_collapse() {
        let m = MinExpr::from_operands([LinExpr::var(3), LinExpr::var(3)]);
        assert_eq!(m.len(), 1);
    }

    #[test]
    fn wide_signatures() {
        let a = LinExpr::var(130);
        let b = LinExpr::var(130).add(&LinExpr::var(5));
        assert_eq!(subsume(&MinExpr::from_operands([b, a.clone()])).operands(), &[a]);
    }
}
