//! Linear programs over named variables and their textual dump.

use std::fmt;

use num_traits::{One, Signed, Zero};

use crate::error::{Error, Result};
use crate::lp::expr::LinExpr;
use crate::rational::{format_rational, Rational};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Relation {
    Le,
    Eq,
    Ge,
}

impl fmt::Display for Relation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Relation::Le => "<=",
            Relation::Eq => "=",
            Relation::Ge => ">=",
        })
    }
}

/// `lhs REL rhs`
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct Constraint {
    pub lhs: LinExpr,
    pub relation: Relation,
    pub rhs: Rational,
}

impl Constraint {
    pub fn new(lhs: LinExpr, relation: Relation, rhs: Rational) -> Self {
        Constraint { lhs, relation, rhs }
    }

    /// `a ≤ b` as `a − b ≤ 0`.
    pub fn le(a: &LinExpr, b: &LinExpr) -> Self {
        Constraint::new(a.sub(b), Relation::Le, Rational::zero())
    }

    /// Homogeneous rows print as `positive part REL negated negative part`,
    /// so `x - x_M <= 0` reads `x <= x_M`.
    pub fn render(&self, names: &[String]) -> String {
        let (pos, neg): (Vec<_>, Vec<_>) = self.lhs.terms().iter().cloned().partition(|(_, c)| c.is_positive());
        if !self.rhs.is_zero() || pos.is_empty() || neg.is_empty() {
            return format!(
                "{} {} {}",
                self.lhs.render(names),
                self.relation,
                format_rational(&self.rhs)
            );
        }
        let right = LinExpr::from_terms(neg).scale(&-Rational::one());
        format!(
            "{} {} {}",
            LinExpr::from_terms(pos).render(names),
            self.relation,
            right.render(names)
        )
    }

    pub fn holds(&self, point: &[Rational]) -> bool {
        let v = self.lhs.eval(point);
        match self.relation {
            Relation::Le => v <= self.rhs,
            Relation::Eq => v == self.rhs,
            Relation::Ge => v >= self.rhs,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Sense {
    Maximize,
    Minimize,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct LinearProgram {
    pub names: Vec<String>,
    /// `nonneg[v]` adds `x_v ≥ 0`; other variables are free.
    pub nonneg: Vec<bool>,
    pub constraints: Vec<Constraint>,
    pub sense: Sense,
    pub objective: LinExpr,
}

impl LinearProgram {
    pub fn new(names: Vec<String>, sense: Sense, objective: LinExpr) -> Self {
        let nonneg = vec![true; names.len()];
        LinearProgram {
            names,
            nonneg,
            constraints: Vec::new(),
            sense,
            objective,
        }
    }

    pub fn var_count(&self) -> usize {
        self.names.len()
    }

    pub fn push(&mut self, c: Constraint) {
        self.constraints.push(c);
    }

    /// Every referenced variable is declared.
    pub fn check(&self) -> Result<()> {
        let n = self.var_count();
        if self.nonneg.len() != n {
            return Err(Error::MalformedLp(
                "nonnegativity flags do not match the variables".into(),
            ));
        }
        let exprs = std::iter::once(&self.objective).chain(self.constraints.iter().map(|c| &c.lhs));
        for e in exprs {
            if let Some((v, _)) = e.terms().iter().find(|(v, _)| *v >= n) {
                return Err(Error::MalformedLp(format!("undeclared variable index {v}")));
            }
        }
        Ok(())
    }

    /// Objective first, then one constraint per line, then the sign restrictions.
    pub fn render(&self) -> String {
        let mut out = String::new();
        let sense = match self.sense {
            Sense::Maximize => "maximize",
            Sense::Minimize => "minimize",
        };
        out.push_str(&format!("{sense} {}\n", self.objective.render(&self.names)));
        out.push_str("subject to\n");
        for c in &self.constraints {
            out.push_str(&format!("  {}\n", c.render(&self.names)));
        }
        let nonneg: Vec<&str> = self
            .names
            .iter()
            .zip(&self.nonneg)
            .filter(|(_, &nn)| nn)
            .map(|(n, _)| n.as_str())
            .collect();
        if !nonneg.is_empty() {
            out.push_str(&format!("nonnegative {}\n", nonneg.join(" ")));
        }
        out
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum LpStatus {
    Optimal,
    Infeasible,
    Unbounded,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct LpOutcome {
    pub status: LpStatus,
    pub value: Option<Rational>,
    pub point: Vec<Rational>,
    /// Found in floating point without an exact certificate.
    pub approximate: bool,
}

impl LpOutcome {
    pub fn infeasible() -> Self {
        LpOutcome {
            status: LpStatus::Infeasible,
            value: None,
            point: Vec::new(),
            approximate: false,
        }
    }

    pub fn unbounded() -> Self {
        LpOutcome {
            status: LpStatus::Unbounded,
            value: None,
            point: Vec::new(),
            approximate: false,
        }
    }

    pub fn is_optimal(&self) -> bool {
        self.status == LpStatus::Optimal
    }
}
