//! Dense dictionary simplex, generic over exact rationals and `f64`.
//!
//! Large programs are solved in floating point first; the final basis is then
//! verified exactly by solving its square subsystem and checking primal and
//! dual feasibility in rationals. Only when that certificate fails does the
//! exact simplex run from scratch.

use num_traits::{One, Signed, ToPrimitive, Zero};

use crate::error::Result;
use crate::lp::program::{LinearProgram, LpOutcome, LpStatus, Relation, Sense};
use crate::rational::{from_f64, Rational};

pub trait Scalar: Clone + std::fmt::Debug {
    fn s_zero() -> Self;
    fn s_one() -> Self;
    fn from_rational(r: &Rational) -> Self;
    fn is_pos(&self) -> bool;
    fn is_neg(&self) -> bool;
    fn is_nonzero(&self) -> bool {
        self.is_pos() || self.is_neg()
    }
    fn mul(&self, other: &Self) -> Self;
    fn div(&self, other: &Self) -> Self;
    fn neg(&self) -> Self;
    /// `self -= a·b`
    fn sub_mul(&mut self, a: &Self, b: &Self);
    fn add_mul(&mut self, a: &Self, b: &Self);
    fn lt(&self, other: &Self) -> bool;
}

impl Scalar for Rational {
    fn s_zero() -> Self {
        Zero::zero()
    }
    fn s_one() -> Self {
        One::one()
    }
    fn from_rational(r: &Rational) -> Self {
        r.clone()
    }
    fn is_pos(&self) -> bool {
        self.is_positive()
    }
    fn is_neg(&self) -> bool {
        self.is_negative()
    }
    fn mul(&self, other: &Self) -> Self {
        self * other
    }
    fn div(&self, other: &Self) -> Self {
        self / other
    }
    fn neg(&self) -> Self {
        -self
    }
    fn sub_mul(&mut self, a: &Self, b: &Self) {
        *self -= a * b;
    }
    fn add_mul(&mut self, a: &Self, b: &Self) {
        *self += a * b;
    }
    fn lt(&self, other: &Self) -> bool {
        self < other
    }
}

pub const FLOAT_EPS: f64 = 1e-9;

impl Scalar for f64 {
    fn s_zero() -> Self {
        0.0
    }
    fn s_one() -> Self {
        1.0
    }
    fn from_rational(r: &Rational) -> Self {
        r.to_f64().unwrap_or(f64::NAN)
    }
    fn is_pos(&self) -> bool {
        *self > FLOAT_EPS
    }
    fn is_neg(&self) -> bool {
        *self < -FLOAT_EPS
    }
    fn mul(&self, other: &Self) -> Self {
        self * other
    }
    fn div(&self, other: &Self) -> Self {
        self / other
    }
    fn neg(&self) -> Self {
        -self
    }
    fn sub_mul(&mut self, a: &Self, b: &Self) {
        *self -= a * b;
    }
    fn add_mul(&mut self, a: &Self, b: &Self) {
        *self += a * b;
    }
    fn lt(&self, other: &Self) -> bool {
        self < other
    }
}

/// `max c·y` subject to `A y ≤ b`, `y ≥ 0`, derived from a [`LinearProgram`].
#[derive(Clone, Debug)]
pub struct StandardForm {
    pub a: Vec<Vec<Rational>>,
    pub b: Vec<Rational>,
    pub c: Vec<Rational>,
    /// Column `j` contributes `sign · y_j` to original variable `column_var[j]`.
    column_var: Vec<(usize, bool)>,
    negate: bool,
    var_count: usize,
}

impl StandardForm {
    pub fn of(lp: &LinearProgram) -> Result<Self> {
        lp.check()?;
        let mut column_var = Vec::new();
        let mut cols_of = Vec::with_capacity(lp.var_count());
        for v in 0..lp.var_count() {
            let plus = column_var.len();
            column_var.push((v, true));
            let minus = if lp.nonneg[v] {
                None
            } else {
                column_var.push((v, false));
                Some(column_var.len() - 1)
            };
            cols_of.push((plus, minus));
        }
        let width = column_var.len();
        let dense = |e: &crate::lp::expr::LinExpr, sign: bool| {
            let mut row = vec![Rational::zero(); width];
            for (v, coef) in e.terms() {
                let coef = if sign { coef.clone() } else { -coef };
                let (plus, minus) = cols_of[*v];
                if let Some(m) = minus {
                    row[m] = -&coef;
                }
                row[plus] = coef;
            }
            row
        };
        let mut a = Vec::new();
        let mut b = Vec::new();
        for con in &lp.constraints {
            if matches!(con.relation, Relation::Le | Relation::Eq) {
                a.push(dense(&con.lhs, true));
                b.push(con.rhs.clone());
            }
            if matches!(con.relation, Relation::Ge | Relation::Eq) {
                a.push(dense(&con.lhs, false));
                b.push(-&con.rhs);
            }
        }
        let negate = lp.sense == Sense::Minimize;
        let c = dense(&lp.objective, !negate);
        Ok(StandardForm {
            a,
            b,
            c,
            column_var,
            negate,
            var_count: lp.var_count(),
        })
    }

    pub fn rows(&self) -> usize {
        self.a.len()
    }

    pub fn cols(&self) -> usize {
        self.c.len()
    }

    fn outcome(&self, y: &[Rational], value: Rational, approximate: bool) -> LpOutcome {
        let mut point = vec![Rational::zero(); self.var_count];
        for (j, &(v, plus)) in self.column_var.iter().enumerate() {
            if plus {
                point[v] += &y[j];
            } else {
                point[v] -= &y[j];
            }
        }
        LpOutcome {
            status: LpStatus::Optimal,
            value: Some(if self.negate { -value } else { value }),
            point,
            approximate,
        }
    }
}

enum Run {
    Optimal,
    Unbounded,
    Stalled,
}

/// Dictionary `x_basic[i] = b[i] − Σ_j a[i][j]·x_nonbasic[j]`, `z = v + Σ_j c[j]·x_nonbasic[j]`.
struct Dictionary<S> {
    a: Vec<Vec<S>>,
    b: Vec<S>,
    c: Vec<S>,
    v: S,
    basic: Vec<usize>,
    nonbasic: Vec<usize>,
}

const STALL_BEFORE_BLAND: usize = 50;

impl<S: Scalar> Dictionary<S> {
    fn pivot(&mut self, l: usize, e: usize) {
        let piv = self.a[l][e].clone();
        let inv = S::s_one().div(&piv);
        self.b[l] = self.b[l].div(&piv);
        for (j, x) in self.a[l].iter_mut().enumerate() {
            *x = if j == e { inv.clone() } else { x.div(&piv) };
        }
        let row_l = self.a[l].clone();
        let b_l = self.b[l].clone();
        for i in 0..self.a.len() {
            if i == l {
                continue;
            }
            let f = self.a[i][e].clone();
            if !f.is_nonzero() {
                continue;
            }
            self.b[i].sub_mul(&f, &b_l);
            let row = &mut self.a[i];
            for (j, x) in row.iter_mut().enumerate() {
                if j == e {
                    *x = f.mul(&row_l[e]).neg();
                } else if row_l[j].is_nonzero() {
                    x.sub_mul(&f, &row_l[j]);
                }
            }
        }
        let f = self.c[e].clone();
        if f.is_nonzero() {
            self.v.add_mul(&f, &b_l);
            for (j, x) in self.c.iter_mut().enumerate() {
                if j == e {
                    *x = f.mul(&row_l[e]).neg();
                } else if row_l[j].is_nonzero() {
                    x.sub_mul(&f, &row_l[j]);
                }
            }
        }
        std::mem::swap(&mut self.basic[l], &mut self.nonbasic[e]);
    }

    fn entering(&self, bland: bool) -> Option<usize> {
        let mut best: Option<usize> = None;
        for j in 0..self.c.len() {
            if !self.c[j].is_pos() {
                continue;
            }
            best = match best {
                None => Some(j),
                Some(k) if bland => Some(if self.nonbasic[j] < self.nonbasic[k] { j } else { k }),
                Some(k) => Some(if self.c[k].lt(&self.c[j]) { j } else { k }),
            };
        }
        best
    }

    fn leaving(&self, e: usize) -> Option<usize> {
        let mut best: Option<(usize, S)> = None;
        for i in 0..self.a.len() {
            if !self.a[i][e].is_pos() {
                continue;
            }
            let ratio = self.b[i].div(&self.a[i][e]);
            let better = match &best {
                None => true,
                Some((k, r)) => ratio.lt(r) || (!r.lt(&ratio) && self.basic[i] < self.basic[*k]),
            };
            if better {
                best = Some((i, ratio));
            }
        }
        best.map(|(i, _)| i)
    }

    /// Dantzig's rule, switching to Bland's rule once degenerate pivots pile up.
    fn optimize(&mut self, max_pivots: usize) -> Run {
        let mut stall = 0;
        for _ in 0..max_pivots {
            let Some(e) = self.entering(stall >= STALL_BEFORE_BLAND) else {
                return Run::Optimal;
            };
            let Some(l) = self.leaving(e) else {
                return Run::Unbounded;
            };
            if self.b[l].is_nonzero() {
                stall = 0;
            } else {
                stall += 1;
            }
            self.pivot(l, e);
        }
        Run::Stalled
    }
}

enum Solved<S> {
    Optimal(Dictionary<S>),
    Infeasible,
    Unbounded,
    Stalled,
}

fn run_simplex<S: Scalar>(sf: &StandardForm, max_pivots: usize) -> Solved<S> {
    let (m, n) = (sf.rows(), sf.cols());
    let conv = |row: &[Rational]| row.iter().map(S::from_rational).collect::<Vec<S>>();
    let mut d = Dictionary {
        a: sf.a.iter().map(|r| conv(r)).collect(),
        b: conv(&sf.b),
        c: vec![S::s_zero(); n],
        v: S::s_zero(),
        basic: (n..n + m).collect(),
        nonbasic: (0..n).collect(),
    };

    let most_negative = (0..m).filter(|&i| d.b[i].is_neg()).min_by(|&i, &k| {
        if d.b[i].lt(&d.b[k]) {
            std::cmp::Ordering::Less
        } else if d.b[k].lt(&d.b[i]) {
            std::cmp::Ordering::Greater
        } else {
            i.cmp(&k)
        }
    });
    if let Some(start) = most_negative {
        // Auxiliary variable x0 (index n + m) with objective −x0.
        let aux = n + m;
        for row in &mut d.a {
            row.push(S::s_one().neg());
        }
        d.nonbasic.push(aux);
        d.c = vec![S::s_zero(); n + 1];
        d.c[n] = S::s_one().neg();
        d.pivot(start, n);
        match d.optimize(max_pivots) {
            Run::Optimal => {}
            Run::Stalled => return Solved::Stalled,
            Run::Unbounded => unreachable!("auxiliary objective is bounded by 0"),
        }
        if d.v.is_neg() {
            return Solved::Infeasible;
        }
        if let Some(r) = d.basic.iter().position(|&x| x == aux) {
            let Some(e) = (0..d.nonbasic.len()).find(|&j| d.a[r][j].is_nonzero()) else {
                return Solved::Stalled;
            };
            d.pivot(r, e);
        }
        let col = d.nonbasic.iter().position(|&x| x == aux).expect("x0 is nonbasic");
        for row in &mut d.a {
            row.remove(col);
        }
        d.nonbasic.remove(col);
        // Restate the real objective over the current nonbasic variables.
        d.c = vec![S::s_zero(); n];
        d.v = S::s_zero();
        let obj = conv(&sf.c);
        for (k, ck) in obj.iter().enumerate() {
            if !ck.is_nonzero() {
                continue;
            }
            if let Some(j) = d.nonbasic.iter().position(|&x| x == k) {
                d.c[j].add_mul(ck, &S::s_one());
            } else if let Some(i) = d.basic.iter().position(|&x| x == k) {
                d.v.add_mul(ck, &d.b[i]);
                for j in 0..n {
                    let aij = d.a[i][j].clone();
                    d.c[j].sub_mul(ck, &aij);
                }
            }
        }
    } else {
        d.c = conv(&sf.c);
    }
    match d.optimize(max_pivots) {
        Run::Optimal => Solved::Optimal(d),
        Run::Unbounded => Solved::Unbounded,
        Run::Stalled => Solved::Stalled,
    }
}

/// Exact simplex over rationals from scratch.
pub fn solve_exact(lp: &LinearProgram) -> Result<LpOutcome> {
    let sf = StandardForm::of(lp)?;
    Ok(exact_on(&sf))
}

fn exact_on(sf: &StandardForm) -> LpOutcome {
    match run_simplex::<Rational>(sf, usize::MAX) {
        Solved::Optimal(d) => {
            let mut y = vec![Rational::zero(); sf.cols()];
            for (i, &x) in d.basic.iter().enumerate() {
                if x < sf.cols() {
                    y[x] = d.b[i].clone();
                }
            }
            sf.outcome(&y, d.v, false)
        }
        Solved::Infeasible => LpOutcome::infeasible(),
        Solved::Unbounded => LpOutcome::unbounded(),
        Solved::Stalled => unreachable!("Bland's rule terminates"),
    }
}

const FLOAT_PIVOT_LIMIT: usize = 200_000;

/// Floating-point simplex; the outcome is marked approximate.
pub fn solve_float(lp: &LinearProgram) -> Result<LpOutcome> {
    let sf = StandardForm::of(lp)?;
    Ok(match run_simplex::<f64>(&sf, FLOAT_PIVOT_LIMIT) {
        Solved::Optimal(d) => {
            let mut y = vec![Rational::zero(); sf.cols()];
            for (i, &x) in d.basic.iter().enumerate() {
                if x < sf.cols() {
                    y[x] = from_f64(d.b[i].max(0.0));
                }
            }
            sf.outcome(&y, from_f64(d.v), true)
        }
        Solved::Infeasible => LpOutcome {
            approximate: true,
            ..LpOutcome::infeasible()
        },
        Solved::Unbounded => LpOutcome {
            approximate: true,
            ..LpOutcome::unbounded()
        },
        Solved::Stalled => LpOutcome {
            approximate: true,
            ..LpOutcome::infeasible()
        },
    })
}

/// Exact Gaussian elimination; `None` when singular.
fn solve_square(mut m: Vec<Vec<Rational>>, mut rhs: Vec<Rational>) -> Option<Vec<Rational>> {
    let k = rhs.len();
    for col in 0..k {
        let p = (col..k).find(|&r| !m[r][col].is_zero())?;
        m.swap(col, p);
        rhs.swap(col, p);
        let inv = m[col][col].recip();
        for x in m[col].iter_mut().skip(col) {
            *x *= &inv;
        }
        rhs[col] *= &inv;
        let (pivot_row, pivot_rhs) = (m[col].clone(), rhs[col].clone());
        for r in 0..k {
            if r == col || m[r][col].is_zero() {
                continue;
            }
            let f = m[r][col].clone();
            for (x, p) in m[r].iter_mut().zip(&pivot_row).skip(col) {
                if !p.is_zero() {
                    *x -= &f * p;
                }
            }
            rhs[r] -= &f * &pivot_rhs;
        }
    }
    Some(rhs)
}

/// Checks a basis (given by its basic structural columns) for exact optimality.
fn certify(sf: &StandardForm, basic_cols: &[usize], tight_rows: &[usize]) -> Option<(Vec<Rational>, Rational)> {
    let k = basic_cols.len();
    if tight_rows.len() != k {
        return None;
    }
    let sub: Vec<Vec<Rational>> = tight_rows
        .iter()
        .map(|&i| basic_cols.iter().map(|&j| sf.a[i][j].clone()).collect())
        .collect();
    let xs = solve_square(sub.clone(), tight_rows.iter().map(|&i| sf.b[i].clone()).collect())?;
    let mut y = vec![Rational::zero(); sf.cols()];
    for (&j, x) in basic_cols.iter().zip(xs) {
        if x.is_negative() {
            return None;
        }
        y[j] = x;
    }
    for (row, b) in sf.a.iter().zip(&sf.b) {
        let lhs: Rational = row
            .iter()
            .zip(&y)
            .filter(|(_, y)| !y.is_zero())
            .map(|(a, y)| a * y)
            .sum();
        if &lhs > b {
            return None;
        }
    }
    // Duals on the tight rows: Aᵀ_{T,S} λ = c_S, λ ≥ 0, reduced costs ≤ 0.
    let transposed: Vec<Vec<Rational>> = (0..k).map(|c| (0..k).map(|r| sub[r][c].clone()).collect()).collect();
    let lambda = solve_square(transposed, basic_cols.iter().map(|&j| sf.c[j].clone()).collect())?;
    if lambda.iter().any(|l| l.is_negative()) {
        return None;
    }
    for j in 0..sf.cols() {
        let reduced: Rational = &sf.c[j]
            - tight_rows
                .iter()
                .zip(&lambda)
                .map(|(&i, l)| &sf.a[i][j] * l)
                .sum::<Rational>();
        if reduced.is_positive() {
            return None;
        }
    }
    let value = sf.c.iter().zip(&y).map(|(c, y)| c * y).sum();
    Some((y, value))
}

/// Size below which the exact simplex runs directly.
const DIRECT_EXACT_ENTRIES: usize = 4_000;

/// Exact optimum of `lp`. Large programs take the float-guided route with an
/// exact optimality (or infeasibility) certificate.
pub fn solve_lp(lp: &LinearProgram) -> Result<LpOutcome> {
    let sf = StandardForm::of(lp)?;
    if sf.rows() * sf.cols() <= DIRECT_EXACT_ENTRIES {
        return Ok(exact_on(&sf));
    }
    match run_simplex::<f64>(&sf, FLOAT_PIVOT_LIMIT) {
        Solved::Optimal(d) => {
            let n = sf.cols();
            let basic_cols: Vec<usize> = d.basic.iter().copied().filter(|&x| x < n).collect();
            let tight_rows: Vec<usize> = d.nonbasic.iter().filter(|&&x| x >= n).map(|&x| x - n).collect();
            if let Some((y, value)) = certify(&sf, &basic_cols, &tight_rows) {
                return Ok(sf.outcome(&y, value, false));
            }
        }
        Solved::Infeasible => {
            if certify_infeasible(&sf) {
                return Ok(LpOutcome::infeasible());
            }
        }
        Solved::Unbounded | Solved::Stalled => {}
    }
    Ok(exact_on(&sf))
}

/// Rows added per round of [`solve_exact_rowgen`].
const ROWGEN_BATCH: usize = 64;

fn violation(c: &crate::lp::program::Constraint, point: &[Rational]) -> Rational {
    let gap = c.lhs.eval(point) - &c.rhs;
    match c.relation {
        Relation::Le => gap,
        Relation::Ge => -gap,
        Relation::Eq => gap.abs(),
    }
}

/// Exact optimum by row generation. The rows in `initial` are solved first;
/// rows violated by the current optimum are added, most violated first, until
/// the optimum satisfies every row. Every subproblem is solved exactly.
pub fn solve_exact_rowgen(lp: &LinearProgram, initial: &[usize]) -> Result<LpOutcome> {
    lp.check()?;
    let mut active = vec![false; lp.constraints.len()];
    for &i in initial {
        active[i] = true;
    }
    loop {
        let sub = LinearProgram {
            names: lp.names.clone(),
            nonneg: lp.nonneg.clone(),
            constraints: lp
                .constraints
                .iter()
                .zip(&active)
                .filter(|(_, &a)| a)
                .map(|(c, _)| c.clone())
                .collect(),
            sense: lp.sense,
            objective: lp.objective.clone(),
        };
        let out = exact_on(&StandardForm::of(&sub)?);
        let added = match out.status {
            // A subset of the rows is already infeasible.
            LpStatus::Infeasible => return Ok(out),
            LpStatus::Unbounded => {
                let next: Vec<usize> = (0..active.len()).filter(|&i| !active[i]).take(ROWGEN_BATCH).collect();
                if next.is_empty() {
                    return Ok(out);
                }
                next
            }
            LpStatus::Optimal => {
                let mut violated: Vec<(Rational, usize)> = (0..active.len())
                    .filter(|&i| !active[i])
                    .map(|i| (violation(&lp.constraints[i], &out.point), i))
                    .filter(|(v, _)| v.is_positive())
                    .collect();
                if violated.is_empty() {
                    return Ok(out);
                }
                violated.sort_by(|a, b| b.0.cmp(&a.0).then(a.1.cmp(&b.1)));
                violated.into_iter().take(ROWGEN_BATCH).map(|(_, i)| i).collect()
            }
        };
        for i in added {
            active[i] = true;
        }
    }
}

/// Exact proof that `A y ≤ b, y ≥ 0` is empty: the auxiliary program
/// `max −t` subject to `A y − t ≤ b`, `y, t ≥ 0` has a negative certified optimum.
fn certify_infeasible(sf: &StandardForm) -> bool {
    let mut aux = sf.clone();
    for row in &mut aux.a {
        row.push(-Rational::one());
    }
    aux.c = vec![Rational::zero(); sf.cols() + 1];
    aux.c[sf.cols()] = -Rational::one();
    let Solved::Optimal(d) = run_simplex::<f64>(&aux, FLOAT_PIVOT_LIMIT) else {
        return false;
    };
    let n = aux.cols();
    let basic_cols: Vec<usize> = d.basic.iter().copied().filter(|&x| x < n).collect();
    let tight_rows: Vec<usize> = d.nonbasic.iter().filter(|&&x| x >= n).map(|&x| x - n).collect();
    matches!(certify(&aux, &basic_cols, &tight_rows), Some((_, v)) if v.is_negative())
}
