//! Exact linear programming: a dense two-phase simplex over rationals with
//! Bland's rule, plus an LP-file writer.

use crate::rational::{self, int, Rational};
use num_bigint::BigInt;
use num_integer::Integer;
use num_traits::{One, Signed, ToPrimitive, Zero};
use std::fmt::Write as _;
use std::rc::Rc;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Sense {
    Minimize,
    Maximize,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Relation {
    Le,
    Eq,
    Ge,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum VarKind {
    Continuous,
    Integer,
    Binary,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Variable {
    pub name: String,
    pub lower: Option<Rational>,
    pub upper: Option<Rational>,
    /// Only used by the LP-file writer; the solver relaxes integrality.
    pub kind: VarKind,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Constraint {
    pub name: String,
    pub terms: Vec<(usize, Rational)>,
    pub relation: Relation,
    pub rhs: Rational,
}

impl Constraint {
    pub fn lhs(&self, x: &[Rational]) -> Rational {
        self.terms.iter().map(|(j, c)| c * &x[*j]).sum()
    }

    pub fn satisfied_by(&self, x: &[Rational]) -> bool {
        let lhs = self.lhs(x);
        match self.relation {
            Relation::Le => lhs <= self.rhs,
            Relation::Eq => lhs == self.rhs,
            Relation::Ge => lhs >= self.rhs,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct LinearProgram {
    pub sense: Sense,
    pub variables: Vec<Variable>,
    pub constraints: Vec<Constraint>,
    pub objective: Vec<(usize, Rational)>,
}

impl LinearProgram {
    pub fn new(sense: Sense) -> Self {
        LinearProgram {
            sense,
            variables: Vec::new(),
            constraints: Vec::new(),
            objective: Vec::new(),
        }
    }

    pub fn add_var(&mut self, name: impl Into<String>, lower: Option<Rational>, upper: Option<Rational>) -> usize {
        self.add_var_kind(name, lower, upper, VarKind::Continuous)
    }

    pub fn add_var_kind(
        &mut self,
        name: impl Into<String>,
        lower: Option<Rational>,
        upper: Option<Rational>,
        kind: VarKind,
    ) -> usize {
        self.variables.push(Variable {
            name: name.into(),
            lower,
            upper,
            kind,
        });
        self.variables.len() - 1
    }

    /// Nonnegative continuous variable.
    pub fn add_nonneg(&mut self, name: impl Into<String>) -> usize {
        self.add_var(name, Some(Rational::zero()), None)
    }

    pub fn add_constraint(
        &mut self,
        name: impl Into<String>,
        terms: Vec<(usize, Rational)>,
        relation: Relation,
        rhs: Rational,
    ) -> usize {
        self.constraints.push(Constraint {
            name: name.into(),
            terms,
            relation,
            rhs,
        });
        self.constraints.len() - 1
    }

    pub fn set_objective(&mut self, terms: Vec<(usize, Rational)>) {
        self.objective = terms;
    }

    pub fn objective_value(&self, x: &[Rational]) -> Rational {
        self.objective.iter().map(|(j, c)| c * &x[*j]).sum()
    }

    /// Bounds and constraints hold exactly at `x`.
    pub fn is_feasible_point(&self, x: &[Rational]) -> bool {
        x.len() == self.variables.len()
            && self
                .variables
                .iter()
                .zip(x)
                .all(|(v, xi)| v.lower.as_ref().is_none_or(|l| xi >= l) && v.upper.as_ref().is_none_or(|u| xi <= u))
            && self.constraints.iter().all(|c| c.satisfied_by(x))
    }

    /// Text in the common LP file format. Coefficients that have no finite
    /// decimal form are written as 17-digit floats, with the exact fraction
    /// in a comment above the row.
    pub fn to_lp_format(&self, title: &str) -> String {
        let mut out = String::new();
        let mut notes = Vec::new();
        let _ = writeln!(out, "\\ {title}");
        out.push_str(match self.sense {
            Sense::Minimize => "Minimize\n",
            Sense::Maximize => "Maximize\n",
        });
        let obj = self.lp_terms(&self.objective, "obj", &mut notes);
        for n in notes.drain(..) {
            let _ = writeln!(out, "\\ {n}");
        }
        let _ = writeln!(out, " obj:{obj}");
        out.push_str("Subject To\n");
        for c in &self.constraints {
            let lhs = self.lp_terms(&c.terms, &c.name, &mut notes);
            for n in notes.drain(..) {
                let _ = writeln!(out, "\\ {n}");
            }
            let rel = match c.relation {
                Relation::Le => "<=",
                Relation::Eq => "=",
                Relation::Ge => ">=",
            };
            let lhs = if lhs.is_empty() { " 0".to_string() } else { lhs };
            let _ = writeln!(
                out,
                " {}:{lhs} {rel} {}",
                c.name,
                lp_number(&c.rhs, &mut notes, &c.name)
            );
            for n in notes.drain(..) {
                let _ = writeln!(out, "\\ {n}");
            }
        }
        out.push_str("Bounds\n");
        for v in &self.variables {
            if v.kind == VarKind::Binary {
                continue;
            }
            let mut n = Vec::new();
            let line = match (&v.lower, &v.upper) {
                (Some(l), None) if l.is_zero() => continue,
                (Some(l), None) => format!(" {} >= {}", v.name, lp_number(l, &mut n, &v.name)),
                (None, None) => format!(" {} free", v.name),
                (None, Some(u)) => format!(" -inf <= {} <= {}", v.name, lp_number(u, &mut n, &v.name)),
                (Some(l), Some(u)) => format!(
                    " {} <= {} <= {}",
                    lp_number(l, &mut n, &v.name),
                    v.name,
                    lp_number(u, &mut n, &v.name)
                ),
            };
            for note in n {
                let _ = writeln!(out, "\\ {note}");
            }
            out.push_str(&line);
            out.push('\n');
        }
        for (header, kind) in [("General", VarKind::Integer), ("Binary", VarKind::Binary)] {
            let names: Vec<&str> = self
                .variables
                .iter()
                .filter(|v| v.kind == kind)
                .map(|v| v.name.as_str())
                .collect();
            if !names.is_empty() {
                let _ = writeln!(out, "{header}\n {}", names.join(" "));
            }
        }
        out.push_str("End\n");
        out
    }

    fn lp_terms(&self, terms: &[(usize, Rational)], row: &str, notes: &mut Vec<String>) -> String {
        let mut s = String::new();
        for (j, c) in terms {
            if c.is_zero() {
                continue;
            }
            let sign = if c.is_negative() { '-' } else { '+' };
            let mag = c.abs();
            let name = &self.variables[*j].name;
            if mag.is_one() {
                let _ = write!(s, " {sign} {name}");
            } else {
                let _ = write!(s, " {sign} {} {name}", lp_number(&mag, notes, row));
            }
        }
        s
    }
}

/// `v` scaled by the positive lcm of its denominators.
fn integral(v: &[Rational]) -> Vec<BigInt> {
    let l = v.iter().fold(BigInt::one(), |l, x| l.lcm(x.denom()));
    v.iter()
        .map(|x| (x * Rational::from_integer(l.clone())).to_integer())
        .collect()
}

fn lp_number(v: &Rational, notes: &mut Vec<String>, row: &str) -> String {
    match rational::to_decimal(v) {
        Some(d) => d,
        None => {
            notes.push(format!("{row}: exact value {}", rational::render_fraction(v)));
            format!("{:.17}", rational::to_f64(v))
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LpStatus {
    Optimal,
    Infeasible,
    Unbounded,
}

#[derive(Debug, Clone, PartialEq)]
pub struct LpSolution {
    pub status: LpStatus,
    /// Empty unless optimal.
    pub values: Vec<Rational>,
    pub objective: Rational,
    pub pivots: usize,
}

impl LpSolution {
    pub fn is_optimal(&self) -> bool {
        self.status == LpStatus::Optimal
    }

    fn without_point(status: LpStatus, pivots: usize) -> Self {
        LpSolution {
            status,
            values: Vec::new(),
            objective: Rational::zero(),
            pivots,
        }
    }
}

/// How an original variable maps onto nonnegative tableau columns.
#[derive(Debug, Clone)]
enum Column {
    /// `lower == upper`; no tableau column.
    Fixed(Rational),
    /// `x = lower + col`
    Shift(usize, Rational),
    /// `x = upper - col`
    Flip(usize, Rational),
    /// `x = pos - neg`
    Split(usize, usize),
}

impl Column {
    /// `x` as `offset + Σ sign·col`.
    fn expand(&self) -> (Rational, Vec<(usize, i64)>) {
        match self {
            Column::Fixed(v) => (v.clone(), vec![]),
            Column::Shift(k, l) => (l.clone(), vec![(*k, 1)]),
            Column::Flip(k, u) => (u.clone(), vec![(*k, -1)]),
            Column::Split(p, n) => (Rational::zero(), vec![(*p, 1), (*n, -1)]),
        }
    }

    fn value(&self, cols: &[Rational]) -> Rational {
        match self {
            Column::Fixed(v) => v.clone(),
            Column::Shift(k, l) => l + &cols[*k],
            Column::Flip(k, u) => u - &cols[*k],
            Column::Split(p, n) => &cols[*p] - &cols[*n],
        }
    }
}

/// Integer arithmetic for the fraction-free tableau. `None` signals
/// overflow and sends the solve to the arbitrary-precision path.
trait Ring: Clone + Ord + Sized {
    fn zero() -> Self;
    fn from_big(v: &BigInt) -> Option<Self>;
    fn to_big(&self) -> BigInt;
    fn mul(&self, o: &Self) -> Option<Self>;
    fn sub(&self, o: &Self) -> Option<Self>;
    fn neg(&self) -> Option<Self>;
    /// Division known to be exact.
    fn div_exact(&self, o: &Self) -> Self;
    fn is_zero(&self) -> bool;
    fn signum_i(&self) -> i8;
}

impl Ring for i128 {
    fn zero() -> Self {
        0
    }
    fn from_big(v: &BigInt) -> Option<Self> {
        v.to_i128()
    }
    fn to_big(&self) -> BigInt {
        BigInt::from(*self)
    }
    fn mul(&self, o: &Self) -> Option<Self> {
        self.checked_mul(*o)
    }
    fn sub(&self, o: &Self) -> Option<Self> {
        self.checked_sub(*o)
    }
    fn neg(&self) -> Option<Self> {
        self.checked_neg()
    }
    fn div_exact(&self, o: &Self) -> Self {
        debug_assert_eq!(self % o, 0);
        self / o
    }
    fn is_zero(&self) -> bool {
        *self == 0
    }
    fn signum_i(&self) -> i8 {
        self.signum() as i8
    }
}

impl Ring for BigInt {
    fn zero() -> Self {
        Zero::zero()
    }
    fn from_big(v: &BigInt) -> Option<Self> {
        Some(v.clone())
    }
    fn to_big(&self) -> BigInt {
        self.clone()
    }
    fn mul(&self, o: &Self) -> Option<Self> {
        Some(self * o)
    }
    fn sub(&self, o: &Self) -> Option<Self> {
        Some(self - o)
    }
    fn neg(&self) -> Option<Self> {
        Some(-self)
    }
    fn div_exact(&self, o: &Self) -> Self {
        debug_assert!(Zero::is_zero(&(self % o)));
        self / o
    }
    fn is_zero(&self) -> bool {
        Zero::is_zero(self)
    }
    fn signum_i(&self) -> i8 {
        match self.sign() {
            num_bigint::Sign::Minus => -1,
            num_bigint::Sign::NoSign => 0,
            num_bigint::Sign::Plus => 1,
        }
    }
}

/// Integer standard form: `rows · col = rhs`, `col >= 0`, starting from the
/// slack/artificial basis with every basic entry equal to `det`.
struct StandardForm {
    rows: Vec<Vec<BigInt>>,
    rhs: Vec<BigInt>,
    basis: Vec<usize>,
    artificial: Vec<bool>,
    /// Phase-two costs, integral.
    cost: Vec<BigInt>,
    det: BigInt,
    /// Unscaled right-hand sides, for the duality check.
    exact_rhs: Vec<Rational>,
}

/// Fraction-free tableau: true entries are `rows[i][j] / det`. Each state is
/// `det(B)·B⁻¹A` for an integer matrix `A`, so every update divides exactly.
#[derive(Clone)]
struct Tableau<N> {
    rows: Vec<Vec<N>>,
    rhs: Vec<N>,
    /// Reduced costs scaled by `det`.
    cost: Vec<N>,
    value: N,
    det: N,
    basis: Vec<usize>,
    blocked: Vec<bool>,
    /// Starting basic column of each row and its unscaled right-hand side.
    identity: Vec<usize>,
    exact_rhs: Vec<Rational>,
    pivots: usize,
}

impl<N: Ring> Tableau<N> {
    fn from_standard(sf: &StandardForm) -> Option<Self> {
        Some(Tableau {
            rows: sf
                .rows
                .iter()
                .map(|r| r.iter().map(N::from_big).collect::<Option<Vec<_>>>())
                .collect::<Option<_>>()?,
            rhs: sf.rhs.iter().map(N::from_big).collect::<Option<_>>()?,
            cost: vec![N::zero(); sf.artificial.len()],
            value: N::zero(),
            det: N::from_big(&sf.det)?,
            basis: sf.basis.clone(),
            blocked: vec![false; sf.artificial.len()],
            identity: sf.basis.clone(),
            exact_rhs: sf.exact_rhs.clone(),
            pivots: 0,
        })
    }

    fn map<M: Ring>(&self) -> Option<Tableau<M>> {
        let conv = |v: &N| M::from_big(&v.to_big());
        Some(Tableau {
            rows: self
                .rows
                .iter()
                .map(|r| r.iter().map(conv).collect::<Option<Vec<_>>>())
                .collect::<Option<_>>()?,
            rhs: self.rhs.iter().map(conv).collect::<Option<_>>()?,
            cost: self.cost.iter().map(conv).collect::<Option<_>>()?,
            value: conv(&self.value)?,
            det: conv(&self.det)?,
            basis: self.basis.clone(),
            blocked: self.blocked.clone(),
            identity: self.identity.clone(),
            exact_rhs: self.exact_rhs.clone(),
            pivots: self.pivots,
        })
    }

    fn pivot(&mut self, r: usize, e: usize) -> Option<()> {
        self.pivots += 1;
        let p = self.rows[r][e].clone();
        let det = self.det.clone();
        let prow = self.rows[r].clone();
        let prhs = self.rhs[r].clone();
        let nz: Vec<usize> = (0..prow.len()).filter(|&j| !prow[j].is_zero()).collect();
        let update = |row: &mut Vec<N>, rhs: &mut N| -> Option<()> {
            let f = row[e].clone();
            if f.is_zero() {
                for v in row.iter_mut().filter(|v| !v.is_zero()) {
                    *v = v.mul(&p)?.div_exact(&det);
                }
                *rhs = rhs.mul(&p)?.div_exact(&det);
                return Some(());
            }
            let mut k = 0;
            for (j, v) in row.iter_mut().enumerate() {
                if k < nz.len() && nz[k] == j {
                    k += 1;
                    *v = v.mul(&p)?.sub(&f.mul(&prow[j])?)?.div_exact(&det);
                } else if !v.is_zero() {
                    *v = v.mul(&p)?.div_exact(&det);
                }
            }
            *rhs = rhs.mul(&p)?.sub(&f.mul(&prhs)?)?.div_exact(&det);
            Some(())
        };
        for i in 0..self.rows.len() {
            if i != r {
                update(&mut self.rows[i], &mut self.rhs[i])?;
            }
        }
        update(&mut self.cost, &mut self.value)?;
        self.det = p;
        if self.det.signum_i() < 0 {
            for row in self.rows.iter_mut().chain(std::iter::once(&mut self.cost)) {
                for v in row.iter_mut().filter(|v| !v.is_zero()) {
                    *v = v.neg()?;
                }
            }
            for v in self.rhs.iter_mut().chain(std::iter::once(&mut self.value)) {
                *v = v.neg()?;
            }
            self.det = self.det.neg()?;
        }
        self.basis[r] = e;
        Some(())
    }

    /// Primal simplex on the cost row with Bland's rule. `Some(false)` is
    /// unbounded.
    fn primal(&mut self) -> Option<bool> {
        loop {
            let Some(e) = (0..self.cost.len()).find(|&j| !self.blocked[j] && self.cost[j].signum_i() < 0) else {
                return Some(true);
            };
            let mut best: Option<usize> = None;
            for i in 0..self.rows.len() {
                if self.rows[i][e].signum_i() <= 0 {
                    continue;
                }
                let better = match best {
                    None => true,
                    Some(k) => {
                        // rhs_i / a_i  vs  rhs_k / a_k, both a positive
                        let lhs = self.rhs[i].mul(&self.rows[k][e])?;
                        let rhs = self.rhs[k].mul(&self.rows[i][e])?;
                        lhs < rhs || (lhs == rhs && self.basis[i] < self.basis[k])
                    }
                };
                if better {
                    best = Some(i);
                }
            }
            let Some(r) = best else {
                return Some(false);
            };
            self.pivot(r, e)?;
        }
    }

    /// Dual simplex from a dual feasible basis, smallest-index rule on both
    /// sides. `Some(false)` is primal infeasible.
    fn dual(&mut self) -> Option<bool> {
        loop {
            let Some(r) = (0..self.rows.len())
                .filter(|&i| self.rhs[i].signum_i() < 0)
                .min_by_key(|&i| self.basis[i])
            else {
                return Some(true);
            };
            let mut best: Option<usize> = None;
            for j in 0..self.cost.len() {
                if self.blocked[j] || self.rows[r][j].signum_i() >= 0 {
                    continue;
                }
                let better = match best {
                    None => true,
                    Some(k) => {
                        // cost_j / -a_j  vs  cost_k / -a_k
                        let lhs = self.cost[j].mul(&self.rows[r][k].neg()?)?;
                        let rhs = self.cost[k].mul(&self.rows[r][j].neg()?)?;
                        lhs < rhs
                    }
                };
                if better {
                    best = Some(j);
                }
            }
            let Some(e) = best else {
                return Some(false);
            };
            self.pivot(r, e)?;
        }
    }

    /// Installs integral costs `c` and prices out the current basis.
    fn set_costs(&mut self, c: &[BigInt]) -> Option<()> {
        let c: Vec<N> = c.iter().map(N::from_big).collect::<Option<_>>()?;
        let mut cost: Vec<N> = c.iter().map(|v| v.mul(&self.det)).collect::<Option<_>>()?;
        let mut value = N::zero();
        for i in 0..self.rows.len() {
            let cb = &c[self.basis[i]];
            if cb.is_zero() {
                continue;
            }
            for (j, v) in self.rows[i].iter().enumerate() {
                if !v.is_zero() {
                    cost[j] = cost[j].sub(&cb.mul(v)?)?;
                }
            }
            value = value.sub(&cb.mul(&self.rhs[i])?)?;
        }
        self.cost = cost;
        self.value = value;
        Some(())
    }

    /// Appends `Σ a_k col_k + s = beta` with a fresh basic slack `s`.
    fn add_row(&mut self, a: &[(usize, i64)], beta: &BigInt) -> Option<()> {
        let width = self.cost.len();
        let mut row = vec![N::zero(); width + 1];
        let mut rhs = N::from_big(beta)?.mul(&self.det)?;
        for &(k, coef) in a {
            let c = N::from_big(&BigInt::from(coef))?;
            row[k] = row[k].sub(&c.mul(&self.det)?.neg()?)?;
            // a basic column is eliminated through its row
            if let Some(i) = self.basis.iter().position(|&b| b == k) {
                for (j, v) in self.rows[i].iter().enumerate() {
                    if !v.is_zero() {
                        row[j] = row[j].sub(&c.mul(v)?)?;
                    }
                }
                rhs = rhs.sub(&c.mul(&self.rhs[i])?)?;
            }
        }
        row[width] = self.det.clone();
        for r in &mut self.rows {
            r.push(N::zero());
        }
        self.rows.push(row);
        self.rhs.push(rhs);
        self.cost.push(N::zero());
        self.blocked.push(false);
        self.basis.push(width);
        self.identity.push(width);
        self.exact_rhs.push(Rational::from_integer(beta.clone()));
        Some(())
    }

    fn column_values(&self) -> Vec<Rational> {
        let det = self.det.to_big();
        let mut out = vec![Rational::zero(); self.cost.len()];
        for (i, &b) in self.basis.iter().enumerate() {
            out[b] = Rational::new(self.rhs[i].to_big(), det.clone());
        }
        out
    }

    /// Debug check that the duals read off the starting identity columns
    /// close the gap with the primal objective.
    fn check_duality(&self, cost: &[BigInt], values: &[Rational]) {
        if !cfg!(debug_assertions) {
            return;
        }
        let det = self.det.to_big();
        let primal: Rational = values
            .iter()
            .zip(cost)
            .map(|(v, c)| v * Rational::from_integer(c.clone()))
            .sum();
        let dual: Rational = self
            .identity
            .iter()
            .zip(&self.exact_rhs)
            .map(|(&j, b)| Rational::new(-self.cost[j].to_big(), det.clone()) * b)
            .sum();
        debug_assert_eq!(primal, dual, "duality gap at an optimal basis");
    }
}

#[derive(Clone)]
enum AnyTableau {
    Small(Tableau<i128>),
    Big(Tableau<BigInt>),
}

impl AnyTableau {
    fn pivots(&self) -> usize {
        match self {
            AnyTableau::Small(t) => t.pivots,
            AnyTableau::Big(t) => t.pivots,
        }
    }
}

enum Outcome {
    Optimal(Vec<Rational>),
    Infeasible,
    Unbounded,
}

fn phases<N: Ring>(t: &mut Tableau<N>, sf: &StandardForm) -> Option<Outcome> {
    if sf.artificial.iter().any(|&a| a) {
        let c: Vec<BigInt> = sf.artificial.iter().map(|&a| BigInt::from(a as u8)).collect();
        t.set_costs(&c)?;
        let bounded = t.primal()?;
        debug_assert!(bounded, "phase one is bounded below by zero");
        if !t.value.is_zero() {
            return Some(Outcome::Infeasible);
        }
        let ncols = sf.artificial.len();
        for i in 0..t.rows.len() {
            if !sf.artificial[t.basis[i]] {
                continue;
            }
            if let Some(e) = (0..ncols).find(|&j| !sf.artificial[j] && !t.rows[i][j].is_zero()) {
                t.pivot(i, e)?;
            }
            // otherwise the row is redundant and its artificial stays at zero
        }
        t.blocked.clone_from(&sf.artificial);
    }
    t.set_costs(&sf.cost)?;
    if !t.primal()? {
        return Some(Outcome::Unbounded);
    }
    let values = t.column_values();
    t.check_duality(&sf.cost, &values);
    Some(Outcome::Optimal(values))
}

/// Optimal tableau kept for re-solving after a bound is tightened.
#[derive(Clone)]
pub struct WarmStart {
    tableau: AnyTableau,
    columns: Rc<Vec<Column>>,
    cost: Rc<Vec<BigInt>>,
}

impl WarmStart {
    /// Re-solves after adding `x_var rel value` to `lp`, which must already
    /// carry that bound. Only integral bounds are applied incrementally.
    pub fn with_bound(
        &self,
        lp: &LinearProgram,
        var: usize,
        rel: Relation,
        value: &Rational,
    ) -> (LpSolution, Option<WarmStart>) {
        let (offset, terms) = self.columns[var].expand();
        let beta = value - &offset;
        if !beta.is_integer() || rel == Relation::Eq || terms.is_empty() {
            return solve_lp_warm(lp);
        }
        // x <= v  ->  Σ t·col + s = v - off;  x >= v  ->  -Σ t·col + s = off - v
        let (terms, beta): (Vec<(usize, i64)>, BigInt) = match rel {
            Relation::Le => (terms, beta.to_integer()),
            _ => (terms.into_iter().map(|(k, c)| (k, -c)).collect(), -beta.to_integer()),
        };
        let (outcome, tableau) = match &self.tableau {
            AnyTableau::Small(t) => {
                let mut small = t.clone();
                match warm_step(&mut small, &terms, &beta, &self.cost) {
                    Some(o) => (o, AnyTableau::Small(small)),
                    None => {
                        let mut big: Tableau<BigInt> = t.map().expect("widening cannot fail");
                        let o = warm_step(&mut big, &terms, &beta, &self.cost).expect("big integers do not overflow");
                        (o, AnyTableau::Big(big))
                    }
                }
            }
            AnyTableau::Big(t) => {
                let mut big = t.clone();
                let o = warm_step(&mut big, &terms, &beta, &self.cost).expect("big integers do not overflow");
                (o, AnyTableau::Big(big))
            }
        };
        let pivots = tableau.pivots();
        let next = WarmStart {
            tableau,
            columns: self.columns.clone(),
            cost: self.cost.clone(),
        };
        match outcome {
            Outcome::Optimal(cols) => (finish(lp, &self.columns, &cols, pivots), Some(next)),
            Outcome::Infeasible => (LpSolution::without_point(LpStatus::Infeasible, pivots), None),
            Outcome::Unbounded => (LpSolution::without_point(LpStatus::Unbounded, pivots), None),
        }
    }
}

fn warm_step<N: Ring>(t: &mut Tableau<N>, terms: &[(usize, i64)], beta: &BigInt, cost: &[BigInt]) -> Option<Outcome> {
    t.add_row(terms, beta)?;
    if !t.dual()? {
        return Some(Outcome::Infeasible);
    }
    let values = t.column_values();
    if cfg!(debug_assertions) {
        let mut cost = cost.to_vec();
        cost.resize(values.len(), BigInt::from(0));
        t.check_duality(&cost, &values);
    }
    Some(Outcome::Optimal(values))
}

fn finish(lp: &LinearProgram, columns: &[Column], cols: &[Rational], pivots: usize) -> LpSolution {
    let values: Vec<Rational> = columns.iter().map(|c| c.value(cols)).collect();
    assert!(
        lp.is_feasible_point(&values),
        "simplex returned a point that violates the program"
    );
    let objective = lp.objective_value(&values);
    LpSolution {
        status: LpStatus::Optimal,
        values,
        objective,
        pivots,
    }
}

/// Solves `lp` exactly. An optimal answer is checked against every
/// constraint before it is returned.
pub fn solve_lp(lp: &LinearProgram) -> LpSolution {
    solve_lp_warm(lp).0
}

/// [`solve_lp`], also returning the optimal tableau for warm starts.
pub fn solve_lp_warm(lp: &LinearProgram) -> (LpSolution, Option<WarmStart>) {
    let (columns, sf) = match standard_form(lp) {
        Ok(v) => v,
        Err(status) => return (LpSolution::without_point(status, 0), None),
    };
    let mut outcome = None;
    let mut tableau = None;
    if let Some(mut t) = Tableau::<i128>::from_standard(&sf) {
        if let Some(o) = phases(&mut t, &sf) {
            outcome = Some(o);
            tableau = Some(AnyTableau::Small(t));
        }
    }
    if outcome.is_none() {
        let mut t = Tableau::<BigInt>::from_standard(&sf).expect("big integers do not overflow");
        outcome = Some(phases(&mut t, &sf).expect("big integers do not overflow"));
        tableau = Some(AnyTableau::Big(t));
    }
    let tableau = tableau.expect("set with outcome");
    let pivots = tableau.pivots();
    match outcome.expect("set above") {
        Outcome::Infeasible => (LpSolution::without_point(LpStatus::Infeasible, pivots), None),
        Outcome::Unbounded => (LpSolution::without_point(LpStatus::Unbounded, pivots), None),
        Outcome::Optimal(cols) => {
            let sol = finish(lp, &columns, &cols, pivots);
            let warm = WarmStart {
                tableau,
                columns: Rc::new(columns),
                cost: Rc::new(sf.cost),
            };
            (sol, Some(warm))
        }
    }
}

fn standard_form(lp: &LinearProgram) -> Result<(Vec<Column>, StandardForm), LpStatus> {
    // columns for the structural variables
    let mut columns = Vec::with_capacity(lp.variables.len());
    let mut ncols = 0usize;
    let mut bound_rows: Vec<(usize, Rational)> = Vec::new();
    for v in &lp.variables {
        let col = match (&v.lower, &v.upper) {
            (Some(l), Some(u)) if l == u => Column::Fixed(l.clone()),
            (Some(l), u) => {
                if let Some(u) = u {
                    if u < l {
                        return Err(LpStatus::Infeasible);
                    }
                    bound_rows.push((ncols, u - l));
                }
                ncols += 1;
                Column::Shift(ncols - 1, l.clone())
            }
            (None, Some(u)) => {
                ncols += 1;
                Column::Flip(ncols - 1, u.clone())
            }
            (None, None) => {
                ncols += 2;
                Column::Split(ncols - 2, ncols - 1)
            }
        };
        columns.push(col);
    }

    // rows over structural columns, rhs adjusted for fixed, shifted and
    // flipped variables
    struct Row {
        coeffs: Vec<(usize, Rational)>,
        relation: Relation,
        rhs: Rational,
    }
    let mut rows: Vec<Row> = Vec::with_capacity(lp.constraints.len() + bound_rows.len());
    for c in &lp.constraints {
        let mut coeffs = Vec::new();
        let mut rhs = c.rhs.clone();
        for (j, a) in &c.terms {
            if a.is_zero() {
                continue;
            }
            let (offset, terms) = columns[*j].expand();
            rhs -= a * offset;
            coeffs.extend(terms.into_iter().map(|(k, s)| (k, a * int(s))));
        }
        if coeffs.is_empty() {
            let ok = match c.relation {
                Relation::Le => !rhs.is_negative(),
                Relation::Eq => rhs.is_zero(),
                Relation::Ge => !rhs.is_positive(),
            };
            if !ok {
                return Err(LpStatus::Infeasible);
            }
            continue;
        }
        rows.push(Row {
            coeffs,
            relation: c.relation,
            rhs,
        });
    }
    for (k, u) in bound_rows {
        rows.push(Row {
            coeffs: vec![(k, Rational::one())],
            relation: Relation::Le,
            rhs: u,
        });
    }
    for r in &mut rows {
        if r.rhs.is_negative() {
            r.rhs = -r.rhs.clone();
            for (_, a) in &mut r.coeffs {
                *a = -a.clone();
            }
            r.relation = match r.relation {
                Relation::Le => Relation::Ge,
                Relation::Ge => Relation::Le,
                Relation::Eq => Relation::Eq,
            };
        }
    }

    // slack, surplus and artificial columns
    let m = rows.len();
    let mut identity = vec![0usize; m];
    let mut surplus = vec![None; m];
    let mut artificial = Vec::new();
    for (i, r) in rows.iter().enumerate() {
        match r.relation {
            Relation::Le => {
                identity[i] = ncols;
                ncols += 1;
            }
            Relation::Ge => {
                surplus[i] = Some(ncols);
                identity[i] = ncols + 1;
                artificial.push(ncols + 1);
                ncols += 2;
            }
            Relation::Eq => {
                identity[i] = ncols;
                artificial.push(ncols);
                ncols += 1;
            }
        }
    }
    let mut is_artificial = vec![false; ncols];
    for &j in &artificial {
        is_artificial[j] = true;
    }

    // phase-two costs, always minimising
    let mut c = vec![Rational::zero(); ncols];
    for (j, a) in &lp.objective {
        let a = match lp.sense {
            Sense::Minimize => a.clone(),
            Sense::Maximize => -a.clone(),
        };
        for (k, s) in columns[*j].expand().1 {
            c[k] += &a * int(s);
        }
    }

    // clear denominators row by row
    let mut sf = StandardForm {
        rows: Vec::with_capacity(m),
        rhs: Vec::with_capacity(m),
        basis: identity,
        artificial: is_artificial,
        cost: integral(&c),
        det: BigInt::one(),
        exact_rhs: rows.iter().map(|r| r.rhs.clone()).collect(),
    };
    for (i, r) in rows.iter().enumerate() {
        let mut row = vec![Rational::zero(); ncols];
        for (k, a) in &r.coeffs {
            row[*k] += a;
        }
        if let Some(s) = surplus[i] {
            row[s] = -Rational::one();
        }
        row[sf.basis[i]] = Rational::one();
        row.push(r.rhs.clone());
        let mut row = integral(&row);
        let b = row.pop().expect("rhs entry");
        sf.det *= &row[sf.basis[i]];
        sf.rows.push(row);
        sf.rhs.push(b);
    }
    // every basic entry becomes the common denominator
    for i in 0..m {
        let f = &sf.det / &sf.rows[i][sf.basis[i]];
        if !f.is_one() {
            for v in sf.rows[i].iter_mut() {
                *v *= &f;
            }
            sf.rhs[i] *= &f;
        }
    }
    Ok((columns, sf))
}
