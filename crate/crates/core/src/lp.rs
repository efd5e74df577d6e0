//! Dense two-phase simplex.
//!
//! Every nonemptiness, distance and support query in the crate reduces to a
//! small linear program, so this module is the single numeric backend. Two
//! arithmetic modes share one tableau implementation:
//!
//! - [`LpBackend::Float`]: `f64` with pivot tolerance [`PIVOT_EPS`] and a
//!   phase-one feasibility threshold of [`FEAS_TOL`] on row-normalized data.
//! - [`LpBackend::Exact`]: arbitrary precision rationals. Every `f64`
//!   coefficient converts exactly, so inputs are decided without any
//!   tolerance.
//!
//! Both pivot on the largest reduced cost and switch to Bland's entering rule
//! for the rest of the phase after a run of degenerate pivots. The exact
//! backend pairs it with the lowest-index ratio test, so it cannot cycle.
//! The float backend uses a Harris two-pass ratio test instead, which keeps
//! pivots away from tiny entries on highly degenerate tableaus.

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{FromPrimitive, Signed, ToPrimitive, Zero};
use std::fmt::Debug;

/// Pivot and reduced-cost tolerance of the float backend.
pub const PIVOT_EPS: f64 = 1e-10;
/// Phase-one infeasibility threshold of the float backend.
pub const FEAS_TOL: f64 = 1e-8;

const MAX_ITERATIONS: usize = 200_000;
const DEGENERATE_STREAK: usize = 64;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Default, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum LpBackend {
    #[default]
    Float,
    Exact,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Relation {
    Le,
    Ge,
    Eq,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum VarBound {
    Free,
    NonNegative,
}

#[derive(Clone, Debug)]
pub struct LpRow {
    pub coeffs: Vec<(usize, f64)>,
    pub rel: Relation,
    pub rhs: f64,
}

/// A minimization problem `min c·x` over rows `a·x (<=|>=|=) b`.
#[derive(Clone, Debug, Default)]
pub struct Lp {
    bounds: Vec<VarBound>,
    rows: Vec<LpRow>,
    objective: Vec<(usize, f64)>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum LpStatus {
    Optimal,
    Infeasible,
    Unbounded,
}

#[derive(Clone, Debug)]
pub struct LpSolution {
    pub status: LpStatus,
    /// Primal point; empty unless `status == Optimal`.
    pub x: Vec<f64>,
    /// Objective value of the minimization; `0` for pure feasibility.
    pub value: f64,
}

impl LpSolution {
    pub fn is_optimal(&self) -> bool {
        self.status == LpStatus::Optimal
    }
}

#[derive(Clone, Debug, PartialEq, Eq, thiserror::Error)]
pub enum LpError {
    #[error("simplex exceeded {0} iterations")]
    IterationLimit(usize),
    #[error("non-finite coefficient in linear program")]
    NonFinite,
}

impl Lp {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn num_vars(&self) -> usize {
        self.bounds.len()
    }

    pub fn num_rows(&self) -> usize {
        self.rows.len()
    }

    pub fn add_var(&mut self, bound: VarBound) -> usize {
        self.bounds.push(bound);
        self.bounds.len() - 1
    }

    /// Adds `count` variables and returns the index of the first.
    pub fn add_vars(&mut self, count: usize, bound: VarBound) -> usize {
        let first = self.bounds.len();
        self.bounds.extend(std::iter::repeat(bound).take(count));
        first
    }

    pub fn add_row(&mut self, coeffs: Vec<(usize, f64)>, rel: Relation, rhs: f64) {
        debug_assert!(coeffs.iter().all(|&(j, _)| j < self.bounds.len()));
        self.rows.push(LpRow { coeffs, rel, rhs });
    }

    pub fn minimize(&mut self, coeffs: Vec<(usize, f64)>) {
        self.objective = coeffs;
    }

    pub fn maximize(&mut self, coeffs: Vec<(usize, f64)>) {
        self.objective = coeffs.into_iter().map(|(j, c)| (j, -c)).collect();
    }

    pub fn solve(&self, backend: LpBackend) -> Result<LpSolution, LpError> {
        let finite = self
            .rows
            .iter()
            .all(|r| r.rhs.is_finite() && r.coeffs.iter().all(|c| c.1.is_finite()))
            && self.objective.iter().all(|c| c.1.is_finite());
        if !finite {
            return Err(LpError::NonFinite);
        }
        match backend {
            LpBackend::Float => solve_generic::<f64>(self, true),
            LpBackend::Exact => solve_generic::<Rational>(self, false),
        }
    }
}

/// Arithmetic used by the tableau. Sign tests of the float implementation are
/// tolerance-based; the rational ones are exact.
trait Field: Clone + Debug {
    fn zero() -> Self;
    fn one() -> Self;
    fn from_f64(v: f64) -> Self;
    fn to_f64(&self) -> f64;
    fn add(&self, o: &Self) -> Self;
    fn sub(&self, o: &Self) -> Self;
    fn mul(&self, o: &Self) -> Self;
    fn div(&self, o: &Self) -> Self;
    fn neg(&self) -> Self;
    fn is_pos(&self) -> bool;
    fn is_neg(&self) -> bool;
    fn is_exact_zero(&self) -> bool;
    fn lt(&self, o: &Self) -> bool;
    fn abs_gt(&self, o: &Self) -> bool;
    /// Harris ratio-test slack; `None` selects the strict test.
    const HARRIS: Option<f64>;
    /// Phase-one objective test: is the artificial sum still positive?
    fn infeasible_residual(&self) -> bool;
    fn cleanup(&mut self) {}
}

impl Field for f64 {
    const HARRIS: Option<f64> = Some(1e-9);
    fn zero() -> Self {
        0.0
    }
    fn one() -> Self {
        1.0
    }
    fn from_f64(v: f64) -> Self {
        v
    }
    fn to_f64(&self) -> f64 {
        *self
    }
    fn add(&self, o: &Self) -> Self {
        self + o
    }
    fn sub(&self, o: &Self) -> Self {
        self - o
    }
    fn mul(&self, o: &Self) -> Self {
        self * o
    }
    fn div(&self, o: &Self) -> Self {
        self / o
    }
    fn neg(&self) -> Self {
        -self
    }
    fn is_pos(&self) -> bool {
        *self > PIVOT_EPS
    }
    fn is_neg(&self) -> bool {
        *self < -PIVOT_EPS
    }
    fn is_exact_zero(&self) -> bool {
        *self == 0.0
    }
    fn lt(&self, o: &Self) -> bool {
        self < o
    }
    fn abs_gt(&self, o: &Self) -> bool {
        self.abs() > o.abs()
    }
    fn infeasible_residual(&self) -> bool {
        *self > FEAS_TOL
    }
    fn cleanup(&mut self) {
        if self.abs() < 1e-14 {
            *self = 0.0;
        }
    }
}

#[derive(Clone, Debug)]
struct Rational(BigRational);

impl Field for Rational {
    const HARRIS: Option<f64> = None;
    fn zero() -> Self {
        Rational(BigRational::zero())
    }
    fn one() -> Self {
        Rational(BigRational::from_integer(BigInt::from(1)))
    }
    fn from_f64(v: f64) -> Self {
        Rational(BigRational::from_f64(v).expect("finite coefficient"))
    }
    fn to_f64(&self) -> f64 {
        self.0.to_f64().unwrap_or(f64::NAN)
    }
    fn add(&self, o: &Self) -> Self {
        Rational(&self.0 + &o.0)
    }
    fn sub(&self, o: &Self) -> Self {
        Rational(&self.0 - &o.0)
    }
    fn mul(&self, o: &Self) -> Self {
        Rational(&self.0 * &o.0)
    }
    fn div(&self, o: &Self) -> Self {
        Rational(&self.0 / &o.0)
    }
    fn neg(&self) -> Self {
        Rational(-&self.0)
    }
    fn is_pos(&self) -> bool {
        self.0.is_positive()
    }
    fn is_neg(&self) -> bool {
        self.0.is_negative()
    }
    fn is_exact_zero(&self) -> bool {
        self.0.is_zero()
    }
    fn lt(&self, o: &Self) -> bool {
        self.0 < o.0
    }
    fn abs_gt(&self, o: &Self) -> bool {
        self.0.abs() > o.0.abs()
    }
    fn infeasible_residual(&self) -> bool {
        self.0.is_positive()
    }
}

#[derive(Clone, Copy, PartialEq, Eq)]
enum ColKind {
    Structural,
    Slack,
    Artificial,
}

struct Tableau<T> {
    /// Row-major constraint rows; the last entry of each row is the rhs.
    a: Vec<Vec<T>>,
    /// Reduced-cost row; the last entry is minus the objective value.
    z: Vec<T>,
    basis: Vec<usize>,
    kinds: Vec<ColKind>,
}

enum PhaseEnd {
    Optimal,
    Unbounded,
}

impl<T: Field> Tableau<T> {
    fn cols(&self) -> usize {
        self.kinds.len()
    }

    fn pivot(&mut self, r: usize, c: usize) {
        let n = self.cols();
        let p = self.a[r][c].clone();
        for v in self.a[r].iter_mut() {
            *v = v.div(&p);
        }
        let pivot_row = self.a[r].clone();
        for (i, row) in self.a.iter_mut().enumerate() {
            if i == r {
                continue;
            }
            let f = row[c].clone();
            if f.is_exact_zero() {
                continue;
            }
            for j in 0..=n {
                if pivot_row[j].is_exact_zero() {
                    continue;
                }
                row[j] = row[j].sub(&f.mul(&pivot_row[j]));
                row[j].cleanup();
            }
            row[c] = T::zero();
        }
        let f = self.z[c].clone();
        if !f.is_exact_zero() {
            for j in 0..=n {
                if pivot_row[j].is_exact_zero() {
                    continue;
                }
                self.z[j] = self.z[j].sub(&f.mul(&pivot_row[j]));
                self.z[j].cleanup();
            }
            self.z[c] = T::zero();
        }
        self.basis[r] = c;
    }

    fn entering(&self, allow_artificial: bool, bland: bool) -> Option<usize> {
        let n = self.cols();
        let mut best: Option<usize> = None;
        for j in 0..n {
            if !allow_artificial && self.kinds[j] == ColKind::Artificial {
                continue;
            }
            if !self.z[j].is_neg() {
                continue;
            }
            if bland {
                return Some(j);
            }
            match best {
                Some(b) if !self.z[j].lt(&self.z[b]) => {}
                _ => best = Some(j),
            }
        }
        best
    }

    fn leaving(&self, c: usize) -> Option<usize> {
        if let Some(slack) = T::HARRIS {
            return self.leaving_harris(c, slack);
        }
        let n = self.cols();
        let mut best: Option<(usize, T)> = None;
        for (i, row) in self.a.iter().enumerate() {
            if !row[c].is_pos() {
                continue;
            }
            let ratio = row[n].div(&row[c]);
            match &best {
                None => best = Some((i, ratio)),
                Some((bi, br)) => {
                    if ratio.lt(br) || (!br.lt(&ratio) && self.basis[i] < self.basis[*bi]) {
                        best = Some((i, ratio));
                    }
                }
            }
        }
        best.map(|(i, _)| i)
    }

    /// Two-pass test: among rows whose ratio is within `slack` of the
    /// relaxed minimum, pivot on the largest entry.
    fn leaving_harris(&self, c: usize, slack: f64) -> Option<usize> {
        let n = self.cols();
        let entry = |i: usize| self.a[i][c].to_f64();
        let rhs = |i: usize| self.a[i][n].to_f64().max(0.0);
        let rows = || (0..self.a.len()).filter(|&i| self.a[i][c].is_pos());
        let bound = rows().map(|i| (rhs(i) + slack) / entry(i)).fold(f64::INFINITY, f64::min);
        rows()
            .filter(|&i| rhs(i) / entry(i) <= bound)
            .max_by(|&i, &j| entry(i).total_cmp(&entry(j)).then(self.basis[j].cmp(&self.basis[i])))
    }

    fn run(&mut self, allow_artificial: bool, iters: &mut usize) -> Result<PhaseEnd, LpError> {
        let n = self.cols();
        let mut streak = 0usize;
        let mut bland = false;
        loop {
            *iters += 1;
            if *iters > MAX_ITERATIONS {
                return Err(LpError::IterationLimit(MAX_ITERATIONS));
            }
            // Once engaged, Bland's rule stays for the rest of the phase.
            bland |= streak >= DEGENERATE_STREAK;
            let Some(c) = self.entering(allow_artificial, bland) else {
                return Ok(PhaseEnd::Optimal);
            };
            let Some(r) = self.leaving(c) else {
                return Ok(PhaseEnd::Unbounded);
            };
            if self.a[r][n].is_pos() {
                streak = 0;
            } else {
                streak += 1;
            }
            self.pivot(r, c);
        }
    }
}

fn solve_generic<T: Field>(lp: &Lp, scale_rows: bool) -> Result<LpSolution, LpError> {
    let nvars = lp.bounds.len();
    // Column layout: each free variable becomes (plus, minus).
    let mut col_of: Vec<(usize, Option<usize>)> = Vec::with_capacity(nvars);
    let mut kinds: Vec<ColKind> = Vec::new();
    for b in &lp.bounds {
        let plus = kinds.len();
        kinds.push(ColKind::Structural);
        let minus = match b {
            VarBound::Free => {
                kinds.push(ColKind::Structural);
                Some(plus + 1)
            }
            VarBound::NonNegative => None,
        };
        col_of.push((plus, minus));
    }

    // Normalize rows: drop empty rows, scale, make rhs nonnegative.
    struct NormRow<T> {
        coeffs: Vec<(usize, T)>,
        rel: Relation,
        rhs: T,
    }
    let mut rows: Vec<NormRow<T>> = Vec::with_capacity(lp.rows.len());
    for row in &lp.rows {
        let mut dense: Vec<(usize, f64)> = Vec::with_capacity(row.coeffs.len());
        for &(j, v) in &row.coeffs {
            if v == 0.0 {
                continue;
            }
            match dense.iter_mut().find(|e| e.0 == j) {
                Some(e) => e.1 += v,
                None => dense.push((j, v)),
            }
        }
        dense.retain(|e| e.1 != 0.0);
        let scale = if scale_rows {
            dense.iter().fold(0.0f64, |acc, e| acc.max(e.1.abs()))
        } else {
            1.0
        };
        if dense.is_empty() {
            let rhs = T::from_f64(row.rhs);
            let ok = match row.rel {
                Relation::Le => !rhs.is_neg(),
                Relation::Ge => !rhs.is_pos(),
                Relation::Eq => !rhs.is_neg() && !rhs.is_pos(),
            };
            if !ok {
                return Ok(LpSolution {
                    status: LpStatus::Infeasible,
                    x: Vec::new(),
                    value: 0.0,
                });
            }
            continue;
        }
        let mut coeffs: Vec<(usize, T)> = dense
            .iter()
            .map(|&(j, v)| (j, T::from_f64(if scale_rows { v / scale } else { v })))
            .collect();
        let mut rhs = T::from_f64(if scale_rows { row.rhs / scale } else { row.rhs });
        let mut rel = row.rel;
        if rhs.is_neg() || (rhs.lt(&T::zero())) {
            coeffs = coeffs.into_iter().map(|(j, v)| (j, v.neg())).collect();
            rhs = rhs.neg();
            rel = match rel {
                Relation::Le => Relation::Ge,
                Relation::Ge => Relation::Le,
                Relation::Eq => Relation::Eq,
            };
        }
        rows.push(NormRow { coeffs, rel, rhs });
    }

    let structural = kinds.len();
    let mut slack_col: Vec<Option<usize>> = Vec::with_capacity(rows.len());
    for r in &rows {
        match r.rel {
            Relation::Le | Relation::Ge => {
                slack_col.push(Some(kinds.len()));
                kinds.push(ColKind::Slack);
            }
            Relation::Eq => slack_col.push(None),
        }
    }
    let mut art_col: Vec<Option<usize>> = Vec::with_capacity(rows.len());
    for r in &rows {
        match r.rel {
            Relation::Le => art_col.push(None),
            Relation::Ge | Relation::Eq => {
                art_col.push(Some(kinds.len()));
                kinds.push(ColKind::Artificial);
            }
        }
    }
    let ncols = kinds.len();
    let mut a: Vec<Vec<T>> = Vec::with_capacity(rows.len());
    let mut basis = Vec::with_capacity(rows.len());
    for (i, r) in rows.iter().enumerate() {
        let mut dense = vec![T::zero(); ncols + 1];
        for (j, v) in &r.coeffs {
            let (plus, minus) = col_of[*j];
            dense[plus] = dense[plus].add(v);
            if let Some(mc) = minus {
                dense[mc] = dense[mc].sub(v);
            }
        }
        if let Some(s) = slack_col[i] {
            dense[s] = match r.rel {
                Relation::Le => T::one(),
                _ => T::one().neg(),
            };
        }
        dense[ncols] = r.rhs.clone();
        match art_col[i] {
            Some(ac) => {
                dense[ac] = T::one();
                basis.push(ac);
            }
            None => basis.push(slack_col[i].expect("le row has slack")),
        }
        a.push(dense);
    }

    let mut tab = Tableau {
        a,
        z: vec![T::zero(); ncols + 1],
        basis,
        kinds,
    };
    let mut iters = 0usize;

    // Phase one: minimize the artificial sum.
    let has_artificial = art_col.iter().any(|c| c.is_some());
    if has_artificial {
        for (i, row) in tab.a.iter().enumerate() {
            if art_col[i].is_some() {
                for j in 0..=ncols {
                    if tab.kinds.get(j) == Some(&ColKind::Artificial) {
                        continue;
                    }
                    tab.z[j] = tab.z[j].sub(&row[j]);
                }
            }
        }
        tab.run(true, &mut iters)?;
        let residual = tab.z[ncols].neg();
        if residual.infeasible_residual() {
            return Ok(LpSolution {
                status: LpStatus::Infeasible,
                x: Vec::new(),
                value: 0.0,
            });
        }
        // Drive remaining artificials out of the basis.
        let mut r = 0;
        while r < tab.a.len() {
            if tab.kinds[tab.basis[r]] != ColKind::Artificial {
                r += 1;
                continue;
            }
            let mut best: Option<usize> = None;
            for j in 0..ncols {
                if tab.kinds[j] == ColKind::Artificial || !tab.a[r][j].abs_gt(&T::zero()) {
                    continue;
                }
                if scale_rows && tab.a[r][j].to_f64().abs() <= PIVOT_EPS {
                    continue;
                }
                match best {
                    Some(b) if !tab.a[r][j].abs_gt(&tab.a[r][b]) => {}
                    _ => best = Some(j),
                }
            }
            match best {
                Some(j) => {
                    tab.pivot(r, j);
                    r += 1;
                }
                None => {
                    tab.a.remove(r);
                    tab.basis.remove(r);
                }
            }
        }
    }

    // Phase two.
    let mut cost = vec![T::zero(); ncols + 1];
    for &(j, c) in &lp.objective {
        let (plus, minus) = col_of[j];
        let cv = T::from_f64(c);
        cost[plus] = cost[plus].add(&cv);
        if let Some(mc) = minus {
            cost[mc] = cost[mc].sub(&cv);
        }
    }
    tab.z = cost;
    for i in 0..tab.a.len() {
        let b = tab.basis[i];
        let f = tab.z[b].clone();
        if f.is_exact_zero() {
            continue;
        }
        for j in 0..=ncols {
            tab.z[j] = tab.z[j].sub(&f.mul(&tab.a[i][j]));
        }
    }
    let end = tab.run(false, &mut iters)?;
    if let PhaseEnd::Unbounded = end {
        return Ok(LpSolution {
            status: LpStatus::Unbounded,
            x: Vec::new(),
            value: f64::NEG_INFINITY,
        });
    }

    let mut colval = vec![0.0f64; ncols];
    for (i, &b) in tab.basis.iter().enumerate() {
        colval[b] = tab.a[i][ncols].to_f64();
    }
    debug_assert!(structural <= ncols);
    let x: Vec<f64> = col_of
        .iter()
        .map(|&(p, m)| colval[p] - m.map_or(0.0, |mc| colval[mc]))
        .collect();
    let value = lp.objective.iter().map(|&(j, c)| c * x[j]).sum();
    Ok(LpSolution {
        status: LpStatus::Optimal,
        x,
        value,
    })
}
