//! The selection problem and the LP blocks shared by every query on it.

use crate::convex::{feasible_with, Polytope};
use crate::error::{Error, Result};
use crate::lp::{Lp, LpBackend, LpStatus, Relation, VarBound};
use crate::metric::{MetricTree, PseudoSpace, SpaceSpec};
use crate::norm::{add_norm_le, diff, Affine, NormTag};
use serde::{Deserialize, Serialize};

/// A pseudometric space, a polyhedral norm on R^m, one polytope per point,
/// and a Lipschitz budget `λ`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "ProblemJson", into = "ProblemJson")]
pub struct SelectionProblem {
    pub space: PseudoSpace,
    /// The tree the space came from, when it was given as one.
    pub tree: Option<MetricTree>,
    pub m: usize,
    pub norm: NormTag,
    pub f: Vec<Polytope>,
    pub lambda: f64,
    /// LP arithmetic used by every query on this problem.
    pub backend: LpBackend,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
struct ProblemJson {
    space: SpaceSpec,
    m: usize,
    #[serde(default)]
    norm: NormTag,
    #[serde(rename = "F")]
    f: Vec<Polytope>,
    #[serde(default = "one")]
    lambda: f64,
}

fn one() -> f64 {
    1.0
}

impl TryFrom<ProblemJson> for SelectionProblem {
    type Error = Error;

    fn try_from(j: ProblemJson) -> Result<Self> {
        let space = j.space.to_space()?;
        let tree = j.space.tree().cloned();
        SelectionProblem::new(space, tree, j.m, j.norm, j.f, j.lambda)
    }
}

impl From<SelectionProblem> for ProblemJson {
    fn from(p: SelectionProblem) -> Self {
        let space = match p.tree {
            Some(tree) => SpaceSpec::Tree { tree },
            None => SpaceSpec::Dist { dist: p.space.dist },
        };
        ProblemJson {
            space,
            m: p.m,
            norm: p.norm,
            f: p.f,
            lambda: p.lambda,
        }
    }
}

impl SelectionProblem {
    pub fn new(
        space: PseudoSpace,
        tree: Option<MetricTree>,
        m: usize,
        norm: NormTag,
        f: Vec<Polytope>,
        lambda: f64,
    ) -> Result<Self> {
        if m == 0 {
            return Err(Error::Invalid("m must be positive".into()));
        }
        if f.len() != space.len() {
            return Err(Error::SizeMismatch(format!(
                "{} polytopes for {} points",
                f.len(),
                space.len()
            )));
        }
        for p in &f {
            if p.dim != m {
                return Err(Error::DimensionMismatch {
                    expected: m,
                    found: p.dim,
                });
            }
            p.validate()?;
        }
        if !(lambda > 0.0) || !lambda.is_finite() {
            return Err(Error::Invalid(format!("lambda must be positive, got {lambda}")));
        }
        Ok(SelectionProblem {
            space,
            tree,
            m,
            norm,
            f,
            lambda,
            backend: LpBackend::Float,
        })
    }

    pub fn n(&self) -> usize {
        self.space.len()
    }

    pub fn with_lambda(&self, lambda: f64) -> Self {
        SelectionProblem {
            lambda,
            ..self.clone()
        }
    }

    /// Checks that every `F(x)` is nonempty.
    pub fn check_feasible_values(&self) -> Result<()> {
        for (x, p) in self.f.iter().enumerate() {
            if !feasible_with(p, self.backend)? {
                return Err(Error::NoSelection(format!("F({x}) is empty")));
            }
        }
        Ok(())
    }

    /// Subproblem on `points` (in the given order); the tree is dropped.
    pub fn restrict(&self, points: &[usize]) -> SelectionProblem {
        SelectionProblem {
            space: self.space.subspace(points),
            tree: None,
            m: self.m,
            norm: self.norm,
            f: points.iter().map(|&x| self.f[x].clone()).collect(),
            lambda: self.lambda,
            backend: self.backend,
        }
    }

    /// Stable 64-bit FNV-1a fingerprint of the numeric content.
    pub fn fingerprint(&self) -> u64 {
        let mut h = Fnv::default();
        h.u64(self.m as u64);
        h.u64(self.norm as u64);
        h.f64(self.lambda);
        for row in &self.space.dist {
            for &d in row {
                h.f64(d);
            }
        }
        for p in &self.f {
            h.u64(p.rows.len() as u64);
            for r in &p.rows {
                r.a.iter().for_each(|&v| h.f64(v));
                h.f64(r.b);
            }
        }
        h.0
    }
}

struct Fnv(u64);

impl Default for Fnv {
    fn default() -> Self {
        Fnv(0xcbf2_9ce4_8422_2325)
    }
}

impl Fnv {
    fn u64(&mut self, v: u64) {
        for b in v.to_le_bytes() {
            self.0 ^= b as u64;
            self.0 = self.0.wrapping_mul(0x0100_0000_01b3);
        }
    }

    fn f64(&mut self, v: f64) {
        self.u64(v.to_bits());
    }
}

/// Right-hand side of the pairwise constraints.
#[derive(Clone, Copy, Debug)]
pub(crate) enum Bound {
    /// `‖f(z) - f(w)‖ <= λ ρ(z, w)`.
    Fixed(f64),
    /// `‖f(z) - f(w)‖ <= t ρ(z, w)` for the LP variable `t`.
    Var(usize),
}

/// Adds a selection on `points`: one block of `m` variables per point
/// (reusing `vars[z]` when already set, otherwise creating it together with
/// the rows of `F(z)`), and the Lipschitz constraints between every pair.
/// Pairs at infinite distance are unconstrained; pairs at distance zero are
/// forced equal.
pub(crate) fn add_selection(
    lp: &mut Lp,
    p: &SelectionProblem,
    points: &[usize],
    vars: &mut [Option<usize>],
    bound: Bound,
) {
    let m = p.m;
    for &z in points {
        if vars[z].is_none() {
            let v = lp.add_vars(m, VarBound::Free);
            p.f[z].add_to_lp(lp, v);
            vars[z] = Some(v);
        }
    }
    for (i, &z) in points.iter().enumerate() {
        for &w in &points[i + 1..] {
            let (vz, vw) = (vars[z].unwrap(), vars[w].unwrap());
            if vz == vw {
                continue;
            }
            add_pair(lp, p, vz, vw, p.space.d(z, w), bound);
        }
    }
}

/// Lipschitz constraint between two variable blocks at distance `rho`.
pub(crate) fn add_pair(lp: &mut Lp, p: &SelectionProblem, vz: usize, vw: usize, rho: f64, bound: Bound) {
    if rho.is_infinite() {
        return;
    }
    if rho == 0.0 {
        for i in 0..p.m {
            lp.add_row(vec![(vz + i, 1.0), (vw + i, -1.0)], Relation::Eq, 0.0);
        }
        return;
    }
    let rhs = match bound {
        Bound::Fixed(l) => Affine::constant(l * rho),
        Bound::Var(t) => Affine::scaled_var(t, rho),
    };
    add_norm_le(lp, p.norm, &diff(vz, vw, p.m), &rhs);
}

/// Fixes a variable block to a point.
pub(crate) fn fix_block(lp: &mut Lp, v: usize, xi: &[f64]) {
    for (i, &val) in xi.iter().enumerate() {
        lp.add_row(vec![(v + i, 1.0)], Relation::Eq, val);
    }
}

/// Smallest Lipschitz constant of a selection on `points`, with a minimizer.
///
/// `Ok(INF)` means every `F(z)` is nonempty but no selection exists at any
/// constant, which happens when points at distance zero have disjoint sets.
pub(crate) fn optimal_lambda_on(p: &SelectionProblem, points: &[usize]) -> Result<(f64, Vec<Vec<f64>>)> {
    let mut lp = Lp::new();
    let t = lp.add_var(VarBound::NonNegative);
    let mut vars = vec![None; p.n()];
    add_selection(&mut lp, p, points, &mut vars, Bound::Var(t));
    lp.minimize(vec![(t, 1.0)]);
    let sol = lp.solve(p.backend)?;
    match sol.status {
        LpStatus::Optimal => {
            let values = points
                .iter()
                .map(|&z| {
                    let v = vars[z].unwrap();
                    sol.x[v..v + p.m].to_vec()
                })
                .collect();
            Ok((sol.x[t].max(0.0), values))
        }
        LpStatus::Infeasible => {
            for &z in points {
                if !feasible_with(&p.f[z], p.backend)? {
                    return Err(Error::NoSelection(format!("F({z}) is empty")));
                }
            }
            Ok((f64::INFINITY, Vec::new()))
        }
        LpStatus::Unbounded => unreachable!("objective t >= 0 is bounded below"),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn interval_problem() -> SelectionProblem {
        let space = PseudoSpace::new(vec![vec![0.0, 1.0], vec![1.0, 0.0]]).unwrap();
        SelectionProblem::new(
            space,
            None,
            1,
            NormTag::Linf,
            vec![Polytope::cube(&[0.0], &[0.0]), Polytope::cube(&[2.0], &[4.0])],
            1.0,
        )
        .unwrap()
    }

    #[test]
    fn optimal_lambda_of_two_intervals() {
        let p = interval_problem();
        let (l, vals) = optimal_lambda_on(&p, &[0, 1]).unwrap();
        assert!((l - 2.0).abs() < 1e-12);
        assert!((vals[1][0] - 2.0).abs() < 1e-12);
    }

    #[test]
    fn zero_distance_conflict_is_infinite() {
        let space = PseudoSpace::new(vec![vec![0.0, 0.0], vec![0.0, 0.0]]).unwrap();
        let p = SelectionProblem::new(
            space,
            None,
            1,
            NormTag::Linf,
            vec![Polytope::cube(&[0.0], &[0.0]), Polytope::cube(&[2.0], &[4.0])],
            1.0,
        )
        .unwrap();
        assert_eq!(optimal_lambda_on(&p, &[0, 1]).unwrap().0, f64::INFINITY);
    }

    #[test]
    fn json_round_trip() {
        let p = interval_problem();
        let s = crate::json::to_string(&p).unwrap();
        assert!(s.contains("\"F\""));
        let back: SelectionProblem = serde_json::from_str(&s).unwrap();
        assert_eq!(back, p);
        assert_eq!(back.fingerprint(), p.fingerprint());
    }
}
