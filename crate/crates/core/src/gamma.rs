//! Γ-set queries: membership in `Γ(x, S)` and `Γ_ℓ(x)`, the explicit `Γ_0`
//! polytope, the two structural properties of `Γ_ℓ`, and the refinement
//! recursion that builds selections on small sets from a point of `Γ_ℓ`.
//!
//! `Γ_ℓ(x)` for `ℓ >= 1` is never built as a polytope. Every query is one LP
//! or a family of independent LPs.

use crate::convex::{inflate_with, Polytope};
use crate::error::{Error, Result};
use crate::lp::{Lp, LpStatus, VarBound};
use crate::norm::{add_norm_le, diff_point, Affine};
use crate::problem::{add_selection, fix_block, optimal_lambda_on, Bound, SelectionProblem};
use itertools::Itertools;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

pub const DEFAULT_BUDGET: usize = 200_000;

const K_LIMIT: u64 = 1 << 62;

/// `k_ℓ = (m + 2)^ℓ`.
pub fn k_ell(m: usize, ell: u32) -> Result<u64> {
    let base = m as u64 + 2;
    let mut k: u64 = 1;
    for _ in 0..ell {
        k = k
            .checked_mul(base)
            .filter(|&k| k <= K_LIMIT)
            .ok_or(Error::Overflow { m, ell })?;
    }
    Ok(k)
}

/// `C(n, k)`, saturating at `u128::MAX`.
pub fn binomial(n: usize, k: usize) -> u128 {
    if k > n {
        return 0;
    }
    let k = k.min(n - k);
    let mut c: u128 = 1;
    for i in 0..k {
        c = match c.checked_mul((n - i) as u128) {
            Some(v) => v / (i as u128 + 1),
            None => return u128::MAX,
        };
    }
    c
}

/// The subsets a query will test.
#[derive(Clone, Debug)]
pub struct SubsetPlan {
    pub subsets: Vec<Vec<usize>>,
    /// False when the subsets are a sample.
    pub exhaustive: bool,
}

/// All subsets of size `min(k, #pool)` of the points other than `exclude`,
/// or `budget` of them drawn with a generator keyed on the instance and
/// `salt` when there are more than `budget`.
///
/// Testing only the maximal subsets is enough: `Γ(x, S)` shrinks as `S`
/// grows and `Γ(x, S ∪ {x}) = Γ(x, S)`.
pub fn subset_plan(p: &SelectionProblem, exclude: Option<usize>, k: u64, budget: usize, salt: u64) -> SubsetPlan {
    let pool: Vec<usize> = (0..p.n()).filter(|&z| Some(z) != exclude).collect();
    let size = (k.min(pool.len() as u64)) as usize;
    let total = binomial(pool.len(), size);
    if total <= budget as u128 {
        return SubsetPlan {
            subsets: pool.iter().copied().combinations(size).collect(),
            exhaustive: true,
        };
    }
    let mut rng = ChaCha8Rng::seed_from_u64(p.fingerprint() ^ salt.wrapping_mul(0x9E37_79B9_7F4A_7C15));
    let subsets = (0..budget)
        .map(|_| {
            let mut s: Vec<usize> = rand::seq::index::sample(&mut rng, pool.len(), size)
                .into_iter()
                .map(|i| pool[i])
                .collect();
            s.sort_unstable();
            s
        })
        .collect();
    SubsetPlan {
        subsets,
        exhaustive: false,
    }
}

fn check_point(p: &SelectionProblem, xi: &[f64]) -> Result<()> {
    if xi.len() != p.m {
        return Err(Error::DimensionMismatch {
            expected: p.m,
            found: xi.len(),
        });
    }
    Ok(())
}

fn union_with(x: usize, s: &[usize]) -> Vec<usize> {
    let mut pts = vec![x];
    pts.extend(s.iter().copied().filter(|&z| z != x));
    pts
}

/// Whether `ξ ∈ Γ(x, S)`: some λ-Lipschitz selection on `S ∪ {x}` takes the
/// value `ξ` at `x`.
pub fn gamma_membership(p: &SelectionProblem, x: usize, s: &[usize], xi: &[f64]) -> Result<bool> {
    check_point(p, xi)?;
    let mut lp = Lp::new();
    let mut vars = vec![None; p.n()];
    let vx = lp.add_vars(p.m, VarBound::Free);
    fix_block(&mut lp, vx, xi);
    p.f[x].add_to_lp(&mut lp, vx);
    vars[x] = Some(vx);
    add_selection(&mut lp, p, &union_with(x, s), &mut vars, Bound::Fixed(p.lambda));
    Ok(lp.solve(p.backend)?.status == LpStatus::Optimal)
}

/// `Γ_0(x)`: the intersection of `F(z) + λρ(x, z)B` over all `z`.
pub fn gamma0(p: &SelectionProblem, x: usize) -> Result<Polytope> {
    let mut rows = Vec::new();
    for z in 0..p.n() {
        let r = p.space.d(x, z);
        if r.is_infinite() {
            continue;
        }
        rows.extend(inflate_with(&p.f[z], p.lambda * r, p.norm, p.backend)?.rows);
    }
    Polytope::new(p.m, rows)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Decision {
    True,
    False,
    /// Every sampled subset accepted, but the enumeration was not exhaustive.
    Partial,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct GammaQuery {
    pub x: usize,
    pub ell: u32,
    #[serde(default = "default_budget")]
    pub budget: usize,
}

fn default_budget() -> usize {
    DEFAULT_BUDGET
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GammaResult {
    pub x: usize,
    pub ell: u32,
    pub xi: Vec<f64>,
    pub decision: Decision,
    #[serde(rename = "witness_S")]
    pub witness_s: Option<Vec<usize>>,
}

fn gamma_plan(p: &SelectionProblem, x: usize, ell: u32, budget: usize) -> Result<SubsetPlan> {
    let k = k_ell(p.m, ell)?;
    Ok(subset_plan(p, Some(x), k, budget, ((x as u64) << 32) ^ ell as u64))
}

/// Membership of `ξ` in `Γ_ℓ(x)`. A rejection names the first failing subset
/// in enumeration order.
pub fn gamma_ell_membership(p: &SelectionProblem, q: GammaQuery, xi: &[f64]) -> Result<GammaResult> {
    check_point(p, xi)?;
    let plan = gamma_plan(p, q.x, q.ell, q.budget)?;
    let verdicts = plan
        .subsets
        .par_iter()
        .map(|s| gamma_membership(p, q.x, s, xi))
        .collect::<Result<Vec<bool>>>()?;
    let first_fail = verdicts.iter().position(|&ok| !ok);
    let (decision, witness_s) = match first_fail {
        Some(i) => (Decision::False, Some(plan.subsets[i].clone())),
        None if plan.exhaustive => (Decision::True, None),
        None => (Decision::Partial, None),
    };
    Ok(GammaResult {
        x: q.x,
        ell: q.ell,
        xi: xi.to_vec(),
        decision,
        witness_s,
    })
}

/// Adds variables for a point of `Γ_ℓ(x)`: one shared block for `ξ` and one
/// selection per planned subset, all tied to `ξ` at `x`.
fn add_gamma_ell(lp: &mut Lp, p: &SelectionProblem, x: usize, plan: &SubsetPlan) -> usize {
    let vx = lp.add_vars(p.m, VarBound::Free);
    p.f[x].add_to_lp(lp, vx);
    for s in &plan.subsets {
        let mut vars = vec![None; p.n()];
        vars[x] = Some(vx);
        add_selection(lp, p, &union_with(x, s), &mut vars, Bound::Fixed(p.lambda));
    }
    vx
}

/// Some point of `Γ_ℓ(x)`, or `None` when the planned subsets admit none.
/// The second value reports whether the plan was exhaustive.
pub fn gamma_ell_point(p: &SelectionProblem, x: usize, ell: u32, budget: usize) -> Result<(Option<Vec<f64>>, bool)> {
    let plan = gamma_plan(p, x, ell, budget)?;
    let mut lp = Lp::new();
    let vx = add_gamma_ell(&mut lp, p, x, &plan);
    let sol = lp.solve(p.backend)?;
    let pt = sol.is_optimal().then(|| sol.x[vx..vx + p.m].to_vec());
    Ok((pt, plan.exhaustive))
}

/// The point of `Γ_ℓ(x)` nearest to `target`, with its distance.
pub fn gamma_ell_nearest(
    p: &SelectionProblem,
    x: usize,
    ell: u32,
    budget: usize,
    target: &[f64],
) -> Result<Option<(f64, Vec<f64>)>> {
    check_point(p, target)?;
    let plan = gamma_plan(p, x, ell, budget)?;
    let mut lp = Lp::new();
    let vx = add_gamma_ell(&mut lp, p, x, &plan);
    let t = lp.add_var(VarBound::NonNegative);
    add_norm_le(&mut lp, p.norm, &diff_point(vx, target), &Affine::var(t));
    lp.minimize(vec![(t, 1.0)]);
    let sol = lp.solve(p.backend)?;
    Ok(sol
        .is_optimal()
        .then(|| (sol.x[t].max(0.0), sol.x[vx..vx + p.m].to_vec())))
}

/// Points of `Γ_ℓ(x)` extreme in each coordinate direction.
fn gamma_ell_samples(p: &SelectionProblem, x: usize, plan: &SubsetPlan) -> Result<Vec<Vec<f64>>> {
    let mut lp = Lp::new();
    let vx = add_gamma_ell(&mut lp, p, x, plan);
    let mut out: Vec<Vec<f64>> = Vec::new();
    for i in 0..p.m {
        for sign in [1.0, -1.0] {
            lp.minimize(vec![(vx + i, sign)]);
            let sol = lp.solve(p.backend)?;
            if sol.is_optimal() {
                let pt = sol.x[vx..vx + p.m].to_vec();
                if !out.contains(&pt) {
                    out.push(pt);
                }
            }
        }
    }
    Ok(out)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum GabWitness {
    /// `Γ_ℓ(x)` came out empty.
    Empty { x: usize },
    /// `ξ ∈ Γ_ℓ(x)` has no point of `Γ_{ℓ-1}(y)` within `λρ(x, y)`.
    Far { x: usize, xi: Vec<f64>, y: usize },
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GabReport {
    pub ell: u32,
    pub a_ok: bool,
    /// Vacuous for `ℓ = 0`.
    pub b_ok: bool,
    pub exhaustive: bool,
    pub witnesses: Vec<GabWitness>,
}

/// Checks that every restriction to `min(k_{ℓ+1}, n)` points has a
/// λ-Lipschitz selection, naming the first subset that does not.
pub fn check_gab_hypothesis(p: &SelectionProblem, ell: u32, budget: usize) -> Result<bool> {
    let k = k_ell(p.m, ell + 1)?;
    let plan = subset_plan(p, None, k, budget, 0xAB ^ ((ell as u64) << 8));
    let lambdas = plan
        .subsets
        .par_iter()
        .map(|s| optimal_lambda_on(p, s).map(|r| r.0))
        .collect::<Result<Vec<f64>>>()?;
    if let Some(i) = lambdas.iter().position(|&l| l > p.lambda * (1.0 + 1e-9)) {
        return Err(Error::Hypothesis(format!(
            "subset {:?} needs Lipschitz constant {} > {}",
            plan.subsets[i], lambdas[i], p.lambda
        )));
    }
    Ok(plan.exhaustive)
}

/// Verifies nonemptiness of `Γ_ℓ(x)` at every `x` and, for `ℓ >= 1`, that
/// sampled points of `Γ_ℓ(x)` lie within `λρ(x, y)` of `Γ_{ℓ-1}(y)`.
///
/// Errors with [`Error::Hypothesis`] when some small restriction has no
/// λ-Lipschitz selection, since nothing is claimed then.
pub fn verify_g_ab(p: &SelectionProblem, ell: u32, budget: usize) -> Result<GabReport> {
    let mut exhaustive = check_gab_hypothesis(p, ell, budget)?;
    let n = p.n();
    let per_point = (0..n)
        .into_par_iter()
        .map(|x| -> Result<(Vec<GabWitness>, bool)> {
            let plan = gamma_plan(p, x, ell, budget)?;
            let mut exhaustive = plan.exhaustive;
            let samples = gamma_ell_samples(p, x, &plan)?;
            if samples.is_empty() {
                return Ok((vec![GabWitness::Empty { x }], exhaustive));
            }
            let mut witnesses = Vec::new();
            if ell == 0 {
                return Ok((witnesses, exhaustive));
            }
            for y in 0..n {
                let rho = p.space.d(x, y);
                if rho.is_infinite() {
                    continue;
                }
                let plan_y = gamma_plan(p, y, ell - 1, budget)?;
                exhaustive &= plan_y.exhaustive;
                for xi in &samples {
                    if !near_gamma(p, y, &plan_y, xi, rho)? {
                        witnesses.push(GabWitness::Far {
                            x,
                            xi: xi.clone(),
                            y,
                        });
                    }
                }
            }
            Ok((witnesses, exhaustive))
        })
        .collect::<Result<Vec<_>>>()?;
    let mut witnesses = Vec::new();
    for (w, ex) in per_point {
        witnesses.extend(w);
        exhaustive &= ex;
    }
    let a_ok = !witnesses.iter().any(|w| matches!(w, GabWitness::Empty { .. }));
    let b_ok = !witnesses.iter().any(|w| matches!(w, GabWitness::Far { .. }));
    Ok(GabReport {
        ell,
        a_ok,
        b_ok,
        exhaustive,
        witnesses,
    })
}

/// Whether some `η ∈ Γ_{ℓ-1}(y)` (as planned) has `‖ξ - η‖ <= λρ`.
fn near_gamma(p: &SelectionProblem, y: usize, plan: &SubsetPlan, xi: &[f64], rho: f64) -> Result<bool> {
    let mut lp = Lp::new();
    let vy = add_gamma_ell(&mut lp, p, y, plan);
    add_norm_le(&mut lp, p.norm, &diff_point(vy, xi), &Affine::constant(p.lambda * rho));
    Ok(lp.solve(p.backend)?.is_optimal())
}

/// A selection on a small set built by the refinement recursion.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Refinement {
    /// Values in the order the recursion fixed them, starting at `x0`.
    pub values: Vec<(usize, Vec<f64>)>,
    pub seminorm: f64,
    /// `3^k λ` for `k = #S`.
    pub bound: f64,
}

/// Builds a selection on `S` with value `ξ0` at `x0`, from `ξ0 ∈ Γ_ℓ(x0)` and
/// `#S <= ℓ + 1`: fix the nearest remaining point to a point of `Γ_{ℓ-1}`
/// within `λρ` of the current value and recurse on the rest.
///
/// On success the output takes `ξ0` at `x0`, takes values in
/// `Γ_{ℓ+1-k}(y)` at every other `y`, and has seminorm at most `3^k λ`. All
/// three are re-checked before returning.
pub fn refine_selection(
    p: &SelectionProblem,
    x0: usize,
    xi0: &[f64],
    ell: u32,
    s: &[usize],
    budget: usize,
) -> Result<Refinement> {
    check_point(p, xi0)?;
    let s: Vec<usize> = union_with(x0, s);
    let k = s.len();
    if k as u64 > ell as u64 + 1 {
        return Err(Error::Precondition(format!("#S = {k} exceeds ell + 1 = {}", ell + 1)));
    }
    let q = GammaQuery { x: x0, ell, budget };
    if gamma_ell_membership(p, q, xi0)?.decision == Decision::False {
        return Err(Error::Precondition(format!("xi0 is not in Gamma_{ell}({x0})")));
    }

    let mut values = vec![(x0, xi0.to_vec())];
    let mut rest: Vec<usize> = s[1..].to_vec();
    let (mut x, mut xi, mut level) = (x0, xi0.to_vec(), ell);
    while !rest.is_empty() {
        let (pos, &next) = rest
            .iter()
            .enumerate()
            .min_by(|a, b| p.space.d(*a.1, x).total_cmp(&p.space.d(*b.1, x)).then(a.1.cmp(b.1)))
            .unwrap();
        let rho = p.space.d(next, x);
        let (dist, eta) = gamma_ell_nearest(p, next, level - 1, budget, &xi)?.ok_or_else(|| {
            Error::Hypothesis(format!("Gamma_{}({next}) is empty", level - 1))
        })?;
        if !crate::patch::within(dist, p.lambda * rho) {
            return Err(Error::Hypothesis(format!(
                "Gamma_{}({next}) is at distance {dist} > lambda * rho = {}",
                level - 1,
                p.lambda * rho
            )));
        }
        rest.remove(pos);
        values.push((next, eta.clone()));
        x = next;
        xi = eta;
        level -= 1;
    }

    let bound = 3f64.powi(k as i32) * p.lambda;
    let seminorm = seminorm_of(p, &values);
    let out = Refinement {
        values,
        seminorm,
        bound,
    };
    verify_refinement(p, &out, ell, budget)?;
    Ok(out)
}

fn seminorm_of(p: &SelectionProblem, values: &[(usize, Vec<f64>)]) -> f64 {
    let mut worst: f64 = 0.0;
    for (i, (z, fz)) in values.iter().enumerate() {
        for (w, fw) in &values[i + 1..] {
            let d = p.norm.dist(fz, fw);
            let rho = p.space.d(*z, *w);
            let ratio = if rho.is_infinite() {
                0.0
            } else if rho == 0.0 {
                if d > 0.0 {
                    f64::INFINITY
                } else {
                    0.0
                }
            } else {
                d / rho
            };
            worst = worst.max(ratio);
        }
    }
    worst
}

fn verify_refinement(p: &SelectionProblem, r: &Refinement, ell: u32, budget: usize) -> Result<()> {
    let k = r.values.len() as u32;
    let level = ell + 1 - k;
    for (y, v) in r.values.iter().skip(1) {
        let q = GammaQuery { x: *y, ell: level, budget };
        if gamma_ell_membership(p, q, v)?.decision == Decision::False {
            return Err(Error::Hypothesis(format!("refined value at {y} left Gamma_{level}")));
        }
    }
    if !crate::patch::within(r.seminorm, r.bound) {
        return Err(Error::Hypothesis(format!(
            "refined seminorm {} exceeds {}",
            r.seminorm, r.bound
        )));
    }
    Ok(())
}

/// Per point, `Γ_0(x)` cut down to the ball of radius `Cλρ(x, x0)` about `ξ0`.
pub fn truncated_mapping(p: &SelectionProblem, x0: usize, xi0: &[f64], c: f64) -> Result<Vec<Polytope>> {
    check_point(p, xi0)?;
    if !p.f[x0].contains(xi0, 1e-9) {
        return Err(Error::Precondition(format!("xi0 is not in F({x0})")));
    }
    (0..p.n())
        .map(|x| {
            let g = gamma0(p, x)?;
            let r = c * p.lambda * p.space.d(x, x0);
            if r.is_infinite() {
                Ok(g)
            } else {
                g.intersect(&Polytope::ball(xi0, r, p.norm))
            }
        })
        .collect()
}
