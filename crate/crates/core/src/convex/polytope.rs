use crate::error::{Error, Result};
use crate::lp::{Lp, LpBackend, LpStatus, Relation, VarBound};
use crate::norm::{self, Affine, NormTag};
use serde::{Deserialize, Serialize};

/// One inequality `a·x <= b`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Halfspace {
    pub a: Vec<f64>,
    pub b: f64,
}

/// A convex polytope in H-representation.
///
/// The set may be empty or unbounded; operations that need a nonempty or
/// bounded input check for it and report [`Error::Infeasible`] or
/// [`Error::Unbounded`].
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Polytope {
    pub dim: usize,
    pub rows: Vec<Halfspace>,
}

impl Polytope {
    pub fn new(dim: usize, rows: Vec<Halfspace>) -> Result<Self> {
        let p = Polytope { dim, rows };
        p.validate()?;
        Ok(p)
    }

    /// All of R^m.
    pub fn whole(dim: usize) -> Self {
        Polytope {
            dim,
            rows: Vec::new(),
        }
    }

    pub fn cube(lo: &[f64], hi: &[f64]) -> Self {
        let dim = lo.len();
        let mut rows = Vec::with_capacity(2 * dim);
        for i in 0..dim {
            let mut a = vec![0.0; dim];
            a[i] = 1.0;
            rows.push(Halfspace { a: a.clone(), b: hi[i] });
            a[i] = -1.0;
            rows.push(Halfspace { a, b: -lo[i] });
        }
        Polytope { dim, rows }
    }

    pub fn point(p: &[f64]) -> Self {
        Self::cube(p, p)
    }

    /// The closed ball `{x : ‖x - c‖ <= r}`.
    pub fn ball(center: &[f64], r: f64, norm: NormTag) -> Self {
        let rows = norm
            .ball_facets(center.len())
            .into_iter()
            .map(|u| {
                let b = dot(&u, center) + r;
                Halfspace { a: u, b }
            })
            .collect();
        Polytope {
            dim: center.len(),
            rows,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.dim == 0 {
            return Err(Error::Invalid("polytope dimension must be positive".into()));
        }
        for row in &self.rows {
            if row.a.len() != self.dim {
                return Err(Error::DimensionMismatch {
                    expected: self.dim,
                    found: row.a.len(),
                });
            }
            if !row.b.is_finite() || row.a.iter().any(|v| !v.is_finite()) {
                return Err(Error::Invalid("non-finite polytope row".into()));
            }
            if row.a.iter().all(|&v| v == 0.0) && row.b < 0.0 {
                return Err(Error::Invalid(format!(
                    "trivial row 0 <= {} is unsatisfiable",
                    row.b
                )));
            }
        }
        Ok(())
    }

    pub fn intersect(&self, other: &Polytope) -> Result<Polytope> {
        if self.dim != other.dim {
            return Err(Error::DimensionMismatch {
                expected: self.dim,
                found: other.dim,
            });
        }
        let mut rows = self.rows.clone();
        rows.extend(other.rows.iter().cloned());
        Ok(Polytope { dim: self.dim, rows })
    }

    pub fn intersect_all<'a, I: IntoIterator<Item = &'a Polytope>>(
        dim: usize,
        family: I,
    ) -> Result<Polytope> {
        let mut out = Polytope::whole(dim);
        for p in family {
            out = out.intersect(p)?;
        }
        Ok(out)
    }

    pub fn translate(&self, t: &[f64]) -> Polytope {
        let rows = self
            .rows
            .iter()
            .map(|r| Halfspace {
                a: r.a.clone(),
                b: r.b + dot(&r.a, t),
            })
            .collect();
        Polytope {
            dim: self.dim,
            rows,
        }
    }

    /// Membership with a tolerance relative to the row scale.
    pub fn contains(&self, x: &[f64], tol: f64) -> bool {
        self.rows.iter().all(|r| {
            let scale = r.a.iter().fold(0.0f64, |m, v| m.max(v.abs()));
            if scale == 0.0 {
                return r.b >= 0.0;
            }
            (dot(&r.a, x) - r.b) / scale <= tol * (1.0 + (r.b / scale).abs())
        })
    }

    /// Largest normalized violation `max (a·x - b)/‖a‖∞` (nonpositive inside).
    pub fn violation(&self, x: &[f64]) -> f64 {
        self.rows
            .iter()
            .map(|r| {
                let scale = r.a.iter().fold(0.0f64, |m, v| m.max(v.abs()));
                if scale == 0.0 {
                    -r.b
                } else {
                    (dot(&r.a, x) - r.b) / scale
                }
            })
            .fold(f64::NEG_INFINITY, f64::max)
    }

    /// Adds the rows of `self` as constraints on LP variables `first..first+dim`.
    pub fn add_to_lp(&self, lp: &mut Lp, first: usize) {
        for r in &self.rows {
            let coeffs = r
                .a
                .iter()
                .enumerate()
                .filter(|(_, v)| **v != 0.0)
                .map(|(i, &v)| (first + i, v))
                .collect();
            lp.add_row(coeffs, Relation::Le, r.b);
        }
    }
}

pub(crate) fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// Returns a point of `p`, or `None` when `p` is empty.
pub fn find_point(p: &Polytope, backend: LpBackend) -> Result<Option<Vec<f64>>> {
    p.validate()?;
    let mut lp = Lp::new();
    let x = lp.add_vars(p.dim, VarBound::Free);
    p.add_to_lp(&mut lp, x);
    let sol = lp.solve(backend)?;
    Ok(sol.is_optimal().then_some(sol.x))
}

pub fn feasible_with(p: &Polytope, backend: LpBackend) -> Result<bool> {
    Ok(find_point(p, backend)?.is_some())
}

pub fn feasible(p: &Polytope) -> Result<bool> {
    feasible_with(p, LpBackend::Float)
}

/// Support value `h_P(u) = sup_{x∈P} u·x` and a maximizer; `None` if unbounded.
pub fn support(p: &Polytope, u: &[f64], backend: LpBackend) -> Result<Option<(f64, Vec<f64>)>> {
    if u.len() != p.dim {
        return Err(Error::DimensionMismatch {
            expected: p.dim,
            found: u.len(),
        });
    }
    let mut lp = Lp::new();
    let x = lp.add_vars(p.dim, VarBound::Free);
    p.add_to_lp(&mut lp, x);
    lp.maximize(u.iter().enumerate().map(|(i, &c)| (x + i, c)).collect());
    let sol = lp.solve(backend)?;
    match sol.status {
        LpStatus::Optimal => Ok(Some((-sol.value, sol.x))),
        LpStatus::Unbounded => Ok(None),
        LpStatus::Infeasible => Err(Error::Infeasible),
    }
}

pub fn is_bounded(p: &Polytope) -> Result<bool> {
    for i in 0..p.dim {
        for s in [1.0, -1.0] {
            let mut u = vec![0.0; p.dim];
            u[i] = s;
            if support(p, &u, LpBackend::Float)?.is_none() {
                return Ok(false);
            }
        }
    }
    Ok(true)
}

/// Nearest point of `p` to `q` under `norm`, with the distance.
pub fn nearest_point(
    q: &[f64],
    p: &Polytope,
    norm: NormTag,
    backend: LpBackend,
) -> Result<(f64, Vec<f64>)> {
    if q.len() != p.dim {
        return Err(Error::DimensionMismatch {
            expected: p.dim,
            found: q.len(),
        });
    }
    let mut lp = Lp::new();
    let x = lp.add_vars(p.dim, VarBound::Free);
    let t = lp.add_var(VarBound::NonNegative);
    p.add_to_lp(&mut lp, x);
    norm::add_norm_le(&mut lp, norm, &norm::diff_point(x, q), &Affine::var(t));
    lp.minimize(vec![(t, 1.0)]);
    let sol = lp.solve(backend)?;
    if !sol.is_optimal() {
        return Err(Error::Infeasible);
    }
    let w = sol.x[x..x + p.dim].to_vec();
    Ok((norm.dist(q, &w), w))
}

pub fn point_distance(q: &[f64], p: &Polytope, norm: NormTag) -> Result<f64> {
    Ok(nearest_point(q, p, norm, LpBackend::Float)?.0)
}

pub fn inflate(p: &Polytope, r: f64, norm: NormTag) -> Result<Polytope> {
    inflate_with(p, r, norm, LpBackend::Float)
}

/// H-representation of the Minkowski sum `P + r·B` for `dim <= 3`.
///
/// Shifting each row of `P` by `r‖a‖_dual` only gives an outer bound of the
/// sum when `P` has vertices where the ball's facets do not line up with
/// the rows. The exact sum has facet normals drawn from the rows of `P`, the
/// facets of `B`, and (in three dimensions) cross products of an edge of `P`
/// with an edge of `B`. Each candidate normal `u` gets offset
/// `h_P(u) + r‖u‖_dual`.
pub fn inflate_with(p: &Polytope, r: f64, norm: NormTag, backend: LpBackend) -> Result<Polytope> {
    if !(r >= 0.0) || !r.is_finite() {
        return Err(Error::NegativeRadius(r));
    }
    p.validate()?;
    if r == 0.0 {
        return Ok(p.clone());
    }
    let m = p.dim;
    if m > 3 {
        return Err(Error::DimensionTooHigh(m));
    }
    if !feasible_with(p, backend)? {
        return Ok(p.clone());
    }
    let normals: Vec<Vec<f64>> = p
        .rows
        .iter()
        .filter(|row| row.a.iter().any(|&v| v != 0.0))
        .map(|row| row.a.clone())
        .collect();
    let mut cands = normals.clone();
    cands.extend(norm.ball_facets(m));
    if m == 3 {
        let edges = norm.ball_edges(3);
        for i in 0..normals.len() {
            for j in i + 1..normals.len() {
                let e = cross(&normals[i], &normals[j]);
                if norm_inf(&e) < 1e-12 * norm_inf(&normals[i]) * norm_inf(&normals[j]) {
                    continue;
                }
                for d in &edges {
                    let n = cross(&e, d);
                    if norm_inf(&n) < 1e-12 * norm_inf(&e) {
                        continue;
                    }
                    cands.push(n.iter().map(|v| -v).collect());
                    cands.push(n);
                }
            }
        }
    }
    let mut uniq: Vec<Vec<f64>> = Vec::with_capacity(cands.len());
    for c in cands {
        let s = norm_inf(&c);
        let u: Vec<f64> = c.iter().map(|v| v / s).collect();
        if !uniq
            .iter()
            .any(|w| w.iter().zip(&u).all(|(a, b)| (a - b).abs() <= 1e-12))
        {
            uniq.push(u);
        }
    }
    let mut rows = Vec::with_capacity(uniq.len());
    for u in uniq {
        if let Some((h, _)) = support(p, &u, backend)? {
            let b = h + r * norm.dual_norm(&u);
            rows.push(Halfspace { a: u, b });
        }
    }
    Ok(Polytope { dim: m, rows })
}

/// Whether `small ⊆ big`, checked by maximizing each row of `big` over `small`.
pub fn contains_polytope(big: &Polytope, small: &Polytope, tol: f64) -> Result<bool> {
    if !feasible(small)? {
        return Ok(true);
    }
    for row in &big.rows {
        let scale = norm_inf(&row.a);
        if scale == 0.0 {
            continue;
        }
        match support(small, &row.a, LpBackend::Float)? {
            None => return Ok(false),
            Some((h, _)) => {
                if (h - row.b) / scale > tol * (1.0 + (row.b / scale).abs()) {
                    return Ok(false);
                }
            }
        }
    }
    Ok(true)
}

pub(crate) fn norm_inf(v: &[f64]) -> f64 {
    v.iter().fold(0.0f64, |m, x| m.max(x.abs()))
}

pub(crate) fn cross(a: &[f64], b: &[f64]) -> Vec<f64> {
    vec![
        a[1] * b[2] - a[2] * b[1],
        a[2] * b[0] - a[0] * b[2],
        a[0] * b[1] - a[1] * b[0],
    ]
}
