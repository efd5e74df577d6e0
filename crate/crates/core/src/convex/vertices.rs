use super::polytope::{dot, feasible, is_bounded, nearest_point, norm_inf, Polytope};
use crate::error::{Error, Result};
use crate::lp::LpBackend;
use crate::norm::NormTag;
use itertools::Itertools;
use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

const DEDUP_TOL: f64 = 1e-9;

/// Extreme points of a nonempty bounded polytope with `dim <= 3`.
///
/// In the plane the result is in counterclockwise order.
pub fn vertices(p: &Polytope) -> Result<Vec<Vec<f64>>> {
    let m = p.dim;
    if m > 3 {
        return Err(Error::DimensionTooHigh(m));
    }
    if !feasible(p)? {
        return Err(Error::Infeasible);
    }
    if !is_bounded(p)? {
        return Err(Error::Unbounded);
    }
    let rows: Vec<(Vec<f64>, f64)> = p
        .rows
        .iter()
        .filter_map(|r| {
            let s = r.a.iter().map(|v| v * v).sum::<f64>().sqrt();
            (s > 0.0).then(|| (r.a.iter().map(|v| v / s).collect(), r.b / s))
        })
        .collect();
    let mut out: Vec<Vec<f64>> = Vec::new();
    for combo in (0..rows.len()).combinations(m) {
        let a = DMatrix::from_fn(m, m, |i, j| rows[combo[i]].0[j]);
        if a.determinant().abs() < 1e-12 {
            continue;
        }
        let b = DVector::from_fn(m, |i, _| rows[combo[i]].1);
        let Some(x) = a.lu().solve(&b) else { continue };
        let x: Vec<f64> = x.iter().copied().collect();
        let ok = rows
            .iter()
            .all(|(a, b)| dot(a, &x) - b <= DEDUP_TOL * (1.0 + b.abs()));
        if ok
            && !out
                .iter()
                .any(|y| dist_inf(y, &x) <= DEDUP_TOL * (1.0 + norm_inf(&x)))
        {
            out.push(x);
        }
    }
    if out.is_empty() {
        // Every bounded nonempty polytope has a vertex; reaching here means
        // the rows are numerically degenerate.
        return Err(Error::Invalid("vertex enumeration found no vertices".into()));
    }
    if m == 2 {
        out = hull_ccw(out);
    } else if m == 1 {
        out.sort_by(|a, b| a[0].total_cmp(&b[0]));
    }
    Ok(out)
}

fn dist_inf(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).fold(0.0f64, |m, (x, y)| m.max((x - y).abs()))
}

/// Andrew's monotone chain; drops collinear points.
fn hull_ccw(mut pts: Vec<Vec<f64>>) -> Vec<Vec<f64>> {
    pts.sort_by(|a, b| a[0].total_cmp(&b[0]).then(a[1].total_cmp(&b[1])));
    if pts.len() <= 2 {
        return pts;
    }
    let turn = |o: &[f64], a: &[f64], b: &[f64]| {
        (a[0] - o[0]) * (b[1] - o[1]) - (a[1] - o[1]) * (b[0] - o[0])
    };
    let mut hull: Vec<Vec<f64>> = Vec::with_capacity(2 * pts.len());
    for pass in 0..2 {
        let start = hull.len();
        let iter: Box<dyn Iterator<Item = &Vec<f64>>> = if pass == 0 {
            Box::new(pts.iter())
        } else {
            Box::new(pts.iter().rev())
        };
        for pt in iter {
            while hull.len() >= start + 2
                && turn(&hull[hull.len() - 2], &hull[hull.len() - 1], pt) <= 1e-15
            {
                hull.pop();
            }
            hull.push(pt.clone());
        }
        hull.pop();
    }
    if hull.len() < 2 {
        // All points coincide up to rounding.
        return vec![pts[0].clone(), pts[pts.len() - 1].clone()];
    }
    hull
}

/// Hausdorff distance between two nonempty bounded polytopes (`dim <= 3`).
pub fn hausdorff(p: &Polytope, q: &Polytope, norm: NormTag) -> Result<f64> {
    if p.dim != q.dim {
        return Err(Error::DimensionMismatch {
            expected: p.dim,
            found: q.dim,
        });
    }
    let one_sided = |a: &Polytope, b: &Polytope| -> Result<f64> {
        let mut worst = 0.0f64;
        for v in vertices(a)? {
            worst = worst.max(nearest_point(&v, b, norm, LpBackend::Float)?.0);
        }
        Ok(worst)
    };
    Ok(one_sided(p, q)?.max(one_sided(q, p)?))
}

/// A Steiner point with the Monte Carlo standard error (zero when exact).
#[derive(Clone, Debug, PartialEq)]
pub struct SteinerEstimate {
    pub point: Vec<f64>,
    pub std_error: f64,
}

/// Sample count of the three-dimensional Monte Carlo estimate.
pub const STEINER_SAMPLES: usize = 200_000;
const STEINER_SEED: u64 = 0x5EED_57E1;

pub fn steiner_point(p: &Polytope) -> Result<Vec<f64>> {
    Ok(steiner_estimate(p)?.point)
}

/// Steiner point of a nonempty bounded polytope.
///
/// Exact for `dim <= 2`; for `dim == 3` the support-function integral is
/// estimated from uniform sphere directions. The result is projected back
/// onto `p` if rounding carries it outside by more than `1e-9`.
pub fn steiner_estimate(p: &Polytope) -> Result<SteinerEstimate> {
    let verts = vertices(p)?;
    let m = p.dim;
    let mut est = match m {
        1 => SteinerEstimate {
            point: vec![0.5 * (verts[0][0] + verts[verts.len() - 1][0])],
            std_error: 0.0,
        },
        2 => SteinerEstimate {
            point: steiner_polygon(&verts),
            std_error: 0.0,
        },
        _ => steiner_monte_carlo(&verts, STEINER_SAMPLES, STEINER_SEED),
    };
    if p.violation(&est.point) > 1e-9 {
        est.point = nearest_point(&est.point, p, NormTag::Linf, LpBackend::Float)?.1;
    }
    Ok(est)
}

/// Exterior-angle weighted vertex average of a CCW polygon.
fn steiner_polygon(verts: &[Vec<f64>]) -> Vec<f64> {
    let n = verts.len();
    if n == 1 {
        return verts[0].clone();
    }
    let mut acc = [0.0f64; 2];
    let mut total = 0.0;
    for i in 0..n {
        let prev = &verts[(i + n - 1) % n];
        let cur = &verts[i];
        let next = &verts[(i + 1) % n];
        let d1 = [cur[0] - prev[0], cur[1] - prev[1]];
        let d2 = [next[0] - cur[0], next[1] - cur[1]];
        let cr = d1[0] * d2[1] - d1[1] * d2[0];
        let dt = d1[0] * d2[0] + d1[1] * d2[1];
        let alpha = cr.abs().atan2(dt);
        acc[0] += alpha * cur[0];
        acc[1] += alpha * cur[1];
        total += alpha;
    }
    vec![acc[0] / total, acc[1] / total]
}

fn steiner_monte_carlo(verts: &[Vec<f64>], samples: usize, seed: u64) -> SteinerEstimate {
    let m = verts[0].len();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut sum = vec![0.0; m];
    let mut sumsq = vec![0.0; m];
    let mut u = vec![0.0; m];
    for _ in 0..samples {
        loop {
            for ui in u.iter_mut() {
                *ui = rng.gen_range(-1.0..1.0);
            }
            let r2: f64 = u.iter().map(|v| v * v).sum();
            if r2 > 1e-12 && r2 <= 1.0 {
                let r = r2.sqrt();
                u.iter_mut().for_each(|v| *v /= r);
                break;
            }
        }
        let h = verts
            .iter()
            .map(|v| dot(v, &u))
            .fold(f64::NEG_INFINITY, f64::max);
        for i in 0..m {
            let s = m as f64 * h * u[i];
            sum[i] += s;
            sumsq[i] += s * s;
        }
    }
    let n = samples as f64;
    let point: Vec<f64> = sum.iter().map(|s| s / n).collect();
    let std_error = (0..m)
        .map(|i| ((sumsq[i] / n - point[i] * point[i]).max(0.0) / n).sqrt())
        .fold(0.0, f64::max);
    SteinerEstimate { point, std_error }
}
