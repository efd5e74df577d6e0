//! Optimal Lipschitz selections, the finiteness experiment, and the
//! Steiner-point-of-core pipeline.

use crate::convex::{steiner_point, Polytope};
use crate::cores::{approx_core, CoreBudget, CoreEstimate};
use crate::error::{Error, Result};
use crate::gamma::{subset_plan, DEFAULT_BUDGET};
use crate::metric::quotient_zero;
use crate::patch::lipschitz_seminorm;
use crate::problem::{optimal_lambda_on, SelectionProblem};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

/// `N(m, Y) = min(2^{m+1}, 2^{dim Y})`; `dim_y = None` is infinite-dimensional.
pub fn n_my(m: usize, dim_y: Option<usize>) -> u64 {
    let cap = |e: usize| if e >= 63 { u64::MAX } else { 1u64 << e };
    match dim_y {
        Some(d) => cap(m + 1).min(cap(d)),
        None => cap(m + 1),
    }
}

/// A selection with its measured Lipschitz seminorm.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Selection {
    pub f: Vec<Vec<f64>>,
    pub seminorm: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct OptimalLambda {
    #[serde(with = "crate::json::inf")]
    pub lambda_star: f64,
    /// Absent when no selection exists at any finite constant.
    pub selection: Option<Selection>,
}

/// The smallest Lipschitz constant of any selection, ignoring `p.lambda`.
///
/// Pairs at infinite distance are unconstrained. Points at distance zero
/// with disjoint sets give `λ* = INF`.
pub fn optimal_lambda(p: &SelectionProblem) -> Result<OptimalLambda> {
    let all: Vec<usize> = (0..p.n()).collect();
    let (lambda_star, f) = optimal_lambda_on(p, &all)?;
    let selection = lambda_star.is_finite().then(|| Selection {
        seminorm: lipschitz_seminorm(&p.space, &f, p.norm),
        f,
    });
    Ok(OptimalLambda {
        lambda_star,
        selection,
    })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FinitenessLambda {
    #[serde(with = "crate::json::inf")]
    pub lambda_k: f64,
    pub worst: Vec<usize>,
    pub exhaustive: bool,
}

/// Largest optimal constant over restrictions to at most `k` points.
///
/// Only subsets of size `min(k, n)` are solved, since restricting further
/// never raises the optimum. The first subset in enumeration order attaining
/// the maximum is reported.
pub fn finiteness_lambda(p: &SelectionProblem, k: u64, budget: usize) -> Result<FinitenessLambda> {
    if k == 0 {
        return Err(Error::Invalid("k must be at least 1".into()));
    }
    let plan = subset_plan(p, None, k, budget, 0xF1_u64 ^ (k << 8));
    let lambdas = plan
        .subsets
        .par_iter()
        .map(|s| optimal_lambda_on(p, s).map(|r| r.0))
        .collect::<Result<Vec<f64>>>()?;
    let mut best = 0;
    for (i, &l) in lambdas.iter().enumerate() {
        if l > lambdas[best] {
            best = i;
        }
    }
    Ok(FinitenessLambda {
        lambda_k: lambdas.get(best).copied().unwrap_or(0.0),
        worst: plan.subsets.get(best).cloned().unwrap_or_default(),
        exhaustive: plan.exhaustive,
    })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FinitenessReport {
    #[serde(rename = "N")]
    pub n: u64,
    #[serde(rename = "lambda_N", with = "crate::json::inf")]
    pub lambda_n: f64,
    #[serde(with = "crate::json::inf")]
    pub lambda_full: f64,
    #[serde(with = "crate::json::inf")]
    pub ratio: f64,
    pub worst_subset: Vec<usize>,
}

/// `λ_full / λ_N` with `0 / 0 = 1`.
pub fn lambda_ratio(full: f64, small: f64) -> f64 {
    if small == 0.0 {
        if full == 0.0 {
            1.0
        } else {
            f64::INFINITY
        }
    } else {
        full / small
    }
}

/// Compares the optimum on `N(m, R^m)`-point restrictions with the full
/// optimum.
pub fn finiteness_experiment(p: &SelectionProblem) -> Result<FinitenessReport> {
    finiteness_experiment_with(p, DEFAULT_BUDGET)
}

pub fn finiteness_experiment_with(p: &SelectionProblem, budget: usize) -> Result<FinitenessReport> {
    let n = n_my(p.m, Some(p.m));
    let small = finiteness_lambda(p, n, budget)?;
    let full = optimal_lambda(p)?.lambda_star;
    Ok(FinitenessReport {
        n,
        lambda_n: small.lambda_k,
        lambda_full: full,
        ratio: lambda_ratio(full, small.lambda_k),
        worst_subset: small.worst,
    })
}

/// Twice the largest finite ratio of a corpus, and at least 2.
pub fn calibrate_gamma_hat(reports: &[FinitenessReport]) -> f64 {
    let worst = reports
        .iter()
        .map(|r| r.ratio)
        .filter(|r| r.is_finite())
        .fold(1.0f64, f64::max);
    2.0 * worst
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PipelineOutput {
    pub selection: Selection,
    /// Cores of the zero-distance quotient, one per class.
    pub cores: Vec<CoreEstimate>,
    pub class_of: Vec<usize>,
}

/// Selection by Steiner points of approximate cores, computed on the
/// quotient by zero distance and pulled back to every point.
pub fn pipeline_select(p: &SelectionProblem, gamma_hat: f64, budget: CoreBudget) -> Result<PipelineOutput> {
    let q = quotient_zero(&p.space);
    let mut f_hat = vec![Vec::new(); q.reps.len()];
    for x in 0..p.n() {
        f_hat[q.class_of[x]].extend(p.f[x].rows.iter().cloned());
    }
    let f_hat = f_hat
        .into_iter()
        .map(|rows| Polytope::new(p.m, rows))
        .collect::<Result<Vec<_>>>()?;
    let mut qp = SelectionProblem::new(q.w.clone(), None, p.m, p.norm, f_hat, p.lambda)?;
    qp.backend = p.backend;

    let cores = (0..qp.n())
        .into_par_iter()
        .map(|x| approx_core(&qp, x, gamma_hat, budget))
        .collect::<Result<Vec<_>>>()?;
    let points = cores
        .par_iter()
        .map(|c| steiner_point(&c.outer))
        .collect::<Result<Vec<_>>>()?;
    let f: Vec<Vec<f64>> = (0..p.n()).map(|x| points[q.class_of[x]].clone()).collect();
    for (x, v) in f.iter().enumerate() {
        if !p.f[x].contains(v, 1e-8) {
            return Err(Error::NoSelection(format!("pipeline value at {x} is outside F({x})")));
        }
    }
    let seminorm = lipschitz_seminorm(&p.space, &f, p.norm);
    Ok(PipelineOutput {
        selection: Selection { f, seminorm },
        cores,
        class_of: q.class_of,
    })
}

/// Whether `f` lies in `F` (tolerance `1e-8`) and is `λ`-Lipschitz (relative
/// tolerance `1e-9`). Pairs at infinite distance are not checked.
pub fn verify_selection(p: &SelectionProblem, f: &Selection, lambda: f64) -> bool {
    if f.f.len() != p.n() || f.f.iter().any(|v| v.len() != p.m) {
        return false;
    }
    if (0..p.n()).any(|x| !p.f[x].contains(&f.f[x], 1e-8)) {
        return false;
    }
    for x in 0..p.n() {
        for y in x + 1..p.n() {
            let rho = p.space.d(x, y);
            if rho.is_infinite() {
                continue;
            }
            let d = p.norm.dist(&f.f[x], &f.f[y]);
            if d > lambda * rho * (1.0 + 1e-9) + 1e-12 {
                return false;
            }
        }
    }
    true
}
