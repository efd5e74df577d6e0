use crate::instance::InstanceFile;
use anyhow::{bail, Context, Result};
use lipsel::cores::{approx_core, certify_core_lipschitz, CoreBudget, CoreCertificate};
use lipsel::gamma::{gamma_ell_membership, gamma_ell_point, verify_g_ab, GabReport, GammaQuery, GammaResult, DEFAULT_BUDGET};
use lipsel::lp::LpBackend;
use lipsel::nagata::{tree_nagata_cover, validate_nagata, CoverProvider, Covering, NagataReport, TREE_C, TREE_D};
use lipsel::norm::NormTag;
use lipsel::selection::{
    calibrate_gamma_hat, finiteness_experiment_with, lambda_ratio, optimal_lambda, pipeline_select, verify_selection,
    FinitenessReport, Selection,
};
use lipsel::whitney::{build_whitney, measure_partition, rooted_lengthscale, PartitionDump, PartitionMeasure, DEFAULT_BIG_A};
use lipsel::{Error, SelectionProblem};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

/// Flags shared by the verbs.
#[derive(Clone, Copy, Debug)]
pub struct Options {
    pub norm: Option<NormTag>,
    pub lambda: Option<f64>,
    pub budget: usize,
    pub gamma_hat: Option<f64>,
    pub core: CoreBudget,
    pub exact: bool,
}

impl Default for Options {
    fn default() -> Self {
        Options {
            norm: None,
            lambda: None,
            budget: DEFAULT_BUDGET,
            gamma_hat: None,
            core: CoreBudget::default(),
            exact: false,
        }
    }
}

impl Options {
    /// The instance's problem with the flag overrides applied.
    pub fn problem(&self, inst: &InstanceFile) -> Result<SelectionProblem> {
        let mut p = inst.problem.clone();
        if let Some(norm) = self.norm {
            p.norm = norm;
        }
        if let Some(lambda) = self.lambda {
            anyhow::ensure!(lambda > 0.0 && lambda.is_finite(), "--lambda must be positive");
            p.lambda = lambda;
        }
        p.backend = if self.exact { LpBackend::Exact } else { LpBackend::Float };
        Ok(p)
    }
}

/// Output of a verb: the JSON document and whether its checks passed.
pub struct Outcome<T> {
    pub value: T,
    pub ok: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PipelineSummary {
    pub gamma_hat: f64,
    /// Lipschitz parameter the cores were built with.
    pub lambda: f64,
    pub seminorm: f64,
    #[serde(with = "lipsel::json::inf")]
    pub ratio_to_optimal: f64,
    #[serde(with = "lipsel::json::inf")]
    pub core_ratio: f64,
    pub verified: bool,
    pub selection: Selection,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SolveReport {
    pub instance: String,
    pub n: usize,
    pub m: usize,
    #[serde(with = "lipsel::json::inf")]
    pub lambda_star: f64,
    pub optimal: Option<Selection>,
    pub finiteness: FinitenessReport,
    pub pipeline: Option<PipelineSummary>,
    pub pipeline_error: Option<String>,
}

pub fn finiteness(inst: &InstanceFile, opts: &Options) -> Result<Outcome<FinitenessReport>> {
    let p = opts.problem(inst)?;
    let r = finiteness_experiment_with(&p, opts.budget)?;
    let ok = relaxation_holds(&r, p.backend) && r.ratio.is_finite();
    Ok(Outcome { value: r, ok })
}

/// `λ_N <= λ_full`, exactly under the rational backend and up to a relative
/// `1e-9` under floats, where the two optima come from different LPs.
pub fn relaxation_holds(r: &FinitenessReport, backend: LpBackend) -> bool {
    match backend {
        LpBackend::Exact => r.lambda_n <= r.lambda_full,
        LpBackend::Float => r.lambda_n <= r.lambda_full * (1.0 + 1e-9) + 1e-12,
    }
}

/// Lipschitz parameter for the pipeline: the finiteness-hypothesis constant
/// `λ_N` when positive, else the instance's own `λ`.
fn pipeline_lambda(p: &SelectionProblem, f: &FinitenessReport) -> f64 {
    if f.lambda_n > 0.0 && f.lambda_n.is_finite() {
        f.lambda_n
    } else {
        p.lambda
    }
}

/// Optimal selection, finiteness numbers, and the Steiner-of-core pipeline.
/// Without `--gamma-hat`, `γ̂` is calibrated from this instance alone.
pub fn solve(inst: &InstanceFile, name: &str, opts: &Options) -> Result<Outcome<SolveReport>> {
    let p = opts.problem(inst)?;
    let fin = finiteness_experiment_with(&p, opts.budget)?;
    let gamma_hat = opts.gamma_hat.unwrap_or_else(|| calibrate_gamma_hat(std::slice::from_ref(&fin)));
    solve_with(&p, name, fin, gamma_hat, opts)
}

pub fn solve_with(
    p: &SelectionProblem,
    name: &str,
    fin: FinitenessReport,
    gamma_hat: f64,
    opts: &Options,
) -> Result<Outcome<SolveReport>> {
    let opt = optimal_lambda(p)?;
    let lambda = pipeline_lambda(p, &fin);
    let lp = p.with_lambda(lambda);
    let (pipeline, pipeline_error) = match pipeline_select(&lp, gamma_hat, opts.core) {
        Ok(out) => {
            let cert = certify_core_lipschitz(&out.cores, &quotient_problem(&lp, &out.class_of), gamma_hat)?;
            let verified = verify_selection(p, &out.selection, out.selection.seminorm);
            let summary = PipelineSummary {
                gamma_hat,
                lambda,
                seminorm: out.selection.seminorm,
                ratio_to_optimal: lambda_ratio(out.selection.seminorm, opt.lambda_star),
                core_ratio: cert.max_ratio,
                verified,
                selection: out.selection,
            };
            (Some(summary), None)
        }
        Err(e @ Error::GammaHatTooSmall { .. }) => (None, Some(e.to_string())),
        Err(e) => return Err(e.into()),
    };
    let ok = relaxation_holds(&fin, p.backend) && pipeline.as_ref().is_none_or(|s| s.verified);
    let report = SolveReport {
        instance: name.to_string(),
        n: p.n(),
        m: p.m,
        lambda_star: opt.lambda_star,
        optimal: opt.selection,
        finiteness: fin,
        pipeline,
        pipeline_error,
    };
    Ok(Outcome { value: report, ok })
}

/// The problem on class representatives, for certifying quotient cores.
fn quotient_problem(p: &SelectionProblem, class_of: &[usize]) -> SelectionProblem {
    let mut reps: Vec<usize> = Vec::new();
    for (x, &c) in class_of.iter().enumerate() {
        if c == reps.len() {
            reps.push(x);
        }
    }
    p.restrict(&reps)
}

/// Solves a batch, calibrating `γ̂` over the whole batch unless given.
pub fn solve_batch(items: &[(String, InstanceFile)], opts: &Options) -> Result<Vec<Outcome<SolveReport>>> {
    let fins = items
        .par_iter()
        .map(|(name, inst)| {
            finiteness_experiment_with(&opts.problem(inst)?, opts.budget).with_context(|| format!("instance {name}"))
        })
        .collect::<Result<Vec<_>>>()?;
    let gamma_hat = opts.gamma_hat.unwrap_or_else(|| calibrate_gamma_hat(&fins));
    items
        .par_iter()
        .zip(fins)
        .map(|((name, inst), fin)| {
            solve_with(&opts.problem(inst)?, name, fin, gamma_hat, opts).with_context(|| format!("instance {name}"))
        })
        .collect()
}

#[derive(Clone, Debug, Serialize)]
pub struct WhitneyOutput {
    pub root: usize,
    pub lengthscale: Vec<f64>,
    pub c_ls: f64,
    pub partition: PartitionDump,
    pub measure: PartitionMeasure,
}

/// Partition of unity on a tree instance with lengthscale `1 + d(x, 0)/2`.
pub fn whitney(inst: &InstanceFile, big_a: Option<f64>) -> Result<Outcome<WhitneyOutput>> {
    let p = &inst.problem;
    let Some(tree) = &p.tree else {
        bail!("whitney needs an instance whose space is given as a tree");
    };
    let provider = CoverProvider::tree(tree, 0)?;
    let ls = rooted_lengthscale(&p.space, 0);
    let a = 1.0 / (4.0 * ls.c_ls);
    let w = build_whitney(&p.space, &provider, &ls, a, big_a.unwrap_or(DEFAULT_BIG_A))?;
    let measure = measure_partition(&w, &p.space);
    let ok = measure.sum_err <= 1e-9;
    Ok(Outcome {
        value: WhitneyOutput {
            root: 0,
            lengthscale: ls.r.clone(),
            c_ls: ls.c_ls,
            partition: w.dump(p.n()),
            measure,
        },
        ok,
    })
}

#[derive(Clone, Debug, Serialize)]
pub struct NagataScale {
    pub s: f64,
    pub d: usize,
    pub c: f64,
    pub covering: Covering,
    pub report: NagataReport,
}

pub const DEFAULT_SCALES: [f64; 4] = [0.5, 1.0, 4.0, 17.0];

/// Tree coverings at each scale, validated with `(D, c) = (1, 1/16)`.
pub fn nagata(inst: &InstanceFile, scales: &[f64]) -> Result<Outcome<Vec<NagataScale>>> {
    let p = &inst.problem;
    let Some(tree) = &p.tree else {
        bail!("nagata needs an instance whose space is given as a tree");
    };
    let out = scales
        .iter()
        .map(|&s| {
            let covering = tree_nagata_cover(tree, s, 0)?;
            let report = validate_nagata(&covering, &p.space, s, TREE_D, TREE_C)?;
            Ok(NagataScale {
                s,
                d: TREE_D,
                c: TREE_C,
                covering,
                report,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    let ok = out.iter().all(|r| r.report.ok);
    Ok(Outcome { value: out, ok })
}

#[derive(Clone, Debug, Serialize)]
pub struct CoreSummary {
    pub x: usize,
    pub outer: lipsel::convex::Polytope,
    pub trees: usize,
    pub directions: usize,
}

#[derive(Clone, Debug, Serialize)]
pub struct CoreOutput {
    pub gamma_hat: f64,
    pub lambda: f64,
    pub cores: Vec<CoreSummary>,
    pub certificate: CoreCertificate,
}

/// Core estimates at every point plus the pairwise Hausdorff ratios. The
/// cores use `λ_N` as the Lipschitz parameter, as in `solve`.
pub fn core(inst: &InstanceFile, opts: &Options) -> Result<Outcome<CoreOutput>> {
    let p = opts.problem(inst)?;
    let fin = finiteness_experiment_with(&p, opts.budget)?;
    let gamma_hat = opts.gamma_hat.unwrap_or_else(|| calibrate_gamma_hat(std::slice::from_ref(&fin)));
    let lambda = pipeline_lambda(&p, &fin);
    let lp = p.with_lambda(lambda);
    let estimates = (0..lp.n())
        .into_par_iter()
        .map(|x| approx_core(&lp, x, gamma_hat, opts.core))
        .collect::<lipsel::Result<Vec<_>>>()?;
    let certificate = certify_core_lipschitz(&estimates, &lp, gamma_hat)?;
    let ok = certificate.max_ratio.is_finite();
    let cores = estimates
        .into_iter()
        .map(|e| CoreSummary {
            x: e.x,
            trees: e.trees_used.len(),
            directions: e.directions,
            outer: e.outer,
        })
        .collect();
    Ok(Outcome {
        value: CoreOutput {
            gamma_hat,
            lambda,
            cores,
            certificate,
        },
        ok,
    })
}

#[derive(Clone, Debug, Serialize)]
pub struct GammaOutput {
    pub queries: Vec<GammaResult>,
    /// Present when the small restrictions all have λ-Lipschitz selections.
    pub g_ab: Option<GabReport>,
    pub g_ab_error: Option<String>,
}

/// A single membership query when `x` and `xi` are given; otherwise one
/// query per point at a point of `Γ_ℓ(x)`, plus the structural check.
pub fn gamma(
    inst: &InstanceFile,
    opts: &Options,
    ell: u32,
    x: Option<usize>,
    xi: Option<Vec<f64>>,
) -> Result<Outcome<GammaOutput>> {
    let p = opts.problem(inst)?;
    if let (Some(x), Some(xi)) = (x, xi.as_ref()) {
        anyhow::ensure!(x < p.n(), "point {x} out of range");
        let q = gamma_ell_membership(&p, GammaQuery { x, ell, budget: opts.budget }, xi)?;
        return Ok(Outcome {
            value: GammaOutput {
                queries: vec![q],
                g_ab: None,
                g_ab_error: None,
            },
            ok: true,
        });
    }
    let points: Vec<usize> = match x {
        Some(x) => vec![x],
        None => (0..p.n()).collect(),
    };
    let mut queries = Vec::new();
    for x in points {
        anyhow::ensure!(x < p.n(), "point {x} out of range");
        if let (Some(xi), _) = gamma_ell_point(&p, x, ell, opts.budget)? {
            queries.push(gamma_ell_membership(&p, GammaQuery { x, ell, budget: opts.budget }, &xi)?);
        }
    }
    let (g_ab, g_ab_error) = match verify_g_ab(&p, ell, opts.budget) {
        Ok(r) => (Some(r), None),
        Err(e @ Error::Hypothesis(_)) => (None, Some(e.to_string())),
        Err(e) => return Err(e.into()),
    };
    let ok = g_ab.as_ref().is_none_or(|r| r.a_ok && r.b_ok);
    Ok(Outcome {
        value: GammaOutput {
            queries,
            g_ab,
            g_ab_error,
        },
        ok,
    })
}
