//! Seeded random instances.

use crate::instance::InstanceFile;
use anyhow::{bail, Result};
use lipsel::convex::{feasible, Halfspace, Polytope};
use lipsel::metric::{MetricTree, PseudoSpace};
use lipsel::norm::NormTag;
use lipsel::SelectionProblem;
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "kebab-case")]
pub enum Kind {
    /// Random tree with log-uniform edge lengths.
    Tree,
    /// Shortest-path completion of a random connected weighted graph.
    Metric,
    /// Random points of the plane with Euclidean distances.
    EuclideanSample,
}

#[derive(Clone, Copy, Debug)]
pub struct GenParams {
    pub kind: Kind,
    pub n: usize,
    pub m: usize,
    pub seed: u64,
    pub norm: NormTag,
    pub lambda: f64,
}

impl GenParams {
    pub fn new(kind: Kind, n: usize, m: usize, seed: u64) -> Self {
        GenParams {
            kind,
            n,
            m,
            seed,
            norm: NormTag::Linf,
            lambda: 1.0,
        }
    }
}

const BOX_HALF_WIDTH: (f64, f64) = (1.0, 4.0);
const CENTER_RANGE: f64 = 5.0;
const MAX_REJECTIONS: usize = 1000;

/// Generated numbers are dyadic with few fraction bits so that exact
/// rational LPs on them stay small.
const LENGTH_GRID: f64 = 1024.0;
const COEF_GRID: f64 = 64.0;

fn snap(v: f64, grid: f64) -> f64 {
    (v * grid).round() / grid
}

fn log_uniform(rng: &mut ChaCha8Rng, lo: f64, hi: f64) -> f64 {
    snap(rng.gen_range(lo.ln()..hi.ln()).exp(), LENGTH_GRID).clamp(lo, hi)
}

fn random_tree_edges(rng: &mut ChaCha8Rng, n: usize) -> Vec<(usize, usize, f64)> {
    (1..n)
        .map(|i| (rng.gen_range(0..i), i, log_uniform(rng, 0.1, 10.0)))
        .collect()
}

/// One random polytope: a box around a random center cut by 3 to 8 random
/// half-spaces, redrawn until nonempty.
pub fn random_polytope(rng: &mut ChaCha8Rng, m: usize) -> Result<Polytope> {
    for _ in 0..MAX_REJECTIONS {
        let center: Vec<f64> = (0..m)
            .map(|_| snap(rng.gen_range(-CENTER_RANGE..CENTER_RANGE), COEF_GRID))
            .collect();
        let w = snap(rng.gen_range(BOX_HALF_WIDTH.0..BOX_HALF_WIDTH.1), COEF_GRID);
        let lo: Vec<f64> = center.iter().map(|c| c - w).collect();
        let hi: Vec<f64> = center.iter().map(|c| c + w).collect();
        let mut p = Polytope::cube(&lo, &hi);
        let cuts = rng.gen_range(3..=8);
        for _ in 0..cuts {
            let a: Vec<f64> = (0..m).map(|_| snap(rng.gen_range(-1.0..1.0), COEF_GRID)).collect();
            let scale = a.iter().map(|v: &f64| v.abs()).sum::<f64>();
            if scale == 0.0 {
                continue;
            }
            let at_center: f64 = a.iter().zip(&center).map(|(x, y)| x * y).sum();
            let b = snap(at_center + rng.gen_range(-0.5..1.0) * w * scale, COEF_GRID);
            p.rows.push(Halfspace { a, b });
        }
        if feasible(&p)? {
            return Ok(p);
        }
    }
    bail!("no feasible polytope after {MAX_REJECTIONS} draws")
}

fn floyd_warshall(n: usize, edges: &[(usize, usize, f64)]) -> Vec<Vec<f64>> {
    let mut d = vec![vec![f64::INFINITY; n]; n];
    for (i, row) in d.iter_mut().enumerate() {
        row[i] = 0.0;
    }
    for &(u, v, w) in edges {
        if w < d[u][v] {
            d[u][v] = w;
            d[v][u] = w;
        }
    }
    for k in 0..n {
        for i in 0..n {
            for j in 0..n {
                let via = d[i][k] + d[k][j];
                if via < d[i][j] {
                    d[i][j] = via;
                }
            }
        }
    }
    d
}

/// Deterministic instance from the parameters.
pub fn generate(params: GenParams) -> Result<InstanceFile> {
    let GenParams { kind, n, m, seed, norm, lambda } = params;
    if n == 0 {
        bail!("n must be at least 1");
    }
    if !(1..=3).contains(&m) {
        bail!("m must be 1, 2 or 3, got {m}");
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let (space, tree) = match kind {
        Kind::Tree => {
            let tree = MetricTree::from_edges(n, &random_tree_edges(&mut rng, n));
            (lipsel::metric::tree_metric(&tree)?, Some(tree))
        }
        Kind::Metric => {
            let mut edges = random_tree_edges(&mut rng, n);
            for i in 0..n {
                for j in i + 1..n {
                    if rng.gen_bool(0.3) {
                        edges.push((i, j, log_uniform(&mut rng, 0.1, 10.0)));
                    }
                }
            }
            (PseudoSpace::new(floyd_warshall(n, &edges))?, None)
        }
        Kind::EuclideanSample => {
            let pts: Vec<[f64; 2]> = (0..n)
                .map(|_| [rng.gen_range(0.0..10.0), rng.gen_range(0.0..10.0)])
                .collect();
            let dist = pts
                .iter()
                .map(|p| pts.iter().map(|q| (p[0] - q[0]).hypot(p[1] - q[1])).collect())
                .collect();
            (PseudoSpace::new(dist)?, None)
        }
    };
    let f = (0..n)
        .map(|_| random_polytope(&mut rng, m))
        .collect::<Result<Vec<_>>>()?;
    let problem = SelectionProblem::new(space, tree, m, norm, f, lambda)?;
    Ok(InstanceFile::new(problem, Some(seed)))
}

#[cfg(test)]
mod tests {
    use super::*;
    use lipsel::metric::validate_pseudometric;

    #[test]
    fn same_seed_same_file() {
        for kind in [Kind::Tree, Kind::Metric, Kind::EuclideanSample] {
            let a = generate(GenParams::new(kind, 5, 2, 11)).unwrap().to_json().unwrap();
            let b = generate(GenParams::new(kind, 5, 2, 11)).unwrap().to_json().unwrap();
            assert_eq!(a, b);
        }
    }

    #[test]
    fn single_point_tree() {
        let inst = generate(GenParams::new(Kind::Tree, 1, 1, 3)).unwrap();
        assert_eq!(inst.problem.n(), 1);
    }

    #[test]
    fn generated_instances_are_valid() {
        for seed in 0..30 {
            for kind in [Kind::Tree, Kind::Metric, Kind::EuclideanSample] {
                let m = 1 + (seed as usize % 3);
                let inst = generate(GenParams::new(kind, 1 + seed as usize % 7, m, seed)).unwrap();
                assert!(validate_pseudometric(&inst.problem.space));
                inst.problem.check_feasible_values().unwrap();
            }
        }
    }

    #[test]
    fn rejects_bad_params() {
        assert!(generate(GenParams::new(Kind::Tree, 0, 1, 0)).is_err());
        assert!(generate(GenParams::new(Kind::Tree, 3, 4, 0)).is_err());
    }
}
