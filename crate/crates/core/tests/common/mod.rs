#![allow(dead_code)]

use lipsel::convex::{feasible, Halfspace, Polytope};
use lipsel::metric::{tree_metric, MetricTree, PseudoSpace};
use lipsel::norm::NormTag;
use lipsel::SelectionProblem;
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Random tree on `n` nodes with integer edge lengths in `1..=max_len`.
pub fn int_tree(rng: &mut ChaCha8Rng, n: usize, max_len: u32) -> MetricTree {
    let edges: Vec<(usize, usize, f64)> = (1..n)
        .map(|i| (rng.gen_range(0..i), i, rng.gen_range(1..=max_len) as f64))
        .collect();
    MetricTree::from_edges(n, &edges)
}

/// Random tree with real edge lengths in `[lo, hi)`.
pub fn real_tree(rng: &mut ChaCha8Rng, n: usize, lo: f64, hi: f64) -> MetricTree {
    let edges: Vec<(usize, usize, f64)> = (1..n)
        .map(|i| (rng.gen_range(0..i), i, rng.gen_range(lo..hi)))
        .collect();
    MetricTree::from_edges(n, &edges)
}

/// Integer shortest-path metric of a random connected graph.
pub fn int_metric(rng: &mut ChaCha8Rng, n: usize, max_len: u32) -> PseudoSpace {
    let mut d = vec![vec![f64::INFINITY; n]; n];
    for (i, row) in d.iter_mut().enumerate() {
        row[i] = 0.0;
    }
    let set = |d: &mut Vec<Vec<f64>>, i: usize, j: usize, w: f64| {
        if w < d[i][j] {
            d[i][j] = w;
            d[j][i] = w;
        }
    };
    for i in 1..n {
        let j = rng.gen_range(0..i);
        let w = rng.gen_range(1..=max_len) as f64;
        set(&mut d, i, j, w);
    }
    for i in 0..n {
        for j in i + 1..n {
            if rng.gen_bool(0.4) {
                let w = rng.gen_range(1..=max_len) as f64;
                set(&mut d, i, j, w);
            }
        }
    }
    for k in 0..n {
        for i in 0..n {
            for j in 0..n {
                if d[i][k] + d[k][j] < d[i][j] {
                    d[i][j] = d[i][k] + d[k][j];
                }
            }
        }
    }
    PseudoSpace::new(d).unwrap()
}

/// Nonempty polytope with integer data: a box cut by up to two integer
/// half-spaces through its center region.
pub fn int_polytope(rng: &mut ChaCha8Rng, m: usize, range: i32) -> Polytope {
    loop {
        let lo: Vec<f64> = (0..m).map(|_| rng.gen_range(-range..range) as f64).collect();
        let hi: Vec<f64> = lo.iter().map(|&l| l + rng.gen_range(0..=3) as f64).collect();
        let mut p = Polytope::cube(&lo, &hi);
        if m > 1 {
            for _ in 0..rng.gen_range(0..=2) {
                let a: Vec<f64> = (0..m).map(|_| rng.gen_range(-2..=2) as f64).collect();
                if a.iter().all(|&v| v == 0.0) {
                    continue;
                }
                let mid: f64 = a.iter().zip(lo.iter().zip(&hi)).map(|(a, (l, h))| a * (l + h) / 2.0).sum();
                p.rows.push(Halfspace { a, b: (mid + rng.gen_range(0..=2) as f64).floor() });
            }
        }
        if feasible(&p).unwrap() {
            return p;
        }
    }
}

pub fn int_problem(rng: &mut ChaCha8Rng, space: PseudoSpace, m: usize, lambda: f64) -> SelectionProblem {
    let f = (0..space.len()).map(|_| int_polytope(rng, m, 6)).collect();
    SelectionProblem::new(space, None, m, NormTag::Linf, f, lambda).unwrap()
}

pub fn tree_space(t: &MetricTree) -> PseudoSpace {
    tree_metric(t).unwrap()
}
