//! Trees placed in the space, the root-value sets `O(x; L)` of their pullback
//! problems, and a support-function outer approximation of the core `G(x)`.

use crate::convex::{hausdorff, Halfspace, Polytope};
use crate::error::{Error, Result};
use crate::gamma::gamma_membership;
use crate::lp::{Lp, LpStatus};
use crate::metric::{tree_metric, MetricTree};
use crate::problem::{add_selection, Bound, SelectionProblem};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

/// An unweighted tree on nodes `0..psi.len()` with a root and a placement
/// `psi` of its nodes into the space.
#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct PlacedTree {
    pub edges: Vec<(usize, usize)>,
    pub root: usize,
    pub psi: Vec<usize>,
}

impl PlacedTree {
    pub fn single(x: usize) -> Self {
        PlacedTree {
            edges: Vec::new(),
            root: 0,
            psi: vec![x],
        }
    }

    /// A path through `points`, rooted at the first.
    pub fn path(points: &[usize]) -> Self {
        PlacedTree {
            edges: (1..points.len()).map(|i| (i - 1, i)).collect(),
            root: 0,
            psi: points.to_vec(),
        }
    }

    /// A star with center `x` as root and one leaf per entry of `leaves`.
    pub fn star(x: usize, leaves: &[usize]) -> Self {
        let mut psi = vec![x];
        psi.extend_from_slice(leaves);
        PlacedTree {
            edges: (1..psi.len()).map(|i| (0, i)).collect(),
            root: 0,
            psi,
        }
    }

    pub fn len(&self) -> usize {
        self.psi.len()
    }

    pub fn is_empty(&self) -> bool {
        self.psi.is_empty()
    }

    /// The point the root sits on.
    pub fn base(&self) -> usize {
        self.psi[self.root]
    }

    /// Edges as pairs of space points.
    pub fn placed_edges(&self) -> Vec<(usize, usize)> {
        self.edges.iter().map(|&(u, v)| (self.psi[u], self.psi[v])).collect()
    }

    fn metric_tree(&self, p: &SelectionProblem) -> Result<MetricTree> {
        if self.root >= self.len() {
            return Err(Error::InvalidTree(format!("root {} out of range", self.root)));
        }
        let mut weighted = Vec::with_capacity(self.edges.len());
        for &(u, v) in &self.edges {
            if u >= self.len() || v >= self.len() {
                return Err(Error::InvalidTree(format!("edge ({u}, {v}) out of range")));
            }
            let (a, b) = (self.psi[u], self.psi[v]);
            if a >= p.n() || b >= p.n() {
                return Err(Error::InvalidTree(format!("placement outside the space at ({u}, {v})")));
            }
            let w = p.space.d(a, b);
            if !(w > 0.0) {
                return Err(Error::InvalidTree(format!(
                    "edge ({u}, {v}) joins points {a} and {b} at distance zero"
                )));
            }
            weighted.push((u, v, w));
        }
        Ok(MetricTree::from_edges(self.len(), &weighted))
    }
}

/// The selection problem on the nodes of `l`: path-sum distances from the
/// placed edge lengths and `F(ψ(u))` at each node.
pub fn pullback_problem(p: &SelectionProblem, l: &PlacedTree) -> Result<SelectionProblem> {
    let tree = l.metric_tree(p)?;
    let space = tree_metric(&tree)?;
    for u in 0..l.len() {
        for v in 0..l.len() {
            let (du, dv) = (l.psi[u], l.psi[v]);
            assert!(
                p.space.d(du, dv) <= space.d(u, v) * (1.0 + 1e-12),
                "tree distance below the space distance"
            );
        }
    }
    let f = l.psi.iter().map(|&z| p.f[z].clone()).collect();
    let mut q = SelectionProblem::new(space, Some(tree), p.m, p.norm, f, p.lambda)?;
    q.backend = p.backend;
    Ok(q)
}

/// Whether `ξ` is the root value of some `γ̂λ`-Lipschitz selection of the
/// pullback problem.
pub fn o_membership(p: &SelectionProblem, l: &PlacedTree, gamma_hat: f64, xi: &[f64]) -> Result<bool> {
    let q = pullback_problem(p, l)?.with_lambda(gamma_hat * p.lambda);
    let all: Vec<usize> = (0..l.len()).collect();
    gamma_membership(&q, l.root, &all, xi)
}

/// Identifies the roots of trees placed over a common point into one new root.
pub fn glue_trees(ls: &[PlacedTree]) -> Result<PlacedTree> {
    let first = ls.first().ok_or(Error::EmptyFamily)?;
    let x = first.base();
    if let Some(l) = ls.iter().find(|l| l.base() != x) {
        return Err(Error::InvalidTree(format!(
            "roots placed over {} and {}",
            x,
            l.base()
        )));
    }
    let mut psi = vec![x];
    let mut edges = Vec::new();
    for l in ls {
        let mut map = vec![0; l.len()];
        for u in 0..l.len() {
            if u != l.root {
                map[u] = psi.len();
                psi.push(l.psi[u]);
            }
        }
        edges.extend(l.edges.iter().map(|&(u, v)| (map[u], map[v])));
    }
    Ok(PlacedTree { edges, root: 0, psi })
}

/// Adds a new root over `y` joined to the old root.
pub fn extend_with_leaf(p: &SelectionProblem, l: &PlacedTree, y: usize) -> Result<PlacedTree> {
    if !(p.space.d(l.base(), y) > 0.0) {
        return Err(Error::InvalidTree(format!(
            "new root {y} is at distance zero from {}",
            l.base()
        )));
    }
    let mut out = l.clone();
    out.psi.push(y);
    out.root = out.psi.len() - 1;
    out.edges.push((out.root, l.root));
    Ok(out)
}

/// Limits on the tree family and the direction set of [`approx_core`].
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct CoreBudget {
    pub max_nodes: usize,
    pub max_trees: usize,
    pub directions: usize,
}

impl Default for CoreBudget {
    fn default() -> Self {
        CoreBudget {
            max_nodes: 4,
            max_trees: 64,
            directions: 64,
        }
    }
}

impl CoreBudget {
    pub fn doubled(self) -> Self {
        CoreBudget {
            max_trees: 2 * self.max_trees,
            directions: 2 * self.directions,
            ..self
        }
    }
}

/// Outer approximation of the core at `x`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CoreEstimate {
    pub x: usize,
    /// `F(x)` followed by one support row per direction.
    pub outer: Polytope,
    pub trees_used: Vec<PlacedTree>,
    pub directions: usize,
}

/// Directions for the support rows: `k` evenly spread unit vectors, the unit
/// ball facet normals, and the normalized rows of every `F(z)`.
pub fn core_directions(p: &SelectionProblem, k: usize) -> Vec<Vec<f64>> {
    let m = p.m;
    let mut dirs: Vec<Vec<f64>> = match m {
        1 => vec![vec![1.0], vec![-1.0]],
        2 => (0..k)
            .map(|i| {
                let t = std::f64::consts::TAU * i as f64 / k as f64;
                vec![t.cos(), t.sin()]
            })
            .collect(),
        _ => fibonacci_sphere(k),
    };
    let mut push = |u: Vec<f64>| {
        let s = u.iter().fold(0.0f64, |a, v| a.max(v.abs()));
        if s == 0.0 {
            return;
        }
        let u: Vec<f64> = u.iter().map(|v| v / s).collect();
        let dup = dirs.iter().any(|w| {
            let sw = w.iter().fold(0.0f64, |a, v| a.max(v.abs()));
            w.iter().zip(&u).all(|(a, b)| (a / sw - b).abs() < 1e-12)
        });
        if !dup {
            dirs.push(u);
        }
    };
    for u in p.norm.ball_facets(m) {
        push(u);
    }
    for fz in &p.f {
        for row in &fz.rows {
            push(row.a.clone());
        }
    }
    dirs
}

fn fibonacci_sphere(k: usize) -> Vec<Vec<f64>> {
    let golden = std::f64::consts::PI * (3.0 - 5f64.sqrt());
    (0..k)
        .map(|i| {
            let z = 1.0 - 2.0 * (i as f64 + 0.5) / k as f64;
            let r = (1.0 - z * z).sqrt();
            let t = golden * i as f64;
            vec![r * t.cos(), r * t.sin(), z]
        })
        .collect()
}

/// Paths rooted at an end and stars centered at the root, over `x`, with at
/// most `max_nodes` nodes and finite positive placed edge lengths. Ordered
/// by size, then by a hash keyed on the instance.
pub fn candidate_trees(p: &SelectionProblem, x: usize, max_nodes: usize) -> Vec<PlacedTree> {
    let n = p.n();
    let ok = |a: usize, b: usize| {
        let d = p.space.d(a, b);
        d > 0.0 && d.is_finite()
    };
    let mut out = vec![PlacedTree::single(x)];
    let mut paths: Vec<Vec<usize>> = vec![vec![x]];
    for _ in 1..max_nodes {
        let mut next = Vec::new();
        for path in &paths {
            let last = *path.last().unwrap();
            for z in (0..n).filter(|&z| ok(last, z)) {
                let mut q = path.clone();
                q.push(z);
                next.push(q);
            }
        }
        out.extend(next.iter().map(|q| PlacedTree::path(q)));
        paths = next;
    }
    let leaves: Vec<usize> = (0..n).filter(|&z| ok(x, z)).collect();
    for k in 2..max_nodes {
        for combo in itertools::Itertools::combinations_with_replacement(leaves.iter().copied(), k) {
            out.push(PlacedTree::star(x, &combo));
        }
    }
    let seed = p.fingerprint();
    let key = |t: &PlacedTree| {
        let mut h = seed;
        for &z in t.psi.iter().chain(t.edges.iter().flat_map(|e| [&e.0, &e.1])) {
            h ^= z as u64;
            h = h.wrapping_mul(0x0100_0000_01b3);
        }
        (t.len(), h)
    };
    out.sort_by_cached_key(key);
    out
}

/// Support values of `O(x; L)` in each direction, or `None` when it is empty.
fn tree_supports(p: &SelectionProblem, l: &PlacedTree, gamma_hat: f64, dirs: &[Vec<f64>]) -> Result<Option<Vec<f64>>> {
    let q = pullback_problem(p, l)?;
    let mut lp = Lp::new();
    let mut vars = vec![None; q.n()];
    let all: Vec<usize> = (0..q.n()).collect();
    add_selection(&mut lp, &q, &all, &mut vars, Bound::Fixed(gamma_hat * p.lambda));
    let a = vars[l.root].unwrap();
    let mut out = Vec::with_capacity(dirs.len());
    for u in dirs {
        lp.maximize(u.iter().enumerate().map(|(i, &c)| (a + i, c)).collect());
        let sol = lp.solve(p.backend)?;
        match sol.status {
            LpStatus::Optimal => out.push(-sol.value),
            LpStatus::Infeasible => return Ok(None),
            LpStatus::Unbounded => out.push(f64::INFINITY),
        }
    }
    Ok(Some(out))
}

/// Outer approximation of `G(x)` from a given tree family.
pub fn core_from_trees(
    p: &SelectionProblem,
    x: usize,
    gamma_hat: f64,
    trees: &[PlacedTree],
    dirs: &[Vec<f64>],
) -> Result<CoreEstimate> {
    if let Some(t) = trees.iter().find(|t| t.base() != x) {
        return Err(Error::InvalidTree(format!("tree rooted over {} not {x}", t.base())));
    }
    let per_tree = trees
        .par_iter()
        .map(|t| tree_supports(p, t, gamma_hat, dirs))
        .collect::<Result<Vec<_>>>()?;
    let mut h = vec![f64::INFINITY; dirs.len()];
    for (t, s) in trees.iter().zip(per_tree) {
        let Some(s) = s else {
            return Err(Error::GammaHatTooSmall {
                gamma_hat,
                point: x,
                tree: t.placed_edges(),
            });
        };
        for (hi, si) in h.iter_mut().zip(s) {
            *hi = hi.min(si);
        }
    }
    let mut rows = p.f[x].rows.clone();
    rows.extend(
        dirs.iter()
            .zip(&h)
            .filter(|(_, hi)| hi.is_finite())
            .map(|(u, &b)| Halfspace { a: u.clone(), b }),
    );
    Ok(CoreEstimate {
        x,
        outer: Polytope::new(p.m, rows)?,
        trees_used: trees.to_vec(),
        directions: dirs.len(),
    })
}

/// Outer approximation of the core `G(x)` at parameter `γ̂`.
///
/// Every `O(x; L)` contains the core, so intersecting support half-spaces
/// over a finite tree family gives a superset of it.
pub fn approx_core(p: &SelectionProblem, x: usize, gamma_hat: f64, budget: CoreBudget) -> Result<CoreEstimate> {
    let mut trees = candidate_trees(p, x, budget.max_nodes.max(1));
    trees.truncate(budget.max_trees.max(1));
    let dirs = core_directions(p, budget.directions);
    core_from_trees(p, x, gamma_hat, &trees, &dirs)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PairRatio {
    pub x: usize,
    pub y: usize,
    pub hausdorff: f64,
    pub ratio: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CoreCertificate {
    pub gamma_hat: f64,
    pub max_ratio: f64,
    pub pairs: Vec<PairRatio>,
}

/// Largest `d_H(Ĝ(x), Ĝ(y)) / (λρ(x, y))` over pairs at finite positive
/// distance. A measurement on the outer estimates, not a proof about the
/// true cores.
pub fn certify_core_lipschitz(estimates: &[CoreEstimate], p: &SelectionProblem, gamma_hat: f64) -> Result<CoreCertificate> {
    let mut jobs = Vec::new();
    for (i, a) in estimates.iter().enumerate() {
        for b in &estimates[i + 1..] {
            let rho = p.space.d(a.x, b.x);
            if rho > 0.0 && rho.is_finite() {
                jobs.push((a, b, rho));
            }
        }
    }
    let pairs = jobs
        .par_iter()
        .map(|&(a, b, rho)| {
            let h = hausdorff(&a.outer, &b.outer, p.norm).map_err(|e| match e {
                Error::Unbounded | Error::Infeasible => Error::Unbounded,
                e => e,
            })?;
            Ok(PairRatio {
                x: a.x,
                y: b.x,
                hausdorff: h,
                ratio: if p.lambda > 0.0 { h / (p.lambda * rho) } else if h > 0.0 { f64::INFINITY } else { 0.0 },
            })
        })
        .collect::<Result<Vec<_>>>()?;
    let max_ratio = pairs.iter().fold(0.0f64, |m, r| m.max(r.ratio));
    Ok(CoreCertificate {
        gamma_hat,
        max_ratio,
        pairs,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::convex::{contains_polytope, inflate};
    use crate::metric::PseudoSpace;
    use crate::norm::NormTag;

    fn problem(dist: Vec<Vec<f64>>, f: Vec<Polytope>, lambda: f64) -> SelectionProblem {
        let m = f[0].dim;
        SelectionProblem::new(PseudoSpace::new(dist).unwrap(), None, m, NormTag::Linf, f, lambda).unwrap()
    }

    fn two_squares() -> SelectionProblem {
        problem(
            vec![vec![0.0, 2.0], vec![2.0, 0.0]],
            vec![
                Polytope::cube(&[0.0, 0.0], &[4.0, 4.0]),
                Polytope::cube(&[5.0, 1.0], &[6.0, 2.0]),
            ],
            1.0,
        )
    }

    #[test]
    fn pullback_of_back_and_forth_path() {
        let p = two_squares();
        let q = pullback_problem(&p, &PlacedTree::path(&[0, 1, 0])).unwrap();
        assert_eq!(q.space.d(0, 1), 2.0);
        assert_eq!(q.space.d(1, 2), 2.0);
        assert_eq!(q.space.d(0, 2), 4.0);
        assert_eq!(q.f[2], p.f[0]);
    }

    #[test]
    fn inadmissible_edge_rejected() {
        let p = two_squares();
        let bad = PlacedTree::path(&[0, 0]);
        assert!(matches!(pullback_problem(&p, &bad), Err(Error::InvalidTree(_))));
        assert!(extend_with_leaf(&p, &PlacedTree::single(0), 0).is_err());
    }

    #[test]
    fn edge_membership_matches_inflate() {
        let p = two_squares();
        let l = PlacedTree::path(&[0, 1]);
        let closed = p.f[0].intersect(&inflate(&p.f[1], 2.0, NormTag::Linf).unwrap()).unwrap();
        for xi in [[3.0, 3.0], [2.9, 3.0], [3.5, 4.0], [3.0, 4.5], [3.2, 0.0]] {
            assert_eq!(o_membership(&p, &l, 1.0, &xi).unwrap(), closed.contains(&xi, 1e-12), "{xi:?}");
        }
    }

    #[test]
    fn gluing_counts_and_shapes() {
        let one = glue_trees(&[PlacedTree::path(&[0, 1, 0])]).unwrap();
        assert_eq!(one.len(), 3);
        let star = glue_trees(&[PlacedTree::path(&[0, 1]), PlacedTree::path(&[0, 2]), PlacedTree::path(&[0, 1])]).unwrap();
        assert_eq!(star.len(), 4);
        assert!(star.edges.iter().all(|&(u, _)| u == 0));
        assert!(glue_trees(&[PlacedTree::single(0), PlacedTree::single(1)]).is_err());
    }

    #[test]
    fn two_point_core_is_closed_form() {
        let p = two_squares();
        let est = approx_core(&p, 0, 1.0, CoreBudget { max_nodes: 2, max_trees: 10, directions: 16 }).unwrap();
        let closed = p.f[0].intersect(&inflate(&p.f[1], 2.0, NormTag::Linf).unwrap()).unwrap();
        assert!(contains_polytope(&est.outer, &closed, 1e-9).unwrap());
        assert!(contains_polytope(&closed, &est.outer, 1e-9).unwrap());
    }

    #[test]
    fn single_point_core_is_f() {
        let p = problem(vec![vec![0.0]], vec![Polytope::cube(&[0.0, 0.0], &[1.0, 2.0])], 1.0);
        let est = approx_core(&p, 0, 1.0, CoreBudget::default()).unwrap();
        assert!(contains_polytope(&est.outer, &p.f[0], 1e-9).unwrap());
        assert!(contains_polytope(&p.f[0], &est.outer, 1e-9).unwrap());
    }

    #[test]
    fn gamma_hat_too_small_names_tree() {
        let p = two_squares().with_lambda(0.1);
        match approx_core(&p, 0, 1.0, CoreBudget::default()) {
            Err(Error::GammaHatTooSmall { point, tree, .. }) => {
                assert_eq!(point, 0);
                assert!(!tree.is_empty());
            }
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn singleton_values_certify_ratio_one() {
        let p = problem(
            vec![vec![0.0, 2.0], vec![2.0, 0.0]],
            vec![Polytope::point(&[0.0, 0.0]), Polytope::point(&[2.0, 1.0])],
            1.0,
        );
        let est: Vec<_> = (0..2).map(|x| approx_core(&p, x, 1.0, CoreBudget::default()).unwrap()).collect();
        let cert = certify_core_lipschitz(&est, &p, 1.0).unwrap();
        assert!((cert.max_ratio - 1.0).abs() < 1e-9);
    }
}
