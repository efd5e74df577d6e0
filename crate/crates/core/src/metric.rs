//! Finite pseudometric spaces and metric trees.
//!
//! Points are indices `0..n`. Infinite distances are `f64::INFINITY`, which
//! already orders above every real and absorbs under addition.

use crate::error::{Error, Result};
use crate::json;
use serde::{Deserialize, Serialize};
use std::collections::VecDeque;

pub const INF: f64 = f64::INFINITY;
const TRIANGLE_TOL: f64 = 1e-9;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PseudoSpace {
    #[serde(with = "json::inf_table")]
    pub dist: Vec<Vec<f64>>,
}

impl PseudoSpace {
    pub fn new(dist: Vec<Vec<f64>>) -> Result<Self> {
        let n = dist.len();
        if n == 0 {
            return Err(Error::InvalidSpace("space has no points".into()));
        }
        if dist.iter().any(|r| r.len() != n) {
            return Err(Error::InvalidSpace("distance table is not square".into()));
        }
        if dist.iter().flatten().any(|d| d.is_nan() || *d < 0.0) {
            return Err(Error::InvalidSpace("distances must be nonnegative".into()));
        }
        Ok(PseudoSpace { dist })
    }

    pub fn len(&self) -> usize {
        self.dist.len()
    }

    pub fn is_empty(&self) -> bool {
        self.dist.is_empty()
    }

    #[inline]
    pub fn d(&self, x: usize, y: usize) -> f64 {
        self.dist[x][y]
    }

    /// Smallest positive finite distance, if any.
    pub fn min_positive_distance(&self) -> Option<f64> {
        self.dist
            .iter()
            .flatten()
            .copied()
            .filter(|d| *d > 0.0 && d.is_finite())
            .min_by(f64::total_cmp)
    }

    /// Largest finite distance.
    pub fn diameter(&self) -> f64 {
        self.dist
            .iter()
            .flatten()
            .copied()
            .filter(|d| d.is_finite())
            .fold(0.0, f64::max)
    }

    /// Restriction to `points`, in the given order.
    pub fn subspace(&self, points: &[usize]) -> PseudoSpace {
        PseudoSpace {
            dist: points
                .iter()
                .map(|&i| points.iter().map(|&j| self.dist[i][j]).collect())
                .collect(),
        }
    }

    /// Points of the open ball `B(x, r)`.
    pub fn ball(&self, x: usize, r: f64) -> Vec<usize> {
        (0..self.len()).filter(|&y| self.dist[x][y] < r).collect()
    }
}

/// Symmetry, zero diagonal, and the triangle inequality (INF absorbing).
pub fn validate_pseudometric(s: &PseudoSpace) -> bool {
    let n = s.len();
    for x in 0..n {
        if s.dist[x].len() != n || s.dist[x][x] != 0.0 {
            return false;
        }
        for y in 0..n {
            let d = s.dist[x][y];
            if d.is_nan() || d < 0.0 || d != s.dist[y][x] {
                return false;
            }
        }
    }
    for x in 0..n {
        for y in 0..n {
            let dxy = s.dist[x][y];
            for z in 0..n {
                let bound = s.dist[x][z] + s.dist[z][y];
                if dxy > bound + TRIANGLE_TOL * bound.max(1.0) {
                    return false;
                }
            }
        }
    }
    true
}

/// A finite tree with positive edge lengths. Nodes carry integer labels;
/// internally they are indexed by their position in `nodes`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MetricTree {
    pub nodes: Vec<u64>,
    pub edges: Vec<(u64, u64, f64)>,
}

/// Adjacency view of a validated [`MetricTree`].
#[derive(Clone, Debug)]
pub struct TreeGraph {
    pub adj: Vec<Vec<(usize, f64)>>,
}

impl MetricTree {
    /// Tree on nodes `0..n` from index-based edges.
    pub fn from_edges(n: usize, edges: &[(usize, usize, f64)]) -> Self {
        MetricTree {
            nodes: (0..n as u64).collect(),
            edges: edges
                .iter()
                .map(|&(u, v, w)| (u as u64, v as u64, w))
                .collect(),
        }
    }

    pub fn index_of(&self, label: u64) -> Option<usize> {
        self.nodes.iter().position(|&v| v == label)
    }

    pub fn graph(&self) -> Result<TreeGraph> {
        let n = self.nodes.len();
        if n == 0 {
            return Err(Error::InvalidTree("tree has no nodes".into()));
        }
        let mut sorted = self.nodes.clone();
        sorted.sort_unstable();
        if sorted.windows(2).any(|w| w[0] == w[1]) {
            return Err(Error::InvalidTree("duplicate node label".into()));
        }
        if self.edges.len() != n - 1 {
            return Err(Error::InvalidTree(format!(
                "{} nodes need {} edges, found {}",
                n,
                n - 1,
                self.edges.len()
            )));
        }
        let mut adj = vec![Vec::new(); n];
        for &(u, v, w) in &self.edges {
            let (Some(a), Some(b)) = (self.index_of(u), self.index_of(v)) else {
                return Err(Error::InvalidTree(format!("edge ({u}, {v}) has an unknown endpoint")));
            };
            if !(w > 0.0) || !w.is_finite() {
                return Err(Error::InvalidTree(format!("edge ({u}, {v}) has length {w}")));
            }
            if a == b {
                return Err(Error::InvalidTree(format!("self loop at {u}")));
            }
            adj[a].push((b, w));
            adj[b].push((a, w));
        }
        let g = TreeGraph { adj };
        if g.distances_from(0).iter().any(|d| d.is_infinite()) {
            return Err(Error::InvalidTree("edge set is disconnected".into()));
        }
        Ok(g)
    }
}

impl TreeGraph {
    pub fn len(&self) -> usize {
        self.adj.len()
    }

    pub fn is_empty(&self) -> bool {
        self.adj.is_empty()
    }

    pub fn distances_from(&self, src: usize) -> Vec<f64> {
        let mut dist = vec![INF; self.adj.len()];
        dist[src] = 0.0;
        let mut queue = VecDeque::from([src]);
        while let Some(u) = queue.pop_front() {
            for &(v, w) in &self.adj[u] {
                if dist[v].is_infinite() {
                    dist[v] = dist[u] + w;
                    queue.push_back(v);
                }
            }
        }
        dist
    }

    /// Parent pointers (root maps to itself) and nodes in BFS order.
    pub fn rooted(&self, root: usize) -> (Vec<usize>, Vec<usize>) {
        let n = self.adj.len();
        let mut parent = vec![usize::MAX; n];
        parent[root] = root;
        let mut order = Vec::with_capacity(n);
        let mut queue = VecDeque::from([root]);
        while let Some(u) = queue.pop_front() {
            order.push(u);
            for &(v, _) in &self.adj[u] {
                if parent[v] == usize::MAX {
                    parent[v] = u;
                    queue.push_back(v);
                }
            }
        }
        (parent, order)
    }
}

/// Path-sum metric of a tree, one traversal per source.
pub fn tree_metric(t: &MetricTree) -> Result<PseudoSpace> {
    let g = t.graph()?;
    let dist = (0..g.len()).map(|s| g.distances_from(s)).collect();
    Ok(PseudoSpace { dist })
}

#[derive(Clone, Debug, PartialEq)]
pub struct Quotient {
    /// The metric space of class representatives.
    pub w: PseudoSpace,
    /// Representative (in the original space) of each point.
    pub rep: Vec<usize>,
    /// Index in `w` of each point's class.
    pub class_of: Vec<usize>,
    /// Original point id of each point of `w`.
    pub reps: Vec<usize>,
}

/// Identifies points at distance zero; the representative of a class is its
/// lowest id.
pub fn quotient_zero(s: &PseudoSpace) -> Quotient {
    let n = s.len();
    let mut rep = vec![usize::MAX; n];
    let mut class_of = vec![0; n];
    let mut reps = Vec::new();
    for x in 0..n {
        if rep[x] != usize::MAX {
            continue;
        }
        let k = reps.len();
        reps.push(x);
        for y in x..n {
            if rep[y] == usize::MAX && s.dist[x][y] == 0.0 {
                rep[y] = x;
                class_of[y] = k;
            }
        }
    }
    Quotient {
        w: s.subspace(&reps),
        rep,
        class_of,
        reps,
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Component {
    /// Original ids, increasing.
    pub points: Vec<usize>,
    pub space: PseudoSpace,
}

/// Splits a pseudometric space into maximal classes of finite mutual distance.
pub fn finite_components(s: &PseudoSpace) -> Vec<Component> {
    let n = s.len();
    let mut parent: Vec<usize> = (0..n).collect();
    fn find(p: &mut [usize], mut x: usize) -> usize {
        while p[x] != x {
            p[x] = p[p[x]];
            x = p[x];
        }
        x
    }
    for x in 0..n {
        for y in x + 1..n {
            if s.dist[x][y].is_finite() {
                let (a, b) = (find(&mut parent, x), find(&mut parent, y));
                if a != b {
                    parent[a.max(b)] = a.min(b);
                }
            }
        }
    }
    let mut groups: Vec<(usize, Vec<usize>)> = Vec::new();
    for x in 0..n {
        let r = find(&mut parent, x);
        match groups.iter_mut().find(|g| g.0 == r) {
            Some(g) => g.1.push(x),
            None => groups.push((r, vec![x])),
        }
    }
    groups
        .into_iter()
        .map(|(_, points)| Component {
            space: s.subspace(&points),
            points,
        })
        .collect()
}

/// Space JSON: either a distance table or a tree.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum SpaceSpec {
    Dist {
        #[serde(with = "json::inf_table")]
        dist: Vec<Vec<f64>>,
    },
    Tree {
        tree: MetricTree,
    },
}

impl SpaceSpec {
    pub fn to_space(&self) -> Result<PseudoSpace> {
        match self {
            SpaceSpec::Dist { dist } => PseudoSpace::new(dist.clone()),
            SpaceSpec::Tree { tree } => tree_metric(tree),
        }
    }

    pub fn tree(&self) -> Option<&MetricTree> {
        match self {
            SpaceSpec::Tree { tree } => Some(tree),
            SpaceSpec::Dist { .. } => None,
        }
    }
}
