//! Nagata coverings: the distinguished-ancestor covering of metric trees and
//! a generic validator.

use crate::error::{Error, Result};
use crate::metric::{MetricTree, PseudoSpace};
use serde::{Deserialize, Serialize};

/// Nagata constants of the tree covering.
pub const TREE_D: usize = 1;
pub const TREE_C: f64 = 1.0 / 16.0;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Part {
    pub id: usize,
    pub points: Vec<usize>,
    /// Distinguished ancestor shared by the part (tree coverings only).
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub anchor: Option<usize>,
    /// Parity of the rescaled depth floor (tree coverings only).
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub parity: Option<u8>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Covering {
    pub s: f64,
    pub parts: Vec<Part>,
}

/// Rooted view of a tree used to build coverings at many scales.
#[derive(Clone, Debug)]
struct RootedTree {
    parent: Vec<usize>,
    depth: Vec<f64>,
}

impl RootedTree {
    fn new(tree: &MetricTree, origin: usize) -> Result<Self> {
        let g = tree.graph()?;
        if origin >= g.len() {
            return Err(Error::InvalidTree(format!("origin {origin} is not a node")));
        }
        let (parent, _) = g.rooted(origin);
        Ok(RootedTree {
            parent,
            depth: g.distances_from(origin),
        })
    }

    fn cover(&self, s: f64) -> Covering {
        let n = self.depth.len();
        let scale = 4.0 / s;
        let level: Vec<f64> = self.depth.iter().map(|d| (d * scale).floor()).collect();
        let mut key_to_part: std::collections::BTreeMap<(usize, u8), usize> = Default::default();
        let mut parts: Vec<Part> = Vec::new();
        for x in 0..n {
            // Ancestors satisfying the depth condition form a suffix of the
            // root path, so climb while the parent still satisfies it.
            let threshold = level[x] - 1.0;
            let mut z = x;
            while self.parent[z] != z && self.depth[self.parent[z]] * scale > threshold {
                z = self.parent[z];
            }
            let q = (level[x] as i64).rem_euclid(2) as u8;
            let id = *key_to_part.entry((z, q)).or_insert_with(|| {
                parts.push(Part {
                    id: parts.len(),
                    points: Vec::new(),
                    anchor: Some(z),
                    parity: Some(q),
                });
                parts.len() - 1
            });
            parts[id].points.push(x);
        }
        Covering { s, parts }
    }
}

/// The distinguished-ancestor covering of a metric tree at scale `s`.
/// `origin` is a node index; it defaults to the first node.
pub fn tree_nagata_cover(tree: &MetricTree, s: f64, origin: usize) -> Result<Covering> {
    if !(s > 0.0) || !s.is_finite() {
        return Err(Error::Invalid(format!("scale must be positive, got {s}")));
    }
    Ok(RootedTree::new(tree, origin)?.cover(s))
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct NagataReport {
    pub ok: bool,
    pub covers_all: bool,
    pub max_diameter: f64,
    /// Ball center, radius, and the number of parts it meets, for the ball
    /// meeting the most parts.
    pub worst_ball: (usize, f64, usize),
}

/// Checks coverage, `diam <= s` for every part, and that every open ball
/// `B(x, c·s)` centered at a point meets at most `d + 1` parts.
pub fn validate_nagata(
    cover: &Covering,
    space: &PseudoSpace,
    s: f64,
    d: usize,
    c: f64,
) -> Result<NagataReport> {
    let n = space.len();
    let mut part_of: Vec<Vec<usize>> = vec![Vec::new(); n];
    for (k, p) in cover.parts.iter().enumerate() {
        for &x in &p.points {
            if x >= n {
                return Err(Error::Invalid(format!(
                    "part {} references unknown point {x}",
                    p.id
                )));
            }
            part_of[x].push(k);
        }
    }
    let covers_all = part_of.iter().all(|v| !v.is_empty());
    let mut max_diameter = 0.0f64;
    for p in &cover.parts {
        for (i, &x) in p.points.iter().enumerate() {
            for &y in &p.points[i + 1..] {
                max_diameter = max_diameter.max(space.d(x, y));
            }
        }
    }
    let radius = c * s;
    let mut worst = (0, radius, 0);
    let mut seen = vec![usize::MAX; cover.parts.len()];
    for x in 0..n {
        let mut count = 0;
        for y in 0..n {
            if space.d(x, y) < radius {
                for &k in &part_of[y] {
                    if seen[k] != x {
                        seen[k] = x;
                        count += 1;
                    }
                }
            }
        }
        if count > worst.2 {
            worst = (x, radius, count);
        }
    }
    let diam_ok = max_diameter <= s * (1.0 + 1e-12);
    Ok(NagataReport {
        ok: covers_all && diam_ok && worst.2 <= d + 1,
        covers_all,
        max_diameter,
        worst_ball: worst,
    })
}

/// Smallest distance between two parts with equal parity and different
/// anchors. For the tree covering this is at least `s/8`.
pub fn same_parity_separation(cover: &Covering, space: &PseudoSpace) -> f64 {
    let mut best = f64::INFINITY;
    for (i, p) in cover.parts.iter().enumerate() {
        for q in &cover.parts[i + 1..] {
            if p.parity != q.parity || p.anchor == q.anchor {
                continue;
            }
            for &x in &p.points {
                for &y in &q.points {
                    best = best.min(space.d(x, y));
                }
            }
        }
    }
    best
}

/// Source of coverings with fixed Nagata constants `(d, c)`.
#[derive(Clone, Debug)]
pub struct CoverProvider {
    style: Style,
    n: usize,
    pub d: usize,
    pub c: f64,
    /// Scales at or above this bound are rejected.
    pub valid_below: f64,
}

#[derive(Clone, Debug)]
enum Style {
    Tree(RootedTree),
    Singletons,
}

impl CoverProvider {
    /// Tree coverings, valid at every scale with `(D, c) = (1, 1/16)`.
    pub fn tree(tree: &MetricTree, origin: usize) -> Result<Self> {
        let rooted = RootedTree::new(tree, origin)?;
        Ok(CoverProvider {
            n: rooted.depth.len(),
            style: Style::Tree(rooted),
            d: TREE_D,
            c: TREE_C,
            valid_below: f64::INFINITY,
        })
    }

    /// Singleton coverings with `D = 0`, valid for scales below the smallest
    /// positive distance (no point at all for a one-point space).
    pub fn singletons(space: &PseudoSpace, c: f64) -> Self {
        CoverProvider {
            style: Style::Singletons,
            n: space.len(),
            d: 0,
            c,
            valid_below: space.min_positive_distance().unwrap_or(f64::INFINITY),
        }
    }

    pub fn cover(&self, s: f64) -> Result<Covering> {
        if !(s > 0.0) || !s.is_finite() {
            return Err(Error::Invalid(format!("scale must be positive, got {s}")));
        }
        if s >= self.valid_below {
            return Err(Error::Invalid(format!(
                "scale {s} is outside the provider's range (below {})",
                self.valid_below
            )));
        }
        Ok(match &self.style {
            Style::Tree(t) => t.cover(s),
            Style::Singletons => Covering {
                s,
                parts: (0..self.n)
                    .map(|x| Part {
                        id: x,
                        points: vec![x],
                        anchor: None,
                        parity: None,
                    })
                    .collect(),
            },
        })
    }
}
