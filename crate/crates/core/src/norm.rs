//! Polyhedral norms on R^m and their LP encodings.

use crate::lp::{Lp, Relation, VarBound};
use serde::{Deserialize, Serialize};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
pub enum NormTag {
    #[default]
    #[serde(rename = "LINF", alias = "linf")]
    Linf,
    #[serde(rename = "L1", alias = "l1")]
    L1,
}

impl NormTag {
    pub fn dual(self) -> NormTag {
        match self {
            NormTag::Linf => NormTag::L1,
            NormTag::L1 => NormTag::Linf,
        }
    }

    pub fn norm(self, v: &[f64]) -> f64 {
        match self {
            NormTag::Linf => v.iter().fold(0.0f64, |m, x| m.max(x.abs())),
            NormTag::L1 => v.iter().map(|x| x.abs()).sum(),
        }
    }

    pub fn dual_norm(self, v: &[f64]) -> f64 {
        self.dual().norm(v)
    }

    pub fn dist(self, a: &[f64], b: &[f64]) -> f64 {
        match self {
            NormTag::Linf => a
                .iter()
                .zip(b)
                .fold(0.0f64, |m, (x, y)| m.max((x - y).abs())),
            NormTag::L1 => a.iter().zip(b).map(|(x, y)| (x - y).abs()).sum(),
        }
    }

    /// Outward facet normals of the unit ball, scaled so that each facet is
    /// `u·x <= 1`.
    pub fn ball_facets(self, m: usize) -> Vec<Vec<f64>> {
        match self {
            NormTag::Linf => (0..m)
                .flat_map(|i| {
                    [1.0, -1.0].map(|s| {
                        let mut u = vec![0.0; m];
                        u[i] = s;
                        u
                    })
                })
                .collect(),
            NormTag::L1 => (0..1usize << m)
                .map(|mask| {
                    (0..m)
                        .map(|i| if mask >> i & 1 == 1 { -1.0 } else { 1.0 })
                        .collect()
                })
                .collect(),
        }
    }

    /// Edge directions of the unit ball (up to sign).
    pub fn ball_edges(self, m: usize) -> Vec<Vec<f64>> {
        match self {
            NormTag::Linf => (0..m)
                .map(|i| {
                    let mut u = vec![0.0; m];
                    u[i] = 1.0;
                    u
                })
                .collect(),
            NormTag::L1 => {
                let mut out = Vec::new();
                for i in 0..m {
                    for j in i + 1..m {
                        for s in [1.0, -1.0] {
                            let mut u = vec![0.0; m];
                            u[i] = 1.0;
                            u[j] = s;
                            out.push(u);
                        }
                    }
                }
                out
            }
        }
    }
}

/// An affine expression `constant + Σ coef·x_j` over LP variables.
#[derive(Clone, Debug, Default)]
pub struct Affine {
    pub terms: Vec<(usize, f64)>,
    pub constant: f64,
}

impl Affine {
    pub fn constant(c: f64) -> Self {
        Affine {
            terms: Vec::new(),
            constant: c,
        }
    }

    pub fn var(j: usize) -> Self {
        Affine {
            terms: vec![(j, 1.0)],
            constant: 0.0,
        }
    }

    pub fn scaled_var(j: usize, c: f64) -> Self {
        Affine {
            terms: vec![(j, c)],
            constant: 0.0,
        }
    }

    pub fn plus(mut self, other: &Affine, scale: f64) -> Self {
        self.terms
            .extend(other.terms.iter().map(|&(j, c)| (j, c * scale)));
        self.constant += other.constant * scale;
        self
    }
}

/// Adds rows enforcing `‖(coords)‖ <= bound` under `norm`.
pub fn add_norm_le(lp: &mut Lp, norm: NormTag, coords: &[Affine], bound: &Affine) {
    match norm {
        NormTag::Linf => {
            for e in coords {
                for s in [1.0, -1.0] {
                    let mut row: Vec<(usize, f64)> =
                        e.terms.iter().map(|&(j, c)| (j, s * c)).collect();
                    row.extend(bound.terms.iter().map(|&(j, c)| (j, -c)));
                    lp.add_row(row, Relation::Le, bound.constant - s * e.constant);
                }
            }
        }
        NormTag::L1 => {
            let first = lp.add_vars(coords.len(), VarBound::NonNegative);
            for (i, e) in coords.iter().enumerate() {
                for s in [1.0, -1.0] {
                    let mut row: Vec<(usize, f64)> =
                        e.terms.iter().map(|&(j, c)| (j, s * c)).collect();
                    row.push((first + i, -1.0));
                    lp.add_row(row, Relation::Le, -s * e.constant);
                }
            }
            let mut row: Vec<(usize, f64)> = (0..coords.len()).map(|i| (first + i, 1.0)).collect();
            row.extend(bound.terms.iter().map(|&(j, c)| (j, -c)));
            lp.add_row(row, Relation::Le, bound.constant);
        }
    }
}

/// Coordinates of `x_vars - y_vars` as affine expressions.
pub fn diff(xs: usize, ys: usize, m: usize) -> Vec<Affine> {
    (0..m)
        .map(|i| Affine {
            terms: vec![(xs + i, 1.0), (ys + i, -1.0)],
            constant: 0.0,
        })
        .collect()
}

/// Coordinates of `x_vars - q` for a fixed point `q`.
pub fn diff_point(xs: usize, q: &[f64]) -> Vec<Affine> {
    q.iter()
        .enumerate()
        .map(|(i, &qi)| Affine {
            terms: vec![(xs + i, 1.0)],
            constant: -qi,
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lp::LpBackend;

    #[test]
    fn norms_and_duals() {
        let v = [3.0, -4.0];
        assert_eq!(NormTag::Linf.norm(&v), 4.0);
        assert_eq!(NormTag::L1.norm(&v), 7.0);
        assert_eq!(NormTag::Linf.dual_norm(&v), 7.0);
        assert_eq!(NormTag::L1.dual(), NormTag::Linf);
    }

    #[test]
    fn ball_facets_support_the_ball() {
        for norm in [NormTag::Linf, NormTag::L1] {
            for m in 1..=3 {
                let facets = norm.ball_facets(m);
                // every facet normal has dual norm 1, i.e. support value 1
                for u in &facets {
                    assert!((norm.dual_norm(u) - 1.0).abs() < 1e-15);
                }
            }
        }
        assert_eq!(NormTag::L1.ball_facets(3).len(), 8);
        assert_eq!(NormTag::L1.ball_edges(3).len(), 6);
    }

    #[test]
    fn lp_encoding_minimizes_norm() {
        for norm in [NormTag::Linf, NormTag::L1] {
            let mut lp = Lp::new();
            let x = lp.add_vars(2, VarBound::Free);
            let t = lp.add_var(VarBound::NonNegative);
            add_norm_le(&mut lp, norm, &diff_point(x, &[3.0, -4.0]), &Affine::var(t));
            lp.add_row(vec![(x, 1.0), (x + 1, 1.0)], Relation::Eq, 0.0);
            lp.minimize(vec![(t, 1.0)]);
            let s = lp.solve(LpBackend::Float).unwrap();
            let expected = match norm {
                NormTag::Linf => 0.5,
                NormTag::L1 => 1.0,
            };
            assert!((s.value - expected).abs() < 1e-9, "{norm:?} {}", s.value);
        }
    }
}
