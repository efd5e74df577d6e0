//! Whitney partitions of unity on finite metric spaces built from Nagata
//! coverings at dyadic scales.

use crate::error::{Error, Result};
use crate::metric::PseudoSpace;
use crate::nagata::CoverProvider;
use serde::Serialize;

/// Default value of the large constant `A`.
pub const DEFAULT_BIG_A: f64 = 1024.0;

/// A positive function `r` on the points with a consistency constant.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Lengthscale {
    pub r: Vec<f64>,
    pub c_ls: f64,
}

impl Lengthscale {
    /// Checks `d(x,y) <= r(x)+r(y) => r(y) <= C_LS r(x)` over all pairs.
    pub fn check(&self, space: &PseudoSpace) -> Result<()> {
        if self.r.len() != space.len() {
            return Err(Error::SizeMismatch(format!(
                "lengthscale has {} values for {} points",
                self.r.len(),
                space.len()
            )));
        }
        if self.r.iter().any(|r| !(*r > 0.0) || !r.is_finite()) {
            return Err(Error::Invalid("lengthscale must be positive and finite".into()));
        }
        if self.c_ls < 1.0 {
            return Err(Error::Invalid(format!("C_LS = {} is below 1", self.c_ls)));
        }
        let needed = measured_c_ls(space, &self.r);
        if needed > self.c_ls * (1.0 + 1e-12) {
            return Err(Error::Precondition(format!(
                "lengthscale is not consistent with C_LS = {} (needs {needed})",
                self.c_ls
            )));
        }
        Ok(())
    }
}

/// Smallest `C_LS >= 1` for which `r` is a consistent lengthscale.
pub fn measured_c_ls(space: &PseudoSpace, r: &[f64]) -> f64 {
    let n = space.len();
    let mut c = 1.0f64;
    for x in 0..n {
        for y in 0..n {
            if space.d(x, y) <= r[x] + r[y] {
                c = c.max(r[y] / r[x]);
            }
        }
    }
    c
}

/// `r(x) = 1 + d(x, root)/2`. Being 1/2-Lipschitz and at least 1, it is
/// consistent with `C_LS = 3`: `d <= r(x)+r(y)` gives
/// `r(y) <= r(x) + (r(x)+r(y))/2`, so `r(y) <= 3 r(x)`.
pub fn rooted_lengthscale(space: &PseudoSpace, root: usize) -> Lengthscale {
    Lengthscale {
        r: (0..space.len()).map(|x| 1.0 + 0.5 * space.d(x, root)).collect(),
        c_ls: 3.0,
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Atom {
    /// Representative `x_ν`: the smallest id in the part.
    pub center: usize,
    /// `r_ν = r(x_ν)`.
    pub r: f64,
    /// Dyadic scale of the covering the part came from.
    pub s: f64,
    pub part: Vec<usize>,
    /// Nonzero values of `θ_ν` as `(point, value)`.
    pub theta: Vec<(usize, f64)>,
    /// Nonzero values of `φ_ν = θ_ν / Θ`.
    pub phi: Vec<(usize, f64)>,
}

impl Atom {
    pub fn phi_dense(&self, n: usize) -> Vec<f64> {
        let mut out = vec![0.0; n];
        for &(x, v) in &self.phi {
            out[x] = v;
        }
        out
    }

    pub fn theta_dense(&self, n: usize) -> Vec<f64> {
        let mut out = vec![0.0; n];
        for &(x, v) in &self.theta {
            out[x] = v;
        }
        out
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct WhitneyPartition {
    pub atoms: Vec<Atom>,
    pub a: f64,
    pub big_a: f64,
    /// Measured multiplicity.
    pub d_star: usize,
    /// Measured Lipschitz constant `max |φ(x)-φ(y)| r_ν / d(x,y)`.
    pub c_wh: f64,
    /// Range of `Θ = Σθ` over the points.
    pub theta_sum_range: (f64, f64),
    /// Largest ratio `s/s'` between relevant scales whose enlarged parts
    /// meet at a point.
    pub max_scale_ratio: f64,
    /// Dyadic exponents of the scales used.
    pub scale_exponents: (i32, i32),
}

/// Builds the partition of unity for `space` from `provider`.
///
/// Scales are all powers of two `s` for which some point `x` has
/// `A^-3 r(x) <= s <= A^-1 r(x)`; every relevant pair comes from one of
/// them. A pair `(i, s)` is kept when its representative satisfies that
/// window.
pub fn build_whitney(
    space: &PseudoSpace,
    provider: &CoverProvider,
    ls: &Lengthscale,
    a: f64,
    big_a: f64,
) -> Result<WhitneyPartition> {
    ls.check(space)?;
    if !(a > 0.0) || !(big_a > 1.0) {
        return Err(Error::Invalid(format!("need a > 0 and A > 1, got a = {a}, A = {big_a}")));
    }
    let n = space.len();
    let c = provider.c;
    let r_min = ls.r.iter().copied().fold(f64::INFINITY, f64::min);
    let r_max = ls.r.iter().copied().fold(0.0, f64::max);
    let k_lo = (r_min / big_a.powi(3)).log2().floor() as i32;
    let k_hi = (r_max / big_a).log2().ceil() as i32;

    let mut atoms: Vec<Atom> = Vec::new();
    let mut covered = vec![false; n];
    for k in k_lo..=k_hi {
        let s = 2f64.powi(k);
        let cover = provider.cover(s)?;
        for part in cover.parts {
            let Some(&center) = part.points.iter().min() else {
                continue;
            };
            let r = ls.r[center];
            if !(r / big_a.powi(3) <= s && s <= r / big_a) {
                continue;
            }
            let reach = c * s / 256.0;
            let mut theta = Vec::new();
            for x in 0..n {
                let dx = part
                    .points
                    .iter()
                    .map(|&p| space.d(x, p))
                    .fold(f64::INFINITY, f64::min);
                let t = (1.0 - dx / reach).max(0.0);
                if t > 0.0 {
                    theta.push((x, t));
                }
            }
            for &p in &part.points {
                covered[p] = true;
            }
            let mut points = part.points;
            points.sort_unstable();
            atoms.push(Atom {
                center,
                r,
                s,
                part: points,
                theta,
                phi: Vec::new(),
            });
        }
    }
    if let Some(x) = covered.iter().position(|c| !c) {
        return Err(Error::Whitney(format!(
            "point {x} lies in no relevant part; increase A or widen the scale range"
        )));
    }

    let mut big_theta = vec![0.0f64; n];
    for atom in &atoms {
        for &(x, t) in &atom.theta {
            big_theta[x] += t;
        }
    }
    for atom in &mut atoms {
        atom.phi = atom.theta.iter().map(|&(x, t)| (x, t / big_theta[x])).collect();
        for &(x, _) in &atom.phi {
            if !(space.d(x, atom.center) < a * atom.r) {
                return Err(Error::Whitney(format!(
                    "support of the atom at {} (scale {}) reaches point {x} outside B(x_ν, a r_ν)",
                    atom.center, atom.s
                )));
            }
        }
    }

    // Scale ratios between relevant pairs whose X^{++} neighborhoods meet.
    let mut lo = vec![f64::INFINITY; n];
    let mut hi = vec![0.0f64; n];
    for atom in &atoms {
        let reach = c * atom.s / 64.0;
        for x in 0..n {
            let dx = atom
                .part
                .iter()
                .map(|&p| space.d(x, p))
                .fold(f64::INFINITY, f64::min);
            if dx < reach {
                lo[x] = lo[x].min(atom.s);
                hi[x] = hi[x].max(atom.s);
            }
        }
    }
    let max_scale_ratio = (0..n).map(|x| hi[x] / lo[x]).fold(1.0, f64::max);

    let theta_sum_range = big_theta
        .iter()
        .fold((f64::INFINITY, 0.0f64), |(l, h), &t| (l.min(t), h.max(t)));
    let mut w = WhitneyPartition {
        atoms,
        a,
        big_a,
        d_star: 0,
        c_wh: 0.0,
        theta_sum_range,
        max_scale_ratio,
        scale_exponents: (k_lo, k_hi),
    };
    let m = measure_partition(&w, space);
    w.d_star = m.d_star;
    w.c_wh = m.c_wh;
    Ok(w)
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct PartitionMeasure {
    pub d_star: usize,
    pub c_wh: f64,
    pub sum_err: f64,
}

/// Measures multiplicity, the Lipschitz constant, and the unit-sum error.
/// Pairs at distance zero or infinity are skipped.
pub fn measure_partition(w: &WhitneyPartition, space: &PseudoSpace) -> PartitionMeasure {
    let n = space.len();
    let mut count = vec![0usize; n];
    let mut sum = vec![0.0f64; n];
    let mut c_wh = 0.0f64;
    let mut dense = vec![0.0f64; n];
    for atom in &w.atoms {
        for &(x, v) in &atom.phi {
            if v != 0.0 {
                count[x] += 1;
            }
            sum[x] += v;
            dense[x] = v;
        }
        for &(x, vx) in &atom.phi {
            for y in 0..n {
                let d = space.d(x, y);
                if d > 0.0 && d.is_finite() {
                    c_wh = c_wh.max((vx - dense[y]).abs() * atom.r / d);
                }
            }
        }
        for &(x, _) in &atom.phi {
            dense[x] = 0.0;
        }
    }
    PartitionMeasure {
        d_star: count.into_iter().max().unwrap_or(0),
        c_wh,
        sum_err: sum.iter().map(|s| (s - 1.0).abs()).fold(0.0, f64::max),
    }
}

/// Partition dump: centers, lengthscales, and dense `φ` tables.
#[derive(Clone, Debug, Serialize)]
pub struct PartitionDump {
    pub a: f64,
    pub big_a: f64,
    pub d_star: usize,
    pub c_wh: f64,
    pub atoms: Vec<AtomDump>,
}

#[derive(Clone, Debug, Serialize)]
pub struct AtomDump {
    pub x: usize,
    pub r: f64,
    pub s: f64,
    pub phi: Vec<f64>,
}

impl WhitneyPartition {
    pub fn dump(&self, n: usize) -> PartitionDump {
        PartitionDump {
            a: self.a,
            big_a: self.big_a,
            d_star: self.d_star,
            c_wh: self.c_wh,
            atoms: self
                .atoms
                .iter()
                .map(|at| AtomDump {
                    x: at.center,
                    r: at.r,
                    s: at.s,
                    phi: at.phi_dense(n),
                })
                .collect(),
        }
    }
}
