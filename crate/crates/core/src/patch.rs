//! Gluing local maps with a partition of unity.

use crate::error::{Error, Result};
use crate::metric::PseudoSpace;
use crate::norm::NormTag;
use serde::{Deserialize, Serialize};

const REL_TOL: f64 = 1e-9;

/// One local piece: a center, a lengthscale, a weight function, a base
/// vector `η_ν`, and a local map defined at least on `B(x_ν, r_ν)`.
#[derive(Clone, Debug, PartialEq)]
pub struct PatchAtom {
    pub center: usize,
    pub r: f64,
    /// Dense `θ_ν` over all points.
    pub theta: Vec<f64>,
    pub eta: Vec<f64>,
    /// `F_ν(x)`, required for every `x` in the open ball `B(x_ν, r_ν)`.
    pub local: Vec<Option<Vec<f64>>>,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct PatchConstants {
    pub c_ls: f64,
    pub c_wh: f64,
    pub c_eta: f64,
    pub c_agr: f64,
    pub c_lip: f64,
    pub d_star: usize,
}

impl PatchConstants {
    /// Support radius factor `a = 1/(4 C_LS)`.
    pub fn a(&self) -> f64 {
        1.0 / (4.0 * self.c_ls)
    }

    /// Lipschitz bound for the glued map.
    ///
    /// Near pairs (within `a(r_ν0 + r_μ0)` for some relevant `ν0, μ0`):
    /// all relevant balls contain both points, so
    /// `C_LIP + 2D*·C_WH·(C_AGR + 2C_η(1 + C_LS))`.
    /// Far pairs: compare each side with a relevant `η`, giving
    /// `(K + C_η(1 + a))·4C_LS + C_η` with
    /// `K = C_AGR·C_LS + C_η(C_LS + 1 + a·C_LS + a)`.
    pub fn tracked_bound(&self) -> f64 {
        let a = self.a();
        let ds = self.d_star as f64;
        let near = self.c_lip + 2.0 * ds * self.c_wh * (self.c_agr + 2.0 * self.c_eta * (1.0 + self.c_ls));
        let k = self.c_agr * self.c_ls + self.c_eta * (self.c_ls + 1.0 + a * self.c_ls + a);
        let far = (k + self.c_eta * (1.0 + a)) * 4.0 * self.c_ls + self.c_eta;
        near.max(far)
    }
}

/// The hypotheses of the gluing construction, one per bullet.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub enum PatchHypothesis {
    LengthscaleConsistency,
    ThetaSupport,
    ThetaLipschitz,
    Multiplicity,
    UnitSum,
    EtaConsistency,
    Agreement,
    LocalLipschitz,
    Shape,
}

fn fail(bullet: PatchHypothesis, detail: String) -> Error {
    Error::Patch { bullet, detail }
}

pub(crate) fn within(value: f64, bound: f64) -> bool {
    value <= bound * (1.0 + REL_TOL) + 1e-15
}

/// Verifies every hypothesis numerically; the error names the first failing
/// bullet.
pub fn verify_hypotheses(
    space: &PseudoSpace,
    atoms: &[PatchAtom],
    k: &PatchConstants,
    norm: NormTag,
) -> Result<()> {
    use PatchHypothesis::*;
    let n = space.len();
    let Some(m) = atoms.first().map(|a| a.eta.len()) else {
        return Err(fail(Shape, "no atoms".into()));
    };
    for (i, at) in atoms.iter().enumerate() {
        if at.theta.len() != n || at.local.len() != n || at.eta.len() != m || at.center >= n {
            return Err(fail(Shape, format!("atom {i} has inconsistent sizes")));
        }
        if !(at.r > 0.0) {
            return Err(fail(Shape, format!("atom {i} has r = {}", at.r)));
        }
        if at.local.iter().flatten().any(|v| v.len() != m) {
            return Err(fail(Shape, format!("atom {i} has a local value of the wrong dimension")));
        }
    }
    if k.c_ls < 1.0 {
        return Err(fail(LengthscaleConsistency, format!("C_LS = {} < 1", k.c_ls)));
    }
    for (i, mu) in atoms.iter().enumerate() {
        for nu in &atoms[i + 1..] {
            if space.d(mu.center, nu.center) <= mu.r + nu.r {
                let ratio = (nu.r / mu.r).max(mu.r / nu.r);
                if !within(ratio, k.c_ls) {
                    return Err(fail(
                        LengthscaleConsistency,
                        format!("r ratio {ratio} between centers {} and {}", mu.center, nu.center),
                    ));
                }
            }
        }
    }
    let a = k.a();
    for (i, at) in atoms.iter().enumerate() {
        for x in 0..n {
            let t = at.theta[x];
            if t < 0.0 || !t.is_finite() {
                return Err(fail(ThetaSupport, format!("theta_{i}({x}) = {t}")));
            }
            if t != 0.0 && !(space.d(x, at.center) < a * at.r) {
                return Err(fail(
                    ThetaSupport,
                    format!("theta_{i}({x}) = {t} but {x} is outside B(x_nu, a r_nu)"),
                ));
            }
        }
        for x in 0..n {
            for y in x + 1..n {
                let d = space.d(x, y);
                let diff = (at.theta[x] - at.theta[y]).abs();
                if d.is_infinite() || diff == 0.0 {
                    continue;
                }
                if d == 0.0 || !within(diff, k.c_wh * d / at.r) {
                    return Err(fail(
                        ThetaLipschitz,
                        format!("theta_{i} changes by {diff} between {x} and {y} at distance {d}"),
                    ));
                }
            }
        }
    }
    for x in 0..n {
        let count = atoms.iter().filter(|at| at.theta[x] != 0.0).count();
        if count > k.d_star {
            return Err(fail(Multiplicity, format!("{count} atoms are active at {x}")));
        }
        let sum: f64 = atoms.iter().map(|at| at.theta[x]).sum();
        if (sum - 1.0).abs() > 1e-9 {
            return Err(fail(UnitSum, format!("sum of theta at {x} is {sum}")));
        }
    }
    for (i, mu) in atoms.iter().enumerate() {
        for nu in &atoms[i + 1..] {
            let lhs = norm.dist(&mu.eta, &nu.eta);
            let rhs = k.c_eta * (mu.r + nu.r + space.d(mu.center, nu.center));
            if !within(lhs, rhs) {
                return Err(fail(
                    EtaConsistency,
                    format!("|eta_mu - eta_nu| = {lhs} exceeds {rhs} for centers {} and {}", mu.center, nu.center),
                ));
            }
        }
    }
    for (i, at) in atoms.iter().enumerate() {
        let ball = space.ball(at.center, at.r);
        for &x in &ball {
            let Some(fx) = &at.local[x] else {
                return Err(fail(Agreement, format!("F_{i} is undefined at {x} inside its ball")));
            };
            let dev = norm.dist(fx, &at.eta);
            if !within(dev, k.c_agr * at.r) {
                return Err(fail(Agreement, format!("|F_{i}({x}) - eta_{i}| = {dev} exceeds C_AGR r")));
            }
        }
        for (p, &x) in ball.iter().enumerate() {
            for &y in &ball[p + 1..] {
                let (fx, fy) = (at.local[x].as_ref().unwrap(), at.local[y].as_ref().unwrap());
                let diff = norm.dist(fx, fy);
                let d = space.d(x, y);
                if diff > 0.0 && (d == 0.0 || !within(diff, k.c_lip * d)) {
                    return Err(fail(
                        LocalLipschitz,
                        format!("F_{i} changes by {diff} between {x} and {y} at distance {d}"),
                    ));
                }
            }
        }
    }
    Ok(())
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct PatchOutput {
    pub f: Vec<Vec<f64>>,
    /// Measured Lipschitz seminorm of `f`.
    pub c_out: f64,
    /// [`PatchConstants::tracked_bound`] for the supplied constants.
    pub bound: f64,
}

/// `F(x) = Σ θ_ν(x) F_ν(x)` after verifying every hypothesis.
pub fn patch(
    space: &PseudoSpace,
    atoms: &[PatchAtom],
    k: &PatchConstants,
    norm: NormTag,
) -> Result<PatchOutput> {
    verify_hypotheses(space, atoms, k, norm)?;
    let n = space.len();
    let m = atoms[0].eta.len();
    let f: Vec<Vec<f64>> = (0..n)
        .map(|x| {
            let mut v = vec![0.0; m];
            for at in atoms {
                let t = at.theta[x];
                if t == 0.0 {
                    continue;
                }
                // θ_ν(x) > 0 puts x inside the ball where F_ν is defined.
                let fx = at.local[x].as_ref().expect("checked by verify_hypotheses");
                for (vi, fi) in v.iter_mut().zip(fx) {
                    *vi += t * fi;
                }
            }
            v
        })
        .collect();
    Ok(PatchOutput {
        c_out: lipschitz_seminorm(space, &f, norm),
        bound: k.tracked_bound(),
        f,
    })
}

/// `max ‖f(x) - f(y)‖ / d(x, y)` over pairs at positive finite distance.
pub fn lipschitz_seminorm(space: &PseudoSpace, f: &[Vec<f64>], norm: NormTag) -> f64 {
    let n = space.len();
    let mut best = 0.0f64;
    for x in 0..n {
        for y in x + 1..n {
            let d = space.d(x, y);
            if d > 0.0 && d.is_finite() {
                best = best.max(norm.dist(&f[x], &f[y]) / d);
            }
        }
    }
    best
}

/// Smallest constants for which the hypotheses hold, given `C_LS`.
pub fn measure_constants(space: &PseudoSpace, atoms: &[PatchAtom], c_ls: f64, norm: NormTag) -> PatchConstants {
    let n = space.len();
    let mut k = PatchConstants {
        c_ls,
        c_wh: 0.0,
        c_eta: 0.0,
        c_agr: 0.0,
        c_lip: 0.0,
        d_star: 0,
    };
    for x in 0..n {
        k.d_star = k.d_star.max(atoms.iter().filter(|a| a.theta[x] != 0.0).count());
    }
    for (i, at) in atoms.iter().enumerate() {
        for x in 0..n {
            for y in x + 1..n {
                let d = space.d(x, y);
                if d > 0.0 && d.is_finite() {
                    k.c_wh = k.c_wh.max((at.theta[x] - at.theta[y]).abs() * at.r / d);
                }
            }
        }
        for nu in &atoms[i + 1..] {
            let denom = at.r + nu.r + space.d(at.center, nu.center);
            k.c_eta = k.c_eta.max(norm.dist(&at.eta, &nu.eta) / denom);
        }
        let ball = space.ball(at.center, at.r);
        for (p, &x) in ball.iter().enumerate() {
            if let Some(fx) = &at.local[x] {
                k.c_agr = k.c_agr.max(norm.dist(fx, &at.eta) / at.r);
                for &y in &ball[p + 1..] {
                    if let Some(fy) = &at.local[y] {
                        let d = space.d(x, y);
                        if d > 0.0 {
                            k.c_lip = k.c_lip.max(norm.dist(fx, fy) / d);
                        }
                    }
                }
            }
        }
    }
    k
}
