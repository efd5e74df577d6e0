//! Labels and bases: `(A, r, C_B)`-bases of a polytope at a point, and the
//! two constructions that grow a basis by one vector and move it to a nearby
//! polytope.

use super::polytope::{dot, nearest_point, Polytope};
use crate::error::{Error, Result};
use crate::lp::{Lp, LpBackend, Relation, VarBound};
use crate::norm::{add_norm_le, Affine, NormTag};
use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

/// Functionals `e_1..e_s`, each a vector in R^m paired by the dot product.
pub type Label = Vec<Vec<f64>>;

/// Tolerance for `<e_a, v_b> = δ_ab`.
pub const ORTHO_TOL: f64 = 1e-8;
/// Membership tolerance for the anchor and its probe points.
pub const MEMBER_TOL: f64 = 1e-8;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Basis {
    pub vectors: Vec<Vec<f64>>,
    pub anchor: Vec<f64>,
    pub r: f64,
    pub c_b: f64,
}

/// Which defining property of a basis fails, if any.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum BasisDefect {
    AnchorOutside,
    NotBiorthogonal,
    NormTooLarge,
    ProbeOutside,
}

pub fn basis_defect(
    gamma: &Polytope,
    label: &[Vec<f64>],
    basis: &Basis,
    norm: NormTag,
) -> Result<Option<BasisDefect>> {
    if label.len() != basis.vectors.len() {
        return Err(Error::SizeMismatch(format!(
            "label has {} functionals but basis has {} vectors",
            label.len(),
            basis.vectors.len()
        )));
    }
    let m = gamma.dim;
    if basis.anchor.len() != m || label.iter().chain(&basis.vectors).any(|v| v.len() != m) {
        return Err(Error::DimensionMismatch {
            expected: m,
            found: basis.anchor.len(),
        });
    }
    if !gamma.contains(&basis.anchor, MEMBER_TOL) {
        return Ok(Some(BasisDefect::AnchorOutside));
    }
    for (a, e) in label.iter().enumerate() {
        for (b, v) in basis.vectors.iter().enumerate() {
            let target = if a == b { 1.0 } else { 0.0 };
            if (dot(e, v) - target).abs() > ORTHO_TOL {
                return Ok(Some(BasisDefect::NotBiorthogonal));
            }
        }
    }
    let slack = 1.0 + 1e-12;
    for (e, v) in label.iter().zip(&basis.vectors) {
        if norm.norm(v) > basis.c_b * slack || norm.dual_norm(e) > basis.c_b * slack {
            return Ok(Some(BasisDefect::NormTooLarge));
        }
    }
    let step = basis.r / basis.c_b;
    for v in &basis.vectors {
        for s in [1.0, -1.0] {
            let q: Vec<f64> = basis
                .anchor
                .iter()
                .zip(v)
                .map(|(z, vi)| z + s * step * vi)
                .collect();
            if !gamma.contains(&q, MEMBER_TOL) {
                return Ok(Some(BasisDefect::ProbeOutside));
            }
        }
    }
    Ok(None)
}

/// True iff `basis` is an `(A, r, C_B)`-basis for `gamma` at its anchor.
/// An empty label reduces to anchor membership.
pub fn basis_check(gamma: &Polytope, label: &[Vec<f64>], basis: &Basis, norm: NormTag) -> Result<bool> {
    Ok(basis_defect(gamma, label, basis, norm)?.is_none())
}

#[derive(Clone, Debug)]
pub struct AddVectorOutput {
    pub zeta: Vec<f64>,
    pub e_new: Vec<f64>,
    pub label: Label,
    /// Basis at `zeta` for the extended label, with its computed constant.
    pub basis: Basis,
}

/// Extends a basis at `ξ = basis.anchor` by one vector pointing towards `eta`.
pub fn add_vector(
    gamma: &Polytope,
    label: &[Vec<f64>],
    basis: &Basis,
    eta: &[f64],
    norm: NormTag,
) -> Result<AddVectorOutput> {
    let m = gamma.dim;
    let s = label.len();
    if let Some(d) = basis_defect(gamma, label, basis, norm)? {
        return Err(Error::Precondition(format!("input is not a basis: {d:?}")));
    }
    if s + 1 > m {
        return Err(Error::Precondition(format!("label already has {s} = m functionals")));
    }
    if eta.len() != m {
        return Err(Error::DimensionMismatch {
            expected: m,
            found: eta.len(),
        });
    }
    if !gamma.contains(eta, MEMBER_TOL) {
        return Err(Error::Precondition("eta is not in gamma".into()));
    }
    let xi = &basis.anchor;
    let r = basis.r;
    let diff: Vec<f64> = eta.iter().zip(xi).map(|(a, b)| a - b).collect();
    let dist = norm.norm(&diff);
    if dist < r {
        return Err(Error::Precondition(format!("|eta - xi| = {dist} < r = {r}")));
    }
    for e in label {
        if dot(e, &diff).abs() > ORTHO_TOL * dist.max(1.0) {
            return Err(Error::Precondition("eta - xi is not annihilated by the label".into()));
        }
    }
    let tau = 0.5 * r / dist;
    let zeta: Vec<f64> = eta.iter().zip(xi).map(|(e, x)| tau * e + (1.0 - tau) * x).collect();
    let step: Vec<f64> = zeta.iter().zip(xi).map(|(z, x)| z - x).collect();
    let len = norm.norm(&step);
    let v_new: Vec<f64> = step.iter().map(|v| v / len).collect();
    let mut vectors = basis.vectors.clone();
    vectors.push(v_new);

    let e_new = min_norm_dual(&vectors, s, norm)?;
    let mut new_label = label.to_vec();
    new_label.push(e_new.clone());

    let mut c = 2.0 * basis.c_b.max(1.0);
    for (e, v) in new_label.iter().zip(&vectors) {
        c = c.max(norm.norm(v)).max(norm.dual_norm(e));
    }
    Ok(AddVectorOutput {
        zeta: zeta.clone(),
        e_new,
        label: new_label,
        basis: Basis {
            vectors,
            anchor: zeta,
            r,
            c_b: c,
        },
    })
}

/// Minimum dual-norm functional `e` with `<e, v_a> = δ_{target,a}`.
fn min_norm_dual(vectors: &[Vec<f64>], target: usize, norm: NormTag) -> Result<Vec<f64>> {
    let m = vectors[0].len();
    let mut lp = Lp::new();
    let e = lp.add_vars(m, VarBound::Free);
    let t = lp.add_var(VarBound::NonNegative);
    for (a, v) in vectors.iter().enumerate() {
        let coeffs = (0..m).map(|i| (e + i, v[i])).collect();
        lp.add_row(coeffs, Relation::Eq, if a == target { 1.0 } else { 0.0 });
    }
    let coords: Vec<Affine> = (0..m).map(|i| Affine::var(e + i)).collect();
    add_norm_le(&mut lp, norm.dual(), &coords, &Affine::var(t));
    lp.minimize(vec![(t, 1.0)]);
    let sol = lp.solve(LpBackend::Float)?;
    if !sol.is_optimal() {
        return Err(Error::Precondition("new vector is linearly dependent on the basis".into()));
    }
    Ok(sol.x[e..e + m].to_vec())
}

#[derive(Clone, Debug)]
pub struct TransportOutput {
    pub eta0: Vec<f64>,
    /// Basis for the target polytope at `eta0`; `c_b` is the returned constant.
    pub basis: Basis,
    pub c: f64,
}

/// Moves a basis of `gamma` at `ξ0 = basis.anchor` to a basis of `gamma_p`
/// for the same label.
///
/// The closeness hypothesis is probed at `ξ0` and at the `2s` points
/// `ξ0 ± (r/C_B) v_a`: each must lie within `eps0·r` of `gamma_p`.
pub fn transport_basis(
    gamma: &Polytope,
    gamma_p: &Polytope,
    label: &[Vec<f64>],
    basis: &Basis,
    eps0: f64,
    norm: NormTag,
) -> Result<TransportOutput> {
    if let Some(d) = basis_defect(gamma, label, basis, norm)? {
        return Err(Error::Precondition(format!("input is not a basis: {d:?}")));
    }
    if gamma_p.dim != gamma.dim {
        return Err(Error::DimensionMismatch {
            expected: gamma.dim,
            found: gamma_p.dim,
        });
    }
    let m = gamma.dim;
    let s = label.len();
    let r = basis.r;
    let xi0 = &basis.anchor;
    let reach = eps0 * r;
    let nearest = |q: &[f64]| -> Result<Vec<f64>> {
        let (d, w) = nearest_point(q, gamma_p, norm, LpBackend::Float).map_err(|e| match e {
            Error::Infeasible => Error::Hypothesis("target polytope is empty".into()),
            other => other,
        })?;
        if d > reach * (1.0 + 1e-9) {
            return Err(Error::Hypothesis(format!(
                "probe point is {d} from the target, more than eps0*r = {reach}"
            )));
        }
        Ok(w)
    };

    let w0 = nearest(xi0)?;
    if s == 0 {
        let dist = norm.dist(&w0, xi0);
        let c = (dist / r).max(1.0);
        return Ok(TransportOutput {
            eta0: w0.clone(),
            basis: Basis {
                vectors: Vec::new(),
                anchor: w0,
                r,
                c_b: c,
            },
            c,
        });
    }

    let c1 = 1.0 / basis.c_b;
    // zeta[a][0] for σ = +1, zeta[a][1] for σ = -1
    let mut zeta: Vec<[Vec<f64>; 2]> = Vec::with_capacity(s);
    for v in &basis.vectors {
        let mut pair: [Vec<f64>; 2] = [Vec::new(), Vec::new()];
        for (k, sigma) in [1.0, -1.0].into_iter().enumerate() {
            let q: Vec<f64> = (0..m).map(|i| xi0[i] + c1 * sigma * r * v[i]).collect();
            let w = nearest(&q)?;
            pair[k] = (0..m).map(|i| w[i] - q[i]).collect();
        }
        zeta.push(pair);
    }

    let mut eta00 = xi0.clone();
    for pair in &zeta {
        for z in pair {
            for i in 0..m {
                eta00[i] += z[i] / (2.0 * s as f64);
            }
        }
    }
    let v_tilde: Vec<Vec<f64>> = basis
        .vectors
        .iter()
        .zip(&zeta)
        .map(|(v, [zp, zm])| {
            (0..m)
                .map(|i| v[i] + (zp[i] - zm[i]) / (2.0 * c1 * r))
                .collect()
        })
        .collect();

    let a_mat = DMatrix::from_fn(s, s, |a, b| dot(&label[a], &v_tilde[b]));
    let dev = &a_mat - DMatrix::<f64>::identity(s, s);
    let dev_norm = dev.clone().svd(false, false).singular_values.max();
    if dev_norm >= 1.0 {
        return Err(Error::Hypothesis(format!(
            "|A - I|_op = {dev_norm} >= 1; eps0 is too large for this basis"
        )));
    }
    let a_inv = a_mat
        .clone()
        .try_inverse()
        .ok_or_else(|| Error::Hypothesis("matrix A is singular".into()))?;
    let inv_dev = (&a_inv - DMatrix::<f64>::identity(s, s))
        .svd(false, false)
        .singular_values
        .max();
    if inv_dev > 2.0 * dev_norm + 1e-12 {
        return Err(Error::Hypothesis(format!(
            "|A^-1 - I|_op = {inv_dev} exceeds 2|A - I|_op = {}",
            2.0 * dev_norm
        )));
    }
    let m_mat = a_inv.transpose();
    let v_hat: Vec<Vec<f64>> = (0..s)
        .map(|g| {
            (0..m)
                .map(|i| (0..s).map(|b| m_mat[(g, b)] * v_tilde[b][i]).sum())
                .collect()
        })
        .collect();

    let c2 = c1 / s as f64;
    let m_abs: f64 = m_mat.iter().map(|x| x.abs()).sum();
    let c3 = c2 / m_abs;
    let offsets: Vec<f64> = label
        .iter()
        .map(|e| {
            let d: Vec<f64> = (0..m).map(|i| eta00[i] - xi0[i]).collect();
            dot(e, &d)
        })
        .collect();
    if let Some(o) = offsets.iter().find(|o| o.abs() > 0.5 * c3 * r) {
        return Err(Error::Hypothesis(format!(
            "label offset {o} exceeds c3*r/2 = {}; eps0 is too large",
            0.5 * c3 * r
        )));
    }
    let mut eta0 = eta00.clone();
    for (g, o) in offsets.iter().enumerate() {
        for i in 0..m {
            eta0[i] -= o * v_hat[g][i];
        }
    }

    let mut c = 2.0 / c3;
    for (e, v) in label.iter().zip(&v_hat) {
        c = c.max(norm.norm(v)).max(norm.dual_norm(e));
    }
    c = c.max(norm.dist(&eta0, xi0) / r);
    let out = Basis {
        vectors: v_hat,
        anchor: eta0.clone(),
        r,
        c_b: c,
    };
    if let Some(d) = basis_defect(gamma_p, label, &out, norm)? {
        return Err(Error::Hypothesis(format!("transported basis fails: {d:?}")));
    }
    Ok(TransportOutput {
        eta0,
        basis: out,
        c,
    })
}
