use super::polytope::{feasible_with, Polytope};
use crate::error::{Error, Result};
use crate::lp::LpBackend;
use itertools::Itertools;
use serde::Serialize;

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct HellyReport {
    /// Every subfamily of at most `m + 1` members has a common point.
    pub all_subfamilies_ok: bool,
    /// The whole family has a common point.
    pub whole_ok: bool,
    /// First subfamily found without a common point.
    pub failing_subfamily: Option<Vec<usize>>,
}

impl HellyReport {
    /// The tested implication `all_subfamilies_ok => whole_ok`.
    pub fn consistent(&self) -> bool {
        !self.all_subfamilies_ok || self.whole_ok
    }
}

/// Checks all subfamilies of size `min(m + 1, N)`. Smaller subfamilies are
/// contained in one of these, so their intersections are implied.
pub fn helly_verify(family: &[Polytope], m: usize, backend: LpBackend) -> Result<HellyReport> {
    if family.is_empty() {
        return Err(Error::EmptyFamily);
    }
    for p in family {
        if p.dim != m {
            return Err(Error::DimensionMismatch {
                expected: m,
                found: p.dim,
            });
        }
        p.validate()?;
    }
    let k = (m + 1).min(family.len());
    let mut failing = None;
    for combo in (0..family.len()).combinations(k) {
        let inter = Polytope::intersect_all(m, combo.iter().map(|&i| &family[i]))?;
        if !feasible_with(&inter, backend)? {
            failing = Some(combo);
            break;
        }
    }
    let whole = Polytope::intersect_all(m, family)?;
    Ok(HellyReport {
        all_subfamilies_ok: failing.is_none(),
        whole_ok: feasible_with(&whole, backend)?,
        failing_subfamily: failing,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn intervals() {
        let fam = vec![
            Polytope::cube(&[0.0], &[2.0]),
            Polytope::cube(&[1.0], &[3.0]),
            Polytope::cube(&[1.5], &[2.5]),
        ];
        let r = helly_verify(&fam, 1, LpBackend::Exact).unwrap();
        assert!(r.all_subfamilies_ok && r.whole_ok);
    }

    #[test]
    fn empty_member_fails_subfamilies() {
        let empty = Polytope::new(
            1,
            vec![
                super::super::Halfspace { a: vec![1.0], b: 0.0 },
                super::super::Halfspace { a: vec![-1.0], b: -1.0 },
            ],
        )
        .unwrap();
        let fam = vec![Polytope::cube(&[0.0], &[2.0]), empty];
        let r = helly_verify(&fam, 1, LpBackend::Float).unwrap();
        assert!(!r.all_subfamilies_ok && !r.whole_ok && r.consistent());
        assert!(helly_verify(&[], 1, LpBackend::Float).is_err());
    }
}
