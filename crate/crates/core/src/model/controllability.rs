//! Lie-algebra rank test for pure-state controllability.

use std::collections::VecDeque;

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::linalg::{commutator, CMatrix};

/// Outcome of a controllability check.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Controllability {
    /// Dimension of the real Lie algebra generated by the inputs.
    pub rank: usize,
    /// Hilbert-space dimension d.
    pub dim: usize,
    /// True when the algebra is all of su(d), i.e. rank ≥ d² − 1.
    pub controllable: bool,
}

const INDEPENDENCE_TOL: f64 = 1e-8;

/// Dimension of the real Lie algebra spanned by {iH_S, iH_c} and all their nested
/// commutators, with the global-phase (identity) component of each generator removed
/// so that the result is a subalgebra of su(d).
pub fn controllability_rank(h_s: &CMatrix, controls: &[CMatrix]) -> Result<Controllability> {
    let d = h_s.nrows();
    for m in std::iter::once(h_s).chain(controls.iter()) {
        if m.nrows() != d || m.ncols() != d {
            return Err(Error::DimensionMismatch {
                expected: d,
                found: m.nrows().max(m.ncols()),
            });
        }
        if (m - m.adjoint()).norm() > 1e-10 * m.norm().max(1.0) {
            return Err(Error::InvalidParameter {
                name: "generators",
                reason: "generator not Hermitian".into(),
            });
        }
    }
    let i = Complex64::new(0.0, 1.0);
    let generators: Vec<CMatrix> = std::iter::once(h_s)
        .chain(controls.iter())
        .map(|m| {
            let shift = m.trace() / Complex64::new(d as f64, 0.0);
            (m - CMatrix::identity(d, d) * shift) * i
        })
        .collect();

    let full = d * d;
    let mut basis: Vec<Vec<f64>> = Vec::new();
    let mut queue: VecDeque<CMatrix> = VecDeque::new();
    for g in &generators {
        if let Some(unit) = try_insert(&mut basis, g) {
            queue.push_back(unit);
        }
    }
    while let Some(x) = queue.pop_front() {
        if basis.len() >= full {
            break;
        }
        for g in &generators {
            let c = commutator(g, &x);
            if let Some(unit) = try_insert(&mut basis, &c) {
                queue.push_back(unit);
            }
        }
    }
    let rank = basis.len();
    Ok(Controllability {
        rank,
        dim: d,
        controllable: rank + 1 >= full,
    })
}

fn flatten(m: &CMatrix) -> Vec<f64> {
    m.iter().flat_map(|z| [z.re, z.im]).collect()
}

fn unflatten(v: &[f64], d: usize) -> CMatrix {
    CMatrix::from_iterator(d, d, v.chunks(2).map(|c| Complex64::new(c[0], c[1])))
}

/// Orthogonalize `m` against the basis (two Gram-Schmidt passes); when the remainder
/// is independent, append it and return it as a normalized matrix.
fn try_insert(basis: &mut Vec<Vec<f64>>, m: &CMatrix) -> Option<CMatrix> {
    let mut v = flatten(m);
    let norm0 = v.iter().map(|x| x * x).sum::<f64>().sqrt();
    if norm0 == 0.0 {
        return None;
    }
    v.iter_mut().for_each(|x| *x /= norm0);
    for _ in 0..2 {
        for b in basis.iter() {
            let dot: f64 = v.iter().zip(b).map(|(x, y)| x * y).sum();
            v.iter_mut().zip(b).for_each(|(x, y)| *x -= dot * y);
        }
    }
    let norm = v.iter().map(|x| x * x).sum::<f64>().sqrt();
    if norm < INDEPENDENCE_TOL {
        return None;
    }
    v.iter_mut().for_each(|x| *x /= norm);
    let d = m.nrows();
    let out = unflatten(&v, d);
    basis.push(v);
    Some(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::to_complex;
    use crate::linalg::RMatrix;

    #[test]
    fn qubit_is_controllable() {
        let h = to_complex(&RMatrix::from_row_slice(2, 2, &[0.0, 0.0, 0.0, 1.0]));
        let x = to_complex(&RMatrix::from_row_slice(2, 2, &[0.0, 1.0, 1.0, 0.0]));
        let c = controllability_rank(&h, &[x]).unwrap();
        assert_eq!(c.rank, 3);
        assert!(c.controllable);
    }

    #[test]
    fn commuting_control_is_not() {
        let h = to_complex(&RMatrix::from_row_slice(2, 2, &[0.0, 0.0, 0.0, 1.0]));
        let z = to_complex(&RMatrix::from_row_slice(2, 2, &[1.0, 0.0, 0.0, -1.0]));
        let c = controllability_rank(&h, &[z]).unwrap();
        assert!(c.rank <= 2);
        assert!(!c.controllable);
    }

    #[test]
    fn mismatched_dimensions_rejected() {
        let h = CMatrix::identity(2, 2);
        let x = CMatrix::identity(3, 3);
        assert!(matches!(
            controllability_rank(&h, &[x]),
            Err(Error::DimensionMismatch { .. })
        ));
    }
}
