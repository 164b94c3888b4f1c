//! Small dense linear-algebra helpers shared across modules.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;

pub type CMatrix = DMatrix<Complex64>;
pub type RMatrix = DMatrix<f64>;

/// Pairwise (cascade) summation of a slice of complex matrices.
///
/// The result does not depend on how the inputs were produced, only on their order.
pub fn pairwise_sum(items: &[CMatrix]) -> Option<CMatrix> {
    match items.len() {
        0 => None,
        1 => Some(items[0].clone()),
        n => {
            let (a, b) = items.split_at(n / 2);
            let mut left = pairwise_sum(a)?;
            left += pairwise_sum(b)?;
            Some(left)
        }
    }
}

/// Pairwise summation of real scalars.
pub fn pairwise_sum_f64(items: &[f64]) -> f64 {
    match items.len() {
        0 => 0.0,
        1 => items[0],
        n => {
            let (a, b) = items.split_at(n / 2);
            pairwise_sum_f64(a) + pairwise_sum_f64(b)
        }
    }
}

/// Eigenvalues of a Hermitian matrix, ascending.
pub fn hermitian_eigenvalues(m: &CMatrix) -> Vec<f64> {
    let h = (m + m.adjoint()) * Complex64::new(0.5, 0.0);
    let mut ev: Vec<f64> = h.symmetric_eigenvalues().iter().copied().collect();
    ev.sort_by(f64::total_cmp);
    ev
}

/// Relative Frobenius distance ‖a − b‖ / max(‖b‖, tiny).
pub fn relative_frobenius(a: &CMatrix, b: &CMatrix) -> f64 {
    let denom = b.norm().max(f64::MIN_POSITIVE);
    (a - b).norm() / denom
}

/// Promote a real matrix to complex.
pub fn to_complex(m: &RMatrix) -> CMatrix {
    m.map(|x| Complex64::new(x, 0.0))
}

/// Promote a real vector to complex.
pub fn to_complex_vec(v: &DVector<f64>) -> DVector<Complex64> {
    v.map(|x| Complex64::new(x, 0.0))
}

/// Commutator [a, b].
pub fn commutator(a: &CMatrix, b: &CMatrix) -> CMatrix {
    a * b - b * a
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn pairwise_sum_matches_naive() {
        let items: Vec<CMatrix> = (0..7)
            .map(|k| CMatrix::from_element(2, 2, Complex64::new(k as f64, -(k as f64))))
            .collect();
        let s = pairwise_sum(&items).unwrap();
        assert_eq!(s[(0, 0)], Complex64::new(21.0, -21.0));
        assert!(pairwise_sum(&[]).is_none());
        assert_eq!(pairwise_sum_f64(&[1.0, 2.0, 3.0]), 6.0);
    }

    #[test]
    fn eigenvalues_sorted() {
        let m = to_complex(&RMatrix::from_row_slice(2, 2, &[2.0, 1.0, 1.0, 2.0]));
        let ev = hermitian_eigenvalues(&m);
        assert!((ev[0] - 1.0).abs() < 1e-12 && (ev[1] - 3.0).abs() < 1e-12);
    }
}
