use num_complex::Complex64;

use crate::linalg::RMatrix;

/// Exact field-free propagator over a fixed interval τ.
#[derive(Debug, Clone, PartialEq)]
pub struct FreeStep {
    pub tau: f64,
    dim: usize,
    /// exp(Rτ), row-major.
    populations: Vec<f64>,
    /// e^{−(Γ_ab + iω_ab)τ}, row-major.
    coherences: Vec<Complex64>,
}

impl FreeStep {
    /// `omega`: rotating-frame angular frequencies (fs⁻¹); `decay`, `rates` row-major (fs⁻¹).
    pub fn new(omega: &[f64], decay: &[f64], rates: &[f64], tau: f64) -> Self {
        let dim = omega.len();
        let r = RMatrix::from_row_slice(dim, dim, rates) * tau;
        let p = r.exp();
        let populations = p.transpose().as_slice().to_vec();
        let mut coherences = vec![Complex64::new(0.0, 0.0); dim * dim];
        for a in 0..dim {
            for b in 0..dim {
                if a != b {
                    let z = Complex64::new(decay[a * dim + b], omega[a] - omega[b]);
                    coherences[a * dim + b] = (-z * tau).exp();
                }
            }
        }
        Self {
            tau,
            dim,
            populations,
            coherences,
        }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    /// Advance a row-major flattened density matrix by τ.
    pub fn apply_flat(&self, rho: &mut [Complex64], dim: usize) {
        debug_assert_eq!(dim, self.dim);
        let pop: Vec<f64> = (0..dim).map(|a| rho[a * dim + a].re).collect();
        for a in 0..dim {
            for b in 0..dim {
                let i = a * dim + b;
                if a == b {
                    let mut s = 0.0;
                    for c in 0..dim {
                        s += self.populations[a * dim + c] * pop[c];
                    }
                    rho[i] = Complex64::new(s, 0.0);
                } else {
                    rho[i] *= self.coherences[i];
                }
            }
        }
    }

    /// Advance only the block of states `offset..offset+n` (row-major, n×n) by τ.
    /// Valid when that block does not exchange population with the rest.
    pub fn apply_block(&self, block: &mut [Complex64], offset: usize, n: usize) {
        let dim = self.dim;
        let pop: Vec<f64> = (0..n).map(|a| block[a * n + a].re).collect();
        for a in 0..n {
            for b in 0..n {
                let i = a * n + b;
                let (ga, gb) = (a + offset, b + offset);
                if a == b {
                    let mut s = 0.0;
                    for c in 0..n {
                        s += self.populations[ga * dim + c + offset] * pop[c];
                    }
                    block[i] = Complex64::new(s, 0.0);
                } else {
                    block[i] *= self.coherences[ga * dim + gb];
                }
            }
        }
    }
}
