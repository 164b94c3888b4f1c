//! Debye bath, correlation spectrum and the secular Redfield dissipator.
//!
//! Every pigment couples through its site-occupation operator N_n to an independent
//! bath with the same Debye spectral density. Rates are built from
//!
//! C̃(ω) = 2 J(ω) / (1 − e^{−ω/k_BT}),  J(ω) = 2λγω / (ω² + γ²),
//!
//! in cm⁻¹; a rate in fs⁻¹ is [`RATE_PREFACTOR`]·C̃ times the squared exciton overlap.

use crate::error::{Error, Result};
use crate::linalg::{CMatrix, RMatrix};
use crate::model::{Eigensystem, ExcitonBasis};
use crate::units::{rate_to_cm, thermal_energy, CM_TO_RAD_PER_FS};
use num_complex::Complex64;

/// Conversion from the correlation spectrum C̃ (cm⁻¹) to a transfer rate (fs⁻¹).
pub const RATE_PREFACTOR: f64 = CM_TO_RAD_PER_FS;

/// Default minimal exciton gap (cm⁻¹) below which the secular approximation is rejected.
pub const DEFAULT_GAP_TOLERANCE: f64 = 0.1;

/// Debye bath parameters.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BathSpec {
    /// Reorganization energy λ, cm⁻¹.
    pub reorganization_energy: f64,
    /// Bath relaxation rate γ, fs⁻¹.
    pub relaxation_rate: f64,
    /// Temperature, K.
    pub temperature: f64,
}

impl BathSpec {
    pub fn new(reorganization_energy: f64, relaxation_rate: f64, temperature: f64) -> Result<Self> {
        if !(reorganization_energy >= 0.0 && reorganization_energy.is_finite()) {
            return Err(Error::InvalidParameter {
                name: "reorganization_energy",
                reason: format!("must be >= 0, got {reorganization_energy}"),
            });
        }
        if !(relaxation_rate > 0.0 && relaxation_rate.is_finite()) {
            return Err(Error::InvalidParameter {
                name: "relaxation_rate",
                reason: format!("must be > 0, got {relaxation_rate}"),
            });
        }
        if !(temperature > 0.0 && temperature.is_finite()) {
            return Err(Error::InvalidParameter {
                name: "temperature",
                reason: format!("must be > 0, got {temperature}"),
            });
        }
        Ok(Self {
            reorganization_energy,
            relaxation_rate,
            temperature,
        })
    }

    /// λ = 35 cm⁻¹, γ = 1/(50 fs), T = 77 K.
    pub fn fmo_default() -> Self {
        Self {
            reorganization_energy: 35.0,
            relaxation_rate: 1.0 / 50.0,
            temperature: 77.0,
        }
    }

    /// Same bath without system-bath coupling.
    pub fn uncoupled() -> Self {
        Self {
            reorganization_energy: 0.0,
            ..Self::fmo_default()
        }
    }

    /// γ expressed in cm⁻¹.
    pub fn gamma_cm(&self) -> f64 {
        rate_to_cm(self.relaxation_rate)
    }
}

/// ω²𝒥(ω) = 2λγω/(ω²+γ²) for ω > 0 and 0 otherwise (cm⁻¹).
pub fn spectral_function(omega: f64, bath: &BathSpec) -> f64 {
    if omega <= 0.0 {
        return 0.0;
    }
    debye(omega, bath)
}

/// The dimensionless density 𝒥(ω), zero for ω ≤ 0.
pub fn spectral_density(omega: f64, bath: &BathSpec) -> f64 {
    if omega <= 0.0 {
        return 0.0;
    }
    debye(omega, bath) / (omega * omega)
}

fn debye(omega: f64, bath: &BathSpec) -> f64 {
    let g = bath.gamma_cm();
    2.0 * bath.reorganization_energy * g * omega / (omega * omega + g * g)
}

/// Correlation spectrum C̃(ω) in cm⁻¹, defined on the whole real axis.
///
/// Satisfies C̃(−ω) = e^{−ω/k_BT} C̃(ω); C̃(0) = 4λk_BT/γ.
pub fn correlation_spectrum(omega: f64, bath: &BathSpec) -> f64 {
    let kt = thermal_energy(bath.temperature);
    if omega == 0.0 {
        return 4.0 * bath.reorganization_energy * kt / bath.gamma_cm();
    }
    2.0 * debye(omega, bath) / (-(-omega / kt).exp_m1())
}

/// Rates of one excitation manifold.
#[derive(Debug, Clone, PartialEq)]
pub struct BlockRates {
    /// Offset of the block in the full eigenbasis.
    pub offset: usize,
    /// `transfer[(b, a)]` is the rate a → b in fs⁻¹ (zero diagonal).
    pub transfer: RMatrix,
    /// Total out-rate of each state, fs⁻¹.
    pub out: Vec<f64>,
    /// `overlap[(n, a)] = ⟨a|N_n|a⟩`.
    pub overlap: RMatrix,
}

/// Secular Redfield dissipator expressed in the eigenbasis of the system.
#[derive(Debug, Clone, PartialEq)]
pub struct Dissipator {
    dim: usize,
    n_sites: usize,
    blocks: Vec<BlockRates>,
    /// Pure-dephasing Lindblad rate per site channel, fs⁻¹.
    dephasing: f64,
}

/// Occupation of site `n` in each basis state of a block.
fn occupations(block_dim: usize, n_sites: usize, double: bool) -> RMatrix {
    let mut occ = RMatrix::zeros(n_sites, block_dim);
    if double {
        let mut k = 0;
        for p in 0..n_sites {
            for q in p + 1..n_sites {
                occ[(p, k)] = 1.0;
                occ[(q, k)] = 1.0;
                k += 1;
            }
        }
    } else {
        for n in 0..n_sites {
            occ[(n, n)] = 1.0;
        }
    }
    occ
}

fn block_rates(basis: &ExcitonBasis, occ: &RMatrix, offset: usize, bath: &BathSpec) -> BlockRates {
    let m = basis.dim();
    let n_sites = occ.nrows();
    let u = &basis.vectors;
    // weight[n][(a, b)] = Σ_s U_sa U_sb occ_n(s)
    let mut weights = Vec::with_capacity(n_sites);
    for n in 0..n_sites {
        let mut w = RMatrix::zeros(m, m);
        for s in 0..m {
            let o = occ[(n, s)];
            if o == 0.0 {
                continue;
            }
            for a in 0..m {
                let ua = u[(s, a)] * o;
                for b in 0..m {
                    w[(a, b)] += ua * u[(s, b)];
                }
            }
        }
        weights.push(w);
    }
    let mut transfer = RMatrix::zeros(m, m);
    let mut overlap = RMatrix::zeros(n_sites, m);
    for a in 0..m {
        for n in 0..n_sites {
            overlap[(n, a)] = weights[n][(a, a)];
        }
        for b in 0..m {
            if a == b {
                continue;
            }
            let w2: f64 = weights.iter().map(|w| w[(a, b)] * w[(a, b)]).sum();
            let c = correlation_spectrum(basis.energies[a] - basis.energies[b], bath);
            transfer[(b, a)] = RATE_PREFACTOR * c * w2;
        }
    }
    let out = (0..m).map(|a| transfer.column(a).sum()).collect();
    BlockRates {
        offset,
        transfer,
        out,
        overlap,
    }
}

/// Build the secular Redfield dissipator for `system`.
///
/// Fails when two single-excitation exciton energies are closer than `gap_tolerance`.
pub fn build_dissipator(
    system: &Eigensystem,
    bath: &BathSpec,
    gap_tolerance: f64,
) -> Result<Dissipator> {
    let e = &system.single.energies;
    for w in e.windows(2) {
        if w[1] - w[0] < gap_tolerance {
            return Err(Error::Degenerate {
                e1: w[0],
                e2: w[1],
                tol: gap_tolerance,
            });
        }
    }
    let n = system.n_sites();
    let mut blocks = vec![block_rates(
        &system.single,
        &occupations(n, n, false),
        1,
        bath,
    )];
    if let Some(d) = &system.double {
        blocks.push(block_rates(d, &occupations(d.dim(), n, true), 1 + n, bath));
    }
    Ok(Dissipator {
        dim: system.dim(),
        n_sites: n,
        blocks,
        dephasing: RATE_PREFACTOR * correlation_spectrum(0.0, bath),
    })
}

impl Dissipator {
    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn blocks(&self) -> &[BlockRates] {
        &self.blocks
    }

    /// Lindblad rate of each site's pure-dephasing channel, fs⁻¹.
    pub fn dephasing_rate(&self) -> f64 {
        self.dephasing
    }

    /// True when every rate vanishes (unitary dynamics).
    pub fn is_zero(&self) -> bool {
        self.dephasing == 0.0
            && self
                .blocks
                .iter()
                .all(|b| b.transfer.iter().all(|k| *k == 0.0))
    }

    fn locate(&self, a: usize) -> Option<(&BlockRates, usize)> {
        self.blocks
            .iter()
            .find(|b| a >= b.offset && a < b.offset + b.out.len())
            .map(|b| (b, a - b.offset))
    }

    /// Population-transfer rate a → b (full eigenbasis indices), fs⁻¹.
    pub fn rate(&self, a: usize, b: usize) -> f64 {
        match (self.locate(a), self.locate(b)) {
            (Some((ba, ia)), Some((bb, ib))) if ba.offset == bb.offset => ba.transfer[(ib, ia)],
            _ => 0.0,
        }
    }

    /// Total out-rate of state a, fs⁻¹.
    pub fn out_rate(&self, a: usize) -> f64 {
        self.locate(a).map_or(0.0, |(b, i)| b.out[i])
    }

    /// ⟨a|N_n|a⟩ for site n (zero for the ground state).
    pub fn site_overlap(&self, n: usize, a: usize) -> f64 {
        self.locate(a).map_or(0.0, |(b, i)| b.overlap[(n, i)])
    }

    /// Decay rate Γ_ab of the coherence |a⟩⟨b|, fs⁻¹.
    pub fn coherence_decay(&self, a: usize, b: usize) -> f64 {
        if a == b {
            return 0.0;
        }
        let dephase: f64 = (0..self.n_sites)
            .map(|n| {
                let d = self.site_overlap(n, a) - self.site_overlap(n, b);
                d * d
            })
            .sum();
        0.5 * (self.out_rate(a) + self.out_rate(b)) + 0.5 * self.dephasing * dephase
    }

    /// Matrix of coherence decay rates Γ_ab, fs⁻¹.
    pub fn decay_matrix(&self) -> RMatrix {
        RMatrix::from_fn(self.dim, self.dim, |a, b| self.coherence_decay(a, b))
    }

    /// Full population rate matrix R with dP/dt = R P (columns sum to zero).
    pub fn rate_matrix(&self) -> RMatrix {
        let mut r = RMatrix::zeros(self.dim, self.dim);
        for blk in &self.blocks {
            let m = blk.out.len();
            for a in 0..m {
                for b in 0..m {
                    r[(blk.offset + b, blk.offset + a)] = blk.transfer[(b, a)];
                }
                r[(blk.offset + a, blk.offset + a)] = -blk.out[a];
            }
        }
        r
    }

    /// 𝒟ρ for ρ expressed in the eigenbasis.
    pub fn apply(&self, rho: &CMatrix) -> CMatrix {
        let r = self.rate_matrix();
        let g = self.decay_matrix();
        let mut out = CMatrix::zeros(self.dim, self.dim);
        for a in 0..self.dim {
            for b in 0..self.dim {
                if a == b {
                    let gain: f64 = (0..self.dim).map(|c| r[(a, c)] * rho[(c, c)].re).sum();
                    out[(a, a)] = Complex64::new(gain, 0.0);
                } else {
                    out[(a, b)] = -rho[(a, b)] * g[(a, b)];
                }
            }
        }
        out
    }

    /// Explicit jump operators (rate, L) in the eigenbasis: one per transfer channel
    /// |b⟩⟨a| and one diagonal dephasing operator Σ_a ⟨a|N_n|a⟩|a⟩⟨a| per site.
    pub fn lindblad_operators(&self) -> Vec<(f64, CMatrix)> {
        let mut ops = Vec::new();
        for blk in &self.blocks {
            let m = blk.out.len();
            for a in 0..m {
                for b in 0..m {
                    let k = blk.transfer[(b, a)];
                    if a != b && k > 0.0 {
                        let mut l = CMatrix::zeros(self.dim, self.dim);
                        l[(blk.offset + b, blk.offset + a)] = Complex64::new(1.0, 0.0);
                        ops.push((k, l));
                    }
                }
            }
        }
        if self.dephasing > 0.0 {
            for n in 0..self.n_sites {
                let mut l = CMatrix::zeros(self.dim, self.dim);
                for a in 0..self.dim {
                    l[(a, a)] = Complex64::new(self.site_overlap(n, a), 0.0);
                }
                ops.push((self.dephasing, l));
            }
        }
        ops
    }

    /// Exciton populations in thermal equilibrium over the single-excitation manifold.
    pub fn boltzmann(energies: &[f64], temperature: f64) -> Vec<f64> {
        let kt = thermal_energy(temperature);
        let e0 = energies.iter().copied().fold(f64::INFINITY, f64::min);
        let w: Vec<f64> = energies.iter().map(|e| (-(e - e0) / kt).exp()).collect();
        let z: f64 = w.iter().sum();
        w.into_iter().map(|x| x / z).collect()
    }
}

/// Σ_k r_k (L_k ρ L_k† − ½{L_k†L_k, ρ}) for explicit jump operators.
pub fn apply_lindblad(ops: &[(f64, CMatrix)], rho: &CMatrix) -> CMatrix {
    let mut out = CMatrix::zeros(rho.nrows(), rho.ncols());
    let half = Complex64::new(0.5, 0.0);
    for (r, l) in ops {
        let ld = l.adjoint();
        let ldl = &ld * l;
        let term = l * rho * &ld - (&ldl * rho + rho * &ldl) * half;
        out += term * Complex64::new(*r, 0.0);
    }
    out
}
