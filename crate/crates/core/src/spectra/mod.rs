//! Impulsive-probe pump-probe spectra, coherence-beat extraction and the novelty
//! objective.
//!
//! Every optical coherence |a⟩⟨b| (a one manifold above b) responds as the complex
//! Lorentzian L_ab(ω) = i / (ω − ω_ab + iΓ_ab), with Γ_ab the secular coherence decay
//! rate expressed in cm⁻¹. For a state with ground weight ρ₀₀ and excited block ρ_e
//! (no ground/excited coherences),
//!
//! S(ω) = Re[ ρ₀₀ Σ_α |μ_α0|² L_α0 − Σ_αβ ρ_αβ μ_0α μ_β0 L_α0 + Σ_αβf ρ_αβ μ_βf μ_fα L_fβ ],
//!
//! i.e. ground-state absorption (bleach when ρ₀₀ < 0), stimulated emission and
//! excited-state absorption.

mod fit;
mod novelty;

pub use fit::{beat_analysis, double_exponential, BeatAnalysis, DoubleExponential};
pub use novelty::{novelty_objective, novelty_scorer, reference_set, ReferenceSet, NOVELTY_DELAYS};

use nalgebra::Vector3;
use num_complex::Complex64;

use crate::bath::{build_dissipator, BathSpec, DEFAULT_GAP_TOLERANCE};
use crate::dynamics::interaction_operator;
use crate::error::{Error, Result};
use crate::linalg::{CMatrix, RMatrix};
use crate::model::{Eigensystem, ExcitonModel, Manifold};
use crate::objectives::{Ensemble, EvaluationTime, Orientation};
use crate::pulse::SampledField;
use crate::units::{rate_to_cm, DEBYE_VOLT_PER_METER_TO_CM};

/// Probe frequency grid used for novelty scoring and spectrum export, cm⁻¹.
pub fn default_probe_grid() -> Vec<f64> {
    (0..=360).map(|k| 11900.0 + 2.5 * k as f64).collect()
}

/// Probe polarization relative to the molecular frame.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum ProbePolarization {
    /// Probe averaged over x, y, z independently of the pump.
    MagicAngle,
    Fixed(Vector3<f64>),
}

/// One optical coherence channel of the probe response.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Channel {
    /// Upper and lower eigenstate indices (full eigenbasis, ground = 0).
    pub upper: usize,
    pub lower: usize,
    /// ω_ab, cm⁻¹.
    pub center: f64,
    /// Γ_ab, cm⁻¹.
    pub width: f64,
}

impl Channel {
    pub fn lorentzian(&self, omega: f64) -> Complex64 {
        Complex64::new(0.0, 1.0) / Complex64::new(omega - self.center, self.width)
    }
}

/// The linear map ρ ↦ S(ω) on a frequency grid, in the model's exciton basis.
#[derive(Debug, Clone, PartialEq)]
pub struct ProbeSuperoperator {
    frequencies: Vec<f64>,
    /// Coefficient of ρ₀₀ at each frequency.
    ground: Vec<Complex64>,
    /// Coefficients of ρ_αβ at each frequency (exciton basis).
    excited: Vec<CMatrix>,
    /// Single-manifold eigenvectors, columns in the site basis.
    vectors: RMatrix,
    channels: Vec<Channel>,
}

/// Excited-state signal on a probe grid at one pump-probe delay.
#[derive(Debug, Clone, PartialEq)]
pub struct PumpProbeSpectrum {
    pub frequencies: Vec<f64>,
    /// Delay after the pump ends, fs.
    pub delay: f64,
    pub values: Vec<f64>,
}

impl ProbeSuperoperator {
    /// Assemble from the two-excitation eigensystem and secular decay rates.
    pub fn new(
        model: &ExcitonModel,
        bath: &BathSpec,
        frequencies: &[f64],
        probe: ProbePolarization,
    ) -> Result<Self> {
        if frequencies.is_empty() {
            return Err(Error::InvalidParameter {
                name: "frequencies",
                reason: "empty probe grid".into(),
            });
        }
        let system = Eigensystem::new(model, Manifold::SingleDouble);
        let dissipator = build_dissipator(&system, bath, DEFAULT_GAP_TOLERANCE)?;
        let n = system.n_sites();
        let dim = system.dim();
        let energies = system.energies();
        let u = system.transform();
        let width = |a: usize, b: usize| rate_to_cm(dissipator.coherence_decay(a, b));
        let mut channels = Vec::new();
        for a in 1..=n {
            channels.push(Channel {
                upper: a,
                lower: 0,
                center: energies[a],
                width: width(a, 0),
            });
        }
        for f in n + 1..dim {
            for b in 1..=n {
                channels.push(Channel {
                    upper: f,
                    lower: b,
                    center: energies[f] - energies[b],
                    width: width(f, b),
                });
            }
        }
        let dirs: Vec<Vector3<f64>> = match probe {
            ProbePolarization::MagicAngle => vec![Vector3::x(), Vector3::y(), Vector3::z()],
            ProbePolarization::Fixed(e) => vec![e],
        };
        let weight = 1.0 / dirs.len() as f64;
        let mus: Vec<RMatrix> = dirs
            .iter()
            .map(|e| {
                let v = interaction_operator(
                    model,
                    Manifold::SingleDouble,
                    e,
                    Complex64::new(1.0 / DEBYE_VOLT_PER_METER_TO_CM, 0.0),
                );
                let v = v.map(|z| z.re);
                u.transpose() * v * &u
            })
            .collect();
        let mut ground = Vec::with_capacity(frequencies.len());
        let mut excited = Vec::with_capacity(frequencies.len());
        for &w in frequencies {
            let mut g = Complex64::new(0.0, 0.0);
            let mut m = CMatrix::zeros(n, n);
            let lor_single: Vec<Complex64> =
                channels[..n].iter().map(|c| c.lorentzian(w)).collect();
            let lor_double: Vec<Complex64> =
                channels[n..].iter().map(|c| c.lorentzian(w)).collect();
            for mu in &mus {
                for a in 0..n {
                    let d = mu[(a + 1, 0)];
                    let l = lor_single[a] * weight;
                    g += l * (d * d);
                    for b in 0..n {
                        m[(a, b)] -= l * (d * mu[(b + 1, 0)]);
                    }
                }
                for (k, c) in channels[n..].iter().enumerate() {
                    let f = c.upper;
                    let b = c.lower - 1;
                    let l = lor_double[k] * weight;
                    let mu_bf = mu[(f, b + 1)];
                    for a in 0..n {
                        m[(a, b)] += l * (mu_bf * mu[(f, a + 1)]);
                    }
                }
            }
            ground.push(g);
            excited.push(m);
        }
        Ok(Self {
            frequencies: frequencies.to_vec(),
            ground,
            excited,
            vectors: system.single.vectors,
            channels,
        })
    }

    pub fn frequencies(&self) -> &[f64] {
        &self.frequencies
    }

    pub fn channels(&self) -> &[Channel] {
        &self.channels
    }

    /// S(ω) for ground weight `ground` and excited block `excited` (exciton basis).
    pub fn signal(&self, ground: f64, excited: &CMatrix) -> Vec<f64> {
        self.ground
            .iter()
            .zip(&self.excited)
            .map(|(g, m)| {
                let mut s = g * ground;
                for (x, r) in m.iter().zip(excited.iter()) {
                    s += x * r;
                }
                s.re
            })
            .collect()
    }

    /// Exciton-basis form of a site-basis excited block.
    pub fn to_exciton_basis(&self, site: &CMatrix) -> CMatrix {
        let u = self.vectors.map(|x| Complex64::new(x, 0.0));
        u.transpose() * site * u
    }

    /// Pump-induced signal of an excited block (exciton basis): the ground state
    /// carries a hole of equal trace.
    pub fn pump_probe(&self, excited: &CMatrix) -> Vec<f64> {
        self.signal(-excited.trace().re, excited)
    }
}

/// Pump-probe spectrum of ρ_e (site basis) at `delay`.
pub fn pump_probe_signal(
    probe: &ProbeSuperoperator,
    excited_site: &CMatrix,
    delay: f64,
) -> PumpProbeSpectrum {
    PumpProbeSpectrum {
        frequencies: probe.frequencies.clone(),
        delay,
        values: probe.pump_probe(&probe.to_exciton_basis(excited_site)),
    }
}

/// Isotropic (magic-angle) pump-probe spectra of an ensemble at `delays` after the
/// pulse end, summed over members and divided by the total excitation.
///
/// Each member is probed through its own eigenstructure. Returns one spectrum per delay.
pub fn ensemble_pump_probe(
    models: &[ExcitonModel],
    bath: &BathSpec,
    field: &SampledField,
    frequencies: &[f64],
    delays: &[f64],
) -> Result<Vec<PumpProbeSpectrum>> {
    let first = models.first().ok_or(Error::InvalidParameter {
        name: "models",
        reason: "empty ensemble".into(),
    })?;
    if delays.is_empty() {
        return Err(Error::InvalidParameter {
            name: "delays",
            reason: "need at least one delay".into(),
        });
    }
    let ensemble = Ensemble::new(models, first, bath, EvaluationTime::PulseEnd)?;
    let mut total = vec![vec![0.0; frequencies.len()]; delays.len()];
    let mut excitation = 0.0;
    for (i, model) in models.iter().enumerate() {
        let probe =
            ProbeSuperoperator::new(model, bath, frequencies, ProbePolarization::MagicAngle)?;
        let (states, _) = ensemble.member_at_delays(i, field, &Orientation::Isotropic, delays)?;
        excitation += states[0].trace().re;
        for (acc, s) in total.iter_mut().zip(&states) {
            for (a, v) in acc.iter_mut().zip(probe.pump_probe(s)) {
                *a += v;
            }
        }
    }
    if !(excitation >= crate::dynamics::EXCITATION_THRESHOLD) {
        return Err(Error::NoExcitation(excitation));
    }
    Ok(delays
        .iter()
        .zip(total)
        .map(|(&delay, values)| PumpProbeSpectrum {
            frequencies: frequencies.to_vec(),
            delay,
            values: values.into_iter().map(|v| v / excitation).collect(),
        })
        .collect())
}
