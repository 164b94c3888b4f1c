use std::sync::Arc;

use num_complex::Complex64;

use super::ProbeSuperoperator;
use crate::bath::{BathSpec, Dissipator};
use crate::error::{Error, Result};
use crate::linalg::CMatrix;
use crate::model::ExcitonModel;
use crate::objectives::{Ensemble, EvaluationTime, Orientation, StateScorer};
use crate::optimize::gaussian_pump;
use crate::pulse::synthesize_chirp;

/// Delays after the unshaped pump that define the reference spectra, fs.
pub const NOVELTY_DELAYS: [f64; 6] = [0.0, 75.0, 150.0, 300.0, 600.0, 1200.0];

/// Pointwise envelope of a set of reference spectra.
#[derive(Debug, Clone, PartialEq)]
pub struct ReferenceSet {
    pub frequencies: Vec<f64>,
    pub spectra: Vec<Vec<f64>>,
    pub lower: Vec<f64>,
    pub upper: Vec<f64>,
    /// max_ω max(|lower|, |upper|).
    pub scale: f64,
}

impl ReferenceSet {
    pub fn new(frequencies: Vec<f64>, spectra: Vec<Vec<f64>>) -> Result<Self> {
        if spectra.is_empty() {
            return Err(Error::EmptyReference);
        }
        if let Some(s) = spectra.iter().find(|s| s.len() != frequencies.len()) {
            return Err(Error::DimensionMismatch {
                expected: frequencies.len(),
                found: s.len(),
            });
        }
        let m = frequencies.len();
        let lower: Vec<f64> = (0..m)
            .map(|k| spectra.iter().map(|s| s[k]).fold(f64::INFINITY, f64::min))
            .collect();
        let upper: Vec<f64> = (0..m)
            .map(|k| {
                spectra
                    .iter()
                    .map(|s| s[k])
                    .fold(f64::NEG_INFINITY, f64::max)
            })
            .collect();
        let scale = lower
            .iter()
            .chain(&upper)
            .map(|v| v.abs())
            .fold(0.0, f64::max);
        Ok(Self {
            frequencies,
            spectra,
            lower,
            upper,
            scale,
        })
    }
}

/// max_ω (distance of the candidate from the reference envelope) / envelope scale.
pub fn novelty_objective(candidate: &[f64], reference: &ReferenceSet) -> f64 {
    let worst = candidate
        .iter()
        .zip(reference.lower.iter().zip(&reference.upper))
        .map(|(&c, (&lo, &hi))| (lo - c).max(c - hi).max(0.0))
        .fold(0.0, f64::max);
    if worst == 0.0 {
        0.0
    } else {
        worst / reference.scale
    }
}

/// Spectra of the normalized states left by the transform-limited Gaussian pump
/// (isotropic average, single complex) at `delays`, plus the thermal state.
pub fn reference_set(
    model: &ExcitonModel,
    bath: &BathSpec,
    probe: &ProbeSuperoperator,
    delays: &[f64],
) -> Result<ReferenceSet> {
    let ensemble = Ensemble::single(model, bath, EvaluationTime::PulseEnd)?;
    let field = synthesize_chirp(&gaussian_pump(0))?;
    let (states, _) = ensemble.member_at_delays(0, &field, &Orientation::Isotropic, delays)?;
    let mut spectra = Vec::with_capacity(delays.len() + 1);
    for s in states {
        let x = s.trace().re;
        spectra.push(probe.pump_probe(&(s / Complex64::new(x, 0.0))));
    }
    let p = ensemble.propagator(0);
    let thermal = Dissipator::boltzmann(&p.energies()[1..], bath.temperature);
    let n = thermal.len();
    let rho = CMatrix::from_fn(n, n, |a, b| {
        if a == b {
            Complex64::new(thermal[a], 0.0)
        } else {
            Complex64::new(0.0, 0.0)
        }
    });
    spectra.push(probe.pump_probe(&rho));
    ReferenceSet::new(probe.frequencies().to_vec(), spectra)
}

/// Novelty of the spectrum of a normalized site-basis state.
pub fn novelty_scorer(probe: Arc<ProbeSuperoperator>, reference: Arc<ReferenceSet>) -> StateScorer {
    Arc::new(move |rho: &CMatrix| {
        let s = probe.pump_probe(&probe.to_exciton_basis(rho));
        Ok(novelty_objective(&s, &reference))
    })
}
