//! Control targets, the weak-field penalty and orientational/disorder averaging.
//!
//! Excited-state density matrices of every (disorder sample, polarization) pair are
//! averaged in the site basis before normalization; exciton targets refer to the
//! eigenstates of the disorder-free model.

use std::sync::Arc;

use nalgebra::Vector3;
use num_complex::Complex64;
use rayon::prelude::*;

use crate::bath::BathSpec;
use crate::dynamics::{FreeStep, Propagator, EXCITATION_THRESHOLD};
use crate::error::{Error, Result};
use crate::linalg::{pairwise_sum, CMatrix, RMatrix};
use crate::model::{exciton_basis, ExcitonBasis, ExcitonModel};
use crate::pulse::SampledField;

/// Largest acceptable total excited-state population.
pub const PENALTY_THRESHOLD: f64 = 0.01;

/// What the control should achieve (indices are 1-based).
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TargetKind {
    Site(usize),
    Exciton(usize),
    Coherence(usize, usize),
    PumpProbeNovelty,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Direction {
    Maximize,
    Minimize,
}

/// When the target is read out.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum EvaluationTime {
    PulseEnd,
    /// Best value over [T, T + length] sampled every `step` fs after the pulse ends at T.
    Window {
        length: f64,
        step: f64,
    },
}

impl Default for EvaluationTime {
    fn default() -> Self {
        EvaluationTime::Window {
            length: 1000.0,
            step: 10.0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Target {
    pub kind: TargetKind,
    pub direction: Direction,
    pub time: EvaluationTime,
}

impl Target {
    pub fn new(kind: TargetKind, direction: Direction, time: EvaluationTime) -> Self {
        Self {
            kind,
            direction,
            time,
        }
    }

    /// Maximize `kind` over the default post-pulse window.
    pub fn maximize(kind: TargetKind) -> Self {
        Self::new(kind, Direction::Maximize, EvaluationTime::default())
    }

    /// Check index ranges for a model with `n_sites` pigments.
    pub fn validate(&self, n_sites: usize) -> Result<()> {
        let ok = |i: usize| (1..=n_sites).contains(&i);
        let valid = match self.kind {
            TargetKind::Site(n) | TargetKind::Exciton(n) => ok(n),
            TargetKind::Coherence(a, b) => ok(a) && ok(b) && a != b,
            TargetKind::PumpProbeNovelty => true,
        };
        if !valid {
            return Err(Error::InvalidParameter {
                name: "target",
                reason: format!("{:?} out of range", self.kind),
            });
        }
        if let EvaluationTime::Window { length, step } = self.time {
            if !(length >= 0.0 && step > 0.0) {
                return Err(Error::InvalidParameter {
                    name: "target.window",
                    reason: "length must be >= 0 and step > 0".into(),
                });
            }
        }
        Ok(())
    }
}

/// Target value of a normalized excited state ρ′ given in the site basis.
///
/// `excitons` are the reference exciton states (columns in the site basis).
pub fn evaluate_target(kind: TargetKind, rho: &CMatrix, excitons: &RMatrix) -> Result<f64> {
    let element = |a: usize, b: usize| -> Complex64 {
        let n = rho.nrows();
        let mut s = Complex64::new(0.0, 0.0);
        for i in 0..n {
            for j in 0..n {
                s += rho[(i, j)] * (excitons[(i, a)] * excitons[(j, b)]);
            }
        }
        s
    };
    match kind {
        TargetKind::Site(n) => Ok(rho[(n - 1, n - 1)].re),
        TargetKind::Exciton(a) => Ok(element(a - 1, a - 1).re),
        TargetKind::Coherence(a, b) => Ok(element(a - 1, b - 1).norm()),
        TargetKind::PumpProbeNovelty => Err(Error::InvalidParameter {
            name: "target",
            reason: "novelty targets need a spectral scorer".into(),
        }),
    }
}

/// value − Θ(x − α)(x − α)² with α = 0.01.
pub fn weak_field_penalty(value: f64, x: f64) -> f64 {
    let over = x - PENALTY_THRESHOLD;
    if over > 0.0 {
        value - over * over
    } else {
        value
    }
}

/// Which polarizations (molecular frame) the pump is averaged over.
#[derive(Debug, Clone, PartialEq)]
pub enum Orientation {
    /// The polarization stored in the field.
    Oriented,
    /// Mean over x, y and z; exact for the isotropic average at second order in the field.
    Isotropic,
    /// Mean over the given unit vectors.
    Sampled(Vec<Vector3<f64>>),
}

impl Orientation {
    fn directions(&self, field: &SampledField) -> Vec<Vector3<f64>> {
        match self {
            Orientation::Oriented => vec![field.polarization],
            Orientation::Isotropic => vec![Vector3::x(), Vector3::y(), Vector3::z()],
            Orientation::Sampled(v) => v.clone(),
        }
    }
}

struct Member {
    propagator: Propagator,
    window_step: Option<FreeStep>,
}

/// A fixed set of molecular configurations sharing one bath.
pub struct Ensemble {
    members: Vec<Member>,
    nominal: ExcitonBasis,
    window: EvaluationTime,
}

/// Averaged excited-state block ρ̄_e (site basis) at each readout time.
#[derive(Debug, Clone, PartialEq)]
pub struct ExcitedSeries {
    pub times: Vec<f64>,
    pub states: Vec<CMatrix>,
    pub pulse_end: f64,
}

impl ExcitedSeries {
    /// Tr ρ̄_e at the pulse end.
    pub fn excitation(&self) -> f64 {
        self.states[0].trace().re
    }
}

impl Ensemble {
    /// `models` are the configurations actually propagated; `nominal` defines the
    /// reference exciton basis used by exciton and coherence targets.
    pub fn new(
        models: &[ExcitonModel],
        nominal: &ExcitonModel,
        bath: &BathSpec,
        window: EvaluationTime,
    ) -> Result<Self> {
        if models.is_empty() {
            return Err(Error::InvalidParameter {
                name: "models",
                reason: "need at least one sample".into(),
            });
        }
        let members = models
            .iter()
            .map(|m| {
                let propagator = Propagator::new(m, bath)?;
                let window_step = match window {
                    EvaluationTime::Window { step, length } if length > 0.0 => {
                        Some(propagator.free_step(step, 0.0))
                    }
                    _ => None,
                };
                Ok(Member {
                    propagator,
                    window_step,
                })
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(Self {
            members,
            nominal: exciton_basis(&nominal.single_block()),
            window,
        })
    }

    /// Single configuration.
    pub fn single(model: &ExcitonModel, bath: &BathSpec, window: EvaluationTime) -> Result<Self> {
        Self::new(std::slice::from_ref(model), model, bath, window)
    }

    pub fn len(&self) -> usize {
        self.members.len()
    }

    pub fn is_empty(&self) -> bool {
        self.members.is_empty()
    }

    pub fn nominal(&self) -> &ExcitonBasis {
        &self.nominal
    }

    pub fn window(&self) -> EvaluationTime {
        self.window
    }

    pub fn propagator(&self, i: usize) -> &Propagator {
        &self.members[i].propagator
    }

    /// Averaged ρ̄_e (site basis) at the pulse end and, for window readout, every
    /// window step afterwards.
    pub fn excited_series(
        &self,
        field: &SampledField,
        orientation: &Orientation,
    ) -> Result<ExcitedSeries> {
        let dirs = orientation.directions(field);
        if dirs.is_empty() {
            return Err(Error::InvalidParameter {
                name: "orientation",
                reason: "no directions".into(),
            });
        }
        let n_steps = match self.window {
            EvaluationTime::Window { length, step } if length > 0.0 => {
                (length / step + 1e-9).floor() as usize
            }
            _ => 0,
        };
        let per_member: Vec<Result<(Vec<CMatrix>, f64)>> = self
            .members
            .par_iter()
            .map(|m| self.member_series(m, field, &dirs, n_steps))
            .collect();
        let mut series = Vec::with_capacity(per_member.len());
        let mut pulse_end = 0.0;
        for r in per_member {
            let (s, t) = r?;
            pulse_end = t;
            series.push(s);
        }
        let count = Complex64::new(series.len() as f64, 0.0);
        let states = (0..=n_steps)
            .map(|k| {
                let items: Vec<CMatrix> = series.iter().map(|s| s[k].clone()).collect();
                pairwise_sum(&items).expect("non-empty") / count
            })
            .collect();
        let step = match self.window {
            EvaluationTime::Window { step, .. } => step,
            EvaluationTime::PulseEnd => 0.0,
        };
        Ok(ExcitedSeries {
            times: (0..=n_steps).map(|k| pulse_end + k as f64 * step).collect(),
            states,
            pulse_end,
        })
    }

    fn member_pulse_end(
        &self,
        m: &Member,
        field: &SampledField,
        dirs: &[Vector3<f64>],
    ) -> Result<(CMatrix, f64)> {
        let p = &m.propagator;
        let ends: Vec<(CMatrix, f64)> = dirs
            .par_iter()
            .map(|e| {
                let f = field.clone().with_polarization(*e);
                p.pulse_end_state(&f)
                    .map(|(rho, t)| (rho.excited_block(), t))
            })
            .collect::<Result<Vec<_>>>()?;
        let pulse_end = ends[0].1;
        let blocks: Vec<CMatrix> = ends.into_iter().map(|(b, _)| b).collect();
        let mean =
            pairwise_sum(&blocks).expect("non-empty") / Complex64::new(blocks.len() as f64, 0.0);
        Ok((mean, pulse_end))
    }

    fn member_series(
        &self,
        m: &Member,
        field: &SampledField,
        dirs: &[Vector3<f64>],
        n_steps: usize,
    ) -> Result<(Vec<CMatrix>, f64)> {
        let (mean, pulse_end) = self.member_pulse_end(m, field, dirs)?;
        let p = &m.propagator;
        let n = p.dim() - 1;
        let u = p.system().single.vectors.map(|x| Complex64::new(x, 0.0));
        let ut = u.transpose();
        let mut flat: Vec<Complex64> = mean.transpose().as_slice().to_vec();
        let mut out = Vec::with_capacity(n_steps + 1);
        out.push(&u * &mean * &ut);
        if let Some(step) = &m.window_step {
            for _ in 0..n_steps {
                step.apply_block(&mut flat, 1, n);
                let eig = CMatrix::from_row_slice(n, n, &flat);
                out.push(&u * eig * &ut);
            }
        }
        Ok((out, pulse_end))
    }

    /// Orientation-averaged, unnormalized ρ_e of member `i` (its own exciton basis)
    /// at each delay after the pulse end, and the pulse end time.
    pub fn member_at_delays(
        &self,
        i: usize,
        field: &SampledField,
        orientation: &Orientation,
        delays: &[f64],
    ) -> Result<(Vec<CMatrix>, f64)> {
        let dirs = orientation.directions(field);
        if dirs.is_empty() {
            return Err(Error::InvalidParameter {
                name: "orientation",
                reason: "no directions".into(),
            });
        }
        let m = &self.members[i];
        let (mean, pulse_end) = self.member_pulse_end(m, field, &dirs)?;
        let n = m.propagator.dim() - 1;
        let flat: Vec<Complex64> = mean.transpose().as_slice().to_vec();
        let states = delays
            .iter()
            .map(|&tau| {
                let mut v = flat.clone();
                if tau > 0.0 {
                    m.propagator.free_step(tau, 0.0).apply_block(&mut v, 1, n);
                }
                CMatrix::from_row_slice(n, n, &v)
            })
            .collect();
        Ok((states, pulse_end))
    }
}

/// Mean ρ_e (site basis, pulse end) over x, y, z polarizations.
pub fn isotropic_average(ensemble: &Ensemble, field: &SampledField) -> Result<CMatrix> {
    Ok(ensemble
        .excited_series(field, &Orientation::Isotropic)?
        .states
        .swap_remove(0))
}

/// Mean ρ_e (site basis, pulse end) over the ensemble members with the field's own
/// polarization.
pub fn ensemble_average(ensemble: &Ensemble, field: &SampledField) -> Result<CMatrix> {
    Ok(ensemble
        .excited_series(field, &Orientation::Oriented)?
        .states
        .swap_remove(0))
}

/// Scorer for targets that depend on the full normalized state (site basis).
pub type StateScorer = Arc<dyn Fn(&CMatrix) -> Result<f64> + Send + Sync>;

/// Outcome of one objective evaluation.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Evaluation {
    /// Penalized score in maximization convention.
    pub score: f64,
    /// Unpenalized target value at the selected time.
    pub value: f64,
    /// Tr ρ̄_e at the pulse end.
    pub excitation: f64,
    /// Readout time, fs.
    pub time: f64,
}

/// A target bound to an ensemble and an orientation rule.
pub struct ControlObjective {
    pub target: Target,
    pub ensemble: Ensemble,
    pub orientation: Orientation,
    pub scorer: Option<StateScorer>,
}

impl ControlObjective {
    pub fn new(target: Target, ensemble: Ensemble, orientation: Orientation) -> Result<Self> {
        target.validate(ensemble.nominal().dim())?;
        if matches!(target.kind, TargetKind::PumpProbeNovelty) {
            return Err(Error::InvalidParameter {
                name: "target",
                reason: "novelty targets need a spectral scorer; use with_scorer".into(),
            });
        }
        Ok(Self {
            target,
            ensemble,
            orientation,
            scorer: None,
        })
    }

    /// Objective driven by a custom scorer of the normalized state.
    pub fn with_scorer(
        target: Target,
        ensemble: Ensemble,
        orientation: Orientation,
        scorer: StateScorer,
    ) -> Result<Self> {
        target.validate(ensemble.nominal().dim())?;
        Ok(Self {
            target,
            ensemble,
            orientation,
            scorer: Some(scorer),
        })
    }

    /// Full evaluation; errors when the pulse leaves the molecule essentially unexcited.
    pub fn evaluate(&self, field: &SampledField) -> Result<Evaluation> {
        let series = self.ensemble.excited_series(field, &self.orientation)?;
        let x = series.excitation();
        if !(x >= EXCITATION_THRESHOLD) {
            return Err(Error::NoExcitation(x));
        }
        let count = match self.target.time {
            EvaluationTime::PulseEnd => 1,
            EvaluationTime::Window { .. } => series.states.len(),
        };
        let sign = match self.target.direction {
            Direction::Maximize => 1.0,
            Direction::Minimize => -1.0,
        };
        let mut best: Option<(f64, f64, f64)> = None;
        for k in 0..count {
            let rho = &series.states[k];
            let tr = rho.trace().re;
            if !(tr >= EXCITATION_THRESHOLD) {
                return Err(Error::NoExcitation(tr));
            }
            let normalized = rho / Complex64::new(tr, 0.0);
            let value = match &self.scorer {
                Some(s) => s(&normalized)?,
                None => evaluate_target(
                    self.target.kind,
                    &normalized,
                    &self.ensemble.nominal().vectors,
                )?,
            };
            let signed = sign * value;
            if best.is_none_or(|(b, _, _)| signed > b) {
                best = Some((signed, value, series.times[k]));
            }
        }
        let (signed, value, time) = best.expect("at least one readout");
        Ok(Evaluation {
            score: weak_field_penalty(signed, x),
            value,
            excitation: x,
            time,
        })
    }

    /// Penalized score, NaN when evaluation fails.
    pub fn score(&self, field: &SampledField) -> f64 {
        self.evaluate(field).map_or(f64::NAN, |e| e.score)
    }
}
