use rayon::prelude::*;

use super::{derive_seed, optimize, Algorithm, OptimizationResult, OptimizerConfig};
use crate::error::{Error, Result};
use crate::objectives::{ControlObjective, Evaluation, Orientation};
use crate::pulse::{
    crab_frequencies, synthesize_chirp, synthesize_crab, ChirpPulse, CrabPulse, SampledField,
    TimeGrid, FIELD_DT,
};

/// Pulse durations searched for the tone-sum parameterization, fs.
pub const DURATION_GRID: [f64; 9] = [
    100.0, 150.0, 200.0, 250.0, 300.0, 350.0, 400.0, 450.0, 500.0,
];

/// Default rotating-frame frequency, cm⁻¹.
pub const DEFAULT_CARRIER: f64 = 12350.0;
/// Spectral standard deviation of the Gaussian pump, cm⁻¹.
pub const GAUSSIAN_SIGMA: f64 = 225.0;
/// Peak |Ẽ(t)| of the transform-limited Gaussian pump, V/m.
pub const GAUSSIAN_AMPLITUDE: f64 = 5.0e6;
/// Field represented by a unit tone coefficient, V/m.
pub const CRAB_UNIT: f64 = 1.0e5;

/// Initial polarization angles: ê = (1, 1, 1)/√3.
pub fn default_polarization() -> (f64, f64) {
    ((1.0f64 / 3.0f64.sqrt()).acos(), std::f64::consts::FRAC_PI_4)
}

#[derive(Debug, Clone, PartialEq)]
pub enum Parameterization {
    /// Tone sum with free complex coefficients inside [0, T], T from `durations`.
    Crab {
        frequencies: Vec<f64>,
        carrier: f64,
        unit: f64,
        durations: Vec<f64>,
    },
    /// Phase-only polynomial chirp of a fixed Gaussian spectrum.
    Chirp { template: ChirpPulse },
}

impl Parameterization {
    /// 19 tones over 12 100–12 600 cm⁻¹ and the standard duration grid.
    pub fn crab_default() -> Self {
        Parameterization::Crab {
            frequencies: crab_frequencies(19, 12100.0, 12600.0),
            carrier: DEFAULT_CARRIER,
            unit: CRAB_UNIT,
            durations: DURATION_GRID.to_vec(),
        }
    }

    /// Gaussian pump with `n_terms` chirp coefficients C_2..C_{n+1}.
    pub fn chirp_default(n_terms: usize) -> Self {
        Parameterization::Chirp {
            template: gaussian_pump(n_terms),
        }
    }

    /// Number of shape parameters (excluding polarization).
    pub fn n_shape(&self) -> usize {
        match self {
            Parameterization::Crab { frequencies, .. } => 2 * frequencies.len(),
            Parameterization::Chirp { template } => template.coefficients.len(),
        }
    }

    /// Durations to search; a single `None` when the duration is not a parameter.
    pub fn durations(&self) -> Vec<Option<f64>> {
        match self {
            Parameterization::Crab { durations, .. } => {
                durations.iter().map(|&d| Some(d)).collect()
            }
            Parameterization::Chirp { .. } => vec![None],
        }
    }

    /// Starting shape: unit tone coefficients or zero chirp.
    pub fn initial_shape(&self) -> Vec<f64> {
        match self {
            Parameterization::Crab { frequencies, .. } => vec![1.0; 2 * frequencies.len()],
            Parameterization::Chirp { template } => vec![0.0; template.coefficients.len()],
        }
    }

    pub fn field(
        &self,
        duration: Option<f64>,
        shape: &[f64],
        polarization: (f64, f64),
    ) -> Result<SampledField> {
        if shape.len() != self.n_shape() {
            return Err(Error::DimensionMismatch {
                expected: self.n_shape(),
                found: shape.len(),
            });
        }
        match self {
            Parameterization::Crab {
                frequencies,
                carrier,
                unit,
                ..
            } => {
                let duration = duration.ok_or(Error::InvalidParameter {
                    name: "duration",
                    reason: "tone-sum pulses need a duration".into(),
                })?;
                let k = frequencies.len();
                let pulse = CrabPulse {
                    frequencies: frequencies.clone(),
                    a: shape[..k].to_vec(),
                    b: shape[k..].to_vec(),
                    duration,
                    theta: polarization.0,
                    phi: polarization.1,
                    carrier: *carrier,
                    unit: *unit,
                };
                Ok(synthesize_crab(
                    &pulse,
                    &TimeGrid::covering(duration, FIELD_DT),
                ))
            }
            Parameterization::Chirp { template } => {
                let mut p = template.clone();
                p.coefficients = shape.to_vec();
                p.theta = polarization.0;
                p.phi = polarization.1;
                synthesize_chirp(&p)
            }
        }
    }
}

/// Transform-limited Gaussian pump with `n_terms` (zero) chirp coefficients.
pub fn gaussian_pump(n_terms: usize) -> ChirpPulse {
    let mut p = ChirpPulse::unchirped(DEFAULT_CARRIER, GAUSSIAN_SIGMA, GAUSSIAN_AMPLITUDE, n_terms);
    let (theta, phi) = default_polarization();
    p.theta = theta;
    p.phi = phi;
    p
}

/// How a flat parameter vector splits into shape and polarization.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ParameterLayout {
    pub n_shape: usize,
    pub polarization: bool,
}

impl ParameterLayout {
    pub fn len(&self) -> usize {
        self.n_shape + if self.polarization { 2 } else { 0 }
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn polarization_of(&self, x: &[f64]) -> (f64, f64) {
        if self.polarization {
            (x[self.n_shape], x[self.n_shape + 1])
        } else {
            default_polarization()
        }
    }
}

/// A starting point from a related optimization.
#[derive(Debug, Clone, PartialEq)]
pub struct Candidate {
    pub duration: Option<f64>,
    pub shape: Vec<f64>,
    pub polarization: Option<(f64, f64)>,
}

/// An objective paired with the pulse family it is optimized over.
pub struct Problem {
    pub objective: ControlObjective,
    pub parameterization: Parameterization,
}

impl Problem {
    pub fn new(objective: ControlObjective, parameterization: Parameterization) -> Self {
        Self {
            objective,
            parameterization,
        }
    }

    /// Polarization angles are free parameters only for oriented molecules.
    pub fn layout(&self) -> ParameterLayout {
        ParameterLayout {
            n_shape: self.parameterization.n_shape(),
            polarization: matches!(self.objective.orientation, Orientation::Oriented),
        }
    }

    pub fn initial_point(&self) -> Vec<f64> {
        let mut x = self.parameterization.initial_shape();
        if self.layout().polarization {
            let (t, p) = default_polarization();
            x.extend([t, p]);
        }
        x
    }

    fn point_from(&self, c: &Candidate) -> Vec<f64> {
        let mut x = c.shape.clone();
        if self.layout().polarization {
            let (t, p) = c.polarization.unwrap_or_else(default_polarization);
            x.extend([t, p]);
        }
        x
    }

    /// Split an optimizer vector into a reusable candidate.
    pub fn candidate(&self, duration: Option<f64>, x: &[f64]) -> Candidate {
        let layout = self.layout();
        Candidate {
            duration,
            shape: x[..layout.n_shape].to_vec(),
            polarization: layout.polarization.then(|| layout.polarization_of(x)),
        }
    }

    pub fn field(&self, duration: Option<f64>, x: &[f64]) -> Result<SampledField> {
        let layout = self.layout();
        if x.len() != layout.len() {
            return Err(Error::DimensionMismatch {
                expected: layout.len(),
                found: x.len(),
            });
        }
        self.parameterization
            .field(duration, &x[..layout.n_shape], layout.polarization_of(x))
    }

    pub fn evaluate(&self, duration: Option<f64>, x: &[f64]) -> Result<Evaluation> {
        self.objective.evaluate(&self.field(duration, x)?)
    }

    /// Penalized score; NaN on failure.
    pub fn score(&self, duration: Option<f64>, x: &[f64]) -> f64 {
        self.evaluate(duration, x).map_or(f64::NAN, |e| e.score)
    }

    /// Transform-limited Gaussian pump, read out over the objective's delay rule.
    pub fn baseline(&self) -> Result<Evaluation> {
        self.objective
            .evaluate(&synthesize_chirp(&gaussian_pump(0))?)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ProtocolConfig {
    /// Budget per (duration × algorithm) run.
    pub max_evaluations: usize,
    pub population_size: usize,
    pub initial_step: f64,
    pub seed: u64,
    pub algorithms: Vec<Algorithm>,
    /// Extra local searches started from these points.
    pub warm_starts: Vec<Candidate>,
}

impl ProtocolConfig {
    pub fn new(max_evaluations: usize, seed: u64) -> Self {
        Self {
            max_evaluations,
            population_size: 50,
            initial_step: 1.0,
            seed,
            algorithms: vec![Algorithm::CmaEs, Algorithm::SubplexLocal],
            warm_starts: Vec::new(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RunSummary {
    pub duration: Option<f64>,
    pub algorithm: Algorithm,
    pub warm_start: bool,
    pub best_value: f64,
    pub evaluations: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ProtocolResult {
    /// Best run over all durations, algorithms and warm starts.
    pub best: OptimizationResult,
    /// Full evaluation of the best parameters.
    pub evaluation: Evaluation,
    pub runs: Vec<RunSummary>,
    pub baseline: Evaluation,
    /// Sum of evaluations over all runs.
    pub total_evaluations: usize,
}

impl ProtocolResult {
    pub fn candidate(&self, problem: &Problem) -> Candidate {
        problem.candidate(self.best.duration, &self.best.best_parameters)
    }
}

struct Job {
    duration: Option<f64>,
    algorithm: Algorithm,
    start: Vec<f64>,
    warm: bool,
    index: u64,
}

/// Duration grid × algorithms (plus warm starts), concurrently; returns the best.
pub fn run_protocol(problem: &Problem, config: &ProtocolConfig) -> Result<ProtocolResult> {
    if config.algorithms.is_empty() {
        return Err(Error::InvalidParameter {
            name: "algorithms",
            reason: "need at least one".into(),
        });
    }
    let durations = problem.parameterization.durations();
    let mut jobs = Vec::new();
    for &d in &durations {
        for &a in &config.algorithms {
            jobs.push(Job {
                duration: d,
                algorithm: a,
                start: problem.initial_point(),
                warm: false,
                index: jobs.len() as u64,
            });
        }
    }
    for c in &config.warm_starts {
        let duration = match (&problem.parameterization, c.duration) {
            (Parameterization::Crab { .. }, Some(d)) => Some(d),
            (Parameterization::Chirp { .. }, _) => None,
            _ => continue,
        };
        if c.shape.len() != problem.parameterization.n_shape() {
            continue;
        }
        jobs.push(Job {
            duration,
            algorithm: Algorithm::SubplexLocal,
            start: problem.point_from(c),
            warm: true,
            index: jobs.len() as u64,
        });
    }
    let results: Vec<Result<OptimizationResult>> = jobs
        .par_iter()
        .map(|job| {
            let cfg = OptimizerConfig {
                algorithm: job.algorithm,
                max_evaluations: config.max_evaluations,
                population_size: config.population_size,
                initial_step: config.initial_step,
                seed: derive_seed(config.seed, &[job.index]),
            };
            let f = |x: &[f64]| problem.score(job.duration, x);
            let mut r = optimize(&f, &job.start, &cfg)?;
            r.duration = job.duration;
            Ok(r)
        })
        .collect();
    let mut best: Option<OptimizationResult> = None;
    let mut runs = Vec::with_capacity(jobs.len());
    let mut total = 0;
    for (job, r) in jobs.iter().zip(results) {
        let r = r?;
        total += r.evaluations;
        runs.push(RunSummary {
            duration: job.duration,
            algorithm: job.algorithm,
            warm_start: job.warm,
            best_value: r.best_value,
            evaluations: r.evaluations,
        });
        if best.as_ref().is_none_or(|b| r.best_value > b.best_value) {
            best = Some(r);
        }
    }
    let best = best.expect("at least one job");
    let evaluation = problem.evaluate(best.duration, &best.best_parameters)?;
    Ok(ProtocolResult {
        best,
        evaluation,
        runs,
        baseline: problem.baseline()?,
        total_evaluations: total,
    })
}
