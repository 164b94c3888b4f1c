//! Derivative-free maximizers and the outer search protocol.
//!
//! Both optimizers maximize; a non-finite objective value counts as −∞.

mod cmaes;
mod protocol;
mod subplex;

pub use cmaes::cma_es;
pub use protocol::{
    default_polarization, gaussian_pump, run_protocol, Candidate, ParameterLayout,
    Parameterization, Problem, ProtocolConfig, ProtocolResult, RunSummary, CRAB_UNIT,
    DEFAULT_CARRIER, DURATION_GRID, GAUSSIAN_AMPLITUDE, GAUSSIAN_SIGMA,
};
pub use subplex::subplex_local;

use crate::error::{Error, Result};

/// Objective in maximization convention.
pub type ObjectiveFn<'a> = dyn Fn(&[f64]) -> f64 + Sync + 'a;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Algorithm {
    CmaEs,
    SubplexLocal,
}

impl Algorithm {
    pub fn name(self) -> &'static str {
        match self {
            Algorithm::CmaEs => "cma_es",
            Algorithm::SubplexLocal => "subplex_local",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct OptimizerConfig {
    pub algorithm: Algorithm,
    pub max_evaluations: usize,
    /// CMA-ES offspring per generation.
    pub population_size: usize,
    /// CMA-ES σ₀ and the initial subplex step.
    pub initial_step: f64,
    pub seed: u64,
}

impl OptimizerConfig {
    pub fn new(algorithm: Algorithm, max_evaluations: usize, seed: u64) -> Self {
        Self {
            algorithm,
            max_evaluations,
            population_size: 50,
            initial_step: 1.0,
            seed,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.max_evaluations == 0 {
            return Err(Error::InvalidParameter {
                name: "max_evaluations",
                reason: "must be > 0".into(),
            });
        }
        if self.population_size < 2 {
            return Err(Error::InvalidParameter {
                name: "population_size",
                reason: "must be >= 2".into(),
            });
        }
        if !(self.initial_step > 0.0 && self.initial_step.is_finite()) {
            return Err(Error::InvalidParameter {
                name: "initial_step",
                reason: "must be positive".into(),
            });
        }
        Ok(())
    }
}

impl Default for OptimizerConfig {
    fn default() -> Self {
        Self::new(Algorithm::CmaEs, 10_000, 0)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TraceEntry {
    /// 1-based evaluation count.
    pub evaluation: usize,
    pub value: f64,
    pub best: f64,
    /// FNV-1a hash of the evaluated parameter bits.
    pub params_hash: u64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct OptimizationResult {
    pub best_parameters: Vec<f64>,
    pub best_value: f64,
    pub trace: Vec<TraceEntry>,
    pub algorithm: Algorithm,
    /// Pulse duration for duration-gridded problems, fs.
    pub duration: Option<f64>,
    pub evaluations: usize,
}

/// Budgeted evaluation log shared by both optimizers.
pub(crate) struct Recorder {
    budget: usize,
    best_x: Vec<f64>,
    best: f64,
    trace: Vec<TraceEntry>,
}

impl Recorder {
    pub(crate) fn new(budget: usize, x0: &[f64]) -> Self {
        Self {
            budget,
            best_x: x0.to_vec(),
            best: f64::NEG_INFINITY,
            trace: Vec::with_capacity(budget.min(1 << 16)),
        }
    }

    pub(crate) fn remaining(&self) -> usize {
        self.budget - self.trace.len()
    }

    pub(crate) fn exhausted(&self) -> bool {
        self.trace.len() >= self.budget
    }

    /// Log an evaluation and return its sanitized value.
    pub(crate) fn record(&mut self, x: &[f64], value: f64) -> f64 {
        debug_assert!(!self.exhausted());
        let v = if value.is_finite() {
            value
        } else {
            f64::NEG_INFINITY
        };
        if v > self.best {
            self.best = v;
            self.best_x.clear();
            self.best_x.extend_from_slice(x);
        }
        self.trace.push(TraceEntry {
            evaluation: self.trace.len() + 1,
            value: v,
            best: self.best,
            params_hash: parameter_hash(x),
        });
        v
    }

    /// Evaluate one point if budget allows.
    pub(crate) fn eval(&mut self, f: &ObjectiveFn, x: &[f64]) -> Option<f64> {
        if self.exhausted() {
            return None;
        }
        let v = f(x);
        Some(self.record(x, v))
    }

    pub(crate) fn best(&self) -> f64 {
        self.best
    }

    pub(crate) fn finish(self, algorithm: Algorithm) -> OptimizationResult {
        OptimizationResult {
            evaluations: self.trace.len(),
            best_parameters: self.best_x,
            best_value: self.best,
            trace: self.trace,
            algorithm,
            duration: None,
        }
    }
}

/// Run the configured algorithm from `x0`.
pub fn optimize(
    f: &ObjectiveFn,
    x0: &[f64],
    config: &OptimizerConfig,
) -> Result<OptimizationResult> {
    match config.algorithm {
        Algorithm::CmaEs => cma_es(f, x0, config),
        Algorithm::SubplexLocal => subplex_local(f, x0, config),
    }
}

/// FNV-1a over the IEEE-754 bits of `x`.
pub fn parameter_hash(x: &[f64]) -> u64 {
    let mut h: u64 = 0xcbf2_9ce4_8422_2325;
    for v in x {
        for b in v.to_bits().to_le_bytes() {
            h ^= b as u64;
            h = h.wrapping_mul(0x0000_0100_0000_01b3);
        }
    }
    h
}

/// Mix a base seed with job indices into an independent stream seed.
pub fn derive_seed(base: u64, parts: &[u64]) -> u64 {
    let mut z = base ^ 0x9E37_79B9_7F4A_7C15;
    for &p in parts {
        z = z
            .wrapping_add(p.wrapping_mul(0xBF58_476D_1CE4_E5B9))
            .wrapping_add(0x9E37_79B9_7F4A_7C15);
        z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
        z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
        z ^= z >> 31;
    }
    z
}
