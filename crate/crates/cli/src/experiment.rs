//! Experiment orchestration shared by the commands.

use std::f64::consts::FRAC_PI_2;
use std::sync::Arc;
use std::time::Instant;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use exciton_control::bath::BathSpec;
use exciton_control::model::{sample_disorder, DisorderSpec, ExcitonModel};
use exciton_control::objectives::{
    ControlObjective, Ensemble, Evaluation, Orientation, TargetKind,
};
use exciton_control::optimize::{
    derive_seed, run_protocol, Candidate, Problem, ProtocolConfig, ProtocolResult,
};
use exciton_control::spectra::{
    default_probe_grid, novelty_scorer, reference_set, ProbePolarization, ProbeSuperoperator,
    NOVELTY_DELAYS,
};

use crate::config::{
    AveragingConfig, Budget, OptimizerSection, PulseConfig, RunConfig, TargetConfig,
};
use crate::error::CliResult;

const DISORDER_STAGE: u64 = 1;
const FINAL_STAGE: u64 = 2;
const OPTIMIZER_STAGE: u64 = 3;

/// Which of the three averaging constraints are active.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Constraints {
    pub isotropic: bool,
    pub disorder: bool,
    pub decoherence: bool,
}

impl Constraints {
    pub const NONE: Constraints = Constraints {
        isotropic: false,
        disorder: false,
        decoherence: false,
    };
    pub const FULL: Constraints = Constraints {
        isotropic: true,
        disorder: true,
        decoherence: true,
    };

    /// All eight combinations in fidelity-table column order.
    pub fn table_columns() -> [Constraints; 8] {
        let mut out = [Self::NONE; 8];
        let mut k = 0;
        for decoherence in [false, true] {
            for disorder in [false, true] {
                for isotropic in [false, true] {
                    out[k] = Constraints {
                        isotropic,
                        disorder,
                        decoherence,
                    };
                    k += 1;
                }
            }
        }
        out
    }

    pub fn count(self) -> usize {
        self.isotropic as usize + self.disorder as usize + self.decoherence as usize
    }

    /// True when every constraint of `other` is also active here.
    pub fn includes(self, other: Constraints) -> bool {
        (self.isotropic || !other.isotropic)
            && (self.disorder || !other.disorder)
            && (self.decoherence || !other.decoherence)
    }

    pub fn label(self) -> String {
        format!(
            "{}/{}/{}",
            if self.decoherence {
                "decoherence"
            } else {
                "unitary"
            },
            if self.disorder { "ensemble" } else { "single" },
            if self.isotropic {
                "isotropic"
            } else {
                "oriented"
            },
        )
    }

    fn index(self) -> u64 {
        self.isotropic as u64 | (self.disorder as u64) << 1 | (self.decoherence as u64) << 2
    }
}

impl From<&AveragingConfig> for Constraints {
    fn from(a: &AveragingConfig) -> Self {
        Constraints {
            isotropic: a.isotropic,
            disorder: a.disorder,
            decoherence: a.decoherence,
        }
    }
}

/// Resolved inputs shared by every optimization of a run.
#[derive(Debug, Clone)]
pub struct Study {
    pub model: ExcitonModel,
    pub bath: BathSpec,
    pub pulse: PulseConfig,
    pub averaging: AveragingConfig,
    pub optimizer: OptimizerSection,
    pub budget: Budget,
    pub seed: u64,
}

/// One finished optimization.
#[derive(Debug, Clone)]
pub struct Outcome {
    pub target: TargetConfig,
    pub constraints: Constraints,
    pub result: ProtocolResult,
    /// Re-evaluation of the optimum on fresh disorder samples.
    pub final_evaluation: Option<Evaluation>,
    pub final_samples: Option<usize>,
    pub candidate: Candidate,
    pub optimizer_seed: u64,
    /// Wall-clock time of the job, s.
    pub seconds: f64,
}

impl Outcome {
    /// Reported fidelity: the final re-evaluation when there is one.
    pub fn fidelity(&self) -> f64 {
        self.final_evaluation
            .map_or(self.result.evaluation.value, |e| e.value)
    }
}

/// Polar angles of the molecular x, y and z axes.
const AXES: [(f64, f64); 3] = [(FRAC_PI_2, 0.0), (FRAC_PI_2, FRAC_PI_2), (0.0, 0.0)];

/// Starting points derived from a finished optimization for a problem with
/// constraints `c`. An isotropic optimum seeds an oriented problem once per molecular
/// axis: the isotropic value is an excitation-weighted mean of the three axis values,
/// so the best axis scores at least as well.
fn warm_starts(o: &Outcome, c: Constraints) -> Vec<Candidate> {
    if o.constraints.isotropic && !c.isotropic {
        AXES.iter()
            .map(|&p| Candidate {
                polarization: Some(p),
                ..o.candidate.clone()
            })
            .collect()
    } else {
        vec![o.candidate.clone()]
    }
}

impl Study {
    pub fn from_config(config: &RunConfig) -> CliResult<Self> {
        let model = config.validate()?;
        Ok(Self {
            model,
            bath: config.bath.spec()?,
            pulse: config.pulse.clone(),
            averaging: config.averaging,
            optimizer: config.optimizer.clone(),
            budget: config.budget(),
            seed: config.seed,
        })
    }

    pub fn bath_for(&self, c: Constraints) -> BathSpec {
        if c.decoherence {
            self.bath
        } else {
            BathSpec {
                reorganization_energy: 0.0,
                ..self.bath
            }
        }
    }

    pub fn disorder_seed(&self) -> u64 {
        derive_seed(self.seed, &[DISORDER_STAGE])
    }

    pub fn final_seed(&self) -> u64 {
        derive_seed(self.seed, &[FINAL_STAGE])
    }

    /// Members used during optimization: disorder samples or the nominal complex.
    pub fn members(&self, c: Constraints) -> CliResult<Vec<ExcitonModel>> {
        self.draw(c, self.averaging.samples, self.disorder_seed())
    }

    /// Members used for the final re-evaluation.
    pub fn final_members(&self, c: Constraints) -> CliResult<Vec<ExcitonModel>> {
        self.draw(c, self.budget.final_samples, self.final_seed())
    }

    fn draw(&self, c: Constraints, count: usize, seed: u64) -> CliResult<Vec<ExcitonModel>> {
        if !c.disorder {
            return Ok(vec![self.model.clone()]);
        }
        Ok(sample_disorder(
            &self.model,
            &DisorderSpec::new(self.averaging.disorder_fwhm, seed)?,
            count,
        )?)
    }

    pub fn problem(
        &self,
        target: &TargetConfig,
        c: Constraints,
        members: &[ExcitonModel],
    ) -> CliResult<Problem> {
        let bath = self.bath_for(c);
        let t = target.target()?;
        let ensemble = Ensemble::new(members, &self.model, &bath, t.time)?;
        let orientation = if c.isotropic {
            Orientation::Isotropic
        } else {
            Orientation::Oriented
        };
        let objective = match t.kind {
            TargetKind::PumpProbeNovelty => {
                let probe = Arc::new(ProbeSuperoperator::new(
                    &self.model,
                    &bath,
                    &default_probe_grid(),
                    ProbePolarization::MagicAngle,
                )?);
                let reference =
                    Arc::new(reference_set(&self.model, &bath, &probe, &NOVELTY_DELAYS)?);
                ControlObjective::with_scorer(
                    t,
                    ensemble,
                    orientation,
                    novelty_scorer(probe, reference),
                )?
            }
            _ => ControlObjective::new(t, ensemble, orientation)?,
        };
        Ok(Problem::new(objective, self.pulse.parameterization()))
    }

    pub fn protocol_config(&self, c: Constraints, seed: u64, warm: &[Candidate]) -> ProtocolConfig {
        let mut p = ProtocolConfig::new(
            if c.disorder {
                self.budget.ensemble
            } else {
                self.budget.single
            },
            seed,
        );
        p.population_size = self.optimizer.population_size;
        p.initial_step = self.optimizer.initial_step;
        p.algorithms = self
            .optimizer
            .algorithms
            .iter()
            .map(|&a| a.into())
            .collect();
        p.warm_starts = warm.to_vec();
        p
    }

    /// Optimizer seed of job (`target_index`, `c`).
    pub fn optimizer_seed(&self, target_index: u64, c: Constraints) -> u64 {
        derive_seed(self.seed, &[OPTIMIZER_STAGE, target_index, c.index()])
    }

    /// Run the protocol for one target under `c`, then re-evaluate on fresh disorder
    /// samples when disorder averaging is active.
    pub fn optimize(
        &self,
        target: &TargetConfig,
        target_index: u64,
        c: Constraints,
        warm: &[Candidate],
    ) -> CliResult<Outcome> {
        let start = Instant::now();
        let members = self.members(c)?;
        let problem = self.problem(target, c, &members)?;
        let seed = self.optimizer_seed(target_index, c);
        let result = run_protocol(&problem, &self.protocol_config(c, seed, warm))?;
        let candidate = result.candidate(&problem);
        let field = problem.field(result.best.duration, &result.best.best_parameters)?;
        let (final_evaluation, final_samples) = if c.disorder {
            let fresh = self.final_members(c)?;
            let check = self.problem(target, c, &fresh)?;
            (Some(check.objective.evaluate(&field)?), Some(fresh.len()))
        } else {
            (None, None)
        };
        Ok(Outcome {
            target: *target,
            constraints: c,
            result,
            final_evaluation,
            final_samples,
            candidate,
            optimizer_seed: seed,
            seconds: start.elapsed().as_secs_f64(),
        })
    }

    /// All eight constraint combinations for one target, in table column order.
    ///
    /// Combinations run from most to least constrained; each is warm-started from the
    /// optima of the already finished combinations that include it.
    pub fn ablation_row(
        &self,
        target: &TargetConfig,
        target_index: u64,
    ) -> CliResult<Vec<Outcome>> {
        let mut order = Constraints::table_columns().to_vec();
        order.sort_by_key(|c| std::cmp::Reverse(c.count()));
        let mut done: Vec<Outcome> = Vec::with_capacity(8);
        for c in order {
            let warm: Vec<Candidate> = done
                .iter()
                .filter(|o| o.constraints != c && o.constraints.includes(c))
                .flat_map(|o| warm_starts(o, c))
                .collect();
            done.push(self.optimize(target, target_index, c, &warm)?);
        }
        let columns = Constraints::table_columns();
        done.sort_by_key(|o| columns.iter().position(|&c| c == o.constraints));
        Ok(done)
    }

    /// Ablation rows for several targets, concurrently.
    pub fn ablation(&self, targets: &[TargetConfig]) -> CliResult<Vec<Vec<Outcome>>> {
        targets
            .par_iter()
            .enumerate()
            .map(|(i, t)| self.ablation_row(t, i as u64))
            .collect()
    }

    /// Same study with a different bath.
    pub fn with_bath(&self, bath: BathSpec) -> Self {
        Self {
            bath,
            ..self.clone()
        }
    }
}
