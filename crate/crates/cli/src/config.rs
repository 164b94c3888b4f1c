//! Declarative run configuration.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use exciton_control::bath::BathSpec;
use exciton_control::model::ExcitonModel;
use exciton_control::objectives::{Direction, EvaluationTime, Target, TargetKind};
use exciton_control::optimize::{Algorithm, Parameterization};
use exciton_control::pulse::crab_frequencies;
use exciton_control::spectra::NOVELTY_DELAYS;

use crate::error::CliError;

/// Evaluation budgets and sample counts for one scale of the protocol.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Budget {
    /// Per (duration × algorithm) run without disorder averaging.
    pub single: usize,
    /// Per run with disorder averaging.
    pub ensemble: usize,
    /// Disorder samples for the final re-evaluation.
    pub final_samples: usize,
}

pub const DESK_BUDGET: Budget = Budget {
    single: 1000,
    ensemble: 100,
    final_samples: 100,
};
pub const PAPER_BUDGET: Budget = Budget {
    single: 10_000,
    ensemble: 1000,
    final_samples: 1000,
};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    #[serde(default)]
    pub seed: u64,
    #[serde(default = "default_output_dir")]
    pub output_dir: PathBuf,
    #[serde(default)]
    pub paper_scale: bool,
    #[serde(default)]
    pub model: ModelConfig,
    #[serde(default)]
    pub bath: BathConfig,
    #[serde(default)]
    pub target: TargetConfig,
    #[serde(default)]
    pub averaging: AveragingConfig,
    #[serde(default)]
    pub pulse: PulseConfig,
    #[serde(default)]
    pub optimizer: OptimizerSection,
    #[serde(default)]
    pub ablation: AblationConfig,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sweep: Option<SweepConfig>,
    #[serde(default)]
    pub pump_probe: PumpProbeConfig,
}

fn default_output_dir() -> PathBuf {
    PathBuf::from("results")
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            seed: 0,
            output_dir: default_output_dir(),
            paper_scale: false,
            model: ModelConfig::default(),
            bath: BathConfig::default(),
            target: TargetConfig::default(),
            averaging: AveragingConfig::default(),
            pulse: PulseConfig::default(),
            optimizer: OptimizerSection::default(),
            ablation: AblationConfig::default(),
            sweep: None,
            pump_probe: PumpProbeConfig::default(),
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelConfig {
    /// Model data file; the bundled FMO model when absent.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub path: Option<PathBuf>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct BathConfig {
    /// λ, cm⁻¹.
    pub reorganization_energy: f64,
    /// γ, fs⁻¹.
    pub relaxation_rate: f64,
    /// T, K.
    pub temperature: f64,
}

impl Default for BathConfig {
    fn default() -> Self {
        let b = BathSpec::fmo_default();
        Self {
            reorganization_energy: b.reorganization_energy,
            relaxation_rate: b.relaxation_rate,
            temperature: b.temperature,
        }
    }
}

impl BathConfig {
    pub fn spec(&self) -> Result<BathSpec, CliError> {
        BathSpec::new(
            self.reorganization_energy,
            self.relaxation_rate,
            self.temperature,
        )
        .map_err(|e| CliError::config("bath", e.to_string()))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TargetName {
    Site,
    Exciton,
    Coherence,
    Novelty,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DirectionName {
    Maximize,
    Minimize,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Readout {
    PulseEnd,
    Window,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TargetConfig {
    pub kind: TargetName,
    /// 1-based site or exciton index.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub index: Option<usize>,
    /// 1-based exciton pair for coherence targets.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub pair: Option<[usize; 2]>,
    #[serde(default = "default_direction")]
    pub direction: DirectionName,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub readout: Option<Readout>,
    #[serde(default = "default_window_length")]
    pub window_length: f64,
    #[serde(default = "default_window_step")]
    pub window_step: f64,
}

fn default_direction() -> DirectionName {
    DirectionName::Maximize
}

fn default_window_length() -> f64 {
    1000.0
}

fn default_window_step() -> f64 {
    10.0
}

impl Default for TargetConfig {
    fn default() -> Self {
        Self::exciton(1)
    }
}

impl TargetConfig {
    fn with(kind: TargetName, index: Option<usize>, pair: Option<[usize; 2]>) -> Self {
        Self {
            kind,
            index,
            pair,
            direction: default_direction(),
            readout: None,
            window_length: default_window_length(),
            window_step: default_window_step(),
        }
    }

    pub fn site(n: usize) -> Self {
        Self::with(TargetName::Site, Some(n), None)
    }

    pub fn exciton(n: usize) -> Self {
        Self::with(TargetName::Exciton, Some(n), None)
    }

    pub fn coherence(a: usize, b: usize) -> Self {
        Self::with(TargetName::Coherence, None, Some([a, b]))
    }

    pub fn novelty() -> Self {
        Self::with(TargetName::Novelty, None, None)
    }

    /// Populations are read out over the delay window by default; coherences and
    /// spectra at the pulse end.
    pub fn readout(&self) -> Readout {
        self.readout.unwrap_or(match self.kind {
            TargetName::Site | TargetName::Exciton => Readout::Window,
            TargetName::Coherence | TargetName::Novelty => Readout::PulseEnd,
        })
    }

    pub fn kind(&self) -> Result<TargetKind, CliError> {
        let index = || {
            self.index.ok_or_else(|| {
                CliError::config("target.index", "required for site and exciton targets")
            })
        };
        Ok(match self.kind {
            TargetName::Site => TargetKind::Site(index()?),
            TargetName::Exciton => TargetKind::Exciton(index()?),
            TargetName::Coherence => {
                let [a, b] = self.pair.ok_or_else(|| {
                    CliError::config("target.pair", "required for coherence targets")
                })?;
                TargetKind::Coherence(a, b)
            }
            TargetName::Novelty => TargetKind::PumpProbeNovelty,
        })
    }

    pub fn target(&self) -> Result<Target, CliError> {
        let direction = match self.direction {
            DirectionName::Maximize => Direction::Maximize,
            DirectionName::Minimize => Direction::Minimize,
        };
        let time = match self.readout() {
            Readout::PulseEnd => EvaluationTime::PulseEnd,
            Readout::Window => EvaluationTime::Window {
                length: self.window_length,
                step: self.window_step,
            },
        };
        Ok(Target::new(self.kind()?, direction, time))
    }

    /// Short label such as `site_7` or `coherence_1_2`.
    pub fn label(&self) -> String {
        match self.kind {
            TargetName::Site => format!("site_{}", self.index.unwrap_or(0)),
            TargetName::Exciton => format!("exciton_{}", self.index.unwrap_or(0)),
            TargetName::Coherence => {
                let [a, b] = self.pair.unwrap_or([0, 0]);
                format!("coherence_{a}_{b}")
            }
            TargetName::Novelty => "novelty".into(),
        }
    }

    pub fn validate(&self, field: &str, n_sites: usize) -> Result<(), CliError> {
        let kind = self.kind().map_err(|e| e.within(field))?;
        if self.readout() == Readout::Window
            && !(self.window_length >= 0.0 && self.window_step > 0.0)
        {
            return Err(CliError::config(
                format!("{field}.window_step"),
                "window needs length >= 0 and step > 0",
            ));
        }
        Target::new(kind, Direction::Maximize, EvaluationTime::PulseEnd)
            .validate(n_sites)
            .map_err(|e| CliError::config(format!("{field}.kind"), e.to_string()))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct AveragingConfig {
    /// Average over molecular orientations (x/y/z shortcut).
    pub isotropic: bool,
    /// Average over static-disorder samples.
    pub disorder: bool,
    /// Couple the system to the bath.
    pub decoherence: bool,
    /// Disorder FWHM, cm⁻¹.
    pub disorder_fwhm: f64,
    /// Disorder samples used during optimization.
    pub samples: usize,
    /// Disorder samples for the final re-evaluation; scale default when absent.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub final_samples: Option<usize>,
}

impl Default for AveragingConfig {
    fn default() -> Self {
        Self {
            isotropic: true,
            disorder: true,
            decoherence: true,
            disorder_fwhm: 100.0,
            samples: 10,
            final_samples: None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PulseKind {
    Crab,
    Chirp,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct PulseConfig {
    pub kind: PulseKind,
    /// Number of tones.
    pub tones: usize,
    /// Lowest and highest tone, cm⁻¹.
    pub band: [f64; 2],
    /// Rotating-frame frequency, cm⁻¹.
    pub carrier: f64,
    /// Field of a unit tone coefficient, V/m.
    pub unit: f64,
    /// Duration grid, fs.
    pub durations: Vec<f64>,
    /// Chirp coefficients for phase-only pulses.
    pub chirp_terms: usize,
}

impl Default for PulseConfig {
    fn default() -> Self {
        match Parameterization::crab_default() {
            Parameterization::Crab {
                frequencies,
                carrier,
                unit,
                durations,
            } => Self {
                kind: PulseKind::Crab,
                tones: frequencies.len(),
                band: [frequencies[0], frequencies[frequencies.len() - 1]],
                carrier,
                unit,
                durations,
                chirp_terms: 2,
            },
            Parameterization::Chirp { .. } => unreachable!("the default is a tone sum"),
        }
    }
}

impl PulseConfig {
    pub fn parameterization(&self) -> Parameterization {
        match self.kind {
            PulseKind::Crab => Parameterization::Crab {
                frequencies: crab_frequencies(self.tones, self.band[0], self.band[1]),
                carrier: self.carrier,
                unit: self.unit,
                durations: self.durations.clone(),
            },
            PulseKind::Chirp => Parameterization::chirp_default(self.chirp_terms),
        }
    }

    pub fn validate(&self) -> Result<(), CliError> {
        match self.kind {
            PulseKind::Crab => {
                if self.tones == 0 {
                    return Err(CliError::config("pulse.tones", "must be >= 1"));
                }
                if !(self.band[0] <= self.band[1]) || !self.band.iter().all(|b| b.is_finite()) {
                    return Err(CliError::config("pulse.band", "must be an ascending pair"));
                }
                if !(self.unit > 0.0 && self.unit.is_finite()) {
                    return Err(CliError::config("pulse.unit", "must be positive"));
                }
                if self.durations.is_empty()
                    || !self.durations.iter().all(|&d| d > 0.0 && d.is_finite())
                {
                    return Err(CliError::config(
                        "pulse.durations",
                        "must be a nonempty list of positive durations",
                    ));
                }
            }
            PulseKind::Chirp => {
                if self.chirp_terms == 0 {
                    return Err(CliError::config("pulse.chirp_terms", "must be >= 1"));
                }
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AlgorithmName {
    CmaEs,
    SubplexLocal,
}

impl From<AlgorithmName> for Algorithm {
    fn from(a: AlgorithmName) -> Self {
        match a {
            AlgorithmName::CmaEs => Algorithm::CmaEs,
            AlgorithmName::SubplexLocal => Algorithm::SubplexLocal,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct OptimizerSection {
    /// Per-run budget without disorder averaging; scale default when absent.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub max_evaluations: Option<usize>,
    /// Per-run budget with disorder averaging; scale default when absent.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub ensemble_max_evaluations: Option<usize>,
    pub population_size: usize,
    pub initial_step: f64,
    pub algorithms: Vec<AlgorithmName>,
}

impl Default for OptimizerSection {
    fn default() -> Self {
        Self {
            max_evaluations: None,
            ensemble_max_evaluations: None,
            population_size: 50,
            initial_step: 1.0,
            algorithms: vec![AlgorithmName::CmaEs, AlgorithmName::SubplexLocal],
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct AblationConfig {
    pub targets: Vec<TargetConfig>,
}

impl Default for AblationConfig {
    fn default() -> Self {
        let mut targets: Vec<TargetConfig> = (1..=7).map(TargetConfig::site).collect();
        targets.extend((1..=7).map(TargetConfig::exciton));
        Self { targets }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SweepParameter {
    ReorganizationEnergy,
    Temperature,
}

impl SweepParameter {
    pub fn name(self) -> &'static str {
        match self {
            SweepParameter::ReorganizationEnergy => "reorganization_energy",
            SweepParameter::Temperature => "temperature",
        }
    }

    /// Value of this parameter in the bundled defaults.
    pub fn default_value(self) -> f64 {
        let b = BathSpec::fmo_default();
        match self {
            SweepParameter::ReorganizationEnergy => b.reorganization_energy,
            SweepParameter::Temperature => b.temperature,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepConfig {
    pub parameter: SweepParameter,
    pub values: Vec<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PumpChoice {
    Unshaped,
    Optimized,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct PumpProbeConfig {
    pub pump: PumpChoice,
    /// Result file written by `optimize`, for optimized pumps.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub result: Option<PathBuf>,
    /// Probe frequency of the delay trace, cm⁻¹.
    pub probe_frequency: f64,
    /// Delay spacing of the trace, fs.
    pub delay_step: f64,
    /// Last delay of the trace, fs.
    pub max_delay: f64,
    /// Delays of the full spectra, fs after the pulse end.
    pub spectrum_delays: Vec<f64>,
    /// Only write the reference envelope.
    pub reference_only: bool,
}

impl Default for PumpProbeConfig {
    fn default() -> Self {
        Self {
            pump: PumpChoice::Unshaped,
            result: None,
            probe_frequency: 12200.0,
            delay_step: 10.0,
            max_delay: 1500.0,
            spectrum_delays: NOVELTY_DELAYS.to_vec(),
            reference_only: false,
        }
    }
}

impl RunConfig {
    pub fn from_toml_str(text: &str) -> Result<Self, CliError> {
        toml::from_str(text).map_err(|e| CliError::Config(e.to_string()))
    }

    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::Config(format!("cannot read config {}: {e}", path.display())))?;
        Self::from_toml_str(&text)
    }

    pub fn to_toml_string(&self) -> String {
        toml::to_string(self).expect("config serializes")
    }

    pub fn budget(&self) -> Budget {
        let base = if self.paper_scale {
            PAPER_BUDGET
        } else {
            DESK_BUDGET
        };
        Budget {
            single: self.optimizer.max_evaluations.unwrap_or(base.single),
            ensemble: self
                .optimizer
                .ensemble_max_evaluations
                .unwrap_or(base.ensemble),
            final_samples: self.averaging.final_samples.unwrap_or(base.final_samples),
        }
    }

    /// Text of the model data file and the parsed model.
    pub fn model(&self) -> Result<(String, ExcitonModel), CliError> {
        let text = match &self.model.path {
            Some(p) => std::fs::read_to_string(p).map_err(|e| {
                CliError::config("model.path", format!("cannot read {}: {e}", p.display()))
            })?,
            None => ExcitonModel::fmo_data().to_string(),
        };
        let model = ExcitonModel::from_toml_str(&text)
            .map_err(|e| CliError::config("model.path", e.to_string()))?;
        Ok((text, model))
    }

    /// Checks everything that can be checked without propagating.
    pub fn validate(&self) -> Result<ExcitonModel, CliError> {
        let (_, model) = self.model()?;
        let n = model.n_sites();
        self.bath.spec()?;
        self.target.validate("target", n)?;
        for (i, t) in self.ablation.targets.iter().enumerate() {
            t.validate(&format!("ablation.targets[{i}]"), n)?;
        }
        let a = &self.averaging;
        if !(a.disorder_fwhm >= 0.0 && a.disorder_fwhm.is_finite()) {
            return Err(CliError::config("averaging.disorder_fwhm", "must be >= 0"));
        }
        if a.samples == 0 {
            return Err(CliError::config("averaging.samples", "must be >= 1"));
        }
        if a.final_samples == Some(0) {
            return Err(CliError::config("averaging.final_samples", "must be >= 1"));
        }
        self.pulse.validate()?;
        let o = &self.optimizer;
        if o.max_evaluations == Some(0) {
            return Err(CliError::config(
                "optimizer.max_evaluations",
                "must be >= 1",
            ));
        }
        if o.ensemble_max_evaluations == Some(0) {
            return Err(CliError::config(
                "optimizer.ensemble_max_evaluations",
                "must be >= 1",
            ));
        }
        if o.population_size < 2 {
            return Err(CliError::config(
                "optimizer.population_size",
                "must be >= 2",
            ));
        }
        if !(o.initial_step > 0.0 && o.initial_step.is_finite()) {
            return Err(CliError::config(
                "optimizer.initial_step",
                "must be positive",
            ));
        }
        if o.algorithms.is_empty() {
            return Err(CliError::config(
                "optimizer.algorithms",
                "need at least one algorithm",
            ));
        }
        if let Some(s) = &self.sweep {
            if s.values.is_empty() {
                return Err(CliError::config("sweep.values", "grid must be nonempty"));
            }
            for &v in &s.values {
                let mut b = self.bath;
                match s.parameter {
                    SweepParameter::ReorganizationEnergy => b.reorganization_energy = v,
                    SweepParameter::Temperature => b.temperature = v,
                }
                b.spec().map_err(|e| e.within("sweep.values"))?;
            }
        }
        let p = &self.pump_probe;
        if !(p.delay_step > 0.0 && p.max_delay >= 0.0) {
            return Err(CliError::config(
                "pump_probe.delay_step",
                "need step > 0 and max_delay >= 0",
            ));
        }
        if p.spectrum_delays.iter().any(|&d| !(d >= 0.0)) {
            return Err(CliError::config(
                "pump_probe.spectrum_delays",
                "delays must be >= 0",
            ));
        }
        if p.pump == PumpChoice::Optimized && p.result.is_none() && !p.reference_only {
            return Err(CliError::config(
                "pump_probe.result",
                "required for optimized pumps",
            ));
        }
        Ok(model)
    }
}
