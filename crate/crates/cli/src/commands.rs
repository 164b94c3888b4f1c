//! The CLI verbs.

use std::path::PathBuf;

use serde::{Deserialize, Serialize};

use exciton_control::optimize::{gaussian_pump, Parameterization};
use exciton_control::pulse::{synthesize_chirp, wigner_spectrogram, SampledField};
use exciton_control::spectra::{
    beat_analysis, default_probe_grid, ensemble_pump_probe, novelty_objective, reference_set,
    BeatAnalysis, ProbePolarization, ProbeSuperoperator, NOVELTY_DELAYS,
};

use crate::config::{PulseConfig, PumpChoice, RunConfig, SweepParameter, TargetConfig};
use crate::error::{CliError, CliResult};
use crate::experiment::{Constraints, Outcome, Study};
use crate::manifest::{float_rows, num, Output, RunManifest};

pub const RESULT_FILE: &str = "result.toml";
const SPECTROGRAM_MAX_ROWS: usize = 250;
const SPECTROGRAM_MAX_COLUMNS: usize = 250;

/// Command-line overrides applied on top of the config file.
#[derive(Debug, Clone, Default)]
pub struct Overrides {
    pub out: Option<PathBuf>,
    pub seed: Option<u64>,
    pub paper_scale: bool,
}

impl Overrides {
    pub fn apply(&self, mut config: RunConfig) -> RunConfig {
        if let Some(out) = &self.out {
            config.output_dir = out.clone();
        }
        if let Some(seed) = self.seed {
            config.seed = seed;
        }
        config.paper_scale |= self.paper_scale;
        config
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunRecord {
    #[serde(skip_serializing_if = "Option::is_none")]
    pub duration: Option<f64>,
    pub algorithm: String,
    pub warm_start: bool,
    pub best_value: f64,
    pub evaluations: usize,
}

/// Persisted outcome of one optimization.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ResultRecord {
    pub target: TargetConfig,
    pub constraints: Constraints,
    /// Final re-evaluation value when available, else the optimized value.
    pub fidelity: f64,
    pub optimized_value: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub final_value: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub final_samples: Option<usize>,
    pub baseline_value: f64,
    pub excitation: f64,
    pub readout_time: f64,
    pub algorithm: String,
    pub evaluations: usize,
    pub total_evaluations: usize,
    pub optimizer_seed: u64,
    pub pulse: PulseConfig,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub duration: Option<f64>,
    pub shape: Vec<f64>,
    /// (θ, φ) of the pump polarization.
    pub polarization: [f64; 2],
    pub runs: Vec<RunRecord>,
}

impl ResultRecord {
    pub fn new(o: &Outcome, pulse: &PulseConfig) -> Self {
        let r = &o.result;
        let (theta, phi) = o
            .candidate
            .polarization
            .unwrap_or_else(exciton_control::optimize::default_polarization);
        Self {
            target: o.target,
            constraints: o.constraints,
            fidelity: o.fidelity(),
            optimized_value: r.evaluation.value,
            final_value: o.final_evaluation.map(|e| e.value),
            final_samples: o.final_samples,
            baseline_value: r.baseline.value,
            excitation: r.evaluation.excitation,
            readout_time: r.evaluation.time,
            algorithm: r.best.algorithm.name().into(),
            evaluations: r.best.evaluations,
            total_evaluations: r.total_evaluations,
            optimizer_seed: o.optimizer_seed,
            pulse: pulse.clone(),
            duration: o.candidate.duration,
            shape: o.candidate.shape.clone(),
            polarization: [theta, phi],
            runs: r
                .runs
                .iter()
                .map(|s| RunRecord {
                    duration: s.duration,
                    algorithm: s.algorithm.name().into(),
                    warm_start: s.warm_start,
                    best_value: s.best_value,
                    evaluations: s.evaluations,
                })
                .collect(),
        }
    }

    pub fn load(path: &std::path::Path) -> CliResult<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| {
            CliError::config(
                "pump_probe.result",
                format!("cannot read {}: {e}", path.display()),
            )
        })?;
        toml::from_str(&text).map_err(|e| CliError::config("pump_probe.result", e))
    }

    /// Rebuild the optimized pump.
    pub fn field(&self) -> CliResult<SampledField> {
        let p: Parameterization = self.pulse.parameterization();
        Ok(p.field(
            self.duration,
            &self.shape,
            (self.polarization[0], self.polarization[1]),
        )?)
    }
}

/// Evaluation-budget plan of one protocol run, as printed by `--dry-run`.
pub fn budget_plan(study: &Study, c: Constraints) -> String {
    let p = study.pulse.parameterization();
    let durations = p.durations().len();
    let algorithms = study.optimizer.algorithms.len();
    let budget = if c.disorder {
        study.budget.ensemble
    } else {
        study.budget.single
    };
    let members = if c.disorder {
        study.averaging.samples
    } else {
        1
    };
    let directions = if c.isotropic { 3 } else { 1 };
    let evaluations = durations * algorithms * budget;
    let mut s = format!(
        "{}: {durations} durations x {algorithms} algorithms x {budget} evaluations = {evaluations} evaluations, \
         {members} members x {directions} polarizations = {} propagations",
        c.label(),
        evaluations * members * directions,
    );
    if c.disorder {
        s.push_str(&format!(
            ", final re-evaluation on {} samples",
            study.budget.final_samples
        ));
    }
    s
}

fn output(config: &RunConfig, command: &str) -> CliResult<Output> {
    let (data, _) = config.model()?;
    Output::create(&config.output_dir, RunManifest::new(command, config, &data))
}

pub fn cmd_validate(config: &RunConfig) -> CliResult<String> {
    let study = Study::from_config(config)?;
    Ok(format!(
        "config ok; {}",
        budget_plan(&study, Constraints::from(&config.averaging))
    ))
}

/// Write `result.toml`, `trace.csv`, `runs.csv`, `pulse.csv` and `spectrogram.csv`.
fn write_outcome(
    out: &mut Output,
    o: &Outcome,
    pulse: &PulseConfig,
    prefix: &str,
) -> CliResult<()> {
    let record = ResultRecord::new(o, pulse);
    out.write_toml(&format!("{prefix}{RESULT_FILE}"), &record)?;
    out.write_csv(
        &format!("{prefix}trace.csv"),
        &["evaluation", "value", "best", "params_hash"],
        o.result.best.trace.iter().map(|t| {
            vec![
                t.evaluation.to_string(),
                num(t.value),
                num(t.best),
                format!("{:016x}", t.params_hash),
            ]
        }),
    )?;
    out.write_csv(
        &format!("{prefix}runs.csv"),
        &[
            "duration",
            "algorithm",
            "warm_start",
            "best_value",
            "evaluations",
        ],
        record.runs.iter().map(|r| {
            vec![
                r.duration.map(num).unwrap_or_default(),
                r.algorithm.clone(),
                r.warm_start.to_string(),
                num(r.best_value),
                r.evaluations.to_string(),
            ]
        }),
    )?;
    let field = record.field()?;
    write_pulse(out, &field, prefix)
}

/// Time series and band-limited Wigner spectrogram of a pulse.
///
/// The spectrogram is a matrix: the header row holds the frequencies (cm⁻¹), each
/// following row starts with its time (fs).
pub fn write_pulse(out: &mut Output, field: &SampledField, prefix: &str) -> CliResult<()> {
    out.write_csv(
        &format!("{prefix}pulse.csv"),
        &["time_fs", "re_v_per_m", "im_v_per_m"],
        float_rows(field.rows().into_iter().map(|(t, re, im)| vec![t, re, im])),
    )?;
    let w = wigner_spectrogram(field, Some((field.carrier - 600.0, field.carrier + 600.0)));
    let row_stride = w.times.len().div_ceil(SPECTROGRAM_MAX_ROWS).max(1);
    let col_stride = w.frequencies.len().div_ceil(SPECTROGRAM_MAX_COLUMNS).max(1);
    let mut header = vec!["time_fs\\frequency_cm".to_string()];
    header.extend(w.frequencies.iter().step_by(col_stride).map(|f| num(*f)));
    let header_refs: Vec<&str> = header.iter().map(String::as_str).collect();
    let rows = w
        .times
        .iter()
        .zip(&w.values)
        .step_by(row_stride)
        .map(|(t, values)| {
            let mut row = vec![*t];
            row.extend(values.iter().step_by(col_stride));
            row
        });
    out.write_csv(
        &format!("{prefix}spectrogram.csv"),
        &header_refs,
        float_rows(rows),
    )
}

pub fn cmd_optimize(config: &RunConfig, dry_run: bool) -> CliResult<Option<RunManifest>> {
    let study = Study::from_config(config)?;
    let c = Constraints::from(&config.averaging);
    if dry_run {
        println!("{}", budget_plan(&study, c));
        return Ok(None);
    }
    let mut out = output(config, "optimize")?;
    out.record_seed("disorder", study.disorder_seed());
    out.record_seed("final", study.final_seed());
    let outcome = study.optimize(&config.target, 0, c, &[])?;
    out.record_seed("optimizer", outcome.optimizer_seed);
    write_outcome(&mut out, &outcome, &config.pulse, "")?;
    println!(
        "{} {}: fidelity {:.4} (baseline {:.4})",
        config.target.label(),
        c.label(),
        outcome.fidelity(),
        outcome.result.baseline.value
    );
    Ok(Some(out.finish()?))
}

pub fn cmd_ablation(config: &RunConfig, dry_run: bool) -> CliResult<Option<RunManifest>> {
    let study = Study::from_config(config)?;
    let targets = &config.ablation.targets;
    if targets.is_empty() {
        eprintln!("warning: ablation target list is empty; nothing to do");
        return Ok(None);
    }
    if dry_run {
        println!("{} targets, 8 constraint combinations each", targets.len());
        for c in Constraints::table_columns() {
            println!("{}", budget_plan(&study, c));
        }
        return Ok(None);
    }
    let mut out = output(config, "ablation")?;
    out.record_seed("disorder", study.disorder_seed());
    out.record_seed("final", study.final_seed());
    let rows = study.ablation(targets)?;
    let mut long = Vec::new();
    for (t, row) in targets.iter().zip(&rows) {
        for o in row {
            out.record_seed(
                format!("optimizer/{}/{}", t.label(), o.constraints.label()),
                o.optimizer_seed,
            );
            long.push(vec![
                t.label(),
                o.constraints.isotropic.to_string(),
                o.constraints.disorder.to_string(),
                o.constraints.decoherence.to_string(),
                num(o.fidelity()),
                num(o.result.evaluation.value),
                num(o.result.baseline.value),
                o.candidate.duration.map(num).unwrap_or_default(),
                o.result.best.algorithm.name().into(),
            ]);
        }
    }
    out.write_csv(
        "ablation.csv",
        &[
            "target",
            "isotropic",
            "disorder",
            "decoherence",
            "fidelity",
            "optimized_value",
            "baseline",
            "duration",
            "algorithm",
        ],
        long,
    )?;
    let columns: Vec<String> = Constraints::table_columns()
        .iter()
        .map(|c| c.label())
        .collect();
    let mut header = vec!["target"];
    header.extend(columns.iter().map(String::as_str));
    let mut table: Vec<Vec<String>> = Vec::new();
    for (t, row) in targets.iter().zip(&rows) {
        let mut cells = vec![t.label()];
        cells.extend(row.iter().map(|o| format!("{:.1}", 100.0 * o.fidelity())));
        table.push(cells);
    }
    for kind in [
        crate::config::TargetName::Site,
        crate::config::TargetName::Exciton,
    ] {
        let members: Vec<&Vec<Outcome>> = targets
            .iter()
            .zip(&rows)
            .filter(|(t, _)| t.kind == kind)
            .map(|(_, r)| r)
            .collect();
        if members.is_empty() {
            continue;
        }
        let mut cells = vec![format!(
            "mean_{}",
            if kind == crate::config::TargetName::Site {
                "site"
            } else {
                "exciton"
            }
        )];
        for k in 0..8 {
            let mean = members.iter().map(|r| r[k].fidelity()).sum::<f64>() / members.len() as f64;
            cells.push(format!("{:.1}", 100.0 * mean));
        }
        table.push(cells);
    }
    for r in &table {
        println!("{}", r.join("\t"));
    }
    out.write_csv("table.csv", &header, table)?;
    Ok(Some(out.finish()?))
}

pub fn cmd_sweep(config: &RunConfig, dry_run: bool) -> CliResult<Option<RunManifest>> {
    let study = Study::from_config(config)?;
    let sweep = config
        .sweep
        .as_ref()
        .ok_or_else(|| CliError::config("sweep", "missing [sweep] section"))?;
    let c = Constraints::from(&config.averaging);
    if dry_run {
        println!(
            "{} grid points over {}; each: {}",
            sweep.values.len(),
            sweep.parameter.name(),
            budget_plan(&study, c)
        );
        return Ok(None);
    }
    let mut out = output(config, "sweep")?;
    out.record_seed("disorder", study.disorder_seed());
    out.record_seed("final", study.final_seed());
    use rayon::prelude::*;
    let outcomes: Vec<Outcome> = sweep
        .values
        .par_iter()
        .enumerate()
        .map(|(i, &v)| {
            let mut bath = study.bath;
            match sweep.parameter {
                SweepParameter::ReorganizationEnergy => bath.reorganization_energy = v,
                SweepParameter::Temperature => bath.temperature = v,
            }
            study
                .with_bath(bath)
                .optimize(&config.target, i as u64, c, &[])
        })
        .collect::<CliResult<_>>()?;
    let default = sweep.parameter.default_value();
    let rows: Vec<Vec<String>> = sweep
        .values
        .iter()
        .zip(&outcomes)
        .map(|(&v, o)| {
            vec![
                num(v),
                num(o.fidelity()),
                num(1.0 - o.fidelity()),
                num(o.result.baseline.value),
                (v == default).to_string(),
            ]
        })
        .collect();
    for (v, o) in sweep.values.iter().zip(&outcomes) {
        out.record_seed(format!("optimizer/{v}"), o.optimizer_seed);
        println!(
            "{} = {v}: fidelity {:.4}",
            sweep.parameter.name(),
            o.fidelity()
        );
    }
    out.write_csv(
        "sweep.csv",
        &[
            sweep.parameter.name(),
            "fidelity",
            "error",
            "baseline",
            "is_default",
        ],
        rows,
    )?;
    Ok(Some(out.finish()?))
}

/// Fit constants and beat size of a delay trace.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BeatRecord {
    pub probe_frequency: f64,
    pub samples: usize,
    pub a_amplitude: f64,
    pub a_rate: f64,
    pub b_amplitude: f64,
    pub b_rate: f64,
    pub constant: f64,
    pub beat_magnitude: f64,
    pub rms_residual: f64,
    pub beat_amplitude: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub baseline_beat_magnitude: Option<f64>,
    /// Beat magnitude relative to the unshaped pump.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub enhancement: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NoveltyRecord {
    pub novelty: f64,
    pub reference_delays: Vec<f64>,
}

/// Normalized pump-probe trace at one probe frequency and its beat analysis.
pub fn delay_trace(
    study: &Study,
    c: Constraints,
    field: &SampledField,
    frequency: f64,
    delays: &[f64],
) -> CliResult<(Vec<f64>, BeatAnalysis)> {
    let members = study.final_members(c)?;
    let spectra = ensemble_pump_probe(&members, &study.bath_for(c), field, &[frequency], delays)?;
    let trace: Vec<f64> = spectra.iter().map(|s| s.values[0]).collect();
    let beats = beat_analysis(delays, &trace)?;
    Ok((trace, beats))
}

pub fn cmd_pump_probe(config: &RunConfig, dry_run: bool) -> CliResult<Option<RunManifest>> {
    let study = Study::from_config(config)?;
    let pp = &config.pump_probe;
    let c = Constraints {
        isotropic: true,
        ..Constraints::from(&config.averaging)
    };
    let delays: Vec<f64> = (0..)
        .map(|k| k as f64 * pp.delay_step)
        .take_while(|&d| d <= pp.max_delay + 1e-9)
        .collect();
    if dry_run {
        let members = if c.disorder {
            study.budget.final_samples
        } else {
            1
        };
        println!(
            "{} delays at {} cm^-1 over {members} members; {} spectra",
            delays.len(),
            pp.probe_frequency,
            pp.spectrum_delays.len()
        );
        return Ok(None);
    }
    let mut out = output(config, "pump-probe")?;
    out.record_seed("final", study.final_seed());
    let bath = study.bath_for(c);
    let grid = default_probe_grid();
    let probe = ProbeSuperoperator::new(&study.model, &bath, &grid, ProbePolarization::MagicAngle)?;
    let reference = reference_set(&study.model, &bath, &probe, &NOVELTY_DELAYS)?;
    out.write_csv(
        "reference.csv",
        &["frequency_cm", "lower", "upper"],
        float_rows((0..grid.len()).map(|k| vec![grid[k], reference.lower[k], reference.upper[k]])),
    )?;
    if pp.reference_only {
        return Ok(Some(out.finish()?));
    }
    let unshaped = synthesize_chirp(&gaussian_pump(0))?;
    let field = match pp.pump {
        PumpChoice::Unshaped => unshaped.clone(),
        PumpChoice::Optimized => {
            let path = pp.result.as_ref().ok_or_else(|| {
                CliError::config("pump_probe.result", "required for optimized pumps")
            })?;
            ResultRecord::load(path)?.field()?
        }
    };
    write_pulse(&mut out, &field, "pump_")?;
    let (trace, beats) = delay_trace(&study, c, &field, pp.probe_frequency, &delays)?;
    let baseline = match pp.pump {
        PumpChoice::Unshaped => None,
        PumpChoice::Optimized => {
            Some(delay_trace(&study, c, &unshaped, pp.probe_frequency, &delays)?.1)
        }
    };
    let fitted = exciton_control::spectra::double_exponential(&beats.fit, &delays);
    out.write_csv(
        "trace.csv",
        &["delay_fs", "signal", "fit", "residual"],
        float_rows(
            (0..delays.len()).map(|k| vec![delays[k], trace[k], fitted[k], beats.residual[k]]),
        ),
    )?;
    let f = beats.fit;
    let record = BeatRecord {
        probe_frequency: pp.probe_frequency,
        samples: if c.disorder {
            study.budget.final_samples
        } else {
            1
        },
        a_amplitude: f.a_amplitude,
        a_rate: f.a_rate,
        b_amplitude: f.b_amplitude,
        b_rate: f.b_rate,
        constant: f.constant,
        beat_magnitude: beats.beat_magnitude,
        rms_residual: beats.rms_residual,
        beat_amplitude: beats.amplitude(),
        baseline_beat_magnitude: baseline.as_ref().map(|b| b.beat_magnitude),
        enhancement: baseline
            .as_ref()
            .map(|b| beats.beat_magnitude / b.beat_magnitude),
    };
    if let Some(e) = record.enhancement {
        println!("beat enhancement over the unshaped pump: {e:.2}x");
    }
    out.write_toml("fit.toml", &record)?;
    let spectra = ensemble_pump_probe(
        &study.final_members(c)?,
        &bath,
        &field,
        &grid,
        &pp.spectrum_delays,
    )?;
    let mut rows = Vec::with_capacity(spectra.len() * grid.len());
    for s in &spectra {
        rows.extend(
            grid.iter()
                .zip(&s.values)
                .map(|(w, v)| vec![*w, s.delay, *v]),
        );
    }
    out.write_csv(
        "spectra.csv",
        &["frequency_cm", "delay_fs", "signal"],
        float_rows(rows),
    )?;
    let nominal = ensemble_pump_probe(
        std::slice::from_ref(&study.model),
        &bath,
        &field,
        &grid,
        &[0.0],
    )?;
    let novelty = NoveltyRecord {
        novelty: novelty_objective(&nominal[0].values, &reference),
        reference_delays: NOVELTY_DELAYS.to_vec(),
    };
    println!("novelty {:.4}", novelty.novelty);
    out.write_toml("novelty.toml", &novelty)?;
    Ok(Some(out.finish()?))
}
