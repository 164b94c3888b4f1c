use std::path::Path;
use std::process::Command;

use exciton_control_cli::config::{RunConfig, SweepConfig, SweepParameter, TargetConfig};
use exciton_control_cli::manifest::{Output, RunManifest};

const BIN: &str = env!("CARGO_BIN_EXE_excitonctl");

fn run(args: &[&str]) -> (i32, String, String) {
    let out = Command::new(BIN)
        .args(args)
        .env_remove("EXCITON_WORKERS")
        .output()
        .expect("binary runs");
    (
        out.status.code().unwrap_or(-1),
        String::from_utf8_lossy(&out.stdout).into_owned(),
        String::from_utf8_lossy(&out.stderr).into_owned(),
    )
}

fn write_config(dir: &Path, name: &str, config: &RunConfig) -> String {
    let path = dir.join(name);
    std::fs::write(&path, config.to_toml_string()).unwrap();
    path.display().to_string()
}

/// A few-second optimization: one duration, unitary, single oriented complex.
fn tiny(dir: &Path) -> RunConfig {
    let mut c = RunConfig {
        seed: 11,
        output_dir: dir.join("out"),
        ..RunConfig::default()
    };
    c.target = TargetConfig::site(3);
    c.averaging.isotropic = false;
    c.averaging.disorder = false;
    c.averaging.decoherence = false;
    c.pulse.durations = vec![150.0];
    c.optimizer.max_evaluations = Some(30);
    c
}

#[test]
fn config_round_trip() {
    let mut c = RunConfig::default();
    c.sweep = Some(SweepConfig {
        parameter: SweepParameter::Temperature,
        values: vec![1.0, 77.0, 300.0],
    });
    c.averaging.final_samples = Some(7);
    c.ablation.targets.push(TargetConfig::coherence(1, 2));
    let text = c.to_toml_string();
    let back = RunConfig::from_toml_str(&text).unwrap();
    assert_eq!(back, c);
    assert_eq!(
        RunConfig::from_toml_str(&back.to_toml_string()).unwrap(),
        back
    );
    assert_eq!(RunConfig::from_toml_str("").unwrap(), RunConfig::default());
}

#[test]
fn schema_errors_name_the_field() {
    let e = RunConfig::from_toml_str("[bath]\ntemprature = 4.0\n")
        .unwrap_err()
        .to_string();
    assert!(e.contains("temprature"), "{e}");
    let c = RunConfig::from_toml_str("[target]\nkind = \"site\"\n").unwrap();
    let e = c.validate().unwrap_err().to_string();
    assert!(e.contains("target.index"), "{e}");
    let c = RunConfig::from_toml_str("[optimizer]\npopulation_size = 1\n").unwrap();
    assert!(c
        .validate()
        .unwrap_err()
        .to_string()
        .contains("optimizer.population_size"));
}

#[test]
fn exit_codes() {
    let dir = tempfile::tempdir().unwrap();
    std::fs::write(dir.path().join("bad.toml"), "nonsense = true\n").unwrap();
    let bad = dir.path().join("bad.toml").display().to_string();
    assert_eq!(run(&["validate", "--config", &bad]).0, 2);
    assert_eq!(
        run(&["optimize", "--config", "/nonexistent/config.toml"]).0,
        2
    );
    let good = write_config(dir.path(), "good.toml", &tiny(dir.path()));
    let (code, stdout, _) = run(&["validate", "--config", &good]);
    assert_eq!(code, 0);
    assert!(stdout.contains("config ok"));
    let code = Command::new(BIN)
        .args(["validate", "--config", &good])
        .env("EXCITON_WORKERS", "many")
        .status()
        .unwrap()
        .code();
    assert_eq!(code, Some(2));
}

#[test]
fn numeric_failure_exit_code() {
    let dir = tempfile::tempdir().unwrap();
    let mut c = tiny(dir.path());
    c.pump_probe.max_delay = 100.0;
    let path = write_config(dir.path(), "pp.toml", &c);
    let (code, _, stderr) = run(&["pump-probe", "--config", &path]);
    assert_eq!(code, 3, "{stderr}");
    assert!(stderr.contains("numeric failure"));
}

#[test]
fn dry_run_prints_plan_without_output() {
    let dir = tempfile::tempdir().unwrap();
    let c = tiny(dir.path());
    let path = write_config(dir.path(), "c.toml", &c);
    let (code, stdout, _) = run(&["optimize", "--config", &path, "--dry-run"]);
    assert_eq!(code, 0);
    assert!(
        stdout.contains("1 durations x 2 algorithms x 30 evaluations"),
        "{stdout}"
    );
    assert!(!c.output_dir.exists());
    let (_, stdout, _) = run(&["optimize", "--config", &path, "--dry-run", "--paper-scale"]);
    assert!(
        stdout.contains("x 30 evaluations"),
        "explicit budget wins: {stdout}"
    );
    let mut d = RunConfig {
        output_dir: c.output_dir.clone(),
        ..RunConfig::default()
    };
    d.pulse.durations = vec![200.0, 300.0];
    let path = write_config(dir.path(), "d.toml", &d);
    let (_, stdout, _) = run(&["optimize", "--config", &path, "--dry-run", "--paper-scale"]);
    assert!(
        stdout.contains("2 durations x 2 algorithms x 1000 evaluations"),
        "{stdout}"
    );
    assert!(
        stdout.contains("final re-evaluation on 1000 samples"),
        "{stdout}"
    );
}

#[test]
fn optimize_writes_stamped_files_deterministically() {
    let dir = tempfile::tempdir().unwrap();
    let c = tiny(dir.path());
    let path = write_config(dir.path(), "c.toml", &c);
    let first = dir.path().join("first");
    let second = dir.path().join("second");
    for out in [&first, &second] {
        let (code, _, stderr) = run(&[
            "optimize",
            "--config",
            &path,
            "--out",
            out.to_str().unwrap(),
            "--workers",
            "2",
        ]);
        assert_eq!(code, 0, "{stderr}");
    }
    let manifest: RunManifest =
        toml::from_str(&std::fs::read_to_string(first.join("manifest.toml")).unwrap()).unwrap();
    for name in [
        "result.toml",
        "trace.csv",
        "runs.csv",
        "pulse.csv",
        "spectrogram.csv",
    ] {
        assert!(
            manifest.files.iter().any(|f| f == name),
            "{name} missing from index"
        );
        let a = std::fs::read_to_string(first.join(name)).unwrap();
        let b = std::fs::read_to_string(second.join(name)).unwrap();
        assert_eq!(a, b, "{name} differs between identical runs");
        assert!(
            a.starts_with(&format!("# manifest: {}", manifest.manifest_hash)),
            "{name} not stamped"
        );
    }
    let trace = std::fs::read_to_string(first.join("trace.csv")).unwrap();
    assert_eq!(trace.lines().count(), 2 + 30);
    let pulse = std::fs::read_to_string(first.join("pulse.csv")).unwrap();
    assert!(pulse.lines().skip(1).all(|l| l.split(',').count() == 3));
    let spectrogram = std::fs::read_to_string(first.join("spectrogram.csv")).unwrap();
    let rows: Vec<&str> = spectrogram.lines().skip(1).collect();
    let width = rows[0].split(',').count();
    assert!(width > 2 && rows.iter().all(|l| l.split(',').count() == width));
    let record: exciton_control_cli::commands::ResultRecord =
        toml::from_str(&std::fs::read_to_string(first.join("result.toml")).unwrap()).unwrap();
    assert!(record.fidelity > record.baseline_value);
    assert_eq!(record.runs.len(), 2);
    let entries: Vec<_> = std::fs::read_dir(dir.path())
        .unwrap()
        .map(|e| e.unwrap().file_name())
        .collect();
    assert!(
        !entries.iter().any(|e| e == "out"),
        "--out must replace the configured directory"
    );
}

#[test]
fn seed_override_changes_results() {
    let dir = tempfile::tempdir().unwrap();
    let c = tiny(dir.path());
    let path = write_config(dir.path(), "c.toml", &c);
    let a = dir.path().join("a");
    let b = dir.path().join("b");
    run(&["optimize", "--config", &path, "--out", a.to_str().unwrap()]);
    run(&[
        "optimize",
        "--config",
        &path,
        "--out",
        b.to_str().unwrap(),
        "--seed",
        "12",
    ]);
    let ta = std::fs::read_to_string(a.join("trace.csv")).unwrap();
    let tb = std::fs::read_to_string(b.join("trace.csv")).unwrap();
    assert_ne!(ta, tb);
}

#[test]
fn empty_ablation_is_a_warning() {
    let dir = tempfile::tempdir().unwrap();
    let mut c = tiny(dir.path());
    c.ablation.targets.clear();
    let path = write_config(dir.path(), "c.toml", &c);
    let (code, _, stderr) = run(&["ablation", "--config", &path]);
    assert_eq!(code, 0);
    assert!(stderr.contains("warning"));
    assert!(!c.output_dir.exists());
}

#[test]
fn single_point_sweep_is_one_row() {
    let dir = tempfile::tempdir().unwrap();
    let mut c = tiny(dir.path());
    c.averaging.decoherence = true;
    c.optimizer.max_evaluations = Some(10);
    c.sweep = Some(SweepConfig {
        parameter: SweepParameter::ReorganizationEnergy,
        values: vec![35.0],
    });
    let path = write_config(dir.path(), "c.toml", &c);
    let (code, _, stderr) = run(&["sweep", "--config", &path]);
    assert_eq!(code, 0, "{stderr}");
    let text = std::fs::read_to_string(c.output_dir.join("sweep.csv")).unwrap();
    let lines: Vec<&str> = text.lines().collect();
    assert_eq!(lines.len(), 3);
    assert!(lines[1].starts_with("reorganization_energy,"));
    assert!(lines[2].ends_with(",true"));
}

#[test]
fn pump_probe_reference_only() {
    let dir = tempfile::tempdir().unwrap();
    let mut c = tiny(dir.path());
    c.pump_probe.reference_only = true;
    let path = write_config(dir.path(), "c.toml", &c);
    let (code, _, stderr) = run(&["pump-probe", "--config", &path]);
    assert_eq!(code, 0, "{stderr}");
    let text = std::fs::read_to_string(c.output_dir.join("reference.csv")).unwrap();
    assert_eq!(text.lines().count(), 2 + 361);
    assert!(!c.output_dir.join("trace.csv").exists());
}

#[test]
fn outputs_stay_inside_the_directory() {
    let dir = tempfile::tempdir().unwrap();
    let c = tiny(dir.path());
    let m = RunManifest::new("test", &c, "data");
    let mut out = Output::create(&dir.path().join("o"), m).unwrap();
    assert!(out
        .write_csv("../escape.csv", &["a"], Vec::<Vec<String>>::new())
        .is_err());
    assert!(out
        .write_csv("/tmp/escape.csv", &["a"], Vec::<Vec<String>>::new())
        .is_err());
    assert!(out
        .write_csv("ok.csv", &["a"], vec![vec!["1".to_string()]])
        .is_ok());
    assert!(!dir.path().join("escape.csv").exists());
}

#[test]
fn manifest_hash_ignores_wall_clock() {
    let c = RunConfig::default();
    let a = RunManifest::new("optimize", &c, "data");
    std::thread::sleep(std::time::Duration::from_millis(5));
    let b = RunManifest::new("optimize", &c, "data");
    assert_eq!(a.manifest_hash, b.manifest_hash);
    assert_ne!(
        a.manifest_hash,
        RunManifest::new("optimize", &c, "other data").manifest_hash
    );
    assert_ne!(
        a.manifest_hash,
        RunManifest::new("sweep", &c, "data").manifest_hash
    );
}

#[test]
fn shipped_configs_validate() {
    let dir = Path::new(env!("CARGO_MANIFEST_DIR")).join("../../configs");
    let mut count = 0;
    for entry in std::fs::read_dir(&dir).unwrap() {
        let path = entry.unwrap().path();
        if path.extension().is_some_and(|e| e == "toml") {
            let config =
                RunConfig::load(&path).unwrap_or_else(|e| panic!("{}: {e}", path.display()));
            config
                .validate()
                .unwrap_or_else(|e| panic!("{}: {e}", path.display()));
            count += 1;
        }
    }
    assert!(count >= 5);
}
