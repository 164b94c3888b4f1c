use exciton_control::bath::BathSpec;
use exciton_control::model::ExcitonModel;
use exciton_control::objectives::{
    ControlObjective, Ensemble, EvaluationTime, Orientation, Target, TargetKind,
};
use exciton_control::optimize::{
    cma_es, run_protocol, subplex_local, Algorithm, OptimizerConfig, Parameterization, Problem,
    ProtocolConfig,
};

fn sphere(x: &[f64]) -> f64 {
    -x.iter().map(|v| v * v).sum::<f64>()
}

fn rosenbrock(x: &[f64]) -> f64 {
    -(100.0 * (x[1] - x[0] * x[0]).powi(2) + (1.0 - x[0]).powi(2))
}

fn check_trace(r: &exciton_control::optimize::OptimizationResult, budget: usize) {
    assert!(r.evaluations <= budget);
    assert_eq!(r.trace.len(), r.evaluations);
    let max = r
        .trace
        .iter()
        .map(|e| e.value)
        .fold(f64::NEG_INFINITY, f64::max);
    assert_eq!(max, r.best_value);
    for w in r.trace.windows(2) {
        assert!(w[1].best >= w[0].best);
    }
}

#[test]
fn sphere_ten_dimensions() {
    for alg in [Algorithm::CmaEs, Algorithm::SubplexLocal] {
        let cfg = OptimizerConfig::new(alg, 5000, 7);
        let x0 = vec![1.0; 10];
        let r = match alg {
            Algorithm::CmaEs => cma_es(&sphere, &x0, &cfg),
            Algorithm::SubplexLocal => subplex_local(&sphere, &x0, &cfg),
        }
        .unwrap();
        println!(
            "{}: {:e} after {} evaluations",
            alg.name(),
            -r.best_value,
            r.evaluations
        );
        assert!(-r.best_value <= 1e-6);
        check_trace(&r, 5000);
    }
}

#[test]
fn one_dimensional_quadratic() {
    let f = |x: &[f64]| -(x[0] - 3.0).powi(2);
    let r = cma_es(&f, &[0.0], &OptimizerConfig::new(Algorithm::CmaEs, 2000, 1)).unwrap();
    assert!((r.best_parameters[0] - 3.0).abs() < 1e-4);
    let r = subplex_local(
        &f,
        &[0.0],
        &OptimizerConfig::new(Algorithm::SubplexLocal, 2000, 1),
    )
    .unwrap();
    assert!((r.best_parameters[0] - 3.0).abs() < 1e-6);
}

#[test]
fn rosenbrock_two_dimensions() {
    let r = subplex_local(
        &rosenbrock,
        &[-1.2, 1.0],
        &OptimizerConfig::new(Algorithm::SubplexLocal, 5000, 0),
    )
    .unwrap();
    assert!(-r.best_value <= 1e-3, "{}", r.best_value);
    let r = cma_es(
        &rosenbrock,
        &[-1.2, 1.0],
        &OptimizerConfig::new(Algorithm::CmaEs, 5000, 0),
    )
    .unwrap();
    assert!(-r.best_value <= 1e-3, "{}", r.best_value);
}

#[test]
fn budget_is_a_hard_cap() {
    for budget in [1, 7, 33, 101] {
        let r = subplex_local(
            &rosenbrock,
            &[-1.2, 1.0],
            &OptimizerConfig::new(Algorithm::SubplexLocal, budget, 0),
        )
        .unwrap();
        assert_eq!(r.evaluations, budget);
        check_trace(&r, budget);
        let r = cma_es(
            &sphere,
            &[1.0; 5],
            &OptimizerConfig::new(Algorithm::CmaEs, budget, 0),
        )
        .unwrap();
        assert_eq!(r.evaluations, budget);
        check_trace(&r, budget);
    }
    assert!(cma_es(
        &sphere,
        &[1.0],
        &OptimizerConfig::new(Algorithm::CmaEs, 0, 0)
    )
    .is_err());
}

#[test]
fn identical_seeds_identical_traces() {
    let cfg = OptimizerConfig::new(Algorithm::CmaEs, 1500, 42);
    let a = cma_es(&rosenbrock, &[0.0, 0.0], &cfg).unwrap();
    let b = cma_es(&rosenbrock, &[0.0, 0.0], &cfg).unwrap();
    assert_eq!(a, b);
    let other = cma_es(
        &rosenbrock,
        &[0.0, 0.0],
        &OptimizerConfig {
            seed: 43,
            ..cfg.clone()
        },
    )
    .unwrap();
    assert_ne!(a.trace, other.trace);
    let cfg = OptimizerConfig::new(Algorithm::SubplexLocal, 1500, 42);
    assert_eq!(
        subplex_local(&rosenbrock, &[0.0, 0.0], &cfg).unwrap(),
        subplex_local(&rosenbrock, &[0.0, 0.0], &cfg).unwrap()
    );
}

#[test]
fn non_finite_values_are_worst() {
    let f = |x: &[f64]| {
        if x[0] < 0.5 {
            f64::NAN
        } else {
            -(x[0] - 2.0).powi(2)
        }
    };
    for alg in [Algorithm::CmaEs, Algorithm::SubplexLocal] {
        let cfg = OptimizerConfig::new(alg, 3000, 3);
        let r = match alg {
            Algorithm::CmaEs => cma_es(&f, &[1.0], &cfg),
            Algorithm::SubplexLocal => subplex_local(&f, &[1.0], &cfg),
        }
        .unwrap();
        assert!((r.best_parameters[0] - 2.0).abs() < 1e-3);
        assert!(r.trace.iter().all(|e| !e.value.is_nan()));
    }
}

#[test]
fn protocol_runs_every_duration_and_algorithm() {
    let model = ExcitonModel::fmo();
    let bath = BathSpec::uncoupled();
    let ensemble = Ensemble::single(&model, &bath, EvaluationTime::default()).unwrap();
    let objective = ControlObjective::new(
        Target::maximize(TargetKind::Site(1)),
        ensemble,
        Orientation::Oriented,
    )
    .unwrap();
    let mut param = Parameterization::crab_default();
    if let Parameterization::Crab { durations, .. } = &mut param {
        durations.truncate(2);
    }
    let problem = Problem::new(objective, param);
    assert_eq!(problem.initial_point().len(), 40);
    let cfg = ProtocolConfig::new(60, 5);
    let r = run_protocol(&problem, &cfg).unwrap();
    assert_eq!(r.runs.len(), 4);
    assert_eq!(r.total_evaluations, 240);
    assert!(r.runs.iter().all(|s| s.evaluations <= 60));
    assert!(
        r.best.best_value
            >= r.runs
                .iter()
                .map(|s| s.best_value)
                .fold(f64::NEG_INFINITY, f64::max)
    );
    assert!((r.evaluation.score - r.best.best_value).abs() < 1e-12);
    assert!(r.evaluation.value > 0.0 && r.evaluation.value <= 1.0);
    assert!(r.baseline.value > 0.0);
    let again = run_protocol(&problem, &cfg).unwrap();
    assert_eq!(r, again);
}
