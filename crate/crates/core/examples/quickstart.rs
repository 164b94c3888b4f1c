use exciton_control::bath::BathSpec;
use exciton_control::model::ExcitonModel;
use exciton_control::objectives::{
    ControlObjective, Ensemble, EvaluationTime, Orientation, Target, TargetKind,
};
use exciton_control::optimize::{run_protocol, Parameterization, Problem, ProtocolConfig};

fn main() -> exciton_control::Result<()> {
    let model = ExcitonModel::fmo();
    let ensemble = Ensemble::single(&model, &BathSpec::fmo_default(), EvaluationTime::default())?;
    let objective = ControlObjective::new(
        Target::maximize(TargetKind::Exciton(1)),
        ensemble,
        Orientation::Isotropic,
    )?;
    let problem = Problem::new(objective, Parameterization::crab_default());
    let result = run_protocol(&problem, &ProtocolConfig::new(200, 7))?;
    println!(
        "exciton 1: {:.3} (unshaped pump {:.3}), {} pulse, {} evaluations",
        result.evaluation.value,
        result.baseline.value,
        result
            .best
            .duration
            .map_or("chirped".to_string(), |d| format!("{d} fs")),
        result.total_evaluations
    );
    Ok(())
}
