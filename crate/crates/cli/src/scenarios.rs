//! Singular-start comparison scenarios: the same reach executed under the
//! zero policy, learnt-manipulability gradient ascent, and a joint-space
//! point attractor.

use manipulab::demo::{generate_demos, DemoConfig};
use manipulab::{
    learn_lambda, learned_model, separate_null_component, ConstraintModel, GradScheme,
    JointState, LambdaConfig, NullPolicy, PinvPolicy, Result, SeparationConfig, SimOutcome,
    SimParams, SerialChain, TaskPolicy, TaskPose, TrajectoryMeta, simulate,
};

/// A fully pinned comparison scenario.
#[derive(Clone, Debug)]
pub struct ScenarioSpec {
    pub name: &'static str,
    pub constraint: &'static str,
    pub q0_deg: [f64; 3],
    pub target: (f64, f64),
    pub pinv: PinvPolicy,
    pub attractor_psi_deg: [f64; 3],
    pub attractor_alpha: f64,
    /// Gradient-ascent gain; matched to the escape stride needed to clear
    /// the truncation band in one step.
    pub mg_alpha: f64,
    pub mg_step: f64,
    pub mg_scheme: GradScheme,
    pub steps: usize,
    pub dt: f64,
}

/// Singular start under the truncating pseudoinverse.
pub fn compare1() -> ScenarioSpec {
    ScenarioSpec {
        name: "compare1",
        constraint: "lambda_xy",
        q0_deg: [90.0 + 1e-12, 360.0, -360.0],
        target: (0.0, 0.0),
        pinv: PinvPolicy::truncate(),
        attractor_psi_deg: [-190.0, 9.0, -307.0],
        attractor_alpha: 1.0,
        mg_alpha: 4.0,
        mg_step: 1e-6,
        mg_scheme: GradScheme::Forward,
        steps: 200,
        dt: 0.02,
    }
}

/// Near-singular start with no singular-value handling at all.
pub fn compare2() -> ScenarioSpec {
    ScenarioSpec {
        name: "compare2",
        constraint: "lambda_xy",
        q0_deg: [90.0, -180.0, -180.0 + 1e-10],
        target: (0.0, 0.0),
        pinv: PinvPolicy::plain(),
        attractor_psi_deg: [-33.0, -283.0, 193.0],
        attractor_alpha: 1.0,
        mg_alpha: 4.0,
        mg_step: 1e-6,
        mg_scheme: GradScheme::Forward,
        steps: 200,
        dt: 0.02,
    }
}

pub fn scenario_by_name(name: &str) -> Result<ScenarioSpec> {
    match name {
        "compare1" => Ok(compare1()),
        "compare2" => Ok(compare2()),
        other => Err(manipulab::ManipError::InvalidConfig(format!(
            "unknown scenario '{other}' (expected 'compare1' or 'compare2')"
        ))),
    }
}

/// All three rollouts plus the model the gradient policy ascended.
#[derive(Debug)]
pub struct CompareOutcome {
    pub zero: SimOutcome,
    pub manip: SimOutcome,
    pub attractor: SimOutcome,
    pub learned: ConstraintModel,
}

/// Learns the constraint from a fresh demonstration set, then runs the
/// scenario under all three null-space policies. The manipulability trace
/// always records the true model.
pub fn run_compare(spec: &ScenarioSpec, seed: u64) -> Result<CompareOutcome> {
    let chain = SerialChain::preset("planar3")?;
    let true_model = ConstraintModel::preset(spec.constraint)?;

    let demos = generate_demos(&DemoConfig::planar(spec.constraint, seed))?;
    let sep = separate_null_component(&demos, &SeparationConfig::default())?;
    let est = learn_lambda(&demos, &sep, 3, &LambdaConfig::default())?;
    let learned = learned_model(&est)?;

    let q0 = JointState::from_degrees(&spec.q0_deg)?;
    let task = TaskPolicy::new(TaskPose::from_components(spec.target.0, spec.target.1, 0.0));
    let psi = JointState::from_degrees(&spec.attractor_psi_deg)?;

    let run = |null: NullPolicy| -> Result<SimOutcome> {
        simulate(
            &chain,
            &true_model,
            &task,
            &null,
            &spec.pinv,
            &q0,
            spec.steps,
            spec.dt,
            &SimParams::default(),
            Some(&true_model),
            TrajectoryMeta::new(spec.constraint, "planar3", null.kind(), seed),
        )
    };

    Ok(CompareOutcome {
        zero: run(NullPolicy::Zero)?,
        manip: run(NullPolicy::manip_gradient(
            learned.clone(),
            spec.mg_step,
            spec.mg_alpha,
            spec.mg_scheme,
        )?)?,
        attractor: run(NullPolicy::point_attractor(psi, spec.attractor_alpha)?)?,
        learned,
    })
}
