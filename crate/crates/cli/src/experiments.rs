//! Batch experiment recipes: constraint-learning accuracy tables,
//! controller-equivalence RMSE, and the 7-DOF analog evaluation.
//!
//! Trials run in parallel; per-trial seeds derive deterministically from the
//! top-level seed, so results are reproducible regardless of thread count.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use manipulab::demo::{downsample, generate_demos, sample_start, sample_target, DemoConfig};
use manipulab::metrics::{nmie, summarize, trajectory_rmse, RmseOutcome, RmseSetup, Summary};
use manipulab::{
    learn_lambda, learned_model, separate_null_component, ConstraintModel, JointState,
    LambdaConfig, ManipError, Result, SeparationConfig, SerialChain,
};

/// The three planar constraints evaluated by the accuracy table.
pub const PLANAR_CONSTRAINTS: [&str; 3] = ["lambda_xy", "lambda_xtheta", "lambda_ytheta"];

/// Deterministic per-trial seed stream.
pub fn trial_seed(base: u64, trial: usize) -> u64 {
    base.wrapping_add(0x9e37_79b9_7f4a_7c15u64.wrapping_mul(trial as u64 + 1))
}

fn test_seed(train: u64) -> u64 {
    train ^ 0x7465_7374
}

/// One constraint-learning trial: train and held-out sets, separation,
/// selection-matrix estimation, and the index error on the held-out states.
pub fn nmie_trial(
    constraint: &str,
    seed: u64,
    sep_cfg: &SeparationConfig,
    lam_cfg: &LambdaConfig,
) -> Result<(f64, usize)> {
    let train = generate_demos(&DemoConfig::planar(constraint, seed))?;
    let test = generate_demos(&DemoConfig::planar(constraint, test_seed(seed)))?;
    let sep = separate_null_component(&train, sep_cfg)?;
    let est = learn_lambda(&train, &sep, 3, lam_cfg)?;
    let model = learned_model(&est)?;
    let truth = ConstraintModel::preset(constraint)?;
    let chain = SerialChain::preset("planar3")?;
    let states: Vec<JointState> = test.states().cloned().collect();
    Ok((nmie(&truth, &model, &chain, &states)?, est.k))
}

#[derive(Clone, Debug)]
pub struct Table1Row {
    pub constraint: String,
    pub summary: Summary,
    pub trial_values: Vec<f64>,
    pub ranks: Vec<usize>,
}

/// Repeats the constraint-learning experiment for every planar constraint.
pub fn table1(
    seed: u64,
    trials: usize,
    sep_cfg: &SeparationConfig,
    lam_cfg: &LambdaConfig,
) -> Result<Vec<Table1Row>> {
    PLANAR_CONSTRAINTS
        .iter()
        .map(|constraint| {
            let results: Vec<Result<(f64, usize)>> = (0..trials)
                .into_par_iter()
                .map(|t| nmie_trial(constraint, trial_seed(seed, t), sep_cfg, lam_cfg))
                .collect();
            let mut values = Vec::with_capacity(trials);
            let mut ranks = Vec::with_capacity(trials);
            for r in results {
                let (v, k) = r?;
                values.push(v);
                ranks.push(k);
            }
            Ok(Table1Row {
                constraint: constraint.to_string(),
                summary: summarize(&values)?,
                trial_values: values,
                ranks,
            })
        })
        .collect()
}

#[derive(Clone, Debug)]
pub struct RmseReport {
    pub summary: Summary,
    pub values: Vec<f64>,
    pub excluded: usize,
}

/// Learns the position constraint once, then compares gradient ascent on
/// the true and learnt manipulability over freshly drawn reaches.
pub fn rmse_eval(seed: u64, trials: usize, setup: &RmseSetup) -> Result<RmseReport> {
    let constraint = "lambda_xy";
    let cfg = DemoConfig::planar(constraint, seed);
    let train = generate_demos(&cfg)?;
    let sep = separate_null_component(&train, &SeparationConfig::default())?;
    let est = learn_lambda(&train, &sep, 3, &LambdaConfig::default())?;
    let learned = learned_model(&est)?;
    let truth = ConstraintModel::preset(constraint)?;
    let chain = SerialChain::preset("planar3")?;
    let outcomes: Vec<Result<RmseOutcome>> = (0..trials)
        .into_par_iter()
        .map(|t| {
            let mut rng = ChaCha8Rng::seed_from_u64(trial_seed(seed ^ 0x0052_4d53_45, t));
            let start = sample_start(&cfg, &mut rng)?;
            let target = sample_target(&cfg, &chain, &truth, &mut rng)?;
            trajectory_rmse(&chain, &truth, &learned, &start, &target, setup)
        })
        .collect();

    let mut values = Vec::new();
    let mut excluded = 0usize;
    for o in outcomes {
        match o? {
            RmseOutcome::Valid(v) => values.push(v),
            RmseOutcome::Excluded { .. } => excluded += 1,
        }
    }
    if values.is_empty() {
        return Err(ManipError::DegenerateData("every RMSE trial diverged".into()));
    }
    Ok(RmseReport { summary: summarize(&values)?, values, excluded })
}

#[derive(Clone, Debug)]
pub struct Spatial7Report {
    pub nmie: f64,
    pub k: usize,
    pub n_test_states: usize,
}

/// The simulated 7-DOF analog: trajectories recorded at 100 Hz are
/// down-sampled to 10 points before learning the single-axis constraint.
pub fn spatial7_eval(seed: u64, downsample_to: usize) -> Result<Spatial7Report> {
    let gen_downsampled = |s: u64| -> Result<manipulab::DemonstrationSet> {
        let mut set = generate_demos(&DemoConfig::spatial7(s))?;
        let reduced: Result<Vec<_>> =
            set.trajectories.iter().map(|t| downsample(t, downsample_to)).collect();
        set.trajectories = reduced?;
        set.config.points_per_traj = downsample_to;
        Ok(set)
    };
    let train = gen_downsampled(seed)?;
    let test = gen_downsampled(test_seed(seed))?;

    let sep = separate_null_component(&train, &SeparationConfig::default())?;
    let est = learn_lambda(&train, &sep, 3, &LambdaConfig::default())?;
    let model = learned_model(&est)?;
    let truth = ConstraintModel::preset("lambda_x")?;
    let chain = SerialChain::preset("spatial7")?;
    let states: Vec<JointState> = test.states().cloned().collect();
    Ok(Spatial7Report {
        nmie: nmie(&truth, &model, &chain, &states)?,
        k: est.k,
        n_test_states: states.len(),
    })
}
