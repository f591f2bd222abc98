//! Evaluation metrics: normalised manipulability index error, controller
//! equivalence RMSE, and summary statistics.

use crate::chains::{JointState, SerialChain, TaskPose};
use crate::constraint::{ConstraintModel, PinvPolicy};
use crate::error::{ManipError, Result};
use crate::policy::{GradScheme, NullPolicy, TaskPolicy};
use crate::sim::{simulate, SimParams, SimStatus, TrajectoryMeta};

/// Mean and sample standard deviation (n-1 denominator); a single value
/// reports zero deviation.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Summary {
    pub mean: f64,
    pub sd: f64,
    pub n: usize,
}

pub fn summarize(values: &[f64]) -> Result<Summary> {
    if values.is_empty() {
        return Err(ManipError::EmptyInput("summary of no values".into()));
    }
    let n = values.len();
    let mean = values.iter().sum::<f64>() / n as f64;
    let sd = if n == 1 {
        0.0
    } else {
        (values.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / (n - 1) as f64).sqrt()
    };
    Ok(Summary { mean, sd, n })
}

/// Evaluation of a learnt model on a test-state set.
#[derive(Clone, Debug, PartialEq)]
pub struct EvalReport {
    pub nmie: f64,
    /// Controller-equivalence RMSE when trajectories were compared.
    pub rmse: Option<Summary>,
    /// Population variance of the true index over the test states.
    pub v_variance: f64,
    pub n_points: usize,
}

impl std::fmt::Display for EvalReport {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        writeln!(f, "nmie       = {:.6e}", self.nmie)?;
        writeln!(f, "v_variance = {:.6e}", self.v_variance)?;
        write!(f, "n_points   = {}", self.n_points)?;
        if let Some(r) = &self.rmse {
            write!(f, "\nrmse       = {:.6e} +/- {:.6e} ({} trials)", r.mean, r.sd, r.n)?;
        }
        Ok(())
    }
}

/// Normalised manipulability index error over a test-state set:
/// mean squared difference between true and learnt indices, divided by the
/// population variance of the true values.
pub fn nmie(
    true_model: &ConstraintModel,
    learned: &ConstraintModel,
    chain: &SerialChain,
    states: &[JointState],
) -> Result<f64> {
    Ok(eval_report(true_model, learned, chain, states)?.nmie)
}

/// Full evaluation record including the normalisation variance.
pub fn eval_report(
    true_model: &ConstraintModel,
    learned: &ConstraintModel,
    chain: &SerialChain,
    states: &[JointState],
) -> Result<EvalReport> {
    if states.len() < 2 {
        return Err(ManipError::EmptyInput("NMIE needs at least two test states".into()));
    }
    let v: Vec<f64> = states
        .iter()
        .map(|q| true_model.manipulability(chain, q))
        .collect::<Result<_>>()?;
    let v_hat: Vec<f64> = states
        .iter()
        .map(|q| learned.manipulability(chain, q))
        .collect::<Result<_>>()?;
    let n = v.len() as f64;
    let mean = v.iter().sum::<f64>() / n;
    let variance = v.iter().map(|x| (x - mean) * (x - mean)).sum::<f64>() / n;
    Ok(EvalReport {
        nmie: nmie_from_values(&v, &v_hat)?,
        rmse: None,
        v_variance: variance,
        n_points: v.len(),
    })
}

/// The same error from precomputed index values.
pub fn nmie_from_values(v: &[f64], v_hat: &[f64]) -> Result<f64> {
    if v.len() != v_hat.len() {
        return Err(ManipError::DimensionMismatch("index vectors differ in length".into()));
    }
    let n = v.len() as f64;
    let mean = v.iter().sum::<f64>() / n;
    let variance = v.iter().map(|x| (x - mean) * (x - mean)).sum::<f64>() / n;
    if variance <= 0.0 {
        return Err(ManipError::ZeroVariance);
    }
    let sq_err: f64 = v.iter().zip(v_hat.iter()).map(|(a, b)| (a - b) * (a - b)).sum();
    Ok(sq_err / (n * variance))
}

/// Configuration of a controller-equivalence rollout pair.
#[derive(Clone, Copy, Debug)]
pub struct RmseSetup {
    pub steps: usize,
    pub dt: f64,
    pub grad_step: f64,
    pub alpha: f64,
    pub scheme: GradScheme,
    pub pinv: PinvPolicy,
}

impl Default for RmseSetup {
    fn default() -> Self {
        Self {
            steps: 100,
            dt: 0.02,
            grad_step: 1e-6,
            alpha: 1.0,
            scheme: GradScheme::Central,
            pinv: PinvPolicy::truncate(),
        }
    }
}

/// Result of one RMSE trial; diverged rollouts are excluded with a flag.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum RmseOutcome {
    Valid(f64),
    Excluded { true_status: SimStatus, learned_status: SimStatus },
}

/// Simulates the same reach twice, ascending the true and the learnt
/// manipulability respectively (the task-space term always uses the true
/// constraint), and reports the joint-space RMSE between the state paths.
pub fn trajectory_rmse(
    chain: &SerialChain,
    true_model: &ConstraintModel,
    learned: &ConstraintModel,
    start: &JointState,
    target: &TaskPose,
    setup: &RmseSetup,
) -> Result<RmseOutcome> {
    let task = TaskPolicy::new(*target);
    let run = |grad_model: &ConstraintModel, kind: &str| {
        let null = NullPolicy::manip_gradient(grad_model.clone(), setup.grad_step, setup.alpha, setup.scheme)?;
        simulate(
            chain,
            true_model,
            &task,
            &null,
            &setup.pinv,
            start,
            setup.steps,
            setup.dt,
            &SimParams::default(),
            Some(true_model),
            TrajectoryMeta::new("", "", kind, 0),
        )
    };
    let with_true = run(true_model, "manip_gradient_true")?;
    let with_learned = run(learned, "manip_gradient_learned")?;

    if with_true.status != SimStatus::Completed || with_learned.status != SimStatus::Completed {
        return Ok(RmseOutcome::Excluded {
            true_status: with_true.status,
            learned_status: with_learned.status,
        });
    }

    let a = &with_true.trajectory.states;
    let b = &with_learned.trajectory.states;
    debug_assert_eq!(a.len(), b.len());
    let dof = chain.dof();
    let mut sq = 0.0;
    for (qa, qb) in a.iter().zip(b.iter()) {
        sq += (qa.angles() - qb.angles()).norm_squared();
    }
    Ok(RmseOutcome::Valid((sq / (a.len() * dof) as f64).sqrt()))
}
