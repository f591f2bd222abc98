//! Resolved-rate execution: `u = A^+ b + N pi`, integrated with explicit
//! Euler at a fixed rate.

use nalgebra::DVector;

use crate::chains::{JointState, SerialChain};
use crate::constraint::{nullspace_projector, pseudoinverse, ConstraintModel, PinvPolicy};
use crate::error::{ManipError, Result};
use crate::policy::{NullPolicy, TaskPolicy};

/// Identifying metadata carried along with a recorded trajectory.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct TrajectoryMeta {
    pub constraint_id: String,
    pub chain_name: String,
    pub policy_kind: String,
    pub seed: u64,
}

impl TrajectoryMeta {
    pub fn new(constraint_id: &str, chain_name: &str, policy_kind: &str, seed: u64) -> Self {
        Self {
            constraint_id: constraint_id.into(),
            chain_name: chain_name.into(),
            policy_kind: policy_kind.into(),
            seed,
        }
    }
}

/// A sequence of states and the joint-velocity actions taken between them.
/// `states.len()` is either `actions.len()` or `actions.len() + 1`.
#[derive(Clone, Debug)]
pub struct Trajectory {
    pub states: Vec<JointState>,
    pub actions: Vec<DVector<f64>>,
    pub dt: f64,
    pub meta: TrajectoryMeta,
}

impl Trajectory {
    /// Keeps exactly the first `n` (state, action) pairs.
    pub fn truncate_pairs(&mut self, n: usize) {
        self.states.truncate(n);
        self.actions.truncate(n);
    }

    pub fn len(&self) -> usize {
        self.states.len()
    }

    pub fn is_empty(&self) -> bool {
        self.states.is_empty()
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum SimStatus {
    Completed,
    Stuck,
    Diverged,
    SingularAbort,
}

/// Result of one simulation run; `manip_trace` has one entry per state.
#[derive(Clone, Debug)]
pub struct SimOutcome {
    pub trajectory: Trajectory,
    pub status: SimStatus,
    pub manip_trace: Vec<f64>,
}

/// Detector thresholds. The stuck and completion tolerances are heuristic
/// and deliberately configurable.
#[derive(Clone, Copy, Debug)]
pub struct SimParams {
    /// Any |q_i| beyond this (or a non-finite state) counts as divergence.
    pub divergence_threshold: f64,
    /// Speed below which a step counts toward stuck detection.
    pub stuck_speed: f64,
    /// Consecutive slow steps that trigger stuck status.
    pub stuck_window: usize,
    /// Constrained-coordinate error below which the task counts as done.
    pub task_tolerance: f64,
}

impl Default for SimParams {
    fn default() -> Self {
        Self {
            divergence_threshold: 1e9,
            stuck_speed: 1e-12,
            stuck_window: 5,
            task_tolerance: 1e-3,
        }
    }
}

/// One resolved-rate control action: `u = A^+ b + N pi`.
///
/// No clipping or sanitization is applied; divergence must stay observable.
pub fn control_step(
    chain: &SerialChain,
    model: &ConstraintModel,
    task: &TaskPolicy,
    null: &NullPolicy,
    pinv: &PinvPolicy,
    q: &JointState,
) -> Result<DVector<f64>> {
    let a = model.constraint_matrix(chain, q)?;
    let a_pinv = pseudoinverse(&a, pinv)?;
    let b = task.evaluate(chain, model, q)?;
    let n = nullspace_projector(&a, pinv)?;
    let pi = null.evaluate(chain, q)?;
    Ok(a_pinv * b + n * pi)
}

/// Integrates `steps` explicit-Euler control steps from `q0`.
///
/// `trace_model` selects the model whose manipulability is recorded per
/// state (normally the true constraint); the executing model is used when
/// it is absent.
#[allow(clippy::too_many_arguments)]
pub fn simulate(
    chain: &SerialChain,
    model: &ConstraintModel,
    task: &TaskPolicy,
    null: &NullPolicy,
    pinv: &PinvPolicy,
    q0: &JointState,
    steps: usize,
    dt: f64,
    params: &SimParams,
    trace_model: Option<&ConstraintModel>,
    meta: TrajectoryMeta,
) -> Result<SimOutcome> {
    if steps == 0 {
        return Err(ManipError::InvalidConfig("simulation needs at least one step".into()));
    }
    if !(dt > 0.0) {
        return Err(ManipError::InvalidConfig("dt must be positive".into()));
    }
    let tracer = trace_model.unwrap_or(model);

    let mut states = Vec::with_capacity(steps + 1);
    let mut actions = Vec::with_capacity(steps);
    let mut trace = Vec::with_capacity(steps + 1);
    let mut status = SimStatus::Completed;
    let mut slow_steps = 0usize;

    let mut q = q0.clone();
    states.push(q.clone());
    trace.push(trace_value(tracer, chain, &q)?);

    for _ in 0..steps {
        let u = match control_step(chain, model, task, null, pinv, &q) {
            Ok(u) => u,
            Err(ManipError::SingularConstraint) => {
                status = SimStatus::SingularAbort;
                break;
            }
            Err(e) => return Err(e),
        };

        if u.iter().any(|v| !v.is_finite()) {
            status = SimStatus::Diverged;
            break;
        }

        let speed = u.norm();
        let task_err = task.evaluate(chain, model, &q)?.norm();
        if speed < params.stuck_speed && task_err > params.task_tolerance {
            slow_steps += 1;
            if slow_steps >= params.stuck_window {
                status = SimStatus::Stuck;
                break;
            }
        } else {
            slow_steps = 0;
        }

        let next = q.angles() + dt * &u;
        actions.push(u);

        if next.iter().any(|v| !v.is_finite() || v.abs() > params.divergence_threshold) {
            // Record the diverged state when it is still representable.
            if next.iter().all(|v| v.is_finite()) {
                let diverged = JointState::new(next)?;
                trace.push(trace_value(tracer, chain, &diverged).unwrap_or(f64::NAN));
                states.push(diverged);
            }
            status = SimStatus::Diverged;
            break;
        }

        q = JointState::new(next)?;
        states.push(q.clone());
        trace.push(trace_value(tracer, chain, &q)?);
    }

    Ok(SimOutcome {
        trajectory: Trajectory { states, actions, dt, meta },
        status,
        manip_trace: trace,
    })
}

fn trace_value(model: &ConstraintModel, chain: &SerialChain, q: &JointState) -> Result<f64> {
    model.manipulability(chain, q)
}
