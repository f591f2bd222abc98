//! Learning constrained manipulability from demonstrations and using it as
//! a null-space gradient-ascent policy for singularity avoidance.
//!
//! The crate covers the full pipeline on simulated serial chains:
//!
//! - [`chains`]: forward kinematics and task Jacobians (planar 3R, spatial 7R);
//! - [`constraint`]: `A = Lambda J`, pseudoinversion, null-space projectors,
//!   and the manipulability index `v = sqrt(det(A A^T))`;
//! - [`policy`] / [`sim`]: resolved-rate control `u = A^+ b + N pi`;
//! - [`demo`]: seeded synthetic demonstration generation;
//! - [`learn`]: null-space component separation and constraint estimation;
//! - [`metrics`]: normalised manipulability index error and controller
//!   equivalence measures.

pub mod chains;
pub mod constraint;
pub mod demo;
pub mod error;
pub mod learn;
pub mod metrics;
pub mod policy;
pub mod sim;

pub use chains::{DhParam, JointState, SerialChain, TaskPose, TASK_DIM};
pub use constraint::{
    nullspace_projector, pseudoinverse, ConstraintModel, FeatureKind, PinvMode, PinvPolicy,
    ThresholdRule,
};
pub use demo::{generate_demos, DemoConfig, DemonstrationSet};
pub use error::{ManipError, Result};
pub use learn::{
    learn_lambda, learn_lambda_from_problem, learned_model, separate_null_component,
    LambdaConfig, LambdaEstimate, NullComponentModel, SeparationConfig,
};
pub use metrics::{eval_report, nmie, summarize, trajectory_rmse, EvalReport, RmseOutcome, RmseSetup, Summary};
pub use policy::{manip_gradient, GradScheme, NullPolicy, TaskPolicy};
pub use sim::{
    control_step, simulate, SimOutcome, SimParams, SimStatus, Trajectory, TrajectoryMeta,
};
