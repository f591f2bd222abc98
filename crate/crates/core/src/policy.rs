//! Task-space and null-space control policies.

use nalgebra::DVector;

use crate::chains::{JointState, SerialChain, TaskPose};
use crate::constraint::ConstraintModel;
use crate::error::{ManipError, Result};

/// Linear point attractor in task space: `b(x) = r* - r`, restricted to the
/// constrained coordinates of the active model.
#[derive(Clone, Debug)]
pub struct TaskPolicy {
    pub target: TaskPose,
}

impl TaskPolicy {
    pub fn new(target: TaskPose) -> Self {
        Self { target }
    }

    /// Constrained task error at `q` (length `k`).
    pub fn evaluate(
        &self,
        chain: &SerialChain,
        model: &ConstraintModel,
        q: &JointState,
    ) -> Result<DVector<f64>> {
        let r = chain.forward_kinematics(q)?;
        let err = chain.pose_error(&self.target, &r);
        Ok(model.select(&err))
    }
}

/// Finite-difference scheme for the manipulability gradient.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum GradScheme {
    /// `(v(q+h) - v(q-h)) / 2h`, O(h^2) away from kinks.
    Central,
    /// `(v(q+h) - v(q)) / h`; keeps full magnitude at the conical kink of
    /// `v` on the singular variety, where central differences cancel.
    Forward,
}

/// Null-space policy `pi(x)`.
#[derive(Clone, Debug)]
pub enum NullPolicy {
    Zero,
    /// `pi = alpha (psi* - q)`.
    PointAttractor { psi_star: JointState, alpha: f64 },
    /// Gradient ascent on the manipulability of the supplied model
    /// (true or learnt): `pi = alpha * grad v`.
    ManipGradient { model: ConstraintModel, step: f64, alpha: f64, scheme: GradScheme },
}

impl NullPolicy {
    pub fn point_attractor(psi_star: JointState, alpha: f64) -> Result<Self> {
        if !(alpha > 0.0) {
            return Err(ManipError::InvalidConfig("point attractor gain must be positive".into()));
        }
        Ok(Self::PointAttractor { psi_star, alpha })
    }

    pub fn manip_gradient(model: ConstraintModel, step: f64, alpha: f64, scheme: GradScheme) -> Result<Self> {
        if !(step > 0.0) {
            return Err(ManipError::InvalidConfig("gradient step must be positive".into()));
        }
        if !(alpha > 0.0) {
            return Err(ManipError::InvalidConfig("gradient gain must be positive".into()));
        }
        Ok(Self::ManipGradient { model, step, alpha, scheme })
    }

    pub fn kind(&self) -> &'static str {
        match self {
            Self::Zero => "zero",
            Self::PointAttractor { .. } => "point_attractor",
            Self::ManipGradient { .. } => "manip_gradient",
        }
    }

    /// Policy output at `q` (length `dof`).
    pub fn evaluate(&self, chain: &SerialChain, q: &JointState) -> Result<DVector<f64>> {
        match self {
            Self::Zero => Ok(DVector::zeros(chain.dof())),
            Self::PointAttractor { psi_star, alpha } => {
                if psi_star.dof() != q.dof() {
                    return Err(ManipError::DimensionMismatch(
                        "attractor target and state have different dof".into(),
                    ));
                }
                Ok(*alpha * (psi_star.angles() - q.angles()))
            }
            Self::ManipGradient { model, step, alpha, scheme } => {
                let g = manip_gradient(model, chain, q, *step, *scheme)?;
                Ok(*alpha * g)
            }
        }
    }
}

/// Finite-difference gradient of the manipulability index.
pub fn manip_gradient(
    model: &ConstraintModel,
    chain: &SerialChain,
    q: &JointState,
    h: f64,
    scheme: GradScheme,
) -> Result<DVector<f64>> {
    let dof = chain.dof();
    let mut grad = DVector::zeros(dof);
    let v0 = match scheme {
        GradScheme::Forward => model.manipulability(chain, q)?,
        GradScheme::Central => 0.0,
    };
    for i in 0..dof {
        let mut qp = q.angles().clone();
        qp[i] += h;
        let vp = model.manipulability(chain, &JointState::new(qp)?)?;
        grad[i] = match scheme {
            GradScheme::Central => {
                let mut qm = q.angles().clone();
                qm[i] -= h;
                let vm = model.manipulability(chain, &JointState::new(qm)?)?;
                (vp - vm) / (2.0 * h)
            }
            GradScheme::Forward => (vp - v0) / h,
        };
    }
    Ok(grad)
}
