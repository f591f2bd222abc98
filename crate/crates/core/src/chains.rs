//! Kinematics of serial revolute chains: forward kinematics and task
//! Jacobians for a planar arm and a generic spatial 7-DOF chain.
//!
//! Task coordinates are always 3-dimensional: `(x, y, theta)` for planar
//! chains and `(x, y, z)` for spatial ones.

use nalgebra::{DMatrix, DVector, Matrix4, Vector3};

use crate::error::{ManipError, Result};

/// Dimension of the task space for every supported chain.
pub const TASK_DIM: usize = 3;

/// Wraps an angle to the interval `(-pi, pi]`.
pub fn wrap_angle(theta: f64) -> f64 {
    use std::f64::consts::PI;
    PI - (PI - theta).rem_euclid(2.0 * PI)
}

/// A joint configuration. Construction rejects non-finite entries.
#[derive(Clone, Debug, PartialEq)]
pub struct JointState {
    q: DVector<f64>,
}

impl JointState {
    pub fn new(q: DVector<f64>) -> Result<Self> {
        if q.iter().any(|v| !v.is_finite()) {
            return Err(ManipError::NonFiniteState);
        }
        Ok(Self { q })
    }

    pub fn from_slice(q: &[f64]) -> Result<Self> {
        Self::new(DVector::from_row_slice(q))
    }

    pub fn from_degrees(q_deg: &[f64]) -> Result<Self> {
        Self::from_slice(&q_deg.iter().map(|d| d.to_radians()).collect::<Vec<_>>())
    }

    pub fn dof(&self) -> usize {
        self.q.len()
    }

    pub fn angles(&self) -> &DVector<f64> {
        &self.q
    }
}

/// A task-space pose; meaning of the third coordinate depends on the chain.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct TaskPose {
    r: Vector3<f64>,
}

impl TaskPose {
    pub fn new(r: Vector3<f64>) -> Self {
        Self { r }
    }

    pub fn from_components(a: f64, b: f64, c: f64) -> Self {
        Self { r: Vector3::new(a, b, c) }
    }

    pub fn coords(&self) -> &Vector3<f64> {
        &self.r
    }
}

/// One Denavit-Hartenberg row: `a` (m), `alpha` (rad), `d` (m), and a fixed
/// joint-angle offset (rad) added to the commanded angle.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct DhParam {
    pub a: f64,
    pub alpha: f64,
    pub d: f64,
    pub theta_offset: f64,
}

impl DhParam {
    /// Homogeneous transform of this row at joint angle `q`.
    pub fn transform(&self, q: f64) -> Matrix4<f64> {
        let theta = q + self.theta_offset;
        let (st, ct) = theta.sin_cos();
        let (sa, ca) = self.alpha.sin_cos();
        Matrix4::new(
            ct, -st * ca, st * sa, self.a * ct,
            st, ct * ca, -ct * sa, self.a * st,
            0.0, sa, ca, self.d,
            0.0, 0.0, 0.0, 1.0,
        )
    }
}

/// Kinematic description of a serial revolute chain.
#[derive(Clone, Debug, PartialEq)]
pub enum SerialChain {
    /// Planar arm with the given link lengths; task space `(x, y, theta)`.
    Planar { lengths: Vec<f64> },
    /// Spatial chain given by DH rows; task space is end-effector position.
    SpatialDh { params: Vec<DhParam> },
}

impl SerialChain {
    pub fn planar(lengths: Vec<f64>) -> Result<Self> {
        if lengths.is_empty() {
            return Err(ManipError::InvalidChain("planar chain needs at least one link".into()));
        }
        if lengths.iter().any(|l| !(*l > 0.0)) {
            return Err(ManipError::InvalidChain("planar link lengths must be strictly positive".into()));
        }
        Ok(Self::Planar { lengths })
    }

    pub fn spatial(params: Vec<DhParam>) -> Result<Self> {
        if params.is_empty() {
            return Err(ManipError::InvalidChain("spatial chain needs at least one joint".into()));
        }
        Ok(Self::SpatialDh { params })
    }

    /// Loads a chain preset by name: `planar3` or `spatial7`.
    pub fn preset(name: &str) -> Result<Self> {
        match name {
            "planar3" => Self::planar(vec![1.0, 1.0, 1.0]),
            "spatial7" => Self::spatial(spatial7_dh().to_vec()),
            other => Err(ManipError::InvalidChain(format!("unknown chain preset '{other}'"))),
        }
    }

    pub fn dof(&self) -> usize {
        match self {
            Self::Planar { lengths } => lengths.len(),
            Self::SpatialDh { params } => params.len(),
        }
    }

    pub fn task_dim(&self) -> usize {
        TASK_DIM
    }

    pub fn is_planar(&self) -> bool {
        matches!(self, Self::Planar { .. })
    }

    fn check_state(&self, q: &JointState) -> Result<()> {
        if q.dof() != self.dof() {
            return Err(ManipError::DimensionMismatch(format!(
                "joint state has {} entries, chain has {} joints",
                q.dof(),
                self.dof()
            )));
        }
        Ok(())
    }

    /// End-effector pose at configuration `q`.
    pub fn forward_kinematics(&self, q: &JointState) -> Result<TaskPose> {
        self.check_state(q)?;
        match self {
            Self::Planar { lengths } => {
                let mut cum = 0.0;
                let mut x = 0.0;
                let mut y = 0.0;
                for (l, qi) in lengths.iter().zip(q.angles().iter()) {
                    cum += qi;
                    x += l * cum.cos();
                    y += l * cum.sin();
                }
                Ok(TaskPose::from_components(x, y, wrap_angle(q.angles().sum())))
            }
            Self::SpatialDh { params } => {
                let mut t = Matrix4::identity();
                for (p, qi) in params.iter().zip(q.angles().iter()) {
                    t *= p.transform(*qi);
                }
                Ok(TaskPose::from_components(t[(0, 3)], t[(1, 3)], t[(2, 3)]))
            }
        }
    }

    /// Analytic task Jacobian (`TASK_DIM x dof`) at configuration `q`.
    ///
    /// Planar rows are the partials of `(x, y, theta)`; spatial chains use
    /// the geometric Jacobian restricted to the position rows.
    pub fn jacobian(&self, q: &JointState) -> Result<DMatrix<f64>> {
        self.check_state(q)?;
        let dof = self.dof();
        match self {
            Self::Planar { lengths } => {
                // Cumulative angles, then suffix sums of L*sin / L*cos.
                let mut cums = Vec::with_capacity(dof);
                let mut cum = 0.0;
                for qi in q.angles().iter() {
                    cum += qi;
                    cums.push(cum);
                }
                let mut jac = DMatrix::zeros(TASK_DIM, dof);
                for i in 0..dof {
                    let mut sx = 0.0;
                    let mut sy = 0.0;
                    for j in i..dof {
                        sx -= lengths[j] * cums[j].sin();
                        sy += lengths[j] * cums[j].cos();
                    }
                    jac[(0, i)] = sx;
                    jac[(1, i)] = sy;
                    jac[(2, i)] = 1.0;
                }
                Ok(jac)
            }
            Self::SpatialDh { params } => {
                // Joint frames, then column i = z_{i-1} x (p_ee - p_{i-1}).
                let mut transforms = Vec::with_capacity(dof + 1);
                let mut t = Matrix4::identity();
                transforms.push(t);
                for (p, qi) in params.iter().zip(q.angles().iter()) {
                    t *= p.transform(*qi);
                    transforms.push(t);
                }
                let p_ee = Vector3::new(t[(0, 3)], t[(1, 3)], t[(2, 3)]);
                let mut jac = DMatrix::zeros(TASK_DIM, dof);
                for i in 0..dof {
                    let base = &transforms[i];
                    let z = Vector3::new(base[(0, 2)], base[(1, 2)], base[(2, 2)]);
                    let p = Vector3::new(base[(0, 3)], base[(1, 3)], base[(2, 3)]);
                    let col = z.cross(&(p_ee - p));
                    jac[(0, i)] = col.x;
                    jac[(1, i)] = col.y;
                    jac[(2, i)] = col.z;
                }
                Ok(jac)
            }
        }
    }

    /// Task-space error `target - current` with the orientation component of
    /// planar chains wrapped to `(-pi, pi]`.
    pub fn pose_error(&self, target: &TaskPose, current: &TaskPose) -> Vector3<f64> {
        let mut e = target.coords() - current.coords();
        if self.is_planar() {
            e.z = wrap_angle(e.z);
        }
        e
    }
}

/// Anthropomorphic 7R chain with alternating shoulder/elbow/wrist offsets
/// and a 1.26 m total reach.
fn spatial7_dh() -> [DhParam; 7] {
    use std::f64::consts::FRAC_PI_2;
    let row = |alpha: f64, d: f64| DhParam { a: 0.0, alpha, d, theta_offset: 0.0 };
    [
        row(-FRAC_PI_2, 0.34),
        row(FRAC_PI_2, 0.0),
        row(-FRAC_PI_2, 0.40),
        row(FRAC_PI_2, 0.0),
        row(-FRAC_PI_2, 0.40),
        row(FRAC_PI_2, 0.0),
        row(0.0, 0.12),
    ]
}
