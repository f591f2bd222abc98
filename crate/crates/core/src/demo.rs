//! Synthetic demonstration generation: random starts, random feasible
//! targets, and a consistent null-space point attractor, recorded at a
//! fixed rate.

use nalgebra::{DMatrix, DVector};
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::chains::{JointState, SerialChain, TaskPose};
use crate::constraint::{ConstraintModel, PinvPolicy};
use crate::error::{ManipError, Result};
use crate::policy::{NullPolicy, TaskPolicy};
use crate::sim::{simulate, SimParams, Trajectory, TrajectoryMeta};

/// Everything needed to generate one demonstration set. All angles are in
/// degrees; target ranges are in task units (meters / radians).
#[derive(Clone, Debug, PartialEq)]
pub struct DemoConfig {
    pub chain_name: String,
    pub constraint_id: String,
    pub n_trajectories: usize,
    pub points_per_traj: usize,
    pub start_ranges_deg: Vec<(f64, f64)>,
    pub target_ranges: Vec<(f64, f64)>,
    pub psi_star_deg: Vec<f64>,
    pub seed: u64,
    pub dt: f64,
    /// Gain of the null-space point attractor used during generation.
    pub alpha: f64,
    /// Damped-least-squares feasibility check parameters.
    pub ik_neutral_deg: Vec<f64>,
    pub ik_max_iters: usize,
    pub ik_damping: f64,
    pub ik_tolerance: f64,
    pub max_rejections: usize,
}

impl DemoConfig {
    /// Planar 3R defaults: tight start box, wide targets, 100 x 10 points
    /// at 50 Hz.
    pub fn planar(constraint_id: &str, seed: u64) -> Self {
        Self {
            chain_name: "planar3".into(),
            constraint_id: constraint_id.into(),
            n_trajectories: 100,
            points_per_traj: 10,
            start_ranges_deg: vec![(0.0, 10.0), (90.0, 100.0), (0.0, 10.0)],
            target_ranges: vec![(-1.0, 1.0), (0.0, 2.0), (0.0, std::f64::consts::PI)],
            psi_star_deg: vec![10.0, -10.0, 10.0],
            seed,
            dt: 0.02,
            alpha: 1.0,
            ik_neutral_deg: vec![5.0, 95.0, 5.0],
            ik_max_iters: 200,
            ik_damping: 1e-3,
            ik_tolerance: 1e-4,
            max_rejections: 1000,
        }
    }

    /// Spatial 7R preset: a default outward start pose with a small
    /// kinaesthetic jitter box, x-axis targets, 50 short push recordings at
    /// 100 Hz (down-sampled to 10 points before learning).
    pub fn spatial7(seed: u64) -> Self {
        let start = [-100.0, 30.0, -100.0, 40.0, -60.0, -70.0, 250.0];
        let chain = SerialChain::preset("spatial7").expect("preset exists");
        let q0 = JointState::from_degrees(&start).expect("finite start");
        let home = chain.forward_kinematics(&q0).expect("valid start");
        // The attractor stretches the arm a consistent 25 degrees outward
        // of the default pose.
        let psi: Vec<f64> = start
            .iter()
            .enumerate()
            .map(|(i, v)| if i % 2 == 0 { v + 25.0 } else { v - 25.0 })
            .collect();
        Self {
            chain_name: "spatial7".into(),
            constraint_id: "lambda_x".into(),
            n_trajectories: 50,
            points_per_traj: 20,
            start_ranges_deg: start.iter().map(|v| (v - 2.0, v + 2.0)).collect(),
            target_ranges: vec![
                (-1.0, 1.0),
                (home.coords().y, home.coords().y),
                (home.coords().z, home.coords().z),
            ],
            psi_star_deg: psi,
            seed,
            dt: 0.01,
            alpha: 1.0,
            ik_neutral_deg: start.to_vec(),
            ik_max_iters: 200,
            ik_damping: 1e-3,
            ik_tolerance: 1e-4,
            max_rejections: 1000,
        }
    }

    pub fn psi_star(&self) -> Result<JointState> {
        JointState::from_degrees(&self.psi_star_deg)
    }

    fn validate(&self, chain: &SerialChain) -> Result<()> {
        if self.n_trajectories == 0 || self.points_per_traj == 0 {
            return Err(ManipError::InvalidConfig("trajectory and point counts must be at least 1".into()));
        }
        if self.start_ranges_deg.len() != chain.dof() {
            return Err(ManipError::InvalidConfig("one start range per joint required".into()));
        }
        if self.target_ranges.len() != chain.task_dim() {
            return Err(ManipError::InvalidConfig("one target range per task coordinate required".into()));
        }
        if self.psi_star_deg.len() != chain.dof() {
            return Err(ManipError::InvalidConfig("psi_star dimension must match dof".into()));
        }
        for (lo, hi) in self.start_ranges_deg.iter().chain(self.target_ranges.iter()) {
            if !(lo <= hi) {
                return Err(ManipError::InvalidConfig(format!("ill-ordered range [{lo}, {hi}]")));
            }
        }
        if !(self.dt > 0.0) {
            return Err(ManipError::InvalidConfig("dt must be positive".into()));
        }
        Ok(())
    }
}

/// A set of trajectories generated under one consistent configuration.
#[derive(Clone, Debug)]
pub struct DemonstrationSet {
    pub trajectories: Vec<Trajectory>,
    pub config: DemoConfig,
}

impl DemonstrationSet {
    pub fn n_points(&self) -> usize {
        self.trajectories.iter().map(|t| t.actions.len()).sum()
    }

    /// All recorded (state, action) pairs in trajectory order.
    pub fn pairs(&self) -> impl Iterator<Item = (&JointState, &DVector<f64>)> {
        self.trajectories
            .iter()
            .flat_map(|t| t.states.iter().zip(t.actions.iter()))
    }

    pub fn states(&self) -> impl Iterator<Item = &JointState> {
        self.trajectories.iter().flat_map(|t| t.states.iter())
    }
}

/// Draws a start configuration, one uniform draw per joint.
pub fn sample_start(cfg: &DemoConfig, rng: &mut ChaCha8Rng) -> Result<JointState> {
    let deg: Vec<f64> = cfg
        .start_ranges_deg
        .iter()
        .map(|(lo, hi)| rng.gen_range(*lo..=*hi))
        .collect();
    JointState::from_degrees(&deg)
}

/// Rejection-samples a task target that admits an inverse kinematic
/// solution in the constrained coordinates.
pub fn sample_target(
    cfg: &DemoConfig,
    chain: &SerialChain,
    model: &ConstraintModel,
    rng: &mut ChaCha8Rng,
) -> Result<TaskPose> {
    let mut rejections = 0usize;
    loop {
        let draw: Vec<f64> = cfg
            .target_ranges
            .iter()
            .map(|(lo, hi)| rng.gen_range(*lo..=*hi))
            .collect();
        let target = TaskPose::from_components(draw[0], draw[1], draw[2]);
        if ik_feasible(cfg, chain, model, &target)? {
            return Ok(target);
        }
        rejections += 1;
        if rejections >= cfg.max_rejections {
            return Err(ManipError::InfeasibleRegion(rejections));
        }
    }
}

/// Damped-least-squares reachability test on the constrained coordinates.
pub fn ik_feasible(
    cfg: &DemoConfig,
    chain: &SerialChain,
    model: &ConstraintModel,
    target: &TaskPose,
) -> Result<bool> {
    let mut q = JointState::from_degrees(&cfg.ik_neutral_deg)?;
    let damping2 = cfg.ik_damping * cfg.ik_damping;
    for _ in 0..cfg.ik_max_iters {
        let pose = chain.forward_kinematics(&q)?;
        let e = model.select(&chain.pose_error(target, &pose));
        if e.norm() < cfg.ik_tolerance {
            return Ok(true);
        }
        let jc = model.constraint_matrix(chain, &q)?;
        let gram = &jc * jc.transpose() + damping2 * DMatrix::identity(model.k(), model.k());
        let Some(inv) = gram.try_inverse() else {
            return Ok(false);
        };
        let step = jc.transpose() * inv * e;
        q = JointState::new(q.angles() + step)?;
    }
    Ok(false)
}

/// Generates the configured demonstration set: per trajectory, a fresh RNG
/// stream (`seed ^ index`), a sampled start and feasible target, and a
/// truncating-pseudoinverse rollout under the consistent point attractor.
pub fn generate_demos(cfg: &DemoConfig) -> Result<DemonstrationSet> {
    let chain = SerialChain::preset(&cfg.chain_name)?;
    let model = ConstraintModel::preset(&cfg.constraint_id)?;
    cfg.validate(&chain)?;
    let psi = cfg.psi_star()?;

    let mut trajectories = Vec::with_capacity(cfg.n_trajectories);
    for idx in 0..cfg.n_trajectories {
        let traj_seed = cfg.seed ^ idx as u64;
        let mut rng = ChaCha8Rng::seed_from_u64(traj_seed);
        let start = sample_start(cfg, &mut rng)?;
        let target = sample_target(cfg, &chain, &model, &mut rng)?;
        let task = TaskPolicy::new(target);
        let null = NullPolicy::point_attractor(psi.clone(), cfg.alpha)?;
        let out = simulate(
            &chain,
            &model,
            &task,
            &null,
            &PinvPolicy::truncate(),
            &start,
            cfg.points_per_traj,
            cfg.dt,
            &SimParams::default(),
            None,
            TrajectoryMeta::new(&cfg.constraint_id, &cfg.chain_name, "point_attractor", traj_seed),
        )?;
        let mut traj = out.trajectory;
        if traj.actions.len() < cfg.points_per_traj {
            return Err(ManipError::DegenerateData(format!(
                "trajectory {idx} ended after {} of {} steps ({:?})",
                traj.actions.len(),
                cfg.points_per_traj,
                out.status
            )));
        }
        traj.truncate_pairs(cfg.points_per_traj);
        trajectories.push(traj);
    }
    Ok(DemonstrationSet { trajectories, config: cfg.clone() })
}

/// Keeps `n` points at uniformly spaced indices (first and last included);
/// actions are the originals at those indices, never re-differenced.
pub fn downsample(traj: &Trajectory, n: usize) -> Result<Trajectory> {
    let len = traj.states.len();
    if traj.actions.len() != len {
        return Err(ManipError::InvalidConfig(
            "downsampling expects one action per state".into(),
        ));
    }
    if n == 0 || n > len {
        return Err(ManipError::InvalidConfig(format!(
            "cannot downsample {len} points to {n}"
        )));
    }
    let indices: Vec<usize> = if n == 1 {
        vec![0]
    } else {
        (0..n)
            .map(|i| ((i * (len - 1)) as f64 / (n - 1) as f64).round() as usize)
            .collect()
    };
    Ok(Trajectory {
        states: indices.iter().map(|&i| traj.states[i].clone()).collect(),
        actions: indices.iter().map(|&i| traj.actions[i].clone()).collect(),
        dt: traj.dt,
        meta: traj.meta.clone(),
    })
}
