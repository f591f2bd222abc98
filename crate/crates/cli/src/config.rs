//! Flat, JSON-compatible experiment configuration.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use manipulab::demo::DemoConfig;
use manipulab::{GradScheme, LambdaConfig, ManipError, PinvPolicy, Result, SeparationConfig};

/// Environment variable overriding the output root directory.
pub const OUTPUT_ROOT_ENV: &str = "MANIPULAB_OUT_ROOT";

/// One flat bag of knobs covering every experiment recipe; unknown keys are
/// rejected so typos fail loudly.
#[derive(Clone, Debug, Serialize, Deserialize, PartialEq)]
#[serde(deny_unknown_fields, default)]
pub struct ExperimentConfig {
    pub experiment: String,
    pub chain: String,
    pub constraint: String,
    pub seed: u64,
    pub trials: usize,
    pub n_trajectories: usize,
    pub points_per_traj: usize,
    pub steps: usize,
    pub dt: f64,
    pub start_ranges_deg: Vec<[f64; 2]>,
    pub target_ranges: Vec<[f64; 2]>,
    pub psi_star_deg: Vec<f64>,
    pub demo_alpha: f64,
    pub pinv: String,
    pub null_policy: String,
    pub null_alpha: f64,
    pub grad_step: f64,
    pub grad_scheme: String,
    pub k_max: usize,
    pub max_centers: usize,
    pub width_scale: f64,
    pub poly_degree: usize,
    pub ridge: f64,
    pub sep_max_iters: usize,
    pub sep_tolerance: f64,
    pub grid_per_angle: usize,
    pub refine_starts: usize,
    pub rank_epsilon: f64,
    pub downsample_to: usize,
    pub output_dir: PathBuf,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        let demo = DemoConfig::planar("lambda_xy", 1);
        let sep = SeparationConfig::default();
        let lam = LambdaConfig::default();
        Self {
            experiment: "gen".into(),
            chain: demo.chain_name.clone(),
            constraint: demo.constraint_id.clone(),
            seed: 1,
            trials: 50,
            n_trajectories: demo.n_trajectories,
            points_per_traj: demo.points_per_traj,
            steps: 200,
            dt: demo.dt,
            start_ranges_deg: demo.start_ranges_deg.iter().map(|&(a, b)| [a, b]).collect(),
            target_ranges: demo.target_ranges.iter().map(|&(a, b)| [a, b]).collect(),
            psi_star_deg: demo.psi_star_deg.clone(),
            demo_alpha: demo.alpha,
            pinv: "truncate".into(),
            null_policy: "point_attractor".into(),
            null_alpha: 1.0,
            grad_step: 1e-6,
            grad_scheme: "central".into(),
            k_max: 3,
            max_centers: sep.max_centers,
            width_scale: sep.width_scale,
            poly_degree: sep.poly_degree,
            ridge: sep.ridge,
            sep_max_iters: sep.max_iters,
            sep_tolerance: sep.tolerance,
            grid_per_angle: lam.grid_per_angle,
            refine_starts: lam.refine_starts,
            rank_epsilon: lam.rank_epsilon,
            downsample_to: 0,
            output_dir: PathBuf::from("out"),
        }
    }
}

impl ExperimentConfig {
    pub fn from_file(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| {
            ManipError::InvalidConfig(format!("cannot read config '{}': {e}", path.display()))
        })?;
        let cfg: Self = serde_json::from_str(&text).map_err(|e| {
            ManipError::InvalidConfig(format!("malformed config '{}': {e}", path.display()))
        })?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        self.pinv_policy()?;
        self.grad_scheme()?;
        if !(self.dt > 0.0) {
            return Err(ManipError::InvalidConfig("dt must be positive".into()));
        }
        Ok(())
    }

    /// Output directory with the environment root applied when present.
    pub fn resolved_output_dir(&self) -> PathBuf {
        match std::env::var_os(OUTPUT_ROOT_ENV) {
            Some(root) if !self.output_dir.is_absolute() => {
                PathBuf::from(root).join(&self.output_dir)
            }
            _ => self.output_dir.clone(),
        }
    }

    pub fn demo_config(&self) -> DemoConfig {
        let mut base = if self.chain == "spatial7" {
            DemoConfig::spatial7(self.seed)
        } else {
            DemoConfig::planar(&self.constraint, self.seed)
        };
        base.chain_name = self.chain.clone();
        base.constraint_id = self.constraint.clone();
        base.n_trajectories = self.n_trajectories;
        base.points_per_traj = self.points_per_traj;
        base.start_ranges_deg = self.start_ranges_deg.iter().map(|r| (r[0], r[1])).collect();
        base.target_ranges = self.target_ranges.iter().map(|r| (r[0], r[1])).collect();
        base.psi_star_deg = self.psi_star_deg.clone();
        base.seed = self.seed;
        base.dt = self.dt;
        base.alpha = self.demo_alpha;
        base
    }

    pub fn separation_config(&self) -> SeparationConfig {
        SeparationConfig {
            max_centers: self.max_centers,
            width_scale: self.width_scale,
            poly_degree: self.poly_degree,
            ridge: self.ridge,
            max_iters: self.sep_max_iters,
            tolerance: self.sep_tolerance,
            ..Default::default()
        }
    }

    pub fn lambda_config(&self) -> LambdaConfig {
        LambdaConfig {
            grid_per_angle: self.grid_per_angle,
            refine_starts: self.refine_starts,
            rank_epsilon: self.rank_epsilon,
            ..Default::default()
        }
    }

    pub fn pinv_policy(&self) -> Result<PinvPolicy> {
        match self.pinv.as_str() {
            "plain" => Ok(PinvPolicy::plain()),
            "truncate" => Ok(PinvPolicy::truncate()),
            other => {
                // "truncate:<threshold>" selects a fixed absolute cutoff.
                if let Some(value) = other.strip_prefix("truncate:") {
                    let t: f64 = value.parse().map_err(|_| {
                        ManipError::InvalidConfig(format!("bad fixed truncation threshold '{value}'"))
                    })?;
                    if !(t >= 0.0) {
                        return Err(ManipError::InvalidConfig(
                            "fixed truncation threshold must be nonnegative".into(),
                        ));
                    }
                    return Ok(PinvPolicy::truncate_fixed(t));
                }
                Err(ManipError::InvalidConfig(format!(
                    "unknown pinv mode '{other}' (expected 'plain', 'truncate', or 'truncate:<t>')"
                )))
            }
        }
    }

    pub fn grad_scheme(&self) -> Result<GradScheme> {
        match self.grad_scheme.as_str() {
            "central" => Ok(GradScheme::Central),
            "forward" => Ok(GradScheme::Forward),
            other => Err(ManipError::InvalidConfig(format!(
                "unknown gradient scheme '{other}' (expected 'central' or 'forward')"
            ))),
        }
    }
}
