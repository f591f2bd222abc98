//! Constraint learning from demonstrations: separate the null-space
//! component of the observed actions, then estimate the selection matrix
//! whose induced constraint annihilates it.

pub mod rbf;

use nalgebra::{DMatrix, DVector, Matrix3, Vector3};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::chains::{JointState, SerialChain, TASK_DIM};
use crate::constraint::ConstraintModel;
use crate::demo::DemonstrationSet;
use crate::error::{ManipError, Result};
use rbf::{kmeans, median_pairwise_distance, RbfModel};

/// Parameters of the null-space component regression.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SeparationConfig {
    /// Cap on RBF centers; the effective count is `min(cap, n_points / 4)`.
    pub max_centers: usize,
    /// Multiplier on the median pairwise center distance.
    pub width_scale: f64,
    /// Degree of the polynomial tail appended to the Gaussian features.
    pub poly_degree: usize,
    pub ridge: f64,
    pub max_iters: usize,
    /// Stop once the objective decrease falls below this.
    pub tolerance: f64,
    pub kmeans_iters: usize,
    /// Relative eigenvalue cutoff for the task-variation subspace of the
    /// local action scatter, used to initialize the field.
    pub scatter_threshold: f64,
    /// Self-consistency level (objective over total action power) below
    /// which a fit is accepted without trying another kernel width.
    pub restart_threshold: f64,
}

impl Default for SeparationConfig {
    fn default() -> Self {
        Self {
            max_centers: 100,
            width_scale: 1.0,
            poly_degree: 2,
            ridge: 1e-8,
            max_iters: 300,
            tolerance: 1e-10,
            kmeans_iters: 50,
            scatter_threshold: 0.05,
            restart_threshold: 1e-5,
        }
    }
}

/// Fitted estimate of the null-space component `u_ns(x)`.
#[derive(Clone, Debug)]
pub struct NullComponentModel {
    rbf: RbfModel,
    pub objective: f64,
    pub iterations: usize,
    pub objective_trace: Vec<f64>,
}

impl NullComponentModel {
    pub fn predict(&self, q: &JointState) -> DVector<f64> {
        self.rbf.predict(q.angles())
    }

    pub fn rbf(&self) -> &RbfModel {
        &self.rbf
    }
}

/// Separates the null-space component from raw actions by minimizing the
/// self-projection objective `sum_n || P(u_ns_n) u_n - u_ns_n ||^2` over an
/// RBF field.
///
/// Since the residual is parallel to the estimate, the objective reduces to
/// `sum_n (u_ns_n . (u_n - u_ns_n))^2 / ||u_ns_n||^2`, a smooth nonlinear
/// least-squares problem in the RBF weights. It is driven to a minimum by
/// damped Gauss-Newton starting from the ridge fit of the raw actions.
/// Task-space components vary across trajectories while the null component
/// is consistent, so a single-valued field can only zero the objective by
/// aligning with the null component.
pub fn separate_null_component(
    data: &DemonstrationSet,
    cfg: &SeparationConfig,
) -> Result<NullComponentModel> {
    if data.trajectories.len() < 2 {
        return Err(ManipError::DegenerateData("need at least two trajectories".into()));
    }
    let states: Vec<DVector<f64>> = data.pairs().map(|(q, _)| q.angles().clone()).collect();
    let actions: Vec<DVector<f64>> = data.pairs().map(|(_, u)| u.clone()).collect();
    let n = states.len();
    let dof = states[0].len();

    let action_scale = actions.iter().map(|u| u.norm()).sum::<f64>() / n as f64;
    if action_scale < 1e-10 {
        return Err(ManipError::DegenerateData("all demonstrated actions are near zero".into()));
    }

    let n_centers = cfg.max_centers.min(n / 4).max(1);
    let mut rng = ChaCha8Rng::seed_from_u64(data.config.seed ^ 0x6b6d_6561_6e73);
    let centers = kmeans(&states, n_centers, &mut rng, cfg.kmeans_iters);
    let base_width = median_pairwise_distance(&centers) * cfg.width_scale;
    if !(base_width > 0.0) {
        return Err(ManipError::DegenerateData("demonstrated states are indistinguishable".into()));
    }

    let mut action_mat = DMatrix::zeros(n, dof);
    for (i, u) in actions.iter().enumerate() {
        action_mat.row_mut(i).copy_from(&u.transpose());
    }
    let total_power: f64 = actions.iter().map(|u| u.norm_squared()).sum();

    // The optimizer occasionally settles in a poor valley for an unlucky
    // kernel width; retry over a fixed width cascade and keep the best fit.
    let mut best: Option<NullComponentModel> = None;
    for multiplier in [1.0, 1.5, 0.5, 2.0] {
        let width = base_width * multiplier;
        let fit = fit_field(&states, &actions, &action_mat, &centers, width, action_scale, cfg)?;
        let fit_scale: f64 = states
            .iter()
            .map(|x| fit.rbf().predict(x).norm())
            .sum::<f64>()
            / n as f64;
        if fit_scale < 1e-3 * action_scale {
            continue; // collapsed field, never competitive
        }
        let better = match &best {
            None => true,
            Some(b) => fit.objective < b.objective,
        };
        if better {
            best = Some(fit);
        }
        if best.as_ref().map(|b| b.objective <= cfg.restart_threshold * total_power).unwrap_or(false) {
            break;
        }
    }
    best.ok_or_else(|| {
        ManipError::DegenerateData("no usable null-space field at any kernel width".into())
    })
}

/// One damped Gauss-Newton fit of the field at a fixed kernel width.
fn fit_field(
    states: &[DVector<f64>],
    actions: &[DVector<f64>],
    action_mat: &DMatrix<f64>,
    centers: &[DVector<f64>],
    width: f64,
    action_scale: f64,
    cfg: &SeparationConfig,
) -> Result<NullComponentModel> {
    let n = states.len();
    let dof = states[0].len();
    let n_centers = centers.len();
    let n_features = rbf::feature_count(n_centers, dof, cfg.poly_degree);
    let probe = RbfModel::new(centers.to_vec(), width, cfg.poly_degree, DMatrix::zeros(dof, n_features));
    let mut design = DMatrix::zeros(n, n_features);
    for (i, x) in states.iter().enumerate() {
        design.row_mut(i).copy_from(&probe.features(x).transpose());
    }

    // Initialization: raw actions with their local task variation removed.
    // Across nearby states the task component varies with the drawn target
    // while the null component is consistent, so the dominant directions of
    // the kernel-weighted action scatter span the task subspace; projecting
    // the local mean out of them leaves a near-valid null field for the
    // optimizer to polish.
    let init_targets = scatter_guided_init(states, actions, width, cfg.scatter_threshold);

    let mut ridge = cfg.ridge;
    let mut coeffs = loop {
        let gram = design.transpose() * &design + ridge * DMatrix::identity(n_features, n_features);
        match nalgebra::Cholesky::new(gram) {
            Some(c) => break c.solve(&(design.transpose() * &init_targets)), // n_features x dof
            None => {
                ridge *= 10.0;
                if ridge > 1.0 {
                    return Err(ManipError::DegenerateData("RBF design matrix is unusable".into()));
                }
            }
        }
    };

    // Norm floor keeps the residual differentiable where the field vanishes.
    let floor = 1e-9 * action_scale;
    let n_params = n_features * dof;
    let mut trace = Vec::new();
    let mut iterations = 0usize;
    let mut lm_damping = -1.0;

    // A vanished estimate is NOT consistent: as the field shrinks to zero
    // along direction d the projection residual tends to (d . u)^2, so
    // collapsed points pay the full action norm instead of hiding behind
    // the differentiability floor.
    let objective_of = |coeffs: &DMatrix<f64>| -> f64 {
        let fitted = &design * coeffs;
        let mut total = 0.0;
        for i in 0..n {
            let est = fitted.row(i);
            let s = est.norm();
            let rho = if s <= floor {
                action_mat.row(i).norm()
            } else {
                (est.dot(&action_mat.row(i)) - est.norm_squared()) / s
            };
            total += rho * rho;
        }
        total + ridge * coeffs.norm_squared()
    };

    let mut objective = objective_of(&coeffs);
    trace.push(objective);

    let mut jacobian = DMatrix::zeros(n, n_params);
    for iter in 1..=cfg.max_iters {
        iterations = iter;
        let fitted = &design * &coeffs;

        // Jacobian of the scalar residuals rho_n = (est . u - ||est||^2) /
        // ||est||: row n is kron(d rho/d est, phi_n) with
        // d rho / d est = u/s - (a/s^2 + 1) est / s at a = est . u, s = ||est||.
        let mut rho = DVector::zeros(n);
        for i in 0..n {
            let est = fitted.row(i);
            let u = action_mat.row(i);
            let s = est.norm();
            let phi = design.row(i);
            if s <= floor {
                // Constant penalty region: no useful local gradient.
                rho[i] = u.norm();
                for c in 0..n_params {
                    jacobian[(i, c)] = 0.0;
                }
                continue;
            }
            let a = est.dot(&u);
            rho[i] = (a - est.norm_squared()) / s;
            for d in 0..dof {
                let drho_d = u[d] / s - ((a / (s * s)) + 1.0) * est[d] / s;
                let base = d * n_features;
                for c in 0..n_features {
                    jacobian[(i, base + c)] = drho_d * phi[c];
                }
            }
        }
        let mut grad = jacobian.transpose() * &rho;
        let mut hess = jacobian.transpose() * &jacobian;
        for d in 0..dof {
            for c in 0..n_features {
                let p = d * n_features + c;
                grad[p] += ridge * coeffs[(c, d)];
                hess[(p, p)] += ridge;
            }
        }

        if lm_damping < 0.0 {
            lm_damping = 1e-3 * hess.diagonal().mean().max(1e-30);
        }

        let mut improved = false;
        for _ in 0..30 {
            let mut damped = hess.clone();
            for p in 0..n_params {
                damped[(p, p)] += lm_damping;
            }
            let Some(chol) = nalgebra::Cholesky::new(damped) else {
                lm_damping *= 5.0;
                continue;
            };
            let delta = chol.solve(&(-&grad));
            let mut candidate = coeffs.clone();
            for d in 0..dof {
                for c in 0..n_features {
                    candidate[(c, d)] += delta[d * n_features + c];
                }
            }
            let cand_objective = objective_of(&candidate);
            if cand_objective < objective {
                coeffs = candidate;
                lm_damping = (lm_damping * 0.2).max(1e-30);
                improved = true;
                let decrease = objective - cand_objective;
                objective = cand_objective;
                trace.push(objective);
                if decrease < cfg.tolerance {
                    improved = false; // converged
                }
                break;
            }
            lm_damping *= 5.0;
        }
        if !improved {
            break;
        }
    }

    Ok(NullComponentModel {
        rbf: RbfModel::new(centers.to_vec(), width, cfg.poly_degree, coeffs.transpose()),
        objective,
        iterations,
        objective_trace: trace,
    })
}

/// Kernel-weighted local mean of the actions with the dominant scatter
/// directions projected out, one row per data point.
fn scatter_guided_init(
    states: &[DVector<f64>],
    actions: &[DVector<f64>],
    width: f64,
    threshold: f64,
) -> DMatrix<f64> {
    let n = states.len();
    let dof = actions[0].len();
    let denom = 2.0 * width * width;
    let mut targets = DMatrix::zeros(n, dof);
    for i in 0..n {
        let mut wsum = 0.0;
        let mut mean = DVector::zeros(dof);
        let mut weights = Vec::with_capacity(n);
        for j in 0..n {
            let w = (-(&states[i] - &states[j]).norm_squared() / denom).exp();
            weights.push(w);
            wsum += w;
            mean.axpy(w, &actions[j], 1.0);
        }
        mean /= wsum;
        let mut cov = DMatrix::zeros(dof, dof);
        for j in 0..n {
            let d = &actions[j] - &mean;
            cov.ger(weights[j] / wsum, &d, &d, 1.0);
        }
        let eig = nalgebra::SymmetricEigen::new(cov);
        let max_eig = eig.eigenvalues.max();
        let mut residual = mean.clone();
        if max_eig > 0.0 {
            for (idx, ev) in eig.eigenvalues.iter().enumerate() {
                if *ev > threshold * max_eig {
                    let v = eig.eigenvectors.column(idx).into_owned();
                    let p = v.dot(&residual);
                    residual.axpy(-p, &v, 1.0);
                }
            }
        }
        targets.row_mut(i).copy_from(&residual.transpose());
    }
    targets
}

/// Parameters of the selection-matrix search.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct LambdaConfig {
    /// Coarse multi-start grid resolution per spherical angle.
    pub grid_per_angle: usize,
    /// Number of best grid points refined locally.
    pub refine_starts: usize,
    /// Relative objective-decrease tolerance of the refinement.
    pub refine_tolerance: f64,
    pub max_refine_iters: usize,
    /// A candidate row is accepted while its objective increase stays below
    /// `rank_epsilon` times the fully-captured reference.
    pub rank_epsilon: f64,
    /// Finite-difference step for objective gradients in angle space.
    pub angle_fd_step: f64,
}

impl Default for LambdaConfig {
    fn default() -> Self {
        Self {
            grid_per_angle: 36,
            refine_starts: 5,
            refine_tolerance: 1e-10,
            max_refine_iters: 500,
            rank_epsilon: 1e-3,
            angle_fd_step: 1e-7,
        }
    }
}

/// Learnt selection matrix with diagnostics.
#[derive(Clone, Debug)]
pub struct LambdaEstimate {
    /// Orthonormal unit rows, `k x 3`.
    pub rows: DMatrix<f64>,
    pub k: usize,
    /// Objective value at the accepted rows.
    pub objective_value: f64,
    /// Objective after each accepted row.
    pub row_objectives: Vec<f64>,
    /// Captured-power reference used by the rank test.
    pub reference: f64,
}

/// Per-point cache for the selection-matrix objective:
/// with `c = Phi u_ns` and `M = Phi Phi^T`, the contribution of a candidate
/// `Lambda` is `y^T (Lambda M Lambda^T)^+ y` with `y = Lambda c`.
#[derive(Clone, Debug)]
pub struct LambdaProblem {
    points: Vec<(Vector3<f64>, Matrix3<f64>)>,
    reference: f64,
}

impl LambdaProblem {
    /// Builds the cache from states and matching null-component estimates.
    pub fn new(chain: &SerialChain, states: &[JointState], u_ns: &[DVector<f64>]) -> Result<Self> {
        if states.len() != u_ns.len() {
            return Err(ManipError::DimensionMismatch(
                "one null-component estimate per state required".into(),
            ));
        }
        if states.is_empty() {
            return Err(ManipError::EmptyInput("no states for constraint learning".into()));
        }
        let mut points = Vec::with_capacity(states.len());
        let mut reference = 0.0;
        for (q, u) in states.iter().zip(u_ns.iter()) {
            let phi = chain.jacobian(q)?;
            let c3 = &phi * u;
            let c = Vector3::new(c3[0], c3[1], c3[2]);
            let m3 = &phi * phi.transpose();
            let m = Matrix3::from_fn(|i, j| m3[(i, j)]);
            reference += quad_form_pinv3(&m, &c);
            points.push((c, m));
        }
        Ok(Self { points, reference })
    }

    /// Total captured power of the null-component estimates under a
    /// fully-constraining selection; the natural scale of the objective.
    pub fn reference(&self) -> f64 {
        self.reference
    }

    pub fn n_points(&self) -> usize {
        self.points.len()
    }

    /// Objective for the given selection rows (assumed orthonormal).
    pub fn objective(&self, rows: &[Vector3<f64>]) -> f64 {
        match rows.len() {
            0 => 0.0,
            1 => self
                .points
                .iter()
                .map(|(c, m)| {
                    let y = rows[0].dot(c);
                    let g = (rows[0].transpose() * m * rows[0])[0];
                    quad_ratio(g, y)
                })
                .sum(),
            2 => self
                .points
                .iter()
                .map(|(c, m)| {
                    let y1 = rows[0].dot(c);
                    let y2 = rows[1].dot(c);
                    let m0 = m * rows[0];
                    let m1 = m * rows[1];
                    quad_form_pinv2(rows[0].dot(&m0), rows[0].dot(&m1), rows[1].dot(&m1), y1, y2)
                })
                .sum(),
            3 => self
                .points
                .iter()
                .map(|(c, m)| {
                    let lam = Matrix3::from_rows(&[rows[0].transpose(), rows[1].transpose(), rows[2].transpose()]);
                    let g = lam * m * lam.transpose();
                    let y = lam * c;
                    quad_form_pinv3(&g, &y)
                })
                .sum(),
            _ => unreachable!("at most three rows in a 3-dimensional feature space"),
        }
    }
}

fn quad_ratio(g: f64, y: f64) -> f64 {
    if g > 0.0 {
        y * y / g
    } else {
        0.0
    }
}

/// `y^T G^+ y` for a symmetric PSD 2x2, with eigenvalue truncation.
fn quad_form_pinv2(g11: f64, g12: f64, g22: f64, y1: f64, y2: f64) -> f64 {
    let half_tr = 0.5 * (g11 + g22);
    let disc = (0.25 * (g11 - g22) * (g11 - g22) + g12 * g12).sqrt();
    let mu1 = half_tr + disc;
    let mu2 = half_tr - disc;
    if mu1 <= 0.0 {
        return 0.0;
    }
    let (w1, w2) = if disc <= 1e-14 * mu1 {
        (Vector3::new(1.0, 0.0, 0.0), Vector3::new(0.0, 1.0, 0.0))
    } else {
        let cand_a = (g12, mu1 - g11);
        let cand_b = (mu1 - g22, g12);
        let (wx, wy) = if cand_a.0.hypot(cand_a.1) >= cand_b.0.hypot(cand_b.1) {
            cand_a
        } else {
            cand_b
        };
        let norm = wx.hypot(wy);
        let w1 = Vector3::new(wx / norm, wy / norm, 0.0);
        (w1, Vector3::new(-w1.y, w1.x, 0.0))
    };
    let cutoff = 1e-12 * mu1;
    let mut total = 0.0;
    for (mu, w) in [(mu1, w1), (mu2, w2)] {
        if mu > cutoff {
            let p = w.x * y1 + w.y * y2;
            total += p * p / mu;
        }
    }
    total
}

/// `y^T G^+ y` for a symmetric PSD 3x3, with eigenvalue truncation.
fn quad_form_pinv3(g: &Matrix3<f64>, y: &Vector3<f64>) -> f64 {
    let eig = nalgebra::SymmetricEigen::new(*g);
    let mu_max = eig.eigenvalues.max();
    if mu_max <= 0.0 {
        return 0.0;
    }
    let cutoff = 1e-12 * mu_max;
    let mut total = 0.0;
    for i in 0..3 {
        let mu = eig.eigenvalues[i];
        if mu > cutoff {
            let p = eig.eigenvectors.column(i).dot(y);
            total += p * p / mu;
        }
    }
    total
}

/// Orthonormal basis of the complement of the given orthonormal rows.
fn complement_basis(rows: &[Vector3<f64>]) -> Vec<Vector3<f64>> {
    let mut held: Vec<Vector3<f64>> = rows.to_vec();
    let mut out = Vec::new();
    for e in [Vector3::x(), Vector3::y(), Vector3::z()] {
        let mut v = e;
        for b in &held {
            v -= b * b.dot(&v);
        }
        let n = v.norm();
        if n > 1e-8 {
            let v = v / n;
            held.push(v);
            out.push(v);
        }
    }
    out
}

/// Unit vector in `dim`-dimensional angle parameterization.
fn unit_from_angles(angles: &[f64], dim: usize) -> Vec<f64> {
    match dim {
        1 => vec![1.0],
        2 => vec![angles[0].cos(), angles[0].sin()],
        3 => {
            let (s1, c1) = angles[0].sin_cos();
            let (s2, c2) = angles[1].sin_cos();
            vec![c1, s1 * c2, s1 * s2]
        }
        _ => unreachable!(),
    }
}

fn row_from_angles(basis: &[Vector3<f64>], angles: &[f64]) -> Vector3<f64> {
    let coeffs = unit_from_angles(angles, basis.len());
    let mut v = Vector3::zeros();
    for (b, c) in basis.iter().zip(coeffs.iter()) {
        v += b * *c;
    }
    v
}

/// Greedy estimation of the selection matrix: each row is a unit vector in
/// the orthogonal complement of the accepted rows, found by a coarse grid
/// over its spherical angles followed by gradient-descent refinement, and
/// accepted while the objective increase stays negligible.
pub fn learn_lambda(
    data: &DemonstrationSet,
    u_ns: &NullComponentModel,
    k_max: usize,
    cfg: &LambdaConfig,
) -> Result<LambdaEstimate> {
    if k_max == 0 || k_max > TASK_DIM {
        return Err(ManipError::InvalidConfig(format!(
            "k_max must be in 1..={TASK_DIM}"
        )));
    }
    let chain = SerialChain::preset(&data.config.chain_name)?;
    let states: Vec<JointState> = data.pairs().map(|(q, _)| q.clone()).collect();
    let predictions: Vec<DVector<f64>> = states.iter().map(|q| u_ns.predict(q)).collect();
    let problem = LambdaProblem::new(&chain, &states, &predictions)?;
    learn_lambda_from_problem(&problem, k_max, cfg)
}

/// Same search, but over an already-built objective cache.
pub fn learn_lambda_from_problem(
    problem: &LambdaProblem,
    k_max: usize,
    cfg: &LambdaConfig,
) -> Result<LambdaEstimate> {
    let reference = problem.reference();
    if reference < 1e-20 {
        return Err(ManipError::DegenerateData(
            "null-space component carries no signal for constraint learning".into(),
        ));
    }

    let mut rows: Vec<Vector3<f64>> = Vec::new();
    let mut row_objectives = Vec::new();
    let mut prev_objective = 0.0;

    for _j in 0..k_max.min(TASK_DIM) {
        let basis = complement_basis(&rows);
        let dim = basis.len();
        let n_angles = dim - 1;

        let eval = |angles: &[f64]| -> f64 {
            let mut candidate = rows.clone();
            candidate.push(row_from_angles(&basis, angles));
            problem.objective(&candidate)
        };

        let starts = grid_starts(n_angles, cfg.grid_per_angle, &eval, cfg.refine_starts);
        let mut best: Option<(f64, Vec<f64>)> = None;
        for angles in starts {
            let (refined, value) = refine(&angles, &eval, cfg, reference);
            let better = match &best {
                None => true,
                Some((bv, _)) => value < *bv,
            };
            if better {
                best = Some((value, refined));
            }
        }
        let (objective, angles) = best.expect("at least one start");

        // Rank test: a genuine constraint row adds nothing to the captured
        // null-space power.
        if objective - prev_objective > cfg.rank_epsilon * reference {
            break;
        }
        rows.push(row_from_angles(&basis, &angles));
        row_objectives.push(objective);
        prev_objective = objective;
    }

    if rows.is_empty() {
        return Err(ManipError::DegenerateData(
            "no constraint row passed the rank test".into(),
        ));
    }

    let k = rows.len();
    let mut m = DMatrix::zeros(k, TASK_DIM);
    for (i, r) in rows.iter().enumerate() {
        // Re-normalize to pin the unit-row gauge exactly.
        let r = r / r.norm();
        m[(i, 0)] = r.x;
        m[(i, 1)] = r.y;
        m[(i, 2)] = r.z;
    }
    Ok(LambdaEstimate {
        rows: m,
        k,
        objective_value: prev_objective,
        row_objectives,
        reference,
    })
}

/// Evaluates the coarse grid and returns the `n_starts` best angle tuples,
/// ordered by objective with ties broken by grid order.
fn grid_starts(
    n_angles: usize,
    per_angle: usize,
    eval: &dyn Fn(&[f64]) -> f64,
    n_starts: usize,
) -> Vec<Vec<f64>> {
    use std::f64::consts::PI;
    let mut candidates: Vec<Vec<f64>> = Vec::new();
    match n_angles {
        0 => candidates.push(vec![]),
        1 => {
            for i in 0..per_angle {
                candidates.push(vec![2.0 * PI * i as f64 / per_angle as f64]);
            }
        }
        2 => {
            for i in 0..per_angle {
                // Polar angle spans [0, pi] inclusive.
                let t1 = PI * i as f64 / (per_angle - 1) as f64;
                for j in 0..per_angle {
                    let t2 = 2.0 * PI * j as f64 / per_angle as f64;
                    candidates.push(vec![t1, t2]);
                }
            }
        }
        _ => unreachable!(),
    }
    let mut scored: Vec<(usize, f64, Vec<f64>)> = candidates
        .into_iter()
        .enumerate()
        .map(|(i, a)| (i, eval(&a), a))
        .collect();
    scored.sort_by(|a, b| a.1.partial_cmp(&b.1).unwrap().then(a.0.cmp(&b.0)));
    scored.into_iter().take(n_starts.max(1)).map(|(_, _, a)| a).collect()
}

/// Gradient descent with backtracking on the angle parameterization.
fn refine(
    start: &[f64],
    eval: &dyn Fn(&[f64]) -> f64,
    cfg: &LambdaConfig,
    scale: f64,
) -> (Vec<f64>, f64) {
    let mut angles = start.to_vec();
    let mut value = eval(&angles);
    if angles.is_empty() {
        return (angles, value);
    }
    let tol = cfg.refine_tolerance * scale.max(1e-300);
    let mut step = 0.05;

    for _ in 0..cfg.max_refine_iters {
        let mut grad = vec![0.0; angles.len()];
        let h = cfg.angle_fd_step;
        for i in 0..angles.len() {
            let mut up = angles.clone();
            let mut dn = angles.clone();
            up[i] += h;
            dn[i] -= h;
            grad[i] = (eval(&up) - eval(&dn)) / (2.0 * h);
        }
        let gnorm = grad.iter().map(|g| g * g).sum::<f64>().sqrt();
        if gnorm == 0.0 {
            break;
        }

        let mut t = step;
        let mut improved = false;
        for _ in 0..40 {
            let cand: Vec<f64> = angles
                .iter()
                .zip(grad.iter())
                .map(|(a, g)| a - t * g / gnorm)
                .collect();
            let cand_value = eval(&cand);
            if cand_value < value {
                let decrease = value - cand_value;
                angles = cand;
                value = cand_value;
                step = (t * 2.0).min(0.5);
                improved = decrease >= tol;
                break;
            }
            t *= 0.5;
        }
        if !improved {
            break;
        }
    }
    (angles, value)
}

/// Wraps learnt rows as a constraint model with the unit-row gauge.
pub fn learned_model(est: &LambdaEstimate) -> Result<ConstraintModel> {
    ConstraintModel::with_unit_rows(est.rows.clone())
}
