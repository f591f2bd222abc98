//! Constraint algebra: selection matrices over the task Jacobian,
//! pseudoinversion with configurable singular-value handling, null-space
//! projectors, and the manipulability index.

use nalgebra::{DMatrix, DVector, Vector3};

use crate::chains::{JointState, SerialChain, TASK_DIM};
use crate::error::{ManipError, Result};

/// Feature matrix family used to build constraints. Only the task Jacobian
/// is supported; the variant is kept explicit for the model file format.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum FeatureKind {
    Jacobian,
}

/// A constraint `A(x) = Lambda * Phi(x)` with `Phi = J`.
///
/// All-zero rows of `Lambda` are dropped at construction so that the Gram
/// determinant of the effective constraint is meaningful.
#[derive(Clone, Debug, PartialEq)]
pub struct ConstraintModel {
    lambda: DMatrix<f64>,
    feature: FeatureKind,
}

impl ConstraintModel {
    pub fn new(lambda: DMatrix<f64>) -> Result<Self> {
        if lambda.ncols() != TASK_DIM {
            return Err(ManipError::InvalidConstraint(format!(
                "selection matrix must have {TASK_DIM} columns, got {}",
                lambda.ncols()
            )));
        }
        let rows: Vec<_> = lambda
            .row_iter()
            .filter(|r| r.norm() > 1e-12)
            .map(|r| r.into_owned())
            .collect();
        if rows.is_empty() {
            return Err(ManipError::InvalidConstraint("selection matrix has no nonzero rows".into()));
        }
        if rows.len() > TASK_DIM {
            return Err(ManipError::InvalidConstraint(format!(
                "effective constraint dimension {} exceeds feature dimension {TASK_DIM}",
                rows.len()
            )));
        }
        Ok(Self { lambda: DMatrix::from_rows(&rows), feature: FeatureKind::Jacobian })
    }

    /// Like [`ConstraintModel::new`] but rescales every retained row to unit
    /// Euclidean norm, the gauge used for learnt constraints.
    pub fn with_unit_rows(lambda: DMatrix<f64>) -> Result<Self> {
        let model = Self::new(lambda)?;
        let mut m = model.lambda;
        for mut row in m.row_iter_mut() {
            let n = row.norm();
            row /= n;
        }
        Ok(Self { lambda: m, feature: FeatureKind::Jacobian })
    }

    /// Constraint presets by id: `lambda_xy`, `lambda_xtheta`, `lambda_ytheta`
    /// (planar) and `lambda_x` (spatial position constraint).
    pub fn preset(id: &str) -> Result<Self> {
        let rows: &[[f64; 3]] = match id {
            "lambda_xy" => &[[1.0, 0.0, 0.0], [0.0, 1.0, 0.0], [0.0, 0.0, 0.0]],
            "lambda_xtheta" => &[[1.0, 0.0, 0.0], [0.0, 0.0, 0.0], [0.0, 0.0, 1.0]],
            "lambda_ytheta" => &[[0.0, 0.0, 0.0], [0.0, 1.0, 0.0], [0.0, 0.0, 1.0]],
            "lambda_x" => &[[1.0, 0.0, 0.0], [0.0, 0.0, 0.0], [0.0, 0.0, 0.0]],
            other => {
                return Err(ManipError::InvalidConstraint(format!("unknown constraint preset '{other}'")))
            }
        };
        let flat: Vec<f64> = rows.iter().flatten().copied().collect();
        Self::new(DMatrix::from_row_slice(rows.len(), TASK_DIM, &flat))
    }

    /// Effective constraint dimension (retained rows).
    pub fn k(&self) -> usize {
        self.lambda.nrows()
    }

    pub fn lambda(&self) -> &DMatrix<f64> {
        &self.lambda
    }

    pub fn feature_kind(&self) -> FeatureKind {
        self.feature
    }

    /// `A(x) = Lambda * J(x)`, a `k x dof` matrix.
    pub fn constraint_matrix(&self, chain: &SerialChain, q: &JointState) -> Result<DMatrix<f64>> {
        Ok(&self.lambda * chain.jacobian(q)?)
    }

    /// Restriction of a task-space vector to the constrained coordinates.
    pub fn select(&self, task_vec: &Vector3<f64>) -> DVector<f64> {
        let mut out = DVector::zeros(self.k());
        for (i, row) in self.lambda.row_iter().enumerate() {
            out[i] = row[0] * task_vec.x + row[1] * task_vec.y + row[2] * task_vec.z;
        }
        out
    }

    /// Manipulability index `v = sqrt(det(A A^T))`, evaluated as the product
    /// of the singular values of `A`.
    ///
    /// The Gram determinant itself drowns in round-off near rank loss (its
    /// noise floor would make `v` plateau around 1e-7 at singular
    /// configurations); singular values keep the index accurate down to
    /// machine scale and nonnegative by construction.
    pub fn manipulability(&self, chain: &SerialChain, q: &JointState) -> Result<f64> {
        let a = self.constraint_matrix(chain, q)?;
        if a.nrows() == 1 {
            return Ok(a.row(0).norm());
        }
        let svd = a.svd(false, false);
        Ok(svd.singular_values.iter().product())
    }
}

/// How singular values are handled during pseudoinversion.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum PinvMode {
    /// Invert every singular value greater than zero, exactly as computed.
    /// Velocities near singular configurations can become enormous.
    Plain,
    /// Zero the reciprocal of singular values at or below a threshold.
    Truncate,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub enum ThresholdRule {
    /// `max(rows, cols) * ulp(sigma_max)`, the rule used by Matlab's `pinv`.
    MatlabLike,
    /// A caller-supplied absolute threshold.
    Fixed(f64),
}

/// Pseudoinversion policy: mode plus truncation threshold rule.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct PinvPolicy {
    pub mode: PinvMode,
    pub rule: ThresholdRule,
}

impl PinvPolicy {
    pub fn plain() -> Self {
        Self { mode: PinvMode::Plain, rule: ThresholdRule::MatlabLike }
    }

    pub fn truncate() -> Self {
        Self { mode: PinvMode::Truncate, rule: ThresholdRule::MatlabLike }
    }

    pub fn truncate_fixed(threshold: f64) -> Self {
        Self { mode: PinvMode::Truncate, rule: ThresholdRule::Fixed(threshold) }
    }

    /// Truncation threshold for a matrix of the given shape and largest
    /// singular value.
    pub fn threshold(&self, rows: usize, cols: usize, sigma_max: f64) -> f64 {
        match self.rule {
            ThresholdRule::MatlabLike => rows.max(cols) as f64 * ulp(sigma_max),
            ThresholdRule::Fixed(t) => t,
        }
    }
}

/// Spacing between `|x|` and the next representable f64 above it.
pub fn ulp(x: f64) -> f64 {
    let ax = x.abs();
    if ax == 0.0 {
        return f64::from_bits(1);
    }
    if !ax.is_finite() {
        return f64::NAN;
    }
    f64::from_bits(ax.to_bits() + 1) - ax
}

/// SVD-based Moore-Penrose pseudoinverse under the given policy.
pub fn pseudoinverse(a: &DMatrix<f64>, policy: &PinvPolicy) -> Result<DMatrix<f64>> {
    if a.is_empty() {
        return Err(ManipError::EmptyInput("pseudoinverse of an empty matrix".into()));
    }
    let svd = a.clone().svd(true, true);
    let u = svd.u.as_ref().expect("svd with u requested");
    let v_t = svd.v_t.as_ref().expect("svd with v_t requested");
    let sigma = &svd.singular_values;
    let sigma_max = sigma.max();

    let mut recip = DVector::zeros(sigma.len());
    match policy.mode {
        PinvMode::Plain => {
            if sigma_max <= 0.0 {
                return Err(ManipError::SingularConstraint);
            }
            for (r, s) in recip.iter_mut().zip(sigma.iter()) {
                if *s > 0.0 {
                    *r = 1.0 / s;
                }
            }
        }
        PinvMode::Truncate => {
            let tol = policy.threshold(a.nrows(), a.ncols(), sigma_max);
            for (r, s) in recip.iter_mut().zip(sigma.iter()) {
                if *s > tol {
                    *r = 1.0 / s;
                }
            }
        }
    }

    // A^+ = V * Sigma^+ * U^T
    let mut ut = u.transpose();
    for (mut row, r) in ut.row_iter_mut().zip(recip.iter()) {
        row *= *r;
    }
    Ok(v_t.transpose() * ut)
}

/// Null-space projector `N = I - A^+ A`.
pub fn nullspace_projector(a: &DMatrix<f64>, policy: &PinvPolicy) -> Result<DMatrix<f64>> {
    let pinv = pseudoinverse(a, policy)?;
    Ok(DMatrix::identity(a.ncols(), a.ncols()) - pinv * a)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::chains::JointState;
    use approx::assert_abs_diff_eq;
    use rand::Rng;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn planar3() -> SerialChain {
        SerialChain::preset("planar3").unwrap()
    }

    fn random_matrix(rng: &mut ChaCha8Rng, rows: usize, cols: usize) -> DMatrix<f64> {
        DMatrix::from_fn(rows, cols, |_, _| rng.gen_range(-1.0..1.0))
    }

    #[test]
    fn zero_rows_are_dropped_at_construction() {
        let m = ConstraintModel::preset("lambda_xy").unwrap();
        assert_eq!(m.k(), 2);
        assert_eq!(m.lambda().nrows(), 2);
        let m = ConstraintModel::preset("lambda_x").unwrap();
        assert_eq!(m.k(), 1);
    }

    #[test]
    fn all_zero_selection_rejected() {
        assert!(ConstraintModel::new(DMatrix::zeros(3, 3)).is_err());
    }

    #[test]
    fn constraint_matrix_picks_selected_rows() {
        let chain = planar3();
        let q = JointState::from_slice(&[0.0, 0.0, 0.0]).unwrap();
        let m = ConstraintModel::preset("lambda_xy").unwrap();
        let a = m.constraint_matrix(&chain, &q).unwrap();
        assert_eq!(a.nrows(), 2);
        for i in 0..3 {
            assert_abs_diff_eq!(a[(0, i)], 0.0, epsilon = 1e-15);
        }
        assert_abs_diff_eq!(a[(1, 0)], 3.0, epsilon = 1e-15);
        assert_abs_diff_eq!(a[(1, 1)], 2.0, epsilon = 1e-15);
        assert_abs_diff_eq!(a[(1, 2)], 1.0, epsilon = 1e-15);
    }

    #[test]
    fn identity_selection_reproduces_jacobian() {
        let chain = planar3();
        let q = JointState::from_slice(&[0.4, 1.2, -0.3]).unwrap();
        let m = ConstraintModel::new(DMatrix::identity(3, 3)).unwrap();
        let a = m.constraint_matrix(&chain, &q).unwrap();
        assert_eq!(a, chain.jacobian(&q).unwrap());
    }

    #[test]
    fn spatial_x_selection_is_first_jacobian_row() {
        let chain = SerialChain::preset("spatial7").unwrap();
        let q = JointState::from_degrees(&[-100.0, 30.0, -100.0, 40.0, -60.0, -70.0, 250.0]).unwrap();
        let m = ConstraintModel::preset("lambda_x").unwrap();
        let a = m.constraint_matrix(&chain, &q).unwrap();
        let j = chain.jacobian(&q).unwrap();
        assert_eq!(a.nrows(), 1);
        for c in 0..7 {
            assert_abs_diff_eq!(a[(0, c)], j[(0, c)], epsilon = 1e-15);
        }
    }

    #[test]
    fn matlab_threshold_matches_reference_value() {
        // 2x3 matrix with sigma_max in [2, 4): threshold is 3 * 2^-51.
        let a = DMatrix::from_row_slice(2, 3, &[3.0, 0.0, 0.0, 0.0, 1.0, 0.0]);
        let svd = a.clone().svd(false, false);
        let policy = PinvPolicy::truncate();
        let tol = policy.threshold(a.nrows(), a.ncols(), svd.singular_values.max());
        assert_abs_diff_eq!(tol, 1.332267629550188e-15, epsilon = 1e-20);
    }

    #[test]
    fn pinv_of_identity_is_identity() {
        let a = DMatrix::identity(3, 3);
        for policy in [PinvPolicy::plain(), PinvPolicy::truncate()] {
            let p = pseudoinverse(&a, &policy).unwrap();
            assert!((p - DMatrix::identity(3, 3)).abs().max() < 1e-14);
        }
    }

    #[test]
    fn moore_penrose_axioms_hold_for_random_wide_matrices() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for _ in 0..100 {
            let a = random_matrix(&mut rng, 2, 3);
            let p = pseudoinverse(&a, &PinvPolicy::plain()).unwrap();
            assert!(((&a * &p * &a) - &a).abs().max() < 1e-10);
            assert!(((&p * &a * &p) - &p).abs().max() < 1e-10);
        }
    }

    #[test]
    fn projector_is_idempotent_and_annihilated() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        for _ in 0..100 {
            let a = random_matrix(&mut rng, 2, 3);
            let n = nullspace_projector(&a, &PinvPolicy::plain()).unwrap();
            assert!(((&n * &n) - &n).abs().max() < 1e-10);
            assert!((&a * &n).abs().max() < 1e-10);
        }
    }

    #[test]
    fn axis_constraint_projector_is_coordinate_mask() {
        let a = DMatrix::from_row_slice(1, 3, &[1.0, 0.0, 0.0]);
        let n = nullspace_projector(&a, &PinvPolicy::plain()).unwrap();
        let expected = DMatrix::from_diagonal(&DVector::from_row_slice(&[0.0, 1.0, 1.0]));
        assert!((n - expected).abs().max() < 1e-14);
    }

    #[test]
    fn square_invertible_constraint_has_zero_projector() {
        let a = DMatrix::from_row_slice(3, 3, &[2.0, 0.1, 0.0, -0.3, 1.5, 0.2, 0.0, 0.4, 1.1]);
        let n = nullspace_projector(&a, &PinvPolicy::plain()).unwrap();
        assert!(n.abs().max() < 1e-12);
    }

    #[test]
    fn straight_arm_is_singular_in_position_constraint() {
        let chain = planar3();
        let m = ConstraintModel::preset("lambda_xy").unwrap();
        let q = JointState::from_slice(&[0.0, 0.0, 0.0]).unwrap();
        assert!(m.manipulability(&chain, &q).unwrap() < 1e-12);
    }

    #[test]
    fn full_jacobian_manipulability_vanishes_at_elbow_singularities() {
        let chain = planar3();
        let m = ConstraintModel::new(DMatrix::identity(3, 3)).unwrap();
        for q2 in [0.0, std::f64::consts::PI] {
            let q = JointState::from_slice(&[0.37, q2, 0.81]).unwrap();
            assert!(m.manipulability(&chain, &q).unwrap() < 1e-10);
        }
    }

    #[test]
    fn manipulability_matches_independent_gram_oracle() {
        // Oracle: cofactor-expansion determinant of Lambda*J (Lambda*J)^T,
        // computed without going through ConstraintModel.
        let chain = planar3();
        let q = JointState::from_degrees(&[10.0, 95.0, 5.0]).unwrap();
        let m = ConstraintModel::preset("lambda_xy").unwrap();

        let j = chain.jacobian(&q).unwrap();
        let a = j.rows(0, 2).into_owned();
        let g00 = a.row(0).dot(&a.row(0));
        let g01 = a.row(0).dot(&a.row(1));
        let g11 = a.row(1).dot(&a.row(1));
        let oracle = (g00 * g11 - g01 * g01).sqrt();

        assert_abs_diff_eq!(m.manipulability(&chain, &q).unwrap(), oracle, epsilon = 1e-12);
    }

    #[test]
    fn manipulability_invariant_under_orthogonal_row_mixing() {
        let chain = planar3();
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let base = ConstraintModel::preset("lambda_xy").unwrap();
        for _ in 0..100 {
            let theta: f64 = rng.gen_range(0.0..std::f64::consts::TAU);
            let rot = DMatrix::from_row_slice(2, 2, &[theta.cos(), -theta.sin(), theta.sin(), theta.cos()]);
            let mixed = ConstraintModel::new(&rot * base.lambda()).unwrap();
            let q = JointState::from_slice(&[
                rng.gen_range(-1.5..1.5),
                rng.gen_range(0.2..2.8),
                rng.gen_range(-1.5..1.5),
            ])
            .unwrap();
            let v0 = base.manipulability(&chain, &q).unwrap();
            let v1 = mixed.manipulability(&chain, &q).unwrap();
            assert_abs_diff_eq!(v0, v1, epsilon = 1e-10);
        }
    }

    #[test]
    fn manipulability_scales_linearly_with_row_scaling() {
        let chain = planar3();
        let q = JointState::from_degrees(&[12.0, 80.0, -20.0]).unwrap();
        let base = ConstraintModel::preset("lambda_xy").unwrap();
        let c = 2.75;
        let mut scaled = base.lambda().clone();
        scaled.row_mut(0).scale_mut(c);
        let scaled = ConstraintModel::new(scaled).unwrap();
        let v0 = base.manipulability(&chain, &q).unwrap();
        let v1 = scaled.manipulability(&chain, &q).unwrap();
        assert_abs_diff_eq!(v1, c * v0, epsilon = 1e-10);
    }

    #[test]
    fn unit_row_constructor_normalizes() {
        let lambda = DMatrix::from_row_slice(2, 3, &[2.0, 0.0, 0.0, 0.0, 0.0, -0.5]);
        let m = ConstraintModel::with_unit_rows(lambda).unwrap();
        for row in m.lambda().row_iter() {
            assert_abs_diff_eq!(row.norm(), 1.0, epsilon = 1e-14);
        }
    }

    #[test]
    fn plain_pinv_blows_up_near_singularity_truncate_stays_finite() {
        // Second singular value sits below the MatlabLike threshold of
        // max(2,3) * ulp(1) ~ 6.7e-16.
        let eps = 1e-16;
        let a = DMatrix::from_row_slice(2, 3, &[1.0, 0.0, 0.0, 0.0, eps, 0.0]);
        let plain = pseudoinverse(&a, &PinvPolicy::plain()).unwrap();
        assert!(plain.abs().max() >= 1.0 / eps * 0.99);
        let trunc = pseudoinverse(&a, &PinvPolicy::truncate()).unwrap();
        assert!(trunc.abs().max() <= 1.0 + 1e-12);
        assert!(trunc.iter().all(|v| v.is_finite()));
    }

    #[test]
    fn all_zero_matrix_plain_mode_errors() {
        let a = DMatrix::zeros(2, 3);
        assert!(matches!(pseudoinverse(&a, &PinvPolicy::plain()), Err(ManipError::SingularConstraint)));
        // Truncate mode keeps it finite (all reciprocals zeroed).
        let p = pseudoinverse(&a, &PinvPolicy::truncate()).unwrap();
        assert!(p.abs().max() == 0.0);
    }

    #[test]
    fn manipulability_agrees_with_gram_determinant_when_well_conditioned() {
        let chain = planar3();
        let mut rng = ChaCha8Rng::seed_from_u64(6);
        let m = ConstraintModel::preset("lambda_xy").unwrap();
        for _ in 0..50 {
            let q = JointState::from_slice(&[
                rng.gen_range(-0.5..0.5),
                rng.gen_range(0.7..2.3),
                rng.gen_range(-0.5..0.5),
            ])
            .unwrap();
            let a = m.constraint_matrix(&chain, &q).unwrap();
            let gram = &a * a.transpose();
            let det = gram.determinant();
            assert_abs_diff_eq!(
                m.manipulability(&chain, &q).unwrap(),
                det.max(0.0).sqrt(),
                epsilon = 1e-10
            );
        }
    }

    #[test]
    fn ulp_matches_eps_semantics() {
        assert_abs_diff_eq!(ulp(1.0), f64::EPSILON, epsilon = 0.0);
        assert_abs_diff_eq!(ulp(2.0), 2.0 * f64::EPSILON, epsilon = 0.0);
        assert_abs_diff_eq!(ulp(3.0), 2.0 * f64::EPSILON, epsilon = 0.0);
    }
}
