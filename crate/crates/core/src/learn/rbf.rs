//! Gaussian RBF regression over joint states, with k-means center placement.

use nalgebra::{DMatrix, DVector};
use rand::seq::index::sample;
use rand_chacha::ChaCha8Rng;

/// A fitted radial-basis-function map from joint states to vectors, with an
/// optional polynomial tail (degree 0-2) as is usual for RBF regression.
#[derive(Clone, Debug)]
pub struct RbfModel {
    centers: Vec<DVector<f64>>,
    width: f64,
    poly_degree: usize,
    /// Output weights, `out_dim x n_features`.
    weights: DMatrix<f64>,
}

impl RbfModel {
    pub fn new(
        centers: Vec<DVector<f64>>,
        width: f64,
        poly_degree: usize,
        weights: DMatrix<f64>,
    ) -> Self {
        debug_assert_eq!(
            weights.ncols(),
            feature_count(centers.len(), centers[0].len(), poly_degree)
        );
        Self { centers, width, poly_degree, weights }
    }

    pub fn centers(&self) -> &[DVector<f64>] {
        &self.centers
    }

    pub fn width(&self) -> f64 {
        self.width
    }

    pub fn poly_degree(&self) -> usize {
        self.poly_degree
    }

    pub fn weights(&self) -> &DMatrix<f64> {
        &self.weights
    }

    pub fn n_features(&self) -> usize {
        self.weights.ncols()
    }

    /// Gaussian activations followed by the monomial tail.
    pub fn features(&self, x: &DVector<f64>) -> DVector<f64> {
        let dim = x.len();
        let mut out = DVector::zeros(feature_count(self.centers.len(), dim, self.poly_degree));
        let denom = 2.0 * self.width * self.width;
        for (i, c) in self.centers.iter().enumerate() {
            out[i] = (-(x - c).norm_squared() / denom).exp();
        }
        let mut at = self.centers.len();
        if self.poly_degree >= 1 {
            out[at] = 1.0;
            at += 1;
            for i in 0..dim {
                out[at + i] = x[i];
            }
            at += dim;
        }
        if self.poly_degree >= 2 {
            for i in 0..dim {
                for j in i..dim {
                    out[at] = x[i] * x[j];
                    at += 1;
                }
            }
        }
        out
    }

    pub fn predict(&self, x: &DVector<f64>) -> DVector<f64> {
        &self.weights * self.features(x)
    }
}

/// Number of features for the given center count, state dimension, and
/// polynomial degree.
pub fn feature_count(n_centers: usize, dim: usize, poly_degree: usize) -> usize {
    let mut n = n_centers;
    if poly_degree >= 1 {
        n += 1 + dim;
    }
    if poly_degree >= 2 {
        n += dim * (dim + 1) / 2;
    }
    n
}

/// Lloyd's algorithm with seeded initialization; empty clusters keep their
/// previous center.
pub fn kmeans(
    points: &[DVector<f64>],
    k: usize,
    rng: &mut ChaCha8Rng,
    max_iters: usize,
) -> Vec<DVector<f64>> {
    assert!(k >= 1 && k <= points.len());
    let mut centers: Vec<DVector<f64>> = sample(rng, points.len(), k)
        .into_iter()
        .map(|i| points[i].clone())
        .collect();
    let mut assignment = vec![0usize; points.len()];

    for _ in 0..max_iters {
        let mut changed = false;
        for (pi, p) in points.iter().enumerate() {
            let mut best = 0usize;
            let mut best_d = f64::INFINITY;
            for (ci, c) in centers.iter().enumerate() {
                let d = (p - c).norm_squared();
                if d < best_d {
                    best_d = d;
                    best = ci;
                }
            }
            if assignment[pi] != best {
                assignment[pi] = best;
                changed = true;
            }
        }

        let dim = points[0].len();
        let mut sums = vec![DVector::zeros(dim); k];
        let mut counts = vec![0usize; k];
        for (pi, p) in points.iter().enumerate() {
            sums[assignment[pi]] += p;
            counts[assignment[pi]] += 1;
        }
        for (ci, (sum, count)) in sums.into_iter().zip(counts.into_iter()).enumerate() {
            if count > 0 {
                centers[ci] = sum / count as f64;
            }
        }

        if !changed {
            break;
        }
    }
    centers
}

/// Median of all pairwise Euclidean distances.
pub fn median_pairwise_distance(points: &[DVector<f64>]) -> f64 {
    let mut dists = Vec::with_capacity(points.len() * (points.len() - 1) / 2);
    for i in 0..points.len() {
        for j in (i + 1)..points.len() {
            dists.push((&points[i] - &points[j]).norm());
        }
    }
    if dists.is_empty() {
        return 0.0;
    }
    dists.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let mid = dists.len() / 2;
    if dists.len() % 2 == 1 {
        dists[mid]
    } else {
        0.5 * (dists[mid - 1] + dists[mid])
    }
}
