//! Exact and randomized Euclidean embeddings of tree metrics, and a test for
//! when `d(x, y)^(1/p)` can be realized as a Euclidean distance.
//!
//! A map `f` is a *power-p embedding* of a tree when
//! `‖f(x) − f(y)‖^p = d(x, y)` for every pair of nodes. Every tree admits an
//! exact power-2 embedding (built by [`canonical_pythagorean_embedding`]),
//! which a sum of independent Gaussian branches approximates in high
//! dimension ([`random_branch_embedding`]). For `p < 2` large stars have no
//! power-p embedding at all.

use alloc::format;
use alloc::vec::Vec;

use nalgebra::{DMatrix, SymmetricEigen};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::error::{Error, Result};
use crate::tree::Tree;
use crate::vector;

/// One real vector per tree node, all of the same dimension.
#[derive(Debug, Clone, PartialEq)]
pub struct PointCloud {
    dim: usize,
    points: Vec<Vec<f64>>,
}

impl PointCloud {
    pub fn new(dim: usize, points: Vec<Vec<f64>>) -> Result<Self> {
        for (i, p) in points.iter().enumerate() {
            if p.len() != dim {
                return Err(Error::DimensionMismatch {
                    expected: dim,
                    found: p.len(),
                });
            }
            if !vector::is_finite(p) {
                return Err(Error::validation(format!("point {i} is not finite")));
            }
        }
        Ok(PointCloud { dim, points })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn point(&self, node: usize) -> &[f64] {
        &self.points[node]
    }

    pub fn points(&self) -> &[Vec<f64>] {
        &self.points
    }

    pub fn into_points(self) -> Vec<Vec<f64>> {
        self.points
    }
}

/// Embeds a tree in `R^(n-1)` so that squared distances equal tree distances.
///
/// The root maps to the origin and each remaining node, taken in index order,
/// owns one standard basis vector that is added to its parent's image.
pub fn canonical_pythagorean_embedding(tree: &Tree) -> PointCloud {
    let n = tree.len();
    let dim = n - 1;
    let root = tree.root();
    let axis = |node: usize| if node < root { node } else { node - 1 };

    let mut points = alloc::vec![vector::zeros(dim); n];
    for node in tree.bfs_order().into_iter().skip(1) {
        let parent = tree.parent(node).expect("non-root node has a parent");
        let mut p = points[parent].clone();
        p[axis(node)] += 1.0;
        points[node] = p;
    }
    PointCloud { dim, points }
}

/// Like [`canonical_pythagorean_embedding`] but each edge gets an i.i.d.
/// `N(0, I/dim)` branch vector. Deterministic for a given `seed`.
pub fn random_branch_embedding(tree: &Tree, dim: usize, seed: u64) -> Result<PointCloud> {
    if dim == 0 {
        return Err(Error::validation("embedding dimension must be at least 1"));
    }
    let n = tree.len();
    let scale = 1.0 / libm::sqrt(dim as f64);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);

    // Draw branches in node order so the stream does not depend on traversal.
    let mut branches: Vec<Option<Vec<f64>>> = alloc::vec![None; n];
    for (node, slot) in branches.iter_mut().enumerate() {
        if node == tree.root() {
            continue;
        }
        let v = (0..dim)
            .map(|_| {
                let z: f64 = StandardNormal.sample(&mut rng);
                z * scale
            })
            .collect();
        *slot = Some(v);
    }

    let mut points = alloc::vec![vector::zeros(dim); n];
    for node in tree.bfs_order().into_iter().skip(1) {
        let parent = tree.parent(node).expect("non-root node has a parent");
        let branch = branches[node].as_ref().expect("branch drawn for non-root");
        points[node] = points[parent].iter().zip(branch).map(|(a, b)| a + b).collect();
    }
    Ok(PointCloud { dim, points })
}

/// Largest `| ‖f(x) − f(y)‖^p − d(x, y) |` over all node pairs.
pub fn verify_power_p(cloud: &PointCloud, tree: &Tree, p: f64) -> Result<f64> {
    if cloud.len() < tree.len() {
        return Err(Error::validation(format!(
            "cloud has {} points but tree has {} nodes",
            cloud.len(),
            tree.len()
        )));
    }
    if !(p > 0.0) {
        return Err(Error::validation("p must be positive"));
    }
    let d = tree.distance_matrix();
    let mut worst = 0.0f64;
    for i in 0..tree.len() {
        for j in (i + 1)..tree.len() {
            let sq = vector::sq_dist(cloud.point(i), cloud.point(j));
            let dist_p = if p == 2.0 { sq } else { libm::pow(sq, p / 2.0) };
            worst = worst.max((dist_p - d.get(i, j) as f64).abs());
        }
    }
    Ok(worst)
}

/// How negative the smallest Gram eigenvalue may be before it counts as a
/// genuine violation of positive semidefiniteness.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Tolerance {
    /// Fraction of the largest eigenvalue magnitude.
    Relative(f64),
    Absolute(f64),
}

impl Default for Tolerance {
    fn default() -> Self {
        Tolerance::Relative(1e-8)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FeasibilityReport {
    pub p: f64,
    pub min_eigenvalue: f64,
    pub max_eigenvalue_magnitude: f64,
    pub feasible: bool,
    /// The absolute tolerance that was applied.
    pub tolerance: f64,
}

/// Decides whether a power-p embedding of the metric exists.
///
/// A power-p embedding exists iff the matrix of `d^(2/p)` is a squared
/// Euclidean distance matrix, which holds iff its double-centred Gram matrix
/// `−½ J D J` is positive semidefinite. `distances` is `n × n` row-major.
pub fn power_p_feasibility(
    distances: &[f64],
    n: usize,
    p: f64,
    tolerance: Tolerance,
) -> Result<FeasibilityReport> {
    validate_metric(distances, n)?;
    if !(p > 0.0) || !p.is_finite() {
        return Err(Error::validation("p must be positive and finite"));
    }
    let exponent = 2.0 / p;
    let powered = DMatrix::from_fn(n, n, |i, j| {
        let d = distances[i * n + j];
        if d == 0.0 {
            0.0
        } else {
            libm::pow(d, exponent)
        }
    });
    let gram = double_center(&powered);
    let eigen = SymmetricEigen::new(gram);
    let min_eigenvalue = eigen.eigenvalues.iter().copied().fold(f64::INFINITY, f64::min);
    let max_mag = eigen.eigenvalues.iter().fold(0.0f64, |m, e| m.max(e.abs()));
    let tol = match tolerance {
        Tolerance::Relative(r) => r * max_mag,
        Tolerance::Absolute(a) => a,
    };
    Ok(FeasibilityReport {
        p,
        min_eigenvalue: if n == 0 { 0.0 } else { min_eigenvalue },
        max_eigenvalue_magnitude: max_mag,
        feasible: n == 0 || min_eigenvalue >= -tol,
        tolerance: tol,
    })
}

/// `−½ · J · D · J` with `J = I − 11ᵀ/n`.
pub(crate) fn double_center(d: &DMatrix<f64>) -> DMatrix<f64> {
    let n = d.nrows();
    if n == 0 {
        return d.clone();
    }
    let row_means: Vec<f64> = (0..n).map(|i| d.row(i).sum() / n as f64).collect();
    let col_means: Vec<f64> = (0..n).map(|j| d.column(j).sum() / n as f64).collect();
    let grand = row_means.iter().sum::<f64>() / n as f64;
    DMatrix::from_fn(n, n, |i, j| -0.5 * (d[(i, j)] - row_means[i] - col_means[j] + grand))
}

fn validate_metric(distances: &[f64], n: usize) -> Result<()> {
    if distances.len() != n * n {
        return Err(Error::DimensionMismatch {
            expected: n * n,
            found: distances.len(),
        });
    }
    let scale = distances.iter().fold(1.0f64, |m, d| m.max(d.abs()));
    for i in 0..n {
        if distances[i * n + i] != 0.0 {
            return Err(Error::validation(format!("diagonal entry {i} is nonzero")));
        }
        for j in 0..n {
            let d = distances[i * n + j];
            if !d.is_finite() || d < 0.0 {
                return Err(Error::validation(format!(
                    "entry ({i}, {j}) must be finite and nonnegative"
                )));
            }
            if (d - distances[j * n + i]).abs() > 1e-12 * scale {
                return Err(Error::validation(format!(
                    "matrix is not symmetric at ({i}, {j})"
                )));
            }
        }
    }
    Ok(())
}

/// Upper bound on the smallest pairwise `‖v_i − v_j‖^p` among `k` unit vectors,
/// namely `(2 + 2/(k−1))^(p/2)`. A value below 2 certifies that the star with
/// `k` leaves has no power-p embedding.
pub fn star_tree_pairwise_bound(k: usize, p: f64) -> Result<f64> {
    if k < 2 {
        return Err(Error::validation("star bound needs at least two leaves"));
    }
    if !(p > 0.0) {
        return Err(Error::validation("p must be positive"));
    }
    Ok(libm::pow(2.0 + 2.0 / (k as f64 - 1.0), p / 2.0))
}

/// Squared endpoint distance of a random branch embedding, one sample per seed.
pub fn branch_distance_samples(
    tree: &Tree,
    x: usize,
    y: usize,
    dim: usize,
    seeds: core::ops::Range<u64>,
) -> Result<Vec<f64>> {
    if x >= tree.len() || y >= tree.len() {
        return Err(Error::NotFound(format!("node pair ({x}, {y})")));
    }
    seeds
        .map(|seed| {
            let cloud = random_branch_embedding(tree, dim, seed)?;
            Ok(vector::sq_dist(cloud.point(x), cloud.point(y)))
        })
        .collect()
}

/// Sample mean and unbiased standard deviation.
pub fn mean_std(samples: &[f64]) -> (f64, f64) {
    let n = samples.len() as f64;
    if samples.is_empty() {
        return (f64::NAN, f64::NAN);
    }
    let mean = samples.iter().sum::<f64>() / n;
    if samples.len() < 2 {
        return (mean, 0.0);
    }
    let var = samples.iter().map(|s| (s - mean) * (s - mean)).sum::<f64>() / (n - 1.0);
    (mean, libm::sqrt(var))
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::vec;

    #[test]
    fn canonical_small_cases() {
        let t = Tree::path(2).unwrap();
        let c = canonical_pythagorean_embedding(&t);
        assert_eq!(c.point(0), &[0.0]);
        assert_eq!(c.point(1), &[1.0]);

        let t = Tree::path(3).unwrap();
        let c = canonical_pythagorean_embedding(&t);
        assert_eq!(c.point(2), &[1.0, 1.0]);
        assert_eq!(vector::sq_dist(c.point(0), c.point(2)), 2.0);
    }

    #[test]
    fn canonical_non_zero_root() {
        let t = Tree::from_parents(vec![Some(2), Some(2), None, Some(0)]).unwrap();
        let c = canonical_pythagorean_embedding(&t);
        assert_eq!(c.point(2), &[0.0, 0.0, 0.0]);
        assert!(verify_power_p(&c, &t, 2.0).unwrap() < 1e-12);
    }

    #[test]
    fn random_branch_is_reproducible() {
        let t = Tree::path(5).unwrap();
        let a = random_branch_embedding(&t, 1, 42).unwrap();
        let b = random_branch_embedding(&t, 1, 42).unwrap();
        assert_eq!(a, b);
        let c = random_branch_embedding(&t, 1, 43).unwrap();
        assert_ne!(a, c);
        assert_eq!(a.point(0), &[0.0]);
        assert!(random_branch_embedding(&t, 0, 1).is_err());
    }

    #[test]
    fn zero_cloud_deviation_is_tree_distance() {
        let t = Tree::path(2).unwrap();
        let cloud = PointCloud::new(3, vec![vec![0.0; 3]; 2]).unwrap();
        assert_eq!(verify_power_p(&cloud, &t, 2.0).unwrap(), 1.0);
    }

    #[test]
    fn missing_node_is_rejected() {
        let t = Tree::path(3).unwrap();
        let cloud = PointCloud::new(1, vec![vec![0.0]; 2]).unwrap();
        assert!(verify_power_p(&cloud, &t, 2.0).is_err());
    }

    #[test]
    fn star_bound_values() {
        assert!((star_tree_pairwise_bound(2, 2.0).unwrap() - 4.0).abs() < 1e-12);
        let b = star_tree_pairwise_bound(50, 1.5).unwrap();
        assert!((b - libm::pow(2.0 + 2.0 / 49.0, 0.75)).abs() < 1e-15);
        assert!(b < 2.0);
        let big = star_tree_pairwise_bound(1_000_000, 2.0).unwrap();
        assert!(big > 2.0 && big < 2.00001);
        assert!(star_tree_pairwise_bound(1, 1.0).is_err());
    }

    #[test]
    fn feasibility_validates_input() {
        assert!(power_p_feasibility(&[0.0, 1.0, 2.0, 0.0], 2, 2.0, Tolerance::default()).is_err());
        assert!(power_p_feasibility(&[0.0, -1.0, -1.0, 0.0], 2, 2.0, Tolerance::default()).is_err());
        assert!(power_p_feasibility(&[1.0, 1.0, 1.0, 0.0], 2, 2.0, Tolerance::default()).is_err());
        assert!(power_p_feasibility(&[0.0, 1.0, 1.0, 0.0], 2, 0.0, Tolerance::default()).is_err());
    }

    #[test]
    fn four_point_star_p1_is_infeasible() {
        let d = Tree::star(3).unwrap().distance_matrix().to_f64();
        let r = power_p_feasibility(&d, 4, 1.0, Tolerance::default()).unwrap();
        assert!(!r.feasible);
        let r = power_p_feasibility(&d, 4, 2.0, Tolerance::default()).unwrap();
        assert!(r.feasible);
    }
}
