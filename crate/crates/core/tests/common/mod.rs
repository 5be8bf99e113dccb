#![allow(dead_code)]

use nalgebra::{DMatrix, DVector};
use oosembed::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn example2_delta2() -> DissimilarityMatrix {
    DissimilarityMatrix::from_rows(&[
        vec![0.0, 100.0, 45.0, 45.0],
        vec![100.0, 0.0, 45.0, 45.0],
        vec![45.0, 45.0, 0.0, 64.0],
        vec![45.0, 45.0, 64.0, 0.0],
    ])
    .unwrap()
}

pub fn example2_a2() -> DVector<f64> {
    DVector::from_vec(vec![386.0, 386.0, 457.0, 457.0])
}

pub fn example2_x() -> Configuration {
    Configuration::new(DMatrix::from_row_slice(
        4,
        2,
        &[5.0, 0.0, -5.0, 0.0, 0.0, 4.0, 0.0, -4.0],
    ))
}

/// The displayed restricted-reconstruction problem: `b = 0`, `β = 400`.
pub fn example2_problem() -> OosProblem {
    OosProblem::new(example2_x(), DVector::zeros(4), 400.0).unwrap()
}

pub fn uniform_matrix(rng: &mut ChaCha8Rng, rows: usize, cols: usize, scale: f64) -> DMatrix<f64> {
    DMatrix::from_fn(rows, cols, |_, _| rng.gen_range(-scale..scale))
}

pub fn uniform_vector(rng: &mut ChaCha8Rng, len: usize, scale: f64) -> DVector<f64> {
    DVector::from_fn(len, |_, _| rng.gen_range(-scale..scale))
}

/// Squared Euclidean distances from the rows of `points` to `y`.
pub fn sq_dists_to(points: &DMatrix<f64>, y: &DVector<f64>) -> DVector<f64> {
    DVector::from_fn(points.nrows(), |i, _| (points.row(i).transpose() - y).norm_squared())
}

/// Points in general position in `R^p` plus one extra point, as squared
/// dissimilarities.
pub struct EuclideanInstance {
    pub points: DMatrix<f64>,
    pub delta2: DissimilarityMatrix,
    pub new_point: DVector<f64>,
    pub a2: DVector<f64>,
}

pub fn euclidean_instance(rng: &mut ChaCha8Rng, n: usize, p: usize) -> EuclideanInstance {
    let points = uniform_matrix(rng, n, p, 5.0);
    let delta2 = DissimilarityMatrix::from_points(&points).squared();
    let new_point = uniform_vector(rng, p, 7.0);
    let a2 = sq_dists_to(&points, &new_point);
    EuclideanInstance {
        points,
        delta2,
        new_point,
        a2,
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Kind {
    Shrink,
    Balanced,
    Expand,
    Hard,
}

pub const KINDS: [Kind; 4] = [Kind::Shrink, Kind::Balanced, Kind::Expand, Kind::Hard];

fn ols(x: &DMatrix<f64>, b: &DVector<f64>) -> DVector<f64> {
    (x.transpose() * x).lu().solve(&(x.transpose() * b)).unwrap()
}

/// Random single-object problem of the requested kind.
///
/// `Hard` removes the component of `Xᵗb` along the eigenvector of the
/// smallest eigenvalue of `XᵗX` and picks `β` large enough that the solution
/// sits at the corresponding pole.
pub fn random_problem(rng: &mut ChaCha8Rng, d: usize, kind: Kind) -> OosProblem {
    let n = d + rng.gen_range(1..=5);
    let x = uniform_matrix(rng, n, d, 3.0);
    let mut b = uniform_vector(rng, n, 4.0);
    let xtx = x.transpose() * &x;
    if kind == Kind::Hard {
        let es = xtx.clone().symmetric_eigen();
        let k = es.eigenvalues.imin();
        let v = es.eigenvectors.column(k).into_owned();
        let s = es.eigenvalues[k];
        let along = v.dot(&(x.transpose() * &b));
        b -= &x * &v * (along / s);
    }
    let r2 = ols(&x, &b).norm_squared();
    let s1 = xtx.symmetric_eigen().eigenvalues.max();
    let beta = match kind {
        Kind::Shrink => r2 - rng.gen_range(0.1..2.0) * (1.0 + r2) - rng.gen_range(0.0..1.0) * s1,
        Kind::Balanced => r2,
        Kind::Expand => r2 + rng.gen_range(0.1..3.0) * (1.0 + s1),
        Kind::Hard => r2 + s1 * rng.gen_range(1.5..4.0) + 5.0,
    };
    OosProblem::new(Configuration::new(x), b, beta).unwrap()
}

/// Central finite-difference gradient with per-coordinate step.
pub fn fd_gradient<F: Fn(&DVector<f64>) -> f64>(f: F, y: &DVector<f64>) -> DVector<f64> {
    DVector::from_fn(y.len(), |i, _| {
        let h = 1e-5 * (1.0 + y[i].abs());
        let mut up = y.clone();
        let mut down = y.clone();
        up[i] += h;
        down[i] -= h;
        (f(&up) - f(&down)) / (2.0 * h)
    })
}

/// Solves a square system by Gaussian elimination with full pivoting.
pub fn full_pivot_solve(a: &DMatrix<f64>, rhs: &DVector<f64>) -> DVector<f64> {
    let n = a.nrows();
    let mut m = a.clone();
    let mut r = rhs.clone();
    let mut perm: Vec<usize> = (0..n).collect();
    for k in 0..n {
        let (mut pi, mut pj, mut best) = (k, k, 0.0);
        for i in k..n {
            for j in k..n {
                if m[(i, j)].abs() > best {
                    best = m[(i, j)].abs();
                    pi = i;
                    pj = j;
                }
            }
        }
        assert!(best > 0.0, "singular system");
        m.swap_rows(k, pi);
        r.swap_rows(k, pi);
        m.swap_columns(k, pj);
        perm.swap(k, pj);
        for i in (k + 1)..n {
            let f = m[(i, k)] / m[(k, k)];
            for j in k..n {
                m[(i, j)] -= f * m[(k, j)];
            }
            r[i] -= f * r[k];
        }
    }
    let mut z = DVector::zeros(n);
    for k in (0..n).rev() {
        let s: f64 = ((k + 1)..n).map(|j| m[(k, j)] * z[j]).sum();
        z[k] = (r[k] - s) / m[(k, k)];
    }
    let mut x = DVector::zeros(n);
    for (k, &p) in perm.iter().enumerate() {
        x[p] = z[k];
    }
    x
}
