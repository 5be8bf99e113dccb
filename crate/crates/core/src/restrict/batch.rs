use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::{solve_single, OosProblem, SolveOptions};
use crate::error::{Error, Result};
use crate::project::{ensure_full_rank, project_ols};
use crate::proximity::{CenteredOosData, SYMMETRY_TOL};
use crate::spectral::Configuration;

/// `k` new objects at once: cross block `b` (n×k) and self block `beta`
/// (k×k, symmetric).
#[derive(Debug, Clone, PartialEq)]
pub struct BatchProblem {
    x: Configuration,
    b: DMatrix<f64>,
    beta: DMatrix<f64>,
}

impl BatchProblem {
    pub fn new(x: Configuration, b: DMatrix<f64>, beta: DMatrix<f64>) -> Result<Self> {
        let k = b.ncols();
        if k == 0 {
            return Err(Error::NoNewObjects);
        }
        if b.nrows() != x.n() {
            return Err(Error::DimensionMismatch(format!(
                "b has {} rows, configuration has {} points",
                b.nrows(),
                x.n()
            )));
        }
        if beta.nrows() != k || beta.ncols() != k {
            return Err(Error::DimensionMismatch(format!(
                "beta is {}x{}, expected {k}x{k}",
                beta.nrows(),
                beta.ncols()
            )));
        }
        for i in 0..k {
            for j in (i + 1)..k {
                let gap = (beta[(i, j)] - beta[(j, i)]).abs();
                if gap > SYMMETRY_TOL {
                    return Err(Error::AsymmetricBeyondTolerance { row: i, col: j, gap });
                }
            }
        }
        let beta = DMatrix::from_fn(k, k, |i, j| 0.5 * (beta[(i, j)] + beta[(j, i)]));
        Ok(Self { x, b, beta })
    }

    /// Uses the cross and self blocks of centered data; the Gram block is
    /// not needed once `X` is fixed.
    pub fn from_centered(x: Configuration, data: &CenteredOosData) -> Result<Self> {
        Self::new(x, data.b.clone(), data.beta.clone())
    }

    pub fn x(&self) -> &Configuration {
        &self.x
    }

    pub fn b(&self) -> &DMatrix<f64> {
        &self.b
    }

    pub fn beta(&self) -> &DMatrix<f64> {
        &self.beta
    }

    pub fn k(&self) -> usize {
        self.b.ncols()
    }

    /// Single-object problem for column `j`.
    pub fn column_problem(&self, j: usize) -> Result<OosProblem> {
        OosProblem::new(self.x.clone(), self.b.column(j).into_owned(), self.beta[(j, j)])
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BatchOptions {
    /// Stop when `‖∇F‖ <= tol (1 + F)`.
    pub tol: f64,
    /// Iteration cap per local descent.
    pub max_iter: usize,
    /// Starting points: the unperturbed ones plus `n_starts - 1` perturbed.
    pub n_starts: usize,
    pub seed: u64,
}

impl Default for BatchOptions {
    fn default() -> Self {
        Self {
            tol: 1e-10,
            max_iter: 2000,
            n_starts: 16,
            seed: 0,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct BatchResult {
    /// k×d, one row per new object.
    pub y: DMatrix<f64>,
    pub objective: f64,
    pub gradient_norm: f64,
    /// The best local minimizer met the first-order tolerance.
    pub converged: bool,
    pub starts: usize,
}

fn check_shape(bp: &BatchProblem, y: &DMatrix<f64>) -> Result<()> {
    if y.nrows() != bp.k() || y.ncols() != bp.x.dim() {
        return Err(Error::DimensionMismatch(format!(
            "Y is {}x{}, expected {}x{}",
            y.nrows(),
            y.ncols(),
            bp.k(),
            bp.x.dim()
        )));
    }
    Ok(())
}

/// `2‖XYᵗ - b‖_F² + ‖YYᵗ - β‖_F²`.
pub fn batch_objective(bp: &BatchProblem, y: &DMatrix<f64>) -> Result<f64> {
    check_shape(bp, y)?;
    let cross = bp.x.coords() * y.transpose() - &bp.b;
    let inner = y * y.transpose() - &bp.beta;
    Ok(2.0 * cross.norm_squared() + inner.norm_squared())
}

/// `4[(XYᵗ - b)ᵗX + (YYᵗ - β)Y]`.
pub fn batch_gradient(bp: &BatchProblem, y: &DMatrix<f64>) -> Result<DMatrix<f64>> {
    check_shape(bp, y)?;
    let x = bp.x.coords();
    let cross = x * y.transpose() - &bp.b;
    let inner = y * y.transpose() - &bp.beta;
    Ok((cross.transpose() * x + inner * y) * 4.0)
}

fn flatten(y: &DMatrix<f64>) -> DVector<f64> {
    DVector::from_column_slice(y.as_slice())
}

fn unflatten(v: &DVector<f64>, k: usize, d: usize) -> DMatrix<f64> {
    DMatrix::from_column_slice(k, d, v.as_slice())
}

/// BFGS with backtracking line search from `start`.
fn local_descent(bp: &BatchProblem, start: &DMatrix<f64>, opts: &BatchOptions) -> Result<(DMatrix<f64>, f64, f64)> {
    let (k, d) = (bp.k(), bp.x.dim());
    let m = k * d;
    let f = |v: &DVector<f64>| batch_objective(bp, &unflatten(v, k, d)).unwrap_or(f64::INFINITY);
    let grad = |v: &DVector<f64>| flatten(&batch_gradient(bp, &unflatten(v, k, d)).expect("shape checked"));

    let mut x = flatten(start);
    let mut fx = f(&x);
    if !fx.is_finite() {
        return Err(Error::NonFiniteObjective);
    }
    let mut g = grad(&x);
    let mut h = DMatrix::<f64>::identity(m, m);
    let mut fresh = true;
    for _ in 0..opts.max_iter {
        if g.norm() <= opts.tol * (1.0 + fx) {
            break;
        }
        let mut dir = -(&h * &g);
        if dir.dot(&g) >= 0.0 {
            h = DMatrix::identity(m, m);
            fresh = true;
            dir = -&g;
        }
        // First step on a fresh approximation is scaled to unit length.
        let mut alpha = if fresh { 1.0 / dir.norm().max(1.0) } else { 1.0 };
        let slope = dir.dot(&g);
        let mut next = None;
        for _ in 0..60 {
            let trial = &x + &dir * alpha;
            let ft = f(&trial);
            if ft.is_finite() && ft <= fx + 1e-4 * alpha * slope {
                next = Some((trial, ft));
                break;
            }
            alpha *= 0.5;
        }
        let Some((x_new, f_new)) = next else {
            if fresh {
                break;
            }
            h = DMatrix::identity(m, m);
            fresh = true;
            continue;
        };
        let g_new = grad(&x_new);
        let s = &x_new - &x;
        let yv = &g_new - &g;
        let sy = s.dot(&yv);
        if sy > 1e-14 * s.norm() * yv.norm() {
            if fresh {
                h *= sy / yv.norm_squared();
            }
            let rho = 1.0 / sy;
            let hy = &h * &yv;
            let yhy = yv.dot(&hy);
            h += (&s * s.transpose()) * (rho * rho * yhy + rho) - (&hy * s.transpose() + &s * hy.transpose()) * rho;
            fresh = false;
        }
        x = x_new;
        fx = f_new;
        g = g_new;
    }
    let gn = g.norm();
    Ok((unflatten(&x, k, d), fx, gn))
}

/// Multi-start local minimization of the batch objective.
///
/// Starts are the per-object projections, the per-object restricted
/// reconstructions, and `n_starts - 1` seeded perturbations of those two.
/// The best local minimizer found is returned; it is not certified global.
pub fn solve_batch(bp: &BatchProblem, opts: &BatchOptions) -> Result<BatchResult> {
    if !(opts.tol > 0.0) || opts.max_iter == 0 || opts.n_starts == 0 {
        return Err(Error::InvalidOption(
            "tol must be positive, max_iter and n_starts nonzero".into(),
        ));
    }
    ensure_full_rank(&bp.x)?;
    let (k, d) = (bp.k(), bp.x.dim());

    let mut projection = DMatrix::zeros(k, d);
    let mut single = DMatrix::zeros(k, d);
    let mut scale: f64 = 1.0;
    for j in 0..k {
        let p = bp.column_problem(j)?;
        let y_hat = project_ols(&bp.x, p.b())?.y_hat;
        let y_star = solve_single(&p, &SolveOptions::default())?.y_star;
        scale = scale.max(y_hat.norm()).max(y_star.norm()).max(p.beta().max(0.0).sqrt());
        projection.set_row(j, &y_hat.transpose());
        single.set_row(j, &y_star.transpose());
    }

    let mut starts = vec![projection.clone(), single.clone()];
    let mut rng = ChaCha8Rng::seed_from_u64(opts.seed);
    for i in 1..opts.n_starts {
        let base = if i % 2 == 1 { &projection } else { &single };
        let noise = DMatrix::from_fn(k, d, |_, _| rng.gen_range(-1.0..1.0) * scale);
        starts.push(base + noise);
    }

    let mut best: Option<(DMatrix<f64>, f64, f64)> = None;
    for start in &starts {
        let (y, f, gn) = local_descent(bp, start, opts)?;
        if best.as_ref().is_none_or(|b| f < b.1) {
            best = Some((y, f, gn));
        }
    }
    let (y, objective, gradient_norm) = best.expect("at least two starts");
    if !objective.is_finite() {
        return Err(Error::NonFiniteObjective);
    }
    Ok(BatchResult {
        converged: gradient_norm <= opts.tol * (1.0 + objective),
        y,
        objective,
        gradient_norm,
        starts: starts.len(),
    })
}
