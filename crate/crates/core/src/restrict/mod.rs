//! Out-of-sample embedding by restricted reconstruction.
//!
//! With the in-sample configuration `X` held fixed, the new point `y`
//! minimizes the quartic
//!
//! ```text
//! F(y) = 2‖Xy - b‖² + (yᵗy - β)²
//! ```
//!
//! Every minimizer with squared norm `r²` also minimizes `2‖Xy - b‖` on the
//! sphere `yᵗy = r²`, a trust-region-type problem whose solutions are the
//! ridge solutions `ŷ(λ)` of `(XᵗX + λI) y = Xᵗb`. [`solve_single`] searches
//! over `λ` (of either sign) and treats the hard case where `Xᵗb` has no
//! component along an eigenvector of `XᵗX`.

mod arc;
mod batch;
mod single;
mod stress;

pub use arc::{arc, ArcTrace};
pub use batch::{batch_gradient, batch_objective, solve_batch, BatchOptions, BatchProblem, BatchResult};
pub use single::{solve_single, Diagnostics, EmbeddingResult, Method, Regime, SolveOptions};
pub use stress::{raw_stress, stress_majorize, stress_oos, StressOptions, StressTrace};

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};
use crate::project::{ensure_full_rank, RANK_TOL};
use crate::spectral::{symmetric_eigen, Configuration};

/// Half-width of the band around each eigenvalue of `-XᵗX`, relative to
/// the largest eigenvalue of `XᵗX`, inside which the ridge system is
/// treated as singular.
pub const GUARD: f64 = 1e-9;

/// Fixed configuration `X`, centered cross-similarities `b` and centered
/// self-similarity `β` of one new object.
#[derive(Debug, Clone, PartialEq)]
pub struct OosProblem {
    x: Configuration,
    b: DVector<f64>,
    beta: f64,
}

impl OosProblem {
    pub fn new(x: Configuration, b: DVector<f64>, beta: f64) -> Result<Self> {
        if b.len() != x.n() {
            return Err(Error::DimensionMismatch(format!(
                "b has length {}, configuration has {} points",
                b.len(),
                x.n()
            )));
        }
        if !beta.is_finite() || b.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFiniteObjective);
        }
        Ok(Self { x, b, beta })
    }

    pub fn x(&self) -> &Configuration {
        &self.x
    }

    pub fn b(&self) -> &DVector<f64> {
        &self.b
    }

    pub fn beta(&self) -> f64 {
        self.beta
    }

    pub fn dim(&self) -> usize {
        self.x.dim()
    }
}

fn check_dim(p: &OosProblem, y: &DVector<f64>) -> Result<()> {
    if y.len() != p.dim() {
        return Err(Error::DimensionMismatch(format!(
            "y has length {}, expected {}",
            y.len(),
            p.dim()
        )));
    }
    Ok(())
}

/// `2‖Xy - b‖² + (yᵗy - β)²`.
pub fn objective(p: &OosProblem, y: &DVector<f64>) -> Result<f64> {
    check_dim(p, y)?;
    let r = p.x.coords() * y - &p.b;
    let q = y.norm_squared() - p.beta;
    Ok(2.0 * r.norm_squared() + q * q)
}

/// `4Xᵗ(Xy - b) + 4(yᵗy - β)y`.
pub fn objective_gradient(p: &OosProblem, y: &DVector<f64>) -> Result<DVector<f64>> {
    check_dim(p, y)?;
    let x = p.x.coords();
    let r = x * y - &p.b;
    let q = y.norm_squared() - p.beta;
    Ok(x.transpose() * r * 4.0 + y * (4.0 * q))
}

fn objective_hessian(p: &OosProblem, y: &DVector<f64>) -> DMatrix<f64> {
    let x = p.x.coords();
    let d = y.len();
    let q = y.norm_squared() - p.beta;
    (x.transpose() * x + DMatrix::identity(d, d) * q) * 4.0 + y * y.transpose() * 8.0
}

/// A point on the ridge trace.
#[derive(Debug, Clone, PartialEq)]
pub struct RidgePoint {
    pub lambda: f64,
    pub y: DVector<f64>,
    /// Objective value at `y`.
    pub phi: f64,
    /// `λ` lies inside the guard band of an eigenvalue of `-XᵗX`; `y` was
    /// not obtained from the ridge system.
    pub singular_flag: bool,
}

/// Spectral form of the ridge system: `XᵗX = V diag(s) Vᵗ` and
/// `c = Vᵗ Xᵗ b`, so that `ŷ(λ) = Σ c_i/(s_i+λ) v_i`.
#[derive(Debug, Clone)]
pub(crate) struct RidgeSystem<'a> {
    pub(crate) problem: &'a OosProblem,
    /// Eigenvalues of `XᵗX` (squared singular values), descending.
    pub(crate) s: DVector<f64>,
    pub(crate) v: DMatrix<f64>,
    pub(crate) c: DVector<f64>,
}

impl<'a> RidgeSystem<'a> {
    pub(crate) fn new(problem: &'a OosProblem) -> Result<Self> {
        ensure_full_rank(&problem.x)?;
        let x = problem.x.coords();
        let es = symmetric_eigen(&(x.transpose() * x))?;
        let c = es.eigenvectors.transpose() * (x.transpose() * &problem.b);
        let s = es.eigenvalues;
        let d = s.len();
        if !(s[d - 1] > (RANK_TOL * RANK_TOL) * s[0]) {
            return Err(Error::RankDeficientConfiguration {
                sigma_min: s[d - 1].max(0.0).sqrt(),
                sigma_max: s[0].sqrt(),
            });
        }
        Ok(Self {
            problem,
            s,
            v: es.eigenvectors,
            c,
        })
    }

    pub(crate) fn guard_width(&self) -> f64 {
        GUARD * self.s[0]
    }

    /// Eigenvalue of `XᵗX` whose guard band contains `-λ`, if any.
    pub(crate) fn offending(&self, lambda: f64) -> Option<f64> {
        let g = self.guard_width();
        self.s.iter().copied().find(|&s| (lambda + s).abs() <= g)
    }

    /// `ŷ(λ)` without the guard check; callers stay off the poles.
    pub(crate) fn y_at(&self, lambda: f64) -> DVector<f64> {
        let coef = DVector::from_fn(self.s.len(), |i, _| self.c[i] / (self.s[i] + lambda));
        &self.v * coef
    }

    pub(crate) fn norm_sq_at(&self, lambda: f64) -> f64 {
        self.s
            .iter()
            .zip(self.c.iter())
            .map(|(s, c)| {
                let t = c / (s + lambda);
                t * t
            })
            .sum()
    }

    pub(crate) fn phi(&self, lambda: f64) -> f64 {
        objective(self.problem, &self.y_at(lambda)).unwrap_or(f64::INFINITY)
    }

    /// `λ + β - ‖ŷ(λ)‖²`; zero exactly at stationary points of the objective
    /// that lie on the ridge trace.
    pub(crate) fn stationarity_gap(&self, lambda: f64) -> f64 {
        lambda + self.problem.beta - self.norm_sq_at(lambda)
    }

    pub(crate) fn r_hat_squared(&self) -> f64 {
        self.norm_sq_at(0.0)
    }

    pub(crate) fn rhs_norm(&self) -> f64 {
        self.c.norm()
    }
}

/// Solves `(XᵗX + λI) y = Xᵗb` through the spectral form.
pub fn ridge_solve(p: &OosProblem, lambda: f64) -> Result<RidgePoint> {
    let sys = RidgeSystem::new(p)?;
    if let Some(s) = sys.offending(lambda) {
        return Err(Error::NearSingular { lambda, eigenvalue: -s });
    }
    let y = sys.y_at(lambda);
    let phi = objective(p, &y)?;
    Ok(RidgePoint {
        lambda,
        y,
        phi,
        singular_flag: false,
    })
}

/// `r̂² = ‖(XᵗX)⁻¹Xᵗb‖²`, the squared norm of the projection solution.
pub fn r_hat_squared(p: &OosProblem) -> Result<f64> {
    Ok(RidgeSystem::new(p)?.r_hat_squared())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::project::project_ols;
    use approx::assert_abs_diff_eq;

    pub(crate) fn example2_problem() -> OosProblem {
        let x = Configuration::new(DMatrix::from_row_slice(
            4,
            2,
            &[5.0, 0.0, -5.0, 0.0, 0.0, 4.0, 0.0, -4.0],
        ));
        OosProblem::new(x, DVector::zeros(4), 400.0).unwrap()
    }

    #[test]
    fn objective_examples() {
        let p = example2_problem();
        let y = DVector::from_vec(vec![0.0, 368f64.sqrt()]);
        assert_abs_diff_eq!(objective(&p, &y).unwrap(), 24576.0, epsilon = 1e-9);
        assert_abs_diff_eq!(objective(&p, &DVector::zeros(2)).unwrap(), 160000.0, epsilon = 1e-12);
        let zero = OosProblem::new(p.x().clone(), DVector::zeros(4), 0.0).unwrap();
        assert_eq!(objective(&zero, &DVector::zeros(2)).unwrap(), 0.0);
        assert!(matches!(
            objective(&p, &DVector::zeros(3)),
            Err(Error::DimensionMismatch(_))
        ));
    }

    #[test]
    fn gradient_specialization() {
        let x = Configuration::new(DMatrix::from_row_slice(3, 2, &[1.0, 2.0, -1.0, 0.5, 0.0, -2.5]));
        let p = OosProblem::new(x.clone(), DVector::zeros(3), 0.0).unwrap();
        let y = DVector::from_vec(vec![0.7, -1.3]);
        let xtx = x.coords().transpose() * x.coords();
        let expected = &xtx * &y * 4.0 + &y * (4.0 * y.norm_squared());
        assert_abs_diff_eq!(objective_gradient(&p, &y).unwrap(), expected, epsilon = 1e-12);
    }

    #[test]
    fn ridge_examples() {
        let p = example2_problem();
        let pt = ridge_solve(&p, -30.0).unwrap();
        assert_eq!(pt.y, DVector::zeros(2));
        assert!(matches!(ridge_solve(&p, -32.0), Err(Error::NearSingular { .. })));
        assert_eq!(r_hat_squared(&p).unwrap(), 0.0);

        let x = Configuration::new(DMatrix::from_row_slice(3, 2, &[1.0, 2.0, -1.0, 0.5, 0.0, -2.5]));
        let b = DVector::from_vec(vec![1.0, -2.0, 0.5]);
        let p = OosProblem::new(x.clone(), b.clone(), 1.0).unwrap();
        let ols = project_ols(&x, &b).unwrap();
        assert_abs_diff_eq!(ridge_solve(&p, 0.0).unwrap().y, ols.y_hat, epsilon = 1e-12);
        assert_abs_diff_eq!(r_hat_squared(&p).unwrap(), ols.y_hat.norm_squared(), epsilon = 1e-12);
        let small = ridge_solve(&p, 1e3).unwrap().y.norm();
        let smaller = ridge_solve(&p, 1e6).unwrap().y.norm();
        assert!(smaller < small && small < ols.y_hat.norm());
    }
}
