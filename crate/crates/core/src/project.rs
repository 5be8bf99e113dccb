//! Out-of-sample embedding by projection onto the fixed representation space.
//!
//! Three formulas are provided. They are algebraically identical for a
//! centered configuration and are kept separate so each can check the others:
//! the kernel-PCA form `Σ_d⁻¹ U_dᵗ b`, the least-squares form
//! `(XᵗX)⁻¹ Xᵗ b`, and Landmark-MDS triangulation from raw squared
//! dissimilarities.

use nalgebra::DVector;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::proximity::{dissim_to_centered_sim, DissimilarityMatrix};
use crate::spectral::{symmetric_eigen, Configuration, TruncatedGram};

/// `σ_d / σ_1` below this makes the spectral formula refuse.
pub const ZERO_SINGULAR_TOL: f64 = 1e-12;
/// `σ_d / σ_1` below this makes `X` rank deficient.
pub const RANK_TOL: f64 = 1e-10;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Formula {
    Spectral,
    Ols,
    Landmark,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ProjectionResult {
    pub y_hat: DVector<f64>,
    pub formula: Formula,
    /// `‖X ŷ - b‖`.
    pub residual_norm: f64,
}

fn check_len(what: &str, got: usize, expected: usize) -> Result<()> {
    if got != expected {
        return Err(Error::DimensionMismatch(format!(
            "{what} has length {got}, expected {expected}"
        )));
    }
    Ok(())
}

/// Singular values of `X`, descending, from the eigenvalues of `XᵗX`.
pub(crate) fn singular_values(x: &Configuration) -> Result<DVector<f64>> {
    let xtx = x.coords().transpose() * x.coords();
    let es = symmetric_eigen(&xtx)?;
    Ok(es.eigenvalues.map(|l| l.max(0.0).sqrt()))
}

pub(crate) fn ensure_full_rank(x: &Configuration) -> Result<()> {
    if x.dim() == 0 || x.n() < x.dim() {
        return Err(Error::RankDeficientConfiguration {
            sigma_min: 0.0,
            sigma_max: 0.0,
        });
    }
    let sigma = singular_values(x)?;
    let (sigma_max, sigma_min) = (sigma[0], sigma[sigma.len() - 1]);
    if !(sigma_min > RANK_TOL * sigma_max) {
        return Err(Error::RankDeficientConfiguration { sigma_min, sigma_max });
    }
    Ok(())
}

fn residual(x: &Configuration, y: &DVector<f64>, b: &DVector<f64>) -> f64 {
    (x.coords() * y - b).norm()
}

/// Applies `L# = Σ_d⁻¹ U_dᵗ` to `v`.
fn apply_pseudo_inverse(tg: &TruncatedGram, v: &DVector<f64>) -> Result<DVector<f64>> {
    let sigma = tg.singular_values();
    let d = sigma.len();
    if d == 0 {
        return Err(Error::InvalidDimension(0));
    }
    if !(sigma[d - 1] > ZERO_SINGULAR_TOL * sigma[0]) {
        return Err(Error::ZeroSingularValue {
            sigma_min: sigma[d - 1],
            sigma_max: sigma[0],
        });
    }
    let mut y = tg.vectors.transpose() * v;
    y.component_div_assign(&sigma);
    Ok(y)
}

/// `ŷ = Σ_d⁻¹ U_dᵗ b`.
pub fn project_spectral(tg: &TruncatedGram, b: &DVector<f64>) -> Result<ProjectionResult> {
    check_len("b", b.len(), tg.n())?;
    let y_hat = apply_pseudo_inverse(tg, b)?;
    let residual_norm = residual(&tg.configuration(), &y_hat, b);
    Ok(ProjectionResult {
        y_hat,
        formula: Formula::Spectral,
        residual_norm,
    })
}

/// `ŷ` solving the normal equations `XᵗX ŷ = Xᵗ b`.
pub fn project_ols(x: &Configuration, b: &DVector<f64>) -> Result<ProjectionResult> {
    check_len("b", b.len(), x.n())?;
    ensure_full_rank(x)?;
    let xt = x.coords().transpose();
    let xtx = &xt * x.coords();
    let rhs = &xt * b;
    let y_hat = match xtx.clone().cholesky() {
        Some(ch) => ch.solve(&rhs),
        None => xtx.lu().solve(&rhs).ok_or(Error::RankDeficientConfiguration {
            sigma_min: 0.0,
            sigma_max: 0.0,
        })?,
    };
    let residual_norm = residual(x, &y_hat, b);
    Ok(ProjectionResult {
        y_hat,
        formula: Formula::Ols,
        residual_norm,
    })
}

/// Distance-based triangulation `y = -(1/2) L# (a₂ - (1/n) Δ₂ e)`.
pub fn project_landmark(
    x: &Configuration,
    tg: &TruncatedGram,
    delta2: &DissimilarityMatrix,
    a2_col: &DVector<f64>,
) -> Result<ProjectionResult> {
    let n = tg.n();
    check_len("configuration", x.n(), n)?;
    check_len("in-sample matrix", delta2.n(), n)?;
    check_len("a2", a2_col.len(), n)?;
    let shifted = (a2_col - delta2.row_means()) * -0.5;
    let y_hat = apply_pseudo_inverse(tg, &shifted)?;
    let (b, _) = dissim_to_centered_sim(delta2, a2_col, 0.0)?;
    let residual_norm = residual(x, &y_hat, &b);
    Ok(ProjectionResult {
        y_hat,
        formula: Formula::Landmark,
        residual_norm,
    })
}

/// All three projections of one new object and their largest pairwise
/// discrepancy (max-norm).
#[derive(Debug, Clone, PartialEq)]
pub struct ProjectionComparison {
    pub spectral: ProjectionResult,
    pub ols: ProjectionResult,
    pub landmark: ProjectionResult,
    pub max_discrepancy: f64,
}

pub fn project_all(
    x: &Configuration,
    tg: &TruncatedGram,
    delta2: &DissimilarityMatrix,
    a2_col: &DVector<f64>,
) -> Result<ProjectionComparison> {
    let (b, _) = dissim_to_centered_sim(delta2, a2_col, 0.0)?;
    let spectral = project_spectral(tg, &b)?;
    let ols = project_ols(x, &b)?;
    let landmark = project_landmark(x, tg, delta2, a2_col)?;
    let max_discrepancy = [
        (&spectral.y_hat - &ols.y_hat).amax(),
        (&spectral.y_hat - &landmark.y_hat).amax(),
        (&ols.y_hat - &landmark.y_hat).amax(),
    ]
    .into_iter()
    .fold(0.0, f64::max);
    Ok(ProjectionComparison {
        spectral,
        ols,
        landmark,
        max_discrepancy,
    })
}
