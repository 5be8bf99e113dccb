use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::{Diagnostics, EmbeddingResult, Method};
use crate::error::{Error, Result};
use crate::project::project_ols;
use crate::proximity::dissim_to_centered_sim;
use crate::spectral::Configuration;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StressOptions {
    /// Stop when a step moves `y` by at most `tol (1 + ‖y‖)`.
    pub tol: f64,
    pub max_iter: usize,
    /// Starting points including the projection start.
    pub n_starts: usize,
    pub seed: u64,
}

impl Default for StressOptions {
    fn default() -> Self {
        Self {
            tol: 1e-12,
            max_iter: 10_000,
            n_starts: 16,
            seed: 0,
        }
    }
}

/// One majorization run.
#[derive(Debug, Clone, PartialEq)]
pub struct StressTrace {
    pub y: DVector<f64>,
    /// Stress before the first step and after every step.
    pub history: Vec<f64>,
    /// Some iterate coincided with a configuration point whose
    /// dissimilarity is positive.
    pub coincident: bool,
}

impl StressTrace {
    pub fn is_monotone(&self) -> bool {
        self.history.windows(2).all(|w| w[1] <= w[0] + 1e-12 * (1.0 + w[0]))
    }
}

fn check(x: &Configuration, deltas: &DVector<f64>) -> Result<()> {
    if deltas.len() != x.n() {
        return Err(Error::DimensionMismatch(format!(
            "{} dissimilarities for {} configuration points",
            deltas.len(),
            x.n()
        )));
    }
    if let Some(i) = deltas.iter().position(|d| !(*d >= 0.0) || !d.is_finite()) {
        return Err(Error::NegativeEntry {
            row: i,
            col: 0,
            value: deltas[i],
        });
    }
    Ok(())
}

/// `Σ_i (‖y - x_i‖ - δ_i)²`.
pub fn raw_stress(x: &Configuration, deltas: &DVector<f64>, y: &DVector<f64>) -> f64 {
    (0..x.n())
        .map(|i| {
            let r = (y - x.point(i)).norm() - deltas[i];
            r * r
        })
        .sum()
}

/// Iterative majorization (Guttman transform for a single free point).
///
/// When `y` lands exactly on `x_i` with `δ_i > 0`, the direction from `x_i`
/// is undefined; any unit vector keeps the majorization valid, so the first
/// coordinate axis is used and the run is flagged.
pub fn stress_majorize(
    x: &Configuration,
    deltas: &DVector<f64>,
    y0: &DVector<f64>,
    opts: &StressOptions,
) -> Result<StressTrace> {
    check(x, deltas)?;
    let (n, d) = (x.n(), x.dim());
    if y0.len() != d {
        return Err(Error::DimensionMismatch(format!(
            "start has length {}, expected {d}",
            y0.len()
        )));
    }
    let mut fallback = DVector::zeros(d);
    if d > 0 {
        fallback[0] = 1.0;
    }
    let mut y = y0.clone();
    let mut history = vec![raw_stress(x, deltas, &y)];
    let mut coincident = false;
    for _ in 0..opts.max_iter {
        let mut next = DVector::zeros(d);
        for i in 0..n {
            let xi = x.point(i);
            let diff = &y - &xi;
            let dist = diff.norm();
            let dir = if dist > 0.0 {
                diff / dist
            } else {
                if deltas[i] > 0.0 {
                    coincident = true;
                }
                fallback.clone()
            };
            next += xi + dir * deltas[i];
        }
        next /= n as f64;
        let moved = (&next - &y).norm();
        y = next;
        history.push(raw_stress(x, deltas, &y));
        if moved <= opts.tol * (1.0 + y.norm()) {
            break;
        }
    }
    let trace = StressTrace { y, history, coincident };
    debug_assert!(trace.is_monotone(), "majorization increased the stress");
    Ok(trace)
}

/// Projection of the new point from its dissimilarities, used as a start.
fn projection_start(x: &Configuration, deltas: &DVector<f64>) -> Option<DVector<f64>> {
    let mean = x.coords().row_mean().transpose();
    let centered = Configuration::new(DMatrix::from_fn(x.n(), x.dim(), |i, j| x.coords()[(i, j)] - mean[j]));
    let delta2 = centered.squared_distances();
    let (b, _) = dissim_to_centered_sim(&delta2, &deltas.map(|v| v * v), 0.0).ok()?;
    let y = project_ols(&centered, &b).ok()?.y_hat;
    Some(y + mean)
}

/// Restricted reconstruction under raw stress: `x_i` fixed, `y` minimizing
/// `Σ (‖y - x_i‖ - δ_i)²`, multi-started from the projection solution and
/// seeded random points around the configuration.
pub fn stress_oos(x: &Configuration, deltas: &DVector<f64>, opts: &StressOptions) -> Result<EmbeddingResult> {
    check(x, deltas)?;
    if !(opts.tol > 0.0) || opts.max_iter == 0 || opts.n_starts == 0 {
        return Err(Error::InvalidOption(
            "tol must be positive, max_iter and n_starts nonzero".into(),
        ));
    }
    let d = x.dim();
    let mean = x.coords().row_mean().transpose();
    let spread = x.coords().iter().fold(0.0_f64, |m, v| m.max(v.abs())) + deltas.amax() + 1.0;

    let mut starts = vec![projection_start(x, deltas).unwrap_or_else(|| mean.clone())];
    let mut rng = ChaCha8Rng::seed_from_u64(opts.seed);
    while starts.len() < opts.n_starts {
        starts.push(DVector::from_fn(d, |j, _| mean[j] + rng.gen_range(-1.0..1.0) * spread));
    }

    let mut diag = Diagnostics {
        monotone: true,
        starts: starts.len(),
        ..Diagnostics::default()
    };
    let mut best: Option<StressTrace> = None;
    for start in &starts {
        let trace = stress_majorize(x, deltas, start, opts)?;
        diag.iterations += trace.history.len() - 1;
        diag.monotone &= trace.is_monotone();
        diag.coincident |= trace.coincident;
        let value = *trace.history.last().expect("history is never empty");
        if best
            .as_ref()
            .is_none_or(|b| value < *b.history.last().expect("history is never empty"))
        {
            best = Some(trace);
        }
    }
    let best = best.expect("at least one start");
    let objective = raw_stress(x, deltas, &best.y);
    Ok(EmbeddingResult {
        y_star: best.y,
        lambda_star: None,
        objective,
        hard_case: false,
        method: Method::Stress,
        diagnostics: diag,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    #[test]
    fn exact_interpolation_1d() {
        let x = Configuration::new(DMatrix::from_column_slice(2, 1, &[0.0, 2.0]));
        let r = stress_oos(&x, &DVector::from_vec(vec![1.0, 1.0]), &StressOptions::default()).unwrap();
        assert_abs_diff_eq!(r.y_star[0], 1.0, epsilon = 1e-9);
        assert!(r.objective <= 1e-12);
        assert!(r.diagnostics.monotone);
    }

    #[test]
    fn duplicated_point() {
        let x = Configuration::new(DMatrix::from_row_slice(4, 2, &[0.0, 0.0, 3.0, 0.0, 0.0, 2.0, 1.0, 1.0]));
        let j = 2;
        let deltas = DVector::from_fn(4, |i, _| (x.point(i) - x.point(j)).norm());
        let r = stress_oos(&x, &deltas, &StressOptions::default()).unwrap();
        assert!(r.objective <= 1e-12);
        assert_abs_diff_eq!(r.y_star, x.point(j), epsilon = 1e-6);
    }

    #[test]
    fn coincident_start_is_flagged() {
        let x = Configuration::new(DMatrix::from_column_slice(2, 1, &[0.0, 2.0]));
        let t = stress_majorize(
            &x,
            &DVector::from_vec(vec![1.0, 1.0]),
            &DVector::zeros(1),
            &StressOptions::default(),
        )
        .unwrap();
        assert!(t.coincident);
        assert!(t.is_monotone());
        assert_abs_diff_eq!(t.y[0], 1.0, epsilon = 1e-12);
    }

    #[test]
    fn negative_dissimilarity_rejected() {
        let x = Configuration::new(DMatrix::from_column_slice(2, 1, &[0.0, 2.0]));
        assert!(matches!(
            stress_oos(&x, &DVector::from_vec(vec![-1.0, 1.0]), &StressOptions::default()),
            Err(Error::NegativeEntry { .. })
        ));
    }
}
