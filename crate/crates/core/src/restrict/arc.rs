use nalgebra::DVector;

use super::{objective, EmbeddingResult, OosProblem, RidgePoint, RidgeSystem};
use crate::error::{Error, Result};

/// Ridge solutions `ŷ(λ)` sampled from `λ = 0` (projection) to `λ = λ*`
/// (restricted reconstruction).
#[derive(Debug, Clone, PartialEq)]
pub struct ArcTrace {
    pub points: Vec<RidgePoint>,
    /// Points whose `y` was not solved from the ridge system: interior points
    /// inside a guard band are linearly interpolated, and a singular final
    /// point takes the solver's `y*`.
    pub interpolated_indices: Vec<usize>,
}

/// Traces the arc with `steps + 1` evenly spaced values of `λ`.
///
/// A balanced problem (`λ* = 0`) yields a single point.
pub fn arc(p: &OosProblem, result: &EmbeddingResult, steps: usize) -> Result<ArcTrace> {
    let lambda_star = result
        .lambda_star
        .ok_or_else(|| Error::InvalidOption("arc requires a result with lambda*".into()))?;
    if result.y_star.len() != p.dim() {
        return Err(Error::DimensionMismatch(format!(
            "result has dimension {}, problem has {}",
            result.y_star.len(),
            p.dim()
        )));
    }
    let sys = RidgeSystem::new(p)?;
    let steps = if lambda_star.abs() <= 1e-12 * sys.s[0] || steps == 0 {
        0
    } else {
        steps
    };

    let lambdas: Vec<f64> = (0..=steps)
        .map(|k| {
            if k == 0 {
                0.0
            } else if k == steps {
                lambda_star
            } else {
                lambda_star * k as f64 / steps as f64
            }
        })
        .collect();
    let mut ys: Vec<Option<DVector<f64>>> = lambdas
        .iter()
        .map(|&l| sys.offending(l).is_none().then(|| sys.y_at(l)))
        .collect();
    let singular: Vec<bool> = ys.iter().map(Option::is_none).collect();
    let last = steps;
    if steps > 0 && singular[last] {
        ys[last] = Some(result.y_star.clone());
    }
    if ys[0].is_none() {
        // λ = 0 is only singular for rank-deficient X, which RidgeSystem rejects.
        ys[0] = Some(sys.y_at(0.0));
    }

    // Endpoints always carry a value, so interior points have both neighbors.
    let valid = |j: usize| !singular[j] || j == 0 || j == last;
    let mut interpolated_indices = Vec::new();
    for k in 0..=last {
        if !singular[k] {
            continue;
        }
        interpolated_indices.push(k);
        if valid(k) {
            continue;
        }
        let l = (0..k).rev().find(|&j| valid(j)).unwrap_or(0);
        let r = (k + 1..=last).find(|&j| valid(j)).unwrap_or(last);
        let (yl, yr) = (ys[l].clone().unwrap(), ys[r].clone().unwrap());
        let w = (lambdas[k] - lambdas[l]) / (lambdas[r] - lambdas[l]);
        ys[k] = Some(&yl * (1.0 - w) + &yr * w);
    }

    let points = lambdas
        .into_iter()
        .zip(ys)
        .zip(singular)
        .map(|((lambda, y), singular_flag)| {
            let y = y.expect("every arc point has a value");
            let phi = objective(p, &y)?;
            Ok(RidgePoint {
                lambda,
                y,
                phi,
                singular_flag,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(ArcTrace {
        points,
        interpolated_indices,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::restrict::{solve_single, SolveOptions};
    use crate::spectral::Configuration;
    use approx::assert_abs_diff_eq;
    use nalgebra::DMatrix;

    #[test]
    fn example2_endpoints() {
        let x = Configuration::new(DMatrix::from_row_slice(
            4,
            2,
            &[5.0, 0.0, -5.0, 0.0, 0.0, 4.0, 0.0, -4.0],
        ));
        let p = OosProblem::new(x, DVector::zeros(4), 400.0).unwrap();
        let r = solve_single(&p, &SolveOptions::default()).unwrap();
        let trace = arc(&p, &r, 16).unwrap();
        assert_eq!(trace.points.len(), 17);
        let first = &trace.points[0];
        assert_eq!(first.lambda, 0.0);
        assert_abs_diff_eq!(first.y.clone(), DVector::zeros(2), epsilon = 1e-12);
        let last = trace.points.last().unwrap();
        assert_abs_diff_eq!(last.lambda, -32.0, epsilon = 1e-9);
        assert_abs_diff_eq!(last.y.clone(), r.y_star.clone(), epsilon = 1e-12);
        assert!(last.singular_flag);
        assert_eq!(trace.interpolated_indices, vec![16]);
    }

    #[test]
    fn shrink_arc_has_no_flags() {
        let x = Configuration::new(DMatrix::from_row_slice(3, 2, &[1.0, 2.0, -1.0, 0.5, 0.0, -2.5]));
        let p = OosProblem::new(x, DVector::from_vec(vec![3.0, -2.0, 0.5]), -1.0).unwrap();
        let r = solve_single(&p, &SolveOptions::default()).unwrap();
        let trace = arc(&p, &r, 10).unwrap();
        assert!(trace.interpolated_indices.is_empty());
        assert_abs_diff_eq!(trace.points.last().unwrap().y.clone(), r.y_star.clone(), epsilon = 1e-8);
    }
}
