//! Kernel PCA style embedding from a Gaussian similarity, with one new
//! object placed by both strategies.

use nalgebra::{DMatrix, DVector};
use oosembed::prelude::*;

fn kernel(a: &[f64], b: &[f64]) -> f64 {
    let d2: f64 = a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum();
    (-d2 / 2.0).exp()
}

fn main() -> oosembed::Result<()> {
    let pts = [[0.0, 0.0], [1.0, 0.2], [2.0, -0.1], [0.5, 1.5], [1.8, 1.2], [-0.7, 0.8]];
    let n = pts.len();
    let gamma = SimilarityMatrix::new(DMatrix::from_fn(n, n, |i, j| kernel(&pts[i], &pts[j])), true)?;
    let b_in = center_similarity(&gamma);
    let tg = truncate_psd(&symmetric_eigen(&b_in)?, 2)?;
    let x = tg.configuration();

    let eta = [3.0, 3.0];
    let g_new = DVector::from_fn(n, |i, _| kernel(&pts[i], &eta));
    let (b, beta) = gamma_tilde_oos(&gamma, &g_new, kernel(&eta, &eta))?;

    let projected = project_spectral(&tg, &b)?;
    let restricted = solve_single(&OosProblem::new(x, b, beta)?, &SolveOptions::default())?;
    println!("projection: {:?}", projected.y_hat.as_slice());
    println!(
        "restricted: {:?} (lambda* = {:?})",
        restricted.y_star.as_slice(),
        restricted.lambda_star
    );
    Ok(())
}
