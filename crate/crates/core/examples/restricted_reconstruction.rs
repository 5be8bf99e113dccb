//! Projection versus restricted reconstruction for a point that lies far
//! outside the span of the configuration.

use nalgebra::DVector;
use oosembed::prelude::*;

fn main() -> oosembed::Result<()> {
    let delta2 = DissimilarityMatrix::from_rows(&[
        vec![0.0, 100.0, 45.0, 45.0],
        vec![100.0, 0.0, 45.0, 45.0],
        vec![45.0, 45.0, 0.0, 64.0],
        vec![45.0, 45.0, 64.0, 0.0],
    ])?;
    let (x, _) = cmds_embed(&delta2, 2)?;
    let a2 = DVector::from_vec(vec![386.0, 386.0, 457.0, 457.0]);
    let (b, beta) = dissim_to_centered_sim(&delta2, &a2, 0.0)?;

    let projected = project_ols(&x, &b)?;
    println!("projection:  {:?}", projected.y_hat.as_slice());

    let p = OosProblem::new(x, b, beta)?;
    let r = solve_single(&p, &SolveOptions::default())?;
    println!("restricted:  {:?}", r.y_star.as_slice());
    println!(
        "lambda* = {:?}, objective = {}, hard case = {}",
        r.lambda_star, r.objective, r.hard_case
    );
    println!("regime: {:?}", r.diagnostics.regime);
    Ok(())
}
