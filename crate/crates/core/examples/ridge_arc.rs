//! Ridge solutions between projection (λ = 0) and restricted
//! reconstruction (λ = λ*), printed as CSV.

use nalgebra::{DMatrix, DVector};
use oosembed::prelude::*;

fn main() -> oosembed::Result<()> {
    let x = Configuration::new(DMatrix::from_row_slice(
        4,
        2,
        &[3.0, 1.0, -2.0, 1.5, 0.5, -2.0, -1.5, -0.5],
    ));
    let b = DVector::from_vec(vec![4.0, -1.0, 2.0, -3.0]);
    for beta in [0.5, 12.0] {
        let p = OosProblem::new(x.clone(), b.clone(), beta)?;
        let r = solve_single(&p, &SolveOptions::default())?;
        let trace = arc(&p, &r, 8)?;
        println!("# beta = {beta}, r_hat^2 = {:.4}", r_hat_squared(&p)?);
        println!("lambda,y_1,y_2,phi");
        for pt in &trace.points {
            println!("{:.6},{:.6},{:.6},{:.4}", pt.lambda, pt.y[0], pt.y[1], pt.phi);
        }
    }
    Ok(())
}
